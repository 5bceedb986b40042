"""Weight sequences for quantum disk and annulus domains.

A domain is modelled by a strictly increasing, uniformly positive weight
sequence ``w_k`` indexed over the natural numbers (disk) or the integers
(annulus).  Everything downstream is driven by the derived sequence
``s_k = w_k^2 - w_{k-1}^2`` (with ``w_{-1} = 0`` on the disk) and by the
limits ``w_minus``/``w_plus`` of the weights at the two ends.

Three validity conditions are checked:

1. uniform positivity, ``w_k >= eps > 0``;
2. monotonicity, ``s_k >= 0``;
3. strict monotonicity, ``s_k > 0``.

Per-mode data: for a mode offset ``n >= 0`` the coefficient sequences

    a_n(k) = 1 / sqrt(s_k * s_{k+n})        (summable reciprocals)
    c_n(k) = w_k / w_{k+n+1}                (in (0, 1])

drive the difference operators in :mod:`qdbar.jacobi`.  The constants

    C_n = sum_k 1/a_n(k)    and    K_n = prod_k 1/c_n(k)

are finite; infinite sums and products are split into a window part plus
an analytic tail obtained by telescoping against the declared limits, so
every reported constant comes with a certified tail bound.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from .errors import InvalidFamilyParams, WindowTooSmall


class DomainKind(str, Enum):
    DISK = "disk"
    ANNULUS = "annulus"


@dataclass(frozen=True)
class GeometricDisk:
    """Disk family with w_k^2 = rho_plus^2 * (1 - q^(k+1)), 0 < q < 1.

    The convention w_{-1} = 0 is built in (the closed form vanishes at
    k = -1), and s_k = rho_plus^2 * q^k * (1 - q) exactly, so s_k never
    suffers cancellation even deep into the window.
    """

    rho_plus: float = 1.0
    q: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.q < 1.0):
            raise InvalidFamilyParams(f"geometric_disk needs q in (0,1), got {self.q}")
        if self.rho_plus <= 0.0:
            raise InvalidFamilyParams("geometric_disk needs rho_plus > 0")

    domain = DomainKind.DISK

    def w_sq(self, k):
        k = np.asarray(k, dtype=float)
        return self.rho_plus**2 * (1.0 - self.q ** (k + 1.0))

    def s_exact(self, k):
        k = np.asarray(k, dtype=float)
        return self.rho_plus**2 * (1.0 - self.q) * self.q**k

    @property
    def w_plus(self) -> float:
        return self.rho_plus

    @property
    def w_minus(self) -> Optional[float]:
        return None

    @property
    def key(self) -> str:
        return f"geometric_disk(rho={self.rho_plus},q={self.q})"


@dataclass(frozen=True)
class SigmoidAnnulus:
    """Annulus family with w_k^2 = rho_minus^2 + (rho_plus^2-rho_minus^2)*sigma(k).

    Here sigma(k) = 1/(1 + q^(-k)) with q > 1, so the squared weights
    interpolate between rho_minus^2 (k -> -inf) and rho_plus^2 (k -> +inf).
    """

    rho_minus: float = 1.0
    rho_plus: float = 2.0
    q: float = 2.0

    def __post_init__(self):
        if self.rho_minus <= 0.0 or self.rho_plus <= self.rho_minus:
            raise InvalidFamilyParams("sigmoid_annulus needs 0 < rho_minus < rho_plus")
        if self.q <= 1.0:
            raise InvalidFamilyParams(f"sigmoid_annulus needs q > 1, got {self.q}")

    domain = DomainKind.ANNULUS

    def _sigma(self, k):
        # Branch on the sign so q^{|k|} never overflows the expression.
        k = np.asarray(k, dtype=float)
        out = np.empty_like(k)
        pos = k >= 0
        out[pos] = 1.0 / (1.0 + self.q ** (-k[pos]))
        v = self.q ** (k[~pos])
        out[~pos] = v / (v + 1.0)
        return out

    def w_sq(self, k):
        gap = self.rho_plus**2 - self.rho_minus**2
        return self.rho_minus**2 + gap * self._sigma(k)

    def s_exact(self, k):
        # sigma(k) - sigma(k-1) in a cancellation-free form.
        k = np.asarray(k, dtype=float)
        gap = self.rho_plus**2 - self.rho_minus**2
        q = self.q
        out = np.empty_like(k)
        pos = k >= 0
        u = q ** (-k[pos])
        out[pos] = u * (q - 1.0) / ((1.0 + u) * (1.0 + q * u))
        v = q ** (k[~pos])
        out[~pos] = (q - 1.0) * v / ((v + 1.0) * (v + q))
        return gap * out

    @property
    def w_plus(self) -> float:
        return self.rho_plus

    @property
    def w_minus(self) -> Optional[float]:
        return self.rho_minus

    @property
    def key(self) -> str:
        return f"sigmoid_annulus({self.rho_minus},{self.rho_plus},q={self.q})"


@dataclass(frozen=True)
class CustomFamily:
    """Tabulated weights with declared limits.

    ``ks``/``ws`` list the available indices and weights; limits must be
    declared because tails cannot be inferred from a finite table.
    Intended for fixtures and user-supplied data; the derived s_k are
    plain squared differences.
    """

    ks: tuple
    ws: tuple
    w_plus: float
    w_minus: Optional[float] = None
    name: str = "custom"

    def __post_init__(self):
        if len(self.ks) != len(self.ws) or len(self.ks) == 0:
            raise InvalidFamilyParams("custom family needs matching nonempty k/w tables")
        if any(w <= 0 for w in self.ws):
            raise InvalidFamilyParams("custom family weights must be positive")
        if list(self.ks) != list(range(self.ks[0], self.ks[0] + len(self.ks))):
            raise InvalidFamilyParams("custom family indices must be contiguous")
        if self.w_plus <= 0.0:
            raise InvalidFamilyParams("custom family needs declared w_plus > 0")

    @property
    def domain(self) -> DomainKind:
        return DomainKind.DISK if self.w_minus is None else DomainKind.ANNULUS

    def w_sq(self, k):
        k = np.atleast_1d(np.asarray(k, dtype=int))
        lo = self.ks[0]
        out = np.empty(len(k))
        for i, kk in enumerate(k):
            if kk < lo:
                if self.domain is DomainKind.DISK and kk == -1:
                    out[i] = 0.0
                else:
                    raise WindowTooSmall(f"custom family has no weight at k={kk}")
            elif kk > self.ks[-1]:
                raise WindowTooSmall(f"custom family has no weight at k={kk}")
            else:
                out[i] = self.ws[kk - lo] ** 2
        return out

    def s_exact(self, k):
        k = np.atleast_1d(np.asarray(k, dtype=int))
        return self.w_sq(k) - self.w_sq(k - 1)

    @property
    def key(self) -> str:
        return f"custom({self.name})"


WeightFamily = Union[GeometricDisk, SigmoidAnnulus, CustomFamily]


@dataclass(frozen=True)
class WeightSequence:
    """Evaluated weights on an integer window [lo, hi].

    ``w[t]`` holds w_{lo+t}; ``w_below`` is w_{lo-1} (zero on the disk);
    ``s[t] = w_{lo+t}^2 - w_{lo+t-1}^2`` comes from the family's closed
    form where one exists.  Treated as immutable after construction.
    """

    domain: DomainKind
    lo: int
    hi: int
    w: np.ndarray
    w_below: float
    s: np.ndarray
    eps: float
    w_plus: float
    w_minus: Optional[float]
    key: str

    def __post_init__(self):
        if self.hi - self.lo + 1 < 2:
            raise WindowTooSmall("weight window must contain at least 2 indices")

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def w_at(self, k: int) -> float:
        if k == self.lo - 1:
            return self.w_below
        if not (self.lo <= k <= self.hi):
            raise WindowTooSmall(f"k={k} outside weight window [{self.lo},{self.hi}]")
        return float(self.w[k - self.lo])

    def s_at(self, k: int) -> float:
        if not (self.lo <= k <= self.hi):
            raise WindowTooSmall(f"k={k} outside weight window [{self.lo},{self.hi}]")
        return float(self.s[k - self.lo])

    def s_tail_above(self, k: int) -> float:
        """Exact value of sum_{j>k} s_j, by telescoping against w_plus."""
        return max(self.w_plus**2 - self.w_at(k) ** 2, 0.0)

    def s_tail_below(self, k: int) -> float:
        """Exact value of sum_{j<k} s_j (annulus; zero on the disk)."""
        if self.domain is DomainKind.DISK:
            return 0.0
        assert self.w_minus is not None
        return max(self.w_at(k - 1) ** 2 - self.w_minus**2, 0.0)


@dataclass(frozen=True)
class ConditionCheck:
    passed: bool
    witness: Optional[int] = None  # first violating index, if any


@dataclass(frozen=True)
class ValidationReport:
    cond1_uniform_positive: ConditionCheck
    cond2_nondecreasing: ConditionCheck
    cond3_strictly_increasing: ConditionCheck

    @property
    def all_passed(self) -> bool:
        return (
            self.cond1_uniform_positive.passed
            and self.cond2_nondecreasing.passed
            and self.cond3_strictly_increasing.passed
        )

    def to_dict(self) -> dict:
        def one(name, c):
            return {"condition": name, "passed": c.passed, "witness": c.witness}

        return {
            "all_passed": self.all_passed,
            "checks": [
                one("uniform_positive", self.cond1_uniform_positive),
                one("nondecreasing", self.cond2_nondecreasing),
                one("strictly_increasing", self.cond3_strictly_increasing),
            ],
        }


@dataclass(frozen=True)
class ModeData:
    """Coefficient data for one Fourier mode offset n.

    ``a[t] = 1/sqrt(s_k s_{k+n})`` and ``c[t] = w_k / w_{k+n+1}`` for
    k = lo+t.  ``C`` is the window sum of 1/a with certified tail bound
    ``C_tail``; ``K`` is the exact infinite product of 1/c obtained in
    closed form from the declared limits.  ``c_prod_above``/``below``
    are the exact semi-infinite products of c over the indices above/below
    the window, used to evaluate kernel vectors without truncation error.
    """

    n: int
    lo: int
    hi: int
    a: np.ndarray
    c: np.ndarray
    C: float
    C_tail: float
    K: float
    c_prod_above: float
    c_prod_below: float
    key: str


def eval_weights(family: WeightFamily, domain: DomainKind, k_max: int) -> WeightSequence:
    """Evaluate a family on the standard window: [0,k_max] or [-k_max,k_max]."""
    if k_max < 4:
        raise InvalidFamilyParams(f"k_max must be at least 4, got {k_max}")
    if family.domain is not domain:
        raise InvalidFamilyParams(
            f"family {family.key} is a {family.domain.value} family, not {domain.value}"
        )
    lo = 0 if domain is DomainKind.DISK else -k_max
    return eval_weights_window(family, lo, k_max)


def eval_weights_window(family: WeightFamily, lo: int, hi: int) -> WeightSequence:
    """Evaluate a family on an explicit window (used to leave mode slack)."""
    domain = family.domain
    if domain is DomainKind.DISK and lo != 0:
        raise InvalidFamilyParams("disk windows start at 0")
    ks = np.arange(lo, hi + 1)
    w = np.sqrt(np.atleast_1d(family.w_sq(ks)).astype(float))
    s = np.atleast_1d(family.s_exact(ks)).astype(float)
    if domain is DomainKind.DISK:
        w_below = 0.0
    else:
        w_below = math.sqrt(float(np.atleast_1d(family.w_sq(lo - 1))[0]))
    if domain is DomainKind.DISK:
        eps = float(min(w.min(), family.w_plus))
    else:
        eps = float(min(w.min(), family.w_minus))
    return WeightSequence(
        domain=domain,
        lo=lo,
        hi=hi,
        w=w,
        w_below=w_below,
        s=s,
        eps=eps,
        w_plus=family.w_plus,
        w_minus=family.w_minus,
        key=family.key,
    )


def validate_conditions(ws: WeightSequence) -> ValidationReport:
    """Check the three weight conditions, reporting the first violating index."""

    def first_bad(mask) -> Optional[int]:
        idx = np.flatnonzero(mask)
        return int(idx[0] + ws.lo) if idx.size else None

    bad1 = ~(ws.w >= ws.eps) | ~(ws.w > 0)
    c1 = ConditionCheck(not bad1.any(), first_bad(bad1))
    bad2 = ws.s < 0
    c2 = ConditionCheck(not bad2.any(), first_bad(bad2))
    bad3 = ws.s <= 0
    c3 = ConditionCheck(not bad3.any(), first_bad(bad3))
    return ValidationReport(c1, c2, c3)


def _require_valid(ws: WeightSequence):
    report = validate_conditions(ws)
    if not report.all_passed:
        raise InvalidFamilyParams(f"weight sequence {ws.key} violates conditions: {report.to_dict()}")


def mode_data(ws: WeightSequence, n: int, k_hi: Optional[int] = None) -> ModeData:
    """Tabulate a_n, c_n on [ws.lo, k_hi] plus certified constants.

    Both a_n(k) and c_n(k) need weights up to k+n+1, so the default window
    top is ws.hi - n - 1.  Tail bounds:

    * C_n tail by Cauchy-Schwarz against the telescoped s-tails;
    * K_n exactly, from the telescoping product
      (w_plus)^{n+1} / (w_lo ... w_{lo+n})          on the disk,
      (w_plus / w_minus)^{n+1}                      on the annulus;
    * the out-of-window products of c_n in closed form as well.
    """
    if n < 0:
        raise InvalidFamilyParams("mode offset n must be nonnegative")
    _require_valid(ws)
    if k_hi is None:
        k_hi = ws.hi - n - 1
    if k_hi + n + 1 > ws.hi or k_hi - ws.lo + 1 < 2:
        raise WindowTooSmall(
            f"mode n={n} needs weights up to k_hi+n+1={k_hi + n + 1} > {ws.hi}"
        )
    lo = ws.lo
    t = np.arange(lo, k_hi + 1) - lo
    s = ws.s
    a = 1.0 / np.sqrt(s[t] * s[t + n])
    c = ws.w[t] / ws.w[t + n + 1]

    C = float(np.sum(1.0 / a))
    tail_up = math.sqrt(ws.s_tail_above(k_hi) * ws.s_tail_above(min(k_hi + n, ws.hi)))
    if ws.domain is DomainKind.ANNULUS:
        tail_lo_a = ws.s_tail_below(lo)
        tail_lo_b = ws.s_tail_below(lo + n) if lo + n <= ws.hi else tail_lo_a
        tail_down = math.sqrt(tail_lo_a * tail_lo_b)
    else:
        tail_down = 0.0
    C_tail = tail_up + tail_down

    if ws.domain is DomainKind.DISK:
        head = float(np.prod(ws.w[: n + 1]))
        K = ws.w_plus ** (n + 1) / head
        c_prod_below = 1.0
    else:
        assert ws.w_minus is not None
        K = (ws.w_plus / ws.w_minus) ** (n + 1)
        c_prod_below = ws.w_minus ** (n + 1) / float(
            np.prod(ws.w[t[0] : t[0] + n + 1])
        )
    # prod_{i > k_hi} c_n(i) = (w_{k_hi+1} ... w_{k_hi+n+1}) / w_plus^{n+1}
    top = np.arange(k_hi + 1, k_hi + n + 2) - lo
    c_prod_above = float(np.prod(ws.w[top])) / ws.w_plus ** (n + 1)

    return ModeData(
        n=n,
        lo=lo,
        hi=k_hi,
        a=a,
        c=c,
        C=C,
        C_tail=C_tail,
        K=K,
        c_prod_above=c_prod_above,
        c_prod_below=c_prod_below,
        key=f"{ws.key}|mode{n}",
    )


def trace_S(ws: WeightSequence) -> float:
    """Certified value of sum_k s_k over the full index set.

    The window sum telescopes to w_hi^2 - w_{lo-1}^2 and the analytic
    tails close the gap to the declared limits, so the result equals
    w_plus^2 on the disk and w_plus^2 - w_minus^2 on the annulus.
    """
    _require_valid(ws)
    window = float(np.sum(ws.s))
    return window + ws.s_tail_above(ws.hi) + ws.s_tail_below(ws.lo)


def family_from_config(cfg: dict) -> WeightFamily:
    """Build a weight family from a plain-dict config (parsed JSON)."""
    kind = cfg.get("kind")
    if kind == "geometric_disk":
        return GeometricDisk(rho_plus=float(cfg["rho_plus"]), q=float(cfg["q"]))
    if kind == "sigmoid_annulus":
        return SigmoidAnnulus(
            rho_minus=float(cfg["rho_minus"]),
            rho_plus=float(cfg["rho_plus"]),
            q=float(cfg["q"]),
        )
    if kind == "custom":
        ks, ws_ = load_custom_csv(cfg["csv"])
        return CustomFamily(
            ks=tuple(ks),
            ws=tuple(ws_),
            w_plus=float(cfg["w_plus"]),
            w_minus=(float(cfg["w_minus"]) if cfg.get("w_minus") is not None else None),
            name=str(cfg.get("name", cfg["csv"])),
        )
    raise InvalidFamilyParams(f"unknown weight family kind: {kind!r}")


def load_custom_csv(path: str):
    """Read a two-column (k, w_k) CSV table."""
    ks, ws_ = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            ks.append(int(row[0]))
            ws_.append(float(row[1]))
    order = np.argsort(ks)
    return [ks[i] for i in order], [ws_[i] for i in order]
