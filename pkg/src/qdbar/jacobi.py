"""First-order difference operators on weighted sequence spaces.

Given summable-reciprocal coefficient sequences ``a``, ``a'`` and unimodular-
bounded couplings ``c`` (0 < |c_k| <= 1, convergent product of 1/c), two
mutually adjoint-like operators act between the spaces l2_a and l2_{a'}
(norm ||f||^2 = sum (1/weight_k) |f_k|^2):

    backward:  (B f)_k = a_k  * (f_k - c_{k-1} f_{k-1})     l2_{a'} -> l2_a
    forward:   (F f)_k = a'_k * (f_k - conj(c_k) f_{k+1})   l2_a   -> l2_{a'}

On the disk (index set N) the convention f_{-1} = 0 applies and the backward
operator is injective while the forward operator has the one-dimensional
kernel spanned by the tail product omega_k = prod_{i>=k} conj(c_i).  On the
annulus (index set Z) both have one-dimensional kernels, spanned by

    omega_minus_k = prod_{i<k} c_i          (backward kernel, in l2_{a'})
    omega_plus_k  = prod_{i>=k} conj(c_i)   (forward kernel, in l2_a)

Boundary variants restrict the domain by vanishing conditions at +inf and/or
-inf.  Each (operator, variant) pair has an explicit bounded parametrix:
cumulative-sum solves for the unconstrained directions, reciprocal-product
solves for half-line-vanishing variants, and rank-one corrections projecting
against the kernel vectors where the operator is not injective/surjective.
The composition identities hold exactly:

    parametrix . operator = I - (orthogonal projection onto kernel)
    operator . parametrix = I - (orthogonal projection onto cokernel)

with the projections nontrivial only for the variants that carry a kernel
(full) or a cokernel (vanishing at every available end).

All evaluations are window-truncated.  Data constructed from a weight family
carry exact closed-form values for the out-of-window coupling products, and
every infinite constant is stored as window value plus certified tail bound,
so identity tests can budget truncation honestly.  All structures are treated
as immutable after construction and every function is pure.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import (
    InvalidFamilyParams,
    InvalidVariant,
    NotInDomain,
    WindowMismatch,
    WeightRefMismatch,
    WindowTooSmall,
)
from .weights import DomainKind, WeightSequence, mode_data

DOMAIN_GUARD = 1e6  # image-norm threshold for the membership guard


class OpKind(str, Enum):
    BACKWARD = "backward"  # couples f_{k-1}; coefficient a
    FORWARD = "forward"  # couples f_{k+1}; coefficient a'


class BoundaryVariant(str, Enum):
    FULL = "full"
    ZERO_PLUS = "zero_plus"  # f(+inf) = 0
    ZERO_MINUS = "zero_minus"  # f(-inf) = 0, annulus only
    ZERO_BOTH = "zero_both"  # both, annulus only


_BILATERAL_ONLY = (BoundaryVariant.ZERO_MINUS, BoundaryVariant.ZERO_BOTH)


def check_variant(domain: DomainKind, variant: BoundaryVariant):
    if domain is DomainKind.DISK and variant in _BILATERAL_ONLY:
        raise InvalidVariant(f"{variant.value} requires the annulus (bilateral) domain")


def adjoint_pair(domain: DomainKind, kind: OpKind, variant: BoundaryVariant):
    """Adjoint of an (operator, variant): flip the stencil, dualise the ends.

    On the annulus FULL <-> ZERO_BOTH and ZERO_PLUS <-> ZERO_MINUS; on the
    disk FULL <-> ZERO_PLUS (only the +inf end exists).
    """
    check_variant(domain, variant)
    other = OpKind.FORWARD if kind is OpKind.BACKWARD else OpKind.BACKWARD
    if domain is DomainKind.DISK:
        flip = {
            BoundaryVariant.FULL: BoundaryVariant.ZERO_PLUS,
            BoundaryVariant.ZERO_PLUS: BoundaryVariant.FULL,
        }
    else:
        flip = {
            BoundaryVariant.FULL: BoundaryVariant.ZERO_BOTH,
            BoundaryVariant.ZERO_BOTH: BoundaryVariant.FULL,
            BoundaryVariant.ZERO_PLUS: BoundaryVariant.ZERO_MINUS,
            BoundaryVariant.ZERO_MINUS: BoundaryVariant.ZERO_PLUS,
        }
    return other, flip[variant]


@dataclass(frozen=True)
class JacobiData:
    """Coefficient triple (a, a', c) on a window [lo, hi] plus constants.

    ``C``/``C_prime`` are the window sums of 1/a and 1/a' with certified
    tail bounds; ``K`` is the full product of 1/|c|.  ``c_prod_above`` and
    ``c_prod_below`` are the exact products of c over the indices above/
    below the window (1.0 when the data is taken to be trivial outside the
    window, i.e. 1/a = 0 and c = 1 there -- the convention for synthetic
    test data).  Precomputed: ``P[t] = prod_{j<lo+t} c_j`` relative to the
    window start, and the two kernel-vector arrays.
    """

    domain: DomainKind
    lo: int
    a: np.ndarray
    a_prime: np.ndarray
    c: np.ndarray
    C: float
    C_prime: float
    K: float
    C_tail: float = 0.0
    C_prime_tail: float = 0.0
    c_prod_above: complex = 1.0
    c_prod_below: complex = 1.0
    label: str = "jacobi"
    P: np.ndarray = field(init=False, repr=False)
    omega_plus: np.ndarray = field(init=False, repr=False)
    omega_minus: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        L = len(self.a)
        if not (len(self.a_prime) == len(self.c) == L):
            raise WindowMismatch("a, a' and c must share one window")
        if L < 3:
            raise WindowTooSmall("operator window must contain at least 3 indices")
        if np.any(np.abs(self.c) > 1.0 + 1e-14) or np.any(np.abs(self.c) == 0.0):
            raise InvalidFamilyParams("couplings must satisfy 0 < |c_k| <= 1")
        if np.any(np.asarray(self.a) <= 0) or np.any(np.asarray(self.a_prime) <= 0):
            raise InvalidFamilyParams("coefficient sequences a, a' must be positive")
        c = np.asarray(self.c, dtype=complex)
        P = np.concatenate(([1.0 + 0.0j], np.cumprod(c)))
        omega_plus = np.conj((P[-1] / P[:-1]) * complex(self.c_prod_above))
        omega_minus = complex(self.c_prod_below) * P[:-1]
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "a_prime", np.asarray(self.a_prime, dtype=float))
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "omega_plus", omega_plus)
        object.__setattr__(self, "omega_minus", omega_minus)

    # -- window bookkeeping ------------------------------------------------

    def __len__(self) -> int:
        return len(self.a)

    @property
    def hi(self) -> int:
        return self.lo + len(self) - 1

    @property
    def key_a(self) -> str:
        return f"{self.label}|a"

    @property
    def key_a_prime(self) -> str:
        return f"{self.label}|a'"

    def weights_for(self, space: str) -> np.ndarray:
        if space == self.key_a:
            return self.a
        if space == self.key_a_prime:
            return self.a_prime
        raise WeightRefMismatch(f"unknown weight reference {space!r} for {self.label!r}")

    @property
    def total_c_product(self) -> complex:
        return complex(self.c_prod_below) * complex(self.P[-1]) * complex(self.c_prod_above)

    # -- constants with tails ----------------------------------------------

    @property
    def C_upper(self) -> float:
        return self.C + self.C_tail

    @property
    def C_prime_upper(self) -> float:
        return self.C_prime + self.C_prime_tail

    def omega_norm_sq(self, side: str) -> Tuple[float, float]:
        """Window value and tail bound of the squared kernel-vector norm.

        side "plus": forward kernel in l2_a; side "minus": backward kernel
        in l2_{a'}.  Off-window components satisfy |omega| <= 1, so the
        tail is bounded by the corresponding reciprocal-sum tail.
        """
        if side == "plus":
            val = float(np.sum((1.0 / self.a) * np.abs(self.omega_plus) ** 2))
            return val, self.C_tail
        if side == "minus":
            val = float(np.sum((1.0 / self.a_prime) * np.abs(self.omega_minus) ** 2))
            return val, self.C_prime_tail
        raise InvalidVariant(f"unknown kernel side {side!r}")


def make_jacobi_data(
    domain: DomainKind,
    lo: int,
    a: Sequence[float],
    a_prime: Sequence[float],
    c: Sequence[complex],
    label: str = "jacobi",
) -> JacobiData:
    """Synthetic data: the triple is trivial outside the window (1/a = 0, c = 1)."""
    a = np.asarray(a, dtype=float)
    ap = np.asarray(a_prime, dtype=float)
    c = np.asarray(c, dtype=complex)
    return JacobiData(
        domain=domain,
        lo=lo,
        a=a,
        a_prime=ap,
        c=c,
        C=float(np.sum(1.0 / a)),
        C_prime=float(np.sum(1.0 / ap)),
        K=float(np.prod(1.0 / np.abs(c))),
        label=label,
    )


def from_weights(ws: WeightSequence, n: int, k_hi: Optional[int] = None, label: Optional[str] = None) -> JacobiData:
    """Mode-n operator data from a weight sequence.

    a-side = mode n, a'-side = mode n+1, couplings c_n; both tabulated on a
    common window, with exact out-of-window products from the weight limits.
    """
    if k_hi is None:
        k_hi = ws.hi - n - 2
    md = mode_data(ws, n, k_hi=k_hi)
    md_next = mode_data(ws, n + 1, k_hi=k_hi)
    return JacobiData(
        domain=ws.domain,
        lo=md.lo,
        a=md.a,
        a_prime=md_next.a,
        c=md.c.astype(complex),
        C=md.C,
        C_prime=md_next.C,
        K=md.K,
        C_tail=md.C_tail,
        C_prime_tail=md_next.C_tail,
        c_prod_above=md.c_prod_above,
        c_prod_below=md.c_prod_below,
        label=label or md.key,
    )


# -- sequence vectors --------------------------------------------------------


@dataclass(frozen=True)
class SeqVec:
    """Finite-window vector tagged with the weight reference of its space."""

    lo: int
    values: np.ndarray
    space: str

    def __len__(self) -> int:
        return len(self.values)


def _check_window(data: JacobiData, f: SeqVec):
    if f.lo != data.lo or len(f) != len(data):
        raise WindowMismatch(
            f"vector window [{f.lo},{f.lo + len(f) - 1}] does not match "
            f"operator window [{data.lo},{data.hi}]"
        )


def _check_space(data: JacobiData, f: SeqVec, space: str):
    _check_window(data, f)
    if f.space != space:
        raise WeightRefMismatch(f"expected a vector in {space!r}, got {f.space!r}")


def vec_a(data: JacobiData, values) -> SeqVec:
    return SeqVec(data.lo, np.asarray(values, dtype=complex), data.key_a)


def vec_a_prime(data: JacobiData, values) -> SeqVec:
    return SeqVec(data.lo, np.asarray(values, dtype=complex), data.key_a_prime)


def delta(data: JacobiData, k: int, space: str) -> SeqVec:
    v = np.zeros(len(data), dtype=complex)
    v[k - data.lo] = 1.0
    return SeqVec(data.lo, v, space)


def norm(data: JacobiData, f: SeqVec) -> float:
    w = data.weights_for(f.space)
    return math.sqrt(float(np.sum((1.0 / w) * np.abs(f.values) ** 2)))


def inner(data: JacobiData, f: SeqVec, g: SeqVec) -> complex:
    """Weighted inner product, conjugate-linear in the first argument."""
    if f.space != g.space:
        raise WeightRefMismatch(f"inner product mixes {f.space!r} and {g.space!r}")
    w = data.weights_for(f.space)
    return complex(np.sum((1.0 / w) * np.conj(f.values) * g.values))


def random_compact(data: JacobiData, space: str, rng, margin: int = 3) -> SeqVec:
    """Random vector, complex entries uniform in the unit square, zero near edges."""
    L = len(data)
    v = np.zeros(L, dtype=complex)
    sl = slice(margin if data.domain is DomainKind.ANNULUS else 0, L - margin)
    width = sl.stop - (sl.start or 0)
    v[sl] = rng.random(width) + 1j * rng.random(width)
    return SeqVec(data.lo, v, space)


# -- array-level actions ------------------------------------------------------


def _backward_arr(data: JacobiData, f: np.ndarray) -> np.ndarray:
    fm1 = np.concatenate(([0.0 + 0.0j], f[:-1]))
    cm1 = np.concatenate(([0.0 + 0.0j], data.c[:-1]))  # paired with f_{lo-1} = 0
    return data.a * (f - cm1 * fm1)


def _forward_arr(data: JacobiData, f: np.ndarray) -> np.ndarray:
    fp1 = np.concatenate((f[1:], [0.0 + 0.0j]))
    return data.a_prime * (f - np.conj(data.c) * fp1)


def interior_slice(data: JacobiData, kind: OpKind) -> slice:
    """Rows on which the window-truncated action is exact.

    The backward stencil is exact everywhere on the disk (f_{-1} = 0 is a
    true convention) but loses the row at the lower window edge on the
    annulus; the forward stencil loses the top row on both domains.
    """
    if kind is OpKind.BACKWARD:
        return slice(0, len(data)) if data.domain is DomainKind.DISK else slice(1, len(data))
    return slice(0, len(data) - 1)


def apply_backward(data: JacobiData, f: SeqVec) -> SeqVec:
    """(B f)_k = a_k (f_k - c_{k-1} f_{k-1}), mapping l2_{a'} -> l2_a."""
    _check_space(data, f, data.key_a_prime)
    return vec_a(data, _backward_arr(data, f.values))


def apply_forward(data: JacobiData, f: SeqVec) -> SeqVec:
    """(F f)_k = a'_k (f_k - conj(c_k) f_{k+1}), mapping l2_a -> l2_{a'}."""
    _check_space(data, f, data.key_a)
    return vec_a_prime(data, _forward_arr(data, f.values))


def apply_operator(data: JacobiData, kind: OpKind, f: SeqVec) -> SeqVec:
    return apply_backward(data, f) if kind is OpKind.BACKWARD else apply_forward(data, f)


# -- kernel vectors -----------------------------------------------------------


@dataclass(frozen=True)
class KernelVector:
    vec: SeqVec
    side: str  # "plus": tail product toward +inf; "minus": toward -inf


def kernel_basis(data: JacobiData, kind: OpKind, variant: BoundaryVariant):
    """Explicit kernel basis of an (operator, variant).

    Only the unconstrained variants can have kernels: the kernel vectors
    have unit limits at the end their defining product runs to, so every
    vanishing condition kills them.
    """
    check_variant(data.domain, variant)
    if variant is not BoundaryVariant.FULL:
        return []
    if kind is OpKind.FORWARD:
        return [KernelVector(vec_a(data, data.omega_plus), "plus")]
    if data.domain is DomainKind.DISK:
        return []
    return [KernelVector(vec_a_prime(data, data.omega_minus), "minus")]


# -- parametrix primitives ----------------------------------------------------


def _revcumsum(x: np.ndarray) -> np.ndarray:
    return np.cumsum(x[::-1])[::-1]


def _prim_backward_cum(data: JacobiData, g: np.ndarray) -> np.ndarray:
    # sum_{i<=k} (1/a_i) (prod_{j=i}^{k-1} c_j) g_i
    P = data.P[:-1]
    return P * np.cumsum(g / (data.a * P))


def _prim_forward_cum(data: JacobiData, g: np.ndarray) -> np.ndarray:
    # sum_{i>=k} (1/a'_i) (prod_{j=k}^{i-1} conj(c_j)) g_i
    Pc = np.conj(data.P[:-1])
    return _revcumsum(Pc * g / data.a_prime) / Pc


def _prim_backward_recip(data: JacobiData, g: np.ndarray) -> np.ndarray:
    # - sum_{i>k} (1/a_i) (prod_{j=k}^{i-1} c_j)^{-1} g_i
    P = data.P[:-1]
    acc = _revcumsum(g / (data.a * P))
    strict = np.concatenate((acc[1:], [0.0 + 0.0j]))
    return -P * strict


def _prim_forward_recip(data: JacobiData, g: np.ndarray) -> np.ndarray:
    # - sum_{i<k} (1/a'_i) (prod_{j=i}^{k-1} conj(c_j))^{-1} g_i
    Pc = np.conj(data.P[:-1])
    acc = np.cumsum(Pc * g / data.a_prime)
    strict = np.concatenate(([0.0 + 0.0j], acc[:-1]))
    return -strict / Pc


def _proj_coeff(data: JacobiData, side: str, weights: np.ndarray, omega: np.ndarray, x: np.ndarray) -> complex:
    nsq, _ = data.omega_norm_sq(side)
    return complex(np.sum((1.0 / weights) * np.conj(omega) * x)) / nsq


def projection_coefficient(data: JacobiData, which: str, f: SeqVec) -> complex:
    """Kernel-projection functionals for the rank-one parametrix corrections.

    "L" (disk) and "beta" (annulus): coefficient of the forward kernel in
    the half-line primitive solve,  <omega_plus, prim_forward(f)> / ||omega_plus||^2.
    "alpha" (annulus): same for the backward kernel,
    <omega_minus, prim_backward(f)> / ||omega_minus||^2.
    """
    if which in ("L", "beta"):
        if which == "L" and data.domain is not DomainKind.DISK:
            raise InvalidVariant("functional 'L' belongs to the disk; use 'beta' on the annulus")
        if which == "beta" and data.domain is not DomainKind.ANNULUS:
            raise InvalidVariant("functional 'beta' belongs to the annulus; use 'L' on the disk")
        _check_space(data, f, data.key_a_prime)
        prim = _prim_forward_cum(data, f.values)
        return _proj_coeff(data, "plus", data.a, data.omega_plus, prim)
    if which == "alpha":
        if data.domain is not DomainKind.ANNULUS:
            raise InvalidVariant("functional 'alpha' requires the annulus")
        _check_space(data, f, data.key_a)
        prim = _prim_backward_cum(data, f.values)
        return _proj_coeff(data, "minus", data.a_prime, data.omega_minus, prim)
    raise InvalidVariant(f"unknown functional {which!r}")


def _parametrix_arr(data: JacobiData, kind: OpKind, variant: BoundaryVariant, g: np.ndarray) -> np.ndarray:
    check_variant(data.domain, variant)
    disk = data.domain is DomainKind.DISK
    if kind is OpKind.BACKWARD:
        if variant is BoundaryVariant.FULL:
            out = _prim_backward_cum(data, g)
            if not disk:
                coeff = _proj_coeff(data, "minus", data.a_prime, data.omega_minus, out)
                out = out - coeff * data.omega_minus
            return out
        if variant is BoundaryVariant.ZERO_PLUS:
            if disk:
                coeff = _proj_coeff(data, "plus", data.a, data.omega_plus, g)
                return _prim_backward_cum(data, g - coeff * data.omega_plus)
            return _prim_backward_recip(data, g)
        if variant is BoundaryVariant.ZERO_MINUS:
            return _prim_backward_cum(data, g)
        coeff = _proj_coeff(data, "plus", data.a, data.omega_plus, g)
        return _prim_backward_cum(data, g - coeff * data.omega_plus)
    # forward parametrices
    if variant is BoundaryVariant.FULL:
        out = _prim_forward_cum(data, g)
        coeff = _proj_coeff(data, "plus", data.a, data.omega_plus, out)
        return out - coeff * data.omega_plus
    if variant is BoundaryVariant.ZERO_PLUS:
        return _prim_forward_cum(data, g)
    if variant is BoundaryVariant.ZERO_MINUS:
        return _prim_forward_recip(data, g)
    coeff = _proj_coeff(data, "minus", data.a_prime, data.omega_minus, g)
    return _prim_forward_cum(data, g - coeff * data.omega_minus)


def apply_parametrix(data: JacobiData, kind: OpKind, variant: BoundaryVariant, g: SeqVec) -> SeqVec:
    """Apply the parametrix of the (kind, variant) operator.

    The backward parametrices map l2_a -> l2_{a'} (reversing the backward
    operator), the forward ones l2_{a'} -> l2_a.
    """
    if kind is OpKind.BACKWARD:
        _check_space(data, g, data.key_a)
        return vec_a_prime(data, _parametrix_arr(data, kind, variant, g.values))
    _check_space(data, g, data.key_a_prime)
    return vec_a(data, _parametrix_arr(data, kind, variant, g.values))


# -- limits at infinity -------------------------------------------------------


def _limit_arr(data: JacobiData, kind: OpKind, f: np.ndarray, end: str, guard: Optional[float]) -> complex:
    disk = data.domain is DomainKind.DISK
    if end == "minus" and disk:
        raise InvalidVariant("the disk has no -inf end")
    if kind is OpKind.BACKWARD:
        g = _backward_arr(data, f)
        weights, okey = data.a, "image of the backward operator"
    else:
        g = _forward_arr(data, f)
        weights, okey = data.a_prime, "image of the forward operator"
    if guard is not None:
        img = math.sqrt(float(np.sum((1.0 / weights) * np.abs(g) ** 2)))
        if img >= guard:
            raise NotInDomain(f"{okey} has norm {img:.3e} >= guard {guard:.1e}")
    pi_tot = data.total_c_product
    if kind is OpKind.BACKWARD:
        # f = prim_backward(Bf) + (kernel component); limits by inspection of
        # the primitive at each end, with the kernel term carried explicitly.
        base_plus = complex(np.sum((1.0 / data.a) * np.conj(data.omega_plus) * g))
        if disk:
            return base_plus
        coeff = _proj_coeff(data, "minus", data.a_prime, data.omega_minus, _prim_backward_cum(data, g))
        kern = _proj_coeff(data, "minus", data.a_prime, data.omega_minus, f)
        if end == "plus":
            return base_plus + pi_tot * (kern - coeff)
        return kern - coeff
    # forward route
    coeff = _proj_coeff(data, "plus", data.a, data.omega_plus, _prim_forward_cum(data, g))
    kern = _proj_coeff(data, "plus", data.a, data.omega_plus, f)
    if end == "plus":
        return kern - coeff
    base_minus = complex(np.sum((1.0 / data.a_prime) * np.conj(data.omega_minus) * g))
    return base_minus + np.conj(pi_tot) * (kern - coeff)


def limit_at_infinity(data: JacobiData, f: SeqVec, end: str, via: OpKind = OpKind.FORWARD, guard: Optional[float] = DOMAIN_GUARD) -> complex:
    """Limit of the sequence at +inf or -inf, from the parametrix solve.

    ``via`` selects which operator domain supplies the representation: the
    backward route needs f in l2_{a'}, the forward route f in l2_a.  The
    value is the limit of the minimal recursion extension of the window
    data; for vectors in the operator domain it agrees with the raw edge
    value up to the certified tails.
    """
    if end not in ("plus", "minus"):
        raise InvalidVariant(f"end must be 'plus' or 'minus', got {end!r}")
    space = data.key_a_prime if via is OpKind.BACKWARD else data.key_a
    _check_space(data, f, space)
    return _limit_arr(data, via, f.values, end, guard)


def limit_row(data: JacobiData, end: str, via: OpKind = OpKind.FORWARD) -> np.ndarray:
    """Dense row r with r @ f = limit_at_infinity(f): the limit functional."""
    L = len(data)
    row = np.empty(L, dtype=complex)
    basis = np.eye(L, dtype=complex)
    for t in range(L):
        row[t] = _limit_arr(data, via, basis[t], end, guard=None)
    return row


# -- integration by parts -----------------------------------------------------


def pairing_residual(data: JacobiData, f: SeqVec, g: SeqVec) -> complex:
    """Exact window form of the integration-by-parts identity.

    With interior-row inner products and window-edge boundary values,

        <Bf, g>_a' rows - <f, Fg>_a rows - conj(f_hi) g_hi + conj(f_lo) g_lo

    vanishes identically (the -inf term is dropped on the disk, where the
    bottom row is exact).  The residual is the machine-level defect of that
    identity; edge values converge to the limits at infinity as the window
    grows, which is the usual boundary-term form.
    """
    _check_space(data, f, data.key_a_prime)
    _check_space(data, g, data.key_a)
    bf = _backward_arr(data, f.values)
    fg = _forward_arr(data, g.values)
    rows_b = interior_slice(data, OpKind.BACKWARD)
    rows_f = interior_slice(data, OpKind.FORWARD)
    lhs = complex(np.sum((1.0 / data.a[rows_b]) * np.conj(bf[rows_b]) * g.values[rows_b]))
    rhs = complex(np.sum((1.0 / data.a_prime[rows_f]) * np.conj(f.values[rows_f]) * fg[rows_f]))
    res = lhs - rhs - np.conj(f.values[-1]) * g.values[-1]
    if data.domain is DomainKind.ANNULUS:
        res = res + np.conj(f.values[0]) * g.values[0]
    return res


def boundary_pairing_terms(data: JacobiData, f: SeqVec, g: SeqVec):
    """(lhs - rhs, edge boundary form) of the pairing identity, for comparison."""
    _check_space(data, f, data.key_a_prime)
    _check_space(data, g, data.key_a)
    bf = _backward_arr(data, f.values)
    fg = _forward_arr(data, g.values)
    rows_b = interior_slice(data, OpKind.BACKWARD)
    rows_f = interior_slice(data, OpKind.FORWARD)
    lhs = complex(np.sum((1.0 / data.a[rows_b]) * np.conj(bf[rows_b]) * g.values[rows_b]))
    rhs = complex(np.sum((1.0 / data.a_prime[rows_f]) * np.conj(f.values[rows_f]) * fg[rows_f]))
    boundary = np.conj(f.values[-1]) * g.values[-1]
    if data.domain is DomainKind.ANNULUS:
        boundary = boundary - np.conj(f.values[0]) * g.values[0]
    return lhs - rhs, complex(boundary)


# -- dense realisations and norms ---------------------------------------------


def dense_operator(data: JacobiData, kind: OpKind) -> np.ndarray:
    """Raw stencil matrix on the window (column j = image of the j-th delta)."""
    L = len(data)
    M = np.zeros((L, L), dtype=complex)
    if kind is OpKind.BACKWARD:
        M[np.arange(L), np.arange(L)] = data.a
        M[np.arange(1, L), np.arange(L - 1)] = -data.a[1:] * data.c[:-1]
    else:
        M[np.arange(L), np.arange(L)] = data.a_prime
        M[np.arange(L - 1), np.arange(1, L)] = -data.a_prime[:-1] * np.conj(data.c[:-1])
    return M


def dense_parametrix(data: JacobiData, kind: OpKind, variant: BoundaryVariant) -> np.ndarray:
    L = len(data)
    M = np.empty((L, L), dtype=complex)
    basis = np.eye(L, dtype=complex)
    for j in range(L):
        M[:, j] = _parametrix_arr(data, kind, variant, basis[j])
    return M


def onb_scaled(M: np.ndarray, in_weights: np.ndarray, out_weights: np.ndarray) -> np.ndarray:
    """Matrix of the operator with respect to the orthonormal bases.

    The weighted spaces have orthonormal vectors sqrt(weight_k) * delta_k,
    so the scaled matrix is diag(1/sqrt(w_out)) M diag(sqrt(w_in)).
    """
    return (1.0 / np.sqrt(out_weights))[:, None] * M * np.sqrt(in_weights)[None, :]


def parametrix_spaces(data: JacobiData, kind: OpKind):
    """(input weights, output weights) of the parametrix of ``kind``."""
    if kind is OpKind.BACKWARD:
        return data.a, data.a_prime
    return data.a_prime, data.a


def two_norm_power(M: np.ndarray, iters: int = 120, seed: int = 7) -> float:
    """Largest singular value by power iteration on M*M (deterministic seed)."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(M.shape[1]) + 1j * rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    H = M.conj().T @ M
    for _ in range(iters):
        w = H @ v
        lam = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return math.sqrt(max(lam, 0.0))


@dataclass(frozen=True)
class HSReport:
    estimate: float  # Frobenius norm of the truncated parametrix (ONB)
    bound: float  # certified Hilbert-Schmidt bound
    op_bound: float  # certified operator-norm bound (recorded separately)


def _bound_factors(data: JacobiData, kind: OpKind, variant: BoundaryVariant):
    base = math.sqrt(data.C_upper * data.C_prime_upper)
    recip = (
        kind is OpKind.BACKWARD
        and variant is BoundaryVariant.ZERO_PLUS
        and data.domain is DomainKind.ANNULUS
    ) or (kind is OpKind.FORWARD and variant is BoundaryVariant.ZERO_MINUS)
    hs = data.K * base if recip else base
    if variant is BoundaryVariant.FULL and not (
        kind is OpKind.BACKWARD and data.domain is DomainKind.DISK
    ):
        op = (1.0 + data.K) * base
    else:
        op = hs
    return hs, op


def hs_norm(data: JacobiData, kind: OpKind, variant: BoundaryVariant) -> HSReport:
    """Truncated Hilbert-Schmidt norm of a parametrix with certified bounds."""
    check_variant(data.domain, variant)
    M = dense_parametrix(data, kind, variant)
    w_in, w_out = parametrix_spaces(data, kind)
    est = float(np.linalg.norm(onb_scaled(M, w_in, w_out), "fro"))
    hs, op = _bound_factors(data, kind, variant)
    return HSReport(estimate=est, bound=hs, op_bound=op)


def operator_norm_truncated(data: JacobiData, kind: OpKind, variant: BoundaryVariant, iters: int = 120) -> float:
    check_variant(data.domain, variant)
    M = dense_parametrix(data, kind, variant)
    w_in, w_out = parametrix_spaces(data, kind)
    return two_norm_power(onb_scaled(M, w_in, w_out), iters=iters)


# -- adjoint relations ---------------------------------------------------------


def adjoint_check(
    data: JacobiData,
    kind: OpKind,
    variant: BoundaryVariant,
    rng,
    trials: int = 100,
    margin: int = 3,
) -> float:
    """Max inner-product defect of the claimed adjoint pair over random vectors.

    Test vectors are compactly supported inside the window, which both puts
    them in every variant domain and keeps the truncated rows exact.
    """
    other_kind, _ = adjoint_pair(data.domain, kind, variant)
    if kind is OpKind.BACKWARD:
        dom_space, out_space = data.key_a_prime, data.key_a
    else:
        dom_space, out_space = data.key_a, data.key_a_prime
    worst = 0.0
    for _ in range(trials):
        f = random_compact(data, dom_space, rng, margin)
        g = random_compact(data, out_space, rng, margin)
        lhs = inner(data, apply_operator(data, kind, f), g)
        rhs = inner(data, f, apply_operator(data, other_kind, g))
        worst = max(worst, abs(lhs - rhs))
    return worst


def dump_matrix_csv(path: str, M: np.ndarray):
    """Debug dump of a dense operator as (row, col, re, im) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "re", "im"])
        rows, cols = np.nonzero(M)
        for r, ccol in zip(rows, cols):
            writer.writerow([int(r), int(ccol), float(M[r, ccol].real), float(M[r, ccol].imag)])
