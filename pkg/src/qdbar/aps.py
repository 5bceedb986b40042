"""Spectral half-line boundary conditions and the Fredholm index.

The boundary condition is parametrised by one integer cutoff per boundary
circle: symbols of the element restricted to the boundary may only occupy
frequencies <= N on the outer circle and >= -M on the inner one (annulus);
the disk has only the outer condition.  Band b of an element contributes
boundary frequency b, so the condition translates band by band into
vanishing requirements on the limits at +inf / -inf, i.e. into a boundary
variant of each difference-operator block:

    band b >= 0:   vanish at +inf iff b > N;    at -inf iff b < -M
    band b <= -1:  vanish at +inf iff b > N i.e. -b < -N; at -inf iff -b > M

Only finitely many modes carry an unconstrained (kernel) or doubly
constrained (cokernel) variant, so the index is a finite exact sum of
per-mode integers; the remaining tail modes all have index zero.

The assembled parametrix composes per-mode parametrices with the inverse
weight diagonals.  Where a diagonal sandwiches a rank-one kernel projection
the projection is taken in the weight-adapted inner product, so that the
composed identities hold with orthogonal projections and the kernel of the
assembled parametrix is exactly the cokernel of the assembled operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import InvalidVariant, WindowTooSmall
from .hilbert import (
    HilbertElement,
    ModeLadder,
    apply_dbar_conjugate,
    apply_dbar_operator,
    difference_norm,
    random_element,
    restricted_norm,
)
from .jacobi import (
    BoundaryVariant,
    JacobiData,
    OpKind,
    _limit_arr,
    _prim_backward_cum,
    _prim_backward_recip,
    _prim_forward_cum,
    _prim_forward_recip,
    adjoint_pair,
    dense_parametrix,
    onb_scaled,
    two_norm_power,
)
from .weights import DomainKind

FULL = BoundaryVariant.FULL
ZP = BoundaryVariant.ZERO_PLUS
ZM = BoundaryVariant.ZERO_MINUS
ZB = BoundaryVariant.ZERO_BOTH


@dataclass(frozen=True)
class APSParams:
    domain: DomainKind
    N: int
    M: Optional[int] = None

    def __post_init__(self):
        if self.domain is DomainKind.ANNULUS and self.M is None:
            raise InvalidVariant("annulus boundary conditions need both cutoffs N and M")
        if self.domain is DomainKind.DISK and self.M is not None:
            raise InvalidVariant("the disk has a single boundary cutoff N")


def _variant_from_flags(domain: DomainKind, vanish_plus: bool, vanish_minus: bool) -> BoundaryVariant:
    if domain is DomainKind.DISK:
        return ZP if vanish_plus else FULL
    if vanish_plus and vanish_minus:
        return ZB
    if vanish_plus:
        return ZP
    if vanish_minus:
        return ZM
    return FULL


def holo_variant(params: APSParams, m: int) -> BoundaryVariant:
    vanish_plus = m > params.N
    vanish_minus = params.domain is DomainKind.ANNULUS and m < -params.M
    return _variant_from_flags(params.domain, vanish_plus, vanish_minus)


def anti_variant(params: APSParams, n: int) -> BoundaryVariant:
    vanish_plus = n < -params.N
    vanish_minus = params.domain is DomainKind.ANNULUS and n > params.M
    return _variant_from_flags(params.domain, vanish_plus, vanish_minus)


def case_id(params: APSParams) -> str:
    """Which of the exhaustive sign-pattern cases the cutoffs select."""
    if params.domain is DomainKind.DISK:
        return "N>=0" if params.N >= 0 else "N<0"
    M, N = params.M, params.N
    if M + N >= 0:
        if N >= 0 and M > 0:
            return "1(a)"
        if N < 0:
            return "1(b)"
        return "1(c)"
    if N < 0 and M <= 0:
        return "2(a)"
    if N < 0:
        return "2(b)"
    return "2(c)"


@dataclass(frozen=True)
class ModeRow:
    side: str  # "holo" or "anti"
    mode: int  # band m for holo, series index n >= 1 for anti
    variant: BoundaryVariant
    adjoint_variant: BoundaryVariant
    dim_ker: int
    dim_coker: int


def _mode_dims(domain: DomainKind, side: str, variant: BoundaryVariant) -> Tuple[int, int]:
    if side == "holo":
        ker = 1 if variant is FULL else 0
        coker = 1 if (domain is DomainKind.ANNULUS and variant is ZB) else 0
    else:
        ker = 1 if (variant is FULL and domain is DomainKind.ANNULUS) else 0
        if domain is DomainKind.DISK:
            coker = 1 if variant is ZP else 0
        else:
            coker = 1 if variant is ZB else 0
    return ker, coker


def mode_assembly(params: APSParams, m_max: int) -> List[ModeRow]:
    """Explicit per-mode variant table of the constrained operator."""
    rows = []
    for m in range(0, m_max + 1):
        v = holo_variant(params, m)
        _, adj = adjoint_pair(params.domain, OpKind.FORWARD, v)
        ker, coker = _mode_dims(params.domain, "holo", v)
        rows.append(ModeRow("holo", m, v, adj, ker, coker))
    for n in range(1, m_max + 1):
        v = anti_variant(params, n)
        _, adj = adjoint_pair(params.domain, OpKind.BACKWARD, v)
        ker, coker = _mode_dims(params.domain, "anti", v)
        rows.append(ModeRow("anti", n, v, adj, ker, coker))
    return rows


def contributing_modes(params: APSParams) -> int:
    """Largest mode index that can carry a kernel or cokernel."""
    if params.domain is DomainKind.DISK:
        return max(params.N, -params.N - 1, 0)
    assert params.M is not None
    return max(params.N, params.M, -params.N - 1, -params.M - 1, 1)


def _require_mode_room(ladder: ModeLadder, params: APSParams):
    need = contributing_modes(params)
    if need + 2 > ladder.m_max:
        raise WindowTooSmall(
            f"m_max={ladder.m_max} too small for cutoffs (need at least {need + 2})"
        )


# -- assembled maps ------------------------------------------------------------


class APSAssembly:
    """Constrained operator, its adjoint, and the assembled parametrix."""

    def __init__(self, ladder: ModeLadder, params: APSParams):
        if ladder.domain is not params.domain:
            raise InvalidVariant("parameter domain does not match the ladder")
        _require_mode_room(ladder, params)
        self.ladder = ladder
        self.params = params

    # The boundary condition restricts domains only; the action of the
    # operator (and of its adjoint) is the unconstrained mode-wise action.
    def apply_operator(self, x: HilbertElement) -> HilbertElement:
        return apply_dbar_operator(x)

    def apply_adjoint(self, x: HilbertElement) -> HilbertElement:
        return apply_dbar_conjugate(x)

    def _holo_block(self, m: int, g: np.ndarray) -> np.ndarray:
        data = self.ladder.mode(m)
        v = 1.0 / self.ladder.weight_diag(m)
        variant = holo_variant(self.params, m)
        if variant is FULL:
            prim = _prim_forward_cum(data, g)
            om = data.omega_plus
            wsq = v * v
            nrm = float(np.sum((1.0 / data.a) * wsq * np.abs(om) ** 2))
            coeff = complex(np.sum((1.0 / data.a) * wsq * np.conj(om) * prim)) / nrm
            return -v * (prim - coeff * om)
        if variant is ZP:
            return -v * _prim_forward_cum(data, g)
        if variant is ZM:
            return -v * _prim_forward_recip(data, g)
        om = data.omega_minus
        nrm, _ = data.omega_norm_sq("minus")
        coeff = complex(np.sum((1.0 / data.a_prime) * np.conj(om) * g)) / nrm
        return -v * _prim_forward_cum(data, g - coeff * om)

    def _anti_block(self, n: int, g: np.ndarray) -> np.ndarray:
        data = self.ladder.mode(n - 1)
        v = 1.0 / self.ladder.weight_diag(n - 1)
        variant = anti_variant(self.params, n)
        h = v * g
        if variant is FULL:
            prim = _prim_backward_cum(data, h)
            if self.params.domain is DomainKind.DISK:
                # the unconstrained backward solve is a two-sided inverse here
                return prim
            om = data.omega_minus
            nrm, _ = data.omega_norm_sq("minus")
            coeff = complex(np.sum((1.0 / data.a_prime) * np.conj(om) * prim)) / nrm
            return prim - coeff * om
        if variant is ZM:
            return _prim_backward_cum(data, h)
        if variant is ZP and self.params.domain is DomainKind.ANNULUS:
            return _prim_backward_recip(data, h)
        # disk zero-plus and annulus zero-both: weight-adapted projection
        om = data.omega_plus
        wsq = v * v
        nrm = float(np.sum((1.0 / data.a) * wsq * np.abs(om) ** 2))
        coeff = complex(np.sum((1.0 / data.a) * np.conj(om) * h)) / nrm
        return _prim_backward_cum(data, h - coeff * (wsq * om))

    def apply_parametrix(self, y: HilbertElement) -> HilbertElement:
        """Assembled parametrix: every band moves down by one."""
        out: Dict[int, np.ndarray] = {}
        for b, arr in y.bands.items():
            if b >= 1:
                out[b - 1] = self._holo_block(b - 1, arr)
            else:
                n = 1 - b
                if n <= self.ladder.m_max:
                    out[b - 1] = self._anti_block(n, arr)
        return HilbertElement(self.ladder, out)

    # -- kernel and cokernel bases ------------------------------------------

    def kernel_vectors(self) -> List[Tuple[int, np.ndarray]]:
        out = []
        mm = self.ladder.m_max
        for m in range(0, mm + 1):
            if holo_variant(self.params, m) is FULL:
                data = self.ladder.mode(m)
                out.append((m, data.omega_plus / self.ladder.weight_diag(m)))
        if self.params.domain is DomainKind.ANNULUS:
            for n in range(1, mm + 1):
                if anti_variant(self.params, n) is FULL:
                    out.append((-n, self.ladder.mode(n - 1).omega_minus.copy()))
        return out

    def cokernel_vectors(self) -> List[Tuple[int, np.ndarray]]:
        out = []
        mm = self.ladder.m_max
        if self.params.domain is DomainKind.ANNULUS:
            for m in range(0, mm):
                if holo_variant(self.params, m) is ZB:
                    out.append((m + 1, self.ladder.mode(m).omega_minus.copy()))
            coker_anti = ZB
        else:
            coker_anti = ZP
        for n in range(1, mm + 1):
            if anti_variant(self.params, n) is coker_anti:
                data = self.ladder.mode(n - 1)
                out.append((-(n - 1), data.omega_plus / self.ladder.weight_diag(n - 1)))
        return out

    def _project_out(self, vecs: List[Tuple[int, np.ndarray]], x: HilbertElement) -> HilbertElement:
        bands = {b: arr.copy() for b, arr in x.bands.items()}
        for b, v in vecs:
            w = self.ladder.inv_band_weight(b)
            cur = bands.get(b)
            if cur is None:
                continue
            coeff = np.sum(w * np.conj(v) * cur) / np.sum(w * np.abs(v) ** 2)
            bands[b] = cur - coeff * v
        return HilbertElement(self.ladder, bands)

    def project_out_kernel(self, x: HilbertElement) -> HilbertElement:
        return self._project_out(self.kernel_vectors(), x)

    def project_out_cokernel(self, x: HilbertElement) -> HilbertElement:
        return self._project_out(self.cokernel_vectors(), x)


# -- boundary symbols ------------------------------------------------------------


@dataclass(frozen=True)
class BoundarySymbol:
    plus: Dict[int, complex]
    minus: Optional[Dict[int, complex]] = None

    def frequency(self, b: int, end: str) -> complex:
        table = self.plus if end == "plus" else (self.minus or {})
        return table.get(b, 0.0 + 0.0j)


def restrict_boundary(x: HilbertElement, guard: Optional[float] = 1e6) -> BoundarySymbol:
    """Per-band limits at the window ends: the boundary symbol of the element.

    Band b contributes boundary frequency b.  Each band sits in the domain
    space of its mode's forward block, which supplies the limit formulas.
    """
    ladder = x.ladder
    plus: Dict[int, complex] = {}
    minus: Dict[int, complex] = {}
    for b, arr in sorted(x.bands.items()):
        data = ladder.mode(abs(b))
        plus[b] = _limit_arr(data, OpKind.FORWARD, arr, "plus", guard)
        if ladder.domain is DomainKind.ANNULUS:
            minus[b] = _limit_arr(data, OpKind.FORWARD, arr, "minus", guard)
    if ladder.domain is DomainKind.ANNULUS:
        return BoundarySymbol(plus=plus, minus=minus)
    return BoundarySymbol(plus=plus)


def symbol_membership_defect(symbol: BoundarySymbol, params: APSParams) -> float:
    """Largest symbol magnitude at a frequency the condition excludes."""
    worst = 0.0
    for b, val in symbol.plus.items():
        if b > params.N:
            worst = max(worst, abs(val))
    if symbol.minus is not None:
        assert params.M is not None
        for b, val in symbol.minus.items():
            if b < -params.M:
                worst = max(worst, abs(val))
    return worst


# -- reports ---------------------------------------------------------------------


@dataclass
class IndexReport:
    domain: str
    N: int
    M: Optional[int]
    case: str
    modes: List[ModeRow]
    dim_ker: int
    dim_coker: int
    total_index: int
    analytic_index: int
    residual_qd: Optional[float] = None
    residual_dq: Optional[float] = None
    block_norm_decay: List[Tuple[int, float, float]] = field(default_factory=list)
    oracle_agreement: Optional[bool] = None

    @property
    def agrees(self) -> bool:
        ok = self.total_index == self.analytic_index
        if self.oracle_agreement is not None:
            ok = ok and self.oracle_agreement
        return ok

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "domain": self.domain,
            "N": self.N,
            "M": self.M,
            "case": self.case,
            "dim_ker": self.dim_ker,
            "dim_coker": self.dim_coker,
            "total_index": self.total_index,
            "analytic_index": self.analytic_index,
            "residual_qd": self.residual_qd,
            "residual_dq": self.residual_dq,
            "block_norm_decay": [
                {"mode": n, "bound": b, "measured": m} for n, b, m in self.block_norm_decay
            ],
            "oracle_agreement": self.oracle_agreement,
            "modes": [
                {
                    "side": r.side,
                    "mode": r.mode,
                    "variant": r.variant.value,
                    "adjoint_variant": r.adjoint_variant.value,
                    "dim_ker": r.dim_ker,
                    "dim_coker": r.dim_coker,
                }
                for r in self.modes
                if r.dim_ker or r.dim_coker or r.mode <= max(abs(self.N), abs(self.M or 0)) + 1
            ],
        }


def analytic_index(params: APSParams) -> int:
    if params.domain is DomainKind.DISK:
        return params.N + 1
    assert params.M is not None
    return params.M + params.N + 1


def index_report(ladder: ModeLadder, params: APSParams) -> IndexReport:
    _require_mode_room(ladder, params)
    rows = mode_assembly(params, ladder.m_max)
    ker = sum(r.dim_ker for r in rows)
    coker = sum(r.dim_coker for r in rows)
    return IndexReport(
        domain=params.domain.value,
        N=params.N,
        M=params.M,
        case=case_id(params),
        modes=rows,
        dim_ker=ker,
        dim_coker=coker,
        total_index=ker - coker,
        analytic_index=analytic_index(params),
    )


def residuals(ladder: ModeLadder, params: APSParams, trials: int, rng,
              band_margin: int = 2, k_margin: int = 3) -> Tuple[float, float]:
    """Max defect of the two parametrix identities on random elements.

    parametrix . operator = I - (projection onto the kernel)
    operator . parametrix = I - (projection onto the cokernel)

    measured in the restricted norm that stays inside the truncation margin.
    """
    asm = APSAssembly(ladder, params)
    worst_qd = worst_dq = 0.0
    for _ in range(trials):
        x = random_element(ladder, rng, band_max=ladder.m_max - band_margin, k_margin=k_margin)
        qdx = asm.apply_parametrix(asm.apply_operator(x))
        expect = asm.project_out_kernel(x)
        worst_qd = max(worst_qd, difference_norm(qdx, expect, band_margin, k_margin))
        y = random_element(ladder, rng, band_max=ladder.m_max - band_margin, k_margin=k_margin)
        dqy = asm.apply_operator(asm.apply_parametrix(y))
        expect = asm.project_out_cokernel(y)
        worst_dq = max(worst_dq, difference_norm(dqy, expect, band_margin, k_margin))
    return worst_qd, worst_dq


def compactness_evidence(ladder: ModeLadder, n_max: int, iters: int = 120) -> List[Tuple[int, float, float]]:
    """Per-mode parametrix block norms against the certified decaying bound.

    The antiholomorphic parametrix blocks compose the unconstrained
    backward-solve of mode n-1 with an inverse weight diagonal; their norm
    is at most (1/w0) sqrt(C_{n-1} C_n) with w0 the smallest weight, and
    the bound decays to zero in n, which is the compactness evidence.
    """
    if n_max > ladder.m_max:
        raise WindowTooSmall(f"n_max={n_max} exceeds ladder m_max={ladder.m_max}")
    ws = ladder.ws
    w0 = ws.w_minus if ws.domain is DomainKind.ANNULUS else float(ws.w[0])
    out = []
    for n in range(1, n_max + 1):
        data = ladder.mode(n - 1)
        M = dense_parametrix(data, OpKind.BACKWARD, FULL) @ np.diag(
            1.0 / ladder.weight_diag(n - 1)
        )
        Mhat = onb_scaled(M, data.a, data.a_prime)
        measured = two_norm_power(Mhat, iters=iters)
        bound = (1.0 / w0) * math.sqrt(data.C_upper * data.C_prime_upper)
        out.append((n, bound, measured))
    return out


# -- oracle agreement --------------------------------------------------------------


class OracleCache:
    """Dense SVD dims per (mode, kind, variant), cached per window."""

    def __init__(self, family, domain: DomainKind, window: int):
        from .weights import eval_weights_window

        lo = 0 if domain is DomainKind.DISK else -window
        self.domain = domain
        self.window = window
        self.ws = eval_weights_window(family, lo, window + 20)
        self._dims: Dict[Tuple[int, OpKind, BoundaryVariant], Tuple[int, int]] = {}
        self._data: Dict[int, JacobiData] = {}

    def data(self, n: int) -> JacobiData:
        if n not in self._data:
            from .jacobi import from_weights

            self._data[n] = from_weights(self.ws, n, k_hi=self.window)
        return self._data[n]

    def dims(self, n: int, kind: OpKind, variant: BoundaryVariant) -> Tuple[int, int]:
        key = (n, kind, variant)
        if key not in self._dims:
            from .oracle import densify, svd_dims

            summary = svd_dims(densify(self.data(n), kind, variant))
            self._dims[key] = (summary.dim_ker, summary.dim_coker)
        return self._dims[key]


def oracle_index_agreement(params: APSParams, cache: OracleCache, depth: Optional[int] = None) -> bool:
    """Compare per-mode SVD dims with the analytic mode table.

    Checks every mode up to the last contributing one plus two, so the
    index sum itself is reproduced by the dense route.
    """
    if depth is None:
        depth = contributing_modes(params) + 2
    for m in range(0, depth + 1):
        v = holo_variant(params, m)
        got = cache.dims(m, OpKind.FORWARD, v)
        exp = _mode_dims(params.domain, "holo", v)
        # the holo block dressing by invertible diagonals preserves dims
        if got != exp:
            return False
    for n in range(1, depth + 1):
        v = anti_variant(params, n)
        got = cache.dims(n - 1, OpKind.BACKWARD, v)
        exp = _mode_dims(params.domain, "anti", v)
        if got != exp:
            return False
    return True
