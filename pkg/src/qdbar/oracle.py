"""Independent dense linear-algebra ground truth.

Kernel and cokernel dimensions, and solve-based cross-checks, computed from
dense truncations only -- no use of the analytic parametrix formulas -- so
the two routes can audit each other.

Boundary-variant operators are densified as: the stencil rows that stay
inside the window, plus one appended row per vanishing condition encoding
the truncated limit functional.  Dimensions are read off a singular value
decomposition of the orthonormal-basis matrix after row equilibration
(both transformations preserve kernel and cokernel dimensions) with a
relative threshold and a mandatory spectral-gap guard.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import IllConditioned, NoSpectralGap, WindowMismatch
from .jacobi import (
    BoundaryVariant,
    JacobiData,
    OpKind,
    check_variant,
    dense_operator,
    interior_slice,
    limit_row,
    onb_scaled,
)
from .weights import DomainKind


@dataclass(frozen=True)
class DenseBlock:
    """Dense realisation of an operator between weighted sequence spaces.

    ``entries`` is the raw canonical-basis matrix (stencil rows first, then
    any appended limit-functional rows); ``in_weights``/``out_weights`` are
    the l2 weight sequences of domain and codomain (appended rows carry
    weight 1).  ``n_stencil`` counts the stencil rows; ``col_lo`` is the
    offset of the first retained column relative to the operator window.
    """

    entries: np.ndarray
    in_weights: np.ndarray
    out_weights: np.ndarray
    n_stencil: int
    col_lo: int = 0
    inv_bound: Optional[float] = None  # certified parametrix norm bound
    source: str = ""

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def onb(self) -> np.ndarray:
        return onb_scaled(self.entries, self.in_weights, self.out_weights)


_VARIANT_ENDS = {
    BoundaryVariant.FULL: (),
    BoundaryVariant.ZERO_PLUS: ("plus",),
    BoundaryVariant.ZERO_MINUS: ("minus",),
    BoundaryVariant.ZERO_BOTH: ("plus", "minus"),
}


def densify(data: JacobiData, kind: OpKind, variant: BoundaryVariant = BoundaryVariant.FULL,
            impose: str = "dirichlet", row_weight: float = 1.0) -> DenseBlock:
    """Column-by-column dense realisation of an (operator, variant) pair.

    Stencil rows outside :func:`interior_slice` are dropped (they reference
    indices beyond the window).  Vanishing conditions are imposed either by

    * ``impose="dirichlet"`` (default): dropping the column at the
      constrained window edge, the finite-section model of the condition.
      The restricted blocks have inverses bounded by the parametrix norms,
      so their singular-value gaps stay open as the window grows; or
    * ``impose="row"``: appending the truncated limit-functional row,
      normalised to unit length in the orthonormal basis and scaled by
      ``row_weight``.  The limit functional is unbounded on the weighted
      space, so this realisation loses its spectral gap on large windows;
      it is kept for cross-checks at moderate sizes.
    """
    check_variant(data.domain, variant)
    M = dense_operator(data, kind)
    keep = interior_slice(data, kind)
    if kind is OpKind.BACKWARD:
        w_in, w_out = data.a_prime, data.a
    else:
        w_in, w_out = data.a, data.a_prime
    ends = _VARIANT_ENDS[variant]
    source = f"{data.label}:{kind.value}:{variant.value}"
    # Every variant's parametrix is bounded by (1+K) sqrt(C C'), which is a
    # certified lower bound 1/((1+K) sqrt(CC')) on the nonzero singular
    # values of the section in the orthonormal geometry.
    inv_bound = (1.0 + data.K) * np.sqrt(data.C_upper * data.C_prime_upper)
    if impose == "dirichlet":
        L = len(data)
        c0 = 1 if "minus" in ends else 0
        c1 = L - 1 if "plus" in ends else L
        return DenseBlock(
            entries=M[keep][:, c0:c1],
            in_weights=np.asarray(w_in[c0:c1], dtype=float),
            out_weights=np.asarray(w_out[keep], dtype=float),
            n_stencil=M[keep].shape[0],
            col_lo=c0,
            inv_bound=float(inv_bound),
            source=source,
        )
    if impose != "row":
        raise WindowMismatch(f"unknown imposition mode {impose!r}")
    rows = [M[keep]]
    out_w = [w_out[keep]]
    n_stencil = rows[0].shape[0]
    for end in ends:
        r = limit_row(data, end, via=kind)
        scale = np.linalg.norm(r * np.sqrt(w_in))
        rows.append((row_weight * r / scale)[None, :])
        out_w.append(np.ones(1))
    return DenseBlock(
        entries=np.vstack(rows),
        in_weights=np.asarray(w_in, dtype=float),
        out_weights=np.concatenate(out_w),
        n_stencil=n_stencil,
        inv_bound=float(inv_bound),
        source=source,
    )


def dense_diagonal(values: np.ndarray, weights: np.ndarray, source: str = "diag") -> DenseBlock:
    values = np.asarray(values, dtype=complex)
    return DenseBlock(
        entries=np.diag(values),
        in_weights=np.asarray(weights, dtype=float),
        out_weights=np.asarray(weights, dtype=float),
        n_stencil=len(values),
        source=source,
    )


@dataclass(frozen=True)
class SvdSummary:
    singular_values: np.ndarray  # descending, of the equilibrated ONB matrix
    tau: float
    dim_ker: int
    dim_coker: int
    gap_ratio: float
    gap_warning: bool


def svd_dims(block: DenseBlock, tau_rel: float = 1e-8,
             warn_ratio: float = 1e2, fail_ratio: float = 10.0) -> SvdSummary:
    """Kernel/cokernel dimensions at a certified singular-value threshold.

    Works on the raw orthonormal-basis matrix.  When the block carries a
    certified parametrix bound B, every nonzero singular value of the
    section is at least 1/B, so the absolute threshold tau = 1/(2B) is
    provably below nothing but true near-kernel directions; otherwise the
    relative threshold ``tau_rel * sigma_max`` is used.  The stencil
    sections are bidiagonal, for which the LAPACK singular values are
    accurate in a relative sense even across their large dynamic range;
    the spectral-gap guard refuses to report when the separation around
    the threshold is smaller than ``fail_ratio``.
    """
    M = block.onb()
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return SvdSummary(s, 0.0, block.cols, block.rows, np.inf, False)
    if block.inv_bound is not None:
        tau = 0.5 / block.inv_bound
    else:
        tau = tau_rel * s[0]
    rank = int(np.sum(s > tau))
    if rank == 0:
        raise NoSpectralGap(f"no singular value above threshold for {block.source}")
    if rank < s.size:
        # Threshold splits the spectrum: demand clear separation.
        below = max(float(s[rank]), s[0] * np.finfo(float).eps)
        gap = float(s[rank - 1] / below)
        if gap < fail_ratio:
            raise NoSpectralGap(
                f"gap ratio {gap:.2f} < {fail_ratio} for {block.source}: dims unreliable"
            )
        warning = gap < warn_ratio
    else:
        # Full rank: nothing below the threshold; with a certified bound the
        # smallest singular value is guaranteed >= 2*tau, so only demand the
        # margin is actually realised.
        gap = float(s[-1] / tau)
        if gap < 1.5:
            raise NoSpectralGap(
                f"smallest singular value {s[-1]:.3e} too close to threshold "
                f"{tau:.3e} for {block.source}"
            )
        warning = gap < 5.0
    return SvdSummary(
        singular_values=s,
        tau=float(tau),
        dim_ker=block.cols - rank,
        dim_coker=block.rows - rank,
        gap_ratio=gap,
        gap_warning=warning,
    )


def lsq_solve(block: DenseBlock, rhs: np.ndarray, cond_limit: float = 1e12) -> np.ndarray:
    """Minimum-norm least-squares solve in the weighted geometry.

    The system is solved in orthonormal coordinates after row equilibration
    (solution-set preserving for consistent systems, which is the intended
    use), so the minimum-norm representative is minimal in the weighted
    norm of the domain space.  Square systems go through an LU solve, which
    is componentwise stable for the (near-)bidiagonal sections; rectangular
    ones through an SVD least-squares.  Returns canonical components.
    """
    if len(rhs) != block.rows and len(rhs) != block.n_stencil:
        raise WindowMismatch("right-hand side length does not match the block")
    if len(rhs) == block.n_stencil and block.rows != block.n_stencil:
        rhs = np.concatenate([rhs, np.zeros(block.rows - block.n_stencil)])
    Mhat = block.onb()
    bhat = np.asarray(rhs, dtype=complex) / np.sqrt(block.out_weights)
    scale = np.max(np.abs(Mhat), axis=1)
    scale[scale == 0.0] = 1.0
    Mhat = Mhat / scale[:, None]
    bhat = bhat / scale
    s = np.linalg.svd(Mhat, compute_uv=False)
    nonzero = s[s > s[0] * np.finfo(float).eps * max(Mhat.shape)] if s.size else s
    cond = float(s[0] / nonzero[-1]) if nonzero.size else np.inf
    if cond > cond_limit:
        raise IllConditioned(f"condition estimate {cond:.3e} > {cond_limit:.1e}")
    if block.rows == block.cols and nonzero.size == s.size:
        xhat = np.linalg.solve(Mhat, bhat)
    else:
        xhat, *_ = np.linalg.lstsq(Mhat, bhat, rcond=None)
    return xhat * np.sqrt(block.in_weights)


def expected_dims(domain: DomainKind, kind: OpKind, variant: BoundaryVariant):
    """Analytic (dim ker, dim coker) of each operator variant.

    Unconstrained operators: the backward one is injective on the disk and
    has a one-dimensional kernel on the annulus; the forward one always has
    a one-dimensional kernel.  Restricting any end kills the kernel; the
    cokernel appears exactly when every available end is constrained.
    """
    check_variant(domain, variant)
    if domain is DomainKind.DISK:
        if variant is BoundaryVariant.FULL:
            return (0, 0) if kind is OpKind.BACKWARD else (1, 0)
        return (0, 1) if kind is OpKind.BACKWARD else (0, 0)
    if variant is BoundaryVariant.FULL:
        return (1, 0)
    if variant is BoundaryVariant.ZERO_BOTH:
        return (0, 1)
    return (0, 0)
