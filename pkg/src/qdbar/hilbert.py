"""Fourier-side model of the Hilbert space attached to a weighted shift.

An element is a finite family of bands indexed by an integer b: band b >= 0
holds the coefficient sequence of the b-th power of the shift (times a
diagonal), band b < 0 the coefficient sequence of the |b|-th power of the
co-shift.  Band b carries the weighted l2 norm with weights
a_{|b|}(k) = 1/sqrt(s_k s_{k+|b|}), and the total squared norm is the sum
over bands; this matches the trace norm

    <x, y> = tr( S^(1/2) Y S^(1/2) X* )

of the corresponding truncated matrices, which is the isometry this module
also exposes for cross-checking.

The d-bar operator shifts every band up by one: band b feeds band b+1
through a weighted forward-difference block for b >= 0 and a weighted
backward-difference block for b < 0.  Its formal-adjoint partner shifts
every band down by one with the mirror blocks.  Both mode-wise actions are
verified in tests against dense matrix commutators

    D:    S^(-1/2) [X, U W] S^(-1/2)
    Dbar: S^(-1/2) [X, W U*] S^(-1/2)

evaluated away from the truncation edges.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .errors import DimTooLarge, WindowMismatch, WindowTooSmall, WeightRefMismatch
from .jacobi import JacobiData, OpKind, _backward_arr, _forward_arr, from_weights
from .weights import DomainKind, WeightSequence


class ModeLadder:
    """Per-mode operator data over one common index window.

    The window top leaves ``m_max + 2`` indices of slack in the weight
    sequence so that every mode up to ``m_max`` has its coefficients and
    exact tail products available on the same window.
    """

    def __init__(self, ws: WeightSequence, m_max: int):
        if m_max < 1:
            raise WindowTooSmall("m_max must be at least 1")
        hi = ws.hi - (m_max + 2)
        if hi - ws.lo + 1 < 4:
            raise WindowTooSmall(
                f"weight window [{ws.lo},{ws.hi}] leaves no room for m_max={m_max}"
            )
        self.ws = ws
        self.m_max = m_max
        self.lo = ws.lo
        self.hi = hi
        self._modes: Dict[int, JacobiData] = {}

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    @property
    def domain(self) -> DomainKind:
        return self.ws.domain

    def mode(self, n: int) -> JacobiData:
        if not (0 <= n <= self.m_max):
            raise WindowTooSmall(f"mode {n} outside ladder range [0,{self.m_max}]")
        if n not in self._modes:
            self._modes[n] = from_weights(self.ws, n, k_hi=self.hi)
        return self._modes[n]

    def weight_diag(self, m: int) -> np.ndarray:
        """w_{k+m} over the window: the diagonal factor of the m-th band."""
        t0 = self.lo - self.ws.lo
        return self.ws.w[t0 + m : t0 + m + len(self)]

    def inv_band_weight(self, b: int) -> np.ndarray:
        """1/a_{|b|}(k) = sqrt(s_k s_{k+|b|}): the band's l2 weight reciprocals."""
        return 1.0 / self.mode(abs(b)).a

    def s_window(self) -> np.ndarray:
        t0 = self.lo - self.ws.lo
        return self.ws.s[t0 : t0 + len(self)]

    def w_window(self) -> np.ndarray:
        return self.weight_diag(0)


@dataclass(eq=False)
class HilbertElement:
    """Band-indexed element; band 0 is shared by both series directions."""

    ladder: ModeLadder
    bands: Dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        L = len(self.ladder)
        clean = {}
        for b, arr in self.bands.items():
            if abs(b) > self.ladder.m_max:
                raise WindowMismatch(f"band {b} exceeds m_max={self.ladder.m_max}")
            arr = np.asarray(arr, dtype=complex)
            if arr.shape != (L,):
                raise WindowMismatch(f"band {b} has length {arr.shape}, window needs {L}")
            clean[b] = arr
        self.bands = clean

    def band(self, b: int) -> np.ndarray:
        arr = self.bands.get(b)
        if arr is None:
            return np.zeros(len(self.ladder), dtype=complex)
        return arr

    def __add__(self, other: "HilbertElement") -> "HilbertElement":
        _same_ladder(self, other)
        keys = set(self.bands) | set(other.bands)
        return HilbertElement(self.ladder, {b: self.band(b) + other.band(b) for b in keys})

    def __sub__(self, other: "HilbertElement") -> "HilbertElement":
        _same_ladder(self, other)
        keys = set(self.bands) | set(other.bands)
        return HilbertElement(self.ladder, {b: self.band(b) - other.band(b) for b in keys})

    def __mul__(self, scalar: complex) -> "HilbertElement":
        return HilbertElement(self.ladder, {b: scalar * v for b, v in self.bands.items()})

    __rmul__ = __mul__


def _same_ladder(x: HilbertElement, y: HilbertElement):
    if x.ladder is not y.ladder:
        raise WeightRefMismatch("elements belong to different mode ladders")


# -- constructions ------------------------------------------------------------


def identity_element(ladder: ModeLadder) -> HilbertElement:
    return HilbertElement(ladder, {0: np.ones(len(ladder), dtype=complex)})


def shift_power(ladder: ModeLadder, n: int) -> HilbertElement:
    """The n-th power of the weighted shift as an element: band +n."""
    if n == 0:
        return identity_element(ladder)
    prod = np.ones(len(ladder), dtype=complex)
    for j in range(n):
        prod = prod * ladder.weight_diag(j)
    return HilbertElement(ladder, {n: prod})


def coshift_power(ladder: ModeLadder, n: int) -> HilbertElement:
    """The n-th power of the adjoint shift: band -n, same weight products."""
    if n == 0:
        return identity_element(ladder)
    prod = np.ones(len(ladder), dtype=complex)
    for j in range(n):
        prod = prod * ladder.weight_diag(j)
    return HilbertElement(ladder, {-n: prod})


def random_element(ladder: ModeLadder, rng, band_max: Optional[int] = None,
                   k_margin: int = 2) -> HilbertElement:
    """Random element with compact band support away from the edges."""
    if band_max is None:
        band_max = ladder.m_max - 1
    L = len(ladder)
    lo_pad = k_margin if ladder.domain is DomainKind.ANNULUS else 0
    bands = {}
    for b in range(-band_max, band_max + 1):
        v = np.zeros(L, dtype=complex)
        v[lo_pad : L - k_margin] = rng.random(L - k_margin - lo_pad) + 1j * rng.random(
            L - k_margin - lo_pad
        )
        bands[b] = v
    return HilbertElement(ladder, bands)


# -- norms and inner products ---------------------------------------------------


def norm_H(x: HilbertElement) -> float:
    total = 0.0
    for b, arr in x.bands.items():
        total += float(np.sum(x.ladder.inv_band_weight(b) * np.abs(arr) ** 2))
    return math.sqrt(total)


def inner_H(x: HilbertElement, y: HilbertElement) -> complex:
    _same_ladder(x, y)
    total = 0.0 + 0.0j
    for b in set(x.bands) | set(y.bands):
        total += complex(np.sum(x.ladder.inv_band_weight(b) * np.conj(x.band(b)) * y.band(b)))
    return total


# -- truncated matrices ----------------------------------------------------------


@dataclass(frozen=True)
class TruncatedMatrix:
    lo: int
    entries: np.ndarray


def to_matrix(x: HilbertElement, dim: Optional[int] = None) -> TruncatedMatrix:
    """Dense truncation: band b populates the diagonal row - col = b."""
    L = len(x.ladder)
    if dim is None:
        dim = L
    if dim > L:
        raise DimTooLarge(f"dim {dim} exceeds window length {L}")
    M = np.zeros((dim, dim), dtype=complex)
    for b, arr in x.bands.items():
        if b >= 0:
            ks = np.arange(0, dim - b)
            M[ks + b, ks] = arr[ks]
        else:
            n = -b
            ks = np.arange(0, dim - n)
            M[ks, ks + n] = arr[ks]
    return TruncatedMatrix(lo=x.ladder.lo, entries=M)


def from_matrix(ladder: ModeLadder, mat: TruncatedMatrix) -> HilbertElement:
    M = mat.entries
    dim = M.shape[0]
    L = len(ladder)
    if dim > L:
        raise DimTooLarge(f"matrix dim {dim} exceeds window length {L}")
    bands = {}
    for b in range(-ladder.m_max, ladder.m_max + 1):
        arr = np.zeros(L, dtype=complex)
        n = abs(b)
        ks = np.arange(0, dim - n)
        if b >= 0:
            arr[ks] = M[ks + b, ks]
        else:
            arr[ks] = M[ks, ks + n]
        if np.any(arr != 0):
            bands[b] = arr
    return HilbertElement(ladder, bands)


def trace_inner(ladder: ModeLadder, X: TruncatedMatrix, Y: TruncatedMatrix) -> complex:
    """tr(S^(1/2) Y S^(1/2) X*) on the truncation: sum sqrt(s_k s_l) conj(X_kl) Y_kl."""
    dim = X.entries.shape[0]
    if Y.entries.shape[0] != dim:
        raise WindowMismatch("matrix truncations have different dimensions")
    rs = np.sqrt(ladder.s_window()[:dim])
    return complex(np.sum(rs[:, None] * rs[None, :] * np.conj(X.entries) * Y.entries))


def inner_product_S(x: HilbertElement, y: HilbertElement, dim: Optional[int] = None):
    """Inner product both ways: (band sum, matrix trace form)."""
    _same_ladder(x, y)
    fourier = inner_H(x, y)
    trace = trace_inner(x.ladder, to_matrix(x, dim), to_matrix(y, dim))
    return fourier, trace


# -- the d-bar operator and its partner -----------------------------------------


def apply_dbar_operator(x: HilbertElement) -> HilbertElement:
    """Mode-wise action of the d-bar operator: every band moves up by one.

    Band b >= 0 feeds b+1 through minus the forward block of mode b applied
    to the weight-dressed band; band b < 0 feeds b+1 through the weight
    diagonal times the backward block of mode |b|-1.  The top band has no
    destination inside the truncation and is dropped; comparisons must stay
    inside the band margin.
    """
    ladder = x.ladder
    out: Dict[int, np.ndarray] = {}
    for b, arr in x.bands.items():
        if b + 1 > ladder.m_max:
            continue
        if b >= 0:
            data = ladder.mode(b)
            out[b + 1] = -_forward_arr(data, ladder.weight_diag(b) * arr)
        else:
            n = -b
            data = ladder.mode(n - 1)
            out[b + 1] = ladder.weight_diag(n - 1) * _backward_arr(data, arr)
    return HilbertElement(ladder, out)


def apply_dbar_conjugate(x: HilbertElement) -> HilbertElement:
    """Mode-wise action of the conjugated operator: bands move down by one."""
    ladder = x.ladder
    out: Dict[int, np.ndarray] = {}
    for b, arr in x.bands.items():
        if b - 1 < -ladder.m_max:
            continue
        if b >= 1:
            data = ladder.mode(b - 1)
            out[b - 1] = -ladder.weight_diag(b - 1) * _backward_arr(data, arr)
        else:
            n = -b
            data = ladder.mode(n)
            out[b - 1] = _forward_arr(data, ladder.weight_diag(n) * arr)
    return HilbertElement(ladder, out)


def dense_shift(ladder: ModeLadder, dim: Optional[int] = None, weighted: bool = True) -> np.ndarray:
    L = len(ladder)
    if dim is None:
        dim = L
    M = np.zeros((dim, dim), dtype=complex)
    ks = np.arange(0, dim - 1)
    M[ks + 1, ks] = ladder.w_window()[ks] if weighted else 1.0
    return M


def matrix_commutator_oracle(x: HilbertElement, conjugate: bool = False,
                             dim: Optional[int] = None) -> HilbertElement:
    """Dense-side evaluation S^(-1/2) [X, U W] S^(-1/2) (or [X, W U*])."""
    ladder = x.ladder
    X = to_matrix(x, dim).entries
    UW = dense_shift(ladder, dim)
    if conjugate:
        UW = UW.conj().T
    Sm = 1.0 / np.sqrt(ladder.s_window()[: X.shape[0]])
    comm = X @ UW - UW @ X
    out = Sm[:, None] * comm * Sm[None, :]
    return from_matrix(ladder, TruncatedMatrix(ladder.lo, out))


def restricted_norm(x: HilbertElement, band_margin: int = 1, k_margin: int = 2) -> float:
    """Norm over bands |b| <= m_max - band_margin and interior window indices."""
    ladder = x.ladder
    L = len(ladder)
    lo_pad = k_margin if ladder.domain is DomainKind.ANNULUS else 0
    total = 0.0
    for b, arr in x.bands.items():
        if abs(b) > ladder.m_max - band_margin:
            continue
        sl = slice(lo_pad, L - k_margin)
        total += float(np.sum(ladder.inv_band_weight(b)[sl] * np.abs(arr[sl]) ** 2))
    return math.sqrt(total)


def difference_norm(x: HilbertElement, y: HilbertElement, band_margin: int = 1,
                    k_margin: int = 2) -> float:
    return restricted_norm(x - y, band_margin=band_margin, k_margin=k_margin)


# -- serialization ----------------------------------------------------------------


def element_to_json(x: HilbertElement) -> str:
    payload = {
        "schema": 1,
        "lo": x.ladder.lo,
        "bands": {
            str(b): [[int(k + x.ladder.lo), float(v.real), float(v.imag)]
                      for k, v in enumerate(arr) if v != 0]
            for b, arr in sorted(x.bands.items())
        },
    }
    return json.dumps(payload, sort_keys=True)


def element_from_json(ladder: ModeLadder, text: str) -> HilbertElement:
    payload = json.loads(text)
    L = len(ladder)
    bands = {}
    for b_str, triples in payload["bands"].items():
        arr = np.zeros(L, dtype=complex)
        for k, re, im in triples:
            arr[int(k) - ladder.lo] = re + 1j * im
        bands[int(b_str)] = arr
    return HilbertElement(ladder, bands)
