"""Momentum-space spectra of the pi-flux and chessboard flux phases."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .spectral import PartitionPair, partition_arrays, zero_tolerance

LOOPS = ((1, 1), (1, -1), (-1, 1), (-1, -1))
DIRAC_POINTS = ((np.pi / 2, np.pi / 2), (3 * np.pi / 2, np.pi / 2))


class InvalidSize(ValueError):
    pass


def _require_even(L: int) -> None:
    if L < 2 or L % 2:
        raise InvalidSize(f"L must be even, got {L}")


def _require_mult4(L: int) -> None:
    if L < 4 or L % 4:
        raise InvalidSize(f"L must be a positive multiple of 4, got {L}")


@dataclass(frozen=True)
class BlochGrid:
    L: int
    a: int
    b: int
    points: np.ndarray

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.points)


def bloch_grid(L: int, a: int, b: int) -> BlochGrid:
    """k = (2 pi / L)(n1 - (a-1)/4, n2 - (b-1)/4) with n1 < L, n2 < L/2."""
    _require_even(L)
    n1, n2 = np.meshgrid(np.arange(L), np.arange(L // 2), indexing="ij")
    k1 = 2 * np.pi / L * (n1 - (a - 1) / 4)
    k2 = 2 * np.pi / L * (n2 - (b - 1) / 4)
    return BlochGrid(L, a, b, np.stack([k1.ravel(), k2.ravel()], axis=-1))


def staggered_grid(L: int, a: int, b: int) -> BlochGrid:
    """Zone of the eight-site chessboard cell: n1 < L/4, n2 < L/2."""
    _require_mult4(L)
    n1, n2 = np.meshgrid(np.arange(L // 4), np.arange(L // 2), indexing="ij")
    k1 = 2 * np.pi / L * n1 - np.pi / (2 * L) * (a - 1)
    k2 = 2 * np.pi / L * n2 - np.pi / (2 * L) * (b - 1)
    return BlochGrid(L, a, b, np.stack([k1.ravel(), k2.ravel()], axis=-1))


def _split(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = np.asarray(k, dtype=float)
    return k[..., 0], k[..., 1]


def bloch_h_pi(k: np.ndarray, t: float = 1.0) -> np.ndarray:
    """2x2 Bloch Hamiltonian of the (1,1) pi-flux phase; sublattice order (A, B)."""
    k1, k2 = _split(k)
    h = np.empty(np.shape(k1) + (2, 2), dtype=complex)
    h[..., 0, 0] = 2 * t * np.cos(k1)
    h[..., 1, 1] = -2 * t * np.cos(k1)
    h[..., 0, 1] = -t * (1 + np.exp(2j * k2))
    h[..., 1, 0] = -t * (1 + np.exp(-2j * k2))
    return h


def pi_bands(k: np.ndarray, t: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """(e_-, e_+); written as cos^2 k1 + cos^2 k2 so the Dirac points are exact zeros."""
    k1, k2 = _split(k)
    e = 2 * t * np.sqrt(np.cos(k1) ** 2 + np.cos(k2) ** 2)
    return -e, e


def pi_spectrum(L: int, a: int, b: int, t: float = 1.0) -> np.ndarray:
    em, ep = pi_bands(bloch_grid(L, a, b).points, t)
    return np.sort(np.concatenate([em, ep]))


def pi_ground_energy(L: int, a: int, b: int, t: float = 1.0) -> float:
    em, _ = pi_bands(bloch_grid(L, a, b).points, t)
    return float(np.sum(em))


def pi_partition(L: int, a: int, b: int, beta: float, t: float = 1.0) -> PartitionPair:
    lp, sg, la = partition_arrays(pi_spectrum(L, a, b, t), beta, zero_tolerance(t))
    return PartitionPair(float(lp), int(sg), float(la), float(beta))


def chess_matrix(k: np.ndarray, t: float = 1.0) -> np.ndarray:
    """8x8 Bloch Hamiltonian of the chessboard flux phase, h = -t M."""
    k1, k2 = (float(v) for v in np.asarray(k, dtype=float))
    z = np.exp(-2j * k2)
    f = np.exp(-4j * k1)
    zc, fc = np.conj(z), np.conj(f)
    M = np.array(
        [
            [0, 1, 0, f, 1 + z, 0, 0, 0],
            [1, 0, 1, 0, 0, -1 + z, 0, 0],
            [0, 1, 0, 1, 0, 0, -1 + z, 0],
            [fc, 0, 1, 0, 0, 0, 0, 1 + z],
            [1 + zc, 0, 0, 0, 0, -1, 0, -f],
            [0, -1 + zc, 0, 0, -1, 0, -1, 0],
            [0, 0, -1 + zc, 0, 0, -1, 0, -1],
            [0, 0, 0, 1 + zc, -fc, 0, -1, 0],
        ],
        dtype=complex,
    )
    return -t * M


def chess_bands(k: np.ndarray, t: float = 1.0) -> np.ndarray:
    """(e1-, e2-, e2+, e1+), each doubly degenerate; trailing axis of length 4."""
    k1, k2 = _split(k)
    s = np.sqrt(1 + np.cos(2 * k1) ** 2 + np.cos(2 * k2) ** 2)
    e1 = 2 * t * np.sqrt(1 + 0.5 * s)
    e2 = 2 * t * np.sqrt(1 - 0.5 * s)
    return np.stack([-e1, -e2, e2, e1], axis=-1)


def chess_spectrum(L: int, a: int, b: int, t: float = 1.0) -> np.ndarray:
    e = chess_bands(staggered_grid(L, a, b).points, t).reshape(-1)
    return np.sort(np.repeat(e, 2))


def chess_partition(L: int, a: int, b: int, beta: float, t: float = 1.0) -> PartitionPair:
    lp, sg, la = partition_arrays(chess_spectrum(L, a, b, t), beta, zero_tolerance(t))
    return PartitionPair(float(lp), int(sg), float(la), float(beta))


def chess_partition_folded(L: int, a: int, b: int, beta: float, t: float = 1.0) -> PartitionPair:
    """Same quantity summed over the pi-flux zone with the 1/4 overcounting weight."""
    e = chess_bands(bloch_grid(L, a, b).points, t)
    lp, sg, la = partition_arrays(e, beta, zero_tolerance(t))
    return PartitionPair(
        float(np.sum(lp)) / 2, int(np.all(sg != 0)), float(np.sum(la)) / 2, float(beta)
    )


def monopole_mass(beta: float, L: int, t: float = 1.0, parity: str = "even") -> float:
    """Free-energy cost per site of the chessboard pattern relative to pi flux (-1,-1)."""
    _require_mult4(L)
    ref = pi_partition(L, -1, -1, beta, t).log_z(parity)
    best = max(chess_partition(L, a, b, beta, t).log_z(parity) for a, b in LOOPS)
    return float(-(best - ref) / (beta * L * L))


@lru_cache(maxsize=None)
def _graded_rule(n_panels: int, order: int, ratio: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on [0, pi] with panels shrinking geometrically towards pi."""
    widths = ratio ** np.arange(n_panels)
    edges = np.pi * np.concatenate([[0.0], np.cumsum(widths)]) / widths.sum()
    edges[-1] = np.pi
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        weights.append(0.5 * (hi - lo) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _zone_average(func, n_panels: int, order: int) -> float:
    # integrands are even about pi in each variable, so average over [0, pi]^2
    x, w = _graded_rule(n_panels, order)
    k1, k2 = np.meshgrid(x, x, indexing="ij")
    return float(np.einsum("i,j,ij->", w, w, func(k1, k2)) / np.pi**2)


def monopole_mass_terms(n_panels: int = 24, order: int = 12) -> tuple[float, float, float]:
    """Zone averages of the pi-band root and the two chessboard band roots."""

    def pi_root(k1, k2):
        return np.sqrt(np.maximum(1 + 0.5 * np.cos(k1) + 0.5 * np.cos(k2), 0.0))

    def s(k1, k2):
        return np.sqrt(1 + np.cos(k1) ** 2 + np.cos(k2) ** 2)

    return (
        _zone_average(pi_root, n_panels, order),
        _zone_average(lambda k1, k2: np.sqrt(1 + 0.5 * s(k1, k2)), n_panels, order),
        _zone_average(lambda k1, k2: np.sqrt(1 - 0.5 * s(k1, k2)), n_panels, order),
    )


def monopole_mass_infinity(t: float = 1.0, tol: float = 1e-5) -> float:
    """Large-(beta, L) limit of the monopole mass by graded Gauss-Legendre quadrature.

    The panel count is raised until successive levels agree to ``tol``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    prev = None
    for n_panels in (8, 16, 24, 32, 48):
        p, e1, e2 = monopole_mass_terms(n_panels)
        val = p - 0.5 * (e1 + e2)
        if prev is not None and abs(val - prev) < tol:
            return t * val
        prev = val
    return t * prev


def degeneracy_gap(L: int, t: float = 1.0) -> float:
    """Largest ground-energy spread among the four pi-flux phases."""
    _require_even(L)
    ref = (-1, -1) if L % 4 == 0 else (1, 1)
    e_ref = pi_ground_energy(L, *ref, t)
    return max(abs(pi_ground_energy(L, a, b, t) - e_ref) for a, b in LOOPS)


def pi_bands_csv(L: int, a: int, b: int, t: float = 1.0) -> str:
    pts = bloch_grid(L, a, b).points
    em, ep = pi_bands(pts, t)
    rows = ["k1,k2,e_minus,e_plus"]
    rows += [f"{k[0]:.12g},{k[1]:.12g},{m:.12g},{p:.12g}" for k, m, p in zip(pts, em, ep)]
    return "\n".join(rows) + "\n"


def chess_bands_csv(L: int, a: int, b: int, t: float = 1.0) -> str:
    pts = staggered_grid(L, a, b).points
    e = chess_bands(pts, t)
    rows = ["k1,k2,e1m,e2m,e2p,e1p"]
    rows += [f"{k[0]:.12g},{k[1]:.12g}," + ",".join(f"{v:.12g}" for v in row) for k, row in zip(pts, e)]
    return "\n".join(rows) + "\n"
