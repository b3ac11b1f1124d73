"""Real-space hopping matrices, spectra and even/odd free-fermion partition functions."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .lattice import FluxSector, GaugeConfig

ZERO_TOL = 1e-12


def zero_tolerance(t: float = 1.0) -> float:
    return ZERO_TOL * max(1.0, abs(t))


def site_index(x1: np.ndarray | int, x2: np.ndarray | int, L: int) -> np.ndarray | int:
    return x1 + L * x2


def hopping_arrays(sigma: np.ndarray, t: float) -> np.ndarray:
    """Batch hopping matrices for bond arrays of shape ``(..., 2, L, L)``."""
    sigma = np.asarray(sigma)
    L = sigma.shape[-1]
    batch = sigma.shape[:-3]
    n = L * L
    H = np.zeros(batch + (n, n))
    x1, x2 = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    src = site_index(x1, x2, L).reshape(-1)
    for mu, (d1, d2) in enumerate(((1, 0), (0, 1))):
        dst = site_index((x1 + d1) % L, (x2 + d2) % L, L).reshape(-1)
        vals = -t * sigma[..., mu, :, :].reshape(batch + (n,))
        for k in range(n):
            H[..., src[k], dst[k]] += vals[..., k]
            H[..., dst[k], src[k]] += vals[..., k]
    return H


def hopping_matrix(cfg: GaugeConfig, t: float) -> np.ndarray:
    if t <= 0:
        raise ValueError("t must be positive")
    return hopping_arrays(cfg.sigma, t)


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    vectors: np.ndarray | None = None
    zero_tol: float = ZERO_TOL

    @property
    def zero_modes(self) -> int:
        return int(np.count_nonzero(np.abs(self.eigenvalues) < self.zero_tol))

    def to_csv(self) -> str:
        rows = ["index,eigenvalue"]
        rows += [f"{i},{lam:.17g}" for i, lam in enumerate(self.eigenvalues)]
        return "\n".join(rows) + "\n"


def eigensolve(h: np.ndarray, t: float = 1.0) -> Spectrum:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or not np.allclose(h, h.conj().T, atol=1e-13):
        raise ValueError("eigensolve needs a square Hermitian matrix")
    lam, vec = np.linalg.eigh(h)
    return Spectrum(lam, vec, zero_tolerance(t))


def log1p_exp(u: np.ndarray) -> np.ndarray:
    """log(1 + e^u) without overflow."""
    return np.logaddexp(0.0, u)


def log_abs_one_minus_exp(u: np.ndarray) -> np.ndarray:
    """log|1 - e^u| for u != 0 without overflow."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        return np.maximum(u, 0.0) + np.log(-np.expm1(-np.abs(u)))


@dataclass(frozen=True)
class PartitionPair:
    log_z_plus: float
    z_minus_sign: int
    log_abs_z_minus: float
    beta: float

    def log_z(self, parity: str) -> float:
        """log Z for the requested parity; -inf when Z- vanishes."""
        if parity == "even":
            return self.log_z_plus
        if parity == "odd":
            if self.z_minus_sign <= 0:
                return -np.inf if self.z_minus_sign == 0 else np.nan
            return self.log_abs_z_minus
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")

    def log_half_sum(self) -> float:
        """log(Z+ + Z-) / 2, the gauge-projected trace of one sector."""
        if self.z_minus_sign == 0:
            return self.log_z_plus - np.log(2.0)
        d = self.log_abs_z_minus - self.log_z_plus
        return self.log_z_plus + np.log1p(self.z_minus_sign * np.exp(d)) - np.log(2.0)

    def to_json(self) -> str:
        d = asdict(self)
        if not np.isfinite(d["log_abs_z_minus"]):
            d["log_abs_z_minus"] = "-inf"
        return json.dumps(d)


def partition_arrays(eigenvalues: np.ndarray, beta: float, zero_tol: float = ZERO_TOL):
    """Vectorised (log Z+, sign Z-, log|Z-|) over the last axis."""
    lam = np.asarray(eigenvalues, dtype=float)
    u = -beta * lam
    log_zp = np.sum(log1p_exp(u), axis=-1)
    zero = np.abs(lam) < zero_tol
    has_zero = np.any(zero, axis=-1)
    negative = np.count_nonzero(~zero & (lam < 0), axis=-1)
    sign = np.where(has_zero, 0, np.where(negative % 2, -1, 1))
    log_abs = np.sum(np.where(zero, 0.0, log_abs_one_minus_exp(np.where(zero, 1.0, u))), axis=-1)
    log_abs = np.where(has_zero, -np.inf, log_abs)
    return log_zp, sign, log_abs


def partition_pair(s: Spectrum, beta: float) -> PartitionPair:
    if beta <= 0:
        raise ValueError("beta must be positive")
    lp, sg, la = partition_arrays(s.eigenvalues, beta, s.zero_tol)
    return PartitionPair(float(lp), int(sg), float(la), float(beta))


def ground_energy(s: Spectrum) -> float:
    lam = s.eigenvalues
    return float(np.sum(lam[lam < -s.zero_tol]))


def gauge_energy(sector: FluxSector) -> float:
    return float(-np.sum(sector.phi, dtype=np.int64))


def _products_excluding(z: np.ndarray) -> tuple[np.ndarray, float, int]:
    """Per-index product of the other entries, computed exactly around zeros."""
    zero = z == 0
    nz = int(np.count_nonzero(zero))
    rest = float(np.prod(np.where(zero, 1.0, z)))
    if nz == 0:
        return rest / z, rest, 0
    if nz == 1:
        return np.where(zero, rest, 0.0), 0.0, 1
    return np.zeros_like(z), 0.0, nz


def _odd_weights(s: Spectrum, beta: float) -> tuple[np.ndarray, np.ndarray]:
    lam = s.eigenvalues
    y = -np.exp(-beta * lam)
    z = np.where(np.abs(lam) < s.zero_tol, 0.0, 1.0 + y)
    return y, z


def odd_trace_quadratic(s: Spectrum, O: np.ndarray, beta: float) -> float:
    """Tr (-1)^N e^{-beta H} sum_mn O_mn a+_m a_n, with ``O`` in the eigenbasis of h."""
    y, z = _odd_weights(s, beta)
    others, _, _ = _products_excluding(z)
    return float(np.real(np.sum(np.diag(O) * y * others)))


def odd_trace_pair(s: Spectrum, A: np.ndarray, B: np.ndarray, beta: float) -> complex:
    """Tr (-1)^N e^{-beta H} A B for two quadratic operators in the eigenbasis of h.

    Mode by mode the weight of occupation n is (-e^{-beta lam})^n, so every
    term is a product over modes and one empty factor 1 - e^{-beta lam} = 0
    kills it.
    """
    y, z = _odd_weights(s, beta)
    n = len(z)
    zero = z == 0
    nz = int(np.count_nonzero(zero))
    if nz > 2:
        return 0.0
    total = 0.0 + 0.0j
    a_diag, b_diag = np.diag(A), np.diag(B)

    def prod_without(idx: tuple[int, ...]) -> float:
        mask = np.ones(n, dtype=bool)
        mask[list(idx)] = False
        return float(np.prod(z[mask]))

    for m in range(n):
        for l in range(n):
            if m == l:
                # n_m n_m = n_m
                total += a_diag[m] * b_diag[m] * y[m] * prod_without((m,))
            else:
                w = prod_without((m, l))
                if w == 0.0:
                    continue
                # a+_m a_m a+_l a_l and a+_m a_l a+_l a_m = n_m (1 - n_l)
                total += a_diag[m] * b_diag[l] * y[m] * y[l] * w
                total += A[m, l] * B[l, m] * y[m] * w
    return total
