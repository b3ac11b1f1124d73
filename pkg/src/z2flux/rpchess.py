"""Reflection positivity, chessboard and monopole-removal inequalities, and exhaustive optimisation at L=4."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import bloch, lattice
from .lattice import FluxSector, GaugeConfig, ReflectionCut
from .spectral import (
    PartitionPair,
    eigensolve,
    hopping_arrays,
    hopping_matrix,
    partition_arrays,
    partition_pair,
    zero_tolerance,
)

LOOPS = bloch.LOOPS
ENUM_L = 4


@dataclass(frozen=True)
class InequalityReport:
    """Checks ``lhs <= rhs`` on a log scale."""

    lhs: float
    rhs: float
    slack: float
    passed: bool
    degenerate: bool = False

    @classmethod
    def compare(cls, lhs: float, rhs: float, degenerate: bool = False) -> InequalityReport:
        if np.isneginf(lhs) or np.isposinf(rhs):
            return cls(lhs, rhs, np.inf, True, degenerate)
        slack = rhs - lhs
        tol = 1e-9 * max(1.0, abs(lhs))
        return cls(lhs, rhs, slack, bool(slack >= -tol), degenerate)


class Degenerate(RuntimeError):
    pass


def _log_z(cfg: GaugeConfig, beta: float, t: float, parity: str) -> float:
    return partition_pair(eigensolve(hopping_matrix(cfg, t), t), beta).log_z(parity)


def rp_check(cfg: GaugeConfig, cut: ReflectionCut, beta: float, t: float, parity: str = "even") -> InequalityReport:
    """2 log Z(cfg) <= log Z(left-reflected) + log Z(right-reflected)."""
    fixed = lattice.fix_cut(cfg, cut)
    left, right = lattice.reflect(fixed, cut)
    z0 = _log_z(fixed, beta, t, parity)
    zl = _log_z(left, beta, t, parity)
    zr = _log_z(right, beta, t, parity)
    if np.isnan(z0) or np.isnan(zl) or np.isnan(zr):
        raise ValueError("negative odd partition function on an even lattice")
    degenerate = bool(parity == "odd" and (np.isneginf(z0) or np.isneginf(zl) or np.isneginf(zr)))
    if degenerate and np.isfinite(z0):
        # a vanishing reflected trace under a non-vanishing original falsifies the bound
        return InequalityReport(2 * z0, zl + zr, -np.inf, False, True)
    return InequalityReport.compare(2 * z0, zl + zr, degenerate)


def sector_log_z(sector: FluxSector, beta: float, t: float, parity: str) -> float:
    return _log_z(lattice.representative(sector), beta, t, parity)


def free_energy(phi: np.ndarray, beta: float, t: float, parity: str) -> float:
    """F = -max over loop fluxes of log Z; +inf when every loop choice vanishes."""
    best = max(sector_log_z(FluxSector(phi, a, b), beta, t, parity) for a, b in LOOPS)
    return float(-best)


def _require_mult4(L: int) -> None:
    if L < 4 or L % 4:
        raise lattice.InvalidSize(f"L must be a positive multiple of 4, got {L}")


def chessboard_extension(
    sector: FluxSector,
    i: int,
    j: int,
    beta: float | None = None,
    t: float | None = None,
    parity: str = "even",
) -> FluxSector:
    """Repeat the flux at (i, j) on its parity class, pi flux elsewhere.

    Loop fluxes maximise Z when ``beta`` and ``t`` are given, else (1, 1).
    """
    L = sector.L
    _require_mult4(L)
    x1, x2 = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    same = ((x1 - i) % 2 == 0) & ((x2 - j) % 2 == 0)
    phi = np.where(same, sector.phi[i % L, j % L], -1)
    if beta is None or t is None:
        return FluxSector(phi, 1, 1)
    scores = [sector_log_z(FluxSector(phi, a, b), beta, t, parity) for a, b in LOOPS]
    a, b = LOOPS[int(np.argmax(scores))]
    return FluxSector(phi, a, b)


def chessboard_check(sector: FluxSector, beta: float, t: float, parity: str = "even") -> InequalityReport:
    """(1/L^2) sum_ij F(extension(i, j)) <= F(sector)."""
    L = sector.L
    _require_mult4(L)
    cache: dict[bytes, float] = {}

    def F(phi: np.ndarray) -> float:
        key = np.asarray(phi, dtype=np.int8).tobytes()
        if key not in cache:
            cache[key] = free_energy(phi, beta, t, parity)
        return cache[key]

    rhs = F(sector.phi)
    terms = [F(chessboard_extension(sector, i, j).phi) for i in range(L) for j in range(L)]
    lhs = float(np.mean(terms))
    degenerate = bool(np.isposinf(rhs) or np.isposinf(lhs))
    return InequalityReport.compare(lhs, rhs, degenerate)


def monopole_bound_check(
    sector: FluxSector, a: int, b: int, beta: float, t: float, parity: str = "even"
) -> InequalityReport:
    """k Delta - (1/beta) log Z_* <= -(1/beta) log Z(sector; a, b), k the number of zero-flux plaquettes."""
    L = sector.L
    _require_mult4(L)
    k = sector.n_zero_flux
    delta = bloch.monopole_mass(beta, L, t, parity)
    ref = bloch.pi_partition(L, -1, -1, beta, t).log_z(parity)
    lz = sector_log_z(sector.with_loops(a, b), beta, t, parity)
    return InequalityReport.compare(k * delta - ref / beta, -lz / beta, bool(np.isneginf(lz)))


# exhaustive enumeration at L=4

N_PHI = 1 << (ENUM_L * ENUM_L - 1)


def phi_from_codes(codes: np.ndarray, L: int = ENUM_L) -> np.ndarray:
    """Bit i set means plaquette i (= x1 + L x2) carries pi flux; the last plaquette closes the product."""
    codes = np.asarray(codes, dtype=np.int64)
    n = L * L
    bits = (codes[:, None] >> np.arange(n - 1)) & 1
    phi = np.where(bits == 1, -1, 1).astype(np.int8)
    last = np.prod(phi, axis=1, dtype=np.int64).astype(np.int8)
    flat = np.concatenate([phi, last[:, None]], axis=1)
    return flat.reshape(-1, L, L).transpose(0, 2, 1)


def sector_code(sector: FluxSector) -> int:
    flat = sector.phi.T.reshape(-1)[:-1]
    return int(np.sum((flat == -1).astype(np.int64) << np.arange(flat.size)))


def sector_id(sector: FluxSector) -> int:
    return 4 * sector_code(sector) + LOOPS.index((sector.a, sector.b))


@lru_cache(maxsize=1)
def enumeration_spectra(chunk: int = 4096) -> np.ndarray:
    """Sorted t=1 spectra of every L=4 sector, indexed by sector id (shape 131072 x 16)."""
    out = np.empty((N_PHI * 4, ENUM_L * ENUM_L))
    for start in range(0, N_PHI, chunk):
        codes = np.arange(start, min(start + chunk, N_PHI))
        phi = phi_from_codes(codes)
        for li, (a, b) in enumerate(LOOPS):
            sigma = lattice.representative_arrays(phi, a, b)
            out[4 * codes + li] = np.linalg.eigvalsh(hopping_arrays(sigma, 1.0))
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class EnumerationTable:
    beta: float
    t: float
    log_z_plus: np.ndarray
    z_minus_sign: np.ndarray
    log_abs_z_minus: np.ndarray
    n_zero_flux: np.ndarray

    def log_z(self, parity: str) -> np.ndarray:
        if parity == "even":
            return self.log_z_plus
        if parity == "odd":
            return np.where(self.z_minus_sign > 0, self.log_abs_z_minus, -np.inf)
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")

    def sector(self, sid: int) -> FluxSector:
        a, b = LOOPS[sid % 4]
        return FluxSector(phi_from_codes(np.array([sid // 4]))[0], a, b)

    def pair(self, sid: int) -> PartitionPair:
        return PartitionPair(
            float(self.log_z_plus[sid]), int(self.z_minus_sign[sid]), float(self.log_abs_z_minus[sid]), self.beta
        )

    def to_csv(self, slack: np.ndarray | None = None, passed: np.ndarray | None = None) -> str:
        rows = ["sector_id,a,b,k_zero_flux,log_z_plus,z_minus_sign,log_abs_z_minus,slack,passed"]
        for sid in range(len(self.log_z_plus)):
            a, b = LOOPS[sid % 4]
            s = "" if slack is None else f"{slack[sid]:.12g}"
            p = "" if passed is None else str(bool(passed[sid]))
            rows.append(
                f"{sid},{a},{b},{self.n_zero_flux[sid]},{self.log_z_plus[sid]:.12g},"
                f"{self.z_minus_sign[sid]},{self.log_abs_z_minus[sid]:.12g},{s},{p}"
            )
        return "\n".join(rows) + "\n"


def enumerate_sectors(beta: float, t: float, L: int = ENUM_L) -> EnumerationTable:
    if L != ENUM_L:
        raise ValueError(f"exhaustive enumeration is limited to L={ENUM_L}; sample sectors for larger L")
    lam = enumeration_spectra() * t
    lp, sg, la = partition_arrays(lam, beta, zero_tolerance(t) if t > 0 else np.inf)
    if t == 0:
        # no hopping: every mode sits at zero energy, Z+ = 2^{L^2}, Z- = 0
        lp = np.full(len(lam), L * L * np.log(2.0))
    codes = np.repeat(np.arange(N_PHI), 4)
    zero_flux = np.count_nonzero(phi_from_codes(np.arange(N_PHI)).reshape(N_PHI, -1) == 1, axis=1)
    return EnumerationTable(beta, t, lp, sg.astype(np.int8), la, zero_flux[codes])


@dataclass(frozen=True)
class OptimumResult:
    sector: FluxSector
    pair: PartitionPair
    tie: bool
    n_maximisers: int
    ranking: np.ndarray


def brute_force_optimum(L: int, beta: float, t: float, parity: str = "even", guard: float = 1e-9) -> OptimumResult:
    """Maximise Z^parity over all flux sectors; sectors with vanishing Z- drop out of the odd case."""
    table = enumerate_sectors(beta, t, L)
    scores = table.log_z(parity)
    best = int(np.argmax(scores))
    top = scores[best]
    near = np.flatnonzero(scores >= top - guard * max(1.0, abs(top)))
    codes = np.unique(near // 4)
    ranking = np.argsort(-scores, kind="stable")
    return OptimumResult(table.sector(best), table.pair(best), len(codes) > 1, len(near), ranking)
