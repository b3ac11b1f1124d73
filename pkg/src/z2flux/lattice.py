"""Torus geometry, Z2 gauge configurations, fluxes and reflection cuts.

Arrays are indexed ``[mu, x1, x2]`` for bonds and ``[x1, x2]`` for
plaquettes, with plaquettes labelled by their lower-left corner. Bond
``(x, mu)`` joins ``x`` to ``x + e_mu``; ``mu = 0`` is horizontal and
``mu = 1`` vertical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np


class InvalidSize(ValueError):
    pass


class InfeasibleSector(ValueError):
    pass


class NotGaugeFixed(ValueError):
    pass


@dataclass(frozen=True)
class TorusLattice:
    L: int

    def __post_init__(self) -> None:
        if self.L < 2 or self.L % 2:
            raise InvalidSize(f"L must be even and >= 2, got {self.L}")

    @property
    def n_vertices(self) -> int:
        return self.L * self.L

    @property
    def n_edges(self) -> int:
        return 2 * self.L * self.L

    @property
    def n_plaquettes(self) -> int:
        return self.L * self.L


def build(L: int) -> TorusLattice:
    if L < 4 or L % 2:
        raise InvalidSize(f"L must be even and >= 4, got {L}")
    return TorusLattice(L)


def _pm1(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr)
    if not np.all((arr == 1) | (arr == -1)):
        raise ValueError("entries must be +1 or -1")
    return arr.astype(np.int8)


@dataclass(frozen=True, eq=False)
class GaugeConfig:
    """Bond values ``sigma[mu, x1, x2]``."""

    sigma: np.ndarray

    def __post_init__(self) -> None:
        s = _pm1(self.sigma)
        if s.ndim != 3 or s.shape[0] != 2 or s.shape[1] != s.shape[2]:
            raise ValueError(f"sigma must have shape (2, L, L), got {s.shape}")
        TorusLattice(s.shape[1])
        s.setflags(write=False)
        object.__setattr__(self, "sigma", s)

    @property
    def L(self) -> int:
        return self.sigma.shape[1]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GaugeConfig) and np.array_equal(self.sigma, other.sigma)

    @classmethod
    def ones(cls, L: int) -> GaugeConfig:
        return cls(np.ones((2, L, L), dtype=np.int8))

    @classmethod
    def random(cls, L: int, rng: np.random.Generator) -> GaugeConfig:
        return cls(rng.choice(np.array([-1, 1], dtype=np.int8), size=(2, L, L)))

    def to_json(self) -> str:
        # edge order: x1 fastest, then x2, then mu
        flat = self.sigma.transpose(0, 2, 1).reshape(-1)
        return json.dumps({"L": self.L, "sigma": [int(v) for v in flat]})

    @classmethod
    def from_json(cls, text: str) -> GaugeConfig:
        d = json.loads(text)
        L = int(d["L"])
        return cls(np.array(d["sigma"]).reshape(2, L, L).transpose(0, 2, 1))


@dataclass(frozen=True, eq=False)
class FluxSector:
    """Plaquette fluxes ``phi[x1, x2]`` and loop fluxes ``a`` (row x2=0), ``b`` (column x1=0)."""

    phi: np.ndarray
    a: int = 1
    b: int = 1

    def __post_init__(self) -> None:
        p = _pm1(self.phi)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"phi must be square, got {p.shape}")
        if self.a not in (1, -1) or self.b not in (1, -1):
            raise ValueError("loop fluxes must be +1 or -1")
        p.setflags(write=False)
        object.__setattr__(self, "phi", p)

    @property
    def L(self) -> int:
        return self.phi.shape[0]

    @property
    def valid(self) -> bool:
        return int(np.prod(self.phi, dtype=np.int64)) == 1

    @property
    def n_zero_flux(self) -> int:
        return int(np.count_nonzero(self.phi == 1))

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, FluxSector)
            and np.array_equal(self.phi, other.phi)
            and (self.a, self.b) == (other.a, other.b)
        )

    def with_loops(self, a: int, b: int) -> FluxSector:
        return FluxSector(self.phi, a, b)

    @classmethod
    def uniform(cls, L: int, value: int, a: int = 1, b: int = 1) -> FluxSector:
        return cls(np.full((L, L), value, dtype=np.int8), a, b)

    @classmethod
    def random(cls, L: int, rng: np.random.Generator) -> FluxSector:
        phi = rng.choice(np.array([-1, 1], dtype=np.int8), size=(L, L))
        phi[-1, -1] = np.prod(phi.reshape(-1)[:-1], dtype=np.int64)
        a, b = (int(v) for v in rng.choice([-1, 1], size=2))
        return cls(phi, a, b)

    def to_json(self) -> str:
        flat = self.phi.T.reshape(-1)
        return json.dumps({"L": self.L, "phi": [int(v) for v in flat], "a": self.a, "b": self.b})

    @classmethod
    def from_json(cls, text: str) -> FluxSector:
        d = json.loads(text)
        L = int(d["L"])
        return cls(np.array(d["phi"]).reshape(L, L).T, int(d["a"]), int(d["b"]))


def plaquette_products(sigma: np.ndarray) -> np.ndarray:
    """Plaquette fluxes for bond arrays of shape ``(..., 2, L, L)``."""
    h, v = sigma[..., 0, :, :], sigma[..., 1, :, :]
    return h * np.roll(v, -1, axis=-2) * np.roll(h, -1, axis=-1) * v


def flux_of(cfg: GaugeConfig) -> FluxSector:
    s = cfg.sigma
    a = int(np.prod(s[0, :, 0], dtype=np.int64))
    b = int(np.prod(s[1, 0, :], dtype=np.int64))
    return FluxSector(plaquette_products(s), a, b)


def gauge_transform(cfg: GaugeConfig, S: Iterable[tuple[int, int]] | np.ndarray) -> GaugeConfig:
    """Flip the star of every vertex in ``S`` (a set of sites or an (L, L) boolean mask)."""
    L = cfg.L
    mask = np.asarray(S)
    if mask.shape != (L, L) or mask.dtype != bool:
        mask = np.zeros((L, L), dtype=bool)
        for x1, x2 in S:
            mask[x1 % L, x2 % L] = True
    g = np.where(mask, -1, 1).astype(np.int8)
    sigma = cfg.sigma.copy()
    sigma[0] *= g * np.roll(g, -1, axis=0)
    sigma[1] *= g * np.roll(g, -1, axis=1)
    return GaugeConfig(sigma)


def representative_arrays(phi: np.ndarray, a: np.ndarray | int, b: np.ndarray | int) -> np.ndarray:
    """Row-accumulation gauge for a batch of sectors; ``phi`` has shape ``(..., L, L)``.

    Vertical bonds are +1 except on the top row. Row 0 horizontal bonds are
    +1 except the last one, which carries ``a``. Each further row follows
    from the fluxes below it, and the top-row vertical bonds close the
    torus with ``b`` on column 0.
    """
    phi = np.asarray(phi, dtype=np.int8)
    L = phi.shape[-1]
    batch = phi.shape[:-2]
    sigma = np.ones(batch + (2, L, L), dtype=np.int8)
    h, v = sigma[..., 0, :, :], sigma[..., 1, :, :]
    h[..., L - 1, 0] = a
    for y in range(L - 1):
        h[..., :, y + 1] = phi[..., :, y] * h[..., :, y]
    top = L - 1
    v[..., 0, top] = b
    for x in range(L - 1):
        v[..., x + 1, top] = phi[..., x, top] * h[..., x, top] * h[..., x, 0] * v[..., x, top]
    return sigma


def representative(sector: FluxSector) -> GaugeConfig:
    if not sector.valid:
        raise InfeasibleSector("plaquette fluxes must multiply to +1")
    return GaugeConfig(representative_arrays(sector.phi, sector.a, sector.b))


@dataclass(frozen=True)
class ReflectionCut:
    """Two bond-centred cut lines, after column ``position`` and after ``position + L/2``."""

    orientation: Literal["vertical", "horizontal"]
    position: int

    def __post_init__(self) -> None:
        if self.orientation not in ("vertical", "horizontal"):
            raise ValueError(f"unknown orientation {self.orientation!r}")
        if self.position < 0:
            raise ValueError("position must be non-negative")


def _transpose(sigma: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(sigma[::-1].transpose(0, 2, 1))


def _crossing_columns(L: int, c: int) -> tuple[int, int]:
    return c % L, (c + L // 2) % L


def _check_cut(L: int, cut: ReflectionCut) -> None:
    if not 0 <= cut.position < L:
        raise ValueError(f"cut position must lie in [0, {L}), got {cut.position}")


def _fix_vertical(sigma: np.ndarray, c: int) -> np.ndarray:
    L = sigma.shape[1]
    mask = np.zeros((L, L), dtype=bool)
    c1, c2 = _crossing_columns(L, c)
    # flip the star just inside the left half, next to each bad crossing bond
    mask[(c1 + 1) % L, sigma[0, c1, :] == -1] = True
    mask[c2, sigma[0, c2, :] == -1] = True
    return gauge_transform(GaugeConfig(sigma), mask).sigma


def fix_cut(cfg: GaugeConfig, cut: ReflectionCut) -> GaugeConfig:
    _check_cut(cfg.L, cut)
    if cut.orientation == "vertical":
        return GaugeConfig(_fix_vertical(cfg.sigma, cut.position))
    return GaugeConfig(_transpose(_fix_vertical(_transpose(cfg.sigma), cut.position)))


def crossing_bonds(cfg: GaugeConfig, cut: ReflectionCut) -> np.ndarray:
    sigma = cfg.sigma if cut.orientation == "vertical" else _transpose(cfg.sigma)
    c1, c2 = _crossing_columns(cfg.L, cut.position)
    return np.concatenate([sigma[0, c1, :], sigma[0, c2, :]])


def left_columns(L: int, c: int) -> np.ndarray:
    return (c + 1 + np.arange(L // 2)) % L


def _reflect_vertical(sigma: np.ndarray, c: int) -> tuple[np.ndarray, np.ndarray]:
    L = sigma.shape[1]
    xs = np.arange(L)
    # x -> 2c+1-x swaps the halves; horizontal bond x sits between x and x+1
    mirror_v = (2 * c + 1 - xs) % L
    mirror_h = (2 * c - xs) % L
    inside = np.zeros(L, dtype=bool)
    inside[left_columns(L, c)] = True
    h_inside = inside & inside[(xs + 1) % L]
    crossing = np.zeros(L, dtype=bool)
    crossing[list(_crossing_columns(L, c))] = True

    outs = []
    for keep_v, keep_h in ((inside, h_inside), (~inside, ~h_inside & ~crossing)):
        out = sigma.copy()
        h, v = out[0], out[1]
        src_h = ~keep_h & ~crossing
        h[src_h] = -sigma[0][mirror_h[src_h]]
        v[~keep_v] = -sigma[1][mirror_v[~keep_v]]
        outs.append(out)
    return outs[0], outs[1]


def reflect(cfg: GaugeConfig, cut: ReflectionCut) -> tuple[GaugeConfig, GaugeConfig]:
    """Left- and right-reflected configurations.

    Bonds in the kept half are copied; every bond in the other half takes
    minus the value of its mirror image. Crossing bonds stay +1.
    """
    _check_cut(cfg.L, cut)
    if np.any(crossing_bonds(cfg, cut) != 1):
        raise NotGaugeFixed("bonds crossing the cut must be +1; call fix_cut first")
    if cut.orientation == "vertical":
        left, right = _reflect_vertical(cfg.sigma, cut.position)
    else:
        left, right = (_transpose(s) for s in _reflect_vertical(_transpose(cfg.sigma), cut.position))
    return GaugeConfig(left), GaugeConfig(right)


def mirror_plaquettes(phi: np.ndarray, cut: ReflectionCut) -> np.ndarray:
    """Plaquette fluxes pulled back through the cut reflection."""
    L = phi.shape[0]
    xs = np.arange(L)
    # a plaquette at column x spans x..x+1 and maps to the one spanning 2c-x..2c+1-x
    m = (2 * cut.position - xs) % L
    if cut.orientation == "vertical":
        return phi[m, :]
    return phi[:, m]


def chessboard_sector(L: int, a: int = 1, b: int = 1, offset: tuple[int, int] = (1, 1)) -> FluxSector:
    """Zero flux on one plaquette of every 2x2 block, pi flux elsewhere."""
    x1, x2 = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    zero = ((x1 - offset[0]) % 2 == 0) & ((x2 - offset[1]) % 2 == 0)
    return FluxSector(np.where(zero, 1, -1), a, b)
