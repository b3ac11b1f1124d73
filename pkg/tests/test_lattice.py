from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from z2flux import lattice
from z2flux.lattice import FluxSector, GaugeConfig, ReflectionCut

seeds = st.integers(0, 2**32 - 1)


def random_cfg(seed: int, L: int = 4) -> GaugeConfig:
    return GaugeConfig.random(L, np.random.default_rng(seed))


@pytest.mark.parametrize("L, counts", [(4, (16, 32, 16)), (8, (64, 128, 64))])
def test_build_counts(L, counts):
    lat = lattice.build(L)
    assert (lat.n_vertices, lat.n_edges, lat.n_plaquettes) == counts


@pytest.mark.parametrize("L", [5, 3, 2, 0, -4])
def test_build_rejects_bad_sizes(L):
    with pytest.raises(lattice.InvalidSize):
        lattice.build(L)


def test_all_plus_has_zero_flux():
    s = lattice.flux_of(GaugeConfig.ones(4))
    assert np.all(s.phi == 1) and (s.a, s.b) == (1, 1)


def test_staggered_rows_give_pi_flux_with_trivial_loops():
    sigma = np.ones((2, 4, 4), dtype=np.int8)
    sigma[0, :, 1::2] = -1
    s = lattice.flux_of(GaugeConfig(sigma))
    assert np.all(s.phi == -1) and (s.a, s.b) == (1, 1)


@pytest.mark.parametrize("mu, x1, x2", [(0, 1, 2), (1, 3, 0), (0, 0, 0), (1, 2, 3)])
def test_single_flip_marks_two_plaquettes(mu, x1, x2):
    sigma = np.ones((2, 4, 4), dtype=np.int8)
    sigma[mu, x1, x2] = -1
    phi = lattice.flux_of(GaugeConfig(sigma)).phi
    flipped = {tuple(p) for p in np.argwhere(phi == -1)}
    # a horizontal bond borders the plaquettes above and below, a vertical one left and right
    want = {(x1, x2), (x1, (x2 - 1) % 4)} if mu == 0 else {(x1, x2), ((x1 - 1) % 4, x2)}
    assert flipped == want


def test_single_star_flips_four_bonds():
    cfg = lattice.gauge_transform(GaugeConfig.ones(4), [(2, 1)])
    assert np.count_nonzero(cfg.sigma == -1) == 4
    assert lattice.flux_of(cfg) == lattice.flux_of(GaugeConfig.ones(4))


def test_all_stars_is_identity():
    cfg = random_cfg(3)
    assert lattice.gauge_transform(cfg, np.ones((4, 4), dtype=bool)) == cfg


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_gauge_transform_preserves_flux(seed):
    rng = np.random.default_rng(seed)
    cfg = GaugeConfig.random(4, rng)
    mask = rng.random((4, 4)) < 0.5
    assert lattice.flux_of(lattice.gauge_transform(cfg, mask)) == lattice.flux_of(cfg)


def test_even_plaquette_count_constraint():
    # every L=2 configuration: fluxes multiply to one, 2^(L^2 - 1) patterns appear
    seen = set()
    for bits in itertools.product((1, -1), repeat=8):
        s = lattice.flux_of(GaugeConfig(np.array(bits, dtype=np.int8).reshape(2, 2, 2)))
        assert np.prod(s.phi) == 1
        seen.add(tuple(s.phi.ravel()))
    assert len(seen) == 2 ** (2 * 2 - 1)


def test_odd_pi_count_is_infeasible():
    phi = np.ones((4, 4), dtype=np.int8)
    phi[0, 0] = -1
    assert not FluxSector(phi, 1, 1).valid
    with pytest.raises(lattice.InfeasibleSector):
        lattice.representative(FluxSector(phi, 1, 1))


@pytest.mark.parametrize("a, b", [(1, 1), (1, -1), (-1, 1), (-1, -1)])
def test_representative_round_trips_all_pi(a, b):
    s = FluxSector.uniform(4, -1, a, b)
    assert lattice.flux_of(lattice.representative(s)) == s


def test_representative_of_zero_flux_is_all_plus():
    assert lattice.representative(FluxSector.uniform(4, 1)) == GaugeConfig.ones(4)


@settings(max_examples=100, deadline=None)
@given(seeds, st.sampled_from([4, 8]))
def test_representative_round_trip(seed, L):
    s = FluxSector.random(L, np.random.default_rng(seed))
    assert lattice.flux_of(lattice.representative(s)) == s


def test_representative_round_trip_every_sector_at_L4():
    codes = np.arange(2**15)
    bits = (codes[:, None] >> np.arange(15)) & 1
    phi = np.where(bits, -1, 1).astype(np.int8)
    last = np.prod(phi, axis=1, keepdims=True)
    phi = np.concatenate([phi, last], axis=1).reshape(-1, 4, 4)
    for a, b in [(1, 1), (-1, -1)]:
        sigma = lattice.representative_arrays(phi, a, b)
        assert np.array_equal(lattice.plaquette_products(sigma), phi)
        assert np.all(np.prod(sigma[:, 0, :, 0], axis=1) == a)
        assert np.all(np.prod(sigma[:, 1, 0, :], axis=1) == b)


def test_json_round_trip():
    cfg = random_cfg(11, 8)
    assert GaugeConfig.from_json(cfg.to_json()) == cfg
    s = FluxSector.random(8, np.random.default_rng(2))
    assert FluxSector.from_json(s.to_json()) == s


def test_json_edge_order_is_x1_fastest():
    sigma = np.ones((2, 4, 4), dtype=np.int8)
    sigma[0, 1, 0] = -1
    sigma[1, 0, 0] = -1
    import json

    flat = json.loads(GaugeConfig(sigma).to_json())["sigma"]
    assert flat[1] == -1 and flat[16] == -1 and sum(v == -1 for v in flat) == 2


def test_all_plus_reflection_puts_pi_on_cut_lines():
    cut = ReflectionCut("vertical", 0)
    for half in lattice.reflect(GaugeConfig.ones(4), cut):
        phi = lattice.flux_of(half).phi
        cols = {int(x) for x, _ in np.argwhere(phi == -1)}
        assert np.count_nonzero(phi == -1) == 2 * 4
        assert cols == {0, 2}


@pytest.mark.parametrize("orientation", ["vertical", "horizontal"])
def test_symmetric_config_reflects_to_itself(orientation):
    cut = ReflectionCut(orientation, 1)
    left, _ = lattice.reflect(lattice.fix_cut(random_cfg(5), cut), cut)
    again, _ = lattice.reflect(left, cut)
    assert again == left


@settings(max_examples=100, deadline=None)
@given(seeds, st.sampled_from(["vertical", "horizontal"]), st.integers(0, 3))
def test_fix_cut_clears_crossing_bonds_and_keeps_flux(seed, orientation, position):
    cfg = random_cfg(seed)
    cut = ReflectionCut(orientation, position)
    fixed = lattice.fix_cut(cfg, cut)
    assert np.all(lattice.crossing_bonds(fixed, cut) == 1)
    assert lattice.flux_of(fixed) == lattice.flux_of(cfg)
    assert lattice.fix_cut(fixed, cut) == fixed


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(0, 3))
def test_reflected_halves_have_mirrored_fluxes(seed, position):
    cut = ReflectionCut("vertical", position)
    cfg = lattice.fix_cut(random_cfg(seed), cut)
    left, right = lattice.reflect(cfg, cut)
    phi_l, phi_r = lattice.flux_of(left).phi, lattice.flux_of(right).phi
    assert np.array_equal(lattice.mirror_plaquettes(phi_l, cut), phi_l)
    assert np.array_equal(lattice.mirror_plaquettes(phi_r, cut), phi_r)
    cols = lattice.left_columns(4, position)
    inner = [int(x) for x in cols[:-1]]
    assert np.array_equal(phi_l[inner], lattice.flux_of(cfg).phi[inner])


def test_reflect_requires_fixed_cut():
    cut = ReflectionCut("vertical", 0)
    sigma = np.ones((2, 4, 4), dtype=np.int8)
    sigma[0, 0, 2] = -1
    with pytest.raises(lattice.NotGaugeFixed):
        lattice.reflect(GaugeConfig(sigma), cut)


def test_chessboard_sector_is_staggered():
    s = lattice.chessboard_sector(8)
    x1, x2 = np.indices((8, 8))
    zero = s.phi == 1
    assert np.count_nonzero(zero) == 16
    assert np.all(x1[zero] % 2 == 1) and np.all(x2[zero] % 2 == 1)
    assert s.valid
