from __future__ import annotations

import numpy as np
import pytest
from scipy.special import logsumexp

from z2flux import gibbs, lattice, rpchess, spectral
from z2flux.lattice import FluxSector

# sublattice offsets inside the two-site cell: A above B
OFFSET = {0: (0, 1), 1: (0, 0)}


def test_sandwich_rhs_closed_form():
    beta, delta, n = 1.7, 0.4, 16
    u = np.exp(-beta * (delta - 1))
    assert gibbs.sandwich_rhs(beta, delta, n) == pytest.approx(np.log((1 + u) ** n + (1 - u) ** n) + np.log(2), rel=1e-12)
    # delta = 1 makes the second term vanish
    assert gibbs.sandwich_rhs(2.0, 1.0, n) == pytest.approx(n * np.log(2) + np.log(2), rel=1e-12)


def test_sector_weights_match_direct_sum():
    beta, t = 1.3, 2.0
    logw = gibbs.sector_log_weights(beta, t)
    rng = np.random.default_rng(0)
    table = rpchess.enumerate_sectors(beta, t)
    for sid in rng.integers(0, len(logw), size=20):
        sector = table.sector(int(sid))
        h = spectral.hopping_matrix(lattice.representative(sector), t)
        lam = spectral.eigensolve(h, t).eigenvalues
        zp = np.prod(1 + np.exp(-beta * lam))
        zm = np.prod(1 - np.exp(-beta * lam))
        hg = spectral.gauge_energy(sector)
        assert logw[sid] == pytest.approx(-beta * hg + np.log(0.5 * (zp + zm)), rel=1e-10)


def test_gauge_energy_in_weights_counts_zero_flux():
    # at t -> 0 the matter trace is flat (2^16 / 2), so the weights are the gauge Boltzmann factors
    logw = gibbs.sector_log_weights(1.0, 1e-9)
    table = rpchess.enumerate_sectors(1.0, 1e-9)
    expected = -(16 - 2 * table.n_zero_flux) + 15 * np.log(2)
    assert np.allclose(logw, expected, atol=1e-6)


@pytest.mark.parametrize("beta, t", [(1.0, 8.0), (2.0, 10.0), (3.0, 10.0)])
def test_sandwich_holds_where_bound_is_loose(beta, t):
    s = gibbs.full_partition(beta, t)
    assert s.passed
    assert s.gap >= 0


def test_free_energy_is_consistent():
    s = gibbs.full_partition(2.0, 6.0)
    logw = gibbs.sector_log_weights(2.0, 6.0)
    assert s.log_Z == pytest.approx(logsumexp(logw), rel=1e-14)
    assert s.f == pytest.approx(-s.log_Z / (2.0 * 16), rel=1e-14)
    assert s.f_pi >= s.f


def test_pure_gauge_limit_prefers_zero_flux():
    assert gibbs.plaquette_expectation(5.0, 0.0) >= 0.99


def test_strong_hopping_at_t10_sits_inside_error_bound():
    s = gibbs.full_partition(3.0, 10.0)
    eps = s.observables["plaquette_bound"]
    assert -1 <= s.observables["plaquette"] <= -1 + eps


def test_plaquette_profile_is_translation_invariant():
    prof = gibbs.plaquette_profile(1.0, 3.0)
    assert np.ptp(prof) < 1e-12


def test_strong_hopping_eventually_favours_pi_flux():
    assert gibbs.plaquette_expectation(3.0, 25.0) < -0.99


@pytest.mark.xfail(strict=True, reason="at L=4 the zero-flux twisted sector dominates up to t ~ 13.5")
def test_plaquette_crosses_zero_before_t10():
    values = [gibbs.plaquette_expectation(3.0, t) for t in np.linspace(0.0, 10.0, 11)]
    assert any(v < 0 for v in values)


def test_propagator_equal_time_diagonal_is_half():
    g = gibbs.ground_state_propagator((0, 0), 0.0, side="-")
    assert np.allclose(np.diag(g), 0.5, atol=1e-12)


def test_propagator_jump_at_equal_time():
    plus = gibbs.ground_state_propagator((0, 0), 0.0, side="+")
    minus = gibbs.ground_state_propagator((0, 0), 0.0, side="-")
    assert np.allclose(minus - plus, np.eye(2), atol=1e-12)
    with pytest.raises(ValueError):
        gibbs.ground_state_propagator((0, 0), 0.0)
    with pytest.raises(ValueError):
        gibbs.ground_state_propagator((0, 1), 1.0)


def realspace_density(L, X, Y, tau):
    cfg = lattice.representative(FluxSector.uniform(L, -1, -1, -1))
    s = spectral.eigensolve(spectral.hopping_matrix(cfg, 1.0))
    V, e = s.vectors, s.eigenvalues
    occ = e < 0
    i, j = spectral.site_index(*X, L), spectral.site_index(*Y, L)
    holes = np.sum(V[i, occ] * V[j, occ] * np.exp(tau * e[occ]))
    particles = np.sum(V[i, ~occ] * V[j, ~occ] * np.exp(-tau * e[~occ]))
    return holes * particles


@pytest.mark.parametrize(
    "x, tau, i, j",
    [((0, 0), 0.7, 0, 0), ((2, 0), 0.5, 0, 0), ((2, 2), 0.6, 0, 1), ((0, 2), 0.4, 1, 0), ((5, 6), 2.0, 1, 1)],
)
def test_density_correlation_matches_finite_torus(x, tau, i, j):
    # the midpoint zone grid with n1 = L is the (-1,-1) momentum grid of the L x L torus
    L = 16
    X = ((x[0] + OFFSET[i][0]) % L, (x[1] + OFFSET[i][1]) % L)
    got = gibbs.density_correlation(x, tau, 1.0, i, j, n1=L)
    assert got == pytest.approx(realspace_density(L, X, OFFSET[j], tau), rel=1e-10, abs=1e-15)


def test_density_correlation_equal_time_same_sublattice_is_nonpositive():
    for x in [(1, 0), (2, 0), (3, 2), (4, 4), (6, 2)]:
        assert gibbs.density_correlation(x, 0.0, 1.0, 0, 0) <= 1e-15


def test_propagator_grid_is_converged_at_large_separation():
    _, err = gibbs.propagator_richardson((0, 0), 40.0)
    g = gibbs.ground_state_propagator((0, 0), 40.0)
    assert err < 1e-2 * np.linalg.norm(g)


def test_sweep_csv_layout():
    text = gibbs.sweep_csv([gibbs.full_partition(1.0, 8.0)])
    header, row = text.strip().splitlines()
    assert header == "beta,t,f,f_pi,gap,bound_rhs,plaquette_expectation"
    assert len(row.split(",")) == 7


def test_full_partition_rejects_other_sizes():
    with pytest.raises(ValueError):
        gibbs.full_partition(1.0, 1.0, L=8)
