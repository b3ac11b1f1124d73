"""Currents, diamagnetic term, Ward identity and static magnetic susceptibility of the pi-flux phase.

Cell basis: A at r_A = e2 and B at r_B = 0, cells on the lattice spanned by
e1 and 2 e2. An operator sum_{X,Y} M(X,Y) a+_X a_Y whose kernel is a
hopping times g(xi) e^{-i p.Y} has the Bloch block
    sum_d e^{-i (k-p).d} h_ab(d) g(xi) e^{-i p.r_b}
between the normalised modes at k-p (out) and k (in).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.special import expit

from . import bloch
from .rpchess import InequalityReport

R_CELL = {0: np.array([0.0, 1.0]), 1: np.array([0.0, 0.0])}


def _pi_bonds(t: float) -> list[tuple[int, int, np.ndarray, float, np.ndarray]]:
    """(out, in, cell offset d, hopping, bond vector xi = X - Y) for the (1,1) pi-flux cell."""
    e1, e2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    bonds = []
    for s in (1.0, -1.0):
        bonds.append((0, 0, s * e1, t, s * e1))  # A rows carry sigma = -1
        bonds.append((1, 1, s * e1, -t, s * e1))
    bonds.append((0, 1, 0 * e1, -t, e2))
    bonds.append((0, 1, -2 * e2, -t, -e2))
    bonds.append((1, 0, 0 * e1, -t, -e2))
    bonds.append((1, 0, 2 * e2, -t, e2))
    return bonds


def eta(xi: np.ndarray, p: np.ndarray) -> complex:
    """(e^{-i p.xi} - 1) / (-i p.xi), equal to 1 at p.xi = 0."""
    x = float(np.dot(p, xi))
    if x == 0.0:
        return 1.0 + 0.0j
    return (np.exp(-1j * x) - 1) / (-1j * x)


@dataclass(frozen=True)
class CurrentBlock:
    """Momentum-transfer-``p`` operator; ``block(k)`` maps the mode at k to the mode at k - p."""

    p: np.ndarray
    block: Callable[[np.ndarray], np.ndarray]
    mu: int | None = None

    def __call__(self, k: np.ndarray) -> np.ndarray:
        return self.block(np.asarray(k, dtype=float))


def _bloch_operator(p: np.ndarray, t: float, weight: Callable[[np.ndarray], complex]) -> Callable:
    p = np.asarray(p, dtype=float)
    terms = []
    for a, b, d, hop, xi in _pi_bonds(t):
        w = weight(xi)
        if w != 0:
            terms.append((a, b, d, hop * w * np.exp(-1j * np.dot(p, R_CELL[b]))))

    def block(k: np.ndarray) -> np.ndarray:
        kout = k - p
        out = np.zeros(k.shape[:-1] + (2, 2), dtype=complex)
        for a, b, d, c in terms:
            out[..., a, b] += c * np.exp(-1j * (kout @ d))
        return out

    return block


def current_block(mu: int, p, t: float = 1.0, q: float = 1.0) -> CurrentBlock:
    """Paramagnetic current J_mu(p), mu in {1, 2}."""
    if mu not in (1, 2):
        raise ValueError("mu must be 1 or 2")
    p = np.asarray(p, dtype=float)
    fn = _bloch_operator(p, t, lambda xi: -1j * q * eta(xi, p) * xi[mu - 1])
    return CurrentBlock(p, fn, mu)


def diamagnetic_block(mu: int, nu: int, p, pp, t: float = 1.0, q: float = 1.0) -> CurrentBlock:
    """Second-order Peierls term K_{mu nu}(p, p'), momentum transfer p + p'."""
    p, pp = np.asarray(p, dtype=float), np.asarray(pp, dtype=float)
    fn = _bloch_operator(
        p + pp, t, lambda xi: q * q * eta(xi, p) * eta(xi, pp) * xi[mu - 1] * xi[nu - 1]
    )
    return CurrentBlock(p + pp, fn)


def density_block(p) -> CurrentBlock:
    p = np.asarray(p, dtype=float)

    def fn(k: np.ndarray) -> np.ndarray:
        phase = np.exp(-1j * np.array([p @ R_CELL[0], p @ R_CELL[1]]))
        return np.broadcast_to(np.diag(phase), k.shape[:-1] + (2, 2)).copy()

    return CurrentBlock(p, fn)


def fermi(e: np.ndarray, beta: float, parity: str = "even") -> np.ndarray:
    """Occupation at zero chemical potential; the odd version carries the (-1)^N insertion."""
    e = np.asarray(e, dtype=float)
    if parity == "even":
        return expit(-beta * e)
    if parity == "odd":
        with np.errstate(divide="raise"):
            return -1.0 / np.expm1(beta * e)
    raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")


def _bands(k: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    return np.linalg.eigh(bloch.bloch_h_pi(k, t))


def _check_on_lattice(p: np.ndarray, L: int) -> None:
    m = np.asarray(p) * L / (2 * np.pi)
    if not np.allclose(m, np.round(m), atol=1e-9):
        raise ValueError(f"momentum {p} is not on the lattice (2 pi / {L}) Z^2")


def _zero_mode_guard(L: int, a: int, b: int, t: float, parity: str) -> None:
    if parity == "odd" and np.any(np.abs(bloch.pi_spectrum(L, a, b, t)) < 1e-12 * max(1.0, t)):
        raise ValueError("odd parity needs a sector without zero modes")


def kubo_static(
    A: CurrentBlock,
    B: CurrentBlock,
    L: int,
    beta: float,
    t: float = 1.0,
    a: int = -1,
    b: int = -1,
    parity: str = "even",
) -> float:
    """(1/L^2) int_0^beta ds <A(s); B> for quadratic A, B with opposite momentum transfer."""
    if not np.allclose(A.p + B.p, 0):
        raise ValueError("A and B must carry opposite momenta")
    _check_on_lattice(B.p, L)
    _zero_mode_guard(L, a, b, t, parity)
    k = bloch.bloch_grid(L, a, b).points
    kp = k - B.p
    e, U = _bands(k, t)
    ep, V = _bands(kp, t)
    # B: k -> k - p, A: k - p -> k
    b_nm = np.conj(np.swapaxes(V, -1, -2)) @ B(k) @ U
    a_mn = np.conj(np.swapaxes(U, -1, -2)) @ A(kp) @ V
    em, en = e[..., :, None], ep[..., None, :]
    fm, fn = fermi(em, beta, parity), fermi(en, beta, parity)
    de = em - en
    close = np.abs(de) < 1e-10
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(close, beta * fm * (1 - fm), (fn - fm) / np.where(close, 1.0, de))
    total = np.sum(a_mn * np.swapaxes(b_nm, -1, -2) * w)
    return float(np.real(total)) / L**2


def one_body_expectation(K: CurrentBlock, L: int, beta: float, t: float = 1.0, a: int = -1, b: int = -1, parity: str = "even") -> float:
    """(1/L^2) <K> for a momentum-diagonal quadratic operator: sum_k Tr K(k) f(h(k))."""
    if not np.allclose(K.p, 0):
        raise ValueError("one-body expectation needs zero momentum transfer")
    _zero_mode_guard(L, a, b, t, parity)
    k = bloch.bloch_grid(L, a, b).points
    e, U = _bands(k, t)
    occ = U @ (fermi(e, beta, parity)[..., None] * np.conj(np.swapaxes(U, -1, -2)))
    return float(np.real(np.einsum("kab,kba->", K(k), occ))) / L**2


@dataclass(frozen=True)
class WardReport:
    diamagnetic: float
    kubo: float
    residual: float
    passed: bool


def ward_check(L: int, beta: float, t: float, p1: float, a: int = -1, b: int = -1, q: float = 1.0, tol: float = 1e-8) -> WardReport:
    """<K_11(p, -p)>/L^2 = -(1/L^2) int <J_1(-p, s); J_1(p)> at p = (p1, 0)."""
    if p1 == 0:
        raise ValueError("p1 must be nonzero")
    p = np.array([p1, 0.0])
    dia = one_body_expectation(diamagnetic_block(1, 1, p, -p, t, q), L, beta, t, a, b)
    kub = kubo_static(current_block(1, -p, t, q), current_block(1, p, t, q), L, beta, t, a, b)
    res = abs(dia + kub) / max(abs(dia), 1e-300)
    return WardReport(dia, -kub, res, res <= tol)


@dataclass(frozen=True)
class ResponseSample:
    p2: float
    value: float
    method: str
    L: int | None = None
    beta: float | None = None
    t: float = 1.0
    q: float = 1.0

    def csv_row(self) -> str:
        return f"{self.p2:.12g},{self.value:.12g},{self.method},{self.L or ''},{self.beta or ''},{self.t:.12g},{self.q:.12g}"


RESPONSE_HEADER = "p2,chi,method,L,beta,t,q"


def susceptibility_lattice(m: int, L: int, beta: float, t: float = 1.0, q: float = 1.0) -> ResponseSample:
    """chi(p2) = [Kubo(p) - Kubo(0)] / p2^2 for p = (0, 2 pi m / L) in the (-1,-1) phase."""
    if m == 0:
        raise ValueError("m must be nonzero")
    if L % 4:
        raise bloch.InvalidSize("L must be a multiple of 4")
    p2 = 2 * np.pi * m / L
    p = np.array([0.0, p2])
    zero = np.zeros(2)
    kp = kubo_static(current_block(1, -p, t, q), current_block(1, p, t, q), L, beta, t)
    k0 = kubo_static(current_block(1, zero, t, q), current_block(1, zero, t, q), L, beta, t)
    return ResponseSample(p2, (kp - k0) / p2**2, "lattice", L, beta, t, q)


def richardson_zero(p2: np.ndarray, values: np.ndarray) -> float:
    """Value at p2 = 0 of the polynomial through the samples."""
    coeffs = np.polyfit(np.asarray(p2, float), np.asarray(values, float), len(p2) - 1)
    return float(coeffs[-1])


# continuum (infinite-volume, zero-temperature) evaluation


def _graded_edges(lo: float, hi: float, toward_lo: bool, toward_hi: bool, levels: int, ratio: float) -> list[float]:
    """Panel edges on [lo, hi] shrinking geometrically towards the flagged ends."""
    if toward_lo and toward_hi:
        mid = 0.5 * (lo + hi)
        return _graded_edges(lo, mid, True, False, levels, ratio)[:-1] + _graded_edges(mid, hi, False, True, levels, ratio)
    span = hi - lo
    r = ratio ** np.arange(levels + 1)
    if toward_lo:
        inner = lo + span * r[::-1]
        return [lo] + list(inner)
    if toward_hi:
        inner = hi - span * r
        return list(inner) + [hi]
    return [lo, hi]


def _rule(breaks: list[float], singular: set[float], order: int, levels: int, ratio: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    edges: list[float] = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        seg = _graded_edges(lo, hi, lo in singular, hi in singular, levels, ratio)
        edges.extend(seg if not edges else seg[1:])
    edges_a = np.array(edges)
    lo, hi = edges_a[:-1], edges_a[1:]
    nodes = (0.5 * (hi - lo)[:, None] * x + 0.5 * (hi + lo)[:, None]).ravel()
    weights = (0.5 * (hi - lo)[:, None] * w).ravel()
    return nodes, weights


def _interband_kernel(k: np.ndarray, p: np.ndarray, t: float, q: float) -> np.ndarray:
    """sum over band pairs on opposite sides of zero of A_mn B_nm / (|lam| + |mu|), A = J_1(-p), B = J_1(p)."""
    kp = k - p
    e, U = _bands(k, t)
    ep, V = _bands(kp, t)
    B = current_block(1, p, t, q)(k)
    A = current_block(1, -p, t, q)(kp)
    b_nm = np.conj(np.swapaxes(V, -1, -2)) @ B @ U
    a_mn = np.conj(np.swapaxes(U, -1, -2)) @ A @ V
    em, en = e[..., :, None], ep[..., None, :]
    opposite = (em * en) < 0
    w = np.where(opposite, 1.0 / (np.abs(em) + np.abs(en)), 0.0)
    return np.real(np.sum(a_mn * np.swapaxes(b_nm, -1, -2) * w, axis=(-1, -2)))


def matsubara_pair(lam: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """int dw/2pi 1/((-iw + lam)(-iw + mu)) = -[sign lam != sign mu] / (|lam| + |mu|)."""
    lam, mu = np.asarray(lam, float), np.asarray(mu, float)
    opposite = lam * mu < 0
    with np.errstate(divide="ignore"):
        return np.where(opposite, -1.0 / (np.abs(lam) + np.abs(mu)), 0.0)


def continuum_kernel_difference(p2: float, t: float = 1.0, q: float = 1.0, order: int = 12, levels: int = 18, ratio: float = 0.25) -> float:
    """int_B dk/(2pi)^2 of the subtracted zero-temperature Kubo integrand, K(p) - K(0)."""
    kf = np.pi / 2
    s1 = {kf, 3 * kf}
    s2 = {kf, kf + p2}
    x1, w1 = _rule([0.0, kf, np.pi, 3 * kf, 2 * np.pi], s1, order, levels, ratio)
    x2, w2 = _rule(sorted({0.0, kf, kf + p2, np.pi}), s2, order, levels, ratio)
    p = np.array([0.0, p2])
    zero = np.zeros(2)
    total = 0.0
    for i in range(0, len(x1), 64):
        K1, K2 = np.meshgrid(x1[i : i + 64], x2, indexing="ij")
        k = np.stack([K1, K2], axis=-1)
        diff = _interband_kernel(k, p, t, q) - _interband_kernel(k, zero, t, q)
        total += np.einsum("i,j,ij->", w1[i : i + 64], w2, diff)
    return total / (2 * np.pi) ** 2


def susceptibility_continuum(p2: float, delta: float = 0.3, t: float = 1.0, q: float = 1.0) -> ResponseSample:
    """-(A(p2) - A(0)) / p2^2 with A the zero-temperature Matsubara current bubble over B = [0,2pi] x [0,pi].

    The frequency integral is done per band pair in closed form; the momentum
    integral uses Gauss-Legendre panels refined geometrically towards both
    Dirac points and their images shifted by p. ``delta`` bounds p2.
    """
    if not 0 < abs(p2) < delta < 1:
        raise ValueError("need 0 < |p2| < delta < 1")
    ap = abs(p2)
    # A(p) = -K(p); chi = -(A(p) - A(0)) / p2^2 = (K(p) - K(0)) / p2^2
    val = continuum_kernel_difference(ap, t, q) / ap**2
    return ResponseSample(float(p2), float(val), "continuum", None, None, t, q)


def dirac_k2_integral(s: float, vp: float) -> float:
    """int dk2/2pi [k2 (k2 - vp) / ((s + k2^2)(s + (k2 - vp)^2)) - k2^2 / (s + k2^2)^2], by adaptive quadrature."""

    def f(k2: float) -> float:
        return (k2 * (k2 - vp) / ((s + k2 * k2) * (s + (k2 - vp) ** 2)) - k2 * k2 / (s + k2 * k2) ** 2) / (2 * np.pi)

    pts = sorted({0.0, vp})
    parts = [quad(f, -np.inf, pts[0], limit=400)[0], quad(f, pts[-1], np.inf, limit=400)[0]]
    if len(pts) == 2:
        parts.append(quad(f, pts[0], pts[1], limit=400)[0])
    return float(sum(parts))


def dirac_k2_closed_form(s: float, vp: float) -> float:
    return -(vp**2) / (4 * np.sqrt(s) * (vp**2 + 4 * s))


def dirac_subtracted_integral(p2: float, delta: float, t: float = 1.0) -> float:
    """Normalised pure-Dirac subtracted bubble, to be compared with arctan(2 delta/|p2|)/(16 pi).

    The k2 integral is done numerically over the real line and the (w, k1)
    integral over the disc of radius v delta in polar form.
    """
    v = bloch_velocity(t)
    vp = v * abs(p2)
    radial = quad(lambda r: r * dirac_k2_integral(r * r, vp) / (2 * np.pi), 0.0, v * delta, points=[vp / 2], limit=400)[0]
    return float(-radial / vp)


def dirac_arctan(p2: float, delta: float) -> float:
    return float(np.arctan(2 * delta / abs(p2)) / (16 * np.pi))


def bloch_velocity(t: float) -> float:
    return 2.0 * t


def dirac_velocity(t: float = 1.0, h: float = 1e-5, n_dirs: int = 8) -> tuple[float, float]:
    """Slope of |e_-| at both Dirac points by central differences; returns (mean, relative spread)."""
    if t <= 0:
        raise ValueError("t must be positive")
    slopes = []
    for kf in bloch.DIRAC_POINTS:
        for ang in np.arange(n_dirs) * 2 * np.pi / n_dirs:
            u = np.array([np.cos(ang), np.sin(ang)])
            ep = -bloch.pi_bands(np.array(kf) + h * u, t)[0]
            em = -bloch.pi_bands(np.array(kf) - h * u, t)[0]
            # |e| is a cone: the central difference of |e| along +u and -u averages the two one-sided slopes
            slopes.append(float((ep + em) / (2 * h)))
    s = np.array(slopes)
    return float(s.mean()), float(np.ptp(s) / s.mean())
