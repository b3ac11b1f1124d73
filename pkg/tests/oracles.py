"""Independent brute-force references used by the tests."""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm


def fock_operators(n: int) -> list[np.ndarray]:
    """Jordan-Wigner annihilators on the 2^n dimensional Fock space."""
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    z = np.diag([1.0, -1.0])
    eye = np.eye(2)
    ops = []
    for j in range(n):
        m = np.array([[1.0]])
        for k in range(n):
            m = np.kron(m, z if k < j else a if k == j else eye)
        ops.append(m)
    return ops


def second_quantise(h: np.ndarray, ops: list[np.ndarray]) -> np.ndarray:
    return sum(h[i, j] * ops[i].conj().T @ ops[j] for i in range(len(ops)) for j in range(len(ops)) if h[i, j] != 0)


def fock_traces(h: np.ndarray, beta: float, *observables: np.ndarray) -> tuple[float, float, complex]:
    """(Tr e^{-bH}, Tr (-1)^N e^{-bH}, Tr (-1)^N e^{-bH} O1 O2 ...) by dense exponentiation."""
    n = len(h)
    ops = fock_operators(n)
    H = second_quantise(h, ops)
    N = sum(c.T @ c for c in ops)
    parity = np.diag((-1.0) ** np.round(np.diag(N)))
    rho = expm(-beta * H)
    prod = np.eye(2**n, dtype=complex)
    for O in observables:
        prod = prod @ second_quantise(O, ops)
    return float(np.trace(rho)), float(np.trace(parity @ rho)), complex(np.trace(parity @ rho @ prod))


def plane_wave_spectrum(L: int, t: float = 1.0) -> np.ndarray:
    k = 2 * np.pi * np.arange(L) / L
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    return np.sort((-2 * t * (np.cos(k1) + np.cos(k2))).ravel())
