"""Exact dense-matrix OTOC quantities (the reference every protocol is checked against)."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .dynamics import HamiltonianTerms, XXZParams, build_xxz, heisenberg_op
from .qcore import (
    PAULIS,
    dagger,
    embed_local,
    is_hermitian,
    is_unitary,
    pauli_decompose,
    psd_power,
    sqrtm_psd,
)
from .thermal import GibbsSpec, exact_gibbs


@dataclass(frozen=True, eq=False)
class OTOCSpec:
    H: HamiltonianTerms
    beta: float
    W0: np.ndarray
    V0: np.ndarray
    tau: float

    def __post_init__(self):
        W0 = np.asarray(self.W0, dtype=complex)
        V0 = np.asarray(self.V0, dtype=complex)
        dim = self.H.dense.shape[0]
        if W0.shape != (dim, dim) or V0.shape != (dim, dim):
            raise ValueError("W0 and V0 must act on the full system")
        if not (is_unitary(W0) and is_hermitian(W0)):
            raise ValueError("W0 must be Hermitian and unitary")
        if not is_hermitian(V0):
            raise ValueError("V0 must be Hermitian")
        object.__setattr__(self, "W0", W0)
        object.__setattr__(self, "V0", V0)

    @property
    def n(self) -> int:
        return self.H.n

    @cached_property
    def rho(self) -> np.ndarray:
        return exact_gibbs(GibbsSpec(self.H, self.beta)).matrix

    @cached_property
    def W_tau(self) -> np.ndarray:
        return heisenberg_op(self.W0, self.H, self.tau)

    def at(self, tau: float) -> "OTOCSpec":
        return OTOCSpec(self.H, self.beta, self.W0, self.V0, tau)


def _commutator(spec: OTOCSpec) -> np.ndarray:
    W, V = spec.W_tau, spec.V0
    return W @ V - V @ W


def otoc_c(spec: OTOCSpec) -> float:
    """``-Tr(rho [W(tau), V]^2)``."""
    K = _commutator(spec)
    val = -np.trace(spec.rho @ K @ K)
    if abs(val.imag) > 1e-10:
        raise ArithmeticError(f"squared commutator has imaginary part {val.imag:g}")
    return float(val.real)


def correlator_f(spec: OTOCSpec) -> complex:
    """``Tr(rho W^dagger(tau) V^dagger W(tau) V)``."""
    W, V = spec.W_tau, spec.V0
    return complex(np.trace(spec.rho @ dagger(W) @ dagger(V) @ W @ V))


def frobenius_form(spec: OTOCSpec) -> float:
    """``|| sqrt(rho) [W(tau), V] ||_2^2``."""
    M = sqrtm_psd(spec.rho) @ _commutator(spec)
    return float(np.sum(np.abs(M) ** 2))


def regularized_f(spec: OTOCSpec, kappas: Sequence[float]) -> complex:
    """``Tr(rho^k1 W(tau) rho^k2 V rho^k3 W(tau) rho^k4 V)`` with ``sum k = 1``."""
    kappas = [float(k) for k in kappas]
    if len(kappas) != 4:
        raise ValueError("four exponents required")
    if abs(sum(kappas) - 1.0) > 1e-12 or min(kappas) < 0:
        raise ValueError("exponents must be non-negative and sum to 1")
    r = [psd_power(spec.rho, k) for k in kappas]
    W, V = spec.W_tau, spec.V0
    return complex(np.trace(r[0] @ W @ r[1] @ V @ r[2] @ W @ r[3] @ V))


def operator_size_spectrum(W0: np.ndarray, H: HamiltonianTerms, tau: float) -> dict[str, float]:
    """Pauli-string weights ``|gamma_i|^2`` of the Heisenberg operator."""
    if not is_unitary(np.asarray(W0, dtype=complex)):
        raise ValueError("operator size spectrum needs a unitary W0")
    Wt = heisenberg_op(W0, H, tau)
    return {p.word: float(abs(p.coefficient) ** 2) for p in pauli_decompose(Wt, H.n)}


def size_identity_check(W0: np.ndarray, H: HamiltonianTerms, tau: float, site: int) -> tuple[float, float]:
    """Both sides of the infinite-temperature operator-size identity at ``site``.

    lhs averages ``Tr(-[W(tau), P_site]^2) / Tr(1)`` over the three
    non-identity Paulis; rhs is ``2 d^2 / (d^2 - 1)`` (d = 2) times the
    Pauli weight of ``W(tau)`` that is non-trivial at ``site``.
    """
    n = H.n
    if not 0 <= site < n:
        raise ValueError(f"site {site} out of range")
    d = 2
    Wt = heisenberg_op(W0, H, tau)
    lhs = 0.0
    for letter in "XYZ":
        P = embed_local(PAULIS[letter], [site], n)
        K = Wt @ P - P @ Wt
        lhs += float(np.real(-np.trace(K @ K))) / 2**n
    lhs /= d**2 - 1
    weights = operator_size_spectrum(W0, H, tau)
    rhs = 2 * d**2 / (d**2 - 1) * sum(w for word, w in weights.items() if word[site] != "I")
    return lhs, rhs


def oracle_row(delta: float, beta: float, spec: OTOCSpec) -> dict:
    """One CSV-ready oracle record."""
    F = correlator_f(spec)
    return {"delta": delta, "beta": beta, "tau": spec.tau, "C_exact": otoc_c(spec),
            "ReF": F.real, "ImF": F.imag}


ORACLE_COLUMNS = ("delta", "beta", "tau", "C_exact", "ReF", "ImF")


def random_spec(rng: np.random.Generator, n: int, beta: float) -> OTOCSpec:
    """XXZ chain with random anisotropy and field, single-site Pauli W and V, random time."""
    H = build_xxz(XXZParams(n, float(rng.uniform(-1, 1.5)), float(rng.uniform(-1, 1))))
    ops = [embed_local(PAULIS[str(rng.choice(list("XYZ")))], [int(rng.integers(n))], n) for _ in range(2)]
    return OTOCSpec(H, beta, ops[0], ops[1], float(rng.uniform(0, 3)))
