"""Gibbs states and variational thermofield-double preparation.

The TFD circuit acts on ``2n`` qubits: register A on sites ``0..n-1`` and
the system register S on sites ``n..2n-1``.  Register A carries the
populations ``p_i``; a CNOT from ``A_i`` to ``S_i`` copies them, and
``U_S`` rotates the copied basis toward the Hamiltonian eigenbasis.  The
entropy of the prepared system state equals the Shannon entropy of the
A-register computational-basis populations, so the free-energy cost never
needs an entropy measurement on S.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize as scipy_minimize

from .circuits import Circuit, Gate, simulate_pure
from .dynamics import HamiltonianTerms
from .qcore import (
    CNOT,
    DensityMatrix,
    PureState,
    rz,
    ry,
    shannon_entropy,
    uhlmann_fidelity,
    von_neumann_entropy,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GibbsSpec:
    H: HamiltonianTerms
    beta: float

    def __post_init__(self):
        if not np.isfinite(self.beta) or self.beta < 0:
            raise ValueError("beta must be finite and non-negative")


def exact_gibbs(spec: GibbsSpec) -> DensityMatrix:
    evals, evecs = spec.H.eigh
    # shift by the ground energy so large beta does not overflow
    w = np.exp(-spec.beta * (evals - evals[0]))
    w /= w.sum()
    rho = (evecs * w) @ evecs.conj().T
    return DensityMatrix.from_matrix(rho)


def partition_function(spec: GibbsSpec) -> float:
    evals, _ = spec.H.eigh
    return float(np.sum(np.exp(-spec.beta * evals)))


def free_energy(rho: DensityMatrix, H: HamiltonianTerms, beta: float) -> float:
    """``Tr(H rho) - S(rho) / beta``."""
    if beta <= 0:
        raise ValueError("free energy needs beta > 0 (entropy weight 1/beta)")
    energy = float(np.real(np.trace(H.dense @ rho.matrix)))
    return energy - von_neumann_entropy(rho) / beta


# ---------------------------------------------------------------------------
# ansatz


@dataclass(frozen=True, eq=False)
class TFDAnsatz:
    n: int
    layers_A: int = 2
    layers_S: int = 3
    params_theta: np.ndarray | None = None
    params_phi: np.ndarray | None = None

    def __post_init__(self):
        theta = np.zeros(self.n_theta) if self.params_theta is None else np.asarray(self.params_theta, float)
        phi = np.zeros(self.n_phi) if self.params_phi is None else np.asarray(self.params_phi, float)
        if theta.shape != (self.n_theta,) or phi.shape != (self.n_phi,):
            raise ValueError(f"expected {self.n_theta} theta and {self.n_phi} phi parameters")
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(phi))):
            raise ValueError("ansatz angles must be finite")
        object.__setattr__(self, "params_theta", theta)
        object.__setattr__(self, "params_phi", phi)

    @property
    def n_theta(self) -> int:
        return self.layers_A * self.n

    @property
    def n_phi(self) -> int:
        return 2 * self.layers_S * self.n

    def with_params(self, theta, phi) -> "TFDAnsatz":
        return TFDAnsatz(self.n, self.layers_A, self.layers_S, theta, phi)

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return x[: self.n_theta], x[self.n_theta:]


def _cnot_ladder(sites: list[int]) -> list[Gate]:
    return [Gate.local(CNOT, (a, b), "CNOT") for a, b in zip(sites, sites[1:])]


def register_a_gates(n: int, layers: int, theta: np.ndarray, offset: int = 0) -> list[Gate]:
    """Layers of RY rotations followed by a CNOT ladder (real amplitudes)."""
    gates = []
    sites = list(range(offset, offset + n))
    for layer in range(layers):
        for k, s in enumerate(sites):
            gates.append(Gate.local(ry(theta[layer * n + k]), (s,), "RY"))
        gates.extend(_cnot_ladder(sites))
    return gates


def register_s_gates(n: int, layers: int, phi: np.ndarray, offset: int = 0) -> list[Gate]:
    """Layers of RY and RZ rotations followed by a CNOT ladder."""
    gates = []
    sites = list(range(offset, offset + n))
    for layer in range(layers):
        base = 2 * n * layer
        for k, s in enumerate(sites):
            gates.append(Gate.local(ry(phi[base + 2 * k]), (s,), "RY"))
            gates.append(Gate.local(rz(phi[base + 2 * k + 1]), (s,), "RZ"))
        gates.extend(_cnot_ladder(sites))
    return gates


def tfd_circuit(ansatz: TFDAnsatz) -> Circuit:
    n = ansatz.n
    gates = register_a_gates(n, ansatz.layers_A, ansatz.params_theta)
    gates += [Gate.local(CNOT, (i, n + i), "CNOT") for i in range(n)]
    gates += register_s_gates(n, ansatz.layers_S, ansatz.params_phi, offset=n)
    return Circuit(2 * n, tuple(gates))


def tfd_state(ansatz: TFDAnsatz) -> PureState:
    return simulate_pure(tfd_circuit(ansatz), PureState.basis(0, 2 * ansatz.n))


def register_a_populations(state: PureState, n: int) -> np.ndarray:
    """Computational-basis populations of register A (sites ``0..n-1``)."""
    amps = state.amplitudes.reshape(2**n, -1)
    return np.sum(np.abs(amps) ** 2, axis=1)


def system_state(state: PureState, n: int) -> DensityMatrix:
    """Reduced state of register S."""
    return DensityMatrix.from_matrix(_reduced_s(state, n))


def _reduced_s(state: PureState, n: int) -> np.ndarray:
    amps = state.amplitudes.reshape(2**n, 2**n)  # (A, S)
    return amps.T @ amps.conj()


# ---------------------------------------------------------------------------
# optimization

Minimizer = Callable[[Callable[[np.ndarray], float], np.ndarray, int], np.ndarray]


@dataclass
class OptimizerConfig:
    max_evals: int = 20000
    restarts: int = 4
    tol: float = 1e-9
    seed: int = 1234
    population_shots: int | None = None  # None: exact A-register populations


@dataclass
class VQAResult:
    optimal_theta: np.ndarray
    optimal_phi: np.ndarray
    free_energy: float
    fidelity_to_exact: float
    iterations: int
    cost_history: list[float] = field(default_factory=list)
    converged: bool = True
    beta: float = 1.0
    delta: float | None = None
    ansatz: TFDAnsatz | None = None

    def prepared_state(self) -> PureState:
        return tfd_state(self.ansatz.with_params(self.optimal_theta, self.optimal_phi))

    def to_json(self) -> str:
        doc = {
            "beta": self.beta,
            "delta": self.delta,
            "params": {"theta": self.optimal_theta.tolist(), "phi": self.optimal_phi.tolist()},
            "free_energy": self.free_energy,
            "fidelity": self.fidelity_to_exact,
            "iterations": self.iterations,
        }
        return json.dumps(doc, indent=2)


def tfd_cost(ansatz: TFDAnsatz, H: HamiltonianTerms, beta: float,
             rng: np.random.Generator | None = None, shots: int | None = None) -> float:
    """Free-energy cost with the entropy taken from register-A populations."""
    state = tfd_state(ansatz)
    n = ansatz.n
    p = register_a_populations(state, n)
    if shots is not None:
        p = rng.multinomial(shots, p / p.sum()) / shots
    rho_s = _reduced_s(state, n)
    energy = float(np.real(np.trace(H.dense @ rho_s)))
    return energy - shannon_entropy(p) / beta


def nelder_mead(cost, x0: np.ndarray, budget: int, tol: float = 1e-9) -> tuple[np.ndarray, bool]:
    res = scipy_minimize(cost, x0, method="Nelder-Mead",
                         options={"maxfev": budget, "xatol": 1e-8, "fatol": tol, "adaptive": True})
    return res.x, bool(res.success)


def vqa_optimize(spec: GibbsSpec, ansatz: TFDAnsatz, config: OptimizerConfig | None = None,
                 minimizer: Minimizer | None = None) -> VQAResult:
    """Minimize the TFD free-energy cost with random-restart simplex search.

    ``minimizer(cost, x0, budget) -> x`` replaces the default local search.
    """
    config = config or OptimizerConfig()
    if spec.beta <= 0:
        raise ValueError("variational preparation needs beta > 0")
    rng = np.random.default_rng(config.seed)
    history: list[float] = []
    best = [np.inf]

    def cost(x):
        theta, phi = ansatz.split(np.asarray(x))
        val = tfd_cost(ansatz.with_params(theta, phi), spec.H, spec.beta, rng, config.population_shots)
        best[0] = min(best[0], val)
        history.append(best[0])
        return val

    n_params = ansatz.n_theta + ansatz.n_phi
    per_restart = max(1, config.max_evals // max(1, config.restarts))
    best_x, best_val, converged = None, np.inf, False
    for k in range(config.restarts):
        if k == 0:
            x0 = np.concatenate([np.full(ansatz.n_theta, np.pi / 4), rng.uniform(-0.1, 0.1, ansatz.n_phi)])
        else:
            x0 = rng.uniform(-np.pi, np.pi, n_params)
        if minimizer is None:
            x, ok = nelder_mead(cost, x0, per_restart, config.tol)
        else:
            x, ok = np.asarray(minimizer(cost, x0, per_restart)), True
        val = cost(x)
        if val < best_val:
            best_x, best_val, converged = x, val, ok
        log.debug("restart %d: cost %.12g", k, val)

    theta, phi = ansatz.split(best_x)
    final = ansatz.with_params(theta, phi)
    state = tfd_state(final)
    rho_s = DensityMatrix.from_matrix(_reduced_s(state, ansatz.n))
    fid = uhlmann_fidelity(rho_s, exact_gibbs(spec))
    params = spec.H.params
    return VQAResult(theta, phi, float(free_energy(rho_s, spec.H, spec.beta)), fid,
                     len(history), history, converged, spec.beta,
                     None if params is None else params.delta, final)
