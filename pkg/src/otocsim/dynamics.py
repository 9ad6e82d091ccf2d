"""XXZ chain Hamiltonian, exact propagators and Trotterized evolution circuits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .circuits import Circuit, Gate
from .qcore import PAULIS, PauliString, dagger, embed_local, herm_fn


@dataclass(frozen=True)
class XXZParams:
    n: int
    delta: float
    h: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("XXZ chain needs at least two sites")

    @classmethod
    def tied_field(cls, n: int, delta: float) -> "XXZParams":
        """Field tied to the anisotropy as ``h = (1 - delta) / 2``."""
        return cls(n, delta, (1.0 - delta) / 2.0)


@dataclass(frozen=True, eq=False)
class HamiltonianTerms:
    """Real-weighted sum of Pauli strings with a cached dense matrix."""

    n: int
    terms: tuple[tuple[PauliString, float], ...]
    params: XXZParams | None = field(default=None, compare=False)

    @cached_property
    def dense(self) -> np.ndarray:
        out = np.zeros((2**self.n, 2**self.n), dtype=complex)
        for p, c in self.terms:
            out += c * p.matrix()
        return out

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.dense)

    def bond_terms(self, i: int) -> list[tuple[PauliString, float]]:
        """Two-site terms acting on sites ``(i, i + 1)``."""
        return [(p, c) for p, c in self.terms if p.support() == [i, i + 1]]

    def field_terms(self) -> list[tuple[PauliString, float]]:
        return [(p, c) for p, c in self.terms if len(p.support()) == 1]


def build_xxz(params: XXZParams) -> HamiltonianTerms:
    """Open chain ``-1/4 sum (XX + YY + delta ZZ) - h sum Z``."""
    n = params.n
    terms = []
    for i in range(n - 1):
        for letter, scale in (("X", 1.0), ("Y", 1.0), ("Z", params.delta)):
            word = "I" * i + letter * 2 + "I" * (n - i - 2)
            terms.append((PauliString(word), -0.25 * scale))
    for i in range(n):
        terms.append((PauliString("I" * i + "Z" + "I" * (n - i - 1)), -params.h))
    return HamiltonianTerms(n, tuple(terms), params)


def _dense(H) -> np.ndarray:
    return H.dense if isinstance(H, HamiltonianTerms) else np.asarray(H, dtype=complex)


def exact_propagator(H, tau: float) -> np.ndarray:
    """``exp(-i H tau)`` from the Hermitian eigendecomposition."""
    if not math.isfinite(tau):
        raise ValueError("evolution time must be finite")
    if tau == 0:
        return np.eye(_dense(H).shape[0], dtype=complex)
    if isinstance(H, HamiltonianTerms):
        evals, evecs = H.eigh
        return (evecs * np.exp(-1j * tau * evals)) @ dagger(evecs)
    return herm_fn(_dense(H), lambda x: np.exp(-1j * tau * x))


def heisenberg_op(W0: np.ndarray, H, tau: float) -> np.ndarray:
    """``U^dagger(tau) W0 U(tau)``."""
    W0 = np.asarray(W0, dtype=complex)
    if W0.shape != _dense(H).shape:
        raise ValueError("operator and Hamiltonian dimensions differ")
    U = exact_propagator(H, tau)
    return dagger(U) @ W0 @ U


@dataclass(frozen=True)
class TrotterConfig:
    """Product-formula settings.

    ``steps`` counts Trotter steps per unit of evolution time when
    ``per_unit_time`` is true, otherwise it is the total step count.
    """

    order: int = 2
    steps: float = 4
    per_unit_time: bool = True

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError("Trotter order must be 1 or 2")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")

    def n_steps(self, tau: float) -> int:
        if not self.per_unit_time:
            return int(self.steps)
        # tolerance absorbs grid round-off, e.g. a tau of 1.5000000000000002 at 4 steps
        return max(1, math.ceil(self.steps * abs(tau) - 1e-9))

    def describe(self) -> str:
        unit = "/t" if self.per_unit_time else ""
        return f"trotter(order={self.order},steps={self.steps:g}{unit})"


def _layer_gates(H: HamiltonianTerms, dt: float) -> dict[str, list[Gate]]:
    """Exact exponentials of each commuting group for time ``dt``."""
    layers: dict[str, list[Gate]] = {"even": [], "odd": [], "field": []}
    for i in range(H.n - 1):
        bond = H.bond_terms(i)
        if not bond:
            continue
        hb = sum(c * np.kron(PAULIS[p.word[i]], PAULIS[p.word[i + 1]]) for p, c in bond)
        u = herm_fn(hb, lambda x: np.exp(-1j * dt * x))
        layers["even" if i % 2 == 0 else "odd"].append(Gate.local(u, (i, i + 1), f"bond{i}"))
    for p, c in H.field_terms():
        (s,) = p.support()
        hf = c * PAULIS[p.word[s]]
        u = herm_fn(hf, lambda x: np.exp(-1j * dt * x))
        layers["field"].append(Gate.local(u, (s,), f"field{s}"))
    return layers


def trotter_circuit(H: HamiltonianTerms, tau: float, cfg: TrotterConfig) -> Circuit:
    """Product-formula circuit approximating ``exp(-i H tau)``.

    Groups: even bonds, odd bonds, on-site fields.  Order 1 applies them in
    that order once per step; order 2 uses the symmetric sequence
    even/2, odd/2, field, odd/2, even/2.
    """
    if not math.isfinite(tau):
        raise ValueError("evolution time must be finite")
    if tau == 0:
        return Circuit(H.n)
    steps = cfg.n_steps(tau)
    dt = tau / steps
    if cfg.order == 1:
        full = _layer_gates(H, dt)
        step = full["even"] + full["odd"] + full["field"]
    else:
        half = _layer_gates(H, dt / 2)
        full = _layer_gates(H, dt)
        step = half["even"] + half["odd"] + full["field"] + half["odd"] + half["even"]
    return Circuit(H.n, tuple(step) * steps)


def evolution_circuit(H: HamiltonianTerms, tau: float, trotter: TrotterConfig | None = None) -> Circuit:
    """``U(tau)`` as a circuit: one dense gate when ``trotter`` is None."""
    if trotter is not None:
        return trotter_circuit(H, tau, trotter)
    if tau == 0:
        return Circuit(H.n)
    return Circuit(H.n, (Gate.local(exact_propagator(H, tau), tuple(range(H.n)), "U(tau)"),))


def total_magnetization(n: int) -> np.ndarray:
    return sum(embed_local(PAULIS["Z"], [i], n) for i in range(n))


def trotter_error(H: HamiltonianTerms, tau: float, cfg: TrotterConfig) -> float:
    """Spectral-norm distance between the product formula and the exact propagator."""
    diff = trotter_circuit(H, tau, cfg).unitary() - exact_propagator(H, tau)
    return float(np.linalg.norm(diff, 2))


def trotter_slope(H: HamiltonianTerms, tau: float, order: int, step_counts) -> tuple[float, list[float]]:
    """Fitted exponent of the global error against the step size ``tau / steps``."""
    errors = [trotter_error(H, tau, TrotterConfig(order, k, per_unit_time=False)) for k in step_counts]
    dts = [tau / k for k in step_counts]
    slope = np.polyfit(np.log(dts), np.log(errors), 1)[0]
    return float(slope), errors
