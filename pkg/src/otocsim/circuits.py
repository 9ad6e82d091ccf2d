"""Circuit IR, statevector and density-matrix backends, and shot sampling.

Measurements are always deferred to the end of the circuit.  A measured
outcome bit ``0`` means the +1 eigenvalue of the measured Pauli, ``1`` the
-1 eigenvalue, whatever the basis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qcore import (
    H_GATE,
    PAULIS,
    S_GATE,
    DensityMatrix,
    PauliString,
    PureState,
    QuantumState,
    dagger,
    herm_fn,
    is_hermitian,
    is_unitary,
)

# Basis change applied before a Z readout.  X: H maps |+>,|-> to |0>,|1>.
# Y: S^dagger then H maps |+i>,|-i> to |0>,|1>.
BASIS_ROTATIONS = {
    "Z": np.eye(2, dtype=complex),
    "X": H_GATE,
    "Y": H_GATE @ dagger(S_GATE),
}


@dataclass(frozen=True, eq=False)
class Gate:
    """A unitary acting on ``sites`` (matrix ordered like ``sites``).

    Use the :meth:`local`, :meth:`controlled` and :meth:`coupling`
    constructors; ``kind`` and ``params`` only record provenance.
    """

    matrix: np.ndarray
    sites: tuple[int, ...]
    label: str = ""
    kind: str = "local"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        sites = tuple(int(s) for s in self.sites)
        if len(set(sites)) != len(sites):
            raise ValueError(f"gate {self.label!r} repeats a site")
        if m.shape != (2 ** len(sites),) * 2:
            raise ValueError(f"gate {self.label!r}: matrix shape {m.shape} does not match {len(sites)} sites")
        if not is_unitary(m):
            raise ValueError(f"gate {self.label!r} is not unitary")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "sites", sites)

    @classmethod
    def local(cls, matrix, sites: Sequence[int], label: str = "U") -> "Gate":
        return cls(matrix, tuple(sites), label, "local")

    @classmethod
    def controlled(cls, control: int, matrix, targets: Sequence[int], control_value: int = 1, label: str = "cU") -> "Gate":
        """``|c><c| (x) U + |1-c><1-c| (x) I`` on ``(control, *targets)``."""
        u = np.asarray(matrix, dtype=complex)
        on = np.zeros((2, 2), dtype=complex)
        on[control_value, control_value] = 1.0
        off = np.eye(2, dtype=complex) - on
        full = np.kron(on, u) + np.kron(off, np.eye(u.shape[0]))
        return cls(full, (control, *targets), label, "controlled",
                   {"control_value": control_value})

    @classmethod
    def coupling(cls, axis, angle: float, ancilla: int, targets: Sequence[int],
                 ancilla_pauli: str = "Y", label: str = "S") -> "Gate":
        """``exp(-i angle A (x) P)`` with ``A`` on ``targets`` and Pauli ``P`` on ``ancilla``.

        Sites are ordered ``(*targets, ancilla)`` so the matrix reads ``A (x) P``.
        """
        a = np.asarray(axis, dtype=complex)
        if not is_hermitian(a):
            raise ValueError("coupling axis must be Hermitian")
        gen = np.kron(a, PAULIS[ancilla_pauli])
        mat = herm_fn(gen, lambda x: np.exp(-1j * angle * x))
        return cls(mat, (*targets, ancilla), label, "coupling",
                   {"angle": float(angle), "ancilla_pauli": ancilla_pauli})

    def inverse(self) -> "Gate":
        return Gate(dagger(self.matrix), self.sites, self.label + "^dg", self.kind, dict(self.params))

    def shifted(self, offset: int) -> "Gate":
        return Gate(self.matrix, tuple(s + offset for s in self.sites), self.label, self.kind, dict(self.params))


@dataclass(frozen=True, eq=False)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    measurements: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        gates = tuple(self.gates)
        meas = tuple((int(s), str(b)) for s, b in self.measurements)
        for g in gates:
            if max(g.sites) >= self.n_qubits or min(g.sites) < 0:
                raise ValueError(f"gate {g.label!r} touches a site outside {self.n_qubits} qubits")
        sites = [s for s, _ in meas]
        if len(set(sites)) != len(sites):
            raise ValueError("measurements must reference distinct sites")
        for s, b in meas:
            if not 0 <= s < self.n_qubits:
                raise ValueError(f"measured site {s} out of range")
            if b not in BASIS_ROTATIONS:
                raise ValueError(f"unknown measurement basis {b!r}")
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "measurements", meas)

    def __len__(self):
        return len(self.gates)

    def then(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ValueError("cannot concatenate circuits of different width")
        return Circuit(self.n_qubits, self.gates + other.gates, self.measurements + other.measurements)

    def append(self, *gates: Gate) -> "Circuit":
        return Circuit(self.n_qubits, self.gates + gates, self.measurements)

    def inverse(self) -> "Circuit":
        """Reversed gate list with each gate daggered; measurements dropped."""
        return Circuit(self.n_qubits, tuple(g.inverse() for g in reversed(self.gates)))

    def embedded(self, n_qubits: int, offset: int = 0) -> "Circuit":
        """Same circuit placed on a wider register, site ``k`` -> ``k + offset``."""
        if offset + self.n_qubits > n_qubits:
            raise ValueError("target register too small")
        return Circuit(n_qubits, tuple(g.shifted(offset) for g in self.gates),
                       tuple((s + offset, b) for s, b in self.measurements))

    def measure(self, *specs: tuple[int, str]) -> "Circuit":
        return Circuit(self.n_qubits, self.gates, self.measurements + tuple(specs))

    def without_measurements(self) -> "Circuit":
        return Circuit(self.n_qubits, self.gates)

    def unitary(self) -> np.ndarray:
        """Dense unitary of the gate list (small circuits only)."""
        dim = 2**self.n_qubits
        cols = np.eye(dim, dtype=complex).reshape([2] * self.n_qubits + [dim])
        for g in self.gates:
            cols = _apply_tensor(cols, g.matrix, g.sites)
        return cols.reshape(dim, dim)


@dataclass(frozen=True)
class ShotResult:
    counts: dict[str, int]
    shots: int
    seed: int | None
    sites: tuple[int, ...] = ()

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts do not sum to shots")

    def expectation(self, position: int = 0) -> float:
        """Sample mean of the +/-1 eigenvalue at one measured position."""
        total = sum(c if b[position] == "0" else -c for b, c in self.counts.items())
        return total / self.shots


# ---------------------------------------------------------------------------
# kernels


def _apply_tensor(t: np.ndarray, matrix: np.ndarray, sites: Sequence[int]) -> np.ndarray:
    """Apply ``matrix`` to the qubit axes ``sites`` of tensor ``t``."""
    k = len(sites)
    u = matrix.reshape([2] * (2 * k))
    out = np.tensordot(u, t, axes=(list(range(k, 2 * k)), list(sites)))
    return np.moveaxis(out, list(range(k)), list(sites))


def _check_input(circuit: Circuit, n: int):
    if n != circuit.n_qubits:
        raise ValueError(f"input has {n} qubits, circuit has {circuit.n_qubits}")


def simulate_pure(circuit: Circuit, state: PureState) -> PureState:
    _check_input(circuit, state.n_qubits)
    n = circuit.n_qubits
    t = state.amplitudes.reshape([2] * n)
    for g in circuit.gates:
        t = _apply_tensor(t, g.matrix, g.sites)
    vec = t.reshape(-1)
    # renormalize away accumulated round-off; the norm is preserved by construction
    return PureState(vec / np.linalg.norm(vec))


def simulate_density(circuit: Circuit, rho: DensityMatrix) -> DensityMatrix:
    _check_input(circuit, rho.n_qubits)
    n = circuit.n_qubits
    t = rho.matrix.reshape([2] * (2 * n))
    for g in circuit.gates:
        t = _apply_tensor(t, g.matrix, g.sites)
        t = _apply_tensor(t, g.matrix.conj(), [n + s for s in g.sites])
    m = t.reshape(2**n, 2**n)
    m = 0.5 * (m + dagger(m))
    return DensityMatrix(m / np.trace(m).real, check_psd=False)


def simulate(circuit: Circuit, state: QuantumState) -> QuantumState:
    if isinstance(state, PureState):
        return simulate_pure(circuit, state)
    return simulate_density(circuit, state)


def readout_distribution(state: QuantumState, measurements: Sequence[tuple[int, str]]) -> dict[str, float]:
    """Exact Born distribution of the listed measurements on ``state``."""
    if not measurements:
        raise ValueError("no measurements declared")
    n = state.n_qubits
    sites = [s for s, _ in measurements]
    rest = [s for s in range(n) if s not in sites]
    if isinstance(state, PureState):
        t = state.amplitudes.reshape([2] * n)
        for s, b in measurements:
            if b != "Z":
                t = _apply_tensor(t, BASIS_ROTATIONS[b], [s])
        probs = np.abs(t) ** 2
        probs = probs.transpose(sites + rest).reshape(2 ** len(sites), -1).sum(axis=1)
    else:
        t = state.matrix.reshape([2] * (2 * n))
        for s, b in measurements:
            if b != "Z":
                r = BASIS_ROTATIONS[b]
                t = _apply_tensor(t, r, [s])
                t = _apply_tensor(t, r.conj(), [n + s])
        # diagonal of the rotated matrix
        diag = np.einsum("ii->i", t.reshape(2**n, 2**n)).real.reshape([2] * n)
        probs = diag.transpose(sites + rest).reshape(2 ** len(sites), -1).sum(axis=1)
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    k = len(sites)
    return {format(i, f"0{k}b"): float(p) for i, p in enumerate(probs)}


def outcome_distribution(circuit: Circuit, state: QuantumState) -> dict[str, float]:
    return readout_distribution(simulate(circuit, state), circuit.measurements)


def sample_distribution(dist: dict[str, float], shots: int, seed: int | np.random.SeedSequence | None) -> dict[str, int]:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    keys = sorted(dist)
    p = np.array([dist[k] for k in keys])
    draws = np.random.default_rng(seed).multinomial(shots, p / p.sum())
    return {k: int(c) for k, c in zip(keys, draws) if c}


def sample(circuit: Circuit, state: QuantumState, shots: int, seed: int | None) -> ShotResult:
    """Draw ``shots`` outcomes of the circuit's measurements."""
    if not circuit.measurements:
        raise ValueError("circuit declares no measurements")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    dist = outcome_distribution(circuit, state)
    counts = sample_distribution(dist, shots, seed)
    return ShotResult(counts, shots, seed, tuple(s for s, _ in circuit.measurements))


def apply_pauli(state: QuantumState, pauli: PauliString) -> np.ndarray:
    """``P`` applied from the left; returns a raw vector or matrix."""
    n = state.n_qubits
    if pauli.n_qubits != n:
        raise ValueError("Pauli word length differs from register size")
    if isinstance(state, PureState):
        t = state.amplitudes.reshape([2] * n)
        shape = (2**n,)
    else:
        t = state.matrix.reshape([2] * (2 * n))
        shape = (2**n, 2**n)
    for s in pauli.support():
        t = _apply_tensor(t, PAULIS[pauli.word[s]], [s])
    return pauli.coefficient * t.reshape(shape)


def expectation_state(state: QuantumState, observable: Sequence[PauliString] | PauliString) -> complex:
    if isinstance(observable, PauliString):
        observable = [observable]
    total = 0.0j
    for p in observable:
        out = apply_pauli(state, p)
        if isinstance(state, PureState):
            total += np.vdot(state.amplitudes, out)
        else:
            total += np.trace(out)
    return complex(total)


def expectation_exact(circuit: Circuit, state: QuantumState, observable) -> complex:
    """``Tr(O rho_out)`` for a Pauli sum ``O`` (infinite-shot limit)."""
    return expectation_state(simulate(circuit, state), observable)


def single_pauli(n: int, site: int, letter: str) -> PauliString:
    word = ["I"] * n
    word[site] = letter
    return PauliString("".join(word))


def plus_state(n: int = 1) -> PureState:
    return PureState(np.full(2**n, 2 ** (-n / 2), dtype=complex))


def product_input(ancillas: PureState, system: QuantumState) -> QuantumState:
    """Ancilla register (leftmost) tensored with the system input."""
    if isinstance(system, PureState):
        return ancillas.tensor(system)
    return ancillas.to_density().tensor(system)


__all__ = [
    "BASIS_ROTATIONS",
    "Circuit",
    "Gate",
    "ShotResult",
    "expectation_exact",
    "expectation_state",
    "outcome_distribution",
    "plus_state",
    "product_input",
    "readout_distribution",
    "sample",
    "sample_distribution",
    "simulate",
    "simulate_density",
    "simulate_pure",
    "single_pauli",
]
