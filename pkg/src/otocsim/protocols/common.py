"""Shared plumbing for the three measurement protocols."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..circuits import Circuit, Gate, product_input
from ..dynamics import TrotterConfig, evolution_circuit
from ..oracle import OTOCSpec
from ..qcore import DensityMatrix, PureState, QuantumState, permute_qubits, reduce_support
from ..thermal import GibbsSpec, exact_gibbs


@dataclass
class EstimateRecord:
    protocol: str
    delta: float | None
    beta: float
    tau: float
    mean_C: float
    std_C: float
    shots: int
    reps: int
    seed: int
    oracle_C: float | None = None
    metadata: dict = field(default_factory=dict)
    per_rep: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.std_C < 0:
            raise ValueError("std_C must be non-negative")
        if self.per_rep and len(self.per_rep) != self.reps:
            raise ValueError("per-rep values disagree with reps")


def sample_std(values) -> float:
    """Sample standard deviation with denominator ``len - 1`` (0 for one value)."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1))


def rep_seed(seed: int, rep: int, stream: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(rep), int(stream)])


def evolution_label(trotter: TrotterConfig | None) -> str:
    return "exact-gate" if trotter is None else trotter.describe()


def delta_of(spec: OTOCSpec) -> float | None:
    params = spec.H.params
    return None if params is None else params.delta


def system_input(spec: OTOCSpec, input_state: QuantumState | None) -> tuple[QuantumState, int]:
    """System input and the number of idle purification qubits appended after it.

    ``input_state`` may be None (exact Gibbs state), an ``n``-qubit density
    matrix, or a ``2n``-qubit purification laid out as (register A, system)
    like the TFD circuit output.
    """
    n = spec.n
    if input_state is None:
        return exact_gibbs(GibbsSpec(spec.H, spec.beta)), 0
    if isinstance(input_state, DensityMatrix):
        if input_state.n_qubits != n:
            raise ValueError("density-matrix input must cover the system only")
        return input_state, 0
    if isinstance(input_state, PureState):
        if input_state.n_qubits == n:
            return input_state, 0
        if input_state.n_qubits != 2 * n:
            raise ValueError("purified input must have 2n qubits")
        order = list(range(n, 2 * n)) + list(range(n))
        return permute_qubits(input_state, order), n
    raise TypeError(f"unsupported input state {type(input_state).__name__}")


full_input = product_input


def operator_gate(op: np.ndarray, n: int, offset: int, label: str) -> Gate:
    sites, small = reduce_support(op, n)
    return Gate.local(small, [s + offset for s in sites], label)


def evolution(spec: OTOCSpec, trotter: TrotterConfig | None, width: int, offset: int) -> tuple[Circuit, Circuit]:
    """``U(tau)`` and its exact circuit inverse on the system block."""
    fwd = evolution_circuit(spec.H, spec.tau, trotter).embedded(width, offset)
    return fwd, fwd.inverse()


def richardson_zero(thetas, values) -> float:
    """Extrapolate ``values(theta)`` to ``theta -> 0`` with a polynomial in ``theta^2``."""
    x = np.asarray(thetas, dtype=float) ** 2
    y = np.asarray(values, dtype=float)
    if x.size < 2:
        raise ValueError("extrapolation needs at least two theta values")
    # Lagrange interpolation evaluated at x = 0
    total = 0.0
    for i in range(x.size):
        w = 1.0
        for j in range(x.size):
            if j != i:
                w *= x[j] / (x[j] - x[i])
        total += w * y[i]
    return float(total)
