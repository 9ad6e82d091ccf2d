"""Weak-measurement protocol: four ancilla-coupled measurements of tunable strength.

Probe qubits v, w, v', w' sit on sites 0..3 and the system on ``4..3+n``.
Each probe starts in |+> and couples through ``exp(-i (phi/2) A (x) Y)``.
Reading the probe in Z gives Kraus operators on the system

    bit 0 -> (cos(phi/2) - sin(phi/2) A) / sqrt(2)
    bit 1 -> (cos(phi/2) + sin(phi/2) A) / sqrt(2)

so outcome label ``a = 1 - bit`` gives ``M_a = (cos + (-1)^a sin A) / sqrt(2)``,
whose modified eigenvalue is ``(-1)^a / sin(phi)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..circuits import Circuit, Gate, plus_state, readout_distribution, sample_distribution, simulate
from ..dynamics import TrotterConfig
from ..oracle import OTOCSpec
from ..qcore import QuantumState, is_hermitian, reduce_support
from .common import (
    EstimateRecord,
    delta_of,
    evolution,
    evolution_label,
    full_input,
    rep_seed,
    sample_std,
    system_input,
)

N_PROBES = 4


def kraus_operator(A: np.ndarray, phi: float, a: int) -> np.ndarray:
    """Measurement operator ``M_a(phi)`` for outcome label ``a`` in {0, 1}."""
    eye = np.eye(A.shape[0], dtype=complex)
    return (np.cos(phi / 2) * eye + (-1) ** a * np.sin(phi / 2) * A) / np.sqrt(2)


def modified_eigenvalue(a: int, phi: float) -> float:
    return (-1) ** a / np.sin(phi)


def outcome_label(bit: int) -> int:
    """Kraus label ``a`` for a probe read as ``bit`` in Z."""
    return 1 - bit


def is_dichotomic(A: np.ndarray, tol: float = 1e-10) -> bool:
    return is_hermitian(A, tol) and np.max(np.abs(A @ A - np.eye(A.shape[0]))) <= tol


@dataclass
class WMMConfig:
    spec: OTOCSpec
    phis: tuple[float, float, float, float] = (np.pi / 2,) * 4
    shots: int = 1000
    reps: int = 10
    seed: int = 0
    trotter: TrotterConfig | None = None
    input_state: QuantumState | None = None

    def __post_init__(self):
        self.phis = tuple(float(p) for p in self.phis)
        if len(self.phis) != N_PROBES:
            raise ValueError("four coupling strengths required")
        if any(not 0 < p <= np.pi / 2 + 1e-15 for p in self.phis):
            raise ValueError("coupling strengths must lie in (0, pi/2]")
        if self.shots < 1 or self.reps < 1:
            raise ValueError("shots and reps must be >= 1")


def wmm_build(cfg: WMMConfig) -> Circuit:
    spec = cfg.spec
    n = spec.n
    if not (is_dichotomic(spec.W0) and is_dichotomic(spec.V0)):
        raise ValueError("weak-measurement protocol needs dichotomic W and V")
    _, extra = system_input(spec, cfg.input_state)
    width = N_PROBES + n + extra
    fwd, bwd = evolution(spec, cfg.trotter, width, N_PROBES)

    def couple(op, phi, probe, label):
        sites, small = reduce_support(op, n)
        return Gate.coupling(small, phi / 2, probe, [s + N_PROBES for s in sites], "Y", label)

    phi_v, phi_w, phi_v2, phi_w2 = cfg.phis
    gates = [couple(spec.V0, phi_v, 0, "S_V")]
    gates += fwd.gates
    gates.append(couple(spec.W0, phi_w, 1, "S_W"))
    gates += bwd.gates
    gates.append(couple(spec.V0, phi_v2, 2, "S_V'"))
    gates += fwd.gates
    gates.append(couple(spec.W0, phi_w2, 3, "S_W'"))
    return Circuit(width, tuple(gates), tuple((k, "Z") for k in range(N_PROBES)))


def probe_distribution(cfg: WMMConfig) -> dict[str, float]:
    """Exact joint distribution of the four probe bits."""
    system, _ = system_input(cfg.spec, cfg.input_state)
    circuit = wmm_build(cfg)
    final = simulate(circuit, full_input(plus_state(N_PROBES), system))
    return readout_distribution(final, circuit.measurements)


def weight(bits: str, phis, alpha: Callable[[int, float], float] = modified_eigenvalue) -> float:
    """Product of modified eigenvalues for one joint probe outcome."""
    out = 1.0
    for b, phi in zip(bits, phis):
        out *= alpha(outcome_label(int(b)), phi)
    return out


def weighted_average(counts_or_probs: dict, phis, total: float = 1.0, alpha=modified_eigenvalue) -> float:
    return sum(v * weight(bits, phis, alpha) for bits, v in counts_or_probs.items()) / total


def wmm_exact(cfg: WMMConfig) -> float:
    """Infinite-shot estimate of the squared commutator."""
    avg = weighted_average(probe_distribution(cfg), cfg.phis)
    return 4.0 * (1.0 - avg)


def wmm_estimate(cfg: WMMConfig) -> EstimateRecord:
    dist = probe_distribution(cfg)
    c_reps, avgs = [], []
    for rep in range(cfg.reps):
        counts = sample_distribution(dist, cfg.shots, rep_seed(cfg.seed, rep))
        avg = weighted_average(counts, cfg.phis, cfg.shots)
        avgs.append(avg)
        c_reps.append(4.0 * (1.0 - avg))
    meta = {
        "evolution": evolution_label(cfg.trotter),
        "phis": "/".join(f"{p:.6g}" for p in cfg.phis),
        "weighted_mean": float(np.mean(avgs)),
    }
    return EstimateRecord("WMM", delta_of(cfg.spec), cfg.spec.beta, cfg.spec.tau,
                          float(np.mean(c_reps)), sample_std(c_reps), cfg.shots, cfg.reps,
                          cfg.seed, None, meta, c_reps)


def povm_residuals(A: np.ndarray, phi: float, rng: np.random.Generator,
                   alpha: Callable[[int, float], float] = modified_eigenvalue) -> dict[str, float]:
    """Max-abs residuals of the measurement-operator identities at one strength.

    ``alpha`` is a hook so a corrupted normalization can be checked to fail.
    """
    d = A.shape[0]
    Ms = [kraus_operator(A, phi, a) for a in (0, 1)]
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    rho /= np.trace(rho)
    B = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    completeness = sum(M.conj().T @ M for M in Ms) - np.eye(d)
    decomposition = sum(alpha(a, phi) * M.conj().T @ M for a, M in enumerate(Ms)) - A
    left = sum(alpha(a, phi) * M @ rho @ M.conj().T for a, M in enumerate(Ms)) - (A @ rho + rho @ A) / 2
    right = sum(alpha(a, phi) * M.conj().T @ B @ M for a, M in enumerate(Ms)) - (B @ A + A @ B) / 2
    return {name: float(np.max(np.abs(m))) for name, m in (
        ("completeness", completeness), ("decomposition", decomposition),
        ("anticommutator_state", left), ("anticommutator_observable", right))}
