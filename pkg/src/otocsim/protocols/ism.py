"""Irreversibility-susceptibility protocol.

Ancilla Q on site 0 in |+>, system on sites ``1..n``.  The circuit is
``U_V(theta)^dagger  W(tau)  U_V(theta)`` with ``U_V(theta) = exp(-i theta Z (x) V)``
and ``W(tau) = U^dagger W U``; Q is read in X.  To second order in theta,

    1 - <X>_out = 2 theta^2 C.

For dichotomic V the dependence on theta is exact,
``1 - <X>_out = (C / 2) sin^2(2 theta)``, which the ``finite-theta``
estimator inverts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..circuits import Circuit, Gate, plus_state, readout_distribution, sample_distribution, simulate
from ..dynamics import TrotterConfig
from ..oracle import OTOCSpec
from ..qcore import (
    DensityMatrix,
    PureState,
    QuantumState,
    is_hermitian,
    is_unitary,
    partial_trace,
    purified_distance,
    reduce_support,
)
from .common import (
    EstimateRecord,
    delta_of,
    evolution,
    evolution_label,
    full_input,
    operator_gate,
    rep_seed,
    richardson_zero,
    sample_std,
    system_input,
)
from .wmm import is_dichotomic

ESTIMATORS = ("limit", "finite-theta")


@dataclass
class ISMConfig:
    spec: OTOCSpec
    theta: float = 0.4
    theta_sweep: Sequence[float] | None = None
    shots: int = 1000
    reps: int = 10
    seed: int = 0
    trotter: TrotterConfig | None = None
    input_state: QuantumState | None = None
    estimator: str = "limit"
    # flag cells whose worst-case per-cell shot noise in C exceeds this
    noise_ceiling: float = 0.5

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if self.theta_sweep is not None:
            self.theta_sweep = tuple(float(t) for t in self.theta_sweep)
            if any(t <= 0 for t in self.theta_sweep):
                raise ValueError("theta sweep values must be positive")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        if self.shots < 1 or self.reps < 1:
            raise ValueError("shots and reps must be >= 1")


def _check(spec: OTOCSpec):
    if not (is_hermitian(spec.W0) and is_unitary(spec.W0)):
        raise ValueError("ISM needs a Hermitian unitary W")
    if not is_hermitian(spec.V0):
        raise ValueError("ISM needs a Hermitian V")


def _coupling(spec: OTOCSpec, theta: float) -> Gate:
    sites, small = reduce_support(spec.V0, spec.n)
    return Gate.coupling(small, theta, 0, [s + 1 for s in sites], "Z", "U_V")


def scrambling_gates(spec: OTOCSpec, trotter: TrotterConfig | None, width: int) -> list[Gate]:
    fwd, bwd = evolution(spec, trotter, width, 1)
    return list(fwd.gates) + [operator_gate(spec.W0, spec.n, 1, "W")] + list(bwd.gates)


def ism_build(cfg: ISMConfig, theta: float | None = None) -> Circuit:
    spec = cfg.spec
    _check(spec)
    theta = cfg.theta if theta is None else theta
    _, extra = system_input(spec, cfg.input_state)
    width = 1 + spec.n + extra
    u_v = _coupling(spec, theta)
    gates = [u_v, *scrambling_gates(spec, cfg.trotter, width), u_v.inverse()]
    return Circuit(width, tuple(gates), ((0, "X"),))


def _ancilla_x_distribution(cfg: ISMConfig, theta: float) -> dict[str, float]:
    system, _ = system_input(cfg.spec, cfg.input_state)
    circuit = ism_build(cfg, theta)
    final = simulate(circuit, full_input(plus_state(1), system))
    return readout_distribution(final, circuit.measurements)


def c_from_x(x_out: float, theta: float, estimator: str = "limit") -> float:
    """Squared commutator from the ancilla's final ``<X>`` (input ``<X>`` = 1)."""
    if estimator == "finite-theta":
        return 2.0 * (1.0 - x_out) / math.sin(2 * theta) ** 2
    return (1.0 - x_out) / (2.0 * theta**2)


def _estimator_for(cfg: ISMConfig) -> str:
    if cfg.estimator == "finite-theta" and not is_dichotomic(cfg.spec.V0):
        raise ValueError("finite-theta estimator needs a dichotomic V")
    return cfg.estimator


def ism_exact(cfg: ISMConfig, theta: float | None = None) -> float:
    """Infinite-shot estimate at one coupling strength."""
    theta = cfg.theta if theta is None else theta
    dist = _ancilla_x_distribution(cfg, theta)
    return c_from_x(dist["0"] - dist["1"], theta, _estimator_for(cfg))


def ism_extrapolated(cfg: ISMConfig, thetas: Sequence[float]) -> tuple[float, list[float]]:
    """Exact finite-theta values and their theta -> 0 extrapolation."""
    raw = [ism_exact(cfg, t) for t in thetas]
    return richardson_zero(thetas, raw), raw


def ism_estimate(cfg: ISMConfig) -> EstimateRecord:
    estimator = _estimator_for(cfg)
    thetas = list(cfg.theta_sweep) if cfg.theta_sweep and len(cfg.theta_sweep) >= 2 else [cfg.theta]
    dists = [_ancilla_x_distribution(cfg, t) for t in thetas]
    raw_reps = np.zeros((cfg.reps, len(thetas)))
    limit_reps = np.zeros((cfg.reps, len(thetas)))
    for rep in range(cfg.reps):
        for k, (t, dist) in enumerate(zip(thetas, dists)):
            counts = sample_distribution(dist, cfg.shots, rep_seed(cfg.seed, rep, k))
            x = (counts.get("0", 0) - counts.get("1", 0)) / cfg.shots
            raw_reps[rep, k] = c_from_x(x, t, estimator)
            limit_reps[rep, k] = c_from_x(x, t, "limit")
    meta = {
        "evolution": evolution_label(cfg.trotter),
        "theta": "/".join(f"{t:.6g}" for t in thetas),
        "estimator": estimator,
        "limit_mean_C": float(np.mean(limit_reps[:, 0])),
    }
    if len(thetas) > 1:
        c_reps = [richardson_zero(thetas, row) for row in raw_reps]
        meta["raw_mean_C"] = "/".join(f"{v:.12g}" for v in raw_reps.mean(axis=0))
        meta["extrapolated"] = True
    else:
        c_reps = list(raw_reps[:, 0])
    # worst-case single-cell shot noise of C: per-shot std of X is at most 1
    scale = 2.0 / math.sin(2 * min(thetas)) ** 2 if estimator == "finite-theta" else 1.0 / (2 * min(thetas) ** 2)
    noise = scale / math.sqrt(cfg.shots)
    meta["noise_scale"] = noise
    meta["low_snr"] = bool(noise > cfg.noise_ceiling)
    return EstimateRecord("ISM", delta_of(cfg.spec), cfg.spec.beta, cfg.spec.tau,
                          float(np.mean(c_reps)), sample_std(c_reps), cfg.shots, cfg.reps,
                          cfg.seed, None, meta, [float(c) for c in c_reps])


# ---------------------------------------------------------------------------
# irreversibility route

Channel = Callable[[DensityMatrix], DensityMatrix]

PLUS_MINUS_ENSEMBLE = (
    (0.5, DensityMatrix(np.array([[1, 1], [1, 1]], dtype=complex) / 2)),
    (0.5, DensityMatrix(np.array([[1, -1], [-1, 1]], dtype=complex) / 2)),
)


def ism_channels(cfg: ISMConfig, theta: float | None = None) -> tuple[Channel, Channel]:
    """Process ``L = (D_W (x) 1) o U_V o A_rho`` and recovery ``R = J_S o U_V^dagger``.

    ``L`` maps an ancilla state to the joint (Q, system) state; ``R`` maps it
    back to Q by undoing the coupling, tracing out the system and dephasing
    in the +/- basis.
    """
    spec = cfg.spec
    _check(spec)
    theta = cfg.theta if theta is None else theta
    system, extra = system_input(spec, cfg.input_state)
    if isinstance(system, PureState):
        system = system.to_density()
    width = 1 + spec.n + extra
    u_v = _coupling(spec, theta)
    forward = Circuit(width, (u_v, *scrambling_gates(spec, cfg.trotter, width)))
    undo = Circuit(width, (u_v.inverse(),))

    def process(rho_q: DensityMatrix) -> DensityMatrix:
        return simulate(forward, rho_q.tensor(system))

    def recovery(rho_qs: DensityMatrix) -> DensityMatrix:
        rho_q = partial_trace(simulate(undo, rho_qs), [0]).matrix
        out = np.zeros((2, 2), dtype=complex)
        for _, proj in PLUS_MINUS_ENSEMBLE:
            P = 2 * proj.matrix  # |j><j|
            out += np.real(np.trace(P @ rho_q)) * P
        return DensityMatrix.from_matrix(out)

    return process, recovery


def irreversibility_delta(process: Channel, recovery: Channel,
                          ensemble=PLUS_MINUS_ENSEMBLE) -> float:
    """Root-mean-square purified distance between inputs and recovered outputs."""
    probs = [p for p, _ in ensemble]
    if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
        raise ValueError("ensemble probabilities must be non-negative and sum to 1")
    total = 0.0
    for p, rho in ensemble:
        total += p * purified_distance(rho, recovery(process(rho))) ** 2
    return math.sqrt(total)
