"""Rewinding-time (interferometric) measurement of the four-point correlator.

Layout: control qubit C on site 0, system on sites ``1..n`` (plus ``n``
idle purification qubits after the system in purification mode).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..circuits import Circuit, Gate, plus_state, readout_distribution, sample_distribution, simulate
from ..dynamics import TrotterConfig
from ..oracle import OTOCSpec
from ..qcore import QuantumState, is_unitary, reduce_support
from .common import (
    EstimateRecord,
    delta_of,
    evolution,
    evolution_label,
    full_input,
    operator_gate,
    rep_seed,
    sample_std,
    system_input,
)


@dataclass
class RTMConfig:
    spec: OTOCSpec
    shots: int = 1000
    reps: int = 10
    seed: int = 0
    trotter: TrotterConfig | None = None
    input_state: QuantumState | None = None

    def __post_init__(self):
        if self.shots < 1 or self.reps < 1:
            raise ValueError("shots and reps must be >= 1")


def rtm_body(spec: OTOCSpec, trotter: TrotterConfig | None = None, extra: int = 0) -> Circuit:
    """Interferometer gates without readout."""
    n = spec.n
    if not is_unitary(spec.V0):
        raise ValueError("controlled-V needs a unitary V")
    width = 1 + n + extra
    v_sites, v_small = reduce_support(spec.V0, n)
    v_sites = [s + 1 for s in v_sites]
    fwd, bwd = evolution(spec, trotter, width, 1)
    gates = [Gate.controlled(0, v_small, v_sites, control_value=1, label="cV")]
    gates += fwd.gates
    gates.append(operator_gate(spec.W0, n, 1, "W"))
    gates += bwd.gates
    gates.append(Gate.controlled(0, v_small, v_sites, control_value=0, label="ocV"))
    return Circuit(width, tuple(gates))


def rtm_build(cfg: RTMConfig) -> tuple[Circuit, Circuit]:
    """Circuits reading the control qubit in the X and in the Y basis."""
    _, extra = system_input(cfg.spec, cfg.input_state)
    body = rtm_body(cfg.spec, cfg.trotter, extra)
    return body.measure((0, "X")), body.measure((0, "Y"))


def _final_state(cfg: RTMConfig):
    system, extra = system_input(cfg.spec, cfg.input_state)
    body = rtm_body(cfg.spec, cfg.trotter, extra)
    return simulate(body, full_input(plus_state(1), system))


def _pm_mean(dist: dict[str, float] | dict[str, int], total: float = 1.0) -> float:
    return (dist.get("0", 0) - dist.get("1", 0)) / total


def rtm_exact(cfg: RTMConfig) -> complex:
    """Infinite-shot ``<X>_C + i <Y>_C``, i.e. the four-point correlator."""
    final = _final_state(cfg)
    x = _pm_mean(readout_distribution(final, [(0, "X")]))
    y = _pm_mean(readout_distribution(final, [(0, "Y")]))
    return complex(x, y)


def rtm_estimate(cfg: RTMConfig) -> EstimateRecord:
    final = _final_state(cfg)
    dist_x = readout_distribution(final, [(0, "X")])
    dist_y = readout_distribution(final, [(0, "Y")])
    c_reps, re_f, im_f = [], [], []
    for rep in range(cfg.reps):
        x = _pm_mean(sample_distribution(dist_x, cfg.shots, rep_seed(cfg.seed, rep, 0)), cfg.shots)
        y = _pm_mean(sample_distribution(dist_y, cfg.shots, rep_seed(cfg.seed, rep, 1)), cfg.shots)
        re_f.append(x)
        im_f.append(y)
        c_reps.append(2.0 * (1.0 - x))
    meta = {
        "evolution": evolution_label(cfg.trotter),
        "ReF": float(np.mean(re_f)),
        "ImF": float(np.mean(im_f)),
    }
    return EstimateRecord("RTM", delta_of(cfg.spec), cfg.spec.beta, cfg.spec.tau,
                          float(np.mean(c_reps)), sample_std(c_reps), cfg.shots, cfg.reps,
                          cfg.seed, None, meta, c_reps)
