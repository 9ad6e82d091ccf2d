"""Circuit-level OTOC measurement protocols."""
from .common import EstimateRecord, richardson_zero, sample_std
from .ism import (
    ISMConfig,
    c_from_x,
    irreversibility_delta,
    ism_build,
    ism_channels,
    ism_estimate,
    ism_exact,
    ism_extrapolated,
)
from .rtm import RTMConfig, rtm_body, rtm_build, rtm_estimate, rtm_exact
from .wmm import (
    WMMConfig,
    kraus_operator,
    modified_eigenvalue,
    povm_residuals,
    probe_distribution,
    wmm_build,
    wmm_estimate,
    wmm_exact,
)

__all__ = [
    "EstimateRecord", "ISMConfig", "RTMConfig", "WMMConfig",
    "c_from_x", "irreversibility_delta", "ism_build", "ism_channels", "ism_estimate",
    "ism_exact", "ism_extrapolated", "kraus_operator", "modified_eigenvalue",
    "povm_residuals", "probe_distribution", "richardson_zero", "rtm_body", "rtm_build",
    "rtm_estimate", "rtm_exact", "sample_std", "wmm_build", "wmm_estimate", "wmm_exact",
]
