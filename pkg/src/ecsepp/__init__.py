"""Entangled coherent states vs photon pairs under photon loss and detector inefficiency."""

__version__ = "0.1.0"

from .analytic import (  # noqa: F401
    QuadratureSpec,
    avg_fidelity_ecs,
    closed_form_F_ecs,
    closed_form_P_ecs,
    epp_metrics,
    success_prob_ecs,
    threshold_r,
)
from .channels import LossParams, ecs_decohered, epp_decohered  # noqa: F401
from .entanglement import negativity  # noqa: F401
from .oracle import ProtocolConfig, simulate_ecs, simulate_epp  # noqa: F401
