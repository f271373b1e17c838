"""looptn: simulator and variational toolkit for a looped two-mode-squeezing
source that emits entangled temporal modes of light."""

__version__ = "0.1.0"

from .fock import (  # noqa: F401
    FockDensity,
    FockState,
    SqueezeParam,
    Su2Param,
    TruncationError,
    apply_loss_channel,
    apply_two_mode_gate,
    build_su2_mode_transform,
    build_two_mode_squeezer,
    partial_trace,
)
