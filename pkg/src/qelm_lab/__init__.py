"""qelm_lab: a desk-scale laboratory for quantum extreme learning machines
under configurable noise, with error mitigation and uncertainty metrics."""

__version__ = "0.1.0"

from .circuit import (  # noqa: F401
    Circuit,
    Gate,
    append_gate,
    compose,
    fold_to_scale,
    from_text,
    global_fold,
    inverse,
    to_text,
)
from .noise import (  # noqa: F401
    KrausChannel,
    NoiseProfile,
    bundled_profile,
    channel_for_gate,
    load_profile,
    zero_noise_profile,
)
from .simulator import (  # noqa: F401
    DensityMatrix,
    OutcomeDistribution,
    ShotCounts,
    StateVector,
    expectation_z,
    measure_distribution,
    run_ideal,
    run_noisy,
    sample,
)
