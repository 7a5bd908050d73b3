from app.source.pulses import (  # noqa: F401
    PulseTrainConfig,
    pulse_grid,
    pump_envelope,
    pump_phase,
    pump_phase_rate,
    sample_emission_times,
)
from app.source.spdc import (  # noqa: F401
    Origin,
    PairBatch,
    PairRecord,
    PhotonRecord,
    SpdcConfig,
    mean_pairs_per_pulse,
    sample_pair_batch,
    sample_pairs,
)
