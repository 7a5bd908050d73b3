from app.detection.apd import (  # noqa: F401
    ApdConfig,
    DetectorBank,
    TimeTag,
    apply_dead_time,
    dark_count_batch,
    detect,
    detect_batch,
    generate_dark_counts,
)
from app.detection.tia import (  # noqa: F401
    TIA_BIN_WIDTH,
    CorrelationHistogram,
    TagStreams,
    correlate,
    pair_differences,
    read_tag_dump,
    write_tag_dump,
)
