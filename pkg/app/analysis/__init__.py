from app.analysis.bookkeeping import ComparisonRow, comparison_rows, event_probability  # noqa: F401
from app.analysis.coincidences import (  # noqa: F401
    coincidences_in_window,
    estimate_accidentals,
    subtract_accidentals,
)
from app.analysis.fringe import FringeFit, FringeSample, FringeScan, fit_fringe, periodogram  # noqa: F401
from app.analysis.peaks import find_histogram_peaks  # noqa: F401
from app.analysis.profiles import PulseProfile, visibility_from_profiles  # noqa: F401
