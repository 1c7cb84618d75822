"""High-dimensional panel change-point detection with the double CUSUM."""
__version__ = "0.1.0"

from .config import DetectorConfig  # noqa: E402
from .cusum import DcMode, dc_scan  # noqa: E402
from .dcbs import ChangePointReport, detect  # noqa: E402
from .panel_core import PanelData, ScaledPanel, load_csv, standardize  # noqa: E402

__all__ = [
    "__version__", "DetectorConfig", "DcMode", "dc_scan", "ChangePointReport", "detect",
    "PanelData", "ScaledPanel", "load_csv", "standardize",
]
