"""MC-DS-CDMA uplink simulation with ZCZ codes and blind CFO estimation."""

__version__ = "0.1.0"

from .config import SystemConfig, UserAssignment, make_assignments
from .estimator import PowerSpectrumCFOEstimator, estimate_cfo, power_spectrum, spectral_template
from .detector import MLDetector, MMSEDetector, ml_detect, mmse_detect
from .zcz import ZczFamily, generate_zcz, verify_zcz

__all__ = [
    "__version__",
    "SystemConfig",
    "UserAssignment",
    "make_assignments",
    "PowerSpectrumCFOEstimator",
    "estimate_cfo",
    "power_spectrum",
    "spectral_template",
    "MLDetector",
    "MMSEDetector",
    "ml_detect",
    "mmse_detect",
    "ZczFamily",
    "generate_zcz",
    "verify_zcz",
]
