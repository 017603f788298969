"""Information-theoretic estimation of how many augmented samples to generate."""
__version__ = "0.1.0"

from .dataset import Dataset, SplitDataset, load_table, split
from .generators import GeneratorSpec, augment
from .icd import IcdScore, icd_score, reference_quantile, snap_true
from .itle import BoundConfig, ItleConfig, ItleReport, run_itle
from .mgee import MgeeConfig, MgeeReport, MgeeRunConfig, run_mgee
from .modeling import ModelProbes, ModelSpec, fit
from .sweep import SweepCurve, exhaustive_sweep, ground_truth

__all__ = [
    "Dataset", "SplitDataset", "load_table", "split", "GeneratorSpec", "augment", "IcdScore",
    "icd_score", "reference_quantile", "snap_true", "BoundConfig", "ItleConfig", "ItleReport",
    "run_itle", "MgeeConfig", "MgeeReport", "MgeeRunConfig", "run_mgee", "ModelProbes", "ModelSpec",
    "fit", "SweepCurve", "exhaustive_sweep", "ground_truth",
]
