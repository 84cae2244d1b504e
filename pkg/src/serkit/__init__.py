"""Speech emotion recognition from 155 handcrafted features with a three-model CNN ensemble."""

from .audio import AudioClip, decode_wav, fix_length, resample
from .augment import AugmentSpec, add_awgn, pitch_shift, time_stretch
from .dataset import LabelMap, Manifest, load_manifest, make_split, scan_dataset
from .ensemble import EnsembleWeights, WeightedAverageEnsemble, grid_search
from .errors import SerError
from .features import FeatureExtractor, Normalizer, extract
from .metrics import evaluate
from .models import SERClassifier, build

__version__ = "0.1.0"

__all__ = [
    "AudioClip", "AugmentSpec", "EnsembleWeights", "FeatureExtractor", "LabelMap", "Manifest",
    "Normalizer", "SERClassifier", "SerError", "WeightedAverageEnsemble", "add_awgn", "build",
    "decode_wav", "evaluate", "extract", "fix_length", "grid_search", "load_manifest",
    "make_split", "pitch_shift", "resample", "scan_dataset", "time_stretch",
]
