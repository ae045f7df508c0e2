"""Blood detection in hyperspectral images with Gaussian likelihood-ratio detectors."""
from .core import AnnotationMask, HyperCube, Spectrum
from .cube_io import (EnviHeader, SpectralLibrary, parse_envi_header, read_annotation, read_envi,
                      read_spectral_library, write_envi)
from .detect import (GaussianStats, LabeledImage, MatchedFilter, Scenario, ScenarioKind, ScoreMap,
                     estimate_stats, mf_image, mf_score, qd_score, run_scenario, two_stage)
from .errors import ConfigError, DataError, HsiBloodError, NumericError
from .evaluate import (ConfusionMatrix, compare_map, detection_map, pca_project, pr_curve, roc_curve,
                       threshold_at_prevalence)
from .preprocess import BandMask, median_normalize, prepare, reflectance_correct, resample_spectrum
from .synth import SceneSpec, default_scene_spec, generate_scene, sweep_n, sweep_target_size

__version__ = "0.1.0"
