"""Training-free graph-based few-shot segmentation.

Point selection from positive/negative similarity maps, point-mask
clustering over a coverage graph, and post-gating filters, operating on
feature tensors and pluggable mask providers.
"""

from .alignment import (CorrelationSplit, PointSet, SimilarityMaps,
                        build_similarity_maps, compute_correlation,
                        grid_to_image, select_points)
from .clustering import (Clustering, CoverageGraph, build_coverage_graph,
                         strongly_connected_components,
                         weakly_connected_components)
from .container import Tensor, read_container, write_container
from .episode import BinaryMask, Episode, FeatureMap, load_episode, load_manifest
from .errors import ConfigError, PipelineError, ProviderError
from .gating import (GateConfig, GateOutcome, PolarityMap, filter_overshooting,
                     mask_growth, mask_positive_score, merge_prediction,
                     polarity_map, self_consistency_scores)
from .pipeline import EpisodeResult, Report, evaluate, run_episode
from .providers import (DumpProvider, ExecProvider, MaskProvider, MaskSet,
                        OracleProvider, ProviderSpec, generate_masks,
                        make_provider)
from .resample import mask_to_grid, resize_prediction
from .synthetic import (Scene, generate_scene, make_episode, oracle_masks,
                        render_features)

__version__ = "0.1.0"
