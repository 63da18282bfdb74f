"""Probabilistic trajectory models of aircraft in terminal airspace.

Pipeline: parse radar-style position measurements, reconstruct smooth
fixed-length trajectories by banded regularized least squares, cluster them
with K-means++, and fit a low-rank Gaussian mixture supporting sampling,
cluster posteriors, conditional prediction, and held-out evaluation.
"""

from ._kernels import NUMBA_ENABLED
from .cluster import ClusterStats, cluster_stats, devectorize, kmeans_pp, vectorize
from .config import PipelineConfig, default_airport, load_config
from .evaluate import (
    KinematicSeries,
    derive_kinematics,
    generation_score,
    histogram_kl,
    prediction_rms,
    select_hyperparams,
    train_test_split,
)
from .geo import (
    AirportReference,
    GeodeticPosition,
    ecef_to_enu,
    ecef_to_wgs84,
    enu_to_ecef,
    enu_to_wgs84,
    in_terminal_airspace,
    wgs84_to_ecef,
    wgs84_to_enu,
)
from .gmm import (
    ClusterModel,
    ConditionalGaussian,
    Posterior,
    TrajectoryModel,
    condition,
    fit_model,
    load_model,
    log_density,
    posterior,
    posterior_clusters,
    predict,
    sample,
    sample_posterior,
    save_model,
    to_model_frame,
    truncate_covariance,
)
from .ingest import (
    RawTrack,
    build_tracks,
    canonicalize,
    classify_track,
    parse_measurements,
    read_tracks,
    scale,
    split_tracks,
    unscale,
    write_tracks,
)
from .reconstruct import (
    ReconstructionProblem,
    SingularSystemError,
    build_difference_operators,
    build_targets,
    filter_and_fit,
    read_trajectories,
    select_common_length,
    select_regularization,
    solve_reconstruction,
    write_trajectories,
)
from .synth import GroundTruthSpec, emit_radar_stream, make_ground_truth

__version__ = "0.1.0"
