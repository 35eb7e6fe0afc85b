"""Unsupervised UAV trajectory extraction from multi-LiDAR frame sequences."""

from .cluster import Cluster, DbscanParams, WindowSlice, dbscan, extract_global_clusters, slice_windows
from .config import PipelineConfig
from .denoise import DenoiseParams, density_filter, superimpose
from .evaluation import EvalReport, evaluate, mse, sda
from .geometry import Aabb, PointCloud, Sensor, TimedPoint, VoxelSet, voxel_iou, voxelize
from .ingest import GroundTruth, SequenceCloud, load_ground_truth, load_sequence, save_trajectory
from .pipeline import detect
from .score import ScoreBreakdown, ScoringConfig, score_cluster, select_uav_cluster
from .trajectory import Trajectory, interpolate, prefilter, spline_eval

__version__ = "0.1.0"
