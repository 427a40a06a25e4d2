"""Hybrid K-means with swap-test distances, and a feature-map kernel SVM."""

__version__ = "0.1.0"

from .data import BlobSpec, Dataset, FeatureScaler, load_builtin, load_csv, make_blobs, scale_features, subsample_split
from .distance import classical_distance_oracle, quantum_distance, swap_test
from .encoding import amplitude_encode, build_encoded_pair
from .kmeans import KMeansConfig, QuantumKMeans, cluster_accuracy, fit_kmeans
from .qkernel import QuantumKernel, kernel_entry, kernel_gram
from .svm import KernelSVC, fit_ovr, predict_ovr, solve_dual

__all__ = [
    "BlobSpec",
    "Dataset",
    "FeatureScaler",
    "KMeansConfig",
    "KernelSVC",
    "QuantumKMeans",
    "QuantumKernel",
    "amplitude_encode",
    "build_encoded_pair",
    "classical_distance_oracle",
    "cluster_accuracy",
    "fit_kmeans",
    "fit_ovr",
    "kernel_entry",
    "kernel_gram",
    "load_builtin",
    "load_csv",
    "make_blobs",
    "predict_ovr",
    "quantum_distance",
    "scale_features",
    "solve_dual",
    "subsample_split",
    "swap_test",
]
