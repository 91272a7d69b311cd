"""Chest X-ray feature extraction and dataset manifest assembly."""

from .export import export_store
from .features import (FEATURE_DIM, ExtractConfig, FeatureExtractor,
                       extract_features)
from .manifest import (DatasetManifest, SourceTable, build_manifest,
                       read_manifest, write_manifest)

__version__ = "0.1.0"

__all__ = [
    "DatasetManifest", "ExtractConfig", "FEATURE_DIM", "FeatureExtractor",
    "SourceTable", "build_manifest", "export_store", "extract_features",
    "read_manifest", "write_manifest",
]
