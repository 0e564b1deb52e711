"""
TSL: temporal sound localisation toolkit.

This package holds the non-neural parts of a temporal sound localisation
pipeline: the event/detection data model, feature-stream alignment and
early fusion, interval Weighted Boxes Fusion for ensembling detectors,
tIoU-based mAP evaluation, synthetic benchmarks and the file formats tying
them together.
"""
__version__ = "0.3.0"

from . import benchmark, config, core, features, formats, fusion, metrics, synthetic  # noqa: F401,E402

__all__ = ["benchmark", "config", "core", "features", "formats", "fusion", "metrics", "synthetic"]
