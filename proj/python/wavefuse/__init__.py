"""Haar wavelet and selective-scan fusion of RGB/infrared feature maps."""

import json

from ._core import (
    Error,
    ScanParams,
    channel_swap,
    dwt2_haar,
    dwt2_multilevel,
    entropy_report,
    hfe,
    idwt2_haar,
    idwt2_multilevel,
    normalized_entropy,
    read_tensor,
    selective_scan,
    set_num_threads,
    ss2d,
    synth_pair,
    write_tensor,
)
from . import _core


def plan_shapes(**config):
    """Shape chain of the forward pass for a run config given as keywords."""
    return _core._plan_shapes(json.dumps(config))


def wave_forward(rgb, ir, **config):
    """Runs the full forward pass with seeded weights; returns the 3 pyramid maps."""
    return _core._wave_forward(rgb, ir, json.dumps(config))


def compare_strategies(pairs, **config):
    """Frequency metrics for each fusion strategy, one dict per strategy."""
    return _core._compare_strategies(list(pairs), json.dumps(config))


__all__ = [
    "Error",
    "ScanParams",
    "channel_swap",
    "compare_strategies",
    "dwt2_haar",
    "dwt2_multilevel",
    "entropy_report",
    "hfe",
    "idwt2_haar",
    "idwt2_multilevel",
    "normalized_entropy",
    "plan_shapes",
    "read_tensor",
    "selective_scan",
    "set_num_threads",
    "ss2d",
    "synth_pair",
    "wave_forward",
    "write_tensor",
]
