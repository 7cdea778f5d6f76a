"""Fault detection, isolation and accommodation for planar consensus networks.

Agent indices are 0-based in this API; scenario documents use 1-based
indices, as in the command-line tool.
"""

import json

from ._core import (
    Error,
    FaultFilter,
    Graph,
    SystemModel,
    ValidationError,
    detectability_index,
    gramian,
    measurement_matrix,
    open_loop_sequence,
    preset_names,
)
from . import _core

__all__ = [
    "Error",
    "FaultFilter",
    "Graph",
    "SystemModel",
    "ValidationError",
    "detectability_index",
    "gramian",
    "measurement_matrix",
    "open_loop_sequence",
    "preset",
    "preset_names",
    "run",
]


def preset(name):
    """Scenario document of a built-in preset."""
    return json.loads(_core.preset(name))


def run(config, out_dir=None, emit_plots=False):
    """Runs a scenario (dict or JSON text) and returns the report as a dict.

    Traces are written when ``out_dir`` is given.
    """
    text = config if isinstance(config, str) else json.dumps(config)
    return json.loads(_core.run_scenario(text, out_dir, emit_plots))
