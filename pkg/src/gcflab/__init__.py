"""Numerical laboratory for alpha-Gauss curvature flows.

Closed convex curves and surfaces are evolved in support-function form by
:mod:`gcflab.closed_flow`; convex graphs over bounded domains by
:mod:`gcflab.graph_flow`; translating solutions and their speeds live in
:mod:`gcflab.soliton`.  :mod:`gcflab.diagnostics` turns runs into
deterministic CSV/JSON/SVG artifacts and :mod:`gcflab.cli` binds it all to
the ``gcf-lab`` command.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("gcf-lab")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.0.0"

from .closed_flow import ClosedConfig, run_closed
from .config import FlowConfig, load_config, parse_text
from .diagnostics import CheckSpec, RunReport, write_artifacts
from .errors import GCFError
from .geometry import DomainGrid, DomainSpec, SphereGrid
from .graph_flow import GraphConfig, run_graph
from .soliton import capital_lambda, grim_reaper, lambda_disk, lambda_omega, radial_translator

__all__ = [
    "CheckSpec", "ClosedConfig", "DomainGrid", "DomainSpec", "FlowConfig", "GCFError", "GraphConfig", "RunReport",
    "SphereGrid", "__version__", "capital_lambda", "grim_reaper", "lambda_disk", "lambda_omega", "load_config",
    "parse_text", "radial_translator", "run_closed", "run_graph", "write_artifacts",
]
