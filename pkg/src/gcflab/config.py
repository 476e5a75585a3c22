"""``key = value`` run configuration shared by the command line and the library.

One setting per line; ``#`` starts a comment; blank lines are ignored.
Unknown keys and unparsable values raise :class:`ConfigInvalid` naming the
key.  Lists (``axes``) are comma separated and polygon vertices are written
``x:y`` separated by semicolons, for example ``vertices = -1:-1; 1:-1; 0:1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .closed_flow import ClosedConfig
from .errors import ConfigInvalid
from .graph_flow import BOUNDARY_MODES, INITIAL_DATA, GraphConfig

MODES = ("closed", "graph", "soliton", "lambda", "verify")
TOLERANCE_KEYS = (
    "first_derivative", "monotonicity", "equality", "dissipation", "concavity", "harnack", "gauss_bonnet",
    "radius", "comparison", "time_harnack", "speed", "profile", "lambda", "residual", "t_deviation",
)


@dataclass(frozen=True)
class FlowConfig:
    mode: str = "closed"
    run_id: str = "run"
    n: int = 1
    alpha: float = 1.0
    # closed bodies
    shape: str = "circle"
    radius: float = 1.0
    axes: tuple = (1.0, 0.6)
    grid_size: int = 512
    w_floor: float = 1e-3
    # graphs and solitons
    domain: str = "interval"
    size: float = 1.0
    vertices: tuple = ()
    margin: float = 0.25
    spacing: float = 0.02
    boundary_mode: str = "barrier"
    eps0: float = 0.01
    initial: str = "perturbed"
    amplitude: float | None = -0.3
    offset: float = 0.0
    seed: int = 0
    band: float | None = None
    method: str = "shooting"
    convergence_tol: float = 0.02
    # time stepping and sampling
    c_safe: float = 0.2
    dt_cap: float | None = None
    sample_interval: float = 0.01
    t_stop: float = 0.3
    # artifacts
    out_dir: str = "gcf-lab-out"
    plots: tuple = ()
    tolerances: dict = field(default_factory=dict)

    def validate(self):
        if self.mode not in MODES:
            raise ConfigInvalid(f"mode must be one of {MODES}", key="mode")
        if self.n not in (1, 2, 3):
            raise ConfigInvalid("n must be 1, 2 or 3", key="n")
        if self.alpha <= 0:
            raise ConfigInvalid("alpha must be positive", key="alpha")
        if self.mode in ("graph", "soliton", "lambda") and self.alpha <= 0.5:
            raise ConfigInvalid(f"{self.mode} mode needs alpha > 1/2", key="alpha")
        if self.grid_size < 16:
            raise ConfigInvalid("grid_size must be at least 16", key="grid_size")
        for key in ("spacing", "c_safe", "sample_interval", "t_stop", "w_floor", "margin", "convergence_tol"):
            if getattr(self, key) <= 0:
                raise ConfigInvalid(f"{key} must be positive", key=key)
        if self.dt_cap is not None and self.dt_cap <= 0:
            raise ConfigInvalid("dt_cap must be positive", key="dt_cap")
        if self.boundary_mode not in BOUNDARY_MODES:
            raise ConfigInvalid(f"boundary_mode must be one of {BOUNDARY_MODES}", key="boundary_mode")
        if self.initial not in INITIAL_DATA:
            raise ConfigInvalid(f"initial must be one of {INITIAL_DATA}", key="initial")
        if self.method not in ("closed-form", "shooting", "flow"):
            raise ConfigInvalid("method must be closed-form, shooting or flow", key="method")
        for k, v in self.tolerances.items():
            if v <= 0:
                raise ConfigInvalid("tolerances must be positive", key=f"tol_{k}")
        return self

    def closed(self):
        return ClosedConfig(
            n=self.n, alpha=self.alpha, shape=self.shape, radius=self.radius, axes=tuple(self.axes),
            size=self.grid_size, sample_interval=self.sample_interval, t_stop=self.t_stop, w_floor=self.w_floor,
            c_safe=self.c_safe, dt_cap=self.dt_cap,
        )

    def graph(self):
        return GraphConfig(
            n=self.n, alpha=self.alpha, domain=self.domain, size=self.size, vertices=tuple(self.vertices),
            margin=self.margin, spacing=self.spacing, mode=self.boundary_mode, eps0=self.eps0,
            initial=self.initial, amplitude=self.amplitude, offset=self.offset, seed=self.seed,
            t_stop=self.t_stop, sample_interval=self.sample_interval, c_safe=self.c_safe, band=self.band,
            dt_cap=self.dt_cap,
        )


def _float(text):
    return float(text)


def _optional_float(text):
    return None if text.lower() in ("", "none") else float(text)


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _words(text):
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _vertices(text):
    pts = []
    for item in text.split(";"):
        item = item.strip()
        if item:
            x, y = item.split(":")
            pts.append((float(x), float(y)))
    return tuple(pts)


_PARSERS = {
    "n": int, "seed": int, "grid_size": int,
    "alpha": _float, "radius": _float, "w_floor": _float, "size": _float, "margin": _float, "spacing": _float,
    "eps0": _float, "offset": _float, "convergence_tol": _float, "c_safe": _float, "sample_interval": _float,
    "t_stop": _float,
    "amplitude": _optional_float, "band": _optional_float, "dt_cap": _optional_float,
    "axes": _floats, "vertices": _vertices, "plots": _words,
}


def parse_items(items, base=None):
    """Apply ``(key, text)`` pairs on top of ``base`` (default settings)."""
    cfg = base or FlowConfig()
    known = {f.name for f in fields(FlowConfig)} - {"tolerances"}
    updates = {}
    tols = dict(cfg.tolerances)
    for key, text in items:
        key = key.strip()
        text = text.strip()
        if key.startswith("tol_"):
            name = key[4:]
            if name not in TOLERANCE_KEYS:
                raise ConfigInvalid(f"unknown tolerance {key!r}", key=key)
            try:
                tols[name] = float(text)
            except ValueError:
                raise ConfigInvalid(f"{key} expects a number, got {text!r}", key=key) from None
            continue
        if key not in known:
            raise ConfigInvalid(f"unknown key {key!r}", key=key)
        parse = _PARSERS.get(key, str)
        try:
            updates[key] = parse(text)
        except ValueError:
            raise ConfigInvalid(f"cannot parse {key} = {text!r}", key=key) from None
    return replace(cfg, tolerances=tols, **updates).validate()


def parse_text(text, base=None):
    items = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {lineno}: expected key = value, got {raw!r}", key=line)
        key, value = line.split("=", 1)
        items.append((key, value))
    return parse_items(items, base)


def load_config(path, base=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config file {path}: {exc.strerror}", key="config") from None
    return parse_text(text, base)
