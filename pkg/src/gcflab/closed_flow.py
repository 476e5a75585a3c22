"""Closed convex hypersurfaces moving by a power of Gauss curvature.

The body is tracked through its support function ``h`` on the Gauss-map
grid, so the flow reads ``dh/dt = -Kbar^alpha`` where ``Kbar`` is the Gauss
curvature at the point with a given outward normal.  Time stepping is
explicit Euler under a parabolic step bound.

Besides the stepper this module evaluates the quantities

* ``N = int K^alpha dg``           (total speed),
* ``J = int P K^alpha dg``         (total acceleration up to ``alpha - 1``),
* ``D2 = int P^2 K^alpha dg``      (dissipation),

with ``P = W^{ij} (Hess Kbar^alpha + Kbar^alpha g)_{ij}`` the Harnack
quantity, and checks the identities and inequalities linking them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AlphaEqualsOne, ConvexityLost, InsufficientSamples, StepTooLarge, TimeOrder
from .geometry import CurvatureData, SphereGrid, integrate_sphere, support_radii

C_SAFE = 0.2
HARNACK_T_FLOOR = 0.01


@dataclass(frozen=True)
class ClosedFlowState:
    h: np.ndarray
    t: float
    alpha: float
    grid: SphereGrid

    @property
    def n(self):
        return self.grid.n


@dataclass(frozen=True)
class PFields:
    """Harnack quantity ``P`` and the curvature data it was computed from.

    ``tensor_norm`` is ``b^{ik} b^{jl} P_ij P_kl`` pulled back to the Gauss
    map; for ``n = 1`` it equals ``P**2`` and ``P11`` is the single tensor
    component in an orthonormal frame.
    """

    P: np.ndarray
    k_alpha: np.ndarray
    curvature: CurvatureData
    tensor_norm: np.ndarray
    P11: np.ndarray | None = None


@dataclass(frozen=True)
class EntropyRecord:
    t: float
    N: float
    J: float
    D2: float
    DT: float
    k_alpha_min: float
    k_alpha_max: float
    harnack_slack: float | None = None
    mono_slack1: float | None = None
    mono_slack2: float | None = None
    concavity_dd: float | None = None


@dataclass(frozen=True)
class SlackSeries:
    """Slack values at interior samples with their normalization."""

    t: np.ndarray
    slack: np.ndarray
    scale: np.ndarray

    @property
    def relative(self):
        return self.slack / self.scale


def make_state(grid, h, alpha, t=0.0):
    h = np.asarray(h, dtype=float)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    support_radii(h, grid)
    return ClosedFlowState(h=h, t=float(t), alpha=float(alpha), grid=grid)


def initial_support(grid, shape="circle", radius=1.0, axes=(1.0, 0.6)):
    """Support function of a circle/sphere or an ellipse/spheroid.

    For ``n = 1`` the ellipse has semi-axes ``axes = (a, b)`` along x and y.
    For ``n = 2`` the spheroid has equatorial semi-axis ``a`` and polar
    semi-axis ``c`` given by ``axes = (a, c)``.
    """
    ang = grid.angles
    if shape in ("circle", "sphere"):
        return np.full(grid.size, float(radius))
    if shape in ("ellipse", "spheroid"):
        a, b = axes
        if grid.n == 1:
            return np.sqrt(a**2 * np.cos(ang) ** 2 + b**2 * np.sin(ang) ** 2)
        return np.sqrt(a**2 * np.sin(ang) ** 2 + b**2 * np.cos(ang) ** 2)
    raise ValueError(f"unknown closed shape {shape!r}")


def sphere_radius(r0, t, n, alpha):
    """Radius of the round solution started from radius ``r0``."""
    return (r0 ** (1 + n * alpha) - (1 + n * alpha) * t) ** (1 / (1 + n * alpha))


def speed(state):
    """``Kbar^alpha`` at every normal."""
    cd = support_radii(state.h, state.grid)
    return cd.K**state.alpha


def dt_max(state, c_safe=C_SAFE):
    """Largest stable explicit step: ``c_safe * d^2 * min(W_min / (alpha K^alpha))``."""
    cd = support_radii(state.h, state.grid)
    return _dt_bound(cd.radii, cd.K**state.alpha, state.alpha, state.grid.spacing, c_safe)


def _dt_bound(radii, k_alpha, alpha, d, c_safe):
    return float(c_safe * d**2 * np.min(radii.min(axis=0) / (alpha * k_alpha)))


def step_closed(state, dt, c_safe=C_SAFE):
    """One explicit Euler step ``h <- h - dt * Kbar^alpha``."""
    cd = support_radii(state.h, state.grid)
    f = cd.K**state.alpha
    bound = _dt_bound(cd.radii, f, state.alpha, state.grid.spacing, c_safe)
    if dt > bound * (1 + 1e-12):
        raise StepTooLarge(f"dt = {dt:.3g} exceeds the stability bound {bound:.3g}")
    h = state.h - dt * f
    if np.any(h <= 0):
        raise ConvexityLost("support function reached zero; origin left the body")
    support_radii(h, state.grid)
    return ClosedFlowState(h=h, t=state.t + dt, alpha=state.alpha, grid=state.grid)


def p_scalar_field(state):
    """Harnack quantity from the spatial formula ``P = W^{ij} Q_ij``.

    ``Q = Hess f + f g`` with ``f = Kbar^alpha``; the same difference stencil
    as the principal radii is used so that ``dK/dt = K P`` holds exactly for
    the semi-discrete flow.
    """
    grid = state.grid
    cd = support_radii(state.h, grid)
    f = cd.K**state.alpha
    q = grid.radii_operator(f)
    ratio = q / cd.radii
    P = ratio.sum(axis=0)
    tensor = (ratio**2).sum(axis=0)
    p11 = q[0] / cd.radii[0] ** 2 if grid.n == 1 else None
    return PFields(P=P, k_alpha=f, curvature=cd, tensor_norm=tensor, P11=p11)


def p_time_difference(state, dt):
    """``P`` from a forward difference of ``Kbar^alpha`` at fixed normal."""
    f0 = speed(state)
    f1 = speed(step_closed(state, dt))
    return (f1 - f0) / (state.alpha * f0 * dt)


def entropies(state, pf=None):
    pf = p_scalar_field(state) if pf is None else pf
    grid = state.grid
    dg = pf.curvature.det_w
    f = pf.k_alpha
    return EntropyRecord(
        t=state.t,
        N=integrate_sphere(f, dg, grid),
        J=integrate_sphere(pf.P * f, dg, grid),
        D2=integrate_sphere(pf.P**2 * f, dg, grid),
        DT=integrate_sphere(pf.tensor_norm * f, dg, grid),
        k_alpha_min=float(f.min()),
        k_alpha_max=float(f.max()),
    )


def _series_arrays(series, min_len=5):
    if len(series) < min_len:
        raise InsufficientSamples(f"need at least {min_len} records, got {len(series)}")
    t = np.array([r.t for r in series])
    step = np.diff(t)
    if np.any(step <= 0) or np.ptp(step) > 1e-9 * step.mean():
        raise ValueError("records must be sampled at a uniform, increasing interval")
    return t, step.mean()


def _centered(values, ds):
    """Fourth-order centered first derivative; two samples dropped at each end."""
    v = np.asarray(values, dtype=float)
    return (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / (12 * ds)


def _centered2(values, ds):
    """Fourth-order centered second derivative; two samples dropped at each end."""
    v = np.asarray(values, dtype=float)
    return (-v[4:] + 16 * v[3:-1] - 30 * v[2:-2] + 16 * v[1:-3] - v[:-4]) / (12 * ds**2)


def check_first_derivative(series, alpha):
    """Residual of ``dN/dt = (alpha - 1) J`` at interior samples.

    Normalized by ``max(|J|, |N| / t_span)``.
    """
    t, ds = _series_arrays(series)
    N = np.array([r.N for r in series])
    J = np.array([r.J for r in series])
    slack = _centered(N, ds) - (alpha - 1) * J[2:-2]
    span = t[-1] - t[0]
    scale = np.maximum(np.abs(J[2:-2]), np.abs(N[2:-2]) / span)
    return SlackSeries(t=t[2:-2], slack=slack, scale=scale)


@dataclass(frozen=True)
class MonotonicityCheck:
    slack1: SlackSeries
    slack2: SlackSeries
    alpha_in_range: bool


def check_monotonicity(series, alpha, n):
    """Slacks of ``dJ/dt >= c D2`` and ``dJ/dt >= c J^2/N``, ``c = 1/n + 2 alpha - 1``.

    ``slack2`` is normalized by ``J^2/N``, ``slack1`` by ``c * D2``.
    """
    t, ds = _series_arrays(series)
    c = 1.0 / n + 2 * alpha - 1
    N = np.array([r.N for r in series])[2:-2]
    J = np.array([r.J for r in series])
    D2 = np.array([r.D2 for r in series])[2:-2]
    dJ = _centered(J, ds)
    Jm = J[2:-2]
    tiny = np.finfo(float).tiny
    s1 = SlackSeries(t=t[2:-2], slack=dJ - c * D2, scale=np.maximum(np.abs(c * D2), tiny))
    s2 = SlackSeries(t=t[2:-2], slack=dJ - c * Jm**2 / N, scale=np.maximum(Jm**2 / N, tiny))
    return MonotonicityCheck(slack1=s1, slack2=s2, alpha_in_range=alpha >= (n - 1) / (2 * n))


def check_dissipation_identity(series, alpha):
    """Residual of ``dJ/dt = int (|P|_b^2 + (2 alpha - 1) P^2) K^alpha dg``."""
    t, ds = _series_arrays(series)
    J = np.array([r.J for r in series])
    D2 = np.array([r.D2 for r in series])[2:-2]
    DT = np.array([r.DT for r in series])[2:-2]
    rhs = DT + (2 * alpha - 1) * D2
    return SlackSeries(t=t[2:-2], slack=_centered(J, ds) - rhs, scale=np.abs(rhs))


def check_concavity(series, alpha):
    """Second differences of ``N^(alpha/(1-alpha))`` divided by ``ds^2``.

    The scale is ``|N^(alpha/(1-alpha))| / t_span^2``; the claim is
    ``slack <= tol * scale``.
    """
    if alpha == 1:
        raise AlphaEqualsOne("concavity of N^(alpha/(1-alpha)) needs alpha != 1")
    t, ds = _series_arrays(series)
    N = np.array([r.N for r in series])
    f = N ** (alpha / (1 - alpha))
    dd = _centered2(f, ds)
    span = t[-1] - t[0]
    return SlackSeries(t=t[2:-2], slack=dd, scale=np.abs(f[2:-2]) / span**2)


def harnack_exponent(n, alpha):
    return n * alpha / (1 + n * alpha)


def check_harnack(s1, s2):
    """``min Kbar^alpha(t2)/Kbar^alpha(t1) - (t1/t2)^(n alpha/(1 + n alpha))``."""
    if not 0 < s1.t < s2.t:
        raise TimeOrder(f"need 0 < t1 < t2, got t1 = {s1.t}, t2 = {s2.t}")
    if s1.grid != s2.grid:
        raise TimeOrder("snapshots live on different grids")
    ratio = speed(s2) / speed(s1)
    bound = (s1.t / s2.t) ** harnack_exponent(s1.n, s1.alpha)
    return float(np.min(ratio) - bound)


@dataclass(frozen=True)
class ClosedConfig:
    n: int = 1
    alpha: float = 1.0
    shape: str = "circle"
    radius: float = 1.0
    axes: tuple = (1.0, 0.6)
    size: int = 512
    sample_interval: float = 0.01
    t_stop: float = 0.3
    w_floor: float = 1e-3
    c_safe: float = C_SAFE
    harnack_t_floor: float = HARNACK_T_FLOOR
    dt_cap: float | None = None


@dataclass
class ClosedRun:
    config: ClosedConfig
    records: list
    states: list
    status: str
    steps: int
    pfields: list = field(default_factory=list, repr=False)

    @property
    def final(self):
        return self.states[-1]


def run_closed(config):
    """Adaptive explicit run with a record at every multiple of the sample interval.

    Stops after the sample at ``t_stop`` (status ``"completed"``) or as soon
    as the smallest principal radius drops below ``w_floor`` (status
    ``"extinction"``).
    """
    grid = SphereGrid(config.n, config.size)
    h = initial_support(grid, config.shape, config.radius, config.axes)
    state = make_state(grid, h, config.alpha)
    alpha = config.alpha
    d = grid.spacing
    ds = config.sample_interval
    records, states, pfields = [], [], []
    steps = 0
    k = 0
    status = "completed"
    h = state.h.copy()
    t = 0.0
    while True:
        snap = ClosedFlowState(h=h.copy(), t=k * ds, alpha=alpha, grid=grid)
        pf = p_scalar_field(snap)
        states.append(snap)
        pfields.append(pf)
        records.append(entropies(snap, pf))
        k += 1
        target = k * ds
        if target > config.t_stop * (1 + 1e-12):
            break
        extinct = False
        while t < target:
            cd = support_radii(h, grid)
            if cd.radii.min() < config.w_floor:
                extinct = True
                break
            f = cd.K**alpha
            dt = min(_dt_bound(cd.radii, f, alpha, d, config.c_safe), target - t, config.dt_cap or math.inf)
            h = h - dt * f
            t += dt
            steps += 1
            if target - t < 1e-12 * ds:
                t = target
        if extinct:
            status = "extinction"
            break
    return ClosedRun(config=config, records=records, states=states, status=status, steps=steps, pfields=pfields)


def fill_slacks(run):
    """Attach per-sample check slacks to the run's records.

    ``harnack_slack`` compares each sample with the previous one (skipped
    while the earlier time is below the floor); the monotonicity and
    concavity slacks are defined at interior samples only.
    """
    cfg = run.config
    recs = list(run.records)
    n, alpha = cfg.n, cfg.alpha
    for i in range(1, len(recs)):
        s1, s2 = run.states[i - 1], run.states[i]
        if s1.t >= cfg.harnack_t_floor - 1e-12:
            recs[i] = replace(recs[i], harnack_slack=check_harnack(s1, s2))
    if len(recs) >= 5:
        mono = check_monotonicity(run.records, alpha, n)
        conc = check_concavity(run.records, alpha) if alpha != 1 else None
        for j in range(len(recs) - 4):
            upd = dict(mono_slack1=float(mono.slack1.slack[j]), mono_slack2=float(mono.slack2.slack[j]))
            if conc is not None:
                upd["concavity_dd"] = float(conc.slack[j])
            recs[j + 2] = replace(recs[j + 2], **upd)
    return recs


def state_at(run, t):
    """Snapshot recorded at time ``t`` (must be a sample time)."""
    for s in run.states:
        if math.isclose(s.t, t, rel_tol=1e-9, abs_tol=1e-12):
            return s
    raise KeyError(f"no snapshot at t = {t}")
