"""Complete convex graphs over a bounded convex domain.

The graph ``x_{n+1} = u(x, t)`` moves by ``u_t = K^alpha sqrt(1 + |Du|^2)``.
A finite grid cannot carry the blow-up of ``u`` at the boundary, so the
outermost ring of nodes receives Dirichlet values that move vertically at a
constant rate.  The choice of those values is the *boundary mode*:

``pinned``
    the translator ``u_Omega`` plus an offset, moving at ``lambda``;
``barrier``
    the mean of the lower and upper barriers, moving at ``lambda``;
``upper``
    the upper barrier ``u_hat + L`` moving at ``(1 + eps0) lambda``;
``transport``
    the initial ring values moving at ``lambda_Omega`` (domains without a
    known translator).  The boundary blow-up then has to build up inside a
    single cell; next to a flat polygon edge the first interior layer has
    almost no tangential curvature, lags, and on fine grids the interior
    eventually flattens.  Coarse grids and a steep ``logbarrier`` start
    give a usable approximation.

Monitors in this module evaluate the interior estimates, the barrier
sandwich, the time Harnack inequality for ``u_t`` and the technical
entropies on the interior set ``Omega'``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConvexityLost,
    EmptyInterior,
    EpsilonOutOfRange,
    NormalMatchFailed,
    SolitonDomainMismatch,
    StepTooLarge,
    TimeOrder,
)
from .geometry import EPS_K, DomainGrid, DomainSpec, _graph_derivatives, graph_curvature, integrate_domain

C_SAFE = 0.2
HARNACK_T_FLOOR = 0.01
BOUNDARY_MODES = ("pinned", "barrier", "upper", "transport")


@dataclass(frozen=True)
class Boundary:
    """Dirichlet data on the boundary ring: ``base + speed * t``."""

    mode: str
    base: np.ndarray
    speed: float

    def __post_init__(self):
        if self.mode not in BOUNDARY_MODES:
            raise ValueError(f"unknown boundary mode {self.mode!r}")

    def values(self, t):
        return self.base + self.speed * t


@dataclass(frozen=True)
class GraphFlowState:
    u: np.ndarray
    t: float
    alpha: float
    grid: DomainGrid
    boundary: Boundary
    eps0: float = 0.0

    @property
    def mode(self):
        return self.boundary.mode

    @property
    def n(self):
        return self.grid.n


def make_graph_state(grid, u, alpha, boundary, t=0.0, eps0=0.0):
    """Initial state; the ring takes the boundary values at time ``t``."""
    if alpha <= 0.5:
        raise ValueError("graph flows need alpha > 1/2")
    u = np.array(u, dtype=float)
    if u.shape != grid.shape:
        raise ValueError(f"field of shape {u.shape} on a grid of shape {grid.shape}")
    u[grid.ring] = boundary.values(t)[grid.ring]
    u[~grid.nodes] = np.nan
    if not np.all(np.isfinite(u[grid.nodes])):
        raise ValueError("initial data must be finite on every node")
    graph_curvature(u, grid)
    return GraphFlowState(u=u, t=float(t), alpha=float(alpha), grid=grid, boundary=boundary, eps0=float(eps0))


def _speed_and_rate(u, grid, alpha):
    """Normal speed ``K^alpha W`` and the explicit-stability rate per node.

    Returns interior-masked arrays.  The rate ``alpha * speed * tr(D^2u^-1)``
    is ``0`` on floored collar nodes, which therefore do not limit ``dt``.
    """
    grad, hess = _graph_derivatives(u, grid)
    mask = grid.interior
    n = grid.n
    if n == 1:
        det = hess[..., 0, 0]
        tr_inv = 1.0 / det
        trace = det
    else:
        det = hess[..., 0, 0] * hess[..., 1, 1] - hess[..., 0, 1] ** 2
        trace = hess[..., 0, 0] + hess[..., 1, 1]
        tr_inv = trace / det
    bad = mask & ((det <= 0) | (trace <= 0))
    if np.any(bad & ~grid.collar):
        idx = tuple(int(i) for i in np.argwhere(bad & ~grid.collar)[0])
        raise ConvexityLost(f"Hessian determinant {det[idx]:.6g} at node {idx}", node=idx, value=float(det[idx]))
    det = np.where(bad, EPS_K, det)
    q = 1.0 + np.sum(grad**2, axis=-1)
    speed = det**alpha * q ** ((1 - (n + 2) * alpha) / 2)
    rate = np.where(bad, 0.0, alpha * speed * np.where(bad, 0.0, tr_inv))
    speed = np.where(mask, speed, np.nan)
    rate = np.where(mask, rate, 0.0)
    return speed, rate


def graph_speed(state):
    """``u_t = K^alpha / <-nu, e_{n+1}>`` on the interior nodes (``nan`` elsewhere)."""
    return _speed_and_rate(state.u, state.grid, state.alpha)[0]


def graph_dt_max(state, c_safe=C_SAFE):
    _, rate = _speed_and_rate(state.u, state.grid, state.alpha)
    return _dt_from_rate(rate, state.grid.spacing, c_safe)


def _dt_from_rate(rate, d, c_safe):
    top = float(rate.max())
    return math.inf if top <= 0 else c_safe * d**2 / top


def step_graph(state, dt, c_safe=C_SAFE):
    """One explicit Euler step of the interior plus the boundary update."""
    speed, rate = _speed_and_rate(state.u, state.grid, state.alpha)
    bound = _dt_from_rate(rate, state.grid.spacing, c_safe)
    if dt > bound * (1 + 1e-12):
        raise StepTooLarge(f"dt = {dt:.3g} exceeds the stability bound {bound:.3g}")
    return _advance(state, speed, dt)


def _advance(state, speed, dt):
    grid = state.grid
    u = state.u.copy()
    u[grid.interior] += dt * speed[grid.interior]
    t = state.t + dt
    u[grid.ring] = state.boundary.values(t)[grid.ring]
    return GraphFlowState(u=u, t=t, alpha=state.alpha, grid=grid, boundary=state.boundary, eps0=state.eps0)


# ---------------------------------------------------------------- barriers


def _profile_on_grid(profile, grid, scale=1.0, mask=None):
    """``scale * u_Omega(x / scale)`` at the grid nodes."""
    mask = grid.nodes if mask is None else mask
    out = grid.empty()
    out[mask] = scale * profile.value(grid.points[mask] / scale)
    return out


def _check_profile_domain(domain, profile):
    if profile.representation == "grid":
        raise SolitonDomainMismatch("barriers need a profile defined off the grid (closed form or radial)")
    kind = "interval" if domain.n == 1 else "disk"
    if domain.kind != kind or profile.n != domain.n:
        raise SolitonDomainMismatch(f"profile for n = {profile.n} cannot serve a {domain.kind} domain")
    if not math.isclose(profile.R, domain.size, rel_tol=1e-9):
        raise SolitonDomainMismatch(f"profile radius {profile.R} differs from domain size {domain.size}")


@dataclass(frozen=True)
class BarrierPair:
    """Scaled translators sandwiching a solution.

    ``lower(x, t) = s_lower u(x / s_lower) - L + (1 - eps0) lam t`` and
    ``upper(x, t) = s_upper u(x / s_upper) + L + (1 + eps0) lam t`` with
    ``s = (1 -/+ eps0)^(-1/(n alpha))``.
    """

    profile: object
    eps0: float
    lam: float
    offset: float
    s_lower: float
    s_upper: float

    @property
    def lower_speed(self):
        return (1 - self.eps0) * self.lam

    @property
    def upper_speed(self):
        return (1 + self.eps0) * self.lam

    def lower(self, x, t=0.0):
        s = self.s_lower
        return s * self.profile.value(np.asarray(x) / s) - self.offset + self.lower_speed * t

    def upper(self, x, t=0.0):
        s = self.s_upper
        return s * self.profile.value(np.asarray(x) / s) + self.offset + self.upper_speed * t

    def on_grid(self, grid, t=0.0, mask=None):
        """``(lower, upper)`` fields at time ``t``."""
        mask = grid.nodes if mask is None else mask
        lo, hi = grid.empty(), grid.empty()
        pts = grid.points[mask]
        lo[mask] = self.lower(pts, t)
        hi[mask] = self.upper(pts, t)
        return lo, hi


def barrier_scales(eps0, n, alpha):
    return (1 - eps0) ** (-1 / (n * alpha)), (1 + eps0) ** (-1 / (n * alpha))


def make_barriers(domain, eps0, soliton, u0, grid):
    """Barrier pair for initial data ``u0`` given on ``grid``.

    ``L = max(sup(ubar - u0), sup(u0 - uhat)) + 1`` over the grid nodes so
    that ``lower <= u0 <= upper`` at ``t = 0``.
    """
    if not 0 <= eps0 < 1 / 6:
        raise EpsilonOutOfRange(f"eps0 must lie in [0, 1/6), got {eps0}")
    _check_profile_domain(domain, soliton)
    n, alpha = soliton.n, soliton.alpha
    s_lo, s_hi = barrier_scales(eps0, n, alpha)
    if not np.all(domain.contains(grid.points[grid.nodes], scale=s_hi)):
        raise SolitonDomainMismatch("grid nodes leave the domain of the upper barrier; build the grid with shrink")
    pair = BarrierPair(profile=soliton, eps0=eps0, lam=soliton.lam, offset=0.0, s_lower=s_lo, s_upper=s_hi)
    lo, hi = pair.on_grid(grid)
    m = grid.nodes
    offset = max(float(np.max(lo[m] - u0[m])), float(np.max(u0[m] - hi[m]))) + 1.0
    return BarrierPair(profile=soliton, eps0=eps0, lam=soliton.lam, offset=offset, s_lower=s_lo, s_upper=s_hi)


def boundary_for(mode, grid, u0, soliton=None, barriers=None, offset=0.0, speed=None):
    """Build the ring rule for a boundary mode."""
    if mode == "pinned":
        return Boundary("pinned", _profile_on_grid(soliton, grid) + offset, soliton.lam)
    if mode == "barrier":
        lo, hi = barriers.on_grid(grid)
        return Boundary("barrier", 0.5 * (lo + hi), barriers.lam)
    if mode == "upper":
        _, hi = barriers.on_grid(grid)
        return Boundary("upper", hi, barriers.upper_speed)
    if mode == "transport":
        if speed is None:
            raise ValueError("transport mode needs a ring speed")
        return Boundary("transport", np.array(u0, dtype=float), float(speed))
    raise ValueError(f"unknown boundary mode {mode!r}")


@dataclass(frozen=True)
class ComparisonReport:
    t: float
    lower_violation: float
    upper_violation: float
    tolerance: float
    node: tuple | None

    @property
    def passed(self):
        return max(self.lower_violation, self.upper_violation) <= self.tolerance


def check_comparison(state, barriers, mask=None):
    """Largest ``(lower - u)_+`` and ``(u - upper)_+`` over ``Omega'``.

    ``node`` is the grid index of the worst violation (``None`` when both
    violations vanish).
    """
    grid = state.grid
    mask = grid.inner if mask is None else mask
    lo, hi = barriers.on_grid(grid, state.t, mask)
    below = np.where(mask, np.maximum(lo - state.u, 0.0), 0.0)
    above = np.where(mask, np.maximum(state.u - hi, 0.0), 0.0)
    worst = np.maximum(below, above)
    node = None
    if worst.max() > 0:
        node = tuple(int(i) for i in np.unravel_index(int(np.argmax(worst)), worst.shape))
    return ComparisonReport(
        t=state.t,
        lower_violation=float(below.max()),
        upper_violation=float(above.max()),
        tolerance=1e-3 * (1 + barriers.lam * state.t),
        node=node,
    )


def time_harnack_exponent(n, alpha):
    return n * alpha / (1 + n * alpha)


def check_time_harnack(ut1, t1, ut2, t2, mask, n, alpha, t_floor=HARNACK_T_FLOOR):
    """``min_{Omega'} u_t(t2) - (t1/t2)^(n alpha/(1 + n alpha)) u_t(t1)``."""
    if not t1 < t2:
        raise TimeOrder(f"need t1 < t2, got t1 = {t1}, t2 = {t2}")
    if t1 < t_floor:
        raise TimeOrder(f"t1 = {t1} is below the floor {t_floor}")
    bound = (t1 / t2) ** time_harnack_exponent(n, alpha)
    return float(np.min(ut2[mask] - bound * ut1[mask]))


# ---------------------------------------------------------------- monitors


@dataclass(frozen=True)
class InteriorEstimateRecord:
    t: float
    min_ut: float
    max_ut: float
    max_inv_nu: float
    max_inv_lambda_min: float
    max_lambda_max: float
    osc: float


def interior_monitor(state, mask=None):
    grid = state.grid
    mask = grid.inner if mask is None else mask
    if not np.any(mask):
        raise EmptyInterior("the interior set has no nodes")
    cd = graph_curvature(state.u, grid)
    ut = cd.K**state.alpha / cd.nu_e
    u = state.u[mask]
    return InteriorEstimateRecord(
        t=state.t,
        min_ut=float(ut[mask].min()),
        max_ut=float(ut[mask].max()),
        max_inv_nu=float((1 / cd.nu_e[mask]).max()),
        max_inv_lambda_min=float((1 / cd.lam_min[mask]).max()),
        max_lambda_max=float(cd.lam_max[mask].max()),
        osc=float(u.max() - u.min()),
    )


def normalized_difference(u, v, mask):
    """``sup |(u - inf u) - (v - inf v)|`` over ``mask``."""
    a, b = u[mask], v[mask]
    return float(np.max(np.abs((a - a.min()) - (b - b.min()))))


def centered_difference(u, v, mask):
    """``sup |(u - v) - mean(u - v)|`` over ``mask``: agreement up to a vertical shift."""
    d = u[mask] - v[mask]
    return float(np.max(np.abs(d - d.mean())))


@dataclass(frozen=True)
class ConvergenceReport:
    t: np.ndarray
    speed_err: np.ndarray
    profile_err: np.ndarray
    lam: float

    @property
    def speed_trend(self):
        """Least-squares slope of the speed error over the second half."""
        return _tail_slope(self.t, self.speed_err)

    @property
    def profile_trend(self):
        return _tail_slope(self.t, self.profile_err)


def _tail_slope(t, y):
    k = len(t) // 2
    if len(t) - k < 2:
        return 0.0
    return float(np.polyfit(t[k:], y[k:], 1)[0])


def convergence_monitor(states, soliton, mask=None, x0=None):
    """Speed error at ``x0`` and normalized profile error on ``Omega'`` per state."""
    grid = states[0].grid
    mask = grid.inner if mask is None else mask
    if soliton.representation == "grid":
        if soliton.grid is not grid and soliton.grid.shape != grid.shape:
            raise SolitonDomainMismatch("grid profile lives on a different grid")
        ref = soliton.values
    else:
        _check_profile_domain(grid.domain, soliton)
        ref = _profile_on_grid(soliton, grid, mask=mask)
    c = grid.center_index(x0)
    ts, se, pe = [], [], []
    for s in states:
        ts.append(s.t)
        se.append(abs(float(graph_speed(s)[c]) - soliton.lam))
        pe.append(normalized_difference(s.u, ref, mask))
    return ConvergenceReport(t=np.array(ts), speed_err=np.array(se), profile_err=np.array(pe), lam=soliton.lam)


@dataclass(frozen=True)
class GraphEntropies:
    """Truncated technical entropies over ``Omega'``.

    ``N = int K^alpha dg``, ``AJ = (alpha - 1) int P K^alpha dg`` and
    ``D2 = int P^2 K^alpha dg`` with ``dg = W dx``; ``excluded`` counts the
    nodes whose normal could not be matched at the later time.
    """

    t: float
    N: float
    AJ: float
    D2: float
    excluded: int
    P: np.ndarray = field(repr=False)


def graph_p_field(state, later, mask=None):
    """``P = (Kbar^alpha(t + dt) - Kbar^alpha(t)) / (alpha Kbar^alpha dt)`` at matched normals.

    Returns ``(P, matched)``; ``P`` is ``nan`` at unmatched nodes.
    """
    grid = state.grid
    mask = grid.inner if mask is None else mask
    dt = later.t - state.t
    if dt <= 0:
        raise TimeOrder("the later state must be strictly later")
    a = state.alpha
    cd0 = graph_curvature(state.u, grid)
    cd1 = graph_curvature(later.u, grid)
    f0 = cd0.K**a
    f1 = cd1.K**a
    usable = grid.interior & ~grid.collar
    P = grid.empty()
    if grid.n == 1:
        x = grid.points
        p1 = cd1.gradient[..., 0]
        xs, ps, fs = x[usable], p1[usable], f1[usable]
        if np.any(np.diff(ps) <= 0):
            raise NormalMatchFailed("slope is not increasing across the usable nodes")
        target = cd0.gradient[..., 0]
        matched = mask & (target >= ps[0]) & (target <= ps[-1])
        xm = np.interp(target[matched], ps, xs)
        f_later = np.interp(xm, xs, fs)
    else:
        d = grid.spacing
        hinv = np.linalg.inv(np.where(mask[..., None, None], cd0.hessian, np.eye(2)))
        shift = -np.einsum("...ij,...j->...i", hinv, cd1.gradient - cd0.gradient)
        gx = np.full(grid.shape, np.nan)
        gy = np.full(grid.shape, np.nan)
        gx[:, 1:-1] = (f1[:, 2:] - f1[:, :-2]) / (2 * d)
        gy[1:-1, :] = (f1[2:, :] - f1[:-2, :]) / (2 * d)
        near = np.linalg.norm(np.nan_to_num(shift, nan=np.inf), axis=-1) <= d
        matched = mask & near & np.isfinite(gx) & np.isfinite(gy)
        f_later = f1[matched] + gx[matched] * shift[matched][:, 0] + gy[matched] * shift[matched][:, 1]
    P[matched] = (f_later - f0[matched]) / (a * f0[matched] * dt)
    return P, matched


def graph_technical_entropies(state, later, mask=None):
    grid = state.grid
    mask = grid.inner if mask is None else mask
    P, matched = graph_p_field(state, later, mask)
    cd = graph_curvature(state.u, grid)
    f = cd.K**state.alpha
    dg = 1.0 / cd.nu_e
    Pz = np.where(matched, P, 0.0)
    return GraphEntropies(
        t=state.t,
        N=integrate_domain(f, dg, grid, mask=mask),
        AJ=(state.alpha - 1) * integrate_domain(Pz * f, dg, grid, mask=matched),
        D2=integrate_domain(Pz**2 * f, dg, grid, mask=matched),
        excluded=int(np.count_nonzero(mask & ~matched)),
        P=P,
    )


# ---------------------------------------------------------------- initial data


INITIAL_DATA = ("translator", "paraboloid", "logbarrier", "scaled", "max2", "perturbed")


def initial_field(kind, grid, soliton=None, amplitude=None, offset=0.0, seed=0):
    """Convex initial heights on the grid nodes.

    ``translator``  ``u_Omega + offset``;
    ``paraboloid``  ``amplitude |x - c|^2 / 2`` (default amplitude 1);
    ``logbarrier``  ``amplitude`` times the domain's log barrier (default 1),
                    steep near the boundary and available on every domain;
    ``scaled``      ``amplitude * u_Omega`` (default 2, a steep cap);
    ``max2``        max of ``u_Omega`` and the translator of ``1.25 Omega`` raised by 0.3;
    ``perturbed``   ``u_Omega`` plus ``amplitude`` times a seeded convex quadratic
                    (default 0.05; a negative amplitude lowers the slopes and
                    is accepted as long as the result stays convex).
    """
    pts = grid.points[grid.nodes]
    c = grid.domain.centroid
    out = grid.empty()
    if kind == "paraboloid":
        a = 1.0 if amplitude is None else amplitude
        x = pts[:, None] if grid.n == 1 else pts
        out[grid.nodes] = 0.5 * a * np.sum((x - c) ** 2, axis=-1) + offset
        return out
    if kind == "logbarrier":
        a = 1.0 if amplitude is None else amplitude
        out[grid.nodes] = a * grid.domain.log_barrier(pts / grid.shrink) + offset
        return out
    if soliton is None:
        raise ValueError(f"initial data {kind!r} needs a translator profile")
    base = soliton.value(pts)
    if kind == "translator":
        vals = base
    elif kind == "scaled":
        vals = (2.0 if amplitude is None else amplitude) * base
    elif kind == "max2":
        vals = np.maximum(base, 1.25 * soliton.value(pts / 1.25) + 0.3)
    elif kind == "perturbed":
        rng = np.random.default_rng(seed)
        a = 0.05 if amplitude is None else amplitude
        n = grid.n
        m = rng.standard_normal((n, n))
        A = np.eye(n) + 0.25 * (m @ m.T) / n
        b = rng.uniform(-0.5, 0.5, n)
        x = pts[:, None] if n == 1 else pts
        vals = base + a * (0.5 * np.einsum("ki,ij,kj->k", x, A, x) + x @ b)
    else:
        raise ValueError(f"unknown initial data {kind!r}; choose from {INITIAL_DATA}")
    out[grid.nodes] = vals + offset
    return out


# ---------------------------------------------------------------- driver


@dataclass(frozen=True)
class GraphConfig:
    n: int = 1
    alpha: float = 1.0
    domain: str = "interval"
    size: float = 1.0
    vertices: tuple = ()
    margin: float = 0.25
    spacing: float = 0.02
    mode: str = "barrier"
    eps0: float = 0.01
    initial: str = "perturbed"
    amplitude: float | None = -0.3
    offset: float = 0.0
    seed: int = 0
    t_stop: float = 15.0
    sample_interval: float = 0.5
    c_safe: float = C_SAFE
    x0: tuple | None = None
    band: float | None = None
    dt_cap: float | None = None

    @property
    def dirichlet_band(self):
        """Width of the Dirichlet layer: the interior margin for pinned runs, else the ring only."""
        if self.band is not None:
            return self.band
        return self.margin if self.mode == "pinned" else 0.0

    def domain_spec(self):
        if self.domain == "interval":
            return DomainSpec.interval(self.size, margin=self.margin)
        if self.domain == "disk":
            return DomainSpec.disk(self.size, margin=self.margin)
        if self.domain == "polygon":
            return DomainSpec.polygon(self.vertices, margin=self.margin)
        raise ValueError(f"unknown domain {self.domain!r}")


@dataclass
class GraphRun:
    config: GraphConfig
    grid: DomainGrid
    states: list
    interior: list
    entropies: list
    comparisons: list
    center_speed: np.ndarray
    barriers: BarrierPair | None
    status: str
    steps: int

    @property
    def times(self):
        return np.array([s.t for s in self.states])

    @property
    def final(self):
        return self.states[-1]


def setup_graph(config, soliton=None):
    """Grid, initial state and barriers for a configuration."""
    domain = config.domain_spec()
    eps0 = config.eps0 if config.mode in ("barrier", "upper") else 0.0
    if config.mode in ("barrier", "upper"):
        if soliton is None:
            raise ValueError(f"boundary mode {config.mode!r} needs a translator profile")
        shrink = barrier_scales(eps0, domain.n, config.alpha)[1]
    else:
        shrink = 1.0
    grid = DomainGrid(domain, config.spacing, shrink=shrink, band=config.dirichlet_band)
    u0 = initial_field(config.initial, grid, soliton, config.amplitude, config.offset, config.seed)
    barriers = None
    if config.mode in ("barrier", "upper"):
        barriers = make_barriers(domain, eps0, soliton, u0, grid)
        ring = boundary_for(config.mode, grid, u0, barriers=barriers)
        # barriers must bracket the data after the ring is overwritten too
        trial = u0.copy()
        trial[grid.ring] = ring.base[grid.ring]
        barriers = make_barriers(domain, eps0, soliton, trial, grid)
        ring = boundary_for(config.mode, grid, u0, barriers=barriers)
    elif config.mode == "pinned":
        ring = boundary_for("pinned", grid, u0, soliton=soliton, offset=config.offset)
    else:
        from .soliton import lambda_omega

        ring = boundary_for("transport", grid, u0, speed=lambda_omega(domain, config.alpha))
    state = make_graph_state(grid, u0, config.alpha, ring, eps0=eps0)
    return state, barriers


def run_graph(config, soliton=None, keep_states=True):
    """Explicit run with monitors at every multiple of the sample interval."""
    state, barriers = setup_graph(config, soliton)
    grid = state.grid
    d = grid.spacing
    ds = config.sample_interval
    center = grid.center_index(config.x0)
    states, interior, ents, comps, speeds = [], [], [], [], []
    steps = 0
    k = 0
    while True:
        speed, rate = _speed_and_rate(state.u, grid, state.alpha)
        dt = _dt_from_rate(rate, d, config.c_safe)
        states.append(state)
        interior.append(interior_monitor(state))
        ents.append(graph_technical_entropies(state, _advance(state, speed, dt)))
        if barriers is not None:
            comps.append(check_comparison(state, barriers))
        speeds.append(float(speed[center]))
        k += 1
        target = k * ds
        if target > config.t_stop * (1 + 1e-12):
            break
        first = True
        while state.t < target:
            if not first:
                speed, rate = _speed_and_rate(state.u, grid, state.alpha)
                dt = _dt_from_rate(rate, d, config.c_safe)
            first = False
            step = min(dt, target - state.t, config.dt_cap or math.inf)
            state = _advance(state, speed, step)
            steps += 1
            if target - state.t < 1e-12 * ds:
                state = GraphFlowState(
                    u=state.u, t=target, alpha=state.alpha, grid=grid, boundary=state.boundary, eps0=state.eps0
                )
    if not keep_states:
        states = [states[0], states[-1]]
    return GraphRun(
        config=config,
        grid=grid,
        states=states,
        interior=interior,
        entropies=ents,
        comparisons=comps,
        center_speed=np.array(speeds),
        barriers=barriers,
        status="completed",
        steps=steps,
    )
