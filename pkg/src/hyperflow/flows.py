"""Prescribed-curvature solvers: Ricci flow, Calabi flow and Newton descent.

All three drive the scalar curvature ``K(r)`` to a target ``K_target``.  The
flows integrate

    ricci:   dr/dt = K - K_target
    calabi:  dr/dt = -L (K - K_target),   L = dK/dr

with an adaptive Dormand-Prince pair.  Newton minimizes the convex energy
whose gradient is ``-(K - K_target)`` and whose Hessian is ``-L``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from . import _rk
from .curvature import (
    as_metric,
    curvature_jacobian,
    curvature_state,
    scalar_curvature,
    segment_energy,
)
from .triangulation import Triangulation

logger = logging.getLogger("hyperflow")

METHODS = ("ricci", "calabi", "newton")
TERMINATIONS = (
    "converged",
    "max_time",
    "max_iters",
    "step_underflow",
    "left_positive_orthant",
    "line_search_failed",
    "boundary_stagnation",
)


@dataclass
class FlowOptions:
    K_target: np.ndarray
    r0: np.ndarray
    method: str = "ricci"
    tol: float = 1e-10
    max_time: float = 1e6
    max_iters: int = 200_000
    initial_step: float = 1e-2
    min_step: float = 1e-14
    safety: float = 0.9
    eps: float = 1e-8  # positivity floor
    rtol: float = 1e-12
    atol: float = 1e-14
    track_energy: bool = True
    # newton
    armijo: float = 1e-4
    backtrack: float = 0.5
    boundary_fraction: float = 0.995
    min_alpha: float = 1e-12
    linear_solver: str = "dense"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.tol > 0 or not self.eps > 0:
            raise ValueError("tol and eps must be positive")
        self.r0 = np.asarray(self.r0, dtype=float)
        self.K_target = np.asarray(self.K_target, dtype=float)
        if np.any(self.r0 <= 0):
            raise ValueError("r0 must be strictly positive")
        if self.r0.shape != self.K_target.shape:
            raise ValueError(
                f"dimension mismatch: r0 has shape {self.r0.shape}, "
                f"K_target has shape {self.K_target.shape}"
            )


@dataclass
class FlowSample:
    t: float
    r: np.ndarray
    K: np.ndarray
    residual: float
    step: float
    energy: float = math.nan


@dataclass
class FlowTrace:
    method: str
    samples: list[FlowSample] = field(default_factory=list)
    termination: str = ""
    rate_estimate: float = math.nan
    r_max: list[float] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def record(self, sample: FlowSample) -> None:
        self.samples.append(sample)
        prev = self.r_max[-1] if self.r_max else -math.inf
        self.r_max.append(max(prev, float(np.max(sample.r))))

    @property
    def converged(self) -> bool:
        return self.termination == "converged"

    @property
    def r(self) -> np.ndarray:
        return self.samples[-1].r

    @property
    def K(self) -> np.ndarray:
        return self.samples[-1].K

    @property
    def residual(self) -> float:
        return self.samples[-1].residual

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def residuals(self) -> np.ndarray:
        return np.array([s.residual for s in self.samples])

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.samples])


def estimate_rate(t, residual, threshold: float = 1e-2, fraction: float = 0.5) -> float:
    """Slope of ``log(residual)`` against ``t`` over the exponential tail.

    Uses the trailing ``fraction`` of samples whose residual is below
    ``threshold``; ``nan`` when fewer than three such samples exist.
    """
    t = np.asarray(t, dtype=float)
    res = np.asarray(residual, dtype=float)
    keep = (res < threshold) & (res > 0)
    t, res = t[keep], res[keep]
    n = len(t)
    start = n - max(int(math.ceil(fraction * n)), 0)
    t, res = t[start:], res[start:]
    if len(t) < 3 or np.ptp(t) == 0:
        return math.nan
    slope, _ = np.polyfit(t, np.log(res), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# bounds


@dataclass(frozen=True)
class Bounds:
    M: float
    c: float
    chi: int
    d: int
    cos_equal: float  # cos beta with all radii M
    cos_small: float  # cos beta with radii (c, M, M, M) at the edges through c
    area_equal: float  # lower bound on a vertex-triangle area when r <= M
    area_small: float  # lower bound when additionally that vertex's r < c
    C1: float
    C2: float

    def as_dict(self) -> dict:
        return {
            "M": self.M,
            "c": self.c,
            "chi": self.chi,
            "d": self.d,
            "C1_tilde": self.cos_equal,
            "C2_tilde": self.cos_small,
            "area_C1": self.area_equal,
            "area_C2": self.area_small,
            "C1": self.C1,
            "C2": self.C2,
        }


def bounds(M: float, c: float, chi: int, d: int) -> Bounds:
    """Curvature thresholds for radii bounded by ``M``.

    A target curvature in ``(C1, C2]`` at every vertex guarantees the Ricci
    flow converges, given a metric realizing it exists.
    """
    if not 0 < c < M:
        raise ValueError(f"need 0 < c < M, got c={c!r}, M={M!r}")
    if d < 1:
        raise ValueError(f"degree must be positive, got {d!r}")
    tm, tc = math.tanh(M), math.tanh(c)
    cos_equal = (1 + tm * tm) / (1 + 3 * tm * tm)
    cos_small = 0.5 + (1 - tc * tc) / (2 * (1 + tm * tm + 2 * tc * tm))
    area_equal = math.pi - 3 * math.acos(cos_equal)
    area_small = math.pi - 3 * math.acos(cos_small)
    base = 2 * math.pi * chi
    return Bounds(
        M=M,
        c=c,
        chi=chi,
        d=d,
        cos_equal=cos_equal,
        cos_small=cos_small,
        area_equal=area_equal,
        area_small=area_small,
        C1=base + d * area_equal,
        C2=base + d * area_small,
    )


def target_regime(T: Triangulation, K_target, M: float, c: float) -> dict:
    """Per-vertex thresholds and whether ``K_target`` lies in the convergence band."""
    K_target = np.asarray(K_target, dtype=float)
    b = [bounds(M, c, T.euler_chars[i], T.degrees[i]) for i in range(T.n_vertices)]
    C1 = np.array([x.C1 for x in b])
    C2 = np.array([x.C2 for x in b])
    return {
        "M": M,
        "c": c,
        "C1": C1.tolist(),
        "C2": C2.tolist(),
        "in_band": bool(np.all((K_target > C1) & (K_target <= C2))),
    }


def _failure_diagnostics(T, trace: FlowTrace, K_target) -> dict:
    M = max(trace.r_max)
    c = min(float(np.min(s.r)) for s in trace.samples)
    if not c < M:
        c = 0.5 * M
    return {
        "final_r": trace.r.tolist(),
        "final_residual": trace.residual,
        "regime": target_regime(T, K_target, M, c),
    }


# ---------------------------------------------------------------------------
# flows


def _residual(K, K_target) -> float:
    return float(np.max(np.abs(K - K_target)))


def _integrate(T: Triangulation, opts: FlowOptions, rhs, method: str) -> FlowTrace:
    K_target = opts.K_target
    r = as_metric(T, opts.r0).copy()
    f, K = rhs(r)
    trace = FlowTrace(method)
    energy = 0.0
    trace.record(FlowSample(0.0, r, K, _residual(K, K_target), 0.0, energy))
    t = 0.0
    h = opts.initial_step
    err_prev = 1.0
    accepted = 0
    worst_increase = 0.0

    while True:
        if trace.residual <= opts.tol:
            trace.termination = "converged"
            break
        if accepted >= opts.max_iters:
            trace.termination = "max_iters"
            break
        if t >= opts.max_time:
            trace.termination = "max_time"
            break
        h = min(h, opts.max_time - t)
        try:
            r_new, f_new, K_new, err = _rk.dopri_step(rhs, r, f, h, opts.eps)
        except _rk.LeftDomain:
            h *= 0.5
            if h < opts.min_step:
                trace.termination = "left_positive_orthant"
                break
            continue
        err_norm = _rk.error_norm(err, r, r_new, opts.rtol, opts.atol)
        if not err_norm <= 1.0:
            h = _rk.next_step(h, err_norm, err_prev, opts.safety, accepted=False)
            if h < opts.min_step:
                trace.termination = "step_underflow"
                break
            continue

        if opts.track_energy:
            dE = segment_energy(T, r, r_new, K_target)
            worst_increase = max(worst_increase, dE)
            energy += dE
        t += h
        accepted += 1
        trace.record(FlowSample(t, r_new, K_new, _residual(K_new, K_target), h, energy))
        r, f = r_new, f_new
        h = _rk.next_step(h, err_norm, err_prev, opts.safety, accepted=True)
        err_prev = max(err_norm, 1e-4)

    trace.rate_estimate = estimate_rate(trace.times, trace.residuals)
    trace.diagnostics["accepted_steps"] = accepted
    trace.diagnostics["max_energy_increase"] = worst_increase
    if not trace.converged:
        trace.diagnostics.update(_failure_diagnostics(T, trace, K_target))
    logger.info(
        "%s flow: %s after %d steps, t=%.6g, residual=%.3e",
        method, trace.termination, accepted, t, trace.residual,
    )
    return trace


def ricci_flow(T: Triangulation, opts: FlowOptions) -> FlowTrace:
    """Integrate ``dr/dt = K - K_target`` until the residual reaches ``opts.tol``."""
    K_target = opts.K_target

    def rhs(r):
        K = scalar_curvature(T, r)
        return K - K_target, K

    return _integrate(T, opts, rhs, "ricci")


def calabi_flow(T: Triangulation, opts: FlowOptions) -> FlowTrace:
    """Integrate ``dr/dt = -L (K - K_target)`` with ``L`` the curvature Jacobian."""
    K_target = opts.K_target

    def rhs(r):
        state = curvature_state(T, r, jacobian=True)
        return -state.lambda_matrix @ (state.K - K_target), state.K

    return _integrate(T, opts, rhs, "calabi")


# ---------------------------------------------------------------------------
# newton


def _newton_direction(T, r, g_neg, solver: str) -> np.ndarray:
    # solve (-L) p = K - K_target; -L is symmetric positive definite
    if solver == "sparse":
        lam = curvature_jacobian(T, r, sparse=True)
        return scipy.sparse.linalg.spsolve((-lam).tocsc(), g_neg)
    lam = curvature_jacobian(T, r)
    return scipy.linalg.cho_solve(scipy.linalg.cho_factor(-lam), g_neg)


def newton_solve(T: Triangulation, opts: FlowOptions) -> FlowTrace:
    """Damped Newton descent on the convex curvature energy.

    The sample time is the iteration count and the sample step is the accepted
    line-search fraction.  ``trace.r`` holds the solution when converged.
    """
    K_target = opts.K_target
    r = as_metric(T, opts.r0).copy()
    K = scalar_curvature(T, r)
    trace = FlowTrace("newton")
    energy = 0.0
    trace.record(FlowSample(0.0, r, K, _residual(K, K_target), 0.0, energy))

    it = 0
    while True:
        if trace.residual <= opts.tol:
            trace.termination = "converged"
            break
        if it >= opts.max_iters:
            trace.termination = "max_iters"
            break
        try:
            p = _newton_direction(T, r, K - K_target, opts.linear_solver)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            trace.termination = "line_search_failed"
            break
        slope = -float((K - K_target) @ p)  # gradient . p, negative
        neg = p < 0
        alpha_max = 1.0
        if np.any(neg):
            alpha_max = min(1.0, opts.boundary_fraction * float(np.min(r[neg] / -p[neg])))
        alpha = alpha_max
        while True:
            r_new = r + alpha * p
            dE = segment_energy(T, r, r_new, K_target)
            if dE <= opts.armijo * alpha * slope:
                K_new = scalar_curvature(T, r_new)
                break
            # energy differences at roundoff level: fall back to residual decrease
            K_new = scalar_curvature(T, r_new)
            if abs(dE) < 1e-14 and _residual(K_new, K_target) < trace.residual:
                break
            alpha *= opts.backtrack
            if alpha < opts.min_alpha:
                K_new = None
                break
        if K_new is None:
            near_wall = alpha_max < 1.0 and float(np.min(r)) < 1e3 * opts.eps
            trace.termination = "boundary_stagnation" if near_wall else "line_search_failed"
            break
        it += 1
        energy += dE
        r, K = r_new, K_new
        trace.record(FlowSample(float(it), r, K, _residual(K, K_target), alpha, energy))
        if float(np.min(r)) <= opts.eps:
            trace.termination = "boundary_stagnation"
            break

    trace.rate_estimate = estimate_rate(trace.times, trace.residuals)
    trace.diagnostics["iterations"] = it
    if not trace.converged:
        trace.diagnostics.update(_failure_diagnostics(T, trace, K_target))
    logger.info("newton: %s after %d iterations, residual=%.3e", trace.termination, it, trace.residual)
    return trace


def solve(T: Triangulation, opts: FlowOptions) -> FlowTrace:
    """Dispatch on ``opts.method``."""
    return {"ricci": ricci_flow, "calabi": calabi_flow, "newton": newton_solve}[opts.method](T, opts)
