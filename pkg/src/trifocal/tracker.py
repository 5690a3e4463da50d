"""Predictor-corrector path tracking for square polynomial systems.

The core engine follows straight-line homotopies H(z, s) from s = 1 to
s = 0 with fourth-order Runge-Kutta prediction and Newton correction,
tracking whole batches of paths in lockstep so the linear solves batch
into stacked 13x13 (or nxn) systems. Single-path entry points wrap the
same engine.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

SUCCESS = "success"
DIVERGED = "diverged"
STEP_LIMIT = "step-limit"
SINGULAR = "singular"

_ACTIVE = "active"
_FAST_ITERS = 2  # corrections this cheap count toward growing the step
_FAST_RUN = 2  # consecutive cheap corrections before the step doubles
_ENDPOINT_ITERS = 12


@dataclass(frozen=True)
class SquareSystem:
    """A square polynomial system with dense Jacobian callables.

    ``evaluate``/``jacobian`` act on a single point. The optional batched
    variants take (B, n) stacks; when absent the engine falls back to a
    Python loop, which is fine for toy systems.
    """

    dimension: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    description: str = ""
    evaluate_batch: Callable[[np.ndarray], np.ndarray] | None = None
    jacobian_batch: Callable[[np.ndarray], np.ndarray] | None = None

    def value_at(self, points: np.ndarray) -> np.ndarray:
        if self.evaluate_batch is not None:
            return self.evaluate_batch(points)
        return np.stack([self.evaluate(p) for p in points])

    def jacobian_at(self, points: np.ndarray) -> np.ndarray:
        if self.jacobian_batch is not None:
            return self.jacobian_batch(points)
        return np.stack([self.jacobian(p) for p in points])


@dataclass(frozen=True)
class TrackerConfig:
    initial_step: float = 0.05
    min_step: float = 1e-10
    max_step: float = 0.25
    newton_tol: float = 1e-9
    max_newton: int = 4
    max_steps: int = 3000
    divergence_radius: float = 1e8
    endpoint_tol: float = 1e-11
    gamma: complex = 1.0 + 0.0j

    def __post_init__(self):
        if not (0.0 < self.min_step <= self.initial_step <= self.max_step <= 1.0):
            raise ValueError("need 0 < min_step <= initial_step <= max_step <= 1")
        if min(self.newton_tol, self.endpoint_tol) <= 0.0:
            raise ValueError("tolerances must be positive")
        if abs(abs(complex(self.gamma)) - 1.0) > 1e-8:
            raise ValueError("gamma must lie on the unit circle")


@dataclass(frozen=True)
class TrackedEndpoint:
    point: np.ndarray
    status: str
    residual: float
    contraction: float
    steps: int


class Homotopy(Protocol):
    """Batched family H(z, s) with its two partial derivative blocks."""

    dimension: int

    def value(self, z: np.ndarray, s: np.ndarray) -> np.ndarray: ...

    def jacobian(self, z: np.ndarray, s: np.ndarray) -> np.ndarray: ...

    def s_partial(self, z: np.ndarray, s: np.ndarray) -> np.ndarray: ...


class TwoSystemHomotopy:
    """gamma * s * start(z) + (1 - s) * target(z)."""

    def __init__(self, start: SquareSystem, target: SquareSystem, gamma: complex = 1.0):
        if start.dimension != target.dimension:
            raise ValueError("start and target systems have different dimensions")
        self.start = start
        self.target = target
        self.gamma = complex(gamma)
        self.dimension = start.dimension

    def value(self, z, s):
        w = (self.gamma * s)[:, None]
        return w * self.start.value_at(z) + (1.0 - s)[:, None] * self.target.value_at(z)

    def jacobian(self, z, s):
        w = (self.gamma * s)[:, None, None]
        return w * self.start.jacobian_at(z) + (1.0 - s)[:, None, None] * self.target.jacobian_at(z)

    def s_partial(self, z, s):
        return self.gamma * self.start.value_at(z) - self.target.value_at(z)


def _solve_rows(mats: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Batched linear solve; rows that hit an exactly singular matrix come
    back as NaN instead of raising, so one bad path cannot stall a batch."""
    try:
        out = np.linalg.solve(mats, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.full_like(rhs, np.nan)
        for i in range(mats.shape[0]):
            try:
                out[i] = np.linalg.solve(mats[i], rhs[i])
            except np.linalg.LinAlgError:
                pass
    return out


def _tangent(hom: Homotopy, z: np.ndarray, s: np.ndarray) -> np.ndarray:
    """dz/ds = -H_z^{-1} H_s."""
    return -_solve_rows(hom.jacobian(z, s), hom.s_partial(z, s))


def _rk4_predict(hom: Homotopy, z, s, h):
    """One RK4 step of dz/ds from s to s - h. Returns (z_pred, finite_mask)."""
    ds = -h
    k1 = _tangent(hom, z, s)
    k2 = _tangent(hom, z + 0.5 * ds[:, None] * k1, s + 0.5 * ds)
    k3 = _tangent(hom, z + 0.5 * ds[:, None] * k2, s + 0.5 * ds)
    k4 = _tangent(hom, z + ds[:, None] * k3, s + ds)
    zp = z + (ds[:, None] / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    ok = np.all(np.isfinite(zp.view(float)), axis=1)
    return np.where(ok[:, None], zp, z), ok


def _correct(hom: Homotopy, z, s, tol, max_iters):
    """Newton-correct each row at its fixed s.

    Returns (z, iterations_to_converge, converged_mask, solve_failed_mask).
    """
    b = z.shape[0]
    iters = np.full(b, max_iters, dtype=int)
    converged = np.zeros(b, dtype=bool)
    solve_failed = np.zeros(b, dtype=bool)
    for it in range(1, max_iters + 1):
        live = ~converged & ~solve_failed
        if not live.any():
            break
        res = hom.value(z[live], s[live])
        jac = hom.jacobian(z[live], s[live])
        dz = _solve_rows(jac, -res)
        bad = ~np.all(np.isfinite(dz.view(float)), axis=1)
        dz = np.where(bad[:, None], 0.0, dz)
        znew = z[live] + dz
        step = np.linalg.norm(dz, axis=1)
        scale = 1.0 + np.linalg.norm(znew, axis=1)
        good = (step <= tol * scale) & ~bad
        zl = z[live]
        zl[~bad] = znew[~bad]
        z[live] = zl
        idx = np.flatnonzero(live)
        newly = idx[good & (iters[idx] == max_iters)]
        iters[newly] = it
        converged[idx[good]] = True
        solve_failed[idx[bad]] = True
    return z, iters, converged, solve_failed


def track_batch(hom: Homotopy, starts: np.ndarray, cfg: TrackerConfig) -> list[TrackedEndpoint]:
    """Track every row of ``starts`` from s = 1 to s = 0 in lockstep."""
    z = np.array(starts, dtype=complex)
    if z.ndim == 1:
        z = z[None, :]
    nb = z.shape[0]
    s = np.ones(nb)
    h = np.full(nb, cfg.initial_step)
    fast = np.zeros(nb, dtype=int)
    steps = np.zeros(nb, dtype=int)
    status = np.array([_ACTIVE] * nb, dtype=object)

    while True:
        act = np.flatnonzero((status == _ACTIVE) & (s > 0.0))
        if act.size == 0:
            break
        hit_limit = act[steps[act] >= cfg.max_steps]
        status[hit_limit] = STEP_LIMIT
        act = act[steps[act] < cfg.max_steps]
        if act.size == 0:
            continue
        steps[act] += 1
        hcur = np.minimum(h[act], s[act])
        h[act] = hcur  # halving a rejected clipped step must shrink the retry
        snew = s[act] - hcur

        zp, pred_ok = _rk4_predict(hom, z[act], s[act], hcur)
        zc, iters, conv, solvefail = _correct(hom, zp, snew, cfg.newton_tol, cfg.max_newton)
        accepted = pred_ok & conv & ~solvefail

        ia = act[accepted]
        z[ia] = zc[accepted]
        s[ia] = snew[accepted]
        fast[ia] = np.where(iters[accepted] <= _FAST_ITERS, fast[ia] + 1, 0)
        grow = ia[fast[ia] >= _FAST_RUN]
        h[grow] = np.minimum(h[grow] * 2.0, cfg.max_step)
        fast[grow] = 0
        blown = ia[np.linalg.norm(z[ia], axis=1) > cfg.divergence_radius]
        status[blown] = DIVERGED

        ir = act[~accepted]
        h[ir] = 0.5 * h[ir]
        under = ir[h[ir] < cfg.min_step]
        badsolve = (~pred_ok | solvefail)[~accepted]
        under_bad = ir[(h[ir] < cfg.min_step) & badsolve]
        status[under] = STEP_LIMIT
        status[under_bad] = SINGULAR

    # refine whoever reached s = 0
    residual = np.full(nb, np.inf)
    contraction = np.full(nb, np.nan)
    done = np.flatnonzero((status == _ACTIVE) & (s <= 0.0))
    if done.size:
        zd = z[done]
        prev_step = np.full(done.size, np.nan)
        for _ in range(_ENDPOINT_ITERS):
            res = hom.value(zd, np.zeros(done.size))
            jac = hom.jacobian(zd, np.zeros(done.size))
            dz = _solve_rows(jac, -res)
            bad = ~np.all(np.isfinite(dz.view(float)), axis=1)
            dz = np.where(bad[:, None], 0.0, dz)
            stepn = np.linalg.norm(dz, axis=1)
            with np.errstate(invalid="ignore", divide="ignore"):
                ratio = stepn / prev_step
            update = (stepn > 0.0) & ~bad
            contraction[done[np.isfinite(ratio)]] = ratio[np.isfinite(ratio)]
            zd = np.where(update[:, None], zd + dz, zd)
            prev_step = np.where(stepn > 0.0, stepn, prev_step)
        z[done] = zd
        final = hom.value(zd, np.zeros(done.size))
        with np.errstate(invalid="ignore"):
            residual[done] = np.abs(final).max(axis=1)
        okall = np.isfinite(residual[done]) & (residual[done] <= cfg.endpoint_tol)
        status[done[okall]] = SUCCESS
        status[done[~okall]] = SINGULAR

    # diagnostic residual at the final (z, s) for paths that never got there
    rest = np.flatnonzero(~np.isfinite(residual))
    if rest.size:
        with np.errstate(invalid="ignore", over="ignore"):
            vals = hom.value(z[rest], s[rest])
            residual[rest] = np.abs(vals).max(axis=1)

    return [
        TrackedEndpoint(
            point=z[i].copy(),
            status=str(status[i]) if status[i] != _ACTIVE else STEP_LIMIT,
            residual=float(residual[i]),
            contraction=float(contraction[i]),
            steps=int(steps[i]),
        )
        for i in range(nb)
    ]


def track_path(
    start_sys: SquareSystem,
    target_sys: SquareSystem,
    start_point,
    cfg: TrackerConfig | None = None,
) -> TrackedEndpoint:
    """Track one path of gamma*s*start + (1-s)*target from the given root."""
    cfg = cfg or TrackerConfig()
    hom = TwoSystemHomotopy(start_sys, target_sys, cfg.gamma)
    start = np.asarray(start_point, dtype=complex).reshape(1, start_sys.dimension)
    return track_batch(hom, start, cfg)[0]


@dataclass(frozen=True)
class NewtonResult:
    point: np.ndarray
    converged: bool
    residual: float
    iterations: int
    contraction: float
    quadratic: bool


def newton_refine(sys: SquareSystem, point, tol: float = 1e-12, max_iters: int = 20) -> NewtonResult:
    """Plain Newton iteration with contraction-rate diagnostics.

    Convergence is judged on the backward-error scale ``|F(z)| <= tol * (1 +
    |J(z)|)`` so that a point accurate to ``tol`` counts as converged even
    when steep equations inflate the raw residual. ``quadratic`` is False
    when successive corrections shrink by a roughly constant factor instead
    of squaring, the signature of a multiple root.
    """
    z = np.asarray(point, dtype=complex).reshape(sys.dimension)
    steps: list[float] = []

    def scaled_ok(res, jac):
        scale = 1.0 + float(np.abs(jac).sum(axis=1).max())
        return float(np.abs(res).max()) <= tol * scale

    iterations = 0
    for _ in range(max_iters):
        res = sys.evaluate(z)
        jac = sys.jacobian(z)
        if scaled_ok(res, jac):
            break
        try:
            dz = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            return NewtonResult(z, False, float(np.abs(res).max()), iterations, np.nan, False)
        if not np.all(np.isfinite(dz.view(float))):
            return NewtonResult(z, False, float(np.abs(res).max()), iterations, np.nan, False)
        z = z + dz
        iterations += 1
        steps.append(float(np.linalg.norm(dz)))
        if steps[-1] <= 1e-17 * (1.0 + np.linalg.norm(z)):
            break
    res = sys.evaluate(z)
    residual = float(np.abs(res).max())
    converged = scaled_ok(res, sys.jacobian(z))
    ratios = [b / a for a, b in zip(steps, steps[1:]) if a > 0]
    contraction = ratios[-1] if ratios else 0.0
    quadratic = contraction < 0.1
    return NewtonResult(z, converged, residual, iterations, contraction, quadratic)


def finite_difference_jacobian(sys: SquareSystem, point, h: float = 1e-7) -> np.ndarray:
    """Central-difference Jacobian, for validating hand-written ones."""
    z = np.asarray(point, dtype=complex).reshape(sys.dimension)
    cols = []
    for m in range(sys.dimension):
        dz = np.zeros_like(z)
        dz[m] = h
        cols.append((sys.evaluate(z + dz) - sys.evaluate(z - dz)) / (2.0 * h))
    return np.stack(cols, axis=1)


def _roots_of_unity_shifted(r: complex, d: int) -> np.ndarray:
    base = r ** (1.0 / d)
    return base * np.exp(2j * np.pi * np.arange(d) / d)


def total_degree_solve(
    sys: SquareSystem,
    degrees,
    cfg: TrackerConfig | None = None,
    rng: np.random.Generator | None = None,
) -> list[TrackedEndpoint]:
    """Solve a small square system from the Bezout start {z_i^d_i = r_i}."""
    cfg = cfg or TrackerConfig()
    rng = rng or np.random.default_rng(0)
    degs = [int(d) for d in degrees]
    if len(degs) != sys.dimension or any(d < 1 for d in degs):
        raise ValueError("need one positive degree per equation")
    n = sys.dimension
    r = np.exp(2j * np.pi * rng.random(n)) * (0.5 + rng.random(n))

    degs_arr = np.array(degs)
    start = SquareSystem(
        dimension=n,
        evaluate=lambda z: z**degs_arr - r,
        jacobian=lambda z: np.diag(degs_arr * z ** (degs_arr - 1)),
        description="Bezout start system",
        evaluate_batch=lambda zb: zb**degs_arr - r,
        jacobian_batch=lambda zb: _diag_batch(degs_arr * zb ** (degs_arr - 1)),
    )
    roots = [_roots_of_unity_shifted(r[i], degs[i]) for i in range(n)]
    starts = np.array([combo for combo in itertools.product(*roots)], dtype=complex)
    hom = TwoSystemHomotopy(start, sys, cfg.gamma)
    return track_batch(hom, starts, cfg)


def _diag_batch(diags: np.ndarray) -> np.ndarray:
    b, n = diags.shape
    out = np.zeros((b, n, n), dtype=complex)
    out[:, np.arange(n), np.arange(n)] = diags
    return out


def path_log_lines(endpoints: list[TrackedEndpoint]) -> list[str]:
    """Machine-readable one-line-per-path summaries for --log output."""
    return [
        f"path={i}\tsteps={e.steps}\tstatus={e.status}\tresidual={e.residual:.6e}"
        for i, e in enumerate(endpoints)
    ]
