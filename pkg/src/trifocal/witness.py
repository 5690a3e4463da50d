"""Pseudo-witness sets for parametrized varieties.

A pseudo-witness set is the quadruple (parameter patches, parametrization,
generic slice, finite point set). This module populates the set by monodromy
loops in slice-coefficient space, certifies completeness with the trace
test, and moves certified sets to arbitrary target slices by coefficient
homotopy. The calibrated three-camera variety and its isotropic sub-loci
are provided; the machinery itself is generic over any parametrization, so
the tests can run low-degree curve oracles through the identical code paths.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import geometry, seeds, tracker

DEDUP_TOL = 1e-8
TRACE_TOL = 1e-6
MEMBERSHIP_TOL = 1e-9
LOCI = ("cal", "01", "10", "00")


class WitnessError(RuntimeError):
    """Witness-set precondition or certification failure."""


# ---------------------------------------------------------------------------
# slices with constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WitnessSlice:
    """k affine-linear conditions rows @ image = constants * chart(image).

    Projective varieties keep ``constants`` at zero except while the trace
    test translates the slice; affine varieties use honest constants.
    """

    rows: np.ndarray
    constants: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=complex)
        consts = np.asarray(self.constants, dtype=complex).reshape(rows.shape[0])
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "constants", consts)


def as_witness_slice(obj) -> WitnessSlice:
    if isinstance(obj, WitnessSlice):
        return obj
    rows = getattr(obj, "rows", None)
    if rows is None:
        rows = obj
    rows = np.asarray(rows, dtype=complex)
    return WitnessSlice(rows, np.zeros(rows.shape[0], dtype=complex))


# ---------------------------------------------------------------------------
# parametrized varieties
# ---------------------------------------------------------------------------

def _no_fixed_values(params: np.ndarray) -> np.ndarray:
    return np.zeros((params.shape[0], 0), dtype=complex)


def _no_fixed_jacobian(params: np.ndarray) -> np.ndarray:
    return np.zeros((params.shape[0], 0, params.shape[1]), dtype=complex)


@dataclass(frozen=True)
class ParametrizedVariety:
    """Batched parametrization plus the fixed (patch/isotropy) equations.

    ``image`` maps (B, n) parameter stacks to (B, m) image vectors;
    ``image_jacobian`` returns (B, m, n). ``chart`` is the dehomogenizing
    functional for projective images, or None when the image is already
    affine.
    """

    name: str
    param_dim: int
    image_dim: int
    image: Callable[[np.ndarray], np.ndarray]
    image_jacobian: Callable[[np.ndarray], np.ndarray]
    fixed_count: int = 0
    fixed_values: Callable[[np.ndarray], np.ndarray] = _no_fixed_values
    fixed_jacobian: Callable[[np.ndarray], np.ndarray] = _no_fixed_jacobian
    chart: np.ndarray | None = None

    @property
    def slice_rows_needed(self) -> int:
        return self.param_dim - self.fixed_count


def sliced_square_system(var: ParametrizedVariety, slc) -> tracker.SquareSystem:
    """The square system {slice conditions on the image} + {fixed equations}."""
    slc = as_witness_slice(slc)
    if slc.rows.shape != (var.slice_rows_needed, var.image_dim):
        raise WitnessError(
            f"slice must be {var.slice_rows_needed}x{var.image_dim} for {var.name}, "
            f"got {slc.rows.shape}"
        )
    rows, consts, chart = slc.rows, slc.constants, var.chart
    use_consts = bool(np.any(consts != 0))

    def value_batch(params):
        p = np.asarray(params, dtype=complex)
        img = var.image(p)
        top = img @ rows.T
        if use_consts:
            denom = img @ chart if chart is not None else np.ones(p.shape[0], dtype=complex)
            top = top - consts[None, :] * denom[:, None]
        return np.concatenate([top, var.fixed_values(p)], axis=1)

    def jacobian_batch(params):
        p = np.asarray(params, dtype=complex)
        jimg = var.image_jacobian(p)
        top = np.einsum("km,bmn->bkn", rows, jimg)
        if use_consts and chart is not None:
            dchart = np.einsum("m,bmn->bn", chart, jimg)
            top = top - consts[None, :, None] * dchart[:, None, :]
        return np.concatenate([top, var.fixed_jacobian(p)], axis=1)

    return tracker.SquareSystem(
        dimension=var.param_dim,
        evaluate=lambda z: value_batch(np.asarray(z, dtype=complex)[None, :])[0],
        jacobian=lambda z: jacobian_batch(np.asarray(z, dtype=complex)[None, :])[0],
        description=f"{var.name} sliced",
        evaluate_batch=value_batch,
        jacobian_batch=jacobian_batch,
    )


def random_slice(var: ParametrizedVariety, rng: np.random.Generator) -> WitnessSlice:
    k = var.slice_rows_needed
    rows = rng.normal(size=(k, var.image_dim)) + 1j * rng.normal(size=(k, var.image_dim))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    if var.chart is not None:
        consts = np.zeros(k, dtype=complex)
    else:
        consts = rng.normal(size=k) + 1j * rng.normal(size=k)
    return WitnessSlice(rows, consts)


def slice_through_point(var: ParametrizedVariety, rng: np.random.Generator, params) -> WitnessSlice:
    """A random slice constrained to pass through the image of ``params``."""
    p = np.asarray(params, dtype=complex).reshape(1, var.param_dim)
    img = var.image(p)[0]
    slc = random_slice(var, rng)
    if var.chart is None:
        return WitnessSlice(slc.rows, slc.rows @ img)
    for _ in range(32):
        ref = rng.normal(size=var.image_dim) + 1j * rng.normal(size=var.image_dim)
        ref /= np.linalg.norm(ref)
        pivot = ref @ img
        if abs(pivot) > 1e-3 * np.linalg.norm(img):
            break
    else:
        raise WitnessError("could not find a reference functional for the through-point slice")
    rows = slc.rows - np.outer((slc.rows @ img) / pivot, ref)
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return WitnessSlice(rows, slc.constants)


# ---------------------------------------------------------------------------
# the calibrated three-camera varieties
# ---------------------------------------------------------------------------

def _parse_locus(locus: str) -> tuple[bool, bool]:
    if locus not in LOCI:
        raise ValueError(f"locus must be one of {LOCI}, got {locus!r}")
    return locus in ("01", "00"), locus in ("10", "00")


def trifocal_variety(locus: str, alpha, beta, chart) -> ParametrizedVariety:
    """The tensor parametrization patched by alpha.q2 = beta.q3 = 1.

    Loci '01'/'10'/'00' additionally pin the first/second/both quaternions
    to the isotropic cone sum(q^2) = 0, trading one slice row per equation.
    """
    iso2, iso3 = _parse_locus(locus)
    alpha = np.asarray(alpha, dtype=complex).reshape(4)
    beta = np.asarray(beta, dtype=complex).reshape(4)
    chart = np.asarray(chart, dtype=complex).reshape(27)
    count = 2 + iso2 + iso3

    def fixed_values(p):
        cols = [p[:, 0:4] @ alpha - 1.0, p[:, 4:8] @ beta - 1.0]
        if iso2:
            cols.append(np.sum(p[:, 0:4] ** 2, axis=1))
        if iso3:
            cols.append(np.sum(p[:, 4:8] ** 2, axis=1))
        return np.stack(cols, axis=1)

    def fixed_jacobian(p):
        b = p.shape[0]
        jac = np.zeros((b, count, 13), dtype=complex)
        jac[:, 0, 0:4] = alpha
        jac[:, 1, 4:8] = beta
        row = 2
        if iso2:
            jac[:, row, 0:4] = 2.0 * p[:, 0:4]
            row += 1
        if iso3:
            jac[:, row, 4:8] = 2.0 * p[:, 4:8]
        return jac

    return ParametrizedVariety(
        name=f"calibrated-trifocal[{locus}]",
        param_dim=13,
        image_dim=27,
        image=geometry.tensor_from_params,
        image_jacobian=geometry.tensor_jacobian_params,
        fixed_count=count,
        fixed_values=fixed_values,
        fixed_jacobian=fixed_jacobian,
        chart=chart,
    )


def normalize_to_patches(params, alpha, beta) -> np.ndarray:
    """Rescale along the two-parameter fiber so both patch equations hold.

    (q2, q3, t3) -> (l*q2, m*q3, (m/l)^2 * t3) scales the tensor by m^2 and
    leaves the projective image fixed, so any point with nonvanishing patch
    values has a unique representative on the patches.
    """
    p = np.asarray(params, dtype=complex).reshape(13).copy()
    lam = np.asarray(alpha, dtype=complex) @ p[0:4]
    mu = np.asarray(beta, dtype=complex) @ p[4:8]
    if min(abs(lam), abs(mu)) < 1e-12:
        raise WitnessError("point lies on a patch hyperplane; cannot normalize")
    p[0:4] /= lam
    p[4:8] /= mu
    p[10:13] *= (lam / mu) ** 2
    return p


def _random_isotropic_quaternion(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    return np.append(v, 1j * np.sqrt(np.sum(v**2)))


def random_start_params(locus: str, rng: np.random.Generator, alpha, beta) -> np.ndarray:
    iso2, iso3 = _parse_locus(locus)
    q2 = _random_isotropic_quaternion(rng) if iso2 else rng.normal(size=4) + 1j * rng.normal(size=4)
    q3 = _random_isotropic_quaternion(rng) if iso3 else rng.normal(size=4) + 1j * rng.normal(size=4)
    rest = rng.normal(size=5) + 1j * rng.normal(size=5)
    return normalize_to_patches(np.concatenate([q2, q3, rest]), alpha, beta)


# ---------------------------------------------------------------------------
# pseudo-witness sets
# ---------------------------------------------------------------------------

@dataclass
class PseudoWitnessSet:
    variety: ParametrizedVariety
    patches: dict
    slc: WitnessSlice
    points: np.ndarray
    certified: bool
    meta: dict = field(default_factory=dict)


def degree(pws: PseudoWitnessSet) -> int:
    if not pws.certified:
        raise WitnessError("witness set is not trace-certified; degree undefined")
    return int(pws.points.shape[0])


def membership_residuals(var: ParametrizedVariety, slc, points: np.ndarray) -> np.ndarray:
    sys = sliced_square_system(var, slc)
    vals = sys.value_at(np.atleast_2d(np.asarray(points, dtype=complex)))
    return np.abs(vals).max(axis=1)


def _cross_distances(points: np.ndarray, cands: np.ndarray) -> np.ndarray:
    """(N, B) matrix of ||p_i - c_j|| / (1 + ||c_j||) via the Gram identity.

    Cancellation makes values below ~1e-7 unreliable, so callers must treat
    this as a coarse prefilter and confirm close pairs with exact
    difference norms.
    """
    pn = np.einsum("ij,ij->i", points, points.conj()).real
    cn = np.einsum("ij,ij->i", cands, cands.conj()).real
    cross = (points @ cands.conj().T).real
    sq = np.maximum(pn[:, None] + cn[None, :] - 2.0 * cross, 0.0)
    return np.sqrt(sq) / (1.0 + np.sqrt(cn)[None, :])


def _exact_min_distance(points: np.ndarray, cand: np.ndarray) -> float:
    diffs = np.linalg.norm(points - cand[None, :], axis=1)
    return float(diffs.min()) / (1.0 + float(np.linalg.norm(cand)))


def merge_points(existing: np.ndarray, new: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    """Append rows of ``new`` whose normalized distance to every kept point
    exceeds ``tol``. Existing points keep their order and indices."""
    new = np.atleast_2d(np.asarray(new, dtype=complex))
    if existing is not None and len(existing):
        kept = np.atleast_2d(np.asarray(existing, dtype=complex))
    else:
        kept = new[:0]
    if new.shape[0] == 0:
        return kept.copy()
    coarse_tol = max(1e4 * tol, 1e-4)
    if kept.shape[0]:
        chunk = max(1, int(2**21 // max(kept.shape[0], 1)))
        masks = []
        for j0 in range(0, new.shape[0], chunk):
            cands = new[j0 : j0 + chunk]
            d = _cross_distances(kept, cands)
            mask = d.min(axis=0) > coarse_tol
            for j in np.where(~mask)[0]:
                near = kept[d[:, j] <= coarse_tol]
                mask[j] = _exact_min_distance(near, cands[j]) > tol
            masks.append(mask)
        fresh = new[np.concatenate(masks)]
    else:
        fresh = new
    if fresh.shape[0] > 1:
        d = _cross_distances(fresh, fresh)
        keep_mask = np.ones(fresh.shape[0], dtype=bool)
        for i in range(fresh.shape[0]):
            if not keep_mask[i]:
                continue
            later = np.where((d[i] <= coarse_tol) & keep_mask)[0]
            later = later[later > i]
            for j in later:
                if _exact_min_distance(fresh[i : i + 1], fresh[j]) <= tol:
                    keep_mask[j] = False
        fresh = fresh[keep_mask]
    if not kept.shape[0]:
        return fresh.copy()
    return np.concatenate([kept, fresh], axis=0)


# ---------------------------------------------------------------------------
# movement between slices
# ---------------------------------------------------------------------------

def move_points(
    var: ParametrizedVariety,
    source,
    target,
    points: np.ndarray,
    cfg: tracker.TrackerConfig | None = None,
    width: int = 0,
) -> list[tracker.TrackedEndpoint]:
    """Track every point from the source-sliced system to the target's.

    ``width`` > 0 advances at most that many paths in lockstep per chunk.
    Path state is row-independent, so chunking changes memory use and
    progress granularity but not a single endpoint.
    """
    cfg = cfg or tracker.TrackerConfig()
    hom = tracker.TwoSystemHomotopy(
        sliced_square_system(var, source), sliced_square_system(var, target), cfg.gamma
    )
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    if width <= 0 or pts.shape[0] <= width:
        return tracker.track_batch(hom, pts, cfg)
    ends: list[tracker.TrackedEndpoint] = []
    for lo in range(0, pts.shape[0], width):
        ends.extend(tracker.track_batch(hom, pts[lo : lo + width], cfg))
    return ends


def move_to_slice(
    pws: PseudoWitnessSet,
    target,
    cfg: tracker.TrackerConfig | None = None,
    width: int = 0,
) -> list[tracker.TrackedEndpoint]:
    if not pws.certified:
        raise WitnessError("refusing to move an uncertified witness set")
    return move_points(pws.variety, pws.slc, target, pws.points, cfg, width=width)


# ---------------------------------------------------------------------------
# trace test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceResult:
    passed: bool
    deviation: float
    inconclusive: bool
    detail: str = ""


def _shifted_slice(slc: WitnessSlice, s: float, direction_form=None) -> WitnessSlice:
    if direction_form is None:
        consts = slc.constants.copy()
        consts[0] += s
        return WitnessSlice(slc.rows, consts)
    rows = slc.rows.copy()
    rows[0] = rows[0] + s * np.asarray(direction_form, dtype=complex)
    return WitnessSlice(rows, slc.constants)


def _chart_coordinates(var: ParametrizedVariety, img: np.ndarray) -> np.ndarray:
    if var.chart is None:
        return img
    return img / (img @ var.chart)[:, None]


def _duplicated_rows(coords: np.ndarray, tol: float = DEDUP_TOL, chunk: int = 64) -> list[int]:
    """Indices of rows that coincide with another row (relative max-norm)."""
    n = coords.shape[0]
    scale = 1.0 + np.abs(coords).max(axis=1)
    hit = np.zeros(n, dtype=bool)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        d = np.abs(coords[lo:hi, None, :] - coords[None, :, :]).max(axis=2)
        close = d <= tol * np.maximum(scale[lo:hi, None], scale[None, :])
        close[np.arange(hi - lo), np.arange(lo, hi)] = False
        hit[lo:hi] |= close.any(axis=1)
        hit |= close.any(axis=0)
    return np.where(hit)[0].tolist()


def run_trace_test(
    var: ParametrizedVariety,
    slc,
    points: np.ndarray,
    cfg: tracker.TrackerConfig | None = None,
    direction_form=None,
    tol: float = TRACE_TOL,
    rng: np.random.Generator | None = None,
    width: int = 0,
) -> TraceResult:
    """Second difference of the sliced-set centroid under slice translation.

    The slice is translated by s = +1 and s = -1 along the affine chart
    direction (constants shift; for projective varieties this is exactly a
    parallel move in the chart where centroids are computed). The centroid
    of a complete witness set is affine-linear in s, so the second
    difference vanishes; strict subsets bend.

    When ``rng`` is given, each translation is tracked with a fresh random
    unit phase.  The shift itself is a real segment in slice space, so a
    fixed real gamma can run straight through the discriminant; a random
    phase bends the interpolation path without touching its endpoints.

    Repairs are set-faithful.  Stray step-control failures are re-tracked
    alone under fresh phases; that is sound for the *set* of endpoints but
    the per-path matching is only locally constant in the phase, so a
    mixed assembly can hold one endpoint twice and miss another.  Every
    assembled leg therefore runs a global duplicate scan, and a collision
    discards the whole leg in favour of a fresh full rerun.  Endpoints are
    never invented by refining a stalled terminal: Newton from garbage can
    settle on a degenerate solution stratum that no scan would flag.
    """
    slc = as_witness_slice(slc)
    cfg = cfg or tracker.TrackerConfig()
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    centroids = {}
    retried = 0
    reruns = 0
    for s in (1.0, -1.0):
        shifted = _shifted_slice(slc, s, direction_form)
        coords = None
        problem = ""
        for _ in range(3 if rng is not None else 1):
            leg_cfg = cfg
            if rng is not None:
                leg_cfg = replace(cfg, gamma=np.exp(2j * np.pi * rng.random()))
            ends = move_points(var, slc, shifted, pts, leg_cfg, width=width)
            cand = np.array([e.point for e in ends])
            status = [e.status for e in ends]
            failed = [i for i, st in enumerate(status) if st != tracker.SUCCESS]
            rounds = 2 if rng is not None else 0
            while failed and rounds > 0:
                rounds -= 1
                retry_cfg = replace(cfg, gamma=np.exp(2j * np.pi * rng.random()))
                redo = move_points(var, slc, shifted, pts[failed], retry_cfg, width=width)
                still = []
                for i, e in zip(failed, redo):
                    cand[i] = e.point
                    status[i] = e.status
                    if e.status == tracker.SUCCESS:
                        retried += 1
                    else:
                        still.append(i)
                failed = still
            if failed:
                hist: dict[str, int] = {}
                for i in failed:
                    hist[status[i]] = hist.get(status[i], 0) + 1
                summary = " ".join(f"{k}={v}" for k, v in sorted(hist.items()))
                problem = f"{len(failed)} path(s) failed at s={s:+.0f} ({summary})"
                reruns += 1
                continue
            dup = _duplicated_rows(cand)
            if dup:
                problem = (
                    f"{len(dup)} path(s) share endpoints at s={s:+.0f} "
                    f"(e.g. indices {dup[:4]})"
                )
                reruns += 1
                continue
            coords = cand
            break
        if coords is None:
            return TraceResult(False, float("nan"), True, problem)
        centroids[s] = _chart_coordinates(var, var.image(coords)).mean(axis=0)
    centroids[0.0] = _chart_coordinates(var, var.image(pts)).mean(axis=0)
    second = centroids[1.0] - 2.0 * centroids[0.0] + centroids[-1.0]
    scale = max(np.linalg.norm(centroids[s]) for s in (1.0, 0.0, -1.0))
    deviation = float(np.linalg.norm(second) / max(scale, 1e-300))
    notes = []
    if retried:
        notes.append(f"re-tracked {retried} path(s)")
    if reruns:
        notes.append(f"re-ran {reruns} leg(s)")
    return TraceResult(deviation <= tol, deviation, False, ", ".join(notes))


def trace_test(
    pws: PseudoWitnessSet,
    direction_form=None,
    cfg=None,
    tol: float = TRACE_TOL,
    rng: np.random.Generator | None = None,
    width: int = 0,
) -> TraceResult:
    return run_trace_test(
        pws.variety, pws.slc, pws.points, cfg, direction_form, tol, rng=rng, width=width
    )


# ---------------------------------------------------------------------------
# monodromy population
# ---------------------------------------------------------------------------

def monodromy_populate(
    var: ParametrizedVariety,
    slc,
    seed_points,
    rng: np.random.Generator,
    budget: int = 64,
    cfg: tracker.TrackerConfig | None = None,
    trace_tol: float = TRACE_TOL,
    log: Callable[[str], None] | None = None,
    width: int = 0,
) -> tuple[np.ndarray, bool, int]:
    """Grow the witness point set by random slice loops until the trace
    test certifies completeness or the loop budget runs out.

    Returns (points, certified, loops_used).
    """
    slc = as_witness_slice(slc)
    cfg = cfg or tracker.TrackerConfig()
    pts = merge_points(None, np.atleast_2d(np.asarray(seed_points, dtype=complex)))
    if (membership_residuals(var, slc, pts) > MEMBERSHIP_TOL).any():
        raise WitnessError("seed point does not solve the sliced system")

    def phase():
        return np.exp(2j * np.pi * rng.random())

    certified = False
    loops = 0
    stable_since_trace = True
    for loop in range(1, budget + 1):
        loops = loop
        waypoints = [slc, random_slice(var, rng), random_slice(var, rng), slc]
        cur = pts
        for a, b in zip(waypoints, waypoints[1:]):
            ends = move_points(var, a, b, cur, replace(cfg, gamma=phase()), width=width)
            cur = np.array([e.point for e in ends if e.status == tracker.SUCCESS])
            if cur.size == 0:
                break
        before = pts.shape[0]
        if cur.size:
            pts = merge_points(pts, cur)
        grew = pts.shape[0] > before
        if log:
            log(f"loop={loop} points={pts.shape[0]} new={pts.shape[0] - before}")
        if grew:
            stable_since_trace = True
            continue
        if stable_since_trace:
            result = run_trace_test(var, slc, pts, cfg, tol=trace_tol, rng=rng, width=width)
            if log:
                log(
                    f"trace deviation={result.deviation:.3e} "
                    f"passed={result.passed} inconclusive={result.inconclusive}"
                    + (f" ({result.detail})" if result.detail else "")
                )
            if result.passed:
                certified = True
                break
            if not result.inconclusive:
                # A finite bend means points are genuinely missing: hold off
                # until a loop grows the set.  Path failures, by contrast,
                # are retried on the next stagnant loop with fresh phases.
                stable_since_trace = False
    return pts, certified, loops


# ---------------------------------------------------------------------------
# building the calibrated-variety witness sets
# ---------------------------------------------------------------------------

def build_witness(
    locus: str = "cal",
    seed: int = 0,
    budget: int = 200,
    cfg: tracker.TrackerConfig | None = None,
    trace_tol: float = TRACE_TOL,
    log: Callable[[str], None] | None = None,
    width: int = 0,
) -> PseudoWitnessSet:
    """Seed, populate, and certify a pseudo-witness set for one locus."""
    cfg = cfg or tracker.TrackerConfig()
    rng_patch = seeds.child_rng(seed, "witness", locus, "patches")
    rng_start = seeds.child_rng(seed, "witness", locus, "start")
    rng_slice = seeds.child_rng(seed, "witness", locus, "slice")
    rng_loops = seeds.child_rng(seed, "witness", locus, "loops")

    def unit_vec(rng, n):
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        return v / np.linalg.norm(v)

    alpha, beta = unit_vec(rng_patch, 4), unit_vec(rng_patch, 4)
    chart = unit_vec(rng_patch, 27)
    var = trifocal_variety(locus, alpha, beta, chart)

    start = random_start_params(locus, rng_start, alpha, beta)
    slc = slice_through_point(var, rng_slice, start)
    refined = tracker.newton_refine(sliced_square_system(var, slc), start, tol=1e-12)
    if not refined.converged:
        raise WitnessError("through-point seed failed to refine on the sliced system")

    points, certified, loops = monodromy_populate(
        var, slc, refined.point, rng_loops, budget, cfg, trace_tol, log, width=width
    )
    meta = {
        "locus": locus,
        "build_seed": int(seed),
        "degree": int(points.shape[0]),
        "loops": int(loops),
        "tolerances": {
            "trace": trace_tol,
            "dedup": DEDUP_TOL,
            "membership": MEMBERSHIP_TOL,
            "endpoint": cfg.endpoint_tol,
        },
    }
    return PseudoWitnessSet(
        variety=var,
        patches={"alpha": alpha, "beta": beta},
        slc=slc,
        points=points,
        certified=certified,
        meta=meta,
    )


def check_witness(pws: PseudoWitnessSet) -> dict:
    """Membership residuals and pairwise image distinctness diagnostics."""
    res = membership_residuals(pws.variety, pws.slc, pws.points)
    imgs = _chart_coordinates(pws.variety, pws.variety.image(pws.points))
    n = imgs.shape[0]
    min_dist = np.inf
    for i in range(n):
        d = np.linalg.norm(imgs[i + 1 :] - imgs[i][None, :], axis=1)
        d = d / (1.0 + np.linalg.norm(imgs[i]))
        if d.size:
            min_dist = min(min_dist, float(d.min()))
    return {
        "count": int(n),
        "max_membership_residual": float(res.max()) if n else 0.0,
        "min_image_distance": float(min_dist),
        "certified": bool(pws.certified),
    }


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _pairs(arr: np.ndarray) -> list:
    a = np.asarray(arr, dtype=complex)
    if a.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in a]
    return [_pairs(row) for row in a]


def _unpairs(obj) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    return (arr[..., 0] + 1j * arr[..., 1]).astype(complex)


def witness_to_dict(pws: PseudoWitnessSet) -> dict:
    if pws.variety.chart is None:
        raise WitnessError("persistence is defined for chart-bearing varieties only")
    meta = dict(pws.meta)
    meta["chart"] = _pairs(pws.variety.chart)
    return {
        "patches": {k: _pairs(v) for k, v in pws.patches.items()},
        "slice_rows": _pairs(pws.slc.rows),
        "slice_constants": _pairs(pws.slc.constants),
        "points": _pairs(pws.points),
        "certified": bool(pws.certified),
        "meta": meta,
    }


def witness_from_dict(doc: dict) -> PseudoWitnessSet:
    meta = dict(doc["meta"])
    chart = _unpairs(meta.pop("chart"))
    alpha = _unpairs(doc["patches"]["alpha"])
    beta = _unpairs(doc["patches"]["beta"])
    var = trifocal_variety(meta.get("locus", "cal"), alpha, beta, chart)
    slc = WitnessSlice(_unpairs(doc["slice_rows"]), _unpairs(doc["slice_constants"]))
    raw_points = doc["points"]
    if raw_points:
        points = np.atleast_2d(_unpairs(raw_points))
    else:
        points = np.zeros((0, var.param_dim), dtype=complex)
    return PseudoWitnessSet(
        variety=var,
        patches={"alpha": alpha, "beta": beta},
        slc=slc,
        points=points,
        certified=bool(doc["certified"]),
        meta=meta,
    )


def save_witness(path, pws: PseudoWitnessSet) -> None:
    Path(path).write_text(json.dumps(witness_to_dict(pws), indent=1, sort_keys=True) + "\n")


def load_witness(path) -> PseudoWitnessSet:
    return witness_from_dict(json.loads(Path(path).read_text()))


def bundled_witness(locus: str = "cal") -> PseudoWitnessSet:
    """The certified witness set shipped with the package."""
    from importlib import resources

    ref = resources.files("trifocal.data").joinpath(f"witness_{locus}.json")
    if not ref.is_file():
        raise WitnessError(f"no bundled witness for locus {locus!r}")
    return witness_from_dict(json.loads(ref.read_text()))
