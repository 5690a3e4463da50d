"""Acceptance suite: one test per numbered criterion, printed as a checklist.

Criteria 1-9 run in seconds to minutes.  Criteria 10-13 rebuild witness sets
and reproduce degree-table rows (hours-scale in the worst case); they run
only when TRIFOCAL_EXTENDED=1 is set.
"""
import itertools
import os

import numpy as np
import pytest

from trifocal import geometry, numlin, pipeline, seeds, slices, tracker, witness

extended = pytest.mark.skipif(
    os.environ.get("TRIFOCAL_EXTENDED") != "1",
    reason="hours-scale; set TRIFOCAL_EXTENDED=1",
)


def report(criterion, passed, detail):
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} — {detail}")
    assert passed, detail


def random_so3(rng):
    q = rng.normal(size=4) + 1j * rng.normal(size=4)
    return geometry.quaternion_rotation(q) / (q @ q)


@pytest.fixture(scope="module")
def cal_witness():
    return witness.bundled_witness("cal")


@pytest.fixture(scope="module")
def reference_instance():
    from importlib import resources

    path = resources.files("trifocal.data").joinpath("reference_instance.json")
    return slices.load_instance(path)


# --- 1: trilinear vanishing on consistent point-line-line data -------------

def test_01_trilinearity():
    rng = seeds.child_rng(0, "accept", 1)
    worst = 0.0
    for _ in range(100):
        config = geometry.random_configuration(rng)
        cams = config.cameras()
        t = geometry.trifocal_tensor(*cams)
        tn = t / np.linalg.norm(t)
        for _ in range(10):
            x, lp, lpp = geometry.forward_correspondence(
                "PLL", *cams, rng.normal(size=4), rng.normal(size=4)
            )
            val = geometry.tensor_contract(tn, first=x, second=lp, third=lpp)
            scale = np.linalg.norm(x) * np.linalg.norm(lp) * np.linalg.norm(lpp)
            worst = max(worst, abs(val) / scale)
    report(1, worst <= 1e-9, f"1000 PLL triples, max normalized value {worst:.1e}")


# --- 2: equivariance and world-group invariance ----------------------------

def test_02_equivariance():
    rng = seeds.child_rng(0, "accept", 2)
    worst = 0.0
    for _ in range(100):
        a, b, c = (rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4)) for _ in range(3))
        t = geometry.trifocal_tensor(a, b, c)
        g, gp, gpp = random_so3(rng), random_so3(rng), random_so3(rng)
        lhs = geometry.trifocal_tensor(g @ a, gp @ b, gpp @ c)
        rhs = np.einsum("ia,jb,kc,abc->ijk", g, gp, gpp, t)
        worst = max(worst, numlin.projective_distance(lhs.ravel(), rhs.ravel()))

        h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        h /= np.linalg.det(h) ** 0.25
        moved = geometry.trifocal_tensor(a @ h, b @ h, c @ h)
        worst = max(worst, numlin.projective_distance(t.ravel(), moved.ravel()))

        # world similarity (rotation + translation + dilation) fixes the tensor
        config = geometry.random_configuration(rng)
        ca, cb, cc = config.cameras()
        tc = geometry.trifocal_tensor(ca, cb, cc)
        sim = np.zeros((4, 4), dtype=complex)
        sim[:3, :3] = random_so3(rng)
        sim[:3, 3] = rng.normal(size=3) + 1j * rng.normal(size=3)
        sim[3, 3] = np.exp(2j * np.pi * rng.random())
        fixed = geometry.trifocal_tensor(ca @ sim, cb @ sim, cc @ sim)
        worst = max(worst, numlin.projective_distance(tc.ravel(), fixed.ravel()))
    report(2, worst <= 1e-9, f"100 tuples, max projective mismatch {worst:.1e}")


# --- 3: quaternion cone identity -------------------------------------------

def test_03_cone_identity():
    rng = seeds.child_rng(0, "accept", 3)
    worst = 0.0
    for k in range(1000):
        if k % 4 == 0:
            v = rng.normal(size=3) + 1j * rng.normal(size=3)
            q = np.append(v, 1j * np.sqrt(v @ v))  # isotropic: q @ q == 0
        else:
            q = rng.normal(size=4) + 1j * rng.normal(size=4)
        q = q / np.linalg.norm(q)
        r = geometry.quaternion_rotation(q)
        gap = np.abs(r @ r.T - (q @ q) ** 2 * np.eye(3)).max()
        worst = max(worst, gap)
    report(3, worst <= 1e-12, f"1000 quaternions (1/4 isotropic), max |RRt - (q.q)^2 I| {worst:.1e}")


# --- 4: slice codimensions --------------------------------------------------

def test_04_slice_codimensions():
    expected_rank = {"PLL": 1, "LLL": 2, "PLP": 2, "PPL": 2, "PPP": 4}
    for kind, want in expected_rank.items():
        for s in range(20):
            rng = seeds.child_rng(s, "accept", 4, kind)
            vectors = tuple(rng.normal(size=3) for _ in range(3))
            rows = slices.constraint_rows(slices.Correspondence(kind, vectors))
            got = numlin.numerical_rank(rows)
            assert got == want, f"{kind} seed {s}: rank {got} != {want}"
    for w in slices.enumerate_problems():
        for s in range(5):
            inst = slices.random_instance(w, seed=s)
            rank = slices.assemble_special_slice(inst).rank
            assert rank == 11 + w.w1, f"{w.as_tuple()} seed {s}: codim {rank}"
    report(4, True, "ranks 1/2/2/2/4 over 20 seeds; 66 problems x 5 seeds at codim 11+w1")


# --- 5: parametrization jacobian --------------------------------------------

def test_05_jacobian(cal_witness):
    rng = seeds.child_rng(0, "accept", 5)
    worst = 0.0
    for _ in range(100):
        p = rng.normal(size=13) + 1j * rng.normal(size=13)
        jac = geometry.tensor_jacobian_params(p)
        # central differences over all 27 outputs
        h = 1e-7
        fd_full = np.empty((27, 13), dtype=complex)
        for j in range(13):
            e = np.zeros(13)
            e[j] = h
            fd_full[:, j] = (
                geometry.tensor_from_params(p + e) - geometry.tensor_from_params(p - e)
            ) / (2 * h)
        worst = max(worst, np.abs(jac - fd_full).max() / max(np.abs(jac).max(), 1.0))
    full_rank = True
    pws = cal_witness
    square = witness.sliced_square_system(pws.variety, pws.slc)
    for point in pws.points[:20]:
        if numlin.numerical_rank(square.jacobian(point)) != 13:
            full_rank = False
    report(
        5,
        worst <= 1e-5 and full_rank,
        f"100 FD checks max rel err {worst:.1e}; sliced jacobian full rank at 20 witness points",
    )


# --- 6: tracker oracles ------------------------------------------------------

def test_06_tracker_oracles():
    def quadric(c):
        return tracker.SquareSystem(
            1, lambda z: np.array([z[0] ** 2 - c]), lambda z: np.array([[2 * z[0]]])
        )

    rng = seeds.child_rng(0, "accept", 6)
    sys2 = tracker.SquareSystem(
        2,
        lambda z: np.array([z[0] ** 2 + z[1] ** 2 - 4, z[0] * z[1] - 1]),
        lambda z: np.array([[2 * z[0], 2 * z[1]], [z[1], z[0]]]),
    )
    ends2 = tracker.total_degree_solve(sys2, [2, 2], rng=rng)
    roots2 = witness.merge_points(None, np.array([e.point for e in ends2 if e.status == tracker.SUCCESS]))

    a = rng.normal(size=(3, 3, 3)) + 1j * rng.normal(size=(3, 3, 3))

    def eval3(z):
        return np.array([z @ a[i] @ z - 1.0 for i in range(3)])

    def jac3(z):
        return np.array([(a[i] + a[i].T) @ z for i in range(3)])

    ends3 = tracker.total_degree_solve(tracker.SquareSystem(3, eval3, jac3), [2, 2, 2], rng=rng)
    roots3 = witness.merge_points(None, np.array([e.point for e in ends3 if e.status == tracker.SUCCESS]))

    family_ok = True
    for _ in range(100):
        c = rng.normal() + 1j * rng.normal()
        if abs(c) < 0.1:
            continue
        end = tracker.track_path(quadric(1.0), quadric(c), [1.0])
        root = np.sqrt(complex(c))
        err = min(abs(end.point[0] - root), abs(end.point[0] + root))
        family_ok = family_ok and end.status == tracker.SUCCESS and err < 1e-10
    report(
        6,
        len(roots2) == 4 and len(roots3) == 8 and family_ok,
        f"Bezout counts {len(roots2)}/4 and {len(roots3)}/8; sqrt family to 1e-10",
    )


# --- 7: witness machinery on curves of known degree --------------------------

def test_07_witness_oracles():
    def curve(name, image_fn, deriv_fn, dim):
        return witness.ParametrizedVariety(
            name,
            1,
            dim,
            lambda p: np.stack(image_fn(p[:, 0]), axis=1),
            lambda p: np.stack(deriv_fn(p[:, 0]), axis=1)[:, :, None],
        )

    cubic = curve(
        "cubic",
        lambda t: [t, t * t, t ** 3],
        lambda t: [np.ones_like(t), 2 * t, 3 * t * t],
        3,
    )
    chart = np.array([0.0, 0.0, 1.0], dtype=complex)
    circle = witness.ParametrizedVariety(
        "circle",
        1,
        3,
        lambda p: np.stack([1 - p[:, 0] ** 2, 2 * p[:, 0], 1 + p[:, 0] ** 2], axis=1),
        lambda p: np.stack([-2 * p[:, 0], 2 * np.ones_like(p[:, 0]), 2 * p[:, 0]], axis=1)[:, :, None],
        chart=chart,
    )
    degrees = {}
    subsets_fail = True
    for var, start in ((cubic, 0.3 + 0.2j), (circle, 0.8 - 0.1j)):
        rng = seeds.child_rng(0, "accept", 7, var.name)
        slc = witness.random_slice(var, rng)
        refined = tracker.newton_refine(
            witness.sliced_square_system(var, slc), np.array([start]), tol=1e-12
        )
        pts, certified, _ = witness.monodromy_populate(var, slc, refined.point, rng)
        assert certified, f"{var.name} not certified"
        degrees[var.name] = pts.shape[0]
        for size in range(1, pts.shape[0]):
            for subset in itertools.combinations(range(pts.shape[0]), size):
                r = witness.run_trace_test(var, slc, pts[list(subset)])
                subsets_fail = subsets_fail and not r.passed
    report(
        7,
        degrees == {"cubic": 3, "circle": 2} and subsets_fail,
        f"monodromy+trace degrees {degrees}; every proper subset fails the trace",
    )


# --- 8: planted-solution recovery --------------------------------------------

def test_08_planted_recovery(cal_witness):
    config = geometry.random_configuration(seeds.child_rng(0, "accept", 8), real=True)
    w = slices.ProblemWeights(1, 4, 0, 0, 0)
    instance = slices.synthetic_consistent_instance(config, w, seed=8)
    records, _ = pipeline.solve_instance(cal_witness, instance, seed=8)
    target = pipeline.real_normal_form(config.params)
    dist = min(
        np.linalg.norm(pipeline.real_normal_form(r.params) - target)
        / (1.0 + np.linalg.norm(target))
        for r in records
    )
    report(8, dist <= 1e-6, f"planted configuration recovered at distance {dist:.1e}")


# --- 9: published fixture verifies at loosened tolerance ----------------------

def test_09_fixture_verification(reference_instance):
    import json
    from importlib import resources

    _, _, instance = reference_instance
    doc = json.loads(
        resources.files("trifocal.data").joinpath("reference_solution.json").read_text()
    )
    rec = pipeline.record_from_cameras(
        np.array(doc["camera_matrices"]["B"], dtype=complex),
        np.array(doc["camera_matrices"]["C"], dtype=complex),
    )
    verdicts = pipeline.verify_solution(rec, instance, abs_tol=5e-2)
    report(
        9,
        verdicts["all"],
        f"printed cameras pass all checks at 5e-2 ({verdicts}); "
        f"stated real count {doc['real_solution_count']} is informational",
    )


# --- 10-13: extended, hours-scale ---------------------------------------------

@extended
def test_10_main_degree():
    pws = witness.build_witness("cal", seed=0, budget=40)
    deg = pws.points.shape[0]
    report(10, pws.certified and deg == 4912, f"degree {deg}, certified={pws.certified}")


@extended
@pytest.mark.parametrize("locus,want", [("01", 2616), ("10", 2616), ("00", 1296)])
def test_11_degenerate_loci_degrees(locus, want):
    pws = witness.build_witness(locus, seed=0, budget=40)
    deg = pws.points.shape[0]
    report(
        11,
        pws.certified and deg == want,
        f"locus {locus}: degree {deg} (want {want}), certified={pws.certified}",
    )


@extended
def test_12_stage_counts(cal_witness, reference_instance):
    _, _, instance = reference_instance
    records, rep = pipeline.solve_instance(cal_witness, instance, seed=0)
    ladder = (
        rep.stage_counts[0],
        rep.stage_counts[1],
        rep.stage_counts[2],
        rep.stage_counts[-1],
    )
    dropped = rep.verdicts.count("nonphysical")
    fixture_ok = ladder == (4912, 2552, 1664, 160) and dropped == 888
    fresh_ok = True
    for s in (101, 202):
        run = pipeline.solve_problem(cal_witness, slices.ProblemWeights(1, 4, 0, 0, 0), s)
        fresh_ok = fresh_ok and run.degree == 160
    report(
        12,
        fixture_ok and fresh_ok,
        f"fixture ladder {ladder} with {dropped} non-physical; fresh seeds give 160",
    )


DESIGNATED_ROWS = [
    ((3, 1, 0, 0, 0), 272),
    ((3, 0, 0, 1, 0), 216),
    ((2, 0, 0, 0, 5), 1072),
    ((1, 4, 0, 0, 0), 160),
    ((0, 5, 0, 0, 1), 160),
    ((0, 1, 0, 0, 9), 3592),
    ((0, 0, 0, 0, 11), 4912),
    ((2, 0, 0, 2, 1), 304),
    ((1, 0, 0, 4, 0), 360),
    ((1, 1, 0, 3, 0), 368),
]


@extended
@pytest.mark.parametrize("weights,want", DESIGNATED_ROWS)
def test_13_table_rows(cal_witness, weights, want):
    degrees = []
    for s in (7, 77):
        run = pipeline.solve_problem(cal_witness, slices.ProblemWeights(*weights), s)
        assert run.degree % 8 == 0, f"{weights}: {run.degree} not divisible by 8"
        degrees.append(run.degree)
    report(
        13,
        all(d == want for d in degrees),
        f"{weights}: degrees {degrees} (want {want}) on 2 seeds",
    )
