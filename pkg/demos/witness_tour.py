"""
Witness sets: degrees without symbols
=====================================

The degree of a parametrized variety is how many points a random
complementary-dimension linear slice cuts out of it.  Monodromy finds those
points, the trace test proves none are missing.  Everything is exercised on
a curve whose degree you know from school before trusting it with anything
bigger.
"""
import numpy as np

from trifocal import seeds, tracker, witness

# --- the twisted cubic, degree 3 ------------------------------------------
# t -> (t, t^2, t^3).  A random hyperplane meets it in three points.


def image(params):
    t = params[:, 0]
    return np.stack([t, t * t, t ** 3], axis=1)


def jac(params):
    t = params[:, 0]
    return np.stack([np.ones_like(t), 2 * t, 3 * t * t], axis=1)[:, :, None]


curve = witness.ParametrizedVariety("twisted cubic", 1, 3, image, jac)
rng = seeds.child_rng(0, "demo", "witness")
slc = witness.random_slice(curve, rng)

# one root by Newton from a random guess, the rest by monodromy
square = witness.sliced_square_system(curve, slc)
seed_pt = tracker.newton_refine(square, np.array([0.4 + 0.1j]), tol=1e-12).point
points, certified, loops = witness.monodromy_populate(curve, slc, seed_pt, rng)
print(f"twisted cubic: {points.shape[0]} points after {loops} loops, certified={certified}")

# the closed-form roots of the same slice, for comparison
r, c = slc.rows[0], slc.constants[0]
exact = np.sort_complex(np.roots([r[2], r[1], r[0], -c]))
print("  monodromy:", np.round(np.sort_complex(points[:, 0]), 6))
print("  closed form:", np.round(exact, 6))

# --- the trace test catches incomplete sets -------------------------------
partial = points[:2]
full_result = witness.run_trace_test(curve, slc, points)
part_result = witness.run_trace_test(curve, slc, partial)
print(f"trace deviation, all 3 points: {full_result.deviation:.1e} -> passed={full_result.passed}")
print(f"trace deviation, only 2 points: {part_result.deviation:.1e} -> passed={part_result.passed}")

# --- the real thing --------------------------------------------------------
# The calibrated trifocal variety lives in P^26, parametrized by 13 numbers
# (two quaternions, two translations, one chart normalization).  Its shipped
# witness set was grown the same way; loading it is instant.
try:
    pws = witness.bundled_witness("cal")
except witness.WitnessError:
    print("no bundled witness data in this checkout; run the witness CLI to build one")
else:
    print("calibrated trifocal variety: degree", witness.degree(pws))
    print("  points:", pws.points.shape, " certified:", pws.certified)
    res = witness.membership_residuals(pws.variety, pws.slc, pws.points[:100])
    print(f"  membership residual (first 100 points): {res.max():.1e}")
