"""
A tour of the trifocal tensor
=============================

Three calibrated cameras looking at the same scene are tied together by a
3x3x3 tensor of 4x4 minors.  This script builds one, checks that it "sees"
incidences between matched image features, and demonstrates the symmetries
that make counting solutions possible in the first place.
"""
import numpy as np

from trifocal import geometry, seeds

rng = seeds.child_rng(0, "demo", "tensor")

# --- a random calibrated configuration -----------------------------------
# First camera pinned to [I | 0]; the other two carry quaternion rotations.
config = geometry.random_configuration(rng, real=True)
a_cam, b_cam, c_cam = config.cameras()
print("second camera:\n", np.round(b_cam.real, 3))

tensor = geometry.trifocal_tensor(a_cam, b_cam, c_cam)
print("tensor magnitude:", round(float(np.linalg.norm(tensor)), 3))

# The packaged parametrization agrees with the determinant definition.
assert np.allclose(tensor, geometry.configuration_tensor(config))

# --- incidence: point in view 1, lines in views 2 and 3 ------------------
# Projecting a world point/line pair through all three cameras gives a
# point-line-line correspondence, and the tensor contracts to ~zero on it.
x, lp, lpp = geometry.forward_correspondence(
    "PLL", a_cam, b_cam, c_cam, rng.normal(size=4), rng.normal(size=4)
)
value = geometry.tensor_contract(tensor, first=x, second=lp, third=lpp)
print("trilinear value on a true correspondence:", f"{abs(value):.2e}")

value_off = geometry.tensor_contract(
    tensor, first=x, second=lp, third=rng.normal(size=3)
)
print("trilinear value on a broken correspondence:", f"{abs(value_off):.2e}")

# --- symmetry: world-frame changes do nothing ----------------------------
# Any rotation+translation+dilation of world coordinates rescales the
# tensor; that is why solutions are counted as camera *configurations*.
h = np.eye(4, dtype=complex)
h[:3, :3] = geometry.quaternion_rotation(rng.normal(size=4))
h[:3, 3] = rng.normal(size=3)
t2 = geometry.trifocal_tensor(a_cam @ h, b_cam @ h, c_cam @ h)
t2_flat, t_flat = t2.reshape(27), tensor.reshape(27)
k = np.argmax(np.abs(t_flat))
ratio = t2_flat[k] / t_flat[k]
print("world-frame change scales tensor by:", round(float(abs(ratio)), 3))
print("residual after unscaling:", f"{np.abs(t2_flat / ratio - t_flat).max():.2e}")
