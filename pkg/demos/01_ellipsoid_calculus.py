"""Ellipsoid calculus walkthrough: supports, images, sums, containment.

Run with:  python demos/01_ellipsoid_calculus.py
"""

import numpy as np

from reachsep import Ellipsoid, affine_map, contains, minkowski_sum_external, support

rng = np.random.default_rng(0)

# --- support functions -------------------------------------------------------
# E(c, M) has support <l, c> + <l, M l>^(1/2); the maximizer is an actual
# boundary point, which makes every support value a constructive certificate.
ball = Ellipsoid.ball([0.0, 0.0], 1.0)
val, pt = support(ball, [0.6, 0.8])
print("unit ball, direction (0.6, 0.8):")
print(f"  support value = {val:.6f}, touching point = {np.round(pt, 6)}")

stretched = Ellipsoid([1.0, 2.0], np.diag([4.0, 9.0]))
val, pt = support(stretched, [0.0, 1.0])
print(f"E((1,2), diag(4,9)) along +y: support = {val:.6f} (center 2 + semi-axis 3)")

# --- affine images ------------------------------------------------------------
# images satisfy support(T E + b, l) = support(E, T'l) + <l, b> exactly
T = np.array([[2.0, 0.0], [0.0, 3.0]])
img = affine_map(ball, T, [1.0, 0.0])
print("\naffine image of the unit ball under diag(2,3) + (1,0):")
print(f"  center = {img.center}, shape diag = {np.diag(img.shape)}")
l = rng.standard_normal(2)
lhs = support(img, l)[0]
rhs = support(ball, T.T @ l)[0] + l @ [1.0, 0.0]
print(f"  duality check along a random l: |lhs - rhs| = {abs(lhs - rhs):.2e}")

# --- Minkowski sums -----------------------------------------------------------
# the direction-tight external sum touches the true sum along the chosen l
# and contains it everywhere else
a = Ellipsoid.ball([0.0, 0.0], 1.0)
b = Ellipsoid.ball([0.0, 0.0], 2.0)
s = minkowski_sum_external(a, b, [1.0, 0.0])
print("\nball(1) + ball(2), tight along +x:")
print(f"  shape = {np.diag(s.shape)} (radius {np.sqrt(s.shape[0, 0]):.1f} ball)")
worst = -np.inf
for _ in range(500):
    m = rng.standard_normal(2)
    worst = max(worst, support(a, m)[0] + support(b, m)[0] - support(s, m)[0])
print(f"  worst containment slack over 500 directions: {worst:.2e} (<= 0 up to rounding)")

# --- containment with an explicit witness -------------------------------------
outer = Ellipsoid.ball([0.0, 0.0], 1.0)
inner = Ellipsoid([0.5, 0.0], 0.04 * np.eye(2))
ok, lam = contains(outer, inner)
print(f"\nE((0.5,0), 0.2^2 I) inside the unit ball: {ok} (witness lambda = {lam:.4f})")
inner_big = Ellipsoid([0.9, 0.0], 0.04 * np.eye(2))
ok, lam = contains(outer, inner_big)
print(f"shifted to (0.9, 0): {ok} (the sets poke out near the boundary)")
