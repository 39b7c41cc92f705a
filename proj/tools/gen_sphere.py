#!/usr/bin/env python3
"""Generate the exact rational unit-sphere fixture (six degree-(4,4) NURBS patches).

The construction uses the quaternion square root of the point map: for any
quaternion-valued polynomial q(s,t) without zeros, x = q k conj(q) / |q|^2 with
k = (0,0,1) lies exactly on the unit sphere, and numerator/denominator are
polynomials of twice the degree, i.e. an exact NURBS patch.

One face (+z) is built explicitly:
  * corner quaternions r_c rotate k onto the four top cube corners
    (+-1,+-1,1)/sqrt(3) by the shortest rotation;
  * each boundary arc gets the symmetric quadratic Bezier lift
    {r_a, (r_a e^{-dk} + r_b e^{+dk})/2, r_b} with twist d = atan2(-g_z, g_w),
    g = conj(r_a) r_b, which projects onto the great-circle arc (the twist
    absorbs the pi/12 holonomy of the spherical square);
  * the interior is the quaternion Coons patch of the four lifts, which stays
    biquadratic, so q k conj(q) and |q|^2 are bidegree (4,4).
The remaining five faces are exact signed-permutation rotations of the +z
homogeneous Bernstein data, which keeps shared boundaries binary-identical
(up to parameter reversal) and hence watertight.

The script verifies radius, weight positivity, outward orientation,
watertightness and total area before writing data/sphere.dat.

Usage: python3 tools/gen_sphere.py [output.dat]
"""

import sys
from math import comb
from pathlib import Path

import numpy as np


def qmul(a, b):
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def qconj(a):
    return np.array([a[0], -a[1], -a[2], -a[3]])


def qexp_k(phi):
    return np.array([np.cos(phi), 0.0, 0.0, np.sin(phi)])


def rotate_k(q):
    """q k conj(q) as a 3-vector; |result| = |q|^2."""
    w, x, y, z = q
    return np.array([2 * (x * z + w * y), 2 * (y * z - w * x),
                     w * w - x * x - y * y + z * z])


def corner_quat(c):
    """Shortest rotation taking k = (0,0,1) to the unit vector c/|c|."""
    c = np.asarray(c, float) / np.linalg.norm(c)
    axis = np.array([-c[1], c[0], 0.0])
    axis /= np.linalg.norm(axis)
    half = 0.5 * np.arccos(c[2])
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def edge_lift(ra, rb):
    """Symmetric quadratic lift of the great-circle arc between the images."""
    g = qmul(qconj(ra), rb)
    d = np.arctan2(-g[3], g[0])
    mid = 0.5 * (qmul(ra, qexp_k(-d)) + qmul(rb, qexp_k(d)))
    return np.array([ra, mid, rb])


def bern_mul(f, g):
    """Product of two bidegree-(2,2) Bernstein coefficient grids -> (4,4)."""
    out = np.zeros((5, 5))
    for i1 in range(3):
        for j1 in range(3):
            for i2 in range(3):
                for j2 in range(3):
                    c = (comb(2, i1) * comb(2, i2) / comb(4, i1 + i2)) * \
                        (comb(2, j1) * comb(2, j2) / comb(4, j1 + j2))
                    out[i1 + i2, j1 + j2] += c * f[i1, j1] * g[i2, j2]
    return out


def build_top_face():
    """Homogeneous bidegree-(4,4) Bernstein data (W, N) of the +z face."""
    c = {s: corner_quat([s[0], s[1], 1]) for s in
         [(-1, -1), (1, -1), (-1, 1), (1, 1)]}
    bottom = edge_lift(c[(-1, -1)], c[(1, -1)])   # t = 0
    top = edge_lift(c[(-1, 1)], c[(1, 1)])        # t = 1
    left = edge_lift(c[(-1, -1)], c[(-1, 1)])     # s = 0
    right = edge_lift(c[(1, -1)], c[(1, 1)])      # s = 1

    one_m = np.array([1.0, 0.5, 0.0])  # (1-x) in degree-2 Bernstein
    lin = np.array([0.0, 0.5, 1.0])    # x in degree-2 Bernstein
    q = np.zeros((3, 3, 4))
    for i in range(3):
        for j in range(3):
            q[i, j] += bottom[i] * one_m[j] + top[i] * lin[j]
            q[i, j] += one_m[i] * left[j] + lin[i] * right[j]
            q[i, j] -= (one_m[i] * one_m[j] * c[(-1, -1)] +
                        lin[i] * one_m[j] * c[(1, -1)] +
                        one_m[i] * lin[j] * c[(-1, 1)] +
                        lin[i] * lin[j] * c[(1, 1)])

    qw, qx, qy, qz = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    weight = (bern_mul(qw, qw) + bern_mul(qx, qx) +
              bern_mul(qy, qy) + bern_mul(qz, qz))
    numer = np.stack([
        2 * (bern_mul(qx, qz) + bern_mul(qw, qy)),
        2 * (bern_mul(qy, qz) - bern_mul(qw, qx)),
        bern_mul(qw, qw) - bern_mul(qx, qx) - bern_mul(qy, qy) + bern_mul(qz, qz),
    ], axis=-1)
    return weight, numer


# Proper rotations mapping the +z face onto each face, patch order below.
ROTATIONS = [
    ("px", np.array([[0., 0., 1.], [0., 1., 0.], [-1., 0., 0.]])),
    ("mx", np.array([[0., 0., -1.], [0., 1., 0.], [1., 0., 0.]])),
    ("py", np.array([[1., 0., 0.], [0., 0., 1.], [0., -1., 0.]])),
    ("my", np.array([[1., 0., 0.], [0., 0., -1.], [0., 1., 0.]])),
    ("pz", np.eye(3)),
    ("mz", np.diag([1., -1., -1.])),
]


def bernstein_basis(n, x):
    return np.array([comb(n, i) * x ** i * (1 - x) ** (n - i) for i in range(n + 1)])


def eval_patch(weight, numer, s, t):
    bs = bernstein_basis(4, s)
    bt = bernstein_basis(4, t)
    w = np.einsum("i...,j...,ij->...", bs, bt, weight)
    n = np.einsum("i...,j...,ijc->...c", bs, bt, numer)
    return n / w[..., None]


def verify(patches):
    grid = np.linspace(0.0, 1.0, 33)
    ss, tt = np.meshgrid(grid, grid, indexing="ij")
    eps = 1e-6
    nodes, wts = np.polynomial.legendre.leggauss(25)
    nodes = (nodes + 1) / 2
    wts = wts / 2
    area = 0.0
    for name, weight, numer in patches:
        assert weight.min() > 0.5, f"{name}: nonpositive weight"
        x = eval_patch(weight, numer, ss, tt)
        rad_err = np.abs(np.linalg.norm(x, axis=-1) - 1).max()
        assert rad_err < 1e-13, f"{name}: radius error {rad_err}"
        for s, ws in [(a, b) for a, b in zip(nodes, wts)]:
            xs = (eval_patch(weight, numer, s + eps, nodes) -
                  eval_patch(weight, numer, s - eps, nodes)) / (2 * eps)
            xt = (eval_patch(weight, numer, s, nodes + eps) -
                  eval_patch(weight, numer, s, nodes - eps)) / (2 * eps)
            x0 = eval_patch(weight, numer, s, nodes)
            cr = np.cross(xs, xt)
            jac = np.linalg.norm(cr, axis=-1)
            assert jac.min() > 1e-2, f"{name}: degenerate Jacobian"
            assert (np.einsum("ic,ic->i", cr, x0) > 0).all(), f"{name}: inward normal"
            area += ws * np.sum(wts * jac)

    assert abs(area - 4 * np.pi) < 1e-6, f"area {area} != 4pi"

    # watertightness: every patch boundary appears on exactly one other patch,
    # as identical homogeneous data up to parameter reversal
    def strips(weight, numer):
        h = np.concatenate([numer, weight[..., None]], axis=-1)
        return [h[:, 0], h[:, -1], h[0, :], h[-1, :]]

    bnd = [b for _, weight, numer in patches for b in strips(weight, numer)]
    for i, bi in enumerate(bnd):
        hits = sum(1 for j, bj in enumerate(bnd) if i != j and
                   (np.allclose(bi, bj, atol=1e-13) or
                    np.allclose(bi, bj[::-1], atol=1e-13)))
        assert hits == 1, f"boundary {i} matched {hits} times"


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else \
        Path(__file__).resolve().parent.parent / "data" / "sphere.dat"
    weight, numer = build_top_face()
    patches = [(name, weight, np.einsum("ab,ijb->ija", rot, numer))
               for name, rot in ROTATIONS]
    verify(patches)

    lines = ["NURBS_MULTIPATCH 1", f"patches {len(patches)}"]
    knots = " ".join(["0"] * 5 + ["1"] * 5)
    for pid, (name, w, n) in enumerate(patches):
        lines.append(f"patch {pid}")
        lines.append("degrees 4 4")
        lines.append(f"knots_u 10 {knots}")
        lines.append(f"knots_v 10 {knots}")
        lines.append("net 5 5")
        ctrl = n / w[..., None]
        for j in range(5):        # v index
            for i in range(5):    # u index, fastest
                px, py, pz = (f"{ctrl[i, j, c]:.17g}" for c in range(3))
                lines.append(f"{px} {py} {pz} {w[i, j]:.17g}")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out} ({len(patches)} patches), verification passed")


if __name__ == "__main__":
    main()
