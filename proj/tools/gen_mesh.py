#!/usr/bin/env python3
"""Generate Delaunay triangulations of disks and ellipses as ASCII MSH 2.2.

The interior points form a jittered hexagonal lattice. Boundary triangles
whose angle opposite the boundary edge is not acute are repaired by removing
the offending interior vertex, so every circumcenter lies in the domain.
"""
import argparse
import math

import numpy as np
from scipy.spatial import Delaunay


def boundary_points(a, b, h):
    # Ramanujan's perimeter approximation is plenty for spacing purposes.
    perim = math.pi * (3 * (a + b) - math.sqrt((3 * a + b) * (a + 3 * b)))
    n = max(12, int(round(perim / h)))
    # Sample by arc length on a fine parametrisation.
    t = np.linspace(0.0, 2 * math.pi, 20 * n + 1)
    xy = np.stack([a * np.cos(t), b * np.sin(t)], axis=1)
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(xy, axis=0), axis=1))])
    target = np.linspace(0.0, s[-1], n, endpoint=False)
    tt = np.interp(target, s, t)
    return np.stack([a * np.cos(tt), b * np.sin(tt)], axis=1)


def interior_points(a, b, h, jitter, rng):
    pts = []
    dy = h * math.sqrt(3) / 2
    j = 0
    y = -b
    while y <= b:
        x0 = -a + (0.5 * h if j % 2 else 0.0)
        x = x0
        while x <= a:
            pts.append((x, y))
            x += h
        y += dy
        j += 1
    pts = np.array(pts) + rng.uniform(-jitter * h, jitter * h, size=(len(pts), 2))
    # Keep points comfortably inside: scaled radius below 1 - 0.75 h / min(a, b).
    r = np.sqrt((pts[:, 0] / a) ** 2 + (pts[:, 1] / b) ** 2)
    return pts[r < 1.0 - 0.75 * h / min(a, b)]


def obtuse_boundary_vertices(pts, tris, n_boundary):
    bad = set()
    for tri in tris:
        on_b = [v < n_boundary for v in tri]
        if sum(on_b) < 2:
            continue
        for k in range(3):
            i, j, o = tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]
            if not (i < n_boundary and j < n_boundary):
                continue
            # Only edges between consecutive boundary points lie on the boundary.
            if abs(i - j) not in (1, n_boundary - 1):
                continue
            u = pts[i] - pts[o]
            w = pts[j] - pts[o]
            if np.dot(u, w) <= 1e-9 * np.dot(u, u) and o >= n_boundary:
                bad.add(o)
    return bad


def triangulate(a, b, h, jitter, seed):
    rng = np.random.default_rng(seed)
    bnd = boundary_points(a, b, h)
    inner = interior_points(a, b, h, jitter, rng)
    while True:
        pts = np.vstack([bnd, inner])
        tri = Delaunay(pts)
        bad = obtuse_boundary_vertices(pts, tri.simplices, len(bnd))
        if not bad:
            break
        keep = [i for i in range(len(inner)) if i + len(bnd) not in bad]
        inner = inner[keep]
    tris = []
    for t in tri.simplices:
        p0, p1, p2 = pts[t]
        cross = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
        if abs(cross) < 1e-12 * h * h:
            continue
        tris.append(t if cross > 0 else t[[0, 2, 1]])
    return pts, np.array(tris)


def write_msh(path, pts, tris):
    with open(path, "w") as f:
        f.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n%d\n" % len(pts))
        for i, (x, y) in enumerate(pts):
            f.write("%d %.17g %.17g 0\n" % (i + 1, x, y))
        f.write("$EndNodes\n$Elements\n%d\n" % len(tris))
        for k, t in enumerate(tris):
            f.write("%d 2 2 0 1 %d %d %d\n" % (k + 1, t[0] + 1, t[1] + 1, t[2] + 1))
        f.write("$EndElements\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("output")
    ap.add_argument("--a", type=float, required=True, help="semi-axis along x")
    ap.add_argument("--b", type=float, help="semi-axis along y (default: a)")
    ap.add_argument("--h", type=float, required=True, help="target edge length")
    ap.add_argument("--jitter", type=float, default=0.12)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    b = args.b if args.b is not None else args.a
    pts, tris = triangulate(args.a, b, args.h, args.jitter, args.seed)
    write_msh(args.output, pts, tris)
    print("%s: %d nodes, %d triangles" % (args.output, len(pts), len(tris)))


if __name__ == "__main__":
    main()
