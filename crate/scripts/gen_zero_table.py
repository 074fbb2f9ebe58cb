#!/usr/bin/env python3
"""Generate the bundled table of zeta-zero ordinates.

Zeros of Hardy's Z function are bracketed on a fine grid using the
Riemann-Siegel formula with remainder terms C0..C3, refined by vectorized
regula falsi, and polished with mpmath.siegelz below --polish-below. The
total count is cross-checked against mpmath.zetazero(n) for the last ordinate.

    python3 scripts/gen_zero_table.py --count 100000 --out data/zeros_100k.txt
"""
import argparse
import math
import sys

import mpmath
import numpy as np
from numpy.polynomial import chebyshev as cheb

TWO_PI = 2.0 * math.pi


def remainder_fits(degree=60):
    """Chebyshev fits on p in [0,1] of the Riemann-Siegel coefficients C0..C3."""
    mpmath.mp.dps = 40

    def psi(p):
        return mpmath.cos(2 * mpmath.pi * (p * p - p - mpmath.mpf(1) / 16)) / mpmath.cos(2 * mpmath.pi * p)

    nodes = np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1))
    pi = mpmath.pi
    cols = [[], [], [], []]
    for z in nodes:
        p = mpmath.mpf((z + 1.0) / 2.0)
        d = mpmath.diffs(psi, p, 9)
        d = [mpmath.mpf(v) for v in d]
        cols[0].append(d[0])
        cols[1].append(-d[3] / (96 * pi**2))
        cols[2].append(d[2] / (64 * pi**2) + d[6] / (18432 * pi**4))
        cols[3].append(-d[1] / (64 * pi**2) - d[5] / (3840 * pi**4) - d[9] / (5308416 * pi**6))
    return [cheb.chebfit(nodes, np.array([float(v) for v in c]), degree) for c in cols]


def theta(t):
    return t / 2.0 * np.log(t / TWO_PI) - t / 2.0 - math.pi / 8.0 + 1.0 / (48.0 * t) + 7.0 / (5760.0 * t**3)


def hardy_z(t, fits):
    t = np.asarray(t, dtype=np.float64)
    a = np.sqrt(t / TWO_PI)
    n_terms = np.floor(a).astype(np.int64)
    p = a - n_terms
    th = theta(t)
    total = np.zeros_like(t)
    for n in range(1, int(n_terms.max()) + 1):
        mask = n_terms >= n
        if not mask.any():
            break
        ph = th[mask] - t[mask] * math.log(n)
        total[mask] += np.cos(np.mod(ph, TWO_PI)) / math.sqrt(n)
    total *= 2.0
    z = 2.0 * p - 1.0
    inv = 1.0 / a
    rem = cheb.chebval(z, fits[0]) + inv * (cheb.chebval(z, fits[1]) + inv * (cheb.chebval(z, fits[2]) + inv * cheb.chebval(z, fits[3])))
    sign = np.where(n_terms % 2 == 1, 1.0, -1.0)
    return total + sign * rem / np.sqrt(a)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=100000)
    ap.add_argument("--out", required=True)
    ap.add_argument("--step", type=float, default=0.004)
    ap.add_argument("--polish-below", type=float, default=3000.0)
    args = ap.parse_args()

    fits = remainder_fits()
    mpmath.mp.dps = 25
    for t in (1000.0, 30000.0, 74000.3):
        err = abs(hardy_z(np.array([t]), fits)[0] - float(mpmath.siegelz(t)))
        print(f"Z check t={t}: |RS - mpmath| = {err:.2e}", file=sys.stderr)

    t_end = float(mpmath.zetazero(args.count + 1).imag)
    t_end = 0.5 * (t_end + float(mpmath.zetazero(args.count).imag))
    lo_b, hi_b, zlo, zhi = [], [], [], []
    start = 10.0
    chunk = 200000
    while start < t_end:
        grid = start + args.step * np.arange(chunk + 1)
        grid = grid[grid <= t_end + args.step]
        vals = hardy_z(grid, fits)
        idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        lo_b.append(grid[idx]); hi_b.append(grid[idx + 1])
        zlo.append(vals[idx]); zhi.append(vals[idx + 1])
        start = grid[-1]
    a = np.concatenate(lo_b); b = np.concatenate(hi_b)
    fa = np.concatenate(zlo); fb = np.concatenate(zhi)
    keep = a < t_end
    a, b, fa, fb = a[keep], b[keep], fa[keep], fb[keep]
    print(f"brackets found: {len(a)}", file=sys.stderr)
    if len(a) != args.count:
        sys.exit(f"expected {args.count} sign changes below {t_end}, found {len(a)}")

    side = np.zeros(len(a), dtype=np.int8)
    for _ in range(80):
        c = (a * fb - b * fa) / (fb - fa)
        fc = hardy_z(c, fits)
        left = np.sign(fc) == np.sign(fa)
        a = np.where(left, c, a); fa = np.where(left, fc, fa)
        b = np.where(left, b, c); fb = np.where(left, fb, fc)
        # Illinois modification
        fb = np.where(left & (side == 1), fb / 2, fb)
        fa = np.where(~left & (side == -1), fa / 2, fa)
        side = np.where(left, 1, -1).astype(np.int8)
        if np.max(b - a) < 1e-11:
            break
    roots = (a * fb - b * fa) / (fb - fa)

    mpmath.mp.dps = 30
    for i in np.nonzero(roots < args.polish_below)[0]:
        r = mpmath.findroot(mpmath.siegelz, (mpmath.mpf(a[i]) - 1e-6, mpmath.mpf(b[i]) + 1e-6), solver="anderson")
        roots[i] = float(r)

    check = float(mpmath.zetazero(args.count).imag)
    print(f"last ordinate {roots[-1]:.9f}, mpmath zetazero {check:.9f}", file=sys.stderr)
    if abs(roots[-1] - check) > 1e-8:
        sys.exit("last ordinate disagrees with mpmath")
    if np.any(np.diff(roots) <= 0):
        sys.exit("ordinates not strictly ascending")

    with open(args.out, "w") as fh:
        fh.write(f"# first {args.count} positive ordinates of nontrivial zeta zeros, 9 decimals\n")
        fh.write("# generated by scripts/gen_zero_table.py (Riemann-Siegel + mpmath polish)\n")
        for r in roots:
            fh.write(f"{r:.9f}\n")


if __name__ == "__main__":
    main()
