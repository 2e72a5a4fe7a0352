#!/usr/bin/env python3
"""Regenerates src/suplm_table.inc.

Simulates the null distribution of the supLM statistic for a 2-dimensional
score process: sup over t in [trim, 1-trim] of ||B(t)||^2 / (t(1-t)) with
B a 2-dim Brownian bridge discretized on an m-point grid. The statistic
computed from n observations is distributed like the bridge discretized at
m = n points, so quantiles are tabulated over (grid size, trim) and the
C++ side interpolates in 1/m and trim.

Usage: python3 tools/gen_suplm_table.py [--reps 150000]
"""

import argparse
import numpy as np

TRIMS = [0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45]
GRIDS = [40, 70, 120, 200, 350, 600, 1000, 1600]
NPROB = 1999  # quantiles at i/2000, i = 1..1999


def simulate(reps, m, dim, seed, trims):
    rng = np.random.default_rng(seed)
    stats = {tr: np.empty(reps) for tr in trims}
    chunk = max(1, 4_000_000 // m)
    done = 0
    t = np.arange(1, m) / m  # interior grid points
    denom = t * (1.0 - t)
    while done < reps:
        c = min(chunk, reps - done)
        incr = rng.standard_normal((c, m, dim)) / np.sqrt(m)
        w = np.cumsum(incr, axis=1)
        bridge = w[:, :-1, :] - t[None, :, None] * w[:, -1:, :]
        proc = (bridge ** 2).sum(axis=2) / denom[None, :]
        for tr in trims:
            lo = int(np.ceil(tr * m)) - 1
            hi = int(np.floor((1.0 - tr) * m))
            lo = max(lo, 0)
            stats[tr][done:done + c] = proc[:, lo:hi].max(axis=1)
        done += c
    return stats


def fmt_float(v):
    s = f"{v:.6g}"
    if "." not in s and "e" not in s:
        s += ".0"
    return s + "f"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=150000)
    ap.add_argument("--seed", type=int, default=20240817)
    ap.add_argument("--out", default="src/suplm_table.inc")
    args = ap.parse_args()

    probs = np.arange(1, NPROB + 1) / (NPROB + 1)
    with open(args.out, "w") as f:
        f.write("// Generated by tools/gen_suplm_table.py -- do not edit.\n")
        f.write(f"// reps={args.reps} seed={args.seed}\n")
        f.write(f"static constexpr int kSuplmNumTrims = {len(TRIMS)};\n")
        f.write(f"static constexpr int kSuplmNumGrids = {len(GRIDS)};\n")
        f.write(f"static constexpr int kSuplmNumProbs = {NPROB};\n")
        f.write("static constexpr double kSuplmTrims[kSuplmNumTrims] = {")
        f.write(", ".join(f"{tr:.2f}" for tr in TRIMS))
        f.write("};\n")
        f.write("static constexpr double kSuplmGrids[kSuplmNumGrids] = {")
        f.write(", ".join(str(m) for m in GRIDS))
        f.write("};\n")
        f.write("static const float kSuplmQuantiles"
                "[kSuplmNumGrids][kSuplmNumTrims][kSuplmNumProbs] = {\n")
        for gi, m in enumerate(GRIDS):
            stats = simulate(args.reps, m, 2, args.seed + gi, TRIMS)
            f.write("{\n")
            for tr in TRIMS:
                q = np.quantile(stats[tr], probs)
                f.write("{")
                f.write(",".join(fmt_float(v) for v in q))
                f.write("},\n")
            f.write("},\n")
            print(f"grid {m} done")
        f.write("};\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
