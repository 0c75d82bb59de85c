#!/usr/bin/env python3
"""Walk through the sawtooth privacy-entropy model.

Privacy entropy measures how uncertain a tracker is about who is behind a
pseudonym. Right after a change it jumps to a reset level that depends on
the tracking probability p, then bleeds away linearly until it hits a
floor. This script draws the curve as ASCII art, shows how the average
entropy over an inter-change interval falls as changes get rarer, and
checks the closed form against brute-force integration.
"""

import numpy as np

from pseudotwin.entropy import (
    EntropyParams,
    average_entropy,
    decay_time,
    instantaneous_entropy,
    reset_level,
    timeline,
    tracking_entropy,
)

PARAMS = EntropyParams(h_max=1.5, h_0=1.0, h_min=0.25, alpha=1.0, p=0.5)


def ascii_curve(tl, width=72, height=12):
    ts = np.linspace(0.0, tl.horizon, width)
    vals = [tl.value(float(t)) for t in ts]
    lo, hi = PARAMS.h_min, PARAMS.h_max
    rows = []
    for level in range(height, -1, -1):
        y = lo + (hi - lo) * level / height
        row = "".join("*" if abs(v - y) <= (hi - lo) / (2 * height) else " " for v in vals)
        rows.append(f"{y:5.2f} |{row}")
    rows.append("      +" + "-" * width)
    return "\n".join(rows)


def main():
    print("tracking entropy -log2(p):")
    for p in (1.0, 0.5, 0.25, 0.1):
        print(f"  p={p:<5} -> {tracking_entropy(p):.3f} bits")

    print(f"\nreset level for p={PARAMS.p}: {reset_level(PARAMS):.3f} bits")
    print(f"time to decay to the floor: {decay_time(PARAMS):.3f}")

    print("\nentropy over time with changes at t = 1.0, 2.2, 3.0:")
    tl = timeline(PARAMS, [1.0, 2.2, 3.0], horizon=4.0)
    print(ascii_curve(tl))

    print("\ninstantaneous values since the last change:")
    for t in (0.0, 0.25, 0.5, 0.75, 1.5):
        print(f"  t={t:<5} -> {instantaneous_entropy(PARAMS, t):.3f} bits")

    print("\naverage entropy vs inter-change interval (longer gap = weaker privacy):")
    for tau in (0.25, 0.5, 0.75, 1.0, 2.0, 4.0):
        closed = average_entropy(PARAMS, tau)
        ts = np.linspace(0.0, tau, 200_001)
        vals = np.maximum(PARAMS.h_min, reset_level(PARAMS) - PARAMS.alpha * ts)
        brute = float(np.trapezoid(vals, ts) / tau)
        print(f"  tau={tau:<5} closed={closed:.6f}  brute-force={brute:.6f}")


if __name__ == "__main__":
    main()
