"""A Cherry flow on the torus and its first-return map.

The linear flow (0.3, 1) is bent by a periodic bump until a sink and a
saddle appear.  Trajectories starting on the circle y = 0 either reach
y = 1 or fall into the sink.  The captured starting points form an
interval, so the first-return map is monotone, constant on that interval
and a homeomorphism elsewhere.  We compute the map, its rotation number
and the power laws with which it leaves the flat value at both ends.
"""

import numpy as np

from bilag.torus import (cherry_field, critical_exponents, grid_inversions, return_map, rotation_number,
                         sink_and_saddle, validate_cherry)


def main():
    X = cherry_field()
    print(validate_cherry(X).summary())
    sinks, saddles = sink_and_saddle(X)
    for s in sinks + saddles:
        print(f"{s.kind:>18} at {np.round(s.location, 6)}, eigenvalues {np.round(s.eigenvalues.real, 4)}")

    f = return_map(X, grid=512)
    print(f"\nflat piece ({f.a:.6f}, {f.b:.6f}) of width {f.width:.4f}, flat value {f.v % 1:.6f}")
    print(f"one-sided limit gap {f.meta['one_sided_gap']:.2e}, grid inversions {grid_inversions(f)}")
    if "separatrix_gap" in f.meta:
        print(f"flat value vs unstable separatrix of the saddle: {f.meta['separatrix_gap']:.2e}")

    rho = rotation_number(f, 10_000)
    print(f"\nrotation number {rho.value:.6f} (enclosure width {rho.width:.1e})")

    fit = critical_exponents(f)
    print(f"exponents: left {fit.l1:.3f} (R^2 {fit.r2_left:.4f}), right {fit.l2:.3f} (R^2 {fit.r2_right:.4f})")

    xs = np.linspace(0, 1, 9)
    print("\n     x    f(x) mod 1")
    for x, y in zip(xs, np.mod(f.lift(xs), 1.0)):
        print(f"{x:6.3f}  {y:.6f}")


if __name__ == "__main__":
    main()
