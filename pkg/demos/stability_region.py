"""Absolute stability of the scheme for ``D^a y = lambda y``.

Traces the boundary locus for a few orders, then shows how the largest root
modulus behaves inside and outside the region as the history grows.
Run with ``python3 demos/stability_region.py``.
"""

from __future__ import annotations

import numpy as np

from nsfd.locus import boundary_locus, rmax_scan

ALPHAS = (0.2, 0.4, 0.6, 0.8)


def main() -> None:
    for alpha in ALPHAS:
        c = boundary_locus(alpha, 400)
        print(f"alpha={alpha}: locus spans x_hat in [{c.x_hat.min():.3f}, {c.x_hat.max():.3f}]")

    ns = list(range(10, 201, 10))
    for alpha in ALPHAS:
        scan = rmax_scan(alpha, 200, (-0.5, 0.5, 1.5), ns)
        for th, series in scan.items():
            r = np.array([v for _, v in series])
            verdict = "stable" if np.all(r < 1) else f"unstable from n={ns[int(np.argmax(r >= 1))]}"
            print(f"alpha={alpha} tau_hat={th:+.1f}: max r={r.max():.6f} ({verdict})")


if __name__ == "__main__":
    main()
