"""Explicit time-fractional diffusion near its stability limit.

Runs the 1D manufactured problem on a stretched domain and refines the mesh
until the standard spatial denominator ``h^2`` blows up, comparing with a
nonstandard one that tolerates a slightly finer mesh.
Run with ``python3 demos/diffusion_frontier.py`` (about a minute).
"""

from __future__ import annotations

from nsfd.fraccore import parse_df, standard_effective_df
from nsfd.tfde import SchemeConfig, analytic_max_M, divergence_onset, stability_frontier_scan

ALPHA, L, N = 0.9, 5.0848, 10000


def main() -> None:
    phi = standard_effective_df(ALPHA)
    psis = (parse_df("psi=h2"), parse_df("psi=scaled-exp-sq(c=1)"))
    scan = stability_frontier_scan(ALPHA, L, N, phi, psis, range(222, 234))
    for psi in psis:
        bound = analytic_max_M(SchemeConfig(ALPHA, N, phi, psi), L)
        print(f"{psi.text}: sufficient bound M <= {bound}, "
              f"observed onset M = {divergence_onset(scan[psi.text])}")
        for pt in scan[psi.text]:
            print(f"  M={pt.M}  {'diverged' if pt.diverged else f'E={pt.E_inf:.4e}'}")


if __name__ == "__main__":
    main()
