"""Convergence of the nonstandard L1 scheme on a scalar fractional IVP.

Solves ``D^a y = -y + f(t)`` with a manufactured solution for each
denominator function and prints the max-norm error with its observed order.
Run with ``python3 demos/ivp_convergence.py``.
"""

from __future__ import annotations

from nsfd.fraccore import effective_temporal_df, parse_df
from nsfd.ivp import example_problem, solve_ivp
from nsfd.report import dyadic_rates

ALPHA = 0.5
NS = (10, 20, 40, 80, 160, 320)
DFS = ("phi=tau", "phi=sinh", "phi=sin", "phi=scaled-expm1(c=1000)")


def main() -> None:
    problem = example_problem("ex1", ALPHA)
    for text in DFS:
        phi = effective_temporal_df(parse_df(text), ALPHA, "ratio")
        exact = problem.exact(problem.T)
        errors = [abs(exact - solve_ivp(problem, ALPHA, N, phi).y[-1]) for N in NS]
        rates = dyadic_rates(errors)
        print(f"{text}:")
        for N, e, r in zip(NS, errors, rates):
            print(f"  N={N:4d}  E={e:.4e}  rate={'' if r is None else f'{r:.4f}'}")


if __name__ == "__main__":
    main()
