"""Named experiments and their default parameters.

Each runner receives the resolved parameters and returns a list of
``(filename, text)`` outputs plus a flag telling whether divergence was seen.
Plot data (two whitespace-separated columns) is produced alongside when
requested.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from nsfd import ivp, locus, tfde
from nsfd.fraccore import DFKind, parse_df

# {{{ parameter parsing


class ConfigError(ValueError):
    pass


def split_list(text: str) -> list[str]:
    """Split on commas or semicolons that are not inside parentheses."""
    items, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch in ",;" and depth == 0:
            items.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    items.append("".join(cur).strip())
    return [s for s in items if s]


def _int_list(text: str) -> list[int]:
    out = []
    for item in split_list(text):
        m = re.fullmatch(r"(-?\d+)\.\.(-?\d+)(?::(\d+))?", item)
        if m:
            lo, hi, step = int(m[1]), int(m[2]), int(m[3] or 1)
            out.extend(range(lo, hi + 1, step))
        else:
            out.append(int(item))
    return out


def _float_list(text: str) -> list[float]:
    return [float(s) for s in split_list(text)]


def _df_check(kind: DFKind, alpha_key: str | None = None):
    def check(text: str, params: dict) -> str:
        alpha = params.get(alpha_key) if alpha_key else None
        if isinstance(alpha, list):
            alpha = alpha[0]
        df = parse_df(text, alpha if kind is DFKind.TemporalEffective else None)
        if df.kind is not kind:
            raise ConfigError(f"{text!r} is not a {kind.value} DF")
        return df.text
    return check


def _df_list_check(kind: DFKind):
    single = _df_check(kind)

    def check(text: str, params: dict) -> list[str]:
        return [single(item, params) for item in split_list(text)]
    return check


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


# key -> parser(text) or checker(text, params)
PARSERS: dict[str, Callable] = {
    "example": str,
    "alpha": float,
    "alphas": _float_list,
    "N": int,
    "N_list": _int_list,
    "M_list": _int_list,
    "T": float,
    "L": float,
    "num_samples": int,
    "n": int,
    "N_ceiling": int,
    "n_values": _int_list,
    "tau_hats": _float_list,
    "variant": str,
    "mode": str,
    "quantize": str,
    "kind": str,
}
DF_CHECKS: dict[str, Callable] = {
    "dfs": _df_list_check(DFKind.TemporalBase),
    "phieff": _df_check(DFKind.TemporalEffective, "alpha"),
    "psis": _df_list_check(DFKind.Spatial),
}


def parse_value(key: str, text: str, params: dict):
    if key in DF_CHECKS:
        return DF_CHECKS[key](text, params)
    if key not in PARSERS:
        raise ConfigError(f"unknown parameter {key!r}")
    try:
        return PARSERS[key](text)
    except ValueError as exc:
        raise ConfigError(f"invalid value for {key}: {text!r} ({exc})") from None


def format_value(value) -> str:
    if isinstance(value, list):
        return ",".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# }}}

# {{{ outputs


def safe_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9.+-]+", "_", text).strip("_")


def plot_data(x, y) -> str:
    return "".join(f"{a!r} {b!r}\n" for a, b in zip(x, y) if b is not None)


@dataclass
class Outputs:
    files: list[tuple[str, str]]
    diverged: bool = False


# }}}

# {{{ runners

IVP_DFS = ["phi=tau", "phi=scaled-expm1(c=1000)", "phi=sin", "phi=sinh"]
PSI_A = ["psi=h2", "psi=4sin2-half", "psi=sin2", "psi=scaled-expdecay-sq(c=100)"]
PSI_B = ["psi=4pi2-sinh2-pihalf", "psi=sinh2", "psi=scaled-exp-sq(c=100)", "psi=sinh-h2"]
PHI_DECAY = "phieff=pow(exp-decay(lam=100))"


def run_ivp_table(eid: str, p: dict, plots: bool) -> Outputs:
    table = ivp.ivp_error_table(
        p["example"],
        p["alphas"],
        p["N_list"],
        [parse_df(t) for t in p["dfs"]],
        mode=p["mode"],
        quantize=p["quantize"],
    )
    files = [(f"{eid}.csv", table.to_csv())]
    if plots:
        for (a, df), cells in table.series.items():
            name = f"{eid}_alpha{a:g}_{safe_name(df)}.dat"
            files.append((name, plot_data([N for N, _ in cells], [e for _, e in cells])))
    return Outputs(files)


def run_tfde_table(eid: str, p: dict, plots: bool) -> Outputs:
    report = tfde.convergence_study(
        p["example"],
        p["alpha"],
        p["N"],
        parse_df(p["phieff"], p["alpha"]),
        [parse_df(t) for t in p["psis"]],
        p["M_list"],
        quantize=p["quantize"],
    )
    files = [(f"{eid}.csv", report.to_csv())]
    if plots:
        for df, errs in report.errors.items():
            files.append((f"{eid}_{safe_name(df)}.dat", plot_data(report.M, errs)))
    diverged = any(e is None for errs in report.errors.values() for e in errs)
    return Outputs(files, diverged)


def run_fig1(eid: str, p: dict, plots: bool) -> Outputs:
    files = []
    for a in p["alphas"]:
        curve = locus.boundary_locus(a, p["n"], p["num_samples"], p["variant"])
        rows = "".join(
            f"{s!r},{x!r},{y!r}\n" for s, x, y in zip(curve.s, curve.x_hat, curve.y_hat)
        )
        files.append((f"{eid}_alpha{a:g}.csv", "s,x_hat,y_hat\n" + rows))
        if plots:
            files.append((f"{eid}_alpha{a:g}.dat", plot_data(curve.x_hat, curve.y_hat)))
    return Outputs(files)


def fig2_degrees(N_ceiling: int) -> list[int]:
    """Sampled degrees: all up to 20, every 10th up to 200, then every 50th.

    The ceiling itself is always included. Dense eigensolves cost ``O(n^3)``,
    so sampling keeps a scan to 1000 at about ten seconds per series.
    """
    ns = set(range(1, min(20, N_ceiling) + 1))
    ns |= set(range(30, min(200, N_ceiling) + 1, 10))
    ns |= set(range(250, N_ceiling + 1, 50))
    ns.add(N_ceiling)
    return sorted(ns)


def run_fig2(eid: str, p: dict, plots: bool) -> Outputs:
    files = []
    ns = p.get("n_values") or fig2_degrees(p["N_ceiling"])
    for a in p["alphas"]:
        scan = locus.rmax_scan(a, p["N_ceiling"], p["tau_hats"], n_values=ns)
        for th, series in scan.items():
            stem = f"{eid}_alpha{a:g}_tauhat{th:g}"
            body = "".join(f"{n},{r!r}\n" for n, r in series)
            files.append((f"{stem}.csv", "n,r_max\n" + body))
            if plots:
                files.append((f"{stem}.dat", plot_data(*zip(*series))))
    return Outputs(files)


def run_frontier(eid: str, p: dict, plots: bool) -> Outputs:
    alpha, L, N = p["alpha"], p["L"], p["N"]
    phi_eff = parse_df(p["phieff"], alpha)
    psis = [parse_df(t) for t in p["psis"]]
    scan = tfde.stability_frontier_scan(alpha, L, N, phi_eff, psis, p["M_list"])

    files = []
    summary = ["psi,onset_M,analytic_max_M"]
    diverged = False
    for psi in psis:
        series = scan[psi.text]
        body = "".join(
            f"{pt.M},{'' if pt.E_inf is None else f'{pt.E_inf:.4e}'},{int(pt.diverged)}\n"
            for pt in series
        )
        files.append((f"{eid}_{safe_name(psi.text)}.csv", "M,E_inf,diverged\n" + body))
        if plots:
            files.append(
                (f"{eid}_{safe_name(psi.text)}.dat",
                 plot_data([pt.M for pt in series], [pt.E_inf for pt in series]))
            )
        onset = tfde.divergence_onset(series)
        diverged = diverged or onset is not None
        bound = tfde.analytic_max_M(tfde.SchemeConfig(alpha, N, phi_eff, psi), L)
        summary.append(f"{psi.text},{'' if onset is None else onset},{bound}")
    files.append((f"{eid}_summary.csv", "\n".join(summary) + "\n"))
    return Outputs(files, diverged)


CUSTOM_REQUIRED = {
    "ivp": ["example", "alphas", "N_list", "dfs"],
    "tfde": ["example", "alpha", "N", "phieff", "psis", "M_list"],
}


def validate_custom(p: dict) -> None:
    kind = p.get("kind")
    if kind not in CUSTOM_REQUIRED:
        raise ConfigError(
            "custom experiment requires 'kind' (ivp or tfde) and, for ivp: "
            + ", ".join(CUSTOM_REQUIRED["ivp"])
            + "; for tfde: "
            + ", ".join(CUSTOM_REQUIRED["tfde"])
        )
    missing = [k for k in CUSTOM_REQUIRED[kind] if k not in p]
    if missing:
        raise ConfigError(f"custom {kind} experiment is missing: {', '.join(missing)}")


def run_custom(eid: str, p: dict, plots: bool) -> Outputs:
    validate_custom(p)
    kind = p["kind"]
    p.setdefault("mode", "ratio")
    p.setdefault("quantize", "none")
    if kind == "ivp":
        return run_ivp_table(eid, p, plots)
    return run_tfde_table(eid, p, plots)


@dataclass(frozen=True)
class Experiment:
    runner: Callable[[str, dict, bool], Outputs]
    defaults: dict
    description: str
    #: Divergence is the expected observable (exit status 2).
    expects_divergence: bool = False


def _tfde_defaults(example: str, N: int, phieff: str, psis: list[str]) -> dict:
    return {
        "example": example,
        "alpha": 0.9,
        "N": N,
        "phieff": phieff,
        "psis": psis,
        "M_list": [2, 4, 8, 16, 32],
        "quantize": "published",
    }


_IVP = {
    "alphas": [0.3, 0.5, 0.7],
    "N_list": [10, 20, 40, 80, 160, 320],
    "dfs": IVP_DFS,
    "mode": "ratio",
    "quantize": "published",
}

EXPERIMENTS: dict[str, Experiment] = {
    "table1": Experiment(run_ivp_table, {"example": "ex1", **_IVP}, "IVP example 1 error table"),
    "table2": Experiment(run_ivp_table, {"example": "ex2", **_IVP}, "IVP example 2 error table"),
    "table3": Experiment(
        run_tfde_table, _tfde_defaults("ex3", 10000, "phieff=tau-alpha", PSI_A),
        "1D diffusion, standard temporal DF, first spatial DF group",
    ),
    "table4": Experiment(
        run_tfde_table, _tfde_defaults("ex3", 10000, "phieff=tau-alpha", PSI_B),
        "1D diffusion, standard temporal DF, second spatial DF group",
    ),
    "table5": Experiment(
        run_tfde_table, _tfde_defaults("ex3", 10000, PHI_DECAY, PSI_B),
        "1D diffusion, exponential-decay temporal DF",
    ),
    "table6": Experiment(
        run_tfde_table, _tfde_defaults("ex4", 20000, "phieff=tau-alpha", PSI_A),
        "2D diffusion, standard temporal DF, first spatial DF group",
    ),
    "table7": Experiment(
        run_tfde_table, _tfde_defaults("ex4", 20000, "phieff=tau-alpha", PSI_B),
        "2D diffusion, standard temporal DF, second spatial DF group",
    ),
    "table8": Experiment(
        run_tfde_table, _tfde_defaults("ex4", 20000, PHI_DECAY, PSI_B),
        "2D diffusion, exponential-decay temporal DF",
    ),
    "fig1": Experiment(
        run_fig1,
        {"alphas": [0.2, 0.4, 0.6, 0.8], "n": 100000, "num_samples": 2048,
         "variant": "as_printed"},
        "boundary locus curves",
    ),
    "fig2": Experiment(
        run_fig2,
        {"alphas": [0.2, 0.4, 0.6, 0.8], "N_ceiling": 1000, "tau_hats": [-0.5, 0.5, 1.5]},
        "largest root modulus against polynomial degree",
    ),
    "fig3": Experiment(
        run_frontier,
        {"alpha": 0.9, "L": 5.0848, "N": 10000, "phieff": "phieff=tau-alpha",
         "psis": ["psi=h2", "psi=scaled-exp-sq(c=1)"],
         "M_list": list(range(10, 220, 10)) + list(range(220, 236))},
        "error against M for standard and nonstandard spatial DFs",
        expects_divergence=True,
    ),
    "frontier": Experiment(
        run_frontier,
        {"alpha": 0.9, "L": 5.0848, "N": 10000, "phieff": "phieff=tau-alpha",
         "psis": ["psi=h2", "psi=scaled-exp-sq(c=1)"],
         "M_list": list(range(215, 241))},
        "divergence onset of the 1D scheme near the stability limit",
        expects_divergence=True,
    ),
    "custom": Experiment(run_custom, {}, "user-defined ivp or tfde convergence table"),
}

# }}}
