"""Batch experiment runner: `flatcyl-lab <subcommand> --config c.json`.

Each subcommand reads the JSON config, runs one experiment family, and
writes RFC-4180 CSV files plus a JSON manifest into the output directory.
The CSVs are a pure function of (config, seed); wall time and library
versions go only into the manifest so result files stay byte-identical
across replays.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ExperimentConfig, load_config
from .errors import ConfigError, InfeasibleTowerError, QuadratureError
from .flux import exact_tail, mc_tail_table, neck_tail_report, tail_table
from .riccati import check_corollaries, check_lemma_key, k_plus_value
from .surface import GeodesicKind, UnitVector
from .tower import (build_tower, decay_experiments, exact_second_moment,
                    nonstandard_clt_test)
from .transit import (ScalingQuantity, band_midpoint_c, scaling_report,
                      transition, transition_via_ode)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_QUADRATURE = 4

SUBCOMMANDS = ("transition", "bands", "riccati", "tails", "tower-clt",
               "wip", "decay", "all")


def _fmt(v):
    if isinstance(v, float):
        return "%.17g" % v
    return v


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[h]) for h in header])


def write_manifest(out_dir: Path, subcommand: str, cfg: ExperimentConfig,
                   outputs, wall_time: float):
    doc = {
        "subcommand": subcommand,
        "config": cfg.as_dict(),
        "seed": cfg.seed,
        "outputs": sorted(str(p.name) for p in outputs),
        "versions": {"flatcyl_lab": __version__,
                     "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": sys.version.split()[0]},
        "wall_time_seconds": wall_time,
    }
    with open(out_dir / f"{subcommand}_manifest.json", "w",
              encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _entry_vector(params, c, kind, theta, rng):
    cc = abs(c)
    psi = math.acos(c / params.xi_eps1)
    s = params.eps1 if rng.random() < 0.5 else -params.eps1
    if s > 0:
        psi = -psi  # reflect to point toward the cylinder; cos(psi) unchanged
    return UnitVector(s, theta, psi)


def cmd_transition(cfg: ExperimentConfig, out_dir: Path):
    params = cfg.profile_params()
    rng = np.random.default_rng(cfg.seed)
    samples = int(cfg.run["samples"])
    quad_tol = cfg.tolerances["quad_tol"]
    rows = []
    kinds = [GeodesicKind.CROSSING]
    # bouncing bands exist only when the band interval meets |c| <= xi(eps1)
    if params.xi_eps1 - 1.0 > 1.0 / (params.n0 + 1) ** 2:
        kinds.append(GeodesicKind.BOUNCING)
    for i in range(samples):
        kind = kinds[i % len(kinds)]
        n = int(rng.integers(params.n0, 51))
        c = band_midpoint_c(params, n, kind, float(rng.random()))
        x = _entry_vector(params, math.copysign(c, rng.random() - 0.5),
                          kind, float(rng.uniform(0, 2 * math.pi)), rng)
        res = transition(params, x, quad_tol, cfg.tolerances["tol_c"])
        dtheta, t_ode, _, _ = transition_via_ode(
            params, x, cfg.tolerances["ode_tol"])
        rows.append({
            "kind": res.kind.value, "band_n": n, "c": c,
            "zeta": res.zeta, "upsilon0": res.upsilon0,
            "upsilon1": res.upsilon1, "upsilon2": res.upsilon2,
            "ode_zeta_err": abs(abs(dtheta) - res.zeta),
            "ode_time_err": abs(t_ode - 2.0 * res.upsilon0),
        })
    path = out_dir / "transition.csv"
    write_csv(path, ["kind", "band_n", "c", "zeta", "upsilon0", "upsilon1",
                     "upsilon2", "ode_zeta_err", "ode_time_err"], rows)
    return [path]


_BAND_CASES = [
    (ScalingQuantity.UPSILON2, GeodesicKind.CROSSING),
    (ScalingQuantity.UPSILON1, GeodesicKind.CROSSING),
    (ScalingQuantity.UPSILON1, GeodesicKind.BOUNCING),
    (ScalingQuantity.ZETA_PRIME, GeodesicKind.CROSSING),
    (ScalingQuantity.ZETA_PRIME, GeodesicKind.BOUNCING),
    (ScalingQuantity.ZETA_DOUBLE_PRIME, GeodesicKind.CROSSING),
]


def cmd_bands(cfg: ExperimentConfig, out_dir: Path):
    params = cfg.profile_params()
    lo, hi = int(cfg.run["band_lo"]), int(cfg.run["band_hi"])
    n_range = np.unique(np.geomspace(lo, hi, 25).astype(int))
    quad_tol = cfg.tolerances["quad_tol"]
    value_rows, slope_rows = [], []
    for quantity, kind in _BAND_CASES:
        if kind is GeodesicKind.BOUNCING and \
                params.xi_eps1 - 1.0 < 1.0 / lo ** 2:
            continue  # bouncing bands in this range are empty
        rep = scaling_report(params, quantity, kind, n_range,
                             quad_tol=quad_tol)
        value_rows.extend(rep.rows)
        slope_rows.append({"quantity": quantity.value, "kind": kind.value,
                           "slope": rep.values["slope"],
                           "r_squared": rep.values["r_squared"]})
    p1 = out_dir / "band_values.csv"
    p2 = out_dir / "band_slopes.csv"
    write_csv(p1, ["quantity", "kind", "band_n", "value"], value_rows)
    write_csv(p2, ["quantity", "kind", "slope", "r_squared"], slope_rows)
    return [p1, p2]


def cmd_riccati(cfg: ExperimentConfig, out_dir: Path):
    params = cfg.profile_params()
    tol = cfg.tolerances["riccati_tol"]
    rows = []
    for kappa in (0.25, 1.0, 4.0):
        x = UnitVector(0.0, 0.0, math.pi / 3)
        k = k_plus_value(params, x, tol=tol, kappa_const=kappa)
        rows.append({"check": f"constant_kappa_{kappa}", "value": k,
                     "reference": math.sqrt(kappa)})
    key = check_lemma_key(params)
    for name, val in key.values.items():
        rows.append({"check": f"key_{name}", "value": float(val),
                     "reference": float("nan")})
    cor = check_corollaries(params, samples=int(cfg.run["samples"]),
                            seed=cfg.seed)
    for name, val in cor.values.items():
        rows.append({"check": f"cor_{name}", "value": float(val),
                     "reference": float("nan")})
    path = out_dir / "riccati.csv"
    write_csv(path, ["check", "value", "reference"], rows)
    return [path]


def cmd_tails(cfg: ExperimentConfig, out_dir: Path):
    params = cfg.profile_params()
    L = params.L
    n_max = int(cfg.run["n_tail_max"])
    exact = tail_table(L, n_max)
    mc = mc_tail_table(L, cfg.seed, int(cfg.run["mc_count"]), n_max)
    rows = [{"n": n, "exact_mass": exact.mass(n), "mc_mass": mc.mass(n),
             "n3_mass_over_limit": (n ** 3 * exact.mass(n) * math.pi
                                    / (8.0 * L ** 2) if n else float("nan"))}
            for n in range(0, n_max + 1)]
    p1 = out_dir / "tail_masses.csv"
    write_csv(p1, ["n", "exact_mass", "mc_mass", "n3_mass_over_limit"], rows)
    neck = neck_tail_report(params, samples=max(100000,
                                                int(cfg.run["mc_count"])),
                            seed=cfg.seed,
                            quad_tol=cfg.tolerances["quad_tol"])
    p2 = out_dir / "neck_tail.csv"
    write_csv(p2, ["quantity", "value"],
              [{"quantity": k, "value": float(v)}
               for k, v in neck.values.items()])
    return [p1, p2]


def cmd_tower_clt(cfg: ExperimentConfig, out_dir: Path):
    model = build_tower(cfg.tower_spec())
    rep = nonstandard_clt_test(model, "JR0",
                               [int(n) for n in cfg.run["n_grid"]],
                               int(cfg.run["samples"]), seed=cfg.seed)
    p1 = out_dir / "tower_clt.csv"
    if rep.rows:
        write_csv(p1, ["n", "variance_ratio", "ks_distance"], rep.rows)
    else:
        write_csv(p1, ["n", "variance_ratio", "ks_distance"], [])
    moment_rows = [{"p": p, "second_moment": exact_second_moment(model, p),
                    "two_sigma_J_sq_log_p":
                        2.0 * model.sigma_J_sq * math.log(p)}
                   for p in (10 ** 4, 10 ** 5, 10 ** 6)]
    p2 = out_dir / "second_moment.csv"
    write_csv(p2, ["p", "second_moment", "two_sigma_J_sq_log_p"], moment_rows)
    return [p1, p2]


def cmd_wip(cfg: ExperimentConfig, out_dir: Path):
    coupled = cfg.coupled_model()
    rep = coupled.wip_report(int(cfg.run["steps"]),
                             int(cfg.run["samples"]),
                             t_list=tuple(cfg.run["t_list"]),
                             seed=cfg.seed)
    p1 = out_dir / "wip.csv"
    write_csv(p1, ["t", "var", "target"], rep.rows)
    p2 = out_dir / "wip_constants.csv"
    write_csv(p2, ["quantity", "value"],
              [{"quantity": k, "value": float(v)}
               for k, v in rep.values.items()])
    return [p1, p2]


def cmd_decay(cfg: ExperimentConfig, out_dir: Path):
    coupled = cfg.coupled_model()
    rep = decay_experiments(coupled, orbit_len=int(cfg.run["orbit_len"]),
                            lags=tuple(cfg.run["lags"]), seed=cfg.seed)
    p1 = out_dir / "decay_cov.csv"
    write_csv(p1, ["lag", "cov"], rep.rows)
    p2 = out_dir / "decay_summary.csv"
    write_csv(p2, ["quantity", "value"],
              [{"quantity": k, "value": float(v)}
               for k, v in rep.values.items()])
    return [p1, p2]


_DISPATCH = {
    "transition": cmd_transition,
    "bands": cmd_bands,
    "riccati": cmd_riccati,
    "tails": cmd_tails,
    "tower-clt": cmd_tower_clt,
    "wip": cmd_wip,
    "decay": cmd_decay,
}


def run(subcommand: str, config_path: str, out_dir: str,
        seed: int | None = None) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        cfg = load_config(config_path)
        if seed is not None:
            cfg.seed = int(seed)
        t0 = time.monotonic()
        if subcommand == "all":
            outputs = []
            for name in SUBCOMMANDS[:-1]:
                outputs.extend(_DISPATCH[name](cfg, out))
        else:
            outputs = _DISPATCH[subcommand](cfg, out)
        write_manifest(out, subcommand, cfg, outputs,
                       time.monotonic() - t0)
        return EXIT_OK
    except ConfigError as exc:
        _write_error(out, subcommand, exc)
        return EXIT_CONFIG
    except InfeasibleTowerError as exc:
        _write_error(out, subcommand, exc)
        return EXIT_INFEASIBLE
    except QuadratureError as exc:
        _write_error(out, subcommand, exc)
        return EXIT_QUADRATURE
    except Exception as exc:  # noqa: BLE001 - must map to an exit status
        _write_error(out, subcommand, exc)
        return EXIT_ERROR


def _write_error(out_dir: Path, subcommand: str, exc: Exception):
    record = {"subcommand": subcommand, "error": type(exc).__name__,
              "message": str(exc)}
    try:
        with open(out_dir / "error.json", "w", encoding="utf-8") as fh:
            json.dump(record, fh, indent=2)
    except OSError:
        pass
    print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="flatcyl-lab",
        description="Experiment runner for the flat-cylinder geodesic lab")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True,
                        help="JSON experiment configuration")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--out", default=".",
                        help="output directory (default: cwd)")
    args = parser.parse_args(argv)
    return run(args.subcommand, args.config, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
