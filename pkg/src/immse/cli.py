"""Command-line front end: sweeps, figure data, closed forms, low-snr tables and verification.

Exit codes: 0 success, 1 a verification check failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import closed_form as cf
from . import lowsnr
from .expectation import expect_model
from .information import info_terms, nc_info_gaussian_interference
from .mmse import mmse_terms
from .model import ConfigError, McConfig, ModelError, bpsk_scalar_mac
from .modelfile import LoadedModel, ModelFileError, load_model
from .reporting import LN2, to_db, write_csv, write_json
from .verification import SUITES, exact_config, run_verification

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
THREADS_ENV = "IMMSE_THREADS"
INFO_KEYS = ("joint", "i1_nc", "i2_nc", "i1_cond", "i2_cond")


class UsageError(ValueError):
    """Bad command-line input; maps to exit code 2."""


def parse_grid(text: str) -> list[float]:
    """'a:b:n' (linear), 'a:b:nlog' (log-spaced) or a comma list; strictly increasing, >= 0."""
    text = text.strip()
    if not text:
        raise UsageError("empty snr grid")
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise UsageError(f"grid {text!r}: expected a:b:n or a:b:nlog")
            a, b = float(parts[0]), float(parts[1])
            spec = parts[2].strip().lower()
            log = spec.endswith("log")
            n = int(spec[:-3] if log else spec)
            if n <= 0:
                raise UsageError(f"grid {text!r} is empty")
            if log:
                if a <= 0 or b <= 0:
                    raise UsageError("log grid endpoints must be positive")
                grid = [a] if n == 1 else list(np.geomspace(a, b, n))
            else:
                grid = [a] if n == 1 else list(np.linspace(a, b, n))
        else:
            grid = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"cannot parse grid {text!r}: {exc}") from None
    if not grid:
        raise UsageError("empty snr grid")
    grid = [float(g) for g in grid]
    if any(not math.isfinite(g) or g < 0 for g in grid):
        raise UsageError("snr grid values must be finite and nonnegative")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError("snr grid must be strictly increasing")
    return grid


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"{THREADS_ENV}={env!r} is not an integer") from None
        if n < 1:
            raise UsageError(f"{THREADS_ENV} must be >= 1")
        return n
    return 1


def _load(args) -> LoadedModel:
    if args.model:
        loaded = load_model(args.model)
    else:
        loaded = LoadedModel(bpsk_scalar_mac(1.0), McConfig())
    mc = loaded.mc
    mc = McConfig(seed=mc.seed if args.seed is None else args.seed,
                  samples=mc.samples if args.samples is None else args.samples,
                  batch=mc.batch, workers=_threads(args))
    return LoadedModel(loaded.model, mc)


def _emit(args, header: Sequence[str], rows: list[list], meta: dict) -> Path:
    out = Path(args.out)
    if args.format == "json":
        write_json(out, {"meta": meta, "columns": list(header),
                         "rows": [dict(zip(header, r)) for r in rows]})
    else:
        write_csv(out, header, rows)
    return out


def _plot_path(out: Path) -> Path:
    return out.with_suffix(".svg")


def _db(s: float) -> float:
    return to_db(s)


# --- sweep -----------------------------------------------------------------------------


def cmd_sweep(args) -> int:
    grid = parse_grid(args.snr_grid)
    loaded = _load(args)
    model, mc = loaded.model, loaded.mc
    quantities = [q.strip() for q in args.quantities.split(",") if q.strip()]
    for q in quantities:
        if q not in ("info", "mmse", "gaussian"):
            raise UsageError(f"unknown quantity {q!r}; choose from info, mmse, gaussian")
    if not quantities:
        raise UsageError("no quantities requested")

    header = ["snr[linear]", "snr[dB]"]
    if "info" in quantities:
        for k in INFO_KEYS:
            header += [f"{k}[nats]", f"{k}_stderr[nats]", f"{k}[bits]"]
    if "gaussian" in quantities:
        header += ["i2_nc_gaussian[nats]", "i2_nc_gaussian_stderr[nats]", "i2_nc_gaussian[bits]"]
    if "mmse" in quantities:
        header += ["mmse1[dimensionless]", "mmse2[dimensionless]", "mmse_total[dimensionless]",
                   "mmse_total_stderr[dimensionless]", "psi_re[dimensionless]",
                   "psi_im[dimensionless]", "interference[dimensionless]"]

    rows = []
    for s in grid:
        m = model.with_snr(s)
        row = [s, _db(s)]

        def fn(d, m=m):
            out = {}
            if "info" in quantities:
                out.update(info_terms(m, d))
            if "mmse" in quantities:
                t = mmse_terms(m, d)
                out.update({k: t[k] for k in ("mmse1", "mmse2", "total", "psi", "interference")})
            return out

        est = expect_model(m, mc, fn)
        if "info" in quantities:
            for k in INFO_KEYS:
                v = float(est[k].value)
                row += [v, float(est[k].stderr), v / LN2]
        if "gaussian" in quantities:
            g = nc_info_gaussian_interference(m, 2, mc)
            row += [float(g.value), float(g.stderr), float(g.value) / LN2]
        if "mmse" in quantities:
            psi = complex(est["psi"].value)
            row += [float(np.real(est["mmse1"].value)), float(np.real(est["mmse2"].value)),
                    float(np.real(est["total"].value)), float(est["total"].stderr),
                    psi.real, psi.imag, float(np.real(est["interference"].value))]
        rows.append(row)

    meta = {"command": "sweep", "model": args.model or "builtin:bpsk_scalar_mac",
            "seed": mc.seed, "samples": mc.samples, "quantities": quantities}
    out = _emit(args, header, rows, meta)
    if not args.no_plot and "info" in quantities:
        from .plotting import line_plot

        xs = grid if not all(s > 0 for s in grid) else [_db(s) for s in grid]
        xlabel = "snr [dB]" if all(s > 0 for s in grid) else "snr [linear]"
        col = {h: i for i, h in enumerate(header)}
        series = {k: [r[col[f"{k}[bits]"]] for r in rows] for k in INFO_KEYS}
        line_plot(xs, series, _plot_path(out), xlabel, "mutual information [bits]", "MI sweep")
    print(f"wrote {out}")
    return EXIT_OK


# --- closed forms and figure 1 ------------------------------------------------------------

CLOSED_FORM_HEADER = ["snr[linear]", "snr[dB]", "mmse1_prime[dimensionless]", "mmse2[dimensionless]",
                      "psi[dimensionless]", "total_mmse[dimensionless]", "i1_prime[bits]",
                      "i2_prime[bits]", "total[bits]", "parallel[bits]"]


def closed_form_row(s: float) -> list[float]:
    """Closed-form BPSK quantities at real-axis snr `s`."""
    m1 = cf.mmse1_scaled(s)
    m2 = cf.mmse2_cond(s)
    psi = cf.psi_bpsk_successive(s).psi
    tot = cf.total_bpsk(s)
    return [s, _db(s), m1, m2, psi, tot.mmse, cf.info1_scaled(s) / LN2, cf.info2_cond(s) / LN2,
            tot.info / LN2, cf.parallel_bpsk_info(s) / LN2]


def cmd_closed_form(args) -> int:
    grid = parse_grid(args.snr_grid)
    rows = [closed_form_row(s) for s in grid]
    out = _emit(args, CLOSED_FORM_HEADER, rows, {"command": "closed-form"})
    print(f"wrote {out}")
    return EXIT_OK


FIGURE1_DB = "-10:20:31"


def figure1_rows(grid: Sequence[float], mc: McConfig | None) -> tuple[list[str], list[list]]:
    """Figure rows on a linear snr grid; MC columns come from the exact model at snr/2.

    The closed forms use unit real-axis noise. A BPSK input in circular complex
    noise sees twice the snr on its real axis, so the matching exact model runs
    at half the closed-form snr.
    """
    header = ["snr[linear]", "snr[dB]", "i1_prime[bits]", "i2_prime[bits]", "sum[bits]",
              "parallel_sum[bits]", "mmse1_prime[dimensionless]"]
    if mc is not None:
        header += ["joint_mc[bits]", "joint_mc_stderr[bits]", "i1_nc_mc[bits]", "i2_cond_mc[bits]"]
    rows = []
    for s in grid:
        i1 = cf.info1_scaled(s) / LN2
        i2 = cf.info2_cond(s) / LN2
        row = [s, _db(s), i1, i2, i1 + i2, cf.parallel_bpsk_info(s) / LN2, cf.mmse1_scaled(s)]
        if mc is not None:
            m = bpsk_scalar_mac(s / 2.0)
            est = expect_model(m, mc, lambda d, m=m: info_terms(m, d))
            row += [float(est["joint"].value) / LN2, float(est["joint"].stderr) / LN2,
                    float(est["i1_nc"].value) / LN2, float(est["i2_cond"].value) / LN2]
        rows.append(row)
    return header, rows


def cmd_figure1(args) -> int:
    if args.snr_grid:
        grid = parse_grid(args.snr_grid)
    else:
        grid = [10.0 ** (db / 10.0) for db in np.linspace(-10.0, 20.0, 31)]
    mc = None
    if not args.no_mc:
        mc = McConfig(seed=args.seed or 0, samples=args.samples or 200_000, workers=_threads(args))
    header, rows = figure1_rows(grid, mc)
    meta = {"command": "figure1", "seed": None if mc is None else mc.seed,
            "samples": None if mc is None else mc.samples}
    out = _emit(args, header, rows, meta)
    if not args.no_plot:
        from .plotting import figure1_plot

        keys = ["snr", "snr_db", "i1_prime_bits", "i2_prime_bits", "sum_bits", "parallel_sum_bits",
                "mmse1_prime"]
        if mc is not None:
            keys += ["joint_mc_bits", "joint_mc_stderr_bits", "i1_nc_mc_bits", "i2_cond_mc_bits"]
        figure1_plot([dict(zip(keys, r)) for r in rows], _plot_path(out))
    print(f"wrote {out}")
    return EXIT_OK


# --- low snr ------------------------------------------------------------------------------


def cmd_lowsnr(args) -> int:
    grid = parse_grid(args.snr_grid)
    loaded = _load(args)
    model = loaded.model
    header = ["snr[linear]", "snr[dB]", "info_taylor[nats]", "mmse_taylor[dimensionless]",
              "psi_taylor[dimensionless]"]
    xcfg = None
    if args.exact:
        xcfg = exact_config(model, loaded.mc)
        header += ["exact_info[nats]", "exact_info_stderr[nats]", "abs_err[nats]",
                   "exact_mmse[dimensionless]"]
    rows = []
    for s in grid:
        r = lowsnr.expansion_report(model, s, xcfg)
        row = [s, _db(s), r.info_taylor, r.mmse_taylor, r.psi_taylor]
        if xcfg is not None:
            row += [r.exact_info, r.exact_info_stderr, r.info_abs_err, r.exact_mmse]
        rows.append(row)
    ws = lowsnr.wideband_slope(model)
    meta = {"command": "lowsnr", "first_order": ws.first, "second_order": ws.second,
            "wideband_slope": ws.slope}
    out = _emit(args, header, rows, meta)
    print(f"wrote {out}; first-order {ws.first:.6g}, second-order {ws.second:.6g}, slope {ws.slope:.6g}")
    return EXIT_OK


# --- verify -------------------------------------------------------------------------------


def cmd_verify(args) -> int:
    loaded = _load(args)
    rep = run_verification(args.which, loaded.model, loaded.mc, args.tol_scale)
    payload = rep.to_dict()
    payload["model"] = args.model or "builtin:bpsk_scalar_mac"
    payload["seed"], payload["samples"] = loaded.mc.seed, loaded.mc.samples
    if args.out:
        write_json(args.out, payload)
    for c in rep.checks:
        status = "diag" if c.passed is None else ("PASS" if c.passed else "FAIL")
        tol = "-" if c.tolerance is None else f"{c.tolerance:.3g}"
        print(f"{status:4s} {c.name}: value={c.value:.6g} tol={tol}")
    if not args.out:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True, default=str)
        print()
    return EXIT_OK if rep.all_passed else EXIT_FAIL


# --- parser -------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="immse", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=True, out_default="out.csv"):
        if model:
            sp.add_argument("--model", help="model file (default: builtin scalar BPSK MAC)")
        sp.add_argument("--samples", type=int, help="Monte Carlo samples per point")
        sp.add_argument("--seed", type=int, help="Monte Carlo seed")
        sp.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
        sp.add_argument("--out", default=out_default, help="output path")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("sweep", help="MI and MMSE over an snr grid")
    common(sp, out_default="sweep.csv")
    sp.add_argument("--snr-grid", required=True, help="a:b:n, a:b:nlog or comma list")
    sp.add_argument("--quantities", default="info,mmse", help="comma list of info, mmse, gaussian")
    sp.add_argument("--no-plot", action="store_true", help="skip the SVG plot")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("figure1", help="two-user BPSK rate curves with exact MC counterparts")
    common(sp, model=False, out_default="figure1.csv")
    sp.add_argument("--snr-grid", help="linear snr grid (default -10..20 dB, 31 points)")
    sp.add_argument("--no-mc", action="store_true", help="closed forms only")
    sp.add_argument("--no-plot", action="store_true", help="skip the SVG plot")
    sp.set_defaults(func=cmd_figure1)

    sp = sub.add_parser("closed-form", help="BPSK closed-form table")
    sp.add_argument("--snr-grid", default="0.01:100:20log")
    sp.add_argument("--out", default="closed_form.csv")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=cmd_closed_form)

    sp = sub.add_parser("lowsnr", help="low-snr expansions, optionally against exact values")
    common(sp, out_default="lowsnr.csv")
    sp.add_argument("--snr-grid", default="0.001:0.1:10log")
    sp.add_argument("--exact", action="store_true", help="add exact MI and MMSE columns")
    sp.set_defaults(func=cmd_lowsnr)

    sp = sub.add_parser("verify", help="run verification suites; exit 1 on any failure")
    sp.add_argument("which", choices=SUITES + ("all",))
    sp.add_argument("--model")
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int)
    sp.add_argument("--out", help="JSON report path (default: stdout)")
    sp.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "tol_scale", 1.0) <= 0:
        parser.error("--tol-scale must be positive")
    try:
        return args.func(args)
    except (UsageError, ModelFileError, ModelError, ConfigError) as exc:
        print(f"immse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
