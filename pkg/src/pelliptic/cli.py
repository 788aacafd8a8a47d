"""Command-line front end: configuration in, CSV and SVG files out.

Every command prints a JSON summary to stdout.  Exit status is 0 when all
asserted invariants hold, 1 when one fails and 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import config as cfgmod
from . import pcalc, plotting, reports, resolvent, verify
from .disc import assemble, build_grid
from .growth import classify_growth


class Outcome:
    """Collects assertion results, summary values and written files."""

    def __init__(self, command):
        self.command = command
        self.assertions = {}
        self.flags = {}
        self.summary = {}
        self.files = []

    def check(self, name, ok):
        self.assertions[name] = bool(ok)

    @property
    def ok(self):
        return all(self.assertions.values())

    def as_dict(self):
        return {"command": self.command, "ok": self.ok, "assertions": self.assertions,
                "flags": self.flags, "summary": self.summary, "files": self.files}


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (complex, np.complexfloating)):
        return [_jsonable(v.real), _jsonable(v.imag)]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def _csv(out, cfg, name, columns, rows, extra=()):
    path = os.path.join(out.dir, name)
    reports.write_csv(path, columns, rows, cfg.text, extra)
    out.files.append(path)


def _svg(out, path, fn, *args, **kw):
    fn(os.path.join(out.dir, path), *args, **kw)
    out.files.append(os.path.join(out.dir, path))


# --------------------------------------------------------------------------
# commands


def cmd_pcalc(cfg, out):
    field = cfgmod.build_field(cfg)
    rep = pcalc.build_report(field, cfg.get("pcalc", "p_grid"), cfg.get("pcalc", "tol"),
                             cfg.get("pcalc", "angle_p"))
    rows = [(p, rep.delta_p[p], rep.delta_p[p] > pcalc.ELLIPTIC_TOL * field.c_upper)
            for p in rep.p_grid]
    _csv(out, cfg, "pcalc_delta_p.csv", ["p", "delta_p", "p_elliptic"], rows)
    summ = rep.summary()
    _csv(out, cfg, "pcalc_summary.csv", ["quantity", "value"], list(summ.items()))
    # duality p <-> p' of the grid values
    dual = [abs(pcalc.delta_p(field, pcalc.conjugate_exponent(p)) - rep.delta_p[p])
            for p in rep.p_grid if math.isfinite(pcalc.conjugate_exponent(p))]
    out.check("duality", max(dual, default=0.0) <= 1e-9)
    out.check("p0_routes_agree", "p0 bisection and delta route disagree" not in rep.notes)
    out.summary = dict(summ, notes=rep.notes)
    _svg(out, "pcalc_delta_p.svg", plotting.line_plot,
         [("Delta_p", rep.p_grid, [rep.delta_p[p] for p in rep.p_grid])],
         "p", "Delta_p", "p-ellipticity constant", logx=True, hlines=[("0", 0.0)])


def _scan_theta(cfg, field):
    th = cfg.get("scan", "theta")
    if th is None:
        psi = resolvent.lax_milgram_constants(field.c_lower, field.c_upper, 0.0)["psi"]
        th = 0.5 * (math.pi / 2 + math.pi - psi)
    return th


def cmd_scan(cfg, out):
    field = cfgmod.build_field(cfg)
    spec = cfgmod.domain_spec(cfg)
    ns = cfg.get("grid", "ns")
    p = cfg.get("scan", "p")
    keys = tuple(cfg.get("scan", "keys"))
    theta = _scan_theta(cfg, field)
    lm = resolvent.lax_milgram_constants(field.c_lower, field.c_upper, theta)
    slack = cfg.get("scan", "slack")
    rows, sums, series = [], [], []
    sups = {k: [] for k in keys}
    n_failed = 0
    for n in ns:
        op = assemble(field, build_grid(spec, n))
        res = resolvent.sector_scan(op, p, theta, cfg.get("scan", "n_lambda"),
                                    cfg.get("scan", "probes"), seed=cfg.seed,
                                    lam_min=cfg.get("scan", "lam_min"),
                                    lam_max=cfg.get("scan", "lam_max"),
                                    margin=cfg.get("scan", "margin"), keys=keys,
                                    threads=cfg.threads, refine=cfg.get("scan", "refine"),
                                    power_steps=cfg.get("scan", "power_steps"))
        n_failed += int(res.failed.sum())
        for i, lam in enumerate(res.lambdas):
            rows.append([n, i, complex(lam), abs(lam)] + [res.estimates[k][i] for k in keys]
                        + [res.probes, bool(res.failed[i]), res.residuals[i]])
        for k in keys:
            sups[k].append(res.sup(k))
            sums.append((n, k, res.sup(k), lm[k] if p == 2 else math.nan))
        order = np.argsort(np.abs(res.lambdas))
        series.append((f"n = {n}", np.abs(res.lambdas)[order], res.estimates[keys[0]][order]))
    _csv(out, cfg, "scan.csv", ["n", "index", "lambda", "abs_lambda"] + list(keys)
         + ["probes", "failed", "residual"], rows, [f"theta = {theta!r}", "estimates are lower bounds"])
    _csv(out, cfg, "scan_summary.csv", ["n", "key", "sup", "lax_milgram"], sums)
    out.check("solves_converged", n_failed == 0)
    if p == 2:
        for k in keys:
            out.check(f"{k}_below_lax_milgram", max(sups[k]) <= lm[k] * slack)
    growth = {k: classify_growth(sups[k]) for k in keys}
    out.flags["growing"] = sorted(k for k, g in growth.items() if g == "growing")
    lo, hi = pcalc.analyticity_interval(pcalc.p0(field), spec.d)
    out.flags["p_outside_interval"] = not lo < p < hi
    out.flags["outside_interval_growth"] = bool(out.flags["growing"]) and not lo < p < hi
    out.summary = {"theta": theta, "p": p, "sups": sups, "growth": growth,
                   "lax_milgram": {k: lm[k] for k in keys}, "failed_solves": n_failed}
    _svg(out, "scan.svg", plotting.line_plot, series, "|lambda|", f"{keys[0]} estimate",
         f"sector scan, p = {p:g}", logx=True,
         hlines=[("Lax-Milgram", lm[keys[0]])] if p == 2 else ())


def cmd_rh(cfg, out):
    field = cfgmod.build_field(cfg)
    spec = cfgmod.domain_spec(cfg)
    ns = cfg.get("grid", "ns")
    g = lambda k: cfg.get("rh", k)  # noqa: E731
    study = verify.rh_study(field, spec, ns, g("p"), g("lam"), g("r"), g("c"), g("trials"),
                            cfg.seed, g("gap"), g("q"), g("boundary_fraction"),
                            g("center_lo"), g("center_hi"), cfg.threads)
    rows = []
    for k, row in enumerate(study.entries):
        for n, e in zip(ns, row):
            rows.append([k, bool(study.on_boundary[k])] + list(study.centers[k]) +
                        [n, e.p, e.q, e.c, e.lhs, e.rhs, e.ratio, e.mean_ratio, e.degenerate])
    xs = [f"x{i}" for i in range(spec.d)]
    _csv(out, cfg, "rh.csv", ["trial", "boundary"] + xs + ["n", "p", "q", "c", "lhs", "rhs",
                                                           "ratio", "mean_ratio", "degenerate"], rows)
    var = study.variations()
    srows = [(k, r.classification, var[k]) for k, r in enumerate(study.reports)]
    _csv(out, cfg, "rh_summary.csv", ["trial", "classification", "variation"], srows)
    cls = [r.classification for r in study.reports]
    active = [c for c in cls if c != "degenerate"]
    out.check("stable", bool(active) and all(c == "stable" for c in active))
    out.summary = {"trials": len(cls), "degenerate": cls.count("degenerate"),
                   "stable": cls.count("stable"), "growing": cls.count("growing"),
                   "max_variation": float(np.nanmax(var)) if active else math.nan,
                   "c": study.entries[0][0].c, "q": study.entries[0][0].q}
    ratios = study.ratios()
    series = [(f"trial {k}", ns, ratios[k]) for k in range(len(ratios))
              if study.reports[k].classification != "degenerate"]
    _svg(out, "rh.svg", plotting.line_plot, series[:12], "n", "reverse Hölder ratio",
         "reverse Hölder ratios under refinement", logx=True)


def cmd_meyers(cfg, out):
    spec = cfgmod.domain_spec(cfg)
    ns = cfg.get("grid", "ns")
    contrasts = cfg.get("meyers", "contrasts")
    if contrasts is None:
        fields = [cfgmod.build_field(cfg)]
    else:
        from .coeff import make_contrast_checkerboard
        fields = [make_contrast_checkerboard(c, cfg.get("meyers", "tiling"), spec.d)
                  for c in contrasts]
    g = lambda k: cfg.get("meyers", k)  # noqa: E731
    rep = resolvent.meyers_sweep(fields, g("p_grid"), ns, spec, lam=g("lam"), probes=g("probes"),
                                 seed=cfg.seed, threads=cfg.threads, refine=g("refine"),
                                 power_steps=g("power_steps"), pool_steps=g("pool_steps"))
    rows = []
    for i, c in enumerate(rep.contrasts):
        for j, p in enumerate(rep.p_grid):
            for k, n in enumerate(ns):
                rows.append((i, c, p, n, rep.estimates[i, j, k]))
    _csv(out, cfg, "meyers.csv", ["field", "contrast", "p", "n", "estimate"], rows,
         ["estimates are lower bounds of ||grad (lam+A)^-1 div||_p"])
    srows = []
    for i, c in enumerate(rep.contrasts):
        for j, p in enumerate(rep.p_grid):
            srows.append((i, c, p, bool(rep.bounded[i, j]), rep.eps[i], rep.saturated[i]))
    _csv(out, cfg, "meyers_summary.csv", ["field", "contrast", "p", "bounded", "eps",
                                          "saturated"], srows)
    order = np.argsort(rep.contrasts, kind="stable")
    eps_sorted = [rep.eps[i] for i in order]
    out.check("eps_nonincreasing", all(a >= b for a, b in zip(eps_sorted, eps_sorted[1:])))
    if g("min_eps") is not None:
        out.check("eps_lowest_contrast", eps_sorted[0] >= g("min_eps"))
    out.summary = {"contrasts": rep.contrasts, "eps": rep.eps, "saturated": rep.saturated}
    series = [(f"contrast {c:g}", rep.p_grid, rep.estimates[i, :, -1])
              for i, c in enumerate(rep.contrasts)]
    _svg(out, "meyers.svg", plotting.line_plot, series, "p", f"estimate at n = {ns[-1]}",
         "Meyers sweep", logy=True)


def cmd_kernel(cfg, out):
    field = cfgmod.build_field(cfg)
    spec = cfgmod.domain_spec(cfg)
    ns = cfg.get("grid", "ns")
    g = lambda k: cfg.get("kernel", k)  # noqa: E731
    src = g("sources") or [[0.5] * spec.d]
    fits, frows = [], []
    cols = None
    for n in ns:
        op = assemble(field, build_grid(spec, n))
        cols = resolvent.kernel_columns(op, g("times"), np.array(src), m=g("m"),
                                        startup=g("startup"))
        fit = resolvent.gaussian_fit(cols, rel_floor=g("rel_floor"))
        fits.append(fit)
        frows.append((n, fit.b, fit.c, fit.omega, fit.n_fit, fit.n_samples, fit.max_residual,
                      fit.rms_residual, fit.envelope_ok))
    _csv(out, cfg, "kernel_fit.csv", ["n", "b", "c", "omega", "n_fit", "n_samples",
                                      "max_residual", "rms_residual", "envelope_ok"], frows)
    ys = cols.coords[cols.sources]
    krows = []
    for it, t in enumerate(cols.times):
        for js, y in enumerate(ys):
            d2 = np.sum((cols.coords - y) ** 2, axis=1)
            for v in range(len(d2)):
                krows.append((t, js, v, d2[v], abs(cols.columns[it, js, v])))
    _csv(out, cfg, "kernel_columns.csv", ["t", "source", "vertex", "dist2", "abs_kernel"], krows,
         [f"finest grid n = {ns[-1]}"])
    out.check("envelope", all(f.envelope_ok for f in fits))
    out.check("positive_b", all(f.b > 0 for f in fits))
    if g("b_min") is not None:
        out.check("b_min", all(f.b >= g("b_min") for f in fits))
    if g("b_max") is not None:
        out.check("b_max", all(f.b <= g("b_max") for f in fits))
    out.summary = {"b": [f.b for f in fits], "c": [f.c for f in fits],
                   "omega": [f.omega for f in fits]}
    _svg(out, "kernel.svg", plotting.kernel_decay_plot, cols, fits[-1])


COMMANDS = {"pcalc": cmd_pcalc, "scan": cmd_scan, "rh": cmd_rh, "meyers": cmd_meyers,
            "kernel": cmd_kernel}


def build_parser():
    ap = argparse.ArgumentParser(prog="pelliptic",
                                 description="p-ellipticity calculus and discrete verifiers")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, metavar="PATH")
        sp.add_argument("--out", default="out", metavar="DIR")
        sp.add_argument("--seed", type=int, default=None, metavar="N")
        sp.add_argument("--threads", type=int, default=None, metavar="N")
    return ap


def run(command, cfg, out_dir):
    """Run one command on a validated config; returns the Outcome."""
    out = Outcome(command)
    out.dir = out_dir
    os.makedirs(out_dir, exist_ok=True)
    COMMANDS[command](cfg, out)
    return out


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load_config(args.config, args.command, args.seed, args.threads)
    except cfgmod.ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    out = run(args.command, cfg, args.out)
    print(json.dumps(_jsonable(out.as_dict()), indent=2, sort_keys=True))
    return 0 if out.ok else 1


if __name__ == "__main__":
    sys.exit(main())
