"""Command line front end: moment caches, sweeps, validation, figure data.

Every run resolves a RunConfig from built-in defaults, an optional flat
key = value config file and command line flags (highest precedence), then
emits CSV with a one-line provenance comment (version, config hash, seed).
Exit codes: 0 ok, 1 usage or I/O problem, 2 infeasible configuration,
3 validation failure.
"""

import argparse
import hashlib
import math
import os
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from . import __version__, mc_oracle
from .hexnet import HexNetwork, make_pilot_plan
from .moments import cache_filename, load_or_compute
from .optimizer import DEFAULT_BETAS, SweepSpec, k_max, optimize_point, sweep
from .se_core import (
    UNBOUNDED,
    FeasibilityError,
    SeConfig,
    asymptotic_sinr,
    se_joint,
)

CASES = ("average", "best", "worst")
ALL_SCHEMES = ("mr", "zf", "pzf")


class _UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Resolved scenario parameters shared by every subcommand."""

    s: int = 400
    snr_db: float = 5.0
    kappa: float = 3.7
    tiers: int = 5
    case: str = "average"
    epsilon: float = 0.0
    zeta_ul: float = 0.5
    seed: int = 0
    n_mu_samples: int = 1_000_000
    beta_set: tuple = DEFAULT_BETAS
    m_list: tuple = ()
    schemes: tuple = ALL_SCHEMES

    @property
    def snr(self):
        return 10.0 ** (self.snr_db / 10.0)

    def base_se_config(self):
        # template for grid searches; M, K, beta are replaced per point
        return SeConfig(
            M=1, K=1, beta=1, S=self.s, snr=self.snr,
            zeta_ul=self.zeta_ul, zeta_dl=1.0 - self.zeta_ul,
            epsilon=self.epsilon,
        )

    def sha(self):
        text = "\n".join(
            "%s=%r" % (f.name, getattr(self, f.name)) for f in fields(self)
        )
        return hashlib.sha256(text.encode()).hexdigest()[:12]


def _parse_int_list(text):
    out = []
    for tok in str(text).replace(",", " ").split():
        val = float(tok)
        if val != int(val):
            raise _UsageError("expected an integer list, got %r" % tok)
        out.append(int(val))
    if not out:
        raise _UsageError("empty list")
    return tuple(out)


def _parse_schemes(text):
    out = tuple(tok.strip().lower() for tok in str(text).split(",") if tok.strip())
    for sch in out:
        if sch not in ALL_SCHEMES:
            raise _UsageError("unknown scheme %r" % sch)
    if not out:
        raise _UsageError("empty scheme list")
    return out


def _read_config_file(path):
    """Flat `key = value` lines; # starts a comment, blank lines ignored."""
    raw = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise _UsageError("%s:%d: expected key = value" % (path, ln))
            key, val = (t.strip() for t in line.split("=", 1))
            raw[key.replace("-", "_")] = val
    return raw


_CONVERTERS = {
    "s": int,
    "snr_db": float,
    "kappa": float,
    "tiers": int,
    "case": lambda v: str(v).lower(),
    "epsilon": float,
    "zeta_ul": float,
    "seed": int,
    "n_mu_samples": lambda v: int(float(v)),
    "beta_set": _parse_int_list,
    "m_list": _parse_int_list,
    "schemes": _parse_schemes,
}


def resolve_config(args):
    """Defaults, then config file entries, then explicit flags."""
    cfg = RunConfig()
    if getattr(args, "config", None):
        for key, val in _read_config_file(args.config).items():
            if key not in _CONVERTERS:
                raise _UsageError("unknown config key %r" % key)
            cfg = replace(cfg, **{key: _CONVERTERS[key](val)})
    for key, conv in _CONVERTERS.items():
        val = getattr(args, key, None)
        if val is not None:
            cfg = replace(cfg, **{key: conv(val)})
    if cfg.case not in CASES:
        raise _UsageError("case must be one of %s" % ", ".join(CASES))
    return cfg


def default_m_grid(lo=10, hi=10**6, per_decade=20):
    """Logarithmic antenna grid, deduplicated after rounding to integers."""
    n = int(round(per_decade * math.log10(hi / lo)))
    grid = np.unique(np.round(lo * (hi / lo) ** (np.arange(n + 1) / n)).astype(int))
    return tuple(int(m) for m in grid)


def _moments_for(cfg, cache_dir, case=None, boundary_resolution=4096):
    net = HexNetwork(tiers=cfg.tiers)
    return net, load_or_compute(
        cache_dir, net, case or cfg.case, n_samples=cfg.n_mu_samples,
        boundary_resolution=boundary_resolution, seed=cfg.seed, kappa=cfg.kappa,
    )


def _cache_dir(args):
    if getattr(args, "cache_dir", None):
        return args.cache_dir
    env = os.environ.get("HEXMIMO_CACHE_DIR")
    if env:
        return env
    return os.path.join(os.path.expanduser("~"), ".cache", "hexmimo")


def _fmt(val):
    if isinstance(val, float):
        return "%.10g" % val
    return str(val)


def _emit(args, cfg, header, rows, extra=""):
    """Write the provenance comment, the header line and the data rows."""
    lines = ["# hexmimo v%s config_sha=%s seed=%d%s"
             % (__version__, cfg.sha(), cfg.seed, extra)]
    lines.append(",".join(header))
    for row in rows:
        if isinstance(row, str):  # pre-formatted warning/comment line
            lines.append(row)
        else:
            lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    out = getattr(args, "output", None)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def _maybe_plot(args, header, rows, x_col, y_col, series_cols, logx=False):
    path = getattr(args, "plot", None)
    if not path:
        return
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    idx = {name: i for i, name in enumerate(header)}
    data = [r for r in rows if not isinstance(r, str)]
    keys = sorted({tuple(r[idx[c]] for c in series_cols) for r in data})
    fig, ax = plt.subplots(figsize=(6, 4))
    for key in keys:
        pts = [
            (r[idx[x_col]], r[idx[y_col]])
            for r in data
            if tuple(r[idx[c]] for c in series_cols) == key
        ]
        pts.sort()
        label = " ".join("%s=%s" % (c, v) for c, v in zip(series_cols, key))
        ax.plot([p[0] for p in pts], [p[1] for p in pts], label=label)
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(x_col)
    ax.set_ylabel(y_col)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# ---------------------------------------------------------------------------
# subcommands


def cmd_moments(args):
    cfg = resolve_config(args)
    cache = _cache_dir(args)
    cases = CASES if args.cases == "all" else (args.cases,)
    for case in cases:
        net, tab = _moments_for(
            cfg, cache, case=case, boundary_resolution=args.boundary_resolution)
        fname = os.path.join(cache, cache_filename(
            case, cfg.tiers, cfg.kappa,
            cfg.n_mu_samples if case == "average" else args.boundary_resolution,
            cfg.seed if case == "average" else 0,
        ))
        print(
            "%s: tiers=%d kappa=%g cells=%d max_stderr=%.3g"
            % (fname, tab.tiers, tab.kappa, len(tab.cells), float(np.max(tab.stderr1)))
        )
    return 0


def _sweep_rows(cfg, moments, m_values, with_epsilon):
    net = HexNetwork(tiers=moments.tiers)
    base = cfg.base_se_config()
    spec = SweepSpec(
        m_values=tuple(sorted(m_values)), schemes=cfg.schemes, case=cfg.case,
        base=base, beta_candidates=cfg.beta_set,
    )
    points = {(p.scheme, p.M): p for p in sweep(spec, moments, skip_infeasible=True)}
    rows = []
    for scheme in cfg.schemes:
        for m in spec.m_values:
            p = points.get((scheme, m))
            if p is None:
                rows.append("# warning: scheme=%s m=%d infeasible" % (scheme, m))
                continue
            plan = make_pilot_plan(p.beta_star, net, p.K_star)
            sinr_inf = asymptotic_sinr(moments, plan, epsilon=cfg.epsilon)
            if sinr_inf is UNBOUNDED:
                se_inf = float("inf")
            else:
                se_inf = (
                    p.K_star * (1.0 - p.beta_star * p.K_star / cfg.s)
                    * math.log2(1.0 + sinr_inf)
                )
            row = [p.M, scheme, cfg.case, p.K_star, p.beta_star,
                   p.se_star, p.per_ue_se, p.antennas_per_ue, se_inf]
            if with_epsilon:
                row.append(cfg.epsilon)
            rows.append(row)
    return rows


SWEEP_HEADER = ("m", "scheme", "case", "k_star", "beta_star", "se_cell",
                "se_per_ue", "m_over_k", "se_asymptotic")


def cmd_sweep(args):
    cfg = resolve_config(args)
    net, tab = _moments_for(cfg, _cache_dir(args))
    m_values = cfg.m_list or default_m_grid()
    with_eps = cfg.epsilon != 0.0
    header = SWEEP_HEADER + (("epsilon",) if with_eps else ())
    rows = _sweep_rows(cfg, tab, m_values, with_eps)
    _emit(args, cfg, header, rows)
    _maybe_plot(args, header, rows, "m", "se_cell", ("scheme",), logx=True)
    return 0


def cmd_optimize(args):
    cfg = resolve_config(args)
    net, tab = _moments_for(cfg, _cache_dir(args))
    with_eps = cfg.epsilon != 0.0
    header = SWEEP_HEADER + (("epsilon",) if with_eps else ())
    rows = _sweep_rows(cfg, tab, (args.m,), with_eps)
    _emit(args, cfg, header, rows)
    return 0


def _se_vs_k_rows(cfg, moments):
    """Best-over-beta SE per (scheme, M, K), peaks marked."""
    net = HexNetwork(tiers=moments.tiers)
    base = cfg.base_se_config()
    m_values = cfg.m_list or (100, 500)
    rows = []
    for scheme in cfg.schemes:
        for m in sorted(m_values):
            best_per_k = {}
            for beta in cfg.beta_set:
                for k in range(1, k_max(scheme, m, beta, cfg.s) + 1):
                    se = se_joint(
                        scheme, replace(base, M=m, K=k, beta=beta),
                        moments, make_pilot_plan(beta, net, k),
                    ).se_total
                    if k not in best_per_k or se > best_per_k[k][0]:
                        best_per_k[k] = (se, beta)
            if not best_per_k:
                rows.append("# warning: scheme=%s m=%d infeasible" % (scheme, m))
                continue
            peak = max(best_per_k, key=lambda k: (best_per_k[k][0], -k))
            for k in sorted(best_per_k):
                se, beta = best_per_k[k]
                rows.append([m, scheme, cfg.case, k, beta, se, int(k == peak)])
    return rows


SE_VS_K_HEADER = ("m", "scheme", "case", "k", "beta_star", "se_cell", "is_peak")


def cmd_se_vs_k(args):
    cfg = resolve_config(args)
    net, tab = _moments_for(cfg, _cache_dir(args))
    rows = _se_vs_k_rows(cfg, tab)
    _emit(args, cfg, SE_VS_K_HEADER, rows)
    _maybe_plot(args, SE_VS_K_HEADER, rows, "k", "se_cell", ("scheme", "m"))
    return 0


VALIDATE_HEADER = ("scheme", "m", "k", "beta", "epsilon", "se_closed", "se_mc",
                   "mc_stderr", "rel_gap", "ok")


def cmd_validate(args):
    cfg = resolve_config(args)
    if getattr(args, "tiers", None) is None and not _config_sets(args, "tiers"):
        cfg = replace(cfg, tiers=2)  # small default scenario
    k = args.k
    beta = args.beta
    m_values = cfg.m_list or (100, 500)
    net, tab = _moments_for(cfg, _cache_dir(args))
    plan = make_pilot_plan(beta, net, k)
    se_cfg = replace(cfg.base_se_config(), M=max(m_values), K=k, beta=beta)
    rows = mc_oracle.validation_rows(
        net, plan, se_cfg, tab, m_values=m_values, schemes=cfg.schemes,
        n_channel_draws=args.inner_draws, n_position_draws=args.outer_draws,
        seed=cfg.seed, epsilon=cfg.epsilon, n_workers=args.workers,
        rel_tol=args.rel_tol, pzf_rel_tol=args.pzf_rel_tol,
    )
    out_rows = [
        [r["scheme"], r["m"], r["k"], r["beta"], r["epsilon"], r["se_closed"],
         r["se_mc"], r["mc_stderr"], r["rel_gap"], "pass" if r["ok"] else "fail"]
        for r in rows
    ]
    failures = [r for r in rows if not r["ok"]]

    dual_lines, dual_ok = _duality_report(cfg)
    _emit(args, cfg, VALIDATE_HEADER, out_rows)
    for r in rows:
        print(
            "closed-vs-mc %-3s M=%-4d closed=%8.3f mc=%8.3f+-%.3f gap=%+.2f%% %s"
            % (r["scheme"], r["m"], r["se_closed"], r["se_mc"], r["mc_stderr"],
               100 * r["rel_gap"], "pass" if r["ok"] else "FAIL"),
            file=sys.stderr,
        )
    for line in dual_lines:
        print(line, file=sys.stderr)
    ok = not failures and dual_ok
    print("validation: %s" % ("PASS" if ok else "FAIL"), file=sys.stderr)
    return 0 if ok else 3


def _duality_report(cfg, tol=1e-9):
    """UL/DL duality identities on a small fixed scenario, one line per scheme."""
    net = HexNetwork(tiers=1)
    plan = make_pilot_plan(1, net, 4)
    se_cfg = replace(cfg.base_se_config(), M=32, K=4, beta=1)
    scenario = mc_oracle.make_scenario(net, plan, se_cfg, rng=cfg.seed, kappa=cfg.kappa)
    lines, ok = [], True
    for scheme in cfg.schemes:
        tables = mc_oracle.duality_tables(scheme, scenario, 2000, rng=cfg.seed)
        gam = mc_oracle.ul_sinr_from_tables(tables)
        sol = mc_oracle.duality_power_control(scenario, gam, tables)
        p_res = abs(sol.dl_total_power - sol.ul_total_power) / sol.ul_total_power
        s_res = float(np.max(np.abs(sol.dl_sinr / gam - 1.0)))
        good = p_res < tol and s_res < tol and np.all(sol.q > 0)
        ok = ok and good
        lines.append(
            "duality %-3s power_residual=%.2e sinr_residual=%.2e cond=%.1f %s"
            % (scheme, p_res, s_res, sol.cond, "pass" if good else "FAIL")
        )
    return lines, ok


def _config_sets(args, key):
    if not getattr(args, "config", None):
        return False
    return key in _read_config_file(args.config)


def _snr_rows(cfg, moments, snr_dbs, m_values):
    rows = []
    for snr_db in snr_dbs:
        cfg_s = replace(cfg, snr_db=float(snr_db))
        for row in _sweep_rows(cfg_s, moments, m_values, False):
            if isinstance(row, str):
                rows.append(row + " snr_db=%g" % snr_db)
            else:
                rows.append([float(snr_db)] + row)
    return rows


def _coherence_rows(cfg, moments, s_values, m_values):
    rows = []
    for s in s_values:
        cfg_s = replace(cfg, s=int(s))
        for row in _sweep_rows(cfg_s, moments, m_values, False):
            if isinstance(row, str):
                rows.append(row + " s=%d" % s)
            else:
                rows.append([int(s)] + row)
    return rows


def _reuse_rows(cfg, moments, m_values):
    """Optimized over K only, one series per pilot reuse factor."""
    rows = []
    for beta in cfg.beta_set:
        cfg_b = replace(cfg, beta_set=(beta,))
        for row in _sweep_rows(cfg_b, moments, m_values, False):
            if isinstance(row, str):
                rows.append(row + " beta=%d" % beta)
            else:
                rows.append([beta] + row)
    return rows


def _validation_curve_rows(cfg, args, moments, net):
    """Closed-form SE lines plus Monte-Carlo markers at fixed K."""
    k, beta = args.k, args.beta
    base = cfg.base_se_config()
    plan = make_pilot_plan(beta, net, k)
    rows = []
    for m in (m for m in default_m_grid(10, 1000) if m > beta * k):
        for scheme in cfg.schemes:
            se_cfg = replace(base, M=m, K=k, beta=beta)
            try:
                se = se_joint(scheme, se_cfg, moments, plan).se_total
            except FeasibilityError:
                continue
            rows.append(["closed", scheme, m, k, beta, se, 0.0])
    mc_ms = cfg.m_list or (100, 500)
    se_cfg = replace(base, M=max(mc_ms), K=k, beta=beta)
    study = mc_oracle.empirical_se_study(
        net, plan, se_cfg, m_values=mc_ms, schemes=cfg.schemes,
        n_channel_draws=args.inner_draws, n_position_draws=args.outer_draws,
        seed=cfg.seed, n_workers=args.workers,
    )
    for scheme in cfg.schemes:
        for m in sorted(mc_ms):
            cell = study[(scheme, m)]
            rows.append(["mc", scheme, m, k, beta, cell.se_total, cell.se_stderr])
    return rows


FIGURE_SUMMARY = {
    3: "optimized per-cell SE and K* vs M, average interference",
    4: "closed-form SE vs simulation at fixed K",
    5: "optimized per-cell SE and K* vs M, best-case interference",
    6: "SE per scheduled UE at the per-cell optimum",
    7: "BS antennas per scheduled UE at the per-cell optimum",
    8: "optimized per-cell SE and K* vs M, worst-case interference",
    9: "per-cell SE vs number of scheduled UEs, peaks marked",
    10: "optimized per-cell SE vs SNR",
    11: "per-cell SE vs M for each pilot reuse factor, optimized over K",
    12: "optimized per-cell SE vs coherence block length",
    13: "optimized per-cell SE vs M with and without hardware distortion",
}


def cmd_reproduce(args):
    cfg = resolve_config(args)
    fig = args.figure
    cache = _cache_dir(args)

    if fig in (3, 5, 6, 7, 8):
        case = {3: "average", 5: "best", 8: "worst"}.get(fig, "average")
        cfg = replace(cfg, case=case)
        net, tab = _moments_for(cfg, cache)
        m_values = cfg.m_list or (
            default_m_grid() if fig in (3, 5, 8) else default_m_grid(10, 1000)
        )
        rows = _sweep_rows(cfg, tab, m_values, False)
        _emit(args, cfg, SWEEP_HEADER, rows, extra=" figure=%d" % fig)
        y = {6: "se_per_ue", 7: "m_over_k"}.get(fig, "se_cell")
        _maybe_plot(args, SWEEP_HEADER, rows, "m", y, ("scheme",), logx=True)
    elif fig == 4:
        if getattr(args, "tiers", None) is None and not _config_sets(args, "tiers"):
            cfg = replace(cfg, tiers=2)
        net, tab = _moments_for(cfg, cache)
        header = ("kind", "scheme", "m", "k", "beta", "se_cell", "mc_stderr")
        rows = _validation_curve_rows(cfg, args, tab, net)
        _emit(args, cfg, header, rows, extra=" figure=4")
        _maybe_plot(args, header, rows, "m", "se_cell", ("scheme", "kind"), logx=True)
    elif fig == 9:
        net, tab = _moments_for(cfg, cache)
        rows = _se_vs_k_rows(cfg, tab)
        _emit(args, cfg, SE_VS_K_HEADER, rows, extra=" figure=9")
        _maybe_plot(args, SE_VS_K_HEADER, rows, "k", "se_cell", ("scheme", "m"))
    elif fig == 10:
        net, tab = _moments_for(cfg, cache)
        snr_dbs = np.arange(-10.0, 20.5, 2.0)
        header = ("snr_db",) + SWEEP_HEADER
        rows = _snr_rows(cfg, tab, snr_dbs, cfg.m_list or (100, 500))
        _emit(args, cfg, header, rows, extra=" figure=10")
        _maybe_plot(args, header, rows, "snr_db", "se_cell", ("scheme", "m"))
    elif fig == 11:
        net, tab = _moments_for(cfg, cache)
        cfg_b = replace(cfg, beta_set=(1, 3))
        header = ("beta",) + SWEEP_HEADER
        rows = _reuse_rows(cfg_b, tab, cfg.m_list or default_m_grid(10, 1000))
        _emit(args, cfg, header, rows, extra=" figure=11")
        _maybe_plot(args, header, rows, "m", "se_cell", ("scheme", "beta"), logx=True)
    elif fig == 12:
        net, tab = _moments_for(cfg, cache)
        s_values = (100, 140, 200, 280, 400, 560, 800, 1120, 1600, 2240, 3200)
        header = ("s",) + SWEEP_HEADER
        rows = _coherence_rows(cfg, tab, s_values, cfg.m_list or (100, 500))
        _emit(args, cfg, header, rows, extra=" figure=12")
        _maybe_plot(args, header, rows, "s", "se_cell", ("scheme", "m"), logx=True)
    elif fig == 13:
        net, tab = _moments_for(cfg, cache)
        m_values = cfg.m_list or default_m_grid()
        header = SWEEP_HEADER + ("epsilon",)
        rows = []
        for eps in (0.0, args.impairment):
            rows.extend(_sweep_rows(replace(cfg, epsilon=eps), tab, m_values, True))
        _emit(args, cfg, header, rows, extra=" figure=13")
        _maybe_plot(args, header, rows, "m", "se_cell", ("scheme", "epsilon"), logx=True)
    else:
        raise _UsageError("unknown figure id %d (known: %s)"
                          % (fig, ", ".join(map(str, sorted(FIGURE_SUMMARY)))))
    return 0


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_common(parser):
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--s", type=int, help="coherence block length")
    parser.add_argument("--snr-db", type=float, help="SNR in dB")
    parser.add_argument("--kappa", type=float, help="pathloss exponent")
    parser.add_argument("--tiers", type=int, help="interference rings around the cell")
    parser.add_argument("--case", choices=CASES, help="interference case")
    parser.add_argument("--epsilon", type=float, help="transceiver distortion level")
    parser.add_argument("--zeta-ul", type=float, help="uplink fraction of the payload")
    parser.add_argument("--seed", type=int, help="seed for every stochastic step")
    parser.add_argument("--n-samples", "--n-mu-samples", dest="n_mu_samples",
                        help="UE position samples for the moment tables")
    parser.add_argument("--beta-set", help="comma list of pilot reuse factors")
    parser.add_argument("--m-list", help="comma list of antenna counts")
    parser.add_argument("--schemes", help="comma subset of mr,zf,pzf")
    parser.add_argument("--cache-dir", help="moment cache directory "
                        "(default: $HEXMIMO_CACHE_DIR or ~/.cache/hexmimo)")
    parser.add_argument("--output", "-o", help="write CSV here instead of stdout")
    parser.add_argument("--plot", help="also render the CSV to this image file")


def _build_parser():
    parser = _Parser(prog="hexmimo", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version",
                        version="hexmimo %s" % __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="build or refresh moment tables")
    _add_common(p)
    p.add_argument("--cases", default="all", choices=("all",) + CASES)
    p.add_argument("--boundary-resolution", type=int, default=4096)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("sweep", help="optimized SE over an antenna grid")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize", help="optimal (K, beta) at a single M")
    _add_common(p)
    p.add_argument("--m", type=int, required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("se-vs-k", help="SE as a function of the UE count")
    _add_common(p)
    p.set_defaults(func=cmd_se_vs_k)

    p = sub.add_parser("validate", help="closed forms vs Monte-Carlo simulation")
    _add_common(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--beta", type=int, default=3)
    p.add_argument("--inner-draws", type=int, default=10_000)
    p.add_argument("--outer-draws", type=int, default=200)
    p.add_argument("--rel-tol", type=float, default=0.03)
    p.add_argument("--pzf-rel-tol", type=float, default=0.10)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("reproduce", help="data series for a documented figure id")
    _add_common(p)
    p.add_argument("figure", type=int)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--beta", type=int, default=3)
    p.add_argument("--inner-draws", type=int, default=10_000)
    p.add_argument("--outer-draws", type=int, default=200)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--impairment", type=float, default=0.1)
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print("hexmimo: error: %s" % exc, file=sys.stderr)
        return 1
    except OSError as exc:
        print("hexmimo: error: %s" % exc, file=sys.stderr)
        return 1
    except ValueError as exc:  # FeasibilityError included
        print("hexmimo: infeasible configuration: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
