"""Named experiments, their configuration, reports and the suite driver."""

from __future__ import annotations

import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import estimates as est
from . import randomdata as rd
from . import solver as sv
from . import spectral as sp
from .basis import (
    SpectralField,
    analyze,
    build_mode_table,
    evaluate,
    gauss_hermite_grid,
    hermite_table_1d,
    synthesize,
)
from .io import config_hash, write_csv, write_json


class ConfigError(ValueError):
    """Invalid experiment configuration (usage error)."""


# experiment -> (dimension, cutoff, sample_count, params) defaults at acceptance scale
DEFAULTS = {
    "basis": (1, 121, None, {"tol": 1e-10}),
    "projectors": (1, 256, 20, {"J": 4, "tamper_eta": False, "tol": 1e-13}),
    "lens": (1, 59, 3, {"t_max": 0.6, "t_count": 13, "tol": 1e-6, "x_max": 12.0}),
    "lp-norms": (1, None, None, {"n_list": [16, 32, 64, 128, 256, 512, 1024, 2048, 4096], "l4_log_power": 0.25, "tol_inf": 0.03, "tol_4": 0.05}),
    "products": (1, None, None, {"n_list": [16, 32, 64, 128, 256, 512, 1024, 2048], "s_list": [0.0, 0.5], "pair_bound": -0.4, "tol": 0.1}),
    "quartic": (1, None, None, {"n1_list": [32, 64, 128, 256, 512], "rest": [8, 5, 3], "bound": -4.0}),
    "bilinear": (2, None, 20, {"dims": [2, 3], "N_list": [2, 4, 8, 16], "modes": 12, "delta": 0.1, "factor": 2.0}),
    "smoothing": (1, None, 50, {"eps": 0.1, "dims": [1, 2], "cutoffs": [81, 289], "tol": 0.15}),
    "chaos": (1, 11, 200000, {"q_list": [2, 4, 6, 8], "orders": [1, 2, 3], "factor": 2.0, "pz_samples": 10000, "pz_lambdas": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0], "pz_N": 4, "s": 0.5}),
    "tails": (1, 41, 100000, {"sigma": 0.5, "sample_sizes": [10000, 100000], "event": "hsigma", "x_max": 6.0, "x_points": 25, "min_count": 10, "tol": 0.2, "N_list": [2, 4]}),
    "nonsmoothing": (1, 2048, 1000, {"s": 0.5, "N_list": [2, 4, 8, 16, 32]}),
    "solve": (1, 21, None, {"kappa": [1, -1], "p": 3, "T": 0.7, "norm": 0.05, "time_nodes": 16, "ratio_bound": 0.5, "mass_tol": 1e-8, "resid_tol": 1e-8, "order_min": 2.9, "picard_tol": 1e-10}),
    "scatter": (1, 21, None, {"kappa": [1, -1], "p": 3, "T": 0.78, "norm": 0.05, "time_nodes": 16, "levels": 24, "tol": 1e-6}),
    "localization": (1, None, None, {"n_list": [64, 128, 256, 512, 1024], "c": 1.5, "K": 0, "p": 2.0, "bound": -4.0}),
}

EXPERIMENTS = tuple(DEFAULTS)


def _coerce(value, like):
    if isinstance(like, bool):
        if isinstance(value, str):
            if value.lower() in ("1", "true", "yes"):
                return True
            if value.lower() in ("0", "false", "no"):
                return False
            raise ConfigError(f"expected a boolean, got {value!r}")
        return bool(value)
    if isinstance(like, list):
        if isinstance(value, str):
            value = [v for v in value.replace(";", ",").split(",") if v.strip()]
        if not isinstance(value, (list, tuple)):
            value = [value]
        proto = like[0] if like else 0.0
        return [_coerce(v, proto) for v in value]
    try:
        if isinstance(like, int):
            f = float(value)
            if f != int(f):
                raise ConfigError(f"expected an integer, got {value!r}")
            return int(f)
        if isinstance(like, float):
            return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return str(value)


@dataclass
class ExperimentConfig:
    experiment: str
    dimension: int | None = None
    cutoff: int | None = None
    seed: int = 0
    sample_count: int | None = None
    output_dir: str = "runs"
    params: dict = field(default_factory=dict)

    def resolved(self):
        """Copy with defaults filled in and every parameter validated."""
        if self.experiment not in DEFAULTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        d0, c0, n0, p0 = DEFAULTS[self.experiment]
        unknown = set(self.params) - set(p0)
        if unknown:
            raise ConfigError(f"unknown parameters for {self.experiment}: {', '.join(sorted(unknown))}")
        params = {k: _coerce(self.params.get(k, v), v) for k, v in p0.items()}
        dim = d0 if self.dimension is None else int(self.dimension)
        if not 1 <= dim <= 3:
            raise ConfigError("dimension must be 1, 2 or 3")
        cutoff = c0 if self.cutoff is None else int(self.cutoff)
        if cutoff is not None and cutoff < dim:
            raise ConfigError("cutoff must be at least the dimension")
        samples = n0 if self.sample_count is None else int(self.sample_count)
        if samples is not None and samples < 1:
            raise ConfigError("sample_count must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        for k, v in params.items():
            if k.endswith("_list") and isinstance(v, list) and not v:
                raise ConfigError(f"{k} must not be empty")
        for key in ("N_list",):
            for N in params.get(key, []):
                if N < 1 or N & (N - 1):
                    raise ConfigError(f"{key} entries must be powers of two")
        if "eps" in params and not 0 < params["eps"] < 0.5:
            raise ConfigError("eps must lie in (0, 1/2)")
        if "T" in params and not 0 < params["T"] < np.pi / 4:
            raise ConfigError("T must lie in (0, pi/4)")
        if "p" in params and self.experiment in ("solve", "scatter"):
            if params["p"] < 3 or params["p"] % 2 == 0:
                raise ConfigError("p must be an odd integer >= 3")
        return ExperimentConfig(self.experiment, dim, cutoff, int(self.seed), samples, self.output_dir, params)

    def echo(self):
        """Config content that is hashed and echoed (no output paths)."""
        return {
            "experiment": self.experiment,
            "dimension": self.dimension,
            "cutoff": self.cutoff,
            "seed": self.seed,
            "sample_count": self.sample_count,
            "params": self.params,
        }


@dataclass
class ExperimentReport:
    config: dict
    rows: list
    fits: dict
    verdicts: dict
    meta: dict
    error: str | None = None

    @property
    def passed(self):
        return self.error is None and bool(self.verdicts) and all(self.verdicts.values())

    def as_dict(self):
        return {
            "version": __version__,
            "config": self.config,
            "config_sha256": config_hash(self.config),
            "rows": self.rows,
            "fits": self.fits,
            "verdicts": self.verdicts,
            "passed": self.passed,
            "error": self.error,
            "meta": self.meta,
        }


def parallel_map(fn, items, threads=None):
    """Ordered map over ``items`` on a thread pool; order of results is fixed."""
    items = list(items)
    threads = threads or os.cpu_count() or 1
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# experiments; each returns (rows, fits, verdicts, meta)


def _rng(cfg, *extra):
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, *extra]))


def _random_field(table, rng):
    c = rng.standard_normal(len(table)) + 1j * rng.standard_normal(len(table))
    return SpectralField(table, c / np.linalg.norm(c))


def exp_basis(cfg, pmap):
    table = build_mode_table(cfg.dimension, cfg.cutoff)
    grid = gauss_hermite_grid(table.max_index + 1)
    E = hermite_table_1d(table.max_index, grid.points)
    G1 = (E * grid.unit_weights) @ E.T
    gram_err = float(np.max(np.abs(G1 - np.eye(G1.shape[0]))))
    f = _random_field(table, _rng(cfg))
    back = analyze(synthesize(f, grid), grid, table)
    rt_err = float(np.max(np.abs(back.coeffs - f.coeffs)))
    tol = cfg.params["tol"]
    rows = [{"quantity": "gram_max_error", "value": gram_err}, {"quantity": "roundtrip_max_error", "value": rt_err}]
    return rows, {}, {"gram_identity": gram_err <= tol, "roundtrip": rt_err <= tol}, {"grid_order": grid.order, "modes": len(table)}


def exp_projectors(cfg, pmap):
    cut = sp.DyadicCutoffs.tampered() if cfg.params["tamper_eta"] else sp.DEFAULT_CUTOFFS
    J = cfg.params["J"]
    table = build_mode_table(cfg.dimension, cfg.cutoff)
    if table.cutoff > 4**J:
        raise ConfigError("cutoff must not exceed 4^J for the partition check")
    rng = _rng(cfg)
    comp_err = part_err = 0.0
    for _ in range(cfg.sample_count):
        f = _random_field(table, rng)
        total = np.zeros(len(table), dtype=complex)
        for k in range(J + 1):
            N = 2**k
            sharp = sp.dyadic_project(f, N, "sharp", cut)
            wide = sp.dyadic_project(sharp, N, "wide", cut)
            comp_err = max(comp_err, float(np.max(np.abs(wide.coeffs - sharp.coeffs))))
            total += sharp.coeffs
        part_err = max(part_err, float(np.max(np.abs(total - f.coeffs))))
    chk = cut.check()
    tol = cfg.params["tol"]
    rows = [
        {"quantity": "wide_after_sharp_error", "value": comp_err},
        {"quantity": "partition_of_unity_error", "value": part_err},
        {"quantity": "psi_outside_support", "value": chk["psi_outside_support"]},
        {"quantity": "phi_psi_defect", "value": chk["phi_psi_defect"]},
    ]
    verdicts = {
        "wide_after_sharp": comp_err <= tol,
        "partition_of_unity": part_err <= tol,
        "cutoff_identities": max(chk.values()) <= tol,
    }
    return rows, {}, verdicts, {"tampered_eta": cfg.params["tamper_eta"]}


def exp_lens(cfg, pmap):
    table = build_mode_table(cfg.dimension, cfg.cutoff)
    if cfg.dimension != 1:
        raise ConfigError("the free-flow oracle is one-dimensional")
    P = cfg.params
    rng = _rng(cfg)
    lam_max = np.sqrt(table.cutoff)
    x = np.arange(-(2 * lam_max + 20), 2 * lam_max + 20, 0.02)
    xs = np.linspace(-P["x_max"], P["x_max"], 801)
    ts = np.linspace(-P["t_max"], P["t_max"], P["t_count"])
    rows, worst = [], 0.0
    for k in range(cfg.sample_count):
        f = _random_field(table, rng)
        oracle = sp.FreeFlowOracle(x, evaluate(f, [x]), pad=4.0)
        for t in ts:
            lhs = evaluate(sp.harmonic_propagate(f, t), [xs])
            rhs = sp.lens_pullback(lambda s, y: oracle(s, y[:, 0]), t, xs)
            err = float(np.max(np.abs(lhs - rhs)))
            worst = max(worst, err)
            rows.append({"sample": k, "t": float(t), "sup_error": err})
    return rows, {}, {"lens_conjugation": worst <= P["tol"]}, {"modes": len(table), "max_error": worst}


def exp_lp_norms(cfg, pmap):
    P = cfg.params
    ns = P["n_list"]
    mu = np.sqrt(2.0 * np.asarray(ns) + 1)
    vinf = np.array(pmap(lambda n: est.hermite_lp_norm_1d(n, np.inf), ns))
    v4 = np.array(pmap(lambda n: est.hermite_lp_norm_1d(n, 4), ns))
    fit_inf = est.fit_scaling(mu, vinf)
    fit4_raw = est.fit_scaling(mu, v4)
    fit4_corr = est.fit_scaling(mu, v4 / np.log(mu) ** P["l4_log_power"])
    fit4_paper = est.fit_scaling(mu, v4 / np.log(mu))
    rows = [{"n": n, "mu": m, "linf": a, "l4": b} for n, m, a, b in zip(ns, mu, vinf, v4)]
    fits = {"linf": fit_inf.as_dict(), "l4_raw": fit4_raw.as_dict(), "l4_log_corrected": fit4_corr.as_dict(), "l4_over_log": fit4_paper.as_dict()}
    verdicts = {
        "linf_slope": abs(fit_inf.slope + 1 / 6) <= P["tol_inf"],
        "l4_slope_log_corrected": abs(fit4_corr.slope + 0.25) <= P["tol_4"],
    }
    return rows, fits, verdicts, {"l4_log_power": P["l4_log_power"]}


def exp_products(cfg, pmap):
    P = cfg.params
    ns = P["n_list"]
    mu = np.sqrt(2.0 * np.asarray(ns) + 1)
    pairs = pmap(lambda n: est.pair_product_sup(n), ns)
    pv = np.array([v for v, _ in pairs])
    rows = [{"kind": "pair_sup", "n": n, "argmax_m": m, "s": 0.0, "value": v} for n, (v, m) in zip(ns, pairs)]
    fit_raw = est.fit_scaling(mu, pv)
    # divide out min(log mu_n, log mu_m)^{1/2} of the 1D product estimate
    mu_m = np.sqrt(2.0 * np.array([m for _, m in pairs]) + 1)
    logf = np.sqrt(np.maximum(np.log(np.minimum(mu, mu_m)), 1.0))
    fit_corr = est.fit_scaling(mu, pv / logf)
    fits = {"pair_raw": fit_raw.as_dict(), "pair_log_corrected": fit_corr.as_dict()}
    verdicts = {"pair_slope": fit_corr.slope <= P["pair_bound"]}
    for s in P["s_list"]:
        tv = np.array(pmap(lambda n: est.product_sobolev_norm([[n], [0], [0]], s), ns))
        rows += [{"kind": "triple", "n": n, "s": s, "value": v} for n, v in zip(ns, tv)]
        f = est.fit_scaling(mu, tv)
        fits[f"triple_s{s}"] = f.as_dict()
        verdicts[f"triple_slope_s{s}"] = abs(f.slope - (s - 0.5)) <= P["tol"]
    return rows, fits, verdicts, {}


def exp_quartic(cfg, pmap):
    P = cfg.params
    rest = P["rest"]
    logs, fit = est.quartic_decay_scan(P["n1_list"], rest)
    rows = [{"n1": n, "n2": rest[0], "n3": rest[1], "n4": rest[2], "log_abs_integral": v} for n, v in zip(P["n1_list"], logs)]
    # float quadrature cross-check where the value is representable
    n_chk = min(P["n1_list"])
    idx = [[n_chk], [rest[0]], [rest[1]], [rest[2]]]
    a, b = est.quartic_integral(idx), est.quartic_integral(idx, "quadrature")
    ground = est.quartic_integral([[0]] * 4)
    verdicts = {
        "decay_slope": fit.slope <= P["bound"],
        "quadrature_agrees": abs(a - b) <= 1e-12 * max(1.0, abs(a)),
        "ground_state": abs(ground - 1 / np.sqrt(2 * np.pi)) <= 1e-14,
    }
    return rows, {"quartic": fit.as_dict()}, verdicts, {"cross_check": [a, b]}


def exp_bilinear(cfg, pmap):
    P = cfg.params
    Ns = P["N_list"]
    rows, fits, verdicts = [], {}, {}
    for d in P["dims"]:
        tasks = [(N, M) for N in Ns for M in Ns]
        stats = pmap(
            lambda nm: est.bilinear_experiment(nm[0], nm[1], cfg.sample_count, d, cfg.seed, P["modes"], P["delta"]),
            tasks,
        )
        ratios = {}
        for st in stats:
            rows.append({"d": d, "N": st.N, "M": st.M, "envelope": st.envelope, "max_ratio": st.max_ratio, "mean_ratio": st.mean_ratio})
            ratios[(st.N, st.M)] = st.max_ratio
        base = ratios[(min(Ns), min(Ns))]
        top = max(ratios.values())
        fits[f"d{d}"] = {"max_ratio": top, "ratio_at_smallest": base, "max_over_min": top / min(ratios.values())}
        verdicts[f"bounded_d{d}"] = top <= P["factor"] * base
    return rows, fits, verdicts, {"time_window": [-1.0, 1.0], "method": "exact time integral, exact Gauss quadrature in space"}


def exp_smoothing(cfg, pmap):
    P = cfg.params
    rows, fits, verdicts = [], {}, {}
    for d in P["dims"]:
        maxima = []
        for cut in P["cutoffs"]:
            st = est.smoothing_experiment(cfg.sample_count, P["eps"], d, cut, cfg.seed)
            maxima.append(st.max_ratio)
            rows.append({"d": d, "cutoff": cut, "max_ratio": st.max_ratio, "mean_ratio": float(np.mean(st.ratios)), "min_ratio": float(np.min(st.ratios))})
        rel = abs(maxima[-1] - maxima[0]) / maxima[0]
        fits[f"d{d}"] = {"relative_change": rel}
        verdicts[f"uniform_d{d}"] = rel < P["tol"]
    return rows, fits, verdicts, {"eps": P["eps"]}


def exp_chaos(cfg, pmap):
    P = cfg.params
    table = build_mode_table(cfg.dimension, cfg.cutoff)
    lam = np.sqrt(table.lambda_sq.astype(float))
    base = lam ** (-1.0)
    base = base / np.linalg.norm(base)
    spec = rd.RandomizationSpec(table, base, cfg.seed, cfg.sample_count)
    rows, fits, verdicts = [], {}, {}
    for k in P["orders"]:
        ratios = []
        for q in P["q_list"]:
            m = rd.chaos_moment(spec, k, q)
            ratios.append(m.ratio)
            rows.append({"kind": "chaos", "order": k, "q": q, "estimate": m.estimate, "stderr": m.stderr, "bound": m.bound, "ratio": m.ratio})
        fits[f"order{k}"] = {"max_ratio": max(ratios), "ratio_q_min": ratios[0], "max_over_min": max(ratios) / min(ratios)}
        verdicts[f"chaos_order{k}"] = max(ratios) <= P["factor"] * ratios[0]
    pz_spec = rd.RandomizationSpec(table, base, cfg.seed + 1, P["pz_samples"])
    mult = sp.standard_eta(table.lambda_sq / float(P["pz_N"]) ** 2)
    X = rd.statistic_samples(pz_spec, rd.hs_norm_sq_statistic(table, P["s"], mult))
    g0 = np.abs(rd.gaussians(pz_spec.seed, 1, 0, P["pz_samples"])[:, 0]) ** 2
    ok = True
    for lam_ in P["pz_lambdas"]:
        for name, samples in (("hs_norm", X), ("abs_g0_sq", g0)):
            r = rd.paley_zygmund_check(pz_spec, None, lam_, samples=samples)
            ok &= r.holds
            rows.append({"kind": f"paley_zygmund_{name}", "lambda": lam_, "lhs": r.lhs, "rhs": r.rhs, "stderr": r.stderr, "holds": r.holds})
    verdicts["paley_zygmund"] = bool(ok)
    return rows, fits, verdicts, {"kernel": "strictly ordered products of base coefficients"}


def exp_tails(cfg, pmap):
    P = cfg.params
    table = build_mode_table(cfg.dimension, cfg.cutoff)
    lam = np.sqrt(table.lambda_sq.astype(float))
    base = lam ** (-1.0)
    sigma = P["sigma"]
    event = rd.TailEvent(kind=P["event"], sigma=sigma, N_list=tuple(P["N_list"]))
    scale = float(np.sqrt(np.sum(lam ** (2 * sigma) * base**2)))
    xs = np.linspace(0.0, P["x_max"], P["x_points"])
    grid = scale * np.sqrt(xs)
    sizes = sorted(P["sample_sizes"])
    big = rd.RandomizationSpec(table, base, cfg.seed, sizes[-1])
    stats = rd.event_statistics(big, event)
    ests = [rd.tail_from_statistics(stats[:n], grid, scale, P["min_count"]) for n in sizes]
    # fit on the cells usable at the smallest sample size, for every size
    mask = ests[0].fit_mask
    rows, slopes = [], []
    for n, te in zip(sizes, ests):
        y = -np.log(np.where(mask, te.empirical_prob, 1.0))
        A = np.vstack([xs[mask], np.ones(mask.sum())]).T
        (slope, icpt), *_ = np.linalg.lstsq(A, y[mask], rcond=None)
        slopes.append(float(slope))
        for i in range(xs.size):
            rows.append({
                "samples": n, "lambda": grid[i], "x": xs[i], "p": te.empirical_prob[i],
                "ci_low": te.wilson_ci[i, 0], "ci_high": te.wilson_ci[i, 1],
                "upper_bound_only": bool(te.counts[i] == 0), "in_fit": bool(mask[i]),
            })
    stable = abs(slopes[-1] - slopes[0]) <= P["tol"] * abs(slopes[-1])
    mono = all(np.all(np.diff(te.empirical_prob) <= 0) for te in ests)
    verdicts = {"positive_slope": all(s > 0 for s in slopes), "slope_stable": stable, "monotone": mono}
    fits = {f"n{n}": {"slope": s} for n, s in zip(sizes, slopes)}
    return rows, fits, verdicts, {"norm_scale": scale, "event": P["event"]}


def exp_nonsmoothing(cfg, pmap):
    P = cfg.params
    table = build_mode_table(cfg.dimension, cfg.cutoff)
    base = rd.divergent_profile(table, P["s"])
    spec = rd.RandomizationSpec(table, base, cfg.seed, cfg.sample_count)
    res = rd.nonsmoothing_scan(spec, P["s"], P["N_list"])
    rows = [{"N": r.N, "median": r.median, "q1": r.q1, "q3": r.q3, "sigma_sq": r.sigma_sq, "bound_holds": r.bound_holds} for r in res]
    med = [r.median for r in res]
    verdicts = {
        "medians_increasing": bool(np.all(np.diff(med) > 0)),
        "small_ball_bound": all(r.bound_holds for r in res),
    }
    return rows, {}, verdicts, {"s": P["s"]}


def _solver_u0(cfg, P):
    table = build_mode_table(cfg.dimension, cfg.cutoff)
    f = _random_field(table, _rng(cfg))
    return f * P["norm"]


def exp_solve(cfg, pmap):
    P = cfg.params
    u0 = _solver_u0(cfg, P)
    rows, verdicts = [], {}
    for kappa in [0] + list(P["kappa"]):
        conf = sv.SolverConfig(kappa=kappa, p=P["p"], T=P["T"], time_nodes=P["time_nodes"], picard_tol=P["picard_tol"])
        traj, dg = sv.picard_solve(u0, conf)
        resid = sv.duhamel_residual(traj, conf)
        row = {"kappa": kappa, "iterations": dg.iterations, "max_ratio": max(dg.ratios, default=0.0), "mass_drift": dg.mass_drift, "residual": resid}
        if kappa == 0:
            free = u0.coeffs[None, :] * traj.phases(traj.times)
            err = float(np.max(np.abs(traj.coeffs - free)))
            row["linear_error"] = err
            verdicts["linear_flow"] = err <= 1e-12 and resid <= 1e-12
        else:
            order, _ = sv.nonlinear_order(u0, conf)
            row["nonlinear_order"] = order
            verdicts[f"kappa{kappa:+d}"] = (
                max(dg.ratios, default=0.0) < P["ratio_bound"]
                and dg.mass_drift < P["mass_tol"]
                and resid < P["resid_tol"]
                and order >= P["order_min"]
            )
        rows.append(row)
    return rows, {}, verdicts, {"panels": len(traj.panels), "nodes_per_panel": P["time_nodes"]}


def exp_scatter(cfg, pmap):
    P = cfg.params
    u0 = _solver_u0(cfg, P)
    rows, verdicts = [], {}
    for kappa in P["kappa"]:
        conf = sv.SolverConfig(kappa=kappa, p=P["p"], T=P["T"], time_nodes=P["time_nodes"])
        traj, dg = sv.picard_solve(u0, conf)
        sc = sv.scattering_limit(traj, conf, P["levels"])
        ft = sv.to_free_nls(traj, np.arange(-12, 12, 0.02), times=traj.times[:: max(1, traj.times.size // 8)])
        mass_err = max(abs(sv.free_mass(ft, k) - u0.norm() ** 2) for k in range(ft.s.size))
        for t, c in zip(sc.times, sc.cauchy_curve):
            rows.append({"kappa": kappa, "t": t, "cauchy": c})
        verdicts[f"kappa{kappa:+d}"] = sc.decreasing and sc.cauchy_curve[-1] < P["tol"] and mass_err < 1e-8
    return rows, {}, verdicts, {"T": P["T"]}


def exp_localization(cfg, pmap):
    P = cfg.params
    logs, fit = est.tail_localization_scan(P["n_list"], P["K"], P["c"], P["p"])
    rows = [{"n": n, "log_tail_norm": v} for n, v in zip(P["n_list"], logs)]
    return rows, {"tail": fit.as_dict()}, {"decay_slope": fit.slope <= P["bound"]}, {}


RUNNERS = {
    "basis": exp_basis,
    "projectors": exp_projectors,
    "lens": exp_lens,
    "lp-norms": exp_lp_norms,
    "products": exp_products,
    "quartic": exp_quartic,
    "bilinear": exp_bilinear,
    "smoothing": exp_smoothing,
    "chaos": exp_chaos,
    "tails": exp_tails,
    "nonsmoothing": exp_nonsmoothing,
    "solve": exp_solve,
    "scatter": exp_scatter,
    "localization": exp_localization,
}


def run(config, threads=None, write=True):
    """Validate, run and (optionally) write report.json and data.csv."""
    cfg = config.resolved()
    pmap = lambda fn, items: parallel_map(fn, items, threads)  # noqa: E731
    start = time.perf_counter()
    error = None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            rows, fits, verdicts, meta = RUNNERS[cfg.experiment](cfg, pmap)
        except sv.PicardDivergence as exc:
            rows, fits, verdicts, meta = [], {}, {}, {"ratios": exc.ratios}
            error = f"divergence: {exc}"
    meta = dict(meta)
    meta["warnings"] = sorted({str(w.message) for w in caught})
    meta["wall_clock_seconds"] = round(time.perf_counter() - start, 3)
    report = ExperimentReport(cfg.echo(), rows, fits, verdicts, meta, error)
    if write:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "report.json", report.as_dict())
        write_csv(out / "data.csv", rows, cfg.echo())
    return report


# ---------------------------------------------------------------------------
# suite

# (label, experiment, quick overrides)
SUITE = [
    ("basis orthonormality", "basis", {"cutoff": 41}),
    ("dyadic projector algebra", "projectors", {"sample_count": 4}),
    ("lens conjugation", "lens", {"sample_count": 1, "params": {"t_count": 5}}),
    ("Hermite L^p decay", "lp-norms", {"params": {"n_list": [16, 32, 64, 128, 256, 512]}}),
    ("product estimates", "products", {"params": {"n_list": [16, 32, 64, 128, 256]}}),
    ("quartic integral decay", "quartic", {"params": {"n1_list": [32, 64, 128]}}),
    ("bilinear Strichartz", "bilinear", {"sample_count": 4, "params": {"N_list": [2, 4, 8], "modes": 8}}),
    ("smoothing effect", "smoothing", {"sample_count": 20, "params": {"cutoffs": [81, 121]}}),
    ("Wiener chaos and Paley-Zygmund", "chaos", {"sample_count": 20000, "params": {"pz_samples": 4000}}),
    ("deviation tails", "tails", {"params": {"sample_sizes": [4000, 20000], "x_max": 4.0}}),
    ("non-smoothing of randomisation", "nonsmoothing", {"cutoff": 512, "sample_count": 300, "params": {"N_list": [2, 4, 8, 16]}}),
    ("Picard solver", "solve", {"cutoff": 11}),
    ("scattering", "scatter", {"cutoff": 11}),
    ("eigenfunction localisation", "localization", {"params": {"n_list": [64, 128, 256]}}),
]


def suite(name, output_dir="runs/suite", seed=0, threads=None, tamper_eta=False, echo=print):
    """Run every experiment; returns (all_passed, [(label, experiment, passed)])."""
    if name not in ("quick", "full"):
        raise ConfigError("suite must be 'quick' or 'full'")
    results = []
    for label, exp, quick in SUITE:
        over = quick if name == "quick" else {}
        params = dict(over.get("params", {}))
        if exp == "projectors" and tamper_eta:
            params["tamper_eta"] = True
        cfg = ExperimentConfig(
            exp,
            cutoff=over.get("cutoff"),
            seed=seed,
            sample_count=over.get("sample_count"),
            output_dir=str(Path(output_dir) / exp),
            params=params,
        )
        rep = run(cfg, threads=threads)
        results.append((label, exp, rep.passed))
        if echo:
            echo(f"{label:34s} {exp:14s} {'PASS' if rep.passed else 'FAIL'}")
    return all(p for _, _, p in results), results
