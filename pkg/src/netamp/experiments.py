"""Experiment orchestration: seeded replicate loops and CSV emission.

An ExperimentSpec names a model family (with optional sweeps over the noise
level and the graph SNR), a replicate budget and the pipelines to run.  Each
pipeline writes one CSV with a commented metadata header (schema version,
spec echo, seeds, timestamp) followed by per-replicate rows and trailing
aggregate rows.  Replaying a spec with the same seeds reproduces the payload
byte-for-byte apart from the timestamp line.

Built-in specs cover the standard figure and table reproductions at desk
scale (n = p = 2000, 20 replicates by default; override via a config file).
"""

from __future__ import annotations

import dataclasses
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .amp import AmpConfig, run
from .inference import credible_intervals, discover, pvalues
from .laplacian import LapConfig, fit, tune
from .priors import PriorSpec, QuadratureRule
from .rs_potential import minimize
from .state_evolution import fixed_point, predicted_errors, se_run
from .synth import ModelParams, generate

__all__ = ["ExperimentSpec", "run_experiment", "builtin_spec", "BUILTIN_NAMES",
           "load_spec_file"]

SCHEMA_VERSION = "netamp-csv-1"

VALID_PIPELINES = ("amp", "se", "mi", "fdr", "coverage", "baseline", "universality")


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    pipelines: tuple[str, ...]
    n: int = 2000
    p: int = 2000
    rho: float = 0.7
    slab: tuple[float, ...] = (-1.0, 1.0)
    atoms0: tuple[tuple[float, float], ...] = ((0.0, 1.0),)
    b_p: float = 0.7
    lambdas: tuple[float, ...] = (3.0,)
    deltas: tuple[float, ...] = (1.0,)
    design: str = "gaussian"
    replicates: int = 20
    base_seed: int = 0
    T: int = 25
    quad_order: int = 41
    alpha: float = 0.1
    kappa_mi: float | None = None      # overrides n/p for scalar-only pipelines

    def __post_init__(self):
        problems = []
        bad = [pl for pl in self.pipelines if pl not in VALID_PIPELINES]
        if bad:
            problems.append(f"unknown pipelines {bad} (valid: {VALID_PIPELINES})")
        if self.replicates < 1:
            problems.append("replicates must be at least 1")
        if not self.lambdas or not self.deltas:
            problems.append("sweep grids must be nonempty")
        if self.n < 1 or self.p < 1:
            problems.append("n and p must be positive")
        if not 0.0 < self.rho < 1.0:
            problems.append("rho must be in (0, 1)")
        if not 0.0 < self.alpha < 1.0:
            problems.append("alpha must be in (0, 1)")
        if self.T < 1:
            problems.append("T must be at least 1")
        if self.design not in ("gaussian", "bernoulli"):
            problems.append(f"unknown design {self.design!r}")
        if problems:
            raise ValueError("invalid experiment spec: " + "; ".join(problems))

    def prior(self) -> PriorSpec:
        k = len(self.slab)
        return PriorSpec(rho=self.rho, atoms0=self.atoms0,
                         atoms1=tuple((v, 1.0 / k) for v in self.slab))

    def kappa(self) -> float:
        return self.kappa_mi if self.kappa_mi is not None else self.n / self.p


# ---------------------------------------------------------------------------
# built-in specs

def builtin_spec(name: str) -> ExperimentSpec:
    five = (-2.0, -1.0, 0.0, 1.0, 2.0)
    table = {
        "smoke": ExperimentSpec(
            name="smoke", pipelines=("amp", "se", "fdr", "coverage", "baseline"),
            n=200, p=200, rho=0.3, b_p=20.0, lambdas=(3.0,), deltas=(1.0,),
            replicates=1, T=10),
        "figure1a": ExperimentSpec(
            name="figure1a", pipelines=("mi",), rho=0.4, slab=five,
            kappa_mi=1.5, lambdas=(0.0, 1.0, 2.0, 3.0),
            deltas=(0.5, 1.0, 2.0, 4.0), replicates=1),
        "figure1b": ExperimentSpec(
            name="figure1b", pipelines=("mi",), rho=0.4, slab=five,
            kappa_mi=1.5, lambdas=(0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0),
            deltas=(0.5, 1.0, 2.0), replicates=1),
        "figure2a": ExperimentSpec(
            name="figure2a", pipelines=("amp", "baseline", "se"),
            lambdas=(3.0,), deltas=tuple(np.linspace(0.2, 4.0, 20).round(12))),
        "figure2b": ExperimentSpec(
            name="figure2b", pipelines=("amp", "baseline", "se"),
            lambdas=(5.0,), deltas=tuple(np.linspace(0.2, 4.0, 20).round(12))),
        "figure3": ExperimentSpec(
            name="figure3", pipelines=("amp", "baseline", "se"), design="bernoulli",
            lambdas=(3.0, 5.0), deltas=tuple(np.linspace(0.2, 4.0, 20).round(12))),
        "table1-amp": ExperimentSpec(
            name="table1-amp", pipelines=("fdr",), n=3000, p=3000, rho=0.07,
            b_p=1500.0, lambdas=(5.0, 10.0),
            deltas=(0.5, 1.05, 1.79, 2.52, 3.26, 4.0)),
        "fdr-calibration": ExperimentSpec(
            name="fdr-calibration", pipelines=("fdr",), n=3000, p=3000,
            rho=0.07, b_p=1500.0, lambdas=(5.0,), deltas=(1.0,), replicates=60),
        "coverage-calibration": ExperimentSpec(
            name="coverage-calibration", pipelines=("coverage",), n=3000, p=3000,
            rho=0.07, b_p=1500.0, lambdas=(5.0,), deltas=(1.0,), replicates=20),
        "universality-check": ExperimentSpec(
            name="universality-check", pipelines=("universality",),
            b_p=200.0, lambdas=(3.0,), deltas=(1.0,), replicates=8),
    }
    if name not in table:
        raise ValueError(f"unknown built-in spec {name!r}; have {sorted(table)}")
    return table[name]


BUILTIN_NAMES = ("smoke", "figure1a", "figure1b", "figure2a", "figure2b",
                 "figure3", "table1-amp", "fdr-calibration",
                 "coverage-calibration", "universality-check")


def load_spec_file(path: str) -> ExperimentSpec:
    """Parse a flat key = value spec file with [experiment] and [model] sections."""
    import configparser

    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    exp = cp["experiment"]
    model = cp["model"] if cp.has_section("model") else {}

    def floats(s):
        return tuple(float(x) for x in str(s).split(",") if str(x).strip())

    kwargs: dict = {
        "name": exp.get("name", os.path.basename(path)),
        "pipelines": tuple(x.strip() for x in exp.get("pipelines", "amp").split(",")),
        "replicates": exp.getint("replicates", 20),
        "base_seed": exp.getint("base_seed", 0),
        "T": exp.getint("T", 25),
        "quad_order": exp.getint("quad_order", 41),
        "alpha": exp.getfloat("alpha", 0.1),
    }
    if "n" in model:
        kwargs["n"] = int(model["n"])
    if "p" in model:
        kwargs["p"] = int(model["p"])
    if "rho" in model:
        kwargs["rho"] = float(model["rho"])
    if "slab" in model:
        kwargs["slab"] = floats(model["slab"])
    if "b_p" in model:
        kwargs["b_p"] = float(model["b_p"])
    if "lambda" in model:
        kwargs["lambdas"] = floats(model["lambda"])
    if "delta" in model:
        kwargs["deltas"] = floats(model["delta"])
    if "design" in model:
        kwargs["design"] = model["design"]
    if "kappa" in model:
        kwargs["kappa_mi"] = float(model["kappa"])
    return ExperimentSpec(**kwargs)


# ---------------------------------------------------------------------------
# CSV plumbing


class CsvSink:
    def __init__(self, path: str, columns: list[str], meta: dict, overwrite: bool):
        if os.path.exists(path) and not overwrite:
            raise FileExistsError(f"{path} exists; pass overwrite to replace it")
        self.path = path
        self.columns = columns
        self.rows: list[list] = []
        self.meta = meta

    def add(self, **kv):
        self.rows.append([kv.get(c, "") for c in self.columns])

    @staticmethod
    def _fmt(v) -> str:
        if isinstance(v, float):
            return repr(v)
        return str(v)

    def write(self):
        os.makedirs(os.path.dirname(self.path) or ".", exist_ok=True)
        with open(self.path, "w", newline="") as fh:
            fh.write(f"# schema = {SCHEMA_VERSION}\n")
            fh.write(f"# version = {__version__}\n")
            fh.write(f"# timestamp = {time.strftime('%Y-%m-%dT%H:%M:%S')}\n")
            for k, v in self.meta.items():
                fh.write(f"# {k} = {v}\n")
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(self._fmt(v) for v in row) + "\n")


def _aggregate(sink: CsvSink, group_cols: list[str], value_cols: list[str],
               label_col: str = "replicate"):
    """Append mean and stderr rows per group, recomputed from the data rows."""
    idx = {c: sink.columns.index(c) for c in sink.columns}
    groups: dict[tuple, list] = {}
    for row in sink.rows:
        key = tuple(row[idx[c]] for c in group_cols)
        groups.setdefault(key, []).append(row)
    for key, rows in groups.items():
        for stat in ("mean", "stderr"):
            out = {c: "" for c in sink.columns}
            for c, v in zip(group_cols, key):
                out[c] = v
            out[label_col] = stat
            for c in value_cols:
                vals = np.array([r[idx[c]] for r in rows if r[idx[c]] != ""], float)
                if len(vals) == 0:
                    continue
                if stat == "mean":
                    out[c] = float(vals.mean())
                else:
                    out[c] = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
            sink.add(**out)


# ---------------------------------------------------------------------------
# replicate workers (top level so a process pool can pickle them)


def _make_params(spec: ExperimentSpec, lam: float, delta: float) -> ModelParams:
    return ModelParams.from_snr(n=spec.n, p=spec.p, Delta=delta, b_p=spec.b_p,
                                lam=lam, prior=spec.prior(),
                                design_dist=spec.design)


def _amp_replicate(args):
    spec, lam, delta, seed, trace, matrix_mode = args
    params = _make_params(spec, lam, delta)
    ds = generate(params, seed)
    res = run(ds, spec.prior(), params, AmpConfig(T=spec.T, matrix_mode=matrix_mode),
              se_trace=trace)
    return (seed, float(res.overlap[spec.T]), float(res.mse_beta[spec.T]),
            float(res.pred_error[spec.T]))


def _fdr_replicate(args):
    spec, lam, delta, seed, trace = args
    params = _make_params(spec, lam, delta)
    ds = generate(params, seed)
    res = run(ds, spec.prior(), params, AmpConfig(T=spec.T), se_trace=trace)
    pv = pvalues(res.sigma_iter, float(trace.nu[spec.T]))
    d = discover(pv, spec.rho, spec.alpha, truth=ds.sigma0)
    # textbook step-up threshold recorded alongside for comparison
    d_up = discover(pv, spec.rho, spec.alpha, truth=ds.sigma0, variant="step-up")
    return (seed, d.empirical_fdp, d.empirical_tdp, len(d.rejected),
            d_up.empirical_fdp, d_up.empirical_tdp)


def _coverage_replicate(args):
    spec, lam, delta, seed, trace = args
    params = _make_params(spec, lam, delta)
    ds = generate(params, seed)
    res = run(ds, spec.prior(), params, AmpConfig(T=spec.T), se_trace=trace)
    ci = credible_intervals(res.sigma_iter, float(trace.eta[spec.T]),
                            float(trace.nu[spec.T]), spec.alpha, truth=ds.sigma0)
    return (seed, ci.empirical_coverage)


def _baseline_replicate(args):
    spec, lam, delta, seed, cfg = args
    params = _make_params(spec, lam, delta)
    ds = generate(params, seed)
    res = fit(ds, cfg)
    r = ds.Phi @ (res.beta - ds.beta0)
    return (seed, float(r @ r) / spec.n, res.converged)


def _universality_replicate(args):
    spec, lam, delta, seed, trace = args
    params = _make_params(spec, lam, delta)
    ds = generate(params, seed)
    o = {}
    for mode in ("sbm", "gaussian-surrogate"):
        res = run(ds, spec.prior(), params, AmpConfig(T=spec.T, matrix_mode=mode),
                  se_trace=trace)
        o[mode] = float(res.overlap[spec.T])
    return (seed, o["sbm"], o["gaussian-surrogate"])


class ReplicateFailures(RuntimeError):
    """Raised after writing outputs when too many replicates failed."""


def _run_safe(job):
    worker, args = job
    try:
        return ("ok", worker(args))
    except Exception as exc:          # replicate failures are recorded, not fatal
        return ("err", args[3], f"{type(exc).__name__}: {exc}")


def _map(worker, jobs, threads: int, stats: dict):
    """Run jobs, splitting results from per-replicate failures."""
    wrapped = [(worker, j) for j in jobs]
    stats["total"] += len(jobs)
    if threads <= 1 or len(jobs) <= 1:
        raw = [_run_safe(w) for w in wrapped]
    else:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            raw = list(ex.map(_run_safe, wrapped))
    out = []
    for status in raw:
        if status[0] == "ok":
            out.append(status[1])
        else:
            stats["failures"].append((status[1], status[2]))
    return out


def _lap_grid(dataset) -> list[LapConfig]:
    lam_max = float(np.max(np.abs(dataset.Phi.T @ dataset.y)))
    return [LapConfig(lambda1=f1 * lam_max, lambda2=f2, max_iter=400, tol=1e-6)
            for f1 in (0.02, 0.1, 0.3) for f2 in (0.0, 1.0, 4.0)]


# ---------------------------------------------------------------------------
# pipelines


def run_experiment(spec: ExperimentSpec, out_dir: str, threads: int = 1,
                   overwrite: bool = False, progress=None) -> dict[str, str]:
    """Run all pipelines of a spec; returns {pipeline: csv path}.

    Replicate seeds are base_seed + replicate index, identical across
    pipelines so estimators and baselines face the same datasets.
    """
    quad = QuadratureRule.gauss_hermite(spec.quad_order)
    prior = spec.prior()
    kappa = spec.kappa()
    seeds = [spec.base_seed + r for r in range(spec.replicates)]
    meta = {"experiment": spec.name, "seeds": f"{seeds[0]}..{seeds[-1]}",
            "spec": dataclasses.asdict(spec)}
    say = progress if progress is not None else (lambda s: None)
    written: dict[str, str] = {}
    stats = {"total": 0, "failures": []}    # replicate-level failure accounting

    traces = {}
    if any(pl in spec.pipelines for pl in ("amp", "fdr", "coverage", "universality", "se")):
        for lam in spec.lambdas:
            for delta in spec.deltas:
                say(f"state evolution lam={lam} Delta={delta}")
                traces[(lam, delta)] = se_run(prior, lam, kappa, delta,
                                              T=spec.T + 1, quad=quad)

    if "se" in spec.pipelines:
        sink = CsvSink(os.path.join(out_dir, f"{spec.name}_se.csv"),
                       ["lambda", "Delta", "t", "eta", "nu", "tau", "mu", "xi",
                        "mu_star", "xi_star", "residual"], meta, overwrite)
        for (lam, delta), tr in traces.items():
            fp = fixed_point(prior, lam, kappa, delta, quad=quad)
            for t in range(len(tr)):
                sink.add(**{"lambda": lam, "Delta": delta, "t": t,
                            "eta": float(tr.eta[t]), "nu": float(tr.nu[t]),
                            "tau": float(tr.tau[t]), "mu": float(tr.mu[t]),
                            "xi": float(tr.xi[t])})
            sink.add(**{"lambda": lam, "Delta": delta, "t": "fixed_point",
                        "mu_star": fp.mu_star, "xi_star": fp.xi_star,
                        "residual": fp.residual})
        sink.write()
        written["se"] = sink.path

    if "mi" in spec.pipelines:
        sink = CsvSink(os.path.join(out_dir, f"{spec.name}_mi.csv"),
                       ["lambda", "Delta", "mu_bar", "xi_bar", "mi",
                        "mu_star", "xi_star", "coincide"], meta, overwrite)
        for lam in spec.lambdas:
            for delta in spec.deltas:
                say(f"mi lam={lam} Delta={delta}")
                ev = minimize(prior, lam, kappa, delta, quad=quad)
                fp = fixed_point(prior, lam, kappa, delta, quad=quad)
                coincide = (abs(fp.mu_star - ev.mu_bar) <= 1e-4
                            and abs(fp.xi_star - ev.xi_bar) <= 1e-4)
                sink.add(**{"lambda": lam, "Delta": delta, "mu_bar": ev.mu_bar,
                            "xi_bar": ev.xi_bar, "mi": ev.value,
                            "mu_star": fp.mu_star, "xi_star": fp.xi_star,
                            "coincide": int(coincide)})
        sink.write()
        written["mi"] = sink.path

    if "amp" in spec.pipelines:
        sink = CsvSink(os.path.join(out_dir, f"{spec.name}_amp.csv"),
                       ["lambda", "Delta", "replicate", "overlap", "mse_beta",
                        "pred_error", "se_overlap_pred", "se_pred_error"],
                       meta, overwrite)
        for lam in spec.lambdas:
            for delta in spec.deltas:
                say(f"amp lam={lam} Delta={delta}")
                tr = traces[(lam, delta)]
                fp = fixed_point(prior, lam, kappa, delta, quad=quad)
                _, beta_pred = predicted_errors(fp, prior, lam, delta)
                ov_pred = float(tr.nu[spec.T + 1] ** 2)
                jobs = [(spec, lam, delta, s, tr, "sbm") for s in seeds]
                for seed, ov, mb, pe in _map(_amp_replicate, jobs, threads, stats):
                    sink.add(**{"lambda": lam, "Delta": delta, "replicate": seed,
                                "overlap": ov, "mse_beta": mb, "pred_error": pe,
                                "se_overlap_pred": ov_pred,
                                "se_pred_error": beta_pred})
        _aggregate(sink, ["lambda", "Delta"], ["overlap", "mse_beta", "pred_error"])
        sink.write()
        written["amp"] = sink.path

    if "baseline" in spec.pipelines:
        sink = CsvSink(os.path.join(out_dir, f"{spec.name}_baseline.csv"),
                       ["lambda", "Delta", "replicate", "pred_error", "lambda1",
                        "lambda2", "converged"], meta, overwrite)
        for lam in spec.lambdas:
            for delta in spec.deltas:
                say(f"baseline lam={lam} Delta={delta}")
                params = _make_params(spec, lam, delta)
                tune_ds = generate(params, spec.base_seed + spec.replicates)
                cfg = tune(tune_ds, _lap_grid(tune_ds), seed=spec.base_seed)
                jobs = [(spec, lam, delta, s, cfg) for s in seeds]
                for seed, pe, conv in _map(_baseline_replicate, jobs, threads, stats):
                    sink.add(**{"lambda": lam, "Delta": delta, "replicate": seed,
                                "pred_error": pe, "lambda1": cfg.lambda1,
                                "lambda2": cfg.lambda2, "converged": int(conv)})
        _aggregate(sink, ["lambda", "Delta"], ["pred_error"])
        sink.write()
        written["baseline"] = sink.path

    if "fdr" in spec.pipelines:
        sink = CsvSink(os.path.join(out_dir, f"{spec.name}_fdr.csv"),
                       ["lambda", "Delta", "replicate", "alpha", "fdp", "tdp",
                        "n_rejected", "fdp_stepup", "tdp_stepup"], meta, overwrite)
        for lam in spec.lambdas:
            for delta in spec.deltas:
                say(f"fdr lam={lam} Delta={delta}")
                tr = traces[(lam, delta)]
                jobs = [(spec, lam, delta, s, tr) for s in seeds]
                for seed, fdp, tdp, nrej, fdp_up, tdp_up in _map(_fdr_replicate, jobs, threads, stats):
                    sink.add(**{"lambda": lam, "Delta": delta, "replicate": seed,
                                "alpha": spec.alpha, "fdp": fdp, "tdp": tdp,
                                "n_rejected": nrej, "fdp_stepup": fdp_up,
                                "tdp_stepup": tdp_up})
        _aggregate(sink, ["lambda", "Delta"],
                   ["fdp", "tdp", "n_rejected", "fdp_stepup", "tdp_stepup"])
        sink.write()
        written["fdr"] = sink.path

    if "coverage" in spec.pipelines:
        sink = CsvSink(os.path.join(out_dir, f"{spec.name}_coverage.csv"),
                       ["lambda", "Delta", "replicate", "alpha", "coverage"],
                       meta, overwrite)
        for lam in spec.lambdas:
            for delta in spec.deltas:
                say(f"coverage lam={lam} Delta={delta}")
                tr = traces[(lam, delta)]
                jobs = [(spec, lam, delta, s, tr) for s in seeds]
                for seed, cov in _map(_coverage_replicate, jobs, threads, stats):
                    sink.add(**{"lambda": lam, "Delta": delta, "replicate": seed,
                                "alpha": spec.alpha, "coverage": cov})
        _aggregate(sink, ["lambda", "Delta"], ["coverage"])
        sink.write()
        written["coverage"] = sink.path

    if "universality" in spec.pipelines:
        sink = CsvSink(os.path.join(out_dir, f"{spec.name}_universality.csv"),
                       ["lambda", "Delta", "replicate", "overlap_sbm",
                        "overlap_surrogate", "gap"], meta, overwrite)
        for lam in spec.lambdas:
            for delta in spec.deltas:
                say(f"universality lam={lam} Delta={delta}")
                tr = traces[(lam, delta)]
                jobs = [(spec, lam, delta, s, tr) for s in seeds]
                for seed, o_sbm, o_sur in _map(_universality_replicate, jobs, threads, stats):
                    sink.add(**{"lambda": lam, "Delta": delta, "replicate": seed,
                                "overlap_sbm": o_sbm, "overlap_surrogate": o_sur,
                                "gap": abs(o_sbm - o_sur)})
        _aggregate(sink, ["lambda", "Delta"],
                   ["overlap_sbm", "overlap_surrogate", "gap"])
        sink.write()
        written["universality"] = sink.path

    if stats["failures"]:
        note = ";".join(f"{s}:{m}" for s, m in stats["failures"])
        for path in written.values():
            with open(path, "a") as fh:
                fh.write(f"# failed_replicates = {note}\n")
        if len(stats["failures"]) > 0.1 * max(stats["total"], 1):
            raise ReplicateFailures(
                f"{len(stats['failures'])} of {stats['total']} replicate jobs "
                f"failed: {note}")
    return written
