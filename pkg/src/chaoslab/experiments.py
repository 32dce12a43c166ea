"""Experiment runners: one CSV row per (n, q) cell, plus JSON diagnostics."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from pathlib import Path

import numpy as np

from . import __version__
from .applications import (
    BreuerMajorSampler,
    CorrelationModel,
    GOESampler,
    counterexample_family,
    default_profile,
    geometric_profile,
    second_chaos_family,
    wishart_experiment,
)
from .config import ExperimentConfig
from .gausspoly import SymbolicBudgetExceeded, fourth_moment_delta
from .montecarlo import (
    PolySampler,
    ScoreSampler,
    SampleBatch,
    density_distance,
    distribution_distances,
    entropy_fisher,
    estimate_moments,
    estimate_negative_moment,
    kde_density,
    sample_batch,
    standardized_delta_from_gamma,
    stein_discrepancy,
)
from .spectral import SymmetricSpectrum, negative_moment_quadrature

COLUMNS = (
    "experiment", "n", "q", "seed", "samples", "delta", "kolmogorov", "w1",
    "negmom_estimate", "negmom_top_decile", "density_sup_q", "entropy", "fisher", "runtime_ms",
)
DIVERGENT_TOKEN = "divergent"


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if math.isnan(f):
        return "nan"
    return repr(f)


def _profile(cfg: ExperimentConfig):
    kind = cfg["family.profile"]
    if kind == "default":
        return None, False
    if kind == "geometric":
        return geometric_profile(cfg["family.ratio"]), True
    raise ValueError(f"family.profile: unknown profile {kind!r}")


def _family(cfg, n):
    profile, normalize = _profile(cfg)
    return second_chaos_family(n, profile, normalize)


def _lambdas(cfg, n) -> np.ndarray:
    profile, normalize = _profile(cfg)
    lam = default_profile(n) if profile is None else np.asarray(profile(n), dtype=float)
    if normalize:
        lam = lam / math.sqrt(2.0 * float(np.sum(lam * lam)))
    return lam


def _standardized(b: SampleBatch) -> SampleBatch:
    v = b.values
    ok = np.isfinite(v)
    m, s = v[ok].mean(), v[ok].std()
    return SampleBatch(b.seed, b.size, (v - m) / s, nan_count=b.nan_count)


def _densities(b, qs):
    out = {}
    for q in qs:
        if q < 0:
            raise ValueError(f"derivative order {q} must be >= 0")
        out[q] = density_distance(kde_density(b, q))
    return out


class _Cells:
    def __init__(self, cfg):
        self.cfg = cfg
        self.rows = []
        self.diagnostics = []

    def add(self, n, q=None, t0=None, **vals):
        row = {c: None for c in COLUMNS}
        row.update(experiment=self.cfg.experiment, n=n, q=q, seed=self.cfg["seed"], samples=self.cfg["samples"])
        row.update(vals)
        if self.cfg["timing"] and t0 is not None:
            row["runtime_ms"] = int(round((time.perf_counter() - t0) * 1000))
        self.rows.append(row)


def _superconv(cfg, cells, n, i, t0):
    b = sample_batch(PolySampler(_family(cfg, n), stream_id=i), cfg["samples"], cfg["seed"], workers=cfg["workers"])
    mom = estimate_moments(b)
    dd = distribution_distances(b)
    dens = _densities(b, cfg["q_list"])
    for q in cfg["q_list"]:
        cells.add(n, q, t0, delta=mom["delta"], kolmogorov=dd["kolmogorov"], w1=dd["wasserstein1"], density_sup_q=dens[q])


def _negmom_cells(cfg, cells, n, b, t0, oracle=None):
    for q in cfg["q_list"]:
        if q < 1:
            raise ValueError(f"negative-moment order {q} must be >= 1")
        est = estimate_negative_moment(b, q, cfg["negmom.tail_threshold"])
        diag = {"n": n, "q": q, "stderr": est.stderr, "tail_index": est.tail_index,
                "prefix_estimates": list(est.prefix_estimates), "excluded": est.excluded,
                "divergent": est.divergent}
        if oracle is not None:
            r = oracle(q)
            diag["quadrature"] = DIVERGENT_TOKEN if r.divergent else r.value
        cells.diagnostics.append(diag)
        cells.add(n, q, t0, negmom_estimate=DIVERGENT_TOKEN if est.divergent else est.estimate,
                  negmom_top_decile=est.top_decile_share)


def _negmom(cfg, cells, n, i, t0):
    b = sample_batch(PolySampler(_family(cfg, n), stream_id=i), cfg["samples"], cfg["seed"], ("gamma",), workers=cfg["workers"])
    spec = SymmetricSpectrum.from_values(_lambdas(cfg, n))
    _negmom_cells(cfg, cells, n, b, t0, lambda q: negative_moment_quadrature(spec, q))


def _counterexample(cfg, cells, n, i, t0):
    b = sample_batch(PolySampler(counterexample_family(n), stream_id=i), cfg["samples"], cfg["seed"], ("gamma",), workers=cfg["workers"])
    _negmom_cells(cfg, cells, n, b, t0)


def _fourthmoment(cfg, cells, n, i, t0):
    F = _family(cfg, n)
    try:
        delta = fourth_moment_delta(F)
        method = "symbolic"
    except SymbolicBudgetExceeded:
        delta = None
        method = "monte-carlo"
    b = sample_batch(ScoreSampler(F, 2, stream_id=i), cfg["samples"], cfg["seed"], workers=cfg["workers"])
    if delta is None:
        delta = estimate_moments(b)["delta"]
    ef = entropy_fisher(b, score_pairs=(b.values, b.extras["score"]))
    dd = distribution_distances(b)
    st = stein_discrepancy(F)
    cells.diagnostics.append({"n": n, "delta_method": method, "stein": st.value, "stein_method": st.method,
                              "entropy_se": ef["entropy_se"], "fisher_se": ef["fisher_se"], "excluded": ef["excluded"]})
    cells.add(n, None, t0, delta=delta, kolmogorov=dd["kolmogorov"], w1=dd["wasserstein1"],
              entropy=ef["entropy"], fisher=ef["fisher"])


def _breuer(cfg, cells, n, i, t0):
    model = CorrelationModel(cfg["breuer.kind"], (cfg["breuer.param"],))
    sampler = BreuerMajorSampler(model, cfg["breuer.poly"], n, stream_id=i)
    b = sample_batch(sampler, cfg["samples"], cfg["seed"], workers=cfg["workers"])
    mom = estimate_moments(b)
    dd = distribution_distances(b)
    dens = _densities(b, cfg["q_list"])
    cells.diagnostics.append({"n": n, "sigma2": sampler.sigma2})
    for q in cfg["q_list"]:
        cells.add(n, q, t0, delta=mom["delta"], kolmogorov=dd["kolmogorov"], w1=dd["wasserstein1"], density_sup_q=dens[q])


def _goe(cfg, cells, n, i, t0):
    p = cfg["goe.p"]
    b = sample_batch(GOESampler(n, p, cfg["goe.method"], stream_id=i), cfg["samples"], cfg["seed"], ("gamma",), workers=cfg["workers"])
    if p <= 2:
        d = standardized_delta_from_gamma(b, p)
        delta, se, method = d["delta"], d["stderr"], "square-field"
    else:
        mom = estimate_moments(b)
        delta, se, method = mom["delta"] / mom["variance"] ** 2, None, "raw"
    bs = _standardized(b)
    dd = distribution_distances(bs)
    dens = _densities(bs, cfg["q_list"])
    cells.diagnostics.append({"n": n, "delta_stderr": se, "delta_method": method})
    for q in cfg["q_list"]:
        cells.add(n, q, t0, delta=delta, kolmogorov=dd["kolmogorov"], w1=dd["wasserstein1"], density_sup_q=dens[q])


def _wishart(cfg, cells, n, i, t0):
    for q in cfg["q_list"]:
        if q < 1:
            raise ValueError(f"negative-moment order {q} must be >= 1")
        r = wishart_experiment(n, cfg["wishart.cols"], q, cfg["samples"], cfg["seed"], "iid", workers=cfg["workers"], stream_id=i)
        cells.diagnostics.append({"n": n, "q": q, "stderr": r.stderr, "domination_fraction": r.domination_fraction,
                                  "domination_floor": r.domination_floor, "nonpositive": r.nonpositive})
        cells.add(n, q, t0, negmom_estimate=r.mean_inv_det)


RUNNERS = {
    "superconv": _superconv,
    "negmom": _negmom,
    "fourthmoment": _fourthmoment,
    "breuer-major": _breuer,
    "goe": _goe,
    "wishart": _wishart,
    "counterexample": _counterexample,
}


def run_experiment(cfg: ExperimentConfig) -> tuple[list[dict], list[dict]]:
    cells = _Cells(cfg)
    runner = RUNNERS[cfg.experiment]
    for i, n in enumerate(cfg["n_list"]):
        runner(cfg, cells, n, i, time.perf_counter())
    return cells.rows, cells.diagnostics


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([fmt(r[c]) for c in COLUMNS])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        f = float(x)
        return f if math.isfinite(f) else str(f)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_outputs(cfg: ExperimentConfig, rows, diagnostics) -> tuple[Path, Path]:
    out = cfg.output_path
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(rows_to_csv(rows))
    side = out.with_name(out.name + ".json")
    payload = {"config": cfg.to_dict(), "version": __version__, "diagnostics": _jsonable(diagnostics)}
    side.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return out, side
