"""Experiment runners behind the command-line subcommands."""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .. import select as sel
from ..gp_exact import DESK_GUARD, Dataset, ExactPosterior, log_marginal_likelihood
from ..kernels import KernelSpec, gram
from ..linalg import sym_eig
from ..sgpr import InducingSet, bound_report, fit
from ..spectrum import (
    PLANNERS,
    matern_poly_spectrum,
    required_m,
    se_gauss_spectrum,
    kl_lower_bound_from_eigs,
)
from .config import ConfigError, ExperimentConfig, m_schedule
from .data import NAVAL_NOISE_STD, load_csv, synth_clustered, synth_generate, train_test_split
from .hyperopt import hyperopt_reinit
from .tables import emit_tables, write_csv

__all__ = [
    "TRACE_COLUMNS",
    "cell_seed",
    "make_data",
    "make_inducing",
    "evaluate",
    "run_sweep",
    "run_compare",
    "run_spectrum",
    "run_single",
]

TRACE_COLUMNS = [
    "experiment", "config_hash", "seed", "N", "M", "method",
    "elbo", "u2", "u1", "kl_u2", "exact_kl", "kl_lower", "t", "jitter_used",
    "rmse", "nlpd", "wall_time", "error",
]
METHODS = ("uniform", "kmeans", "greedy", "mdpp", "rls", "eigen")


def cell_seed(*keys: int) -> int:
    """Independent integer seed for a cell identified by integer keys."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint32)[0])


def make_data(cfg: ExperimentConfig, N: int | None, seed: int) -> Dataset:
    d, spec = cfg.data, cfg.kernel
    if d["source"] == "csv":
        std = d.get("add_noise_std")
        std = NAVAL_NOISE_STD if std is True else std
        return load_csv(d["path"], d.get("target", -1), d["noise"], std, seed)
    gen = d.get("generator", "gaussian")
    D = int(d.get("D", spec.dim))
    if gen == "gaussian":
        return synth_generate(spec, N, D, float(d.get("beta2", 1.0)), d["noise"], seed)
    if gen == "clustered":
        return synth_clustered(spec, N, D, d["noise"], seed, k=int(d.get("clusters", 5)))
    raise ConfigError(f"unknown generator {gen!r}")


def make_inducing(selector: dict, spec: KernelSpec, X, M: int, seed: int):
    """Inducing set and diagnostics for a selector mapping such as ``{method: greedy}``."""
    method = selector["method"]
    jitter = float(selector.get("jitter", 0.0))
    if method == "eigen":
        return sel.eigenfeature_inducing(spec, X, M, jitter), {}
    if method == "uniform":
        r = sel.select_uniform(X, M, seed)
    elif method == "kmeans":
        r = sel.select_kmeanspp(X, M, seed, iters=int(selector.get("iters", 25)))
    elif method == "greedy":
        r = sel.select_greedy_variance(spec, X, M)
    elif method == "mdpp":
        r = sel.select_mdpp_mcmc(spec, X, M, T=int(selector.get("T", 10_000)), seed=seed)
    elif method == "rls":
        S = int(selector.get("S", M))
        r = sel.select_rls_fixed(spec, X, S, float(selector.get("delta", 0.01)), seed, m=M)
    else:
        raise ConfigError(f"unknown selector {method!r}; expected one of {METHODS}")
    return r.inducing(jitter), r.diagnostics


def _predictive_scores(post_predict, test: Dataset):
    mean, var_f = post_predict(test.X)
    var = np.maximum(var_f, 0.0) + test.noise
    rmse = float(np.sqrt(np.mean((test.y - mean) ** 2)))
    nlpd = float(np.mean(0.5 * np.log(2 * np.pi * var) + 0.5 * (test.y - mean) ** 2 / var))
    return rmse, nlpd


def evaluate(data: Dataset, spec: KernelSpec, ind: InducingSet, desk_guard=DESK_GUARD, test=None) -> dict:
    """All trace metrics for one inducing set; exact columns are null above the guard."""
    desk = desk_guard is None or data.n <= desk_guard
    rep = bound_report(data, spec, ind, with_u1=desk, with_exact=desk, guard=desk_guard)
    row = {
        "N": data.n, "M": ind.m, "elbo": rep.elbo, "u2": rep.u2, "u1": rep.u1,
        "kl_u2": rep.kl_u2, "exact_kl": rep.exact_kl, "t": rep.t, "jitter_used": rep.eps,
        "kl_lower": None,
    }
    if desk:
        eigs = sym_eig(gram(spec, data.X))[0]
        row["kl_lower"] = kl_lower_bound_from_eigs(np.maximum(eigs, 0.0), min(ind.m, data.n), data.noise)
    if test is not None:
        row["rmse"], row["nlpd"] = _predictive_scores(fit(data, spec, ind).predict, test)
    return row


def _null_row(base: dict, err: Exception) -> dict:
    return {**base, "error": f"{type(err).__name__}: {err}"}


def _run_cells(cells, threads: int):
    if threads <= 1:
        return [c() for c in cells]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda c: c(), cells))


def _sort_key(r):
    return (r.get("N") or 0, r.get("seed") if r.get("seed") is not None else -1,
            str(r.get("method")), r.get("M") or 0)


def _finish(cfg, rows, out_dir: Path, name: str) -> dict:
    rows.sort(key=_sort_key)
    path = write_csv(out_dir / f"{name}.csv", rows, TRACE_COLUMNS)
    ok = [r for r in rows if not r.get("error")]
    summary = emit_tables(path, out_dir) if ok else None
    return {"trace": str(path), "rows": len(rows), "failed": len(rows) - len(ok), "summary": summary}


def run_sweep(cfg: ExperimentConfig, out_dir, master_seed: int = 0, threads: int = 1, desk_guard=DESK_GUARD) -> dict:
    """Data resampled per (N, seed); every selector and M from the schedule on each."""
    out_dir = Path(out_dir)
    Ns = cfg.data.get("N") or [None]
    D = cfg.kernel.dim
    exp_id = cfg.options.get("name", cfg.experiment)
    cells = []
    for N in Ns:
        for seed in cfg.seeds:
            def cell(N=N, seed=seed):
                rows = []
                base = {"experiment": exp_id, "config_hash": cfg.hash, "seed": seed, "N": N}
                try:
                    data = make_data(cfg, N, cell_seed(master_seed, seed, N or 0))
                except Exception as e:  # noqa: BLE001 - recorded as a null row
                    return [_null_row(base, e)]
                for k, s in enumerate(cfg.selectors):
                    for M in m_schedule(cfg.M, data.n, D):
                        b = {**base, "N": data.n, "M": M, "method": s["method"]}
                        t0 = time.perf_counter()
                        try:
                            ind, _ = make_inducing(s, cfg.kernel, data.X, M,
                                                   cell_seed(master_seed, seed, data.n, M, k))
                            row = {**b, **evaluate(data, cfg.kernel, ind, desk_guard)}
                        except Exception as e:  # noqa: BLE001
                            row = _null_row(b, e)
                        row["wall_time"] = time.perf_counter() - t0
                        rows.append(row)
                return rows
            cells.append(cell)
    rows = [r for rs in _run_cells(cells, threads) for r in rs]
    return _finish(cfg, rows, out_dir, "trace")


def run_compare(cfg: ExperimentConfig, out_dir, master_seed: int = 0, threads: int = 1, desk_guard=DESK_GUARD) -> dict:
    """One dataset with a 90/10 split; seeds vary the selectors. Adds an exact-GP reference row."""
    out_dir = Path(out_dir)
    Ns = cfg.data.get("N") or [None]
    if len(Ns) != 1:
        raise ConfigError("compare uses a single N")
    exp_id = cfg.options.get("name", cfg.experiment)
    data = make_data(cfg, Ns[0], cell_seed(master_seed, 0))
    train, test = train_test_split(data, cell_seed(master_seed, 1))
    Ms = m_schedule(cfg.M, train.n, cfg.kernel.dim)
    cells = []
    for k, s in enumerate(cfg.selectors):
        for M in Ms:
            for seed in cfg.seeds:
                def cell(k=k, s=s, M=M, seed=seed):
                    b = {"experiment": exp_id, "config_hash": cfg.hash, "seed": seed,
                         "N": train.n, "M": M, "method": s["method"]}
                    t0 = time.perf_counter()
                    try:
                        ind, _ = make_inducing(s, cfg.kernel, train.X, M, cell_seed(master_seed, seed, M, k))
                        row = {**b, **evaluate(train, cfg.kernel, ind, desk_guard, test)}
                    except Exception as e:  # noqa: BLE001
                        row = _null_row(b, e)
                    row["wall_time"] = time.perf_counter() - t0
                    return [row]
                cells.append(cell)
    rows = [r for rs in _run_cells(cells, threads) for r in rs]
    ref = {"experiment": exp_id, "config_hash": cfg.hash, "seed": None, "N": train.n, "M": train.n,
           "method": "exact"}
    t0 = time.perf_counter()
    try:
        lml = log_marginal_likelihood(train, cfg.kernel, desk_guard)
        post = ExactPosterior.fit(train, cfg.kernel, desk_guard)
        rmse, nlpd = _predictive_scores(lambda Xs: post.predict(Xs, full_cov=False), test)
        ref.update(elbo=lml, u2=lml, exact_kl=0.0, t=0.0, rmse=rmse, nlpd=nlpd)
    except Exception as e:  # noqa: BLE001
        ref = _null_row(ref, e)
    ref["wall_time"] = time.perf_counter() - t0
    rows.append(ref)
    return _finish(cfg, rows, out_dir, "trace")


def _spectrum_from_cfg(sc: dict, kernel: KernelSpec | None):
    kind = sc.get("kind", "se_gauss")
    if kind == "se_gauss":
        return se_gauss_spectrum(float(sc.get("lengthscale", kernel.lengthscale if kernel else 1.0)),
                                 float(sc.get("beta2", 1.0)),
                                 float(sc.get("variance", kernel.variance if kernel else 1.0)),
                                 int(sc.get("D", kernel.dim if kernel else 1)),
                                 str(sc.get("convention", "display")))
    if kind == "matern":
        spec = kernel if kernel is not None and kernel.family == "matern" else KernelSpec.matern(
            float(sc.get("nu", 2.5)), float(sc.get("variance", 1.0)),
            float(sc.get("lengthscale", 1.0)), int(sc.get("D", 1)))
        return matern_poly_spectrum(spec, float(sc.get("T", 1.0)), float(sc.get("tau", 1.0)))
    raise ConfigError(f"unknown spectrum kind {kind!r}")


def run_spectrum(cfg: ExperimentConfig, out_dir) -> dict:
    """Required-M planner grid, one CSV row per (planner, N)."""
    sc = cfg.spectrum
    spectrum = _spectrum_from_cfg(sc, cfg.kernel)
    planners = sc.get("planners", [p for p in PLANNERS if p.startswith(
        "matern" if sc.get("kind") == "matern" else "cor")])
    Ns = sc.get("N", [1000, 10000, 100000, 1000000])
    rows = []
    for p in planners:
        if p not in PLANNERS:
            raise ConfigError(f"unknown planner {p!r}")
        for N in Ns:
            try:
                res = required_m(p, int(N), float(sc.get("gamma", 1.0)), float(sc.get("delta", 0.1)),
                                 spectrum, R=float(sc.get("R", 1.0)), noise=float(sc.get("noise", 1.0)),
                                 c=float(sc.get("c", 1.0)))
            except ValueError as e:
                raise ConfigError(str(e)) from e
            rows.append({**res.csv_row(), "S": res.S, "order": res.order})
    path = write_csv(Path(out_dir) / "planners.csv", rows,
                     ["planner", "N", "gamma", "delta", "M", "bound_value", "valid", "S", "order"])
    return {"planners": str(path), "rows": len(rows)}


def _write_json(path: Path, obj) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, default=_default), encoding="utf-8")
    return str(path)


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(f"not serialisable: {type(o)}")


def run_single(cfg: ExperimentConfig, out_dir, master_seed: int = 0, desk_guard=DESK_GUARD) -> dict:
    """fit / bounds / select / hyperopt on the first N, seed, selector and M."""
    out_dir = Path(out_dir)
    seed = cfg.seeds[0]
    N = (cfg.data.get("N") or [None])[0]
    data = make_data(cfg, N, cell_seed(master_seed, seed, N or 0))
    M = m_schedule(cfg.M, data.n, cfg.kernel.dim)[0]
    s = cfg.selectors[0]
    base = {"config_hash": cfg.hash, "N": data.n, "M": M, "method": s["method"], "seed": seed}
    if cfg.experiment == "hyperopt":
        opts = cfg.options.get("hyperopt", {})
        res = hyperopt_reinit(data, cfg.kernel, M, rounds=int(opts.get("rounds", 10)),
                              budget=int(opts.get("budget", 200)), jitter=float(s.get("jitter", 0.0)),
                              check_grad=bool(opts.get("check_grad", False)))
        final = res.dataset(data)
        out = {**base, "method": "greedy", "elbo": res.elbo, "noise": res.noise,
               "kernel": res.spec.to_dict(), "rounds": res.rounds, "success": res.success,
               "message": res.message, "grad_rel_error": res.grad_rel_error}
        if desk_guard is None or data.n <= desk_guard:
            out["log_marginal_likelihood"] = log_marginal_likelihood(final, res.spec, desk_guard)
        write_csv(out_dir / "hyperopt_trace.csv",
                  [{"step": i, "elbo": f, "config_hash": cfg.hash} for i, f in enumerate(res.trace)])
        return {"result": _write_json(out_dir / "hyperopt.json", out)}
    if cfg.experiment == "fit":
        train, test = train_test_split(data, cell_seed(master_seed, seed, 1))
        M = min(M, train.n)
        ind, _ = make_inducing(s, cfg.kernel, train.X, M, cell_seed(master_seed, seed, train.n, M, 0))
        row = evaluate(train, cfg.kernel, ind, desk_guard, test)
        return {"result": _write_json(out_dir / "fit.json", {**base, **row})}
    ind, diag = make_inducing(s, cfg.kernel, data.X, M, cell_seed(master_seed, seed, data.n, M, 0))
    if cfg.experiment == "select":
        out = {**base, "Z": np.asarray(ind.Z) if ind.Z is not None else None,
               "kind": ind.kind, "diagnostics": diag}
        return {"result": _write_json(out_dir / "select.json", out)}
    out = {**base, **evaluate(data, cfg.kernel, ind, desk_guard)}
    return {"result": _write_json(out_dir / "bounds.json", out)}
