"""Experiment runners: weak convergence, NLS norms, T_N law, moment checks.

Every study is a pure function of its configuration.  Monte-Carlo work is cut
into fixed-size blocks, each with its own random stream keyed by
``(seed, study tag, ..., block)``; blocks may run on a thread pool and are
reduced in block order, so results do not depend on the thread count.
Outputs are a versioned CSV payload, a JSON metadata file (which alone holds
timestamps and environment details) and a gnuplot script.
"""

from __future__ import annotations

import json
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.stats

from . import __version__
from . import integrators as it
from . import nls
from . import randomkernel as rk
from .errors import ConfigError, ModelViolation, StepRejected
from .problem import SchemeConfig, make_kubo, make_nonlinear_kubo

CSV_VERSION = "v1"

# stream tags, one per kind of randomness
_TAG_WEAK, _TAG_EXACT, _TAG_REF, _TAG_NORM, _TAG_CLT, _TAG_MOMENTS, _TAG_SIM, _TAG_STRONG = range(1, 9)


@dataclass
class StudyResult:
    study: str
    columns: list
    rows: list
    summary: dict
    metadata: dict
    files: dict = field(default_factory=dict)

    def records(self) -> list:
        return [dict(zip(self.columns, r)) for r in self.rows]


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    if v is None:
        return "nan"
    return str(v)


def csv_text(schema: str, columns, rows) -> str:
    lines = [f"# multirev-csv {CSV_VERSION} schema={schema}", ",".join(columns)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def read_csv(path):
    """Parse a multirev CSV; returns ``(schema, columns, rows)`` with raw strings."""
    lines = Path(path).read_text().splitlines()
    if not lines[0].startswith(f"# multirev-csv {CSV_VERSION} schema="):
        raise ValueError(f"{path} is not a multirev {CSV_VERSION} CSV")
    schema = lines[0].split("schema=", 1)[1]
    return schema, lines[1].split(","), [ln.split(",") for ln in lines[2:]]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _write(result: StudyResult, cfg: dict, plot: str | None, started: float, stem: str | None = None):
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or result.study
    csv_path = out / f"{stem}.csv"
    csv_path.write_text(csv_text(result.study, result.columns, result.rows))
    result.files["csv"] = str(csv_path)
    meta = {
        "study": result.study,
        "config": cfg,
        "summary": result.summary,
        "multirev_version": __version__,
        "numpy_version": np.__version__,
        "python": platform.python_version(),
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)),
        "elapsed_seconds": time.time() - started,
        **result.metadata,
    }
    meta_path = out / f"{stem}.json"
    meta_path.write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True))
    result.files["metadata"] = str(meta_path)
    if plot is not None:
        gp = out / f"{stem}.gp"
        gp.write_text(plot.replace("@CSV@", csv_path.name).replace("@STEM@", stem))
        result.files["plot"] = str(gp)
    return result


def _map(fn, jobs, threads):
    if threads <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(fn, jobs))


# ---------------------------------------------------------------------------
# problems


def build_problem(pcfg: dict):
    """Problem and initial state from a resolved ``problem`` config entry."""
    name = pcfg["name"]
    if name == "kubo":
        return make_kubo(float(pcfg["a"]), float(pcfg["epsilon"])), np.asarray(pcfg["y0"], float)
    if name == "nonlinear-kubo":
        return make_nonlinear_kubo(float(pcfg["epsilon"])), np.asarray(pcfg["y0"], float)
    if name == "nls":
        prob = nls.build_nls_problem(pcfg["K_x"], pcfg["sigma"], float(pcfg["epsilon"]), bool(pcfg["dealias"]))
        return prob, nls.initial_profile(pcfg["K_x"], pcfg["sigma"], float(pcfg["epsilon"])).to_state()
    raise ConfigError(f"unknown problem {name!r}")


def _scheme(cfg, N):
    return SchemeConfig(N=int(N), K_t=int(cfg["K_t"]), fp_tol=float(cfg["fp_tol"]), fp_max_iters=int(cfg["fp_max_iters"]))


# ---------------------------------------------------------------------------
# weak convergence


def _block_sizes(total, block):
    sizes = [block] * (total // block)
    if total % block:
        sizes.append(total % block)
    return sizes


def _phi(Y, coeffs):
    return Y[..., : len(coeffs)] @ np.asarray(coeffs, float)


def _mc_block(problem, y0, scheme, method, m, rng, n, antithetic, coeffs):
    """Sum and sum of squares of the (pair-averaged) samples of one block."""
    K = scheme.K_t
    gamma = rk.AlphaSampler(scheme.N, K).Gamma
    stepper = it.step_method_a if method == "method-a" else it.step_method_b
    y = np.tile(y0, (n, 1))
    half = n // 2
    for step in range(m):
        if antithetic:
            xi = rk.rademacher(rng, (half, K))
            xi = np.concatenate([xi, -xi])
        else:
            xi = rk.rademacher(rng, (n, K))
        draw = rk.NoiseDraw(rk.alpha_hat_from_signs(gamma, xi, K), scheme.N, K)
        try:
            y = stepper(problem, y, scheme, draw).new_state
        except StepRejected as exc:
            raise StepRejected(f"step {step}: {exc}", step_index=step) from exc
    v = _phi(y, coeffs)
    if antithetic:
        v = 0.5 * (v[:half] + v[half:])
    return float(v.sum()), float((v * v).sum()), int(v.size)


def _exact_rv_block(problem, y0, scheme, m, seed, N, idx, dt, bridge, coeffs):
    vals = []
    for i in idx:
        rng = rk.stream(seed, _TAG_EXACT, N, i)
        y = it.integrate(problem, y0, scheme, "exact-rv", m, rng, oracle_dt=dt, oracle_bridge=bridge)[-1]
        vals.append(_phi(y, coeffs))
    v = np.asarray(vals)
    return float(v.sum()), float((v * v).sum()), int(v.size)


def _reduce(parts):
    s = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    n = sum(p[2] for p in parts)
    mean = s / n
    var = max(s2 / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return mean, math.sqrt(var / n), n


def fit_slope(H, err, se, factor=3.0):
    """Least-squares log-log slope over points with ``err > factor * se``."""
    H, err, se = map(np.asarray, (H, err, se))
    keep = err > factor * se
    if keep.sum() < 2:
        return float("nan"), keep
    slope = np.polyfit(np.log(H[keep]), np.log(err[keep]), 1)[0]
    return float(slope), keep


def kubo_reference(a, eps, total_revolutions, y0, coeffs):
    """``E[phi(X0 e^{i a eps T_{Nm}})]`` from the exit-time Laplace transform."""
    z = complex(y0[0], y0[1]) * complex(rk.t1_mgf(1j * a * eps)) ** int(total_revolutions)
    return float(_phi(np.array([z.real, z.imag]), coeffs))


def run_weak_convergence(cfg: dict) -> StudyResult:
    started = time.time()
    problem, y0 = build_problem(cfg["problem"])
    coeffs = cfg["test_function"]
    total = int(cfg["total_revolutions"])
    eps = problem.epsilon
    for N in cfg["N_grid"]:
        if total % int(N):
            raise ConfigError(f"N = {N} does not divide total_revolutions = {total}")
    bad = set(cfg["methods"]) - set(it.METHODS)
    if bad:
        raise ConfigError(f"unknown method(s) {sorted(bad)}")
    seed, threads = int(cfg["seed"]), int(cfg["threads"])
    sizes = _block_sizes(int(cfg["trajectories"]), int(cfg["block_size"]))
    anti = bool(cfg["antithetic"])
    if anti and any(s % 2 for s in sizes):
        raise ConfigError("antithetic sampling needs even block sizes")

    meta = {}
    if cfg["reference"] == "closed-form":
        if cfg["problem"]["name"] != "kubo":
            raise ConfigError("the closed-form reference exists for the linear Kubo problem only")
        ref, ref_se = kubo_reference(cfg["problem"]["a"], eps, total, y0, coeffs), 0.0
    elif cfg["reference"] == "method-b-fine":
        n_ref = int(cfg["reference_trajectories"] or cfg["trajectories"])
        scheme = _scheme(cfg, 1)
        ref_sizes = _block_sizes(n_ref, int(cfg["block_size"]))

        def ref_job(b):
            rng = rk.stream(seed, _TAG_REF, b)
            return _mc_block(problem, y0, scheme, "method-b", total, rng, ref_sizes[b], anti, coeffs)

        ref, ref_se, _ = _reduce(_map(ref_job, range(len(ref_sizes)), threads))
        meta["reference_note"] = "reference is Method B at H = eps; its own discretization bias is not removed"
    else:
        raise ConfigError(f"unknown reference {cfg['reference']!r}")

    rows = []
    for method in cfg["methods"]:
        for N in cfg["N_grid"]:
            N = int(N)
            m = total // N
            scheme = _scheme(cfg, N)
            if method == "euler-limit":
                y = it.integrate(problem, y0, scheme, "euler-limit", m, None)[-1]
                est, se, n = float(_phi(y, coeffs)), 0.0, 1
            elif method == "exact-rv":
                n_traj = int(cfg["trajectories"])
                chunks = [range(i, min(i + 50, n_traj)) for i in range(0, n_traj, 50)]
                dt, bridge = float(cfg["oracle_dt"]), bool(cfg["oracle_bridge"])
                parts = _map(
                    lambda idx: _exact_rv_block(problem, y0, scheme, m, seed, N, idx, dt, bridge, coeffs),
                    chunks,
                    threads,
                )
                est, se, n = _reduce(parts)
            else:

                def job(b, method=method, N=N, m=m, scheme=scheme):
                    # the stream does not depend on the method: A and B share draws
                    rng = rk.stream(seed, _TAG_WEAK, N, b)
                    return _mc_block(problem, y0, scheme, method, m, rng, sizes[b], anti, coeffs)

                est, se, n = _reduce(_map(job, range(len(sizes)), threads))
            err = abs(est - ref)
            tot_se = math.hypot(se, ref_se)
            rows.append([method, N, m, N * eps, est, ref, err, tot_se, n])

    summary = {"reference": ref, "reference_std_err": ref_se, "slopes": {}, "points_used": {}}
    for method in cfg["methods"]:
        sel = [r for r in rows if r[0] == method]
        slope, keep = fit_slope([r[3] for r in sel], [r[6] for r in sel], [r[7] for r in sel])
        summary["slopes"][method] = slope
        summary["points_used"][method] = int(keep.sum())
    columns = ["method", "N", "m", "H", "estimate", "reference", "abs_error", "std_err", "samples"]
    plot = (
        'set datafile separator ","\nset logscale xy\nset key left top\n'
        'set xlabel "H"\nset ylabel "weak error"\nset terminal pngcairo\nset output "@STEM@.png"\n'
        "plot "
        + ", ".join(
            f"'@CSV@' skip 2 using (strcol(1) eq \"{mth}\" ? $4 : 1/0):7 with linespoints title \"{mth}\""
            for mth in cfg["methods"]
        )
        + ", '@CSV@' skip 2 using 4:($4**2) with lines dt 2 title \"slope 2\"\n"
    )
    return _write(StudyResult("weak-convergence", columns, rows, summary, meta), cfg, plot, started)


# ---------------------------------------------------------------------------
# NLS norms


def run_norm_evolution(cfg: dict) -> StudyResult:
    started = time.time()
    if cfg["problem"]["name"] != "nls":
        raise ConfigError("norm-evolution needs the nls problem")
    problem, y0 = build_problem(cfg["problem"])
    N, m = int(cfg["N"]), int(cfg["m_steps"])
    scheme = _scheme(cfg, N)
    # one set of draws shared by every method
    sampler = rk.AlphaSampler(N, scheme.K_t)
    rng = rk.stream(int(cfg["seed"]), _TAG_NORM)
    draws = [sampler.draw(rng) for _ in range(m)]
    l2_0, h1_0 = float(nls.l2_norm(y0)), float(nls.h1_norm(y0))
    H = scheme.H(problem)
    rows, summary, snaps = [], {"l2_initial": l2_0, "h1_initial": h1_0, "methods": {}}, []
    every = int(cfg["snapshot_every"])
    for method in cfg["methods"]:
        y = y0
        rows.append([method, 0, 0.0, 0.0, 0.0, 1.0, 0])
        blowup, reason = None, ""
        max_l2, max_h1 = 0.0, 1.0
        for k in range(m):
            try:
                with np.errstate(all="ignore"):
                    if method == "euler-limit":
                        rep = it.step_euler_limit(problem, y, scheme)
                    elif method == "method-a":
                        rep = it.step_method_a(problem, y, scheme, draws[k])
                    elif method == "method-b":
                        rep = it.step_method_b(problem, y, scheme, draws[k])
                    else:
                        raise ConfigError(f"method {method!r} is not available for norm-evolution")
            except (StepRejected, ModelViolation, FloatingPointError) as exc:
                blowup, reason = k + 1, f"{type(exc).__name__}: {exc}"
                break
            y = rep.new_state
            l2, h1 = float(nls.l2_norm(y)), float(nls.h1_norm(y))
            if not (math.isfinite(h1) and h1 <= cfg["blowup_threshold"] * h1_0):
                blowup, reason = k + 1, "norm above blowup_threshold"
                break
            rows.append([method, k + 1, (k + 1) * H, l2 - l2_0, h1 - h1_0, h1 / h1_0, rep.fp_iterations])
            max_l2, max_h1 = max(max_l2, abs(l2 - l2_0)), max(max_h1, h1 / h1_0)
            if every and method == "method-b" and (k + 1) % every == 0:
                field_k = nls.SpectralField.from_state(y)
                for x, re, im, ab in field_k.snapshot(int(cfg["snapshot_points"])):
                    snaps.append([k + 1, x, re, im, ab])
        summary["methods"][method] = {
            "max_abs_l2_drift": max_l2,
            "max_h1_ratio": max_h1,
            "blowup_step": blowup,
            "blowup_reason": reason,
            "steps_completed": (blowup - 1) if blowup else m,
        }
    meta = {"nls_mode_range": problem.params["mode_range"], "nls_K_x": problem.params["K_x"]}
    columns = ["method", "step", "t", "l2_drift", "h1_drift", "h1_ratio", "fp_iterations"]
    plot = (
        'set datafile separator ","\nset terminal pngcairo size 1000,400\nset output "@STEM@.png"\n'
        "set multiplot layout 1,2\nset xlabel \"t\"\nset ylabel \"L2 drift\"\n"
        "plot "
        + ", ".join(
            f"'@CSV@' skip 2 using (strcol(1) eq \"{mth}\" ? $3 : 1/0):4 with lines title \"{mth}\""
            for mth in cfg["methods"]
        )
        + '\nset ylabel "H1 drift"\nplot '
        + ", ".join(
            f"'@CSV@' skip 2 using (strcol(1) eq \"{mth}\" ? $3 : 1/0):5 with lines title \"{mth}\""
            for mth in cfg["methods"]
        )
        + "\nunset multiplot\n"
    )
    result = _write(StudyResult("norm-evolution", columns, rows, summary, meta), cfg, plot, started)
    if snaps:
        path = Path(cfg["out_dir"]) / "norm-evolution-snapshots.csv"
        path.write_text(csv_text("nls-snapshot", ["step", "x", "re_u", "im_u", "abs_u"], snaps))
        result.files["snapshots"] = str(path)
    return result


# ---------------------------------------------------------------------------
# law of T_N


def run_tn_clt(cfg: dict) -> StudyResult:
    started = time.time()
    N, n = int(cfg["N"]), int(cfg["samples"])
    rng = rk.stream(int(cfg["seed"]), _TAG_CLT)
    if cfg["sampler"] == "series":
        T = rk.sample_TN(rng, N, n)
    elif cfg["sampler"] == "fine-path":
        T = rk.ExitTimeSampler(method="fine-path").sample(rng, (n, N)).sum(axis=1)
    else:
        raise ConfigError(f"unknown sampler {cfg['sampler']!r}")
    z = (T / N - rk.T1_MEAN) * math.sqrt(N / rk.T1_VAR)
    edges = np.linspace(-4.0, 4.0, int(cfg["bins"]) + 1)
    counts, _ = np.histogram(z, bins=edges)
    width = edges[1] - edges[0]
    centers = 0.5 * (edges[1:] + edges[:-1])
    dens = counts / (n * width)
    normal = scipy.stats.norm.pdf(centers)
    rows = [[c, k, d, p] for c, k, d, p in zip(centers, counts, dens, normal)]
    ks = scipy.stats.kstest(z, "norm")
    # one-term Edgeworth correction for the skewness of T_N
    m3 = float(rk.t1_moment_exact(3)) - 3 * float(rk.t1_moment_exact(2)) + 2
    skew = m3 / rk.T1_VAR**1.5 / math.sqrt(N)
    edge = scipy.stats.kstest(
        z, lambda x: scipy.stats.norm.cdf(x) - scipy.stats.norm.pdf(x) * skew / 6 * (x * x - 1)
    )
    summary = {
        "mean": float(z.mean()),
        "mean_std_err": float(z.std(ddof=1) / math.sqrt(n)),
        "variance": float(z.var(ddof=1)),
        "ks_statistic": float(ks.statistic),
        "ks_pvalue": float(ks.pvalue),
        "skewness_theory": skew,
        "skewness_sample": float(scipy.stats.skew(z)),
        "ks_edgeworth_statistic": float(edge.statistic),
        "ks_edgeworth_pvalue": float(edge.pvalue),
        "outside_range": int(n - counts.sum()),
    }
    meta = {"statistic": "sqrt(N / Var T1) * (T_N / N - E T1)"}
    columns = ["z", "count", "density", "normal_pdf"]
    plot = (
        'set datafile separator ","\nset terminal pngcairo\nset output "@STEM@.png"\n'
        "plot '@CSV@' skip 2 using 1:3 with boxes title \"T_N\", '' skip 2 using 1:4 with lines title \"N(0,1)\"\n"
    )
    return _write(StudyResult("tn-clt", columns, rows, summary, meta), cfg, plot, started)


# ---------------------------------------------------------------------------
# moments of alpha and beta


def moment_targets(N: int):
    """Names, column extractors and closed-form values of the checked moments."""
    tab = rk.moment_tables(N)
    b = lambda k: float(tab._b(k))  # noqa: E731
    out = [("E[alpha_0]", lambda s: s[:, 0].real, 1.0), ("E[alpha_0^2]", lambda s: s[:, 0].real ** 2, 1 + 2 / (3 * N))]
    for k in range(1, 5):
        out.append((f"E[alpha_{k} alpha_-{k}]", lambda s, k=k: np.abs(s[:, k]) ** 2, 2 * b(k)))
    out.append(("E[beta_0,0]", lambda s: s[:, 5].real, 0.5 + 1 / (3 * N)))
    for name, col, sign in (("beta_0,{k}", 5, 1.0), ("beta_{k},0", 9, -1.0), ("beta_{k},-{k}", 13, 1.0)):
        for k in range(1, 5):
            nm = name.format(k=k)
            out.append((f"E[Re {nm}]", lambda s, c=col + k: s[:, c].real, sign * b(k)))
            out.append((f"E[Im {nm}]", lambda s, c=col + k: s[:, c].imag, 0.0))
    return out


def _moment_block(seed, idx, rec, dt, bridge):
    stats = np.empty((len(idx), len(rec), len(rk.MOMENT_STAT_NAMES)), complex)
    resamples = 0
    for j, i in enumerate(idx):
        s, r = rk.path_moment_statistics(rk.stream(seed, _TAG_MOMENTS, i), rec, dt, bridge)
        stats[j] = s
        resamples += r
    return stats, resamples


def run_moment_validation(cfg: dict) -> StudyResult:
    started = time.time()
    rec = sorted(int(n) for n in cfg["N_values"])
    paths, bs = int(cfg["paths"]), int(cfg["block_size"])
    dt = float(cfg["dt"])
    seed = int(cfg["seed"])
    chunks = [range(i, min(i + bs, paths)) for i in range(0, paths, bs)]
    parts = _map(lambda idx: _moment_block(seed, idx, rec, dt, bool(cfg["bridge"])), chunks, int(cfg["threads"]))
    stats = np.concatenate([p[0] for p in parts])
    resamples = sum(p[1] for p in parts)
    allowance = 2.0 * math.sqrt(dt)
    rows, zmax, fails = [], 0.0, 0
    for r, N in enumerate(rec):
        s = stats[:, r, :]
        for name, fn, target in moment_targets(N):
            v = fn(s)
            mean = float(v.mean())
            se = float(v.std(ddof=1) / math.sqrt(v.size))
            z = (mean - target) / se if se > 0 else 0.0
            within = abs(mean - target) <= 3 * se + allowance
            fails += not within
            zmax = max(zmax, abs(z))
            rows.append([N, name, mean, target, se, z, within])
    summary = {
        "paths": paths,
        "max_abs_z": zmax,
        "z_fail": float(cfg["z_fail"]),
        "passed": bool(zmax <= float(cfg["z_fail"])),
        "outside_3se_plus_allowance": fails,
        "bias_allowance": allowance,
        "resamples": int(resamples),
    }
    columns = ["N", "quantity", "estimate", "closed_form", "std_err", "z", "within_3se_plus_allowance"]
    return _write(StudyResult("validate-moments", columns, rows, summary, {}), cfg, None, started)


# ---------------------------------------------------------------------------
# local strong error on coupled paths


def local_strong_order(problem, y0, N_values, paths=1000, K_t=16, dt=1e-3, substeps=2, seed=0, chunk=125, threads=1):
    """RMS distance between one exact-rv step and the flow on the same path.

    For each ``N`` a path with step ``dt`` is drawn per sample; its ``alpha``,
    ``beta`` feed :func:`step_exact_rv` and its knots feed the RK4 flow
    reference.  Returns ``(rows, slope)`` with rows ``(N, H, rms, se)``; ``se``
    is the delta-method standard error of the RMS.
    """
    y0 = np.asarray(y0, float)
    rows = []
    for N in N_values:
        scheme = SchemeConfig(N=int(N), K_t=int(K_t))

        def job(idx, N=N, scheme=scheme):
            draws = [rk.oracle_alpha_beta(rk.stream(seed, _TAG_STRONG, N, i), N, K_t, dt, record_path=True) for i in idx]
            ref = it.reference_strong_paths(problem, y0, [(d.knots_t, d.knots_w) for d in draws], substeps=substeps)
            app = np.array([it.step_exact_rv(problem, y0, scheme, d).new_state for d in draws])
            return np.sum((app - ref) ** 2, axis=1)

        chunks = [range(i, min(i + chunk, paths)) for i in range(0, paths, chunk)]
        sq = np.concatenate(_map(job, chunks, threads))
        rms = math.sqrt(sq.mean())
        se = sq.std(ddof=1) / math.sqrt(sq.size) / (2 * rms)
        rows.append([int(N), int(N) * problem.epsilon, rms, se])
    slope = float(np.polyfit(np.log([r[1] for r in rows]), np.log([r[2] for r in rows]), 1)[0])
    return rows, slope


# ---------------------------------------------------------------------------
# single trajectory


def run_simulate(cfg: dict) -> StudyResult:
    started = time.time()
    problem, y0 = build_problem(cfg["problem"])
    scheme = _scheme(cfg, cfg["N"])
    if cfg["method"] not in it.METHODS:
        raise ConfigError(f"unknown method {cfg['method']!r}")
    rng = rk.stream(int(cfg["seed"]), _TAG_SIM)
    Y = it.integrate(
        problem,
        y0,
        scheme,
        cfg["method"],
        int(cfg["m_steps"]),
        rng,
        oracle_dt=float(cfg["oracle_dt"]),
        oracle_bridge=bool(cfg["oracle_bridge"]),
    )
    H = scheme.H(problem)
    columns = ["step", "t"] + [f"y{i}" for i in range(problem.dim)]
    rows = [[k, k * H, *Y[k]] for k in range(Y.shape[0])]
    summary = {"final_state": Y[-1].tolist()}
    if problem.invariant_matrix is not None:
        Q = problem.invariant(Y)
        summary["max_invariant_drift"] = float(np.max(np.abs(Q - Q[0])))
    plot = (
        'set datafile separator ","\nset terminal pngcairo\nset output "@STEM@.png"\n'
        "plot '@CSV@' skip 2 using 3:4 with linespoints title \"trajectory\"\n"
    )
    return _write(StudyResult("simulate", columns, rows, summary, {}), cfg, plot, started)


RUNNERS = {
    "weak-convergence": run_weak_convergence,
    "norm-evolution": run_norm_evolution,
    "tn-clt": run_tn_clt,
    "validate-moments": run_moment_validation,
    "simulate": run_simulate,
}
