"""
Command implementations behind ``ballistic-lab``.

Each ``cmd_*`` takes a validated ``RunConfig`` and returns the process exit status. Library
errors propagate as ``LabError`` and are turned into status 2 by ``main``; gated test failures
return 1.

Test suites run fixed presets. ``--replicas`` above 1 overrides the preset replica count and a
sampler flag (``--p``/``--mean-time``/``--cesaro-t`` with ``--dim``/``--box-n``) replaces the
preset sampler of the ``stationarity`` and ``invariance`` suites.
"""

import csv
import json
import logging
import math
import sys
from collections import Counter
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .. import cluster, oracles
from ..analysis import (
    INVARIANCE_MODES,
    TestReport,
    alpha_stability_check,
    axis_pairs,
    check_growth_inequality,
    correlation_decay,
    estimate_alpha_beta,
    goodness_of_fit,
    height_growth_profile,
    invariance_tests,
    l1_bound_check,
    l1_stability,
    stationarity_test,
    tail_profile,
)
from ..config import DEFAULT_TOLERANCES, SCHEMA_VERSION, SEED_MIXER
from ..dynamics import Chain, ChainConfig, generate_schedule
from ..errors import EmptyInputError, InvalidParameterError, SchemaError
from ..lattice import BoxSpec, CenteredSample, HeightField, box_sites, origin, unit
from ..replicas import replica_rng
from ..sampler import (
    SamplerMode,
    SamplerParams,
    draw_samples,
    matched_geometric_p,
    sample_exponential,
    validate_params,
)
from .config import RunConfig
from .plotting import plot_profile
from .records import (
    MetaRecord,
    read_checkpoint,
    read_samples,
    sample_to_record,
    write_checkpoint,
    write_csv,
    write_json,
    write_jsonl,
    write_meta,
)

__all__ = [
    "cmd_sample",
    "cmd_simulate",
    "cmd_test",
    "cmd_stats",
    "cmd_plot",
    "COMMAND_TABLE",
    "profile_rows",
    "checkpoint_path",
]

logger = logging.getLogger(__name__)

# config keys that may differ between an interrupted run and its resumption
_RESUME_FREE_KEYS = ("resume", "workers", "force")


def _meta(cfg: RunConfig, kind: str, records: int, **extra: Any) -> MetaRecord:
    meta: MetaRecord = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "config": cfg.to_dict(),
        "seed_mixer": SEED_MIXER,
        "records": records,
    }
    meta.update(extra)  # type: ignore[typeddict-item]
    return meta


def profile_rows(sample: CenteredSample, replica: int = 0) -> List[Dict[str, Any]]:
    """One row per window site: coordinates, centered height and the forward gradient along the
    first axis (empty on the last column of the window)."""
    rows = []
    for x in box_sites(sample.window_box):
        row: Dict[str, Any] = {"replica": replica}
        row.update({f"x{i + 1}": c for i, c in enumerate(x)})
        row["u"] = sample.value(x)
        row["grad"] = sample.gradient(x, 0) if x[0] < sample.window else ""
        rows.append(row)
    return rows


def _profile_header(d: int) -> List[str]:
    return ["replica", *[f"x{i + 1}" for i in range(d)], "u", "grad"]


def _require_force(cfg: RunConfig, params: SamplerParams) -> Dict[str, Any]:
    check = validate_params(params)
    if not check.ok:
        if not cfg.force:
            raise InvalidParameterError(
                f"sampler parameters are {check.verdict.value}: {check.message}; "
                "pass --force to run anyway"
            )
        logger.warning(
            "running %s parameters under --force: %s", check.verdict.value, check.message
        )
    return {
        "verdict": check.verdict.value,
        "low": check.low,
        "high": check.high,
        "recommended_p": check.recommended_p,
        "message": check.message,
        "forced": not check.ok,
    }


# sample


def cmd_sample(cfg: RunConfig) -> int:
    params = cfg.sampler_params()
    validation = _require_force(cfg, params)
    samples = draw_samples(params, cfg.workers) if params.replicas else []
    out = Path(cfg.out or "")
    if cfg.format == "jsonl":
        n = write_jsonl(out, (sample_to_record(s, i) for i, s in enumerate(samples)))
    else:
        rows = [row for i, s in enumerate(samples) for row in profile_rows(s, i)]
        write_csv(out, rows, header=_profile_header(params.d))
        n = len(samples)
    write_meta(out, _meta(cfg, "samples", n, validation=validation))
    logger.info("wrote %d samples to %s", n, out)
    return 0


# simulate


def checkpoint_path(out: Path) -> Path:
    return out.with_name(out.name + ".ckpt.json")


def _snapshot_bytes(chain: Chain, time: Optional[float], fmt: str) -> bytes:
    field = chain.field
    if fmt == "jsonl":
        rec = {
            "schema_version": SCHEMA_VERSION,
            "d": chain.box.d,
            "N": chain.box.N,
            "events": chain.events,
            "time": time,
            "heights": field.flat().tolist(),
        }
        return (json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n").encode()
    t = "" if time is None else repr(float(time))
    lines = []
    for x, h in zip(box_sites(chain.box), field.flat().tolist()):
        lines.append(",".join([str(chain.events), t, *map(str, x), str(h)]))
    return ("\n".join(lines) + "\n").encode()


def _comparable(config: Dict[str, Any]) -> Dict[str, Any]:
    return {k: v for k, v in config.items() if k not in _RESUME_FREE_KEYS}


def cmd_simulate(cfg: RunConfig) -> int:
    """Run the discrete chain (``--steps``) or the continuous dynamics (``--time``) from the flat
    surface, writing a snapshot every ``--checkpoint`` events plus the final field.

    With a stride, a checkpoint holding the chain state and the output length is rewritten after
    every snapshot; ``--resume`` truncates the output to that length and carries on, which gives
    the same bytes as an uninterrupted run. The checkpoint is removed when the run completes.
    """
    box = BoxSpec(cfg.d, cfg.N)
    chain_cfg = ChainConfig(box, seed=cfg.seed)
    out = Path(cfg.out or "")
    ckpt = checkpoint_path(out)
    continuous = cfg.T is not None
    schedule = generate_schedule(chain_cfg, cfg.T) if continuous else None
    total = schedule.count if schedule is not None else int(cfg.steps or 0)
    stride = cfg.checkpoint

    if cfg.resume and ckpt.exists():
        state = read_checkpoint(ckpt, "simulate")
        if _comparable(state["config"]) != _comparable(cfg.to_dict()):
            raise SchemaError(f"{ckpt} was written for a different configuration")
        chain = Chain.from_state(chain_cfg, state["chain"])
        fh = open(out, "r+b")
        fh.seek(int(state["output_offset"]))
        fh.truncate()
        logger.info("resuming %s at event %d of %d", out, chain.events, total)
    else:
        if cfg.resume:
            logger.info("no checkpoint at %s; starting from scratch", ckpt)
        chain = Chain(chain_cfg)
        fh = open(out, "wb")
        if cfg.format == "csv":
            header = ["events", "time", *[f"x{i + 1}" for i in range(cfg.d)], "h"]
            fh.write((",".join(header) + "\n").encode())

    with fh:
        while chain.events < total:
            m = total - chain.events
            if stride:
                m = min(m, stride - chain.events % stride)
            if schedule is not None:
                k = chain.events
                chain.apply_sites(schedule.sites[k : k + m])
                chain.time = float(schedule.times[chain.events - 1])
            else:
                chain.advance_steps(m)
            if stride and chain.events % stride == 0:
                fh.write(_snapshot_bytes(chain, chain.time if continuous else None, cfg.format))
                fh.flush()
                if chain.events < total:
                    write_checkpoint(
                        ckpt,
                        {
                            "schema_version": SCHEMA_VERSION,
                            "kind": "simulate",
                            "config": cfg.to_dict(),
                            "chain": chain.state_dict(),
                            "output_offset": fh.tell(),
                        },
                    )
        if continuous:
            chain.time = float(cfg.T or 0.0)
        if total == 0 or not stride or total % stride:
            fh.write(_snapshot_bytes(chain, chain.time if continuous else None, cfg.format))

    if ckpt.exists():
        ckpt.unlink()
    write_meta(out, _meta(cfg, "simulate", total, summary={"events": total}))
    logger.info("simulation on B_%d finished after %d events", cfg.N, total)
    return 0


# test suites


def _preset(cfg: RunConfig, full: Any, quick: Any) -> Any:
    return quick if cfg.quick else full


def _replicas(cfg: RunConfig, full: int, quick: Optional[int] = None) -> int:
    """An explicit ``--replicas`` wins over the suite preset, even when it is 1."""
    if cfg.replicas is not None:
        return cfg.replicas
    return _preset(cfg, full, full if quick is None else quick)


def _check_report(name: str, statistic: float, threshold: float, passed: bool, **details: Any):
    return TestReport(
        name=name,
        statistic=float(statistic),
        p_value=None,
        tv_distance=None,
        tv_null=None,
        tv_excess=None,
        sample_sizes=(),
        threshold=float(threshold),
        passed=bool(passed),
        decision="pass" if passed else "fail",
        details=details,
    )


def _chain_law_counts(steps: int, runs: int, rng: np.random.Generator) -> Counter:
    box = BoxSpec(1, 1)
    counts: Counter = Counter()
    for _ in range(runs):
        chain = Chain(ChainConfig(box), rng=rng)
        chain.advance_steps(steps)
        counts[tuple(chain.field.flat().tolist())] += 1
    return counts


def _oracle_suite(cfg: RunConfig) -> List[TestReport]:
    runs = _replicas(cfg, 100000, 20000)
    step_range = range(1, 6)
    gated = len(step_range) + 1
    significance = DEFAULT_TOLERANCES.significance / gated
    reports = []

    law2 = oracles.brute_force_chain_law(1, 1, 2)
    ninths = {(1, 1, 0): 2, (0, 1, 1): 2, (1, 0, 1): 2, (2, 0, 0): 1, (0, 2, 0): 1, (0, 0, 2): 1}
    hand_ok = len(law2) == len(ninths) and all(law2[k] * 9 == v for k, v in ninths.items())
    reports.append(_check_report("exact-law-steps-2", float(law2[(1, 1, 0)]), 2 / 9, hand_ok))

    for steps in step_range:
        law = oracles.brute_force_chain_law(1, 1, steps)
        counts = _chain_law_counts(steps, runs, replica_rng(cfg.seed, steps))
        expected = {k: float(p) for k, p in law.probabilities.items()}
        reports.append(
            goodness_of_fit(counts, expected, f"exact-law-steps-{steps}", significance)
        )

    B, a = 5, 1.0
    params = SamplerParams(d=1, N=2, mode=SamplerMode.EXPONENTIAL, value=a)
    rng = replica_rng(cfg.seed, 100)
    ks: Counter = Counter(sample_exponential(params, rng).n_updates for _ in range(runs))
    top = max(ks) + 1
    pmf = {j: float(oracles.geometric_count_pmf(B, a, j)) for j in range(top)}
    pmf[top] = float(oracles.geometric_count_sf(B, a, top))
    reports.append(goodness_of_fit(ks, pmf, "event-count-law", significance))

    worst = 0.0
    for n in range(1, 51):
        for a_ in np.round(np.arange(0.1, 1.0, 0.1), 1):
            worst = max(worst, oracles.gamma_cdf(n, a_ * n) / oracles.gamma_tail_bound(n, a_))
    reports.append(_check_report("gamma-tail-bound", worst, 1.0, worst <= 1.0))

    rng = replica_rng(cfg.seed, 200)
    int_gap = math.inf
    float_gap = math.inf
    for _ in range(_preset(cfg, 100000, 2000)):
        n = int(rng.integers(2, 11))
        lhs, rhs = oracles.max_mean_gap([int(v) for v in rng.integers(-20, 21, n)])
        int_gap = min(int_gap, float(lhs - rhs))
        lhs, rhs = oracles.max_mean_gap(rng.normal(0, 5, n).tolist())
        float_gap = min(float_gap, float(lhs - rhs))
    reports.append(_check_report("max-mean-gap-int", int_gap, 0.0, int_gap >= 0))
    reports.append(_check_report("max-mean-gap-float", float_gap, -1e-12, float_gap >= -1e-12))
    return reports


def _preset_params(cfg: RunConfig, N: int, p: float, replicas: int) -> SamplerParams:
    if cfg.mode is not None:
        return cfg.sampler_params(replicas=_replicas(cfg, replicas), window=None)
    return SamplerParams(
        d=1,
        N=N,
        mode=SamplerMode.GEOMETRIC,
        value=p,
        seed=cfg.seed,
        replicas=_replicas(cfg, replicas),
    )


def _stationarity_suite(cfg: RunConfig) -> List[TestReport]:
    params = _preset_params(cfg, _preset(cfg, 200, 50), 5e-4, 2000)
    _require_force(cfg, params)
    T = 1.0 if cfg.T is None else cfg.T
    return [stationarity_test(params, T=T, window=cfg.window, workers=cfg.workers)]


def _invariance_suite(cfg: RunConfig) -> List[TestReport]:
    params = _preset_params(cfg, 200, 5e-4, 2000)
    _require_force(cfg, params)
    samples = draw_samples(params, cfg.workers)
    return [invariance_tests(samples, mode) for mode in INVARIANCE_MODES]


def _random_field(box: BoxSpec, rng: np.random.Generator) -> HeightField:
    return HeightField.from_padded(box, rng.integers(-5, 6, size=box.padded_shape))


def _cluster_suite(cfg: RunConfig) -> List[TestReport]:
    tol = DEFAULT_TOLERANCES
    reports = []

    rng = replica_rng(cfg.seed, 0)
    box = BoxSpec(1, 20)
    unstable = escaped = 0
    schedules = 500
    for _ in range(schedules):
        f = _random_field(box, rng)
        P = generate_schedule(ChainConfig(box), 3.0, rng)
        rep = cluster.stabilization_check(f, P, origin(1))
        escaped += rep.escaped
        unstable += not rep.escaped and not rep.stable
    reports.append(
        _check_report(
            "stabilization", unstable, 0, unstable == 0, schedules=schedules, escaped=escaped
        )
    )

    c = tol.cluster_tail_c
    grid = [5.0, 10.0, 15.0, 20.0]
    N = int(math.ceil(3 * c * max(grid)))
    tail = cluster.radius_tail(
        1, N, grid, _replicas(cfg, 10000, 2000), c, replica_rng(cfg.seed, 1)
    )
    ok = tail.slope < 0 and tail.r_squared > tol.cluster_tail_r2
    reports.append(
        _check_report(
            "cluster-tail",
            tail.slope,
            tol.cluster_tail_r2,
            ok,
            c=c,
            r_squared=tail.r_squared,
            rows=tail.to_rows(),
        )
    )

    small = cluster.radius_tail(
        1, 10, [0.0, 1.0], _replicas(cfg, 2000), c, replica_rng(cfg.seed, 2)
    )
    zero, one = small.rows
    se = math.sqrt(max(one.at_least_one * (1 - one.at_least_one), 1e-12) / one.replicas)
    gap = abs(one.at_least_one - (1 - math.exp(-1.0)))
    reports.append(
        _check_report(
            "first-step-radius",
            gap,
            tol.growth_sigmas * se,
            zero.at_least_one == 0 and gap <= tol.growth_sigmas * se,
            p_rho_ge_1=one.at_least_one,
        )
    )

    agree = cluster.box_agreement(1, 10, 20, 2.0, _replicas(cfg, 500), replica_rng(cfg.seed, 3))
    reports.append(
        _check_report(
            "box-agreement",
            agree.contained_disagreements,
            0,
            agree.contained_disagreements == 0,
            disagreement_rate=agree.disagreement_rate,
            containment_rate=agree.containment_rate,
        )
    )
    return reports


def _growth_suite(cfg: RunConfig) -> List[TestReport]:
    reports = [
        check_growth_inequality(
            1, 20, 1.0, 0.1, _replicas(cfg, 100000, 20000), replica_rng(cfg.seed, 0), margin=10
        )
    ]
    N, grid, runs, margin = _preset(
        cfg, (8000, [500.0, 1000.0], 2, 2000), (1500, [250.0, 500.0], 4, 1000)
    )
    alpha, _ = estimate_alpha_beta(1, N, grid, runs, replica_rng(cfg.seed, 1), margin=margin)
    reports.append(alpha_stability_check(alpha))
    N, t, runs = _preset(cfg, (800, 50.0, 100), (200, 20.0, 40))
    reports.append(l1_bound_check(1, N, t, runs, replica_rng(cfg.seed, 2)))
    if cfg.quick:
        points = [(N, matched_geometric_p(2 * N + 1, 20.0)) for N in (50, 100)]
    else:
        points = [(100, 1e-3), (200, 5e-4), (400, 400**-1.5)]
    configs = [
        SamplerParams(
            d=1,
            N=N,
            mode=SamplerMode.GEOMETRIC,
            value=p,
            seed=cfg.seed + i,
            replicas=_replicas(cfg, 2000),
        )
        for i, (N, p) in enumerate(points)
    ]
    reports.append(l1_stability(configs, cfg.workers))
    return reports


_SUITES: Dict[str, Callable[[RunConfig], List[TestReport]]] = {
    "oracles": _oracle_suite,
    "stationarity": _stationarity_suite,
    "invariance": _invariance_suite,
    "cluster": _cluster_suite,
    "growth": _growth_suite,
}


def cmd_test(cfg: RunConfig) -> int:
    """Run a suite, print one line per check, write the reports when ``--out`` is given.

    Exit status 0 iff no check failed (``insufficient-power`` is not a failure).
    """
    suite = cfg.suite or ""
    reports = _SUITES[suite](cfg)
    failed = [r for r in reports if r.decision == "fail"]
    for r in reports:
        print(
            f"{r.decision:<18} {r.name:<28} "
            f"statistic={r.statistic:.6g} threshold={r.threshold:.6g}"
        )
    if cfg.out:
        write_json(
            cfg.out,
            {
                "schema_version": SCHEMA_VERSION,
                "suite": suite,
                "config": cfg.to_dict(),
                "passed": not failed,
                "reports": [r.to_dict() for r in reports],
            },
        )
    logger.info("suite %s: %d checks, %d failed", suite, len(reports), len(failed))
    return 1 if failed else 0


# stats


def _load_samples(cfg: RunConfig) -> List[CenteredSample]:
    if cfg.input:
        samples = read_samples(cfg.input)
    else:
        params = cfg.sampler_params()
        _require_force(cfg, params)
        samples = draw_samples(params, cfg.workers)
    if not samples:
        raise EmptyInputError("no samples to measure")
    return samples


def _emit(cfg: RunConfig, rows: Sequence[Dict[str, Any]], header: Sequence[str], **summary):
    if cfg.out:
        write_csv(cfg.out, rows, header)
        write_meta(cfg.out, _meta(cfg, f"stats-{cfg.kind}", len(rows), summary=summary))
        return
    writer = csv.DictWriter(sys.stdout, fieldnames=list(header), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def _stats_alpha(cfg: RunConfig) -> None:
    """``alpha(t)`` table; ``t``, ``mean`` and ``stderr`` lead, the ``beta`` columns and the
    replica count follow."""
    T = 10.0 if cfg.T is None else cfg.T
    grid = np.linspace(0.0, T, 11).tolist()
    rng = replica_rng(cfg.seed, 0)
    alpha, beta = estimate_alpha_beta(cfg.d, cfg.N, grid, cfg.replica_count, rng)
    rows = [
        {
            "t": t,
            "mean": a["mean"],
            "stderr": a["stderr"],
            "beta_mean": b["mean"],
            "beta_stderr": b["stderr"],
            "replicas": a["replicas"],
        }
        for t, a, b in zip(grid, alpha.to_rows(), beta.to_rows())
    ]
    _emit(cfg, rows, ["t", "mean", "stderr", "beta_mean", "beta_stderr", "replicas"])


def _stats_correlation(cfg: RunConfig) -> None:
    samples = _load_samples(cfg)
    W = samples[0].window
    distances = [r for r in (0, 1, 2, 4, 8, 16) if r < W]
    rows = [
        {
            "distance": row.distance,
            "correlation": row.correlation,
            "stderr": row.stderr,
            "samples": row.samples,
        }
        for row in correlation_decay(samples, axis_pairs(samples[0].d, distances))
    ]
    _emit(cfg, rows, ["distance", "correlation", "stderr", "samples"])


def _stats_tails(cfg: RunConfig) -> None:
    samples = _load_samples(cfg)
    profile = tail_profile(samples, clip=DEFAULT_TOLERANCES.histogram_clip)
    _emit(cfg, profile.histogram.to_rows(), ["bin", "count", "fraction"], **profile.summary())


def _stats_cluster_tail(cfg: RunConfig) -> None:
    T = 20.0 if cfg.T is None else cfg.T
    grid = [T * k / 4 for k in (1, 2, 3, 4)]
    rng = replica_rng(cfg.seed, 0)
    tail = cluster.radius_tail(cfg.d, cfg.N, grid, cfg.replica_count, rng=rng)
    header = ["T", "tail_probability", "stderr", "censored", "replicas", "p_rho_ge_1", "mean_rho"]
    _emit(
        cfg,
        tail.to_rows(),
        header,
        c=tail.c,
        slope=tail.slope,
        intercept=tail.intercept,
        r_squared=tail.r_squared,
    )


def _stats_profile(cfg: RunConfig) -> None:
    samples = _load_samples(cfg)
    rows, slope = height_growth_profile(samples)
    _emit(cfg, rows, ["r", "mean_abs", "stderr"], log_log_slope=slope)


_STATS: Dict[str, Callable[[RunConfig], None]] = {
    "alpha": _stats_alpha,
    "correlation": _stats_correlation,
    "tails": _stats_tails,
    "cluster-tail": _stats_cluster_tail,
    "profile": _stats_profile,
}


def cmd_stats(cfg: RunConfig) -> int:
    _STATS[cfg.kind or ""](cfg)
    return 0


# plot


def cmd_plot(cfg: RunConfig) -> int:
    samples = read_samples(cfg.input or "")
    if not 0 <= cfg.replica < len(samples):
        raise InvalidParameterError(f"--replica {cfg.replica} not in a file of {len(samples)}")
    sample = samples[cfg.replica]
    rows = [
        {
            "x": x[0],
            "u": sample.value(x),
            "grad": sample.gradient(x, 0) if x[0] < sample.window else "",
        }
        for x in _axis_sites(sample)
    ]
    table = Path(cfg.out or "").with_suffix(".csv")
    write_csv(table, rows, ["x", "u", "grad"])
    plot_profile(rows, cfg.out or "", title=f"d={sample.d}, N={sample.box.N}, {_describe(sample)}")
    return 0


def _axis_sites(sample: CenteredSample) -> List[tuple]:
    e = unit(sample.d, 0)
    return [tuple(r * c for c in e) for r in range(-sample.window, sample.window + 1)]


def _describe(sample: CenteredSample) -> str:
    p = sample.params
    return f"{p.get('mode', '?')}={p.get('value', '?')}" if p else "unknown sampler"


COMMAND_TABLE: Dict[str, Callable[[RunConfig], int]] = {
    "sample": cmd_sample,
    "simulate": cmd_simulate,
    "test": cmd_test,
    "stats": cmd_stats,
    "plot": cmd_plot,
}
