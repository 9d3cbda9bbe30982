"""Command-line tool: analysis, simulation, sweeps and result persistence.

Commands
--------
analyze        steady state, service moments and mean delay for one scenario
simulate       one simulation run, reported as a flat record
sweep-q0       delay versus transmission probability across the stable band
sweep-rate     minimum delay versus input rate at the optimal q0
sensing-bound  delay-optimal and throughput-optimal sensing-time bounds
ra-sdt         small-data-transmission presets at one input rate
validate       built-in oracle-equivalence suite, pass/fail summary

Every output file gets a sibling manifest (same path plus
``.manifest.json``) holding the tool version, the command and the fully
resolved configuration, run parameters and seed included.  Passing the
manifest back through ``--config`` regenerates the output byte for byte;
explicit flags still override individual entries.

CSV is the canonical format: header row mandatory, one row per point,
floats serialized with ``repr`` (shortest round-trip), non-finite values
as ``inf``/``nan`` literals, booleans as ``true``/``false``.  JSON mirrors
the rows as a list of objects with non-finite values as null and a
``finite`` marker per row; saturated points are emitted, never dropped.

Column contracts (in order):
- analyze: family, connection, n, q0, lambda_hat, lambda_tilde, regime, p,
  alpha, alpha_tilde, service_rate, rho, omega, d_mean_slots,
  d_second_slots, t_bar_slots, t_bar_ms, q0_lower, q0_upper
- simulate: mean_queue_len, delay_little_slots, delay_sojourn_slots,
  throughput_pkts_per_slot, p_hat, alpha_hat, saturated_flag
- sweep-q0: q0, T_bar_analytical, T_bar_sim, region_lower, region_upper
- sweep-rate: lambda_tilde, lambda_hat, q0_star, t_min_slots, t_min_ms,
  t_sim_ms
- sensing-bound: lambda_tilde, sigma_star_delay_ms, sigma_star_throughput_ms
- ra-sdt: variant, lambda_tilde, q0_star, t_min_slots, t_min_ms, t_sim_ms

The environment variable ``RADELAY_OUT_DIR`` sets the default output
directory for relative ``--out`` paths.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

import numpy as np

from . import __version__
from .delay import (
    SaturatedError,
    mean_queueing_delay,
    optimal_q0,
    service_moments_closed_form,
    solve_steady_state,
)
from .fixedpoint import unsaturated_region
from .model import (
    AccessScheme,
    BackoffKind,
    BackoffPolicy,
    Connection,
    Family,
    Scenario,
    ValidationError,
    holding_times,
    packet_rate,
)
from .presets_registry import load_preset, preset_names, scheme_from_preset
from .sensing import delay_optimal_bound, rate_grid, throughput_optimal_bound
from .sim import RaSdtVariant, simulate, simulate_ra_sdt

_FORMATS = ("csv", "json")


# ---------------------------------------------------------------------------
# configuration resolution


def _backoff_from_dict(d: dict) -> BackoffPolicy:
    kind = BackoffKind(d.get("kind", "constant"))
    if kind is BackoffKind.CUSTOM:
        return BackoffPolicy.custom(tuple(d["q_table"]))
    if kind is BackoffKind.BINARY_EXPONENTIAL:
        return BackoffPolicy.binary_exponential(int(d.get("cutoff", 0)))
    return BackoffPolicy.constant(int(d.get("cutoff", 0)))


def _backoff_to_dict(b: BackoffPolicy) -> dict:
    d = {"kind": b.kind.value, "cutoff": b.cutoff}
    if b.kind is BackoffKind.CUSTOM:
        d["q_table"] = list(b.q_table)
    return d


def _scheme_from_dict(d: dict) -> AccessScheme:
    return AccessScheme(
        family=Family(d["family"]),
        connection=Connection(d["connection"]),
        payload_ms=float(d["payload_ms"]),
        overhead_success_ms=float(d["overhead_success_ms"]),
        overhead_fail_ms=float(d["overhead_fail_ms"]),
        slot_ms=None if d.get("slot_ms") is None else float(d["slot_ms"]),
    )


def _scenario_to_dict(sc: Scenario) -> dict:
    return {
        "n": sc.n,
        "scheme": {
            "family": sc.scheme.family.value,
            "connection": sc.scheme.connection.value,
            "payload_ms": sc.scheme.payload_ms,
            "overhead_success_ms": sc.scheme.overhead_success_ms,
            "overhead_fail_ms": sc.scheme.overhead_fail_ms,
            "slot_ms": sc.scheme.slot_ms,
        },
        "backoff": _backoff_to_dict(sc.backoff),
        "q0": sc.q0,
        "bit_rate_per_node": sc.bit_rate_per_node,
        "encoding_rate": sc.encoding_rate,
    }


def _scenario_from_dict(d: dict) -> Scenario:
    return Scenario(
        n=int(d["n"]),
        scheme=_scheme_from_dict(d["scheme"]),
        backoff=_backoff_from_dict(d["backoff"]),
        q0=float(d["q0"]),
        bit_rate_per_node=float(d["bit_rate_per_node"]),
        encoding_rate=float(d["encoding_rate"]),
    )


def _load_config(path: str) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if "config" in data and "command" in data:
        return data["config"]  # a manifest from an earlier run
    return data


def _resolve_scenario(args) -> tuple[Scenario, dict, dict]:
    """Merge config file / preset / flags into a Scenario.

    Precedence: explicit flags over the config file or preset, which
    override built-in defaults. Returns the scenario, its dict form, and
    any non-scenario keys found in the config (run parameters from a
    manifest).
    """
    base: dict = {}
    run_base: dict = {}
    if args.config and args.preset:
        raise ValidationError("pass either --config or --preset, not both")
    if args.config:
        cfg = _load_config(args.config)
        if "scenario" in cfg:
            base = cfg["scenario"]
            run_base = {k: v for k, v in cfg.items() if k != "scenario"}
        else:
            base = cfg
    elif args.preset:
        data = load_preset(args.preset)
        base = {
            "n": data["defaults"]["n"],
            "scheme": data["scheme"],
            "backoff": {"kind": "constant", "cutoff": 0},
            "q0": data["defaults"]["q0"],
            "bit_rate_per_node": data["defaults"]["bit_rate_per_node"],
            "encoding_rate": data["encoding_rate"],
        }

    scheme_d = dict(
        base.get(
            "scheme",
            {
                "family": "aloha",
                "connection": "free",
                "payload_ms": 1.0,
                "overhead_success_ms": 0.0,
                "overhead_fail_ms": 0.0,
                "slot_ms": None,
            },
        )
    )
    for key in (
        "family",
        "connection",
        "payload_ms",
        "overhead_success_ms",
        "overhead_fail_ms",
        "slot_ms",
    ):
        val = getattr(args, key, None)
        if val is not None:
            scheme_d[key] = val
    scheme = _scheme_from_dict(scheme_d)

    backoff_d = dict(base.get("backoff", {"kind": "constant", "cutoff": 0}))
    if getattr(args, "backoff", None) is not None:
        backoff_d["kind"] = {"cb": "constant", "beb": "binary_exponential"}[args.backoff]
    if getattr(args, "cutoff", None) is not None:
        backoff_d["cutoff"] = args.cutoff
    backoff = _backoff_from_dict(backoff_d)

    n = args.n if args.n is not None else int(base.get("n", 50))
    q0 = args.q0 if args.q0 is not None else float(base.get("q0", 0.03))
    encoding = (
        args.encoding_rate
        if args.encoding_rate is not None
        else float(base.get("encoding_rate", 1.0))
    )

    rate_flags = [args.rate, args.rate_tilde, args.lambda_hat]
    if sum(v is not None for v in rate_flags) > 1:
        raise ValidationError("pass at most one of --rate, --rate-tilde, --lambda-hat")
    bit_rate = float(base.get("bit_rate_per_node", 1e-5))
    if args.rate is not None:
        bit_rate = args.rate
    elif args.rate_tilde is not None:
        bit_rate = args.rate_tilde / n
    elif args.lambda_hat is not None:
        sigma = scheme.slot_ms
        if sigma is None:
            from .model import derive_slot

            sigma = derive_slot(scheme).slot_ms
        bit_rate = (args.lambda_hat / n) * encoding * scheme.payload_ms / sigma

    scenario = Scenario(
        n=n,
        scheme=scheme,
        backoff=backoff,
        q0=q0,
        bit_rate_per_node=bit_rate,
        encoding_rate=encoding,
    )
    return scenario, _scenario_to_dict(scenario), run_base


def _run_value(args, run_base: dict, key: str, default):
    """Flag if given, else the manifest value, else the built-in default."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    return run_base.get(key, default)


# ---------------------------------------------------------------------------
# output


def _out_path(args, default_name: str) -> str:
    out = args.out or default_name
    if not os.path.isabs(out):
        out = os.path.join(os.environ.get("RADELAY_OUT_DIR", "."), out)
    return out


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _row_finite(row: dict) -> bool:
    return all(
        not (isinstance(v, float) and not math.isfinite(v)) for v in row.values()
    )


def _emit(path: str, fmt: str, header: list[str], rows: list[dict]) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(row[col]) for col in header])
    else:
        payload = []
        for row in rows:
            obj = {}
            for col in header:
                v = row[col]
                obj[col] = None if isinstance(v, float) and not math.isfinite(v) else v
            obj["finite"] = _row_finite(row)
            payload.append(obj)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")


def _write_manifest(path: str, command: str, config: dict) -> str:
    manifest = {
        "tool": "radelay",
        "version": __version__,
        "command": command,
        "config": config,
    }
    mpath = path + ".manifest.json"
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return mpath


# ---------------------------------------------------------------------------
# commands


_ANALYZE_COLS = [
    "family", "connection", "n", "q0", "lambda_hat", "lambda_tilde", "regime",
    "p", "alpha", "alpha_tilde", "service_rate", "rho", "omega",
    "d_mean_slots", "d_second_slots", "t_bar_slots", "t_bar_ms",
    "q0_lower", "q0_upper",
]

_SIM_COLS = [
    "mean_queue_len", "delay_little_slots", "delay_sojourn_slots",
    "throughput_pkts_per_slot", "p_hat", "alpha_hat", "saturated_flag",
]


def _analyze_row(scenario: Scenario, exact: bool) -> dict:
    hold = holding_times(scenario.scheme)
    lam_hat = scenario.n * packet_rate(scenario)
    region = unsaturated_region(
        scenario.scheme, hold, scenario.n, lam_hat, scenario.backoff,
        exact_finite_n=exact,
    )
    steady = solve_steady_state(scenario, exact_finite_n=exact)
    row = {
        "family": scenario.scheme.family.value,
        "connection": scenario.scheme.connection.value,
        "n": scenario.n,
        "q0": scenario.q0,
        "lambda_hat": lam_hat,
        "lambda_tilde": scenario.lambda_tilde,
        "regime": steady.regime.value,
        "p": steady.p,
        "alpha": steady.alpha,
        "alpha_tilde": steady.alpha_tilde,
        "service_rate": steady.mu,
        "rho": steady.rho,
        "omega": steady.omega,
    }
    result = mean_queueing_delay(scenario, exact_finite_n=exact)
    if result.finite:
        moments = service_moments_closed_form(scenario, steady)
        row["d_mean_slots"] = moments.d1
        row["d_second_slots"] = moments.d2
    else:
        row["d_mean_slots"] = math.inf
        row["d_second_slots"] = math.inf
    row["t_bar_slots"] = result.t_slots
    row["t_bar_ms"] = result.t_ms
    row["q0_lower"] = region.q0_lower
    row["q0_upper"] = region.q0_upper
    return row


def cmd_analyze(args) -> int:
    scenario, cfg, run_base = _resolve_scenario(args)
    fmt = _run_value(args, run_base, "format", "csv")
    exact = bool(_run_value(args, run_base, "exact_finite_n", False))
    row = _analyze_row(scenario, exact)
    path = _out_path(args, f"analyze.{fmt}")
    _emit(path, fmt, _ANALYZE_COLS, [row])
    _write_manifest(
        path, "analyze",
        {"scenario": cfg, "exact_finite_n": exact, "format": fmt},
    )
    print(path)
    return 0


def cmd_simulate(args) -> int:
    scenario, cfg, run_base = _resolve_scenario(args)
    fmt = _run_value(args, run_base, "format", "csv")
    slots = int(_run_value(args, run_base, "slots", 10_000_000))
    warmup = int(_run_value(args, run_base, "warmup", 100_000))
    seed = int(_run_value(args, run_base, "seed", 0))
    report = simulate(scenario, slots=slots, warmup=warmup, seed=seed)
    row = asdict(report)
    path = _out_path(args, f"simulate.{fmt}")
    _emit(path, fmt, _SIM_COLS, [row])
    _write_manifest(
        path, "simulate",
        {"scenario": cfg, "slots": slots, "warmup": warmup, "seed": seed, "format": fmt},
    )
    print(path)
    return 0


def _point_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])


def _sim_delay_point(task):
    """Worker for one simulated sweep point; top level for process pools."""
    scenario_cfg, q0, slots, warmup, seed = task
    scenario = _scenario_from_dict({**scenario_cfg, "q0": q0})
    report = simulate(scenario, slots=slots, warmup=warmup, seed=seed)
    return report.delay_little_slots


def _sim_map(tasks, jobs: int):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sim_delay_point, tasks))
    return [_sim_delay_point(t) for t in tasks]


def cmd_sweep_q0(args) -> int:
    scenario, cfg, run_base = _resolve_scenario(args)
    fmt = _run_value(args, run_base, "format", "csv")
    exact = bool(_run_value(args, run_base, "exact_finite_n", False))
    grid_spec = _run_value(args, run_base, "grid", None)
    points = int(_run_value(args, run_base, "points", 25))
    sim = bool(_run_value(args, run_base, "sim", False))
    slots = int(_run_value(args, run_base, "slots", 10_000_000))
    warmup = int(_run_value(args, run_base, "warmup", 100_000))
    seed = int(_run_value(args, run_base, "seed", 0))
    jobs = int(_run_value(args, run_base, "jobs", 1))

    hold = holding_times(scenario.scheme)
    lam_hat = scenario.n * packet_rate(scenario)
    region = unsaturated_region(
        scenario.scheme, hold, scenario.n, lam_hat, scenario.backoff,
        exact_finite_n=exact,
    )
    if grid_spec:
        lo, hi, num = grid_spec.split(":")
        grid = [float(x) for x in np.geomspace(float(lo), float(hi), int(num))]
    elif region.empty:
        raise ValidationError(
            "no stable transmission probabilities at this input rate; "
            "pass an explicit --grid lo:hi:n to sweep anyway"
        )
    else:
        grid = [
            float(x)
            for x in np.geomspace(
                region.q0_lower * 1.02, min(region.q0_upper, 1.0) * 0.98, points
            )
        ]

    rows = []
    for q0 in grid:
        sc = Scenario(
            n=scenario.n, scheme=scenario.scheme, backoff=scenario.backoff,
            q0=q0, bit_rate_per_node=scenario.bit_rate_per_node,
            encoding_rate=scenario.encoding_rate,
        )
        rows.append(
            {
                "q0": q0,
                "T_bar_analytical": mean_queueing_delay(sc, exact_finite_n=exact).t_slots,
                "T_bar_sim": math.nan,
                "region_lower": region.q0_lower,
                "region_upper": region.q0_upper,
            }
        )

    if sim:
        tasks = [
            (cfg, q0, slots, warmup, _point_seed(seed, i)) for i, q0 in enumerate(grid)
        ]
        for row, t_sim in zip(rows, _sim_map(tasks, jobs)):
            row["T_bar_sim"] = t_sim

    header = ["q0", "T_bar_analytical", "T_bar_sim", "region_lower", "region_upper"]
    path = _out_path(args, f"sweep_q0.{fmt}")
    _emit(path, fmt, header, rows)
    _write_manifest(
        path, "sweep-q0",
        {
            "scenario": cfg, "grid": grid_spec, "points": points, "sim": sim,
            "slots": slots, "warmup": warmup, "seed": seed,
            "exact_finite_n": exact, "jobs": jobs, "format": fmt,
        },
    )
    print(path)
    return 0


def cmd_sweep_rate(args) -> int:
    scenario, cfg, run_base = _resolve_scenario(args)
    fmt = _run_value(args, run_base, "format", "csv")
    exact = bool(_run_value(args, run_base, "exact_finite_n", False))
    grid_spec = _run_value(args, run_base, "grid", None)
    points = int(_run_value(args, run_base, "points", 25))
    sim = bool(_run_value(args, run_base, "sim", False))
    slots = int(_run_value(args, run_base, "slots", 10_000_000))
    warmup = int(_run_value(args, run_base, "warmup", 100_000))
    seed = int(_run_value(args, run_base, "seed", 0))
    jobs = int(_run_value(args, run_base, "jobs", 1))

    scheme = scenario.scheme
    sigma = scheme.slot_ms
    if grid_spec:
        lo, hi, num = grid_spec.split(":")
        lam_tildes = [float(x) for x in np.geomspace(float(lo), float(hi), int(num))]
    else:
        lam_tildes = [
            float(x)
            for x in rate_grid(
                scheme.connection,
                payload_ms=scheme.payload_ms,
                delta_s_ms=scheme.overhead_success_ms,
                delta_f_ms=scheme.overhead_fail_ms,
                encoding_rate=scenario.encoding_rate,
                points=points,
            )
        ]

    rows = []
    sim_tasks: list[tuple[int, tuple]] = []
    for i, lt in enumerate(lam_tildes):
        sc = Scenario(
            n=scenario.n, scheme=scheme, backoff=scenario.backoff,
            q0=scenario.q0, bit_rate_per_node=lt / scenario.n,
            encoding_rate=scenario.encoding_rate,
        )
        row = {
            "lambda_tilde": lt,
            "lambda_hat": sc.n * packet_rate(sc),
            "q0_star": math.nan,
            "t_min_slots": math.inf,
            "t_min_ms": math.inf,
            "t_sim_ms": math.nan,
        }
        try:
            opt = optimal_q0(sc, exact_finite_n=exact)
            row["q0_star"] = opt.q0_star
            row["t_min_slots"] = opt.delay.t_slots
            row["t_min_ms"] = opt.delay.t_ms
            if sim and math.isfinite(opt.delay.t_slots):
                point_cfg = {**cfg, "bit_rate_per_node": lt / scenario.n}
                sim_tasks.append(
                    (
                        len(rows),
                        (point_cfg, opt.q0_star, slots, warmup, _point_seed(seed, i)),
                    )
                )
        except SaturatedError:
            pass
        rows.append(row)

    if sim_tasks:
        results = _sim_map([t for _, t in sim_tasks], jobs)
        for (idx, _), t_sim in zip(sim_tasks, results):
            rows[idx]["t_sim_ms"] = t_sim * sigma

    header = ["lambda_tilde", "lambda_hat", "q0_star", "t_min_slots", "t_min_ms", "t_sim_ms"]
    path = _out_path(args, f"sweep_rate.{fmt}")
    _emit(path, fmt, header, rows)
    _write_manifest(
        path, "sweep-rate",
        {
            "scenario": cfg, "grid": grid_spec, "points": points, "sim": sim,
            "slots": slots, "warmup": warmup, "seed": seed,
            "exact_finite_n": exact, "jobs": jobs, "format": fmt,
        },
    )
    print(path)
    return 0


def cmd_sensing_bound(args) -> int:
    scenario, cfg, run_base = _resolve_scenario(args)
    fmt = _run_value(args, run_base, "format", "csv")
    grid_spec = _run_value(args, run_base, "grid", None)
    points = int(_run_value(args, run_base, "points", 20))

    scheme = scenario.scheme
    conn = scheme.connection
    kw = dict(
        payload_ms=scheme.payload_ms,
        delta_s_ms=scheme.overhead_success_ms,
        delta_f_ms=scheme.overhead_fail_ms,
        encoding_rate=scenario.encoding_rate,
    )
    if grid_spec:
        lo, hi, num = grid_spec.split(":")
        lam_tildes = np.geomspace(float(lo), float(hi), int(num))
    else:
        lam_tildes = rate_grid(conn, points=points, **kw)
    sigma_thr = throughput_optimal_bound(
        conn, scheme.payload_ms, scheme.overhead_success_ms, scheme.overhead_fail_ms
    )
    rows = []
    for lt in lam_tildes:
        bound = delay_optimal_bound(conn, scenario.n, scenario.backoff, float(lt), **kw)
        rows.append(
            {
                "lambda_tilde": float(lt),
                "sigma_star_delay_ms": bound.sigma_star_delay_ms,
                "sigma_star_throughput_ms": sigma_thr,
            }
        )
    header = ["lambda_tilde", "sigma_star_delay_ms", "sigma_star_throughput_ms"]
    path = _out_path(args, f"sensing_bound.{fmt}")
    _emit(path, fmt, header, rows)
    _write_manifest(
        path, "sensing-bound",
        {"scenario": cfg, "grid": grid_spec, "points": points, "format": fmt},
    )
    print(path)
    return 0


def cmd_ra_sdt(args) -> int:
    run_base = _load_config(args.config) if args.config else {}
    fmt = _run_value(args, run_base, "format", "csv")
    exact = bool(_run_value(args, run_base, "exact_finite_n", False))
    sim = bool(_run_value(args, run_base, "sim", False))
    slots = int(_run_value(args, run_base, "slots", 10_000_000))
    warmup = int(_run_value(args, run_base, "warmup", 100_000))
    seed = int(_run_value(args, run_base, "seed", 0))
    preset = args.preset if args.preset is not None else run_base.get("preset")
    n_override = args.n if args.n is not None else run_base.get("n")
    backoff_kind = args.backoff if args.backoff is not None else run_base.get("backoff")
    cutoff = args.cutoff if args.cutoff is not None else run_base.get("cutoff")
    rate_tilde = (
        args.rate_tilde if args.rate_tilde is not None else run_base.get("rate_tilde")
    )
    if rate_tilde is None:
        raise ValidationError("ra-sdt needs --rate-tilde (aggregate bit input rate)")

    names = [preset] if preset else list(preset_names())
    if backoff_kind == "beb":
        backoff = BackoffPolicy.binary_exponential(int(cutoff or 0))
    else:
        backoff = BackoffPolicy.constant(int(cutoff or 0))

    rows = []
    for i, name in enumerate(names):
        data = load_preset(name)
        scheme = scheme_from_preset(data)
        n = int(n_override) if n_override is not None else int(data["defaults"]["n"])
        sc = Scenario(
            n=n, scheme=scheme, backoff=backoff, q0=0.5,
            bit_rate_per_node=rate_tilde / n,
            encoding_rate=float(data["encoding_rate"]),
        )
        sigma = sc.scheme.slot_ms
        row = {
            "variant": name,
            "lambda_tilde": rate_tilde,
            "q0_star": math.nan,
            "t_min_slots": math.inf,
            "t_min_ms": math.inf,
            "t_sim_ms": math.nan,
        }
        try:
            opt = optimal_q0(sc, exact_finite_n=exact)
            row["q0_star"] = opt.q0_star
            row["t_min_slots"] = opt.delay.t_slots
            row["t_min_ms"] = opt.delay.t_ms
            if sim and math.isfinite(opt.delay.t_slots):
                sc_star = Scenario(
                    n=n, scheme=scheme, backoff=backoff, q0=opt.q0_star,
                    bit_rate_per_node=rate_tilde / n,
                    encoding_rate=float(data["encoding_rate"]),
                )
                report = simulate_ra_sdt(
                    RaSdtVariant(name), sc_star, slots=slots, warmup=warmup,
                    seed=_point_seed(seed, i),
                )
                row["t_sim_ms"] = report.delay_little_slots * sigma
        except SaturatedError:
            pass
        rows.append(row)

    header = ["variant", "lambda_tilde", "q0_star", "t_min_slots", "t_min_ms", "t_sim_ms"]
    path = _out_path(args, f"ra_sdt.{fmt}")
    _emit(path, fmt, header, rows)
    _write_manifest(
        path, "ra-sdt",
        {
            "preset": preset, "n": n_override,
            "backoff": backoff_kind, "cutoff": cutoff,
            "rate_tilde": rate_tilde, "sim": sim, "slots": slots,
            "warmup": warmup, "seed": seed, "exact_finite_n": exact,
            "format": fmt,
        },
    )
    print(path)
    return 0


# ---------------------------------------------------------------------------
# validate: built-in oracle-equivalence suite


def _check(name: str, ok: bool, detail: str = "") -> bool:
    line = f"{'PASS' if ok else 'FAIL'} {name}"
    if detail and not ok:
        line += f": {detail}"
    print(line)
    return ok


def cmd_validate(args) -> int:
    from .delay import build_renewal_model, service_moments_generic
    from .fixedpoint import (
        fixed_point_map,
        max_throughput,
        saturated_root,
        unsaturated_roots,
    )
    from .lambertw import Branch, lambert_w
    from .model import derive_slot
    from .presets_registry import scenario_from_preset
    from .sim import _simulate_detail

    ok = True
    rng = np.random.default_rng(0)

    xs = np.concatenate([rng.uniform(-1 / math.e, 0, 1000), rng.uniform(0, 1e6, 1000)])
    worst = max(
        abs(lambert_w(Branch.PRINCIPAL, x) * math.exp(lambert_w(Branch.PRINCIPAL, x)) - x)
        / max(1.0, abs(x))
        for x in xs
    )
    ok &= _check("lambert-w principal identity", worst <= 1e-12, f"worst residual {worst:.2e}")
    xs_m = rng.uniform(-1 / math.e, -1e-12, 1000)
    worst_m = max(
        abs(lambert_w(Branch.MINUS_ONE, x) * math.exp(lambert_w(Branch.MINUS_ONE, x)) - x)
        / max(1.0, abs(x))
        for x in xs_m
    )
    ok &= _check("lambert-w lower-branch identity", worst_m <= 1e-12, f"worst residual {worst_m:.2e}")

    aloha = derive_slot(AccessScheme(Family.ALOHA, Connection.FREE, 1.0, 0.0, 0.0))
    csma = AccessScheme(Family.CSMA, Connection.FREE, 5.0, 5.0, 5.0, slot_ms=1.0)
    ok &= _check(
        "sensing-free maximum throughput is 1/e",
        abs(max_throughput(aloha, holding_times(aloha)) - 1 / math.e) <= 1e-12,
    )

    worst_gap = 0.0
    for scheme, lam_hat in [(aloha, 0.2), (csma, 0.02)]:
        hold = holding_times(scheme)
        roots = unsaturated_roots(scheme, hold, lam_hat)
        step = fixed_point_map(scheme.family, hold, lam_hat)
        for p in (roots.p_large, roots.p_small):
            if p > 0:
                worst_gap = max(worst_gap, abs(step(p) - p))
    ok &= _check("fixed-point residuals", worst_gap <= 1e-10, f"worst |map(p)-p| {worst_gap:.2e}")

    worst_rel = 0.0
    mu_ok = True
    for scheme, lam_hat in [(aloha, 0.2), (csma, 0.02)]:
        for backoff in (BackoffPolicy.constant(), BackoffPolicy.binary_exponential(3)):
            sc = Scenario(
                n=50, scheme=scheme, backoff=backoff, q0=0.02,
                bit_rate_per_node=lam_hat / 50 * scheme.payload_ms / scheme.slot_ms,
                encoding_rate=1.0,
            )
            steady = solve_steady_state(sc)
            m_closed = service_moments_closed_form(sc, steady)
            m_generic = service_moments_generic(
                build_renewal_model(sc, steady), holding_times(sc.scheme).tau_t
            )
            worst_rel = max(
                worst_rel,
                abs(m_closed.d1 - m_generic.d1) / m_closed.d1,
                abs(m_closed.d2 - m_generic.d2) / m_closed.d2,
            )
            mu_ok &= abs(m_closed.d1 - 1.0 / steady.mu) <= 1e-9 * m_closed.d1
    ok &= _check("closed-form vs generic service moments", worst_rel <= 1e-9, f"worst rel {worst_rel:.2e}")
    ok &= _check("service mean equals reciprocal service rate", mu_ok)

    sp = throughput_optimal_bound(Connection.FREE, 0.5, 5.5, 5.5)
    sn = throughput_optimal_bound(Connection.BASED, 0.5, 7.5, 2.0)
    ok &= _check(
        "sensing-time throughput bounds",
        abs(sp - 2.6680) <= 5e-4 and abs(sn - 0.8893) <= 5e-4,
        f"got {sp:.4f}, {sn:.4f}",
    )

    sat = saturated_root(50, 0.02, BackoffPolicy.constant())
    ok &= _check(
        "saturated root matches exp(-n q0)", abs(sat.p_a - math.exp(-1.0)) <= 1e-9
    )

    sc = Scenario(
        n=20, scheme=aloha, backoff=BackoffPolicy.constant(), q0=0.02,
        bit_rate_per_node=0.005, encoding_rate=1.0,
    )
    rep1, c1 = _simulate_detail(sc, slots=200_000, warmup=10_000, seed=5)
    rep2, _ = _simulate_detail(sc, slots=200_000, warmup=10_000, seed=5)
    ok &= _check("simulator reproducibility", rep1 == rep2)
    ok &= _check(
        "simulator packet conservation",
        c1["arrivals"] == c1["departures"] + c1["final_queue"],
    )

    sc4 = scenario_from_preset("sensing_based_4step", n=50, q0=0.05, bit_rate_per_node=4e-6)
    ra = simulate_ra_sdt(RaSdtVariant.SENSING_BASED_4STEP, sc4, slots=200_000, warmup=10_000, seed=9)
    ge = simulate(sc4, slots=200_000, warmup=10_000, seed=9)
    ok &= _check("listen-and-mute equals carrier-sensing model", ra == ge)

    print("OK" if ok else "FAILED")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# argument parsing


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="scenario JSON or a manifest from an earlier run")
    p.add_argument("--preset", help=f"bundled preset: {', '.join(preset_names())}")
    p.add_argument("--n", type=int, help="number of nodes")
    p.add_argument("--q0", type=float, help="initial transmission probability")
    p.add_argument("--family", choices=[f.value for f in Family], help="access family")
    p.add_argument(
        "--connection", choices=[c.value for c in Connection], help="contention unit"
    )
    p.add_argument("--payload-ms", dest="payload_ms", type=float, help="data payload duration")
    p.add_argument(
        "--overhead-success-ms", dest="overhead_success_ms", type=float,
        help="overhead per successful transmission",
    )
    p.add_argument(
        "--overhead-fail-ms", dest="overhead_fail_ms", type=float,
        help="overhead per failed transmission",
    )
    p.add_argument("--slot-ms", dest="slot_ms", type=float, help="slot length (sensing time)")
    p.add_argument("--encoding-rate", dest="encoding_rate", type=float, help="packet encoding rate")
    p.add_argument("--backoff", choices=["cb", "beb"], help="backoff scheme")
    p.add_argument("--cutoff", type=int, help="backoff cutoff phase K")
    p.add_argument("--rate", type=float, help="per-node bit input rate")
    p.add_argument("--rate-tilde", dest="rate_tilde", type=float, help="aggregate bit input rate")
    p.add_argument("--lambda-hat", dest="lambda_hat", type=float, help="aggregate packet input rate")


def _add_run_flags(p: argparse.ArgumentParser, *, sim_flag: bool = False) -> None:
    p.add_argument("--out", help="output file path")
    p.add_argument("--format", choices=_FORMATS, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--slots", type=int, default=None)
    p.add_argument("--warmup", type=int, default=None)
    p.add_argument(
        "--exact-finite-n", dest="exact_finite_n", action="store_true", default=None,
        help="finite-population fixed points instead of the large-n forms",
    )
    p.add_argument("--jobs", type=int, default=None, help="worker processes for sweeps")
    if sim_flag:
        p.add_argument(
            "--sim", action="store_true", default=None, help="also simulate each point"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radelay",
        description="Queueing delay analysis and simulation of slotted random access.",
    )
    parser.add_argument("--version", action="version", version=f"radelay {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analytical quantities for one scenario")
    _add_scenario_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="one simulation run")
    _add_scenario_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep-q0", help="delay versus transmission probability")
    _add_scenario_flags(p)
    _add_run_flags(p, sim_flag=True)
    p.add_argument("--grid", default=None, help="explicit geometric grid lo:hi:n")
    p.add_argument("--points", type=int, default=None, help="grid size inside the stable band")
    p.set_defaults(func=cmd_sweep_q0)

    p = sub.add_parser("sweep-rate", help="minimum delay versus input rate")
    _add_scenario_flags(p)
    _add_run_flags(p, sim_flag=True)
    p.add_argument("--grid", default=None, help="explicit geometric rate grid lo:hi:n")
    p.add_argument("--points", type=int, default=None)
    p.set_defaults(func=cmd_sweep_rate)

    p = sub.add_parser("sensing-bound", help="sensing-time bounds versus input rate")
    _add_scenario_flags(p)
    _add_run_flags(p)
    p.add_argument("--grid", default=None, help="explicit geometric rate grid lo:hi:n")
    p.add_argument("--points", type=int, default=None)
    p.set_defaults(func=cmd_sensing_bound)

    p = sub.add_parser("ra-sdt", help="small-data-transmission presets at one rate")
    _add_scenario_flags(p)
    _add_run_flags(p, sim_flag=True)
    p.set_defaults(func=cmd_ra_sdt)

    p = sub.add_parser("validate", help="built-in oracle-equivalence suite")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
