"""Command line for the islands-based ZALM source toolkit.

Subcommands:

    metrics   full scalar metric bundle at one configuration (JSON or CSV)
    sweep     one canonical figure table or a custom one-variable sweep
    solve     invert gain for a fraction/fidelity target, or the island
              count for a true-herald probability target
    mc        Monte Carlo estimates with closed-form comparison
    oracle    truncated-Fock-space check of the closed forms
    figures   write all seven canonical figure tables

Exit codes: 0 success; 2 invalid parameters; 3 output I/O failure;
4 unachievable solver target; 5 oracle delta above tolerance.

Shared parameter flags may also come from a ``--config`` file of
``key = value`` lines (same names as the flags, dashes or underscores);
explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .analytics import (
    herald_prob_island,
    islands_required,
    metric_bundle,
    prop_bell_probs,
    prop_loadable_prob,
    build_gaussian_blocks,
    solve_gain,
    true_herald_prob,
)
from .fock_oracle import (
    bell_metrics,
    conditional_signal_state,
    propagate_signals,
)
from .model import (
    HeraldMode,
    HeraldPattern,
    MetricBundle,
    ParameterValidationError,
    SourceParams,
    UnachievableTargetError,
    ZalmError,
    validate_params,
)
from .montecarlo import (
    SelectionPolicy,
    estimate_pair_rate,
    estimate_true_herald_prob,
)
from .sweeps import (
    FIGURE_IDS,
    SweepSpec,
    custom_table,
    figure_table,
    write_all_figures,
    write_table,
)

EXIT_OK = 0
EXIT_BAD_PARAMS = 2
EXIT_IO = 3
EXIT_UNACHIEVABLE = 4
EXIT_TOLERANCE = 5

_PARAM_KEYS = ("gain_minus_one", "eta_t", "eta_r", "islands", "pump_rate", "herald_mode")

_PATTERN_ALIASES = {
    "pp": "+h+v",
    "pm": "+h-v",
    "mp": "-h+v",
    "mm": "-h-v",
}


def _add_param_flags(parser: argparse.ArgumentParser, need_gain: bool = True) -> None:
    group = parser.add_argument_group("source parameters")
    group.add_argument("--gain-minus-one", type=str, default=None,
                       help="mean pair number per island per polarization (G-1)"
                       + ("" if need_gain else " (unused by this subcommand)"))
    group.add_argument("--eta-t", type=str, default=None,
                       help="detector-side efficiency in (0, 1], default 1")
    group.add_argument("--eta-r", type=str, default=None,
                       help="downstream channel transmissivity in (0, 1], default 1")
    group.add_argument("--islands", type=str, default=None,
                       help="phase-matched island count, default 1")
    group.add_argument("--pump-rate", type=str, default=None,
                       help="pump pulses per second, default 1")
    group.add_argument("--herald-mode", type=str, default=None,
                       help="same-island | spci-paper | spci-exact (default spci-paper)")
    group.add_argument("--config", type=str, default=None,
                       help="key = value file supplying any of the flags above")


def _read_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterValidationError(
                [("config", f"{path}:{lineno}: expected 'key = value', got {raw!r}")]
            )
        key, value = line.split("=", 1)
        key = key.strip().lower().replace("-", "_")
        if key == "n_islands":
            key = "islands"
        if key not in _PARAM_KEYS:
            raise ParameterValidationError(
                [("config", f"{path}:{lineno}: unknown parameter {key!r}")]
            )
        values[key] = value.strip()
    return values


def _resolve_params(args: argparse.Namespace, need_gain: bool = True) -> SourceParams:
    """Merge defaults, config file, and explicit flags into SourceParams."""
    merged: dict[str, str] = {}
    if args.config:
        merged.update(_read_config(args.config))
    for key in _PARAM_KEYS:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            merged[key] = flag_value
    if "gain_minus_one" not in merged:
        if need_gain:
            raise ParameterValidationError(
                [("gain_minus_one", "required (flag --gain-minus-one or config)")]
            )
        merged["gain_minus_one"] = "0"
    return validate_params(
        gain_minus_one=merged.get("gain_minus_one"),
        eta_t=merged.get("eta_t", 1.0),
        eta_r=merged.get("eta_r", 1.0),
        n_islands=merged.get("islands", 1),
        pump_rate=merged.get("pump_rate", 1.0),
        herald_mode=merged.get("herald_mode", HeraldMode.SPCI_PAPER),
    )


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _emit_json(payload: dict) -> None:
    print(json.dumps(_json_safe(payload), indent=2, sort_keys=True))


def _params_dict(params: SourceParams) -> dict:
    return {
        "gain_minus_one": params.gain_minus_one,
        "eta_t": params.eta_t,
        "eta_r": params.eta_r,
        "n_islands": params.n_islands,
        "pump_rate": params.pump_rate,
        "herald_mode": params.herald_mode.value,
    }


def _cmd_metrics(args: argparse.Namespace) -> int:
    params = _resolve_params(args)
    bundle = metric_bundle(params)
    if args.format == "csv":
        print(",".join(MetricBundle.FIELDS))
        print(",".join(format(getattr(bundle, f), ".17g") for f in MetricBundle.FIELDS))
    else:
        _emit_json({"params": _params_dict(params), "metrics": bundle.as_dict()})
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    if (args.figure is None) == (args.variable is None):
        raise ParameterValidationError(
            [("sweep", "choose exactly one of --figure or --variable")]
        )
    if args.figure is not None:
        table = figure_table(args.figure)
    else:
        if args.min is None or args.max is None:
            raise ParameterValidationError(
                [("sweep", "--variable sweeps need --min and --max")]
            )
        variable = args.variable.replace("-", "_")
        # The swept field is overwritten row by row, so a base value for it
        # is optional; every other parameter keeps its usual requirements.
        params = _resolve_params(args, need_gain=variable != "gain_minus_one")
        spec = SweepSpec(
            variable=variable,
            minimum=float(args.min),
            maximum=float(args.max),
            steps=args.steps,
            log_axis=args.log,
        )
        table = custom_table(spec, params)
    out = write_table(table, args.out)
    print(out)
    return EXIT_OK


def _cmd_solve(args: argparse.Namespace) -> int:
    if args.what == "gain":
        if args.value is None:
            raise ParameterValidationError([("value", "--value is required to solve gain")])
        params = _resolve_params(args, need_gain=False)
        gain = solve_gain(args.metric, float(args.value), params.eta_t, params.eta_r)
        blocks = build_gaussian_blocks(gain, params.eta_t, params.eta_r)
        s, e = prop_bell_probs(blocks, params.eta_r)
        achieved = {
            "fidelity": s / (s + 3.0 * e),
            "fraction": (s + 3.0 * e) / prop_loadable_prob(blocks, params.eta_r),
        }
        _emit_json(
            {
                "solved": {"gain_minus_one": gain},
                "target": {args.metric: float(args.value)},
                "achieved": achieved,
                "eta_t": params.eta_t,
                "eta_r": params.eta_r,
            }
        )
        return EXIT_OK
    # islands
    if args.target_p_true is None:
        raise ParameterValidationError(
            [("target_p_true", "--target-p-true is required to solve islands")]
        )
    params = _resolve_params(args)
    p = herald_prob_island(params.gain_minus_one, params.eta_t)
    count = islands_required(p, float(args.target_p_true), params.herald_mode)
    _emit_json(
        {
            "solved": {"n_islands": count},
            "target": {"p_true": float(args.target_p_true)},
            "achieved": {
                "p_true": true_herald_prob(p, count, params.herald_mode),
                "p_herald_island": p,
            },
            "params": _params_dict(params),
        }
    )
    return EXIT_OK


def _cmd_mc(args: argparse.Namespace) -> int:
    params = _resolve_params(args)
    policy = SelectionPolicy.parse(args.policy)
    est_true = estimate_true_herald_prob(params, args.pulses, args.seed, policy)
    est_rate = estimate_pair_rate(params, args.pulses, args.seed, policy)
    p = herald_prob_island(params.gain_minus_one, params.eta_t)
    analytic = {
        "same_island": true_herald_prob(p, params.n_islands, HeraldMode.SAME_ISLAND),
        "spci_paper": true_herald_prob(p, params.n_islands, HeraldMode.SPCI_PAPER),
        "spci_exact": true_herald_prob(p, params.n_islands, HeraldMode.SPCI_EXACT),
    }
    sigma = est_true.std_error
    deviation_sigma = {
        key: ((est_true.value - value) / sigma if sigma > 0 else math.inf)
        for key, value in analytic.items()
    }
    counts = dict(est_true.sub_counts)
    _emit_json(
        {
            "params": _params_dict(params),
            "pulses": args.pulses,
            "seed": args.seed,
            "policy": policy.value,
            "true_herald": {
                "estimate": est_true.value,
                "std_error": est_true.std_error,
                "closed_form": analytic,
                "deviation_sigma": deviation_sigma,
            },
            "pair_rate": {
                "estimate": est_rate.value,
                "std_error": est_rate.std_error,
                "sub_counts": dict(est_rate.sub_counts),
            },
            "sub_counts": counts,
            "true_false_ratio": (
                counts["true"] / counts["false"] if counts["false"] else None
            ),
        }
    )
    return EXIT_OK


def _cmd_oracle(args: argparse.Namespace) -> int:
    params = _resolve_params(args)
    token = args.pattern.strip().lower()
    pattern = HeraldPattern.parse(_PATTERN_ALIASES.get(token, token))
    prob_oracle, conditional = conditional_signal_state(
        params.gain_minus_one,
        params.eta_t,
        pattern,
        cutoff=args.cutoff,
        tail_budget=args.tail_budget,
    )
    delivered = propagate_signals(conditional, params.eta_r)
    oracle = bell_metrics(delivered)
    blocks = build_gaussian_blocks(params.gain_minus_one, params.eta_t, params.eta_r)
    s, e = prop_bell_probs(blocks, params.eta_r)
    closed_herald = herald_prob_island(params.gain_minus_one, params.eta_t) / 4.0
    closed_loadable = prop_loadable_prob(blocks, params.eta_r)
    matched = oracle.matched(pattern.bell_class)
    mismatched = oracle.mismatched(pattern.bell_class)
    rows = {
        "herald_prob": (prob_oracle, closed_herald),
        "matched_bell": (matched, s),
        "mismatched_bell_max_delta": (max(mismatched, key=lambda v: abs(v - e)), e),
        "loadable": (oracle.loadable, closed_loadable),
        "off_diagonal_max": (oracle.off_diagonal_max, 0.0),
    }
    report = {}
    worst = 0.0
    for name, (got, want) in rows.items():
        delta = abs(got - want)
        worst = max(worst, delta)
        report[name] = {"oracle": got, "closed_form": want, "abs_delta": delta}
    _emit_json(
        {
            "params": _params_dict(params),
            "pattern": str(pattern),
            "cutoff": args.cutoff,
            "tail_budget": args.tail_budget,
            "tolerance": args.tolerance,
            "comparison": report,
            "max_abs_delta": worst,
            "within_tolerance": worst <= args.tolerance,
        }
    )
    if worst > args.tolerance:
        print(
            f"oracle deviation {worst:.3e} exceeds tolerance {args.tolerance:.3e}",
            file=sys.stderr,
        )
        return EXIT_TOLERANCE
    return EXIT_OK


def _cmd_figures(args: argparse.Namespace) -> int:
    for path in write_all_figures(args.outdir):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zalm-islands",
        description="Islands-based ZALM source: metrics, sweeps, solvers, Monte Carlo, oracle checks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_metrics = sub.add_parser("metrics", help="scalar metric bundle at one configuration")
    _add_param_flags(p_metrics)
    p_metrics.add_argument("--format", choices=("json", "csv"), default="json")
    p_metrics.set_defaults(func=_cmd_metrics)

    p_sweep = sub.add_parser("sweep", help="write one figure table or a custom sweep as CSV")
    _add_param_flags(p_sweep, need_gain=True)
    p_sweep.add_argument("--figure", type=int, choices=FIGURE_IDS, default=None,
                         help="canonical figure id")
    p_sweep.add_argument("--variable", choices=("gain-minus-one", "eta-t", "eta-r"), default=None,
                         help="custom sweep variable")
    p_sweep.add_argument("--min", type=str, default=None)
    p_sweep.add_argument("--max", type=str, default=None)
    p_sweep.add_argument("--steps", type=int, default=101)
    p_sweep.add_argument("--log", action="store_true", help="space the custom axis geometrically")
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_solve = sub.add_parser("solve", help="invert a metric for gain or island count")
    p_solve.add_argument("what", choices=("gain", "islands"))
    _add_param_flags(p_solve, need_gain=False)
    p_solve.add_argument("--metric", choices=("fraction", "fidelity"), default="fraction",
                         help="metric to invert when solving gain")
    p_solve.add_argument("--value", type=str, default=None, help="target metric value")
    p_solve.add_argument("--target-p-true", type=str, default=None,
                         help="target true-herald probability when solving islands")
    p_solve.set_defaults(func=_cmd_solve)

    p_mc = sub.add_parser("mc", help="Monte Carlo herald and rate estimates")
    _add_param_flags(p_mc)
    p_mc.add_argument("--pulses", type=int, default=1_000_000)
    p_mc.add_argument("--seed", type=int, default=12345)
    p_mc.add_argument("--policy", choices=("uniform-random", "lowest-index"),
                      default="uniform-random")
    p_mc.set_defaults(func=_cmd_mc)

    p_oracle = sub.add_parser("oracle", help="Fock-space check of the closed forms")
    _add_param_flags(p_oracle)
    p_oracle.add_argument("--pattern", default="pm",
                          help="herald sign pattern: pp, pm, mp, mm (H sign then V sign)")
    p_oracle.add_argument("--cutoff", type=int, default=4)
    p_oracle.add_argument("--tolerance", type=float, default=1e-8)
    p_oracle.add_argument("--tail-budget", type=float, default=1e-5,
                          help="acceptable truncated squeezed-state weight")
    p_oracle.set_defaults(func=_cmd_oracle)

    p_fig = sub.add_parser("figures", help="write all seven canonical figure tables")
    p_fig.add_argument("--outdir", required=True)
    p_fig.set_defaults(func=_cmd_figures)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_PARAMS
    except UnachievableTargetError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_UNACHIEVABLE
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    except ZalmError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_PARAMS
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_PARAMS


if __name__ == "__main__":
    sys.exit(main())
