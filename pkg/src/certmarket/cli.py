"""Command-line interface: solve, curves, sweep, simulate.

Configs are JSON objects with a fixed key vocabulary; unknown keys are hard
errors so a typo cannot silently corrupt a sweep. Numeric output is printed
with 17 significant digits, so every emitted CSV re-parses to the exact
binary values. Exit codes: 0 success, 2 input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Any, Optional, Sequence

from .analysis import benchmark_curves
from .beliefs import ND, OffEqPolicy, disclosed, message_probabilities, wtp_table
from .equilibrium import (
    EquilibriumReport,
    accurate_unique_equilibrium,
    enumerate_threshold_equilibria,
    two_type_noisy_vs_accurate,
)
from .errors import CertMarketError, ConfigError, SpecError
from .market import (
    DEFAULT_TOL,
    Env,
    MarketParams,
    QualitySupport,
    ThresholdProfile,
    canonical_two_type_market,
    uniform_support,
)
from .simulate import (
    CSV_COLUMNS,
    TreatmentConfig,
    metrics_csv_row,
    run_treatment,
)

_OFFEQ = {
    "pointmass": OffEqPolicy.POINT_MASS_AT_OUTCOME,
    "bayes": OffEqPolicy.BAYES_GIVEN_CERT_SET,
    "worst": OffEqPolicy.WORST_TYPE,
}

_MARKET_KEYS = {"values", "priors", "lo", "hi", "b", "c", "alpha", "env"}
_TREATMENT_KEYS = _MARKET_KEYS | {
    "treatment",
    "rounds",
    "replications",
    "seed",
    "policy",
    "markup",
    "cert_index",
    "disclose_index",
    "integer_prices",
}


def _fmt(value: Any) -> Any:
    if isinstance(value, float):
        return format(value, ".17g")
    return value


def _check_keys(raw: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown {where} keys: {', '.join(unknown)}")


def _parse_support(raw: dict) -> QualitySupport:
    has_values = "values" in raw or "priors" in raw
    has_range = "lo" in raw or "hi" in raw
    if has_values and has_range:
        raise ConfigError("give either values/priors or lo/hi, not both")
    if has_range:
        if "lo" not in raw or "hi" not in raw:
            raise ConfigError("uniform shorthand needs both lo and hi")
        return uniform_support(int(raw["lo"]), int(raw["hi"]))
    if "values" not in raw or "priors" not in raw:
        raise ConfigError("market spec needs values and priors (or lo/hi)")
    return QualitySupport(tuple(raw["values"]), tuple(raw["priors"]))


def _parse_env(raw: dict) -> Env:
    name = raw.get("env", "Noisy")
    try:
        return Env(name)
    except ValueError:
        raise ConfigError(f"unknown env {name!r} (use NoCert, Accurate, Noisy)") from None


def _scalar(raw: dict, key: str, default: Optional[float] = None) -> float:
    if key not in raw:
        if default is None:
            raise ConfigError(f"market spec is missing {key!r}")
        return default
    value = raw[key]
    if isinstance(value, list):
        raise ConfigError(f"{key!r} must be a scalar here, got a list")
    return float(value)


def _grid(raw: dict, key: str, default: Optional[float] = None) -> list[float]:
    if key not in raw:
        if default is None:
            raise ConfigError(f"spec is missing {key!r}")
        return [default]
    value = raw[key]
    if isinstance(value, list):
        if not value:
            raise ConfigError(f"{key!r} grid is empty")
        return [float(x) for x in value]
    return [float(value)]


def parse_market(raw: dict) -> MarketParams:
    """Scalar market spec (solve command)."""
    _check_keys(raw, _MARKET_KEYS, "market")
    support = _parse_support(raw)
    env = _parse_env(raw)
    alpha_default = 1.0 if env in (Env.ACCURATE, Env.NO_CERT) else None
    return MarketParams(
        support=support,
        b=_scalar(raw, "b"),
        c=_scalar(raw, "c"),
        alpha=_scalar(raw, "alpha", alpha_default),
        env=env,
    )


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return raw


def _write_rows(
    out: Optional[str], fmt: str, header: Sequence[str], rows: list[list]
) -> None:
    if fmt == "json":
        payload = [dict(zip(header, row)) for row in rows]
        text = json.dumps(payload, indent=2, sort_keys=False) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# Commands


def _gaps_cell(values: Sequence[float]) -> str:
    return " ".join(format(v, ".17g") for v in values)


def _report_row(report: EquilibriumReport) -> list:
    profile = report.profile
    return [
        profile.cert_index if profile.cert_index is not None else "",
        profile.disclose_index if profile.disclose_index is not None else "",
        report.is_equilibrium,
        report.wtp_order_ok,
        report.ex_ante_net,
        report.ex_ante_gross,
        _gaps_cell(report.cert_gaps),
        " ".join(
            f"{k}:{format(v, '.17g')}" for k, v in sorted(report.disclose_gaps.items())
        ),
        report.off_eq_policy.value,
    ]


_SOLVE_HEADER = (
    "cert_index",
    "disclose_index",
    "is_equilibrium",
    "wtp_order_ok",
    "ex_ante_net",
    "ex_ante_gross",
    "cert_gaps",
    "disclose_gaps",
    "off_eq_policy",
)


def cmd_solve(args: argparse.Namespace) -> None:
    market = parse_market(_load_config(args.config))
    reports = enumerate_threshold_equilibria(
        market, off_eq_policy=_OFFEQ[args.offeq] if args.offeq else None, tol=args.tol
    )
    _write_rows(args.out, args.format, _SOLVE_HEADER, [_report_row(r) for r in reports])


_CURVES_HEADER = (
    "alpha",
    "pr_non_bertrand",
    "pr_non_bertrand_accurate",
    "wtp_gap_accurate",
    "wtp_gap_b0",
    "wtp_gap_b",
    "profit_noisy",
    "profit_accurate",
)


def cmd_curves(args: argparse.Namespace) -> None:
    step = args.grid_step
    if not 0.0 < step <= 0.1:
        raise ConfigError(f"--grid-step must lie in (0, 0.1], got {step}")
    grid = []
    k = 0
    while True:
        alpha = k * step
        if alpha >= 1.0 - 1e-12:
            break
        grid.append(alpha)
        k += 1
    rows = benchmark_curves(grid, c=args.c, b=args.b)
    # accurate-certification reference values, computed through the engine
    accurate = canonical_two_type_market(b=args.b, c=args.c, alpha=1.0)
    profile = ThresholdProfile(2, 2)
    rho1 = message_probabilities(accurate, profile)
    table1 = wtp_table(accurate, profile)
    pr_accurate = rho1[disclosed(2)] * rho1[ND]
    gap_accurate = table1[disclosed(2)].wtp - table1[ND].wtp
    out_rows = [
        [
            r.alpha,
            r.pr_non_bertrand,
            pr_accurate,
            gap_accurate,
            r.wtp_gap_b0,
            r.wtp_gap_b,
            r.profit_noisy,
            r.profit_accurate,
        ]
        for r in rows
    ]
    _write_rows(args.out, args.format, _CURVES_HEADER, out_rows)


_SWEEP_HEADER = (
    "c",
    "alpha",
    "b",
    "env",
    "n_equilibria",
    "equilibria",
    "best_cert_index",
    "best_net",
    "best_gross",
    "noisy_beats_accurate",
    "profit_gap",
    "accurate_threshold",
)


def cmd_sweep(args: argparse.Namespace) -> None:
    raw = _load_config(args.config)
    _check_keys(raw, _MARKET_KEYS, "sweep")
    support = _parse_support(raw)
    base_env = _parse_env(raw)
    c_grid = _grid(raw, "c")
    alpha_grid = _grid(raw, "alpha", 1.0 if base_env is not Env.NOISY else None)
    b_grid = _grid(raw, "b")
    policy = _OFFEQ[args.offeq] if args.offeq else None
    rows = []
    for c in sorted(c_grid):
        for alpha in sorted(alpha_grid):
            for b in sorted(b_grid):
                if base_env is Env.NO_CERT:
                    env = Env.NO_CERT
                else:
                    env = Env.ACCURATE if alpha == 1.0 else Env.NOISY
                market = MarketParams(support, b, c, alpha, env)
                reports = enumerate_threshold_equilibria(
                    market, off_eq_policy=policy, tol=args.tol
                )
                eqs = [r for r in reports if r.is_equilibrium]
                best = max(
                    eqs, key=lambda r: (r.ex_ante_net, -(r.profile.cert_index or 0))
                ) if eqs else None
                prop2: Any = ""
                gap: Any = ""
                if market.n == 2 and env is Env.NOISY:
                    cmp = two_type_noisy_vs_accurate(market, tol=args.tol)
                    prop2 = cmp.noisy_more_profitable
                    gap = cmp.profit_gap
                v_m: Any = ""
                if env is Env.ACCURATE:
                    m = accurate_unique_equilibrium(market)
                    v_m = m if m is not None else ""
                rows.append(
                    [
                        c,
                        alpha,
                        b,
                        env.value,
                        len(eqs),
                        ";".join(
                            f"{r.profile.cert_index}:{r.profile.disclose_index}"
                            if not r.profile.is_empty
                            else "empty"
                            for r in eqs
                        ),
                        best.profile.cert_index
                        if best is not None and not best.profile.is_empty
                        else "",
                        best.ex_ante_net if best is not None else "",
                        best.ex_ante_gross if best is not None else "",
                        prop2,
                        gap,
                        v_m,
                    ]
                )
    if not rows:
        raise ConfigError("sweep grid is empty")
    _write_rows(args.out, args.format, _SWEEP_HEADER, rows)


def parse_treatment(raw: dict, seed_override: Optional[int] = None) -> TreatmentConfig:
    _check_keys(raw, _TREATMENT_KEYS, "treatment")
    support = _parse_support(raw)
    env = _parse_env(raw)
    alpha_default = 1.0 if env in (Env.ACCURATE, Env.NO_CERT) else None
    seed = seed_override if seed_override is not None else int(raw.get("seed", 0))
    cert_index = raw.get("cert_index")
    disclose_index = raw.get("disclose_index")
    return TreatmentConfig(
        support=support,
        env=env,
        b=_scalar(raw, "b", 0.0),
        c_values=tuple(_grid(raw, "c")),
        alpha_values=tuple(_grid(raw, "alpha", alpha_default)),
        rounds=int(raw.get("rounds", 0)) or _implied_rounds(raw),
        replications=int(raw["replications"]) if "replications" in raw else _missing(
            "replications"
        ),
        seed=seed,
        policy=raw.get("policy", "equilibrium"),
        markup=float(raw.get("markup", 0.0)),
        cert_index=int(cert_index) if cert_index is not None else None,
        disclose_index=int(disclose_index) if disclose_index is not None else None,
        label=str(raw.get("treatment", "")),
        integer_prices=bool(raw.get("integer_prices", False)),
    )


def _implied_rounds(raw: dict) -> int:
    c_cells = len(_grid(raw, "c"))
    a_cells = len(_grid(raw, "alpha", 1.0))
    return c_cells * a_cells


def _missing(key: str) -> Any:
    raise ConfigError(f"treatment spec is missing {key!r}")


def cmd_simulate(args: argparse.Namespace) -> None:
    config = parse_treatment(_load_config(args.config), seed_override=args.seed)
    policy = _OFFEQ[args.offeq] if args.offeq else None
    metrics = run_treatment(config, off_eq_policy=policy)
    _write_rows(args.out, args.format, CSV_COLUMNS, [metrics_csv_row(m) for m in metrics])


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="certmarket",
        description="Duopoly certification market: equilibria, sweeps, simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
        if config_required:
            p.add_argument("--config", required=True, help="JSON spec file")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL)
        p.add_argument("--offeq", choices=sorted(_OFFEQ), default=None,
                       help="off-path belief policy (default pointmass)")

    p_solve = sub.add_parser("solve", help="enumerate and verify threshold profiles")
    common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_curves = sub.add_parser(
        "curves", help="canonical two-type benchmark curve data over precision"
    )
    common(p_curves, config_required=False)
    p_curves.add_argument("--grid-step", type=float, default=0.01)
    p_curves.add_argument("--c", type=float, default=0.5, help="certification fee")
    p_curves.add_argument("--b", type=float, default=1.0, help="loss aversion")
    p_curves.set_defaults(func=cmd_curves)

    p_sweep = sub.add_parser("sweep", help="equilibrium/profit grid over c, alpha, b")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_sim = sub.add_parser("simulate", help="seeded Monte Carlo treatment run")
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (SpecError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CertMarketError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
