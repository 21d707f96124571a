"""Command-line front end.

Four subcommands over a flat key=value config file:

  analyze    delay bound and expected rate at one superframe length
  sweep      one row per feasible superframe length, optionally per alpha
  simulate   Monte Carlo delay estimates next to the analytic bound
  validate   matrix-oracle KS suite and closed-form-vs-quadrature grid

Every command emits CSV (UTF-8, UNIX newlines, stable headers); identical
manifest and seed produce byte-identical output. Probability columns use
scientific notation at full double precision, and log10(pv_bound) is
emitted alongside so values far below 1e-300 survive the trip through
linear scale.
"""

import argparse
import dataclasses
import io
import math
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.stats

from .channel_model import Scheme, zfbf_gain_samples
from .queue_sim import empirical_pv, simulate
from .scheduling import SystemConfig, build_schedule, feasible_t_super
from .snc_analysis import (
    delay_bound,
    log_mellin_service_component,
    log_mellin_service_component_oracle,
    sweep_superframe,
)

__all__ = ["RunManifest", "ConfigError", "load_config", "execute", "main"]

_CONFIG_KEYS = {
    "nt": int,
    "k_tot": int,
    "nd": int,
    "p_total_db": float,
    "alpha": float,
    "w": int,
    "scheme": str,
    "t_super": int,
    "t_super_min": int,
    "t_super_max": int,
    "alpha_list": str,
    "superframes": int,
    "replications": int,
    "seed": int,
    "warmup_superframes": int,
    "tracked_users": int,
    "out": str,
}
_REQUIRED = ("nt", "k_tot", "nd", "p_total_db", "alpha", "w", "scheme")

# documented defaults for optional command parameters
_DEFAULTS = dict(
    superframes=100_000,
    replications=10,
    seed=1,
    warmup_superframes=100,
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunManifest:
    """A fully resolved run description: system config plus command knobs."""

    config: SystemConfig
    command: Optional[str] = None
    t_super: Optional[int] = None
    t_super_min: Optional[int] = None
    t_super_max: Optional[int] = None
    alpha_list: Optional[List[float]] = None
    superframes: int = _DEFAULTS["superframes"]
    replications: int = _DEFAULTS["replications"]
    seed: int = _DEFAULTS["seed"]
    warmup_superframes: int = _DEFAULTS["warmup_superframes"]
    tracked_users: Optional[int] = None
    out: Optional[str] = None


def _parse_value(key: str, raw: str, lineno: int):
    caster = _CONFIG_KEYS[key]
    try:
        if key == "alpha_list":
            return [float(tok) for tok in raw.replace(",", " ").split()]
        if key == "scheme":
            return Scheme.parse(raw)
        return caster(raw)
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: bad value for {key!r}: {raw!r} ({exc})")


def load_config(path: str) -> RunManifest:
    """Parse and validate a flat key = value config file.

    Lines are `key = value`, blank, or `#` comments. Unknown keys are
    rejected with their line number. Units: power in dB, alpha in bits per
    slot, w in slots.
    """
    values: Dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
            key, _, raw = stripped.partition("=")
            key, raw = key.strip(), raw.strip()
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            values[key] = _parse_value(key, raw, lineno)

    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    try:
        config = SystemConfig(
            nt=values["nt"],
            k_tot=values["k_tot"],
            nd=values["nd"],
            p_total_db=values["p_total_db"],
            alpha=values["alpha"],
            w=values["w"],
            scheme=values["scheme"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc))

    t_super = values.get("t_super")
    if t_super is not None:
        try:
            build_schedule(config.k_tot, t_super, config.nt)
        except ValueError as exc:
            raise ConfigError(f"t_super infeasible: {exc}")

    return RunManifest(
        config=config,
        t_super=t_super,
        t_super_min=values.get("t_super_min"),
        t_super_max=values.get("t_super_max"),
        alpha_list=values.get("alpha_list"),
        superframes=values.get("superframes", _DEFAULTS["superframes"]),
        replications=values.get("replications", _DEFAULTS["replications"]),
        seed=values.get("seed", _DEFAULTS["seed"]),
        warmup_superframes=values.get(
            "warmup_superframes", _DEFAULTS["warmup_superframes"]
        ),
        tracked_users=values.get("tracked_users"),
        out=values.get("out"),
    )


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fmt_pv(value: float) -> str:
    return format(value, ".17e")


def _write_csv(header: Sequence[str], rows: Sequence[Sequence[str]], out: Optional[str]):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(row) + "\n")
    text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


_ANALYZE_HEADER = (
    "t_super", "k_avg", "s_opt", "pv_bound", "log10_pv_bound", "stable", "expected_rate",
)


def _bound_row(alpha: Optional[float], row) -> List[str]:
    cells = [
        _fmt(row.t_super),
        _fmt(row.k_avg),
        _fmt(row.s_opt),
        _fmt_pv(row.pv_bound),
        _fmt(row.log_pv_bound / math.log(10.0)),
        _fmt(row.stable),
        _fmt(row.expected_rate),
    ]
    if alpha is not None:
        cells.insert(0, _fmt(alpha))
    return cells


def _run_analyze(manifest: RunManifest) -> int:
    if manifest.t_super is None:
        raise ConfigError("analyze requires t_super")
    rows, _ = sweep_superframe(manifest.config, [manifest.t_super])
    _write_csv(_ANALYZE_HEADER, [_bound_row(None, rows[0])], manifest.out)
    return 0


def _run_sweep(manifest: RunManifest) -> int:
    cfg = manifest.config
    full = feasible_t_super(cfg.k_tot, cfg.nt)
    lo = manifest.t_super_min if manifest.t_super_min is not None else full.start
    hi = manifest.t_super_max if manifest.t_super_max is not None else full[-1]
    if lo not in full or hi not in full or lo > hi:
        raise ConfigError(
            f"sweep range [{lo}, {hi}] outside feasible range "
            f"[{full.start}, {full[-1]}]"
        )
    alphas = manifest.alpha_list or [cfg.alpha]
    out_rows = []
    for alpha in alphas:
        rows, best = sweep_superframe(
            dataclasses.replace(cfg, alpha=alpha), range(lo, hi + 1)
        )
        for row in rows:
            cells = _bound_row(alpha, row)
            cells.append(_fmt(row.t_super == best.t_super))
            out_rows.append(cells)
    _write_csv(("alpha",) + _ANALYZE_HEADER + ("is_argmin",), out_rows, manifest.out)
    return 0


def _run_simulate(manifest: RunManifest) -> int:
    if manifest.t_super is None:
        raise ConfigError("simulate requires t_super")
    cfg = manifest.config
    result = simulate(
        cfg,
        manifest.t_super,
        manifest.superframes,
        seed=manifest.seed,
        tracked_users=manifest.tracked_users,
        replications=manifest.replications,
        warmup_superframes=manifest.warmup_superframes,
    )
    w_max = max(max(result.delay_histogram, default=0), cfg.w)
    rows = []
    for w in range(0, min(w_max, 10_000) + 1):
        est, ci = empirical_pv(result, w)
        bound = delay_bound(dataclasses.replace(cfg, w=w), manifest.t_super)
        rows.append(
            [
                _fmt(w),
                _fmt_pv(est),
                _fmt_pv(ci) if not math.isnan(ci) else "nan",
                _fmt_pv(bound.pv_bound),
                _fmt(bound.log_pv_bound / math.log(10.0)),
            ]
        )
    _write_csv(
        ("w", "empirical_pv", "ci95", "pv_bound", "log10_pv_bound"), rows, manifest.out
    )
    return 0


def _run_validate(seed: int, samples: int) -> int:
    """Self-check suite: per-case pass/fail lines, nonzero exit on failure.

    Checks the closed-form service Mellin transform against the quadrature
    oracle over the full (m, rho, s~) grid, then KS-tests the matrix-level
    zero-forcing gains against the claimed Gamma(nt-k+1, 1) law.
    """
    failures = 0
    p_hi = 10.0 ** 1.5
    for m in range(1, 9):
        worst = 0.0
        for rho in (0.1, 1.0, 10.0, p_hi / 8.0, p_hi):
            for s_tilde in (0.01, 0.1, 1.0, 5.0, 20.0):
                closed = log_mellin_service_component(rho, m, s_tilde)
                oracle = log_mellin_service_component_oracle(rho, m, s_tilde)
                worst = max(worst, abs(math.expm1(closed - oracle)))
        ok = worst <= 1e-6
        failures += 0 if ok else 1
        print(f"[{'PASS' if ok else 'FAIL'}] mellin closed form vs quadrature: "
              f"m={m} worst rel err {worst:.2e}")

    rng = np.random.default_rng(seed)
    for nt in (2, 4, 6):
        for k in range(1, nt + 1):
            gains = zfbf_gain_samples(nt, k, samples, rng)[:, 0]
            stat, pvalue = scipy.stats.kstest(gains, scipy.stats.gamma(nt - k + 1).cdf)
            ok = pvalue > 0.01
            failures += 0 if ok else 1
            print(f"[{'PASS' if ok else 'FAIL'}] zero-forcing gain KS vs "
                  f"Gamma({nt - k + 1},1): nt={nt} k={k} D={stat:.4f} p={pvalue:.3f}")

    print(f"validate: {failures} failure(s)")
    return 1 if failures else 0


def execute(manifest: RunManifest) -> int:
    """Run the manifest's command; returns the process exit status."""
    if manifest.command == "analyze":
        return _run_analyze(manifest)
    if manifest.command == "sweep":
        return _run_sweep(manifest)
    if manifest.command == "simulate":
        return _run_simulate(manifest)
    if manifest.command == "validate":
        return _run_validate(manifest.seed, samples=100_000)
    raise ConfigError(f"unknown command {manifest.command!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="miso-delay",
        description="Delay-violation bounds and queue simulation for the "
        "zero-forcing multiuser downlink.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("analyze", "sweep", "simulate", "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="path to key = value config file")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--seed", type=int, help="override the config seed")
        if name == "validate":
            p.add_argument(
                "--samples", type=int, default=100_000,
                help="KS sample count (default 100000)",
            )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            seed = args.seed if args.seed is not None else _DEFAULTS["seed"]
            if args.config:
                manifest = load_config(args.config)
                if args.seed is None:
                    seed = manifest.seed
            return _run_validate(seed, samples=args.samples)
        if not args.config:
            print(f"{args.command} requires --config", file=sys.stderr)
            return 2
        manifest = load_config(args.config)
        overrides = {"command": args.command}
        if args.out is not None:
            overrides["out"] = args.out
        if args.seed is not None:
            overrides["seed"] = args.seed
        manifest = dataclasses.replace(manifest, **overrides)
        return execute(manifest)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
