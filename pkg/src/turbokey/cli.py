"""``turbokey`` command: BER / key-rate sweeps over the total mean transmittance.

The config is a flat ``key = value`` file; ``#`` starts a comment. Keys::

    mode              ber | skr | skr_optimized | validate
    receiver          kennedy | homodyne | both
    attack            individual | collective           (key-rate modes)
    channel.eta_bar   0.1, 0.2, 0.5   or   start:stop:count
    channel.n_branches, channel.sigma0_sq, channel.rho
    signal.beta_sq    number | optimize
    signal.beta_sq_range  lo, hi                        (optimisation interval)
    overlay.axis      beta_sq | sigma0_sq | rho | n_branches
    overlay.values    list as for channel.eta_bar
    mc.trials, mc.seed, mc.stream_id
    validate.quantity ber | skr
    output.path, output.format (csv | json)
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from . import detection, montecarlo, qkd
from .channel import TurbulenceParams
from .detection import Receiver, SignalAmplitude
from .errors import DomainError, NumericalError
from .qkd import AttackModel

log = logging.getLogger("turbokey")

BER_COLUMNS = ["eta_bar", "beta_sq", "n_branches", "sigma0_sq", "rho", "receiver", "ber", "mc_ber", "mc_stderr", "error"]
SKR_COLUMNS = [
    "eta_bar", "beta_sq", "n_branches", "sigma0_sq", "rho", "attack", "receiver",
    "skr", "i_ae", "kept_fraction", "beta_sq_opt", "mc_skr", "mc_stderr", "error",
]
MODES = ("ber", "skr", "skr_optimized", "validate")
OVERLAY_AXES = ("beta_sq", "sigma0_sq", "rho", "n_branches")
DEFAULT_ETA_BAR = tuple(round(0.1 * k, 10) for k in range(1, 11))


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class SweepConfig:
    mode: str = "ber"
    receivers: tuple = (Receiver.KENNEDY, Receiver.HOMODYNE)
    attack: AttackModel = AttackModel.COLLECTIVE
    eta_bar: tuple = DEFAULT_ETA_BAR
    n_branches: int = 4
    sigma0_sq: float = 0.1
    rho: float = 0.0
    beta_sq: float | None = 2.0  # None: optimise over beta_sq_range
    beta_sq_range: tuple = (0.1, 6.0)
    overlay_axis: str | None = None
    overlay_values: tuple = ()
    mc: montecarlo.McConfig | None = None
    validate_quantity: str = "ber"
    output_path: str | None = None
    output_format: str = "csv"

    @property
    def quantity(self):
        if self.mode == "validate":
            return self.validate_quantity
        return "ber" if self.mode == "ber" else "skr"

    @property
    def optimize(self):
        return self.quantity == "skr" and (self.mode == "skr_optimized" or self.beta_sq is None)

    @property
    def columns(self):
        return BER_COLUMNS if self.quantity == "ber" else SKR_COLUMNS


def _grid(text, cast=float):
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("range must be start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("range count must be >= 1")
        if count == 1:
            values = [start]
        else:
            values = [start + (stop - start) * k / (count - 1) for k in range(count)]
        values = [cast(round(v, 12)) for v in values]
    else:
        values = [cast(v) for v in text.split(",") if v.strip()]
    if not values:
        raise ValueError("grid is empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("grid must be strictly increasing")
    if any(not math.isfinite(v) for v in values):
        raise ValueError("grid values must be finite")
    return tuple(values)


def _int(text):
    value = float(text)
    if value != int(value):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _choice(options):
    def parse(text):
        text = text.strip().lower()
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return parse


def _pair(text):
    lo, hi = (float(v) for v in text.split(","))
    return lo, hi


def _beta_sq(text):
    return None if text.strip().lower() == "optimize" else float(text)


_PARSERS = {
    "mode": _choice(MODES),
    "receiver": _choice(("kennedy", "homodyne", "both")),
    "attack": AttackModel.parse,
    "channel.eta_bar": _grid,
    "channel.n_branches": _int,
    "channel.sigma0_sq": float,
    "channel.rho": float,
    "signal.beta_sq": _beta_sq,
    "signal.beta_sq_range": _pair,
    "overlay.axis": _choice(OVERLAY_AXES),
    "overlay.values": _grid,
    "mc.trials": _int,
    "mc.seed": _int,
    "mc.stream_id": _int,
    "validate.quantity": _choice(("ber", "skr")),
    "output.path": str.strip,
    "output.format": _choice(("csv", "json")),
}


def parse_config(text, source="<config>"):
    """Parse config text into a SweepConfig; errors name the offending line."""
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} (first set on line {lines[key]})")
        try:
            values[key] = _PARSERS[key](value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
        lines[key] = lineno

    def fail(key, message):
        where = f"{source}:{lines[key]}" if key in lines else source
        raise ConfigError(f"{where}: {message}")

    kwargs = {}
    simple = {
        "mode": "mode", "attack": "attack", "channel.eta_bar": "eta_bar",
        "channel.n_branches": "n_branches", "channel.sigma0_sq": "sigma0_sq", "channel.rho": "rho",
        "signal.beta_sq": "beta_sq", "signal.beta_sq_range": "beta_sq_range",
        "overlay.axis": "overlay_axis", "overlay.values": "overlay_values",
        "validate.quantity": "validate_quantity", "output.path": "output_path", "output.format": "output_format",
    }
    for key, attr in simple.items():
        if key in values:
            kwargs[attr] = values[key]
    if "receiver" in values:
        r = values["receiver"]
        kwargs["receivers"] = (Receiver.KENNEDY, Receiver.HOMODYNE) if r == "both" else (Receiver(r),)
    if "mc.trials" in values:
        try:
            kwargs["mc"] = montecarlo.McConfig(
                trials=values["mc.trials"], seed=values.get("mc.seed", 0), stream_id=values.get("mc.stream_id", 0)
            )
        except DomainError as exc:
            fail("mc.trials", str(exc))
    elif "mc.seed" in values or "mc.stream_id" in values:
        fail("mc.seed" if "mc.seed" in values else "mc.stream_id", "mc.trials is required when mc keys are given")

    config = SweepConfig(**kwargs)

    if any(not 0.0 < v <= 1.0 for v in config.eta_bar):
        fail("channel.eta_bar", "eta_bar values must lie in (0, 1]")
    if ("overlay.axis" in values) != ("overlay.values" in values):
        fail("overlay.axis" if "overlay.axis" in values else "overlay.values", "overlay.axis and overlay.values go together")
    if config.overlay_axis == "n_branches" and any(v != int(v) for v in config.overlay_values):
        fail("overlay.values", "n_branches overlay values must be integers")
    if config.overlay_axis == "beta_sq" and config.optimize:
        fail("overlay.axis", "cannot overlay beta_sq while optimising it")
    lo, hi = config.beta_sq_range
    if config.optimize and not 0.0 < lo <= hi:
        fail("signal.beta_sq_range", "need 0 < lo <= hi")
    if config.beta_sq is not None and config.beta_sq < 0.0:
        fail("signal.beta_sq", "beta_sq must be >= 0")
    if config.beta_sq is None and config.quantity == "ber":
        fail("signal.beta_sq", "beta_sq = optimize only applies to key-rate modes")
    if config.mode == "validate" and config.mc is None:
        fail("mode", "validate mode needs mc.trials")

    for point in _points(config):
        try:
            _channel(point)
            if point["beta_sq"] is not None and point["beta_sq"] < 0.0:
                raise DomainError("beta_sq must be >= 0")
        except DomainError as exc:
            fail("overlay.values" if config.overlay_axis else "channel.rho", f"invalid channel at {point}: {exc}")
    return config


def _points(config):
    """Grid points in output order: eta_bar, then overlay value, then receiver."""
    overlay = config.overlay_values if config.overlay_axis else (None,)
    for eta_bar in config.eta_bar:
        for value in overlay:
            point = {
                "eta_bar": eta_bar,
                "beta_sq": None if config.optimize else config.beta_sq,
                "n_branches": config.n_branches,
                "sigma0_sq": config.sigma0_sq,
                "rho": config.rho,
            }
            if config.overlay_axis:
                point[config.overlay_axis] = int(value) if config.overlay_axis == "n_branches" else value
            for receiver in config.receivers:
                yield dict(point, receiver=receiver)


def _channel(point):
    return TurbulenceParams.from_eta_bar(point["n_branches"], point["eta_bar"], point["sigma0_sq"], point["rho"])


def evaluate_point(config, point, stream_id):
    """One output row as a dict keyed by column name."""
    row = dict.fromkeys(config.columns)
    row.update({k: point[k] for k in ("eta_bar", "beta_sq", "n_branches", "sigma0_sq", "rho")})
    receiver = point["receiver"]
    row["receiver"] = receiver.value
    mc = replace(config.mc, stream_id=stream_id) if config.mc else None
    try:
        params = _channel(point)
        if config.quantity == "ber":
            beta = SignalAmplitude.from_photons(point["beta_sq"])
            row["ber"] = detection.ber(receiver, beta, params).ber
            if mc:
                est = montecarlo.mc_ber(receiver, beta, params, mc)
                row["mc_ber"], row["mc_stderr"] = est.value, est.stderr
            return row

        row["attack"] = config.attack.value
        beta_sq = point["beta_sq"]
        if config.optimize:
            beta_sq, _ = qkd.optimize_beta(params, config.attack, receiver, config.beta_sq_range)
            row["beta_sq"], row["beta_sq_opt"] = None, beta_sq
        beta = SignalAmplitude.from_photons(beta_sq)
        result = qkd.skr(receiver, beta, params, config.attack)
        row.update(skr=result.skr, i_ae=result.i_ae, kept_fraction=result.kept_fraction)
        if mc:
            est = montecarlo.mc_skr(receiver, beta, params, config.attack, mc)
            row["mc_skr"], row["mc_stderr"] = est.value, est.stderr
    except (NumericalError, FloatingPointError) as exc:
        log.warning("numerical failure at %s: %s", point, exc)
        row["error"] = type(exc).__name__
    return row


def run_sweep(config, threads=1):
    """Evaluate every grid point; returns (rows, failed)."""
    points = list(_points(config))
    base = config.mc.stream_id if config.mc else 0
    jobs = [(p, base + i) for i, p in enumerate(points)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda job: evaluate_point(config, *job), jobs))
    else:
        rows = [evaluate_point(config, *job) for job in jobs]
    return rows, any(r["error"] for r in rows)


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_rows(config, rows):
    cols = config.columns
    if config.output_format == "json":
        clean = [{c: (None if isinstance(r[c], float) and not math.isfinite(r[c]) else r[c]) for c in cols} for r in rows]
        return json.dumps({"mode": config.mode, "columns": cols, "rows": clean}, indent=1) + "\n"
    lines = ["# " + ",".join(cols)]
    lines += [",".join(_cell(r[c]) for c in cols) for r in rows]
    return "\n".join(lines) + "\n"


def build_parser():
    p = argparse.ArgumentParser(prog="turbokey", description="BER and post-selection key-rate sweeps over turbulent channels.")
    p.add_argument("config", help="sweep config file (flat key = value)")
    p.add_argument("--output", help="output path; overrides output.path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="overrides output.format")
    p.add_argument("--threads", type=int, default=1, help="worker threads for grid points")
    p.add_argument("--seed", type=int, help="Monte Carlo seed; overrides mc.seed")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"{args.config}: {exc.strerror}", file=sys.stderr)
        return 2
    try:
        config = parse_config(text, args.config)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.seed is not None:
            if config.mc is None:
                raise ConfigError(f"{args.config}: --seed given but the config has no mc section")
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            config = replace(config, mc=replace(config.mc, seed=args.seed))
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    if args.format:
        config = replace(config, output_format=args.format)
    path = args.output or config.output_path

    rows, failed = run_sweep(config, args.threads)
    text = format_rows(config, rows)
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
