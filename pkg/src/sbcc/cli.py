"""Command line front end.

Three subcommands:

* ``simulate``  - Monte Carlo run, one CSV row per SNR point.
* ``model``     - closed-form vs simulated block error rate of the
                  two-state propagation model.
* ``diagnose``  - re-run one frame and dump JSON-lines records.

Configuration is a flat ``key=value`` file (``#`` comments allowed);
command line flags override file values.  Unknown keys are hard errors:
a silently ignored typo in an experiment config is worse than a failed
run.  Exit codes: 0 success, 2 bad configuration, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from .ep_model import p_bl, simulate_model
from .harness import AggregateStats, RunConfig, simulate

__all__ = ["main"]

CSV_HEADER = ("snr_db,reference,frames,ber,bler,fer,ep_freq,burst_freq,"
              "mean_burst_len,avg_window,avg_h_iters,avg_retx,throughput")
MODEL_HEADER = "p,q,L,frames,closed_form,simulated,sigma,within_3sigma"

# key -> parser; every simulate/diagnose config key must appear here
_BOOL = {"true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False}


def _as_bool(s: str) -> bool:
    try:
        return _BOOL[s.strip().lower()]
    except KeyError:
        raise ValueError(f"expected a boolean, got {s!r}")


def _as_opt_float(s: str):
    return None if s.strip().lower() in ("none", "off") else float(s)


def _as_opt_int(s: str):
    return None if s.strip().lower() in ("none", "off") else int(s)


def _as_snr_list(s: str) -> list[float]:
    vals = [float(x) for x in s.split(",") if x.strip()]
    if not vals:
        raise ValueError("snr list must be non-empty")
    return vals


_KEYS = {
    "T": int,
    "L": int,
    "frames": int,
    "snr": _as_snr_list,
    "snr_ref": str,
    "noiseless": _as_bool,
    "mode": str,
    "w": int,
    "w_init": int,
    "w_max": _as_opt_int,
    "i1": int,
    "i2": int,
    "tau": _as_opt_int,
    "theta": float,
    "gamma": _as_opt_float,
    "n_r": _as_opt_int,
    "n_r_prime": _as_opt_int,
    "cap": float,
    "maxlog": _as_bool,
    "seed": int,
    "workers": int,
    "output": str,
}


class ConfigError(ValueError):
    pass


def parse_config_file(path: str) -> dict:
    """Read a flat key=value file; unknown keys raise ConfigError."""
    out = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, "
                                  f"got {line!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in _KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = _KEYS[key](val.strip())
            except ValueError as e:
                raise ConfigError(f"{path}:{lineno}: bad value for "
                                  f"{key!r}: {e}") from e
    return out


def _merge(file_cfg: dict, args: argparse.Namespace) -> dict:
    cfg = dict(file_cfg)
    for key in _KEYS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if "w" in cfg:
        if "w_init" in cfg and cfg["w_init"] != cfg["w"]:
            raise ConfigError("give either w or w_init, not conflicting both")
        cfg["w_init"] = cfg.pop("w")
    return cfg


def _run_config(cfg: dict, snr_db: float | None) -> RunConfig:
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    kw = {k: v for k, v in cfg.items() if k in fields}
    try:
        return RunConfig(snr_db=snr_db, **kw)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def format_row(a: AggregateStats) -> str:
    snr = "nan" if a.snr_db is None else f"{a.snr_db:.6g}"
    floats = (a.ber, a.bler, a.fer, a.ep_freq, a.burst_freq,
              a.mean_burst_len, a.avg_window, a.avg_h_iters, a.avg_retx,
              a.throughput)
    return ",".join([snr, a.snr_ref, str(a.frames)]
                    + [f"{x:.8e}" for x in floats])


def _write_lines(path: str | None, lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as f:
            f.write(text)


def _cmd_simulate(args) -> int:
    cfg = _merge(parse_config_file(args.config) if args.config else {}, args)
    noiseless = cfg.pop("noiseless", False)
    snrs = cfg.pop("snr", None)
    out_path = cfg.pop("output", None)
    if noiseless:
        points = [None]
    elif snrs:
        points = snrs
    else:
        raise ConfigError("snr list must be non-empty (or set noiseless)")
    lines = [CSV_HEADER]
    for snr_db in points:
        agg = simulate(_run_config(dict(cfg, noiseless=noiseless), snr_db))
        lines.append(format_row(agg))
    _write_lines(out_path, lines)
    return 0


def _cmd_model(args) -> int:
    Ls = [int(x) for x in args.L.split(",") if x.strip()]
    if not Ls:
        raise ConfigError("L list must be non-empty")
    if args.frames < 1:
        raise ConfigError("frames must be >= 1")
    lines = [MODEL_HEADER]
    for i, L in enumerate(Ls):
        closed = p_bl(args.p, args.q, L)
        rng = np.random.default_rng(
            np.random.SeedSequence(args.seed, spawn_key=(2, i)))
        stats = simulate_model(args.p, args.q, L, args.frames, rng)
        ok = abs(stats.bler - closed) <= 3.0 * stats.bler_sigma
        lines.append(",".join([
            f"{args.p:.6g}", f"{args.q:.6g}", str(L), str(args.frames),
            f"{closed:.8e}", f"{stats.bler:.8e}", f"{stats.bler_sigma:.8e}",
            str(int(ok)),
        ]))
    _write_lines(args.output, lines)
    return 0


def _cmd_diagnose(args) -> int:
    from .harness import diagnose
    cfg = _merge(parse_config_file(args.config) if args.config else {}, args)
    snrs = cfg.pop("snr", None)
    out_path = cfg.pop("output", None)
    snr_db = snrs[0] if snrs else None
    if snr_db is None and not cfg.get("noiseless"):
        raise ConfigError("diagnose needs one snr value or noiseless")
    blocks = [int(x) for x in args.blocks.split(",")] if args.blocks else []
    try:
        records = diagnose(_run_config(cfg, snr_db), args.frame, blocks)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    _write_lines(out_path, [json.dumps(r, sort_keys=True) for r in records])
    return 0


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--T", type=int)
    p.add_argument("--L", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--snr", type=_as_snr_list,
                   help="comma separated SNR points in dB")
    p.add_argument("--snr-ref", dest="snr_ref", choices=["eb", "es"])
    p.add_argument("--noiseless", action="store_const", const=True)
    p.add_argument("--mode", choices=["none", "winext", "resync",
                                      "winext+resync", "retx", "winext+retx"])
    p.add_argument("--w", type=int, help="window size (alias for --w-init)")
    p.add_argument("--w-init", dest="w_init", type=int)
    p.add_argument("--w-max", dest="w_max", type=_as_opt_int)
    p.add_argument("--i1", type=int)
    p.add_argument("--i2", type=int)
    p.add_argument("--tau", type=_as_opt_int)
    p.add_argument("--theta", type=float)
    p.add_argument("--gamma", type=_as_opt_float,
                   help="soft BER stop threshold; 'none' disables")
    p.add_argument("--n-r", dest="n_r", type=_as_opt_int)
    p.add_argument("--n-r-prime", dest="n_r_prime", type=_as_opt_int)
    p.add_argument("--cap", type=float)
    p.add_argument("--maxlog", action="store_const", const=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output", "-o")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sbcc",
                                 description="Braided code simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="Monte Carlo run, CSV per SNR point")
    _add_sim_flags(ps)
    ps.set_defaults(func=_cmd_simulate)

    pm = sub.add_parser("model", help="propagation model closed form vs sim")
    pm.add_argument("--p", type=float, required=True)
    pm.add_argument("--q", type=float, required=True)
    pm.add_argument("--L", required=True, help="comma separated frame lengths")
    pm.add_argument("--frames", type=int, default=100000)
    pm.add_argument("--seed", type=int, default=0)
    pm.add_argument("--output", "-o")
    pm.set_defaults(func=_cmd_model)

    pd = sub.add_parser("diagnose", help="re-run one frame, JSON-lines dump")
    _add_sim_flags(pd)
    pd.add_argument("--frame", type=int, default=0,
                    help="frame index to reproduce")
    pd.add_argument("--blocks", help="comma separated block indices to dump")
    pd.set_defaults(func=_cmd_diagnose)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"sbcc: config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"sbcc: i/o error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
