"""Command-line interface.

Subcommands::

    outcap sweep CONFIG.json [--output PATH]
    outcap crossing RESULTS.csv SCENARIO BITS
    outcap quantizer train (--samples FILE | --scenario LABEL ...) --output Q.csv
    outcap quantizer dump Q.csv
    outcap capacity CHANNEL.csv
    outcap outage GRID.csv --gamma G
    outcap selftest

Exit codes: 0 success, 1 malformed input (config, scenario, target),
2 I/O failure, 3 self-test failure.
"""

import argparse
import json
import sys
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from . import io as outio
from .dmc import channel_capacity
from .outage import estimation_induced_outage_capacity
from .sim import Scenario, SweepResult, draw_effective_amplitudes, parse_label, run_sweep, snr_for_rate

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_SELFTEST = 0, 1, 2, 3


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"config key {key!r}: {message}")
        self.key = key


@dataclass
class RunConfig:
    snr_db_list: List[float]
    gamma: float
    rice_factor_db: float
    train_lengths: List[Union[int, str]]
    feedback_modes: List[str]
    n_samples: int
    seed: int
    output: str
    p_train_policy: Union[str, float] = "equal_to_data"
    workers: int = 1

    REQUIRED = ("snr_db_list", "gamma", "rice_factor_db", "train_lengths",
                "feedback_modes", "n_samples", "seed", "output")
    OPTIONAL = ("p_train_policy", "workers")

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        for key in raw:
            if key not in cls.REQUIRED + cls.OPTIONAL:
                raise ConfigError(key, "unknown key")
        for key in cls.REQUIRED:
            if key not in raw:
                raise ConfigError(key, "missing")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def validate(self):
        for key in ("snr_db_list", "train_lengths", "feedback_modes"):
            value = getattr(self, key)
            if not isinstance(value, list) or not value:
                raise ConfigError(key, "must be a nonempty list")
        if not all(_is_number(s) for s in self.snr_db_list):
            raise ConfigError("snr_db_list", "entries must be numbers")
        if not _is_number(self.gamma) or not 0 < self.gamma < 1:
            raise ConfigError("gamma", "must lie in (0, 1)")
        if not _is_number(self.rice_factor_db):
            raise ConfigError("rice_factor_db", "must be a number")
        for n in self.train_lengths:
            if n != "perfect" and not (isinstance(n, int) and not isinstance(n, bool) and n >= 1):
                raise ConfigError("train_lengths", f"entry {n!r} is neither 'perfect' nor an integer >= 1")
        for mode in self.feedback_modes:
            try:
                parse_label(f"perfect/{mode}")
            except (ValueError, TypeError):
                raise ConfigError("feedback_modes", f"entry {mode!r} is not none, unlimited or rfb(B)") from None
        if not isinstance(self.n_samples, int) or self.n_samples < 100:
            raise ConfigError("n_samples", "must be an integer >= 100")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed", "must be a nonnegative integer")
        if not isinstance(self.output, str) or not self.output:
            raise ConfigError("output", "must be a path string")
        if self.p_train_policy != "equal_to_data":
            if not _is_number(self.p_train_policy) or not self.p_train_policy > 0:
                raise ConfigError("p_train_policy", "must be 'equal_to_data' or a positive number")
        if not isinstance(self.workers, int) or self.workers < 0:
            raise ConfigError("workers", "must be an integer >= 0")

    def scenarios(self):
        p_train = None if self.p_train_policy == "equal_to_data" else float(self.p_train_policy)
        out = []
        for n in self.train_lengths:
            csir = "perfect" if n == "perfect" else f"estimated(N={n})"
            for mode in self.feedback_modes:
                out.append(parse_label(f"{csir}/{mode}", gamma=float(self.gamma),
                                       rice_factor_db=float(self.rice_factor_db), p_train=p_train))
        return out


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and np.isfinite(x)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from None
    return RunConfig.from_dict(raw)


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def cmd_sweep(args):
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except OSError as exc:
        _err(f"cannot read config: {exc}")
        return EXIT_IO
    result = run_sweep(cfg.scenarios(), cfg.snr_db_list, cfg.n_samples, cfg.seed,
                       workers=cfg.workers)
    output = args.output or cfg.output
    try:
        result.to_csv(output)
    except OSError as exc:
        _err(f"cannot write {output}: {exc}")
        return EXIT_IO
    print(f"wrote {len(result.rows)} rows to {output}")
    return EXIT_OK


def cmd_crossing(args):
    try:
        result = SweepResult.from_csv(args.csv)
    except OSError as exc:
        _err(f"cannot read {args.csv}: {exc}")
        return EXIT_IO
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    try:
        snr = snr_for_rate(result, args.scenario, args.bits)
    except KeyError:
        _err(f"scenario {args.scenario!r} not in {args.csv}; have {result.labels()}")
        return EXIT_CONFIG
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    print(f"{snr:.1f}")
    return EXIT_OK


def cmd_quantizer_train(args):
    from .feedback import lloyd_max_train

    try:
        if args.samples:
            samples = np.loadtxt(args.samples, delimiter=",", ndmin=1)
        else:
            scenario = parse_label(args.scenario, gamma=args.gamma,
                                   rice_factor_db=args.rice_factor_db, snr_db=args.snr_db)
            samples = draw_effective_amplitudes(scenario, args.n_samples, args.seed)
    except OSError as exc:
        _err(f"cannot read samples: {exc}")
        return EXIT_IO
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    try:
        q = lloyd_max_train(samples, 2 ** args.bits)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    try:
        outio.write_quantizer_csv(args.output, q)
    except OSError as exc:
        _err(f"cannot write {args.output}: {exc}")
        return EXIT_IO
    print(f"trained {q.n_cells} levels, distortion {q.distortion_:.6g}, wrote {args.output}")
    return EXIT_OK


def cmd_quantizer_dump(args):
    try:
        q = outio.read_quantizer_csv(args.path)
    except OSError as exc:
        _err(f"cannot read {args.path}: {exc}")
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    print("levels: " + " ".join(f"{v:.6g}" for v in q.levels_))
    print("boundaries: " + " ".join(f"{v:.6g}" for v in q.boundaries_))
    print(f"distortion: {q.distortion_:.6g}")
    return EXIT_OK


def cmd_capacity(args):
    try:
        w = outio.read_channel_csv(args.channel)
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    cap, p = channel_capacity(w, tol=args.tol)
    print(f"capacity_bits={cap:.9f}")
    print("input=" + ",".join(f"{v:.9f}" for v in p.probs))
    return EXIT_OK


def cmd_outage(args):
    try:
        grid = outio.read_grid_csv(args.grid)
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    res = estimation_induced_outage_capacity(grid, args.gamma, tol=args.tol)
    print(f"outage_capacity_bits={res.capacity:.9f}")
    print("input=" + ",".join(f"{v:.9f}" for v in res.argmax.probs))
    print("confidence_set=" + ",".join(str(i) for i in res.confidence_set.indices))
    return EXIT_OK


def cmd_selftest(args):
    from .selftest import run_selftest

    return EXIT_OK if run_selftest() else EXIT_SELFTEST


def build_parser():
    parser = argparse.ArgumentParser(prog="outcap", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a Monte Carlo SNR sweep from a JSON config")
    p.add_argument("config")
    p.add_argument("--output", help="override the config's output path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("crossing", help="SNR (dB) where a curve reaches a rate")
    p.add_argument("csv")
    p.add_argument("scenario")
    p.add_argument("bits", type=float)
    p.set_defaults(func=cmd_crossing)

    q = sub.add_parser("quantizer", help="Lloyd-Max quantizer tooling")
    qsub = q.add_subparsers(dest="action", required=True)
    p = qsub.add_parser("train")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--samples", help="file of comma/newline separated samples")
    src.add_argument("--scenario", help="train on simulated r* for this scenario label")
    p.add_argument("--bits", type=int, default=2)
    p.add_argument("--gamma", type=float, default=0.01)
    p.add_argument("--rice-factor-db", type=float, default=0.0)
    p.add_argument("--snr-db", type=float, default=5.0)
    p.add_argument("--n-samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_quantizer_train)
    p = qsub.add_parser("dump")
    p.add_argument("path")
    p.set_defaults(func=cmd_quantizer_dump)

    p = sub.add_parser("capacity", help="capacity of a channel matrix CSV")
    p.add_argument("channel")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("outage", help="outage capacity of a posterior grid CSV")
    p.add_argument("grid")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_outage)

    p = sub.add_parser("selftest", help="run the oracle suites")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
