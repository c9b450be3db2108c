"""
Command-line front end.

    qkrlab rates    [--qp 0.07] [--out DIR]
    qkrlab simulate --n 256 --t 32 --code hamming7-4 --qber 0.02 ... --seed 1 [--out DIR]
    qkrlab verify   [--suite NAME]

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines, then command-line flags. ``--show-config`` prints the
merged settings and exits.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import ratecore, verify
from .ecckit import CODE_NAMES
from .protocol import SessionConfig, run_session
from .qchannel import EVE_KINDS

COMMANDS = ("rates", "simulate", "verify")

TRANSCRIPT_COLUMNS = ("session", "round", "direction", "accepted", "q", "flips",
                      "consumed", "recycled", "pending", "kv_recycling_rate")
SUMMARY_COLUMNS = ("session", "rounds", "accepted", "accept_rate", "mean_q", "empirical_qber",
                   "mean_kv_recycling_rate", "predicted_kv_recycling_rate",
                   "consumed_key_rate", "consumed_key_rate_accepted", "predicted_consumed_key_rate",
                   "kb_leakage_bits", "mac_leakage_bits", "mac_epsilon_spent",
                   "sync_failures", "pool_balanced", "error")


@dataclass
class RunConfig:
    n: int = 256
    t: int = 32
    code: str = "hamming7-4"
    qber: float = 0.0
    predicted_qber: float = 0.05
    eve: str = "passive"
    rounds: int = 20
    sessions: int = 1
    seed: int | None = None
    out: str = "."
    qp: float = 0.07
    suite: str | None = None

    def validate(self, command: str | None):
        if self.code not in CODE_NAMES:
            raise ValueError(f"code must be one of {CODE_NAMES}, got {self.code!r}")
        if self.eve not in EVE_KINDS:
            raise ValueError(f"eve must be one of {EVE_KINDS}, got {self.eve!r}")
        if not 0.0 <= self.qber <= 0.5:
            raise ValueError(f"qber {self.qber} outside [0, 0.5]")
        if not 0.0 <= self.predicted_qber < 0.5:
            raise ValueError(f"predicted-qber {self.predicted_qber} outside [0, 0.5)")
        if not 0.0 <= self.qp < 0.5:
            raise ValueError(f"qp {self.qp} outside [0, 0.5)")
        if self.n < 1 or self.t < 1 or self.rounds < 0 or self.sessions < 1:
            raise ValueError("n, t and sessions must be positive and rounds non-negative")
        if command == "simulate" and self.seed is None:
            raise ValueError("simulate needs a seed (--seed or 'seed = ...' in the config file)")
        if self.suite is not None and self.suite not in verify.SUITES:
            raise ValueError(f"suite must be one of {sorted(verify.SUITES)}, got {self.suite!r}")


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, raw: str):
    kind = _TYPES[key]
    if raw.strip().lower() in ("", "none"):
        if "None" in kind:
            return None
        raise ValueError(f"{key} needs a value")
    if kind.startswith("int"):
        return int(raw)
    if kind.startswith("float"):
        return float(raw)
    return raw.strip()


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, dashes and
    underscores in keys are interchangeable."""
    text = Path(path).read_text(encoding="utf-8")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.read_string("[run]\n" + text, source=str(path))
    out = {}
    for key, raw in parser["run"].items():
        name = key.replace("-", "_")
        if name not in _TYPES:
            raise ValueError(f"{path}: unknown setting {key!r}")
        out[name] = _convert(name, raw)
    return out


def format_value(v) -> str:
    """CSV cell: 9 significant digits for reals, empty for NaN."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else f"{float(v):.9g}"
    return str(v)


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def _ensure_dir(out: str) -> Path:
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValueError(f"cannot create output directory {out}: {exc}") from exc
    return path


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_rates(cfg: RunConfig) -> list[Path]:
    out = _ensure_dir(cfg.out)
    fig1 = [{"Q": s.realQ, "recycling_rate": s.value} for s in ratecore.recycling_curve()]
    files = []
    for name, curve in (("fig1.csv", fig1),
                        ("fig2.csv", ratecore.consumption_curve()),
                        ("fig3.csv", ratecore.rate_curve(cfg.qp))):
        path = out / name
        columns = list(curve[0])
        try:
            write_csv(path, columns, ([row[c] for c in columns] for row in curve))
        except OSError as exc:
            raise ValueError(f"cannot write {path}: {exc}") from exc
        files.append(path)
    return files


def session_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0] >> 1)


def simulate(cfg: RunConfig):
    """Run the sessions; returns ``(transcript rows, summary rows)``."""
    transcript, summary = [], []
    for s in range(cfg.sessions):
        scfg = SessionConfig(n=cfg.n, t=cfg.t, code=cfg.code, predicted_qber=cfg.predicted_qber,
                             seed=session_seed(cfg.seed, s))
        stats = run_session(scfg, cfg.qber, cfg.eve, cfg.rounds, session_index=s)
        for rec in stats.records:
            transcript.append(tuple(asdict(rec)[c] for c in TRANSCRIPT_COLUMNS))
        predicted_consumed = (ratecore.consumed_key_rate(cfg.predicted_qber, cfg.qber)
                              if cfg.predicted_qber < 0.5 else math.nan)
        summary.append((
            s, stats.rounds, stats.accepted, stats.accept_rate, stats.mean_q, stats.empirical_qber,
            stats.mean_kv_recycling_rate,
            ratecore.min_recycling_rate(stats.empirical_qber) if stats.rounds else math.nan,
            stats.consumed_key_rate, stats.consumed_key_rate_accepted, predicted_consumed,
            stats.kb_leakage_bits, stats.mac_leakage_bits, stats.mac_epsilon_spent,
            stats.sync_failures, stats.pool_balanced, stats.error,
        ))
    return transcript, summary


def aggregate(summary) -> dict:
    """Round-weighted means over sessions."""
    idx = {c: i for i, c in enumerate(SUMMARY_COLUMNS)}
    rounds = sum(r[idx["rounds"]] for r in summary)
    if not rounds:
        return {"sessions": len(summary), "rounds": 0}

    def mean(col):
        vals = [(r[idx[col]], r[idx["rounds"]]) for r in summary if not math.isnan(r[idx[col]])]
        w = sum(n for _, n in vals)
        return sum(v * n for v, n in vals) / w if w else math.nan

    return {
        "sessions": len(summary),
        "rounds": rounds,
        "accept_rate": mean("accept_rate"),
        "empirical_qber": mean("empirical_qber"),
        "mean_kv_recycling_rate": mean("mean_kv_recycling_rate"),
        "predicted_kv_recycling_rate": mean("predicted_kv_recycling_rate"),
        "consumed_key_rate": mean("consumed_key_rate"),
        "consumed_key_rate_accepted": mean("consumed_key_rate_accepted"),
        "predicted_consumed_key_rate": summary[0][idx["predicted_consumed_key_rate"]],
        "sync_failures": sum(r[idx["sync_failures"]] for r in summary),
        "errors": sum(1 for r in summary if r[idx["error"]]),
    }


def cmd_simulate(cfg: RunConfig) -> dict:
    out = _ensure_dir(cfg.out)
    transcript, summary = simulate(cfg)
    try:
        write_csv(out / "transcript.csv", TRANSCRIPT_COLUMNS, transcript)
        write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary)
    except OSError as exc:
        raise ValueError(f"cannot write to {out}: {exc}") from exc
    for row in summary:
        if row[-1]:
            print(f"session {row[0]}: {row[-1]}", file=sys.stderr)
    return aggregate(summary)


def cmd_verify(cfg: RunConfig) -> bool:
    results = verify.run_suites([cfg.suite] if cfg.suite else None)
    for res in results:
        print(res.line())
    return all(r.passed for r in results)


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subparser from clobbering the same flag given earlier
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=argparse.SUPPRESS, help="file of 'key = value' settings")
    p.add_argument("--show-config", action="store_true", default=argparse.SUPPRESS,
                   help="print the merged settings and exit")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="qkrlab", parents=[common],
                                     description="Error-tolerant quantum key recycling lab.")
    sub = parser.add_subparsers(dest="command")
    S = argparse.SUPPRESS

    rates = sub.add_parser("rates", parents=[common], help="write fig1/fig2/fig3 CSV curves")
    rates.add_argument("--qp", type=float, default=S, help="predicted QBER for fig3 (default 0.07)")
    rates.add_argument("--out", default=S, help="output directory")

    sim = sub.add_parser("simulate", parents=[common], help="Monte-Carlo protocol sessions")
    sim.add_argument("--n", type=int, default=S, help="payload bits per message")
    sim.add_argument("--t", type=int, default=S, help="MAC tag bits (4, 8, 16, 32, 64)")
    sim.add_argument("--code", choices=CODE_NAMES, default=S)
    sim.add_argument("--qber", type=float, default=S, help="channel bit-flip rate")
    sim.add_argument("--predicted-qber", dest="predicted_qber", type=float, default=S)
    sim.add_argument("--eve", choices=EVE_KINDS, default=S)
    sim.add_argument("--rounds", type=int, default=S)
    sim.add_argument("--sessions", type=int, default=S)
    sim.add_argument("--seed", type=int, default=S)
    sim.add_argument("--out", default=S, help="output directory")

    ver = sub.add_parser("verify", parents=[common], help="run property-verification suites")
    ver.add_argument("--suite", choices=sorted(verify.SUITES), default=S)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    settings = asdict(RunConfig())
    if getattr(args, "config", None):
        settings.update(read_config_file(args.config))
    for name in _TYPES:
        if hasattr(args, name):
            settings[name] = getattr(args, name)
    return RunConfig(**settings)


def show_config(cfg: RunConfig) -> str:
    lines = []
    for key, value in asdict(cfg).items():
        shown = "" if value is None else value
        lines.append(f"{key.replace('_', '-')} = {shown}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if getattr(args, "show_config", False):
            print(show_config(cfg))
            return 0
        if args.command is None:
            parser.print_help()
            return 2
        cfg.validate(args.command)
        if args.command == "rates":
            for path in cmd_rates(cfg):
                print(path)
            return 0
        if args.command == "simulate":
            for key, value in cmd_simulate(cfg).items():
                print(f"{key} = {format_value(value)}")
            return 0
        return 0 if cmd_verify(cfg) else 1
    except (ValueError, OSError) as exc:
        print(f"qkrlab: error: {exc}", file=sys.stderr)
        return 2
