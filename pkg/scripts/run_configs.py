"""Run every ``configs/*.ini`` through the CLI and tabulate the verdicts."""

import argparse
import sys
from pathlib import Path

from cgoscatter.cli import main
from cgoscatter.config import load_config

ROOT = Path(__file__).resolve().parent.parent


def run(configs, out_root: Path) -> int:
    worst = 0
    for cfg in configs:
        kind = load_config(cfg).kind
        status = main([kind, "--config", str(cfg), "--out", str(out_root / cfg.stem)])
        print(f"{cfg.stem:20s} {kind:12s} exit={status}", flush=True)
        worst = max(worst, status)
    return worst


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("configs", nargs="*", type=Path)
    ap.add_argument("--out", type=Path, default=ROOT / "runs")
    a = ap.parse_args()
    sys.exit(run(a.configs or sorted((ROOT / "configs").glob("*.ini")), a.out))
