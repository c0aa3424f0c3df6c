import argparse
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from ofdm_svr.harness import run_scenario  # noqa: E402


def parser(description: str, default_out: str, frames: int = 100) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--frames", type=int, default=frames, help="frames per sweep point")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", default=default_out, help="CSV path")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run_and_print(config, out: str, verbose: bool) -> None:
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(message)s")
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    records = run_scenario(config, out)
    print(f"{'method':>6} {'snr':>6} {'sir':>6} {'p':>5} {'ber':>10} {'mse_db':>8}")
    for r in records:
        sir = "-" if r.sir_db is None else f"{r.sir_db:g}"
        print(f"{r.method:>6} {r.snr_db:6g} {sir:>6} {r.p:5g} {r.ber:10.4g} {r.channel_mse_db:8.2f}")
    print(f"wrote {len(records)} records to {out}")
