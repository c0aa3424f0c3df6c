"""Write |H(s,k)| and phase of one 350 km/h EVA frame, plus a coarse text view."""

import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

import _common  # noqa: F401  (puts src/ on the path)
from ofdm_svr.harness import PRESETS, dump_channel

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/channel.csv")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--frame", type=int, default=0)
    args = ap.parse_args()
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    h = dump_channel(replace(PRESETS["paper-table3"], master_seed=args.seed), args.out, frame_index=args.frame)
    mag_db = 20 * np.log10(np.abs(h))
    print(f"wrote {h.size} cells to {args.out}; |H| range {mag_db.min():.1f} to {mag_db.max():.1f} dB")
    shades = " .:-=+*#%@"
    lo, hi = mag_db.min(), mag_db.max()
    for s in range(0, h.shape[0], 10):
        row = mag_db[s, ::5]
        print(f"{s:4d} " + "".join(shades[int((v - lo) / (hi - lo + 1e-12) * (len(shades) - 1))] for v in row))
