"""SVR BER against SIR at SNR 30 dB for several impulse probabilities."""

from dataclasses import replace

from _common import parser, run_and_print
from ofdm_svr.harness import PRESETS

if __name__ == "__main__":
    p = parser(__doc__, "results/svr_vs_p.csv")
    p.add_argument("--p", default="0.05,0.1,0.2", help="comma-separated impulse probabilities")
    args = p.parse_args()
    config = replace(
        PRESETS["paper-table3"], snr_list=(30.0,), sir_list=tuple(range(-15, 20, 5)),
        p_list=tuple(float(v) for v in args.p.split(",")), estimators=("svr",),
        frames_per_point=args.frames, master_seed=args.seed,
    )
    run_and_print(config, args.out, args.verbose)
