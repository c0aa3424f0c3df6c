"""BER against SIR at SNR 20 dB with Bernoulli-Gaussian impulses (p = 0.1)."""

from dataclasses import replace

from _common import parser, run_and_print
from ofdm_svr.harness import PRESETS

if __name__ == "__main__":
    args = parser(__doc__, "results/ber_vs_sir.csv").parse_args()
    config = replace(
        PRESETS["paper-table3"], snr_list=(20.0,), sir_list=tuple(range(-15, 20, 5)), p_list=(0.1,),
        frames_per_point=args.frames, master_seed=args.seed,
    )
    run_and_print(config, args.out, args.verbose)
