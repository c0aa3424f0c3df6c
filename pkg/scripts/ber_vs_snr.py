"""BER against SNR for LS, decision feedback and SVR at 350 km/h without impulse noise."""

from dataclasses import replace

from _common import parser, run_and_print
from ofdm_svr.harness import PRESETS

if __name__ == "__main__":
    args = parser(__doc__, "results/ber_vs_snr.csv").parse_args()
    config = replace(PRESETS["paper-table3"], frames_per_point=args.frames, master_seed=args.seed)
    run_and_print(config, args.out, args.verbose)
