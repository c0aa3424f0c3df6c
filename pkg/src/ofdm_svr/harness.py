"""Monte Carlo BER/MSE sweeps over SNR, SIR and impulse probability.

Seeding
-------
Every frame draws its randomness from ``frame_seed(master, point, frame)``::

    frame_seed = mix(mix(mix(master) ^ point) ^ frame)

where ``mix`` is the 64-bit SplitMix finalizer (golden-ratio increment,
multipliers ``0xBF58476D1CE4E5B9`` and ``0x94D049BB133111EB``).  The four
streams of a frame (bits, channel, AWGN, impulses) are seeded with
``mix(frame_seed ^ tag)`` for tags 1 to 4 and fed to numpy's PCG64.  The
point index enumerates ``(snr, sir, p)`` only, so all estimators at one
sweep point see the same bits, channel and noise.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .channel import (
    EVA, PowerDelayProfile, add_awgn, add_impulse_noise, apply_channel, check_guard_interval,
    doppler_frequency, frame_frequency_response, generate_channel, quantize_profile, write_channel_csv,
)
from .estimators import estimate
from .grid import (
    OfdmConfig, build_resource_grid, demodulate_frame, equalize_and_demap, lte_preset, modulate_bits,
    modulate_frame,
)
from .svr_core import SIGMA_PER_PILOT_SPACING, SolverError, SvrHyperparams

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
MSE_FLOOR_DB = -300.0
CSV_HEADER = ["method", "snr_db", "sir_db", "p", "speed_kmh", "frames", "total_bits",
              "bit_errors", "ber", "channel_mse_db", "seed"]
ESTIMATOR_KEYS = ("ls", "df", "svr")

_TAG_BITS, _TAG_CHANNEL, _TAG_AWGN, _TAG_IMPULSE = 1, 2, 3, 4


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def frame_seed(master_seed: int, point_index: int, frame_index: int) -> int:
    return splitmix64(splitmix64(splitmix64(master_seed & MASK64) ^ point_index) ^ frame_index)


def _stream(seed: int, tag: int) -> int:
    return splitmix64(seed ^ tag)


@dataclass(frozen=True)
class ScenarioConfig:
    bandwidth_mhz: float = 5.0
    speed_kmh: float = 350.0
    carrier_hz: float = 2.15e9
    snr_list: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    sir_list: tuple[float, ...] = ()
    p_list: tuple[float, ...] = (0.0,)
    estimators: tuple[str, ...] = ESTIMATOR_KEYS
    svr: SvrHyperparams | None = None
    frames_per_point: int = 100
    master_seed: int = 0
    modulation_order: int = 16
    pilot_spacing: int = 6
    symbols_per_frame: int = 140
    df_reanchor: int | None = None
    n_sinusoids: int = 32
    svr_method: str = "active-set"
    profile: PowerDelayProfile = field(default=EVA, repr=False)

    def __post_init__(self):
        for name in ("snr_list", "sir_list", "p_list"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        keys = tuple(e.lower() for e in self.estimators)
        object.__setattr__(self, "estimators", keys)
        unknown = set(keys) - set(ESTIMATOR_KEYS)
        if unknown:
            raise ValueError(f"unknown estimators {sorted(unknown)}; expected a subset of {ESTIMATOR_KEYS}")
        if self.frames_per_point < 1:
            raise ValueError("frames_per_point must be >= 1")
        if any(not 0.0 <= p <= 1.0 for p in self.p_list):
            raise ValueError("impulse probabilities must lie in [0, 1]")
        if self.speed_kmh < 0:
            raise ValueError("speed must be nonnegative")
        if self.svr is None:
            object.__setattr__(self, "svr", SvrHyperparams.for_pilot_spacing(self.pilot_spacing))
        # builds and validates the numerology
        check_guard_interval(self.ofdm, int(quantize_profile(self.profile, self.ofdm.sampling_rate)[0].max()))

    @property
    def ofdm(self) -> OfdmConfig:
        return lte_preset(
            self.bandwidth_mhz,
            modulation_order=self.modulation_order,
            pilot_spacing=self.pilot_spacing,
            symbols_per_frame=self.symbols_per_frame,
        )

    @property
    def doppler_hz(self) -> float:
        return doppler_frequency(self.speed_kmh, self.carrier_hz)

    @property
    def impulses_enabled(self) -> bool:
        return len(self.sir_list) > 0

    def sweep_points(self) -> list[tuple[float, float | None, float]]:
        """``(snr, sir, p)`` triples in emission order."""
        if not self.impulses_enabled:
            return [(snr, None, 0.0) for snr in self.snr_list]
        return [(snr, sir, p) for snr in self.snr_list for sir in self.sir_list for p in self.p_list]


PRESETS = {
    "paper-table3": ScenarioConfig(),
}


@dataclass
class BerRecord:
    method: str
    snr_db: float
    sir_db: float | None
    p: float
    speed: float
    frames: int
    total_bits: int
    bit_errors: int
    ber: float
    channel_mse_db: float
    seed: int
    frame_bit_errors: tuple[int, ...] = field(default=(), repr=False)
    failed: bool = False

    def csv_row(self) -> list[str]:
        return [
            self.method, _fmt(self.snr_db), "" if self.sir_db is None else _fmt(self.sir_db), _fmt(self.p),
            _fmt(self.speed), str(self.frames), str(self.total_bits), str(self.bit_errors), _fmt(self.ber),
            _fmt(self.channel_mse_db), str(self.seed),
        ]


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def ber(tx_bits, rx_bits) -> float:
    tx = np.asarray(tx_bits).ravel()
    rx = np.asarray(rx_bits).ravel()
    if tx.size != rx.size:
        raise ValueError(f"bit sequences differ in length ({tx.size} vs {rx.size})")
    if tx.size == 0:
        raise ValueError("empty bit sequences")
    return float(np.count_nonzero(tx != rx)) / tx.size


def _mse_db(err_power: float, ref_power: float) -> float:
    if not ref_power > 0:
        raise ValueError("oracle channel has zero power")
    if err_power == 0:
        return MSE_FLOOR_DB
    return max(10.0 * math.log10(err_power / ref_power), MSE_FLOOR_DB)


def channel_mse(estimate, oracle) -> float:
    """Normalized estimation error ``10 log10(mean|H_hat - H|^2 / mean|H|^2)`` in dB."""
    h_hat = np.asarray(getattr(estimate, "h_hat", estimate))
    oracle = np.asarray(oracle)
    if h_hat.shape != oracle.shape:
        raise ValueError(f"shape mismatch {h_hat.shape} vs {oracle.shape}")
    return _mse_db(float(np.sum(np.abs(h_hat - oracle) ** 2)), float(np.sum(np.abs(oracle) ** 2)))


@dataclass
class Frame:
    """One transmitted and received frame plus its channel oracle."""

    tx_bits: np.ndarray
    received: np.ndarray
    oracle: np.ndarray


def simulate_frame(config: ScenarioConfig, snr_db: float, sir_db: float | None, p: float, seed: int) -> Frame:
    ofdm = config.ofdm
    rng_bits = np.random.default_rng(_stream(seed, _TAG_BITS))
    bits = rng_bits.integers(0, 2, ofdm.data_bits_per_frame, dtype=np.uint8)
    tx = modulate_frame(build_resource_grid(ofdm, modulate_bits(bits, ofdm)), ofdm)
    realization = generate_channel(
        config.profile, config.doppler_hz, ofdm.frame_length, ofdm.sampling_rate,
        _stream(seed, _TAG_CHANNEL), n_sinusoids=config.n_sinusoids,
    )
    clean = apply_channel(tx, realization)
    power = clean.power
    rx = add_awgn(clean, snr_db, _stream(seed, _TAG_AWGN), signal_power=power)
    if sir_db is not None and p > 0:
        rx = add_impulse_noise(rx, sir_db, p, _stream(seed, _TAG_IMPULSE), signal_power=power)
    return Frame(bits, demodulate_frame(rx, ofdm), frame_frequency_response(realization, ofdm))


class _Accumulator:
    def __init__(self):
        self.errors: list[int] = []
        self.bits = 0
        self.err_power = 0.0
        self.ref_power = 0.0
        self.failed = False


def _run_methods(config: ScenarioConfig, snr_db, sir_db, p, methods: Iterable[str], point_index: int) -> list[BerRecord]:
    ofdm = config.ofdm
    data_cols = ofdm.data_columns
    methods = [m.lower() for m in methods]
    acc = {m: _Accumulator() for m in methods}
    for f in range(config.frames_per_point):
        frame = simulate_frame(config, snr_db, sir_db, p, frame_seed(config.master_seed, point_index, f))
        for m in methods:
            try:
                est = estimate(m, frame.received, ofdm, config.svr, config.df_reanchor, config.svr_method)
            except SolverError as err:
                logger.warning("%s failed on frame %d at point %d: %s", m, f, point_index, err)
                acc[m].failed = True
                continue
            rx_bits = equalize_and_demap(frame.received[:, data_cols], est.h_hat[:, data_cols], ofdm)
            a = acc[m]
            a.errors.append(int(np.count_nonzero(rx_bits != frame.tx_bits)))
            a.bits += frame.tx_bits.size
            a.err_power += float(np.sum(np.abs(est.h_hat - frame.oracle) ** 2))
            a.ref_power += float(np.sum(np.abs(frame.oracle) ** 2))
    records = []
    for m in methods:
        a = acc[m]
        n_err = sum(a.errors)
        records.append(BerRecord(
            method=m, snr_db=float(snr_db), sir_db=None if sir_db is None else float(sir_db), p=float(p),
            speed=float(config.speed_kmh), frames=len(a.errors), total_bits=a.bits, bit_errors=n_err,
            ber=n_err / a.bits if a.bits else float("nan"),
            channel_mse_db=_mse_db(a.err_power, a.ref_power) if a.ref_power > 0 else float("nan"),
            seed=config.master_seed, frame_bit_errors=tuple(a.errors), failed=a.failed,
        ))
    return records


def run_point(config: ScenarioConfig, snr_db: float, sir_db: float | None, p: float, method: str,
              point_index: int = 0) -> BerRecord:
    """BER and channel MSE of one estimator over ``frames_per_point`` frames.

    Bits are counted on data cells only.  Frames where the estimator raises
    are skipped and the record is flagged ``failed``.
    """
    return _run_methods(config, snr_db, sir_db, p, [method], point_index)[0]


def run_points(config: ScenarioConfig, snr_db: float, sir_db: float | None, p: float,
               point_index: int = 0) -> list[BerRecord]:
    """All configured estimators on the same frames (paired comparison)."""
    return _run_methods(config, snr_db, sir_db, p, config.estimators, point_index)


def run_scenario(config: ScenarioConfig, out=None) -> list[BerRecord]:
    """Sweep ``snr x sir x p x estimators``; optionally stream rows to a CSV file.

    Rows are flushed after each sweep point, so an interrupted run leaves
    the completed points on disk.
    """
    records: list[BerRecord] = []
    if not config.estimators:
        return records
    fh = writer = None
    if out is not None:
        fh = open(out, "w", newline="")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
    try:
        for idx, (snr, sir, p) in enumerate(config.sweep_points()):
            point = run_points(config, snr, sir, p, point_index=idx)
            records.extend(point)
            if writer is not None:
                writer.writerows(r.csv_row() for r in point)
                fh.flush()
            logger.info("point %d snr=%s sir=%s p=%s: %s", idx, snr, sir, p,
                        ", ".join(f"{r.method}={r.ber:.3g}" for r in point))
    finally:
        if fh is not None:
            fh.close()
    return records


def write_records_csv(target, records: Iterable[BerRecord]) -> None:
    """Write records to a path or an already open text stream."""
    if hasattr(target, "write"):
        writer = csv.writer(target, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(r.csv_row() for r in records)
        return
    with open(target, "w", newline="") as fh:
        write_records_csv(fh, records)


def dump_channel(config: ScenarioConfig, path, point_index: int = 0, frame_index: int = 0) -> np.ndarray:
    """Write ``|H(s, k)|`` of one frame's channel to CSV and return the response."""
    ofdm = config.ofdm
    seed = frame_seed(config.master_seed, point_index, frame_index)
    realization = generate_channel(
        config.profile, config.doppler_hz, ofdm.frame_length, ofdm.sampling_rate,
        _stream(seed, _TAG_CHANNEL), n_sinusoids=config.n_sinusoids,
    )
    response = frame_frequency_response(realization, ofdm)
    write_channel_csv(path, response)
    return response


# --- config file ---------------------------------------------------------

def _floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if text.lower() in ("", "none", "off", "disabled"):
        return ()
    return tuple(float(v) for v in text.split(","))


def _optional_int(text: str) -> int | None:
    text = text.strip().lower()
    return None if text in ("", "none", "inf", "off") else int(text)


def _bool(text: str) -> bool:
    text = text.strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_SCENARIO_KEYS = {
    "bandwidth_mhz": ("bandwidth_mhz", float),
    "speed_kmh": ("speed_kmh", float),
    "carrier_hz": ("carrier_hz", float),
    "snr_db": ("snr_list", _floats),
    "sir_db": ("sir_list", _floats),
    "p": ("p_list", _floats),
    "estimators": ("estimators", lambda s: tuple(e.strip() for e in s.split(",") if e.strip())),
    "frames_per_point": ("frames_per_point", int),
    "master_seed": ("master_seed", int),
    "modulation_order": ("modulation_order", int),
    "pilot_spacing": ("pilot_spacing", int),
    "symbols_per_frame": ("symbols_per_frame", int),
    "df_reanchor": ("df_reanchor", _optional_int),
    "n_sinusoids": ("n_sinusoids", int),
    "svr_method": ("svr_method", str.strip),
}

_SVR_KEYS = {
    "svr_epsilon": ("epsilon", float),
    "svr_gamma": ("gamma", float),
    "svr_c": ("c", float),
    "svr_kernel_sigma": ("kernel_sigma", float),
    "svr_solver_tolerance": ("solver_tolerance", float),
    "svr_max_iterations": ("max_iterations", _optional_int),
    "svr_estimate_bias": ("estimate_bias", _bool),
}

CONFIG_KEYS = tuple(_SCENARIO_KEYS) + tuple(_SVR_KEYS)


def parse_config_text(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Parse ``key = value`` lines (``#`` starts a comment) over ``base``.

    Lists are comma separated; ``sir_db = none`` disables impulse noise.
    Unknown keys raise ``ValueError``.
    """
    base = base or ScenarioConfig()
    scenario: dict = {}
    svr: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key in _SCENARIO_KEYS:
                name, conv = _SCENARIO_KEYS[key]
                scenario[name] = conv(value)
            elif key in _SVR_KEYS:
                name, conv = _SVR_KEYS[key]
                svr[name] = conv(value)
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as err:
            raise ValueError(f"line {lineno}: {err}") from None
    pilot_spacing = scenario.get("pilot_spacing", base.pilot_spacing)
    svr_base = base.svr
    if "pilot_spacing" in scenario and "kernel_sigma" not in svr:
        svr_base = replace(svr_base, kernel_sigma=SIGMA_PER_PILOT_SPACING * pilot_spacing)
    scenario["svr"] = replace(svr_base, **svr)
    return replace(base, **scenario)


def load_config(path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    with open(path) as fh:
        return parse_config_text(fh.read(), base)


def format_config(config: ScenarioConfig) -> str:
    """Inverse of :func:`parse_config_text` for every documented key."""
    lines = []
    for key, (name, _) in _SCENARIO_KEYS.items():
        value = getattr(config, name)
        if isinstance(value, tuple):
            text = ",".join(_fmt(v) if isinstance(v, float) else str(v) for v in value) or "none"
        elif value is None:
            text = "none"
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    for key, (name, _) in _SVR_KEYS.items():
        value = getattr(config.svr, name)
        lines.append(f"{key} = {'none' if value is None else value}")
    return "\n".join(lines) + "\n"


__all__ = [
    "BerRecord", "CSV_HEADER", "CONFIG_KEYS", "PRESETS", "ScenarioConfig", "ber", "channel_mse",
    "dump_channel", "format_config", "frame_seed", "load_config", "parse_config_text", "run_point",
    "run_points", "run_scenario", "simulate_frame", "splitmix64", "write_records_csv",
]
