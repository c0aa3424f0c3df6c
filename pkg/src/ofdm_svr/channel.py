"""Time-varying tapped-delay-line channel, AWGN and Bernoulli-Gaussian impulse noise."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .grid import OfdmConfig, TimeSignal

SPEED_OF_LIGHT = 299_792_458.0

#: Number of sinusoids per tap in the sum-of-sinusoids fading generator.
DEFAULT_SINUSOIDS = 32

_CHUNK = 1024


@dataclass(frozen=True)
class PowerDelayProfile:
    """Tap delays (ns) and relative powers (dB) of a multipath profile."""

    delays_ns: tuple[float, ...]
    powers_db: tuple[float, ...]
    name: str = "custom"

    def __post_init__(self):
        delays = tuple(float(d) for d in self.delays_ns)
        powers = tuple(float(p) for p in self.powers_db)
        object.__setattr__(self, "delays_ns", delays)
        object.__setattr__(self, "powers_db", powers)
        if not delays:
            raise ValueError("power delay profile has no taps")
        if len(delays) != len(powers):
            raise ValueError("delays_ns and powers_db differ in length")
        if delays[0] != 0.0:
            raise ValueError("first tap delay must be 0 ns")
        if any(b <= a for a, b in zip(delays, delays[1:])):
            raise ValueError("tap delays must be strictly increasing")

    @property
    def num_taps(self) -> int:
        return len(self.delays_ns)

    @property
    def normalized_powers(self) -> np.ndarray:
        lin = 10.0 ** (np.asarray(self.powers_db) / 10.0)
        return lin / lin.sum()

    @property
    def max_delay_ns(self) -> float:
        return self.delays_ns[-1]


EVA = PowerDelayProfile(
    delays_ns=(0, 30, 150, 310, 370, 710, 1090, 1730, 2510),
    powers_db=(0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9),
    name="EVA",
)


def quantize_profile(profile: PowerDelayProfile, sampling_rate: float) -> tuple[np.ndarray, np.ndarray]:
    """Round delays to whole samples and power-sum taps that collide.

    Returns ``(delays_samples, powers)`` with unique increasing delays and
    linear powers summing to 1.
    """
    delays = np.rint(np.asarray(profile.delays_ns) * 1e-9 * sampling_rate).astype(np.int64)
    unique, inverse = np.unique(delays, return_inverse=True)
    powers = np.zeros(unique.size)
    np.add.at(powers, inverse, profile.normalized_powers)
    return unique, powers


def doppler_frequency(speed_kmh: float, carrier_hz: float) -> float:
    """Maximum Doppler shift ``v * f_c / c``."""
    return speed_kmh / 3.6 * carrier_hz / SPEED_OF_LIGHT


@dataclass(frozen=True)
class ChannelRealization:
    tap_gains: np.ndarray
    tap_delays_samples: np.ndarray
    doppler_hz: float
    sampling_rate: float

    @property
    def num_samples(self) -> int:
        return self.tap_gains.shape[1]

    @property
    def max_delay_samples(self) -> int:
        return int(self.tap_delays_samples.max())


def _sum_of_sinusoids(omega: np.ndarray, phases: np.ndarray, num_samples: int) -> np.ndarray:
    # exp(j(w(cK + k) + phi)) = exp(jwk) * exp(j(wcK + phi)): one GEMM per tap
    n_chunks = -(-num_samples // _CHUNK)
    k = np.arange(_CHUNK)
    c = np.arange(n_chunks) * _CHUNK
    inner = np.exp(1j * np.outer(k, omega))
    outer = np.exp(1j * (np.outer(omega, c) + phases[:, None]))
    return (inner @ outer).T.ravel()[:num_samples]


def generate_channel(
    profile: PowerDelayProfile,
    doppler_hz: float,
    num_samples: int,
    sampling_rate: float,
    seed,
    n_sinusoids: int = DEFAULT_SINUSOIDS,
) -> ChannelRealization:
    """Draw per-sample complex tap gains with a classical Doppler spectrum.

    Every (merged) tap is an independent sum of ``n_sinusoids`` equal-power
    complex exponentials with uniform random arrival angles and phases, so
    the ensemble autocorrelation is ``J0(2 pi f_d tau)`` and the envelope is
    approximately Rayleigh.
    """
    if doppler_hz < 0:
        raise ValueError("doppler_hz must be nonnegative")
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    delays, powers = quantize_profile(profile, sampling_rate)
    rng = np.random.default_rng(seed)
    gains = np.empty((delays.size, num_samples), dtype=complex)
    for tap, power in enumerate(powers):
        angles = rng.uniform(0.0, 2 * np.pi, n_sinusoids)
        phases = rng.uniform(0.0, 2 * np.pi, n_sinusoids)
        omega = 2 * np.pi * doppler_hz / sampling_rate * np.cos(angles)
        if doppler_hz == 0:
            gains[tap] = np.sum(np.exp(1j * phases))
        else:
            gains[tap] = _sum_of_sinusoids(omega, phases, num_samples)
        gains[tap] *= math.sqrt(power / n_sinusoids)
    return ChannelRealization(gains, delays, float(doppler_hz), float(sampling_rate))


def static_channel(gains, delays_samples, num_samples: int, sampling_rate: float) -> ChannelRealization:
    """Time-invariant realization with the given tap gains and integer delays."""
    gains = np.asarray(gains, dtype=complex)
    tap_gains = np.repeat(gains[:, None], num_samples, axis=1)
    return ChannelRealization(tap_gains, np.asarray(delays_samples, dtype=np.int64), 0.0, float(sampling_rate))


def check_guard_interval(config: OfdmConfig, max_delay_samples: int) -> None:
    if config.cp_samples < max_delay_samples:
        raise ValueError(
            f"cyclic prefix of {config.cp_samples} samples is shorter than the "
            f"{max_delay_samples}-sample channel delay spread"
        )


def apply_channel(tx: TimeSignal, realization: ChannelRealization) -> TimeSignal:
    """``y(t) = sum_l h_l(t) x(t - d_l)``; samples before t = 0 are zero."""
    x = np.asarray(tx.samples, dtype=complex)
    if realization.num_samples < x.size:
        raise ValueError(
            f"channel realization covers {realization.num_samples} samples, signal has {x.size}"
        )
    y = np.zeros_like(x)
    for gain, d in zip(realization.tap_gains, realization.tap_delays_samples):
        if d >= x.size:
            continue
        y[d:] += gain[d:x.size] * x[: x.size - d]
    return TimeSignal(y, tx.sampling_rate)


def _reference_power(signal: TimeSignal, signal_power: float | None) -> float:
    power = signal.power if signal_power is None else float(signal_power)
    if not power > 0:
        raise ValueError("signal power must be positive to calibrate noise")
    return power


def complex_gaussian(rng: np.random.Generator, n: int, power: float) -> np.ndarray:
    return math.sqrt(power / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def add_awgn(signal: TimeSignal, snr_db: float, seed, signal_power: float | None = None) -> TimeSignal:
    """Add circular Gaussian noise of power ``P_signal / 10**(snr_db/10)``.

    ``signal_power`` defaults to the measured mean power of ``signal``;
    pass the noiseless channel output power when noise is added in stages.
    ``snr_db = inf`` disables the noise.
    """
    power = _reference_power(signal, signal_power)
    if math.isinf(snr_db) and snr_db > 0:
        return signal
    rng = np.random.default_rng(seed)
    noise_power = power / 10.0 ** (snr_db / 10.0)
    noise = complex_gaussian(rng, len(signal), noise_power)
    return TimeSignal(signal.samples + noise, signal.sampling_rate)


def bernoulli_gaussian_noise(n: int, power: float, p: float, seed) -> tuple[np.ndarray, np.ndarray]:
    """``i(n) = v(n) * lambda(n)``; returns the noise and the Bernoulli gate."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"impulse probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    active = rng.random(n) < p
    v = complex_gaussian(rng, n, power)
    return np.where(active, v, 0.0), active


def add_impulse_noise(
    signal: TimeSignal, sir_db: float, p: float, seed, signal_power: float | None = None
) -> TimeSignal:
    """Add Bernoulli-Gaussian impulses with ``sigma_BG^2 = P_signal / 10**(sir_db/10)``.

    The SIR is referenced to the Gaussian component power, not to the
    average impulse power ``p * sigma_BG^2``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"impulse probability must lie in [0, 1], got {p}")
    power = _reference_power(signal, signal_power)
    if p == 0.0 or (math.isinf(sir_db) and sir_db > 0):
        return signal
    impulse_power = power / 10.0 ** (sir_db / 10.0)
    noise, _ = bernoulli_gaussian_noise(len(signal), impulse_power, p, seed)
    return TimeSignal(signal.samples + noise, signal.sampling_rate)


def frame_frequency_response(realization: ChannelRealization, config: OfdmConfig) -> np.ndarray:
    """``H(s, k)`` for every symbol, sampled mid-way through each useful part."""
    s = np.arange(config.symbols_per_frame)
    t = s * config.symbol_length + config.cp_samples + config.fft_size // 2
    if t[-1] >= realization.num_samples:
        raise ValueError("channel realization is shorter than the frame")
    steering = np.exp(
        -2j * np.pi * np.outer(realization.tap_delays_samples, config.frequency_offsets) / config.fft_size
    )
    return realization.tap_gains[:, t].T @ steering


def true_frequency_response(realization: ChannelRealization, config: OfdmConfig, symbol_index: int) -> np.ndarray:
    if not 0 <= symbol_index < config.symbols_per_frame:
        raise ValueError(f"symbol_index {symbol_index} outside [0, {config.symbols_per_frame})")
    t = symbol_index * config.symbol_length + config.cp_samples + config.fft_size // 2
    if t >= realization.num_samples:
        raise ValueError("channel realization is shorter than the requested symbol")
    steering = np.exp(
        -2j * np.pi * np.outer(realization.tap_delays_samples, config.frequency_offsets) / config.fft_size
    )
    return realization.tap_gains[:, t] @ steering


def write_channel_csv(path, response: np.ndarray) -> None:
    """Dump ``|H(s, k)|`` and phase as ``symbol_index,subcarrier,magnitude,phase`` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["symbol_index", "subcarrier", "magnitude", "phase"])
        for s, row in enumerate(response):
            for k, h in enumerate(row):
                writer.writerow([s, k, f"{abs(h):.9g}", f"{np.angle(h):.9g}"])
