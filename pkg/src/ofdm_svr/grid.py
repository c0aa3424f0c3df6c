"""OFDM signal path: QAM mapping, comb pilots, unitary IDFT/DFT and cyclic prefix."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

#: |H| floor applied before any division by a channel estimate.
CHANNEL_FLOOR = 1e-12

#: LTE bandwidth presets: bandwidth MHz -> (fft size, sampling rate Hz, occupied subcarriers, cp samples)
LTE_PRESETS = {
    1.25: (128, 1.92e6, 76, 9),
    2.5: (256, 3.84e6, 151, 18),
    5.0: (512, 7.68e6, 301, 36),
    10.0: (1024, 15.36e6, 601, 72),
    15.0: (1536, 23.04e6, 901, 108),
    20.0: (2048, 30.72e6, 1201, 144),
}


@dataclass(frozen=True)
class OfdmConfig:
    """Numerology of one OFDM link.

    Occupied subcarriers are grid columns ``0 .. occupied_subcarriers - 1``;
    they sit symmetrically around DC with the DC bin left empty, so column
    ``q`` lands on frequency offset ``q - half`` below DC and ``q - half + 1``
    above it (``half = occupied_subcarriers // 2``).
    """

    fft_size: int = 512
    occupied_subcarriers: int = 301
    cp_samples: int = 36
    subcarrier_spacing: float = 15e3
    sampling_rate: float = 7.68e6
    pilot_spacing: int = 6
    symbols_per_frame: int = 140
    modulation_order: int = 16
    pilot_seed: int = 0x5EED

    def __post_init__(self):
        if self.fft_size < 2:
            raise ValueError(f"fft_size must be >= 2, got {self.fft_size}")
        if not 1 <= self.occupied_subcarriers < self.fft_size:
            # DC bin stays empty, so at most fft_size - 1 columns fit
            raise ValueError(
                f"occupied_subcarriers must be in [1, {self.fft_size - 1}], got {self.occupied_subcarriers}"
            )
        if self.cp_samples < 0:
            raise ValueError("cp_samples must be nonnegative")
        if self.pilot_spacing < 1:
            raise ValueError("pilot_spacing must be positive")
        if self.symbols_per_frame < 1:
            raise ValueError("symbols_per_frame must be positive")
        if self.modulation_order not in (4, 16, 64):
            raise ValueError(f"modulation_order must be 4, 16 or 64, got {self.modulation_order}")
        if self.n_pilots < 2:
            raise ValueError(
                f"pilot_spacing {self.pilot_spacing} leaves {self.n_pilots} pilot(s) on "
                f"{self.occupied_subcarriers} subcarriers; at least 2 are required"
            )

    @property
    def n_pilots(self) -> int:
        return -(-self.occupied_subcarriers // self.pilot_spacing)

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.modulation_order))

    @property
    def symbol_length(self) -> int:
        return self.fft_size + self.cp_samples

    @property
    def frame_length(self) -> int:
        return self.symbols_per_frame * self.symbol_length

    @cached_property
    def pilot_columns(self) -> np.ndarray:
        return np.arange(self.n_pilots) * self.pilot_spacing

    @cached_property
    def data_columns(self) -> np.ndarray:
        mask = np.ones(self.occupied_subcarriers, dtype=bool)
        mask[self.pilot_columns] = False
        return np.flatnonzero(mask)

    @cached_property
    def frequency_offsets(self) -> np.ndarray:
        """Signed subcarrier offset from DC for every grid column."""
        q = np.arange(self.occupied_subcarriers)
        half = self.occupied_subcarriers // 2
        return np.where(q < half, q - half, q - half + 1)

    @cached_property
    def fft_bins(self) -> np.ndarray:
        return np.mod(self.frequency_offsets, self.fft_size)

    @property
    def data_bits_per_frame(self) -> int:
        return self.symbols_per_frame * self.data_columns.size * self.bits_per_symbol


def lte_preset(bandwidth_mhz: float = 5.0, **overrides) -> OfdmConfig:
    """Return the LTE numerology row for ``bandwidth_mhz`` (1.25 to 20 MHz)."""
    try:
        n, fs, occupied, cp = LTE_PRESETS[float(bandwidth_mhz)]
    except KeyError:
        raise ValueError(
            f"no LTE preset for {bandwidth_mhz} MHz; choose one of {sorted(LTE_PRESETS)}"
        ) from None
    params = dict(fft_size=n, sampling_rate=fs, occupied_subcarriers=occupied, cp_samples=cp)
    params.update(overrides)
    return OfdmConfig(**params)


@dataclass(frozen=True)
class TimeSignal:
    samples: np.ndarray
    sampling_rate: float

    def __len__(self):
        return self.samples.size

    @property
    def power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))


@dataclass(frozen=True)
class ResourceGrid:
    symbols: np.ndarray
    pilot_mask: np.ndarray
    pilot_value_policy: str = field(default="seeded QPSK, unit magnitude")

    @property
    def shape(self) -> tuple[int, int]:
        return self.symbols.shape


# --- QAM -----------------------------------------------------------------

def _axis_levels(order: int) -> int:
    return math.isqrt(order)


def _qam_scale(order: int) -> float:
    return math.sqrt(2.0 * (order - 1) / 3.0)


def _gray_to_binary(g: np.ndarray) -> np.ndarray:
    b = g.copy()
    shift = g >> 1
    while np.any(shift):
        b ^= shift
        shift >>= 1
    return b


def _bits_to_int(bits: np.ndarray) -> np.ndarray:
    weights = 1 << np.arange(bits.shape[-1] - 1, -1, -1)
    return bits @ weights


def _int_to_bits(values: np.ndarray, width: int) -> np.ndarray:
    shifts = np.arange(width - 1, -1, -1)
    return ((values[..., None] >> shifts) & 1).astype(np.uint8)


def modulate_bits(bits, config: OfdmConfig) -> np.ndarray:
    """Gray-mapped square QAM with unit average power.

    Each group of ``log2(M)`` bits splits into an in-phase half and a
    quadrature half; each half is Gray-decoded to a PAM level, so for 16-QAM
    00, 01, 11, 10 map to -3, -1, +1, +3.
    """
    bits = np.asarray(bits, dtype=np.int64).ravel()
    k = config.bits_per_symbol
    if bits.size % k:
        raise ValueError(f"bit count {bits.size} is not a multiple of {k} bits per symbol")
    groups = bits.reshape(-1, k)
    half = k // 2
    levels = _axis_levels(config.modulation_order)
    i_idx = _gray_to_binary(_bits_to_int(groups[:, :half]))
    q_idx = _gray_to_binary(_bits_to_int(groups[:, half:]))
    amp_i = 2 * i_idx - (levels - 1)
    amp_q = 2 * q_idx - (levels - 1)
    return (amp_i + 1j * amp_q) / _qam_scale(config.modulation_order)


def _nearest_levels(x: np.ndarray, order: int) -> np.ndarray:
    levels = _axis_levels(order)
    idx = np.rint((x * _qam_scale(order) + (levels - 1)) / 2.0)
    return np.clip(idx, 0, levels - 1).astype(np.int64)


def hard_decision(symbols: np.ndarray, config: OfdmConfig) -> np.ndarray:
    """Nearest constellation point for each (equalized) symbol."""
    order = config.modulation_order
    levels = _axis_levels(order)
    i_idx = _nearest_levels(symbols.real, order)
    q_idx = _nearest_levels(symbols.imag, order)
    return ((2 * i_idx - (levels - 1)) + 1j * (2 * q_idx - (levels - 1))) / _qam_scale(order)


def demodulate_symbols(symbols, config: OfdmConfig) -> np.ndarray:
    """Nearest-point decision followed by Gray demapping to bits."""
    symbols = np.asarray(symbols, dtype=complex).ravel()
    order = config.modulation_order
    half = config.bits_per_symbol // 2
    i_idx = _nearest_levels(symbols.real, order)
    q_idx = _nearest_levels(symbols.imag, order)
    i_bits = _int_to_bits(i_idx ^ (i_idx >> 1), half)
    q_bits = _int_to_bits(q_idx ^ (q_idx >> 1), half)
    return np.concatenate([i_bits, q_bits], axis=1).ravel()


# --- resource grid -------------------------------------------------------

def pilot_symbols(config: OfdmConfig) -> np.ndarray:
    """Known pilot values, shape ``(symbols_per_frame, n_pilots)``."""
    rng = np.random.default_rng(config.pilot_seed)
    idx = rng.integers(0, 4, size=(config.symbols_per_frame, config.n_pilots))
    return np.exp(1j * (np.pi / 4 + np.pi / 2 * idx))


def pilot_mask(config: OfdmConfig) -> np.ndarray:
    mask = np.zeros((config.symbols_per_frame, config.occupied_subcarriers), dtype=bool)
    mask[:, config.pilot_columns] = True
    return mask


def build_resource_grid(config: OfdmConfig, data_symbols) -> ResourceGrid:
    data_symbols = np.asarray(data_symbols, dtype=complex).ravel()
    n_data = config.symbols_per_frame * config.data_columns.size
    if data_symbols.size != n_data:
        raise ValueError(f"grid needs exactly {n_data} data symbols, got {data_symbols.size}")
    grid = np.empty((config.symbols_per_frame, config.occupied_subcarriers), dtype=complex)
    grid[:, config.pilot_columns] = pilot_symbols(config)
    grid[:, config.data_columns] = data_symbols.reshape(config.symbols_per_frame, -1)
    return ResourceGrid(grid, pilot_mask(config))


# --- transforms ----------------------------------------------------------

def ifft_with_cp(bins: np.ndarray, cp_samples: int) -> np.ndarray:
    """Unitary IDFT along the last axis, then prepend the cyclic prefix."""
    x = np.fft.ifft(bins, axis=-1, norm="ortho")
    if cp_samples == 0:
        return x
    return np.concatenate([x[..., -cp_samples:], x], axis=-1)


def fft_strip_cp(segment: np.ndarray, cp_samples: int) -> np.ndarray:
    return np.fft.fft(segment[..., cp_samples:], axis=-1, norm="ortho")


def ofdm_modulate(grid_row, config: OfdmConfig) -> np.ndarray:
    """One OFDM symbol (or a stack of them) in time, CP included."""
    grid_row = np.asarray(grid_row, dtype=complex)
    if grid_row.shape[-1] != config.occupied_subcarriers:
        raise ValueError(
            f"expected {config.occupied_subcarriers} subcarriers, got {grid_row.shape[-1]}"
        )
    bins = np.zeros(grid_row.shape[:-1] + (config.fft_size,), dtype=complex)
    bins[..., config.fft_bins] = grid_row
    return ifft_with_cp(bins, config.cp_samples)


def ofdm_demodulate(segment, config: OfdmConfig) -> np.ndarray:
    segment = np.asarray(segment, dtype=complex)
    if segment.shape[-1] != config.symbol_length:
        raise ValueError(f"segment length must be {config.symbol_length}, got {segment.shape[-1]}")
    return fft_strip_cp(segment, config.cp_samples)[..., config.fft_bins]


def modulate_frame(grid: ResourceGrid, config: OfdmConfig) -> TimeSignal:
    return TimeSignal(ofdm_modulate(grid.symbols, config).ravel(), config.sampling_rate)


def demodulate_frame(signal: TimeSignal, config: OfdmConfig) -> np.ndarray:
    """Received grid Y(s, k), shape ``(symbols_per_frame, occupied_subcarriers)``."""
    samples = np.asarray(signal.samples)
    if samples.size != config.frame_length:
        raise ValueError(f"frame must hold {config.frame_length} samples, got {samples.size}")
    return ofdm_demodulate(samples.reshape(config.symbols_per_frame, config.symbol_length), config)


# --- equalization --------------------------------------------------------

def clamp_channel(h_hat) -> tuple[np.ndarray, np.ndarray]:
    """Lift ``|h_hat|`` to at least :data:`CHANNEL_FLOOR`, keeping the phase.

    Returns the clamped array and the mask of clamped (erasure-prone) bins.
    """
    h_hat = np.asarray(h_hat, dtype=complex)
    mag = np.abs(h_hat)
    low = ~(mag >= CHANNEL_FLOOR)
    if not low.any():
        return h_hat, low
    phase = np.where(mag > 0, h_hat / np.where(mag > 0, mag, 1.0), 1.0)
    phase = np.where(np.isfinite(phase), phase, 1.0)
    return np.where(low, CHANNEL_FLOOR * phase, h_hat), low


def equalize(y, h_hat) -> np.ndarray:
    h, _ = clamp_channel(h_hat)
    return np.asarray(y, dtype=complex) / h


def equalize_and_demap(y, h_hat, config: OfdmConfig) -> np.ndarray:
    """Zero-forcing equalization, nearest-point decision and Gray demap."""
    return demodulate_symbols(equalize(y, h_hat), config)
