"""Synthetic captures with exactly known ground truth.

The QRNG signal is modeled as a sum of independent stationary Gaussian
processes: a "vacuum" component and an "excess" component, each realized by
FIR-filtering a white unit-variance stream, plus an optional slowly drifting
mean ("classical" noise).  Because the shaping filters are known, the total
variance, the conditional variances and the full power spectra are all
available analytically, which is what makes desk-scale validation of the
metrology chain possible.

The same machinery synthesizes two-laser beat records for exercising the
calibration module: a detuned sinusoid with the detector-model amplitude
plus shot noise whose PSD follows the DC photocurrents, both shaped by the
chain gain profile.

Units: the sample rate defaults to 1 (frequencies in cycles per sample) and
the shot-noise energy quantum is 1 "vacuum unit" unless configured
otherwise, since the downstream entropy bounds depend only on ratios.  The
random stream is a 64-bit counter-based generator (Philox) with the
ziggurat normal transform; it is deliberately NOT cryptographic, this is
test scaffolding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import lfilter

from .entropy import AdcSpec
from .errors import AliasedDetuning, EmptyFilter

__all__ = [
    "ProcessSpec",
    "BeatSpec",
    "GroundTruth",
    "gen_colored_gaussian",
    "synthesize_qrng_signal",
    "quantize",
    "dequantize",
    "bins_to_int16",
    "int16_to_bins",
    "write_raw_int16",
    "read_raw_int16",
    "gen_beat_record",
    "analytic_vacuum_psd",
    "simulate_sweep",
    "lowpass_sinc",
    "default_chain_filter",
    "fir_power_response",
    "make_rng",
]

_GT_GRID = 2 ** 16  # frequency points for ground-truth log-spectrum integrals

# pole of the AR(1) drift process; (1 - pole)/pi is the -3 dB cutoff as a
# fraction of Nyquist, here 1e-4
_DRIFT_POLE = 1.0 - math.pi * 1e-4


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based 64-bit generator; identical seeds give identical streams."""
    return np.random.Generator(np.random.Philox(seed))


def lowpass_sinc(n_taps: int = 63, cutoff: float = 0.4) -> np.ndarray:
    """Unit-energy windowed-sinc lowpass; cutoff in fractions of Nyquist."""
    k = np.arange(n_taps) - (n_taps - 1) / 2.0
    h = cutoff * np.sinc(cutoff * k) * np.hamming(n_taps)
    return h / np.linalg.norm(h)


def default_chain_filter(floor_mix: float = 0.75) -> np.ndarray:
    """Detection-chain filter: 0.4-Nyquist lowpass over a broadband floor.

    A pure windowed-sinc lowpass has a stopband tens of dB down, which would
    collapse the conditional variance (geometric mean of the spectrum) to
    nearly zero.  Measured homodyne spectra roll off only a few dB across
    the band, so the default blends the lowpass with an impulse at the same
    group delay.  ``floor_mix`` is the impulse amplitude before the final
    unit-energy normalization.
    """
    lp = lowpass_sinc()
    # mix in amplitude with matched linear phase, then renormalize energy
    h = floor_mix * _center_impulse(len(lp)) + (1.0 - floor_mix) * lp
    return h / np.linalg.norm(h)


def _center_impulse(n_taps: int) -> np.ndarray:
    h = np.zeros(n_taps)
    h[(n_taps - 1) // 2] = 1.0
    return h


def fir_power_response(h: np.ndarray, n_points: int = _GT_GRID) -> np.ndarray:
    """|H|^2 on ``n_points + 1`` frequencies spanning [0, Nyquist]."""
    H = np.fft.rfft(np.asarray(h, dtype=float), 2 * n_points)
    return (H.real ** 2 + H.imag ** 2)[: n_points + 1]


def _gm_of_spectrum(psd: np.ndarray) -> float:
    """Geometric mean of a spectrum sampled uniformly on [0, Nyquist]
    (trapezoidal rule), i.e. the conditional variance of the process."""
    logs = np.log2(psd)
    return float(2.0 ** (np.trapezoid(logs) / (len(psd) - 1)))


@dataclass(frozen=True)
class GroundTruth:
    """Analytic truth for a synthesized capture, all in signal units^2."""

    sigma2: float
    sigma_x2: float
    sigma_u2: float

    def to_text(self) -> str:
        return (f"sigma2 = {self.sigma2!r}\n"
                f"sigma_x2 = {self.sigma_x2!r}\n"
                f"sigma_u2 = {self.sigma_u2!r}\n")

    @classmethod
    def from_text(cls, text: str) -> "GroundTruth":
        values = {}
        for line in text.splitlines():
            if "=" in line:
                key, _, val = line.partition("=")
                values[key.strip()] = float(val)
        return cls(values["sigma2"], values["sigma_x2"], values["sigma_u2"])


@dataclass(frozen=True)
class ProcessSpec:
    """Recipe for a synthetic QRNG capture.

    The vacuum and excess components are white streams convolved with the
    respective FIR filters and multiplied by their scales; the classical
    component is a slowly drifting mean with the given total variance.
    """

    vacuum_filter: np.ndarray
    excess_filter: np.ndarray
    vacuum_scale: float
    excess_scale: float
    classical_variance: float
    rng_seed: int

    def __post_init__(self) -> None:
        for name in ("vacuum_filter", "excess_filter"):
            h = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, h)
            if h.ndim != 1 or len(h) == 0 or not np.any(h != 0.0):
                raise EmptyFilter(f"{name} must have nonzero energy")
        if self.classical_variance < 0.0:
            raise ValueError("classical_variance must be >= 0")

    # -- analytic ground truth ------------------------------------------

    def component_spectra(self, n_points: int = _GT_GRID):
        """(vacuum, excess) power spectra on [0, Nyquist], bin-mean units."""
        fv = self.vacuum_scale ** 2 * fir_power_response(self.vacuum_filter, n_points)
        fe = self.excess_scale ** 2 * fir_power_response(self.excess_filter, n_points)
        return fv, fe

    def ground_truth(self) -> GroundTruth:
        fv, fe = self.component_spectra()
        sigma2 = (self.vacuum_scale ** 2 * float(np.sum(self.vacuum_filter ** 2))
                  + self.excess_scale ** 2 * float(np.sum(self.excess_filter ** 2))
                  + self.classical_variance)
        sigma_x2 = _gm_of_spectrum(fv + fe)
        sigma_u2 = _gm_of_spectrum(fe) if self.excess_scale > 0.0 else 0.0
        return GroundTruth(sigma2=sigma2, sigma_x2=sigma_x2, sigma_u2=sigma_u2)

    @classmethod
    def tuned(cls, sigma2: float, sigma_x2: float, sigma_u2: float,
              rng_seed: int = 0, chain_filter: np.ndarray | None = None) -> "ProcessSpec":
        """Solve component scales so the ground truth hits the given triple.

        Both components share the detection-chain filter ``h`` (unit
        energy), so with spectral flatness ``kappa = GM(|H|^2)``:

            sigma_u2 = excess_scale^2 * kappa
            sigma_x2 = (vacuum_scale^2 + excess_scale^2) * kappa
            sigma2   = vacuum_scale^2 + excess_scale^2 + classical_variance

        Requires ``kappa >= sigma_x2 / sigma2`` so the drift variance comes
        out non-negative.
        """
        if not sigma_u2 < sigma_x2 <= sigma2:
            raise ValueError("need sigma_u2 < sigma_x2 <= sigma2")
        h = default_chain_filter() if chain_filter is None else np.asarray(chain_filter, dtype=float)
        h = h / np.linalg.norm(h)  # unit energy, so GM(|H|^2) is the flatness
        kappa = _gm_of_spectrum(fir_power_response(h))
        if kappa < sigma_x2 / sigma2:
            raise ValueError(
                f"chain filter flatness {kappa:.4f} below the correlation "
                f"ratio {sigma_x2 / sigma2:.4f}; use a flatter filter")
        ve = sigma_u2 / kappa
        vv = (sigma_x2 - sigma_u2) / kappa
        zeta = sigma2 - (vv + ve)
        return cls(vacuum_filter=h, excess_filter=h,
                   vacuum_scale=math.sqrt(vv), excess_scale=math.sqrt(ve),
                   classical_variance=zeta, rng_seed=rng_seed)


def gen_colored_gaussian(fir: np.ndarray, scale: float, n_samples: int,
                         rng: np.random.Generator) -> np.ndarray:
    """White unit-Gaussian stream shaped by an FIR filter.

    The convolution is evaluated only where the filter has full support
    (an extra ``len(fir) - 1`` white samples are drawn up front), so every
    output sample is drawn from the stationary distribution.
    """
    fir = np.asarray(fir, dtype=float)
    if fir.ndim != 1 or len(fir) == 0 or not np.any(fir != 0.0):
        raise EmptyFilter("filter must have nonzero energy")
    if n_samples <= 10 * len(fir):
        raise ValueError("n_samples must exceed 10x the filter length")
    white = rng.standard_normal(n_samples + len(fir) - 1)
    if len(fir) == 1:
        return scale * fir[0] * white[: n_samples]
    # direct-form FIR; dropping the first len(fir)-1 outputs leaves only
    # full-support (stationary) samples, equivalent to a 'valid' convolution
    return scale * lfilter(fir, [1.0], white)[len(fir) - 1:]


def _gen_drift(variance: float, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Slowly wandering mean: exact-stationary AR(1) at the drift cutoff."""
    a = _DRIFT_POLE
    innovation = math.sqrt(variance * (1.0 - a * a))
    w = rng.standard_normal(n_samples) * innovation
    y0 = rng.standard_normal() * math.sqrt(variance)
    # zi = a*y0 makes the first output a*y0 + w[0]: stationary from sample 0
    y, _ = lfilter([1.0], [1.0, -a], w, zi=np.array([a * y0]))
    return y


def synthesize_qrng_signal(spec: ProcessSpec, n_samples: int) -> tuple[np.ndarray, GroundTruth]:
    """Generate a capture and its analytic ground truth.

    Component streams are drawn from independent child generators of the
    spec seed, so the capture is reproducible sample-for-sample for a given
    (spec, n_samples).
    """
    root = make_rng(spec.rng_seed)
    rv, re_, rc = root.spawn(3)
    signal = gen_colored_gaussian(spec.vacuum_filter, spec.vacuum_scale, n_samples, rv)
    if spec.excess_scale > 0.0:
        signal = signal + gen_colored_gaussian(spec.excess_filter, spec.excess_scale,
                                               n_samples, re_)
    if spec.classical_variance > 0.0:
        signal = signal + _gen_drift(spec.classical_variance, n_samples, rc)
    return signal, spec.ground_truth()


# -- ADC quantization ---------------------------------------------------


def quantize(x: np.ndarray, adc: AdcSpec) -> np.ndarray:
    """Map real samples to bin indices 1..d.

    The ``d - 2`` interior bins are right-closed intervals of width
    ``delta_x`` tiling ``(-R_eff, R_eff]`` with ``R_eff = (d-2) delta_x / 2``
    (equal to ``range_R`` for a consistent spec); everything at or below
    ``-R_eff`` lands in bin 1, everything above in bin d.  A sample exactly
    on a bin center stays in that bin.
    """
    x = np.asarray(x, dtype=float)
    k = np.ceil(x / adc.delta_x) + adc.d // 2
    return np.clip(k, 1, adc.d).astype(np.int64)


def dequantize(bins: np.ndarray, adc: AdcSpec) -> np.ndarray:
    """Bin centers in signal units; saturated bins map just outside the range."""
    q = np.asarray(bins, dtype=np.int64) - 1 - adc.d // 2
    return (q + 0.5) * adc.delta_x


def bins_to_int16(bins: np.ndarray, adc: AdcSpec) -> np.ndarray:
    """Wire format: bin k stored as the signed integer k - 1 - d/2."""
    if adc.bits > 16:
        raise ValueError("int16 wire format supports at most 16 bits")
    return (np.asarray(bins, dtype=np.int64) - 1 - adc.d // 2).astype("<i2")


def int16_to_bins(raw: np.ndarray, adc: AdcSpec) -> np.ndarray:
    return np.asarray(raw, dtype=np.int64) + 1 + adc.d // 2


def write_raw_int16(path, bins: np.ndarray, adc: AdcSpec) -> None:
    """Signed 16-bit little-endian binary capture file."""
    bins_to_int16(bins, adc).tofile(path)


def read_raw_int16(path) -> np.ndarray:
    return np.fromfile(path, dtype="<i2")


# -- beat records for calibration ----------------------------------------


@dataclass(frozen=True)
class BeatSpec:
    """Detector model for a two-laser beat measurement.

    ``nu`` is the detuning, ``r_nu`` the beam-splitter ratio, ``eta1``/
    ``eta2`` the photodiode efficiencies, ``visibility_chi`` the
    interference visibility and ``gain_profile`` the FIR whose squared
    magnitude is the chain gain G(nu).  ``hbar_omega`` is the shot-noise
    energy quantum (1 in desk-scale units) and ``attenuation`` a flat power
    transmission inserted during calibration only.
    """

    nu: float
    p_sig: float
    p_lo: float
    eta1: float = 1.0
    eta2: float = 1.0
    r_nu: float = 0.5
    visibility_chi: float = 1.0
    gain_profile: np.ndarray = field(default_factory=lambda: np.array([1.0]))
    omega_l: float = 1.0
    hbar: float = 1.0
    attenuation: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "gain_profile",
                           np.asarray(self.gain_profile, dtype=float))
        if not (0.0 < self.eta1 <= 1.0 and 0.0 < self.eta2 <= 1.0):
            raise ValueError("efficiencies must be in (0, 1]")
        if not 0.0 < self.r_nu < 1.0:
            raise ValueError("splitting ratio must be in (0, 1)")
        if not 0.0 < self.visibility_chi <= 1.0:
            raise ValueError("visibility must be in (0, 1]")
        if self.p_sig < 0.0 or self.p_lo <= 0.0:
            raise ValueError("powers must be non-negative (p_lo > 0)")
        if not 0.0 < self.attenuation <= 1.0:
            raise ValueError("attenuation must be in (0, 1]")

    @property
    def hbar_omega(self) -> float:
        return self.hbar * self.omega_l

    def beat_amplitude(self) -> float:
        """Peak beat photocurrent before the gain chain."""
        return (2.0 * self.visibility_chi ** 2 * (self.eta1 + self.eta2)
                * math.sqrt(self.r_nu * (1.0 - self.r_nu))
                * math.sqrt(self.p_lo * self.p_sig) / self.hbar_omega)

    def dc_current_sum(self) -> float:
        """Sum of the two DC photocurrents (charge quantum = 1)."""
        return (self.eta1 * (1.0 - self.r_nu) + self.eta2 * self.r_nu) \
            * self.p_lo / self.hbar_omega


def _gain_at(h: np.ndarray, nu: float, sample_rate: float) -> float:
    """Chain power gain |H(nu)|^2 at a physical frequency."""
    k = np.arange(len(h))
    z = np.sum(h * np.exp(-2j * np.pi * nu / sample_rate * k))
    return float(abs(z) ** 2)


def analytic_vacuum_psd(spec: BeatSpec, freqs: np.ndarray,
                        sample_rate: float = 1.0) -> np.ndarray:
    """True one-sided vacuum PSD of the detection chain, per frequency.

    Shot noise of the DC photocurrents shaped by the chain gain:
    ``2 * (i_dc1 + i_dc2) * G(nu)`` with unit charge quantum.  This is the
    quantity the calibration bound must never exceed.
    """
    gains = np.array([_gain_at(spec.gain_profile, f, sample_rate) for f in np.atleast_1d(freqs)])
    return 2.0 * spec.dc_current_sum() * gains


def gen_beat_record(spec: BeatSpec, n_samples: int, sample_rate: float,
                    rng: np.random.Generator) -> np.ndarray:
    """Beat sinusoid plus chain-shaped shot noise, as digitized.

    The detuned line and the white shot noise (variance set so its one-sided
    PSD is ``2 * dc_current_sum`` per Hz before shaping) pass through the
    same gain profile; the optional calibration attenuator scales the whole
    record in power.
    """
    if spec.nu >= sample_rate / 2.0:
        raise AliasedDetuning(f"nu={spec.nu} >= Nyquist {sample_rate / 2.0}")
    h = spec.gain_profile
    n_total = n_samples + len(h) - 1
    t = np.arange(n_total) / sample_rate
    phase = rng.uniform(0.0, 2.0 * math.pi)
    base = spec.beat_amplitude() * np.cos(2.0 * math.pi * spec.nu * t + phase)
    shot_var = spec.dc_current_sum() * sample_rate
    base = base + rng.standard_normal(n_total) * math.sqrt(shot_var)
    if len(h) == 1:
        record = h[0] * base[: n_samples]
    else:
        record = lfilter(h, [1.0], base)[len(h) - 1:]
    return math.sqrt(spec.attenuation) * record


def simulate_sweep(base: BeatSpec, freqs: np.ndarray, n_samples: int,
                   sample_rate: float, seed: int) -> list[tuple[float, np.ndarray]]:
    """Beat records at each sweep frequency, with per-point child streams."""
    root = make_rng(seed)
    out = []
    for child, nu in zip(root.spawn(len(freqs)), freqs):
        record = gen_beat_record(replace(base, nu=float(nu)), n_samples,
                                 sample_rate, child)
        out.append((float(nu), record))
    return out
