"""Transfer-function extraction and the conservative vacuum-PSD bound.

The detection chain is treated as a black box.  Sweeping a weak auxiliary
laser across the band produces a beat line at each detuning; at high
signal-to-noise ratio the line's RMS power depends only on the injected
power and the chain gain, not on the noise properties of either laser.
Normalizing the line power by the injected power gives the raw transfer
function, and multiplying by the shot-noise energy quantum lower-bounds the
vacuum-fluctuation PSD of the same chain.  The bound is conservative for
every physical detector: imperfect photodiode efficiencies, an unbalanced
splitter or reduced interference visibility all make the measured beat
weaker relative to the true shot noise (see :func:`cmrr_factor`).

A flat calibration attenuator (inserted to protect the digitizer from the
strong beat) is modeled as an exact scalar and divided back out here; any
systematic error on it belongs in the parameter-estimation failure budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, LineNotFound
from .spectral import welch_psd

__all__ = [
    "TransferFunction",
    "beat_power",
    "build_transfer_function",
    "vacuum_psd_bound",
    "cmrr_factor",
    "read_sweep_manifest",
]


@dataclass(frozen=True)
class TransferFunction:
    """Swept-gain measurement of the detection chain.

    ``tf`` is normalized to a maximum of 1 for reporting; ``tf_raw`` keeps
    the un-normalized line power per watt of injected signal, which is what
    the vacuum bound needs.
    """

    freqs: np.ndarray
    tf: np.ndarray
    tf_raw: np.ndarray
    p_sig_used: float

    def __post_init__(self) -> None:
        freqs = np.asarray(self.freqs, dtype=float)
        tf = np.asarray(self.tf, dtype=float)
        tf_raw = np.asarray(self.tf_raw, dtype=float)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "tf", tf)
        object.__setattr__(self, "tf_raw", tf_raw)
        if not (len(freqs) == len(tf) == len(tf_raw)):
            raise ValueError("freqs/tf/tf_raw length mismatch")
        if np.any(np.diff(freqs) <= 0.0):
            raise ValueError("freqs must be strictly increasing")
        if np.any(tf < 0.0) or abs(float(tf.max()) - 1.0) > 1e-12:
            raise ValueError("tf must be normalized to max 1")

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("freq_hz,gain_normalized\n")
            for f, g in zip(self.freqs, self.tf):
                fh.write(f"{float(f)!r},{float(g)!r}\n")


def beat_power(record: np.ndarray, nu: float, sample_rate: float,
               block_len: int | None = None, min_snr: float = 10.0) -> float:
    """RMS-squared power of the spectral line at detuning ``nu``.

    An averaged periodogram is searched near the expected bin; the line
    power integrates the peak bin and its two neighbours after subtracting
    the median of the surrounding background bins.  Accuracy is best when
    ``nu`` sits on a bin center (the sweep generator guarantees this);
    off-bin lines lose a few percent to leakage outside the 3-bin window.

    Raises
    ------
    LineNotFound
        If the peak does not exceed the background by ``min_snr`` (power
        ratio, default 10 dB).
    """
    record = np.asarray(record, dtype=float)
    n = len(record)
    if nu <= 0.0 or nu * n / sample_rate < 2.0:
        raise LineNotFound(f"detuning {nu} not resolvable in {n} samples")
    if block_len is None:
        block_len = 256
        while block_len * 8 <= n and block_len < 4096:
            block_len *= 2
    spec = welch_psd(record, block_len, overlap_fraction=0.0, epsilon=1e-3)
    f0, nbins = spec.f0, spec.n_bins

    expect = int(round(nu / sample_rate * block_len))
    if not 2 <= expect <= nbins - 3:
        raise LineNotFound(f"detuning {nu} outside the measurable band")
    lo = max(1, expect - 2)
    peak = lo + int(np.argmax(f0[lo:expect + 3]))

    bg_idx = [j for j in range(peak - 8, peak + 9)
              if abs(j - peak) > 1 and 1 <= j < nbins]
    background = float(np.median(f0[bg_idx]))
    if background <= 0.0 or f0[peak] / background < min_snr:
        raise LineNotFound(
            f"line at nu={nu} has SNR below {10.0 * math.log10(min_snr):.0f} dB")
    line = float(np.sum(f0[peak - 1:peak + 2] - background))
    return max(0.0, line) / nbins


def build_transfer_function(sweep, p_sig: float, sample_rate: float = 1.0,
                            attenuation: float = 1.0) -> TransferFunction:
    """Transfer function from a frequency sweep of (nu, record) pairs.

    Each record's line power is normalized by the injected signal power and
    the calibration attenuator; the result is sorted by frequency and
    scaled to a maximum gain of 1 (the raw values are kept alongside).
    """
    sweep = list(sweep)
    if len(sweep) < 3:
        raise ValueError("need at least 3 sweep points")
    if not p_sig > 0.0:
        raise ValueError("p_sig must be positive")
    if not 0.0 < attenuation <= 1.0:
        raise ValueError("attenuation must be in (0, 1]")
    sweep.sort(key=lambda item: item[0])
    freqs = np.array([nu for nu, _ in sweep], dtype=float)
    raw = np.array([beat_power(rec, nu, sample_rate) for nu, rec in sweep])
    raw = raw / (p_sig * attenuation)
    return TransferFunction(freqs=freqs, tf=raw / raw.max(), tf_raw=raw,
                            p_sig_used=p_sig)


def vacuum_psd_bound(tf: TransferFunction, omega_l: float = 1.0,
                     hbar: float = 1.0) -> np.ndarray:
    """Per-frequency lower bound on the vacuum-fluctuation PSD.

    The raw transfer function times the shot-noise energy quantum
    ``hbar * omega_l``, in the squared-ADC-count-per-hertz units of the
    capture chain.  Desk-scale runs keep ``hbar = omega_l = 1``.
    """
    return hbar * omega_l * tf.tf_raw.copy()


def cmrr_factor(eta1: float, eta2: float, r: float) -> float:
    """Common-mode-rejection factor relating beat power to shot noise.

        (eta1 (1-r) + eta2 r) / ((eta1 + eta2)^2 r (1-r))

    Always >= 1 on the physical domain, with equality only for two unit
    efficiencies and a balanced splitter; this is why the transfer-function
    calibration can only underestimate the vacuum PSD.

    Raises
    ------
    DomainError
        If an efficiency leaves (0, 1] or the splitting ratio leaves (0, 1).
    """
    if not (0.0 < eta1 <= 1.0 and 0.0 < eta2 <= 1.0):
        raise DomainError("efficiencies must be in (0, 1]")
    if not 0.0 < r < 1.0:
        raise DomainError("splitting ratio must be in (0, 1)")
    return (eta1 * (1.0 - r) + eta2 * r) / ((eta1 + eta2) ** 2 * r * (1.0 - r))


def read_sweep_manifest(path):
    """Parse a sweep manifest CSV: ``nu_hz,record_path,p_sig_watts``.

    Returns (list of (nu, record_path) pairs, common p_sig).  The injected
    power must be constant across the sweep.
    """
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "nu_hz,record_path,p_sig_watts":
            raise ValueError(f"unexpected manifest header: {header}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            nu_s, rec_path, p_s = line.split(",")
            rows.append((float(nu_s), rec_path, float(p_s)))
    if not rows:
        raise ValueError("empty sweep manifest")
    p_sigs = {p for _, _, p in rows}
    if len(p_sigs) != 1:
        raise ValueError("p_sig must be constant across the sweep")
    return [(nu, rec) for nu, rec, _ in rows], rows[0][2]
