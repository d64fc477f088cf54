"""Min-entropy certification for ADC-sampled Gaussian randomness sources.

The measured homodyne signal is reduced to an effective iid Gaussian model
with two parameters: a gain ``g`` (ADC counts per vacuum unit) and a mean
photon number ``n`` that absorbs both excess noise and, after folding,
classical noise.  Against an adversary holding quantum side information the
per-sample min-entropy of the quantized outcome is lower bounded by a
one-parameter family of closed-form expressions; :func:`optimize_delta`
selects the tightest member.  :func:`worst_case_min_entropy` minimizes the
optimized bound over the confidence-interval corners of the measured
variances, and :func:`secure_length` applies the leftover-hash penalty to
size the extractor output.

Conventions
-----------
* All entropies are in bits (base-2 logarithms).
* The bound depends on the ADC geometry only through the ratios
  ``delta_x / g`` and ``range_R / g``.  Real captures therefore work in raw
  ADC counts, where ``delta_x = 1`` and ``range_R = 2**(bits - 1)``.
* erf/erfc terms are evaluated in log space with complementary functions so
  that extreme saturation or resolution regimes do not lose precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import erf, erfc, log_ndtr

from .errors import DegenerateModel, InconsistentModel, InvalidDelta, NegativeNoise

_LN2 = math.log(2.0)
_SQRT2 = math.sqrt(2.0)

__all__ = [
    "AdcSpec",
    "IidParams",
    "NoiseModel",
    "EntropyReport",
    "iid_params_from_variances",
    "min_entropy_lower_bound",
    "optimize_delta",
    "fold_classical_noise",
    "worst_case_min_entropy",
    "secure_length",
    "homodyne_upper_bound",
    "small_bin_lower_bound_at_delta_n",
    "small_bin_homodyne_upper_bound",
]


@dataclass(frozen=True)
class AdcSpec:
    """Geometry of the digitizer: ``d = 2**bits`` bins over ``(-R, R]``.

    The two extreme bins collect all out-of-range samples, so the interior
    ``d - 2`` bins of width ``delta_x`` tile ``(-R, R]`` and
    ``delta_x = 2 * range_R / (d - 2)``.  ``delta_x`` may be given
    explicitly (e.g. exactly 1 ADC count); it must then agree with the
    derived value to 0.1% relative.
    """

    bits: int
    range_R: float
    delta_x: float = 0.0

    def __post_init__(self) -> None:
        if self.bits < 2:
            raise ValueError("ADC needs at least 2 bits (4 bins)")
        if not self.range_R > 0.0:
            raise ValueError("ADC range must be positive")
        derived = 2.0 * self.range_R / (self.d - 2)
        if self.delta_x == 0.0:
            object.__setattr__(self, "delta_x", derived)
        else:
            if not self.delta_x > 0.0:
                raise ValueError("bin width must be positive")
            if abs(self.delta_x - derived) > 1e-3 * derived:
                raise ValueError(
                    f"delta_x={self.delta_x} inconsistent with "
                    f"2*range_R/(d-2)={derived}"
                )

    @property
    def d(self) -> int:
        return 2 ** self.bits

    @classmethod
    def from_bin_width(cls, bits: int, delta_x: float) -> "AdcSpec":
        """Build a spec from the bin width, deriving the range."""
        d = 2 ** bits
        return cls(bits=bits, range_R=delta_x * (d - 2) / 2.0, delta_x=delta_x)


@dataclass(frozen=True)
class IidParams:
    """Effective iid model: gain ``g`` > 0 and mean photon number ``n`` >= 0.

    ``n`` includes folded classical noise when derived from a
    :class:`NoiseModel` (see :func:`iid_params_from_variances`).
    """

    g: float
    n: float

    def __post_init__(self) -> None:
        if not self.g > 0.0:
            raise ValueError("gain must be positive")
        if self.n < 0.0:
            raise ValueError("mean photon number must be non-negative")


@dataclass(frozen=True)
class NoiseModel:
    """Measured variance triple with confidence intervals.

    ``sigma2`` is the total signal variance, ``sigma_x2`` the conditional
    signal variance (given the entire past) and ``sigma_u2`` the conditional
    excess-noise variance, all in squared ADC counts.  Each CI is a closed
    interval containing its point estimate; ``eps_pe`` is the probability
    that any true value falls outside its interval.

    Model validity (``sigma_u2 < sigma_x2 <= sigma2``) is checked by the
    operations that consume the model, not at construction, so that
    degenerate inputs can be exercised deliberately.
    """

    sigma2: float
    sigma_x2: float
    sigma_u2: float
    sigma2_ci: tuple[float, float]
    sigma_x2_ci: tuple[float, float]
    sigma_u2_ci: tuple[float, float]
    eps_pe: float

    def __post_init__(self) -> None:
        for point, (lo, hi), name in (
            (self.sigma2, self.sigma2_ci, "sigma2"),
            (self.sigma_x2, self.sigma_x2_ci, "sigma_x2"),
            (self.sigma_u2, self.sigma_u2_ci, "sigma_u2"),
        ):
            if not (lo <= point <= hi):
                raise ValueError(f"{name} CI [{lo}, {hi}] does not contain {point}")
        if not 0.0 < self.eps_pe < 1.0:
            raise ValueError("eps_pe must be in (0, 1)")

    @classmethod
    def point_estimates(cls, sigma2: float, sigma_x2: float, sigma_u2: float,
                        eps_pe: float = 1e-10) -> "NoiseModel":
        """Zero-width confidence intervals (formula-level evaluation)."""
        return cls(sigma2, sigma_x2, sigma_u2,
                   (sigma2, sigma2), (sigma_x2, sigma_x2), (sigma_u2, sigma_u2),
                   eps_pe)

    @classmethod
    def with_halfwidths(cls, sigma2: float, w2: float, sigma_x2: float, wx: float,
                        sigma_u2: float, wu: float, eps_pe: float = 1e-10) -> "NoiseModel":
        """Symmetric confidence intervals ``point +/- halfwidth``."""
        return cls(sigma2, sigma_x2, sigma_u2,
                   (sigma2 - w2, sigma2 + w2),
                   (sigma_x2 - wx, sigma_x2 + wx),
                   (sigma_u2 - wu, sigma_u2 + wu),
                   eps_pe)

    @classmethod
    def from_estimates(cls, sigma2_est, sigma_x2_est, sigma_u2_est,
                       eps_pe: float) -> "NoiseModel":
        """Build from objects carrying ``point``/``lo``/``hi`` attributes."""
        return cls(sigma2_est.point, sigma_x2_est.point, sigma_u2_est.point,
                   (sigma2_est.lo, sigma2_est.hi),
                   (sigma_x2_est.lo, sigma_x2_est.hi),
                   (sigma_u2_est.lo, sigma_u2_est.hi),
                   eps_pe)


@dataclass(frozen=True)
class EntropyReport:
    """Worst-case certification result.

    ``h_min`` is clamped at zero here; the raw bound functions report
    negative values unclamped so they stay testable against oracles.
    """

    h_min: float
    delta_star: float
    worst_case_corner: str
    secure_len: int
    upper_bound_homodyne: float
    eps_hash: float
    eps_pe: float

    def to_text(self) -> str:
        """Serialize as ``key: value`` lines with fixed key names."""
        lines = [
            f"h_min_bits: {self.h_min!r}",
            f"delta_star: {self.delta_star!r}",
            f"corner: {self.worst_case_corner}",
            f"secure_len_bits: {self.secure_len}",
            f"eps_hash: {self.eps_hash!r}",
            f"eps_pe: {self.eps_pe!r}",
        ]
        return "\n".join(lines) + "\n"


def iid_params_from_variances(model: NoiseModel) -> IidParams:
    """Solve the effective iid model from the measured variance triple.

    The conditional signal variance fixes ``g**2 * (1 + 2n)``, the
    conditional excess-noise variance fixes ``2 * g**2 * n``, and the gap
    between total and conditional signal variance is folded into ``n`` as
    classical noise:

        g = sqrt(sigma_x2 - sigma_u2)
        n = sigma2 / (2 * (sigma_x2 - sigma_u2)) - 1/2

    Raises
    ------
    DegenerateModel
        If ``sigma_x2 <= sigma_u2`` (zero or imaginary gain).
    InconsistentModel
        If ``sigma2 < sigma_x2``.
    """
    return _iid_params(model.sigma2, model.sigma_x2, model.sigma_u2)


def _iid_params(sigma2: float, sigma_x2: float, sigma_u2: float) -> IidParams:
    if sigma_x2 <= sigma_u2:
        raise DegenerateModel(
            f"sigma_x2={sigma_x2} must exceed sigma_u2={sigma_u2}")
    if sigma2 < sigma_x2:
        raise InconsistentModel(
            f"sigma2={sigma2} must be at least sigma_x2={sigma_x2}")
    gap = sigma_x2 - sigma_u2
    g = math.sqrt(gap)
    n = sigma2 / (2.0 * gap) - 0.5
    return IidParams(g=g, n=n)


def fold_classical_noise(n: float, g: float, zeta: float) -> float:
    """Fold a classical noise variance ``zeta`` into the quantum noise.

    ``zeta`` is the variance convention (total minus conditional signal
    variance), so the folded mean photon number is ``n + zeta / (2 g**2)``.
    """
    if zeta < 0.0:
        raise NegativeNoise(f"classical noise variance zeta={zeta} < 0")
    return n + zeta / (2.0 * g * g)


def _log_erf(x: float) -> float:
    # natural log of erf(x) for x > 0; complementary form avoids the
    # 1 - tiny cancellation for large arguments
    if x < 1.0:
        return math.log(erf(x))
    return math.log1p(-erfc(x))


def _log_half_erfc(x: float) -> float:
    # ln(erfc(x)/2) = ln Phi(-sqrt(2) x); log_ndtr stays accurate for
    # arbitrarily large x where erfc underflows
    return float(log_ndtr(-_SQRT2 * x))


def _bound_bits(g: float, n: float, dx: float, r: float, delta: float) -> float:
    """Scalar core of the quantum-side-information lower bound, in bits."""
    s = math.sqrt(delta / (4.0 * n * (n + 1.0 + delta) + 2.0 * delta))
    log_pref = math.log(n + delta) + math.log(1.0 + n + delta) - math.log(delta)
    log_term = max(_log_erf(s * dx / (2.0 * g)), _log_half_erfc(s * r / g))
    return -(log_pref + log_term) / _LN2


def min_entropy_lower_bound(params: IidParams, adc: AdcSpec, delta: float) -> float:
    """One member of the lower-bound family on the per-sample min-entropy.

    For a given ``delta > 0`` the bound reads

        -log2[ (n+delta)(1+n+delta)/delta
               * max{ erf(s * delta_x / (2 g)), erfc(s * range_R / g) / 2 } ]

    with ``s = sqrt(delta / (4 n (n+1+delta) + 2 delta))``.  The first term
    covers the best-resolved interior bin, the second the saturation bins.
    The value may be negative for a poor ``delta``; callers clamp at report
    level only.
    """
    if not delta > 0.0:
        raise InvalidDelta(f"delta={delta} must be > 0")
    return _bound_bits(params.g, params.n, adc.delta_x, adc.range_R, delta)


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def optimize_delta(params: IidParams, adc: AdcSpec) -> tuple[float, float]:
    """Maximize the lower-bound family over its free parameter.

    Golden-section search on ``log10(delta)`` over six decades on each side
    of ``n`` (centered on 1e-6 when ``n = 0``), refined to 1e-6 relative.
    The bound is smooth except for one kink where the interior and
    saturation terms cross, and is unimodal in practice; ``delta = n`` is a
    guaranteed-feasible fallback, so the returned value never falls below
    the bound evaluated there.
    """
    g, n, dx, r = params.g, params.n, adc.delta_x, adc.range_R
    # photon numbers below 1e-300 are numerically zero; keeping the search
    # bracket away from the subnormal floor keeps 10**u strictly positive
    center = math.log10(n) if n > 1e-300 else -6.0
    lo, hi = center - 6.0, center + 6.0

    def f(u: float) -> float:
        return _bound_bits(g, n, dx, r, 10.0 ** u)

    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d_ = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d_)
    while (b - a) > 1e-6:
        if fc >= fd:
            b, d_, fd = d_, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d_, fd
            d_ = a + _GOLDEN * (b - a)
            fd = f(d_)
    u_star = c if fc >= fd else d_
    delta_star = 10.0 ** u_star
    h_star = _bound_bits(g, n, dx, r, delta_star)

    if n > 1e-300:
        h_fallback = _bound_bits(g, n, dx, r, n)
        if h_fallback > h_star:
            return n, h_fallback
    return delta_star, h_star


def homodyne_upper_bound(params: IidParams, adc: AdcSpec) -> float:
    """Min-entropy upper bound for an adversary limited to homodyne detection.

    Evaluated at the optimal ADC range, so it depends only on the resolved
    bin width:  -log2 erf( (delta_x / g) * sqrt(2 + 4 n) / 4 ).
    """
    x = (adc.delta_x / params.g) * math.sqrt(2.0 + 4.0 * params.n) / 4.0
    return -_log_erf(x) / _LN2


def small_bin_lower_bound_at_delta_n(n: float, dx_over_g: float) -> float:
    """Fine-resolution asymptote of the lower bound at ``delta = n``.

        -log2(dx/g) - log2( sqrt(2) (2n+1) / sqrt(pi (4n+3)) )

    Valid for ``n > 0``, negligible saturation and ``dx/g`` small.
    """
    if not n > 0.0:
        raise ValueError("asymptote requires n > 0")
    return (-math.log2(dx_over_g)
            - math.log2(_SQRT2 * (2.0 * n + 1.0) / math.sqrt(math.pi * (4.0 * n + 3.0))))


def small_bin_homodyne_upper_bound(n: float, dx_over_g: float) -> float:
    """Fine-resolution asymptote of the homodyne upper bound.

        -log2(dx/g) - log2( sqrt((1 + 2n) / (2 pi)) )
    """
    return (-math.log2(dx_over_g)
            - math.log2(math.sqrt((1.0 + 2.0 * n) / (2.0 * math.pi))))


def secure_length(n_samples: int, h_min: float, eps_hash: float) -> int:
    """Extractable bits from ``n_samples`` aggregated samples.

    Leftover hash lemma: ``floor(n_samples * h_min - 2 log2(1/eps_hash))``,
    clamped at zero (zero means nothing extractable).  ``eps_hash = 1`` is
    accepted as the degenerate no-penalty case.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not 0.0 < eps_hash <= 1.0:
        raise ValueError("eps_hash must be in (0, 1]")
    raw = n_samples * h_min - 2.0 * math.log2(1.0 / eps_hash)
    return max(0, math.floor(raw))


_CORNER_LABELS = {0: "lo", 1: "hi"}


def worst_case_min_entropy(model: NoiseModel, adc: AdcSpec, *,
                           n_block: int | None = None,
                           eps_hash: float | None = None) -> EntropyReport:
    """Certified min-entropy minimized over the confidence-interval corners.

    The optimized bound is evaluated at all 8 corners of the variance CIs
    and the minimum is returned together with the minimizing corner.  The
    bound is monotone in each variance, so extrema sit at corners; corners
    with ``sigma2 < sigma_x2`` (impossible for any stationary process, and
    never minimizers) are skipped.

    When ``n_block`` and ``eps_hash`` are given, the per-block secure output
    length is filled in; otherwise it is reported as 0.

    Raises
    ------
    DegenerateModel
        If the pessimistic corner has ``sigma_x2_lo <= sigma_u2_hi``.
    """
    if model.sigma_x2_ci[0] <= model.sigma_u2_ci[1]:
        raise DegenerateModel(
            "worst corner has sigma_x2 lower bound below sigma_u2 upper bound")

    best: tuple[float, float, str, IidParams] | None = None
    for i2, s2 in enumerate(model.sigma2_ci):
        for ix, sx in enumerate(model.sigma_x2_ci):
            for iu, su in enumerate(model.sigma_u2_ci):
                try:
                    params = _iid_params(s2, sx, su)
                except InconsistentModel:
                    continue
                delta_star, h = optimize_delta(params, adc)
                if best is None or h < best[0]:
                    corner = (f"sigma2={_CORNER_LABELS[i2]},"
                              f"sigma_x2={_CORNER_LABELS[ix]},"
                              f"sigma_u2={_CORNER_LABELS[iu]}")
                    best = (h, delta_star, corner, params)

    assert best is not None  # the (hi, hi, lo) corner is always consistent
    h, delta_star, corner, params = best
    h_clamped = max(0.0, h)
    upper = homodyne_upper_bound(params, adc)
    if n_block is not None and eps_hash is not None:
        sec = secure_length(n_block, h_clamped, eps_hash)
    else:
        sec = 0
    return EntropyReport(
        h_min=h_clamped,
        delta_star=delta_star,
        worst_case_corner=corner,
        secure_len=sec,
        upper_bound_homodyne=upper,
        eps_hash=eps_hash if eps_hash is not None else float("nan"),
        eps_pe=model.eps_pe,
    )
