"""Distribution fitting and goodness-of-fit summaries for gap samples.

Covers the pipeline from raw gap samples to a judged Gaussian fit:
equal-width histograms, moment fits, expected bin counts under the fit,
normalized root-mean-square error (NRMSE), a Gaussian kernel density
estimate, and the left-tail mass of that density up to a collision
threshold (adaptive quadrature).

Also home to the empirical variance-model comparison: nine candidate
shapes in (v, eta) are fitted to measured gap variances and ranked by R^2
on the original scale.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import ndtr

__all__ = [
    "Histogram",
    "GaussianFit",
    "DensityEstimate",
    "InsufficientDataError",
    "DegenerateRangeError",
    "histogram",
    "fit_gaussian",
    "expected_counts",
    "nrmse",
    "gaussian_fit_nrmse",
    "kde",
    "empirical_collision_prob",
    "VARIANCE_FORMS",
    "fit_variance_forms",
    "variance_form_r2",
    "estimate_sigma_o",
    "write_histogram_csv",
    "read_histogram_csv",
]


class InsufficientDataError(ValueError):
    """Too few samples for the requested estimate."""


class DegenerateRangeError(ValueError):
    """The samples have no spread (all values identical)."""


@dataclass(frozen=True)
class Histogram:
    """Equal-width histogram: edges has one more entry than counts; the last
    bin is closed on the right so the maximum sample is counted."""

    edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        if len(self.edges) != len(self.counts) + 1:
            raise ValueError("edges must have len(counts)+1 entries")

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def bin_width(self) -> float:
        return float(self.edges[1] - self.edges[0])


@dataclass(frozen=True)
class GaussianFit:
    """Moment fit: sample mean and sample standard deviation (ddof=1)."""

    mu: float
    sigma: float
    n: int


@dataclass(frozen=True)
class DensityEstimate:
    """Gaussian-kernel density estimate over a fixed sample set."""

    samples: np.ndarray
    bandwidth: float

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")

    @property
    def n(self) -> int:
        return len(self.samples)

    def evaluate(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        h = self.bandwidth
        # chunk the outer difference so huge sample sets stay in memory
        out = np.empty(len(x))
        step = max(1, int(4e6 // max(len(self.samples), 1)))
        for i in range(0, len(x), step):
            z = (x[i : i + step, None] - self.samples[None, :]) / h
            out[i : i + step] = np.exp(-0.5 * z * z).mean(axis=1)
        return out / (h * math.sqrt(2.0 * math.pi))

    def __call__(self, x: float) -> float:
        return float(self.evaluate(x)[0])


def histogram(samples, n_bins: int) -> Histogram:
    """Equal-width histogram over [min(samples), max(samples)]."""
    x = np.asarray(samples, dtype=float)
    if n_bins < 2:
        raise ValueError("n_bins must be at least 2")
    if len(x) < 2:
        raise InsufficientDataError("need at least 2 samples")
    if x.min() == x.max():
        raise DegenerateRangeError("all samples identical; histogram range is empty")
    counts, edges = np.histogram(x, bins=n_bins, range=(x.min(), x.max()))
    return Histogram(edges=edges, counts=counts)


def fit_gaussian(samples) -> GaussianFit:
    x = np.asarray(samples, dtype=float)
    if len(x) < 2:
        raise InsufficientDataError("need at least 2 samples")
    return GaussianFit(mu=float(x.mean()), sigma=float(x.std(ddof=1)), n=len(x))


def expected_counts(fit: GaussianFit, edges) -> np.ndarray:
    """Expected bin counts under the fitted Gaussian: n * (Phi(r) - Phi(l))."""
    if fit.sigma <= 0:
        raise DegenerateRangeError("fit has zero spread")
    e = np.asarray(edges, dtype=float)
    cdf = ndtr((e - fit.mu) / fit.sigma)
    return fit.n * np.diff(cdf)


def nrmse(reference, expected) -> float:
    """||reference - expected||_2 / ||reference - mean(reference)||_2."""
    r = np.asarray(reference, dtype=float)
    e = np.asarray(expected, dtype=float)
    if r.shape != e.shape or len(r) < 2:
        raise ValueError("reference and expected must share a length of at least 2")
    denom = np.linalg.norm(r - r.mean())
    if denom == 0.0:
        raise DegenerateRangeError("reference has no spread; NRMSE undefined")
    return float(np.linalg.norm(r - e) / denom)


def gaussian_fit_nrmse(samples, n_bins: int = 100) -> tuple[Histogram, GaussianFit, np.ndarray, float]:
    """Histogram the samples, fit a Gaussian, and judge the fit by NRMSE of
    the observed bin counts against the expected counts. Returns
    (histogram, fit, expected, nrmse)."""
    hist = histogram(samples, n_bins)
    fit = fit_gaussian(samples)
    exp = expected_counts(fit, hist.edges)
    return hist, fit, exp, nrmse(hist.counts, exp)


def kde(samples, bandwidth: float | None = None) -> DensityEstimate:
    """Gaussian KDE; bandwidth defaults to Silverman's rule 1.06*s*n^(-1/5)."""
    x = np.asarray(samples, dtype=float)
    if len(x) < 10:
        raise InsufficientDataError("need at least 10 samples for a density estimate")
    if bandwidth is None:
        s = float(x.std(ddof=1))
        if s == 0.0:
            raise DegenerateRangeError("all samples identical; bandwidth undefined")
        bandwidth = 1.06 * s * len(x) ** -0.2
    return DensityEstimate(samples=x.copy(), bandwidth=float(bandwidth))


def empirical_collision_prob(density: DensityEstimate, l: float) -> float:
    """Left-tail mass of the estimated gap density up to l, by adaptive
    quadrature. Monotone in l; clipped into [0, 1]."""
    # Integrate only across the effective support (12 bandwidths leave less
    # than 1e-30 of each kernel outside); an unbounded interval would let the
    # adaptive rule step right over the density bump.
    lo = float(density.samples.min()) - 12.0 * density.bandwidth
    hi = float(density.samples.max()) + 12.0 * density.bandwidth
    if l <= lo:
        return 0.0
    mass, _ = integrate.quad(
        density, lo, min(l, hi), epsabs=1e-12, epsrel=1e-10, limit=400
    )
    return float(min(max(mass, 0.0), 1.0))


# ---------------------------------------------------------------------------
# Variance-model comparison.

VARIANCE_FORMS = (
    "v*eta",
    "v*eta^2",
    "v*eta^3",
    "v^2*eta",
    "v^2*eta^2",
    "v^3*eta",
    "exp(v*eta)",
    "exp(v*eta^2)",
    "exp(v^2*eta)",
)


def _feature(name: str, v: np.ndarray, eta: np.ndarray) -> tuple[np.ndarray, bool]:
    """Raw feature for a candidate form; True if the form is exponential."""
    base = {
        "v*eta": v * eta,
        "v*eta^2": v * eta**2,
        "v*eta^3": v * eta**3,
        "v^2*eta": v**2 * eta,
        "v^2*eta^2": v**2 * eta**2,
        "v^3*eta": v**3 * eta,
    }
    if name in base:
        return base[name], False
    inner = name[4:-1]  # strip "exp(" and ")"
    return base[inner], True


@dataclass(frozen=True)
class FormFit:
    """One fitted candidate form. For linear forms y ~ c0 + c1*f; for
    exponential forms ln y ~ c0 + c1*(f/scale), judged on the y scale."""

    name: str
    r2: float
    c0: float
    c1: float
    scale: float
    exponential: bool

    def predict(self, v, eta) -> np.ndarray:
        f, _ = _feature(self.name, np.asarray(v, float), np.asarray(eta, float))
        if self.exponential:
            return np.exp(self.c0 + self.c1 * (f / self.scale))
        return self.c0 + self.c1 * f


def fit_variance_forms(
    v, eta, var, through_origin: bool = False
) -> dict[str, FormFit]:
    """Fit all nine candidate variance shapes and score each by R^2 on the
    original variance scale.

    Polynomial forms are fitted by linear least squares on y (optionally
    through the origin). Exponential forms are fitted on ln y with the
    feature scaled by its maximum, which keeps the exponent in range; their
    R^2 is still computed on y itself. Exponential fits always keep the
    intercept (it is the multiplicative prefactor).
    """
    v = np.asarray(v, dtype=float)
    eta = np.asarray(eta, dtype=float)
    y = np.asarray(var, dtype=float)
    if not (len(v) == len(eta) == len(y)) or len(y) < 3:
        raise ValueError("need at least 3 aligned (v, eta, var) samples")
    if np.any(y <= 0):
        raise ValueError("variances must be positive to fit exponential forms")
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise DegenerateRangeError("variance samples have no spread")

    fits: dict[str, FormFit] = {}
    for name in VARIANCE_FORMS:
        f, is_exp = _feature(name, v, eta)
        if is_exp:
            scale = float(np.abs(f).max())
            fx = f / scale
            design = np.column_stack([np.ones_like(fx), fx])
            coef, *_ = np.linalg.lstsq(design, np.log(y), rcond=None)
            c0, c1 = float(coef[0]), float(coef[1])
            pred = np.exp(c0 + c1 * fx)
        else:
            scale = 1.0
            if through_origin:
                design = f[:, None]
                coef, *_ = np.linalg.lstsq(design, y, rcond=None)
                c0, c1 = 0.0, float(coef[0])
            else:
                design = np.column_stack([np.ones_like(f), f])
                coef, *_ = np.linalg.lstsq(design, y, rcond=None)
                c0, c1 = float(coef[0]), float(coef[1])
            pred = c0 + c1 * f
        r2 = 1.0 - float(((y - pred) ** 2).sum()) / ss_tot
        fits[name] = FormFit(
            name=name, r2=r2, c0=c0, c1=c1, scale=scale, exponential=is_exp
        )
    return fits


def variance_form_r2(v, eta, var, through_origin: bool = False) -> dict[str, float]:
    """R^2 of each candidate form, keyed by form name."""
    return {k: f.r2 for k, f in fit_variance_forms(v, eta, var, through_origin).items()}


def estimate_sigma_o(v, eta, var) -> float:
    """Aggregated observation scale implied by a sweep: the through-origin
    slope of var against v^2*eta is sigma_o^2."""
    fits = fit_variance_forms(v, eta, var, through_origin=True)
    slope = fits["v^2*eta"].c1
    if slope <= 0:
        raise ValueError("non-positive fitted slope; sweep too noisy or degenerate")
    return math.sqrt(slope)


# ---------------------------------------------------------------------------
# Histogram CSV (observed counts side by side with expected counts).

HISTOGRAM_HEADER = ["bin_left", "bin_right", "count", "expected_count"]


def write_histogram_csv(hist: Histogram, expected, path) -> None:
    exp = np.asarray(expected, dtype=float)
    if len(exp) != len(hist.counts):
        raise ValueError("expected counts must match the number of bins")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HISTOGRAM_HEADER)
        for i in range(len(hist.counts)):
            w.writerow(
                [
                    f"{hist.edges[i]:.9g}",
                    f"{hist.edges[i + 1]:.9g}",
                    int(hist.counts[i]),
                    f"{exp[i]:.9g}",
                ]
            )


def read_histogram_csv(path) -> tuple[Histogram, np.ndarray]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != HISTOGRAM_HEADER:
            raise ValueError(f"unexpected histogram header: {header}")
        rows = [[float(c) for c in row] for row in r]
    arr = np.asarray(rows)
    edges = np.append(arr[:, 0], arr[-1, 1])
    return Histogram(edges=edges, counts=arr[:, 2].astype(int)), arr[:, 3]
