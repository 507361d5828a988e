"""Empirical Holder-Zygmund norms on the grid.

Negative orders (-2 < alpha < 0) are estimated by pairing the field with one
fixed smooth bump phi (supported in the unit ball, nonzero integral) rescaled
to dyadic scales lambda:  estimate = max over lambda of
lambda^(-alpha) * sup_x |f(phi^lambda_x)|.  A single test function with
nonvanishing integral characterizes these norms up to a constant, so the
estimates are equivalent-norm surrogates; every acceptance check downstream
uses ratios, slopes, or stability, never absolute values.

The pairing f(phi^lambda_x) for all centers x at once is the circular
cross-correlation of the grid samples of f and phi^lambda (the discrete
Riemann sum of the integral), evaluated spectrally.

Positive orders alpha in (0,1) use the classical Holder characterization:
sup norm plus max over dyadic offsets h (axis-aligned and diagonal grid
shifts) of sup_x |f(x+h) - f(x)| / |h|^alpha.

The event gate evaluates ||W||_{-1-kappa} (root-sum-square over components)
plus |eta_1| + |eta_2| against a threshold Lambda, and reports the admissible
coupling bound sigma^2 / (16 Lambda).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .noise import NoiseRealization, bump_mass_2d, bump_profile, realize
from .spectral import ScalarField, TorusGrid, VectorField3

FOUR_PI_SQ = 4.0 * np.pi**2


def _bump_base(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    r = np.hypot(x1, x2)
    return bump_profile(r) / bump_mass_2d()


def _bump_d1(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    r2 = x1**2 + x2**2
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = (
        np.exp(-1.0 / (1.0 - r2[inside]))
        * (-2.0 * x1[inside] / (1.0 - r2[inside]) ** 2)
        / bump_mass_2d()
    )
    return out


def _bump_d2(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    return _bump_d1(x2, x1)


_BUMPS = {"base": _bump_base, "d1": _bump_d1, "d2": _bump_d2}


class TestFunctionFamily:
    """Grid discretizations of one bump (and its first derivatives) at dyadic scales.

    scales: decreasing dyadic lambdas, restricted to [4*spacing, 1] by default
    (bump resolution).  Pairing multipliers are cached per (bump, scale).
    """

    __test__ = False  # keep pytest collection away from the Test* name

    def __init__(self, grid: TorusGrid, scales=None):
        self.grid = grid
        if scales is None:
            scales = default_scales(grid)
        scales = sorted((float(s) for s in scales), reverse=True)
        if not scales:
            raise ValueError("no resolved scales for this grid")
        for lam in scales:
            if lam < 2.0 * grid.spacing:
                raise ValueError(f"scale {lam:g} below 2*spacing: unresolved")
            if lam > 1.0:
                raise ValueError(f"scale {lam:g} above 1: bump leaves the unit ball")
        self.scales = tuple(scales)
        self._multipliers: dict[tuple[str, float], np.ndarray] = {}
        self._integrals: dict[float, float] = {}

    def samples(self, lam: float, bump: str = "base") -> np.ndarray:
        """Grid samples of the rescaled copy lam^{-2} * bump(x / lam)."""
        g = self.grid
        return _BUMPS[bump](g.x1 / lam, g.x2 / lam) / lam**2

    def multiplier(self, lam: float, bump: str = "base") -> np.ndarray:
        """Spectral multiplier realizing f -> (x -> f(bump^lam_x)) on the grid."""
        key = (bump, float(lam))
        try:
            return self._multipliers[key]
        except KeyError:
            phi = ScalarField.from_values(self.grid, self.samples(lam, bump))
            m = FOUR_PI_SQ * np.conj(phi.coeffs)
            m.setflags(write=False)
            self._multipliers[key] = m
            return m

    def discrete_integral(self, lam: float) -> float:
        """Riemann-sum integral of the rescaled base bump (exact value is 1)."""
        try:
            return self._integrals[lam]
        except KeyError:
            v = float(np.real(self.multiplier(lam)[0, 0]))
            self._integrals[lam] = v
            return v

    def integral_defects(self) -> dict[float, float]:
        """|discrete integral - 1| per scale (rescaling preserves the integral)."""
        return {lam: abs(self.discrete_integral(lam) - 1.0) for lam in self.scales}


def default_scales(grid: TorusGrid) -> list[float]:
    """Dyadic lambdas 2^-m inside [4*spacing, 1]."""
    out = []
    m = 0
    while 2.0**-m >= 4.0 * grid.spacing:
        out.append(2.0**-m)
        m += 1
    return out


_FAMILY_CACHE: dict[tuple[int, tuple[float, ...]], TestFunctionFamily] = {}


def default_family(grid: TorusGrid, scales=None) -> TestFunctionFamily:
    key_scales = tuple(sorted((float(s) for s in (scales or default_scales(grid))), reverse=True))
    key = (grid.n, key_scales)
    try:
        return _FAMILY_CACHE[key]
    except KeyError:
        fam = TestFunctionFamily(grid, key_scales)
        _FAMILY_CACHE[key] = fam
        return fam


def pair_all(f: ScalarField, family: TestFunctionFamily, lam: float,
             bump: str = "base") -> ScalarField:
    """Pairings f(bump^lam_x) for every grid center x, as a field."""
    if f.grid != family.grid:
        raise ValueError("grid mismatch")
    if lam < 2.0 * f.grid.spacing:
        raise ValueError(f"scale {lam:g} below 2*spacing: unresolved")
    return ScalarField.from_coeffs(f.grid, f.coeffs * family.multiplier(lam, bump))


@dataclass(frozen=True)
class NormReport:
    """Per-scale suprema and their max; sup_term is nonzero for alpha > 0."""

    alpha: float
    per_scale: dict[float, float]
    sup_term: float = 0.0
    scales_used: tuple[float, ...] = field(default_factory=tuple)

    @property
    def estimate(self) -> float:
        return self.sup_term + (max(self.per_scale.values()) if self.per_scale else 0.0)


def norm_neg(f: ScalarField, alpha: float, family: TestFunctionFamily | None = None,
             bump: str = "base") -> NormReport:
    """Negative-order estimate: max over scales of lam^-alpha * sup_x |pairing|."""
    if not -2.0 < alpha < 0.0:
        raise ValueError(f"supported negative-order range is (-2, 0), got {alpha}")
    fam = family if family is not None else default_family(f.grid)
    per_scale = {}
    for lam in fam.scales:
        p = pair_all(f, fam, lam, bump)
        per_scale[lam] = float(lam ** (-alpha) * np.max(np.abs(p.values)))
    return NormReport(alpha=alpha, per_scale=per_scale, scales_used=fam.scales)


def holder_offsets(grid: TorusGrid, m_max: int | None = None):
    """Dyadic grid offsets: (shift1, shift2, |h|) for |h| near 2^-m, four directions."""
    out = []
    m = 0
    while True:
        target = 2.0**-m
        if target < 2.0 * grid.spacing or (m_max is not None and m > m_max):
            break
        s = max(1, round(target / grid.spacing))
        out.append((m, [(s, 0, s * grid.spacing),
                        (0, s, s * grid.spacing),
                        (s, s, s * grid.spacing * math.sqrt(2.0)),
                        (s, -s, s * grid.spacing * math.sqrt(2.0))]))
        m += 1
    return out


def norm_holder(f: ScalarField, alpha: float, m_max: int | None = None) -> NormReport:
    """Classical Holder estimate for alpha in (0,1): sup norm + difference quotients."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"holder order must lie in (0,1), got {alpha}")
    v = f.values
    per_scale = {}
    for m, offs in holder_offsets(f.grid, m_max):
        best = 0.0
        for s1, s2, habs in offs:
            d = np.roll(v, (-s1, -s2), axis=(0, 1)) - v
            best = max(best, float(np.max(np.abs(d)) / habs**alpha))
        per_scale[2.0**-m] = best
    return NormReport(alpha=alpha, per_scale=per_scale,
                      sup_term=float(np.max(np.abs(v))),
                      scales_used=tuple(sorted(per_scale, reverse=True)))


def vector_norm_neg(vf: VectorField3, alpha: float,
                    family: TestFunctionFamily | None = None) -> float:
    """Root-sum-square of component estimates."""
    return float(np.sqrt(sum(norm_neg(c, alpha, family).estimate ** 2 for c in vf)))


def vector_norm_holder(vf: VectorField3, alpha: float, m_max: int | None = None) -> float:
    return float(np.sqrt(sum(norm_holder(c, alpha, m_max).estimate ** 2 for c in vf)))


@dataclass(frozen=True)
class GateResult:
    passed: bool
    measured: float
    lam: float
    sigma_budget: float | None
    per_component: tuple[float, float, float]
    eta_term: float


def event_gate(noise: NoiseRealization, kappa: float, lam: float, grid: TorusGrid,
               sigma: float | None = None,
               family: TestFunctionFamily | None = None) -> GateResult:
    """Check ||W||_{-1-kappa} + |eta_1| + |eta_2| < Lambda at eps = 0.

    sigma_budget is the admissible coupling bound sigma^2 / (16 Lambda) when
    sigma is supplied.
    """
    w = realize(noise, grid, 0.0)
    per = tuple(norm_neg(c, -1.0 - kappa, family).estimate for c in w)
    eta_term = float(abs(noise.eta0[0]) + abs(noise.eta0[1]))
    measured = float(np.sqrt(sum(p**2 for p in per)) + eta_term)
    budget = (sigma**2 / (16.0 * lam)) if sigma is not None else None
    return GateResult(passed=bool(measured < lam), measured=measured, lam=float(lam),
                      sigma_budget=budget, per_component=per, eta_term=eta_term)


def young_check(f: ScalarField, g: ScalarField, alpha: float, beta: float,
                family: TestFunctionFamily | None = None) -> float:
    """Ratio  |f g|_beta / (|f|_alpha |g|_beta)  for alpha + beta > 0.

    Boundedness of this ratio over an ensemble is the empirical form of the
    Young product inequality.  Raises on a degenerate (zero) denominator.
    """
    if alpha <= 0 or beta >= 0 or alpha + beta <= 0:
        raise ValueError("need alpha > 0 > beta with alpha + beta > 0")
    num = norm_neg(f * g, beta, family).estimate
    fa = norm_holder(f, alpha).estimate
    gb = norm_neg(g, beta, family).estimate
    if fa == 0.0 or gb == 0.0:
        raise ValueError("degenerate denominator: zero field")
    return float(num / (fa * gb))


def r_independence_ratio(f: ScalarField, alpha: float,
                         family: TestFunctionFamily | None = None) -> float:
    """Base-bump estimate over once-differentiated-bump estimate.

    The two families give equivalent norms up to constants; only finiteness
    and stability of the ratio are meaningful.
    """
    fam = family if family is not None else default_family(f.grid)
    base = norm_neg(f, alpha, fam).estimate
    deriv = max(norm_neg(f, alpha, fam, bump="d1").estimate,
                norm_neg(f, alpha, fam, bump="d2").estimate)
    if deriv == 0.0:
        raise ValueError("degenerate derivative-bump estimate")
    return base / deriv
