"""Sampling and mollification of the 3D Fourier white noise on the torus.

A realization is the set of Gaussian coefficients of the series

    v_j(x) = eta_j + Re[ sum_{k != 0} eta_{kj} e^{i(k,x)} ],   j = 1,2,3,

with eta_j standard real Gaussians and eta_{kj} i.i.d. standard complex
Gaussians normalized so E|eta_{kj}|^2 = 1 (Re and Im independent N(0, 1/2)).
Coefficients at k and -k are drawn independently (the series form above is
sampled literally, not Hermitian-symmetrized); the induced coefficient of
e^{i(k,x)} in the realized real field is (eta_k + conj(eta_{-k}))/2, with
variance 1/2 per mode.

Modes are drawn shell by shell in max-norm order with a fixed lexicographic
order inside each shell, so a realization is reproducible bit-for-bit from
its seed and is grid-agnostic up to truncation: refining the grid extends
the same realization instead of resampling it.

Mollification at scale eps multiplies mode k by rho_hat(eps*k), the Fourier
transform of the standard bump rho(x) = C*exp(-1/(1-|x|^2)) on |x| < 1,
computed by radial quadrature.  eps = 0 means pure grid truncation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import j0

from .spectral import ScalarField, TorusGrid, VectorField3


class MollifierResolutionWarning(UserWarning):
    """eps below the grid spacing: the mollifier is not resolved."""


class QuadratureError(RuntimeError):
    """Mollifier quadrature failed its self-consistency check."""


# ---------------------------------------------------------------------------
# standard mollifier
# ---------------------------------------------------------------------------

_GL_NODES = 600


def bump_profile(r: np.ndarray) -> np.ndarray:
    """Unnormalized radial bump exp(-1/(1-r^2)) on r < 1, zero outside."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def _gauss_legendre_01(nodes: int):
    x, w = leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def bump_mass_2d(nodes: int = _GL_NODES) -> float:
    """Integral of the unnormalized bump over R^2."""
    r, w = _gauss_legendre_01(nodes)
    return float(2.0 * np.pi * np.sum(bump_profile(r) * r * w))


def _radial_hat(ts: np.ndarray, nodes: int) -> np.ndarray:
    """Fourier transform of the unit-mass bump at radial frequencies ts.

    rho is radial, so rho_hat(u) depends on t = |u| only and equals the
    Hankel transform 2*pi*Int_0^1 p(r) J0(t r) r dr / mass.
    """
    r, w = _gauss_legendre_01(nodes)
    pw = bump_profile(r) * r * w
    mass = 2.0 * np.pi * np.sum(pw)
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    out = 2.0 * np.pi * (pw @ j0(np.outer(r, ts.ravel())))
    return (out / mass).reshape(ts.shape)


def mollifier_hat(eps: float, k, nodes: int = _GL_NODES, check: bool = True) -> np.ndarray:
    """rho_hat(eps*k) for mode(s) k, by radial Gauss-Legendre quadrature.

    k may be a single (k1, k2) pair or an array of |k| values.  The result is
    real, even in k, equals 1 at k = 0, and is verified against a halved-node
    quadrature to 1e-10 absolute (QuadratureError otherwise).
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    karr = np.asarray(k, dtype=float)
    if karr.ndim == 1 and karr.shape == (2,):
        t = eps * float(np.hypot(karr[0], karr[1]))
        ts = np.array([t])
    else:
        ts = eps * np.abs(karr)
    vals = _radial_hat(ts, nodes)
    if check:
        probe = ts.ravel()
        if probe.size > 64:
            probe = probe[np.linspace(0, probe.size - 1, 64).astype(int)]
        coarse = _radial_hat(probe, nodes // 2)
        fine = _radial_hat(probe, nodes)
        if np.max(np.abs(coarse - fine)) > 1e-10:
            raise QuadratureError(
                "mollifier quadrature did not converge to 1e-10; "
                "increase nodes or reduce eps*|k|"
            )
    if np.isscalar(k) or (karr.ndim == 1 and karr.shape == (2,)):
        return float(vals.ravel()[0])  # type: ignore[return-value]
    return vals


@dataclass(frozen=True)
class MollifierTable:
    """Cached rho_hat(eps*k) over all modes of one grid."""

    eps: float
    n: int
    hat: np.ndarray  # shape (n, n), real

    @classmethod
    def build(cls, eps: float, grid: TorusGrid) -> "MollifierTable":
        if eps == 0.0:
            hat = np.ones((grid.n, grid.n))
        else:
            # quadrature on unique |k| values only
            tvals, inverse = np.unique(grid.mode_abs, return_inverse=True)
            hat = np.asarray(mollifier_hat(eps, tvals))[inverse].reshape(grid.n, grid.n)
        hat.setflags(write=False)
        return cls(eps=eps, n=grid.n, hat=hat)


_TABLE_CACHE: dict[tuple[float, int], MollifierTable] = {}


def mollifier_table(eps: float, grid: TorusGrid) -> MollifierTable:
    key = (float(eps), grid.n)
    try:
        return _TABLE_CACHE[key]
    except KeyError:
        t = MollifierTable.build(eps, grid)
        _TABLE_CACHE[key] = t
        return t


# ---------------------------------------------------------------------------
# noise realizations
# ---------------------------------------------------------------------------

def _shell_modes(s: int) -> np.ndarray:
    """Modes with max(|k1|,|k2|) == s in lexicographic (k1, k2) order."""
    left = np.stack([np.full(2 * s + 1, -s), np.arange(-s, s + 1)], axis=1)
    mid_k1 = np.repeat(np.arange(-s + 1, s), 2)
    mid_k2 = np.tile([-s, s], 2 * s - 1)
    mid = np.stack([mid_k1, mid_k2], axis=1)
    right = np.stack([np.full(2 * s + 1, s), np.arange(-s, s + 1)], axis=1)
    return np.concatenate([left, mid, right], axis=0)


@dataclass(frozen=True)
class NoiseRealization:
    """Gaussian Fourier coefficients of one 3D white-noise realization.

    eta0 holds the three mean modes (zeroed where flagged); eta holds
    eta_{kj} on the dense lattice [-S, S]^2 with origin entry zero, indexed
    eta[j, k1 + S, k2 + S].
    """

    seed: int
    shell_max: int
    eta0: np.ndarray
    eta: np.ndarray
    zero_mean_flags: tuple[bool, bool, bool]

    def coefficient(self, k: tuple[int, int], j: int) -> complex:
        """eta_{kj} for mode k (0-based component j)."""
        S = self.shell_max
        if max(abs(k[0]), abs(k[1])) > S:
            raise ValueError(f"mode {k} outside sampled truncation S={S}")
        return complex(self.eta[j, k[0] + S, k[1] + S])


def sample(seed: int, grid: TorusGrid | int, zero_mean_flags=(False, False, True)) -> NoiseRealization:
    """Draw a noise realization truncated to the grid's shells.

    Identical seeds give bit-identical coefficients; a larger grid with the
    same seed extends the same realization (per-shell draw order).
    """
    shell_max = grid.n // 2 if isinstance(grid, TorusGrid) else int(grid) // 2
    flags = tuple(bool(b) for b in zero_mean_flags)
    if len(flags) != 3:
        raise ValueError("zero_mean_flags must have length 3")
    rng = np.random.default_rng(seed)
    eta0 = rng.standard_normal(3)
    for j in range(3):
        if flags[j]:
            eta0[j] = 0.0
    S = shell_max
    eta = np.zeros((3, 2 * S + 1, 2 * S + 1), dtype=complex)
    for s in range(1, S + 1):
        ks = _shell_modes(s)
        z = rng.standard_normal((ks.shape[0], 3, 2))
        draws = (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)
        eta[:, ks[:, 0] + S, ks[:, 1] + S] = draws.T
    eta.setflags(write=False)
    eta0.setflags(write=False)
    return NoiseRealization(seed=int(seed), shell_max=S, eta0=eta0, eta=eta,
                            zero_mean_flags=flags)  # type: ignore[arg-type]


def realized_coeffs(noise: NoiseRealization, grid: TorusGrid, eps: float) -> np.ndarray:
    """Spectral coefficients (3, n, n) of the realized, mollified fields.

    Mode m of component j carries rho_hat(eps*m) * (eta_m + conj(eta_{-m}))/2,
    the mean mode carries eta_j; '-m' is the wrapped negation so that the
    physical field is exactly real on the grid.
    """
    n = grid.n
    S = noise.shell_max
    if S < n // 2:
        raise ValueError(f"realization truncated at S={S} cannot fill grid n={n}")
    if 0.0 < eps < grid.spacing:
        warnings.warn(
            f"eps={eps:g} below grid spacing {grid.spacing:g}: mollifier unresolved",
            MollifierResolutionWarning,
        )
    k1, k2 = grid.k1, grid.k2
    half = n // 2
    nk1 = np.where(k1 == -half, -half, -k1)
    nk2 = np.where(k2 == -half, -half, -k2)
    hat = mollifier_table(eps, grid).hat
    out = np.empty((3, n, n), dtype=complex)
    for j in range(3):
        eta = noise.eta[j, k1 + S, k2 + S]
        eta_neg = noise.eta[j, nk1 + S, nk2 + S]
        c = 0.5 * (eta + np.conj(eta_neg)) * hat
        c[0, 0] = noise.eta0[j]
        out[j] = c
    return out


def realize(noise: NoiseRealization, grid: TorusGrid, eps: float) -> VectorField3:
    """Realize the three mollified noise components as real physical fields."""
    coeffs = realized_coeffs(noise, grid, eps)
    return VectorField3([ScalarField.from_coeffs(grid, coeffs[j]) for j in range(3)])
