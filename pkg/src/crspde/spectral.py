"""Periodic grid, spectral transforms, and Fourier-multiplier operators.

Everything lives on the square 2-torus [-pi, pi)^2 sampled on an n x n grid
(n a power of two).  Fields carry a dual physical/spectral representation;
the forward transform divides by n^2 so that the k=0 coefficient is the grid
mean.  All differential and convolution operators are diagonal in mode space:

    D1, D2 (= Dx, Dy)   i*k1, i*k2
    Dz, Dzbar           (i*k1 + k2)/2, (i*k1 - k2)/2
    K                   1/|k|^2      (zero-mean inverse of -Laplacian)
    G = 2*Dz*K          (k2 + i*k1)/|k|^2
    Gbar = 2*Dzbar*K    (-k2 + i*k1)/|k|^2
    G1, G2              i*k1/|k|^2, i*k2/|k|^2

K, G, Gbar, G1, G2 annihilate the mean mode.  The discrete algebra satisfies
(-2*Dzbar)*(G f) = f - mean(f) exactly, which the rest of the code base leans
on.  At the Nyquist row/column (k = -n/2) the symbols use the literal formula;
fields of interest are mollified, so Nyquist content is negligible.

Multiplier arrays are built once per grid and cached.  Fields are immutable
values; all operations return new fields and are safe to use concurrently.
"""

from __future__ import annotations

import numpy as np

MULTIPLIER_KINDS = (
    "Dx", "Dy", "Dz", "Dzbar", "D1", "D2", "K", "G", "Gbar", "G1", "G2",
)


class TorusGrid:
    """Uniform n x n sampling of [-pi, pi)^2 with wrapped integer modes.

    Attributes:
        n: points per axis (power of two, >= 16)
        spacing: 2*pi/n
        k1, k2: integer mode arrays, shape (n, n), wrapped fftfreq order
        ksq: |k|^2 as float
        x1, x2: physical coordinates of the grid points
    """

    def __init__(self, n: int):
        if n < 16 or (n & (n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 16, got {n}")
        self.n = n
        self.spacing = 2.0 * np.pi / n
        k = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
        self.k1, self.k2 = np.meshgrid(k, k, indexing="ij")
        self.ksq = self.k1.astype(float) ** 2 + self.k2.astype(float) ** 2
        x = -np.pi + self.spacing * np.arange(n)
        self.x1, self.x2 = np.meshgrid(x, x, indexing="ij")
        # phase (-1)^(k1+k2) maps the index-space DFT to coefficients of
        # e^{i(k,x)} with x measured from -pi
        self._phase = np.where((self.k1 + self.k2) % 2 == 0, 1.0, -1.0)
        self._symbols: dict[str, np.ndarray] = {}

    def __eq__(self, other) -> bool:
        return isinstance(other, TorusGrid) and other.n == self.n

    def __hash__(self) -> int:
        return hash(("TorusGrid", self.n))

    def __repr__(self) -> str:
        return f"TorusGrid(n={self.n})"

    def symbol(self, kind: str) -> np.ndarray:
        """Return the cached multiplier array for one of MULTIPLIER_KINDS."""
        try:
            return self._symbols[kind]
        except KeyError:
            pass
        k1 = self.k1.astype(float)
        k2 = self.k2.astype(float)
        if kind in ("Dx", "D1"):
            sym = 1j * k1
        elif kind in ("Dy", "D2"):
            sym = 1j * k2
        elif kind == "Dz":
            sym = 0.5 * (1j * k1 + k2)
        elif kind == "Dzbar":
            sym = 0.5 * (1j * k1 - k2)
        elif kind == "K":
            sym = np.zeros_like(self.ksq, dtype=complex)
            nz = self.ksq > 0
            sym[nz] = 1.0 / self.ksq[nz]
        elif kind == "G":
            sym = (k2 + 1j * k1) * self.symbol("K")
        elif kind == "Gbar":
            sym = (-k2 + 1j * k1) * self.symbol("K")
        elif kind == "G1":
            sym = 1j * k1 * self.symbol("K")
        elif kind == "G2":
            sym = 1j * k2 * self.symbol("K")
        else:
            raise ValueError(f"unknown multiplier kind {kind!r}")
        sym = np.ascontiguousarray(sym, dtype=complex)
        sym.setflags(write=False)
        self._symbols[kind] = sym
        return sym

    @property
    def dealias_mask(self) -> np.ndarray:
        """Boolean 2/3-rule mask: True on modes with max(|k1|,|k2|) < n/3."""
        try:
            return self._symbols["_dealias"]  # type: ignore[return-value]
        except KeyError:
            cut = self.n // 3
            mask = (np.abs(self.k1) < cut) & (np.abs(self.k2) < cut)
            mask.setflags(write=False)
            self._symbols["_dealias"] = mask  # type: ignore[assignment]
            return mask

    @property
    def mode_abs(self) -> np.ndarray:
        """|k| as float, cached."""
        try:
            return self._symbols["_mode_abs"]  # type: ignore[return-value]
        except KeyError:
            r = np.sqrt(self.ksq)
            r.setflags(write=False)
            self._symbols["_mode_abs"] = r  # type: ignore[assignment]
            return r


_GRID_CACHE: dict[int, TorusGrid] = {}


def make_grid(n: int) -> TorusGrid:
    """Shared TorusGrid instance for size n (multipliers cached per grid)."""
    try:
        return _GRID_CACHE[n]
    except KeyError:
        g = TorusGrid(n)
        _GRID_CACHE[n] = g
        return g


class ScalarField:
    """Complex scalar field on a TorusGrid with a physical/spectral tag.

    Immutable.  `values`/`coeffs` return the requested representation,
    converting if necessary.  Round-tripping reproduces the data to
    rounding accuracy.
    """

    __slots__ = ("grid", "data", "rep")

    def __init__(self, grid: TorusGrid, data: np.ndarray, rep: str):
        if rep not in ("physical", "spectral"):
            raise ValueError(f"bad representation tag {rep!r}")
        if data.shape != (grid.n, grid.n):
            raise ValueError(f"data shape {data.shape} != grid {(grid.n, grid.n)}")
        self.grid = grid
        d = np.ascontiguousarray(data, dtype=complex)
        d.setflags(write=False)
        self.data = d
        self.rep = rep

    @classmethod
    def from_values(cls, grid: TorusGrid, values: np.ndarray) -> "ScalarField":
        return cls(grid, values, "physical")

    @classmethod
    def from_coeffs(cls, grid: TorusGrid, coeffs: np.ndarray) -> "ScalarField":
        return cls(grid, coeffs, "spectral")

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "ScalarField":
        return cls(grid, np.zeros((grid.n, grid.n), dtype=complex), "spectral")

    @classmethod
    def constant(cls, grid: TorusGrid, value: complex) -> "ScalarField":
        c = np.zeros((grid.n, grid.n), dtype=complex)
        c[0, 0] = value
        return cls(grid, c, "spectral")

    # representation toggling -------------------------------------------------

    def to_spectral(self) -> "ScalarField":
        if self.rep == "spectral":
            return self
        n = self.grid.n
        coeffs = np.fft.fft2(self.data) * self.grid._phase / n**2
        return ScalarField(self.grid, coeffs, "spectral")

    def to_physical(self) -> "ScalarField":
        if self.rep == "physical":
            return self
        n = self.grid.n
        values = np.fft.ifft2(self.data * self.grid._phase) * n**2
        return ScalarField(self.grid, values, "physical")

    @property
    def values(self) -> np.ndarray:
        return self.to_physical().data

    @property
    def coeffs(self) -> np.ndarray:
        return self.to_spectral().data

    # operators ---------------------------------------------------------------

    def apply(self, kind: str) -> "ScalarField":
        """Apply a Fourier multiplier; result is spectral."""
        return ScalarField(self.grid, self.coeffs * self.grid.symbol(kind), "spectral")

    def mean(self) -> complex:
        return complex(self.coeffs[0, 0])

    def project_zero_mean(self) -> "ScalarField":
        c = self.coeffs.copy()
        c[0, 0] = 0.0
        return ScalarField(self.grid, c, "spectral")

    def dealias(self) -> "ScalarField":
        """Zero all modes at or above the 2/3-rule cutoff."""
        return ScalarField(self.grid, self.coeffs * self.grid.dealias_mask, "spectral")

    def conj(self) -> "ScalarField":
        return ScalarField(self.grid, np.conj(self.values), "physical")

    # pointwise algebra (pseudospectral products happen in physical space) ----

    def _check(self, other: "ScalarField") -> None:
        if self.grid != other.grid:
            raise ValueError("grid mismatch")

    def __add__(self, other: "ScalarField") -> "ScalarField":
        self._check(other)
        if self.rep == other.rep:
            return ScalarField(self.grid, self.data + other.data, self.rep)
        return ScalarField(self.grid, self.coeffs + other.coeffs, "spectral")

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        self._check(other)
        if self.rep == other.rep:
            return ScalarField(self.grid, self.data - other.data, self.rep)
        return ScalarField(self.grid, self.coeffs - other.coeffs, "spectral")

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.values * other.values, "physical")
        return ScalarField(self.grid, self.data * other, self.rep)

    def __rmul__(self, scalar) -> "ScalarField":
        return ScalarField(self.grid, self.data * scalar, self.rep)

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.data, self.rep)

    # diagnostics -------------------------------------------------------------

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2_norm(self) -> float:
        """Grid L2 norm: sqrt(mean |f|^2) times the torus area factor 2*pi."""
        v = self.values
        return float(2.0 * np.pi * np.sqrt(np.mean(np.abs(v) ** 2)))

    def imag_magnitude(self) -> float:
        """max |Im f| relative to max |f| (0 for the zero field)."""
        v = self.values
        scale = np.max(np.abs(v))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(v.imag)) / scale)


class VectorField3:
    """Ordered triple of ScalarFields on one grid (C^3-valued field)."""

    __slots__ = ("components",)

    def __init__(self, components):
        comps = tuple(components)
        if len(comps) != 3:
            raise ValueError("VectorField3 needs exactly 3 components")
        if comps[0].grid != comps[1].grid or comps[0].grid != comps[2].grid:
            raise ValueError("grid mismatch between components")
        self.components = comps

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "VectorField3":
        return cls([ScalarField.zeros(grid) for _ in range(3)])

    @classmethod
    def constant(cls, grid: TorusGrid, triple) -> "VectorField3":
        return cls([ScalarField.constant(grid, v) for v in triple])

    @property
    def grid(self) -> TorusGrid:
        return self.components[0].grid

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, j: int) -> ScalarField:
        return self.components[j]

    def map(self, fn) -> "VectorField3":
        return VectorField3([fn(c) for c in self.components])

    def conj(self) -> "VectorField3":
        return self.map(lambda c: c.conj())

    def apply(self, kind: str) -> "VectorField3":
        return self.map(lambda c: c.apply(kind))

    def dealias(self) -> "VectorField3":
        return self.map(lambda c: c.dealias())

    def scale_components(self, triple) -> "VectorField3":
        return VectorField3([t * c for t, c in zip(triple, self.components)])

    def __add__(self, other: "VectorField3") -> "VectorField3":
        return VectorField3([a + b for a, b in zip(self, other)])

    def __sub__(self, other: "VectorField3") -> "VectorField3":
        return VectorField3([a - b for a, b in zip(self, other)])

    def __rmul__(self, scalar) -> "VectorField3":
        return self.map(lambda c: scalar * c)

    def sup_norm(self) -> float:
        return max(c.sup_norm() for c in self.components)

    def l2_norm(self) -> float:
        return float(np.sqrt(sum(c.l2_norm() ** 2 for c in self.components)))


# spec-level operation aliases ------------------------------------------------

def to_spectral(f: ScalarField) -> ScalarField:
    return f.to_spectral()


def to_physical(f: ScalarField) -> ScalarField:
    return f.to_physical()


def apply_multiplier(f: ScalarField, kind: str) -> ScalarField:
    return f.apply(kind)


def mean(f: ScalarField) -> complex:
    return f.mean()


def project_zero_mean(f: ScalarField) -> ScalarField:
    return f.project_zero_mean()
