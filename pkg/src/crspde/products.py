"""The singular quadratic objects: xi, theta = xi x conj(xi), zeta = 2G*theta.

xi_k = 2i G * v_k splits into real parts xi_k = xi_{2k} + i xi_{1k} with
xi_{1k} = 2 G1 * v_k and xi_{2k} = 2 G2 * v_k.  theta admits, besides the
direct pointwise cross product, a derivative-of-product representation in
which the divergent parts cancel:

    theta_j = 4i * ( d1[ (K*v_{j1}) xi_{2,j2} ] - d2[ (K*v_{j1}) xi_{1,j2} ] ),

with (j1, j2) = (j+1, j+2) mod 3, valid with any constant subtracted from
K*v_{j1} before differentiating.  The two routes agree exactly in the
2/3-dealiased product algebra (to rounding); without dealiasing the spectral
derivative of an aliased product violates the Leibniz rule at wrapped mode
pairs and the routes differ at the aliasing level of the grid.

Quadratic products are evaluated pointwise in physical space; pass
dealias=True to truncate inputs and results by the 2/3 rule.
"""

from __future__ import annotations

from dataclasses import dataclass

from .noise import NoiseRealization, realize
from .spectral import ScalarField, TorusGrid, VectorField3


def cross(a: VectorField3, b: VectorField3) -> VectorField3:
    """Pointwise complex cross product (a x b)_1 = a2*b3 - a3*b2, cyclic."""
    if a.grid != b.grid:
        raise ValueError("grid mismatch")
    a1, a2, a3 = a.components
    b1, b2, b3 = b.components
    return VectorField3([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])


def cross_dealiased(a: VectorField3, b: VectorField3, dealias: bool) -> VectorField3:
    """cross() with optional 2/3-rule truncation of inputs and result."""
    if not dealias:
        return cross(a, b)
    return cross(a.dealias(), b.dealias()).dealias()


def build_xi(noise: NoiseRealization, grid: TorusGrid, eps: float):
    """xi = 2i G * v^eps together with its six real parts.

    Returns (xi, xi_parts) where xi_parts[(i, k)] with i in {1, 2} and k in
    {0, 1, 2} is the real field xi_{i k} (0-based component index k).
    Each xi_k has exactly zero mean (G kills the mean mode).
    """
    w = realize(noise, grid, eps)
    xi = w.map(lambda c: 2j * c.apply("G"))
    parts = {}
    for k in range(3):
        parts[(1, k)] = 2.0 * w[k].apply("G1")
        parts[(2, k)] = 2.0 * w[k].apply("G2")
    return xi, parts


def theta_direct(xi: VectorField3, dealias: bool = False) -> VectorField3:
    """theta = xi x conj(xi), evaluated pointwise."""
    return cross_dealiased(xi, xi.conj(), dealias)


def theta_renormalized(
    noise: NoiseRealization,
    grid: TorusGrid,
    eps: float,
    shift_x: tuple[int, int] | None = None,
    dealias: bool = False,
) -> VectorField3:
    """theta via the derivative-of-product representation.

    shift_x, if given, is a grid index (a, b); the constant (K*v_j)(x_{a,b})
    is subtracted inside the brackets before differentiating.  The result is
    independent of shift_x up to rounding (the derivative kills constants
    against the exact spectral identity d1 xi_{2k} = d2 xi_{1k}).
    """
    w = realize(noise, grid, eps)
    if dealias:
        w = w.dealias()
    kw = [w[j].apply("K").to_physical() for j in range(3)]
    parts1 = [(2.0 * w[j].apply("G1")).to_physical() for j in range(3)]
    parts2 = [(2.0 * w[j].apply("G2")).to_physical() for j in range(3)]
    comps = []
    for j in range(3):
        j1, j2 = (j + 1) % 3, (j + 2) % 3
        a = kw[j1]
        if shift_x is not None:
            a = a - ScalarField.constant(grid, a.values[shift_x[0], shift_x[1]]).to_physical()
        p1 = (a * parts2[j2]).apply("D1")
        p2 = (a * parts1[j2]).apply("D2")
        t = 4j * (p1 - p2)
        comps.append(t.dealias() if dealias else t)
    return VectorField3(comps)


def build_zeta(theta: VectorField3) -> VectorField3:
    """zeta = 2 G * theta componentwise (exactly mean-free)."""
    return theta.map(lambda c: 2.0 * c.apply("G"))


@dataclass(frozen=True)
class StochasticObjects:
    """The noise-derived inputs of the fixed-point map, at one (grid, eps)."""

    grid: TorusGrid
    eps: float
    seed: int
    dealias: bool
    w: VectorField3
    xi: VectorField3
    xi_parts: dict
    theta: VectorField3
    zeta: VectorField3

    @classmethod
    def build(
        cls,
        noise: NoiseRealization,
        grid: TorusGrid,
        eps: float,
        dealias: bool = False,
    ) -> "StochasticObjects":
        w = realize(noise, grid, eps)
        xi, parts = build_xi(noise, grid, eps)
        theta = theta_direct(xi, dealias=dealias)
        zeta = build_zeta(theta)
        return cls(grid=grid, eps=eps, seed=noise.seed, dealias=dealias,
                   w=w, xi=xi, xi_parts=parts, theta=theta, zeta=zeta)
