"""Fixed-point solution of the mollified stochastic Cauchy-Riemann system.

The unknown is decomposed as r = R - gamma*xi with xi the explicit singular
part; the remainder R solves

    R = -2G * ( R x conj(R) - (gamma xi) x conj(R) - R x (gamma conj(xi)) )
        - gamma_tilde * zeta + (a, b, c),

gamma_tilde = (g2 g3, g1 g3, g1 g2), zeta = 2G * (xi x conj(xi)).  The signs
inside the parenthesis come from substituting r = R - gamma*xi into
r = -2G*(r x conj(r)) - gamma*xi + (a,b,c) and are pinned by the closure
identity that the converged solution must satisfy (see residual helpers).

Constants: c = sigma/4 with a = i g2 eta2 / (2c), b = -i g1 eta1 / (2c)
("paper" mode), or a = b = c = 0 when all three noise components have zero
mean ("zero" mode).

Picard iteration starts at R = 0, stops when the sup-norm increment drops
below tol, and flags divergence when the increment grows three steps in a
row.  When dealiasing is on, every quadratic product (including the ones
inside xi x conj(xi)) lives in the 2/3-truncated algebra, and so do the
noise fields entering the residuals; iterates then stay in-band exactly.

The Backlund transform B = 2i Gbar * r maps a zero-mean solution to the
white-noise-forced Landau-Lifshitz-Gilbert-type equation
Delta B = 2 dx B x dy B + 4 gamma W, with Im B = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .noise import NoiseRealization
from .norms import GateResult, TestFunctionFamily, event_gate
from .products import StochasticObjects, cross
from .spectral import ScalarField, TorusGrid, VectorField3, make_grid


class GateRejection(RuntimeError):
    """Noise realization failed the event gate (or gamma exceeds the budget)."""


@dataclass(frozen=True)
class SolverParams:
    """Parameters of one fixed-point solve."""

    n: int
    kappa: float
    sigma: float
    gamma: tuple[float, float, float]
    eps: float
    lam: float  # event-gate threshold Lambda
    seed: int = 0
    tol_fixed_point: float = 1e-12
    max_iter: int = 50
    abc_mode: str = "paper"
    dealias: bool = True

    def __post_init__(self):
        if not 0.0 < self.kappa < 0.5:
            raise ValueError("kappa must lie in (0, 1/2)")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.lam <= 0:
            raise ValueError("Lambda must be positive")
        if self.abc_mode not in ("paper", "zero"):
            raise ValueError("abc_mode must be 'paper' or 'zero'")
        if len(self.gamma) != 3:
            raise ValueError("gamma must be a 3-vector")
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))

    @property
    def gamma_tilde(self) -> tuple[float, float, float]:
        g1, g2, g3 = self.gamma
        return (g2 * g3, g1 * g3, g1 * g2)

    @property
    def gamma_abs(self) -> float:
        return float(np.sqrt(sum(g * g for g in self.gamma)))


@dataclass(frozen=True)
class SolveResult:
    R: VectorField3
    r: VectorField3
    iterations: int
    increment_history: list[float]
    contraction_ratio: float
    converged: bool
    status: str  # converged | max_iter | diverged
    gate: GateResult | None = None
    residuals: dict | None = None

    @property
    def diverged(self) -> bool:
        return self.status == "diverged"


def constants_abc(params: SolverParams, noise: NoiseRealization) -> tuple[complex, complex, complex]:
    """(a, b, c) with 2ac = i g2 eta2 and 2bc = -i g1 eta1, c = sigma/4."""
    if params.abc_mode == "zero":
        if not all(noise.zero_mean_flags):
            raise ValueError("abc_mode 'zero' requires all-zero-mean noise")
        return (0.0 + 0.0j, 0.0 + 0.0j, 0.0 + 0.0j)
    c = params.sigma / 4.0
    if c == 0.0:
        raise ValueError("paper mode needs sigma > 0")
    g1, g2, _ = params.gamma
    eta1, eta2 = float(noise.eta0[0]), float(noise.eta0[1])
    a = 1j * g2 * eta2 / (2.0 * c)
    b = -1j * g1 * eta1 / (2.0 * c)
    return (a, b, complex(c))


class _GammaMap:
    """Precomputed application context for the fixed-point map."""

    def __init__(self, objects: StochasticObjects, params: SolverParams, abc):
        self.dealias = params.dealias
        xi = objects.xi.dealias() if self.dealias else objects.xi
        self.gx = xi.scale_components(params.gamma).map(lambda c: c.to_physical())
        self.gx_conj = self.gx.conj()
        grid = objects.grid
        tail = []
        for j in range(3):
            t = ScalarField.constant(grid, abc[j]) - params.gamma_tilde[j] * objects.zeta[j]
            tail.append(t.to_spectral())
        self.tail = VectorField3(tail)

    def __call__(self, R: VectorField3) -> VectorField3:
        Rd = R.dealias() if self.dealias else R
        Rp = Rd.map(lambda c: c.to_physical())
        Rc = Rp.conj()
        inner = cross(Rp, Rc) - cross(self.gx, Rc) - cross(Rp, self.gx_conj)
        if self.dealias:
            inner = inner.dealias()
        return inner.map(lambda c: -2.0 * c.apply("G")) + self.tail


def gamma_map(R: VectorField3, objects: StochasticObjects, params: SolverParams,
              abc) -> VectorField3:
    """One application of the fixed-point map to R."""
    if R.grid != objects.grid:
        raise ValueError("grid mismatch")
    return _GammaMap(objects, params, abc)(R)


def solve_fixed_point(
    params: SolverParams,
    noise: NoiseRealization,
    objects: StochasticObjects | None = None,
    override_gate: bool = False,
    gate_family: TestFunctionFamily | None = None,
    attach_residuals: bool = True,
) -> SolveResult:
    """Picard iteration in the remainder variable, then r = R - gamma*xi.

    The event gate (measured noise norm below Lambda, |gamma| below the
    sigma^2/(16 Lambda) budget) is enforced unless override_gate is set.
    """
    grid = make_grid(params.n)
    gate = None
    if not override_gate:
        gate = event_gate(noise, params.kappa, params.lam, grid,
                          sigma=params.sigma, family=gate_family)
        if not gate.passed:
            raise GateRejection(
                f"event gate failed: measured {gate.measured:.6g} >= Lambda {params.lam:.6g}"
            )
        if params.gamma_abs >= gate.sigma_budget:
            raise GateRejection(
                f"|gamma| = {params.gamma_abs:.6g} outside admissible budget "
                f"{gate.sigma_budget:.6g}"
            )
    if objects is None:
        objects = StochasticObjects.build(noise, grid, params.eps, dealias=params.dealias)
    abc = constants_abc(params, noise)
    gmap = _GammaMap(objects, params, abc)

    R = VectorField3.zeros(grid)
    history: list[float] = []
    status = "max_iter"
    for _ in range(params.max_iter):
        R_next = gmap(R)
        inc = (R_next - R).sup_norm()
        history.append(inc)
        R = R_next
        if inc < params.tol_fixed_point:
            status = "converged"
            break
        if len(history) >= 4 and history[-1] > history[-2] > history[-3] > history[-4]:
            status = "diverged"
            break

    ratios = [history[i + 1] / history[i]
              for i in range(1, len(history) - 1) if history[i] > 0]
    contraction = max(ratios) if ratios else 0.0
    xi_eff = objects.xi.dealias() if params.dealias else objects.xi
    r = R - xi_eff.scale_components(params.gamma)
    residuals = None
    if attach_residuals and status == "converged" and params.abc_mode == "zero" \
            and all(noise.zero_mean_flags):
        residuals = residual_mcr(r, objects, params)
    return SolveResult(R=R, r=r, iterations=len(history), increment_history=history,
                       contraction_ratio=float(contraction),
                       converged=(status == "converged"), status=status,
                       gate=gate, residuals=residuals)


def _relative_norms(res_j: ScalarField, parts: list[ScalarField]):
    denom_l2 = max(p.l2_norm() for p in parts)
    denom_sup = max(p.sup_norm() for p in parts)
    rl2 = res_j.l2_norm() / denom_l2 if denom_l2 > 0 else 0.0
    rsup = res_j.sup_norm() / denom_sup if denom_sup > 0 else 0.0
    return float(rl2), float(rsup)


def residual_mcr(r: VectorField3, objects: StochasticObjects, params: SolverParams) -> dict:
    """Componentwise residual of dzbar r = r x conj(r) + i gamma W^eps.

    Evaluated in the same product algebra as the solve: with dealiasing on,
    the quadratic term is 2/3-truncated and the forcing uses the in-band part
    of the mollified noise.
    """
    w = objects.w.dealias() if params.dealias else objects.w
    prod = cross(r, r.conj())
    if params.dealias:
        prod = prod.dealias()
    rel_l2, rel_sup = [], []
    for j in range(3):
        dz = r[j].apply("Dzbar")
        force = (1j * params.gamma[j]) * w[j]
        res = dz - (prod[j] + force)
        l2, sup = _relative_norms(res, [dz, prod[j], force])
        rel_l2.append(l2)
        rel_sup.append(sup)
    return {"rel_l2": rel_l2, "rel_sup": rel_sup}


def backlund_b(r: VectorField3) -> VectorField3:
    """B = 2i Gbar * r, valid for (numerically) zero-mean r."""
    scale = max(r.sup_norm(), 1e-300)
    for j in range(3):
        if abs(r[j].mean()) > 1e-8 * scale:
            raise ValueError(
                f"component {j + 1} of r has mean {r[j].mean():.3e}; "
                "the transform needs zero-mean input"
            )
    return r.map(lambda c: 2j * c.apply("Gbar"))


def residual_llg(B: VectorField3, objects: StochasticObjects, params: SolverParams) -> dict:
    """Residual of Delta B = 2 dx B x dy B + 4 gamma W^eps, plus Im B size."""
    w = objects.w.dealias() if params.dealias else objects.w
    lap = B.map(lambda c: c.apply("D1").apply("D1") + c.apply("D2").apply("D2"))
    bx = B.apply("D1")
    by = B.apply("D2")
    prod = cross(bx, by)
    if params.dealias:
        prod = prod.dealias()
    rel_l2, rel_sup = [], []
    for j in range(3):
        force = (4.0 * params.gamma[j]) * w[j]
        res = lap[j] - 2.0 * prod[j] - force
        l2, sup = _relative_norms(res, [lap[j], 2.0 * prod[j], force])
        rel_l2.append(l2)
        rel_sup.append(sup)
    b_sup = max(B.sup_norm(), 1e-300)
    im_sup = max(float(np.max(np.abs(B[j].values.imag))) for j in range(3))
    return {"rel_l2": rel_l2, "rel_sup": rel_sup,
            "im_b_sup": im_sup, "im_b_rel": im_sup / b_sup}


def closure_residual(result: SolveResult, objects: StochasticObjects,
                     params: SolverParams, noise: NoiseRealization) -> float:
    """Relative defect of r = -2G*(r x conj r) - gamma*xi + (a,b,c).

    This algebraic identity is what pins the sign convention of the
    fixed-point map; it must hold to the fixed-point tolerance.
    """
    abc = constants_abc(params, noise)
    r = result.r
    prod = cross(r, r.conj())
    if params.dealias:
        prod = prod.dealias()
    xi_eff = objects.xi.dealias() if params.dealias else objects.xi
    grid = objects.grid
    rhs_parts = []
    for j in range(3):
        rhs = -2.0 * prod[j].apply("G") - params.gamma[j] * xi_eff[j] \
            + ScalarField.constant(grid, abc[j])
        rhs_parts.append(rhs)
    rhs_v = VectorField3(rhs_parts)
    denom = max(r.l2_norm(), 1e-300)
    return float((r - rhs_v).l2_norm() / denom)
