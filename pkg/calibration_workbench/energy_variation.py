"""
Energy E(X) = Vol(X) - int_X phi on parametrized patches of flat space,
and the second variation at calibrated patches.

On a calibrated patch the second variation along a family with velocity V
reduces to the integral of |grad-perp V|^2 minus the double contraction of
phi with the normal derivatives of V.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from rich.console import Console
from scipy.linalg import expm

from .config import Config
from .exterior_core import MultiForm

console = Console()

GRAM_TOL = 1e-12
CALIBRATION_TOL = 1e-8

PointMap = Callable[[np.ndarray], np.ndarray]


class EnergyError(Exception):
    """Degenerate patch, form of the wrong degree or non-calibrated base patch."""
    pass


@dataclass(frozen=True)
class ImmersedPatch:
    """A k-parameter immersion of a box into R^N with its Jacobian."""

    param_map: PointMap
    jacobian: PointMap
    box: Tuple[Tuple[float, float], ...]
    quadrature: int = Config.DEFAULT_QUADRATURE

    @property
    def k(self) -> int:
        return len(self.box)

    def nodes(self):
        """Tensor-product Gauss-Legendre nodes and weights on the box."""
        x, w = leggauss(self.quadrature)
        axes, weights = [], []
        for lo, hi in self.box:
            axes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
            weights.append(0.5 * (hi - lo) * w)
        grid = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, self.k)
        total = np.prod(np.stack(np.meshgrid(*weights, indexing='ij'), axis=-1), axis=-1).reshape(-1)
        return grid, total

    @property
    def measure(self) -> float:
        return float(np.prod([hi - lo for lo, hi in self.box]))


def planar_patch(basis: np.ndarray, origin: Optional[Sequence[float]] = None,
                 box: Optional[Sequence[Tuple[float, float]]] = None,
                 quadrature: int = Config.DEFAULT_QUADRATURE) -> ImmersedPatch:
    """u -> origin + basis @ u on the unit box by default."""
    B = np.asarray(basis, dtype=float)
    o = np.zeros(B.shape[0]) if origin is None else np.asarray(origin, dtype=float)
    box = tuple(box) if box is not None else tuple((0.0, 1.0) for _ in range(B.shape[1]))
    return ImmersedPatch(lambda u: o + B @ u, lambda u: B, box, quadrature)


def _density(jacobian: np.ndarray, form: MultiForm) -> Tuple[float, float]:
    """(volume density, pulled-back form density) for one Jacobian."""
    gram = jacobian.T @ jacobian
    det = np.linalg.det(gram)
    if det <= GRAM_TOL:
        raise EnergyError(f"Degenerate Gram determinant {det:.3e}")
    value = form.evaluate(*jacobian.T)
    return float(np.sqrt(det)), float(np.real(value))


def energy(patch: ImmersedPatch, form: MultiForm) -> float:
    """
    Vol(patch) - int_patch form by quadrature.

    Raises:
        EnergyError: If the form degree differs from k or the patch is degenerate
    """
    if form.degree != patch.k:
        raise EnergyError(f"Form of degree {form.degree} on a {patch.k}-dimensional patch")
    if patch.measure == 0:
        return 0.0
    points, weights = patch.nodes()
    total = 0.0
    for u, w in zip(points, weights):
        vol, pulled = _density(patch.jacobian(u), form)
        total += w * (vol - pulled)
    return float(total)


@dataclass(frozen=True)
class PatchFamily:
    """A one-parameter family X(t) with the velocity field V = dX/dt at t = 0."""

    name: str
    member: Callable[[float], ImmersedPatch]
    velocity: PointMap
    velocity_jacobian: PointMap

    @property
    def base(self) -> ImmersedPatch:
        return self.member(0.0)


def rotation_family(patch: ImmersedPatch, generator: np.ndarray) -> PatchFamily:
    """X(t) = exp(tA) X for an antisymmetric A."""
    A = np.asarray(generator, dtype=float)
    if np.abs(A + A.T).max() > GRAM_TOL:
        raise EnergyError("Rotation generator must be antisymmetric")

    def member(t):
        R = expm(t * A)
        return ImmersedPatch(lambda u: R @ patch.param_map(u), lambda u: R @ patch.jacobian(u),
                             patch.box, patch.quadrature)

    return PatchFamily("rotation", member, lambda u: A @ patch.param_map(u), lambda u: A @ patch.jacobian(u))


def translation_family(patch: ImmersedPatch, vector: Sequence[float]) -> PatchFamily:
    v = np.asarray(vector, dtype=float)

    def member(t):
        return ImmersedPatch(lambda u: patch.param_map(u) + t * v, patch.jacobian, patch.box, patch.quadrature)

    return PatchFamily("translation", member, lambda u: v, lambda u: np.zeros((v.size, patch.k)))


def normal_field_family(patch: ImmersedPatch, field: PointMap, field_jacobian: PointMap) -> PatchFamily:
    """X(t) = X + t V."""
    def member(t):
        return ImmersedPatch(lambda u: patch.param_map(u) + t * field(u),
                             lambda u: patch.jacobian(u) + t * field_jacobian(u),
                             patch.box, patch.quadrature)

    return PatchFamily("normal-field", member, field, field_jacobian)


def linear_normal_family(patch: ImmersedPatch, matrix: np.ndarray) -> PatchFamily:
    """V(u) = M u."""
    M = np.asarray(matrix, dtype=float)
    return normal_field_family(patch, lambda u: M @ u, lambda u: M)


def _energies(family: PatchFamily, form: MultiForm, step: float) -> Dict[int, float]:
    return {j: energy(family.member(j * step), form) for j in (-2, -1, 0, 1, 2)}


def first_variation(family: PatchFamily, form: MultiForm, step: float = 1e-3) -> float:
    """dE/dt at t = 0, fourth-order central difference."""
    E = _energies(family, form, step)
    return (E[-2] - 8 * E[-1] + 8 * E[1] - E[2]) / (12 * step)


def _orthonormal_frame(jacobian: np.ndarray):
    """Q, R with jacobian = Q R, diag(R) > 0, so Q carries the patch orientation."""
    Q, R = np.linalg.qr(jacobian)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1
    return Q * signs, signs[:, None] * R


def second_variation_density(jacobian: np.ndarray, velocity_jacobian: np.ndarray, form: MultiForm) -> float:
    """
    |grad-perp V|^2 - i_{grad-perp V} i_{grad-perp V} phi per unit parameter volume.

    Raises:
        EnergyError: If the tangent plane is not calibrated
    """
    Q, R = _orthonormal_frame(jacobian)
    tangent = [Q[:, a] for a in range(Q.shape[1])]
    calibrated = float(np.real(form.evaluate(*tangent)))
    if abs(calibrated - 1.0) > CALIBRATION_TOL:
        raise EnergyError(f"Base patch is not calibrated: phi(tangent) = {calibrated:.6f}")
    projector = np.eye(Q.shape[0]) - Q @ Q.T
    normal = projector @ velocity_jacobian @ np.linalg.inv(R)
    k = Q.shape[1]
    contraction = 0.0
    for a in range(k):
        for b in range(a + 1, k):
            vectors = list(tangent)
            vectors[a], vectors[b] = normal[:, a], normal[:, b]
            contraction += 2 * float(np.real(form.evaluate(*vectors)))
    return (float(np.sum(normal ** 2)) - contraction) * abs(np.linalg.det(R))


@dataclass
class SecondVariation:
    """Finite-difference and closed-form second variation at t = 0."""

    numeric: float
    formula: float
    first: float

    @property
    def residual(self) -> float:
        return abs(self.numeric - self.formula)

    def as_dict(self) -> Dict[str, float]:
        return {'numeric': self.numeric, 'formula': self.formula, 'first': self.first, 'residual': self.residual}


def second_variation_check(family: PatchFamily, form: MultiForm, step: float = 1e-2,
                           tol: float = 1e-6) -> SecondVariation:
    """
    Compare the five-point second difference of E(t) with the closed-form integral.

    Raises:
        EnergyError: If the base patch is not calibrated or E is not stationary at t = 0
    """
    base = family.base
    if form.degree != base.k:
        raise EnergyError(f"Form of degree {form.degree} on a {base.k}-dimensional patch")
    E = _energies(family, form, step)
    first = (E[-2] - 8 * E[-1] + 8 * E[1] - E[2]) / (12 * step)
    if abs(E[0]) > tol or abs(first) > tol:
        raise EnergyError(f"Family is not calibrated at t = 0: E = {E[0]:.3e}, dE/dt = {first:.3e}")
    numeric = (-E[2] + 16 * E[1] - 30 * E[0] + 16 * E[-1] - E[-2]) / (12 * step ** 2)

    formula = 0.0
    if base.measure > 0:
        points, weights = base.nodes()
        for u, w in zip(points, weights):
            formula += w * second_variation_density(base.jacobian(u), family.velocity_jacobian(u), form)
    if numeric < -tol:
        console.print(f"[yellow]Warning: negative second variation {numeric:.3e} for {family.name}")
    return SecondVariation(float(numeric), float(formula), float(first))
