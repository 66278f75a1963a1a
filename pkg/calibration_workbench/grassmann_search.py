"""Oriented k-planes, comass estimation and contact-set dimensions on the Grassmannian."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from rich.console import Console
from scipy.linalg import expm, qr
from scipy.optimize import minimize

from .exterior_core import FrameMetric, MultiForm, stabilizer_algebra

console = Console()

LETTERS = "abcdefgh"


class PlaneError(Exception):
    """Invalid plane input (degree/column mismatch or rank-deficient basis)."""
    pass


def _orthonormalize(basis: np.ndarray) -> np.ndarray:
    """Orientation-preserving Gram-Schmidt via QR with positive diagonal."""
    q, r = qr(basis, mode='economic')
    diag = np.diag(r)
    if np.any(np.abs(diag) < 1e-12):
        raise PlaneError("Plane basis is rank-deficient")
    return q * np.sign(diag)


@dataclass(frozen=True, eq=False)
class OrientedPlane:
    """Oriented k-plane given by an n x k basis; columns are orthonormalized on construction."""

    basis: np.ndarray

    def __post_init__(self):
        basis = np.array(self.basis, dtype=float)
        if basis.ndim != 2 or basis.shape[1] > basis.shape[0] or basis.shape[1] < 1:
            raise PlaneError(f"Plane basis must be n x k with 1 <= k <= n, got shape {basis.shape}")
        basis = _orthonormalize(basis)
        basis.setflags(write=False)
        object.__setattr__(self, 'basis', basis)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    @property
    def columns(self) -> List[np.ndarray]:
        return [self.basis[:, j] for j in range(self.k)]

    def complement(self) -> np.ndarray:
        """Orthonormal basis of the orthogonal complement (n x (n-k))."""
        full, _ = qr(self.basis, mode='full')
        return full[:, self.k:]


@dataclass
class ComassReport:
    """Outcome of a multi-start comass estimate."""

    max_value: float
    argmax_plane: OrientedPlane
    restarts: int
    converged_fraction: float
    seed: Optional[int] = None
    values: List[float] = field(default_factory=list)
    converged: List[bool] = field(default_factory=list)

    def as_dict(self) -> Dict:
        return {
            'max_value': self.max_value,
            'restarts': self.restarts,
            'converged_fraction': self.converged_fraction,
            'seed': self.seed,
        }


@dataclass
class ContactDimension:
    """Numerical dimension of the contact set near a contact plane."""

    dimension: int
    inconclusive: bool
    spectrum: np.ndarray
    gap: float


def random_plane(n: int, k: int, rng: np.random.Generator) -> OrientedPlane:
    """Haar-random oriented k-plane in R^n."""
    return OrientedPlane(rng.standard_normal((n, k)))


def plane_from_indices(n: int, indices: Sequence[int]) -> OrientedPlane:
    """Coordinate plane span(e_i for i in indices), 0-based, oriented by the given order."""
    return OrientedPlane(np.eye(n)[:, list(indices)])


def rotate_plane(plane: OrientedPlane, rotation: np.ndarray) -> OrientedPlane:
    return OrientedPlane(rotation @ plane.basis)


def _check_degree(form: MultiForm, k: int, n: int):
    if form.degree != k:
        raise PlaneError(f"Form degree {form.degree} does not match plane dimension {k}")
    if form.dim != n:
        raise PlaneError(f"Form dimension {form.dim} does not match ambient dimension {n}")


def evaluate(form: MultiForm, plane: OrientedPlane) -> float:
    """
    Value of a real form on the unit k-vector of an oriented plane.

    Raises:
        PlaneError: If degrees or dimensions do not match
    """
    _check_degree(form, plane.k, plane.ambient_dim)
    return float(np.real(form.evaluate(*plane.columns)))


def is_contact(form: MultiForm, plane: OrientedPlane, tol: float = 1e-6) -> bool:
    """True iff the plane attains the calibration bound: |phi(xi) - 1| <= tol."""
    return abs(evaluate(form, plane) - 1.0) <= tol


def _multilinear(tensor: np.ndarray, matrix: np.ndarray):
    """Value and column gradients of M -> T(M_1, ..., M_k)."""
    k = tensor.ndim
    subs = LETTERS[:k]
    columns = [matrix[:, j] for j in range(k)]
    value = np.einsum(f"{subs}," + ",".join(subs) + "->", tensor, *columns)
    grad = np.zeros_like(matrix)
    for j in range(k):
        others = [c for i, c in enumerate(columns) if i != j]
        other_subs = [s for i, s in enumerate(subs) if i != j]
        subscripts = f"{subs}," + ",".join(other_subs) + f"->{subs[j]}" if other_subs else f"{subs}->{subs[j]}"
        grad[:, j] = np.einsum(subscripts, tensor, *others)
    return value, grad


def _chart_objective(tensor: np.ndarray, base: np.ndarray, normal: np.ndarray):
    """-phi on the Grassmannian chart X -> span(base + normal X), with its exact gradient."""
    k = base.shape[1]

    def objective(x: np.ndarray):
        X = x.reshape(normal.shape[1], k)
        M = base + normal @ X
        gram = M.T @ M
        gram_inv = np.linalg.inv(gram)
        scale = np.sqrt(np.linalg.det(gram))
        phi, dphi = _multilinear(tensor, M)
        value = phi / scale
        dM = dphi / scale - value * M @ gram_inv
        return -value, -(normal.T @ dM).ravel()

    return objective


def _local_ascent(tensor: np.ndarray, plane: OrientedPlane, tol: float, passes: int = 3):
    """Maximize in successive charts re-centered at the current plane."""
    success = False
    for _ in range(passes):
        normal = plane.complement()
        objective = _chart_objective(tensor, plane.basis, normal)
        x0 = np.zeros(normal.shape[1] * plane.k)
        result = minimize(objective, x0, jac=True, method='BFGS', options={'gtol': tol})
        X = result.x.reshape(normal.shape[1], plane.k)
        plane = OrientedPlane(plane.basis + normal @ X)
        success = bool(result.success)
        if np.abs(result.x).max(initial=0.0) < tol:
            break
    return plane, success


def comass(
    form: MultiForm,
    k: int,
    restarts: int = 24,
    tol: float = 1e-6,
    rng: Optional[np.random.Generator] = None,
    seed: Optional[int] = None,
) -> ComassReport:
    """
    Multi-start estimate of the comass of a real form.

    Each restart starts at a Haar-random plane and runs BFGS with exact
    multilinear gradients in a Grassmannian chart. Restarts that fail to
    converge are recorded, not fatal.

    Args:
        form: Real k-form
        k: Plane dimension (must equal the form degree)
        restarts: Number of random starts
        tol: Gradient tolerance of the local ascent
        rng: Random generator (built from seed when omitted)
        seed: Seed recorded in the report

    Returns:
        ComassReport with the best value over all restarts
    """
    if restarts < 1:
        raise PlaneError("restarts must be >= 1")
    if not 1 <= k <= form.dim:
        raise PlaneError(f"k must lie in [1, {form.dim}], got {k}")
    _check_degree(form, k, form.dim)
    rng = rng if rng is not None else np.random.default_rng(seed)
    tensor = np.real(form.to_tensor())

    values, flags, planes = [], [], []
    for _ in range(restarts):
        start = random_plane(form.dim, k, rng)
        plane, success = _local_ascent(tensor, start, tol)
        values.append(evaluate(form, plane))
        flags.append(success)
        planes.append(plane)

    best = int(np.argmax(values))
    if not all(flags):
        console.print(f"[yellow]Warning: {flags.count(False)} of {restarts} comass restarts did not converge")
    return ComassReport(
        max_value=values[best],
        argmax_plane=planes[best],
        restarts=restarts,
        converged_fraction=sum(flags) / restarts,
        seed=seed,
        values=values,
        converged=flags,
    )


def sample_bound(form: MultiForm, k: int, samples: int, rng: np.random.Generator,
                 batch: int = 5000) -> float:
    """
    Largest |phi| over Haar-random planes (upper-bound oracle for the comass).

    Args:
        form: Real k-form
        k: Plane dimension
        samples: Number of random planes
        rng: Random generator
        batch: Planes evaluated per vectorized batch

    Returns:
        Maximum absolute value observed
    """
    _check_degree(form, k, form.dim)
    n = form.dim
    best = 0.0
    remaining = samples
    while remaining > 0:
        size = min(batch, remaining)
        q, r = np.linalg.qr(rng.standard_normal((size, n, k)))
        values = np.zeros(size)
        for key, coeff in form.coeffs.items():
            values += np.real(coeff) * np.linalg.det(q[:, list(key), :])
        best = max(best, float(np.abs(values).max()))
        remaining -= size
    return best


def contact_dimension(
    form: MultiForm,
    seed_plane: OrientedPlane,
    threshold: float = 1e-6,
    gap_factor: float = 10.0,
    step: float = 1e-5,
) -> ContactDimension:
    """
    Numerical dimension of {xi : phi(xi) = 1} near a contact plane.

    The Hessian of phi in the Grassmannian chart at the seed plane is built by
    central differences of the exact gradient; its eigenvalues below
    threshold * (largest) span the kernel. An ill-separated spectrum is flagged.

    Args:
        form: Real k-form with comass 1
        seed_plane: A contact plane of the form
        threshold: Relative cut for kernel eigenvalues
        gap_factor: Required ratio between the smallest kept and largest discarded value
        step: Finite-difference step in chart coordinates

    Returns:
        ContactDimension (dimension, inconclusive flag, sorted |eigenvalues|, gap)
    """
    _check_degree(form, seed_plane.k, seed_plane.ambient_dim)
    tensor = np.real(form.to_tensor())
    normal = seed_plane.complement()
    objective = _chart_objective(tensor, seed_plane.basis, normal)
    size = normal.shape[1] * seed_plane.k
    hessian = np.zeros((size, size))
    for i in range(size):
        offset = np.zeros(size)
        offset[i] = step
        hessian[:, i] = (objective(offset)[1] - objective(-offset)[1]) / (2 * step)
    hessian = 0.5 * (hessian + hessian.T)
    spectrum = np.sort(np.abs(np.linalg.eigvalsh(hessian)))
    largest = spectrum[-1] if spectrum.size else 0.0
    if largest == 0.0:
        return ContactDimension(size, False, spectrum, float('inf'))
    kernel = spectrum < threshold * largest
    dimension = int(kernel.sum())
    if 0 < dimension < size:
        gap = float(spectrum[dimension] / max(spectrum[dimension - 1], np.finfo(float).tiny))
    else:
        gap = float('inf')
    inconclusive = gap < gap_factor
    if inconclusive:
        console.print(f"[yellow]Warning: contact dimension spectrum has no clear gap (ratio {gap:.2e})")
    return ContactDimension(dimension, inconclusive, spectrum, gap)


def hermitian_contact_dimensions(n: int, k: int) -> Dict[str, int]:
    """Both candidate dimensions of the complex k-plane contact set in C^n."""
    return {'printed': 2 * k * (n - 1), 'grassmannian': 2 * k * (n - k)}


def contact_orbit_sample(
    form: MultiForm,
    plane: OrientedPlane,
    rng: np.random.Generator,
    metric: Optional[FrameMetric] = None,
    scale: float = 1.0,
) -> OrientedPlane:
    """Move a contact plane by the exponential of a random element of the form's stabilizer algebra."""
    algebra = stabilizer_algebra([form], metric)
    if not algebra:
        return plane
    coeffs = scale * rng.standard_normal(len(algebra))
    generator = sum(c * A for c, A in zip(coeffs, algebra))
    return rotate_plane(plane, expm(generator))
