"""Exterior algebra over an oriented inner-product frame."""

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space

from .utils import index_label, parse_index_string

DEFAULT_TOL = 1e-12

Index = Tuple[int, ...]


class FormError(Exception):
    """Invalid exterior-algebra input (dimension, degree or metric)."""
    pass


def permutation_sign(indices: Iterable[int]) -> Tuple[int, Index]:
    """
    Sort indices and report the sign of the sorting permutation.

    Args:
        indices: Sequence of frame indices

    Returns:
        (sign, sorted tuple); sign is 0 (and the tuple empty) when an index repeats
    """
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return 0, ()
    sign = 1
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return sign, tuple(sorted(idx))


def _clean_scalar(value):
    value = complex(value) if isinstance(value, (complex, np.complexfloating)) else float(value)
    return value


@dataclass(frozen=True, eq=False)
class FrameMetric:
    """Constant frame metric g_AB together with the orientation of the frame order."""

    g: np.ndarray
    orientation: int = 1

    def __post_init__(self):
        g = np.array(self.g, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise FormError(f"Metric must be a square matrix, got shape {g.shape}")
        if not np.allclose(g, g.T, atol=1e-12):
            raise FormError("Metric must be symmetric")
        if np.linalg.eigvalsh(g).min() <= 0:
            raise FormError("Metric must be positive-definite")
        if self.orientation not in (1, -1):
            raise FormError("Orientation must be +1 or -1")
        g.setflags(write=False)
        object.__setattr__(self, 'g', g)

    @classmethod
    def identity(cls, n: int, orientation: int = 1) -> "FrameMetric":
        """Orthonormal frame metric of dimension n."""
        return cls(np.eye(n), orientation)

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    @property
    def volume_factor(self) -> float:
        """Coefficient of e^{1...n} in the oriented volume form."""
        return self.orientation * math.sqrt(np.linalg.det(self.g))

    def is_orthonormal(self, tol: float = DEFAULT_TOL) -> bool:
        return bool(np.allclose(self.g, np.eye(self.dim), atol=tol))


@dataclass(frozen=True, eq=False)
class MultiForm:
    """
    Constant-coefficient exterior form of a given degree over an n-dimensional frame.

    Coefficients are stored sparsely on strictly increasing 0-based index tuples,
    so that a = sum_I a_I e^I.
    """

    dim: int
    degree: int
    coeffs: Mapping[Index, complex] = field(default_factory=dict)

    # numpy scalars defer to __rmul__
    __array_ufunc__ = None

    def __post_init__(self):
        if self.dim < 1:
            raise FormError(f"Form dimension must be positive, got {self.dim}")
        if not 0 <= self.degree <= self.dim:
            raise FormError(f"Degree {self.degree} out of range for dimension {self.dim}")
        clean: Dict[Index, complex] = {}
        for key, value in self.coeffs.items():
            key = tuple(int(i) for i in key)
            if len(key) != self.degree:
                raise FormError(f"Index tuple {key} does not match degree {self.degree}")
            if any(i < 0 or i >= self.dim for i in key):
                raise FormError(f"Index tuple {key} out of range for dimension {self.dim}")
            if any(key[p] >= key[p + 1] for p in range(len(key) - 1)):
                raise FormError(f"Index tuple {key} must be strictly increasing")
            value = _clean_scalar(value)
            if value != 0:
                clean[key] = value
        object.__setattr__(self, 'coeffs', clean)

    # construction

    @classmethod
    def build(cls, dim: int, degree: int, terms: Iterable[Tuple[Sequence[int], complex]]) -> "MultiForm":
        """
        Build a form from (indices, coefficient) terms in any index order.

        Unsorted tuples are sorted with their permutation sign; repeated indices vanish.
        """
        acc: Dict[Index, complex] = {}
        for indices, value in terms:
            sign, key = permutation_sign(indices)
            if sign == 0:
                continue
            acc[key] = acc.get(key, 0.0) + sign * value
        return cls(dim, degree, acc)

    @classmethod
    def from_strings(cls, dim: int, terms: Mapping[str, complex]) -> "MultiForm":
        """
        Build a form from 1-based digit strings, e.g. {"123": 1, "145": 1}.

        Raises:
            FormError: If the strings have different lengths or invalid digits
        """
        degrees = {len(key) for key in terms}
        if len(degrees) != 1:
            raise FormError("All index strings must have the same length")
        try:
            parsed = [(parse_index_string(key), value) for key, value in terms.items()]
        except ValueError as e:
            raise FormError(str(e))
        return cls.build(dim, degrees.pop(), parsed)

    @classmethod
    def zero(cls, dim: int, degree: int) -> "MultiForm":
        return cls(dim, degree, {})

    @classmethod
    def scalar(cls, dim: int, value: complex) -> "MultiForm":
        return cls(dim, 0, {(): value})

    @classmethod
    def basis(cls, dim: int, indices: Sequence[int]) -> "MultiForm":
        """The elementary form e^{i1...ik} (indices 0-based, any order)."""
        return cls.build(dim, len(indices), [(indices, 1.0)])

    @classmethod
    def from_tensor(cls, tensor: np.ndarray, chop: float = 1e-14) -> "MultiForm":
        """
        Build a form from a dense totally antisymmetric array T with a_I = T[I].

        Entries below chop relative to the largest entry are dropped.
        """
        tensor = np.asarray(tensor)
        degree = tensor.ndim
        dim = tensor.shape[0] if degree else 1
        if degree == 0:
            return cls.scalar(dim, tensor.item())
        cutoff = chop * max(1.0, float(np.abs(tensor).max(initial=0.0)))
        coeffs = {}
        for key in itertools.combinations(range(dim), degree):
            value = tensor[key]
            if abs(value) > cutoff:
                coeffs[key] = value.item() if hasattr(value, 'item') else value
        return cls(dim, degree, coeffs)

    @classmethod
    def from_vector(cls, dim: int, degree: int, vector: np.ndarray) -> "MultiForm":
        """Inverse of coefficient_vector."""
        keys = list(itertools.combinations(range(dim), degree))
        return cls(dim, degree, {key: vector[i] for i, key in enumerate(keys) if vector[i] != 0})

    # views

    @property
    def scalar_kind(self) -> str:
        return "complex" if any(isinstance(v, complex) for v in self.coeffs.values()) else "real"

    def coefficient(self, indices: Sequence[int]) -> complex:
        """Component a_{i1...ik} for indices in any order (antisymmetric)."""
        sign, key = permutation_sign(indices)
        if sign == 0:
            return 0.0
        return sign * self.coeffs.get(key, 0.0)

    def coefficient_vector(self) -> np.ndarray:
        """Coefficients over all increasing tuples in lexicographic order."""
        keys = itertools.combinations(range(self.dim), self.degree)
        dtype = complex if self.scalar_kind == "complex" else float
        return np.array([self.coeffs.get(key, 0.0) for key in keys], dtype=dtype)

    def to_tensor(self) -> np.ndarray:
        """Dense antisymmetric array with T[I] = a_I on increasing I."""
        dtype = complex if self.scalar_kind == "complex" else float
        if self.degree == 0:
            return np.array(self.coeffs.get((), 0.0), dtype=dtype)
        tensor = np.zeros((self.dim,) * self.degree, dtype=dtype)
        perms = [(perm, permutation_sign(perm)[0]) for perm in itertools.permutations(range(self.degree))]
        for key, value in self.coeffs.items():
            for perm, sign in perms:
                tensor[tuple(key[p] for p in perm)] = sign * value
        return tensor

    def max_abs(self) -> float:
        return max((abs(v) for v in self.coeffs.values()), default=0.0)

    def is_zero(self, tol: float = DEFAULT_TOL) -> bool:
        return self.max_abs() <= tol

    def allclose(self, other: "MultiForm", tol: float = DEFAULT_TOL) -> bool:
        """Equality within coefficientwise absolute tolerance."""
        if self.dim != other.dim or self.degree != other.degree:
            return False
        keys = set(self.coeffs) | set(other.coeffs)
        return all(abs(self.coeffs.get(k, 0.0) - other.coeffs.get(k, 0.0)) <= tol for k in keys)

    def __eq__(self, other):
        if not isinstance(other, MultiForm):
            return NotImplemented
        return self.allclose(other)

    __hash__ = None

    def __repr__(self):
        if not self.coeffs:
            return f"MultiForm(dim={self.dim}, degree={self.degree}, 0)"
        terms = " + ".join(f"{v:g}*e^{{{index_label(k)}}}" for k, v in sorted(self.coeffs.items()))
        return f"MultiForm(dim={self.dim}, degree={self.degree}, {terms})"

    # arithmetic

    def _check_compatible(self, other: "MultiForm"):
        if self.dim != other.dim or self.degree != other.degree:
            raise FormError(
                f"Incompatible forms: (dim {self.dim}, degree {self.degree}) vs "
                f"(dim {other.dim}, degree {other.degree})"
            )

    def __add__(self, other: "MultiForm") -> "MultiForm":
        self._check_compatible(other)
        coeffs = dict(self.coeffs)
        for key, value in other.coeffs.items():
            coeffs[key] = coeffs.get(key, 0.0) + value
        return MultiForm(self.dim, self.degree, coeffs)

    def __neg__(self) -> "MultiForm":
        return MultiForm(self.dim, self.degree, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: "MultiForm") -> "MultiForm":
        return self + (-other)

    def __mul__(self, factor) -> "MultiForm":
        if isinstance(factor, MultiForm):
            return NotImplemented
        return MultiForm(self.dim, self.degree, {k: factor * v for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __truediv__(self, factor) -> "MultiForm":
        return self * (1.0 / factor)

    def __xor__(self, other: "MultiForm") -> "MultiForm":
        return wedge(self, other)

    @property
    def real(self) -> "MultiForm":
        return MultiForm(self.dim, self.degree, {k: float(np.real(v)) for k, v in self.coeffs.items()})

    @property
    def imag(self) -> "MultiForm":
        return MultiForm(self.dim, self.degree, {k: float(np.imag(v)) for k, v in self.coeffs.items()})

    def conj(self) -> "MultiForm":
        return MultiForm(self.dim, self.degree, {k: np.conj(v) for k, v in self.coeffs.items()})

    # linear algebra

    def evaluate(self, *vectors: Sequence[float]) -> complex:
        """
        Evaluate on k vectors with the determinant convention e^{12}(e_1, e_2) = 1.

        Raises:
            FormError: If the number or length of vectors does not match
        """
        if len(vectors) != self.degree:
            raise FormError(f"Expected {self.degree} vectors, got {len(vectors)}")
        if self.degree == 0:
            return self.coeffs.get((), 0.0)
        basis = np.column_stack([np.asarray(v) for v in vectors])
        if basis.shape[0] != self.dim:
            raise FormError(f"Vectors must have length {self.dim}")
        return sum(value * np.linalg.det(basis[list(key), :]) for key, value in self.coeffs.items())

    def pullback(self, matrix: np.ndarray) -> "MultiForm":
        """
        Pull back along the linear map P: a'(v_1, ...) = a(P v_1, ...).

        P has shape (dim, m); the result lives on an m-dimensional frame.
        """
        matrix = np.asarray(matrix)
        if matrix.ndim != 2 or matrix.shape[0] != self.dim:
            raise FormError(f"Pullback matrix must have {self.dim} rows")
        if self.degree == 0:
            return MultiForm.scalar(matrix.shape[1], self.coeffs.get((), 0.0))
        tensor = self.to_tensor()
        for axis in range(self.degree):
            tensor = np.moveaxis(np.tensordot(tensor, matrix, axes=([axis], [0])), -1, axis)
        return MultiForm.from_tensor(tensor)

    def derivation(self, endomorphism: np.ndarray) -> "MultiForm":
        """Infinitesimal action sum_i a(..., A v_i, ...) of an endomorphism A."""
        endomorphism = np.asarray(endomorphism)
        if self.degree == 0:
            return MultiForm.zero(self.dim, 0)
        terms = []
        for key, value in self.coeffs.items():
            for p, i in enumerate(key):
                row = endomorphism[i]
                for j in np.flatnonzero(row):
                    terms.append((key[:p] + (int(j),) + key[p + 1:], value * row[j].item()))
        return MultiForm.build(self.dim, self.degree, terms)


@dataclass(frozen=True, eq=False)
class VectorForm:
    """Fiber-valued form: an ordered list of MultiForms sharing degree and dimension."""

    components: Tuple[MultiForm, ...]

    def __post_init__(self):
        components = tuple(self.components)
        if not components:
            raise FormError("VectorForm needs at least one component")
        first = components[0]
        for comp in components[1:]:
            if comp.dim != first.dim or comp.degree != first.degree:
                raise FormError("VectorForm components must share degree and dimension")
        object.__setattr__(self, 'components', components)

    @property
    def fiber_dim(self) -> int:
        return len(self.components)

    @property
    def degree(self) -> int:
        return self.components[0].degree

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def restrict(self, tangent_indices: Sequence[int]) -> "VectorForm":
        return VectorForm(tuple(restrict(c, tangent_indices) for c in self.components))

    def evaluate(self, *vectors) -> np.ndarray:
        return np.array([c.evaluate(*vectors) for c in self.components])

    def is_zero(self, tol: float = DEFAULT_TOL) -> bool:
        return all(c.is_zero(tol) for c in self.components)

    def max_abs(self) -> float:
        return max(c.max_abs() for c in self.components)


def basis_one_form(dim: int, index: int) -> MultiForm:
    """The coframe element e^{index} (0-based)."""
    return MultiForm(dim, 1, {(index,): 1.0})


def wedge(a: MultiForm, b: MultiForm) -> MultiForm:
    """
    Graded-antisymmetric exterior product.

    Raises:
        FormError: If dimensions differ or the total degree exceeds the dimension
    """
    if a.dim != b.dim:
        raise FormError(f"Dimension mismatch: {a.dim} vs {b.dim}")
    degree = a.degree + b.degree
    if degree > a.dim:
        raise FormError(f"Total degree {degree} exceeds dimension {a.dim}")
    terms = [(ka + kb, va * vb) for ka, va in a.coeffs.items() for kb, vb in b.coeffs.items()]
    return MultiForm.build(a.dim, degree, terms)


def wedge_all(forms: Sequence[MultiForm]) -> MultiForm:
    """Wedge a non-empty sequence of forms left to right."""
    result = forms[0]
    for form in forms[1:]:
        result = wedge(result, form)
    return result


def interior(v: Sequence[float], a: MultiForm) -> MultiForm:
    """
    Contraction i_v a.

    Raises:
        FormError: If a is a scalar or v has the wrong length
    """
    v = np.asarray(v)
    if a.degree == 0:
        raise FormError("Cannot contract a degree-0 form")
    if v.shape != (a.dim,):
        raise FormError(f"Vector must have length {a.dim}")
    terms = []
    for key, value in a.coeffs.items():
        for p, idx in enumerate(key):
            if v[idx] != 0:
                terms.append((key[:p] + key[p + 1:], (-1) ** p * v[idx] * value))
    return MultiForm.build(a.dim, a.degree - 1, terms)


def raise_indices(a: MultiForm, metric: FrameMetric) -> np.ndarray:
    """Dense components a^{I} with every slot raised by g^{-1}."""
    tensor = a.to_tensor()
    if metric.is_orthonormal():
        return tensor
    ginv = metric.inverse
    for axis in range(a.degree):
        tensor = np.moveaxis(np.tensordot(tensor, ginv, axes=([axis], [0])), -1, axis)
    return tensor


def _raised_items(a: MultiForm, metric: FrameMetric) -> Dict[Index, complex]:
    if metric.is_orthonormal():
        return dict(a.coeffs)
    raised = raise_indices(a, metric)
    if a.degree == 0:
        return {(): raised.item()}
    return {key: raised[key] for key in itertools.combinations(range(a.dim), a.degree) if raised[key] != 0}


def hodge_star(a: MultiForm, metric: FrameMetric) -> MultiForm:
    """
    Hodge star defined by a ^ *b = <a, b> dvol.

    Raises:
        FormError: If the metric dimension does not match
    """
    if metric.dim != a.dim:
        raise FormError(f"Metric dimension {metric.dim} does not match form dimension {a.dim}")
    factor = metric.volume_factor
    full = set(range(a.dim))
    terms = []
    for key, value in _raised_items(a, metric).items():
        complement = tuple(sorted(full - set(key)))
        sign, _ = permutation_sign(key + complement)
        terms.append((complement, factor * sign * value))
    return MultiForm.build(a.dim, a.dim - a.degree, terms)


def inner(a: MultiForm, b: MultiForm, metric: Optional[FrameMetric] = None) -> complex:
    """Bilinear form pairing <a, b> = sum_I a^I b_I (no complex conjugation)."""
    a._check_compatible(b)
    metric = metric or FrameMetric.identity(a.dim)
    raised = _raised_items(a, metric)
    return sum(raised[key] * value for key, value in b.coeffs.items() if key in raised)


def norm(a: MultiForm, metric: Optional[FrameMetric] = None) -> float:
    return math.sqrt(abs(inner(a.conj(), a, metric)))


def volume_form(metric: FrameMetric) -> MultiForm:
    """Oriented volume form orientation * sqrt(det g) e^{1...n}."""
    n = metric.dim
    return MultiForm(n, n, {tuple(range(n)): metric.volume_factor})


def restrict(a: MultiForm, tangent_indices: Sequence[int]) -> MultiForm:
    """
    Restrict to the sub-frame spanned by tangent_indices (0-based, order = orientation).

    Coefficients whose tuples leave the subset are dropped and the rest renumbered
    by position. When the subset is smaller than the degree the zero scalar is returned.
    """
    tangent = [int(i) for i in tangent_indices]
    if not tangent:
        raise FormError("Tangent index set must not be empty")
    if len(set(tangent)) != len(tangent) or any(i < 0 or i >= a.dim for i in tangent):
        raise FormError(f"Invalid tangent indices {tangent_indices} for dimension {a.dim}")
    if len(tangent) < a.degree:
        return MultiForm.zero(len(tangent), 0)
    position = {idx: p for p, idx in enumerate(tangent)}
    terms = [
        ([position[i] for i in key], value)
        for key, value in a.coeffs.items()
        if all(i in position for i in key)
    ]
    return MultiForm.build(len(tangent), a.degree, terms)


def lie_derivative_parallel(
    V: Sequence[float],
    chi: MultiForm,
    conn_tilde,
    dV: Optional[np.ndarray] = None,
) -> MultiForm:
    """
    Lie derivative of a form that is parallel for the connection paired with conn_tilde.

    L_V chi = sum_B e^B ^ i_{W_B} chi with W_B = tilde-nabla_{e_B} V, where
    (tilde-nabla_B V)^A = e_B(V^A) + omega~^A_{BC} V^C.

    Args:
        V: Frame coefficients of the vector field at the evaluation point
        chi: Parallel form (degree >= 1)
        conn_tilde: Connection with omega[A, B, C] = omega~^A_{BC}
        dV: Optional frame derivatives, dV[B, A] = e_B(V^A); zero for invariant fields

    Returns:
        The (k)-form L_V chi at the point

    Raises:
        FormError: If chi has degree 0
    """
    if chi.degree == 0:
        raise FormError("Lie derivative formula needs a form of positive degree")
    omega = np.asarray(conn_tilde.omega)
    V = np.asarray(V)
    grad = np.einsum('abc,c->ba', omega, V)
    if dV is not None:
        grad = grad + np.asarray(dV)
    result = MultiForm.zero(chi.dim, chi.degree)
    for b in range(chi.dim):
        if np.any(grad[b] != 0):
            result = result + wedge(basis_one_form(chi.dim, b), interior(grad[b], chi))
    return result


def so_basis(metric: FrameMetric) -> List[np.ndarray]:
    """Basis of the Lie algebra so(n, g): matrices A with g A + A^T g = 0."""
    n = metric.dim
    ginv = metric.inverse
    basis = []
    for i, j in itertools.combinations(range(n), 2):
        skew = np.zeros((n, n))
        skew[i, j], skew[j, i] = 1.0, -1.0
        basis.append(ginv @ skew)
    return basis


def stabilizer_algebra(forms: Sequence[MultiForm], metric: Optional[FrameMetric] = None,
                       tol: float = 1e-10) -> List[np.ndarray]:
    """
    Subalgebra of so(n, g) annihilating every given form.

    Returns:
        List of n x n matrices spanning the stabilizer
    """
    n = forms[0].dim
    metric = metric or FrameMetric.identity(n)
    basis = so_basis(metric)
    columns = []
    for A in basis:
        pieces = []
        for form in forms:
            vec = form.derivation(A).coefficient_vector().astype(complex)
            pieces.extend([vec.real, vec.imag])
        columns.append(np.concatenate(pieces))
    matrix = np.column_stack(columns)
    kernel = null_space(matrix, rcond=tol)
    return [sum(c * A for c, A in zip(kernel[:, j], basis)) for j in range(kernel.shape[1])]
