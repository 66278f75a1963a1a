"""Exterior calculus on constant-structure coframes: connections, torsion and structure classification."""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from rich.console import Console
from scipy.linalg import expm, lstsq
from scipy.optimize import brentq, fsolve

from .canonical_structures import (
    g2_metric_from_form,
    kahler_form,
    normalization_factor,
)
from .exterior_core import (
    FrameMetric,
    MultiForm,
    hodge_star,
    inner,
    interior,
    norm,
    stabilizer_algebra,
    wedge,
)

console = Console()

CHECK_TOL = 1e-10


class CoframeError(Exception):
    """Invalid coframe data or a structure failing its defining identity."""
    pass


def _slot_derivation(tensor: np.ndarray, endomorphism: np.ndarray) -> np.ndarray:
    """sum_i T(..., A v_i, ...) on a dense tensor."""
    if tensor.ndim == 0:
        return np.zeros_like(tensor)
    total = np.zeros(tensor.shape, dtype=np.result_type(tensor, endomorphism))
    for axis in range(tensor.ndim):
        total = total + np.moveaxis(np.tensordot(tensor, endomorphism, axes=([axis], [0])), -1, axis)
    return total


@dataclass(frozen=True, eq=False)
class CoframeAlgebra:
    """
    Left-invariant coframe with constant structure constants.

    c[A, B, C] = c^A_{BC}, so that de^A = -1/2 c^A_{BC} e^B ^ e^C and
    [e_B, e_C] = c^A_{BC} e_A. Reductive quotients carry isotropy data
    (hc, hact): hc[j, B, C] is the h_j-component of [e_B, e_C] and
    hact[j] is the matrix of ad(h_j) on the frame.
    """

    c: np.ndarray
    metric: Optional[FrameMetric] = None
    labels: Tuple[str, ...] = ()
    isotropy: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise CoframeError(f"Structure constants must have shape (n, n, n), got {c.shape}")
        if not np.allclose(c, -np.transpose(c, (0, 2, 1)), atol=1e-12):
            raise CoframeError("Structure constants must be antisymmetric in the lower pair")
        c.setflags(write=False)
        object.__setattr__(self, 'c', c)
        n = c.shape[0]
        if self.metric is None:
            object.__setattr__(self, 'metric', FrameMetric.identity(n))
        elif self.metric.dim != n:
            raise CoframeError(f"Metric dimension {self.metric.dim} does not match coframe dimension {n}")
        labels = tuple(self.labels) or tuple(f"e{i + 1}" for i in range(n))
        if len(labels) != n:
            raise CoframeError(f"Expected {n} labels, got {len(labels)}")
        object.__setattr__(self, 'labels', labels)
        if self.isotropy is None:
            defect = self.jacobi_defect()
            if defect > CHECK_TOL * max(1.0, float(np.abs(c).max(initial=0.0))) ** 2:
                raise CoframeError(f"Structure constants violate the Jacobi identity (defect {defect:.3e})")

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @property
    def is_quotient(self) -> bool:
        return self.isotropy is not None

    def jacobi_defect(self) -> float:
        """Largest component of the cyclic sum [[e_B, e_C], e_D] + cyclic."""
        c = self.c
        first = np.einsum('aeb,ecd->abcd', c, c)
        cyclic = first + np.transpose(first, (0, 2, 3, 1)) + np.transpose(first, (0, 3, 1, 2))
        return float(np.abs(cyclic).max(initial=0.0))

    def d_basis(self, index: int) -> MultiForm:
        """de^A as a two-form."""
        n = self.dim
        return MultiForm(n, 2, {(b, c): -self.c[index, b, c] for b in range(n) for c in range(b + 1, n)})

    def bracket(self, u: Sequence[float], v: Sequence[float]) -> np.ndarray:
        return np.einsum('abc,b,c->a', self.c, np.asarray(u), np.asarray(v))

    def is_invariant(self, form: MultiForm, tol: float = CHECK_TOL) -> bool:
        """True when the form is annihilated by the isotropy action (always true on groups)."""
        if self.isotropy is None or form.degree == 0:
            return True
        return all(form.derivation(action).is_zero(tol) for action in self.isotropy[1])

    @classmethod
    def from_matrices(
        cls,
        basis: Sequence[np.ndarray],
        metric: Optional[FrameMetric] = None,
        labels: Sequence[str] = (),
    ) -> "CoframeAlgebra":
        """
        Structure constants of a matrix Lie algebra basis, [X_B, X_C] = c^A_{BC} X_A.

        Complex matrices are handled through their real and imaginary parts.

        Raises:
            CoframeError: If the basis is dependent or not closed under the commutator
        """
        mats = [np.asarray(X) for X in basis]
        flat = lambda X: np.concatenate([np.real(X).ravel(), np.imag(X).ravel()])
        columns = np.column_stack([flat(X) for X in mats])
        if np.linalg.matrix_rank(columns) < len(mats):
            raise CoframeError("Matrix basis is linearly dependent")
        n = len(mats)
        c = np.zeros((n, n, n))
        for b in range(n):
            for cc in range(b + 1, n):
                target = flat(mats[b] @ mats[cc] - mats[cc] @ mats[b])
                coeffs, *_ = lstsq(columns, target)
                if np.abs(columns @ coeffs - target).max(initial=0.0) > 1e-9:
                    raise CoframeError(f"Basis is not closed under the bracket at ({b + 1}, {cc + 1})")
                c[:, b, cc] = coeffs
                c[:, cc, b] = -coeffs
        c[np.abs(c) < 1e-13] = 0.0
        return cls(c, metric, tuple(labels))

    def change_frame(self, P: np.ndarray, labels: Sequence[str] = ()) -> "CoframeAlgebra":
        """
        Express the algebra in the frame f_i = sum_A P[A, i] e_A.

        Forms follow with form.pullback(P).
        """
        P = np.asarray(P, dtype=float)
        if P.shape != (self.dim, self.dim) or abs(np.linalg.det(P)) < 1e-12:
            raise CoframeError("Frame change must be an invertible n x n matrix")
        Pinv = np.linalg.inv(P)
        c = np.einsum('ka,abc,bi,cj->kij', Pinv, self.c, P, P)
        c[np.abs(c) < 1e-13] = 0.0
        metric = FrameMetric(P.T @ self.metric.g @ P, self.metric.orientation * int(np.sign(np.linalg.det(P))))
        isotropy = None
        if self.isotropy is not None:
            hc, hact = self.isotropy
            isotropy = (np.einsum('jbc,bi,ck->jik', hc, P, P), np.einsum('ka,jab,bi->jki', Pinv, hact, P))
        return CoframeAlgebra(c, metric, tuple(labels), isotropy)

    def subalgebra(self, indices: Sequence[int]) -> "CoframeAlgebra":
        """
        Restriction to a subset of frame vectors closed under the bracket.

        Raises:
            CoframeError: If the span is not a subalgebra
        """
        idx = list(indices)
        rest = [i for i in range(self.dim) if i not in idx]
        if rest and np.abs(self.c[np.ix_(rest, idx, idx)]).max(initial=0.0) > CHECK_TOL:
            raise CoframeError(f"Frame vectors {[i + 1 for i in idx]} do not span a subalgebra")
        g = self.metric.g[np.ix_(idx, idx)]
        return CoframeAlgebra(self.c[np.ix_(idx, idx, idx)], FrameMetric(g), tuple(self.labels[i] for i in idx))

    def quotient(self, isotropy_indices: Sequence[int]) -> "CoframeAlgebra":
        """
        Reductive homogeneous space G/H: keep the complement m and project brackets onto it.

        Raises:
            CoframeError: If h is not a subalgebra or [h, m] is not contained in m
        """
        h = list(isotropy_indices)
        m = [i for i in range(self.dim) if i not in h]
        c = self.c
        if np.abs(c[np.ix_(m, h, h)]).max(initial=0.0) > CHECK_TOL:
            raise CoframeError("Isotropy directions do not span a subalgebra")
        if np.abs(c[np.ix_(h, h, m)]).max(initial=0.0) > CHECK_TOL:
            raise CoframeError("Decomposition is not reductive: [h, m] leaves m")
        hc = c[np.ix_(h, m, m)]
        hact = np.stack([c[np.ix_(m, [j], m)][:, 0, :] for j in h])
        g = self.metric.g[np.ix_(m, m)]
        return CoframeAlgebra(c[np.ix_(m, m, m)], FrameMetric(g), tuple(self.labels[i] for i in m), (hc, hact))

    def product(self, other: "CoframeAlgebra") -> "CoframeAlgebra":
        """Direct sum of two group coframes (frame of self first)."""
        if self.is_quotient or other.is_quotient:
            raise CoframeError("Products are only formed of group coframes")
        n, m = self.dim, other.dim
        c = np.zeros((n + m,) * 3)
        c[:n, :n, :n] = self.c
        c[n:, n:, n:] = other.c
        g = np.zeros((n + m, n + m))
        g[:n, :n] = self.metric.g
        g[n:, n:] = other.metric.g
        return CoframeAlgebra(c, FrameMetric(g), self.labels + other.labels)


def _d_or_none(a: MultiForm, cf: CoframeAlgebra) -> Optional[MultiForm]:
    if a.degree == 0 or a.degree >= cf.dim:
        return None
    return d_invariant(a, cf)


def d_invariant(a: MultiForm, cf: CoframeAlgebra) -> MultiForm:
    """
    Exterior derivative of a constant-coefficient form, d a = sum_A de^A ^ i_{e_A} a.

    Degree-0 forms are closed; their derivative is returned as the zero one-form.

    Raises:
        CoframeError: If the dimensions disagree or a is a top-degree form
    """
    if a.dim != cf.dim:
        raise CoframeError(f"Form dimension {a.dim} does not match coframe dimension {cf.dim}")
    if a.degree == 0:
        return MultiForm.zero(cf.dim, 1)
    if a.degree >= cf.dim:
        raise CoframeError("Top-degree forms have no derivative in this frame")
    frame = np.eye(cf.dim)
    result = MultiForm.zero(cf.dim, a.degree + 1)
    for index in range(cf.dim):
        de = cf.d_basis(index)
        if de.is_zero(0.0):
            continue
        contracted = interior(frame[index], a)
        if contracted.is_zero(0.0):
            continue
        result = result + wedge(de, contracted)
    return result


def codifferential(a: MultiForm, cf: CoframeAlgebra) -> MultiForm:
    """
    delta = (-1)^{n(k+1)+1} * d * on k-forms.

    Raises:
        CoframeError: If a is a function
    """
    if a.degree == 0:
        raise CoframeError("The codifferential of a function vanishes identically")
    n, k = cf.dim, a.degree
    star = hodge_star(a, cf.metric)
    if star.degree == 0:
        return MultiForm.zero(n, k - 1)
    return (-1) ** (n * (k + 1) + 1) * hodge_star(d_invariant(star, cf), cf.metric)


def cartan_lie_derivative(V: Sequence[float], chi: MultiForm, cf: CoframeAlgebra) -> MultiForm:
    """L_V chi = d(i_V chi) + i_V d chi for a constant field V and a constant form chi."""
    V = np.asarray(V, dtype=float)
    result = MultiForm.zero(chi.dim, chi.degree)
    if chi.degree == 0:
        return result
    first = _d_or_none(interior(V, chi), cf)
    if first is not None:
        result = result + first
    d_chi = _d_or_none(chi, cf)
    if d_chi is not None:
        result = result + interior(V, d_chi)
    return result


@dataclass(frozen=True, eq=False)
class FrameConnection:
    """Connection with constant coefficients omega[A, B, C] = omega^A_{BC}, i.e. nabla_{e_B} e_C = omega^A_{BC} e_A."""

    omega: np.ndarray
    base: CoframeAlgebra
    name: str = ""

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float)
        n = self.base.dim
        if omega.shape != (n, n, n):
            raise CoframeError(f"Connection coefficients must have shape {(n, n, n)}, got {omega.shape}")
        omega.setflags(write=False)
        object.__setattr__(self, 'omega', omega)

    @property
    def torsion_tensor(self) -> np.ndarray:
        """T^A_{BC} = omega^A_{BC} - omega^A_{CB} - c^A_{BC}."""
        return self.omega - np.transpose(self.omega, (0, 2, 1)) - self.base.c

    def torsion_forms(self) -> List[MultiForm]:
        """T^A = 1/2 T^A_{BC} e^B ^ e^C."""
        T = self.torsion_tensor
        n = self.base.dim
        return [MultiForm(n, 2, {(b, c): T[a, b, c] for b in range(n) for c in range(b + 1, n)}) for a in range(n)]

    def lowered(self) -> np.ndarray:
        """omega_{DBC} = g_{DA} omega^A_{BC}."""
        return np.einsum('da,abc->dbc', self.base.metric.g, self.omega)

    def companion(self) -> "FrameConnection":
        """The connection with torsion -T: omega~ = omega - T."""
        return FrameConnection(self.omega - self.torsion_tensor, self.base, f"{self.name}~" if self.name else "")

    def metric_defect(self) -> float:
        """Largest component of nabla g, i.e. of omega_{DBC} + omega_{CBD}."""
        low = self.lowered()
        return float(np.abs(low + np.transpose(low, (2, 1, 0))).max(initial=0.0))


def _raise_first(lowered: np.ndarray, metric: FrameMetric) -> np.ndarray:
    return np.einsum('ad,dbc->abc', metric.inverse, lowered)


def levi_civita(cf: CoframeAlgebra) -> FrameConnection:
    """
    Levi-Civita connection of the constant frame metric (Koszul formula).

    omega_{DBC} = 1/2 (c_{DBC} - c_{BCD} + c_{CDB}) with c_{DBC} = g_{DA} c^A_{BC}.
    """
    low_c = np.einsum('da,abc->dbc', cf.metric.g, cf.c)
    low = 0.5 * (low_c - np.transpose(low_c, (2, 0, 1)) + np.transpose(low_c, (1, 2, 0)))
    return FrameConnection(_raise_first(low, cf.metric), cf, "levi-civita")


def flat_left_connection(cf: CoframeAlgebra) -> FrameConnection:
    """The connection of the left action: every left-invariant frame vector is parallel."""
    return FrameConnection(np.zeros((cf.dim,) * 3), cf, "flat-left")


def torsion(conn: FrameConnection) -> Tuple[np.ndarray, List[MultiForm]]:
    """Torsion tensor and torsion two-forms of a connection."""
    return conn.torsion_tensor, conn.torsion_forms()


def covariant_derivative(a: MultiForm, conn: FrameConnection) -> np.ndarray:
    """
    nabla a as a dense array, result[B, ...] = (nabla_{e_B} a)_{...}.

    For constant coefficients nabla_B a = -sum_i a(..., nabla_B e_{A_i}, ...).
    """
    n = conn.base.dim
    if a.degree == 0:
        return np.zeros(n)
    tensor = a.to_tensor()
    return np.stack([-_slot_derivation(tensor, conn.omega[:, b, :]) for b in range(n)])


def covariant_derivative_forms(a: MultiForm, conn: FrameConnection) -> List[MultiForm]:
    """nabla_{e_B} a for every frame direction, kept sparse for high-degree forms."""
    if a.degree == 0:
        return [MultiForm.zero(a.dim, 0) for _ in range(conn.base.dim)]
    return [-a.derivation(conn.omega[:, b, :]) for b in range(conn.base.dim)]


def parallel_residual(a: MultiForm, conn: FrameConnection) -> float:
    """Largest component of nabla a."""
    return max(form.max_abs() for form in covariant_derivative_forms(a, conn))


def covariant_derivative_J(J: np.ndarray, conn: FrameConnection) -> np.ndarray:
    """nabla_B J = Omega_B J - J Omega_B with Omega_B[A, C] = omega^A_{BC}."""
    blocks = [conn.omega[:, b, :] for b in range(conn.base.dim)]
    return np.stack([W @ J - J @ W for W in blocks])


def curvature(conn: FrameConnection) -> np.ndarray:
    """
    Curvature R[B, C, A, D] = (R(e_B, e_C) e_D)^A of an invariant connection.

    On reductive quotients the isotropy term -ad([X, Y]_h) is included.
    """
    W = np.transpose(conn.omega, (1, 0, 2))
    c = conn.base.c
    R = (np.einsum('bae,ced->bcad', W, W) - np.einsum('cae,bed->bcad', W, W)
         - np.einsum('ebc,ead->bcad', c, W))
    if conn.base.isotropy is not None:
        hc, hact = conn.base.isotropy
        R = R - np.einsum('jbc,jad->bcad', hc, hact)
    return R


def ricci_tensor(conn: FrameConnection) -> np.ndarray:
    """Ric(e_C, e_D) = trace of X -> R(X, e_C) e_D."""
    return np.einsum('bcbd->cd', curvature(conn))


def adjoint_matrix(cf: CoframeAlgebra, Y: Sequence[float]) -> np.ndarray:
    """(ad Y)^A_C = Y^B c^A_{BC}."""
    return np.einsum('abc,b->ac', cf.c, np.asarray(Y, dtype=float))


def right_invariant_field(cf: CoframeAlgebra, X: Sequence[float], Y: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    The right-invariant field generated by X, evaluated at q = exp(Y).

    Returns:
        (coefficients in the left frame, dV) where coefficients = exp(-ad Y) X and
        dV[B, A] = e_B(V^A) = -c^A_{BC} V^C

    Raises:
        CoframeError: On quotient coframes
    """
    if cf.is_quotient:
        raise CoframeError("Right-invariant fields are only defined on group coframes")
    coeffs = expm(-adjoint_matrix(cf, Y)) @ np.asarray(X, dtype=float)
    dV = -np.einsum('abc,c->ba', cf.c, coeffs)
    return coeffs, dV


# hermitian geometry

def check_hermitian(cf: CoframeAlgebra, J: np.ndarray, tol: float = CHECK_TOL):
    """
    Raises:
        CoframeError: If J^2 != -1 or g is not J-invariant
    """
    J = np.asarray(J, dtype=float)
    n = cf.dim
    if J.shape != (n, n):
        raise CoframeError(f"J must be {n} x {n}")
    if np.abs(J @ J + np.eye(n)).max() > tol:
        raise CoframeError("J does not square to -1")
    g = cf.metric.g
    if np.abs(J.T @ g @ J - g).max() > tol:
        raise CoframeError("Metric is not hermitian for J")


def nijenhuis_tensor(cf: CoframeAlgebra, J: np.ndarray) -> np.ndarray:
    """N[A, B, C] = (N(e_B, e_C))^A with N(X, Y) = [JX, JY] - [X, Y] - J[JX, Y] - J[X, JY]."""
    c = cf.c
    both = np.einsum('aef,eb,fc->abc', c, J, J)
    left = np.einsum('aec,eb->abc', c, J)
    right = np.einsum('abf,fc->abc', c, J)
    return both - c - np.einsum('fa,abc->fbc', J, left) - np.einsum('fa,abc->fbc', J, right)


def lee_form(cf: CoframeAlgebra, J: np.ndarray) -> np.ndarray:
    """theta = (delta Omega) o J as a covector."""
    omega = kahler_form(J, cf.metric)
    delta = codifferential(omega, cf).coefficient_vector()
    return np.real(np.asarray(J).T @ delta)


@dataclass
class HermitianPackage:
    """Kähler form, its derivatives and the canonical hermitian connections."""

    Omega: MultiForm
    d_omega: MultiForm
    dc_omega: MultiForm
    lee_form: np.ndarray
    nijenhuis: np.ndarray
    levi_civita: FrameConnection
    bismut: Optional[FrameConnection]
    chern: Optional[FrameConnection]

    @property
    def integrable(self) -> bool:
        return float(np.abs(self.nijenhuis).max(initial=0.0)) <= CHECK_TOL

    def chern_mixed_torsion(self, J: np.ndarray) -> float:
        """Largest component of T(X, Y) + T(JX, JY) for the Chern connection."""
        if self.chern is None:
            return float('inf')
        return _mixed_part(self.chern.torsion_tensor, J)


def _mixed_part(T: np.ndarray, J: np.ndarray) -> float:
    rotated = np.einsum('aef,eb,fc->abc', T, J, J)
    return float(np.abs(T + rotated).max(initial=0.0))


def _skew_defect(conn: FrameConnection) -> float:
    low = np.einsum('da,abc->dbc', conn.base.metric.g, conn.torsion_tensor)
    return float(np.abs(low + np.transpose(low, (1, 0, 2))).max(initial=0.0))


def _shifted(lc: FrameConnection, three_tensor: np.ndarray, name: str) -> FrameConnection:
    """omega_{DBC} = omega^g_{DBC} + 1/2 X[B, C, D]."""
    low = lc.lowered() + 0.5 * np.transpose(three_tensor, (2, 0, 1))
    return FrameConnection(_raise_first(low, lc.base.metric), lc.base, name)


def _check_hermitian_connection(conn: FrameConnection, J: np.ndarray, torsion_defect: float, tol: float):
    """
    Raises:
        CoframeError: If conn moves J or g, or its torsion has the wrong type
    """
    residuals = {
        'nabla J': float(np.abs(covariant_derivative_J(J, conn)).max()),
        'nabla g': conn.metric_defect(),
        'torsion type': torsion_defect,
    }
    failed = {k: v for k, v in residuals.items() if v > tol}
    if failed:
        raise CoframeError(f"The {conn.name} connection fails its defining conditions: {failed}")


def hermitian_package(cf: CoframeAlgebra, J: np.ndarray, tol: float = 1e-9) -> HermitianPackage:
    """
    Kähler form, dOmega, d^c Omega, Lee form, Nijenhuis tensor, Bismut and Chern connections.

    With Omega(X, Y) = g(X, JY) and torsion T(X, Y) = nabla_X Y - nabla_Y X - [X, Y]:

        g(nabla^b_X Y, Z) = g(nabla^g_X Y, Z) + 1/2 d^c Omega(X, Y, Z),  d^c Omega = -dOmega(J., J., J.)
        g(nabla^c_X Y, Z) = g(nabla^g_X Y, Z) + 1/2 dOmega(JX, Y, Z)

    For integrable J, 2 g((nabla^g_X J) Y, Z) = dOmega(X, JY, JZ) - dOmega(X, Y, Z),
    which both corrections cancel. The Bismut torsion is then the 3-form d^c Omega
    and the Chern torsion has no (1,1)-part. Non-integrable J gets neither connection.

    Raises:
        CoframeError: If J is not hermitian for the metric, or a connection fails
            its defining conditions
    """
    J = np.asarray(J, dtype=float)
    check_hermitian(cf, J)
    omega = kahler_form(J, cf.metric)
    d_omega = d_invariant(omega, cf)
    dc_omega = -d_omega.pullback(J)
    lc = levi_civita(cf)
    N = nijenhuis_tensor(cf, J)

    bismut = chern = None
    if np.abs(N).max(initial=0.0) <= tol:
        bismut = _shifted(lc, np.real(dc_omega.to_tensor()), "bismut")
        _check_hermitian_connection(bismut, J, _skew_defect(bismut), tol)
        rotated = np.einsum('ecd,eb->bcd', np.real(d_omega.to_tensor()), J)
        chern = _shifted(lc, rotated, "chern")
        _check_hermitian_connection(chern, J, _mixed_part(chern.torsion_tensor, J), tol)
    else:
        console.print("[yellow]Warning: J is not integrable; Bismut and Chern connections skipped")

    return HermitianPackage(
        Omega=omega,
        d_omega=d_omega,
        dc_omega=dc_omega,
        lee_form=lee_form(cf, J),
        nijenhuis=N,
        levi_civita=lc,
        bismut=bismut,
        chern=chern,
    )


def unitary_connection(cf: CoframeAlgebra, J: np.ndarray) -> FrameConnection:
    """nabla = nabla^g - 1/2 J (nabla^g J); preserves g and J."""
    J = np.asarray(J, dtype=float)
    check_hermitian(cf, J)
    lc = levi_civita(cf)
    nabla_J = covariant_derivative_J(J, lc)
    omega = np.array(lc.omega)
    for b in range(cf.dim):
        omega[:, b, :] += -0.5 * J @ nabla_J[b]
    return FrameConnection(omega, cf, "unitary")


def su_connection(cf: CoframeAlgebra, J: np.ndarray, psi: MultiForm, tol: float = 1e-8) -> FrameConnection:
    """
    A connection preserving g, J and the (n,0)-form psi.

    The unitary connection rotates psi by a phase, nabla_B psi = i a_B psi; adding
    x_B J with x_B = -a_B / n removes it.

    Raises:
        CoframeError: If psi fails the volume normalization (message carries f)
            or is not of type (n,0)
    """
    factor = normalization_factor(psi, cf.metric)
    if abs(factor - 1.0) > tol:
        raise CoframeError(f"psi fails the volume normalization: f = {factor:.12g}")
    base = unitary_connection(cf, J)
    tensor = psi.to_tensor()
    nabla = covariant_derivative(psi, base)
    weight = float(np.sum(np.abs(tensor) ** 2))
    phases = np.array([np.sum(np.conj(tensor) * nabla[b]) for b in range(cf.dim)]) / (1j * weight)
    x = -np.real(phases) / psi.degree
    conn = FrameConnection(base.omega + np.einsum('b,ac->abc', x, J), cf, "special-unitary")
    residual = float(np.abs(covariant_derivative(psi, conn)).max())
    if residual > 1e-8:
        raise CoframeError(f"psi is not of type (n,0) for J (residual {residual:.3e})")
    return conn


def _stabilizer_projection(cf: CoframeAlgebra, forms: Sequence[MultiForm], name: str) -> FrameConnection:
    lc = levi_civita(cf)
    algebra = stabilizer_algebra(forms, cf.metric)
    basis = np.column_stack([A.ravel() for A in algebra])
    omega = np.zeros_like(lc.omega)
    for b in range(cf.dim):
        coeffs, *_ = lstsq(basis, lc.omega[:, b, :].ravel())
        omega[:, b, :] = (basis @ coeffs).reshape(cf.dim, cf.dim)
    return FrameConnection(omega, cf, name)


def check_g2_form(cf: CoframeAlgebra, psi: MultiForm, tol: float = CHECK_TOL):
    """
    Pointwise metric identity g_AB = 1/6 psi_ACD psi_B^CD.

    Raises:
        CoframeError: If psi does not induce the frame metric
    """
    if cf.dim != 7 or psi.degree != 3:
        raise CoframeError("A G2 structure needs a three-form in dimension 7")
    ginv = cf.metric.inverse
    tensor = np.real(psi.to_tensor())
    if cf.metric.is_orthonormal():
        induced = g2_metric_from_form(psi)
    else:
        induced = np.einsum('acd,bef,ce,df->ab', tensor, tensor, ginv, ginv) / 6.0
    if np.abs(induced - cf.metric.g).max() > tol:
        raise CoframeError("psi does not induce the frame metric")


def g2_connection(cf: CoframeAlgebra, psi: MultiForm) -> FrameConnection:
    """Levi-Civita connection projected onto the stabilizer algebra g2 of psi."""
    check_g2_form(cf, psi)
    return _stabilizer_projection(cf, [psi], "g2")


def spin7_connection(cf: CoframeAlgebra, phi: MultiForm) -> FrameConnection:
    """Levi-Civita connection projected onto the stabilizer algebra spin(7) of Phi."""
    if cf.dim != 8 or phi.degree != 4:
        raise CoframeError("A Spin(7) structure needs a four-form in dimension 8")
    return _stabilizer_projection(cf, [phi], "spin7")


def spin7_torsion(cf: CoframeAlgebra, phi: MultiForm) -> Tuple[MultiForm, MultiForm]:
    """
    Torsion three-form T = delta Phi + 7/6 *(theta ^ Phi) and the Lee form theta = 1/7 *(delta Phi ^ Phi).

    Returns:
        (T, theta)
    """
    if cf.dim != 8 or phi.degree != 4:
        raise CoframeError("A Spin(7) structure needs a four-form in dimension 8")
    delta = codifferential(phi, cf)
    theta = hodge_star(wedge(delta, phi), cf.metric) / 7.0
    return delta + (7.0 / 6.0) * hodge_star(wedge(theta, phi), cf.metric), theta


def nearly_parallel_connection(cf: CoframeAlgebra, psi: MultiForm, lam: float,
                               tol: float = 1e-9) -> Tuple[FrameConnection, int]:
    """
    The G2 connection nabla^g + 1/2 T with skew torsion T = -lam/6 psi.

    Returns:
        (connection, sign) where sign is +1 when the opposite torsion sign was needed

    Raises:
        CoframeError: If neither sign makes psi parallel
    """
    lc = levi_civita(cf)
    tensor = np.real(psi.to_tensor())
    for position, sign in enumerate((-1, 1)):
        conn = _shifted(lc, sign * lam / 6.0 * tensor, "nearly-parallel")
        if np.abs(covariant_derivative(psi, conn)).max() <= tol:
            if position:
                console.print("[yellow]Warning: nearly parallel torsion needed the opposite sign")
            return conn, sign
    raise CoframeError("psi is not parallel for either sign of the skew torsion")


@dataclass
class G2Classification:
    """Torsion classes of a G2 structure."""

    calibrated: bool
    cocalibrated: bool
    nearly_parallel: bool
    lam: float
    nearly_parallel_residual: float
    integrable: bool
    integrable_residual: float
    lee_form: MultiForm
    residual_H: MultiForm
    pure_type: Tuple[str, ...]

    def as_dict(self) -> Dict:
        return {
            'calibrated': self.calibrated,
            'cocalibrated': self.cocalibrated,
            'nearly_parallel': self.nearly_parallel,
            'lambda': self.lam,
            'nearly_parallel_residual': self.nearly_parallel_residual,
            'integrable': self.integrable,
            'pure_type': list(self.pure_type),
        }


def nearly_parallel_fit(d_psi: MultiForm, star_psi: MultiForm, metric: FrameMetric) -> Tuple[float, float]:
    """Least-squares lam in d psi = lam * psi and the norm of the remainder."""
    lam = float(np.real(inner(d_psi, star_psi, metric) / inner(star_psi, star_psi, metric)))
    return lam, norm(d_psi - lam * star_psi, metric)


def g2_classify(cf: CoframeAlgebra, psi: MultiForm, tol: float = 1e-10) -> G2Classification:
    """
    Classify a G2 structure through d psi, d*psi and the Lee form.

    theta is fixed by 3 theta = -*(*d psi ^ psi); the structure is integrable when
    d*psi = theta ^ *psi, and *H = d psi - lam *psi - theta ^ psi collects the rest.

    Raises:
        CoframeError: If psi fails the metric identity
    """
    check_g2_form(cf, psi)
    metric = cf.metric
    star_psi = hodge_star(psi, metric)
    d_psi = d_invariant(psi, cf)
    d_star = d_invariant(star_psi, cf)
    lam, np_residual = nearly_parallel_fit(d_psi, star_psi, metric)
    if abs(lam) <= tol:
        lam = 0.0
    theta = -hodge_star(wedge(hodge_star(d_psi, metric), psi), metric) / 3.0
    integrable_residual = norm(d_star - wedge(theta, star_psi), metric)
    residual_H = d_psi - lam * star_psi - wedge(theta, psi)

    classes = []
    if lam != 0.0:
        classes.append("W1")
    if integrable_residual > tol:
        classes.append("W2")
    if norm(residual_H, metric) > tol:
        classes.append("W3")
    if norm(theta, metric) > tol:
        classes.append("W4")

    return G2Classification(
        calibrated=d_psi.is_zero(tol),
        cocalibrated=d_star.is_zero(tol),
        nearly_parallel=np_residual <= tol and lam != 0.0,
        lam=lam,
        nearly_parallel_residual=np_residual,
        integrable=integrable_residual <= tol,
        integrable_residual=integrable_residual,
        lee_form=theta,
        residual_H=residual_H,
        pure_type=tuple(classes),
    )


@dataclass
class NearlyKahlerReport:
    """Outcome of the nearly Kähler identities."""

    is_nk: bool
    kahler: bool
    a: float
    residuals: Dict[str, float]
    relation_sign: int
    einstein_residual: Optional[float] = None

    def as_dict(self) -> Dict:
        record = {'is_nk': self.is_nk, 'kahler': self.kahler, 'a': self.a, 'relation_sign': self.relation_sign}
        record.update(self.residuals)
        if self.einstein_residual is not None:
            record['einstein'] = self.einstein_residual
        return record


def nearly_kahler_check(cf: CoframeAlgebra, J: np.ndarray, tol: float = 1e-10) -> NearlyKahlerReport:
    """
    Test (nabla^g_X J) X = 0 and the identities of a six-dimensional nearly Kähler structure.

    Checks the symmetrized nabla J on frame pairs, dOmega = 3 nabla^g Omega, the
    proportionality 4 dOmega(X, Y, Z) = 3 N(JX, Y, Z) (sign recorded), fits the
    constant type a in |(nabla_X J) Y|^2 = a/2 (|X|^2|Y|^2 - g(X,Y)^2 - g(X,JY)^2)
    and, in dimension 6, compares Ric with 5a/2 g.

    Raises:
        CoframeError: If J is not hermitian
    """
    J = np.asarray(J, dtype=float)
    check_hermitian(cf, J)
    g = cf.metric.g
    lc = levi_civita(cf)
    K = covariant_derivative_J(J, lc)  # K[B][:, D] = (nabla_B J) e_D
    nabla_J = lambda X, Y: np.einsum('b,d,bad->a', X, Y, K)
    symmetric = float(np.abs(K + np.transpose(K, (2, 1, 0))).max(initial=0.0))
    kahler = float(np.abs(K).max(initial=0.0)) <= tol

    omega = kahler_form(J, cf.metric)
    d_omega = np.real(d_invariant(omega, cf).to_tensor())
    nabla_omega = covariant_derivative(omega, lc)
    d_vs_nabla = float(np.abs(d_omega - 3.0 * nabla_omega).max(initial=0.0))

    N = nijenhuis_tensor(cf, J)
    N_low = np.einsum('da,abc->bcd', g, N)  # N(X, Y, Z) = g(N(X, Y), Z)
    N_rot = np.einsum('ecd,eb->bcd', N_low, J)
    relation = {s: float(np.abs(4.0 * d_omega - 3.0 * s * N_rot).max(initial=0.0)) for s in (1, -1)}
    relation_sign = min(relation, key=relation.get)

    n = cf.dim
    samples = [np.eye(n)[i] for i in range(n)]
    samples += [(np.eye(n)[i] + np.eye(n)[j]) / math.sqrt(2) for i in range(n) for j in range(i + 1, n)]
    lhs, shape = [], []
    for X in samples:
        for Y in samples:
            v = nabla_J(X, Y)
            lhs.append(float(v @ g @ v))
            shape.append(0.5 * ((X @ g @ X) * (Y @ g @ Y) - (X @ g @ Y) ** 2 - (X @ g @ J @ Y) ** 2))
    lhs, shape = np.array(lhs), np.array(shape)
    a = float(lhs @ shape / (shape @ shape)) if np.any(shape) else 0.0
    if abs(a) <= tol:
        a = 0.0
    constant_type = float(np.abs(lhs - a * shape).max(initial=0.0))

    einstein = None
    if n == 6:
        einstein = float(np.abs(ricci_tensor(lc) - 2.5 * a * g).max())

    residuals = {
        'symmetric_nabla_J': symmetric,
        'd_omega_vs_nabla_omega': d_vs_nabla,
        'relation': relation[relation_sign],
        'constant_type': constant_type,
    }
    return NearlyKahlerReport(
        is_nk=symmetric <= tol,
        kahler=kahler,
        a=a,
        residuals=residuals,
        relation_sign=relation_sign,
        einstein_residual=einstein,
    )


# nearly parallel G2 parameter systems

def squashed_s7_residual(y: float, z: float, lam: float) -> np.ndarray:
    """Residuals of -3y = lam z^2 and y^2/2 + z^2 = -lam y z^2 / 2."""
    return np.array([-3.0 * y - lam * z ** 2, 0.5 * y ** 2 + z ** 2 + 0.5 * lam * y * z ** 2])


def squashed_s7_solution(lam: float, branch: int = 1) -> Tuple[float, float]:
    """(y, z) = (-3/lam, branch * 3/lam)."""
    if lam == 0:
        raise CoframeError("The squashed solution needs lam != 0")
    return -3.0 / lam, branch * 3.0 / lam


def aloff_wallach_angle(n: int, m: int) -> float:
    """delta with tan(delta) = -n/m."""
    if n == 0 and m == 0:
        raise CoframeError("N(0,0) is not an Aloff-Wallach space")
    return math.atan2(-n, m)


def aloff_wallach_residual(params: Sequence[float], n: int, m: int) -> np.ndarray:
    """
    Residuals of the nearly-parallel system of N(n,m) for (x, y, z, f), lam = x^2 + y^2 + z^2.
    """
    x, y, z, f = params
    delta = aloff_wallach_angle(n, m)
    cd, sd = math.cos(delta), math.sin(delta)
    lam = x ** 2 + y ** 2 + z ** 2
    r2 = 2.0 * math.sqrt(2.0) * f
    return np.array([
        4 * x * y * z + r2 * (y ** 2 * (cd - sd) + z ** 2 * sd) - lam * y ** 2 * z ** 2,
        4 * x * y * z + r2 * (x ** 2 * (cd - sd) - z ** 2 * cd) - lam * x ** 2 * z ** 2,
        4 * x * y * z + r2 * (x ** 2 * sd - y ** 2 * cd) - lam * y ** 2 * x ** 2,
    ])


def aloff_wallach_symmetric_roots() -> List[float]:
    """
    Roots u = x^2 of 4u^3 + 4u^2 - 15u + 4 = 0, the x = y, z = 1 reduction for N(1,1).
    """
    poly = lambda u: 4 * u ** 3 + 4 * u ** 2 - 15 * u + 4
    return [brentq(poly, 0.25, 0.5), brentq(poly, 0.5, 1.5)]


def solve_aloff_wallach(n: int, m: int, rng: np.random.Generator, starts: int = 50,
                        tol: float = 1e-10) -> List[np.ndarray]:
    """
    Non-degenerate solutions (x, y, 1, f) of the N(n,m) system by multi-start fsolve.

    Starts from the symmetric N(1,1) roots first, then from random points.

    Returns:
        Distinct solutions with residual below tol (possibly empty)
    """
    guesses = []
    for u in aloff_wallach_symmetric_roots():
        x = math.sqrt(u)
        guesses.append([x, x, 1.0 - (2 * u + 1) * u / 4.0])
    guesses += [list(rng.uniform(-2.0, 2.0, size=3)) for _ in range(starts)]

    solutions: List[np.ndarray] = []
    for guess in guesses:
        system = lambda p: aloff_wallach_residual([p[0], p[1], 1.0, p[2]], n, m)
        root, _, status, _ = fsolve(system, guess, full_output=True, xtol=1e-14)
        if status != 1:
            continue
        candidate = np.array([root[0], root[1], 1.0, root[2]])
        if np.abs(aloff_wallach_residual(candidate, n, m)).max() > tol:
            continue
        if min(abs(root[0]), abs(root[1]), abs(root[2])) < 1e-6:
            continue
        if any(np.allclose(candidate, s, atol=1e-8) for s in solutions):
            continue
        solutions.append(candidate)
    return solutions


def so5_so3_nearly_parallel(y: float = 1.0) -> Dict[str, float]:
    """Squashing parameters of the so(5)/so(3) coframe at which psi is nearly parallel."""
    if y == 0:
        raise CoframeError("y must be non-zero")
    return {'y': y, 'z': math.sqrt(5.0) * abs(y), 'lam': -6.0 / (5.0 * y)}
