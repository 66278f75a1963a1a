"""
Registry of named geometries: coframes, their calibration forms, declared
connections and calibrated sub-frames.
"""

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import yaml
from scipy.linalg import null_space

from .canonical_structures import (
    build_g2,
    build_spin7,
    g2_form,
    hermitian_orientation,
    holomorphic_volume,
    kahler_form,
    phase_partner,
    unitary_J,
    wirtinger_power,
)
from .coframe_calculus import (
    CoframeAlgebra,
    CoframeError,
    FrameConnection,
    aloff_wallach_angle,
    aloff_wallach_residual,
    d_invariant,
    flat_left_connection,
    levi_civita,
    nearly_parallel_connection,
    so5_so3_nearly_parallel,
    solve_aloff_wallach,
    squashed_s7_residual,
    squashed_s7_solution,
)
from .exterior_core import FrameMetric, MultiForm, VectorForm, hodge_star, interior, norm
from .utils import index_label, to_plain

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True, eq=False)
class PresetBinding:
    """
    A coframe together with the structure it carries.

    Attributes:
        name: Registry name
        cf: The coframe (group or reductive quotient)
        forms: Named forms and vector-valued forms
        J: Almost complex structure, hermitian presets only
        connection: Name of the declared connection ("flat-left", "levi-civita", "nearly-parallel")
        parallel_forms: Forms the declared connection is expected to preserve
        submanifolds: Calibrated sub-frames by kind ("sas", "associative", ...)
        candidates: Named deformation fields as (mode, generator) with mode "right" or "constant"
        params: Numerical parameters of the preset
        extended: The full group coframe behind a quotient, when one exists
    """

    name: str
    cf: CoframeAlgebra
    forms: Dict[str, Union[MultiForm, VectorForm]] = field(default_factory=dict)
    J: Optional[np.ndarray] = None
    connection: str = "flat-left"
    parallel_forms: Tuple[str, ...] = ()
    submanifolds: Dict[str, Tuple[int, ...]] = field(default_factory=dict)
    candidates: Dict[str, Tuple[str, np.ndarray]] = field(default_factory=dict)
    description: str = ""
    params: Dict[str, float] = field(default_factory=dict)
    extended: Optional[CoframeAlgebra] = None

    def form(self, name: str):
        """
        Raises:
            CoframeError: If the preset carries no such form
        """
        if name not in self.forms:
            raise CoframeError(f"Preset '{self.name}' has no form '{name}'. Available: {', '.join(sorted(self.forms))}")
        return self.forms[name]

    def submanifold(self, kind: str) -> Tuple[int, ...]:
        """
        Raises:
            CoframeError: If no sub-frame of that kind is declared
        """
        if kind not in self.submanifolds:
            available = ', '.join(sorted(self.submanifolds)) or 'none'
            raise CoframeError(f"Preset '{self.name}' declares no {kind} submanifold. Available: {available}")
        return self.submanifolds[kind]

    def declared_connection(self) -> FrameConnection:
        if self.connection == "flat-left":
            return flat_left_connection(self.cf)
        if self.connection == "levi-civita":
            return levi_civita(self.cf)
        if self.connection == "nearly-parallel":
            conn, _ = nearly_parallel_connection(self.cf, self.form("psi"), self.params["lam"])
            return conn
        raise CoframeError(f"Unknown connection '{self.connection}' on preset '{self.name}'")


@dataclass(frozen=True)
class ParametricPreset:
    """A geometry known through an algebraic system or a pointwise family rather than a single coframe."""

    name: str
    description: str
    solve: Callable[[np.random.Generator], Dict]
    params: Dict[str, float] = field(default_factory=dict)


Preset = Union[PresetBinding, ParametricPreset]


# building blocks

def levi_civita_symbol() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for perm in itertools.permutations(range(3)):
        eps[perm] = np.linalg.det(np.eye(3)[list(perm)])
    return eps


def _su2(labels: Sequence[str]) -> CoframeAlgebra:
    return CoframeAlgebra(levi_civita_symbol(), labels=tuple(labels))


def _abelian(label: str) -> CoframeAlgebra:
    return CoframeAlgebra(np.zeros((1, 1, 1)), labels=(label,))


def _reoriented(cf: CoframeAlgebra, orientation: int) -> CoframeAlgebra:
    return CoframeAlgebra(cf.c, FrameMetric(cf.metric.g, orientation), cf.labels, cf.isotropy)


def _omega_orientation(omega: MultiForm) -> int:
    """Sign of Omega^n / n! against e^{1...2n}."""
    top = wirtinger_power(omega, omega.dim // 2).coefficient(tuple(range(omega.dim)))
    return 1 if np.real(top) > 0 else -1


def _elementary(n: int, i: int, j: int) -> np.ndarray:
    """E_ij = e_i e_j^T - e_j e_i^T (1-based)."""
    E = np.zeros((n, n))
    E[i - 1, j - 1] = 1.0
    E[j - 1, i - 1] = -1.0
    return E


def _hermitian_forms(omega: MultiForm, psi: MultiForm) -> Dict[str, MultiForm]:
    return {"Omega": omega, "psi_n0": psi, "re_psi": psi.real, "im_psi": psi.imag}


def _nearly_kahler_psi(cf: CoframeAlgebra, omega: MultiForm, J: np.ndarray, tangent: Sequence[int]) -> MultiForm:
    """
    The (3,0)-form with Im psi proportional to dOmega, |Im psi|^2 = 4, and Re psi = +1 on the tangent frame.
    """
    d_omega = d_invariant(omega, cf).real
    im_part = d_omega * (2.0 / norm(d_omega))
    re_part = phase_partner(im_part, J)
    frame = np.eye(cf.dim)
    if np.real(re_part.evaluate(*(frame[i] for i in tangent))) < 0:
        re_part, im_part = -re_part, -im_part
    return re_part + 1j * im_part


# group presets

def _s3() -> PresetBinding:
    cf = _su2(("sigma1", "sigma2", "sigma3"))
    sigma3 = MultiForm.basis(3, (2,))
    return PresetBinding(
        "s3", cf, {"sigma3": sigma3}, parallel_forms=("sigma3",),
        description="S^3 = SU(2) with d sigma^a = -1/2 eps_abc sigma^b ^ sigma^c",
    )


def _hopf_s3() -> PresetBinding:
    cf = _su2(("sigma1", "sigma2", "sigma3"))
    phi = MultiForm.basis(3, (2,))
    return PresetBinding(
        "hopf_s3", cf, {"phi": phi}, parallel_forms=("phi",),
        submanifolds={"fibre": (2,)},
        description="The one-form sigma^3 on S^3 calibrating the Hopf fibres",
    )


def _s3xs3_hermitian() -> PresetBinding:
    base = _su2(("sigma1", "sigma2", "sigma3")).product(_su2(("tsigma1", "tsigma2", "tsigma3")))
    omega = MultiForm.from_strings(6, {"12": 1, "45": -1, "36": 1})
    J = np.real(omega.to_tensor())
    e = lambda i: MultiForm.basis(6, (i,))
    psi = np.exp(0.25j * math.pi) * ((e(0) + 1j * e(1)) ^ (e(3) - 1j * e(4)) ^ (e(2) + 1j * e(5)))
    cf = _reoriented(base, _omega_orientation(omega))
    forms = _hermitian_forms(omega, psi)
    return PresetBinding(
        "s3xs3_hermitian", cf, forms, J=J, parallel_forms=tuple(forms),
        description="S^3 x S^3 with the bi-invariant metric and the left-parallel hermitian structure",
    )


def _s3xs3_diagonal() -> PresetBinding:
    source = _s3xs3_hermitian()
    n = 3
    P = np.zeros((6, 6))
    for a in range(n):
        P[a, a] = P[n + a, a] = P[a, n + a] = 1.0 / SQRT2
        P[n + a, n + a] = -1.0 / SQRT2
    labels = tuple(f"u{a + 1}" for a in range(n)) + tuple(f"v{a + 1}" for a in range(n))
    cf = source.cf.change_frame(P, labels)
    Pinv = np.linalg.inv(P)
    J = Pinv @ source.J @ P
    forms = {name: form.pullback(P) for name, form in source.forms.items()}
    candidates = {}
    for a in range(n):
        generator = np.zeros(6)
        generator[a], generator[n + a] = 1.0, -1.0
        candidates[f"rho{a + 1}-trho{a + 1}"] = ("right", Pinv @ generator)
    return PresetBinding(
        "s3xs3_diagonal", cf, forms, J=J, parallel_forms=tuple(forms),
        submanifolds={"sas": (0, 1, 2)}, candidates=candidates,
        description="The hermitian S^3 x S^3 in the frame u = (e + te)/sqrt2, v = (e - te)/sqrt2 adapted to the diagonal",
    )


def _gxg(name: str, algebra: CoframeAlgebra, swapped: bool = False, description: str = "",
         labels: Tuple[str, str] = ("", "t")) -> PresetBinding:
    """
    G x G with Omega = sum sigma^a ^ tsigma^a and psi = prod (sigma^a + i tsigma^a).

    The swapped variant multiplies psi by i^{-k} and calibrates {e} x G instead of G x {e}.
    """
    k = algebra.dim
    first = CoframeAlgebra(algebra.c, labels=tuple(f"{labels[0]}{l}" for l in algebra.labels))
    second = CoframeAlgebra(algebra.c, labels=tuple(f"{labels[1]}{l}" for l in algebra.labels))
    cf = _reoriented(first.product(second), hermitian_orientation(k))
    J = unitary_J(k)
    omega = kahler_form(J)
    psi = holomorphic_volume(k)
    tangent = tuple(range(k))
    if swapped:
        psi = (1j) ** (-k) * psi
        tangent = tuple(range(k, 2 * k))
    forms = _hermitian_forms(omega, psi)
    return PresetBinding(
        name, cf, forms, J=J, parallel_forms=tuple(forms),
        submanifolds={"sas": tangent}, description=description, params={"k": k},
    )


def _su3_algebra() -> CoframeAlgebra:
    """su(3) in the basis i lambda_a / 2 of Gell-Mann matrices."""
    l = np.zeros((8, 3, 3), dtype=complex)
    l[0][0, 1] = l[0][1, 0] = 1
    l[1][0, 1], l[1][1, 0] = -1j, 1j
    l[2][0, 0], l[2][1, 1] = 1, -1
    l[3][0, 2] = l[3][2, 0] = 1
    l[4][0, 2], l[4][2, 0] = -1j, 1j
    l[5][1, 2] = l[5][2, 1] = 1
    l[6][1, 2], l[6][2, 1] = -1j, 1j
    l[7] = np.diag([1, 1, -2]) / SQRT3
    return CoframeAlgebra.from_matrices([0.5j * m for m in l], labels=tuple(f"l{a + 1}" for a in range(8)))


def _spin4_b13() -> PresetBinding:
    basis = [SQRT3 * _elementary(4, 1, 2), SQRT3 * _elementary(4, 1, 3), SQRT3 * _elementary(4, 2, 3),
             _elementary(4, 1, 4), _elementary(4, 2, 4), _elementary(4, 3, 4)]
    omega = MultiForm.from_strings(6, {"16": -1, "25": 1, "34": -1})
    cf = CoframeAlgebra.from_matrices(basis, FrameMetric.identity(6, _omega_orientation(omega)),
                                      labels=tuple(f"f{i + 1}" for i in range(6)))
    J = np.real(omega.to_tensor())
    tangent = (0, 1, 2)
    psi = _nearly_kahler_psi(cf, omega, J, tangent)
    forms = _hermitian_forms(omega, psi)
    return PresetBinding(
        "spin4_b13", cf, forms, J=J, parallel_forms=tuple(forms),
        submanifolds={"sas": tangent},
        description="Spin(4) = S^3 x S^3 with the nearly Kähler metric B_{1/3} on so(3) + R^3",
    )


def _u3(a: complex, b: complex, c: complex) -> np.ndarray:
    return np.array([[0, a, b], [-np.conj(a), 0, c], [-np.conj(b), -np.conj(c), 0]], dtype=complex)


def _flag_f12() -> PresetBinding:
    basis = [_u3(1, 0, 0), _u3(1j, 0, 0), _u3(0, 1, 0), _u3(0, 1j, 0), _u3(0, 0, 1), _u3(0, 0, 1j)]
    basis = [m / SQRT2 for m in basis]
    basis += [np.diag(d).astype(complex) for d in ([1j, 0, 0], [0, 1j, 0], [0, 0, 1j])]
    labels = tuple(f"e{i + 1}" for i in range(6)) + ("h1", "h2", "h3")
    group = CoframeAlgebra.from_matrices(basis, labels=labels)
    cf = group.quotient((6, 7, 8))
    J = np.zeros((6, 6))
    for src, dst, sign in ((0, 1, 1), (2, 3, -1), (4, 5, 1)):
        J[dst, src] = sign
        J[src, dst] = -sign
    omega = kahler_form(J)
    cf = _reoriented(cf, _omega_orientation(omega))
    tangent = (0, 2, 4)
    psi = _nearly_kahler_psi(cf, omega, J, tangent)
    forms = _hermitian_forms(omega, psi)
    return PresetBinding(
        "flag_f12", cf, forms, J=J, parallel_forms=tuple(forms),
        submanifolds={"sas": tangent}, extended=group,
        description="The flag manifold F_{1,2} = U(3)/T^3 with its nearly Kähler structure",
    )


def _g2_group() -> PresetBinding:
    cf = _su2(("sigma1", "sigma2", "sigma3")).product(_abelian("tsigma0")).product(
        _su2(("tsigma1", "tsigma2", "tsigma3")))
    g2 = build_g2()
    forms = {name: g2.form(name) for name in ("psi", "star_psi", "chi")}
    return PresetBinding(
        "g2_group", cf, forms, parallel_forms=("psi", "star_psi"),
        submanifolds={"associative": (0, 1, 2), "coassociative": (3, 4, 5, 6)},
        description="S^3 x S^1 x S^3 with the left-parallel G2 form",
    )


def _cayley_group() -> PresetBinding:
    half = lambda prefix: _abelian(f"{prefix}sigma0").product(
        _su2(tuple(f"{prefix}sigma{a}" for a in (1, 2, 3))))
    cf = half("").product(half("t"))
    spin7 = build_spin7()
    forms = {"Phi": spin7.form("Phi"), "tau": spin7.form("tau")}
    return PresetBinding(
        "cayley_group", cf, forms, parallel_forms=("Phi",),
        submanifolds={"cayley": (0, 1, 2, 3)},
        description="(S^1 x S^3) x (S^1 x S^3) with the left-parallel Cayley form",
    )


def _iwasawa() -> PresetBinding:
    c = np.zeros((6, 6, 6))
    for (a, b, cc), value in (((3, 1, 2), 1.0), ((3, 4, 5), -1.0), ((6, 1, 5), 1.0), ((6, 2, 4), -1.0)):
        c[a - 1, b - 1, cc - 1] = value
        c[a - 1, cc - 1, b - 1] = -value
    cf = CoframeAlgebra(c, FrameMetric.identity(6, hermitian_orientation(3)),
                        ("x1", "x2", "x3", "y1", "y2", "y3"))
    J = unitary_J(3)
    forms = _hermitian_forms(kahler_form(J), holomorphic_volume(3))
    constant = np.zeros(6)
    constant[5] = 1.0
    return PresetBinding(
        "iwasawa", cf, forms, J=J, parallel_forms=tuple(forms),
        submanifolds={"sas": (0, 1, 2)}, candidates={"-Je3": ("constant", constant)},
        description="The Iwasawa manifold with alpha_3 = dz_3 - z_1 dz_2; flat Chern connection",
    )


def so5_so3_coframe(y: float, z: float) -> CoframeAlgebra:
    """
    The group so(5) in the frame (rho_i / y, P_a / z, sigma_j), sigma_j last.

    rho and sigma are the anti-self-dual and self-dual so(3) factors of so(4) in so(5),
    P_a = E_{a5} span the complement.
    """
    E = lambda i, j: _elementary(5, i, j)
    rho = [0.5 * (E(1, 2) - E(3, 4)), 0.5 * (E(1, 3) + E(2, 4)), 0.5 * (E(1, 4) - E(2, 3))]
    sigma = [0.5 * (E(1, 2) + E(3, 4)), 0.5 * (E(1, 3) - E(2, 4)), 0.5 * (E(1, 4) + E(2, 3))]
    P = [E(a, 5) for a in (1, 2, 3, 4)]
    basis = [r / y for r in rho] + [p / z for p in P] + sigma
    labels = tuple(f"e{i + 1}" for i in range(7)) + ("s1", "s2", "s3")
    return CoframeAlgebra.from_matrices(basis, labels=labels)


def _so5_so3() -> PresetBinding:
    params = so5_so3_nearly_parallel(1.0)
    group = so5_so3_coframe(params['y'], params['z'])
    cf = group.quotient((7, 8, 9))
    psi = g2_form()
    forms = {"psi": psi, "star_psi": hodge_star(psi, cf.metric), "chi": build_g2().form("chi")}
    return PresetBinding(
        "so5_so3", cf, forms, connection="nearly-parallel", parallel_forms=("psi", "star_psi"),
        submanifolds={"associative": (0, 1, 2)}, params=params, extended=group,
        description="SO(5)/SO(3) with the squashed metric at which the G2 form is nearly parallel",
    )


def _flat(name: str, dim: int, forms: Dict, submanifolds: Dict, J=None, orientation: int = 1,
          description: str = "") -> PresetBinding:
    cf = CoframeAlgebra(np.zeros((dim,) * 3), FrameMetric.identity(dim, orientation))
    return PresetBinding(name, cf, forms, J=J, parallel_forms=tuple(f for f in forms if f not in ("chi", "tau")),
                         submanifolds=submanifolds, description=description)


def _flat_c3() -> PresetBinding:
    J = unitary_J(3)
    forms = _hermitian_forms(kahler_form(J), holomorphic_volume(3))
    return _flat("flat_c3", 6, forms, {"sas": (0, 1, 2)}, J=J, orientation=hermitian_orientation(3),
                 description="C^3 with its standard SU(3) structure")


def _flat_r7() -> PresetBinding:
    g2 = build_g2()
    forms = {name: g2.form(name) for name in ("psi", "star_psi", "chi")}
    return _flat("flat_r7", 7, forms, {"associative": (0, 1, 2), "coassociative": (3, 4, 5, 6)},
                 description="R^7 with the standard G2 form")


def _flat_r8() -> PresetBinding:
    spin7 = build_spin7()
    forms = {"Phi": spin7.form("Phi"), "tau": spin7.form("tau")}
    return _flat("flat_r8", 8, forms, {"cayley": (0, 1, 2, 3)}, description="R^8 with the standard Cayley form")


# parametric presets

def _s7_squashed_solve(lam: float = 1.0) -> Callable[[np.random.Generator], Dict]:
    def solve(rng: np.random.Generator) -> Dict:
        branches = [squashed_s7_solution(lam, branch) for branch in (1, -1)]
        residual = max(float(np.abs(squashed_s7_residual(y, z, lam)).max()) for y, z in branches)
        return {'lam': lam, 'branches': [list(b) for b in branches], 'residual': residual}
    return solve


def aloff_wallach_preset(n: int = 1, m: int = 1) -> ParametricPreset:
    def solve(rng: np.random.Generator) -> Dict:
        solutions = solve_aloff_wallach(n, m, rng)
        residual = max((float(np.abs(aloff_wallach_residual(s, n, m)).max()) for s in solutions), default=float('inf'))
        return {
            'delta': aloff_wallach_angle(n, m),
            'solutions': [list(s) for s in solutions],
            'lam': [float(s[0] ** 2 + s[1] ** 2 + s[2] ** 2) for s in solutions],
            'residual': residual,
        }
    return ParametricPreset("aw_nm", f"Aloff-Wallach space N({n},{m}) nearly parallel system", solve, {'n': n, 'm': m})


@dataclass(frozen=True, eq=False)
class PointwiseHermitian:
    """Almost hermitian data of S^6 at one point: tangent frame (columns), Omega_x and J_x."""

    x: np.ndarray
    frame: np.ndarray
    Omega: MultiForm
    J: np.ndarray

    def j_squared_residual(self) -> float:
        return float(np.abs(self.J @ self.J + np.eye(6)).max())

    def restricted_omega(self, vectors: np.ndarray) -> MultiForm:
        """Omega_x pulled back to span(vectors), given as ambient R^7 columns inside x^perp."""
        return self.Omega.pullback(self.frame.T @ vectors)


def s6_pointwise(x: Sequence[float]) -> PointwiseHermitian:
    """
    The almost complex structure of S^6 in Im(O) at x: Omega_x = i_x psi on x^perp.

    Raises:
        CoframeError: If x is zero
    """
    x = np.asarray(x, dtype=float)
    length = np.linalg.norm(x)
    if length == 0:
        raise CoframeError("s6_pointwise needs a non-zero point")
    x = x / length
    frame = null_space(x[None, :])
    if np.linalg.det(np.column_stack([x, frame])) < 0:
        frame[:, -1] *= -1
    omega = interior(x, g2_form()).pullback(frame)
    J = np.real(omega.to_tensor())
    return PointwiseHermitian(x, frame, omega, J)


def _s6_solve(rng: np.random.Generator) -> Dict:
    x = np.zeros(7)
    x[3:] = rng.normal(size=4)
    data = s6_pointwise(x)
    coordinate = np.eye(7)[:, :3]
    return {
        'j_squared': data.j_squared_residual(),
        'lagrangian': data.restricted_omega(coordinate).max_abs(),
    }


_REGISTRY: Dict[str, Callable[[], Preset]] = {
    "s3": _s3,
    "hopf_s3": _hopf_s3,
    "s3xs3_hermitian": _s3xs3_hermitian,
    "s3xs3_diagonal": _s3xs3_diagonal,
    "s3xs3_almost_hermitian": lambda: _gxg(
        "s3xs3_almost_hermitian", _su2(("sigma1", "sigma2", "sigma3")),
        description="S^3 x S^3 with the left-invariant U(3) and SU(3) forms; S^3 x {e} is SAS"),
    "s3xs3_almost_hermitian_variant": lambda: _gxg(
        "s3xs3_almost_hermitian_variant", _su2(("sigma1", "sigma2", "sigma3")), swapped=True,
        description="S^3 x S^3 with i psi; {e} x S^3 is SAS"),
    "gxg_su2": lambda: _gxg("gxg_su2", _su2(("1", "2", "3")), labels=("g", "h"),
                            description="G x G for G = SU(2)"),
    "gxg_su2_swapped": lambda: _gxg("gxg_su2_swapped", _su2(("1", "2", "3")), swapped=True, labels=("g", "h"),
                                    description="G x G for G = SU(2) with psi multiplied by i^{-k}"),
    "gxg_su3": lambda: _gxg("gxg_su3", _su3_algebra(), labels=("g", "h"), description="G x G for G = SU(3)"),
    "spin4_b13": _spin4_b13,
    "flag_f12": _flag_f12,
    "g2_group": _g2_group,
    "cayley_group": _cayley_group,
    "iwasawa": _iwasawa,
    "so5_so3": _so5_so3,
    "flat_c3": _flat_c3,
    "flat_r7": _flat_r7,
    "flat_r8": _flat_r8,
    "s7_squashed": lambda: ParametricPreset(
        "s7_squashed", "Squashed S^7 nearly parallel system -3y = lam z^2, y^2/2 + z^2 = -lam y z^2/2",
        _s7_squashed_solve(1.0), {'lam': 1.0}),
    "aw_nm": lambda: aloff_wallach_preset(1, 1),
    "s6_pointwise": lambda: ParametricPreset(
        "s6_pointwise", "S^6 in Im(O) with Omega_x = i_x psi; x^1 = x^2 = x^3 = 0 gives a Lagrangian 3-plane",
        _s6_solve),
}


def preset_names() -> Tuple[str, ...]:
    return tuple(_REGISTRY)


def coframe_preset_names() -> Tuple[str, ...]:
    return tuple(name for name in _REGISTRY if isinstance(preset(name), PresetBinding))


@lru_cache(maxsize=None)
def preset(name: str) -> Preset:
    """
    Look up a geometry by registry name.

    Raises:
        CoframeError: If the name is not registered (the message lists the registry)
    """
    if name not in _REGISTRY:
        raise CoframeError(f"Unknown preset '{name}'. Available: {', '.join(_REGISTRY)}")
    return _REGISTRY[name]()


def _form_record(form) -> Dict:
    if isinstance(form, VectorForm):
        return {'components': [_form_record(c) for c in form.components]}
    return {index_label(key) or '1': to_plain(value) for key, value in sorted(form.coeffs.items())}


def export_preset(name: str) -> str:
    """
    Structured YAML description of a preset for audit.

    Structure constants are listed as [A, B, C, value] with 1-based indices, B < C.

    Raises:
        CoframeError: If the name is not registered
    """
    item = preset(name)
    if isinstance(item, ParametricPreset):
        document = {'name': item.name, 'kind': 'parametric', 'description': item.description,
                    'params': to_plain(item.params)}
        return yaml.safe_dump(document, sort_keys=False)

    cf = item.cf
    n = cf.dim
    constants = [[a + 1, b + 1, c + 1, float(cf.c[a, b, c])]
                 for a in range(n) for b in range(n) for c in range(b + 1, n) if cf.c[a, b, c] != 0]
    document = {
        'name': item.name,
        'kind': 'quotient' if cf.is_quotient else 'group',
        'description': item.description,
        'dim': n,
        'labels': list(cf.labels),
        'metric': {'g': to_plain(cf.metric.g), 'orientation': cf.metric.orientation},
        'structure_constants': constants,
        'forms': {form_name: _form_record(form) for form_name, form in item.forms.items()},
        'connection': item.connection,
        'submanifolds': {kind: index_label(idx) for kind, idx in item.submanifolds.items()},
    }
    if item.J is not None:
        document['J'] = to_plain(item.J)
    if item.params:
        document['params'] = to_plain(item.params)
    return yaml.safe_dump(document, sort_keys=False)
