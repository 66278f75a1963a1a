"""Canonical calibration forms of the U(n), SU(n), G2 and Spin(7) holonomy blocks."""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .exterior_core import (
    FrameMetric,
    MultiForm,
    VectorForm,
    basis_one_form,
    hodge_star,
    interior,
    restrict,
    volume_form,
    wedge,
    wedge_all,
)

IDENTITY_TOL = 1e-12

G2_TERMS = {
    "123": 1, "145": 1, "167": -1, "246": 1, "257": 1, "347": 1, "356": -1,
}

# Components chi^1..chi^7 of the G2 cross-product form
CHI_TERMS = [
    {"256": 1, "247": -1, "346": 1, "357": 1},
    {"147": 1, "156": -1, "345": -1, "367": 1},
    {"245": 1, "267": -1, "146": -1, "157": -1},
    {"567": 1, "127": -1, "136": 1, "235": -1},
    {"126": 1, "467": -1, "137": 1, "234": 1},
    {"457": 1, "125": -1, "134": -1, "237": 1},
    {"124": 1, "456": -1, "135": -1, "236": -1},
]

SPIN7_TERMS = {
    "1234": 1, "5678": 1,
    "1256": 1, "1278": -1, "3456": -1, "3478": 1,
    "1357": 1, "1368": 1, "2457": 1, "2468": 1,
    "1458": 1, "1467": -1, "2358": -1, "2367": 1,
}

# Components of the Spin(7) four-fold cross-product form; the first three are
# assembled from wedges of self-dual pairs in _tau_components
TAU_TERMS = [
    {"2345": 1, "1346": -1, "1247": 1, "1238": -1, "1678": 1, "2578": -1, "3568": 1, "4567": -1},
    {"2346": 1, "1345": 1, "1248": 1, "1237": 1, "2678": -1, "1578": -1, "4568": -1, "3567": -1},
    {"2347": 1, "1348": 1, "1245": -1, "1236": -1, "3678": -1, "4578": -1, "1568": 1, "2567": 1},
    {"2348": 1, "1347": -1, "1246": -1, "1235": 1, "4678": -1, "3578": 1, "2568": 1, "1567": -1},
]


class StructureError(Exception):
    """Canonical structure failing one of its algebraic identities."""
    pass


@dataclass(frozen=True, eq=False)
class HolonomyStructure:
    """
    Calibration data of one holonomy block in its canonical frame.

    Attributes:
        kind: One of "U(n)", "SU(n)", "G2", "Spin7"
        dim: Ambient real dimension
        forms: Named forms (Omega, psi, re_psi, im_psi, psi_n0, star_psi, Phi, chi, tau, asd_basis)
        J: Almost complex structure matrix (columns are images of frame vectors), hermitian kinds only
        metric: Frame metric (orthonormal for the canonical frames)
    """

    kind: str
    dim: int
    forms: Dict[str, object] = field(default_factory=dict)
    J: Optional[np.ndarray] = None
    metric: Optional[FrameMetric] = None

    def __post_init__(self):
        if self.metric is None:
            object.__setattr__(self, 'metric', FrameMetric.identity(self.dim))

    def form(self, name: str):
        """
        Look up a named form.

        Raises:
            StructureError: If the structure does not carry the form
        """
        if name not in self.forms:
            raise StructureError(
                f"{self.kind} structure has no form '{name}'. Available: {', '.join(sorted(self.forms))}"
            )
        return self.forms[name]

    @property
    def complex_dim(self) -> int:
        return self.dim // 2

    def phi(self, k: int) -> MultiForm:
        """Wirtinger form Omega^k / k! (hermitian kinds only)."""
        return wirtinger_power(self.form("Omega"), k)


def unitary_J(n: int) -> np.ndarray:
    """Canonical complex structure on frames ordered (1..n, 1'..n'): J e_a = -e_a', J e_a' = e_a."""
    J = np.zeros((2 * n, 2 * n))
    for a in range(n):
        J[n + a, a] = -1.0
        J[a, n + a] = 1.0
    return J


def kahler_form(J: np.ndarray, metric: Optional[FrameMetric] = None) -> MultiForm:
    """Omega(X, Y) = g(X, J Y) for a frame complex structure J."""
    g = np.eye(J.shape[0]) if metric is None else metric.g
    tensor = g @ J
    if not np.allclose(tensor, -tensor.T, atol=IDENTITY_TOL):
        raise StructureError("g(., J.) is not antisymmetric; J is not g-orthogonal")
    return MultiForm.from_tensor(tensor)


def wirtinger_power(omega: MultiForm, k: int) -> MultiForm:
    """Omega^k / k!."""
    if k < 1:
        raise StructureError(f"Wirtinger power needs k >= 1, got {k}")
    return wedge_all([omega] * k) / math.factorial(k)


def wirtinger_form(n: int, k: int) -> MultiForm:
    """The degree-2k Wirtinger calibration of C^n."""
    return wirtinger_power(build_unitary(n).form("Omega"), k)


def holomorphic_volume(n: int) -> MultiForm:
    """psi = (e^1 + i e^1') ^ ... ^ (e^n + i e^n')."""
    dim = 2 * n
    factors = [basis_one_form(dim, a) + 1j * basis_one_form(dim, n + a) for a in range(n)]
    return wedge_all(factors)


def hermitian_orientation(n: int) -> int:
    """Orientation of the frame order (1..n, 1'..n') in which Omega^n / n! is the volume form."""
    return (-1) ** (n * (n - 1) // 2)


def hermitian_metric(n: int) -> FrameMetric:
    return FrameMetric.identity(2 * n, hermitian_orientation(n))


def normalization_residual(psi: MultiForm, metric: Optional[FrameMetric] = None) -> float:
    """
    Residual of (-1)^{n(n-1)/2} (i/2)^n psi ^ conj(psi) = dvol.

    The default metric is the orthonormal one oriented by Omega^n / n!.

    Returns:
        Largest coefficient of the difference
    """
    n = psi.degree
    metric = metric or hermitian_metric(n)
    lhs = (-1) ** (n * (n - 1) // 2) * (0.5j) ** n * wedge(psi, psi.conj())
    return (lhs - volume_form(metric)).max_abs()


def normalization_factor(psi: MultiForm, metric: Optional[FrameMetric] = None) -> float:
    """The f with (-1)^{n(n-1)/2} (i/2)^n psi ^ conj(psi) = f^2 dvol."""
    n = psi.degree
    metric = metric or hermitian_metric(n)
    lhs = (-1) ** (n * (n - 1) // 2) * (0.5j) ** n * wedge(psi, psi.conj())
    ratio = lhs.coefficient(tuple(range(psi.dim))) / metric.volume_factor
    return math.sqrt(abs(ratio))


def phase_rotated(psi: MultiForm, theta: float) -> MultiForm:
    """Re(e^{i theta} psi)."""
    return (np.exp(1j * theta) * psi).real


def phase_partner(im_part: MultiForm, J: np.ndarray) -> MultiForm:
    """
    Real part of the (n,0)-form whose imaginary part is given.

    Uses Re psi = -Im psi(J., ., ...).
    """
    tensor = im_part.to_tensor()
    rotated = -np.moveaxis(np.tensordot(tensor, J, axes=([0], [0])), -1, 0)
    return MultiForm.from_tensor(rotated)


def asd_basis(indices: Sequence[int], dim: int = 7) -> List[MultiForm]:
    """
    Anti-self-dual two-forms on the oriented 4-frame (a, b, c, d), 0-based.

    Omega_1 = e^ab - e^cd, Omega_2 = e^ac + e^bd, Omega_3 = e^ad - e^bc.
    """
    a, b, c, d = indices
    pair = lambda i, j: MultiForm.basis(dim, (i, j))
    return [pair(a, b) - pair(c, d), pair(a, c) + pair(b, d), pair(a, d) - pair(b, c)]


def g2_form() -> MultiForm:
    return MultiForm.from_strings(7, G2_TERMS)


def g2_metric_from_form(psi: MultiForm) -> np.ndarray:
    """g_AB = (1/6) psi_ACD psi_B^CD in an orthonormal frame."""
    tensor = psi.to_tensor()
    return np.einsum('acd,bcd->ab', tensor, tensor) / 6.0


def spin7_form() -> MultiForm:
    return MultiForm.from_strings(8, SPIN7_TERMS)


def cayley_from_g2(psi: MultiForm, metric: Optional[FrameMetric] = None) -> MultiForm:
    """
    The four-form e^0 ^ psi + *psi on R x R^7, with e^0 placed first.

    For the canonical G2 form this reproduces the canonical Spin(7) form.
    """
    star = hodge_star(psi, metric or FrameMetric.identity(psi.dim))
    shift = np.vstack([np.zeros((1, psi.dim)), np.eye(psi.dim)])
    e0 = basis_one_form(psi.dim + 1, 0)
    return wedge(e0, psi.pullback(shift.T)) + star.pullback(shift.T)


def _tau_components() -> List[MultiForm]:
    left = [MultiForm.from_strings(8, {"12": 1, "34": -1}),
            MultiForm.from_strings(8, {"13": 1, "24": 1}),
            MultiForm.from_strings(8, {"14": 1, "23": -1})]
    right = [MultiForm.from_strings(8, {"56": 1, "78": -1}),
             MultiForm.from_strings(8, {"57": 1, "68": 1}),
             MultiForm.from_strings(8, {"58": 1, "67": -1})]
    first = [
        wedge(left[2], right[1]) - wedge(left[1], right[2]),
        wedge(left[0], right[2]) - wedge(left[2], right[0]),
        wedge(left[1], right[0]) - wedge(left[0], right[1]),
    ]
    return first + [MultiForm.from_strings(8, terms) for terms in TAU_TERMS]


def build_unitary(n: int) -> HolonomyStructure:
    """
    U(n) data: Omega = sum_a e^a ^ e^a' on frames ordered (1..n, 1'..n').

    Raises:
        StructureError: If n < 1
    """
    if n < 1:
        raise StructureError(f"Unitary structure needs n >= 1, got {n}")
    J = unitary_J(n)
    omega = kahler_form(J)
    return HolonomyStructure("U(n)", 2 * n, {"Omega": omega}, J=J, metric=hermitian_metric(n))


def build_special_unitary(n: int) -> HolonomyStructure:
    """
    SU(n) data: adds the (n,0)-form psi with its real and imaginary parts.

    Raises:
        StructureError: If n < 2 or the volume normalization fails
    """
    if n < 2:
        raise StructureError(f"Special unitary structure needs n >= 2, got {n}")
    base = build_unitary(n)
    psi = holomorphic_volume(n)
    residual = normalization_residual(psi, base.metric)
    if residual > IDENTITY_TOL:
        raise StructureError(f"psi fails the volume normalization (residual {residual:.3e})")
    forms = dict(base.forms)
    forms.update({"psi_n0": psi, "re_psi": psi.real, "im_psi": psi.imag})
    return HolonomyStructure("SU(n)", 2 * n, forms, J=base.J, metric=base.metric)


def build_g2() -> HolonomyStructure:
    """
    G2 data: psi, *psi, chi and the anti-self-dual basis on e^4..e^7.

    Raises:
        StructureError: If the metric identity or the chi transcription check fails
    """
    psi = g2_form()
    metric = FrameMetric.identity(7)
    star_psi = hodge_star(psi, metric)
    chi = VectorForm(tuple(MultiForm.from_strings(7, terms) for terms in CHI_TERMS))
    structure = HolonomyStructure("G2", 7, {
        "psi": psi,
        "star_psi": star_psi,
        "chi": chi,
        "asd_basis": tuple(asd_basis((3, 4, 5, 6))),
    })
    residuals = g2_identity_residuals(structure)
    failed = {k: v for k, v in residuals.items() if v > IDENTITY_TOL}
    if failed:
        raise StructureError(f"G2 identities failed: {failed}")
    return structure


def build_spin7() -> HolonomyStructure:
    """
    Spin(7) data: the self-dual Cayley form Phi and the R^7-valued form tau.

    Raises:
        StructureError: If Phi is not self-dual or tau does not vanish on the Cayley plane
    """
    phi = spin7_form()
    tau = VectorForm(tuple(_tau_components()))
    structure = HolonomyStructure("Spin7", 8, {"Phi": phi, "tau": tau})
    residuals = spin7_identity_residuals(structure)
    failed = {k: v for k, v in residuals.items() if v > IDENTITY_TOL}
    if failed:
        raise StructureError(f"Spin(7) identities failed: {failed}")
    return structure


def g2_identity_residuals(structure: HolonomyStructure) -> Dict[str, float]:
    """
    Residuals of the algebraic G2 identities.

    Returns:
        Mapping with keys metric, volume, chi_orthogonal, chi_contraction, chi_on_plane, asd
    """
    psi = structure.form("psi")
    star_psi = structure.form("star_psi")
    chi = structure.form("chi")
    metric = structure.metric
    dvol = volume_form(metric)
    chi_contraction = max(
        (chi.components[a] - interior(np.eye(7)[a], star_psi)).max_abs() for a in range(7)
    )
    chi_orthogonal = max(
        abs(sum(psi.coeffs.get(k, 0.0) * v for k, v in comp.coeffs.items())) for comp in chi.components
    )
    asd = structure.forms.get("asd_basis", ())
    asd_residual = max(
        (hodge_star(restrict(form, (3, 4, 5, 6)), FrameMetric.identity(4)) + restrict(form, (3, 4, 5, 6))).max_abs()
        for form in asd
    ) if asd else 0.0
    return {
        "metric": float(np.abs(g2_metric_from_form(psi) - metric.g).max()),
        "volume": (wedge(psi, star_psi) - 7 * dvol).max_abs(),
        "chi_contraction": chi_contraction,
        "chi_orthogonal": chi_orthogonal,
        "chi_on_plane": chi.restrict((0, 1, 2)).max_abs(),
        "asd": asd_residual,
    }


def spin7_identity_residuals(structure: HolonomyStructure) -> Dict[str, float]:
    """Residuals of self-duality, Phi ^ Phi = 14 dvol and tau on the Cayley plane."""
    phi = structure.form("Phi")
    tau = structure.form("tau")
    metric = structure.metric
    return {
        "self_dual": (hodge_star(phi, metric) - phi).max_abs(),
        "square": (wedge(phi, phi) - 14 * volume_form(metric)).max_abs(),
        "tau_on_plane": tau.restrict((0, 1, 2, 3)).max_abs(),
        "plane_value": abs(phi.evaluate(*np.eye(8)[:4]) - 1.0),
    }


def unitary_identity_residuals(structure: HolonomyStructure) -> Dict[str, float]:
    """Residuals of J^2 = -1, J-invariance of g, and (for SU(n)) the plane values of psi."""
    J = structure.J
    g = structure.metric.g
    residuals = {
        "J_squared": float(np.abs(J @ J + np.eye(structure.dim)).max()),
        "J_orthogonal": float(np.abs(J.T @ g @ J - g).max()),
        "wirtinger_volume": (structure.phi(structure.complex_dim) - volume_form(structure.metric)).max_abs(),
    }
    if "psi_n0" in structure.forms:
        n = structure.complex_dim
        plane = np.eye(structure.dim)[:n]
        residuals["re_psi_plane"] = abs(structure.form("re_psi").evaluate(*plane) - 1.0)
        residuals["im_psi_plane"] = abs(structure.form("im_psi").evaluate(*plane))
        residuals["normalization"] = normalization_residual(structure.form("psi_n0"), structure.metric)
    return residuals
