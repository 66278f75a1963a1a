"""Linear deformation systems of calibrated submanifolds in invariant coframes."""

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from rich.console import Console
from scipy.linalg import svd

from .canonical_structures import asd_basis, build_spin7, cayley_from_g2
from .coframe_calculus import (
    CoframeAlgebra,
    CoframeError,
    FrameConnection,
    codifferential,
    d_invariant,
    flat_left_connection,
    nearly_kahler_check,
    right_invariant_field,
)
from .exterior_core import (
    FormError,
    FrameMetric,
    MultiForm,
    VectorForm,
    basis_one_form,
    hodge_star,
    interior,
    lie_derivative_parallel,
    restrict,
)
from .presets import PresetBinding, preset
from .utils import format_matrix, index_label

console = Console()

CRITERION_TOL = 1e-12
ROUNDOFF_FLOOR = 1e-13
KINDS = ("sas", "nk-sas", "associative", "coassociative", "cayley")

Family = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


class DeformationError(Exception):
    """Embedding failing its calibration criterion or a system with unmet preconditions."""
    pass


@dataclass(frozen=True, eq=False)
class CalibratedEmbedding:
    """
    A sub-frame of an invariant coframe satisfying a calibration criterion.

    Attributes:
        name: Label for reports
        kind: One of KINDS
        ambient: The coframe
        tangent: Tangent frame indices (order = orientation)
        normal: The complementary indices
        forms: Calibration forms of the ambient structure
        J: Almost complex structure (hermitian kinds)
        connection: Declared connection preserving the forms
        criterion: Residual of each criterion restriction
    """

    name: str
    kind: str
    ambient: CoframeAlgebra
    tangent: Tuple[int, ...]
    normal: Tuple[int, ...]
    forms: Dict[str, object]
    J: Optional[np.ndarray]
    connection: FrameConnection
    criterion: Dict[str, float] = field(default_factory=dict)

    @property
    def connection_tilde(self) -> FrameConnection:
        """The companion connection with torsion -T."""
        return self.connection.companion()

    def form(self, name: str):
        if name not in self.forms:
            raise DeformationError(f"Embedding '{self.name}' has no form '{name}'")
        return self.forms[name]

    @classmethod
    def build(
        cls,
        kind: str,
        ambient: CoframeAlgebra,
        tangent: Sequence[int],
        forms: Dict[str, object],
        connection: Optional[FrameConnection] = None,
        J: Optional[np.ndarray] = None,
        name: str = "",
        tol: float = CRITERION_TOL,
    ) -> "CalibratedEmbedding":
        """
        Check the calibration criterion of the given kind and build the embedding.

        Raises:
            DeformationError: On an unknown kind, missing forms or a failed criterion
        """
        if kind not in KINDS:
            raise DeformationError(f"Unknown calibration kind '{kind}'. Known kinds: {', '.join(KINDS)}")
        tangent = tuple(int(i) for i in tangent)
        normal = tuple(i for i in range(ambient.dim) if i not in tangent)
        try:
            criterion = _criterion(kind, forms, tangent)
        except KeyError as e:
            raise DeformationError(f"A {kind} embedding needs the form {e}")
        failed = {k: v for k, v in criterion.items() if v > tol}
        if failed:
            raise DeformationError(f"Calibration criterion of kind {kind} fails on {index_label(tangent)}: {failed}")
        if kind in ("sas", "nk-sas") and J is None:
            raise DeformationError("Hermitian calibrations need J")
        return cls(
            name=name or f"{kind}:{index_label(tangent)}",
            kind=kind,
            ambient=ambient,
            tangent=tangent,
            normal=normal,
            forms=dict(forms),
            J=None if J is None else np.asarray(J, dtype=float),
            connection=connection or flat_left_connection(ambient),
            criterion=criterion,
        )


def _restricted_size(form, tangent) -> float:
    if isinstance(form, VectorForm):
        return form.restrict(tangent).max_abs()
    return restrict(form, tangent).max_abs()


def _criterion(kind: str, forms: Dict[str, object], tangent: Tuple[int, ...]) -> Dict[str, float]:
    if kind in ("sas", "nk-sas"):
        return {"Omega": _restricted_size(forms["Omega"], tangent),
                "im_psi": _restricted_size(forms["im_psi"], tangent)}
    if kind == "associative":
        return {"chi": _restricted_size(forms["chi"], tangent)}
    if kind == "coassociative":
        return {"psi": _restricted_size(forms["psi"], tangent)}
    return {"tau": _restricted_size(forms["tau"], tangent)}


def embedding(preset_name: str, kind: str) -> CalibratedEmbedding:
    """
    The declared calibrated sub-frame of a registry preset.

    "nk-sas" uses the preset's "sas" sub-frame.

    Raises:
        DeformationError: If the preset is parametric, declares no such sub-frame or fails the criterion
    """
    try:
        binding = preset(preset_name)
    except CoframeError as e:
        raise DeformationError(str(e))
    if not isinstance(binding, PresetBinding):
        raise DeformationError(f"Preset '{preset_name}' has no coframe")
    key = "sas" if kind == "nk-sas" else kind
    try:
        tangent = binding.submanifold(key)
    except CoframeError as e:
        raise DeformationError(str(e))
    return CalibratedEmbedding.build(
        kind, binding.cf, tangent, binding.forms, binding.declared_connection(), binding.J,
        name=f"{preset_name}:{kind}",
    )


def circle_product_embedding(associative: CalibratedEmbedding) -> CalibratedEmbedding:
    """
    S^1 x X inside S^1 x N with the Cayley form e^0 ^ psi + *psi.

    Raises:
        DeformationError: If the input is not associative
    """
    if associative.kind != "associative":
        raise DeformationError("The circle product needs an associative embedding")
    base = associative.ambient
    if base.is_quotient:
        raise DeformationError("The circle product is formed for group coframes only")
    circle = CoframeAlgebra(np.zeros((1, 1, 1)), labels=("t",))
    cf = circle.product(base)
    psi = associative.form("psi")
    forms = {"Phi": cayley_from_g2(psi, base.metric), "tau": build_spin7().form("tau")}
    tangent = (0,) + tuple(i + 1 for i in associative.tangent)
    return CalibratedEmbedding.build("cayley", cf, tangent, forms, flat_left_connection(cf),
                                     name=f"S1x{associative.name}")


@dataclass(frozen=True, eq=False)
class DeformationSystem:
    """Linear constraints on invariant deformation fields; columns are the unknowns."""

    kind: str
    matrix: np.ndarray
    row_labels: Tuple[str, ...]
    column_labels: Tuple[str, ...]
    encoding: str = ""
    details: Dict[str, float] = field(default_factory=dict)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape


@dataclass
class KernelReport:
    """Kernel dimension of a system with its spectral evidence."""

    dimension: int
    inconclusive: bool
    singular_values: np.ndarray
    gap: float

    def as_dict(self) -> Dict:
        return {'dimension': self.dimension, 'inconclusive': self.inconclusive, 'gap': self.gap}


# system templates, linear in W[a, b] = (tilde-nabla_{e_{X_a}} V)^{N_b}

def _gradient_blocks(emb: CalibratedEmbedding, connection: Optional[FrameConnection] = None) -> List[np.ndarray]:
    """For each normal unit field e_{N_j}, the tangent-by-normal block of its tilde-gradient."""
    tilde = (connection or emb.connection).companion().omega
    X, N = list(emb.tangent), list(emb.normal)
    return [tilde[np.ix_(N, X, [j])][:, :, 0].T for j in N]


def _sas_trace_rows(emb: CalibratedEmbedding, W: np.ndarray) -> np.ndarray:
    Om = np.real(emb.form("Omega").to_tensor())
    X, N = emb.tangent, emb.normal
    rows = []
    for a, b in itertools.combinations(range(len(X)), 2):
        rows.append(sum(W[a, p] * Om[N[p], X[b]] - W[b, p] * Om[N[p], X[a]] for p in range(len(N))))
    rows.append(sum(W[a, p] * emb.J[X[a], N[p]] for a in range(len(X)) for p in range(len(N))))
    return np.array(rows)


def _associative_rows(emb: CalibratedEmbedding, W: np.ndarray) -> np.ndarray:
    psi = np.real(emb.form("psi").to_tensor())
    X, N = emb.tangent, emb.normal
    blocks = [psi[np.ix_([i], N, N)][0] for i in X]
    return sum(blocks[i] @ W[i] for i in range(len(X)))


def _coassociative_rows(emb: CalibratedEmbedding, W: np.ndarray) -> np.ndarray:
    psi = np.real(emb.form("psi").to_tensor())
    X, N = emb.tangent, emb.normal
    k = len(X)
    terms = []
    for i in range(len(N)):
        Om = psi[np.ix_([N[i]], X, X)][0]
        for a, b, c in itertools.product(range(k), repeat=3):
            if Om[a, b] and W[c, i]:
                terms.append(((a, b, c), Om[a, b] * W[c, i]))
    return np.real(MultiForm.build(k, 3, terms).coefficient_vector())


def _cayley_operators() -> List[np.ndarray]:
    return [np.eye(4)] + [np.real(f.to_tensor()) for f in asd_basis((0, 1, 2, 3), dim=4)]


def _cayley_rows(emb: CalibratedEmbedding, W: np.ndarray) -> np.ndarray:
    t = _cayley_operators()
    return sum(t[a] @ W[a] for a in range(4))


_TEMPLATES = {
    "sas": _sas_trace_rows,
    "associative": _associative_rows,
    "coassociative": _coassociative_rows,
    "cayley": _cayley_rows,
}


def _assemble(emb: CalibratedEmbedding, template, encoding: str, row_labels: Sequence[str]) -> DeformationSystem:
    columns = [template(emb, W) for W in _gradient_blocks(emb)]
    matrix = np.column_stack(columns) if columns else np.zeros((len(row_labels), 0))
    return DeformationSystem(
        kind=emb.kind,
        matrix=matrix,
        row_labels=tuple(row_labels),
        column_labels=tuple(f"V{i + 1}" for i in emb.normal),
        encoding=encoding,
    )


def _require(emb: CalibratedEmbedding, *kinds: str):
    if emb.kind not in kinds:
        raise DeformationError(f"Expected a {' or '.join(kinds)} embedding, got {emb.kind}")


def _pair_labels(prefix: str, indices: Sequence[int], degree: int) -> List[str]:
    return [f"{prefix}{index_label(indices[p] for p in key)}"
            for key in itertools.combinations(range(len(indices)), degree)]


def sas_system(emb: CalibratedEmbedding, encoding: str = "lie") -> DeformationSystem:
    """
    Constant normal fields V with L_V Omega|_X = 0 and L_V Im psi|_X = 0.

    The "lie" encoding differentiates both forms through the tilde connection; the
    "trace" encoding assembles the two-form and trace constraints directly.

    Raises:
        DeformationError: If emb is not SAS or the encoding is unknown
    """
    _require(emb, "sas")
    if encoding == "trace":
        labels = _pair_labels("Omega:", emb.tangent, 2) + ["trace"]
        return _assemble(emb, _sas_trace_rows, "trace", labels)
    if encoding != "lie":
        raise DeformationError(f"Unknown SAS encoding '{encoding}'")

    tilde = emb.connection_tilde
    omega, im_psi = emb.form("Omega"), emb.form("im_psi")
    frame = np.eye(emb.ambient.dim)
    columns = []
    for j in emb.normal:
        pieces = [restrict(lie_derivative_parallel(frame[j], chi, tilde), emb.tangent).coefficient_vector()
                  for chi in (omega, im_psi)]
        columns.append(np.real(np.concatenate(pieces)))
    k = len(emb.tangent)
    labels = _pair_labels("L_V Omega:", emb.tangent, 2) + _pair_labels("L_V Im psi:", emb.tangent, k)
    return DeformationSystem("sas", np.column_stack(columns), tuple(labels),
                             tuple(f"V{j + 1}" for j in emb.normal), "lie")


def _tangent_subalgebra(emb: CalibratedEmbedding) -> CoframeAlgebra:
    try:
        return emb.ambient.subalgebra(emb.tangent)
    except CoframeError as e:
        raise DeformationError(f"The tangent frame must close under the bracket: {e}")


def sas_hatted_system(emb: CalibratedEmbedding) -> DeformationSystem:
    """
    The first-order system D_1 U = dU - U_a (T^a + hat T^a), D_0 U = delta U + U^a (t_a + hat t_a)
    for left-invariant one-forms U on a tangent subalgebra.

    With hat T^a = e^b ^ e^c Omega_{bb'} T^{b'}_{ca'} Omega^{a'a}, t_a = T^b_{ba} and
    hat t_a = J^{a'}_a T^{b'}_{a'b} J^b_{b'}. Reported alongside the primary SAS system.

    Raises:
        DeformationError: If emb is not SAS or the tangent frame is not a subalgebra
    """
    _require(emb, "sas")
    sub = _tangent_subalgebra(emb)
    T = emb.connection.torsion_tensor
    Om = np.real(emb.form("Omega").to_tensor())
    J = emb.J
    X, N = list(emb.tangent), list(emb.normal)
    k = len(X)
    columns = []
    for pos, a in enumerate(X):
        U = basis_one_form(k, pos)
        first = d_invariant(U, sub)
        torsion_terms = []
        hat = np.einsum("pu,uqv,v->pq", Om[np.ix_(X, N)], T[np.ix_(N, X, N)], Om[np.ix_(N, [a])][:, 0])
        for b, c in itertools.combinations(range(k), 2):
            torsion_terms.append(((b, c), T[a, X[b], X[c]] + hat[b, c] - hat[c, b]))
        first = first - MultiForm.build(k, 2, torsion_terms)
        t_a = sum(T[b, b, a] for b in X)
        hat_t = np.einsum("u,wub,bw->", J[:, a], T[:, :, X], J[np.ix_(X, range(emb.ambient.dim))])
        zeroth = codifferential(U, sub).coefficient(()) + t_a + hat_t
        columns.append(np.real(np.concatenate([first.coefficient_vector(), [zeroth]])))
    labels = _pair_labels("D1:", emb.tangent, 2) + ["D0"]
    return DeformationSystem("sas", np.column_stack(columns), tuple(labels),
                             tuple(f"U{a + 1}" for a in X), "hatted")


def associative_system(emb: CalibratedEmbedding, connection: Optional[FrameConnection] = None) -> DeformationSystem:
    """
    Invariant sections of sum_{i,b} (Omega_i)_{ab} tilde-nabla_i V^b = 0, the twisted Dirac operator.

    Raises:
        DeformationError: If emb is not associative
    """
    _require(emb, "associative")
    columns = [_associative_rows(emb, W) for W in _gradient_blocks(emb, connection)]
    return DeformationSystem("associative", np.column_stack(columns),
                             tuple(f"row{a + 1}" for a in emb.normal),
                             tuple(f"V{j + 1}" for j in emb.normal), "dirac")


def coassociative_system(emb: CalibratedEmbedding, encoding: str = "vector") -> DeformationSystem:
    """
    Invariant normal fields of a coassociative sub-frame.

    "vector": (Omega_i)_{ab} tilde-nabla_c V^i e^{abc} = 0. "form": the two-form
    alpha_V = i_V psi|_X with d alpha_V + (i_V d psi)|_X = 0; the largest
    self-dual part of any alpha_V is recorded under details["asd_residual"].

    Raises:
        DeformationError: If emb is not coassociative or the encoding is unknown
    """
    _require(emb, "coassociative")
    labels = _pair_labels("", emb.tangent, 3)
    if encoding == "vector":
        return _assemble(emb, _coassociative_rows, "vector", labels)
    if encoding != "form":
        raise DeformationError(f"Unknown coassociative encoding '{encoding}'")

    psi = emb.form("psi")
    d_psi = d_invariant(psi, emb.ambient)
    frame = np.eye(emb.ambient.dim)
    metric = FrameMetric.identity(len(emb.tangent))
    columns, asd = [], 0.0
    for j in emb.normal:
        alpha = interior(frame[j], psi)
        restricted = restrict(alpha, emb.tangent)
        asd = max(asd, (hodge_star(restricted, metric) + restricted).max_abs())
        row = restrict(d_invariant(alpha, emb.ambient) + interior(frame[j], d_psi), emb.tangent)
        columns.append(np.real(row.coefficient_vector()))
    return DeformationSystem("coassociative", np.column_stack(columns), tuple(labels),
                             tuple(f"V{j + 1}" for j in emb.normal), "form", {"asd_residual": asd})


def cayley_system(emb: CalibratedEmbedding) -> DeformationSystem:
    """
    Invariant sections of sum_{a,j} t^a_{ij} tilde-nabla_a V^j = 0 with t = (Id, Omega_1, Omega_2, Omega_3).

    Raises:
        DeformationError: If emb is not Cayley
    """
    _require(emb, "cayley")
    return _assemble(emb, _cayley_rows, "quaternionic", [f"row{i + 1}" for i in emb.normal])


def nk_sas_system(emb: CalibratedEmbedding, orientation: int = 1, tol: float = 1e-10) -> DeformationSystem:
    """
    Invariant one-forms U on X with dU = -(i_{JU} dOmega)|_X and delta U = 0.

    orientation = -1 uses -J, the opposite convention for Omega(X, Y) = g(JX, Y).

    Raises:
        DeformationError: If the ambient structure is not nearly Kähler or X is not a subalgebra
    """
    _require(emb, "nk-sas", "sas")
    if orientation not in (1, -1):
        raise DeformationError("orientation must be +1 or -1")
    report = nearly_kahler_check(emb.ambient, emb.J, tol)
    if not report.is_nk:
        raise DeformationError(f"Ambient structure is not nearly Kähler: {report.residuals}")
    sub = _tangent_subalgebra(emb)
    d_omega = d_invariant(emb.form("Omega"), emb.ambient)
    J = orientation * emb.J
    k = len(emb.tangent)
    columns = []
    for pos, a in enumerate(emb.tangent):
        ambient_U = basis_one_form(emb.ambient.dim, a)
        first = restrict(d_invariant(ambient_U, emb.ambient) + interior(J[:, a], d_omega), emb.tangent)
        zeroth = codifferential(basis_one_form(k, pos), sub).coefficient(())
        columns.append(np.real(np.concatenate([first.coefficient_vector(), [zeroth]])))
    labels = _pair_labels("dU:", emb.tangent, 2) + ["delta U"]
    return DeformationSystem("nk-sas", np.column_stack(columns), tuple(labels),
                             tuple(f"U{a + 1}" for a in emb.tangent), "orientation" + ("+" if orientation > 0 else "-"))


def kernel_dim(system: DeformationSystem, tol: float = 1e-8, gap_factor: float = 100.0) -> KernelReport:
    """
    Kernel dimension by singular values below tol * sigma_max.

    Values under ROUNDOFF_FLOOR count as zero whatever the scale, so a system
    whose entries are all rounding noise has a full kernel.

    The smallest retained singular value must exceed the largest discarded one by
    gap_factor; otherwise the report is flagged inconclusive.
    """
    matrix = np.atleast_2d(system.matrix)
    m, n = matrix.shape
    if n == 0:
        return KernelReport(0, False, np.zeros(0), float('inf'))
    if m == 0 or not np.any(matrix):
        return KernelReport(n, False, np.zeros(min(m, n)), float('inf'))
    s = svd(matrix, compute_uv=False)
    cut = max(tol * float(s[0]), ROUNDOFF_FLOOR)
    rank = int(np.sum(s > cut))
    kept = s[:rank]
    dropped = s[rank:]
    if rank == 0 or dropped.size == 0 or dropped[0] == 0:
        gap = float('inf')
    else:
        gap = float(kept[-1] / dropped[0])
    inconclusive = gap < gap_factor
    if inconclusive:
        console.print(f"[yellow]Warning: no spectral gap in {system.kind} system (ratio {gap:.3g})")
    return KernelReport(n - rank, inconclusive, s, gap)


# candidate verification

def right_invariant_family(cf: CoframeAlgebra, generator: Sequence[float]) -> Family:
    return lambda Y: right_invariant_field(cf, generator, Y)


def constant_family(vector: Sequence[float]) -> Family:
    vector = np.asarray(vector, dtype=float)
    return lambda Y: (vector, np.zeros((vector.size, vector.size)))


def candidate_family(binding: PresetBinding, name: str) -> Family:
    """
    Raises:
        DeformationError: If the preset declares no such candidate
    """
    if name not in binding.candidates:
        available = ', '.join(sorted(binding.candidates)) or 'none'
        raise DeformationError(f"Preset '{binding.name}' has no candidate '{name}'. Available: {available}")
    mode, generator = binding.candidates[name]
    if mode == "right":
        return right_invariant_family(binding.cf, generator)
    return constant_family(generator)


def submanifold_points(emb: CalibratedEmbedding, count: int, rng: np.random.Generator,
                       scale: float = 1.0) -> List[np.ndarray]:
    """Random exponential coordinates Y supported on the tangent frame."""
    points = []
    for _ in range(count):
        Y = np.zeros(emb.ambient.dim)
        Y[list(emb.tangent)] = rng.normal(scale=scale, size=len(emb.tangent))
        points.append(Y)
    return points


def _calibration_forms(emb: CalibratedEmbedding) -> List[MultiForm]:
    if emb.kind in ("sas", "nk-sas"):
        return [emb.form("Omega"), emb.form("im_psi")]
    if emb.kind == "associative":
        return list(emb.form("chi").components)
    if emb.kind == "coassociative":
        return [emb.form("psi")]
    return list(emb.form("tau").components)


NORMAL_TOL = 1e-10


@dataclass
class CandidateReport:
    """
    Pointwise evidence for one deformation field along the submanifold.

    Attributes:
        lie_residual: Worst |L_V chi|_X| over the sample points
        system_residual: Worst residual of the linear system applied to the normal part
            of V, or None when the kind has no pointwise template
        normal_size: Largest norm of the normal part of V
        normal_samples: Normal parts of V, one row per sample point
    """

    lie_residual: float
    system_residual: Optional[float]
    normal_size: float
    normal_samples: np.ndarray

    @property
    def residual(self) -> float:
        return max(self.lie_residual, self.system_residual or 0.0)

    def is_trivial(self, tol: float = NORMAL_TOL) -> bool:
        """True if V is tangent to X at every sample point, so it only reparametrizes X."""
        return self.normal_size <= tol


def _normal_gradient(emb: CalibratedEmbedding, blocks: List[np.ndarray], coeffs: np.ndarray,
                     dV: np.ndarray) -> np.ndarray:
    """W[a, p] = (tilde-nabla_{e_{X_a}} V_perp)^{N_p} for the normal part V_perp of V."""
    X, N = list(emb.tangent), list(emb.normal)
    W = dV[np.ix_(X, N)].astype(float)
    for j, block in zip(N, blocks):
        W = W + coeffs[j] * block
    return W


def verify_candidate(emb: CalibratedEmbedding, family: Family, points: Sequence[Sequence[float]],
                     tol: float = 1e-12) -> CandidateReport:
    """
    Check a deformation field V at sample points q = exp(Y) of the submanifold.

    Two residuals are recorded: L_V chi|_X over the forms whose restriction defines
    the calibration kind, and the linear system of the kind applied to the
    tilde-gradient of the normal part of V. The normal part itself is kept so that
    fields tangent to X can be told apart from genuine deformations.

    Raises:
        DeformationError: If a point leaves the submanifold
    """
    tilde = emb.connection_tilde
    forms = _calibration_forms(emb)
    normal = list(emb.normal)
    template = _TEMPLATES.get(emb.kind)
    blocks = _gradient_blocks(emb) if template is not None else []
    lie, system, samples = 0.0, 0.0, []
    for Y in points:
        Y = np.asarray(Y, dtype=float)
        if normal and np.abs(Y[normal]).max() > tol:
            raise DeformationError("Sample point does not lie on the embedded submanifold")
        coeffs, dV = family(Y)
        coeffs, dV = np.asarray(coeffs, dtype=float), np.asarray(dV, dtype=float)
        for chi in forms:
            lie = max(lie, restrict(lie_derivative_parallel(coeffs, chi, tilde, dV), emb.tangent).max_abs())
        if template is not None:
            rows = template(emb, _normal_gradient(emb, blocks, coeffs, dV))
            system = max(system, float(np.abs(rows).max()) if np.size(rows) else 0.0)
        samples.append(coeffs[normal])
    samples = np.array(samples).reshape(len(samples), len(normal))
    size = float(np.linalg.norm(samples, axis=1).max()) if samples.size else 0.0
    return CandidateReport(lie, system if template is not None else None, size, samples)


def candidate_rank(reports: Sequence[CandidateReport], tol: float = 1e-8) -> int:
    """
    Number of linearly independent normal fields among candidates checked on the same points.

    Raises:
        DeformationError: If the reports were sampled on different point sets
    """
    if not reports:
        return 0
    shapes = {r.normal_samples.shape for r in reports}
    if len(shapes) > 1:
        raise DeformationError(f"Candidates were checked on different point sets: {sorted(shapes)}")
    matrix = np.stack([r.normal_samples.ravel() for r in reports])
    if matrix.size == 0:
        return 0
    s = svd(matrix, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


# principal symbols

_MODEL = {
    "sas": ("flat_c3", "sas"),
    "associative": ("flat_r7", "associative"),
    "coassociative": ("flat_r7", "coassociative"),
    "cayley": ("flat_r8", "cayley"),
}


@dataclass
class EllipticityReport:
    """Injectivity of a principal symbol over sampled covectors."""

    kind: str
    elliptic: bool
    samples: int
    min_ratio: float

    def as_dict(self) -> Dict:
        return {'kind': self.kind, 'elliptic': self.elliptic, 'samples': self.samples, 'min_ratio': self.min_ratio}


def symbol_matrix(kind: str, xi: Sequence[float]) -> np.ndarray:
    """
    Principal symbol of a system kind at the covector xi (tilde-nabla_a replaced by xi_a).

    Raises:
        DeformationError: On an unknown kind or xi of the wrong length
    """
    if kind not in _MODEL:
        raise DeformationError(f"No symbol for kind '{kind}'. Known kinds: {', '.join(_MODEL)}")
    emb = embedding(*_MODEL[kind])
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (len(emb.tangent),):
        raise DeformationError(f"Covector must have {len(emb.tangent)} components")
    template = _TEMPLATES[kind]
    columns = [template(emb, np.outer(xi, np.eye(len(emb.normal))[j])) for j in range(len(emb.normal))]
    return np.column_stack(columns)


def symbol_ellipticity(kind: str, covectors: np.ndarray, tol: float = 1e-10) -> EllipticityReport:
    """
    True iff the symbol is injective at every sampled covector.

    Raises:
        DeformationError: If a sampled covector vanishes
    """
    covectors = np.atleast_2d(np.asarray(covectors, dtype=float))
    min_ratio = float('inf')
    for xi in covectors:
        length = np.linalg.norm(xi)
        if length == 0:
            raise DeformationError("Principal symbols are tested at non-zero covectors only")
        s = svd(symbol_matrix(kind, xi), compute_uv=False)
        min_ratio = min(min_ratio, float(s[-1] / length))
    return EllipticityReport(kind, min_ratio > tol, len(covectors), min_ratio)


# nearly parallel and nearly Kähler extras

def dirac_operator(emb: CalibratedEmbedding, connection: Optional[FrameConnection] = None) -> np.ndarray:
    """The invariant-sector operator D[a, c] = sum (Omega_i)_{ab} tilde-omega^b_{ic} on the normal frame."""
    return associative_system(emb, connection).matrix


def dirac_spectrum(emb: CalibratedEmbedding, connection: Optional[FrameConnection] = None) -> np.ndarray:
    """Eigenvalues of the invariant-sector Dirac operator, sorted."""
    values = np.linalg.eigvals(dirac_operator(emb, connection))
    return np.sort_complex(values)


@dataclass
class FrameIdentityReport:
    """Which orientation of J satisfies de^j|_X = -(i_{J e_j} dOmega)|_X, delta e^j = 0."""

    orientation: int
    residuals: Dict[int, float]
    coclosed: float

    def as_dict(self) -> Dict:
        return {'orientation': self.orientation, 'residual_plus': self.residuals[1],
                'residual_minus': self.residuals[-1], 'coclosed': self.coclosed}


def frame_identity_check(cf: CoframeAlgebra, omega: MultiForm, J: np.ndarray, tangent: Sequence[int],
                         tol: float = 1e-10) -> FrameIdentityReport:
    """
    Compare de^j|_X with -(i_{sJ e_j} dOmega)|_X for s = +1 and s = -1.

    orientation is the sign that holds (+1 preferred), 0 when neither does.
    """
    J = np.asarray(J, dtype=float)
    d_omega = d_invariant(omega, cf)
    residuals = {}
    for s in (1, -1):
        residuals[s] = max(
            restrict(cf.d_basis(j) + interior(s * J[:, j], d_omega), tangent).max_abs() for j in tangent)
    try:
        sub = cf.subalgebra(tangent)
        coclosed = max(codifferential(basis_one_form(sub.dim, p), sub).max_abs() for p in range(sub.dim))
    except (CoframeError, FormError):
        coclosed = float('inf')
    orientation = next((s for s in (1, -1) if residuals[s] <= tol), 0)
    return FrameIdentityReport(orientation, residuals, coclosed)


def export_system(system: DeformationSystem) -> str:
    """The system matrix as whitespace-separated rows."""
    return format_matrix(system.matrix)
