"""
Named verification scenarios over the preset registry.

Each scenario draws from its own random stream, measures a list of
quantities against expected values and returns a ScenarioReport. Reports
serialize to one JSON line each; wall time stays out of the record so that
a rerun with the same seed is byte-identical.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from rich.console import Console
from rich.progress import Progress

from .canonical_structures import (
    StructureError,
    build_g2,
    build_spin7,
    build_special_unitary,
    build_unitary,
    g2_identity_residuals,
    spin7_identity_residuals,
    unitary_identity_residuals,
)
from .chart_hermitian import (
    ChartError,
    InvariantMetricProfile,
    bismut_flatten,
    calabi_like_profile,
    canonical_connection_factor,
    chern_flatten,
    chern_ricci,
    conformal_chart,
    conformal_lemma_check,
    convergence_ratio,
    flat_chart,
    iwasawa_chart,
    lee_form,
    polynomial_chart,
    random_kahler_chart,
    random_polynomial,
    ricci_relation_residual,
)
from .coframe_calculus import (
    CoframeError,
    d_invariant,
    g2_classify,
    hermitian_package,
    levi_civita,
    nearly_kahler_check,
    nearly_parallel_connection,
    parallel_residual,
)
from .config import Config
from .deformation_solver import (
    DeformationError,
    associative_system,
    candidate_family,
    candidate_rank,
    cayley_system,
    circle_product_embedding,
    coassociative_system,
    constant_family,
    dirac_operator,
    embedding,
    frame_identity_check,
    kernel_dim,
    nk_sas_system,
    right_invariant_family,
    sas_hatted_system,
    sas_system,
    submanifold_points,
    symbol_ellipticity,
    verify_candidate,
)
from .energy_variation import (
    EnergyError,
    energy,
    linear_normal_family,
    planar_patch,
    rotation_family,
    second_variation_check,
    translation_family,
)
from .exterior_core import FormError, MultiForm
from .grassmann_search import (
    PlaneError,
    comass,
    contact_dimension,
    contact_orbit_sample,
    evaluate,
    hermitian_contact_dimensions,
    is_contact,
    plane_from_indices,
    random_plane,
    sample_bound,
)
from .presets import coframe_preset_names, preset
from .utils import derive_rng, format_record

console = Console()

PROVENANCES = ("paper", "derived", "trivial")
EXACT_TOL = 1e-12
CANDIDATE_TOL = 1e-10
MIN_GAP = 100.0
CHART_SAMPLES = 20
CONVERGENCE_STEP = 1e-2
CONVERGENCE_WINDOW = (3.5, 4.5)
SECOND_VARIATION_TOL = 1e-4

# errors a scenario turns into a failed report instead of aborting the run
LIBRARY_ERRORS = (
    FormError, StructureError, PlaneError, CoframeError, ChartError, DeformationError, EnergyError,
    np.linalg.LinAlgError,
)


class ScenarioError(Exception):
    """Unknown scenario name."""
    pass


@dataclass
class Measurement:
    """One measured quantity with its expectation and where the expectation comes from."""

    name: str
    value: object
    expected: object
    tolerance: Optional[float]
    provenance: str
    passed: bool

    def as_dict(self) -> Dict:
        return {
            'name': self.name,
            'value': self.value,
            'expected': self.expected,
            'tolerance': self.tolerance,
            'provenance': self.provenance,
            'passed': self.passed,
        }


def close(name: str, value: float, expected: float, tol: float, provenance: str = "derived") -> Measurement:
    value = float(value)
    return Measurement(name, value, expected, tol, provenance, bool(abs(value - expected) <= tol))


def at_most(name: str, value: float, bound: float, provenance: str = "derived") -> Measurement:
    value = float(value)
    return Measurement(name, value, bound, None, provenance, bool(value <= bound))


def at_least(name: str, value: float, bound: float, provenance: str = "derived") -> Measurement:
    value = float(value)
    return Measurement(name, value, bound, None, provenance, bool(value >= bound))


def equal(name: str, value, expected, provenance: str = "derived") -> Measurement:
    return Measurement(name, value, expected, None, provenance, bool(value == expected))


def observed(name: str, value, provenance: str = "derived") -> Measurement:
    """Recorded without an expectation; never fails."""
    return Measurement(name, value, None, None, provenance, True)


@dataclass
class ScenarioReport:
    """Outcome of one scenario run."""

    scenario: str
    seed: int
    measurements: List[Measurement] = field(default_factory=list)
    error: Optional[str] = None
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return self.error is None and all(m.passed for m in self.measurements)

    @property
    def failures(self) -> List[Measurement]:
        return [m for m in self.measurements if not m.passed]

    def as_record(self) -> Dict:
        """The JSON record; wall time excluded."""
        return {
            'scenario': self.scenario,
            'seed': self.seed,
            'passed': self.passed,
            'error': self.error,
            'measurements': [m.as_dict() for m in self.measurements],
        }

    def to_line(self) -> str:
        return format_record(self.as_record())


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    run: Callable[[Config, np.random.Generator], List[Measurement]]


# comass and contact sets

def _calibration_forms() -> Dict[str, tuple]:
    su3 = build_special_unitary(3)
    g2 = build_g2()
    spin7 = build_spin7()
    return {
        "Omega (R^6)": (su3.form("Omega"), 2, "paper"),
        "Re psi (n=3)": (su3.form("re_psi"), 3, "paper"),
        "psi G2": (g2.form("psi"), 3, "paper"),
        "*psi G2": (g2.form("star_psi"), 4, "paper"),
        "Phi": (spin7.form("Phi"), 4, "paper"),
        "e12 + e34": (MultiForm.from_strings(4, {"12": 1, "34": 1}), 2, "derived"),
    }


def comass_suite(config: Config, rng: np.random.Generator) -> List[Measurement]:
    measurements = []
    for label, (form, k, provenance) in _calibration_forms().items():
        report = comass(form, k, restarts=config.restarts, tol=config.tol, rng=rng, seed=config.seed)
        measurements.append(close(f"comass {label}", report.max_value, 1.0, config.tol, provenance))
        bound = sample_bound(form, k, config.sample_planes, rng)
        measurements.append(at_most(f"sampled bound {label}", bound, 1.0 + 1e-8))
    return measurements


def comass_g2(config: Config, rng: np.random.Generator) -> List[Measurement]:
    g2 = build_g2()
    psi = g2.form("psi")
    report = comass(psi, 3, restarts=config.restarts, tol=config.tol, rng=rng, seed=config.seed)
    return [
        close("comass psi", report.max_value, 1.0, config.tol, "paper"),
        close("value at argmax", evaluate(psi, report.argmax_plane), report.max_value, 1e-9),
        observed("converged fraction", report.converged_fraction),
        equal("xi0 is contact", is_contact(psi, plane_from_indices(7, (0, 1, 2)), config.contact_tol), True, "paper"),
        equal("e4567 is contact for *psi",
              is_contact(g2.form("star_psi"), plane_from_indices(7, (3, 4, 5, 6)), config.contact_tol), True, "paper"),
        equal("random plane is contact", is_contact(psi, random_plane(7, 3, rng), config.contact_tol), False),
    ]


def contact_dimensions(config: Config, rng: np.random.Generator) -> List[Measurement]:
    su3 = build_special_unitary(3)
    psi = build_g2().form("psi")
    xi0 = plane_from_indices(7, (0, 1, 2))
    measurements = []
    for label, form, plane, expected in (
        ("psi G2 at xi0", psi, xi0, 8),
        ("Phi at e1234", build_spin7().form("Phi"), plane_from_indices(8, (0, 1, 2, 3)), 12),
        ("Re psi at the SLAG plane", su3.form("re_psi"), plane_from_indices(6, (0, 1, 2)), 5),
    ):
        result = contact_dimension(form, plane)
        measurements.append(equal(f"contact dimension {label}", result.dimension, expected))
        measurements.append(equal(f"contact gap {label}", result.inconclusive, False))

    u3 = build_unitary(3)
    for k in (1, 2):
        plane = plane_from_indices(6, tuple(x for a in range(k) for x in (a, 3 + a)))
        result = contact_dimension(u3.phi(k), plane)
        candidates = hermitian_contact_dimensions(3, k)
        measurements.append(observed(f"Omega^{k}/{k}! contact dimension", result.dimension))
        measurements.append(observed(f"Omega^{k}/{k}! printed count", candidates['printed'], "paper"))
        measurements.append(observed(f"Omega^{k}/{k}! Grassmannian count", candidates['grassmannian']))

    moved = contact_orbit_sample(psi, xi0, rng)
    measurements.append(close("stabilizer orbit stays contact", evaluate(psi, moved), 1.0, 1e-9))
    return measurements


# algebra and presets

def algebraic_identities(config: Config, rng: np.random.Generator) -> List[Measurement]:
    measurements = [at_most(f"G2 {key}", value, EXACT_TOL, "paper")
                    for key, value in g2_identity_residuals(build_g2()).items()]
    measurements += [at_most(f"Spin(7) {key}", value, EXACT_TOL, "paper")
                     for key, value in spin7_identity_residuals(build_spin7()).items()]
    for n in (2, 3, 4):
        measurements += [at_most(f"SU({n}) {key}", value, EXACT_TOL, "paper")
                         for key, value in unitary_identity_residuals(build_special_unitary(n)).items()]
    return measurements


def _dd_residual(form: MultiForm, cf) -> float:
    if form.degree + 2 > cf.dim:
        return 0.0
    return d_invariant(d_invariant(form, cf), cf).max_abs()


def preset_integrity(config: Config, rng: np.random.Generator) -> List[Measurement]:
    measurements = []
    for name in coframe_preset_names():
        binding = preset(name)
        cf = binding.cf
        group = binding.extended if cf.is_quotient else cf
        measurements.append(at_most(f"{name} Jacobi", group.jacobi_defect(), EXACT_TOL, "paper"))
        connection = binding.declared_connection()
        for form_name in binding.parallel_forms:
            form = binding.form(form_name)
            measurements.append(at_most(f"{name} d^2 {form_name}", _dd_residual(form, cf), EXACT_TOL, "paper"))
            measurements.append(
                at_most(f"{name} nabla {form_name}", parallel_residual(form, connection), EXACT_TOL, "paper"))

    s3 = preset("s3").cf
    sigma1 = MultiForm.basis(3, (0,))
    expected = -MultiForm.from_strings(3, {"23": 1})
    measurements.append(at_most("d sigma1 + sigma2 ^ sigma3", (d_invariant(sigma1, s3) - expected).max_abs(),
                                EXACT_TOL, "paper"))

    for name in ("s3xs3_hermitian", "iwasawa"):
        binding = preset(name)
        package = hermitian_package(binding.cf, binding.J)
        measurements.append(equal(f"{name} J integrable", package.integrable, True, "paper"))
        measurements.append(at_most(f"{name} Chern (1,1)-torsion", package.chern_mixed_torsion(binding.J),
                                    EXACT_TOL, "paper"))
        if name == "iwasawa":
            chern = np.abs(package.chern.omega).max() if package.chern is not None else float('inf')
            measurements.append(at_most("iwasawa Chern coefficients", chern, EXACT_TOL, "paper"))
            measurements.append(at_most("iwasawa Lee form", np.abs(package.lee_form).max(), EXACT_TOL, "paper"))
    return measurements


def calibration_criteria(config: Config, rng: np.random.Generator) -> List[Measurement]:
    measurements = []
    for preset_name, kind in (("s3xs3_diagonal", "sas"), ("g2_group", "associative"),
                              ("g2_group", "coassociative"), ("cayley_group", "cayley"),
                              ("spin4_b13", "nk-sas"), ("flag_f12", "nk-sas")):
        emb = embedding(preset_name, kind)
        measurements += [at_most(f"{emb.name} {key}|X", value, EXACT_TOL, "paper")
                         for key, value in emb.criterion.items()]
    product = circle_product_embedding(embedding("g2_group", "associative"))
    measurements += [at_most(f"{product.name} {key}|X", value, EXACT_TOL, "paper")
                     for key, value in product.criterion.items()]
    return measurements


# moduli

def _kernel_measurements(label: str, system, expected: int, config: Config, provenance: str,
                         bound: bool = False) -> List[Measurement]:
    report = kernel_dim(system, config.kernel_tol)
    check = at_least if bound else equal
    return [
        check(f"{label} kernel", report.dimension, expected, provenance),
        at_least(f"{label} spectral gap", report.gap, MIN_GAP),
    ]


def moduli_g2_group(config: Config, rng: np.random.Generator) -> List[Measurement]:
    associative = embedding("g2_group", "associative")
    coassociative = embedding("g2_group", "coassociative")
    form_system = coassociative_system(coassociative, "form")
    measurements = _kernel_measurements("S^3 associative", associative_system(associative), 4, config, "paper")
    measurements += _kernel_measurements("S^1 x S^3 coassociative", coassociative_system(coassociative), 3,
                                         config, "paper")
    measurements += _kernel_measurements("S^1 x S^3 coassociative (form encoding)", form_system, 3, config, "paper")
    measurements.append(at_most("alpha_V anti-self-dual", form_system.details["asd_residual"], EXACT_TOL, "paper"))
    measurements += _kernel_measurements("flat R^7 associative", associative_system(embedding("flat_r7", "associative")),
                                         4, config, "trivial")
    measurements += _kernel_measurements("flat R^7 coassociative",
                                         coassociative_system(embedding("flat_r7", "coassociative")),
                                         3, config, "trivial")
    return measurements


def moduli_sas(config: Config, rng: np.random.Generator) -> List[Measurement]:
    measurements = []
    for preset_name, expected, provenance in (
        ("s3xs3_almost_hermitian", 3, "paper"),
        ("s3xs3_almost_hermitian_variant", 3, "paper"),
        ("gxg_su2", 3, "paper"),
        ("gxg_su2_swapped", 3, "paper"),
        ("gxg_su3", 8, "paper"),
        ("flat_c3", 3, "trivial"),
    ):
        emb = embedding(preset_name, "sas")
        measurements += _kernel_measurements(preset_name, sas_system(emb), expected, config, provenance)
        measurements += _kernel_measurements(f"{preset_name} (trace encoding)", sas_system(emb, "trace"),
                                             expected, config, provenance)

    diagonal = embedding("s3xs3_diagonal", "sas")
    measurements.append(equal("diagonal S^3 left-invariant kernel",
                              kernel_dim(sas_system(diagonal), config.kernel_tol).dimension, 0))
    hatted = kernel_dim(sas_hatted_system(embedding("s3xs3_almost_hermitian", "sas")), config.kernel_tol)
    measurements.append(observed("S^3 x {e} hatted system kernel", hatted.dimension))

    nk = embedding("spin4_b13", "nk-sas")
    measurements += _kernel_measurements("spin4_b13 nk-sas", nk_sas_system(nk, orientation=-1), 3, config,
                                         "paper", bound=True)
    return measurements


def moduli_cayley(config: Config, rng: np.random.Generator) -> List[Measurement]:
    measurements = _kernel_measurements("S^1 x S^3 Cayley", cayley_system(embedding("cayley_group", "cayley")),
                                        4, config, "paper")
    measurements += _kernel_measurements("flat R^8 Cayley", cayley_system(embedding("flat_r8", "cayley")),
                                         4, config, "trivial")
    product = circle_product_embedding(embedding("g2_group", "associative"))
    measurements.append(observed("S^1 x S^3 in S^1 x G2 group Cayley kernel",
                                 kernel_dim(cayley_system(product), config.kernel_tol).dimension))
    return measurements


def candidates(config: Config, rng: np.random.Generator) -> List[Measurement]:
    measurements = []
    for preset_name in ("s3xs3_diagonal", "iwasawa"):
        binding = preset(preset_name)
        emb = embedding(preset_name, "sas")
        points = submanifold_points(emb, config.samples, rng)
        reports = []
        for name in sorted(binding.candidates):
            report = verify_candidate(emb, candidate_family(binding, name), points)
            reports.append(report)
            measurements.append(at_most(f"{preset_name} {name}", report.residual, CANDIDATE_TOL, "paper"))
            measurements.append(equal(f"{preset_name} {name} has a normal part", not report.is_trivial(), True))
        measurements.append(at_least(f"{preset_name} independent candidate directions", candidate_rank(reports),
                                     len(binding.candidates), "paper"))
        zero = verify_candidate(emb, constant_family(np.zeros(emb.ambient.dim)), points)
        measurements.append(equal(f"{preset_name} zero field is trivial", zero.is_trivial(), True, "trivial"))

    emb = embedding("s3xs3_diagonal", "sas")
    generator = np.zeros(emb.ambient.dim)
    generator[emb.tangent[0]] = 1.0
    tangent = verify_candidate(emb, right_invariant_family(emb.ambient, generator),
                               submanifold_points(emb, config.samples, rng))
    measurements.append(equal("s3xs3_diagonal tangent generator is trivial", tangent.is_trivial(), True))
    return measurements


# special geometries

def nearly_parallel(config: Config, rng: np.random.Generator) -> List[Measurement]:
    squashed = preset("s7_squashed").solve(rng)
    aloff_wallach = preset("aw_nm").solve(rng)
    measurements = [
        at_most("squashed S^7 system", squashed['residual'], EXACT_TOL, "paper"),
        at_least("N(1,1) solutions found", len(aloff_wallach['solutions']), 1, "paper"),
        at_most("N(1,1) system", aloff_wallach['residual'], CANDIDATE_TOL, "paper"),
    ]

    binding = preset("so5_so3")
    lam = binding.params['lam']
    classification = g2_classify(binding.cf, binding.form("psi"))
    measurements.append(equal("SO(5)/SO(3) nearly parallel", classification.nearly_parallel, True, "paper"))
    measurements.append(close("SO(5)/SO(3) lambda", classification.lam, lam, CANDIDATE_TOL))

    emb = embedding("so5_so3", "associative")
    _, sign = nearly_parallel_connection(binding.cf, binding.form("psi"), lam)
    shift = dirac_operator(emb) - dirac_operator(emb, levi_civita(binding.cf))
    expected = -sign * lam / 4.0 * np.eye(shift.shape[0])
    measurements.append(at_most("Dirac shift -sign lam/4", np.abs(shift - expected).max(), CANDIDATE_TOL))
    return measurements


def nearly_kahler(config: Config, rng: np.random.Generator) -> List[Measurement]:
    measurements = []
    for name in ("spin4_b13", "flag_f12"):
        binding = preset(name)
        report = nearly_kahler_check(binding.cf, binding.J)
        measurements.append(equal(f"{name} nearly Kähler", report.is_nk, True, "paper"))
        measurements.append(equal(f"{name} Kähler", report.kahler, False, "paper"))
        measurements += [at_most(f"{name} {key}", value, CANDIDATE_TOL, "paper")
                         for key, value in report.residuals.items()]
        measurements.append(at_most(f"{name} Einstein", report.einstein_residual, CANDIDATE_TOL))

    flat = preset("flat_c3")
    report = nearly_kahler_check(flat.cf, flat.J)
    measurements.append(equal("flat C^3 nearly Kähler", report.is_nk, True, "trivial"))
    measurements.append(equal("flat C^3 Kähler", report.kahler, True, "trivial"))
    measurements.append(close("flat C^3 type constant", report.a, 0.0, EXACT_TOL, "trivial"))

    spin4 = preset("spin4_b13")
    identity = frame_identity_check(spin4.cf, spin4.form("Omega"), spin4.J, spin4.submanifold("sas"))
    measurements.append(equal("spin4_b13 frame identity orientation", identity.orientation, -1))
    measurements.append(at_most("spin4_b13 frame identity", min(identity.residuals.values()), CANDIDATE_TOL, "paper"))
    measurements.append(at_most("spin4_b13 frames coclosed", identity.coclosed, CANDIDATE_TOL, "paper"))

    s6 = preset("s6_pointwise").solve(rng)
    measurements.append(at_most("S^6 J^2 + 1", s6['j_squared'], EXACT_TOL, "paper"))
    measurements.append(at_most("S^6 Lagrangian 3-plane", s6['lagrangian'], EXACT_TOL, "paper"))
    return measurements


# charts

def _chart_point(n: int, rng: np.random.Generator, radius: float = 0.3) -> np.ndarray:
    return rng.uniform(-radius, radius, n) + 1j * rng.uniform(-radius, radius, n)


def _worst_ratio(ratios: Sequence[float]) -> float:
    return max(ratios, key=lambda r: abs(r - 4.0))


def hermitian_charts(config: Config, rng: np.random.Generator) -> List[Measurement]:
    lo, hi = CONVERGENCE_WINDOW
    centre, width = 0.5 * (lo + hi), 0.5 * (hi - lo)
    relation, lemma = [], []
    for _ in range(CHART_SAMPLES):
        chart = polynomial_chart(2, rng)
        z = _chart_point(2, rng)
        relation.append(convergence_ratio(lambda h: ricci_relation_residual(chart.with_step(h), z),
                                          CONVERGENCE_STEP))
        kahler = random_kahler_chart(3, rng)
        f = random_polynomial(3, rng)
        w = _chart_point(3, rng)
        lemma.append(convergence_ratio(lambda h: conformal_lemma_check(kahler.with_step(h), f, w)['rho_11'],
                                       CONVERGENCE_STEP))
    measurements = [
        close("Ricci relation convergence ratio (worst)", _worst_ratio(relation), centre, width, "paper"),
        close("conformal lemma convergence ratio (worst)", _worst_ratio(lemma), centre, width, "paper"),
    ]
    coarse = kahler.with_step(CONVERGENCE_STEP)
    plain = conformal_lemma_check(coarse, f, w)['rho_11']
    extrapolated = conformal_lemma_check(coarse, f, w, extrapolate=True)['rho_11']
    measurements.append(at_most("conformal lemma residual, extrapolated over plain",
                                extrapolated / plain if plain else 0.0, 0.1))

    iwasawa = iwasawa_chart(config.fd_step)
    z = _chart_point(3, rng)
    measurements.append(at_most("Iwasawa Chern Ricci", np.abs(chern_ricci(iwasawa, z)).max(), 1e-6, "paper"))
    measurements.append(at_most("Iwasawa Lee form", np.abs(lee_form(iwasawa, z)).max(), 1e-6, "paper"))
    kahler = random_kahler_chart(3, rng, fd_step=config.fd_step)
    measurements.append(at_most("Kähler chart Lee form", np.abs(lee_form(kahler, z)).max(), 1e-6))

    u = random_polynomial(3, rng, amplitude=0.2)
    base = conformal_chart(flat_chart(3, config.fd_step), u)
    flattened = chern_flatten(base, lambda w: -3.0 * u(w), [z])
    measurements.append(at_most("Chern-flattened Ricci", np.abs(chern_ricci(flattened, z)).max(), 1e-6))
    bismut = bismut_flatten(base, lambda w: -u(w), [z])
    measurements.append(close("Bismut flattening exponent", bismut.exponent, 1.0, EXACT_TOL))
    measurements.append(at_most("Bismut-flattened Ricci", min(bismut.residuals.values()), 1e-5))

    one = lambda t: 1.0
    zero = lambda t: 0.0
    kahler_profile = InvariantMetricProfile(one, zero, zero, zero)
    grid = np.linspace(0.5, 1.5, 11)
    measurements.append(at_most("profile f for A = 1, B = 0",
                                max(abs(canonical_connection_factor(kahler_profile, 2, t)) for t in grid),
                                EXACT_TOL, "paper"))
    solved = calabi_like_profile(kahler_profile, 2, grid, b_initial=0.1)
    measurements.append(at_most("integrated profile residual", solved.solved_residual, CANDIDATE_TOL))
    return measurements


# symbols and energy

SYMBOL_DIMENSIONS = {"sas": 3, "associative": 3, "coassociative": 4, "cayley": 4}


def ellipticity(config: Config, rng: np.random.Generator) -> List[Measurement]:
    measurements = []
    for kind, dim in SYMBOL_DIMENSIONS.items():
        report = symbol_ellipticity(kind, rng.normal(size=(config.covectors, dim)))
        measurements.append(equal(f"{kind} symbol injective", report.elliptic, True, "paper"))
        measurements.append(observed(f"{kind} smallest singular ratio", report.min_ratio))
    return measurements


def energy_suite(config: Config, rng: np.random.Generator) -> List[Measurement]:
    q = config.quadrature
    omega = build_unitary(2).form("Omega")
    eye4 = np.eye(4)
    line = planar_patch(eye4[:, [0, 2]], quadrature=q)
    lagrangian = planar_patch(eye4[:, [0, 1]], quadrature=q)
    scaled = planar_patch(2.0 * eye4[:, [0, 2]], box=[(0.0, 0.5), (0.0, 0.5)], quadrature=q)
    measurements = [
        close("complex line energy", energy(line, omega), 0.0, CANDIDATE_TOL, "paper"),
        close("Lagrangian square energy", energy(lagrangian, omega), 1.0, CANDIDATE_TOL),
        close("reparametrized square energy", energy(scaled, omega), energy(line, omega), CANDIDATE_TOL),
    ]

    rotation = np.zeros((4, 4))
    rotation[1, 2], rotation[2, 1] = 1.0, -1.0
    su3 = build_special_unitary(3)
    slag = planar_patch(np.eye(6)[:, :3], quadrature=q)
    field = np.zeros((6, 3))
    field[3:, :] = 0.5 * rng.normal(size=(3, 3))
    families = [
        ("rotated complex line", rotation_family(line, rotation), omega, 1.0),
        ("translated complex line", translation_family(line, [0.0, 0.3, 0.0, -0.2]), omega, 0.0),
        ("SLAG plane, linear normal field", linear_normal_family(slag, field), su3.form("re_psi"), None),
    ]
    for label, family, form, expected in families:
        result = second_variation_check(family, form)
        measurements.append(close(f"{label} first variation", result.first, 0.0, 1e-8, "paper"))
        measurements.append(close(f"{label} second variation", result.numeric, result.formula,
                                  SECOND_VARIATION_TOL, "paper"))
        measurements.append(at_least(f"{label} second variation sign", result.numeric, -1e-6, "paper"))
        if expected is not None:
            measurements.append(close(f"{label} second variation value", result.formula, expected, 1e-8))
    return measurements


SCENARIOS: Dict[str, Scenario] = {s.name: s for s in (
    Scenario("comass-suite", "Comass of the canonical calibrations by optimization and sampling", comass_suite),
    Scenario("comass-g2", "Comass and contact planes of the G2 form", comass_g2),
    Scenario("algebraic-identities", "G2, Spin(7) and SU(n) algebraic identities", algebraic_identities),
    Scenario("preset-integrity", "d^2 = 0 and parallel forms on every coframe preset", preset_integrity),
    Scenario("calibration-criteria", "Calibration criteria on the declared sub-frames", calibration_criteria),
    Scenario("moduli-g2-group", "Associative and coassociative moduli on the G2 group", moduli_g2_group),
    Scenario("moduli-sas", "SAS moduli on the group presets", moduli_sas),
    Scenario("moduli-cayley", "Cayley moduli", moduli_cayley),
    Scenario("candidates", "Right-invariant and constant deformation candidates", candidates),
    Scenario("nearly-parallel", "Nearly parallel G2 systems and the Dirac shift", nearly_parallel),
    Scenario("nearly-kahler", "Nearly Kähler identities and Lagrangian frames", nearly_kahler),
    Scenario("hermitian-charts", "Ricci forms, conformal rescalings and invariant profiles on charts",
             hermitian_charts),
    Scenario("ellipticity", "Injectivity of principal symbols", ellipticity),
    Scenario("energy", "Energy functional and its second variation on flat patches", energy_suite),
    Scenario("contact-dimensions", "Numerical contact-set dimensions", contact_dimensions),
)}


def scenario_names() -> List[str]:
    return sorted(SCENARIOS)


def run(name: str, config: Config) -> ScenarioReport:
    """
    Run one scenario with its own random stream.

    Library errors raised inside the scenario end it as a failed report.

    Raises:
        ScenarioError: If the name is not registered (the message lists the registry)
    """
    if name not in SCENARIOS:
        raise ScenarioError(f"Unknown scenario '{name}'. Available: {', '.join(scenario_names())}")
    rng = derive_rng(config.seed, name)
    report = ScenarioReport(name, config.seed)
    start = time.perf_counter()
    try:
        report.measurements = SCENARIOS[name].run(config, rng)
    except LIBRARY_ERRORS as e:
        report.error = f"{type(e).__name__}: {e}"
    report.wall_time = time.perf_counter() - start
    return report


def run_all(config: Config, names: Optional[Sequence[str]] = None, show_progress: bool = True) -> List[ScenarioReport]:
    """
    Run scenarios in id order, in worker processes when config.workers > 1.

    Raises:
        ScenarioError: If a requested name is not registered
    """
    names = sorted(names) if names is not None else scenario_names()
    unknown = [n for n in names if n not in SCENARIOS]
    if unknown:
        raise ScenarioError(f"Unknown scenario '{unknown[0]}'. Available: {', '.join(scenario_names())}")

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            return list(executor.map(run, names, [config] * len(names)))

    reports = []
    with Progress(console=console, transient=True, disable=not show_progress) as progress:
        task = progress.add_task("Running scenarios", total=len(names))
        for name in names:
            progress.update(task, description=f"[cyan]{name}")
            reports.append(run(name, config))
            progress.advance(task)
    return reports


def write_report(reports: Sequence[ScenarioReport], path: Path):
    """Write one JSON line per report."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        for report in reports:
            f.write(report.to_line() + "\n")
