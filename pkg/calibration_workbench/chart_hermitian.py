"""
Hermitian calculus on coordinate charts by central differences.

A chart is a metric g_{alpha beta-bar}(z) on a box in C^n, stored as the
matrix G[alpha, beta] = g_{alpha beta-bar}. Complex derivatives are
d_alpha = (d_x - i d_y)/2 and d_beta-bar = (d_x + i d_y)/2 along each
coordinate, every one a central difference of step h. Two-level Richardson
extrapolation in h is available through richardson.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Sequence

import numpy as np
from numpy.polynomial import Chebyshev
from rich.console import Console
from scipy.integrate import solve_ivp

console = Console()

MetricFn = Callable[[np.ndarray], np.ndarray]
ScalarFn = Callable[[np.ndarray], float]


class ChartError(Exception):
    """Singular chart metric, failed precondition or no admissible rescaling."""
    pass


@dataclass(frozen=True)
class HermitianChart:
    """Hermitian metric on a coordinate box of C^n."""

    n: int
    metric_fn: MetricFn
    fd_step: float = 1e-4
    name: str = ""

    def metric(self, z: Sequence[complex]) -> np.ndarray:
        """
        Raises:
            ChartError: If the matrix is not hermitian positive-definite at z
        """
        G = np.asarray(self.metric_fn(np.asarray(z, dtype=complex)), dtype=complex)
        if G.shape != (self.n, self.n):
            raise ChartError(f"Metric must be {self.n} x {self.n}, got {G.shape}")
        if np.abs(G - G.conj().T).max() > 1e-10 * max(1.0, np.abs(G).max()):
            raise ChartError(f"Metric is not hermitian at z = {np.round(z, 6)}")
        if np.linalg.eigvalsh(G).min() <= 0:
            raise ChartError(f"Metric is not positive-definite at z = {np.round(z, 6)}")
        return G

    def inverse(self, z: Sequence[complex]) -> np.ndarray:
        """H with G H = 1, so that g^{beta-bar gamma} = H[beta, gamma]."""
        try:
            return np.linalg.inv(self.metric(z))
        except np.linalg.LinAlgError as e:
            raise ChartError(f"Singular metric at z = {np.round(z, 6)}: {e}")

    def log_det(self, z: Sequence[complex]) -> float:
        sign, value = np.linalg.slogdet(self.metric(z))
        return float(value)

    def with_step(self, h: float) -> "HermitianChart":
        return replace(self, fd_step=h)


# complex central differences

def _shift(z: np.ndarray, index: int, amount: complex) -> np.ndarray:
    w = np.array(z, dtype=complex)
    w[index] += amount
    return w


def holomorphic_partial(fn: Callable, z: np.ndarray, index: int, h: float, conjugate: bool = False):
    """d_alpha fn (or d_alpha-bar fn) at z; fn may return arrays."""
    dx = (np.asarray(fn(_shift(z, index, h))) - np.asarray(fn(_shift(z, index, -h)))) / (2 * h)
    dy = (np.asarray(fn(_shift(z, index, 1j * h))) - np.asarray(fn(_shift(z, index, -1j * h)))) / (2 * h)
    return 0.5 * (dx + 1j * dy) if conjugate else 0.5 * (dx - 1j * dy)


def _real_shift(n: int, u: int, h: float) -> complex:
    """Coordinates 0..n-1 are x_alpha, n..2n-1 are y_alpha."""
    return h if u < n else 1j * h


def real_hessian(fn: ScalarFn, z: Sequence[complex], n: int, h: float) -> np.ndarray:
    """Hessian of a real function in (x, y) by three- and four-point central differences."""
    z = np.asarray(z, dtype=complex)
    value = lambda w: float(np.real(fn(w)))
    step = lambda w, u, s: _shift(w, u % n, s * _real_shift(n, u, h))
    center = value(z)
    H = np.zeros((2 * n, 2 * n))
    for u in range(2 * n):
        H[u, u] = (value(step(z, u, 1)) - 2 * center + value(step(z, u, -1))) / h ** 2
        for v in range(u + 1, 2 * n):
            corners = [value(step(step(z, u, su), v, sv)) for su, sv in ((1, 1), (1, -1), (-1, 1), (-1, -1))]
            H[u, v] = H[v, u] = (corners[0] - corners[1] - corners[2] + corners[3]) / (4 * h ** 2)
    return H


def levi_matrix(fn: ScalarFn, z: Sequence[complex], n: int, h: float) -> np.ndarray:
    """L[beta, alpha] = d_beta-bar d_alpha fn at z for a real fn."""
    H = real_hessian(fn, z, n, h)
    xx, xy = H[:n, :n], H[:n, n:]
    yx, yy = H[n:, :n], H[n:, n:]
    return 0.25 * (xx + yy + 1j * (yx - xy))


def _metric_partials(chart: HermitianChart, z: np.ndarray, conjugate: bool) -> np.ndarray:
    """dG[sigma] = d_sigma G (or d_sigma-bar G)."""
    return np.stack([holomorphic_partial(chart.metric, z, s, chart.fd_step, conjugate) for s in range(chart.n)])


def _contracted_torsion(chart: HermitianChart, z: np.ndarray) -> np.ndarray:
    """P_alpha = g^{sigma gamma-bar} d_sigma g_{alpha gamma-bar}."""
    H = chart.inverse(z)
    dG = _metric_partials(chart, z, conjugate=False)
    return np.einsum('gs,sag->a', H, dG)


def _conjugate_trace(chart: HermitianChart, z: np.ndarray) -> np.ndarray:
    """R_beta = g^{sigma gamma-bar} d_gamma-bar g_{sigma beta-bar}."""
    H = chart.inverse(z)
    dbG = _metric_partials(chart, z, conjugate=True)
    return np.einsum('gs,gsb->b', H, dbG)


# Lee form and Ricci forms

def lee_form(chart: HermitianChart, z: Sequence[complex]) -> np.ndarray:
    """
    theta_alpha = d_alpha log det g - g^{beta gamma-bar} d_beta g_{alpha gamma-bar}.

    Raises:
        ChartError: If the metric is singular at a stencil point
    """
    z = np.asarray(z, dtype=complex)
    grad_log_det = np.array([holomorphic_partial(chart.log_det, z, a, chart.fd_step) for a in range(chart.n)])
    return grad_log_det - _contracted_torsion(chart, z)


def chern_ricci(chart: HermitianChart, z: Sequence[complex]) -> np.ndarray:
    """i rho^c_{beta-bar alpha} = d_beta-bar d_alpha log det g, as a matrix indexed [beta, alpha]."""
    return levi_matrix(chart.log_det, z, chart.n, chart.fd_step)


@dataclass
class BismutRicci:
    """(1,1) and (2,0) parts of the Bismut Ricci form."""

    rho_11: np.ndarray
    rho_20: np.ndarray


def bismut_ricci(chart: HermitianChart, z: Sequence[complex]) -> BismutRicci:
    """
    i rho^b_{beta-bar alpha} = d_beta-bar(g^{sigma gamma-bar} d_sigma g_{alpha gamma-bar})
    - d_alpha(g^{sigma gamma-bar} d_beta-bar g_{sigma gamma-bar})
    + d_alpha(g^{sigma gamma-bar} d_gamma-bar g_{sigma beta-bar}),
    and i rho^b_{beta alpha} = d_beta theta_alpha - d_alpha theta_beta.
    """
    z = np.asarray(z, dtype=complex)
    n, h = chart.n, chart.fd_step
    P = lambda w: _contracted_torsion(chart, w)
    Q = lambda w: np.array([holomorphic_partial(chart.log_det, w, b, h, conjugate=True) for b in range(n)])
    R = lambda w: _conjugate_trace(chart, w)

    rho_11 = np.zeros((n, n), dtype=complex)
    for beta in range(n):
        dbar_P = holomorphic_partial(P, z, beta, h, conjugate=True)
        rho_11[beta, :] += dbar_P
    for alpha in range(n):
        d_Q = holomorphic_partial(Q, z, alpha, h)
        d_R = holomorphic_partial(R, z, alpha, h)
        rho_11[:, alpha] += d_R - d_Q

    theta = lambda w: lee_form(chart, w)
    d_theta = np.stack([holomorphic_partial(theta, z, b, h) for b in range(n)])  # [beta, alpha]
    rho_20 = d_theta - d_theta.T
    return BismutRicci(rho_11, rho_20)


def ricci_relation_residual(chart: HermitianChart, z: Sequence[complex]) -> float:
    """
    Largest entry of i rho^b - (i rho^c - d_beta-bar theta_alpha - d_alpha theta_beta-bar),
    the (1,1)-part of rho^c = rho^b + d(J theta).
    """
    z = np.asarray(z, dtype=complex)
    n, h = chart.n, chart.fd_step
    theta = lambda w: lee_form(chart, w)
    theta_bar = lambda w: np.conj(lee_form(chart, w))
    dbar_theta = np.stack([holomorphic_partial(theta, z, b, h, conjugate=True) for b in range(n)])
    d_theta_bar = np.stack([holomorphic_partial(theta_bar, z, a, h) for a in range(n)]).T
    expected = chern_ricci(chart, z) - dbar_theta - d_theta_bar
    return float(np.abs(bismut_ricci(chart, z).rho_11 - expected).max())


def conformal_chart(base: HermitianChart, f: ScalarFn, name: str = "") -> HermitianChart:
    """The chart of e^f g."""
    return HermitianChart(base.n, lambda z: np.exp(f(z)) * base.metric(z), base.fd_step,
                          name or f"exp(f) {base.name}".strip())


def _lemma_differences(chart: HermitianChart, f: ScalarFn, z: np.ndarray) -> np.ndarray:
    before = bismut_ricci(chart, z)
    after = bismut_ricci(conformal_chart(chart, f), z)
    shift = (2 - chart.n) * levi_matrix(f, z, chart.n, chart.fd_step)
    return np.stack([after.rho_11 - before.rho_11 - shift, after.rho_20 - before.rho_20])


def conformal_lemma_check(chart: HermitianChart, f: ScalarFn, z: Sequence[complex],
                          extrapolate: bool = False) -> Dict[str, float]:
    """
    Residuals of i rho~_{beta-bar alpha} = i rho_{beta-bar alpha} + (2 - n) d_beta-bar d_alpha f
    and rho~_{beta alpha} = rho_{beta alpha} for g~ = e^f g.

    With extrapolate, both sides are Richardson-extrapolated from the chart step
    and half of it before comparing.

    Raises:
        ChartError: If n < 2
    """
    if chart.n < 2:
        raise ChartError("The conformal lemma needs n >= 2")
    z = np.asarray(z, dtype=complex)
    if extrapolate:
        differences = richardson(lambda h: _lemma_differences(chart.with_step(h), f, z), chart.fd_step)
    else:
        differences = _lemma_differences(chart, f, z)
    return {
        'rho_11': float(np.abs(differences[0]).max()),
        'rho_20': float(np.abs(differences[1]).max()),
    }


def chern_flatten(chart: HermitianChart, h_fn: ScalarFn, points: Sequence[Sequence[complex]],
                  tol: float = 1e-5) -> HermitianChart:
    """
    The rescaling e^{h/n} g, whose Chern Ricci form vanishes when i rho^c = -d-bar d h.

    Raises:
        ChartError: If the precondition fails at a sample point
    """
    for z in points:
        residual = float(np.abs(chern_ricci(chart, z) + levi_matrix(h_fn, z, chart.n, chart.fd_step)).max())
        if residual > tol:
            raise ChartError(f"i rho^c + d-bar d h = {residual:.3e} at z = {np.round(z, 4)} exceeds {tol:g}")
    n = chart.n
    return conformal_chart(chart, lambda z: h_fn(z) / n, name=f"chern-flat {chart.name}".strip())


@dataclass
class BismutFlattening:
    """Outcome of the Bismut rescaling with the exponent that won."""

    chart: HermitianChart
    exponent: float
    residuals: Dict[float, float] = field(default_factory=dict)


def bismut_flatten(chart: HermitianChart, f_fn: ScalarFn, points: Sequence[Sequence[complex]],
                   tol: float = 1e-5) -> BismutFlattening:
    """
    Conformal rescaling e^{c f} g with c in {1/(2-n), 1/(n-2)} that kills the Bismut Ricci form.

    The exponent is the candidate whose rescaled (1,1)-part is smallest at the
    sample points.

    Raises:
        ChartError: If n < 3, the (1,1)-part differs from d-bar d f, the (2,0)-part
            does not vanish, or neither candidate flattens
    """
    n = chart.n
    if n < 3:
        raise ChartError("Bismut flattening needs n >= 3")
    for z in points:
        rho = bismut_ricci(chart, z)
        rho_11 = float(np.abs(rho.rho_11 - levi_matrix(f_fn, z, n, chart.fd_step)).max())
        if rho_11 > tol:
            raise ChartError(f"i rho^b - d-bar d f = {rho_11:.3e} at z = {np.round(z, 4)} exceeds {tol:g}")
        rho_20 = float(np.abs(rho.rho_20).max())
        if rho_20 > tol:
            raise ChartError(f"Bismut Ricci form has a (2,0)-part {rho_20:.3e} at z = {np.round(z, 4)}")

    residuals: Dict[float, float] = {}
    charts: Dict[float, HermitianChart] = {}
    for c in (1.0 / (2 - n), 1.0 / (n - 2)):
        candidate = conformal_chart(chart, lambda z, c=c: c * f_fn(z), name=f"bismut-flat {chart.name}".strip())
        charts[c] = candidate
        residuals[c] = max(float(np.abs(bismut_ricci(candidate, z).rho_11).max()) for z in points)
    best = min(residuals, key=residuals.get)
    if residuals[best] > tol:
        raise ChartError(f"Neither exponent flattens the Bismut Ricci form: {residuals}")
    return BismutFlattening(charts[best], best, residuals)


# chart factories

def flat_chart(n: int, fd_step: float = 1e-4) -> HermitianChart:
    return HermitianChart(n, lambda z: np.eye(n, dtype=complex), fd_step, "flat")


def polynomial_chart(n: int, rng: np.random.Generator, amplitude: float = 0.1,
                     fd_step: float = 1e-4) -> HermitianChart:
    """
    G = 1 + L(z) + L(z)^H with L linear and quadratic in z and z-bar.

    Generic and non-Kähler; positive-definite on |z_k| <= 1/2 for amplitude <= 0.1.
    """
    shape = (n, n, n)
    linear = amplitude * (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / n
    mixed = amplitude * (rng.normal(size=shape + (n,)) + 1j * rng.normal(size=shape + (n,))) / n ** 2

    def metric(z):
        L = np.einsum('kab,k->ab', linear, z) + np.einsum('klab,k,l->ab', mixed, z, np.conj(z))
        return np.eye(n) + L + L.conj().T

    return HermitianChart(n, metric, fd_step, "polynomial")


def kahler_potential_chart(weights: np.ndarray, fd_step: float = 1e-4) -> HermitianChart:
    """
    The Kähler metric of K = |z|^2 + sum_{k,l} a_kl |z_k|^2 |z_l|^2 (a symmetric), in closed form:
    g_{alpha beta-bar} = delta + 2 a_{alpha beta} z-bar_alpha z_beta + 2 delta_{alpha beta} sum_l a_{alpha l} |z_l|^2.
    """
    a = np.asarray(weights, dtype=float)
    a = 0.5 * (a + a.T)
    n = a.shape[0]

    def metric(z):
        outer = np.outer(np.conj(z), z)
        return np.eye(n) + 2 * a * outer + np.diag(2 * a @ np.abs(z) ** 2)

    return HermitianChart(n, metric, fd_step, "kahler")


def random_kahler_chart(n: int, rng: np.random.Generator, amplitude: float = 0.2,
                        fd_step: float = 1e-4) -> HermitianChart:
    weights = amplitude * np.abs(rng.normal(size=(n, n)))
    return kahler_potential_chart(weights, fd_step)


def iwasawa_chart(fd_step: float = 1e-4) -> HermitianChart:
    """g = sum alpha_i (x) conj(alpha_i) with alpha = (dz_1, dz_2, dz_3 - z_1 dz_2)."""
    def metric(z):
        M = np.eye(3, dtype=complex)
        M[2, 1] = -z[0]
        return M.T @ np.conj(M)

    return HermitianChart(3, metric, fd_step, "iwasawa")


def random_polynomial(n: int, rng: np.random.Generator, amplitude: float = 0.3) -> ScalarFn:
    """A real quadratic-plus-cubic polynomial in (z, z-bar) for conformal factors."""
    quad = amplitude * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    cubic = amplitude * rng.normal(size=n)

    def f(z):
        z = np.asarray(z, dtype=complex)
        x = np.real(z)
        return float(np.real(np.conj(z) @ quad @ z) + np.real(z @ quad @ z) + cubic @ x ** 3)

    return f


def convergence_ratio(quantity: Callable[[float], float], h: float) -> float:
    """residual(h) / residual(h/2); about 4 for a second-order scheme."""
    coarse, fine = quantity(h), quantity(h / 2)
    if fine == 0:
        return float('inf') if coarse else 1.0
    return coarse / fine


def richardson(quantity: Callable[[float], np.ndarray], h: float) -> np.ndarray:
    """
    Two-level Richardson extrapolation (4 q(h/2) - q(h)) / 3.

    Cancels the h^2 term of a central-difference quantity q, leaving O(h^4).
    """
    coarse = np.asarray(quantity(h))
    fine = np.asarray(quantity(h / 2))
    return (4 * fine - coarse) / 3


# U(n)-invariant metrics

@dataclass(frozen=True)
class InvariantMetricProfile:
    """
    ds^2 = (A(r^2) delta_{alpha beta-bar} + B(r^2) z-bar_alpha z_beta) dz^alpha dz-bar^beta.

    Derivatives are finite-differenced in r^2 when not supplied.
    """

    A: Callable[[float], float]
    B: Callable[[float], float]
    dA: Optional[Callable[[float], float]] = None
    dB: Optional[Callable[[float], float]] = None
    step: float = 1e-6

    def a_prime(self, t: float) -> float:
        if self.dA is not None:
            return self.dA(t)
        return (self.A(t + self.step) - self.A(t - self.step)) / (2 * self.step)

    def b_prime(self, t: float) -> float:
        if self.dB is not None:
            return self.dB(t)
        return (self.B(t + self.step) - self.B(t - self.step)) / (2 * self.step)

    def chart(self, n: int, fd_step: float = 1e-4) -> HermitianChart:
        def metric(z):
            r2 = float(np.real(np.vdot(z, z)))
            return self.A(r2) * np.eye(n) + self.B(r2) * np.outer(np.conj(z), z)
        return HermitianChart(n, metric, fd_step, "invariant")


def canonical_connection_factor(profile: InvariantMetricProfile, n: int, t: float) -> float:
    """f = (n - 1) (2B - A') / A + (log(A + r^2 B))' at r^2 = t."""
    A, B = profile.A(t), profile.B(t)
    dA, dB = profile.a_prime(t), profile.b_prime(t)
    return (n - 1) * (2 * B - dA) / A + (dA + B + t * dB) / (A + t * B)


@dataclass
class ProfileResult:
    """f on the grid for the given profile, and the profile B solving f = 0 for the same A."""

    r2: np.ndarray
    f: np.ndarray
    solved_B: np.ndarray
    solved_residual: float
    nodes: np.ndarray = field(default_factory=lambda: np.zeros(0))
    node_B: np.ndarray = field(default_factory=lambda: np.zeros(0))


PROFILE_NODES = 48
PROFILE_DEGREE = 32


def profile_nodes(start: float, stop: float, count: int = PROFILE_NODES) -> np.ndarray:
    """Chebyshev-Lobatto points on [start, stop] in increasing order."""
    nodes = 0.5 * (start + stop) - 0.5 * (stop - start) * np.cos(np.pi * np.arange(count) / (count - 1))
    nodes = np.clip(nodes, start, stop)
    nodes[0], nodes[-1] = start, stop
    return nodes


def profile_residual(profile: InvariantMetricProfile, n: int, nodes: Sequence[float],
                     values: Sequence[float], r2_grid: Sequence[float],
                     degree: int = PROFILE_DEGREE) -> float:
    """
    Largest |f| on the grid for the B sampled at the nodes, with A from the profile.

    B and B' come from a least-squares Chebyshev series through (nodes, values), so
    the check depends only on the samples.
    """
    nodes = np.asarray(nodes, dtype=float)
    series = Chebyshev.fit(nodes, np.asarray(values, dtype=float), min(degree, len(nodes) - 1))
    slope = series.deriv()
    fitted = InvariantMetricProfile(profile.A, lambda t: float(series(t)), profile.dA,
                                    lambda t: float(slope(t)), profile.step)
    return max(abs(canonical_connection_factor(fitted, n, float(t))) for t in r2_grid)


def calabi_like_profile(profile: InvariantMetricProfile, n: int, r2_grid: Sequence[float],
                        b_initial: float = 0.0) -> ProfileResult:
    """
    Evaluate f on the grid and integrate f = 0 for B given A from B(r2_grid[0]) = b_initial.

    The ODE B' = -((n - 1)(2B - A')(A + r^2 B)/A + A' + B) / r^2 is integrated with
    the implicit Radau method, step by step through the grid and a set of
    Chebyshev nodes. The residual substitutes the fitted series back into f.

    Raises:
        ChartError: If A or A + r^2 B fails to be positive on the grid, or the integration fails
    """
    grid = np.asarray(r2_grid, dtype=float)
    if grid[0] <= 0:
        raise ChartError("The grid must start at r^2 > 0")
    for t in grid:
        if profile.A(t) <= 0 or profile.A(t) + t * profile.B(t) <= 0:
            raise ChartError(f"Profile is singular at r^2 = {t:g}")
    f = np.array([canonical_connection_factor(profile, n, t) for t in grid])

    def rhs(t, y):
        A, dA, B = profile.A(t), profile.a_prime(t), y[0]
        return [-((n - 1) * (2 * B - dA) * (A + t * B) / A + dA + B) / t]

    nodes = profile_nodes(grid[0], grid[-1])
    stops = np.union1d(grid, nodes)
    values = [b_initial]
    for start, stop in zip(stops[:-1], stops[1:]):
        solution = solve_ivp(rhs, (start, stop), [values[-1]], method="Radau", rtol=1e-13, atol=1e-15)
        if not solution.success:
            raise ChartError(f"Profile integration failed: {solution.message}")
        B = solution.y[0, -1]
        if profile.A(stop) + stop * B <= 0:
            raise ChartError(f"Integrated profile is singular at r^2 = {stop:g}")
        values.append(B)
    values = np.array(values)
    solved = values[np.searchsorted(stops, grid)]
    node_B = values[np.searchsorted(stops, nodes)]
    residual = profile_residual(profile, n, nodes, node_B, grid)
    return ProfileResult(grid, f, solved, residual, nodes, node_B)
