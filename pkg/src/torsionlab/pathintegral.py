"""Time-sliced short-time kernels and transfer-matrix spectra.

The short-time amplitude between nearby points is built from the postpoint
expansion of the squared flat-space step: through fourth order in the
coordinate difference, with all coefficient tensors evaluated at the later
point.  Spectrum work runs in imaginary time (the standard Wick rotation of
the sliced amplitude; real-time oscillatory slicing is out of scope), where
the kernel is a positive transfer matrix whose eigenvalues give energies
``E = -(hbar/eps) log(lambda)``.

Three measures can dress the kernel.  All carry the exact volume weight
sqrt(g) at the integration (pre)point -- for the naive measure that weight
IS the Jacobian-action content, written in closed form rather than as its
second-order expansion, which matters near coordinate singularities of the
latitude grid where the truncated series misbehaves:

* ``naive_dewitt``   volume weight only,
* ``qep``            volume weight times exp(delta_jacobian), the difference
                     between the step-difference and volume Jacobian
                     exponents (a curvature-scale, bounded dressing),
* ``qep_via_veff``   volume weight with the curvature effective potential
                     -hbar^2 Rbar / 6M inserted into the action;

the last two are the same measure written in two forms and must produce the
same spectra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .charts import Chart, builtin_chart
from .connection import connection_derivatives
from .curvature import curvature_bundle
from .errors import GridTooCoarseError, NumericError, ValidationError

MEASURE_MODES = ("naive_dewitt", "qep", "qep_via_veff")


@dataclass(frozen=True)
class ShortTimeConfig:
    """Units and slicing controls for short-time kernels."""

    mass: float = 1.0
    hbar: float = 1.0
    epsilon: float = 0.02
    sign_mode: str = "imaginary"  # "imaginary" | "real"
    cutoff_sigmas: float = 6.0
    min_resolution_ratio: float = 1.5
    # Kernel entries whose cubic+quartic bracket correction shifts the
    # kernel exponent by more than this lie outside the short-time
    # expansion's trust region (coordinate steps wrapping a pole, say);
    # those entries use the manifold's exact squared geodesic arc instead.
    expansion_tolerance: float = 2.0

    def __post_init__(self):
        if self.mass <= 0 or self.hbar <= 0 or self.epsilon <= 0:
            raise ValidationError("mass, hbar and epsilon must all be positive")
        if self.sign_mode not in ("imaginary", "real"):
            raise ValidationError(f"sign_mode must be 'imaginary' or 'real', got {self.sign_mode!r}")


def _normalize_measure(mode: str) -> str:
    key = str(mode).strip().lower().replace("-", "_")
    aliases = {
        "naive": "naive_dewitt",
        "naive_dewitt": "naive_dewitt",
        "naivedewitt": "naive_dewitt",
        "qep": "qep",
        "qep_via_veff": "qep_via_veff",
        "qepviaveff": "qep_via_veff",
        "veff": "qep_via_veff",
    }
    if key not in aliases:
        raise ValidationError(f"unknown measure mode {mode!r}; use one of {MEASURE_MODES}")
    return aliases[key]


class PostpointData:
    """Connection data at one postpoint, reusable over batches of steps."""

    def __init__(self, chart: Chart, q):
        bundle, dgamma, _ = connection_derivatives(chart, q)
        self.q = np.asarray(q, dtype=float)
        self.metric = bundle.metric
        gamma = bundle.gamma
        self.gamma = gamma
        g = bundle.metric
        self.gamma_lower = np.einsum("mns,sl->mnl", gamma, g)
        gsym = 0.5 * (gamma + gamma.transpose(1, 0, 2))
        self.gamma_sym = gsym
        self.dgamma = dgamma
        # quartic coefficient of the postpoint bracket
        self.quartic = (
            np.einsum("mt,lntk->mnlk", g, dgamma) / 3.0
            + np.einsum("mt,lnd,kdt->mnlk", g, gamma, gsym) / 3.0
            + 0.25 * np.einsum("lks,mns->mnlk", gamma, self.gamma_lower)
        )
        # midpoint quartic coefficient
        self.quartic_mid = (
            np.einsum("kt,mntl->mnlk", g, dgamma) + np.einsum("kt,mnd,ldt->mnlk", g, gamma, gsym)
        ) / 12.0
        # Jacobian exponent ingredients
        self.trace_gamma = np.einsum("mnn->m", gamma)
        self.dtrace_gamma = np.einsum("nkkm->nm", dgamma)
        T = dgamma.transpose(0, 1, 3, 2) + np.einsum("mnt,tsl->mnsl", gamma, gsym)
        perms = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))
        self.qep_coeff = sum(T.transpose(p + (3,)) for p in perms) / 6.0

    def quadratic_form(self, dq):
        return np.einsum("mn,...m,...n->...", self.metric, dq, dq)

    def bracket(self, dq):
        """Postpoint expansion of the squared flat step through fourth order."""
        dq = np.asarray(dq, dtype=float)
        a2 = self.quadratic_form(dq)
        a3 = np.einsum("mnl,...m,...n,...l->...", self.gamma_lower, dq, dq, dq)
        a4 = np.einsum("mnlk,...m,...n,...l,...k->...", self.quartic, dq, dq, dq, dq)
        return a2 - a3 + a4

    def bracket_midpoint(self, dq):
        dq = np.asarray(dq, dtype=float)
        a2 = self.quadratic_form(dq)
        a4 = np.einsum("mnlk,...m,...n,...l,...k->...", self.quartic_mid, dq, dq, dq, dq)
        return a2 + a4

    def jacobian_naive(self, dq):
        dq = np.asarray(dq, dtype=float)
        return -np.einsum("m,...m->...", self.trace_gamma, dq) + 0.5 * np.einsum(
            "nm,...n,...m->...", self.dtrace_gamma, dq, dq
        )

    def jacobian_qep(self, dq):
        dq = np.asarray(dq, dtype=float)
        t1 = -np.einsum("mnm,...n->...", self.gamma_sym, dq)
        t2 = 0.5 * np.einsum("mnsm,...n,...s->...", self.qep_coeff, dq, dq)
        m1 = np.einsum("mnl,...n->...ml", self.gamma_sym, dq)
        t3 = -0.5 * np.einsum("...ml,...lm->...", m1, m1)
        return t1 + t2 + t3


def postpoint_action(chart: Chart, q_post, dq, cfg: ShortTimeConfig) -> float:
    """Short-time action between q_post - dq and q_post, coefficients at q_post.

    Exact to O(|dq|^5)/eps for the step along the preferred (autoparallel)
    path; for a flat cartesian chart it reduces to M dq^2 / (2 eps) exactly.
    """
    data = PostpointData(chart, chart.check_point(q_post))
    value = 0.5 * cfg.mass / cfg.epsilon * data.bracket(dq)
    return float(value) if np.ndim(value) == 0 else value


def prepoint_action(chart: Chart, q_pre, dq, cfg: ShortTimeConfig):
    """Prepoint form: postpoint bracket with dq -> -dq and coefficients at q_pre."""
    data = PostpointData(chart, chart.check_point(q_pre))
    value = 0.5 * cfg.mass / cfg.epsilon * data.bracket(-np.asarray(dq, dtype=float))
    return float(value) if np.ndim(value) == 0 else value


def midpoint_action(chart: Chart, q_mid, dq, cfg: ShortTimeConfig):
    """Midpoint form: no cubic term, 1/12 quartic coefficient, coefficients at q_mid."""
    data = PostpointData(chart, chart.check_point(q_mid))
    value = 0.5 * cfg.mass / cfg.epsilon * data.bracket_midpoint(dq)
    return float(value) if np.ndim(value) == 0 else value


def jacobian_action_naive(chart: Chart, q_post, dq):
    """Volume-weight Jacobian exponent: log of sqrt(g(q - dq) / g(q)) through second order."""
    data = PostpointData(chart, chart.check_point(q_post))
    value = data.jacobian_naive(dq)
    return float(value) if np.ndim(value) == 0 else value


def jacobian_action_qep(chart: Chart, q_post, dq):
    """Step-difference Jacobian exponent with the double symmetrization.

    The coefficient of the quadratic term symmetrizes the inner index pair
    first and then all three step indices; for integrable (flat-image square)
    charts it collapses onto the naive exponent.
    """
    data = PostpointData(chart, chart.check_point(q_post))
    value = data.jacobian_qep(dq)
    return float(value) if np.ndim(value) == 0 else value


def delta_jacobian(chart: Chart, q_post, dq):
    """Difference between the step-difference and volume-weight Jacobian exponents.

    On torsion-free charts this equals Ricci_{mu nu} dq^mu dq^nu / 6.
    """
    data = PostpointData(chart, chart.check_point(q_post))
    value = data.jacobian_qep(dq) - data.jacobian_naive(dq)
    return float(value) if np.ndim(value) == 0 else value


def effective_potential(chart: Chart, q, cfg: ShortTimeConfig | None = None) -> float:
    """Measure-difference effective potential V_eff = -hbar^2 Rbar / (6 M)."""
    cfg = cfg or ShortTimeConfig()
    scalar = curvature_bundle(chart, q, source="riemann").scalar
    return -cfg.hbar**2 * scalar / (6.0 * cfg.mass)


# -- manifolds and kernels ----------------------------------------------------


@dataclass(frozen=True)
class Ring:
    """Circle of radius r, P uniform grid points (free rotor)."""

    radius: float = 1.0
    points: int = 256


@dataclass(frozen=True)
class Sphere:
    """Round sphere of radius r on a Gauss-Legendre x uniform-azimuth grid."""

    radius: float = 1.0
    n_theta: int = 48
    n_phi: int = 96


def _wrap_angle(x):
    return (x + np.pi) % (2.0 * np.pi) - np.pi


@dataclass
class SlicedPropagator:
    """Discretized short-time kernel; supports composition and spectra.

    For the ring the kernel is a dense (P, P) matrix.  For the sphere it is
    kept in azimuthal-profile form ``profile[j, j', dk]`` (the kernel is
    block-circulant in the azimuth) together with its Fourier blocks; the
    full dense matrix is never materialized.
    """

    manifold: object
    cfg: ShortTimeConfig
    measure_mode: str
    slice_count: int = 1
    matrix: np.ndarray | None = None
    profile: np.ndarray | None = None  # sphere: (n_theta, n_theta, n_phi)
    blocks: np.ndarray | None = None  # sphere: (n_theta, n_theta, n_phi)
    grid: dict = field(default_factory=dict)

    @property
    def total_time(self) -> float:
        return self.cfg.epsilon * self.slice_count

    def compose(self, other: "SlicedPropagator") -> "SlicedPropagator":
        """Chain two kernels on the same grid (matrix product)."""
        if self.manifold != other.manifold or self.measure_mode != other.measure_mode:
            raise ValidationError("can only compose propagators on the same grid and measure")
        if self.matrix is not None:
            out = replace(self, slice_count=self.slice_count + other.slice_count)
            out.matrix = self.matrix @ other.matrix
            return out
        blocks = np.einsum("abm,bcm->acm", self.blocks, other.blocks)
        out = replace(self, slice_count=self.slice_count + other.slice_count)
        out.blocks = blocks
        out.profile = None
        return out

    def entry(self, a: int, b: int) -> float:
        """Kernel entry between flat grid indices (row = postpoint)."""
        if self.matrix is not None:
            return float(self.matrix[a, b])
        if self.profile is None:
            raise ValidationError("composed sphere kernels keep only Fourier blocks")
        n_phi = self.profile.shape[2]
        ja, ka = divmod(a, n_phi)
        jb, kb = divmod(b, n_phi)
        return float(self.profile[ja, jb, (ka - kb) % n_phi])

    def eigenvalues(self, count: int | None = None) -> np.ndarray:
        """Transfer-matrix eigenvalues by descending real part.

        The leading eigenvalues of the positive imaginary-time kernel are
        real; the requested slice is checked for stray imaginary parts.
        (Deep in the spectrum the mildly nonsymmetric postpoint
        discretization can produce tiny complex pairs, which never carry
        physics and are returned as real parts.)
        """
        if self.matrix is not None:
            if np.allclose(self.matrix, self.matrix.T, rtol=0.0, atol=1e-13):
                vals = np.linalg.eigvalsh(self.matrix)[::-1].astype(complex)
            else:
                vals = np.linalg.eigvals(self.matrix)
        else:
            all_vals = []
            for m in range(self.blocks.shape[2]):
                block = self.blocks[:, :, m]
                if np.max(np.abs(block.imag)) > 1e-9 * max(1.0, np.max(np.abs(block.real))):
                    raise NumericError("azimuthal kernel block unexpectedly complex")
                all_vals.append(np.linalg.eigvals(block.real))
            vals = np.concatenate(all_vals)
        vals = vals[np.argsort(-vals.real, kind="stable")]
        if count is not None:
            vals = vals[:count]
            scale = float(np.max(np.abs(vals.real))) or 1.0
            if np.max(np.abs(vals.imag)) > 1e-7 * scale:
                raise NumericError(
                    "leading kernel eigenvalues have unexpectedly large imaginary parts"
                )
        return vals.real


def _ring_chart(manifold: Ring) -> Chart:
    return builtin_chart("ring", r=manifold.radius)


def _sphere_chart(manifold: Sphere) -> Chart:
    return builtin_chart("sphere", r=manifold.radius)


def build_propagator(manifold, cfg: ShortTimeConfig, measure_mode="qep") -> SlicedPropagator:
    """Assemble the single-slice imaginary-time kernel on a manifold grid.

    The kernel row at postpoint a is
    ``norm * sqrt(g(b)) * vol_b * exp(-A_eps/hbar + J_mode)``: postpoint
    short-time action, exact volume weight at the integration point, the
    measure-mode exponent of ``_mode_exponent``, and a Gaussian cutoff at
    ``cfg.cutoff_sigmas`` widths of geodesic distance.  A leading-order
    Gaussian row sum (continuum value one) fixes the normalization on the
    grid, so only quadrature error is divided out.
    """
    mode = _normalize_measure(measure_mode)
    if cfg.sign_mode != "imaginary":
        raise ValidationError("spectrum kernels require sign_mode='imaginary'")
    if isinstance(manifold, Ring):
        return _build_ring(manifold, cfg, mode)
    if isinstance(manifold, Sphere):
        return _build_sphere(manifold, cfg, mode)
    raise ValidationError(f"unsupported manifold {manifold!r}")


def _check_positive_finite(arr):
    if not np.all(np.isfinite(arr)):
        raise NumericError("kernel contains non-finite entries")
    if np.any(arr < 0.0):
        raise NumericError("imaginary-time kernel must be non-negative")


def _trusted_entries(quad, bracket, lam, expansion_tolerance):
    """Entries where the fourth-order bracket is inside its trust region.

    The cubic+quartic correction may not shift the kernel exponent by more
    than ``expansion_tolerance``; beyond that (steps wrapping a pole of the
    latitude grid, far Gaussian tails) the truncated polynomial is
    meaningless and the exact squared geodesic arc of the manifold is used
    instead.
    """
    return lam * np.abs(bracket - quad) <= expansion_tolerance


def _build_ring(manifold: Ring, cfg: ShortTimeConfig, mode: str) -> SlicedPropagator:
    r, P = float(manifold.radius), int(manifold.points)
    if P < 8:
        raise ValidationError("ring grid needs at least 8 points")
    chart = _ring_chart(manifold)
    sigma = math.sqrt(cfg.epsilon * cfg.hbar / cfg.mass)
    spacing = 2.0 * math.pi * r / P
    if sigma / spacing < cfg.min_resolution_ratio:
        raise GridTooCoarseError(
            f"kernel width {sigma:.4g} under-resolved by ring spacing {spacing:.4g}"
        )
    data = PostpointData(chart, np.array([0.0]))
    delta = _wrap_angle(-2.0 * math.pi * np.arange(P) / P)[:, None]  # dq = q_a - q_b at a=0
    bracket = data.bracket(delta)
    quad = data.quadratic_form(delta)
    arc2 = (r * delta[:, 0]) ** 2  # exact squared geodesic arc on the circle
    lam = 0.5 * cfg.mass / (cfg.epsilon * cfg.hbar)
    cut = (cfg.cutoff_sigmas * sigma) ** 2
    trusted = _trusted_entries(quad, bracket, lam, cfg.expansion_tolerance)
    action2 = np.where(trusted, bracket, arc2)
    mask = arc2 <= cut
    jexp = _mode_exponent(data, delta, mode, chart, cfg)
    norm = (cfg.mass / (2.0 * math.pi * cfg.epsilon * cfg.hbar)) ** 0.5
    vol = 2.0 * math.pi / P
    sqrtg = math.sqrt(np.linalg.det(data.metric))  # constant along the ring
    row = np.where(mask, norm * sqrtg * vol * np.exp(-lam * action2 + jexp), 0.0)
    row_flat = np.where(mask, norm * sqrtg * vol * np.exp(-lam * arc2), 0.0)
    flat_sum = float(np.sum(row_flat))
    if flat_sum <= 0:
        raise NumericError("flat reference kernel summed to zero")
    row = row / flat_sum
    # row holds K[0][b]; K[a][b] depends on the wrapped difference b - a
    idx = (np.arange(P)[None, :] - np.arange(P)[:, None]) % P
    matrix = row[idx]
    _check_positive_finite(matrix)
    return SlicedPropagator(
        manifold=manifold,
        cfg=cfg,
        measure_mode=mode,
        matrix=matrix,
        grid={"angles": (2.0 * math.pi * np.arange(P) / P)},
    )


def _mode_exponent(data: PostpointData, dq, mode: str, chart: Chart, cfg: ShortTimeConfig):
    """Measure dressing relative to the exact prepoint volume weight.

    The naive measure is carried entirely by the closed-form sqrt(g) weight
    at the integration point; the step-difference measure differs from it by
    exp(delta_jacobian); the effective-potential form inserts -eps V_eff
    into the action instead.
    """
    if mode == "qep":
        return data.jacobian_qep(dq) - data.jacobian_naive(dq)
    if mode == "naive_dewitt":
        return np.zeros(np.shape(dq)[:-1])
    veff = effective_potential(chart, data.q, cfg)
    return np.full(np.shape(dq)[:-1], -cfg.epsilon * veff / cfg.hbar)


def _build_sphere(manifold: Sphere, cfg: ShortTimeConfig, mode: str) -> SlicedPropagator:
    r = float(manifold.radius)
    n_th, n_ph = int(manifold.n_theta), int(manifold.n_phi)
    if n_th < 8 or n_ph < 8:
        raise ValidationError("sphere grid needs at least 8 x 8 points")
    chart = _sphere_chart(manifold)
    u, wu = np.polynomial.legendre.leggauss(n_th)
    theta = np.arccos(u)  # descending from pi to 0, none at the poles
    dphi = 2.0 * math.pi / n_ph
    sigma = math.sqrt(cfg.epsilon * cfg.hbar / cfg.mass)
    spacing_theta = r * float(np.max(np.abs(np.diff(theta))))
    spacing_phi = r * dphi  # worst case at the equator
    spacing = max(spacing_theta, spacing_phi)
    if sigma / spacing < cfg.min_resolution_ratio:
        raise GridTooCoarseError(
            f"kernel width {sigma:.4g} under-resolved by sphere spacing {spacing:.4g}"
        )

    lam = 0.5 * cfg.mass / (cfg.epsilon * cfg.hbar)
    cut = (cfg.cutoff_sigmas * sigma) ** 2
    norm = cfg.mass / (2.0 * math.pi * cfg.epsilon * cfg.hbar)  # D = 2
    vol = wu * dphi / np.sin(theta)  # coordinate cell volume per column latitude
    delta_phi = _wrap_angle(dphi * np.arange(n_ph))

    profile = np.empty((n_th, n_th, n_ph))
    dq = np.empty((n_th, n_ph, 2))
    for j in range(n_th):
        data = PostpointData(chart, np.array([theta[j], 0.0]))
        dq[:, :, 0] = (theta[j] - theta)[:, None]
        dq[:, :, 1] = delta_phi[None, :]
        quad = data.quadratic_form(dq)
        bracket = data.bracket(dq)
        # exact squared geodesic arc between the grid points
        cos_arc = math.cos(theta[j]) * np.cos(theta)[:, None] + (
            math.sin(theta[j]) * np.sin(theta)[:, None]
        ) * np.cos(delta_phi)[None, :]
        arc2 = (r * np.arccos(np.clip(cos_arc, -1.0, 1.0))) ** 2
        trusted = _trusted_entries(quad, bracket, lam, cfg.expansion_tolerance)
        action2 = np.where(trusted, bracket, arc2)
        mask = arc2 <= cut
        jexp = _mode_exponent(data, dq, mode, chart, cfg)
        # exact volume weight at the integration point: vol * sqrt(g(q_b))
        sqrtg_col = r * r * np.sin(theta)
        rows = norm * (vol * sqrtg_col)[:, None] * np.exp(-lam * action2 + jexp)
        # leading-order reference with the exact arc and measure (continuum value 1)
        rows_flat = norm * (vol * sqrtg_col)[:, None] * np.exp(-lam * arc2)
        rows = np.where(mask, rows, 0.0)
        rows_flat = np.where(mask, rows_flat, 0.0)
        flat_sum = float(np.sum(rows_flat))
        if flat_sum <= 0:
            raise NumericError("flat reference kernel summed to zero")
        profile[j] = rows / flat_sum
    _check_positive_finite(profile)
    # the kernel is even in the azimuth difference; symmetrize rounding noise
    profile = 0.5 * (profile + profile[:, :, (-np.arange(n_ph)) % n_ph])
    blocks = np.fft.fft(profile, axis=2)
    return SlicedPropagator(
        manifold=manifold,
        cfg=cfg,
        measure_mode=mode,
        profile=profile,
        blocks=blocks,
        grid={"theta": theta, "phi": dphi * np.arange(n_ph), "gl_weights": wu},
    )


# -- spectrum extraction -------------------------------------------------------


@dataclass
class SpectrumLevels:
    """Distinct energy levels with degeneracy counts."""

    energies: np.ndarray
    degeneracies: tuple
    eigenvalues: np.ndarray


def extract_spectrum(prop: SlicedPropagator, n_levels: int, group_tol: float = 1e-6) -> SpectrumLevels:
    """Energies from the largest kernel eigenvalues.

    ``E_k = -(hbar / (eps * slices)) log(lambda_k)``; near-coincident levels
    (within ``group_tol`` in energy) are merged and reported with their
    degeneracy.
    """
    if n_levels < 1:
        raise ValidationError("n_levels must be at least 1")
    # enough eigenvalues even for (2l+1)-fold degenerate ladders
    needed = max(16, 2 * (n_levels + 1) ** 2)
    vals = prop.eigenvalues(count=needed)
    vals = vals[vals > 0.0]
    if len(vals) == 0:
        raise NumericError("no positive kernel eigenvalues to take logarithms of")
    energies = -(prop.cfg.hbar / prop.total_time) * np.log(vals)
    # group ascending energies into degenerate clusters
    levels = []
    counts = []
    for e in energies:
        if levels and abs(e - levels[-1][-1]) <= group_tol:
            levels[-1].append(e)
            counts[-1] += 1
        else:
            levels.append([e])
            counts.append(1)
        if len(levels) > n_levels:
            levels.pop()
            counts.pop()
            break
    mean_levels = np.array([float(np.mean(group)) for group in levels])
    return SpectrumLevels(
        energies=mean_levels[:n_levels],
        degeneracies=tuple(counts[:n_levels]),
        eigenvalues=vals,
    )


@dataclass
class SpectrumResult:
    """Levels across an epsilon ladder plus first-order Richardson extrapolation."""

    measure_mode: str
    epsilons: tuple
    ladder: dict  # eps -> np.ndarray of levels
    degeneracies: tuple  # from the finest eps
    extrapolated: np.ndarray


def richardson_order1(eps_coarse, levels_coarse, eps_fine, levels_fine):
    """Eliminate the O(eps) error from two level ladders."""
    ec, ef = float(eps_coarse), float(eps_fine)
    if not ef < ec:
        raise ValidationError("fine epsilon must be smaller than coarse epsilon")
    n = min(len(levels_coarse), len(levels_fine))
    lc, lf = np.asarray(levels_coarse)[:n], np.asarray(levels_fine)[:n]
    return (ec * lf - ef * lc) / (ec - ef)


def spectrum_ladder(
    manifold,
    cfg: ShortTimeConfig,
    measure_mode: str,
    epsilons=(0.08, 0.04, 0.02, 0.01),
    n_levels: int = 4,
    group_tol: float = 1e-6,
) -> SpectrumResult:
    """Spectra over an epsilon ladder with first-order Richardson extrapolation.

    The reported ``extrapolated`` levels come from the two smallest epsilons.
    """
    eps_sorted = tuple(sorted(set(float(e) for e in epsilons), reverse=True))
    if len(eps_sorted) < 2:
        raise ValidationError("need at least two distinct epsilons to extrapolate")
    mode = _normalize_measure(measure_mode)
    ladder = {}
    degeneracies = None
    for eps in eps_sorted:
        prop = build_propagator(manifold, replace(cfg, epsilon=eps), mode)
        levels = extract_spectrum(prop, n_levels, group_tol=group_tol)
        ladder[eps] = levels.energies
        degeneracies = levels.degeneracies
    extrapolated = richardson_order1(
        eps_sorted[-2], ladder[eps_sorted[-2]], eps_sorted[-1], ladder[eps_sorted[-1]]
    )
    return SpectrumResult(
        measure_mode=mode,
        epsilons=eps_sorted,
        ladder=ladder,
        degeneracies=degeneracies,
        extrapolated=extrapolated,
    )
