"""Classical trajectories and the nonholonomic variation machinery.

Geodesics extremize length (Christoffel force term); autoparallels are the
straightest lines (full affine connection) and coincide with the image of a
straight flat-space line mapped step by step through the triads -- that image
integrator is kept as an independent oracle.  The closure defect of varied
paths solves a linear ODE driven by torsion, solved here both by RK4 and by
an ordered-exponential quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .charts import Chart
from .connection import affine_connection, christoffel, torsion_tensor
from .errors import (
    GridMismatchError,
    SamplingError,
    SingularPointError,
    ValidationError,
)
from .expressions import Expression


@dataclass
class TrajectoryState:
    t: float
    q: np.ndarray
    qdot: np.ndarray


@dataclass
class Trajectory:
    """Dense fixed-step trajectory samples."""

    t: np.ndarray  # (N,)
    q: np.ndarray  # (N, D)
    qdot: np.ndarray  # (N, D)
    truncated: bool = False

    def __len__(self):
        return len(self.t)

    @property
    def step(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0

    def state(self, k: int) -> TrajectoryState:
        return TrajectoryState(float(self.t[k]), self.q[k].copy(), self.qdot[k].copy())

    def states(self):
        return [self.state(k) for k in range(len(self))]


def _grid(t_span, step):
    ta, tb = float(t_span[0]), float(t_span[1])
    if not step > 0:
        raise ValidationError(f"step must be positive, got {step!r}")
    if tb <= ta:
        raise ValidationError(f"empty time span {t_span!r}")
    n = max(1, int(round((tb - ta) / step)))
    return np.linspace(ta, tb, n + 1)


def _integrate_second_order(accel, q0, v0, t_grid):
    """Classical RK4 for q'' = accel(q, v); returns (q, v, truncated)."""
    n = len(t_grid)
    D = len(q0)
    q = np.empty((n, D))
    v = np.empty((n, D))
    q[0], v[0] = q0, v0
    truncated = False
    for k in range(n - 1):
        h = t_grid[k + 1] - t_grid[k]
        try:
            qk, vk = q[k], v[k]
            a1 = accel(qk, vk)
            q2 = qk + 0.5 * h * vk
            v2 = vk + 0.5 * h * a1
            a2 = accel(q2, v2)
            q3 = qk + 0.5 * h * v2
            v3 = vk + 0.5 * h * a2
            a3 = accel(q3, v3)
            q4 = qk + h * v3
            v4 = vk + h * a3
            a4 = accel(q4, v4)
            q[k + 1] = qk + (h / 6.0) * (vk + 2.0 * v2 + 2.0 * v3 + v4)
            v[k + 1] = vk + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        except SingularPointError:
            return q[: k + 1], v[: k + 1], True
    return q, v, truncated


def integrate_geodesic(chart: Chart, q0, qdot0, t_span, step) -> Trajectory:
    """Integrate q'' + Gammabar q' q' = 0 with fixed-step RK4."""
    q0 = chart.check_point(q0)
    v0 = np.asarray(qdot0, dtype=float)
    t_grid = _grid(t_span, step)

    def accel(q, v):
        _, chris2 = christoffel(chart, q)
        return -np.einsum("lnm,l,n->m", chris2, v, v)

    q, v, truncated = _integrate_second_order(accel, q0, v0, t_grid)
    return Trajectory(t=t_grid[: len(q)], q=q, qdot=v, truncated=truncated)


def integrate_autoparallel(chart: Chart, q0, qdot0, t_span, step) -> Trajectory:
    """Integrate q'' + Gamma q' q' = 0 (full affine connection) with RK4."""
    q0 = chart.check_point(q0)
    v0 = np.asarray(qdot0, dtype=float)
    t_grid = _grid(t_span, step)

    def accel(q, v):
        gamma = affine_connection(chart, q)
        return -np.einsum("lnm,l,n->m", gamma, v, v)

    q, v, truncated = _integrate_second_order(accel, q0, v0, t_grid)
    return Trajectory(t=t_grid[: len(q)], q=q, qdot=v, truncated=truncated)


def straight_line_image(chart: Chart, q0, qdot0, t_span, step) -> Trajectory:
    """Nonholonomic image of a straight flat-space line (oracle integrator).

    The flat velocity v^i = e^i_mu(q0) qdot0^mu is held constant and
    dq/dt = e_i^mu(q(t)) v^i is integrated; by the mapping principle this
    must coincide with the autoparallel through (q0, qdot0).
    """
    q0 = chart.check_point(q0)
    v_flat = chart.triad(q0) @ np.asarray(qdot0, dtype=float)
    t_grid = _grid(t_span, step)
    n = len(t_grid)
    q = np.empty((n, chart.dim))
    qdot = np.empty((n, chart.dim))
    q[0] = q0
    truncated = False

    def rhs(qq):
        return chart.reciprocal_triad(qq).T @ v_flat

    k_final = n - 1
    for k in range(n - 1):
        h = t_grid[k + 1] - t_grid[k]
        try:
            qdot[k] = rhs(q[k])
            k1 = qdot[k]
            k2 = rhs(q[k] + 0.5 * h * k1)
            k3 = rhs(q[k] + 0.5 * h * k2)
            k4 = rhs(q[k] + h * k3)
            q[k + 1] = q[k] + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        except SingularPointError:
            k_final = k
            truncated = True
            break
    if not truncated:
        qdot[n - 1] = rhs(q[n - 1])
        return Trajectory(t=t_grid, q=q, qdot=qdot, truncated=False)
    return Trajectory(
        t=t_grid[: k_final + 1], q=q[: k_final + 1], qdot=qdot[: k_final + 1], truncated=True
    )


def kinetic_energy(chart: Chart, traj: Trajectory, mass: float = 1.0) -> np.ndarray:
    """(M/2) g_munu qdot^mu qdot^nu along the trajectory."""
    out = np.empty(len(traj))
    for k in range(len(traj)):
        g = chart.metric(traj.q[k])
        out[k] = 0.5 * mass * float(traj.qdot[k] @ g @ traj.qdot[k])
    return out


# -- nonholonomic variations --------------------------------------------------


@dataclass
class VariationRun:
    """Closure-defect solve along a base trajectory.

    ``delta_b`` is the difference between the nonholonomic image of the
    flat-space variation and the holonomic variation ``delta_q``; it starts
    at zero and stays zero exactly when torsion vanishes along the path.
    """

    t: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    delta_q: np.ndarray  # (N, D)
    transport: np.ndarray  # G(t): (N, D, D)
    drive: np.ndarray  # Sigma(t): (N, D, D)
    delta_b: np.ndarray  # (N, D)
    solver: str = "rk4"


def _parse_variation(deltaq, dim, params):
    if isinstance(deltaq, (list, tuple)):
        exprs = [e if isinstance(e, Expression) else Expression(str(e)) for e in deltaq]
    else:
        raise ValidationError("deltaq must be a sequence of D expressions in t")
    if len(exprs) != dim:
        raise ValidationError(f"deltaq needs {dim} components, got {len(exprs)}")
    allowed = {"t"} | set(params)
    for e in exprs:
        for ident in e.free_names:
            if ident not in allowed:
                raise ValidationError(
                    f"variation expression {e.source!r} uses unknown name {ident!r}"
                )

    def fn(t):
        env = dict(params)
        env["t"] = float(t)
        return np.array([float(e(env)) for e in exprs])

    return fn


def _hermite(t, tk, h, qk, vk, qk1, vk1):
    """Cubic Hermite interpolation of q (and its derivative) inside one step."""
    s = (t - tk) / h
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    q = h00 * qk + h10 * h * vk + h01 * qk1 + h11 * h * vk1
    d00 = 6 * s**2 - 6 * s
    d10 = 3 * s**2 - 4 * s + 1
    d01 = -6 * s**2 + 6 * s
    d11 = 3 * s**2 - 2 * s
    v = (d00 * qk + d10 * h * vk + d01 * qk1 + d11 * h * vk1) / h
    return q, v


def variation_matrices(chart: Chart, q, qdot):
    """Transport matrix G^mu_lam = Gamma_{lam nu}^mu qdot^nu and torsion drive
    Sigma^mu_nu = 2 S_{lam nu}^mu qdot^lam at one phase point."""
    gamma = affine_connection(chart, q)
    S = 0.5 * (gamma - gamma.transpose(1, 0, 2))
    G = np.einsum("lnm,n->ml", gamma, qdot)
    Sigma = 2.0 * np.einsum("lnm,l->mn", S, qdot)
    return G, Sigma


def solve_variation_ode(G_fn, Sigma_fn, deltaq_fn, t_grid):
    """RK4 solve of d(delta_b)/dt = -G delta_b + Sigma delta_q, delta_b(ta)=0."""
    n = len(t_grid)
    G0, S0 = G_fn(t_grid[0]), Sigma_fn(t_grid[0])
    D = G0.shape[0]
    db = np.zeros((n, D))

    def rhs(t, b):
        return -G_fn(t) @ b + Sigma_fn(t) @ deltaq_fn(t)

    for k in range(n - 1):
        h = t_grid[k + 1] - t_grid[k]
        tk = t_grid[k]
        b = db[k]
        k1 = rhs(tk, b)
        k2 = rhs(tk + 0.5 * h, b + 0.5 * h * k1)
        k3 = rhs(tk + 0.5 * h, b + 0.5 * h * k2)
        k4 = rhs(tk + h, b + h * k3)
        db[k + 1] = b + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return db


def nonholonomic_variation(chart: Chart, base: Trajectory, deltaq, params=None) -> VariationRun:
    """Solve the closure-defect ODE along ``base`` for a variation field.

    ``deltaq`` is a sequence of D expressions in the time variable ``t``
    (chart params are available too) vanishing at both endpoints.
    """
    if len(base) < 2:
        raise GridMismatchError("base trajectory needs at least two samples")
    steps = np.diff(base.t)
    if np.max(np.abs(steps - steps[0])) > 1e-12 * max(1.0, abs(steps[0])):
        raise GridMismatchError("base trajectory must be uniformly sampled")
    env_params = dict(chart.params)
    env_params.update(params or {})
    dq_fn = _parse_variation(deltaq, chart.dim, env_params)

    scale = max(1.0, float(np.max(np.abs([dq_fn(t) for t in base.t]))))
    for t_end in (base.t[0], base.t[-1]):
        if np.max(np.abs(dq_fn(t_end))) > 1e-9 * scale:
            raise ValidationError(
                f"variation must vanish at the endpoints; got {dq_fn(t_end)} at t={t_end}"
            )

    n = len(base)
    D = chart.dim
    G_samples = np.empty((n, D, D))
    S_samples = np.empty((n, D, D))
    dq_samples = np.empty((n, D))
    for k in range(n):
        G_samples[k], S_samples[k] = variation_matrices(chart, base.q[k], base.qdot[k])
        dq_samples[k] = dq_fn(base.t[k])

    def interp_state(t):
        k = min(int((t - base.t[0]) / steps[0]), n - 2)
        return _hermite(
            t, base.t[k], steps[0], base.q[k], base.qdot[k], base.q[k + 1], base.qdot[k + 1]
        )

    def G_fn(t):
        q, v = interp_state(t)
        return variation_matrices(chart, q, v)[0]

    def Sigma_fn(t):
        q, v = interp_state(t)
        return variation_matrices(chart, q, v)[1]

    db = solve_variation_ode(G_fn, Sigma_fn, dq_fn, base.t)
    return VariationRun(
        t=base.t.copy(),
        q=base.q.copy(),
        qdot=base.qdot.copy(),
        delta_q=dq_samples,
        transport=G_samples,
        drive=S_samples,
        delta_b=db,
        solver="rk4",
    )


def closure_defect_by_quadrature(chart: Chart, base: Trajectory, deltaq, params=None):
    """Independent solver: delta_b(t) = int U(t,t') Sigma(t') delta_q(t') dt'.

    The ordered exponential U is a product of per-step Magnus factors
    exp(-G(t_mid) h); the time integral uses the trapezoid rule on the base
    grid.  Errors are O(h^2), independent of the RK4 route.
    """
    if len(base) < 2:
        raise GridMismatchError("base trajectory needs at least two samples")
    env_params = dict(chart.params)
    env_params.update(params or {})
    dq_fn = _parse_variation(deltaq, chart.dim, env_params)
    n = len(base)
    D = chart.dim
    steps = np.diff(base.t)

    integrand = np.empty((n, D))
    for k in range(n):
        _, Sigma = variation_matrices(chart, base.q[k], base.qdot[k])
        integrand[k] = Sigma @ dq_fn(base.t[k])

    # step propagators exp(-G(t_mid) h), built from Hermite-interpolated states
    props = np.empty((n - 1, D, D))
    for k in range(n - 1):
        t_mid = 0.5 * (base.t[k] + base.t[k + 1])
        qm, vm = _hermite(
            t_mid, base.t[k], steps[k], base.q[k], base.qdot[k], base.q[k + 1], base.qdot[k + 1]
        )
        G_mid, _ = variation_matrices(chart, qm, vm)
        props[k] = expm(-G_mid * steps[k])

    db = np.zeros((n, D))
    # running trapezoid: db_{k+1} = P_k (db_k + h/2 f_k) + h/2 f_{k+1}
    for k in range(n - 1):
        db[k + 1] = props[k] @ (db[k] + 0.5 * steps[k] * integrand[k]) + 0.5 * steps[
            k
        ] * integrand[k + 1]
    return db


# -- torsion-modified Euler-Lagrange residual ---------------------------------


def torsion_el_residual(chart: Chart, traj: Trajectory, mass: float = 1.0):
    """Residual of the torsion-modified Euler-Lagrange equation along a path.

    Evaluates dL/dq - d/dt dL/dqdot - 2 S_{lam mu}^nu qdot^mu dL/dqdot^nu for
    the kinetic Lagrangian; the time derivative uses 5-point central
    differences, so the first and last two samples are dropped.

    Returns ``(t_interior, residuals)`` with residuals of shape (N-4, D).
    """
    n = len(traj)
    if n < 7:
        raise SamplingError("need at least 7 uniform samples for the 5-point stencil")
    steps = np.diff(traj.t)
    if np.max(np.abs(steps - steps[0])) > 1e-12 * max(1.0, abs(steps[0])):
        raise GridMismatchError("trajectory must be uniformly sampled")
    h = steps[0]
    D = chart.dim

    p = np.empty((n, D))  # dL/dqdot_lam = M g_lamnu qdot^nu
    dLdq = np.empty((n, D))  # dL/dq_lam = (M/2) d_lam g_munu qdot qdot
    torsion_force = np.empty((n, D))
    for k in range(n):
        g, dg = chart.metric_with_derivatives(traj.q[k], order=1)
        v = traj.qdot[k]
        p[k] = mass * g @ v
        dLdq[k] = 0.5 * mass * np.einsum("mnl,m,n->l", dg, v, v)
        S = torsion_tensor(chart, traj.q[k])
        torsion_force[k] = 2.0 * np.einsum("lmn,m,n->l", S, v, p[k])

    dp = (-p[4:] + 8.0 * p[3:-1] - 8.0 * p[1:-3] + p[:-4]) / (12.0 * h)
    interior = slice(2, n - 2)
    residual = dLdq[interior] - dp - torsion_force[interior]
    return traj.t[interior], residual


def commutation_defect(chart: Chart, q, qdot, deltaq) -> np.ndarray:
    """Predicted failure of d/dt and variation to commute: 2 S_{mu nu}^lam qdot^mu deltaq^nu."""
    S = torsion_tensor(chart, q)
    return 2.0 * np.einsum("mnl,m,n->l", S, np.asarray(qdot, float), np.asarray(deltaq, float))
