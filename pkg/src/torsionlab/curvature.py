"""Curvature tensors: covariant curls of the two connections.

Sign convention (fixed once, used everywhere):

    R_{mu nu lam}^kap = d_mu G_{nu lam}^kap - d_nu G_{mu lam}^kap
                        - (G_{mu lam}^sig G_{nu sig}^kap - G_{nu lam}^sig G_{mu sig}^kap)

applied to the affine connection (Cartan curvature) or to the Christoffel
symbols (Riemann curvature).  With this convention the curvature scalar of a
round sphere of radius r comes out +2/r^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charts import Chart
from .connection import connection_derivatives
from .errors import ValidationError


def _curl(conn: np.ndarray, dconn: np.ndarray) -> np.ndarray:
    """Covariant curl of a connection, R[mu, nu, lam, kap]."""
    dterm = np.einsum("nlkm->mnlk", dconn) - np.einsum("mlkn->mnlk", dconn)
    comm = np.einsum("mls,nsk->mnlk", conn, conn) - np.einsum("nls,msk->mnlk", conn, conn)
    return dterm - comm


def cartan_curvature(chart: Chart, q) -> np.ndarray:
    """Curvature of the affine (triad) connection, R[mu, nu, lam, kap]."""
    bundle, dgamma, _ = connection_derivatives(chart, q)
    return _curl(bundle.gamma, dgamma)


def riemann_curvature(chart: Chart, q) -> np.ndarray:
    """Curvature of the Riemann (Christoffel) connection, Rbar[mu, nu, lam, kap]."""
    bundle, _, dchris2 = connection_derivatives(chart, q)
    return _curl(bundle.gamma_bar, dchris2)


def ricci_scalar_einstein(chart: Chart, q, source="riemann"):
    """Ricci tensor, curvature scalar and Einstein tensor from a chosen curvature.

    ``source`` is "riemann" (Christoffel curl) or "cartan" (affine curl).
    Returns ``(ricci, scalar, einstein)`` with R_nulam = R_{mu nu lam}^mu,
    R = g^{nulam} R_nulam, G = R_nulam - g_nulam R / 2.
    """
    if source not in ("riemann", "cartan"):
        raise ValidationError(f"source must be 'riemann' or 'cartan', got {source!r}")
    bundle, dgamma, dchris2 = connection_derivatives(chart, q)
    if source == "riemann":
        R4 = _curl(bundle.gamma_bar, dchris2)
    else:
        R4 = _curl(bundle.gamma, dgamma)
    ricci = np.einsum("anla->nl", R4)
    scalar = float(np.einsum("nl,nl->", bundle.inverse_metric, ricci))
    einstein = ricci - 0.5 * bundle.metric * scalar
    return ricci, scalar, einstein


@dataclass
class CurvatureBundle:
    """Curvature-level tensors at one point (Ricci family from the chosen source)."""

    q: np.ndarray
    cartan: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    einstein: np.ndarray
    source: str


def curvature_bundle(chart: Chart, q, source="riemann") -> CurvatureBundle:
    if source not in ("riemann", "cartan"):
        raise ValidationError(f"source must be 'riemann' or 'cartan', got {source!r}")
    bundle, dgamma, dchris2 = connection_derivatives(chart, q)
    cartan = _curl(bundle.gamma, dgamma)
    riemann = _curl(bundle.gamma_bar, dchris2)
    R4 = riemann if source == "riemann" else cartan
    ricci = np.einsum("anla->nl", R4)
    scalar = float(np.einsum("nl,nl->", bundle.inverse_metric, ricci))
    einstein = ricci - 0.5 * bundle.metric * scalar
    return CurvatureBundle(
        q=np.asarray(q, dtype=float),
        cartan=cartan,
        riemann=riemann,
        ricci=ricci,
        scalar=scalar,
        einstein=einstein,
        source=source,
    )


@dataclass
class GeometryPoint:
    """Every local tensor at one point: connection and curvature bundles."""

    q: np.ndarray
    connection: object
    curvature: CurvatureBundle


def geometry_point(chart: Chart, q, source="riemann") -> GeometryPoint:
    from .connection import connection_bundle

    return GeometryPoint(
        q=np.asarray(q, dtype=float),
        connection=connection_bundle(chart, q),
        curvature=curvature_bundle(chart, q, source=source),
    )


def curvature_relation_check(chart: Chart, q) -> float:
    """Max-norm residual of the Cartan/Riemann curvature decomposition.

    Checks R = Rbar + Dbar_mu K_nu - Dbar_nu K_mu - [K_mu, K_nu] with the
    contortion matrices K_mu = K_{mu lam}^kap and Christoffel covariant
    derivatives; both curvatures are computed independently.
    """
    bundle, dgamma, dchris2 = connection_derivatives(chart, q)
    g, invg = bundle.metric, bundle.inverse_metric
    chris2 = bundle.gamma_bar
    cartan = _curl(bundle.gamma, dgamma)
    riemann = _curl(chris2, dchris2)

    # dK needs dS (from dgamma), dg and d(invg)
    _, dg = chart.metric_with_derivatives(q, order=1)
    dinvg = -np.einsum("ma,abs,bn->mns", invg, dg, invg)
    dS = 0.5 * (dgamma - np.einsum("klms->lkms", dgamma))
    S = bundle.torsion
    dSl = np.einsum("abts,tc->abcs", dS, g) + np.einsum("abt,tcs->abcs", S, dg)
    dKl = dSl - np.einsum("bcas->abcs", dSl) + np.einsum("cabs->abcs", dSl)
    Kl = bundle.contortion
    Kmix = bundle.contortion_mixed
    dKmix = np.einsum("abls,lc->abcs", dKl, invg) + np.einsum("abl,lcs->abcs", Kl, dinvg)

    # Dbar_mu K_{nu lam}^kap
    DK = (
        np.einsum("nlkm->mnlk", dKmix)
        - np.einsum("mns,slk->mnlk", chris2, Kmix)
        - np.einsum("mls,nsk->mnlk", chris2, Kmix)
        + np.einsum("msk,nls->mnlk", chris2, Kmix)
    )
    comm = np.einsum("mls,nsk->mnlk", Kmix, Kmix) - np.einsum("nls,msk->mnlk", Kmix, Kmix)
    rhs = riemann + DK - np.einsum("nmlk->mnlk", DK) - comm
    return float(np.max(np.abs(cartan - rhs)))
