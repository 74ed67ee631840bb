"""Quadrature rules for packet integrals.

The quadrupole kernel xy/(x^2+y^2)^2 is unbounded at the packet center, so
packet scores are integrated in polar coordinates: with dA = R dR dtheta the
kernel contributes cos(theta) sin(theta) / R, which is bounded against any
integrand vanishing linearly at the center.  The square packet is covered by
octant panels (the ray length R_max(theta) has kinks on the diagonals), with
Gauss-Legendre nodes in both variables.
"""

from dataclasses import dataclass

import numpy as np


def gl_panel(a, b, n):
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


@dataclass
class PolarRule:
    """Flattened polar quadrature: nodes (x, y), measure w = dtheta dR."""

    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    radius: np.ndarray
    cos_t: np.ndarray
    sin_t: np.ndarray


def _polar_panels(lam, theta_panels, n_theta, n_radius):
    xs, ys, ws, rs, cs, ss = [], [], [], [], [], []
    for a, b in theta_panels:
        t, wt = gl_panel(a, b, n_theta)
        ct, st = np.cos(t), np.sin(t)
        rmax = lam / np.maximum(np.abs(ct), np.abs(st))
        xi, wx = gl_panel(0.0, 1.0, n_radius)
        radius = rmax[:, None] * xi[None, :]
        weight = (wt * rmax)[:, None] * wx[None, :]
        xs.append((radius * ct[:, None]).ravel())
        ys.append((radius * st[:, None]).ravel())
        ws.append(weight.ravel())
        rs.append(radius.ravel())
        cs.append(np.broadcast_to(ct[:, None], radius.shape).ravel())
        ss.append(np.broadcast_to(st[:, None], radius.shape).ravel())
    return PolarRule(np.concatenate(xs), np.concatenate(ys), np.concatenate(ws),
                     np.concatenate(rs), np.concatenate(cs), np.concatenate(ss))


def polar_square(lam, n_theta=20, n_radius=32):
    """Polar rule covering the full four-quadrant square packet |x|,|y| < lam."""
    edges = np.arange(9) * (np.pi / 4.0)
    panels = list(zip(edges[:-1], edges[1:]))
    return _polar_panels(lam, panels, n_theta, n_radius)


def polar_diagonal_sectors(lam, delta_c, n_theta=16, n_radius=32):
    """Polar rule on the four diagonal sectors | |y|/|x| - 1 | < delta_c."""
    if not 0.0 < delta_c < 1.0:
        raise ValueError("delta_c must lie in (0, 1)")
    ta = np.arctan(1.0 - delta_c)
    tb = np.arctan(1.0 + delta_c)
    quarter = np.pi / 4.0
    panels = []
    for k, (lo, hi) in enumerate([(ta, tb), (np.pi - tb, np.pi - ta),
                                  (np.pi + ta, np.pi + tb),
                                  (2.0 * np.pi - tb, 2.0 * np.pi - ta)]):
        mid = (2 * k + 1) * quarter  # diagonal inside the sector, R_max kink
        panels.extend([(lo, mid), (mid, hi)])
    return _polar_panels(lam, panels, n_theta, n_radius)


@dataclass
class TensorRule:
    """Flattened tensor-product rule on a square window."""

    x: np.ndarray
    y: np.ndarray
    w: np.ndarray


def tensor_window(half, n_panels=4, n_gl=24):
    """Composite Gauss-Legendre rule on [-half, half]^2."""
    edges = np.linspace(-half, half, n_panels + 1)
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = gl_panel(a, b, n_gl)
        xs.append(x)
        ws.append(w)
    x1 = np.concatenate(xs)
    w1 = np.concatenate(ws)
    xx, yy = np.meshgrid(x1, x1, indexing="ij")
    wij = np.outer(w1, w1)
    return TensorRule(xx.ravel(), yy.ravel(), wij.ravel())


def golden_section(fn, a, b, iters=80):
    """Minimize a unimodal function on [a, b]; returns (argmin, min)."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    if fc <= fd:
        return c, fc
    return d, fd
