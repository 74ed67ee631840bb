"""Pure-numpy fallback for the compiled inner loops.

Same call signatures and semantics as qel._fastcore; used when the extension
is unavailable or when QEL_FORCE_FALLBACK is set.
"""

import numpy as np


def _lagrange_weights(s):
    # cubic Lagrange basis on nodes {0,1,2,3}, vectorized over s
    w0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0
    w1 = s * (s - 2.0) * (s - 3.0) / 2.0
    w2 = -s * (s - 1.0) * (s - 3.0) / 2.0
    w3 = s * (s - 1.0) * (s - 2.0) / 6.0
    return np.stack([w0, w1, w2, w3], axis=-1)


def bicubic_many(values, r_min, z_min, dr, dz, r_max, z_max, rq, zq, out):
    nr, nz = values.shape
    inside = (rq >= r_min) & (rq <= r_max) & (zq >= z_min) & (zq <= z_max)
    out[~inside] = 0.0
    r = rq[inside]
    z = zq[inside]
    ib = np.clip(np.floor((r - r_min) / dr).astype(np.intp) - 1, 0, nr - 4)
    jb = np.clip(np.floor((z - z_min) / dz).astype(np.intp) - 1, 0, nz - 4)
    wr = _lagrange_weights((r - r_min) / dr - ib)
    wz = _lagrange_weights((z - z_min) / dz - jb)
    acc = np.zeros(r.shape)
    for a in range(4):
        row = np.zeros(r.shape)
        for b in range(4):
            row += wz[:, b] * values[ib + a, jb + b]
        acc += wr[:, a] * row
    out[inside] = acc


def farfield_sum(rb, zb, rs, zs, gw, jtab, beta_max, out, chunk=4096):
    m = jtab.shape[0]
    scale = (m - 1) / beta_max
    for lo in range(0, rs.shape[0], chunk):
        hi = min(lo + chunk, rs.shape[0])
        zeta = zb[:, None] - zs[None, lo:hi]
        a = rb[:, None] ** 2 + rs[None, lo:hi] ** 2 + zeta**2
        beta = 2.0 * rb[:, None] * rs[None, lo:hi] / a
        t = beta * scale
        idx = np.minimum(t.astype(np.intp), m - 2)
        t = t - idx
        jval = jtab[idx] * (1.0 - t) + jtab[idx + 1] * t
        contrib = gw[None, lo:hi] * jval / (a * np.sqrt(a))
        if lo == 0:
            out[:] = contrib.sum(axis=1)
        else:
            out += contrib.sum(axis=1)
