"""Pure-Python reference kernels, used when the compiled extension is unavailable."""

import numpy as np


def factor_tridiagonal(lower, diag, upper):
    """Thomas factorization without pivoting; returns ``(multipliers, inverse pivots)``."""
    n = len(diag)
    mult = [0.0] * n
    inv = [0.0] * n
    piv = float(diag[0])
    if piv == 0.0:
        raise ZeroDivisionError("zero pivot at row 0")
    inv[0] = 1.0 / piv
    for i in range(1, n):
        mult[i] = lower[i] * inv[i - 1]
        piv = diag[i] - mult[i] * upper[i - 1]
        if piv == 0.0:
            raise ZeroDivisionError(f"zero pivot at row {i}")
        inv[i] = 1.0 / piv
    return np.array(mult), np.array(inv)


def march(mult, inv, upper, rl, rr, expl_lower, expl_diag, expl_upper, explicit, forcing, bnd, out):
    """Same contract as the compiled ``march``; writes into ``out`` in place."""
    m, n = out.shape[0] - 1, out.shape[1]
    mult = mult.tolist()
    inv = inv.tolist()
    upper = upper.tolist()
    if explicit:
        el, ed, eu = expl_lower.tolist(), expl_diag.tolist(), expl_upper.tolist()
    prev = out[0].tolist()
    x = [0.0] * n
    for k in range(m):
        rhs = [p + f for p, f in zip(prev, forcing[k + 1].tolist())]
        if explicit:
            for i in range(1, n - 1):
                rhs[i] += el[i] * prev[i - 1] + ed[i] * prev[i] + eu[i] * prev[i + 1]
        rhs[0] = bnd[k + 1, 0] - rl * rhs[1]
        rhs[n - 1] = bnd[k + 1, 1] - rr * rhs[n - 2]
        for i in range(1, n):
            rhs[i] -= mult[i] * rhs[i - 1]
        x[n - 1] = rhs[n - 1] * inv[n - 1]
        for i in range(n - 2, -1, -1):
            x[i] = (rhs[i] - upper[i] * x[i + 1]) * inv[i]
        out[k + 1] = x
        prev = list(x)
