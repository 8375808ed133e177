"""
Explicit finite-difference heat solver used as an independent oracle.

Forward Euler on a uniform (n+1) x (n+1) grid with homogeneous Dirichlet
walls; stable for dt <= 1 / (2 (1/hx^2 + 1/hy^2)).
"""
import math

import numpy as np


def solve_heat_explicit(a1, a2, n, initial, times, safety=0.9):
    """Snapshots u(t_k) for each requested time; `initial(x, y)` is sampled on the grid.

    Returns (xs, ys, snapshots) with snapshots[k, i, j] = u(t_k, xs[i], ys[j]).
    The requested times must be increasing and start at 0.
    """
    xs = np.linspace(0.0, a1, n + 1)
    ys = np.linspace(0.0, a2, n + 1)
    hx, hy = a1 / n, a2 / n
    dt_max = 1.0 / (2.0 * (1.0 / hx ** 2 + 1.0 / hy ** 2))

    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    u = np.asarray(initial(xx, yy), dtype=float)
    u[0, :] = u[-1, :] = u[:, 0] = u[:, -1] = 0.0

    snapshots = [u.copy()]
    for t_prev, t_next in zip(times[:-1], times[1:]):
        interval = t_next - t_prev
        steps = max(1, math.ceil(interval / (safety * dt_max)))
        dt = interval / steps
        mu_x, mu_y = dt / hx ** 2, dt / hy ** 2
        for _ in range(steps):
            inner = u[1:-1, 1:-1]
            u_next = np.zeros_like(u)
            u_next[1:-1, 1:-1] = (
                inner
                + mu_x * (u[2:, 1:-1] - 2.0 * inner + u[:-2, 1:-1])
                + mu_y * (u[1:-1, 2:] - 2.0 * inner + u[1:-1, :-2])
            )
            u = u_next
        snapshots.append(u.copy())
    return xs, ys, np.array(snapshots)
