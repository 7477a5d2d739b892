"""Independent reference computations shared by the test modules."""

import numpy as np


def numeric_hessian(f, theta, steps):
    """Central-difference Hessian of a scalar function."""
    theta = np.asarray(theta, dtype=float)
    k = len(theta)
    h = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i] = steps[i]
            ej[j] = steps[j]
            val = (f(theta + ei + ej) - f(theta + ei - ej) - f(theta - ei + ej) + f(theta - ei - ej)) / (
                4.0 * steps[i] * steps[j]
            )
            h[i, j] = h[j, i] = val
    return h


def standard_errors(loglik, theta, rel_step=1e-3):
    """Asymptotic standard errors from the observed information at ``theta``."""
    theta = np.asarray(theta, dtype=float)
    steps = rel_step * np.maximum(np.abs(theta), 1.0)
    info = -numeric_hessian(loglik, theta, steps)
    return np.sqrt(np.diag(np.linalg.inv(info)))


def grid_minimize(objective, center, half_width, step):
    """Exhaustive search of a 2-D objective on a square lattice."""
    offsets = np.arange(-half_width, half_width + step / 2, step)
    xs = center[0] + offsets
    ys = center[1] + offsets
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    values = objective(np.stack([gx.ravel(), gy.ravel()], axis=1))
    k = int(np.argmin(values))
    return np.array([gx.ravel()[k], gy.ravel()[k]])
