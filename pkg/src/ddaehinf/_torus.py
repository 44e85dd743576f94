"""Grid search plus Newton polish for smooth maxima over the torus [0, 2pi)^d."""
import itertools

import numpy as np

TWO_PI = 2.0 * np.pi


def torus_grid(d, density):
    if d == 0:
        return np.zeros((1, 0))
    g = np.arange(density) * (TWO_PI / density)
    return np.array(list(itertools.product(g, repeat=d)))


def _fd_hessian(grad, theta, h=1e-6):
    d = theta.size
    H = np.empty((d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        H[:, k] = (grad(theta + e) - grad(theta - e)) / (2 * h)
    return 0.5 * (H + H.T)


def newton_polish(fun, grad, theta, tol=1e-12, maxit=50):
    """Maximize ``fun`` near ``theta`` by safeguarded Newton on ``grad = 0``.

    Falls back to gradient steps with backtracking when the Hessian is not
    negative definite.  Returns ``(theta, value, grad_norm)``.
    """
    theta = np.array(theta, dtype=float)
    f = fun(theta)
    g = grad(theta)
    for _ in range(maxit):
        gn = np.linalg.norm(g)
        if gn <= tol * max(1.0, abs(f)):
            break
        H = _fd_hessian(grad, theta)
        w = np.linalg.eigvalsh(H)
        if w.max() < 0:
            step = -np.linalg.solve(H, g)
        else:
            # not locally concave: scaled gradient ascent
            step = g / max(1.0, np.abs(w).max())
        t = 1.0
        improved = False
        for _ in range(40):
            cand = theta + t * step
            fc = fun(cand)
            if fc >= f - 1e-15 * max(1.0, abs(f)):
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        theta, f = cand, fc
        g = grad(theta)
    return np.mod(theta, TWO_PI), f, float(np.linalg.norm(g))


def torus_maximize(fun_batch, fun, grad, d, density=24, n_polish=3, tol=1e-12):
    """Global-then-local maximization of a smooth function on the torus.

    ``fun_batch`` evaluates a stack of angle vectors at once.  The best
    ``n_polish`` grid points are refined by :func:`newton_polish` and the
    best result is kept.  Returns ``(theta, value, grad_norm, grid_max)``.
    """
    grid = torus_grid(d, density)
    vals = fun_batch(grid)
    grid_max = float(np.max(vals))
    if d == 0:
        return np.zeros(0), grid_max, 0.0, grid_max
    order = np.argsort(vals)[::-1][:n_polish]
    best = (grid[order[0]], grid_max, np.inf)
    for i in order:
        th, f, gn = newton_polish(fun, grad, grid[i], tol=tol)
        if f > best[1] or (f >= best[1] - 1e-14 * abs(f) and gn < best[2]):
            best = (th, f, gn)
    return best[0], float(best[1]), best[2], grid_max
