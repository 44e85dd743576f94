"""Small dense linear-algebra helpers used across modules."""
import numpy as np

EPS = np.finfo(float).eps
# reciprocal condition number below which a matrix is treated as singular
SINGULAR_RCOND = 1e3 * EPS


def rcond(M):
    """Reciprocal 2-norm condition number; works on stacks of square matrices."""
    M = np.asarray(M)
    if M.shape[-1] == 0:
        return np.ones(M.shape[:-2]) if M.ndim > 2 else 1.0
    s = np.linalg.svd(M, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = s[..., -1] / s[..., 0]
    return np.where(s[..., 0] == 0, 0.0, r)


def top_singular(T):
    """Largest singular value of ``T`` with its left/right singular vectors.

    Returns ``(sigma, u, v, gap)`` where ``T v = sigma u`` and ``gap`` is
    ``sigma_1 - sigma_2`` (``sigma_1`` itself for rank-one shapes).
    """
    if T.size == 0:
        return 0.0, np.zeros(T.shape[0], complex), np.zeros(T.shape[1], complex), 0.0
    U, s, Vh = np.linalg.svd(T)
    gap = s[0] - s[1] if s.size > 1 else s[0]
    return float(s[0]), U[:, 0], Vh[0].conj(), float(gap)


def sigma_max(T):
    """Largest singular value, vectorised over leading axes."""
    T = np.asarray(T)
    if T.shape[-1] == 0 or T.shape[-2] == 0:
        return np.zeros(T.shape[:-2])
    if T.shape[-1] == 1 or T.shape[-2] == 1:
        return np.sqrt(np.sum(np.abs(T) ** 2, axis=(-2, -1)))
    return np.linalg.svd(T, compute_uv=False)[..., 0]


def null_vectors(M):
    """Right and left unit null-vector estimates of a (nearly) singular matrix."""
    U, s, Vh = np.linalg.svd(M)
    return Vh[-1].conj(), U[:, -1], s
