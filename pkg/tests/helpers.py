import numpy as np

from ddaehinf import ControllerBlock, DdaeSystem, PlantBlock, closed_loop_parameterization, interconnect

K1 = np.array([0.4712, 0.5037, 0.6023])
K2 = np.array([0.7580, 1.2247, 0.6626])


def two_delay(tau1=1.0, tau2=2.0):
    """x1' = -0.1 x1 - x2 + 2w, 0 = x1 - x2 + 0.25 x2(t-tau1) - 0.5 x2(t-tau2) + w, z = x2."""
    E = np.diag([1.0, 0.0])
    A0 = np.array([[-0.1, -1.0], [1.0, -1.0]])
    A1 = np.array([[0.0, 0.0], [0.0, 0.25]])
    A2 = np.array([[0.0, 0.0], [0.0, -0.5]])
    return DdaeSystem.from_terms(E, [(A0, 0.0), (A1, tau1), (A2, tau2)], [[2.0], [1.0]], [[0.0, 1.0]])


def two_delay_T(lam, tau1=1.0, tau2=2.0):
    lam = np.asarray(lam, dtype=complex)
    return (lam + 2.1) / ((lam + 0.1) * (1 - 0.25 * np.exp(-lam * tau1) + 0.5 * np.exp(-lam * tau2)) + 1)


def demo_plant():
    A = np.array([[-0.08, -0.03, 0.2], [0.2, -0.04, -0.005], [-0.06, 0.2, -0.07]])
    B = np.array([[-0.1], [-0.2], [0.1]])
    I = np.eye(3)
    return PlantBlock(A=A, B_w=I, B_u=B, C_z=I, C_y=I, input_delay=5.0)


def demo_closed_loop(k):
    return interconnect(demo_plant(), ControllerBlock.static(np.atleast_2d(k)))


def demo_psys():
    return closed_loop_parameterization(demo_plant(), ControllerBlock.static(np.zeros((1, 3))))


def random_retarded(rng, n=None, m=None, margin=0.6):
    """Random stable retarded system (E = I) with up to two delays.

    A_0 = -c I + skew is normal, so delayed terms with total norm below c
    cannot destabilize it for any delays.
    """
    n = n or int(rng.integers(1, 5))
    m = int(rng.integers(0, 3)) if m is None else m
    c = rng.uniform(0.3, 2.0)
    S = rng.standard_normal((n, n))
    A0 = -c * np.eye(n) + (S - S.T)
    terms = [(A0, 0.0)]
    for _ in range(m):
        Ai = rng.standard_normal((n, n))
        Ai *= margin * c / m / max(np.linalg.norm(Ai, 2), 1e-12)
        terms.append((Ai, float(rng.uniform(0.2, 2.0))))
    nw = int(rng.integers(1, 3))
    nz = int(rng.integers(1, 3))
    return DdaeSystem.from_terms(np.eye(n), terms, rng.standard_normal((n, nw)), rng.standard_normal((nz, n)))


def fd_gradient(fun, p, h=1e-6):
    p = np.asarray(p, dtype=float)
    g = np.empty(p.size)
    for k in range(p.size):
        e = np.zeros(p.size)
        e[k] = h
        g[k] = (fun(p + e) - fun(p - e)) / (2 * h)
    return g


# acceptance outcomes, printed in the terminal summary by conftest.py
ACCEPTANCE = {}


def record(criterion, ok, detail):
    ACCEPTANCE[criterion] = (bool(ok), detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok
