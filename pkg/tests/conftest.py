import numpy as np

from sdymred.catalog import ExpProductField, flat_triple, frame_generators
from sdymred.frames1p1 import CoefficientSet1p1


def connection_stack(grid, times, generators, seed=0, amp=0.5, omega=1.0):
    """``(g, A, B, D)`` with ``A = g_x g^-1`` etc.; exact zero-curvature data."""
    return flat_triple(grid, times, generators, seed, amp, omega)


def frame_coefficients(A, B, D):
    """Read ``k, sigma, tau, m1..3, omega1..3`` off 3x3 frame-pattern matrices."""
    def read(M):
        return M[..., 0, 1], -M[..., 0, 2], M[..., 1, 2]

    k, sigma, tau = read(A)
    m3, m2, m1 = read(B)
    w3, w2, w1 = read(D)
    return dict(k=k, sigma=sigma, tau=tau, m1=m1, m2=m2, m3=m3,
                omega1=w1, omega2=w2, omega3=w3)


def rotation_coefficients(grid, beta, seed=0, amp=0.5):
    """Compatible coefficients ``C = R_x R^-1``, ``G = R_t R^-1`` of a rotation field."""
    X, T = grid.mesh()
    R = ExpProductField.random(np.random.default_rng(seed), grid, frame_generators(beta), amp=amp)
    Rv, d = R.evaluate(X, T)
    Ri = np.linalg.inv(Rv)
    C, G = d["x"] @ Ri, d["y"] @ Ri
    c = CoefficientSet1p1(C[..., 0, 1], -C[..., 0, 2], C[..., 1, 2],
                          G[..., 1, 2], -G[..., 0, 2], G[..., 0, 1], beta=beta)
    return c, Rv


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
