"""Independent reference constructions shared by the test modules."""
import numpy as np


def green_table_L4(p, n):
    """Green's-function matrix and source for L = 4, written out row by row."""
    w, U, gp, k, chi = p.omega_c, p.U, p.gamma_p, p.kappa, p.chi
    M = np.array([
        [w + 1j * chi, U - 1j * k, 0, 0],
        [2j * gp, w + U + 1j * (3 * chi - k), U - 3j * k, 0],
        [0, 6j * gp, w + 2 * U + 1j * (5 * chi - 4 * k), U - 5j * k],
        [0, 0, 12j * gp, w + 3 * U + 1j * (7 * chi - 9 * k)],
    ], dtype=complex)
    s = np.array([n[0], 2 * n[1], 3 * n[2], 4 * n[3]], dtype=float)
    return M, s


MOMENT_ORDER_L4 = [(0, 1), (1, 0), (1, 1), (1, 2), (2, 1), (2, 2),
                   (2, 3), (3, 2), (3, 3), (3, 4), (4, 3), (4, 4)]


def moment_table_L4(p):
    """Moment equations ``dx/dt = D x + b`` for L = 4, in ``MOMENT_ORDER_L4``."""
    w, U, gp, k, chi = p.omega_c, p.U, p.gamma_p, p.kappa, p.chi
    pos = {pair: i for i, pair in enumerate(MOMENT_ORDER_L4)}
    D = np.zeros((12, 12), dtype=complex)
    b = np.zeros(12, dtype=complex)

    def put(row, col, value):
        D[pos[row], pos[col]] = value

    put((0, 1), (0, 1), -1j * w + chi)
    put((0, 1), (1, 2), -1j * U - k)
    put((1, 0), (1, 0), 1j * w + chi)
    put((1, 0), (2, 1), 1j * U - k)
    put((1, 1), (1, 1), 2 * chi)
    put((1, 1), (2, 2), -2 * k)
    b[pos[(1, 1)]] = gp
    put((1, 2), (1, 2), -1j * w - 1j * U + 3 * chi - k)
    put((1, 2), (2, 3), -1j * U - 3 * k)
    put((1, 2), (0, 1), 2 * gp)
    put((2, 1), (2, 1), 1j * w + 1j * U + 3 * chi - k)
    put((2, 1), (3, 2), 1j * U - 3 * k)
    put((2, 1), (1, 0), 2 * gp)
    put((2, 2), (2, 2), 4 * chi - 2 * k)
    put((2, 2), (3, 3), -4 * k)
    put((2, 2), (1, 1), 4 * gp)
    put((2, 3), (2, 3), -1j * w - 2j * U + 5 * chi - 4 * k)
    put((2, 3), (3, 4), -1j * U - 5 * k)
    put((2, 3), (1, 2), 6 * gp)
    put((3, 2), (3, 2), 1j * w + 2j * U + 5 * chi - 4 * k)
    put((3, 2), (4, 3), 1j * U - 5 * k)
    put((3, 2), (2, 1), 6 * gp)
    put((3, 3), (3, 3), 6 * chi - 6 * k)
    put((3, 3), (4, 4), -6 * k)
    put((3, 3), (2, 2), 9 * gp)
    put((3, 4), (3, 4), -1j * w - 3j * U + 7 * chi - 9 * k)
    put((3, 4), (2, 3), 12 * gp)
    put((4, 3), (4, 3), 1j * w + 3j * U + 7 * chi - 9 * k)
    put((4, 3), (3, 2), 12 * gp)
    put((4, 4), (4, 4), 8 * chi - 12 * k)
    put((4, 4), (3, 3), 16 * gp)
    return D, b


def dyson_roots(system, sigma, newton_steps=4):
    """Zeros of ``1 - sigma G(w)``.

    The degree-L polynomial ``det(w - M) (1 - sigma G(w))`` is sampled on a
    circle, its monomial coefficients recovered and rooted with
    ``np.roots``; each root is then polished by Newton steps on
    ``1 - sigma G`` with the analytic derivative.
    """
    L = system.order
    eye = np.eye(L)
    scale = 1.0 + np.abs(system.M).max() + abs(sigma) * np.abs(system.s).max()
    nodes = scale * np.exp(2j * np.pi * (np.arange(L + 1) + 0.25) / (L + 1))
    vals = [np.linalg.det(w * eye - system.M) * (1 - sigma * system.green(w)) for w in nodes]
    coeffs = np.linalg.solve(np.vander(nodes, L + 1), vals)
    roots = np.roots(coeffs)
    e1 = eye[0]
    for _ in range(newton_steps):
        polished = []
        for r in roots:
            R = np.linalg.inv(r * eye - system.M)
            g = e1 @ R @ system.s
            dg = -(e1 @ R @ R @ system.s)
            step = (1 - sigma * g) / (-sigma * dg) if sigma != 0 else 0.0
            polished.append(r - step)
        roots = np.array(polished)
    return roots
