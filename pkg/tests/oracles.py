"""Independent reference computations used by several test modules."""

from itertools import combinations, product

import numpy as np


def lasso_by_enumeration(Phi, alpha, mu1):
    """Global minimum of ||Phi x - a||^2 + mu1 ||x||_1 over real x.

    Every support S and sign pattern s gives the stationarity solve
    2 Phi_S^T (Phi_S x_S - a) = -mu1 s; the candidates whose signs agree
    with s are feasible points, and the minimizer is one of them.
    """
    K, N = Phi.shape

    def j1(x):
        r = Phi @ x - alpha
        return r @ r + mu1 * np.abs(x).sum()

    best_x, best = np.zeros(N), j1(np.zeros(N))
    for size in range(1, min(K, N) + 1):
        for S in combinations(range(N), size):
            P = Phi[:, S]
            gram = P.T @ P
            if np.linalg.cond(gram) > 1e10:
                continue
            rhs = P.T @ alpha
            for signs in product((-1.0, 1.0), repeat=size):
                xs = np.linalg.solve(gram, rhs - 0.5 * mu1 * np.array(signs))
                if np.all(np.sign(xs) == signs):
                    x = np.zeros(N)
                    x[list(S)] = xs
                    val = j1(x)
                    if val < best:
                        best_x, best = x, val
    return best_x, best


def random_lasso_instance(rng):
    K = int(rng.integers(2, 7))
    N = int(rng.integers(K + 1, 9))
    Phi = rng.standard_normal((K, N))
    alpha = rng.standard_normal(K)
    mu1 = float(10 ** rng.uniform(-2, 0))
    return Phi, alpha, mu1
