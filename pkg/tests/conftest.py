import numpy as np
import pytest

from misgp.kernels import cross_kernel, gram_matrix


def dense_posterior(kernel, X, ys, lam, Q):
    """From-scratch mean and variance via a dense solve (test oracle)."""
    X = np.atleast_2d(X)
    K = gram_matrix(kernel, X) + lam * np.eye(len(X))
    kq = cross_kernel(kernel, X, Q)
    mean = kq.T @ np.linalg.solve(K, ys)
    var = np.diag(gram_matrix(kernel, Q)) - np.einsum("ij,ij->j", kq, np.linalg.solve(K, kq))
    return mean, var


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
