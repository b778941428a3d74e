"""
kernels.py — Numba-accelerated forward pass and Jacobian of the 3→H→1 network.

Parameter vector layout (P = 5H + 1):
    [0, 3H)        w1, row-major (hidden h, input j) → 3h + j
    [3H, 4H)       hidden biases b1
    [4H, 5H)       hidden→output weights w2
    5H             output bias b2
"""

import numpy as np

try:
    from numba import njit
except ImportError:
    # Fallback when numba is not installed: same algorithms, no JIT.
    def njit(*args, **kwargs):  # type: ignore[misc]
        if args and callable(args[0]):
            return args[0]

        def decorator(fn):
            return fn
        return decorator


@njit(cache=True, nogil=True)
def mlp_forward(theta: np.ndarray, X: np.ndarray, hidden: int) -> np.ndarray:
    """ŷ_i = b2 + Σ_h w2_h · tanh(b1_h + Σ_j w1_hj x_ij)."""
    n = X.shape[0]
    out = np.empty(n, dtype=np.float64)
    b2 = theta[5 * hidden]
    for i in range(n):
        acc = b2
        for h in range(hidden):
            z = theta[3 * hidden + h]
            for j in range(3):
                z += theta[3 * h + j] * X[i, j]
            acc += theta[4 * hidden + h] * np.tanh(z)
        out[i] = acc
    return out


@njit(cache=True, nogil=True)
def mlp_jacobian(theta: np.ndarray, X: np.ndarray, hidden: int) -> np.ndarray:
    """∂ŷ_i/∂θ_p (equal to the residual Jacobian, targets being constant)."""
    n = X.shape[0]
    J = np.zeros((n, 5 * hidden + 1), dtype=np.float64)
    for i in range(n):
        for h in range(hidden):
            z = theta[3 * hidden + h]
            for j in range(3):
                z += theta[3 * h + j] * X[i, j]
            a = np.tanh(z)
            w2 = theta[4 * hidden + h]
            d = w2 * (1.0 - a * a)
            for j in range(3):
                J[i, 3 * h + j] = d * X[i, j]
            J[i, 3 * hidden + h] = d
            J[i, 4 * hidden + h] = a
        J[i, 5 * hidden] = 1.0
    return J
