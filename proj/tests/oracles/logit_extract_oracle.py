"""Fit-and-extract oracle for the multinomial logit route.

Canonical dataset: each of the 9 hard-evidence cause rows repeated 5 times,
effect rows equal to the matching (renormalised) reference table column.
Newton ascent on the soft-target log-likelihood with ridge 1e-8 on slopes,
then column i of the extracted CPT is the softmax at the i-th unit vector.
"""
import numpy as np
from reference_tables import T1

m, n = T1.shape
X = np.repeat(np.eye(n), 5, axis=0)
Z = np.repeat(T1.T, 5, axis=0)
Xd = np.c_[np.ones(len(X)), X]
d = n + 1
reg = 1e-8
pen = np.r_[0.0, np.full(n, reg)]


def probs(B):
    eta = Xd @ B.T  # k x (m-1)
    mx = np.maximum(eta.max(axis=1, keepdims=True), 0.0)
    e = np.exp(eta - mx)
    ref = np.exp(-mx)
    s = e.sum(axis=1, keepdims=True) + ref
    return np.c_[e / s, ref / s]


def objective(B):
    P = probs(B)
    with np.errstate(divide="ignore"):
        ll = np.sum(np.where(Z > 0, Z * np.log(P), 0.0))
    return ll - 0.5 * np.sum(pen * B * B)


B = np.zeros((m - 1, d))
for it in range(200):
    P = probs(B)
    G = (Z[:, :m - 1] - P[:, :m - 1]).T @ Xd - pen * B
    g = G.reshape(-1)
    if np.abs(g).max() <= 1e-8:
        break
    H = np.zeros(((m - 1) * d, (m - 1) * d))
    for a in range(m - 1):
        for c in range(m - 1):
            w = P[:, a] * ((a == c) - P[:, c])
            H[a * d:(a + 1) * d, c * d:(c + 1) * d] = Xd.T @ (w[:, None] * Xd)
    H += np.diag(np.tile(pen, m - 1))
    step = np.linalg.solve(H, g).reshape(m - 1, d)
    f0 = objective(B)
    t = 1.0
    while objective(B + t * step) < f0 and t > 1e-9:
        t *= 0.5
    B = B + t * step
print("iterations", it, "grad", np.abs(g).max())
E = np.c_[np.ones(n), np.eye(n)]
eta = E @ B.T
P = np.exp(eta) / (1 + np.exp(eta).sum(axis=1, keepdims=True))
Cx = np.c_[P, 1 - P.sum(axis=1)].T
print("max |extracted - table| =", np.abs(Cx - T1).max())
