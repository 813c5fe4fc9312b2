"""Slow, independent reference computations for small instances.

Nothing here is used by the decoders; these routines exist to produce
ground truth for tests. Every entry point enforces size caps and refuses
oversized inputs instead of truncating them.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .codebook import Codebook
from .errors import BudgetExceededError


@dataclass(frozen=True)
class OracleBudget:
    max_cols: int = 64
    max_subset_size: int = 4
    min_samples: int = 10_000
    max_samples: int = 10_000_000

    def check_cols(self, N):
        if N > self.max_cols:
            raise BudgetExceededError(f"N={N} exceeds the oracle cap of {self.max_cols} columns")

    def check_subset(self, K):
        if K > self.max_subset_size:
            raise BudgetExceededError(
                f"subset size {K} exceeds the oracle cap of {self.max_subset_size}")

    def check_samples(self, n):
        if n < self.min_samples:
            raise BudgetExceededError(f"need at least {self.min_samples} samples, got {n}")
        if n > self.max_samples:
            raise BudgetExceededError(f"{n} samples exceed the cap of {self.max_samples}")


DEFAULT_BUDGET = OracleBudget()


@dataclass(frozen=True)
class MomentEstimate:
    m4: float
    m4_se: float
    m22: float
    m22_se: float


def moment_oracle(D, samples, seed=0, budget=DEFAULT_BUDGET, chunk=100_000) -> MomentEstimate:
    """Empirical fourth moments of sphere-uniform vectors of radius sqrt(D).

    Each vector contributes its coordinate average of ``|a_i|^4`` and its
    average of ``|a_i|^2 |a_j|^2`` over ordered pairs ``i != j``; standard
    errors are taken across vectors, which are i.i.d. Vectors are drawn by
    normalizing complex Gaussians, independently of the codebook generators.
    ``m22`` is NaN for ``D = 1``.
    """
    budget.check_samples(samples)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(D)]))
    s4 = s4sq = s22 = s22sq = 0.0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        z = rng.standard_normal((n, D)) + 1j * rng.standard_normal((n, D))
        p = np.abs(z) ** 2
        p *= D / p.sum(axis=1, keepdims=True)
        f4 = (p**2).mean(axis=1)
        s4 += f4.sum()
        s4sq += (f4**2).sum()
        if D > 1:
            tot = p.sum(axis=1)
            f22 = (tot**2 - (p**2).sum(axis=1)) / (D * (D - 1))
            s22 += f22.sum()
            s22sq += (f22**2).sum()
        done += n
    m4 = s4 / samples
    se4 = math.sqrt(max(s4sq / samples - m4 * m4, 0.0) / samples)
    if D > 1:
        m22 = s22 / samples
        se22 = math.sqrt(max(s22sq / samples - m22 * m22, 0.0) / samples)
    else:
        m22 = se22 = math.nan
    return MomentEstimate(m4, se4, m22, se22)


def materialized_lift(cb: Codebook, budget=DEFAULT_BUDGET) -> np.ndarray:
    """Dense ``D^2 x N`` matrix with columns ``vec(a_k a_k^*)`` (column-major vec)."""
    budget.check_cols(cb.num_cols)
    A = cb.entries
    D, N = A.shape
    out = np.empty((D * D, N), dtype=np.complex128)
    for k in range(N):
        out[:, k] = np.outer(A[:, k], A[:, k].conj()).reshape(-1, order="F")
    return out


def lifted_adjoint_dense(cb: Codebook, sigmahat, sigma2, budget=DEFAULT_BUDGET) -> np.ndarray:
    """``Lift^* vec(Sigma_hat - sigma2 I)`` by explicit matrix-vector product."""
    lift = materialized_lift(cb, budget)
    D = cb.num_rows
    u = (np.asarray(sigmahat) - sigma2 * np.eye(D)).reshape(-1, order="F")
    return (lift.conj().T @ u).real


def quadratic_form_loop(a, X) -> complex:
    """``sum_ij conj(a_i) a_j X_ij`` by explicit double loop."""
    total = 0j
    for i in range(len(a)):
        for j in range(len(a)):
            total += np.conj(a[i]) * a[j] * X[i, j]
    return total


def sample_covariance_loop(Y) -> np.ndarray:
    D, M = Y.shape
    out = np.zeros((D, D), dtype=np.complex128)
    for i in range(D):
        for j in range(D):
            out[i, j] = sum(Y[i, m] * np.conj(Y[j, m]) for m in range(M)) / M
    return out


def projected_gradient_nnls(cb: Codebook, sigmahat, sigma2, support=None,
                            max_iter=200_000, tol=1e-14):
    """Reference solver for ``min ||Sigma(gamma) - Sigma_hat||_F, gamma >= 0``.

    Works in the lifted real formulation: the Gram matrix of the lift is
    ``G_kl = |a_k^* a_l|^2`` and the linear term is
    ``b_k = a_k^*(Sigma_hat - sigma2 I) a_k``. Runs accelerated projected
    gradient with step ``1 / lambda_max(G)`` until the projected-gradient
    residual drops below ``tol``. Returns ``(gamma, objective)`` with the
    objective as a Frobenius norm.
    """
    A = cb.entries
    D, N = A.shape
    cols = np.arange(N) if support is None else np.asarray(support, dtype=np.intp)
    As = A[:, cols]
    G = np.abs(As.conj().T @ As) ** 2
    U = np.asarray(sigmahat) - sigma2 * np.eye(D)
    b = np.array([quadratic_form_loop(As[:, k], U).real for k in range(cols.size)])
    step = 1.0 / np.linalg.eigvalsh(G)[-1]
    x = np.zeros(cols.size)
    y = x.copy()
    t = 1.0
    for _ in range(max_iter):
        x_new = np.maximum(0.0, y - step * (G @ y - b))
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        y = x_new + (t - 1) / t_new * (x_new - x)
        x, t = x_new, t_new
        g = G @ x - b
        kkt = np.where(x > 0, np.abs(g), np.maximum(-g, 0.0))
        if kkt.max() <= tol * max(1.0, np.abs(b).max()):
            break
    gamma = np.zeros(N)
    gamma[cols] = x
    Sigma = (As * x) @ As.conj().T + sigma2 * np.eye(D)
    return gamma, float(np.linalg.norm(Sigma - sigmahat))


def brute_force_support(cb: Codebook, sigmahat, sigma2, K, budget=DEFAULT_BUDGET):
    """Exhaustive minimizer of the covariance misfit over all ``K``-subsets.

    For each subset the nonnegative fit restricted to it is solved by the
    reference projected-gradient solver; the subset with the smallest
    residual wins, ties going to the lexicographically first subset.
    """
    N = cb.num_cols
    budget.check_cols(N)
    budget.check_subset(K)
    if K == N:
        return tuple(range(N))
    if math.comb(N, K) > 650_000:
        raise BudgetExceededError(f"C({N},{K}) subsets exceed the search cap")
    best, best_set = math.inf, None
    for subset in itertools.combinations(range(N), K):
        _, obj = projected_gradient_nnls(cb, sigmahat, sigma2, subset, max_iter=20_000, tol=1e-10)
        if obj < best - 1e-12:
            best, best_set = obj, subset
    return best_set
