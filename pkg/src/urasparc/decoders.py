"""Inner SPARC decoders operating on the sample covariance.

Available decoders
------------------
``one_step_iht``  keep the ``k_hat`` largest lifted-adjoint entries
``iht``           iterative hard thresholding on the lifted least-squares fit
``ml``            coordinate-wise relaxed maximum likelihood on all columns
``accml``         threshold screening, then ML restricted to the survivors
``nnls``          nonnegative least-squares covariance fit

All decoders accept either a :class:`~urasparc.channel.ReceivedBlock` or a
``D x D`` sample covariance. Passing the block lets the kernels use the raw
samples when ``M < D``, which is cheaper.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.linalg.blas import zgerc

from .channel import ReceivedBlock
from .codebook import Codebook
from .covariance import (
    ScreeningStatistic,
    hermitian,
    lifted_adjoint,
    lifted_forward,
    log_likelihood_cost,
    quadratic_forms,
    sample_covariance,
    screening_statistic,
)
from .errors import InvalidParameterError

DECODERS = ("accml", "ml", "nnls", "iht", "one_step_iht")

# smallest admissible 1 + d a^* Sigma^{-1} a in a rank-one update
_MIN_DENOM = 1e-12


@dataclass(frozen=True)
class DecoderConfig:
    rho: float = 1.0
    k_hat: int | None = None
    alpha: float = 1.0
    max_sweeps: int = 15
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if not self.rho > 0:
            raise InvalidParameterError("rho must be positive")
        if self.k_hat is not None and self.k_hat < 1:
            raise InvalidParameterError("k_hat must be at least 1")
        if not self.alpha > 0:
            raise InvalidParameterError("alpha must be positive")
        if self.max_sweeps < 1:
            raise InvalidParameterError("max_sweeps must be at least 1")
        if not self.tol > 0:
            raise InvalidParameterError("tol must be positive")


@dataclass(eq=False)
class GammaEstimate:
    """Decoder output.

    ``objective_trace[0]`` is the cost at the starting point and entry ``t``
    the cost after sweep (or iteration) ``t``.
    """

    gamma_hat: np.ndarray
    sweeps_used: int = 0
    objective_trace: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def active_set(self) -> np.ndarray:
        return np.flatnonzero(self.gamma_hat > 0)


@dataclass(frozen=True, eq=False)
class _Observation:
    sigmahat: np.ndarray
    Y: np.ndarray | None = None


def _observe(data) -> _Observation:
    if isinstance(data, _Observation):
        return data
    if isinstance(data, ReceivedBlock):
        return _Observation(sample_covariance(data.Y), data.Y)
    S = np.asarray(data, dtype=np.complex128)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InvalidParameterError("expected a ReceivedBlock or a square sample covariance")
    return _Observation(hermitian(S))


def _relative_change(new, old) -> float:
    scale = np.max(np.abs(new)) if new.size else 0.0
    diff = np.max(np.abs(new - old)) if new.size else 0.0
    if diff == 0.0:
        return 0.0
    return float(diff / scale) if scale > 0 else math.inf


def _top_indices(values, k) -> np.ndarray:
    """Indices of the ``k`` largest values, descending, ties to the lowest index."""
    return np.argsort(-np.asarray(values), kind="stable")[:k]


def model_sigma(A, gamma, sigma2) -> np.ndarray:
    supp = np.flatnonzero(gamma)
    As = A[:, supp]
    S = (As * gamma[supp]) @ As.conj().T
    S[np.diag_indices_from(S)] += sigma2
    return hermitian(S)


def ml_cost(cb: Codebook, gamma, sigma2, sigmahat) -> float:
    """Negative log-likelihood ``log det Sigma(gamma) + tr(Sigma(gamma)^{-1} Sigma_hat)``."""
    return log_likelihood_cost(model_sigma(cb.entries, np.asarray(gamma, float), sigma2),
                               _observe(sigmahat).sigmahat)


def nnls_cost(cb: Codebook, gamma, sigma2, sigmahat) -> float:
    """Frobenius misfit ``||Sigma(gamma) - Sigma_hat||_F``."""
    S = model_sigma(cb.entries, np.asarray(gamma, float), sigma2)
    return float(np.linalg.norm(S - _observe(sigmahat).sigmahat))


# ---------------------------------------------------------------------------
# thresholding decoders

def one_step_iht(cb: Codebook, sigmahat, sigma2, k_hat) -> np.ndarray:
    """Support of one hard-thresholded gradient step from zero.

    Returns the sorted indices of the ``k_hat`` largest entries of the
    lifted adjoint of ``Sigma_hat - sigma2 I``.
    """
    N = cb.num_cols
    if not 1 <= k_hat <= N:
        raise InvalidParameterError(f"k_hat must lie in [1, {N}]")
    obs = _observe(sigmahat)
    grad = lifted_adjoint(cb, obs.sigmahat, sigma2, obs.Y)
    return np.sort(_top_indices(grad, k_hat))


def one_step_iht_estimate(cb: Codebook, sigmahat, sigma2, k_hat) -> GammaEstimate:
    """The one-step iterate itself, ``H(A^* u / D^2)`` (sign unconstrained)."""
    obs = _observe(sigmahat)
    grad = lifted_adjoint(cb, obs.sigmahat, sigma2, obs.Y) / cb.num_rows**2
    keep = _top_indices(grad, k_hat)
    gamma = np.zeros(cb.num_cols)
    gamma[keep] = grad[keep]
    return GammaEstimate(gamma, 1, [], {"support": np.sort(keep)})


def _hard_threshold(z, k):
    out = np.zeros_like(z)
    keep = _top_indices(np.abs(z), k)
    out[keep] = z[keep]
    return out


def iht(cb: Codebook, sigmahat, sigma2, k_hat, alpha=1.0, max_iter=100, tol=1e-6,
        callback=None) -> GammaEstimate:
    """Iterative hard thresholding for the lifted least-squares problem.

    Each iteration is ``gamma <- H_k(gamma + alpha/D^2 * A^*(u - A gamma))``
    with ``H_k`` keeping the ``k_hat`` entries of largest magnitude. The sign
    of the iterate is not constrained.

    Parameters
    ----------
    cb : Codebook
    sigmahat : ReceivedBlock or ndarray
    sigma2 : float
    k_hat : int
        Sparsity level kept by the projection.
    alpha : float
        Step size; ``0`` freezes the iterate at zero.
    max_iter, tol : int, float
        Stop after ``max_iter`` iterations or when the largest entry change
        relative to the largest entry falls below ``tol``.
    callback : callable, optional
        Called as ``callback(t, gamma)`` after every iteration.
    """
    N, D = cb.num_cols, cb.num_rows
    if not 1 <= k_hat <= N:
        raise InvalidParameterError(f"k_hat must lie in [1, {N}]")
    if alpha < 0:
        raise InvalidParameterError("alpha must be nonnegative")
    obs = _observe(sigmahat)
    A = cb.entries
    U = obs.sigmahat - sigma2 * np.eye(D)
    adj_u = lifted_adjoint(cb, obs.sigmahat, sigma2, obs.Y)
    gamma = np.zeros(N)
    trace = [float(np.linalg.norm(U) ** 2 / (2 * D * D))]
    step = alpha / (D * D)
    t = 0
    for t in range(1, max_iter + 1):
        fitted = lifted_forward(cb, gamma)
        grad = adj_u - quadratic_forms(A, fitted) if gamma.any() else adj_u
        new = _hard_threshold(gamma + step * grad, k_hat)
        change = _relative_change(new, gamma)
        gamma = new
        trace.append(float(np.linalg.norm(U - lifted_forward(cb, gamma)) ** 2 / (2 * D * D)))
        if callback is not None:
            callback(t, gamma.copy())
        if change < tol:
            break
    converged = t < max_iter or change < tol
    return GammaEstimate(gamma, t, trace, {"converged": bool(converged)})


def threshold_screen(stat, rho) -> np.ndarray:
    """Indices whose statistic strictly exceeds ``rho`` times its mean."""
    if not rho > 0:
        raise InvalidParameterError("rho must be positive")
    values = stat.values if isinstance(stat, ScreeningStatistic) else np.asarray(stat)
    return np.flatnonzero(values > rho * values.mean())


# ---------------------------------------------------------------------------
# coordinate-wise maximum likelihood

def ml_coordinate_descent(cb: Codebook, sigmahat, sigma2, support=None,
                          cfg: DecoderConfig | None = None, gamma0=None) -> GammaEstimate:
    """Relaxed ML by randomized coordinate descent with Sherman-Morrison updates.

    Every coordinate step is the exact minimizer of the likelihood along that
    coordinate, clamped to keep ``gamma >= 0``. The clamped step drives both
    the ``gamma`` update and the rank-one inverse update, so the maintained
    inverse always matches ``Sigma(gamma)``. After each sweep the inverse is
    checked against a fresh ``Sigma(gamma)`` and rebuilt if it has drifted
    beyond ``1e-8 sqrt(D)`` in Frobenius norm.

    Parameters
    ----------
    cb : Codebook
    sigmahat : ReceivedBlock or ndarray
    sigma2 : float
        Noise variance, must be positive.
    support : array of int, optional
        Columns allowed to be active; all columns when omitted.
    cfg : DecoderConfig, optional
        ``max_sweeps``, ``tol`` and the traversal ``seed`` are used.
    gamma0 : ndarray, optional
        Starting point (defaults to zero); must vanish outside ``support``.

    Returns
    -------
    GammaEstimate
        ``diagnostics`` holds ``fidelity`` (per-sweep drift before any
        rebuild), ``rebuilds``, ``shrunk_steps`` and ``support_size``.
    """
    cfg = cfg or DecoderConfig()
    if not sigma2 > 0:
        raise InvalidParameterError("sigma2 must be positive for ML")
    obs = _observe(sigmahat)
    A = cb.entries
    D, N = A.shape
    support = np.arange(N) if support is None else np.asarray(support, dtype=np.intp)
    if support.size and (support.min() < 0 or support.max() >= N):
        raise InvalidParameterError("support indices outside [0, N)")

    if gamma0 is None:
        gamma = np.zeros(N)
        Sinv = np.asfortranarray(np.eye(D, dtype=np.complex128) / sigma2)
    else:
        gamma = np.array(gamma0, dtype=float)
        Sinv = np.asfortranarray(_inverse(model_sigma(A, gamma, sigma2)))

    S = obs.sigmahat
    use_block = obs.Y is not None and obs.Y.shape[1] < D
    if use_block:
        Yh = np.asfortranarray(obs.Y.conj().T)
        inv_m = 1.0 / obs.Y.shape[1]
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    fid_tol = 1e-8 * math.sqrt(D)
    eye = np.eye(D)

    trace = [log_likelihood_cost(model_sigma(A, gamma, sigma2), S)]
    fidelity, rebuilds, shrunk = [], 0, 0
    sweeps = 0
    for sweeps in range(1, cfg.max_sweeps + 1):
        before = gamma[support].copy()
        for ell in support[rng.permutation(support.size)]:
            a = A[:, ell]
            q = Sinv @ a
            s = np.vdot(a, q).real
            if use_block:
                w = Yh @ q
                t = np.vdot(w, w).real * inv_m
            else:
                t = np.vdot(q, S @ q).real
            d = (t - s) / (s * s)
            g = gamma[ell]
            if d < -g:
                d = -g
            if d == 0.0:
                continue
            denom = 1.0 + d * s
            if denom < _MIN_DENOM:
                d = (_MIN_DENOM - 1.0) / s
                denom = _MIN_DENOM
                shrunk += 1
            gamma[ell] = 0.0 if d == -g else g + d
            Sinv = zgerc(-d / denom, q, q, a=Sinv, overwrite_a=1)

        Sigma = model_sigma(A, gamma, sigma2)
        drift = float(np.linalg.norm(Sinv @ Sigma - eye))
        fidelity.append(drift)
        if not drift <= fid_tol:
            Sinv = np.asfortranarray(_inverse(Sigma))
            rebuilds += 1
        trace.append(log_likelihood_cost(Sigma, S))
        if _relative_change(gamma[support], before) < cfg.tol:
            break

    diag = {"fidelity": fidelity, "rebuilds": rebuilds, "shrunk_steps": shrunk,
            "support_size": int(support.size)}
    return GammaEstimate(gamma, sweeps, trace, diag)


def _inverse(Sigma) -> np.ndarray:
    c = cho_factor(Sigma, lower=True)
    return hermitian(cho_solve(c, np.eye(Sigma.shape[0], dtype=np.complex128)))


def ml(cb: Codebook, sigmahat, sigma2, cfg: DecoderConfig | None = None) -> GammaEstimate:
    """Full coordinate-wise ML over every codebook column."""
    return ml_coordinate_descent(cb, sigmahat, sigma2, None, cfg)


def accml(cb: Codebook, sigmahat, sigma2, cfg: DecoderConfig | None = None) -> GammaEstimate:
    """Two-stage decoder: threshold screening followed by restricted ML.

    Columns whose screening statistic does not exceed ``rho`` times the
    mean statistic are fixed at zero; coordinate-wise ML then runs on the
    survivors only. An empty screen yields the zero estimate with
    ``diagnostics["empty_screen"]`` set.
    """
    cfg = cfg or DecoderConfig()
    obs = _observe(sigmahat)
    stat = screening_statistic(cb, obs.sigmahat, obs.Y)
    S0 = threshold_screen(stat, cfg.rho)
    if S0.size == 0:
        return GammaEstimate(np.zeros(cb.num_cols), 0, [],
                             {"empty_screen": True, "screen_size": 0, "support_size": 0})
    est = ml_coordinate_descent(cb, obs, sigma2, S0, cfg)
    est.diagnostics.update(empty_screen=False, screen_size=int(S0.size))
    return est


# ---------------------------------------------------------------------------
# nonnegative least squares

def nnls(cb: Codebook, sigmahat, sigma2, cfg: DecoderConfig | None = None,
         support=None) -> GammaEstimate:
    """Minimize ``||Sigma(gamma) - Sigma_hat||_F`` over ``gamma >= 0``.

    Cyclic coordinate descent with the closed-form coordinate minimizer
    ``gamma_k <- max(0, gamma_k + a_k^* R a_k / ||a_k||^4)``, where ``R`` is
    the maintained residual ``Sigma_hat - Sigma(gamma)``.
    """
    cfg = cfg or DecoderConfig()
    if sigma2 < 0:
        raise InvalidParameterError("sigma2 must be nonnegative")
    obs = _observe(sigmahat)
    A = cb.entries
    D, N = A.shape
    cols = np.arange(N) if support is None else np.asarray(support, dtype=np.intp)
    norm4 = cb.column_norms_sq() ** 2
    R = np.asfortranarray(obs.sigmahat - sigma2 * np.eye(D))
    gamma = np.zeros(N)
    trace = [float(np.linalg.norm(R))]
    sweeps = 0
    for sweeps in range(1, cfg.max_sweeps + 1):
        before = gamma[cols].copy()
        for k in cols:
            a = A[:, k]
            d = np.vdot(a, R @ a).real / norm4[k]
            g = gamma[k]
            if d < -g:
                d = -g
            if d == 0.0:
                continue
            gamma[k] = 0.0 if d == -g else g + d
            R = zgerc(-d, a, a, a=R, overwrite_a=1)
        trace.append(float(np.linalg.norm(R)))
        if _relative_change(gamma[cols], before) < cfg.tol:
            break
    return GammaEstimate(gamma, sweeps, trace, {"support_size": int(cols.size)})


# ---------------------------------------------------------------------------

def select_top(est, T) -> list:
    """Candidate list: indices of the ``T`` largest estimates, descending."""
    gamma = est.gamma_hat if isinstance(est, GammaEstimate) else np.asarray(est)
    if not 1 <= T <= gamma.size:
        raise InvalidParameterError(f"T must lie in [1, {gamma.size}]")
    return [int(i) for i in _top_indices(gamma, T)]


def decode(name: str, cb: Codebook, data, sigma2, cfg: DecoderConfig | None = None) -> GammaEstimate:
    """Run the decoder called ``name`` (see :data:`DECODERS`)."""
    cfg = cfg or DecoderConfig()
    obs = _observe(data)
    if name == "accml":
        return accml(cb, obs, sigma2, cfg)
    if name == "ml":
        return ml(cb, obs, sigma2, cfg)
    if name == "nnls":
        return nnls(cb, obs, sigma2, cfg)
    if name in ("iht", "one_step_iht"):
        if cfg.k_hat is None:
            raise InvalidParameterError(f"{name} needs k_hat")
        if name == "iht":
            return iht(cb, obs, sigma2, cfg.k_hat, cfg.alpha, cfg.max_sweeps, cfg.tol)
        return one_step_iht_estimate(cb, obs, sigma2, cfg.k_hat)
    raise InvalidParameterError(f"unknown decoder {name!r}; choose from {DECODERS}")


def with_overrides(cfg: DecoderConfig, **kw) -> DecoderConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
