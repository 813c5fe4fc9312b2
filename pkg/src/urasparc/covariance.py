"""Sample/model covariances and the lifted-operator kernels.

The lifted dictionary has columns ``vec(a_k a_k^*)`` and ``D**2`` rows; it is
never formed here. Every product with it reduces to quadratic forms
``a_k^* X a_k``, evaluated for all columns at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .codebook import Codebook
from .channel import ReceivedBlock
from .errors import InvalidDimensionsError, InvalidParameterError


def hermitian(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.complex128)
    return 0.5 * (X + X.conj().T)


def sample_covariance(blk) -> np.ndarray:
    """``Y Y^* / M``, symmetrized."""
    Y = blk.Y if isinstance(blk, ReceivedBlock) else np.asarray(blk)
    return hermitian(Y @ Y.conj().T / Y.shape[1])


def model_covariance(cb: Codebook, gamma, sigma2) -> np.ndarray:
    """``A diag(gamma) A^* + sigma2 I``."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (cb.num_cols,):
        raise InvalidDimensionsError("gamma length must match the codebook width")
    if np.any(gamma < 0):
        raise InvalidParameterError("activity powers must be nonnegative")
    supp = np.flatnonzero(gamma)
    A = cb.entries[:, supp]
    S = (A * gamma[supp]) @ A.conj().T
    S[np.diag_indices_from(S)] += sigma2
    return hermitian(S)


def quadratic_forms(A, X) -> np.ndarray:
    """Real parts of ``a_k^* X a_k`` for every column of ``A``."""
    return np.einsum("ik,ik->k", A.conj(), X @ A).real


def column_energies(A, Y) -> np.ndarray:
    """``||Y^* a_k||^2 / M``: the same quadratic forms with ``X = Y Y^*/M``."""
    W = A.conj().T @ Y
    return (W.real**2 + W.imag**2).sum(axis=1) / Y.shape[1]


@dataclass(frozen=True, eq=False)
class ScreeningStatistic:
    values: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))


def screening_statistic(cb: Codebook, sigmahat=None, Y=None, path="auto") -> ScreeningStatistic:
    """Per-column energy ``a_k^* Sigma_hat a_k`` of the sample covariance.

    With the raw block available and ``M < D`` the forms are computed as
    ``||Y^* a_k||^2 / M`` (``O(N D M)``); otherwise from ``Sigma_hat``
    (``O(N D^2)``). Both paths agree to rounding.

    Parameters
    ----------
    cb : Codebook
    sigmahat : ndarray, optional
        Sample covariance ``D x D``.
    Y : ndarray, optional
        Raw ``D x M`` block.
    path : {"auto", "covariance", "block"}
    """
    A = cb.entries
    if sigmahat is None and Y is None:
        raise ValueError("need the sample covariance or the raw block")
    if path == "auto":
        path = "block" if Y is not None and (sigmahat is None or Y.shape[1] < A.shape[0]) else "covariance"
    if path == "block":
        if Y is None:
            raise ValueError("block path requested without a raw block")
        vals = column_energies(A, Y)
    else:
        if sigmahat is None:
            sigmahat = sample_covariance(Y)
        if sigmahat.shape != (A.shape[0], A.shape[0]):
            raise InvalidDimensionsError("covariance shape does not match codebook rows")
        vals = quadratic_forms(A, sigmahat)
    return ScreeningStatistic(vals)


def lifted_adjoint(cb: Codebook, sigmahat, sigma2, Y=None) -> np.ndarray:
    """Adjoint of the lifted dictionary applied to ``vec(Sigma_hat - sigma2 I)``.

    Equals ``Y_k - sigma2 ||a_k||^2``, i.e. ``Y_k - sigma2 D`` for columns
    of squared norm ``D``.
    """
    stat = screening_statistic(cb, sigmahat, Y)
    return stat.values - sigma2 * cb.column_norms_sq()


def lifted_forward(cb: Codebook, gamma) -> np.ndarray:
    """``A diag(gamma) A^*`` as a matrix; the lifted product reshaped."""
    gamma = np.asarray(gamma, dtype=float)
    supp = np.flatnonzero(gamma)
    A = cb.entries[:, supp]
    return (A * gamma[supp]) @ A.conj().T


def expected_statistic(D, gamma, sigma2, exact=False):
    """Mean of the screening statistic for sphere-uniform codebooks.

    Parameters
    ----------
    D : int
    gamma : array_like
        Activity powers.
    sigma2 : float
    exact : bool
        The published closed form charges every active user, including ``k``
        itself, the same-vector moment ``D/(D+1)`` per coordinate. Distinct
        columns are independent, so the cross term is really
        ``sum_i E|a_ki|^2 E|a_li|^2 = D`` per other user. With ``exact=True``
        the means ``D^2 gamma_k + D sum_{l != k} gamma_l + D sigma2`` are
        returned instead, which is what Monte Carlo reproduces.

    Returns
    -------
    psi : float
        Off-support mean; ``sum_l D^2/(D+1) gamma_l + D sigma2`` by default.
    expected : ndarray
        Per-column means (``psi + D^2 gamma_k`` on the support by default).
    """
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise InvalidParameterError("activity powers must be nonnegative")
    if exact:
        psi = D * gamma.sum() + D * sigma2
        return float(psi), psi + (D * D - D) * gamma
    psi = D * D / (D + 1.0) * gamma.sum() + D * sigma2
    return float(psi), psi + D * D * gamma


def log_likelihood_cost(Sigma, sigmahat) -> float:
    """``log det Sigma + tr(Sigma^{-1} Sigma_hat)`` via a fresh Cholesky factor."""
    c, low = cho_factor(Sigma, lower=True)
    logdet = 2.0 * np.log(np.abs(np.diag(c))).sum()
    return float(logdet + np.trace(cho_solve((c, low), sigmahat)).real)
