"""Damped Newton-Raphson shared by the Cox and logistic fitters."""

import numpy as np

from .exceptions import MonotoneLikelihoodError, SingularMatrixError

DIVERGENCE_BOUND = 50.0


def inverse_information(hess):
    info = -np.asarray(hess)
    ev = np.linalg.eigvalsh(info) if info.size else np.array([1.0])
    if ev.min() <= 1e-10 * max(ev.max(), 1.0):
        raise SingularMatrixError(
            "information matrix is singular; a covariate may be constant or collinear")
    return np.linalg.inv(info)


def newton_raphson(objective, beta0, max_iter=100, tol=1e-9, bound=DIVERGENCE_BOUND):
    """Maximize ``objective(beta) -> (ll, grad, hess)`` with step halving.

    Convergence needs both a small score and a small Newton step; under
    separation the score vanishes while the step stays near one, so the
    iterate keeps moving until it crosses ``bound`` or the information
    underflows to zero, both of which are reported as divergence.

    Returns ``(beta, ll, grad, hess, iterations, converged)``. Raises
    :class:`MonotoneLikelihoodError` once a coefficient leaves ``[-bound, bound]``.
    """
    beta = np.asarray(beta0, dtype=float).copy()
    ll, grad, hess = objective(beta)
    inverse_information(hess)
    for it in range(max_iter + 1):
        try:
            step = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError:
            if it == 0:
                raise SingularMatrixError("information matrix is singular") from None
            # the information was regular at the start, so it vanished because
            # the likelihood flattens out along a diverging coefficient
            j = int(np.argmax(np.abs(beta)))
            raise MonotoneLikelihoodError(
                f"coefficient {j} diverges (information vanished at |beta| = "
                f"{abs(beta[j]):.3g}); the covariate separates the outcomes", j) from None
        if np.max(np.abs(grad), initial=0.0) < tol and np.max(np.abs(step), initial=0.0) < 1e-6:
            return beta, ll, grad, hess, it, True
        if it == max_iter:
            break
        new_beta = beta + step
        new = objective(new_beta)
        halvings = 0
        while not (new[0] >= ll - 1e-12 * max(1.0, abs(ll))) and halvings < 30:
            step = step / 2.0
            new_beta = beta + step
            new = objective(new_beta)
            halvings += 1
        if np.any(np.abs(new_beta) > bound):
            j = int(np.argmax(np.abs(new_beta)))
            raise MonotoneLikelihoodError(
                f"coefficient {j} diverges (|beta| > {bound:g}); "
                "the covariate separates the outcomes", j)
        beta, (ll, grad, hess) = new_beta, new
    return beta, ll, grad, hess, max_iter, False
