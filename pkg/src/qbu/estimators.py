"""Bayesian estimators under the Haar prior over pure states.

The mean state, observable expectations and the normalising constant are all
sphere integrals of the same likelihood polynomial times low-degree factors,
so the polynomial is expanded once and reused.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidInputError
from .hilbert import (
    ObservationSet,
    PureState,
    all_sign_vectors,
    b0_state,
    log_likelihood,
    projector_from_vector,
)
from .sphere import (
    DEFAULT_MAX_DEGREE,
    check_degree,
    haar_states,
    likelihood_polynomial,
    pnorm_exact,
    quadratic_form,
)

HERMITIAN_TOL = 1e-10
B0_RESTART_MAX_D = 12


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """``d x d`` density matrix; ``exact`` holds ``(re, im)`` Fraction rows when available."""

    matrix: np.ndarray
    exact: tuple | None = None

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())


def _unit(d, i, j):
    e = [0] * (2 * d)
    e[i] += 1
    e[j] += 1
    return tuple(e)


def rho_avg(obs: ObservationSet, exact=None, max_degree: int = DEFAULT_MAX_DEGREE) -> DensityMatrix:
    """Posterior mean state.

    ``<i|rho|j> = p^-1 * integral psi_i conj(psi_j) L(psi)``.  With
    ``psi = a + i b`` the integrand splits into the real monomials
    ``a_i a_j + b_i b_j`` and ``b_i a_j - a_i b_j`` times ``L``.
    """
    check_degree(obs.n, max_degree, extra=2)
    poly = likelihood_polynomial(obs, exact, max_degree=max_degree + 2)
    d = obs.d

    def integral(i, j):
        coef, val = poly.integrate(_unit(d, i, j))
        return coef if coef is not None else val

    norm = poly.integrate()
    norm = norm[0] if norm[0] is not None else norm[1]
    re = [[None] * d for _ in range(d)]
    im = [[None] * d for _ in range(d)]
    for i in range(d):
        for j in range(i, d):
            r = (integral(i, j) + integral(d + i, d + j)) / norm
            s = (integral(d + i, j) - integral(i, d + j)) / norm
            re[i][j] = re[j][i] = r
            im[i][j], im[j][i] = s, -s
    M = np.array([[complex(float(re[i][j]), float(im[i][j])) for j in range(d)] for i in range(d)])
    exact_rows = None
    if isinstance(norm, Fraction):
        exact_rows = (tuple(map(tuple, re)), tuple(map(tuple, im)))
    return DensityMatrix(M, exact_rows)


def posterior_density(obs: ObservationSet, psi: PureState, max_degree: int = DEFAULT_MAX_DEGREE) -> float:
    """``L(psi) / p_norm`` with ``p_norm`` in the Haar-probability convention."""
    p = pnorm_exact(obs, max_degree=max_degree).normalized
    ll = log_likelihood(psi, obs)
    if ll == -math.inf:
        return 0.0
    return math.exp(ll) / p


def _check_hermitian(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError("observable must be a square matrix")
    if not np.allclose(A, A.conj().T, atol=HERMITIAN_TOL, rtol=0):
        raise InvalidInputError("observable is not Hermitian")
    return (A + A.conj().T) / 2


def spectral_projectors(A):
    """Eigenpairs of a Hermitian matrix, eigenvalues descending."""
    A = _check_hermitian(A)
    lam, vecs = np.linalg.eigh(A)
    order = np.argsort(-lam, kind="stable")
    return lam[order], vecs[:, order]


def observable_expectation(obs: ObservationSet, A, max_degree: int = DEFAULT_MAX_DEGREE) -> float:
    """Posterior expectation of ``A`` as a weighted sum of normalising constants.

    ``sum_i lambda_i p(obs + |i><i|) / p(obs)`` over the spectral
    decomposition of ``A``.
    """
    lam, vecs = spectral_projectors(A)
    if vecs.shape[0] != obs.d:
        raise InvalidInputError("observable dimension does not match the observations")
    check_degree(obs.n + 1, max_degree)
    poly = likelihood_polynomial(obs, exact=False, max_degree=max_degree)
    base = poly.integrate()[1]
    total = 0.0
    for k in range(len(lam)):
        if lam[k] == 0:
            continue
        P = projector_from_vector(vecs[:, k])
        total += lam[k] * (poly * quadratic_form(P, obs.d, False)).integrate()[1]
    return float(total / base)


def pnorm_from_rho_avg(obs: ObservationSet, max_degree: int = DEFAULT_MAX_DEGREE):
    """``p(obs)`` from the mean state of all but the last observation.

    ``p(rest + O) = p(rest) * Tr[O rho_avg(rest)]``, with ``O`` written as a
    scaled sum of its spectral projectors.  Returns a Fraction when every step
    ran exactly, else a float.
    """
    if obs.n == 0:
        raise InvalidInputError("need at least one observation")
    rest, last = obs.split_last()
    p_rest = pnorm_exact(rest, max_degree=max_degree)
    rho = rho_avg(rest, max_degree=max_degree)
    if rho.exact is not None and last.is_exact:
        entries = last.exact_entries()
        re, im = rho.exact
        tr = Fraction(0)
        d = obs.d
        for i in range(d):
            for j in range(d):
                # Re(O_ij * rho_ji)
                tr += entries[i][j].re * re[j][i] - entries[i][j].im * im[j][i]
        return p_rest.exact_normalized * tr
    lam, vecs = spectral_projectors(last.matrix)
    tr = sum(lam[k] * (vecs[:, k].conj() @ rho.matrix @ vecs[:, k]).real for k in range(len(lam)))
    return float(p_rest.normalized * tr)


def _observation_arrays(obs: ObservationSet):
    vecs, vm, mats, mm = [], [], [], []
    for o, m in obs.items:
        if o.is_rank_one:
            vecs.append(o.vector)
            vm.append(m)
        else:
            mats.append(o.matrix)
            mm.append(m)
    d = obs.d
    V = np.array(vecs, dtype=complex).reshape(-1, d)
    M = np.array(mats, dtype=complex).reshape(-1, d, d)
    return V, np.array(vm, dtype=float), M, np.array(mm, dtype=float)


def _loglik_and_grad(Psi, V, vm, M, mm):
    """Batched log-likelihood and its Wirtinger gradient ``sum m * 2 O psi / q``."""
    R = Psi.shape[0]
    ll = np.zeros(R)
    grad = np.zeros_like(Psi)
    with np.errstate(divide="ignore", invalid="ignore"):
        if len(vm):
            z = Psi @ V.conj().T  # v^dagger psi
            q = np.abs(z) ** 2
            ll += np.log(q) @ vm
            grad += 2 * ((vm / q) * z) @ V
        if len(mm):
            Mpsi = np.einsum("kij,rj->rki", M, Psi)
            q = np.einsum("ri,rki->rk", Psi.conj(), Mpsi).real
            ll += np.log(q) @ mm
            grad += 2 * np.einsum("rk,rki->ri", mm / q, Mpsi)
    return ll, grad


def _ascend(Psi, arrays, max_iter: int, tol: float):
    """Geodesic gradient ascent with per-row step halving."""
    ll, grad = _loglik_and_grad(Psi, *arrays)
    step = np.full(Psi.shape[0], 0.1)
    active = np.isfinite(ll)
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        P, g = Psi[idx], grad[idx]
        g = g - np.real(np.sum(P.conj() * g, axis=1))[:, None] * P
        gn = np.linalg.norm(g, axis=1)
        done = gn < tol
        u = g / np.where(gn > 0, gn, 1)[:, None]
        s = step[idx][:, None]
        trial = np.cos(s) * P + np.sin(s) * u
        trial /= np.linalg.norm(trial, axis=1, keepdims=True)
        tll, tgrad = _loglik_and_grad(trial, *arrays)
        better = tll > ll[idx]
        acc = idx[better & ~done]
        Psi[acc] = trial[better & ~done]
        ll[acc] = tll[better & ~done]
        grad[acc] = tgrad[better & ~done]
        step[idx] = np.where(better, np.minimum(step[idx] * 1.5, 1.0), step[idx] / 2)
        active[idx[done | (step[idx] < 1e-13)]] = False
    return Psi, ll


def maximize_likelihood(
    obs: ObservationSet,
    restarts: int = 16,
    seed: int = 0,
    include_b0: bool | None = None,
    max_iter: int = 5000,
    tol: float = 1e-10,
):
    """Multi-start projected gradient ascent of the log-likelihood.

    Starts from ``restarts`` Haar-random states plus, for ``d <= 12``, every
    binarized state.  Starts with zero likelihood are nudged by a small random
    perturbation.  The result is a lower bound on the maximum, nothing more.

    Returns
    -------
    (PureState, float)
        The best state found and its log-likelihood.
    """
    if restarts < 1:
        raise InvalidInputError("need at least one restart")
    d = obs.d
    rng = np.random.default_rng(seed)
    starts = [haar_states(rng, d, restarts)]
    if include_b0 is None:
        include_b0 = d <= B0_RESTART_MAX_D
    if include_b0 and d >= 2:
        starts.append(np.array([b0_state(s).vector for s in all_sign_vectors(d)]))
    Psi = np.concatenate(starts).astype(complex)
    arrays = _observation_arrays(obs)
    ll, _ = _loglik_and_grad(Psi, *arrays)
    dead = ~np.isfinite(ll)
    if dead.any():
        noise = haar_states(rng, d, int(dead.sum()))
        Psi[dead] = Psi[dead] + 1e-3 * noise
        Psi[dead] /= np.linalg.norm(Psi[dead], axis=1, keepdims=True)
    Psi, ll = _ascend(Psi, arrays, max_iter, tol)
    ll = np.where(np.isfinite(ll), ll, -np.inf)
    best = int(np.argmax(ll))
    state = PureState(Psi[best] / np.linalg.norm(Psi[best]))
    return state, float(log_likelihood(state, obs))
