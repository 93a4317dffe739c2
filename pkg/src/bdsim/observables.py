"""Scalar diagnostics: transport currents, work, rectification,
entanglement, entropies, fidelity, Fisher informations, effective
temperatures, and lattice order parameters."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import hilbert, linalg

__all__ = [
    "FisherResult",
    "expect",
    "excitation_current_bath",
    "spin_current",
    "heat_current",
    "work_rate",
    "rectification_and_contrast",
    "concurrence",
    "von_neumann_entropy",
    "fidelity",
    "effective_temperature",
    "qfi_diagonal",
    "cfi_projective",
    "order_parameters",
    "variance_derivative_argmax",
]


@dataclass
class FisherResult:
    value: float
    step: float
    basis: str  # "quantum" or "classical"
    flags: list = field(default_factory=list)


def expect(op, rho):
    """tr{op rho} for a density matrix, or <psi|op|psi> for a vector."""
    rho = np.asarray(rho)
    op = np.asarray(op)
    if rho.ndim == 1:
        return complex(rho.conj() @ op @ rho)
    return complex(np.trace(op @ rho))


def excitation_current_bath(rate, occupation, a, rho):
    """Excitation flow from a thermal bath into its mode:
    J = Gamma n <a a^+> - Gamma (n+1) <a^+ a>."""
    a = np.asarray(a, dtype=complex)
    ad = a.conj().T
    gain = expect(a @ ad, rho).real
    loss = expect(ad @ a, rho).real
    return rate * occupation * gain - rate * (occupation + 1.0) * loss


def spin_current(rho, i, j, coupling, layout, prefactor=2.0):
    """Spin current through the XX link i->j:
    c * J_ij * <sigma^x_i sigma^y_j - sigma^y_i sigma^x_j>."""
    if layout.dims[i if not isinstance(i, str) else layout.site(i)] != 2:
        raise ValueError("spin current requires qubit sites")
    sx_i = hilbert.embed(hilbert.sigma_x(), i, layout)
    sy_i = hilbert.embed(hilbert.sigma_y(), i, layout)
    sx_j = hilbert.embed(hilbert.sigma_x(), j, layout)
    sy_j = hilbert.embed(hilbert.sigma_y(), j, layout)
    op = sx_i @ sy_j - sy_i @ sx_j
    return prefactor * coupling * expect(op, rho).real


def heat_current(h, dissipator_action):
    """tr{H D[rho]} for a precomputed dissipator action D[rho]."""
    return np.trace(np.asarray(h) @ np.asarray(dissipator_action)).real


def work_rate(dh_dt, rho):
    """tr{(dH/dt) rho}."""
    return expect(dh_dt, rho).real


def rectification_and_contrast(j_forward, j_reverse):
    """R = -J_f/J_r and C = |(J_f+J_r)/(J_f-J_r)|."""
    if j_forward == 0.0 and j_reverse == 0.0:
        raise ValueError("contrast undefined for vanishing currents")
    r = math.inf if j_reverse == 0.0 else -j_forward / j_reverse
    c = abs((j_forward + j_reverse) / (j_forward - j_reverse))
    return r, c


def concurrence(rho):
    """Two-qubit concurrence max(0, l1 - l2 - l3 - l4), with l_k the
    descending square roots of the spectrum of
    rho (sy x sy) rho* (sy x sy)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("concurrence needs a 4x4 density matrix")
    lam_min = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lam_min < -1e-8:
        raise ValueError(f"state not positive semidefinite ({lam_min:.2e})")
    yy = np.kron(hilbert.sigma_y(), hilbert.sigma_y())
    m = rho @ yy @ rho.conj() @ yy
    lams = np.sqrt(np.clip(np.linalg.eigvals(m).real, 0.0, None))
    lams = np.sort(lams)[::-1]
    return max(0.0, lams[0] - lams[1] - lams[2] - lams[3])


def von_neumann_entropy(rho):
    """-sum p ln p over the spectrum, with 0 ln 0 = 0."""
    p = np.linalg.eigvalsh(np.asarray(rho, dtype=complex))
    p = np.clip(p, 0.0, None)
    p = p[p > 1e-12]
    return float(-np.sum(p * np.log(p)))


def _sqrtm_psd(a):
    vals, vecs = np.linalg.eigh(a)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity(rho, sigma):
    """(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    if sigma.ndim == 1:
        return float(np.clip(expect(rho, sigma).real, 0.0, 1.0))
    sr = _sqrtm_psd(rho)
    inner = _sqrtm_psd(sr @ sigma @ sr)
    f = np.trace(inner).real ** 2
    return float(np.clip(f, 0.0, 1.0))


def effective_temperature(n_mean):
    """Temperature (in units of the mode frequency) of a thermal state
    with mean occupation n: T/w = 1 / (ln(n+1) - ln n)."""
    if n_mean <= 0:
        raise ValueError("mean occupation must be > 0")
    return 1.0 / (math.log(n_mean + 1.0) - math.log(n_mean))


def _qfi_from_derivative(rho0, drho):
    p, u = np.linalg.eigh(rho0)
    d = u.conj().T @ drho @ u
    f = 0.0
    for k in range(len(p)):
        for l in range(len(p)):
            s = p[k] + p[l]
            if s > 1e-14:
                f += 2.0 * abs(d[k, l]) ** 2 / s
    return f


def qfi_diagonal(state_family, theta0, step=1e-4, offdiag_tol=1e-6):
    """Quantum Fisher information of a density-matrix family by central
    finite differences, using the closed form valid for states diagonal
    in a common basis:

        F = 2 sum_{k,l: pk+pl>0} |<k|d rho|l>|^2 / (pk + pl).

    Off-diagonal weight above `offdiag_tol` in the eigenbasis of
    rho(theta0 - step) is recorded as a warning flag.  The estimate is
    Richardson-refined when halving the step moves it by more than 1%.
    """
    flags = []
    rho0 = np.asarray(state_family(theta0), dtype=complex)
    _, u = np.linalg.eigh(rho0)
    test = u.conj().T @ np.asarray(state_family(theta0 - step), dtype=complex) @ u
    off = test - np.diag(np.diag(test))
    if np.abs(off).max() > offdiag_tol:
        flags.append("non-diagonal-family")
        warnings.warn("state family is not diagonal in a common basis")

    def estimate(h):
        dr = (np.asarray(state_family(theta0 + h), dtype=complex)
              - np.asarray(state_family(theta0 - h), dtype=complex)) / (2.0 * h)
        return _qfi_from_derivative(rho0, dr)

    f1 = estimate(step)
    f2 = estimate(step / 2.0)
    value = f2
    if f1 != 0 and abs(f1 - f2) > 0.01 * max(abs(f1), abs(f2)):
        value = (4.0 * f2 - f1) / 3.0
        flags.append("richardson")
    return FisherResult(value=float(max(value, 0.0)), step=step,
                        basis="quantum", flags=flags)


def cfi_projective(prob_family, theta0, step=1e-4):
    """Classical Fisher information I = sum_a P(a) (d ln P(a))^2 of an
    outcome distribution family, by central finite differences."""
    flags = []
    p0 = np.asarray(prob_family(theta0), dtype=float)
    if abs(p0.sum() - 1.0) > 1e-10:
        raise ValueError("distribution not normalized")

    def estimate(h):
        dp = (np.asarray(prob_family(theta0 + h), dtype=float)
              - np.asarray(prob_family(theta0 - h), dtype=float)) / (2.0 * h)
        val = 0.0
        for pa, dpa in zip(p0, dp):
            if pa > 1e-14:
                val += dpa ** 2 / pa
            elif abs(dpa) > 1e-8:
                flags.append("zero-probability-with-derivative")
        return val

    f1 = estimate(step)
    f2 = estimate(step / 2.0)
    value = f2
    if f1 != 0 and abs(f1 - f2) > 0.01 * max(abs(f1), abs(f2)):
        value = (4.0 * f2 - f1) / 3.0
        flags.append("richardson")
    return FisherResult(value=float(max(value, 0.0)), step=step,
                        basis="classical", flags=sorted(set(flags)))


def order_parameters(state, layout, number_ops=None, mode_ops=None):
    """Lattice order parameters of a bosonic state:

        n     = (1/M) sum <n_i>
        a     = |(1/M) sum <a_i>|
        kappa = (1/M) sum <n_i>^2 - ((1/M) sum <n_i>)^2

    Site operators are built from the layout unless explicit lists are
    given (used for number-projected bases).
    """
    m = layout.nsites if layout is not None else len(number_ops)
    if number_ops is None:
        number_ops = [hilbert.embed(hilbert.local_operator("number", layout.dims[i]),
                                    i, layout) for i in range(m)]
    if mode_ops is None:
        mode_ops = [hilbert.embed(hilbert.local_operator("annihilate", layout.dims[i]),
                                  i, layout) for i in range(m)]
    ns = np.array([expect(op, state).real for op in number_ops])
    a_sum = np.mean([expect(op, state) for op in mode_ops])
    n_mean = ns.mean()
    kappa = float(np.mean(ns ** 2) - n_mean ** 2)
    return float(n_mean), float(abs(a_sum)), max(kappa, 0.0)


def variance_derivative_argmax(j_grid, variances):
    """Grid point maximizing dVar/dJ, with parabolic refinement.

    Returns (j_star, flagged) where flagged marks a maximum at the
    derivative-grid boundary.
    """
    j_grid = np.asarray(j_grid, dtype=float)
    variances = np.asarray(variances, dtype=float)
    if j_grid.size < 5:
        raise ValueError("need at least 5 grid points")
    if np.any(np.diff(j_grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    dv = np.gradient(variances, j_grid)
    k = int(np.argmax(dv))
    flagged = k == 0 or k == j_grid.size - 1
    if flagged:
        warnings.warn("derivative maximum at grid boundary")
        return float(j_grid[k]), True
    # parabolic refinement through the three points around the maximum
    x0, x1, x2 = j_grid[k - 1: k + 2]
    y0, y1, y2 = dv[k - 1: k + 2]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 ** 2 * (y0 - y1) + x1 ** 2 * (y2 - y0) + x0 ** 2 * (y1 - y2)) / denom
    if a < 0:
        j_star = -b / (2.0 * a)
        if j_grid[k - 1] <= j_star <= j_grid[k + 1]:
            return float(j_star), False
    return float(j_grid[k]), False
