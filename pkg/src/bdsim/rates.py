"""Classical rate-matrix tools and closed-form Markovian reductions of
the simulated systems (qutrit diode, Wheatstone-bridge interface,
effective demon-memory model).  The closed forms are implemented
verbatim and serve as analytic cross-checks for the full Lindblad
simulations; regime assumptions are reported as validity flags, never
silently patched."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import hilbert, linalg, lindblad

__all__ = [
    "RateMatrix",
    "QutritMarkovParams",
    "WheatstoneParams",
    "rate_steady_state",
    "qutrit_markov_model",
    "wheatstone_markov_model",
    "full_bath_rates",
    "maxwell_markov_liouvillian",
]


class RateMatrix:
    """Classical master-equation generator dP/dt = W P.

    Off-diagonal W[i, j] >= 0 is the rate j -> i; each diagonal entry
    is minus its column sum so every column sums to zero.
    """

    def __init__(self, transitions, dimension):
        """transitions: {(to, from): rate >= 0}."""
        w = np.zeros((dimension, dimension))
        for (i, j), rate in transitions.items():
            if i == j:
                raise ValueError("diagonal entries are derived, not set")
            if rate < 0:
                raise ValueError(f"negative rate for {j} -> {i}")
            w[i, j] += rate
        w[np.diag_indices(dimension)] = -w.sum(axis=0)
        self.matrix = w
        self.dimension = dimension

    def check(self):
        col = self.matrix.sum(axis=0)
        if np.abs(col).max() > 1e-12 * max(np.abs(self.matrix).max(), 1.0):
            raise ValueError("columns do not sum to zero")


def rate_steady_state(w):
    """Normalized kernel vector of a RateMatrix: W P = 0, sum P = 1."""
    mat = w.matrix if isinstance(w, RateMatrix) else np.asarray(w, dtype=float)
    ns = linalg.null_space(mat.astype(complex))
    if ns.shape[1] != 1:
        raise ValueError(
            f"rate steady state not unique (kernel dimension {ns.shape[1]})")
    p = ns[:, 0].real
    p = p / p.sum()
    if p.min() < -1e-10:
        raise ValueError("steady state has negative probability")
    return np.clip(p, 0.0, None) / np.clip(p, 0.0, None).sum()


@dataclass(frozen=True)
class QutritMarkovParams:
    delta_omega: float = 300.0
    J: float = 1.0
    J_prime: float = 0.5
    Gamma: float = 10.0
    n_L: float = 0.5
    n_R: float = 0.0


def _qutrit_rates(p):
    """Six transition rates of the three-level reduction; the keyed
    (to, from) dict also carries per-bath splits for current bookkeeping."""
    dw2 = p.delta_omega ** 2 + p.Gamma ** 2 / 2.0
    left = {
        (0, 1): (1.0 + p.n_L) * p.J_prime ** 2 / p.Gamma,
        (1, 0): p.n_L * p.J_prime ** 2 / p.Gamma,
        (1, 2): 8.0 * (1.0 + p.n_L) * p.J ** 2 / p.Gamma,
        (2, 1): 8.0 * p.n_L * p.J ** 2 / p.Gamma,
    }
    right = {
        (0, 1): (1.0 + p.n_R) * p.J ** 2 * p.Gamma / dw2,
        (1, 0): p.n_R * p.J ** 2 * p.Gamma / dw2,
        (1, 2): 8.0 * (1.0 + p.n_R) * p.J ** 2 / p.Gamma,
        (2, 1): 8.0 * p.n_R * p.J ** 2 / p.Gamma,
    }
    total = {k: left[k] + right[k] for k in left}
    return total, left, right


def _bath_excitation_current(split, pop):
    """Net excitations per unit time flowing from one bath into the
    three-level system, from its share of the transition rates."""
    j = 0.0
    for (i, k), rate in split.items():
        j += (i - k) * rate * pop[k]
    return j


def qutrit_markov_model(p=QutritMarkovParams()):
    """Rate-model reduction of the oscillator diode.

    Returns the transition rates, forward/reverse steady states and
    currents from the rate matrix, and the closed forms for J_f, J_r,
    W_f, W_r and the rectification R (exact limits delta_omega >> Gamma
    >> J, J', cold side at zero occupation).
    """
    flags = []
    if not p.delta_omega > 10.0 * p.Gamma:
        flags.append("delta_omega-not-much-greater-than-Gamma")
    if not p.Gamma > 3.0 * max(p.J, p.J_prime):
        flags.append("Gamma-not-much-greater-than-J")
    nh = max(p.n_L, p.n_R)
    if min(p.n_L, p.n_R) != 0.0:
        flags.append("cold-occupation-nonzero")

    fwd = p
    rev = QutritMarkovParams(p.delta_omega, p.J, p.J_prime, p.Gamma,
                             n_L=p.n_R, n_R=p.n_L)
    out = {"flags": flags}
    for tag, q in (("forward", fwd), ("reverse", rev)):
        total, left, right = _qutrit_rates(q)
        w = RateMatrix(total, 3)
        pop = rate_steady_state(w)
        out[tag] = {
            "rates": total,
            "P_ss": pop,
            "J_L": _bath_excitation_current(left, pop),
            "J_R": _bath_excitation_current(right, pop),
        }
    out["J_f_num"] = -out["forward"]["J_R"]
    out["J_r_num"] = out["reverse"]["J_L"]

    J, Jp, G, dw = p.J, p.J_prime, p.Gamma, p.delta_omega
    denom = 2.0 + 5.0 * nh + 3.0 * nh ** 2
    out["J_f"] = 8.0 * nh ** 2 / denom * J ** 2 / G
    out["J_r"] = (-nh / (2.0 + nh)
                  * (8.0 * nh * J ** 2 + (2.0 + nh) * Jp ** 2) / Jp ** 2
                  * J ** 2 * G / dw ** 2)
    out["W_f"] = dw * nh * (2.0 + nh) / denom * J ** 2 * G / dw ** 2
    out["W_r"] = -dw * nh * J ** 2 * G / dw ** 2
    out["R"] = (8.0 * nh * (2.0 + nh) / denom
                * Jp ** 2 / (8.0 * nh * J ** 2 + (2.0 + nh) * Jp ** 2)
                * dw ** 2 / G ** 2)
    return out


@dataclass(frozen=True)
class WheatstoneParams:
    J_x: float = 1.0
    J_C: float = 1.0
    J: float = 1.0
    J23: float = 20.0
    h1: float = 20.0
    h2: float = 0.5
    gamma1: float = 1.0
    gamma4: float = 10.0
    n: float = 0.5


def capacity_function(n):
    """Occupation-only factor N(n) in the peak Fisher information."""
    s = math.sqrt(n * (25.0 * n + 8.0))
    return (64.0 * (2.0 * n + 1.0) * (3.0 * n + 1.0) * (s - n)
            / ((3.0 * n + s) * (11.0 * n + s + 4.0) ** 2))


def wheatstone_markov_model(p=WheatstoneParams()):
    """Interface rate model of the four-spin bridge.

    Returns the interference linewidth Lambda, the Lorentzian population
    of the antisymmetric interface state, the balance couplings, the
    peak Fisher information 4 N(n) / Lambda^2, and the approximate
    current profile over J_C.
    """
    flags = []
    if not p.gamma1 < 0.3 * p.gamma4:
        flags.append("gamma1-not-much-less-than-gamma4")
    if not p.gamma4 <= 4.0 * p.J23 / (2.0 * p.n + 1.0):
        flags.append("gamma4-exceeds-interface-gap")
    if not max(p.h2, p.J) < 0.3 * p.J23:
        flags.append("h2-or-J-not-much-less-than-J23")
    if abs(p.h1 - p.J23) > 0.3 * p.J23:
        flags.append("h1-not-near-J23")

    n = p.n
    eta1_sq = (2.0 * p.h1 - 2.0 * p.J23 - p.h2) ** 2 + p.gamma1 ** 2 / 4.0
    eta4_sq = 4.0 * p.J23 ** 2 + (2.0 * n + 1.0) ** 2 * p.gamma4 ** 2 / 4.0
    lam = (math.sqrt((n + 1.0) * (3.0 * n + 1.0) / (2.0 * n ** 2))
           * p.h2 * math.sqrt(eta1_sq) / (2.0 * p.J23))
    p0 = n / (3.0 * n + 1.0)
    nn = capacity_function(n)
    j_x0 = p.J_C * (1.0 - p.h2 / (2.0 * p.J23))
    j_c0 = p.J_x * (1.0 + p.h2 / (2.0 * p.J23))
    j_inf = (n + 1.0) * p.gamma1 * p.h2 ** 2 / (16.0 * n * p.J23 ** 2)
    j_0 = n * (2.0 * n + 1.0) / (3.0 * n + 1.0) * 8.0 * p.gamma4 * p.J ** 2 / eta4_sq

    def population(delta_jx):
        return ((delta_jx ** 2 + p0 * lam ** 2 / 4.0)
                / (delta_jx ** 2 + lam ** 2 / 4.0))

    def current(j_c):
        d2 = (j_c - j_c0) ** 2
        return (j_inf * d2 + j_0 * lam ** 2 / 4.0) / (d2 + lam ** 2 / 4.0)

    return {
        "flags": flags,
        "Lambda": lam,
        "eta1_sq": eta1_sq,
        "eta4_sq": eta4_sq,
        "P0": p0,
        "population": population,
        "N": nn,
        "maxF": 4.0 * nn / lam ** 2,
        "J_x0": j_x0,
        "J_C0": j_c0,
        "J_0": j_0,
        "J_inf": j_inf,
        "current": current,
    }


def full_bath_rates(matrix_element, detuning, gamma, n=0.0, kind="hot"):
    """(down-rate, up-rate) for one interface transition.

    cold (vacuum) bath: down = |M|^2 g / (|M|^2 + D^2 + g^2/4), up = 0.
    hot (thermal) bath: down = |M|^2 g (n+1) / (D^2 + g^2 (2n+1)^2 / 4),
    up the same with n in place of n+1.
    """
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    m2 = abs(matrix_element) ** 2
    if kind == "cold":
        down = m2 * gamma / (m2 + detuning ** 2 + gamma ** 2 / 4.0)
        return down, 0.0
    if kind == "hot":
        den = detuning ** 2 + gamma ** 2 * (2.0 * n + 1.0) ** 2 / 4.0
        return m2 * gamma * (n + 1.0) / den, m2 * gamma * n / den
    raise ValueError("kind must be 'cold' or 'hot'")


def maxwell_markov_liouvillian(J=1.0, gamma=30.0, n_C=None, n_H=None,
                               omega_C=3500.0, omega_H=2000.0,
                               T_C=None, T_H=None):
    """Effective three-level Liouvillian with the qubit baths
    adiabatically eliminated (interaction frame, so H_eff = 0).

    Channel |0><->|2| carries rates 8(n_C+1)J^2/(g(2n_C+1)^2) down and
    8 n_C J^2/(g(2n_C+1)^2) up; channel |0><->|1| the same with a
    factor 4 and n_H.  Returns (liouvillian, flags).
    """
    if n_C is None:
        t_c = T_C if T_C is not None else (4.0 / 7.0) * omega_C
        n_C = lindblad.bose_occupation(omega_C, t_c)
    if n_H is None:
        t_h = T_H if T_H is not None else 1.5 * omega_H
        n_H = lindblad.bose_occupation(omega_H, t_h)
    flags = []
    if not gamma * (n_C + 0.5) > 3.0 * math.sqrt(2.0) * J:
        flags.append("cold-channel-not-markovian")
    if not gamma * (n_H + 0.5) > 3.0 * J:
        flags.append("hot-channel-not-markovian")
    down_c = 8.0 * (n_C + 1.0) * J ** 2 / (gamma * (2.0 * n_C + 1.0) ** 2)
    up_c = 8.0 * n_C * J ** 2 / (gamma * (2.0 * n_C + 1.0) ** 2)
    down_h = 4.0 * (n_H + 1.0) * J ** 2 / (gamma * (2.0 * n_H + 1.0) ** 2)
    up_h = 4.0 * n_H * J ** 2 / (gamma * (2.0 * n_H + 1.0) ** 2)
    k02 = np.zeros((3, 3), dtype=complex)
    k02[0, 2] = 1.0
    k01 = np.zeros((3, 3), dtype=complex)
    k01[0, 1] = 1.0
    baths = [
        lindblad.LocalBath(k02, down_c),
        lindblad.LocalBath(k02.conj().T, up_c),
        lindblad.LocalBath(k01, down_h),
        lindblad.LocalBath(k01.conj().T, up_h),
    ]
    liou = lindblad.local_liouvillian(np.zeros((3, 3), dtype=complex), baths)
    return liou, flags
