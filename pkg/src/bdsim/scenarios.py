"""Builders for every simulated system: two-level rectifier, driven
oscillator diode, full-wave bridge rectifier, interference diode (local
and global baths), Wheatstone bridge, grain-chain magnetoresistance,
demon-controlled fridge, and Bose-Hubbard lattices.

Each builder returns a Scenario bundle (layout, Hamiltonian pieces,
Liouvillian, observables, analytic cross-checks).  Default parameters
follow the reference parameter sets of each system.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import hilbert, lindblad, linalg, observables, rates, solver
from .hilbert import SpaceLayout, embed, local_operator
from .lindblad import (GlobalBath, Liouvillian, LocalBath,
                       TimeDependentLiouvillian, harmonic_coefficient,
                       local_liouvillian)

__all__ = [
    "Scenario",
    "ScenarioConfig",
    "DemonProtocol",
    "BoseHubbardBasis",
    "SCENARIO_IDS",
    "DEFAULTS",
    "config",
    "build",
    "build_two_level",
    "build_qutrit_diode",
    "build_fwbr",
    "build_interference_diode",
    "build_interference_global",
    "build_wheatstone",
    "build_gmr",
    "gmr_resonances",
    "gmr_analytic_current_n2",
    "build_maxwell",
    "transferred_excitations",
    "bose_hubbard_basis",
    "build_bose_hubbard",
    "sample_disorder",
    "DISORDER_PRESET",
    "vacuum_boundary_mu",
]


@dataclass
class Scenario:
    """Bundle produced by a builder: everything a solver run needs."""

    scenario_id: str
    layout: SpaceLayout
    params: dict
    hamiltonian: object = None       # matrix or (L0, L1, omega) pieces
    liouvillian: object = None       # Liouvillian or TimeDependentLiouvillian
    baths: tuple = ()
    observables: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)


DEFAULTS = {
    "two_level": {"g_L": 0.1, "g_R": 1.0, "n_L": 0.5, "n_R": 0.0},
    "qutrit_diode": {"delta_omega": 300.0, "J": 1.0, "J_prime": 0.5,
                     "Gamma": 10.0, "n_H": 0.5, "n_C": 0.0},
    "fwbr": {"delta_omega": 300.0, "J": 1.0, "J_prime": 0.5, "Gamma": 10.0,
             "t_L": 1.0, "t_R": 0.1, "gamma_dec": 1e-3},
    "interference_local": {"Delta": 5.0, "delta": 0.01, "J34": None,
                           "gamma": 1.0, "lambda_1": 0.5, "lambda_6": 0.0,
                           "J": 1.0},
    "interference_global": {"h": 5.0, "delta": 0.01, "J34": None,
                            "gamma_Q": 1.0, "T_1": 10.1, "T_6": 0.1,
                            "h_offset": 0.0, "J": 1.0,
                            "secular_cutoff": 0.1},
    "wheatstone": {"J_x": 1.0, "J_C": 1.0, "J": 1.0, "J23": 20.0,
                   "h1": 20.0, "h2": 0.5, "gamma1": 1.0, "gamma4": 10.0,
                   "n": 0.5},
    "gmr": {"grains": ((2, 10.0),), "delta_U": 0.0, "delta_J": 0.0,
            "h": 0.0, "gamma": 1.0, "f": 0.5, "J": 1.0},
    "maxwell": {"omega_C": 3500.0, "omega_H": 2000.0, "omega_D": 100.0,
                "J": 1.0, "gamma": 1e-3, "gamma_D": 8.0,
                "T_C": None, "T_H": None,
                "tau_Y": 0.02, "tau_CZ": 0.1, "period": None},
    "bose_hubbard": {"mode": "canonical", "lattice": (2, 2), "N": 4,
                     "cap": 3, "mu": 0.0, "U": 1.0, "J": 0.06, "chi": 0.0,
                     "delta_U": None, "seed": None,
                     "gamma1": 0.0, "gamma2": 0.0},
}

SCENARIO_IDS = tuple(sorted(DEFAULTS))


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated parameter record for one scenario."""

    scenario_id: str
    params: dict
    bias: str = "n/a"
    seed: int = 0


def config(scenario_id, overrides=None, bias="n/a", seed=0):
    """Build a ScenarioConfig with the scenario's default parameters;
    unknown parameter names are rejected."""
    if scenario_id not in DEFAULTS:
        raise KeyError(f"unknown scenario id: {scenario_id}")
    params = dict(DEFAULTS[scenario_id])
    for key, val in (overrides or {}).items():
        if key not in params:
            raise KeyError(
                f"unknown parameter {key!r} for scenario {scenario_id}")
        params[key] = val
    if bias not in ("forward", "reverse", "n/a"):
        raise ValueError("bias must be forward, reverse, or n/a")
    return ScenarioConfig(scenario_id, params, bias, seed)


def build(cfg):
    """Dispatch a ScenarioConfig to its builder."""
    builders = {
        "two_level": build_two_level,
        "qutrit_diode": build_qutrit_diode,
        "fwbr": build_fwbr,
        "interference_local": build_interference_diode,
        "interference_global": build_interference_global,
        "wheatstone": build_wheatstone,
        "gmr": build_gmr,
        "maxwell": build_maxwell,
        "bose_hubbard": build_bose_hubbard,
    }
    fn = builders[cfg.scenario_id]
    kwargs = dict(cfg.params)
    if cfg.scenario_id in ("qutrit_diode", "interference_local"):
        kwargs["bias"] = cfg.bias if cfg.bias != "n/a" else "forward"
    return fn(**kwargs)


# ---------------------------------------------------------------------------
# two-level rectifier


def build_two_level(g_L=0.1, g_R=1.0, n_L=0.5, n_R=0.0):
    """Single qubit between two thermal baths; quantum and classical
    representations plus the closed-form steady state and current."""
    if min(g_L, g_R) < 0 or min(n_L, n_R) < 0:
        raise ValueError("rates and occupations must be >= 0")
    layout = SpaceLayout((2,), labels=("q",))
    sm = hilbert.sigma_minus()
    spl = hilbert.sigma_plus()
    h = np.zeros((2, 2), dtype=complex)
    baths = (
        LocalBath(sm, g_L * (1.0 + n_L)), LocalBath(spl, g_L * n_L),
        LocalBath(sm, g_R * (1.0 + n_R)), LocalBath(spl, g_R * n_R),
    )
    liou = local_liouvillian(h, baths)
    g_down = g_L * (1.0 + n_L) + g_R * (1.0 + n_R)
    g_up = g_L * n_L + g_R * n_R
    w = rates.RateMatrix({(0, 1): g_down, (1, 0): g_up}, 2)
    zl = g_L * (1.0 + 2.0 * n_L) + g_R * (1.0 + 2.0 * n_R)
    current = (n_L - n_R) * g_L * g_R / zl

    def current_left(rho):
        return observables.excitation_current_bath(g_L, n_L, sm, rho)

    def current_right(rho):
        return observables.excitation_current_bath(g_R, n_R, sm, rho)

    return Scenario(
        "two_level", layout, dict(g_L=g_L, g_R=g_R, n_L=n_L, n_R=n_R),
        hamiltonian=h, liouvillian=liou, baths=baths,
        observables={"J_L": current_left, "J_R": current_right,
                     "P1": np.diag([0.0, 1.0]).astype(complex)},
        extras={
            "rate_matrix": w,
            "P_ss": np.array([g_down, g_up]) / (g_down + g_up),
            "J": current,
            "rectification": lambda n_C, n_H: (
                (g_L * (1 + 2 * n_C) + g_R * (1 + 2 * n_H))
                / (g_L * (1 + 2 * n_H) + g_R * (1 + 2 * n_C))),
        })


# ---------------------------------------------------------------------------
# driven oscillator diode (three-level center, modulated left hopping)


def _anharmonic_levels(delta_omega, dim):
    """delta_omega * n - (delta_omega/2) n(n-1) on `dim` levels; for a
    three-level device this is diag(0, delta_omega, delta_omega)."""
    n = np.arange(dim)
    return np.diag(delta_omega * n - 0.5 * delta_omega * n * (n - 1.0)).astype(complex)


def build_qutrit_diode(delta_omega=300.0, J=1.0, J_prime=0.5, Gamma=10.0,
                       n_H=0.5, n_C=0.0, bias="forward"):
    """Oscillator - three-level device - oscillator chain in the rotating
    frame.  The left hopping is modulated, J_LT(t) = J + J' cos(dw t),
    which bridges the device anharmonicity in forward bias only.
    """
    n_left, n_right = (n_H, n_C) if bias == "forward" else (n_C, n_H)
    dims = (hilbert.oscillator_truncation(n_left), 3,
            hilbert.oscillator_truncation(n_right))
    layout = SpaceLayout(dims, labels=("L", "T", "R"))
    a_L = embed(local_operator("annihilate", dims[0]), "L", layout)
    a_T = embed(local_operator("annihilate", 3), "T", layout)
    a_R = embed(local_operator("annihilate", dims[2]), "R", layout)
    h0 = embed(_anharmonic_levels(delta_omega, 3), "T", layout)
    h0 = h0 + J * (a_L @ a_T.conj().T + a_T @ a_L.conj().T)
    h0 = h0 + J * (a_T @ a_R.conj().T + a_R @ a_T.conj().T)
    h1 = J_prime * (a_L @ a_T.conj().T + a_T @ a_L.conj().T)
    baths = (
        LocalBath(a_L, Gamma * (1.0 + n_left)),
        LocalBath(a_L.conj().T, Gamma * n_left),
        LocalBath(a_R, Gamma * (1.0 + n_right)),
        LocalBath(a_R.conj().T, Gamma * n_right),
    )
    l0 = local_liouvillian(h0, baths)
    l1 = Liouvillian(lindblad._hamiltonian_part(h1), layout.dim)
    liou = TimeDependentLiouvillian(
        l0, [(harmonic_coefficient(delta_omega), l1)])

    def current_left(rho):
        return observables.excitation_current_bath(Gamma, n_left, a_L, rho)

    def current_right(rho):
        return observables.excitation_current_bath(Gamma, n_right, a_R, rho)

    def average_work(pss):
        """Time-averaged drive power from the periodic steady state."""
        return delta_omega * np.imag(np.trace(h1 @ pss.harmonics[1]))

    p0_T = embed(local_operator("ketbra", 3, a=0, b=0), "T", layout)
    return Scenario(
        "qutrit_diode", layout,
        dict(delta_omega=delta_omega, J=J, J_prime=J_prime, Gamma=Gamma,
             n_H=n_H, n_C=n_C, bias=bias),
        hamiltonian=(h0, h1, delta_omega), liouvillian=liou, baths=baths,
        observables={"J_L": current_left, "J_R": current_right,
                     "P0_T": p0_T,
                     "n_L": a_L.conj().T @ a_L, "n_R": a_R.conj().T @ a_R},
        extras={"average_work": average_work, "L0": l0, "L1": l1})


# ---------------------------------------------------------------------------
# full-wave bridge rectifier (reduced sub-circuits)


def _eliminated_bath(layout, site, occupation, couplings, Gamma,
                     delta_omega):
    """Per-transition jump operators for a device whose neighbouring
    damped oscillator has been traced away.

    couplings: list of (amplitude, detuning-offset) pairs; each channel
    contributes |g <m|a|m+1>|^2 * Gamma / (D^2 + Gamma^2/4) at the
    transition detuning D = (1 - m) dw + offset.
    """
    dim = layout.dims[layout.site(site)]
    a_local = local_operator("annihilate", dim)
    baths = []
    for m in range(dim - 1):
        elem2 = abs(a_local[m, m + 1]) ** 2
        det0 = (1.0 - m) * delta_omega
        rate = 0.0
        for g, offset in couplings:
            rate += g ** 2 * elem2 * Gamma / ((det0 + offset) ** 2
                                              + Gamma ** 2 / 4.0)
        down = embed(local_operator("ketbra", dim, a=m, b=m + 1),
                     site, layout)
        baths.append(LocalBath(down, (1.0 + occupation) * rate))
        baths.append(LocalBath(down.conj().T, occupation * rate))
    return baths


def _decoherence_baths(layout, gamma_dec):
    out = []
    for i, d in enumerate(layout.dims):
        a = embed(local_operator("annihilate", d), i, layout)
        out.append(LocalBath(a, gamma_dec))
        out.append(LocalBath(a.conj().T @ a, gamma_dec))
    return out


def build_fwbr(delta_omega=300.0, J=1.0, J_prime=0.5, Gamma=10.0,
               t_L=1.0, t_R=0.1, gamma_dec=1e-3):
    """Full-wave bridge rectifier in reduced form.

    The two boundary oscillators are traced away (valid for Gamma >> J),
    leaving two decoupled chains: the upper chain (device - collector
    M1 - device) is time independent; the lower chain (device - emitter
    M2 - device) keeps the explicit modulated hopping to M2.
    Temperatures t_L, t_R are in units of the carrier frequency.
    """
    flags = []
    if not Gamma > 3.0 * max(J, J_prime):
        flags.append("Gamma-not-much-greater-than-J")
    n_L = lindblad.bose_occupation(1.0, t_L)
    n_R = lindblad.bose_occupation(1.0, t_R)

    # upper chain: drive acts through the traced oscillators, so its
    # sidebands fold into the rates; the chain itself is static
    up = SpaceLayout((3, 8, 3), labels=("D1", "M1", "D2"))
    a_d1 = embed(local_operator("annihilate", 3), "D1", up)
    a_m1 = embed(local_operator("annihilate", 8), "M1", up)
    a_d2 = embed(local_operator("annihilate", 3), "D2", up)
    h_up = (embed(_anharmonic_levels(delta_omega, 3), "D1", up)
            + embed(_anharmonic_levels(delta_omega, 3), "D2", up)
            + J * (a_d1 @ a_m1.conj().T + a_m1 @ a_d1.conj().T)
            + J * (a_d2 @ a_m1.conj().T + a_m1 @ a_d2.conj().T))
    drive_channels = [(J, 0.0), (J_prime / 2.0, -delta_omega),
                      (J_prime / 2.0, +delta_omega)]
    baths_up = (_eliminated_bath(up, "D1", n_L, drive_channels, Gamma,
                                 delta_omega)
                + _eliminated_bath(up, "D2", n_R, drive_channels, Gamma,
                                   delta_omega)
                + _decoherence_baths(up, gamma_dec))
    liou_up = local_liouvillian(h_up, baths_up)

    # lower chain: the modulated hopping couples M2 to both devices and
    # stays explicit; the traced oscillators couple through the static J
    low = SpaceLayout((3, 7, 3), labels=("D3", "M2", "D4"))
    a_d3 = embed(local_operator("annihilate", 3), "D3", low)
    a_m2 = embed(local_operator("annihilate", 7), "M2", low)
    a_d4 = embed(local_operator("annihilate", 3), "D4", low)
    h0_low = (embed(_anharmonic_levels(delta_omega, 3), "D3", low)
              + embed(_anharmonic_levels(delta_omega, 3), "D4", low)
              + J * (a_m2 @ a_d3.conj().T + a_d3 @ a_m2.conj().T)
              + J * (a_m2 @ a_d4.conj().T + a_d4 @ a_m2.conj().T))
    h1_low = J_prime * ((a_m2 @ a_d3.conj().T + a_d3 @ a_m2.conj().T)
                        + (a_m2 @ a_d4.conj().T + a_d4 @ a_m2.conj().T))
    static_channel = [(J, 0.0)]
    baths_low = (_eliminated_bath(low, "D3", n_L, static_channel, Gamma,
                                  delta_omega)
                 + _eliminated_bath(low, "D4", n_R, static_channel, Gamma,
                                    delta_omega)
                 + _decoherence_baths(low, gamma_dec))
    l0_low = local_liouvillian(h0_low, baths_low)
    l1_low = Liouvillian(lindblad._hamiltonian_part(h1_low), low.dim)
    liou_low = TimeDependentLiouvillian(
        l0_low, [(harmonic_coefficient(delta_omega), l1_low)])

    n_m1 = a_m1.conj().T @ a_m1
    n_m2 = a_m2.conj().T @ a_m2
    return Scenario(
        "fwbr", None,
        dict(delta_omega=delta_omega, J=J, J_prime=J_prime, Gamma=Gamma,
             t_L=t_L, t_R=t_R, gamma_dec=gamma_dec, n_L=n_L, n_R=n_R),
        observables={"n_M1": n_m1, "n_M2": n_m2},
        extras={
            "upper_layout": up, "lower_layout": low,
            "upper_liouvillian": liou_up, "lower_liouvillian": liou_low,
            "lower_parts": (l0_low, l1_low, delta_omega),
            "temperature": observables.effective_temperature,
        },
        flags=flags)


# ---------------------------------------------------------------------------
# interference diode (six-spin chain with a loop)


def _xx(layout, i, j):
    return (embed(hilbert.sigma_x(), i, layout) @ embed(hilbert.sigma_x(), j, layout)
            + embed(hilbert.sigma_y(), i, layout) @ embed(hilbert.sigma_y(), j, layout))


def _zz(layout, i, j):
    return embed(hilbert.sigma_z(), i, layout) @ embed(hilbert.sigma_z(), j, layout)


def _interference_hamiltonian(layout, J, delta, J34, Delta):
    """Six-spin chain with the interfering 3-4 loop; sites 0..5."""
    h = (J * _xx(layout, 0, 1)
         + J * (1.0 + delta) * _xx(layout, 1, 2)
         + J * _xx(layout, 1, 3)
         + J34 * _xx(layout, 2, 3)
         + J * _xx(layout, 2, 4)
         + J * _xx(layout, 3, 4)
         + J * _xx(layout, 4, 5))
    if Delta != 0.0:
        h = h + Delta * J * _zz(layout, 0, 1)
    return h


def build_interference_diode(Delta=5.0, delta=0.01, J34=None, gamma=1.0,
                             lambda_1=0.5, lambda_6=0.0, J=1.0,
                             bias="forward"):
    """Six-qubit interference rectifier with local boundary drives.

    D_n = gamma [lambda_n M[sigma^+_n] + (1 - lambda_n) M[sigma^-_n]] on
    the end spins; forward bias pumps harder on spin 1.  The spin
    current runs through the first link with the 2J prefactor.
    """
    if J34 is None:
        J34 = -(Delta + 1.3) * J
    if not (0.0 <= lambda_1 <= 0.5 and 0.0 <= lambda_6 <= 0.5):
        raise ValueError("lambda weights must lie in [0, 0.5]")
    if bias == "reverse":
        lambda_1, lambda_6 = lambda_6, lambda_1
    layout = SpaceLayout((2,) * 6)
    h = _interference_hamiltonian(layout, J, delta, J34, Delta)
    baths = []
    for site, lam in ((0, lambda_1), (5, lambda_6)):
        spl = embed(hilbert.sigma_plus(), site, layout)
        sm = embed(hilbert.sigma_minus(), site, layout)
        baths.append(LocalBath(spl, gamma * lam))
        baths.append(LocalBath(sm, gamma * (1.0 - lam)))
    liou = local_liouvillian(h, tuple(baths))

    def current(rho):
        return observables.spin_current(rho, 0, 1, J, layout, prefactor=2.0)

    def interface_concurrence(rho):
        return observables.concurrence(
            hilbert.partial_trace(rho, (2, 3), layout))

    return Scenario(
        "interference_local", layout,
        dict(Delta=Delta, delta=delta, J34=J34, gamma=gamma,
             lambda_1=lambda_1, lambda_6=lambda_6, J=J, bias=bias),
        hamiltonian=h, liouvillian=liou, baths=tuple(baths),
        observables={"J_spin": current,
                     "concurrence_34": interface_concurrence},
        extras={"hamiltonian_builder":
                lambda **kw: _interference_hamiltonian(
                    layout, kw.get("J", J), kw.get("delta", delta),
                    kw.get("J34", J34), kw.get("Delta", Delta))})


def build_interference_global(h=5.0, delta=0.01, J34=None, gamma_Q=1.0,
                              T_1=10.1, T_6=0.1, h_offset=0.0, J=1.0,
                              secular_cutoff=0.1):
    """Interference rectifier with thermodynamically consistent global
    baths: Ohmic spectra gamma_i(w) = gamma_Q w (1 + n_i(w)) on
    sigma^x of the end spins, partial secular cutoff on |w - w'|."""
    if J34 is None:
        J34 = (h + 1.3) * J
    layout = SpaceLayout((2,) * 6)
    hq = _interference_hamiltonian(layout, J, delta, J34, Delta=0.0)
    hq = hq + h * J * (embed(hilbert.sigma_z(), 0, layout)
                       + embed(hilbert.sigma_z(), 1, layout))
    if h_offset != 0.0:
        for i in range(6):
            hq = hq + h_offset * embed(hilbert.sigma_z(), i, layout)

    def spectrum(temperature):
        return lambda w: lindblad.ohmic_rate(w, gamma_Q, 1.0, temperature)

    baths = (
        GlobalBath(embed(hilbert.sigma_x(), 0, layout), spectrum(T_1),
                   secular_cutoff=secular_cutoff * J),
        GlobalBath(embed(hilbert.sigma_x(), 5, layout), spectrum(T_6),
                   secular_cutoff=secular_cutoff * J),
    )
    dissipators = [lindblad.global_dissipator(hq, b) for b in baths]
    # assemble in the energy eigenbasis shared by the global dissipators,
    # where the Hamiltonian part is diagonal and the dissipators sparse
    vecs = dissipators[0].basis
    e_diag = np.real((vecs.conj().T @ (hq @ vecs)).diagonal())
    mat = lindblad._hamiltonian_part(sp.diags(e_diag))
    for dis in dissipators:
        mat = mat + dis.matrix
    liou = Liouvillian(mat, layout.dim, basis=vecs)

    def heat_current(which):
        dis = dissipators[which]

        def k(rho):
            return observables.heat_current(hq, dis.apply(rho))

        return k

    return Scenario(
        "interference_global", layout,
        dict(h=h, delta=delta, J34=J34, gamma_Q=gamma_Q, T_1=T_1, T_6=T_6,
             h_offset=h_offset, J=J, secular_cutoff=secular_cutoff),
        hamiltonian=hq, liouvillian=liou, baths=baths,
        observables={"K_1": heat_current(0), "K_6": heat_current(1),
                     "J_spin": lambda rho: observables.spin_current(
                         rho, 0, 1, J, layout, prefactor=2.0)},
        extras={"dissipators": dissipators})


# ---------------------------------------------------------------------------
# quantum Wheatstone bridge


def build_wheatstone(J_x=1.0, J_C=1.0, J=1.0, J23=20.0, h1=20.0, h2=0.5,
                     gamma1=1.0, gamma4=10.0, n=0.5):
    """Four-spin bridge: drain spin 1 (pure decay), strongly coupled
    interface pair (2, 3), thermal source spin 4."""
    layout = SpaceLayout((2, 2, 2, 2))
    h = (h1 * embed(hilbert.sigma_z(), 0, layout)
         + h2 * embed(hilbert.sigma_z(), 1, layout)
         + J_x * _xx(layout, 0, 1)
         + J_C * _xx(layout, 0, 2)
         + J23 * _xx(layout, 1, 2)
         + J * _xx(layout, 1, 3)
         + J * _xx(layout, 2, 3))
    sm1 = embed(hilbert.sigma_minus(), 0, layout)
    sm4 = embed(hilbert.sigma_minus(), 3, layout)
    baths = (
        LocalBath(sm1, gamma1),
        LocalBath(sm4, gamma4 * (1.0 + n)),
        LocalBath(sm4.conj().T, gamma4 * n),
    )
    liou = local_liouvillian(h, baths)

    # interface eigenbasis to first order in h2/J23
    eps = h2 / (4.0 * J23)
    up_up = np.array([0, 0, 0, 1.0])
    dn_dn = np.array([1.0, 0, 0, 0])
    psi_p = np.array([0, 1.0, 1.0, 0]) / math.sqrt(2.0)
    psi_m = np.array([0, 1.0, -1.0, 0]) / math.sqrt(2.0)
    e_plus = psi_p + eps * psi_m
    e_plus /= np.linalg.norm(e_plus)
    e_minus = psi_m - eps * psi_p
    e_minus /= np.linalg.norm(e_minus)
    e_states = {"E_upup": up_up, "E_plus": e_plus,
                "E_minus": e_minus, "E_dndn": dn_dn}

    def population(state):
        def p(rho):
            r23 = hilbert.partial_trace(rho, (1, 2), layout)
            return float((state.conj() @ r23 @ state).real)
        return p

    def current(rho):
        num = sm1.conj().T @ sm1
        return gamma1 * observables.expect(num, rho).real

    def interface_density(rho):
        """Reduced interface state in the (E_upup, E_plus, E_minus,
        E_dndn) basis."""
        r23 = hilbert.partial_trace(rho, (1, 2), layout)
        basis = np.column_stack([up_up, e_plus, e_minus, dn_dn])
        return basis.conj().T @ r23 @ basis

    return Scenario(
        "wheatstone", layout,
        dict(J_x=J_x, J_C=J_C, J=J, J23=J23, h1=h1, h2=h2,
             gamma1=gamma1, gamma4=gamma4, n=n),
        hamiltonian=h, liouvillian=liou, baths=baths,
        observables={"P_E_minus": population(e_minus),
                     "P_E_dndn": population(dn_dn),
                     "J_spin": current},
        extras={"e_states": e_states,
                "interface_density": interface_density,
                "markov": rates.WheatstoneParams(J_x, J_C, J, J23, h1, h2,
                                                 gamma1, gamma4, n)})


# ---------------------------------------------------------------------------
# grain-chain magnetoresistance


def build_gmr(grains=((2, 10.0),), delta_U=0.0, delta_J=0.0, h=0.0,
              gamma=1.0, f=0.5, J=1.0):
    """Spin chain of strongly coupled grains between two polarizing
    reservoirs with polarization parameter f."""
    if not -1.0 <= f <= 1.0:
        raise ValueError("f must lie in [-1, 1]")
    grains = tuple((int(ng), float(ug)) for ng, ug in grains)
    n_chain = sum(ng for ng, _ in grains)
    nsites = n_chain + 2
    layout = SpaceLayout((2,) * nsites)
    if layout.dim ** 2 > linalg.MAX_DIM:
        raise ValueError("chain too large")
    left, right = 0, nsites - 1
    h_mat = np.zeros((layout.dim, layout.dim), dtype=complex)
    # grain-internal couplings
    site = 1
    chain_sites = list(range(1, nsites - 1))
    for ng, ug in grains:
        for k in range(site, site + ng - 1):
            h_mat = h_mat + ug * (_xx(layout, k, k + 1)
                                  + delta_U * _zz(layout, k, k + 1))
        site += ng
    # weak links: reservoir spins to the chain ends plus inter-grain links
    weak_pairs = [(left, chain_sites[0]), (chain_sites[-1], right)]
    site = 1
    for ng, _ in grains[:-1]:
        site += ng
        weak_pairs.append((site - 1, site))
    for i, j in weak_pairs:
        h_mat = h_mat + J * (_xx(layout, i, j) + delta_J * _zz(layout, i, j))
    for k in chain_sites:
        h_mat = h_mat + h * embed(hilbert.sigma_z(), k, layout)

    def reservoir(site_idx, pol):
        spl = embed(hilbert.sigma_plus(), site_idx, layout)
        sm = embed(hilbert.sigma_minus(), site_idx, layout)
        return (LocalBath(spl, gamma * (1.0 + pol) / 2.0),
                LocalBath(sm, gamma * (1.0 - pol) / 2.0))

    baths = reservoir(left, f) + reservoir(right, -f)
    liou = local_liouvillian(h_mat, baths)

    def current_left(rho):
        return observables.spin_current(rho, left, chain_sites[0], J,
                                        layout, prefactor=2.0)

    def current_right(rho):
        return observables.spin_current(rho, chain_sites[-1], right, J,
                                        layout, prefactor=2.0)

    return Scenario(
        "gmr", layout,
        dict(grains=grains, delta_U=delta_U, delta_J=delta_J, h=h,
             gamma=gamma, f=f, J=J),
        hamiltonian=h_mat, liouvillian=liou, baths=baths,
        observables={"J_L": current_left, "J_R": current_right,
                     "sz_L": embed(hilbert.sigma_z(), left, layout)})


def gmr_resonances(n1, U1, Delta_U=0.0):
    """Reservoir-field values resonant with a grain excitation:
    h = 2 U1 cos(pi k / (n1 + 1)), k = 1..n1; with a Z coupling the
    three-spin middle resonance shifts to 2 sqrt(2) (1 + Delta_U^2/16)."""
    if n1 < 2:
        raise ValueError("need at least two grain spins")
    vals = [2.0 * U1 * math.cos(math.pi * k / (n1 + 1))
            for k in range(1, n1 + 1)]
    if n1 == 3 and Delta_U != 0.0:
        shifted = 2.0 * math.sqrt(2.0) * (1.0 + Delta_U ** 2 / 16.0) * U1
        vals.extend([shifted, -shifted])
    return vals


def gmr_analytic_current_n2(h, U1, J=1.0):
    """Closed-form steady current of the two-spin grain at f = 0.5,
    gamma = J."""
    num = (2.0 ** 7 * U1 ** 2 * (h ** 2 + 17.0 * U1 ** 2)
           + 2.0 ** 3 * 17.0 * U1 ** 2 * J ** 2)
    den = (2.0 ** 8 * (U1 ** 2 / J ** 2) * (h ** 2 - U1 ** 2) ** 2
           + 2.0 ** 5 * (33.0 * h ** 2 + 129.0 * U1 ** 2) * U1 ** 2
           + 513.0 * U1 ** 2 * J ** 2 + 2.0 ** 4 * J ** 4)
    return num / den * J


# ---------------------------------------------------------------------------
# demon-controlled refrigerator


@dataclass(frozen=True)
class DemonProtocol:
    """Gate schedule for one demon cycle.

    Step 1 copies the device state to the memory (CNOT device->memory),
    step 2 uses the memory to demote the device (CNOT memory->device on
    the upper transition); each CNOT is Y(-pi/2), CZ, Y(+pi/2).  The
    memory reset at rate gamma_D is active outside gate pulses.
    """

    tau_Y: float = 0.02
    tau_CZ: float = 0.1
    period: float = 2.0
    gamma_D: float = 8.0

    @property
    def gate_time(self):
        return 4.0 * self.tau_Y + 2.0 * self.tau_CZ

    def segments(self):
        """(duration, gate-kind, reset-active) triples for one cycle;
        gate-kind in {ym, yd, cz_d, cz_m, none} with +/- signs."""
        if self.period < self.gate_time:
            raise ValueError("period shorter than the gate sequence")
        return (
            (self.tau_Y, "yd-", False),
            (self.tau_CZ, "cz", False),
            (self.tau_Y, "yd+", False),
            (self.tau_Y, "ym-", False),
            (self.tau_CZ, "cz", False),
            (self.tau_Y, "ym+", False),
            (self.period - self.gate_time, "none", True),
        )


def build_maxwell(omega_C=3500.0, omega_H=2000.0, omega_D=100.0, J=1.0,
                  gamma=1e-3, gamma_D=8.0, T_C=None, T_H=None,
                  tau_Y=0.02, tau_CZ=0.1, period=None):
    """Three-level device between two dissipative qubits, plus a demon
    memory qubit under gate control.

    Simulated in the rotating frame of the bare splittings, where the
    couplings and gate drives are all static; each protocol segment has
    a constant Liouvillian.
    """
    if T_C is None:
        T_C = (4.0 / 7.0) * omega_C
    if T_H is None:
        T_H = 1.5 * omega_H
    n_C = lindblad.bose_occupation(omega_C, T_C)
    n_H = lindblad.bose_occupation(omega_H, T_H)
    if period is None:
        period = 4.0 * tau_Y + 2.0 * tau_CZ + 1.0
    layout = SpaceLayout((3, 2, 2, 2), labels=("M", "C", "H", "D"))
    k = lambda a, b: local_operator("ketbra", 3, a=a, b=b)
    m02 = embed(k(0, 2), "M", layout)          # |0_M><2_M|
    m01 = embed(k(0, 1), "M", layout)
    m12 = embed(k(1, 2), "M", layout)
    sm_c = embed(hilbert.sigma_minus(), "C", layout)
    sm_h = embed(hilbert.sigma_minus(), "H", layout)
    sm_d = embed(hilbert.sigma_minus(), "D", layout)
    p1d = embed(local_operator("ketbra", 2, a=1, b=1), "D", layout)
    p2m = embed(k(2, 2), "M", layout)

    h_free = (math.sqrt(2.0) * J * (sm_c @ m02.conj().T
                                    + m02 @ sm_c.conj().T)
              + J * (m01 @ sm_h.conj().T + m01.conj().T @ sm_h))
    a_y = math.pi / (4.0 * tau_Y)
    a_cz = math.pi / tau_CZ
    h_ym = 1j * m12.conj().T - 1j * m12    # i|2_M><1_M| - h.c.
    h_yd = 1j * sm_d.conj().T - 1j * sm_d  # i|1_D><0_D| - h.c.
    h_cz = a_cz * (p2m @ p1d)
    gate_h = {
        "none": np.zeros_like(h_free),
        "ym-": -a_y * h_ym, "ym+": a_y * h_ym,
        "yd-": -a_y * h_yd, "yd+": a_y * h_yd,
        "cz": h_cz,
    }
    therm = [
        LocalBath(sm_c, gamma * (1.0 + n_C)),
        LocalBath(sm_c.conj().T, gamma * n_C),
        LocalBath(sm_h, gamma * (1.0 + n_H)),
        LocalBath(sm_h.conj().T, gamma * n_H),
    ]

    def segment_liouvillian(kind, reset):
        baths = list(therm)
        if reset and gamma_D > 0:
            baths.append(LocalBath(sm_d, gamma_D))
        return local_liouvillian(h_free + gate_h[kind], baths)

    protocol = DemonProtocol(tau_Y, tau_CZ, period, gamma_D)
    s_c = (-math.sqrt(2.0) * 1j * J
           * (sm_c @ m02.conj().T - m02 @ sm_c.conj().T))
    s_h = -1j * J * (m01 @ sm_h.conj().T - m01.conj().T @ sm_h)

    def entropy_system(rho):
        return observables.von_neumann_entropy(
            hilbert.partial_trace(rho, ("M", "C", "H"), layout))

    def entropy_demon(rho):
        return observables.von_neumann_entropy(
            hilbert.partial_trace(rho, ("D",), layout))

    x_inst = (math.exp(-omega_C / T_C)
              / (1.0 + math.exp(-omega_H / T_H) + math.exp(-omega_C / T_C)))
    return Scenario(
        "maxwell", layout,
        dict(omega_C=omega_C, omega_H=omega_H, omega_D=omega_D, J=J,
             gamma=gamma, gamma_D=gamma_D, T_C=T_C, T_H=T_H, n_C=n_C,
             n_H=n_H, tau_Y=tau_Y, tau_CZ=tau_CZ, period=period),
        hamiltonian=h_free,
        observables={
            "P_1C": sm_c.conj().T @ sm_c,
            "P_2M": p2m,
            "P_1M": embed(k(1, 1), "M", layout),
            "P_1H": sm_h.conj().T @ sm_h,
            "P_1D": p1d,
            "s_C": s_c, "s_H": s_h,
            "S_system": entropy_system, "S_demon": entropy_demon,
            "S_total": lambda rho: observables.von_neumann_entropy(rho),
        },
        extras={
            "protocol": protocol,
            "segment_liouvillian": segment_liouvillian,
            "gate_hamiltonians": gate_h,
            "X_inst": x_inst,
            "markov_model": lambda g=gamma: rates.maxwell_markov_liouvillian(
                J=J, gamma=g, n_C=n_C, n_H=n_H),
        })


def build_maxwell_markov(J=1.0, gamma=30.0, omega_C=3500.0, omega_H=2000.0,
                         gamma_D=8.0, T_C=None, T_H=None,
                         tau_Y=0.02, tau_CZ=0.1, period=None):
    """Demon device with the dissipative qubits adiabatically
    eliminated: a three-level system plus the memory qubit, driven by
    the same gate protocol, with effective jump rates replacing the
    qubit-mediated bath couplings."""
    if T_C is None:
        T_C = (4.0 / 7.0) * omega_C
    if T_H is None:
        T_H = 1.5 * omega_H
    n_C = lindblad.bose_occupation(omega_C, T_C)
    n_H = lindblad.bose_occupation(omega_H, T_H)
    if period is None:
        period = 4.0 * tau_Y + 2.0 * tau_CZ + 1.0
    layout = SpaceLayout((3, 2), labels=("M", "D"))
    k = lambda a, b: local_operator("ketbra", 3, a=a, b=b)
    m02 = embed(k(0, 2), "M", layout)
    m01 = embed(k(0, 1), "M", layout)
    m12 = embed(k(1, 2), "M", layout)
    sm_d = embed(hilbert.sigma_minus(), "D", layout)
    p1d = embed(local_operator("ketbra", 2, a=1, b=1), "D", layout)
    p0m = embed(k(0, 0), "M", layout)
    p2m = embed(k(2, 2), "M", layout)
    down_c = 8.0 * (n_C + 1.0) * J ** 2 / (gamma * (2.0 * n_C + 1.0) ** 2)
    up_c = 8.0 * n_C * J ** 2 / (gamma * (2.0 * n_C + 1.0) ** 2)
    down_h = 4.0 * (n_H + 1.0) * J ** 2 / (gamma * (2.0 * n_H + 1.0) ** 2)
    up_h = 4.0 * n_H * J ** 2 / (gamma * (2.0 * n_H + 1.0) ** 2)
    therm = [
        LocalBath(m02, down_c), LocalBath(m02.conj().T, up_c),
        LocalBath(m01, down_h), LocalBath(m01.conj().T, up_h),
    ]
    a_y = math.pi / (4.0 * tau_Y)
    a_cz = math.pi / tau_CZ
    h_ym = 1j * m12.conj().T - 1j * m12
    h_yd = 1j * sm_d.conj().T - 1j * sm_d
    zero = np.zeros_like(p2m)
    gate_h = {
        "none": zero,
        "ym-": -a_y * h_ym, "ym+": a_y * h_ym,
        "yd-": -a_y * h_yd, "yd+": a_y * h_yd,
        "cz": a_cz * (p2m @ p1d),
    }

    def segment_liouvillian(kind, reset):
        baths = list(therm)
        if reset and gamma_D > 0:
            baths.append(LocalBath(sm_d, gamma_D))
        return local_liouvillian(gate_h[kind], baths)

    def j_cold(rho):
        return (up_c * np.trace(p0m @ rho).real
                - down_c * np.trace(p2m @ rho).real)

    def j_hot(rho):
        return (down_h * np.trace(
            embed(k(1, 1), "M", layout) @ rho).real
            - up_h * np.trace(p0m @ rho).real)

    protocol = DemonProtocol(tau_Y, tau_CZ, period, gamma_D)
    return Scenario(
        "maxwell", layout,
        dict(J=J, gamma=gamma, gamma_D=gamma_D, n_C=n_C, n_H=n_H,
             T_C=T_C, T_H=T_H, tau_Y=tau_Y, tau_CZ=tau_CZ, period=period),
        hamiltonian=zero,
        observables={"P_2M": p2m, "P_1M": embed(k(1, 1), "M", layout),
                     "P_1D": p1d, "J_C": j_cold, "J_H": j_hot},
        extras={"protocol": protocol,
                "segment_liouvillian": segment_liouvillian,
                "gate_hamiltonians": gate_h,
                "rates": dict(down_c=down_c, up_c=up_c,
                              down_h=down_h, up_h=up_h)})


def double_shot_excitations(scenario, t_between, substeps=20):
    """Excitations transferred by two demon operations one cycle apart.

    t_between is the full cycle length (operation start to operation
    start); the memory reset runs between the two gate sequences.
    Returns P(1_C) + P(2_M) in the steady state minus the same sum right
    after the second operation.
    """
    from . import solver

    proto = scenario.extras["protocol"]
    seg_liou = scenario.extras["segment_liouvillian"]
    p_sum = (scenario.observables["P_1C"] + scenario.observables["P_2M"])
    rest = t_between - proto.gate_time
    if rest <= 0:
        raise ValueError("cycle shorter than the gate sequence")
    rho = solver.steady_state_direct(seg_liou("none", True))
    x_ss = np.trace(p_sum @ rho).real

    def gates(rho):
        for dur, kind, _ in proto.segments()[:6]:
            rho, _traj = solver.propagate_expm_piecewise(
                seg_liou(kind, False), rho, 0.0, dur, dur / substeps)
        return rho

    rho = gates(rho)
    rho, _traj = solver.propagate_expm_piecewise(
        seg_liou("none", True), rho, 0.0, rest, rest / (10 * substeps))
    rho = gates(rho)
    return x_ss - np.trace(p_sum @ rho).real


def transferred_excitations(times, j_c, j_h, period):
    """Per-cycle excitation transfer integrals.

    times, j_c, j_h: recorded current samples over >= 1 cycle.  Returns
    (X_C per cycle, X_H per cycle, J_av) with trapezoidal integration on
    each [n T, (n+1) T) window.
    """
    times = np.asarray(times, dtype=float)
    j_c = np.asarray(j_c, dtype=float)
    j_h = np.asarray(j_h, dtype=float)
    if times.shape != j_c.shape or times.shape != j_h.shape:
        raise ValueError("current records do not share the time grid")
    ncyc = int(np.floor((times[-1] - times[0]) / period + 1e-9))
    if ncyc < 1:
        raise ValueError("trajectory shorter than one cycle")
    x_c, x_h = [], []
    t0 = times[0]
    for n in range(ncyc):
        mask = (times >= t0 + n * period - 1e-12) & \
               (times <= t0 + (n + 1) * period + 1e-12)
        x_c.append(np.trapezoid(j_c[mask], times[mask]))
        x_h.append(np.trapezoid(j_h[mask], times[mask]))
    x_c = np.asarray(x_c)
    x_h = np.asarray(x_h)
    return x_c, x_h, x_c[-1] / period


# ---------------------------------------------------------------------------
# Bose-Hubbard lattices


@dataclass(frozen=True)
class BoseHubbardBasis:
    """Occupation basis of a rectangular lattice.

    canonical: all occupation lists with sum N and per-site cap;
    grand-canonical: full product basis with per-site level count.
    """

    mode: str
    lattice: tuple
    states: tuple          # occupation tuples, lexicographic
    index: dict            # occupation tuple -> basis index

    @property
    def nsites(self):
        return self.lattice[0] * self.lattice[1]

    @property
    def dim(self):
        return len(self.states)


def _lattice_edges(rows, cols):
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1))
            if r + 1 < rows:
                edges.append((i, i + cols))
    return edges


def bose_hubbard_basis(mode, lattice, n_total=None, cap=3, levels=4):
    """Enumerate the occupation basis (lexicographic order)."""
    rows, cols = lattice
    m = rows * cols
    if mode == "canonical":
        if n_total is None:
            raise ValueError("canonical mode needs a particle number")
        states = [occ for occ in itertools.product(range(cap + 1), repeat=m)
                  if sum(occ) == n_total]
        if not states:
            raise ValueError("empty canonical sector")
    elif mode == "grand-canonical":
        states = list(itertools.product(range(levels), repeat=m))
    else:
        raise ValueError("mode must be canonical or grand-canonical")
    states = tuple(sorted(states))
    return BoseHubbardBasis(mode, (rows, cols), states,
                            {occ: i for i, occ in enumerate(states)})


DISORDER_PRESET = (0.05, -0.02, 0.01, 0.07, 0.05, -0.09, 0.01, -0.05, -0.04)


def sample_disorder(nsites, std=0.05, seed=0):
    """Uniform on-site disorder rescaled to exact zero mean and target
    standard deviation."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=nsites)
    x = x - x.mean()
    s = x.std()
    if s == 0:
        raise ValueError("degenerate disorder sample")
    return x / s * std


def vacuum_boundary_mu(lattice, J=1.0):
    """Chemical potential of the vacuum/superfluid degeneracy line:
    mu = -2J (2x2), -(1+sqrt(2))J (3x2), -2 sqrt(2) J (3x3), -4J
    (infinite lattice)."""
    table = {(2, 2): -2.0, (3, 2): -(1.0 + math.sqrt(2.0)),
             (2, 3): -(1.0 + math.sqrt(2.0)), (3, 3): -2.0 * math.sqrt(2.0),
             None: -4.0}
    key = tuple(lattice) if lattice is not None else None
    if key not in table:
        raise KeyError(f"no boundary value tabulated for {lattice}")
    return table[key] * J


def _bose_hubbard_ops(basis):
    """Sparse per-site number and annihilation operators in the basis."""
    m = basis.nsites
    dim = basis.dim
    numbers = []
    lowers = []
    for site in range(m):
        diag = np.array([occ[site] for occ in basis.states], dtype=float)
        numbers.append(sp.diags(diag).tocsr())
        rows, cols, vals = [], [], []
        for j, occ in enumerate(basis.states):
            if occ[site] == 0:
                continue
            target = list(occ)
            target[site] -= 1
            ti = basis.index.get(tuple(target))
            if ti is not None:
                rows.append(ti)
                cols.append(j)
                vals.append(math.sqrt(occ[site]))
        lowers.append(sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim)))
    return numbers, lowers


def _hop_operator(basis, i, j):
    """Sparse a_i^+ a_j built directly in the basis (stays inside a
    fixed-number sector, unlike a product of truncated ladder
    operators)."""
    rows, cols, vals = [], [], []
    for col, occ in enumerate(basis.states):
        if occ[j] == 0:
            continue
        target = list(occ)
        target[j] -= 1
        target[i] += 1
        ti = basis.index.get(tuple(target))
        if ti is not None:
            rows.append(ti)
            cols.append(col)
            vals.append(math.sqrt(occ[j] * target[i]))
    return sp.csr_matrix((vals, (rows, cols)),
                         shape=(basis.dim, basis.dim))


def build_bose_hubbard(mode="canonical", lattice=(2, 2), N=4, cap=3,
                       mu=0.0, U=1.0, J=0.06, chi=0.0, delta_U=None,
                       seed=None, gamma1=0.0, gamma2=0.0, levels=4):
    """Bose-Hubbard lattice in the rotating (transmon) frame:

        H = -mu sum n_i + (U/2) sum n_i (n_i - 1)
            - J sum_<ij> (a_i a_j^+ + a_i^+ a_j) - sum chi (a_i + a_i^+)
            + sum (dU_i / 2) n_i (n_i - 1).

    canonical mode fixes the particle number (chi must vanish there);
    optional decoherence attaches decay gamma1 and dephasing gamma2 to
    every site.
    """
    if mode == "canonical" and chi != 0.0:
        raise ValueError("a drive breaks particle conservation; "
                         "use grand-canonical mode")
    basis = bose_hubbard_basis(mode, lattice,
                               n_total=N if mode == "canonical" else None,
                               cap=cap, levels=levels)
    m = basis.nsites
    if delta_U is None:
        du = np.zeros(m)
    elif np.isscalar(delta_U):
        du = sample_disorder(m, std=float(delta_U),
                             seed=0 if seed is None else seed) * U \
            if delta_U != 0.0 else np.zeros(m)
    else:
        du = np.asarray(delta_U, dtype=float) * U
        if du.size != m:
            raise ValueError("disorder list length mismatch")
    numbers, lowers = _bose_hubbard_ops(basis)
    edges = _lattice_edges(*basis.lattice)

    n_tot = sum(numbers[1:], numbers[0])
    h_int = sum(0.5 * (U + du[i]) * (numbers[i] @ numbers[i] - numbers[i])
                for i in range(m))
    h_hop = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for i, j in edges:
        hop = _hop_operator(basis, i, j)
        h_hop = h_hop + hop + hop.conj().T
    h_drive = sum(lowers[i] + lowers[i].conj().T for i in range(m))

    def hamiltonian(mu_v=mu, j_v=J, chi_v=chi):
        hmat = h_int - mu_v * n_tot - j_v * h_hop
        if chi_v != 0.0:
            hmat = hmat - chi_v * h_drive
        return hmat.tocsr()

    h0 = hamiltonian()
    obs = {}
    dens_baths = []
    if gamma1 > 0 or gamma2 > 0:
        for i in range(m):
            if gamma1 > 0:
                dens_baths.append(LocalBath(lowers[i].toarray(), gamma1))
            if gamma2 > 0:
                dens_baths.append(LocalBath(numbers[i].toarray(),
                                            2.0 * gamma2))

    def order(state):
        return observables.order_parameters(
            state, None,
            number_ops=[n.toarray() for n in numbers],
            mode_ops=[a.toarray() for a in lowers])

    _super_cache = {}

    def liouvillian(mu_v=mu, j_v=J, chi_v=chi):
        # generator is linear in the ramp parameters, so each sparse
        # superoperator block is assembled once and reused
        if not _super_cache:
            _super_cache["int"] = lindblad._hamiltonian_part(h_int.toarray())
            _super_cache["n"] = lindblad._hamiltonian_part(n_tot.toarray())
            _super_cache["hop"] = lindblad._hamiltonian_part(h_hop.toarray())
            _super_cache["drv"] = lindblad._hamiltonian_part(
                h_drive.toarray())
            diss = sp.csr_matrix((basis.dim ** 2, basis.dim ** 2),
                                 dtype=complex)
            for bath in dens_baths:
                diss = diss + lindblad._jump_part(bath.jump, bath.rate)
            _super_cache["diss"] = diss
        mat = (_super_cache["int"] - mu_v * _super_cache["n"]
               - j_v * _super_cache["hop"] + _super_cache["diss"])
        if chi_v != 0.0:
            mat = mat - chi_v * _super_cache["drv"]
        return lindblad.Liouvillian(mat.tocsr(), basis.dim)

    return Scenario(
        "bose_hubbard", None,
        dict(mode=mode, lattice=tuple(lattice), N=N, cap=cap, mu=mu, U=U,
             J=J, chi=chi, gamma1=gamma1, gamma2=gamma2),
        hamiltonian=h0, baths=tuple(dens_baths),
        observables={"order_parameters": order,
                     "n": lambda state: order(state)[0],
                     "a": lambda state: order(state)[1],
                     "kappa": lambda state: order(state)[2]},
        extras={"basis": basis, "hamiltonian": hamiltonian,
                "liouvillian": liouvillian,
                "numbers": numbers, "lowers": lowers,
                "disorder": du, "edges": edges})
