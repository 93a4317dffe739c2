"""Liouvillian construction: local dissipators, global (Born-Markov)
dissipators via eigenoperator decomposition with optional partial/full
secular approximation, and time-dependent generators.

Vectorization convention is column stacking, vec(rho) = rho.flatten
in Fortran order, so that vec(A rho B) = (B^T kron A) vec(rho) and

    L = -i(I kron H - H^T kron I)
        + sum_n Gamma_n [ conj(A) kron A - 1/2 I kron (A^+A)
                          - 1/2 (A^+A)^T kron I ].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import linalg

__all__ = [
    "LocalBath",
    "GlobalBath",
    "Liouvillian",
    "vec",
    "unvec",
    "dissipator_apply",
    "local_liouvillian",
    "eigenoperator_decompose",
    "global_dissipator",
    "secular_global_liouvillian",
    "ohmic_rate",
    "bose_occupation",
    "time_dependent_liouvillian",
    "TimeDependentLiouvillian",
]


@dataclass(frozen=True)
class LocalBath:
    """A jump operator with a non-negative rate."""

    jump: np.ndarray
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("bath rate must be >= 0")


@dataclass(frozen=True)
class GlobalBath:
    """Hermitian coupling operator with a spectral function gamma(omega).

    secular_cutoff: keep only (omega, omega') pairs with
    |omega - omega'| <= cutoff; inf keeps all pairs, 0 is full secular.
    """

    coupling: np.ndarray
    spectral_function: callable
    secular_cutoff: float = np.inf
    degeneracy_tol: float = None


def _same_basis(b1, b2):
    if b1 is None and b2 is None:
        return True
    if b1 is None or b2 is None:
        return False
    return b1 is b2 or np.array_equal(b1, b2)


class Liouvillian:
    """Constant master-equation generator as a d^2 x d^2 sparse matrix.

    An optional unitary `basis` marks a generator assembled in a rotated
    frame (columns = frame vectors in the computational basis); `apply`
    then maps computational-basis states through that frame and back.
    """

    def __init__(self, matrix, dim, basis=None):
        self.matrix = sp.csr_matrix(matrix)
        self.dim = int(dim)
        self.basis = None if basis is None else np.asarray(basis, dtype=complex)

    def __add__(self, other):
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        if not _same_basis(self.basis, other.basis):
            raise ValueError("cannot add generators assembled in different bases")
        return Liouvillian(self.matrix + other.matrix, self.dim, self.basis)

    def __mul__(self, c):
        return Liouvillian(self.matrix * c, self.dim, self.basis)

    __rmul__ = __mul__

    def apply(self, rho):
        """Action L[rho] in operator form."""
        rho = np.asarray(rho, dtype=complex)
        if self.basis is not None:
            rho = self.basis.conj().T @ rho @ self.basis
        out = unvec(self.matrix @ vec(rho), self.dim)
        if self.basis is not None:
            out = self.basis @ out @ self.basis.conj().T
        return out

    def norm(self):
        return sp.linalg.norm(self.matrix, np.inf)


def vec(rho):
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(v, dim):
    return np.asarray(v, dtype=complex).reshape(dim, dim, order="F")


def dissipator_apply(a, rho):
    """M[A, rho] = A rho A^+ - 1/2 {A^+A, rho}."""
    a = np.asarray(a, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    if a.shape != rho.shape:
        raise ValueError("dimension mismatch between jump operator and state")
    ad = a.conj().T
    ada = ad @ a
    return a @ rho @ ad - 0.5 * (ada @ rho + rho @ ada)


def _hamiltonian_part(h):
    h = sp.csr_matrix(h)
    d = h.shape[0]
    eye = sp.identity(d, dtype=complex, format="csr")
    return -1j * (sp.kron(eye, h, format="csr") - sp.kron(h.T, eye, format="csr"))


def _jump_part(a, rate=1.0):
    a = sp.csr_matrix(a)
    d = a.shape[0]
    eye = sp.identity(d, dtype=complex, format="csr")
    ada = (a.conj().T @ a).tocsr()
    out = sp.kron(a.conj(), a, format="csr")
    out = out - 0.5 * sp.kron(eye, ada, format="csr")
    out = out - 0.5 * sp.kron(ada.T, eye, format="csr")
    return rate * out


def _cross_jump_part(a_w, a_wp, rate):
    """One (omega, omega') pair of the global dissipator:

    (gamma/2) [ A(w) rho A(w')^+ + A(w') rho A(w)^+
                - A(w')^+ A(w) rho - rho A(w)^+ A(w') ].
    """
    a_w = sp.csr_matrix(a_w)
    a_wp = sp.csr_matrix(a_wp)
    d = a_w.shape[0]
    eye = sp.identity(d, dtype=complex, format="csr")
    apa = (a_wp.conj().T @ a_w).tocsr()
    out = sp.kron(a_wp.conj(), a_w, format="csr")
    out = out + sp.kron(a_w.conj(), a_wp, format="csr")
    out = out - sp.kron(eye, apa, format="csr")
    # rho A(w)^+ A(w') term: vec(rho M) = (M^T kron I) vec(rho) with
    # M = A(w)^+ A(w') = apa^+, hence M^T = conj(apa)
    out = out - sp.kron(apa.conj(), eye, format="csr")
    return (rate / 2.0) * out


def local_liouvillian(h, baths=()):
    """L[rho] = -i[H, rho] + sum_n Gamma_n M[A_n, rho]."""
    h = np.asarray(h, dtype=complex)
    if not linalg.is_hermitian(h, tol=1e-10):
        raise ValueError("Hamiltonian must be hermitian")
    d = h.shape[0]
    mat = _hamiltonian_part(h)
    for bath in baths:
        if bath.rate < 0:
            raise ValueError("bath rate must be >= 0")
        a = np.asarray(bath.jump, dtype=complex)
        if a.shape != (d, d):
            raise ValueError("jump operator dimension mismatch")
        if bath.rate > 0:
            mat = mat + _jump_part(a, bath.rate)
    return Liouvillian(mat, d)


def _eigenoperator_blocks(h, a, degeneracy_tol=None):
    """Frequency-binned blocks of A in the eigenbasis of H.

    Returns (vals, vecs, pairs) with pairs a list of (omega, block)
    where block is the sparse restriction of V^+ A V to the index pairs
    (i, j) with E_j - E_i in the omega bin, sorted by omega.
    """
    h = np.asarray(h, dtype=complex)
    a = np.asarray(a, dtype=complex)
    vals, vecs = linalg.hermitian_eig(h)
    hnorm = max(np.abs(vals).max(), 1.0)
    if degeneracy_tol is None:
        degeneracy_tol = 1e-9 * hnorm
    a_eig = vecs.conj().T @ a @ vecs  # A in the energy eigenbasis
    omegas = vals[None, :] - vals[:, None]  # omega[i, j] = E_j - E_i
    flat = omegas.ravel()
    order = np.argsort(flat, kind="stable")
    groups = []  # list of (frequency, [flat indices])
    for idx in order:
        w = flat[idx]
        if groups and abs(w - groups[-1][0]) <= degeneracy_tol:
            groups[-1][1].append(idx)
        else:
            groups.append((w, [idx]))
    d = h.shape[0]
    pairs = []
    amax = max(np.abs(a).max(), 1e-300)
    for w, idxs in groups:
        rows, cols = np.unravel_index(idxs, (d, d))
        data = a_eig[rows, cols]
        keep = np.abs(data) >= 1e-14 * amax
        if not keep.any():
            continue
        block = sp.csr_matrix((data[keep], (rows[keep], cols[keep])),
                              shape=(d, d))
        # representative frequency: mean of the merged bin
        wmean = float(np.mean(omegas[rows, cols]))
        pairs.append((wmean, block))
    return vals, vecs, pairs


def eigenoperator_decompose(h, a, degeneracy_tol=None):
    """Decompose A into eigenoperators A(omega) of H.

    A(omega) = sum_{E' - E = omega} P(E) A P(E') so that
    [H, A(omega)] = -omega A(omega) and sum_omega A(omega) = A.
    Transition frequencies closer than degeneracy_tol (default
    1e-9 * ||H||) are merged.
    """
    _, vecs, pairs = _eigenoperator_blocks(h, a, degeneracy_tol)
    return [(w, vecs @ block.toarray() @ vecs.conj().T)
            for w, block in pairs]


def global_dissipator(h, bath):
    """Born-Markov dissipator N[A, rho, gamma] with a partial secular cut.

    N = sum_{w, w'} (gamma(w)/2) [A(w) rho A(w')^+ + A(w') rho A(w)^+
        - A(w')^+ A(w) rho - rho A(w)^+ A(w')],
    dropping pairs with |w - w'| > secular_cutoff.

    The superoperator is assembled in the energy eigenbasis of H, where
    each A(omega) is sparse; the returned Liouvillian carries that basis
    (see `Liouvillian.apply`).
    """
    h = np.asarray(h, dtype=complex)
    d = h.shape[0]
    _, vecs, pairs = _eigenoperator_blocks(h, bath.coupling,
                                           bath.degeneracy_tol)
    cutoff = bath.secular_cutoff
    ws = np.array([w for w, _ in pairs])
    mat = sp.csr_matrix((d * d, d * d), dtype=complex)
    terms = []
    for i, (w, a_w) in enumerate(pairs):
        g = float(bath.spectral_function(w))
        if g < 0:
            raise ValueError(f"spectral function negative at omega = {w}")
        if g == 0.0:
            continue
        near = (np.abs(ws - w) <= cutoff) | np.isclose(ws, w)
        c_w = sum(pairs[j][1] for j in np.nonzero(near)[0])
        terms.append(_cross_jump_part(a_w, c_w, g).tocoo())
    if terms:
        mat = sp.csr_matrix(
            (np.concatenate([t.data for t in terms]),
             (np.concatenate([t.row for t in terms]),
              np.concatenate([t.col for t in terms]))),
            shape=(d * d, d * d))
    return Liouvillian(mat, d, basis=vecs)


def secular_global_liouvillian(h, baths):
    """Full-secular global master equation:
    L = -i[H, .] + sum_baths sum_w gamma(w) M[A(w), .]."""
    h = np.asarray(h, dtype=complex)
    d = h.shape[0]
    mat = _hamiltonian_part(h)
    for bath in baths:
        eigops = eigenoperator_decompose(h, bath.coupling, bath.degeneracy_tol)
        for w, a_w in eigops:
            g = float(bath.spectral_function(w))
            if g < 0:
                raise ValueError(f"spectral function negative at omega = {w}")
            if g > 0:
                mat = mat + _jump_part(a_w, g)
    return Liouvillian(mat, d)


def bose_occupation(omega, temperature):
    """Bose-Einstein occupation n(omega) = 1/(e^{omega/T} - 1)."""
    if temperature == 0:
        return -1.0 if omega < 0 else 0.0
    x = omega / temperature
    if x > 700:
        return 0.0
    if x < -700:
        return -1.0
    return 1.0 / np.expm1(x)


def ohmic_rate(omega, Gamma, omega_ref, temperature):
    """Ohmic spectral function gamma(w) = Gamma (w/w_ref)(1 + n(w)).

    Continuous at w = 0 with value Gamma T / w_ref; for w < 0 the same
    formula yields the absorption rate Gamma |w|/w_ref n(|w|).
    """
    if omega_ref <= 0:
        raise ValueError("omega_ref must be > 0")
    if omega == 0.0:
        return Gamma * temperature / omega_ref
    return Gamma * (omega / omega_ref) * (1.0 + bose_occupation(omega, temperature))


class TimeDependentLiouvillian:
    """Time-parameterized generator; evaluation at any t yields a valid
    constant Liouvillian.

    Assembled as L(t) = L_const + sum_k f_k(t) * L_k for coefficient
    functions f_k; the harmonic special case L0 + cos(w t) L1 is exposed
    through `harmonic_parts` for periodic steady-state solvers.
    """

    def __init__(self, l_const, terms=(), dim=None):
        self.l_const = l_const
        self.terms = tuple(terms)  # (coefficient function, Liouvillian)
        self.dim = dim if dim is not None else l_const.dim

    def at(self, t):
        mat = self.l_const.matrix
        for f, l_k in self.terms:
            c = f(t)
            if c != 0.0:
                mat = mat + c * l_k.matrix
        return Liouvillian(mat, self.dim)

    def harmonic_parts(self):
        """Return (L0, L1, omega) when the generator has the form
        L0 + cos(omega t) L1, else None."""
        if len(self.terms) != 1:
            return None
        f, l1 = self.terms[0]
        omega = getattr(f, "harmonic_frequency", None)
        if omega is None:
            return None
        return self.l_const, l1, omega


def harmonic_coefficient(omega):
    """cos(omega t) coefficient function tagged with its frequency."""

    def f(t):
        return np.cos(omega * t)

    f.harmonic_frequency = omega
    return f


def time_dependent_liouvillian(h_of_t, baths=(), rate_functions=None,
                               sample_times=(0.0,)):
    """Generic time-dependent generator from callables.

    h_of_t: time -> hermitian matrix.  rate_functions: optional list of
    time -> rate, one per bath (None entries mean constant rate).
    """
    h0 = np.asarray(h_of_t(sample_times[0]), dtype=complex)
    d = h0.shape[0]
    for ts in sample_times:
        if not linalg.is_hermitian(np.asarray(h_of_t(ts)), tol=1e-10):
            raise ValueError("h_of_t must be hermitian at sampled times")

    class _Callable(TimeDependentLiouvillian):
        def __init__(self):
            self.dim = d

        def at(self, t):
            bl = []
            for k, bath in enumerate(baths):
                rate = bath.rate
                if rate_functions is not None and rate_functions[k] is not None:
                    rate = rate_functions[k](t)
                bl.append(LocalBath(bath.jump, rate))
            return local_liouvillian(np.asarray(h_of_t(t), dtype=complex), bl)

        def harmonic_parts(self):
            return None

    return _Callable()
