"""Dense and sparse complex linear-algebra kernels.

Storage convention: dense matrices are numpy arrays of complex128 in
row-major (C) order; vectorization elsewhere in the package is column
stacking, i.e. vec(rho) = rho.reshape(-1, order="F").  All arithmetic is
double-precision complex throughout.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

__all__ = [
    "kron",
    "hermitian_eig",
    "null_space",
    "lanczos_extremal",
    "krylov_expm_action",
    "is_hermitian",
    "LinalgError",
    "IterationError",
]

#: refuse tensor products beyond this total dimension
MAX_DIM = 2**22

#: full reorthogonalization below this dimension, selective above
FULL_REORTH_DIM = 10_000


class LinalgError(ValueError):
    pass


class IterationError(RuntimeError):
    """Non-convergence of an iterative method; carries the best residual."""

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


def is_hermitian(a, tol=1e-12):
    a = np.asarray(a)
    scale = max(np.abs(a).max(), 1.0)
    return np.abs(a - a.conj().T).max() < tol * scale


def kron(a, b):
    """Tensor product a (x) b, (a x b)[i*rb+k, j*cb+l] = a[i,j] b[k,l]."""
    if sp.issparse(a) or sp.issparse(b):
        out = sp.kron(sp.csr_matrix(a), sp.csr_matrix(b), format="csr")
        if out.shape[0] * out.shape[1] > MAX_DIM**2:
            raise LinalgError("kron result exceeds configured capacity")
        return out
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[0] * b.shape[0] > MAX_DIM or a.shape[1] * b.shape[1] > MAX_DIM:
        raise LinalgError("kron result exceeds configured capacity")
    return np.kron(a, b)


def hermitian_eig(a):
    """Eigendecomposition of a hermitian matrix.

    Returns (eigenvalues ascending, eigenvectors as columns).
    """
    a = np.asarray(a, dtype=complex)
    if not is_hermitian(a, tol=1e-10):
        raise LinalgError("hermitian_eig requires a hermitian matrix")
    vals, vecs = sla.eigh(a)
    return vals, vecs


def null_space(a, tol=None):
    """Orthonormal basis of the right null space of a square matrix.

    A singular value s is considered zero when s <= tol (default
    1e-10 * sigma_max).  Returns an (n, k) array of basis columns; k may
    be zero.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape[0] != a.shape[1]:
        raise LinalgError("null_space requires a square matrix")
    u, s, vh = sla.svd(a)
    smax = s[0] if s.size else 0.0
    if tol is None:
        tol = 1e-10 * smax
    if smax == 0.0:
        return np.eye(a.shape[0], dtype=complex)
    mask = s <= tol
    return vh[mask].conj().T


def _lanczos_tridiag(matvec, v0, max_iter, reorth):
    """Lanczos recursion with optional full reorthogonalization."""
    n = v0.shape[0]
    m = min(max_iter, n)
    V = np.empty((m + 1, n), dtype=complex)
    alpha = np.empty(m)
    beta = np.empty(m)
    V[0] = v0 / np.linalg.norm(v0)
    b_prev = 0.0
    k = 0
    for k in range(m):
        w = matvec(V[k])
        if k > 0:
            w = w - b_prev * V[k - 1]
        a_k = np.vdot(V[k], w).real
        w = w - a_k * V[k]
        if reorth:
            # two passes of classical Gram-Schmidt against all previous vectors
            for _ in range(2):
                coeffs = V[: k + 1].conj() @ w
                w = w - coeffs @ V[: k + 1]
        b_k = np.linalg.norm(w)
        alpha[k] = a_k
        beta[k] = b_k
        if b_k < 1e-14:
            k += 1
            break
        V[k + 1] = w / b_k
        b_prev = b_k
    else:
        k = m
    return alpha[:k], beta[:k], V[: k + 1]


def lanczos_extremal(h, which="lowest", tol=1e-10, max_iter=500, seed=7):
    """Extremal eigenpair of a sparse hermitian matrix via Lanczos.

    Full reorthogonalization is used below dimension 1e4 (ghost
    eigenvalue suppression); above that a selective two-pass
    orthogonalization against the running basis is still applied every
    iteration, which at the dimensions handled here is affordable.
    """
    if which not in ("lowest", "highest"):
        raise LinalgError("which must be 'lowest' or 'highest'")
    h = sp.csr_matrix(h)
    n = h.shape[0]
    if n < 2:
        raise LinalgError("lanczos_extremal requires dimension >= 2")
    sign = 1.0 if which == "lowest" else -1.0
    matvec = (lambda x: sign * (h @ x))
    hnorm = sp.linalg.norm(h, np.inf)
    if hnorm == 0:
        v = np.zeros(n, dtype=complex)
        v[0] = 1.0
        return 0.0, v
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    reorth = n < FULL_REORTH_DIM
    best = None
    block = min(max_iter, max(40, min(n, 80)))
    total = 0
    while total < max_iter:
        alpha, beta, V = _lanczos_tridiag(matvec, v0, block, reorth)
        k = len(alpha)
        T = np.diag(alpha)
        if k > 1:
            off = beta[: k - 1]
            T += np.diag(off, 1) + np.diag(off, -1)
        tvals, tvecs = sla.eigh(T)
        theta = tvals[0]
        y = tvecs[:, 0]
        v = y @ V[:k]
        v = v / np.linalg.norm(v)
        resid = np.linalg.norm(matvec(v) - theta * v)
        best = (sign * theta, sign * 1.0, v, resid)
        if resid <= tol * hnorm:
            return sign * theta, v
        v0 = v  # restart from the current Ritz vector
        total += k
        if k < block:  # invariant subspace hit
            break
    if best is not None and best[3] <= tol * hnorm:
        return best[0], best[2]
    raise IterationError(
        f"lanczos_extremal did not converge (residual {best[3]:.3e})",
        residual=best[3],
    )


def krylov_expm_action(h, v, dt, tol=1e-10, hermitian=True, max_krylov=40):
    """Apply exp(-i h dt) to v via a (restarted) Krylov projection.

    For hermitian h a Lanczos basis is used; otherwise an Arnoldi basis.
    The step is subdivided adaptively until the embedded error estimate
    meets tol.
    """
    v = np.asarray(v, dtype=complex)
    if not np.isfinite(dt):
        raise LinalgError("dt must be finite")
    if dt == 0.0:
        return v.copy()
    if sp.issparse(h):
        matvec = lambda x: h @ x
        hnorm = sp.linalg.norm(h, np.inf)
    else:
        h = np.asarray(h, dtype=complex)
        matvec = lambda x: h @ x
        hnorm = np.linalg.norm(h, np.inf)
    if hnorm == 0.0:
        return v.copy()
    return _expm_action(matvec, v, -1j * dt, tol, max_krylov, hnorm * abs(dt))


def expm_action(matvec, v, t, tol=1e-10, max_krylov=40, op_scale=None):
    """Apply exp(t * A) to v where A is given only through matvec.

    Generic Arnoldi propagator; used for Liouvillian stepping as well as
    unitary propagation.  `op_scale` is an estimate of |t| * ||A|| used
    to pick the number of substeps.
    """
    v = np.asarray(v, dtype=complex)
    if t == 0:
        return v.copy()
    if op_scale is None:
        op_scale = abs(t) * np.linalg.norm(matvec(v)) / max(np.linalg.norm(v), 1e-300)
    return _expm_action(matvec, v, t, tol, max_krylov, op_scale)


def _expm_action(matvec, v, t, tol, max_krylov, op_scale):
    nsub = max(1, int(np.ceil(op_scale / max_krylov)))
    w = v.copy()
    for _ in range(nsub):
        w = _expm_action_single(matvec, w, t / nsub, tol / nsub, max_krylov)
    return w


def _expm_action_single(matvec, v, t, tol, max_krylov):
    beta = np.linalg.norm(v)
    if beta == 0.0:
        return v.copy()
    n = v.shape[0]
    m = min(max_krylov, n)
    V = np.empty((m + 1, n), dtype=complex)
    H = np.zeros((m + 1, m), dtype=complex)
    V[0] = v / beta
    used = m
    for j in range(m):
        w = matvec(V[j])
        # modified Gram-Schmidt, two passes
        for _ in range(2):
            for i in range(j + 1):
                c = np.vdot(V[i], w)
                H[i, j] += c
                w = w - c * V[i]
        hn = np.linalg.norm(w)
        H[j + 1, j] = hn
        if hn < 1e-14:  # happy breakdown: exact result in this subspace
            used = j + 1
            break
        V[j + 1] = w / hn
        # error estimate every few steps once the subspace is non-trivial
        if j >= 3 and (j % 4 == 0 or j == m - 1):
            eH = sla.expm(t * H[: j + 1, : j + 1])
            err = abs(t) * hn * abs(eH[j, 0]) * beta
            if err < tol:
                used = j + 1
                break
    eH = sla.expm(t * H[:used, :used])
    return beta * (eH[:, 0] @ V[:used])
