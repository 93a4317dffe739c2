"""Steady-state and time-evolution solvers for Lindblad generators.

Steady states come from a null-space computation (small systems) or a
trace-constrained sparse solve (large systems).  Time evolution uses
adaptive Runge-Kutta on the vectorized density matrix, Krylov
exponential stepping for pure states and piecewise-constant generators,
and a harmonic-balance fixed point for periodically driven systems.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import linalg
from .lindblad import Liouvillian, vec, unvec

__all__ = [
    "SolverError",
    "Trajectory",
    "RampSchedule",
    "steady_state_direct",
    "propagate_dense",
    "propagate_pure_sparse",
    "propagate_expm_piecewise",
    "steady_state_by_convergence",
    "periodic_steady_state",
    "PeriodicSteadyState",
    "ground_state",
    "adiabatic_run",
]

# superoperator dimensions up to this use the dense SVD null space by
# default (with its kernel-dimension uniqueness check); larger systems
# use the residual-verified sparse solve
DENSE_NULLSPACE_CAP = 700


class SolverError(RuntimeError):
    pass


@dataclass
class Trajectory:
    """Time-evolution record: states (or just observables) on a grid."""

    times: np.ndarray
    states: list = None
    observables: dict = field(default_factory=dict)

    def expect(self, op):
        if self.states is None:
            raise ValueError("trajectory stores no states")
        op = np.asarray(op)
        return np.array([np.trace(op @ r) for r in self.states])


def _hermitize(rho):
    return 0.5 * (rho + rho.conj().T)


def steady_state_direct(liouvillian, check_unique=True, method="auto"):
    """Solve L[rho] = 0, tr rho = 1.

    Small systems use an SVD null space and reject a degenerate
    (multi-dimensional) kernel.  Larger systems use a sparse LU solve
    with one row of L replaced by the trace constraint; the residual of
    the solution is verified instead of the kernel dimension.
    """
    mat = liouvillian.matrix
    d = liouvillian.dim
    n = d * d
    trace_row = np.zeros(n)
    trace_row[:: d + 1] = 1.0
    if method == "auto":
        method = "dense" if n <= DENSE_NULLSPACE_CAP else "sparse"
    if method == "dense":
        ns = linalg.null_space(mat.toarray())
        if ns.shape[1] == 0:
            raise SolverError("no steady state found (empty null space)")
        if check_unique and ns.shape[1] > 1:
            raise SolverError(
                f"steady state is not unique (kernel dimension {ns.shape[1]})"
            )
        v = ns[:, 0]
        tr = trace_row @ v
        if abs(tr) < 1e-12:
            raise SolverError("null-space vector is traceless")
        rho = unvec(v / tr, d)
    else:
        a = mat.tolil(copy=True)
        a[0, :] = trace_row
        b = np.zeros(n, dtype=complex)
        b[0] = 1.0
        try:
            lu = spla.splu(a.tocsc())
        except RuntimeError as exc:
            raise SolverError(
                f"trace-constrained factorization failed "
                f"(degenerate steady state?): {exc}") from exc
        a_csr = a.tocsr()
        if check_unique:
            # one inverse-power step: a huge solution for a random right
            # hand side betrays a (near-)singular trace-constrained
            # system, i.e. a degenerate steady state
            rng = np.random.default_rng(0)
            probe = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            probe /= np.linalg.norm(probe)
            sigma_min = 1.0 / max(np.linalg.norm(lu.solve(probe)), 1e-300)
            if sigma_min < 1e-10 * max(spla.norm(mat, np.inf), 1.0):
                raise SolverError(
                    "steady state is not unique (singular "
                    f"trace-constrained system, sigma_min {sigma_min:.3e})")
        v = lu.solve(b)
        for _ in range(3):  # iterative refinement against ill-conditioning
            r = b - a_csr @ v
            if np.linalg.norm(r) <= 1e-14 * np.linalg.norm(v):
                break
            v = v + lu.solve(r)
        res = np.linalg.norm(mat @ v) / max(np.linalg.norm(v), 1e-300)
        scale = spla.norm(mat, np.inf)
        if res > 1e-8 * max(scale, 1.0):
            raise SolverError(f"steady-state residual too large: {res:.3e}")
        rho = unvec(v, d)
    rho = _hermitize(rho)
    rho = rho / np.trace(rho).real
    basis = getattr(liouvillian, "basis", None)
    if basis is not None:
        rho = basis @ rho @ basis.conj().T
    return rho


def _rhs_factory(liouvillian):
    if hasattr(liouvillian, "at"):
        cached = {}

        def rhs(t, v):
            return liouvillian.at(t).matrix @ v

        return rhs, liouvillian.dim
    mat = liouvillian.matrix

    def rhs(t, v):
        return mat @ v

    return rhs, liouvillian.dim


def propagate_dense(liouvillian, rho0, times, rtol=1e-8, atol=1e-8,
                    diagnose=True):
    """Integrate d rho/dt = L(t)[rho] with adaptive Runge-Kutta.

    Returns a Trajectory with the density matrix at each requested time.
    Trace and positivity are diagnosed (warnings), not enforced.
    """
    rhs, d = _rhs_factory(liouvillian)
    times = np.asarray(times, dtype=float)
    v0 = vec(rho0)
    sol = scipy.integrate.solve_ivp(
        rhs, (times[0], times[-1]), v0, t_eval=times, rtol=rtol, atol=atol,
        method="DOP853",
    )
    if not sol.success:
        raise SolverError(f"integration failed: {sol.message}")
    states = [_hermitize(unvec(sol.y[:, k], d)) for k in range(sol.y.shape[1])]
    if diagnose:
        import warnings

        rho_f = states[-1]
        tr_err = abs(np.trace(rho_f).real - np.trace(rho0).real)
        if tr_err > 1e-6:
            warnings.warn(f"trace drift {tr_err:.2e} during propagation")
        lam_min = np.linalg.eigvalsh(rho_f).min()
        if lam_min < -1e-6:
            warnings.warn(f"negative eigenvalue {lam_min:.2e} in final state")
    return Trajectory(times=times, states=states)


def propagate_pure_sparse(h, psi0, times, tol=1e-10):
    """Closed-system evolution exp(-iHt)|psi0> at the given times."""
    times = np.asarray(times, dtype=float)
    psi = np.asarray(psi0, dtype=complex).copy()
    out = [psi.copy()]
    t_prev = times[0]
    for t in times[1:]:
        dt = t - t_prev
        if dt != 0:
            psi = linalg.krylov_expm_action(h, psi, dt, tol=tol)
        out.append(psi.copy())
        t_prev = t
    return Trajectory(times=times, states=None, observables={"psi": out})


def propagate_expm_piecewise(liouvillian, rho0, t0, t1, dt, tol=1e-9,
                             store_times=None, observables=None):
    """Step d rho/dt = L(t)[rho] with a piecewise-constant generator.

    Each step applies exp(dt * L(t_mid)) to vec(rho) through a Krylov
    projection; exact for constant generators, second-order in dt for
    slowly varying ones.  Optionally records observable expectations at
    step boundaries.
    """
    time_dependent = hasattr(liouvillian, "at")
    d = liouvillian.dim
    v = vec(rho0)
    nsteps = max(1, int(np.ceil((t1 - t0) / dt)))
    h = (t1 - t0) / nsteps
    if not time_dependent:
        mat = liouvillian.matrix
        op_scale = h * spla.norm(mat, np.inf)
        matvec = lambda x: mat @ x
    records = {name: [] for name in (observables or {})}
    rec_times = []
    t = t0
    for k in range(nsteps):
        if time_dependent:
            mat = liouvillian.at(t + 0.5 * h).matrix
            matvec = lambda x, m=mat: m @ x
            op_scale = h * spla.norm(mat, np.inf)
        v = linalg.expm_action(matvec, v, h, tol=tol, op_scale=op_scale)
        t = t0 + (k + 1) * h
        if observables:
            rho = unvec(v, d)
            rec_times.append(t)
            for name, op in observables.items():
                records[name].append(np.trace(op @ rho).real)
    rho = _hermitize(unvec(v, d))
    traj = Trajectory(times=np.asarray(rec_times if observables else [t1]),
                      states=[rho], observables=records)
    return rho, traj


def steady_state_by_convergence(liouvillian, rho0, observables, block,
                                window, threshold=1e-4, dt=None,
                                max_blocks=50):
    """Propagate until tracked observables settle.

    Evolution proceeds in blocks of duration `block`; after each block
    the spread (max - min) of every observable over the trailing
    `window` is compared with `threshold`.  Returns (rho, history dict).
    """
    if dt is None:
        dt = window / 200.0
    rho = np.asarray(rho0, dtype=complex)
    t = 0.0
    history = {name: [] for name in observables}
    history["t"] = []
    for blk in range(max_blocks):
        rho, traj = propagate_expm_piecewise(
            liouvillian, rho, t, t + block, dt, observables=observables)
        t += block
        history["t"].extend(traj.times.tolist())
        for name in observables:
            history[name].extend(traj.observables[name])
        tarr = np.asarray(history["t"])
        mask = tarr >= t - window
        converged = True
        for name in observables:
            vals = np.asarray(history[name])[mask]
            if vals.size < 2 or vals.max() - vals.min() > threshold:
                converged = False
                break
        if converged:
            return rho, history
    raise SolverError(
        f"observables did not settle within {max_blocks} blocks")


class PeriodicSteadyState:
    """Fourier-mode representation of a periodic steady state.

    harmonics maps m -> rho_m with rho(t) = sum_m rho_m e^{i m w t};
    rho_m for negative m is the adjoint of rho_{-m}.  The m = 0 mode is
    the one-period time average.
    """

    def __init__(self, harmonics, omega):
        self.harmonics = dict(harmonics)
        self.omega = omega

    @property
    def average(self):
        return self.harmonics[0]

    def at(self, t):
        rho = np.zeros_like(self.harmonics[0])
        for m, rm in self.harmonics.items():
            rho = rho + rm * np.exp(1j * m * self.omega * t)
        return _hermitize(rho)


def periodic_steady_state(l0, l1, omega, max_harmonics=3,
                          truncation_tol=1e-8):
    """Periodic steady state of L(t) = L0 + cos(w t) L1.

    The Fourier ansatz rho(t) = sum_m rho_m e^{i m w t}, truncated at
    |m| <= max_harmonics, turns the invariance condition into the block
    tridiagonal linear system

        (i m w - L0) rho_m - (L1/2)(rho_{m-1} + rho_{m+1}) = 0,

    closed by tr rho_0 = 1; it is solved exactly with one sparse LU.
    The size of the edge harmonic serves as the truncation estimate.
    """
    d = l0.dim
    n = d * d
    m0 = l0.matrix.tocsr()
    m1 = l1.matrix.tocsr()
    labels = list(range(-max_harmonics, max_harmonics + 1))
    pos = {m: k for k, m in enumerate(labels)}
    eye = sp.identity(n, dtype=complex, format="csr")
    blocks = [[None] * len(labels) for _ in labels]
    for m in labels:
        row = pos[m]
        diag = 1j * m * omega * eye - m0
        if m == 0:
            diag = diag.tolil()
            trace_row = np.zeros(n)
            trace_row[:: d + 1] = 1.0
            diag[0, :] = trace_row
            diag = diag.tocsr()
        blocks[row][row] = diag
        for mm in (m - 1, m + 1):
            if mm in pos:
                off = -0.5 * m1
                if m == 0:
                    off = off.tolil()
                    off[0, :] = 0.0
                    off = off.tocsr()
                blocks[row][pos[mm]] = off
    a = sp.bmat(blocks, format="csc")
    b = np.zeros(len(labels) * n, dtype=complex)
    b[pos[0] * n] = 1.0
    try:
        lu = spla.splu(a)
    except RuntimeError as exc:
        raise SolverError(f"harmonic-balance factorization failed: {exc}") \
            from exc
    v = lu.solve(b)
    rho = {m: v[pos[m] * n:(pos[m] + 1) * n] for m in labels}
    edge = max(np.linalg.norm(rho[max_harmonics]),
               np.linalg.norm(rho[-max_harmonics]))
    if edge > truncation_tol * np.linalg.norm(rho[0]):
        raise SolverError(
            f"harmonic truncation too coarse (edge weight {edge:.2e}); "
            f"increase max_harmonics")
    harmonics = {m: unvec(rho[m], d) for m in labels}
    harmonics[0] = _hermitize(harmonics[0])
    # enforce the adjoint pairing exactly
    for m in range(1, max_harmonics + 1):
        avg = 0.5 * (harmonics[m] + harmonics[-m].conj().T)
        harmonics[m] = avg
        harmonics[-m] = avg.conj().T
    return PeriodicSteadyState(harmonics, omega)


def ground_state(h, tol=1e-10):
    """Lowest eigenpair of a (possibly sparse) hermitian Hamiltonian."""
    if sp.issparse(h) or h.shape[0] > 64:
        val, v = linalg.lanczos_extremal(h, "lowest", tol=tol)
        return val, v
    vals, vecs = linalg.hermitian_eig(np.asarray(h))
    return vals[0], vecs[:, 0]


@dataclass(frozen=True)
class RampSchedule:
    """Piecewise cosine-smooth parameter schedule.

    segments is a sequence of (duration, {param: (start, end)}) entries;
    within a segment p(s) = start + (end - start) (1 - cos(pi s)) / 2,
    s in [0, 1].  Parameters absent from a segment hold their value.
    """

    segments: tuple
    initial: dict

    @property
    def total_time(self):
        return sum(dur for dur, _ in self.segments)

    def values(self, t):
        params = dict(self.initial)
        t_acc = 0.0
        for dur, ramps in self.segments:
            if t >= t_acc + dur:
                for name, (p0, p1) in ramps.items():
                    params[name] = p1
                t_acc += dur
                continue
            s = (t - t_acc) / dur
            w = 0.5 * (1.0 - np.cos(np.pi * s))
            for name, (p0, p1) in ramps.items():
                params[name] = p0 + (p1 - p0) * w
            return params
        return params


def adiabatic_run(h_of_params, schedule, psi0, dt, tol=1e-9,
                  liouvillian_of_params=None, rho0=None):
    """Evolve through a RampSchedule.

    Closed systems evolve the pure state with Krylov exponentials of
    the midpoint Hamiltonian; if `liouvillian_of_params` is given a
    density matrix is stepped with the piecewise-constant generator
    instead.  Returns the final state.
    """
    t_end = schedule.total_time
    nsteps = max(1, int(np.ceil(t_end / dt)))
    h_step = t_end / nsteps
    if liouvillian_of_params is None:
        psi = np.asarray(psi0, dtype=complex).copy()
        for k in range(nsteps):
            t_mid = (k + 0.5) * h_step
            hmat = h_of_params(**schedule.values(t_mid))
            psi = linalg.krylov_expm_action(hmat, psi, h_step, tol=tol)
        return psi

    class _Sched:
        dim = None

        def at(self, t):
            return liouvillian_of_params(**schedule.values(t))

    gen = _Sched()
    gen.dim = int(round(np.sqrt(vec(rho0).size)))
    rho, _ = propagate_expm_piecewise(gen, rho0, 0.0, t_end, h_step, tol=tol)
    return rho
