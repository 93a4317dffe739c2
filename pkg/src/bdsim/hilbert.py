"""Composite Hilbert-space layouts, local operators, embedding, partial
trace, and thermal utilities.

Site ordering in tensor products is left-to-right over the layout list:
site 0 is the slowest-varying index of the composite basis.
Conventions: sigma^- |1> = |0> with |1> the excited state, so
sigma^z = |1><1| - |0><0|;  a |n> = sqrt(n) |n-1>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg

__all__ = [
    "SpaceLayout",
    "local_operator",
    "embed",
    "partial_trace",
    "oscillator_truncation",
    "thermal_state",
    "sigma_x",
    "sigma_y",
    "sigma_z",
    "sigma_plus",
    "sigma_minus",
    "ket",
    "basis_state",
]


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered list of local dimensions of a composite space."""

    dims: tuple
    labels: tuple = None

    def __init__(self, dims, labels=None):
        dims = tuple(int(d) for d in dims)
        if any(d < 2 for d in dims):
            raise ValueError("local dimensions must be >= 2")
        if labels is not None:
            labels = tuple(labels)
            if len(labels) != len(dims):
                raise ValueError("labels must match dims")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self):
        return int(np.prod(self.dims))

    @property
    def nsites(self):
        return len(self.dims)

    def site(self, label):
        return self.labels.index(label)


# Qubit basis (|0>, |1>) with |1> the excited state, so that
# sigma^z = |1><1| - |0><0|, sigma^- = |0><1| lowers energy, and
# sigma^{+-} = (sigma^x +- i sigma^y)/2.
_PAULI = {
    "pauli-x": np.array([[0, 1], [1, 0]], dtype=complex),
    "pauli-y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "pauli-z": np.array([[-1, 0], [0, 1]], dtype=complex),
}


def local_operator(kind, dim, a=None, b=None):
    """Matrix of a named single-site operator at truncation `dim`.

    kinds: pauli-x|pauli-y|pauli-z|raise|lower|annihilate|create|number|
    ketbra (with indices a, b) | identity.
    """
    dim = int(dim)
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if kind in _PAULI:
        if dim != 2:
            raise ValueError(f"{kind} requires dim = 2")
        return _PAULI[kind].copy()
    if kind == "identity":
        return np.eye(dim, dtype=complex)
    if kind in ("raise", "lower"):
        if dim != 2:
            raise ValueError(f"{kind} requires dim = 2")
        out = np.zeros((2, 2), dtype=complex)
        if kind == "lower":
            out[0, 1] = 1.0  # sigma^- |1> = |0>
        else:
            out[1, 0] = 1.0
        return out
    if kind in ("annihilate", "create"):
        n = np.sqrt(np.arange(1, dim))
        out = np.zeros((dim, dim), dtype=complex)
        out[np.arange(dim - 1), np.arange(1, dim)] = n
        return out if kind == "annihilate" else out.conj().T
    if kind == "number":
        return np.diag(np.arange(dim, dtype=complex))
    if kind == "ketbra":
        if a is None or b is None:
            raise ValueError("ketbra requires indices a and b")
        if not (0 <= a < dim and 0 <= b < dim):
            raise ValueError("ketbra indices out of range")
        out = np.zeros((dim, dim), dtype=complex)
        out[a, b] = 1.0
        return out
    raise ValueError(f"unknown operator kind: {kind}")


def sigma_x():
    return local_operator("pauli-x", 2)


def sigma_y():
    return local_operator("pauli-y", 2)


def sigma_z():
    return local_operator("pauli-z", 2)


def sigma_plus():
    return local_operator("raise", 2)


def sigma_minus():
    return local_operator("lower", 2)


def ket(index, dim):
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def basis_state(occupations, layout):
    """Product basis vector |n_0 n_1 ...> for the given layout."""
    idx = 0
    for n, d in zip(occupations, layout.dims):
        if not 0 <= n < d:
            raise ValueError("occupation out of range")
        idx = idx * d + n
    return ket(idx, layout.dim)


def embed(op, site, layout):
    """Embed a single-site operator into the full space (identity elsewhere)."""
    op = np.asarray(op, dtype=complex)
    if isinstance(site, str):
        site = layout.site(site)
    if not 0 <= site < layout.nsites:
        raise IndexError("site out of range")
    if op.shape != (layout.dims[site], layout.dims[site]):
        raise ValueError("operator dims do not match the site dimension")
    left = int(np.prod(layout.dims[:site], initial=1))
    right = int(np.prod(layout.dims[site + 1:], initial=1))
    out = op
    if left > 1:
        out = linalg.kron(np.eye(left, dtype=complex), out)
    if right > 1:
        out = linalg.kron(out, np.eye(right, dtype=complex))
    return out


def partial_trace(rho, keep, layout):
    """Reduced density matrix over the sites in `keep` (ordered as given
    by their position in the layout)."""
    keep = [layout.site(s) if isinstance(s, str) else s for s in keep]
    if len(set(keep)) != len(keep):
        raise ValueError("keep contains duplicate sites")
    if not keep:
        raise ValueError("keep must be non-empty")
    keep = sorted(keep)
    dims = layout.dims
    n = len(dims)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (layout.dim, layout.dim):
        raise ValueError("state dims do not match layout")
    tens = rho.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    row_axes = keep + traced
    col_axes = [n + i for i in row_axes]
    tens = tens.transpose(row_axes + col_axes)
    dkeep = int(np.prod([dims[i] for i in keep], initial=1))
    dtr = int(np.prod([dims[i] for i in traced], initial=1))
    tens = tens.reshape(dkeep, dtr, dkeep, dtr)
    return np.trace(tens, axis1=1, axis2=3)


def oscillator_truncation(nbar, p_cut=1e-3):
    """Number of kept oscillator levels for a thermal occupation nbar.

    Keeps m_max + 1 levels with m_max chosen so that the thermal weight
    above the cut is below p_cut; at least 3 levels are always kept.
    """
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    if nbar == 0:
        return 3
    m_max = math.ceil(math.log((nbar + 1) * p_cut) / (math.log(nbar) - math.log(nbar + 1)))
    return max(m_max + 1, 3)


def thermal_state(h, temperature):
    """Gibbs state exp(-H/T)/Z; T = 0 yields the (degeneracy-averaged)
    ground-state projector."""
    h = np.asarray(h, dtype=complex)
    vals, vecs = linalg.hermitian_eig(h)
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    if temperature == 0.0:
        scale = max(abs(vals[0]), abs(vals[-1]), 1.0)
        deg = np.abs(vals - vals[0]) <= 1e-12 * scale
        p = deg.astype(float)
    else:
        e = vals - vals.min()  # shift to avoid overflow
        p = np.exp(-e / temperature)
    p /= p.sum()
    return (vecs * p) @ vecs.conj().T
