"""Kraus channels for inner-product changes, and their certificates.

The central objects are the rank-1 channel G_eta with Kraus operator
eta^{1/2} (realizable whenever eta <= I) and its scaled reversal with Kraus
sqrt(kappa) * eta^{-1/2}, kappa = 1/||eta^{-1}||. Composing the two gives
kappa times the identity, which is the "reversal with probability kappa"
property. The map E_eta: M -> M eta is exposed as a plain matrix map, not a
KrausChannel: its output lives in the changed-inner-product representation,
and only the factorized form (representation change after G_eta) is a
completely positive map with respect to the Euclidean adjoint.

Complete positivity is certified through the Choi matrix
C = sum_ij |i><j| (x) Phi(|i><j|), which is positive semidefinite exactly
for completely positive Phi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatchError, MetricExceedsIdentityError, MetriqError
from .hilbert import MetricOperator, matrix_from_json, matrix_to_json
from .linalg import HermitianEigensystem, as_matrix, hermitian_eig


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """A list of Kraus operators, each of shape dim_out x dim_in.

    The constructor checks shapes and finiteness only; every factory in this
    module produces trace-nonincreasing channels, and
    is_trace_nonincreasing() certifies the property for arbitrary operator
    lists (including deliberately unphysical ones built in tests).
    """

    kraus_ops: tuple
    dim_in: int
    dim_out: int

    def __post_init__(self):
        ops = tuple(as_matrix(k) for k in self.kraus_ops)
        for k in ops:
            if k.shape != (self.dim_out, self.dim_in):
                raise DimMismatchError(
                    f"Kraus operator shape {k.shape} != ({self.dim_out}, {self.dim_in})"
                )
        object.__setattr__(self, "kraus_ops", ops)


def kraus_channel(ops) -> KrausChannel:
    """Build a KrausChannel, reading dimensions off the first operator."""
    mats = [as_matrix(k) for k in ops]
    if not mats:
        raise MetriqError("a channel needs at least one Kraus operator")
    dim_out, dim_in = mats[0].shape
    return KrausChannel(tuple(mats), dim_in=dim_in, dim_out=dim_out)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    matrix: np.ndarray
    dim_in: int
    dim_out: int


def g_eta(eta: MetricOperator) -> KrausChannel:
    """The metric channel M -> eta^{1/2} M eta^{1/2} (single Kraus operator)."""
    if not eta.subidentity:
        raise MetricExceedsIdentityError(
            f"metric norm {eta.norm:.12g} > 1; rescale via scaled_metric first"
        )
    root = eta.sqrt()
    return KrausChannel((root,), dim_in=eta.dim, dim_out=eta.dim)


def apply_e_eta(eta: MetricOperator, matrix) -> np.ndarray:
    """The inner-product-change map M -> M eta.

    Equals the representation change applied to the G_eta output, which is
    how the non-CP-looking right multiplication is physically realized.
    """
    m = as_matrix(matrix)
    if m.shape[0] != m.shape[1]:
        raise DimMismatchError("E_eta needs a square matrix")
    if m.shape[0] != eta.dim:
        raise DimMismatchError(f"matrix dim {m.shape[0]} != metric dim {eta.dim}")
    if not eta.subidentity:
        raise MetricExceedsIdentityError(f"metric norm {eta.norm:.12g} > 1")
    return m @ eta.matrix


def scaled_metric(eta: MetricOperator) -> tuple[float, MetricOperator]:
    """(kappa, kappa * eta) with kappa = min(1, 1/||eta||).

    Already-subidentity metrics pass through with kappa exactly 1. The
    scaled operator reuses the cached eigenvectors.
    """
    if eta.subidentity:
        return 1.0, eta
    kappa = 1.0 / eta.norm
    eig = HermitianEigensystem(eta.eig.eigenvalues * kappa, eta.eig.eigenvectors)
    scaled = MetricOperator(
        matrix=eta.matrix * kappa,
        eig=eig,
        norm=float(eig.eigenvalues[-1]),
        subidentity=True,
    )
    return kappa, scaled


def g_kappa_eta_inv(eta: MetricOperator) -> tuple[float, KrausChannel]:
    """Scaled reversal channel: Kraus sqrt(kappa) * eta^{-1/2}, kappa = 1/||eta^{-1}||.

    kappa equals the smallest eigenvalue of eta, so the Kraus operator has
    unit norm and the channel is trace nonincreasing with equality on the
    bottom eigenvector.
    """
    kappa = float(eta.eig.eigenvalues[0])
    k = np.sqrt(kappa) * eta.inv_sqrt()
    return kappa, KrausChannel((k,), dim_in=eta.dim, dim_out=eta.dim)


def apply(ch: KrausChannel, rho) -> np.ndarray:
    """sum_k K rho K^dagger."""
    r = as_matrix(rho)
    if r.shape != (ch.dim_in, ch.dim_in):
        raise DimMismatchError(f"state shape {r.shape} != ({ch.dim_in}, {ch.dim_in})")
    out = np.zeros((ch.dim_out, ch.dim_out), dtype=complex)
    for k in ch.kraus_ops:
        out += k @ r @ k.conj().T
    return out


def compose(outer: KrausChannel, inner: KrausChannel) -> KrausChannel:
    """Sequential composition; keeps the full pairwise Kraus set."""
    if inner.dim_out != outer.dim_in:
        raise DimMismatchError(
            f"inner output dim {inner.dim_out} != outer input dim {outer.dim_in}"
        )
    ops = tuple(a @ b for a in outer.kraus_ops for b in inner.kraus_ops)
    return KrausChannel(ops, dim_in=inner.dim_in, dim_out=outer.dim_out)


def superoperator(ch: KrausChannel) -> np.ndarray:
    """Dense matrix acting on row-major vec: vec(K rho K^dag) = (K (x) conj K) vec(rho)."""
    out = np.zeros((ch.dim_out**2, ch.dim_in**2), dtype=complex)
    for k in ch.kraus_ops:
        out += np.kron(k, k.conj())
    return out


def choi(ch: KrausChannel) -> ChoiMatrix:
    """C = sum_ij |i><j| (x) Phi(|i><j|) = sum_k v_k v_k^dagger, v_k = vec_col(K_k)."""
    size = ch.dim_in * ch.dim_out
    c = np.zeros((size, size), dtype=complex)
    for k in ch.kraus_ops:
        v = np.ravel(k, order="F")
        c += np.outer(v, v.conj())
    return ChoiMatrix(matrix=c, dim_in=ch.dim_in, dim_out=ch.dim_out)


def is_trace_nonincreasing(ch: KrausChannel) -> bool:
    """True iff I - sum K^dagger K >= -1e-10 on the spectrum."""
    s = np.zeros((ch.dim_in, ch.dim_in), dtype=complex)
    for k in ch.kraus_ops:
        s += k.conj().T @ k
    gap = hermitian_eig(np.eye(ch.dim_in) - s)
    return bool(gap.eigenvalues[0] >= -1e-10)


def channel_to_json(ch: KrausChannel) -> dict:
    return {
        "dim_in": ch.dim_in,
        "dim_out": ch.dim_out,
        "kraus": [matrix_to_json(k) for k in ch.kraus_ops],
    }


def channel_from_json(obj) -> KrausChannel:
    if not isinstance(obj, dict) or not {"dim_in", "dim_out", "kraus"} <= set(obj):
        raise MetriqError("channel JSON needs 'dim_in', 'dim_out' and 'kraus' fields")
    ops = tuple(matrix_from_json(k) for k in obj["kraus"])
    return KrausChannel(ops, dim_in=int(obj["dim_in"]), dim_out=int(obj["dim_out"]))
