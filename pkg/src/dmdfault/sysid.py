"""Truncated SVD, pseudoinverse, DMD and DMD with control."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShapeError
from .timeseries import DelayConfig, SnapshotMatrices

# singular values below this fraction of the largest are treated as zero
ZERO_TOL = 1e-12

DEFAULT_ENERGY = 0.999


@dataclass(frozen=True, eq=False)
class SvdFactors:
    Psi: np.ndarray
    Sigma: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return self.Sigma.size

    def reconstruct(self) -> np.ndarray:
        return (self.Psi * self.Sigma) @ self.V.T


@dataclass(frozen=True, eq=False)
class ReducedModel:
    Atilde: np.ndarray
    basis: np.ndarray
    # full operator X' V_r S_r^-1 Psi_r^T, kept for reconstruction
    A: np.ndarray = field(repr=False)

    def project(self, x) -> np.ndarray:
        return self.basis.T @ np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class LtiModel:
    """Identified ``x_{k+1} = A x_k + B y_k`` with its embedding configuration."""

    A: np.ndarray
    B: np.ndarray
    delay_cfg: DelayConfig = DelayConfig()
    state_channel: str = "x"
    input_channels: tuple[str, ...] = ()

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(A.shape[0], -1)
        if A.shape[0] != A.shape[1]:
            raise ShapeError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise ShapeError(f"B has {B.shape[0]} rows, A has dimension {A.shape[0]}")
        if B.shape[1] != len(self.input_channels):
            raise ShapeError(
                f"B has {B.shape[1]} columns but {len(self.input_channels)} input channels")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "input_channels", tuple(self.input_channels))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    def step(self, x, y=()) -> np.ndarray:
        return self.A @ x + self.B @ np.asarray(y, dtype=float).reshape(self.p)


def _check_policy(rank, energy):
    if rank is not None and energy is not None:
        raise ParameterError("give either a fixed rank or an energy fraction, not both")
    if rank is not None and (int(rank) != rank or rank < 1):
        raise ParameterError(f"rank must be a positive integer, got {rank}")
    if energy is not None and not 0.0 < energy <= 1.0:
        raise ParameterError(f"energy fraction must lie in (0, 1], got {energy}")


def truncated_svd(M, rank: int | None = None, energy: float | None = None) -> SvdFactors:
    """Thin SVD truncated to a fixed ``rank`` or the smallest rank holding ``energy``.

    With neither given all singular values are kept.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        raise ShapeError("cannot decompose an empty matrix")
    _check_policy(rank, energy)
    Psi, S, Vt = np.linalg.svd(M, full_matrices=False)
    if rank is not None:
        if rank > S.size:
            raise ParameterError(f"rank {rank} exceeds min dimension {S.size}")
        r = rank
    elif energy is not None:
        cum = np.cumsum(S ** 2)
        if cum[-1] == 0.0:
            r = 1
        else:
            r = int(np.searchsorted(cum / cum[-1], energy, side="left")) + 1
            r = min(r, S.size)
    else:
        r = S.size
    return SvdFactors(Psi[:, :r], S[:r].copy(), Vt[:r].T)


def _nonzero(f: SvdFactors) -> SvdFactors:
    if f.Sigma.size == 0 or f.Sigma[0] == 0.0:
        return SvdFactors(f.Psi[:, :0], f.Sigma[:0], f.V[:, :0])
    keep = f.Sigma > ZERO_TOL * f.Sigma[0]
    return SvdFactors(f.Psi[:, keep], f.Sigma[keep], f.V[:, keep])


def pseudoinverse(M) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    f = _nonzero(truncated_svd(M))
    return (f.V / f.Sigma) @ f.Psi.T


def dmd_fit(snaps: SnapshotMatrices) -> np.ndarray:
    """Least-squares operator ``A = X' X^+``."""
    if snaps.U.shape[0]:
        raise ShapeError("dmd_fit takes snapshots without inputs; use dmdc_fit")
    return snaps.Xp @ pseudoinverse(snaps.X)


def dmd_fit_reduced(snaps: SnapshotMatrices, rank: int | None = None,
                    energy: float | None = None) -> ReducedModel:
    """Operator advancing the coordinates ``Psi_r^T x`` on the leading ``r`` modes of X."""
    if rank == 0:
        raise ParameterError("rank must be at least 1")
    f = _nonzero(truncated_svd(snaps.X, rank=rank, energy=energy))
    if f.rank == 0:
        raise ParameterError("snapshot matrix is identically zero")
    XVS = (snaps.Xp @ f.V) / f.Sigma
    return ReducedModel(Atilde=f.Psi.T @ XVS, basis=f.Psi, A=XVS @ f.Psi.T)


def dmdc_fit(snaps: SnapshotMatrices, rank: int | None = None,
             energy: float | None = DEFAULT_ENERGY, *,
             delay_cfg: DelayConfig = DelayConfig(1, 0),
             state_channel: str = "x", input_channels=None) -> LtiModel:
    """Regress ``[A B] = X' [X; U]^+`` through a truncated SVD of the stacked data.

    Without inputs this reduces to :func:`dmd_fit` and ``B`` has width 0.
    """
    n, p = snaps.X.shape[0], snaps.U.shape[0]
    if input_channels is None:
        input_channels = tuple(f"u{i}" for i in range(p))
    if len(input_channels) != p:
        raise ShapeError(f"{len(input_channels)} input names for {p} input rows")
    if p == 0:
        return LtiModel(dmd_fit(snaps), np.zeros((n, 0)), delay_cfg, state_channel, ())
    if rank is not None:
        energy = None
    Omega = np.vstack([snaps.X, snaps.U])
    if not np.any(Omega):
        raise ParameterError("stacked snapshot/input matrix is identically zero")
    f = _nonzero(truncated_svd(Omega, rank=rank, energy=energy))
    XVS = (snaps.Xp @ f.V) / f.Sigma
    A = XVS @ f.Psi[:n].T
    B = XVS @ f.Psi[n:].T
    return LtiModel(A, B, delay_cfg, state_channel, tuple(input_channels))


def eigenvalues(A) -> np.ndarray:
    """Eigenvalues sorted by descending magnitude, then descending real part.

    Complex pairs are returned as exact conjugates, positive imaginary part first.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise ShapeError(f"eigenvalues need a square matrix, got {A.shape}")
    lam = np.linalg.eigvals(A)
    scale = max(1.0, float(np.max(np.abs(lam)))) if lam.size else 1.0
    tol = 1e-13 * scale
    real = lam[np.abs(lam.imag) <= tol].real
    upper = lam[lam.imag > tol]
    lower = lam[lam.imag < -tol]
    if upper.size != lower.size:
        raise ShapeError("spectrum of a real matrix is not conjugate-symmetric")
    # pair each upper eigenvalue with its own conjugate; LAPACK emits pairs together
    out = [complex(r, 0.0) for r in real]
    for z in upper:
        out += [complex(z), complex(z).conjugate()]
    out.sort(key=lambda z: (-abs(z), -z.real, -z.imag))
    return np.array(out, dtype=complex)
