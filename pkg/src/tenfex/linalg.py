"""Economy SVD and singular-mass threshold truncation.

Every rank decision in the decompositions goes through `svd_truncate`: it
keeps the minimal leading set of singular values whose share of the total
first-power singular mass reaches the threshold.  A squared-mass (energy)
variant exists behind a flag but is off by default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Relative floor below which singular values count as numerical zeros and
# never participate in the mass ratio.
NUMERICAL_RANK_CUTOFF = 1e-13


class SvdConvergenceError(RuntimeError):
    """Raised when the SVD iteration fails on every available backend."""


@dataclass(frozen=True)
class SvdResult:
    """Economy (possibly truncated) SVD: u @ diag(s) @ vt approximates the input.

    `discarded_sq` is the squared singular mass dropped by truncation; it is
    exactly the squared Frobenius error of the rank-`rank` reconstruction.
    """

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray
    rank: int
    discarded_sq: float = 0.0


def _fix_signs(u: np.ndarray, vt: np.ndarray) -> None:
    # Deterministic orientation: the largest-magnitude entry of each left
    # singular vector is positive, with the compensating flip on vt.
    for i in range(u.shape[1]):
        col = u[:, i]
        j = int(np.argmax(np.abs(col)))
        if col[j] < 0:
            u[:, i] = -col
            vt[i, :] = -vt[i, :]


def svd_economy(m: np.ndarray) -> SvdResult:
    """Full economy SVD with a deterministic sign convention."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("svd_economy expects a 2-D matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but sturdier.
        import scipy.linalg

        try:
            u, s, vt = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
        except Exception as exc:
            raise SvdConvergenceError("SVD failed to converge on both backends") from exc
    u = np.ascontiguousarray(u)
    vt = np.ascontiguousarray(vt)
    _fix_signs(u, vt)
    return SvdResult(u, s, vt, rank=int(s.size))


def svd_truncate(m: np.ndarray, eps: float, squared_mass: bool = False) -> SvdResult:
    """Truncated SVD keeping the minimal rank whose singular-mass share >= eps.

    The ratio test runs on first-power singular values by default
    (`squared_mass=True` switches to the energy criterion).  Values below
    NUMERICAL_RANK_CUTOFF relative to the largest are zeroed before the test,
    so eps = 1 truncates exactly at the numerical rank.  An all-zero matrix
    yields rank 0 (empty factors), which is documented rather than an error.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must be in (0, 1], got {eps}")
    full = svd_economy(m)
    s = full.s
    if s.size == 0 or s[0] <= 0.0:
        return SvdResult(full.u[:, :0], s[:0], full.vt[:0, :], 0, 0.0)
    mass = s.copy()
    mass[mass < NUMERICAL_RANK_CUTOFF * s[0]] = 0.0
    if squared_mass:
        mass = mass**2
    cum = np.cumsum(mass)
    # First index reaching eps * total; ties resolve to the smaller rank.
    rank = int(np.searchsorted(cum, eps * cum[-1], side="left")) + 1
    discarded_sq = float(np.dot(s[rank:], s[rank:]))
    return SvdResult(full.u[:, :rank], s[:rank], full.vt[:rank, :], rank, discarded_sq)
