"""Dense N-order tensors and the multilinear primitives built on them.

The canonical linearization is leftmost-index-fastest (column-major).  That
choice makes every prefix split (first j modes versus the rest) a
metadata-only reshape, which the decomposition sweeps rely on; single-mode
matricization then becomes a gather.  All user-facing mode and split
arguments are 1-based to keep the index formulas auditable; internal numpy
axes are 0-based.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from math import prod

import numpy as np

DTF_MAGIC = b"DTF1"


class DenseTensor:
    """Immutable dense real tensor, 64-bit floats, order >= 1.

    Construction copies the input into a column-major buffer, rejects
    non-finite entries, and freezes the data, so instances are safe to
    share across threads.
    """

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64, order="F", copy=True)
        if arr.ndim == 0:
            raise ValueError("tensor order must be >= 1")
        if any(e < 1 for e in arr.shape):
            raise ValueError(f"every extent must be >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor entries must be finite")
        arr.flags.writeable = False
        self._data = arr

    @property
    def data(self) -> np.ndarray:
        """The underlying read-only array (column-major)."""
        return self._data

    @property
    def shape(self) -> tuple[int, ...]:
        return self._data.shape

    @property
    def order(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return self._data.size

    def ravel(self) -> np.ndarray:
        """Entries in canonical (leftmost-index-fastest) order."""
        return self._data.reshape(-1, order="F")

    def __repr__(self) -> str:
        return f"DenseTensor(shape={self.shape})"


@dataclass(frozen=True)
class MatricizedView:
    """A tensor flattened to a matrix, with enough metadata to invert.

    Exactly one of `mode` (single-mode rows) or `split` (rows carry the
    first `split` modes) is set; both are 1-based.
    """

    matrix: np.ndarray
    source_shape: tuple[int, ...]
    mode: int | None = None
    split: int | None = None

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]


def matricize_mode(t: DenseTensor, mode: int) -> MatricizedView:
    """Unfold mode `mode` (1-based) into rows.

    The result is I_mode x (product of the remaining extents).  Column j
    (1-based) linearizes the remaining indices leftmost-fastest:
    j = 1 + sum_{k != mode} (i_k - 1) * J_k with
    J_k = prod_{m < k, m != mode} I_m.
    """
    if not 1 <= mode <= t.order:
        raise ValueError(f"mode {mode} out of range for order-{t.order} tensor")
    moved = np.moveaxis(t.data, mode - 1, 0)
    m = moved.reshape(t.shape[mode - 1], -1, order="F")
    return MatricizedView(m, t.shape, mode=mode)


def matricize_prefix(t: DenseTensor, split: int) -> MatricizedView:
    """Flatten modes 1..split into rows and the rest into columns.

    Both row and column indices linearize leftmost-fastest, matching the
    canonical layout, so this is a zero-copy reinterpretation.
    """
    if not 1 <= split < t.order:
        raise ValueError(f"split {split} out of range for order-{t.order} tensor")
    r = prod(t.shape[:split])
    m = t.data.reshape(r, -1, order="F")
    return MatricizedView(m, t.shape, split=split)


def dematricize(view: MatricizedView) -> DenseTensor:
    """Invert `matricize_mode` / `matricize_prefix` exactly."""
    shape = view.source_shape
    if view.mode is not None:
        n = view.mode
        moved_shape = (shape[n - 1],) + shape[: n - 1] + shape[n:]
        arr = view.matrix.reshape(moved_shape, order="F")
        return DenseTensor(np.moveaxis(arr, 0, n - 1))
    return DenseTensor(view.matrix.reshape(shape, order="F"))


def mode_n_product(t: DenseTensor, matrix: np.ndarray, mode: int) -> DenseTensor:
    """Contract mode `mode` of `t` with the columns of `matrix`.

    `matrix` is J x I_mode; the result replaces extent I_mode with J.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("mode product expects a 2-D matrix")
    if not 1 <= mode <= t.order:
        raise ValueError(f"mode {mode} out of range for order-{t.order} tensor")
    if m.shape[1] != t.shape[mode - 1]:
        raise ValueError(
            f"matrix has {m.shape[1]} columns, mode {mode} has extent {t.shape[mode - 1]}"
        )
    unfolded = matricize_mode(t, mode).matrix
    res = m @ unfolded
    moved_shape = (m.shape[0],) + t.shape[: mode - 1] + t.shape[mode:]
    arr = res.reshape(moved_shape, order="F")
    return DenseTensor(np.moveaxis(arr, 0, mode - 1))


def inner_product(a: DenseTensor, b: DenseTensor) -> float:
    """Sum of elementwise products of two same-shape tensors."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a.ravel(), b.ravel()))


def frobenius_norm(t: DenseTensor) -> float:
    return float(np.linalg.norm(t.ravel()))


def permute_modes(t: DenseTensor, perm) -> DenseTensor:
    """Reorder modes: result mode p is source mode perm[p] (1-based)."""
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(1, t.order + 1)):
        raise ValueError(f"{perm} is not a permutation of modes 1..{t.order}")
    return DenseTensor(np.transpose(t.data, axes=[p - 1 for p in perm]))


def concat_samples(samples) -> DenseTensor:
    """Stack same-shape tensors along a new trailing mode."""
    samples = list(samples)
    if not samples:
        raise ValueError("cannot concatenate an empty sample list")
    shape = samples[0].shape
    for i, s in enumerate(samples):
        if s.shape != shape:
            raise ValueError(
                f"sample {i} has shape {s.shape}, expected {shape} like sample 0"
            )
    return DenseTensor(np.stack([s.data for s in samples], axis=-1))


# --- DTF1 container format ---------------------------------------------------
#
# magic "DTF1", u32 order, order x u64 extents, little-endian f64 payload in
# canonical (leftmost-fastest) order.


def dtf_bytes(t: DenseTensor) -> bytes:
    head = DTF_MAGIC + struct.pack("<I", t.order)
    head += struct.pack(f"<{t.order}Q", *t.shape)
    return head + t.ravel().astype("<f8").tobytes()


def dtf_from_bytes(buf: bytes, offset: int = 0) -> tuple[DenseTensor, int]:
    """Decode one tensor starting at `offset`; returns (tensor, next offset)."""
    if buf[offset : offset + 4] != DTF_MAGIC:
        raise ValueError("not a DTF1 container (bad magic)")
    offset += 4
    (order,) = struct.unpack_from("<I", buf, offset)
    offset += 4
    if order < 1:
        raise ValueError("DTF1 order must be >= 1")
    shape = struct.unpack_from(f"<{order}Q", buf, offset)
    offset += 8 * order
    count = prod(shape)
    end = offset + 8 * count
    if end > len(buf):
        raise ValueError("DTF1 payload truncated")
    flat = np.frombuffer(buf[offset:end], dtype="<f8")
    return DenseTensor(flat.reshape(shape, order="F")), end


def write_dtf(path, t: DenseTensor) -> None:
    with open(path, "wb") as fh:
        fh.write(dtf_bytes(t))


def read_dtf(path) -> DenseTensor:
    with open(path, "rb") as fh:
        buf = fh.read()
    t, end = dtf_from_bytes(buf)
    if end != len(buf):
        raise ValueError("trailing bytes after DTF1 payload")
    return t
