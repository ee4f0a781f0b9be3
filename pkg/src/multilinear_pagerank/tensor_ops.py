"""Flattened stochastic tensors and their tensor-vector kernels.

A tensor of order ``m`` and dimension ``n`` is stored as its mode-1 unfolding
``R`` of shape ``n x n**(m-1)``. Column ``c`` (0-based) holds the entries with
trailing indices ``(i_2, ..., i_m)`` where ``c = sum_t i_{t+2} * n**t``, i.e.
``i_2`` is the least significant base-``n`` digit. With this convention
``R @ (x kron ... kron x)`` is the matricized product and ``e_j kron e_j``
selects column ``j * n + j``.

A tensor may carry a ``fill`` vector. The logical tensor is then
``core + fill * dang(core)`` where ``dang(core) = e^T - e^T core``: every
column deficit is completed with the fill distribution. The completion is
applied analytically by every kernel and never materialized.
"""

import logging
from collections.abc import Sequence

import numpy as np
import scipy.sparse

from .config import settings
from .errors import ShapeError, StochasticityError
from .models import StorageKind

logger = logging.getLogger(__name__)


def check_vector(x: np.ndarray, n: int, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != n:
        raise ShapeError(f"{name} has shape {x.shape}, expected ({n},)")
    return x


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


class FlattenedTensor:
    """Mode-1 unfolding of an order-m, dimension-n stochastic tensor.

    Build instances with :meth:`from_dense`, :meth:`from_triplets` or
    :meth:`from_tensor`; they validate column-stochasticity unless told not to.
    Instances are immutable and safe to share between threads.
    """

    def __init__(
        self,
        order: int,
        dim: int,
        *,
        dense: np.ndarray | None = None,
        rows: np.ndarray | None = None,
        cols: np.ndarray | None = None,
        values: np.ndarray | None = None,
        fill: np.ndarray | None = None,
    ):
        if order < 2:
            raise ShapeError(f"tensor order must be >= 2, got {order}")
        if dim < 1:
            raise ShapeError(f"tensor dimension must be >= 1, got {dim}")
        self.order = int(order)
        self.dim = int(dim)
        self.ncols = self.dim ** (self.order - 1)

        self._dense: np.ndarray | None = None
        self._rows = self._cols = self._values = None
        self._digits: tuple[np.ndarray, ...] = ()

        if dense is not None:
            dense = np.asarray(dense, dtype=float)
            if dense.shape != (self.dim, self.ncols):
                raise ShapeError(
                    f"dense unfolding has shape {dense.shape}, "
                    f"expected ({self.dim}, {self.ncols})"
                )
            self._dense = _frozen(dense)
        else:
            rows = np.asarray(rows, dtype=np.int64).ravel()
            cols = np.asarray(cols, dtype=np.int64).ravel()
            values = np.asarray(values, dtype=float).ravel()
            if not (rows.shape == cols.shape == values.shape):
                raise ShapeError("triplet arrays differ in length")
            if rows.size and (rows.min() < 0 or rows.max() >= self.dim):
                raise ShapeError(f"row index outside 0..{self.dim - 1}")
            if cols.size and (cols.min() < 0 or cols.max() >= self.ncols):
                raise ShapeError(f"column index outside 0..{self.ncols - 1}")
            keep = values != 0.0
            self._rows = _frozen(rows[keep])
            self._cols = _frozen(cols[keep])
            self._values = _frozen(values[keep])
            self._digits = tuple(
                _frozen((self._cols // self.dim**t) % self.dim)
                for t in range(self.order - 1)
            )

        self.fill = None if fill is None else _frozen(check_vector(fill, self.dim))

    # ------------------------------------------------------------------
    # Constructors

    @classmethod
    def from_dense(
        cls,
        matrix: np.ndarray,
        order: int,
        *,
        fill: np.ndarray | None = None,
        validate: bool = True,
        repair: bool = False,
        tol: float | None = None,
    ) -> "FlattenedTensor":
        """Wrap a dense ``n x n**(m-1)`` unfolding."""
        matrix = np.asarray(matrix, dtype=float)
        tensor = cls(order, matrix.shape[0], dense=matrix, fill=fill)
        return tensor._finish(validate, repair, tol)

    @classmethod
    def from_triplets(
        cls,
        order: int,
        dim: int,
        rows: Sequence[int] | np.ndarray,
        cols: Sequence[int] | np.ndarray,
        values: Sequence[float] | np.ndarray,
        *,
        fill: np.ndarray | None = None,
        one_based: bool = False,
        validate: bool = True,
        repair: bool = False,
        tol: float | None = None,
    ) -> "FlattenedTensor":
        """Wrap sparse ``(row, column, value)`` triplets of the unfolding."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if one_based:
            rows, cols = rows - 1, cols - 1
        tensor = cls(order, dim, rows=rows, cols=cols, values=values, fill=fill)
        return tensor._finish(validate, repair, tol)

    @classmethod
    def from_tensor(
        cls, tensor: np.ndarray, *, validate: bool = True, tol: float | None = None
    ) -> "FlattenedTensor":
        """Unfold an ``n x n x ... x n`` array ``P[i_1, i_2, ..., i_m]``."""
        tensor = np.asarray(tensor, dtype=float)
        order, dim = tensor.ndim, tensor.shape[0]
        if any(size != dim for size in tensor.shape):
            raise ShapeError(f"tensor is not cubical: shape {tensor.shape}")
        # C-order reshape needs i_2 as the last (fastest) axis
        axes = (0, *range(order - 1, 0, -1))
        unfolding = np.transpose(tensor, axes).reshape(dim, -1)
        return cls.from_dense(unfolding, order, validate=validate, tol=tol)

    def _finish(
        self, validate: bool, repair: bool, tol: float | None
    ) -> "FlattenedTensor":
        tensor = self.repaired() if repair else self
        if validate:
            tensor.validate(tol)
        return tensor

    # ------------------------------------------------------------------
    # Introspection

    @property
    def storage(self) -> StorageKind:
        return StorageKind.DENSE if self._dense is not None else StorageKind.SPARSE

    @property
    def nnz(self) -> int:
        """Stored core entries (the fill completion is not counted)."""
        if self._dense is not None:
            return int(np.count_nonzero(self._dense))
        return int(self._values.size)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.dim, self.ncols)

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """0-based ``(rows, cols, values)`` of the stored core."""
        if self._dense is not None:
            rows, cols = np.nonzero(self._dense)
            return rows, cols, self._dense[rows, cols]
        return self._rows, self._cols, self._values

    def _core_column_sums(self) -> tuple[np.ndarray, np.ndarray]:
        """Column ids holding stored entries and their sums."""
        if self._dense is not None:
            return np.arange(self.ncols), self._dense.sum(axis=0)
        ids, inverse = np.unique(self._cols, return_inverse=True)
        return ids, np.bincount(inverse, weights=self._values, minlength=ids.size)

    def column_sums(self) -> np.ndarray:
        """Column sums of the logical tensor (allocates ``n**(m-1)`` floats)."""
        if self.fill is not None:
            return np.full(self.ncols, float(self.fill.sum()))
        ids, sums = self._core_column_sums()
        out = np.zeros(self.ncols)
        out[ids] = sums
        return out

    def to_dense(self, include_fill: bool = True) -> np.ndarray:
        """Materialize the unfolding, by default with the fill completion."""
        if self._dense is not None:
            core = np.array(self._dense)
        else:
            core = scipy.sparse.coo_array(
                (self._values, (self._rows, self._cols)), shape=self.shape
            ).toarray()
        if include_fill and self.fill is not None:
            core += np.outer(self.fill, 1.0 - core.sum(axis=0))
        return core

    def __repr__(self) -> str:
        fill = ", fill" if self.fill is not None else ""
        return (
            f"FlattenedTensor(order={self.order}, dim={self.dim}, "
            f"storage={self.storage.value}, nnz={self.nnz}{fill})"
        )

    # ------------------------------------------------------------------
    # Validation

    def validate(self, tol: float | None = None) -> None:
        """Check nonnegativity and column-stochasticity.

        Raises:
            StochasticityError: naming the worst offending column.
        """
        tol = settings.column_tol if tol is None else tol
        _, _, values = self.triplets()
        if values.size and values.min() < 0:
            raise StochasticityError(f"negative entry {values.min():.3e} in tensor")

        ids, sums = self._core_column_sums()
        if self.fill is not None:
            if self.fill.min() < 0 or abs(self.fill.sum() - 1.0) > tol:
                raise StochasticityError("fill vector is not stochastic")
            if sums.size and sums.max() > 1.0 + tol:
                worst = int(ids[np.argmax(sums)])
                raise StochasticityError(
                    f"column {worst} sums to {sums.max():.15g} > 1", column=worst
                )
            return

        if ids.size < self.ncols:
            missing = int(np.setdiff1d(np.arange(ids.size + 1), ids)[0])
            raise StochasticityError(f"column {missing} is empty", column=missing)
        defect = np.abs(sums - 1.0)
        worst_pos = int(np.argmax(defect))
        if defect[worst_pos] > tol:
            worst = int(ids[worst_pos])
            raise StochasticityError(
                f"column {worst} sums to {sums[worst_pos]:.15g} "
                f"(defect {defect[worst_pos]:.3e} > {tol:.1e})",
                column=worst,
            )

    def repaired(self) -> "FlattenedTensor":
        """Return a copy whose columns are renormalized to sum to one.

        With a fill vector only columns summing above one are scaled down; the
        fill completes the rest.
        """
        rows, cols, values = self.triplets()
        ids, sums = self._core_column_sums()
        scale = np.ones(self.ncols) if self._dense is not None else None

        if self.fill is None and (ids.size < self.ncols or np.any(sums <= 0)):
            raise StochasticityError("an empty column cannot be renormalized")
        if self.fill is not None:
            target = np.minimum(sums, 1.0)
        else:
            target = np.ones_like(sums)
        factors = np.where(sums > 0, target / np.where(sums > 0, sums, 1.0), 1.0)
        drift = float(np.abs(sums - target).max()) if sums.size else 0.0
        logger.debug(f"Repairing tensor, max column drift {drift:.3e}")

        if self._dense is not None:
            scale[ids] = factors
            return FlattenedTensor(
                self.order, self.dim, dense=self._dense * scale, fill=self.fill
            )
        lookup = np.searchsorted(ids, cols)
        return FlattenedTensor(
            self.order,
            self.dim,
            rows=rows,
            cols=cols,
            values=values * factors[lookup],
            fill=self.fill,
        )


# ----------------------------------------------------------------------
# Kernels


def _contract_core(
    tensor: FlattenedTensor, vectors: Sequence[np.ndarray]
) -> np.ndarray:
    """``core @ (vectors[m-2] kron ... kron vectors[0])`` without the Kronecker."""
    n = tensor.dim
    if tensor._dense is not None:
        reduced = tensor._dense
        for vector in vectors:
            reduced = reduced.reshape(-1, n) @ vector
        return reduced
    weights = np.array(tensor._values)
    for digits, vector in zip(tensor._digits, vectors, strict=True):
        weights *= vector[digits]
    return np.bincount(tensor._rows, weights=weights, minlength=n)


def _contract(tensor: FlattenedTensor, vectors: Sequence[np.ndarray]) -> np.ndarray:
    result = _contract_core(tensor, vectors)
    if tensor.fill is not None:
        mass = float(np.prod([vector.sum() for vector in vectors]))
        result = result + tensor.fill * (mass - result.sum())
    return result


def apply_multilinear(tensor: FlattenedTensor, x: np.ndarray) -> np.ndarray:
    """Compute ``R (x kron x kron ... kron x)`` with ``m - 1`` factors."""
    x = check_vector(x, tensor.dim)
    return _contract(tensor, [x] * (tensor.order - 1))


def jacobian_apply(
    tensor: FlattenedTensor, x: np.ndarray, w: np.ndarray, alpha: float
) -> np.ndarray:
    """Matrix-free ``J_f(x) w = alpha * sum_s R(x..w..x) - w`` (w in slot s)."""
    x = check_vector(x, tensor.dim)
    w = check_vector(w, tensor.dim, "w")
    slots = tensor.order - 1
    total = np.zeros(tensor.dim)
    for slot in range(slots):
        vectors = [x] * slots
        vectors[slot] = w
        total += _contract(tensor, vectors)
    return alpha * total - w


def slot_matrices(tensor: FlattenedTensor, x: np.ndarray) -> list[np.ndarray]:
    """The ``m - 1`` matrices ``S_s`` with ``S_s w = R(x..w..x)``, w in slot s."""
    x = check_vector(x, tensor.dim)
    n, order = tensor.dim, tensor.order
    matrices = []
    for slot in range(order - 1):
        if tensor._dense is not None:
            reduced = tensor._dense.reshape((n,) * order)
            # digit t lives on axis m-1-t; contracting upward keeps lower axes put
            for digit in range(order - 1):
                if digit != slot:
                    reduced = np.tensordot(reduced, x, axes=([order - 1 - digit], [0]))
            core = np.asarray(reduced).reshape(n, n)
        else:
            weights = np.array(tensor._values)
            for digit in range(order - 1):
                if digit != slot:
                    weights *= x[tensor._digits[digit]]
            core = scipy.sparse.coo_array(
                (weights, (tensor._rows, tensor._digits[slot])), shape=(n, n)
            ).toarray()
        if tensor.fill is not None:
            mass = x.sum() ** (order - 2)
            core = core + np.outer(tensor.fill, mass - core.sum(axis=0))
        matrices.append(core)
    return matrices


def dense_jacobian(tensor: FlattenedTensor, x: np.ndarray, alpha: float) -> np.ndarray:
    """Assemble ``J_f(x) = alpha * R(I kron x.. + ... + ..x kron I) - I``.

    Costs ``O(n**2)`` memory; intended for ``n`` up to
    ``settings.dense_jacobian_cap``.
    """
    if tensor.dim > settings.dense_jacobian_cap:
        logger.warning(
            f"Assembling a dense {tensor.dim}x{tensor.dim} Jacobian, above the "
            f"soft cap of {settings.dense_jacobian_cap}"
        )
    jacobian = alpha * np.sum(slot_matrices(tensor, x), axis=0)
    jacobian[np.diag_indices_from(jacobian)] -= 1.0
    return jacobian
