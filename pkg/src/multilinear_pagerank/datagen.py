"""Problem sources: tensor files, synthetic tensors and directed graphs.

Tensor files are UTF-8 text::

    MLPR-TENSOR 1
    # comment lines start with '#'
    m n kind                # kind is dense or sparse
    <dense>  n**(m-1) lines, one column of n reals each
    <sparse> one line "nnz", then nnz lines "row col value" (1-based)
    fill v_1 ... v_n        # optional teleportation completion

Synthetic tensors draw every entry uniformly from [0, 1) with
``numpy.random.default_rng(seed)`` (PCG64) in C order over the
``n x n**2`` unfolding, then normalize columns.
"""

import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse

from .config import settings
from .errors import ParameterError, ParseError
from .models import DirectedGraph, StorageKind
from .problem import PageRankProblem
from .tensor_ops import FlattenedTensor, check_vector

logger = logging.getLogger(__name__)

MAGIC = "MLPR-TENSOR"
FORMAT_VERSION = 1
_NODES_HEADER = re.compile(r"#\s*nodes\s+(\d+)", re.IGNORECASE)


# ----------------------------------------------------------------------
# Synthetic tensors


def stochastic_columns(raw: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Normalize the columns of a nonnegative matrix; zero columns become ``v``."""
    raw = np.asarray(raw, dtype=float)
    if raw.size and raw.min() < 0:
        raise ParameterError("stochastic_columns needs a nonnegative matrix")
    v = check_vector(v, raw.shape[0], "v")
    sums = raw.sum(axis=0)
    zero = sums == 0
    out = raw / np.where(zero, 1.0, sums)
    out[:, zero] = v[:, None]
    return out


def gen_synthetic(n: int, rng_seed: int) -> tuple[FlattenedTensor, np.ndarray]:
    """Random third-order stochastic tensor with uniform teleportation.

    Args:
        n: Tensor dimension.
        rng_seed: Seed for ``numpy.random.default_rng``; equal seeds give
            bitwise-identical tensors.

    Returns:
        The tensor ``R`` (``n x n**2``, dense) and ``v = e/n``.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(rng_seed)
    raw = rng.random((n, n * n))
    v = np.full(n, 1.0 / n)
    tensor = FlattenedTensor.from_dense(stochastic_columns(raw, v), 3)
    logger.debug(f"Generated synthetic tensor n={n} seed={rng_seed}")
    return tensor, v


# ----------------------------------------------------------------------
# Tensor files


def save_tensor(
    tensor: FlattenedTensor, path: Path | str, header: str | None = None
) -> None:
    """Write ``tensor`` in the text tensor format with 17 significant digits."""
    path = Path(path)
    lines = [f"{MAGIC} {FORMAT_VERSION}"]
    if header:
        lines.extend(f"# {line}" for line in header.splitlines())
    lines.append(f"{tensor.order} {tensor.dim} {tensor.storage.value}")

    if tensor.storage is StorageKind.DENSE:
        core = tensor.to_dense(include_fill=False)
        lines.extend(" ".join(f"{value:.17g}" for value in column) for column in core.T)
    else:
        rows, cols, values = tensor.triplets()
        lines.append(str(values.size))
        lines.extend(
            f"{r + 1} {c + 1} {value:.17g}"
            for r, c, value in zip(rows, cols, values, strict=True)
        )
    if tensor.fill is not None:
        lines.append("fill " + " ".join(f"{value:.17g}" for value in tensor.fill))

    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Wrote {tensor} to {path}")


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ParseError("file is not UTF-8 text", path) from e


def _content_lines(path: Path) -> list[tuple[int, list[str]]]:
    out = []
    for number, line in enumerate(_read_text(path).splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if stripped:
            out.append((number, stripped.split()))
    return out


def _floats(tokens: list[str], path: Path, line: int) -> np.ndarray:
    try:
        return np.array([float(token) for token in tokens])
    except ValueError as e:
        message = f"expected real numbers, got {' '.join(tokens)!r}"
        raise ParseError(message, path, line) from e


def _int(token: str, path: Path, line: int, what: str) -> int:
    try:
        return int(token)
    except ValueError as e:
        raise ParseError(f"{what} must be an integer, got {token!r}", path, line) from e


def load_tensor(path: Path | str, *, repair: bool = False) -> FlattenedTensor:
    """Read and validate a tensor file.

    Args:
        path: File in the text tensor format.
        repair: Renormalize columns instead of rejecting drift.

    Raises:
        ParseError: malformed content, with the offending line number.
        StochasticityError: the data is not column-stochastic.
    """
    path = Path(path)
    lines = _content_lines(path)
    if not lines:
        raise ParseError("empty tensor file", path, 1)

    line, tokens = lines[0]
    if len(tokens) != 2 or tokens[0] != MAGIC:
        raise ParseError(f"expected '{MAGIC} {FORMAT_VERSION}' header", path, line)
    if _int(tokens[1], path, line, "format version") != FORMAT_VERSION:
        raise ParseError(f"unsupported format version {tokens[1]}", path, line)

    if len(lines) < 2 or len(lines[1][1]) != 3:
        raise ParseError("expected 'm n kind' line", path, lines[-1][0])
    line, (m_token, n_token, kind_token) = lines[1]
    order = _int(m_token, path, line, "order m")
    dim = _int(n_token, path, line, "dimension n")
    if order < 2 or dim < 1:
        raise ParseError(f"invalid order {order} or dimension {dim}", path, line)
    try:
        kind = StorageKind(kind_token)
    except ValueError as e:
        raise ParseError(f"unknown storage kind {kind_token!r}", path, line) from e

    body = lines[2:]
    fill = None
    if body and body[-1][1][0] == "fill":
        line, tokens = body.pop()
        fill = _floats(tokens[1:], path, line)
        if fill.size != dim:
            message = f"fill has {fill.size} entries, expected {dim}"
            raise ParseError(message, path, line)

    ncols = dim ** (order - 1)
    if kind is StorageKind.DENSE:
        if len(body) != ncols:
            where = body[-1][0] if body else lines[1][0]
            message = f"expected {ncols} column lines, got {len(body)}"
            raise ParseError(message, path, where)
        columns = []
        for line, tokens in body:
            column = _floats(tokens, path, line)
            if column.size != dim:
                message = f"column has {column.size} entries, expected {dim}"
                raise ParseError(message, path, line)
            columns.append(column)
        tensor = FlattenedTensor.from_dense(
            np.column_stack(columns), order, fill=fill, repair=repair
        )
    else:
        if not body or len(body[0][1]) != 1:
            where = body[0][0] if body else lines[1][0]
            raise ParseError("expected 'nnz' line", path, where)
        line, (nnz_token,) = body[0]
        nnz = _int(nnz_token, path, line, "nnz")
        triplets = body[1:]
        if len(triplets) != nnz:
            message = f"expected {nnz} triplets, got {len(triplets)}"
            raise ParseError(message, path, line)
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        values = np.empty(nnz)
        for index, (line, tokens) in enumerate(triplets):
            if len(tokens) != 3:
                raise ParseError("expected 'row col value'", path, line)
            rows[index] = _int(tokens[0], path, line, "row")
            cols[index] = _int(tokens[1], path, line, "col")
            values[index] = _floats(tokens[2:], path, line)[0]
            if not (1 <= rows[index] <= dim and 1 <= cols[index] <= ncols):
                raise ParseError(
                    f"index ({rows[index]}, {cols[index]}) outside {dim}x{ncols}",
                    path,
                    line,
                )
        tensor = FlattenedTensor.from_triplets(
            order, dim, rows, cols, values, fill=fill, one_based=True, repair=repair
        )

    logger.info(f"Loaded {tensor} from {path}")
    return tensor


def load_suite(directory: Path | str) -> list[tuple[str, FlattenedTensor]]:
    """Load every ``*.mlpr`` file of ``directory`` in sorted order."""
    directory = Path(directory)
    paths = sorted(directory.glob("*.mlpr"))
    if not paths:
        raise ParseError("no *.mlpr tensor files in suite directory", directory)
    return [(path.stem, load_tensor(path)) for path in paths]


# ----------------------------------------------------------------------
# Directed graphs


def load_edgelist(path: Path | str) -> DirectedGraph:
    """Read whitespace-separated ``src dst`` pairs with 1-based node ids.

    Lines starting with ``#`` or ``%`` are comments; a ``# nodes N`` comment
    fixes the node count, which otherwise is the largest id seen.
    """
    path = Path(path)
    declared = None
    edges: list[tuple[int, int]] = []
    for number, raw in enumerate(_read_text(path).splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if line.startswith("#"):
            match = _NODES_HEADER.match(line)
            if match:
                declared = int(match.group(1))
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise ParseError(f"expected 'src dst', got {line!r}", path, number)
        src = _int(tokens[0], path, number, "src")
        dst = _int(tokens[1], path, number, "dst")
        if src < 1 or dst < 1:
            raise ParseError(f"node ids are 1-based, got ({src}, {dst})", path, number)
        edges.append((src, dst))

    largest = max((max(edge) for edge in edges), default=0)
    n = declared if declared is not None else largest
    if n < 1:
        raise ParseError("edge list holds no edges and no '# nodes' header", path)
    if largest > n:
        raise ParseError(f"node id {largest} exceeds declared node count {n}", path)
    graph = DirectedGraph(n=n, edges=edges)
    logger.info(f"Loaded graph with {graph.n} nodes, {graph.edge_count} edges")
    return graph


def random_digraph(n: int, edge_probability: float, seed: int) -> DirectedGraph:
    """Seeded Erdos-Renyi digraph without self-loops."""
    if not 0.0 <= edge_probability <= 1.0:
        raise ParameterError(f"edge_probability {edge_probability} outside [0, 1]")
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < edge_probability
    np.fill_diagonal(mask, False)
    src, dst = np.nonzero(mask)
    return DirectedGraph(
        n=n, edges=[(int(s) + 1, int(d) + 1) for s, d in zip(src, dst, strict=True)]
    )


@dataclass(frozen=True)
class CycleTensor:
    """Unnormalized 0/1 third-order tensor of directed 3-cycles.

    ``t_ijk = 1`` iff ``i -> j``, ``j -> k`` and ``k -> i`` with ``i, j, k``
    distinct, stored as 0-based triplets ``(i, j + k * n)``.
    """

    dim: int
    rows: np.ndarray
    cols: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return np.ones(self.rows.size)

    @property
    def nnz(self) -> int:
        return int(self.rows.size)

    @property
    def geometric_cycles(self) -> int:
        """Each cycle a -> b -> c -> a appears as three rotations."""
        return self.nnz // 3


def build_cycle_tensor(graph: DirectedGraph) -> CycleTensor:
    n = graph.n
    successors: list[set[int]] = [set() for _ in range(n)]
    for src, dst in graph.edges:
        if src != dst:
            successors[src - 1].add(dst - 1)

    rows: list[int] = []
    cols: list[int] = []
    for i in range(n):
        for j in successors[i]:
            for k in successors[j]:
                if k != i and i in successors[k]:
                    rows.append(i)
                    cols.append(j + k * n)

    cycles = CycleTensor(
        n, np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64)
    )
    logger.debug(
        f"Found {cycles.geometric_cycles} directed 3-cycles ({cycles.nnz} entries)"
    )
    return cycles


def build_first_order(graph: DirectedGraph) -> scipy.sparse.csr_array:
    """Row-normalized adjacency ``P = D^+ A``; rows of sinks stay zero."""
    n = graph.n
    if not graph.edges:
        return scipy.sparse.csr_array((n, n))
    pairs = np.array(graph.edges, dtype=np.int64) - 1
    src, dst = pairs[:, 0], pairs[:, 1]
    degree = np.bincount(src, minlength=n)
    return scipy.sparse.csr_array((1.0 / degree[src], (src, dst)), shape=(n, n))


def dangling_row(matrix: np.ndarray | scipy.sparse.sparray) -> np.ndarray:
    """``e^T - e^T B``: the mass each column of ``B`` is missing."""
    sums = np.asarray(matrix.sum(axis=0), dtype=float).ravel()
    if sums.size and sums.max() > 1.0 + 1e-9:
        worst = int(np.argmax(sums))
        raise ParameterError(f"column {worst} of B sums to {sums[worst]:.15g} > 1")
    return np.maximum(1.0 - sums, 0.0)


def assemble_real_world(
    cycles: CycleTensor,
    P: scipy.sparse.sparray | np.ndarray,
    v: np.ndarray,
    gamma: float,
) -> FlattenedTensor:
    """Mix the 3-cycle tensor with the first-order walk into a stochastic ``R``.

    The result is ``gamma * Q + (1 - gamma) * (P^T kron e^T)`` completed by
    ``v * dang(.)``, with ``Q`` the column-normalized cycle tensor. The
    completion is carried as the tensor's ``fill`` so storage stays sparse.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ParameterError(f"gamma must lie in [0, 1], got {gamma}")
    n = cycles.dim
    v = check_vector(v, n, "v")
    transition = scipy.sparse.coo_array(P)
    if transition.shape != (n, n):
        raise ParameterError(f"P has shape {transition.shape}, expected ({n}, {n})")
    dangling = dangling_row(transition.T)
    logger.debug(f"{int(np.count_nonzero(dangling))} dangling nodes in P")

    _, inverse, counts = np.unique(cycles.cols, return_inverse=True, return_counts=True)
    q_values = cycles.values / counts[inverse]

    # P^T kron e^T: column src * n + b for every b
    src, dst = transition.row.astype(np.int64), transition.col.astype(np.int64)
    spread = np.arange(n)
    p_rows = np.repeat(dst, n)
    p_cols = np.repeat(src * n, n) + np.tile(spread, src.size)
    p_values = np.repeat(transition.data, n)

    return FlattenedTensor.from_triplets(
        3,
        n,
        np.concatenate([cycles.rows, p_rows]),
        np.concatenate([cycles.cols, p_cols]),
        np.concatenate([gamma * q_values, (1.0 - gamma) * p_values]),
        fill=v,
    )


def build_real_world_problem(
    graph: DirectedGraph, alpha: float, gamma: float | None = None
) -> PageRankProblem:
    """Graph to multilinear PageRank problem with ``v = e/n``."""
    gamma = settings.default_gamma if gamma is None else gamma
    v = np.full(graph.n, 1.0 / graph.n)
    cycles = build_cycle_tensor(graph)
    tensor = assemble_real_world(cycles, build_first_order(graph), v, gamma)
    logger.info(
        f"Real-world tensor: n={graph.n}, {cycles.geometric_cycles} 3-cycles, "
        f"gamma={gamma}, nnz={tensor.nnz}"
    )
    return PageRankProblem(tensor, alpha, v)
