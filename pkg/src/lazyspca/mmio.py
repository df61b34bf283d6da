"""Matrix Market (coordinate and array) and dense CSV input/output.

Entries are parsed in chunks of lines with numpy; when a chunk fails to
parse, it is re-scanned line by line so the error can name the exact line.
"""

import itertools
import os
import tempfile

import numpy as np

from .errors import ParseError
from .matrix import RowBlock, SparseMatrix

CHUNK_LINES = 1 << 20


class _Header:
    def __init__(self, layout, field, symmetry, shape, nnz, comments, first_data_line):
        self.layout = layout
        self.field = field
        self.symmetry = symmetry
        self.shape = shape
        self.nnz = nnz
        self.comments = comments
        self.first_data_line = first_data_line


def _read_header(f):
    banner = f.readline()
    parts = banner.split()
    if len(parts) != 5 or parts[0] != "%%MatrixMarket" or parts[1].lower() != "matrix":
        raise ParseError("missing or malformed %%MatrixMarket banner", line=1)
    layout, field, symmetry = (p.lower() for p in parts[2:])
    if layout not in ("coordinate", "array"):
        raise ParseError(f"unsupported layout {layout!r}", line=1)
    if field not in ("real", "integer", "double") and not (field == "pattern" and layout == "coordinate"):
        raise ParseError(f"unsupported field {field!r}", line=1)
    if symmetry not in ("general", "symmetric"):
        raise ParseError(f"unsupported symmetry {symmetry!r}", line=1)
    line_no = 1
    comments = []
    while True:
        line = f.readline()
        line_no += 1
        if not line:
            raise ParseError("file ends before the size line", line=line_no)
        stripped = line.strip()
        if stripped.startswith("%"):
            comments.append(stripped[1:].strip())
            continue
        if stripped:
            break
    want = 3 if layout == "coordinate" else 2
    try:
        sizes = [int(t) for t in stripped.split()]
    except ValueError:
        raise ParseError(f"size line must hold {want} integers: {stripped!r}", line=line_no) from None
    if len(sizes) != want or min(sizes) < 0:
        raise ParseError(f"size line must hold {want} non-negative integers: {stripped!r}", line=line_no)
    shape = (sizes[0], sizes[1])
    nnz = sizes[2] if layout == "coordinate" else sizes[0] * sizes[1]
    if symmetry == "symmetric" and shape[0] != shape[1]:
        raise ParseError("symmetric matrix must be square", line=line_no)
    return _Header(layout, field, symmetry, shape, nnz, comments, line_no + 1)


def _parse_lines(lines, line_numbers, ncols):
    """Parse whitespace-separated numeric lines into an (k, ncols) array."""
    try:
        arr = np.loadtxt(lines, ndmin=2, dtype=np.float64, comments=None)
        if arr.shape[0] == len(lines) and (arr.size == 0 or arr.shape[1] == ncols):
            return arr
    except ValueError:
        pass
    for offset, line in enumerate(lines):
        tokens = line.split()
        if len(tokens) != ncols:
            raise ParseError(f"expected {ncols} fields, found {len(tokens)}: {line.strip()!r}", line=int(line_numbers[offset]))
        try:
            [float(t) for t in tokens]
        except ValueError:
            raise ParseError(f"non-numeric field in {line.strip()!r}", line=int(line_numbers[offset])) from None
    raise ParseError("unparseable data", line=int(line_numbers[0]))


def _data_chunks(f, header, ncols):
    """Yield (file line numbers, parsed array) per chunk of the data section."""
    line_no = header.first_data_line
    remaining = header.nnz
    while True:
        raw = list(itertools.islice(f, CHUNK_LINES))
        if not raw:
            break
        keep = [(i, ln) for i, ln in enumerate(raw) if ln.strip()]
        if keep:
            if len(keep) > remaining:
                extra = keep[remaining][0]
                raise ParseError(f"more than the declared {header.nnz} entries", line=line_no + extra)
            # blank lines are skipped, so map positions back to file lines
            positions = np.array([i for i, _ in keep])
            arr = _parse_lines([ln for _, ln in keep], line_no + positions, ncols)
            if not np.all(np.isfinite(arr)):
                bad = int(np.flatnonzero(~np.all(np.isfinite(arr), axis=1))[0])
                raise ParseError("non-finite value", line=line_no + int(positions[bad]))
            remaining -= len(keep)
            yield line_no + positions, arr
        line_no += len(raw)
    if remaining:
        raise ParseError(f"declared {header.nnz} entries but found {header.nnz - remaining}", line=line_no)


def _coordinate_entries(f, header):
    ncols = 2 if header.field == "pattern" else 3
    m, n = header.shape
    for lines, arr in _data_chunks(f, header, ncols):
        if arr.size == 0:
            continue
        rows = arr[:, 0]
        cols = arr[:, 1]
        bad = (rows < 1) | (rows > m) | (cols < 1) | (cols > n) | (rows != np.floor(rows)) | (cols != np.floor(cols))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise ParseError(f"index ({rows[i]:g}, {cols[i]:g}) outside a {m}x{n} matrix", line=int(lines[i]))
        r = rows.astype(np.int64) - 1
        c = cols.astype(np.int64) - 1
        v = np.ones(len(r)) if ncols == 2 else arr[:, 2]
        if header.symmetry == "symmetric":
            off = r != c
            r, c, v = np.concatenate([r, c[off]]), np.concatenate([c, r[off]]), np.concatenate([v, v[off]])
        yield r, c, v


def read_matrix_market(path):
    """Read a coordinate (sparse) or array (dense) Matrix Market file.

    Coordinate files give a SparseMatrix, array files a dense ndarray.
    """
    with open(path) as f:
        header = _read_header(f)
        if header.layout == "array":
            return _read_array_body(f, header)
        parts = list(_coordinate_entries(f, header))
    if parts:
        r, c, v = (np.concatenate(x) for x in zip(*parts))
    else:
        r = c = np.zeros(0, dtype=np.int64)
        v = np.zeros(0)
    return SparseMatrix.from_coo(r, c, v, header.shape)


def _read_array_body(f, header):
    m, n = header.shape
    values = [arr[:, 0] for _, arr in _data_chunks(f, header, 1)]
    flat = np.concatenate(values) if values else np.zeros(0)
    if header.symmetry == "symmetric":
        raise ParseError("symmetric array layout is not supported", line=header.first_data_line)
    return flat.reshape((n, m)).T.copy()


def read_array_with_comments(path):
    """Dense array file plus its comment lines (used for map headers)."""
    with open(path) as f:
        header = _read_header(f)
        if header.layout != "array":
            raise ParseError("expected an array-layout Matrix Market file", line=1)
        return _read_array_body(f, header), header.comments


def read_csv_dense(path):
    with open(path) as f:
        lines = [ln for ln in f]
    rows = []
    width = None
    for i, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            row = [float(t) for t in line.split(",")]
        except ValueError:
            raise ParseError(f"non-numeric field in {line.strip()!r}", line=i) from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"expected {width} fields, found {len(row)}", line=i)
        if not all(np.isfinite(row)):
            raise ParseError("non-finite value", line=i)
        rows.append(row)
    if not rows:
        raise ParseError("empty CSV file", line=1)
    return np.array(rows)


def read_input(path, fmt="mm"):
    """Load a matrix for reduction as a SparseMatrix."""
    if fmt == "csv":
        return SparseMatrix.from_dense(read_csv_dense(path))
    X = read_matrix_market(path)
    if isinstance(X, np.ndarray):
        X = SparseMatrix.from_dense(X)
    return X


def read_header_shape(path, fmt="mm"):
    if fmt == "csv":
        return read_csv_dense(path).shape
    with open(path) as f:
        return _read_header(f).shape


def iter_mm_row_blocks(path, block_rows):
    """Stream a coordinate file as horizontal slices without loading it whole.

    The first pass counts entries per slice; the second distributes them into
    a disk-backed buffer laid out slice by slice, from which each slice is
    materialised in turn.
    """
    if block_rows < 1:
        raise ValueError("block_rows must be at least 1")
    with open(path) as f:
        header = _read_header(f)
        if header.layout != "coordinate":
            raise ParseError("streaming needs a coordinate-layout file", line=1)
        m, n = header.shape
        n_blocks = max(1, -(-m // block_rows))
        counts = np.zeros(n_blocks, dtype=np.int64)
        for r, _, _ in _coordinate_entries(f, header):
            counts += np.bincount(r // block_rows, minlength=n_blocks)
    starts = np.concatenate([[0], np.cumsum(counts)])
    total = int(starts[-1])
    with tempfile.TemporaryDirectory(prefix="lazyspca-") as tmp:
        shape = (max(total, 1),)
        rows = np.memmap(os.path.join(tmp, "r"), dtype=np.int64, mode="w+", shape=shape)
        cols = np.memmap(os.path.join(tmp, "c"), dtype=np.int64, mode="w+", shape=shape)
        vals = np.memmap(os.path.join(tmp, "v"), dtype=np.float64, mode="w+", shape=shape)
        cursor = starts[:-1].copy()
        with open(path) as f:
            _read_header(f)
            for r, c, v in _coordinate_entries(f, header):
                b = r // block_rows
                order = np.argsort(b, kind="stable")
                b, r, c, v = b[order], r[order], c[order], v[order]
                ids, first, size = np.unique(b, return_index=True, return_counts=True)
                for blk, lo, cnt in zip(ids, first, size):
                    dst = slice(cursor[blk], cursor[blk] + cnt)
                    rows[dst] = r[lo:lo + cnt]
                    cols[dst] = c[lo:lo + cnt]
                    vals[dst] = v[lo:lo + cnt]
                    cursor[blk] += cnt
        for s in range(n_blocks):
            lo, hi = starts[s], starts[s + 1]
            r0 = s * block_rows
            block_m = min(block_rows, m - r0) if m else 0
            block = SparseMatrix.from_coo(
                np.array(rows[lo:hi]) - r0, np.array(cols[lo:hi]), np.array(vals[lo:hi]), (block_m, n)
            )
            yield RowBlock(s, block)
        del rows, cols, vals


def write_matrix_market(path, X, comments=()):
    """Write a SparseMatrix as a general real coordinate file."""
    C = X.to_scipy().tocoo()
    order = np.lexsort((C.row, C.col))
    with open(path, "w") as f:
        f.write("%%MatrixMarket matrix coordinate real general\n")
        for c in comments:
            f.write(f"% {c}\n")
        f.write(f"{X.rows} {X.cols} {X.nnz}\n")
        if X.nnz:
            body = np.column_stack([C.row[order] + 1, C.col[order] + 1])
            for start in range(0, X.nnz, CHUNK_LINES):
                sl = slice(start, start + CHUNK_LINES)
                f.writelines(
                    f"{i} {j} {v!r}\n" for (i, j), v in zip(body[sl].tolist(), C.data[order][sl].tolist())
                )


def write_array(path, A, comments=()):
    """Write a dense matrix in array layout, column-major, full precision."""
    A = np.asarray(A, dtype=np.float64)
    with open(path, "w") as f:
        f.write("%%MatrixMarket matrix array real general\n")
        for c in comments:
            f.write(f"% {c}\n")
        f.write(f"{A.shape[0]} {A.shape[1]}\n")
        f.writelines(f"{v!r}\n" for v in A.T.ravel().tolist())


def write_csv(path, A):
    A = np.asarray(A, dtype=np.float64)
    with open(path, "w") as f:
        f.writelines(",".join(repr(v) for v in row) + "\n" for row in A.tolist())
