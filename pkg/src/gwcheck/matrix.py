"""Dense symmetric positive-definite matrix utilities.

All factorizations go through Cholesky; there is no non-PD linear algebra
here. Index sets for block operations use 1-based labels to match graph
nodes. Matrices are plain float64 numpy arrays.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

__all__ = [
    "NumericalError",
    "NotPositiveDefiniteError",
    "PatternViolationError",
    "symmetrize",
    "check_symmetric",
    "cholesky",
    "is_positive_definite",
    "inverse",
    "logdet",
    "trace",
    "schur_complement",
    "enforce_pattern",
    "matrix_to_csv",
    "matrix_from_csv",
    "load_matrix_file",
]


class NumericalError(RuntimeError):
    """Numerical failure (maps to CLI exit code 3)."""


class NotPositiveDefiniteError(NumericalError):
    """A Cholesky pivot was non-positive."""


class PatternViolationError(ValueError):
    """Off-pattern entries above tolerance; `violations` lists (i, j, value)."""

    def __init__(self, violations):
        self.violations = list(violations)
        head = ", ".join(f"({i},{j})={v:.3e}" for i, j, v in self.violations[:5])
        more = "" if len(self.violations) <= 5 else f" and {len(self.violations) - 5} more"
        super().__init__(f"off-pattern entries above tolerance: {head}{more}")


def symmetrize(m: np.ndarray) -> np.ndarray:
    """(M + M^T)/2; exactly symmetric in floating point."""
    m = np.asarray(m, dtype=np.float64)
    return (m + m.T) / 2.0


def check_symmetric(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.array_equal(m, m.T):
        raise ValueError("matrix is not exactly symmetric (symmetrize() first)")
    return m


def cholesky(m: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L L^T = M; raises NotPositiveDefiniteError."""
    m = check_symmetric(m)
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("matrix is not positive definite") from None


def is_positive_definite(m: np.ndarray) -> bool:
    try:
        cholesky(m)
    except (NotPositiveDefiniteError, ValueError):
        return False
    return True


def inverse(m: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric PD matrix via Cholesky; exactly symmetric output."""
    chol = cholesky(m)
    inv = scipy.linalg.cho_solve((chol, True), np.eye(chol.shape[0]))
    return symmetrize(inv)


def logdet(m: np.ndarray) -> float:
    chol = cholesky(m)
    return float(2.0 * np.sum(np.log(np.diag(chol))))


def trace(m: np.ndarray) -> float:
    m = np.asarray(m, dtype=np.float64)
    return float(np.trace(m))


def _split_indices(dim: int, block) -> tuple:
    idx = sorted(set(int(i) for i in block))
    if not idx:
        raise ValueError("index set is empty")
    if idx[0] < 1 or idx[-1] > dim:
        raise ValueError(f"index set outside 1..{dim}")
    if len(idx) == dim:
        raise ValueError("index set must be a proper subset")
    chosen = set(idx)
    inside = np.array(idx, dtype=np.intp) - 1
    outside = np.array([i for i in range(dim) if i + 1 not in chosen], dtype=np.intp)
    return inside, outside


def schur_complement(q: np.ndarray, block) -> np.ndarray:
    """Q_{C,C} - Q_{C,R} Q_{R,R}^{-1} Q_{C,R}^T for C = `block` (1-based), R the rest.

    PD whenever Q is PD.
    """
    q = check_symmetric(q)
    inside, outside = _split_indices(q.shape[0], block)
    qcc = q[np.ix_(inside, inside)]
    x = q[np.ix_(inside, outside)]
    srr = q[np.ix_(outside, outside)]
    chol = cholesky(srr)
    y = scipy.linalg.solve_triangular(chol, x.T, lower=True)
    return symmetrize(qcc - y.T @ y)


def enforce_pattern(m: np.ndarray, graph, atol: float = 1e-9) -> np.ndarray:
    """Zero off-pattern entries at most `atol` in magnitude; verify PD.

    Off-pattern means positions (i, j), i != j, with no edge (i, j) in `graph`.
    Larger off-pattern entries raise PatternViolationError; the result is
    checked positive definite.
    """
    m = check_symmetric(m)
    p = m.shape[0]
    if p != graph.p:
        raise ValueError(f"matrix is {p}x{p} but graph has {graph.p} nodes")
    mask = pattern_mask(graph)
    off = ~mask
    bad = off & (np.abs(m) > atol)
    if bad.any():
        ii, jj = np.nonzero(np.triu(bad, 1))
        raise PatternViolationError(
            [(int(i) + 1, int(j) + 1, float(m[i, j])) for i, j in zip(ii, jj)]
        )
    out = m.copy()
    out[off] = 0.0
    cholesky(out)
    return out


def pattern_mask(graph) -> np.ndarray:
    """Boolean (p, p) array: True on the diagonal and at graph edges."""
    p = graph.p
    mask = np.eye(p, dtype=bool)
    for i, j in graph.edges:
        mask[i - 1, j - 1] = True
        mask[j - 1, i - 1] = True
    return mask


def matrix_to_csv(m: np.ndarray) -> str:
    """Row-major comma-separated dump at 17 significant digits."""
    m = np.asarray(m, dtype=np.float64)
    return "\n".join(",".join(format(v, ".17g") for v in row) for row in m)


def matrix_from_csv(text: str) -> np.ndarray:
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        rows.append([float(f) for f in line.split(",")])
    if not rows:
        raise ValueError("no matrix rows found")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("ragged matrix rows")
    return np.array(rows, dtype=np.float64)


def load_matrix_file(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        return matrix_from_csv(fh.read())
