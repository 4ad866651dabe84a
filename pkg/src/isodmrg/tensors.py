"""Dense tensor primitives: contraction, SVD splitting, isometry handling.

Tensors are plain numpy arrays of complex128 with one axis per leg.  All leg
dimensions that end up mapped to qubits elsewhere in the package are powers of
two, but the primitives here work for arbitrary dimensions.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

__all__ = [
    "contract",
    "split_svd",
    "embed_isometry_in_unitary",
    "hermitian_lowest",
]


def contract(a: np.ndarray, b: np.ndarray, pairs: list[tuple[int, int]]) -> np.ndarray:
    """Contract tensors ``a`` and ``b`` over the given ``(axis_a, axis_b)`` pairs.

    Remaining legs keep their relative order, ``a`` legs first.  An empty pair
    list yields the outer product.  Raises ``ValueError`` on dimension
    mismatches or repeated axes.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    ax_a = [p[0] for p in pairs]
    ax_b = [p[1] for p in pairs]
    if len(set(ax_a)) != len(ax_a) or len(set(ax_b)) != len(ax_b):
        raise ValueError("repeated axis in contraction pairs")
    for i, j in pairs:
        if not (-a.ndim <= i < a.ndim) or not (-b.ndim <= j < b.ndim):
            raise ValueError(f"axis pair ({i}, {j}) out of range")
        if a.shape[i] != b.shape[j]:
            raise ValueError(
                f"dimension mismatch on pair ({i}, {j}): {a.shape[i]} != {b.shape[j]}"
            )
    if not pairs:
        return np.multiply.outer(a, b)
    return np.tensordot(a, b, axes=(ax_a, ax_b))


def split_svd(
    t: np.ndarray,
    left_legs: list[int],
    max_rank: int | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Split ``t`` across the bipartition (left_legs | rest) by SVD.

    Returns ``(u, s, v, discarded_weight)`` where ``u`` has shape
    ``(*left_dims, k)`` with orthonormal columns, ``s`` holds the kept singular
    values in descending order, ``v`` has shape ``(k, *right_dims)`` and
    ``discarded_weight`` is the summed square of the dropped singular values.
    ``einsum('...a,a,a...', u, s, v)`` rebuilds ``t`` with its legs permuted to
    left legs followed by right legs.
    """
    t = np.asarray(t)
    left_legs = [l % t.ndim for l in left_legs]
    if len(set(left_legs)) != len(left_legs):
        raise ValueError("repeated leg in left_legs")
    right_legs = [i for i in range(t.ndim) if i not in left_legs]
    perm = list(left_legs) + right_legs
    ldims = [t.shape[i] for i in left_legs]
    rdims = [t.shape[i] for i in right_legs]
    mat = t.transpose(perm).reshape(int(np.prod(ldims, dtype=np.int64)), -1)
    try:
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd can fail to converge on defective inputs; gesvd is slower but
        # more robust.  A second failure is a hard error.
        u, s, vh = scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesvd")
    k = len(s)
    if max_rank is not None:
        if max_rank < 1:
            raise ValueError("max_rank must be >= 1")
        k = min(k, max_rank)
    discarded = float(np.sum(s[k:] ** 2))
    u = np.ascontiguousarray(u[:, :k]).reshape(*ldims, k)
    v = np.ascontiguousarray(vh[:k]).reshape(k, *rdims)
    return u, s[:k].copy(), v, discarded


def embed_isometry_in_unitary(w: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Complete an isometry ``w`` of shape (d_out, d_in) to a d_out unitary.

    The first ``d_in`` columns of the result are ``w`` exactly; the remaining
    columns are built by deterministic Gram-Schmidt over the canonical basis
    vectors in index order, skipping near-dependent candidates.  Requires
    power-of-two dimensions with ``d_in`` dividing ``d_out`` and
    ``w.conj().T @ w = I`` within ``tol``.
    """
    w = np.asarray(w, dtype=np.complex128)
    if w.ndim != 2:
        raise ValueError("isometry must be a matrix")
    d_out, d_in = w.shape
    for d in (d_out, d_in):
        if d < 1 or d & (d - 1):
            raise ValueError(f"dimension {d} is not a power of two")
    if d_out % d_in:
        raise ValueError("d_in must divide d_out")
    defect = np.max(np.abs(w.conj().T @ w - np.eye(d_in)))
    if defect > tol:
        raise ValueError(f"input is not an isometry (defect {defect:.3e})")
    if d_out == d_in:
        return w.copy()
    cols = np.zeros((d_out, d_out), dtype=np.complex128)
    cols[:, :d_in] = w
    have = d_in
    for j in range(d_out):
        if have == d_out:
            break
        v = np.zeros(d_out, dtype=np.complex128)
        v[j] = 1.0
        # Two Gram-Schmidt passes keep orthogonality at machine precision.
        for _ in range(2):
            v -= cols[:, :have] @ (cols[:, :have].conj().T @ v)
        nrm = np.linalg.norm(v)
        if nrm < 1e-6:
            continue
        cols[:, have] = v / nrm
        have += 1
    if have != d_out:
        raise ValueError("failed to complete isometry to a unitary")
    return cols


def hermitian_lowest(h: np.ndarray, k: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Lowest ``k`` eigenpairs of a Hermitian matrix, ascending.

    Returns ``(values, vectors)`` with eigenvectors in the columns.  The input
    must be Hermitian within 1e-10 relative to its scale; it is symmetrized
    before the dense solve so estimator round-off cannot leak in.
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("matrix must be square")
    if not 1 <= k <= h.shape[0]:
        raise ValueError("k out of range")
    scale = max(1.0, float(np.max(np.abs(h))))
    defect = np.max(np.abs(h - h.conj().T))
    if defect > 1e-10 * scale:
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e})")
    vals, vecs = np.linalg.eigh((h + h.conj().T) / 2.0)
    return vals[:k].copy(), vecs[:, :k].copy()
