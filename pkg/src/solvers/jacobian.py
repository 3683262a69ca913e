import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from src.solvers import worker_count

logger = logging.getLogger(__name__)

CHUNK = 256


def _columns_image(rhs: Callable, columns: np.ndarray, dim: int, vectorized: bool) -> np.ndarray:
    """Images of the unit vectors e_k, k in columns, as rows of a (len, dim) array."""
    basis = np.zeros((len(columns), dim))
    basis[np.arange(len(columns)), columns] = 1.0
    if vectorized:
        return np.asarray(rhs(basis))
    return np.stack([np.asarray(rhs(e)) for e in basis])


def assemble_jacobian(
    rhs: Callable[[np.ndarray], np.ndarray],
    dim: int,
    vectorized: bool = False,
    sparse: bool = False,
    column_order: Sequence[int] | None = None,
    workers: int | None = None,
    chunk: int = CHUNK,
) -> np.ndarray | sp.csc_matrix:
    """
    J[:, k] = rhs(e_k). Exact for linear rhs with no forcing.
    Chunks of basis vectors run through rhs on a thread pool; column_order
    only changes the schedule, never the result.
    """
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    order = np.arange(dim) if column_order is None else np.asarray(column_order, dtype=int)
    if sorted(order.tolist()) != list(range(dim)):
        raise ValueError("column_order must be a permutation of range(dim)")

    chunks = [order[i:i + chunk] for i in range(0, dim, chunk)]
    workers = worker_count(workers)
    start = time.perf_counter()

    def run(columns):
        images = _columns_image(rhs, columns, dim, vectorized)
        if images.shape != (len(columns), dim):
            raise ValueError(f"rhs returned shape {images.shape[1:]}, expected ({dim},)")
        logger.debug(f"Probed {len(columns)} columns starting at {columns[0]}")
        if sparse:
            return columns, sp.csr_matrix(images)
        return columns, images

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(run, chunks))
    else:
        results = [run(c) for c in chunks]

    if sparse:
        columns = np.concatenate([c for c, _ in results])
        stacked = sp.vstack([block for _, block in results]).tocsr()
        # rows of `stacked` are columns of J in the requested order
        inverse = np.empty(dim, dtype=int)
        inverse[columns] = np.arange(dim)
        jac = stacked[inverse].T.tocsc()
        jac.eliminate_zeros()
    else:
        jac = np.empty((dim, dim))
        for columns, images in results:
            jac[:, columns] = images.T

    logger.info(f"Assembled {dim}x{dim} Jacobian ({'sparse' if sparse else 'dense'}) "
                f"on {workers} workers in {time.perf_counter() - start:.2f}s")
    return jac
