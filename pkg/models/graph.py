"""
Kernel integral transform on point clouds, the GNO building block.

Neighborhoods are exact radius balls (boundary inclusive). Aggregation is the
mean of kappa(x_i, y_j) v(y_j) over the neighborhood of x_i, summed in ascending
source order; a query with no neighbors gets a zero row and is counted.
Duplicating every source leaves the output unchanged, with the 1/|N| weights
recomputed from the new index.
"""
from collections import namedtuple

import numpy as np
from scipy.spatial import cKDTree

from core.base_dataset import PointCloud
from core.tensor import Tensor, as_tensor, contract, mul, reshape, segment_sum, take

NeighborIndex = namedtuple('NeighborIndex', 'offsets indices radius')


def _coords(points):
    points = points.coords if isinstance(points, PointCloud) else points
    points = points.data if isinstance(points, Tensor) else np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 1:
        raise ValueError('coordinates must be [N, d] with N >= 1, got {}'.format(points.shape))
    if not np.all(np.isfinite(points)):
        raise ValueError('coordinates must be finite')
    return points


def radius_search(queries, sources, r, method='brute'):
    """
    sources within distance r of each query, ascending source order per query;
    ``kdtree`` gives the same index sets as ``brute``
    """
    queries, sources = _coords(queries), _coords(sources)
    if not r > 0:
        raise ValueError('search radius must be positive, got {}'.format(r))
    if queries.shape[1] != sources.shape[1]:
        raise ValueError('query dimension {} does not match source dimension {}'.format(queries.shape[1], sources.shape[1]))
    if method == 'brute':
        lists = []
        for q in queries:
            dist = np.sqrt(np.sum((sources - q) ** 2, axis=1))
            lists.append(np.nonzero(dist <= r)[0])
    elif method == 'kdtree':
        ''' a small relative slack, then the exact test, so both methods agree on the boundary '''
        tree = cKDTree(sources)
        lists = []
        for q, found in zip(queries, tree.query_ball_point(queries, r * (1.0 + 1e-12))):
            found = np.sort(np.asarray(found, dtype=np.int64))
            dist = np.sqrt(np.sum((sources[found] - q) ** 2, axis=1))
            lists.append(found[dist <= r])
    else:
        raise ValueError('unknown radius search method [{}]'.format(method))
    counts = np.array([len(l) for l in lists], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    indices = np.concatenate(lists).astype(np.int64) if lists else np.zeros(0, dtype=np.int64)
    return NeighborIndex(offsets, indices, float(r))


def neighbor_counts(index):
    return np.diff(index.offsets)


def check_index(index, n_queries, n_sources):
    offsets = np.asarray(index.offsets)
    if offsets.shape != (n_queries + 1,):
        raise ValueError('neighbor index covers {} queries, got {}'.format(offsets.shape[0] - 1, n_queries))
    if offsets[0] != 0 or np.any(np.diff(offsets) < 0) or offsets[-1] != len(index.indices):
        raise ValueError('neighbor offsets are not a valid prefix array')
    if len(index.indices) and (index.indices.min() < 0 or index.indices.max() >= n_sources):
        raise ValueError('neighbor index refers to sources beyond {}'.format(n_sources))


def edge_inputs(queries, sources, index):
    """ [E, 2d] rows concat(x_i, y_j) plus the query id of every edge """
    counts = neighbor_counts(index)
    query_ids = np.repeat(np.arange(len(counts)), counts)
    pairs = np.concatenate([queries[query_ids], sources[index.indices]], axis=1)
    return pairs, query_ids


def kernel_integral(queries, sources, index, kernel, out_channels):
    """
    out(x_i) = mean over j in N(x_i) of kappa(x_i, y_j) v(y_j).

    ``kernel`` maps edge rows [E, 2d] to [E, C_out * C_in]; ``sources`` is a
    PointCloud whose features are [N_src, C_in]. Returns (features, n_isolated).
    """
    q = _coords(queries)
    y = _coords(sources.coords)
    features = as_tensor(sources.features)
    if features.ndim != 2 or features.shape[0] != y.shape[0]:
        raise ValueError('source features {} do not match {} source points'.format(features.shape, y.shape[0]))
    if q.shape[1] != y.shape[1]:
        raise ValueError('query dimension {} does not match source dimension {}'.format(q.shape[1], y.shape[1]))
    check_index(index, q.shape[0], y.shape[0])
    in_channels = features.shape[1]
    counts = neighbor_counts(index)
    n_isolated = int(np.sum(counts == 0))
    if len(index.indices) == 0:
        return Tensor(np.zeros((q.shape[0], out_channels))), n_isolated
    pairs, query_ids = edge_inputs(q, y, index)
    k = kernel(Tensor(pairs))
    if tuple(k.shape) != (len(pairs), out_channels * in_channels):
        raise ValueError('kernel returned {}, expected {}'.format(k.shape, (len(pairs), out_channels * in_channels)))
    k = reshape(k, (len(pairs), out_channels, in_channels))
    messages = contract(k, take(features, index.indices), axes=[(2, 1)], batch_axes=[(0, 0)])
    summed = segment_sum(messages, query_ids, q.shape[0])
    scale = 1.0 / np.maximum(counts, 1).astype(np.float64)
    return mul(summed, Tensor(scale[:, None])), n_isolated
