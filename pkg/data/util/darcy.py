"""
Steady Darcy flow -div(a grad u) = f on the unit square with u = 0 on the
boundary. The grid holds n x n nodes including the boundary (spacing 1/(n-1));
interior nodes get a 5-point finite-volume stencil with harmonic means of a on
the faces, and the SPD system is solved by conjugate gradients.
"""
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SolverError(RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        super(SolverError, self).__init__(message)
        self.residual = residual
        self.iterations = iterations


def darcy_coefficient(field, a_hi=12.0, a_lo=3.0):
    """ two-phase medium: a_hi where the field is non-negative, a_lo elsewhere """
    field = np.asarray(field, dtype=np.float64)
    return np.where(field >= 0, a_hi, a_lo)


def _harmonic(a, b):
    return 2.0 * a * b / (a + b)


def assemble(a):
    """ sparse operator over interior nodes in row-major order, already divided by h^2 """
    n = a.shape[0]
    m = n - 2
    h2 = (1.0 / (n - 1)) ** 2
    idx = np.arange(m * m).reshape(m, m)
    inner = a[1:-1, 1:-1]
    rows, cols, vals = [], [], []
    diag = np.zeros((m, m))
    for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        neighbor = a[1 + di:n - 1 + di, 1 + dj:n - 1 + dj]
        face = _harmonic(inner, neighbor) / h2
        diag += face
        ''' couplings to interior neighbors only, boundary values are zero '''
        ii, jj = np.meshgrid(np.arange(m), np.arange(m), indexing='ij')
        ni, nj = ii + di, jj + dj
        keep = (ni >= 0) & (ni < m) & (nj >= 0) & (nj < m)
        rows.append(idx[ii[keep], jj[keep]])
        cols.append(idx[ni[keep], nj[keep]])
        vals.append(-face[keep])
    rows.append(idx.reshape(-1))
    cols.append(idx.reshape(-1))
    vals.append(diag.reshape(-1))
    matrix = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m * m, m * m))
    return matrix.tocsr()


def conjugate_gradient(matrix, b, tol=1e-8, max_iter=None):
    """ scipy CG from x = 0, stopping at ||r|| <= tol ||b||; returns (x, iterations) """
    max_iter = 10 * b.size if max_iter is None else max_iter
    b_norm = np.linalg.norm(b)
    if b_norm == 0:
        return np.zeros_like(b), 0
    iterations = [0]

    def count(_):
        iterations[0] += 1

    x, info = spla.cg(matrix, b, x0=np.zeros_like(b), rtol=tol, atol=0.0, maxiter=max_iter, callback=count)
    if info != 0:
        residual = float(np.linalg.norm(b - matrix.dot(x)) / b_norm)
        raise SolverError('conjugate gradients did not converge in {} iterations, relative residual {:.3e}'.format(
            iterations[0], residual), residual=residual, iterations=iterations[0])
    return x, iterations[0]


def solve_darcy(a, f=None, tol=1e-8, max_iter=None):
    """
    u on the same n x n node grid as a, zero on the boundary rows and columns;
    f defaults to 1 and may be a scalar or an n x n array
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 3:
        raise ValueError('coefficient must be an n x n grid with n >= 3, got {}'.format(a.shape))
    if not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise ValueError('coefficient must be positive everywhere')
    n = a.shape[0]
    f = np.broadcast_to(np.asarray(1.0 if f is None else f, dtype=np.float64), a.shape)
    matrix = assemble(a)
    max_iter = 10 * n * n if max_iter is None else max_iter
    x, _ = conjugate_gradient(matrix, np.ascontiguousarray(f[1:-1, 1:-1]).reshape(-1), tol, max_iter)
    u = np.zeros((n, n))
    u[1:-1, 1:-1] = x.reshape(n - 2, n - 2)
    return u


def darcy_bounds(n):
    """ node i sits at i / (n - 1) under the endpoint-exclusive grid convention """
    return ((0.0, n / (n - 1.0)),) * 2
