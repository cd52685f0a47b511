"""
Viscous Burgers u_t + u u_x = nu u_xx on the periodic unit interval.

Pseudo-spectral in space with the 2/3 rule on the nonlinear term; diffusion is
integrated exactly through an integrating factor and the remainder by RK4 with
dt = min(0.5 dx / max|u|, 0.4 dx^2 / nu), recomputed every step.
"""
import numpy as np

from core import fft
from data.util.darcy import SolverError


def dealias_mask(n):
    k = np.abs(fft.fftfreq(n))[:n // 2 + 1]
    return (k < n / 3.0).astype(np.float64)


def _nonlinear(u_hat, ik, mask, n):
    """ spectrum of -u u_x with the mean left untouched """
    u_hat = u_hat * mask
    u = fft.irfft(u_hat, n)
    ux = fft.irfft(ik * u_hat, n)
    out = -fft.rfft(u * ux) * mask
    out[0] = 0.0
    return out


def solve_burgers(u0, nu, T):
    u0 = np.asarray(u0, dtype=np.float64)
    n = u0.shape[-1]
    if u0.ndim != 1 or n < 16 or n & (n - 1):
        raise ValueError('n must be a power of two >= 16, got shape {}'.format(u0.shape))
    if not nu > 0:
        raise ValueError('viscosity must be positive, got {}'.format(nu))
    if T < 0:
        raise ValueError('final time must be non-negative, got {}'.format(T))
    dx = 1.0 / n
    k = np.arange(n // 2 + 1).astype(np.float64)
    ik = 2j * np.pi * k
    decay = -nu * (2.0 * np.pi * k) ** 2
    mask = dealias_mask(n)
    u_hat = fft.rfft(u0)
    t = 0.0
    while t < T:
        u = fft.irfft(u_hat, n)
        if not np.all(np.isfinite(u)):
            raise SolverError('Burgers state became non-finite at t={:.6g}'.format(t))
        umax = np.max(np.abs(u))
        dt = 0.4 * dx * dx / nu
        if umax > 0:
            dt = min(dt, 0.5 * dx / umax)
        dt = min(dt, T - t)
        half = np.exp(decay * dt / 2.0)
        full = half * half
        k1 = _nonlinear(u_hat, ik, mask, n)
        k2 = _nonlinear(half * (u_hat + dt / 2.0 * k1), ik, mask, n)
        k3 = _nonlinear(half * u_hat + dt / 2.0 * k2, ik, mask, n)
        k4 = _nonlinear(full * u_hat + dt * half * k3, ik, mask, n)
        u_hat = full * u_hat + dt / 6.0 * (full * k1 + 2.0 * half * (k2 + k3) + k4)
        t += dt
    u = fft.irfft(u_hat, n)
    if not np.all(np.isfinite(u)):
        raise SolverError('Burgers state became non-finite at t={:.6g}'.format(T))
    return u
