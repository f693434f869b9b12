"""Split-step spectral evolution of a 1D Schroedinger packet (hbar = 1)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid:
    n: int
    length: float

    def __post_init__(self):
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError("grid size must be a power of two")

    @property
    def dx(self):
        return self.length / self.n

    @property
    def x(self):
        return (np.arange(self.n) - self.n // 2) * self.dx

    @property
    def k(self):
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)


@dataclass(frozen=True)
class Potential:
    """Named potential with its analytic derivative."""
    kind: str = "free"
    params: tuple = ()

    def value(self, x, m=1.0):
        if self.kind == "free":
            return np.zeros_like(x)
        if self.kind == "harmonic":
            (w,) = self._p(1)
            return 0.5 * m * w * w * x * x
        if self.kind == "quartic":
            (lam,) = self._p(1)
            return lam * x ** 4
        if self.kind == "gaussian-well":
            v0, s = self._p(2)
            return -v0 * np.exp(-x * x / (2 * s * s))
        if self.kind == "linear":
            (kappa,) = self._p(1)
            return kappa * x
        raise ValueError(f"unknown potential {self.kind!r}")

    def derivative(self, x, m=1.0):
        if self.kind == "free":
            return np.zeros_like(x)
        if self.kind == "harmonic":
            (w,) = self._p(1)
            return m * w * w * x
        if self.kind == "quartic":
            (lam,) = self._p(1)
            return 4 * lam * x ** 3
        if self.kind == "gaussian-well":
            v0, s = self._p(2)
            return v0 * x / (s * s) * np.exp(-x * x / (2 * s * s))
        if self.kind == "linear":
            (kappa,) = self._p(1)
            return np.full_like(x, kappa)
        raise ValueError(f"unknown potential {self.kind!r}")

    def _p(self, n):
        if len(self.params) < n:
            raise ValueError(f"{self.kind} needs {n} parameter(s)")
        return self.params[:n]

    @classmethod
    def parse(cls, text: str) -> "Potential":
        """``free``, ``harmonic:1.0``, ``quartic:0.1``, ``gaussian-well:1.0,0.5``."""
        name, _, rest = text.partition(":")
        params = tuple(float(v) for v in rest.split(",") if v.strip()) if rest else ()
        pot = cls(name.strip(), params)
        pot.value(np.zeros(1))
        return pot


def gaussian_packet(grid: Grid, x0=0.0, p0=0.0, sigma=1.0) -> np.ndarray:
    x = grid.x
    psi = np.exp(-(x - x0) ** 2 / (4 * sigma ** 2) + 1j * p0 * x)
    return psi / np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)


def coherent_state(grid: Grid, omega=1.0, m=1.0, x0=1.0, p0=0.0) -> np.ndarray:
    """Ground state of the oscillator displaced to (x0, p0)."""
    return gaussian_packet(grid, x0, p0, sigma=np.sqrt(1.0 / (2 * m * omega)))


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    force: np.ndarray       # <-V'>
    norm: np.ndarray
    mass: float

    def __len__(self):
        return len(self.t)


def _observables(psi, grid: Grid, dV):
    rho = np.abs(psi) ** 2 * grid.dx
    phat = np.fft.fft(psi)
    w = np.abs(phat) ** 2
    return (float(np.sum(grid.x * rho)), float(np.sum(grid.k * w) / np.sum(w)),
            float(-np.sum(dV * rho)), float(np.sum(rho)))


def evolve_schrodinger(psi0, grid: Grid, potential: Potential, dt: float, steps: int,
                       m: float = 1.0) -> Trajectory:
    """Strang splitting: half kick in V, drift in k space, half kick."""
    norm0 = np.sum(np.abs(psi0) ** 2) * grid.dx
    if abs(norm0 - 1) > 1e-10:
        raise ValueError(f"initial state is not normalized (norm {norm0:.3e})")
    V = potential.value(grid.x, m)
    dV = potential.derivative(grid.x, m)
    kick = np.exp(-0.5j * dt * V)
    drift = np.exp(-0.5j * dt * grid.k ** 2 / m)
    out = np.empty((steps + 1, 4))
    psi = np.asarray(psi0, dtype=complex).copy()
    out[0] = _observables(psi, grid, dV)
    for n in range(1, steps + 1):
        psi = kick * np.fft.ifft(drift * np.fft.fft(kick * psi))
        out[n] = _observables(psi, grid, dV)
        if not np.isfinite(out[n]).all():
            raise FloatingPointError(f"non-finite observables at step {n}")
    t = dt * np.arange(steps + 1)
    return Trajectory(t, out[:, 0], out[:, 1], out[:, 2], out[:, 3], m)


def centered(y, dt):
    return (y[2:] - y[:-2]) / (2 * dt)


def ehrenfest_residuals(traj: Trajectory):
    """r_x = d<x>/dt - <p>/m and r_p = d<p>/dt - <-V'> at interior times."""
    if len(traj) < 5:
        raise ValueError("trajectory too short")
    dt = traj.t[1] - traj.t[0]
    r_x = centered(traj.x, dt) - traj.p[1:-1] / traj.mass
    r_p = centered(traj.p, dt) - traj.force[1:-1]
    return r_x, r_p


def run_experiment(potential="harmonic:1.0", n=1024, length=40.0, dt=1e-3, steps=6283,
                   m=1.0, x0=1.0, p0=0.0, sigma=None):
    """Trajectory plus residual summary for one configuration and for dt/2."""
    grid = Grid(n, length)
    pot = Potential.parse(potential)

    def one(dt_, steps_):
        if pot.kind == "harmonic" and sigma is None:
            psi = coherent_state(grid, pot.params[0], m, x0, p0)
        else:
            psi = gaussian_packet(grid, x0, p0, sigma or 1.0)
        tr = evolve_schrodinger(psi, grid, pot, dt_, steps_, m)
        return tr, ehrenfest_residuals(tr)

    tr, (rx, rp) = one(dt, steps)
    _, (rx2, rp2) = one(dt / 2, 2 * steps)
    mx, mp = float(np.max(np.abs(rx))), float(np.max(np.abs(rp)))
    mx2, mp2 = float(np.max(np.abs(rx2))), float(np.max(np.abs(rp2)))
    summary = {
        "max_residuals": {"r_x": mx, "r_p": mp},
        "half_dt_max_residuals": {"r_x": mx2, "r_p": mp2},
        "convergence_ratios": {"r_x": mx / mx2 if mx2 else float("inf"),
                               "r_p": mp / mp2 if mp2 else float("inf")},
        "norm_drift": float(np.max(np.abs(tr.norm - 1))),
    }
    return tr, (rx, rp), summary
