"""Dirac spinor packets and a 1D Crank-Nicolson force-law experiment.

Dirac (standard) representation, hbar = c = 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

SIGMA = (np.array([[0, 1], [1, 0]], dtype=complex),
         np.array([[0, -1j], [1j, 0]], dtype=complex),
         np.array([[1, 0], [0, -1]], dtype=complex))
BETA = np.diag([1, 1, -1, -1]).astype(complex)


def alpha(i: int) -> np.ndarray:
    z = np.zeros((2, 2), dtype=complex)
    return np.block([[z, SIGMA[i]], [SIGMA[i], z]])


ALPHA_X = alpha(0)


def spinors(px, py, pz, m, negative=False):
    """Plane-wave spinors at each node, shape (nodes, 2, 4).

    Positive energy gives u1, u2 (spin up, down).  ``negative=True`` gives the
    e^{+ipx} pair built with |E|, so that u^dag u = |E|/m.
    """
    px = np.asarray(px, dtype=float)
    E = np.sqrt(px ** 2 + py ** 2 + pz ** 2 + m ** 2)
    n = np.sqrt((E + m) / (2 * m))
    d = E + m
    pp, pm = px + 1j * py, px - 1j * py
    one, zero = np.ones_like(px), np.zeros_like(px)
    if not negative:
        a = np.stack([one, zero, pz / d, pp / d], axis=-1)
        b = np.stack([zero, one, pm / d, -pz / d], axis=-1)
    else:
        a = np.stack([pz / d, pp / d, one, zero], axis=-1)
        b = np.stack([pm / d, -pz / d, zero, one], axis=-1)
    return n[:, None, None] * np.stack([a, b], axis=1).astype(complex)


@dataclass
class MomentumAmplitudes:
    px: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    py: float = 0.0
    pz: float = 0.0
    m: float = 1.0

    def __post_init__(self):
        dp = np.diff(self.px)
        if len(dp) == 0 or not np.allclose(dp, dp[0]) or dp[0] <= 0:
            raise ValueError("momentum grid must be uniform and increasing")

    @property
    def weight(self):
        return self.px[1] - self.px[0]

    @property
    def energy(self):
        return np.sqrt(self.px ** 2 + self.py ** 2 + self.pz ** 2 + self.m ** 2)

    @classmethod
    def gaussian(cls, n=512, p_max=12.0, p0=1.0, width=0.5, c1=1.0, c2=0.0,
                 py=0.3, pz=-0.2, m=1.0):
        px = np.linspace(-p_max, p_max, n)
        g = np.exp(-(px - p0) ** 2 / (4 * width ** 2)) * np.exp(0.7j * px)
        return cls(px, c1 * g, c2 * g, py, pz, m)


def _quad(values, w):
    return complex(np.sum(values) * w)


def dirac_wavepacket_check(amps: MomentumAmplitudes) -> dict:
    """Norm and alpha_x quadratures both ways, plus nodewise spinor identities."""
    m, w, E = amps.m, amps.weight, amps.energy
    A = np.stack([amps.a1, amps.a2], axis=1)
    out = {"m": m, "py": amps.py, "pz": amps.pz, "nodes": len(amps.px)}
    closed_w = np.abs(amps.a1) ** 2 + np.abs(amps.a2) ** 2

    report = {}
    for sector, neg in (("positive", False), ("negative", True)):
        u = spinors(amps.px, amps.py, amps.pz, m, negative=neg)
        gram = np.einsum("nis,njs->nij", u.conj(), u)
        ax = np.einsum("nis,st,njt->nij", u.conj(), ALPHA_X, u)
        norm_spinor = _quad(np.einsum("ni,nij,nj->n", A.conj(), gram, A), w)
        norm_closed = _quad(E / m * closed_w, w)
        ax_spinor = _quad(np.einsum("ni,nij,nj->n", A.conj(), ax, A), w)
        ax_closed = _quad(amps.px / m * closed_w, w)
        cross = _quad(A[:, 0].conj() * A[:, 1] * ax[:, 0, 1] + A[:, 1].conj() * A[:, 0] * ax[:, 1, 0], w)
        report[sector] = {
            "normalization_error": float(np.max(np.abs(gram - (E / m)[:, None, None] * np.eye(2)))),
            "norm_spinor": norm_spinor.real,
            "norm_closed": norm_closed.real,
            "norm_difference": abs(norm_spinor - norm_closed),
            "alpha_x_spinor": ax_spinor.real,
            "alpha_x_closed": ax_closed.real,
            "alpha_x_difference": abs(ax_spinor - ax_closed),
            "alpha_x_cross_terms": abs(cross),
        }
    # a positive-energy u(p) is orthogonal to a negative-energy spinor at -p
    up = spinors(amps.px, amps.py, amps.pz, m)
    vm = spinors(-amps.px, -amps.py, -amps.pz, m, negative=True)
    report["sector_overlap"] = float(np.max(np.abs(np.einsum("nis,njs->nij", up.conj(), vm))))

    pos = report["positive"]
    velocity = pos["alpha_x_closed"] / pos["norm_closed"]
    p_mean = _quad(amps.px * E / m * closed_w, w).real / pos["norm_closed"]
    out.update(report)
    out["velocity"] = velocity
    out["p_over_m"] = p_mean / m
    out["nonrelativistic_gap"] = abs(velocity - p_mean / m) / abs(p_mean / m) if p_mean else float("inf")
    return out


# ---------------------------------------------------------------------------
# 1D evolution

@dataclass
class DiracGrid:
    n: int = 1024
    length: float = 40.0

    @property
    def dx(self):
        return self.length / self.n

    @property
    def x(self):
        return (np.arange(self.n) - self.n // 2) * self.dx

    @property
    def k(self):
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def central_difference(self):
        e = np.ones(self.n)
        D = sp.diags([e[:-1], -e[:-1]], [1, -1], format="lil")
        D[0, -1] = -1
        D[-1, 0] = 1
        return D.tocsr() / (2 * self.dx)


@dataclass(frozen=True)
class ScalarPotential:
    kind: str = "zero"
    params: tuple = ()

    def value(self, x):
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "linear":
            return self.params[0] * x
        if self.kind == "gaussian":
            a, s = self.params[:2]
            return a * np.exp(-x * x / (2 * s * s))
        raise ValueError(f"unknown scalar potential {self.kind!r}")

    def derivative(self, x):
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "linear":
            return np.full_like(x, self.params[0])
        if self.kind == "gaussian":
            a, s = self.params[:2]
            return -a * x / (s * s) * np.exp(-x * x / (2 * s * s))
        raise ValueError(f"unknown scalar potential {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "ScalarPotential":
        """``zero``, ``linear:0.1`` or ``gaussian:1.0,1.0``."""
        name, _, rest = text.partition(":")
        params = tuple(float(v) for v in rest.split(",") if v.strip()) if rest else ()
        pot = cls(name.strip(), params)
        try:
            pot.value(np.zeros(1))
        except (ValueError, IndexError) as exc:
            raise ValueError(f"bad scalar potential {text!r}") from exc
        return pot


def hamiltonian(grid: DiracGrid, phi: np.ndarray, m: float, e: float = 1.0):
    """alpha_x p + beta m - e phi with p = -i d/dx by central differences."""
    p = -1j * grid.central_difference()
    eye = sp.identity(grid.n, format="csr")
    H = sp.kron(p, ALPHA_X) + sp.kron(eye, m * BETA) - e * sp.kron(sp.diags(phi), np.eye(4))
    return H.tocsc()


def positive_energy_packet(grid: DiracGrid, m=1.0, x0=0.0, p0=0.0, sigma=1.0):
    """Gaussian packet projected on the upper band of the discrete free Hamiltonian."""
    k = grid.k
    ph = np.sin(k * grid.dx) / grid.dx
    u = spinors(ph, 0.0, 0.0, m)[:, 0, :]
    u /= np.linalg.norm(u, axis=1)[:, None]
    amp = np.exp(-(k - p0) ** 2 * sigma ** 2 - 1j * k * (x0 - grid.x[0]))
    psi = np.fft.ifft(amp[:, None] * u, axis=0)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    return psi


@dataclass
class DiracTrajectory:
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    alpha_x: np.ndarray
    force: np.ndarray       # -<d(-e phi)/dx>
    norm: np.ndarray


def _dirac_observables(psi, grid, dphi, e):
    rho = np.sum(np.abs(psi) ** 2, axis=1) * grid.dx
    hat = np.fft.fft(psi, axis=0)
    wk = np.sum(np.abs(hat) ** 2, axis=1)
    ax = np.einsum("js,st,jt->", psi.conj(), ALPHA_X, psi).real * grid.dx
    return (float(np.sum(grid.x * rho)), float(np.sum(grid.k * wk) / np.sum(wk)), float(ax),
            float(e * np.sum(dphi * rho)), float(np.sum(rho)))


def evolve_dirac(psi0, grid: DiracGrid, potential: ScalarPotential, dt, steps, m=1.0, e=1.0):
    phi = potential.value(grid.x)
    dphi = potential.derivative(grid.x)
    H = hamiltonian(grid, phi, m, e)
    eye = sp.identity(H.shape[0], format="csc")
    lu = splu((eye + 0.5j * dt * H).tocsc())
    rhs = (eye - 0.5j * dt * H).tocsr()
    v = np.asarray(psi0, dtype=complex).reshape(-1).copy()
    out = np.empty((steps + 1, 5))
    out[0] = _dirac_observables(v.reshape(grid.n, 4), grid, dphi, e)
    for n in range(1, steps + 1):
        v = lu.solve(rhs @ v)
        out[n] = _dirac_observables(v.reshape(grid.n, 4), grid, dphi, e)
        if not np.isfinite(out[n]).all():
            raise FloatingPointError(f"Dirac integrator diverged at step {n}")
    t = dt * np.arange(steps + 1)
    return DiracTrajectory(t, out[:, 0], out[:, 1], out[:, 2], out[:, 3], out[:, 4])


def force_residuals(traj: DiracTrajectory):
    """r_p = d<p>/dt - (-<d(-e phi)/dx>) and r_x = d<x>/dt - <alpha_x>."""
    dt = traj.t[1] - traj.t[0]
    r_p = (traj.p[2:] - traj.p[:-2]) / (2 * dt) - traj.force[1:-1]
    r_x = (traj.x[2:] - traj.x[:-2]) / (2 * dt) - traj.alpha_x[1:-1]
    return r_p, r_x


def dirac_force_check(potential="gaussian:1.0,1.0", n=1024, length=40.0, dt=5e-3, steps=400,
                      m=1.0, e=1.0, x0=-1.0, p0=0.5, sigma=1.0, halving=True):
    """Run at dt (and dt/2) and summarize the force-law residuals."""
    grid = DiracGrid(n, length)
    pot = ScalarPotential.parse(potential) if isinstance(potential, str) else potential
    psi0 = positive_energy_packet(grid, m, x0, p0, sigma)
    tr = evolve_dirac(psi0, grid, pot, dt, steps, m, e)
    r_p, r_x = force_residuals(tr)
    summary = {
        "max_residuals": {"r_p": float(np.max(np.abs(r_p))), "r_x": float(np.max(np.abs(r_x)))},
        "norm_drift": float(np.max(np.abs(tr.norm - tr.norm[0]))),
        "momentum_drift": float(np.max(np.abs(tr.p - tr.p[0]))),
    }
    if halving:
        tr2 = evolve_dirac(psi0, grid, pot, dt / 2, 2 * steps, m, e)
        r_p2, r_x2 = force_residuals(tr2)
        mp2 = float(np.max(np.abs(r_p2)))
        summary["half_dt_max_residuals"] = {"r_p": mp2, "r_x": float(np.max(np.abs(r_x2)))}
        summary["convergence_ratios"] = {
            "r_p": summary["max_residuals"]["r_p"] / mp2 if mp2 else float("inf")}
    return tr, (r_p, r_x), summary
