"""Wave packets: Schroedinger expectation values and the Dirac force law."""
import numpy as np

from gev.qm import MomentumAmplitudes, dirac_force_check, dirac_wavepacket_check, run_experiment

print("Schroedinger, harmonic coherent state over one period")
tr, (rx, rp), s = run_experiment("harmonic:1.0", 1024, 40.0, 1e-3, 6283, x0=1.0)
print(f"  max |<x> - cos t|      {np.max(np.abs(tr.x - np.cos(tr.t))):.2e}")
print(f"  max |r_x|, max |r_p|   {s['max_residuals']['r_x']:.2e}, {s['max_residuals']['r_p']:.2e}")
print(f"  dt-halving ratios      r_x {s['convergence_ratios']['r_x']:.2f}, "
      f"r_p {s['convergence_ratios']['r_p']:.2f}")

print("\nquartic well")
_, _, s = run_experiment("quartic:0.1", 2048, 40.0, 5e-4, 4000, x0=1.0, sigma=1.0)
print(f"  max |r_p| {s['max_residuals']['r_p']:.2e}, norm drift {s['norm_drift']:.1e}")

print("\nDirac packet quadratures")
for m in (1.0, 10.0, 100.0):
    r = dirac_wavepacket_check(MomentumAmplitudes.gaussian(m=m, width=0.2))
    print(f"  m={m:>5}: <alpha_x>/<1> = {r['velocity']:.6f}, <p_x>/m = {r['p_over_m']:.6f}")

print("\nDirac force law")
for pot, dt, steps in (("linear:0.1", 2.5e-4, 2000), ("gaussian:1.0,1.0", 5e-3, 400)):
    tr, _, s = dirac_force_check(pot, 1024, 40.0, dt, steps, x0=0.0 if pot.startswith("l") else -1.0,
                                 p0=0.0 if pot.startswith("l") else 0.5)
    print(f"  {pot:<17} max |r_p| {s['max_residuals']['r_p']:.2e}  "
          f"ratio {s['convergence_ratios']['r_p']:.2f}  <p>(T) {tr.p[-1]:.4f}")
