"""
Physics-only flux
=================

Solve the implicit flux equation at one operating point and look at how
concentration polarization eats into the ideal driving force.
"""

from fohybrid.physics import PhysicsConfig, solve_physical_flux
from fohybrid.point import OperatingPoint

# 10 mM feed against 1 M draw, typical support layer and channel
p = OperatingPoint(cf_in=0.01, cd_in=1.0, uf_in=0.15, ud_in=0.15, A=2e-12,
                   eps_psl=0.6, tau=2.0, t_psl=100e-6, L_x=0.1, t_c=2e-3)
b = solve_physical_flux(p)

ideal = p.A * (b.pi_d_bulk - b.pi_f_bulk)
print(f"ideal flux      {ideal * 3.6e6:8.2f} LMH")
print(f"solved flux     {b.jw * 3.6e6:8.2f} LMH  ({b.iterations} Brent iterations, |F| = {b.residual:.1e})")
print(f"S = {b.S * 1e6:.0f} um, feed-side k = {b.k_feed:.2e} m/s, Re = {b.hydro.Re:.0f}")

# the osmotic pressures from bulk draw to bulk feed
for name, v in [("draw bulk", b.pi_d_bulk), ("draw at active layer", b.pi_d_interface),
                ("feed at membrane", b.pi_f_membrane), ("feed bulk", b.pi_f_bulk)]:
    print(f"  {name:22s} {v / 1e5:8.2f} bar")

# a thicker support layer means more internal polarization
for t in (50e-6, 100e-6, 200e-6):
    print(f"t_psl = {t * 1e6:4.0f} um -> {solve_physical_flux(p.replace(t_psl=t)).jw * 3.6e6:6.2f} LMH")

# salt leakage matters too
for B in (0.0, 1e-7, 5e-7):
    print(f"B = {B:.0e} m/s -> {solve_physical_flux(p, PhysicsConfig(B=B)).jw * 3.6e6:6.2f} LMH")
