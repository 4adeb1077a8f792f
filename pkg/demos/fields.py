"""Export the S^2 diagnostic fields as CSV grids in Hammer coordinates.

Writes sqrt(n)|z(s)| for vMF(kappa = 1) and the null correlation rho(s, t)
for lambda in {0.1, 1, 10}. Any plotting tool can draw the files, for
example a scatter of hammer_x, hammer_y coloured by value.

    python3 demos/fields.py [outdir]
"""

import sys
from pathlib import Path

import numpy as np

from steinunif.fields import export_field, field_grid

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).with_name("fields_out")
out.mkdir(exist_ok=True)
t_ref = np.array([0.0, 0.0, 1.0])
for lam in (0.1, 1.0, 10.0):
    z = field_grid("abs_z", lam, kappa=1.0, n=100)
    rho = field_grid("rho_null", lam, t_ref=t_ref)
    export_field(z, out / f"abs_z_lambda{lam:g}.csv")
    export_field(rho, out / f"rho_null_lambda{lam:g}.csv")
    u = rho.grid.points @ t_ref
    print(f"lambda={lam:>4g}: max sqrt(n)|z| = {z.values.max():.4g}; rho changes sign at s't = {u[rho.values <= 0].max():.3f}")
print("wrote", out)
