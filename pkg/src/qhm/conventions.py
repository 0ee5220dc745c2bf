"""Single source for tolerances and normalisation constants used in reports."""

import math

# name -> (value, meaning)
TOLERANCES = {
    "structure_constant": (1e-9, "grid residual of phi_a * phi_b - e(lambda) phi_{a+b}"),
    "homomorphism": (1e-9, "relative residual of pi(a)pi(b) - pi(a*b) on a grid state"),
    "algebra_identity": (1e-12, "associativity, involution, trace, GNS orthonormality"),
    "weyl_slope": (0.15, "allowed deviation of the counting-function slope from 3"),
    "relative_bound": (1e-8, "slack on norm(S (T + i)^{-1}) <= 1/alpha"),
    "dixmier_offdiag": (0.1, "absolute ratio for an observable with no diagonal part"),
    "dixmier_half": (0.05, "deviation of the diag(1, 0) ratio from 1/2"),
    "junk": (1e-10, "sigma-part of pi(d omega) for omega in J_1"),
    "scalar_curvature": (1e-10, "coefficient residual of r - (-2 f'^2 g'^2)"),
    "pointwise": (1e-9, "pointwise residual of the scalar curvature"),
    "pattern": (1e-12, "entry comparison in torsion/unitarity pattern checks"),
    "interpolation": (1e-8, "slack on the p = 1/2 interpolation bound"),
    "u2_commutator": (0.0, "[U_2, E] must vanish exactly"),
    "closed_form_spectrum": (1e-9, "t = 0 eigenvalues against 2 pi sqrt(m^2 + n^2 + c^2 alpha^2 k^2)"),
}

# derivations carry a factor 2 pi i per degree relative to unnormalised statements
DERIVATION_FACTOR = 2j * math.pi

# spin matrices realised as (sigma_x, sigma_y, -sigma_z), so sigma_1 sigma_2 = -i sigma_3
SIGMA_PRODUCT_12 = -1j


def tol(name: str) -> float:
    return TOLERANCES[name][0]


def table_markdown() -> str:
    lines = ["| name | value | meaning |", "|---|---|---|"]
    for name, (value, meaning) in TOLERANCES.items():
        lines.append(f"| {name} | {value:g} | {meaning} |")
    return "\n".join(lines)
