"""Prebaked figure scenarios.

Values the source experiments leave open (initial inputs, frequency sets, Hessian-estimate
start, dither amplitude of the plant example, step sizes) are filled in here; each choice is
listed in the scenario's ``description``.
"""

from __future__ import annotations

FIGURE_IDS = ("fig-scalar-kappa", "fig-scalar-prescribed", "fig-multivar", "fig-newton",
              "fig-newton-batch", "fig-plant")

_SCALAR_KAPPA = """
[scenario]
name = fig-scalar-kappa-{tag}
description = scalar quadratic, k designed so the bound equals the listed value for this curvature
[cost]
family = scalar-quadratic
curvature = {kappa}
z_opt = 1
[controller]
type = ftges
q1 = 3
q2 = 1.5
target_tstar = {tstar}
kappa_pl = {kappa}
a = 0.1
eps1 = 0.02
eps2 = 0.1
[sim]
dt = 1e-4
horizon = {horizon}
stride = 10
u0 = 0
[acceptance]
nu = 0.003
channel = u
"""

_SCALAR_PRESCRIBED = """
[scenario]
name = fig-scalar-prescribed-{tag}
description = scalar quadratic, k designed for a bound of 1 at this curvature
[cost]
family = scalar-quadratic
curvature = {kappa}
z_opt = 1
[controller]
type = ftges
q1 = 3
q2 = 1.5
target_tstar = 1
kappa_pl = {kappa}
a = 0.1
eps1 = 0.001
eps2 = 0.05
[sim]
dt = 1e-5
horizon = 1.5
stride = 100
u0 = 0
[acceptance]
nu = 0.005
channel = u
"""

_MULTIVAR = """
[scenario]
name = fig-multivar
description = diagonal quadratic Q = diag(2, 4) with minimizer (1, 2); smallest eigenvalue 2 keeps the bound below 1 at k = 2.1
[cost]
family = quadratic-form
H = 2, 0; 0, 4
b = -2, -8
c = 0
[controller]
type = ftges
q1 = 3
q2 = 1.5
k = 2.1
kappa_pl = auto
a = 0.1
eps1 = 0.001
eps2 = 0.05
[sim]
dt = 5e-6
horizon = 1.5
stride = 200
u0 = 0, 0
[acceptance]
nu = 0.05
channel = u
bound = 1
margin = 1.1
"""

_NEWTON = """
[scenario]
name = fig-newton
description = Newton controller on the quadratic H = [[4, 1], [1, 2]], started at u = (0, 0) with xi1(0) = 0.01 I
[cost]
family = quadratic-form
H = 4, 1; 1, 2
b = -4, -6
c = 11
[controller]
type = ftnes
q1 = 3
q2 = 1.5
k = 0.025
a = 0.1
eps1 = 0.1
eps2 = 10
eta = 50
xi1_0 = 0.01
[sim]
dt = 2.5e-4
horizon = 150
stride = 200
u0 = 0, 0
[acceptance]
nu = 0.05
channel = u
margin = 1.1
xi1_tol = 0.05
"""

_NEWTON_BATCH = """
[scenario]
name = fig-newton-batch
description = 50 Newton runs from [-10, 10]^2 with the bound set to 100; eps1 = 0.003 and xi1(0) = 0.1 I
[cost]
family = quadratic-form
H = 4, 1; 1, 2
b = -4, -6
c = 11
[controller]
type = ftnes
q1 = 3
q2 = 1.5
target_tstar = 100
a = 0.1
eps1 = 0.003
eps2 = 10
eta = 50
xi1_0 = 0.1
[sim]
dt = 1.5e-5
horizon = 115
stride = 2000
seed = 2021
box = -10, 10; -10, 10
batch = 50
[acceptance]
nu = 0.05
channel = u
margin = 1.1
min_fraction = 0.95
"""

_PLANT = """
[scenario]
name = fig-plant
description = gradient controller on the two-state plant; dither gains (1/20, 3/40) keep the dither inside the plant bandwidth, a = 0.02, u(0) = x(0) = 0
[cost]
family = plant
[plant]
builtin = reference
x0 = 0, 0
[controller]
type = ftges
q1 = 3
q2 = 1.5
k = 0.2
kappa_pl = auto
a = 0.02
eps1 = 0.0015
eps2 = 0.05
eps0 = 0.1
freqs = 1/20, 3/40
[sim]
dt = 1e-3
horizon = 240
stride = 50
u0 = 0, 0
[acceptance]
nu = 0.05
channel = z
margin = 1.2
"""

_KAPPAS = (("0.25", "0.25", 8.25), ("1", "1", 2.06), ("2", "2", 1.03))


def figure_configs(figure_id: str) -> list[str]:
    """Configuration texts for a figure id (several for the per-curvature figures)."""
    if figure_id == "fig-scalar-kappa":
        return [_SCALAR_KAPPA.format(tag=tag, kappa=kap, tstar=ts, horizon=1.5 * ts) for tag, kap, ts in _KAPPAS]
    if figure_id == "fig-scalar-prescribed":
        return [_SCALAR_PRESCRIBED.format(tag=tag, kappa=kap) for tag, kap, _ in _KAPPAS]
    table = {"fig-multivar": _MULTIVAR, "fig-newton": _NEWTON, "fig-newton-batch": _NEWTON_BATCH,
             "fig-plant": _PLANT}
    if figure_id not in table:
        raise KeyError(f"unknown figure id {figure_id!r}; choose from {', '.join(FIGURE_IDS)}")
    return [table[figure_id]]
