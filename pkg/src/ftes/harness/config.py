"""Scenario configuration: a sectioned key = value text format.

Sections and keys (all optional unless noted)::

    [scenario]   name
    [cost]       family = scalar-quadratic | quadratic-form | plant   (required)
                 curvature, z_opt                  (scalar-quadratic)
                 H = "4, 1; 1, 2", b = "-4, -6", c (quadratic-form)
    [plant]      builtin = reference | A, B, P, r, c, box = "lo, hi; lo, hi", x0
    [controller] type = ftges | ftnes | classic-gradient | classic-newton |
                        reduced-gradient | reduced-newton  (required)
                 q1, q2, k | target_tstar, kappa_pl (number or "auto"), a, eps1, eps2, eps0,
                 eta, freqs = "1, 3/2", xi0, xi1_0 (scalar c for c*I, or a matrix), washout
    [sim]        dt, horizon, stride, seed, u0 or box, batch, policy = warn | halt
    [acceptance] z_star, nu, channel = u | z, bound, margin, min_fraction, xi1_tol

Matrices are written row by row with ``;`` between rows and ``,`` between entries.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..bounds import InadmissibleParameters, ShapeParams, gain_for_tstar_gradient, gain_for_tstar_newton
from ..bounds import t_star_gradient, t_star_newton
from ..costmodel import CostSpec, LinearPlant, PlantComposed, QuadraticForm, ScalarQuadratic, reference_plant
from ..dither import DitherParams, FrequencySet, default_frequencies, is_nonresonant
from ..flows import FtgesParams

CONTROLLER_TYPES = ("ftges", "ftnes", "classic-gradient", "classic-newton", "reduced-gradient", "reduced-newton")
NEWTON_TYPES = ("ftnes", "classic-newton", "reduced-newton")

_KNOWN = {
    "scenario": {"name", "description"},
    "cost": {"family", "curvature", "z_opt", "h", "b", "c"},
    "plant": {"builtin", "a", "b", "p", "r", "c", "box", "x0"},
    "controller": {"type", "q1", "q2", "k", "target_tstar", "kappa_pl", "a", "eps1", "eps2", "eps0",
                   "eta", "freqs", "xi0", "xi1_0", "washout"},
    "sim": {"dt", "horizon", "stride", "seed", "u0", "box", "batch", "policy"},
    "acceptance": {"z_star", "nu", "channel", "bound", "margin", "min_fraction", "xi1_tol"},
}


class ConfigError(ValueError):
    """Invalid or unreadable scenario configuration; the message names the field."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


def parse_vector(text: str) -> np.ndarray:
    return np.array([float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()])


def parse_matrix(text: str) -> np.ndarray:
    rows = [r for r in text.split(";") if r.strip()]
    data = [[float(tok) for tok in r.split(",") if tok.strip()] for r in rows]
    if len({len(r) for r in data}) != 1:
        raise ValueError("matrix rows have different lengths")
    return np.array(data)


def parse_box(text: str) -> np.ndarray:
    box = parse_matrix(text)
    if box.shape[1] != 2 or np.any(box[:, 0] > box[:, 1]):
        raise ValueError("box must be 'lo, hi; lo, hi; ...' with lo <= hi")
    return box


def format_value(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, np.ndarray):
        if v.ndim == 2:
            return "; ".join(", ".join(f"{x:.17g}" for x in row) for row in v)
        return ", ".join(f"{x:.17g}" for x in v)
    if isinstance(v, (list, tuple)):
        return ", ".join(format_value(x) for x in v)
    return str(v)


@dataclass
class Acceptance:
    z_star: np.ndarray
    nu: float
    channel: str = "u"
    deadline: float | None = None
    min_fraction: float = 1.0
    xi1_tol: float | None = None


@dataclass
class ScenarioConfig:
    """Fully resolved scenario. ``resolved`` lists every parameter as it is echoed in metadata."""

    name: str
    controller_type: str
    cost: CostSpec
    plant: LinearPlant | None
    shape: ShapeParams
    params: FtgesParams | None
    dt: float
    horizon: float
    stride: int
    seed: int
    batch: int
    policy: str
    u0: np.ndarray | None
    box: np.ndarray | None
    x0: np.ndarray | None
    xi0: np.ndarray
    xi1_0: np.ndarray | None
    bound: float | None
    acceptance: Acceptance | None
    resolved: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.cost.n

    @property
    def newton(self) -> bool:
        return self.controller_type in NEWTON_TYPES

    @property
    def reduced(self) -> bool:
        return self.controller_type.startswith("reduced")


def _get(sec, key, conv=float, default=None, section="", required=False):
    if sec is None or key not in sec:
        if required:
            raise ConfigError(f"{section}.{key}", "missing required value")
        return default
    raw = sec[key]
    try:
        return conv(raw)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ConfigError(f"{section}.{key}", f"cannot parse {raw!r} ({exc})") from None


def read_config(source) -> configparser.ConfigParser:
    """Read from a path or from text (anything containing a newline or '[')."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        if isinstance(source, Path) or ("\n" not in str(source) and "[" not in str(source)):
            path = Path(source)
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh, source=str(path))
        else:
            cp.read_string(str(source))
    except (OSError, configparser.Error) as exc:
        raise ConfigError("config", f"unreadable configuration ({exc})") from None
    for sec in cp.sections():
        if sec not in _KNOWN:
            raise ConfigError(sec, "unknown section")
        for key in cp[sec]:
            if key not in _KNOWN[sec]:
                raise ConfigError(f"{sec}.{key}", "unknown key")
    return cp


def _build_plant(sec) -> LinearPlant:
    builtin = sec.get("builtin", "").strip() if sec is not None else ""
    if builtin:
        if builtin != "reference":
            raise ConfigError("plant.builtin", f"unknown builtin plant {builtin!r}")
        plant = reference_plant()
        box = _get(sec, "box", parse_box, None, "plant")
        if box is not None:
            plant = LinearPlant(plant.A, plant.B, plant.P, plant.r, plant.c, tuple(map(tuple, box)))
        return plant
    try:
        A = _get(sec, "a", parse_matrix, section="plant", required=True)
        B = _get(sec, "b", parse_matrix, section="plant", required=True)
        P = _get(sec, "p", parse_matrix, section="plant", required=True)
        r = _get(sec, "r", parse_vector, section="plant", required=True)
        c = _get(sec, "c", float, 0.0, "plant")
        box = _get(sec, "box", parse_box, None, "plant")
        return LinearPlant(A, B, P, r, c, tuple(map(tuple, box)) if box is not None else None)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("plant", str(exc)) from None


def _build_cost(cp) -> tuple[CostSpec, LinearPlant | None]:
    if "cost" not in cp:
        raise ConfigError("cost", "missing section")
    sec = cp["cost"]
    family = _get(sec, "family", str, section="cost", required=True).strip()
    try:
        if family == "scalar-quadratic":
            return ScalarQuadratic(_get(sec, "curvature", section="cost", required=True),
                                   _get(sec, "z_opt", float, 0.0, "cost")), None
        if family == "quadratic-form":
            H = _get(sec, "h", parse_matrix, section="cost", required=True)
            b = _get(sec, "b", parse_vector, section="cost", required=True)
            return QuadraticForm(H, b, _get(sec, "c", float, 0.0, "cost")), None
        if family == "plant":
            plant = _build_plant(cp["plant"] if "plant" in cp else None)
            return PlantComposed(plant), plant
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("cost", str(exc)) from None
    raise ConfigError("cost.family", f"unknown family {family!r}")


def build_config(source) -> ScenarioConfig:
    """Parse and validate a configuration; every error names the offending field."""
    cp = read_config(source) if not isinstance(source, configparser.ConfigParser) else source
    name = cp.get("scenario", "name", fallback="scenario").strip()
    cost, plant = _build_cost(cp)
    n = cost.n
    if "controller" not in cp:
        raise ConfigError("controller", "missing section")
    ctl = cp["controller"]
    ctype = _get(ctl, "type", str, section="controller", required=True).strip()
    if ctype not in CONTROLLER_TYPES:
        raise ConfigError("controller.type", f"must be one of {', '.join(CONTROLLER_TYPES)}")
    newton = ctype in NEWTON_TYPES
    classic = ctype.startswith("classic")
    if plant is not None and ctype.startswith("reduced"):
        raise ConfigError("controller.type", "reduced flows take a static cost, not a plant")

    res: dict = {"scenario.name": name, "controller.type": ctype, "cost": repr(cost), "n": n}
    q1 = _get(ctl, "q1", float, 3.0, "controller")
    q2 = _get(ctl, "q2", float, 1.5, "controller")
    k = _get(ctl, "k", float, None, "controller")
    target = _get(ctl, "target_tstar", float, None, "controller")
    if (k is None) == (target is None) and not (k is None and classic):
        raise ConfigError("controller.k", "give exactly one of k and target_tstar")
    kappa_raw = ctl.get("kappa_pl", "").strip()
    if kappa_raw == "auto":
        kappa_pl = float(np.linalg.eigvalsh(cost.hessian()).min())
    elif kappa_raw:
        kappa_pl = _get(ctl, "kappa_pl", float, None, "controller")
    else:
        kappa_pl = None
    eps0 = _get(ctl, "eps0", float, 1.0, "controller")

    bound = None
    try:
        if classic:
            if target is not None:
                raise ConfigError("controller.target_tstar", "classic controllers have no fixed-time bound")
            shape = ShapeParams.classic(k if k is not None else 0.5)
        else:
            if target is not None:
                if newton:
                    k = gain_for_tstar_newton(target, q1, q2)
                else:
                    if kappa_pl is None:
                        raise ConfigError("controller.kappa_pl", "needed to design k from target_tstar")
                    k = gain_for_tstar_gradient(target, q1, q2, kappa_pl)
            shape = ShapeParams.from_q(q1, q2, k)
            if newton:
                bound = t_star_newton(k, q1, q2)
            elif kappa_pl is not None:
                bound = t_star_gradient(k, q1, q2, kappa_pl)
    except InadmissibleParameters as exc:
        raise ConfigError("controller", str(exc)) from None
    res.update({"controller.q1": shape.q1, "controller.q2": shape.q2, "controller.alpha1": shape.alpha1,
                "controller.alpha2": shape.alpha2, "controller.k": shape.k})
    if target is not None:
        res["controller.target_tstar"] = target
    if kappa_pl is not None:
        res["controller.kappa_pl"] = kappa_pl
    if bound is not None:
        res["bound.tstar"] = bound
        res["bound.tstar_t_scale"] = bound / eps0

    params = None
    xi1_0 = None
    xi0 = np.zeros(n)
    if not ctype.startswith("reduced"):
        a = _get(ctl, "a", float, 0.1, "controller")
        eps1 = _get(ctl, "eps1", float, None, "controller", required=True)
        eps2 = _get(ctl, "eps2", float, None, "controller", required=True)
        eta = _get(ctl, "eta", float, 50.0, "controller")
        washout = _get(ctl, "washout", float, 0.0, "controller")
        freqs = _get(ctl, "freqs", FrequencySet.parse, None, "controller")
        if freqs is None:
            freqs = default_frequencies(n)
        if len(freqs) != n:
            raise ConfigError("controller.freqs", f"need {n} frequencies, got {len(freqs)}")
        if not is_nonresonant(freqs):
            raise ConfigError("controller.freqs", "frequency set has a resonance of order at most 4")
        try:
            params = FtgesParams(shape, DitherParams(a, eps1), freqs, eps2, eta, eps0, washout)
        except ValueError as exc:
            raise ConfigError("controller", str(exc)) from None
        xi0 = _get(ctl, "xi0", parse_vector, np.zeros(n), "controller")
        if xi0.shape != (n,):
            raise ConfigError("controller.xi0", f"need {n} entries")
        if newton:
            raw = ctl.get("xi1_0", "1").strip()
            try:
                xi1_0 = float(raw) * np.eye(n) if (";" not in raw and "," not in raw) else parse_matrix(raw)
            except ValueError as exc:
                raise ConfigError("controller.xi1_0", str(exc)) from None
            if xi1_0.shape != (n, n):
                raise ConfigError("controller.xi1_0", f"need a scalar or an {n}x{n} matrix")
            res["controller.xi1_0"] = xi1_0
        res.update({"controller.a": a, "controller.eps1": eps1, "controller.eps2": eps2,
                    "controller.eps0": eps0, "controller.eta": eta, "controller.freqs": str(freqs),
                    "controller.xi0": xi0})
        if washout > 0:
            res["controller.washout"] = washout

    sim = cp["sim"] if "sim" in cp else None
    dt = _get(sim, "dt", float, None, "sim", required=True)
    horizon = _get(sim, "horizon", float, None, "sim", required=True)
    stride = _get(sim, "stride", int, 10, "sim")
    seed = _get(sim, "seed", int, 0, "sim")
    nbatch = _get(sim, "batch", int, 1, "sim")
    policy = _get(sim, "policy", str, "warn", "sim").strip()
    u0 = _get(sim, "u0", parse_vector, None, "sim")
    box = _get(sim, "box", parse_box, None, "sim")
    if not dt > 0:
        raise ConfigError("sim.dt", "must be positive")
    if not horizon > 0:
        raise ConfigError("sim.horizon", "must be positive")
    if stride < 1:
        raise ConfigError("sim.stride", "must be at least 1")
    if nbatch < 1:
        raise ConfigError("sim.batch", "batch count must be at least 1")
    if policy not in ("warn", "halt"):
        raise ConfigError("sim.policy", "must be warn or halt")
    if u0 is not None and box is not None:
        raise ConfigError("sim.u0", "give either u0 or box, not both")
    if u0 is None and box is None:
        u0 = np.zeros(n)
    if u0 is not None and u0.shape != (n,):
        raise ConfigError("sim.u0", f"need {n} entries")
    if box is not None and box.shape[0] != n:
        raise ConfigError("sim.box", f"need {n} rows")
    if nbatch > 1 and box is None:
        raise ConfigError("sim.box", "a batch needs a sampling box")
    x0 = None
    if plant is not None:
        x0 = _get(cp["plant"], "x0", parse_vector, np.zeros(plant.p), "plant")
        if x0.shape != (plant.p,):
            raise ConfigError("plant.x0", f"need {plant.p} entries")
        res["plant.x0"] = x0
        res["plant.A"], res["plant.B"] = plant.A, plant.B
        res["plant.P"], res["plant.r"], res["plant.c"] = plant.P, plant.r, plant.c
    res.update({"sim.dt": dt, "sim.horizon": horizon, "sim.stride": stride, "sim.seed": seed,
                "sim.batch": nbatch, "sim.policy": policy})
    if u0 is not None:
        res["sim.u0"] = u0
    if box is not None:
        res["sim.box"] = box

    acc = None
    if "acceptance" in cp:
        sec = cp["acceptance"]
        z_star = _get(sec, "z_star", parse_vector, np.array(cost.z_star), "acceptance")
        if z_star.shape != (n,):
            raise ConfigError("acceptance.z_star", f"need {n} entries")
        nu = _get(sec, "nu", float, None, "acceptance", required=True)
        if not nu > 0:
            raise ConfigError("acceptance.nu", "must be positive")
        channel = _get(sec, "channel", str, "u", "acceptance").strip()
        if channel not in ("u", "z"):
            raise ConfigError("acceptance.channel", "must be u or z")
        deadline = _get(sec, "bound", float, None, "acceptance")
        margin = _get(sec, "margin", float, 1.0, "acceptance")
        if deadline is None:
            if bound is None:
                raise ConfigError("acceptance.bound", "no fixed-time bound is available; give one")
            deadline = bound
        # bounds hold in the slow time scale
        deadline = margin * deadline / eps0
        acc = Acceptance(z_star, nu, channel, deadline,
                         _get(sec, "min_fraction", float, 1.0, "acceptance"),
                         _get(sec, "xi1_tol", float, None, "acceptance"))
        res.update({"acceptance.z_star": z_star, "acceptance.nu": nu, "acceptance.channel": channel,
                    "acceptance.deadline": deadline, "acceptance.margin": margin,
                    "acceptance.min_fraction": acc.min_fraction})
        if acc.xi1_tol is not None:
            res["acceptance.xi1_tol"] = acc.xi1_tol
    if math.isfinite(cost.phi_star):
        res["cost.z_star"] = np.array(cost.z_star)
        res["cost.phi_star"] = cost.phi_star

    return ScenarioConfig(name, ctype, cost, plant, shape, params, dt, horizon, stride, seed, nbatch,
                          policy, u0, box, x0, xi0, xi1_0, bound, acc, res)
