"""Soil-moisture inversion of dual-polarization brightness temperatures.

Three inversion families share the same forward model:

  * SCA: one polarization, canopy opacity fixed from the optical-index
    chain, cost F(sm) = (tb_sim - tb_obs)^2;
  * DCA: both polarizations, (sm, tau) retrieved jointly,
    F(sm, tau) = (tbv_sim - tbv_obs)^2 + (tbh_sim - tbh_obs)^2;
  * RDCA: DCA plus a quadratic pull of the retrieved opacity toward the
    optical estimate, + lambda^2 * (tau - tau_sca)^2 with lambda = 20.

Minimization is deterministic: a coarse grid seeds golden-section
refinement (1-d) or alternating per-coordinate golden sections with a
pattern move along each sweep's displacement (2-d), over sm in
[0.01, 0.70] and tau in [0, 3].

Six named presets cover the operational algorithm configurations (SCAV,
SCAH, RDCA, DCA0, DCA1, DCA2); they ship as key-value files under
``lbandsm/presets`` and resolve to concrete parameter sets per land
cover.
"""

import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError
from .kvconfig import parse_kv_text, read_kv_file
from .radiative import (DielectricModel, L_BAND_GHZ, canopy_transmissivity,
                        emissivity_evaluator, simulate_tb,
                        soil_emissivity_pair, tau_omega_tb)

SM_BOUNDS = (0.01, 0.70)
TAU_BOUNDS = (0.0, 3.0)
SM_TOL = 1e-5
TAU_TOL = 1e-4
# Line searches run well below the reported tolerances: near the optimum
# the sweep displacements must stay meaningful against line-search noise
# or the alternating descent stalls on the correlated (sm, tau) valley.
_LINE_REFINE = 1e-3
SEED_GRID_N = 64          # coarse-grid points per dimension
MAX_SWEEPS = 80           # alternating-coordinate passes before giving up
RDCA_LAMBDA = 20.0
CONSTANT_T_E = 292.15     # K, fixed effective temperature for the DCA0/DCA1 setups

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class AlgorithmKind(str, Enum):
    SCAV = "SCAV"
    SCAH = "SCAH"
    RDCA = "RDCA"
    DCA0 = "DCA0"
    DCA1 = "DCA1"
    DCA2 = "DCA2"


SCA_KINDS = (AlgorithmKind.SCAV, AlgorithmKind.SCAH)
DUAL_KINDS = (AlgorithmKind.RDCA, AlgorithmKind.DCA0, AlgorithmKind.DCA1,
              AlgorithmKind.DCA2)
TAU_SCA_KINDS = (AlgorithmKind.SCAV, AlgorithmKind.SCAH, AlgorithmKind.RDCA)


class TempSource(str, Enum):
    MEASURED = "measured"      # coincident probe soil temperature
    CONSTANT = "constant"      # CONSTANT_T_E


class TauSource(str, Enum):
    NDVI = "ndvi"
    RETRIEVED = "retrieved"
    ZERO = "zero"


# Fallback roughness/albedo per land cover for sites that do not set
# their own; other covers must configure h and omega explicitly.
LAND_COVER_DEFAULTS = {
    "bare_soil": (0.15, 0.0),
    "grassland": (0.156, 0.05),
}


@dataclass(frozen=True)
class SurfaceConfig:
    """Per-site surface description used by both filtering and retrieval."""

    clay_fraction: float
    land_cover: str
    incidence_deg: float
    h: float
    omega: float

    def __post_init__(self):
        if not 0.0 <= self.clay_fraction <= 1.0:
            raise DomainError(f"clay_fraction must be in [0, 1], got {self.clay_fraction}")
        if not 0.0 <= self.incidence_deg < 90.0:
            raise DomainError(f"incidence_deg must be in [0, 90), got {self.incidence_deg}")
        if not self.h >= 0.0:
            raise DomainError(f"h must be >= 0, got {self.h}")
        if not 0.0 <= self.omega < 1.0:
            raise DomainError(f"omega must be in [0, 1), got {self.omega}")


def make_surface(clay_fraction, land_cover, incidence_deg, h=None, omega=None):
    """SurfaceConfig with land-cover defaults filled in for h and omega."""
    if h is None or omega is None:
        try:
            default_h, default_omega = LAND_COVER_DEFAULTS[land_cover]
        except KeyError:
            raise ConfigError(
                f"land cover {land_cover!r} has no default h/omega; "
                "set them explicitly") from None
        h = default_h if h is None else h
        omega = default_omega if omega is None else omega
    return SurfaceConfig(clay_fraction, land_cover, incidence_deg, h, omega)


@dataclass(frozen=True)
class AlgorithmConfig:
    """One concrete algorithm setup (preset resolved for a land cover)."""

    kind: AlgorithmKind
    h: float
    omega: float
    t_e_source: TempSource
    tau_source: TauSource
    dielectric: DielectricModel
    polarization: str = None   # 'H' or 'V', single-channel kinds only
    lam: float = RDCA_LAMBDA   # regularization weight, RDCA only

    def __post_init__(self):
        kind = self.kind
        if kind in SCA_KINDS:
            if self.tau_source != TauSource.NDVI:
                raise ConfigError(f"{kind.value} must take opacity from the ndvi chain")
            expected = "V" if kind == AlgorithmKind.SCAV else "H"
            if self.polarization != expected:
                raise ConfigError(f"{kind.value} uses polarization {expected}")
        else:
            if self.tau_source != TauSource.RETRIEVED:
                raise ConfigError(f"{kind.value} retrieves opacity as an output")
        if kind == AlgorithmKind.DCA0:
            if self.dielectric != DielectricModel.TOPP:
                raise ConfigError("DCA0 pairs with the Topp dielectric")
            if self.t_e_source != TempSource.CONSTANT:
                raise ConfigError("DCA0 uses the constant effective temperature")
            if self.h != 0.0 or self.omega != 0.0:
                raise ConfigError("DCA0 sets h and omega to zero")


@dataclass(frozen=True)
class RetrievalResult:
    sm: float
    tau: float          # None for single-channel kinds
    cost: float         # squared kelvin at the optimum
    converged: bool
    boundary_hit: bool
    evaluations: int


# ----------------------------------------------------------------------
# Cost functions
# ----------------------------------------------------------------------

def cost_sca(sm, tb_obs_p, polarization, tau, algo, surface, t_e,
             frequency_ghz=L_BAND_GHZ):
    """Squared residual of the selected polarization at trial moisture."""
    tb_h, tb_v = simulate_tb(sm, tau, algo.omega, algo.h, surface.clay_fraction,
                             surface.incidence_deg, t_e, algo.dielectric,
                             frequency_ghz)
    sim = tb_h if polarization == "H" else tb_v
    return float((sim - tb_obs_p) ** 2)


def cost_dca(sm, tau, tb_obs, algo, surface, t_e, frequency_ghz=L_BAND_GHZ):
    """Sum of squared residuals over both polarizations."""
    tb_h, tb_v = simulate_tb(sm, tau, algo.omega, algo.h, surface.clay_fraction,
                             surface.incidence_deg, t_e, algo.dielectric,
                             frequency_ghz)
    return float((tb_v - tb_obs.tb_v) ** 2 + (tb_h - tb_obs.tb_h) ** 2)


def cost_rdca(sm, tau, tb_obs, algo, surface, t_e, tau_sca,
              frequency_ghz=L_BAND_GHZ):
    """Dual-channel cost plus the opacity regularizer lam^2 (tau - tau_sca)^2."""
    return cost_dca(sm, tau, tb_obs, algo, surface, t_e, frequency_ghz) \
        + algo.lam ** 2 * (tau - tau_sca) ** 2


# ----------------------------------------------------------------------
# Minimization
# ----------------------------------------------------------------------

def golden_section(f, lo, hi, tol):
    """Golden-section minimization of f on [lo, hi] down to a bracket of
    width `tol`.

    Deterministic: ties shrink toward the lower end, so plateaus resolve
    to the smallest argument. Returns (x, f(x), final_width, n_evals)
    with x the midpoint of the final bracket.
    """
    a, b = float(lo), float(hi)
    if not b > a:
        raise DomainError(f"bad bracket [{lo}, {hi}]")
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    while (b - a) > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
        evals += 1
    x = 0.5 * (a + b)
    return x, f(x), b - a, evals + 1


def _near(x, bound, tol):
    return abs(x - bound) <= tol


def _line_box_range(x, y, dx, dy, x_bounds, y_bounds):
    """Parameter range [t_lo, t_hi] keeping (x + t dx, y + t dy) inside the
    box; 0 is always inside for an in-box starting point."""
    t_lo, t_hi = -math.inf, math.inf
    for value, step, (lo, hi) in ((x, dx, x_bounds), (y, dy, y_bounds)):
        if step == 0.0:
            continue
        t0, t1 = (lo - value) / step, (hi - value) / step
        if t0 > t1:
            t0, t1 = t1, t0
        t_lo, t_hi = max(t_lo, t0), min(t_hi, t1)
    return t_lo, t_hi


def _retrieve_single(tb_obs, algo, surface, t_e, tau, frequency_ghz):
    tb_obs_p = tb_obs.tb_h if algo.polarization == "H" else tb_obs.tb_v
    sm_lo, sm_hi = SM_BOUNDS

    xs = np.linspace(sm_lo, sm_hi, SEED_GRID_N)
    e_h, e_v = soil_emissivity_pair(xs, surface.clay_fraction, surface.incidence_deg,
                                    algo.h, algo.dielectric, frequency_ghz)
    gamma = float(canopy_transmissivity(tau, surface.incidence_deg))
    sim = tau_omega_tb(e_h if algo.polarization == "H" else e_v,
                       gamma, algo.omega, t_e)
    costs = (sim - tb_obs_p) ** 2
    seed = int(np.argmin(costs))  # first minimum, i.e. smallest sm on ties
    evaluations = SEED_GRID_N

    e_pair = emissivity_evaluator(surface.clay_fraction, surface.incidence_deg,
                                  algo.h, algo.dielectric, frequency_ghz)
    want_h = algo.polarization == "H"

    def f(sm):
        e_p = e_pair(sm)[0 if want_h else 1]
        return (tau_omega_tb(e_p, gamma, algo.omega, t_e) - tb_obs_p) ** 2

    lo = xs[max(seed - 1, 0)]
    hi = xs[min(seed + 1, SEED_GRID_N - 1)]
    sm, fx, width, n_evals = golden_section(f, lo, hi, SM_TOL)
    evaluations += n_evals
    return RetrievalResult(
        sm=sm, tau=None, cost=fx,
        converged=width <= SM_TOL,
        boundary_hit=_near(sm, sm_lo, SM_TOL) or _near(sm, sm_hi, SM_TOL),
        evaluations=evaluations,
    )


def _retrieve_dual(tb_obs, algo, surface, t_e, tau_sca, frequency_ghz):
    sm_lo, sm_hi = SM_BOUNDS
    tau_lo, tau_hi = TAU_BOUNDS
    regularized = algo.kind == AlgorithmKind.RDCA
    lam2 = algo.lam ** 2 if regularized else 0.0
    obs_h, obs_v = tb_obs.tb_h, tb_obs.tb_v
    cos_theta = math.cos(math.radians(surface.incidence_deg))

    # Coarse seed over the full rectangle; sm varies along rows so the
    # first flat minimum has the smallest sm, then the smallest tau.
    xs = np.linspace(sm_lo, sm_hi, SEED_GRID_N)
    ts = np.linspace(tau_lo, tau_hi, SEED_GRID_N)
    e_h, e_v = soil_emissivity_pair(xs, surface.clay_fraction, surface.incidence_deg,
                                    algo.h, algo.dielectric, frequency_ghz)
    gamma = canopy_transmissivity(ts, surface.incidence_deg)
    tb_h = tau_omega_tb(e_h[:, None], gamma[None, :], algo.omega, t_e)
    tb_v = tau_omega_tb(e_v[:, None], gamma[None, :], algo.omega, t_e)
    costs = (tb_v - obs_v) ** 2 + (tb_h - obs_h) ** 2
    if regularized:
        costs = costs + lam2 * (ts[None, :] - tau_sca) ** 2
    i, j = np.unravel_index(int(np.argmin(costs)), costs.shape)
    sm, tau = float(xs[i]), float(ts[j])
    evaluations = SEED_GRID_N * SEED_GRID_N

    e_pair = emissivity_evaluator(surface.clay_fraction, surface.incidence_deg,
                                  algo.h, algo.dielectric, frequency_ghz)

    def f_at(e_hv, tau_trial):
        g = math.exp(-tau_trial / cos_theta)
        res_h = tau_omega_tb(e_hv[0], g, algo.omega, t_e) - obs_h
        res_v = tau_omega_tb(e_hv[1], g, algo.omega, t_e) - obs_v
        c = res_v * res_v + res_h * res_h
        if regularized:
            c += lam2 * (tau_trial - tau_sca) ** 2
        return c

    def f_full(sm_trial, tau_trial):
        return f_at(e_pair(sm_trial), tau_trial)

    cost = f_full(sm, tau)
    evaluations += 1
    sm_line_tol = SM_TOL * _LINE_REFINE
    tau_line_tol = TAU_TOL * _LINE_REFINE
    converged = False
    stable = 0
    for _ in range(MAX_SWEEPS):
        sm_prev, tau_prev = sm, tau
        sm, _, _, n_sm = golden_section(
            lambda x: f_full(x, tau), sm_lo, sm_hi, sm_line_tol)
        e_here = e_pair(sm)  # soil emissivity is fixed along the tau line
        tau, cost, _, n_tau = golden_section(
            lambda t: f_at(e_here, t), tau_lo, tau_hi, tau_line_tol)
        evaluations += n_sm + n_tau

        # Alternating descent alone crawls along the correlated (sm, tau)
        # valley; a pattern move along the sweep displacement fixes that.
        d_sm, d_tau = sm - sm_prev, tau - tau_prev
        if d_sm != 0.0 or d_tau != 0.0:
            t_lo, t_hi = _line_box_range(sm, tau, d_sm, d_tau,
                                         SM_BOUNDS, TAU_BOUNDS)
            steps = [sm_line_tol / abs(d_sm) if d_sm else math.inf,
                     tau_line_tol / abs(d_tau) if d_tau else math.inf]
            t_tol = min(steps)
            if t_hi - t_lo > t_tol:
                t_best, c_best, _, n_pat = golden_section(
                    lambda t: f_full(sm + t * d_sm, tau + t * d_tau),
                    t_lo, t_hi, t_tol)
                evaluations += n_pat
                if c_best < cost:
                    sm = min(max(sm + t_best * d_sm, sm_lo), sm_hi)
                    tau = min(max(tau + t_best * d_tau, tau_lo), tau_hi)
                    cost = c_best

        stable = stable + 1 if (abs(sm - sm_prev) <= SM_TOL
                                and abs(tau - tau_prev) <= TAU_TOL) else 0
        if stable >= 2:
            converged = True
            break

    return RetrievalResult(
        sm=sm, tau=tau, cost=cost,
        converged=converged,
        boundary_hit=(_near(sm, sm_lo, SM_TOL) or _near(sm, sm_hi, SM_TOL)
                      or _near(tau, tau_lo, TAU_TOL) or _near(tau, tau_hi, TAU_TOL)),
        evaluations=evaluations,
    )


def retrieve(tb_obs, algo, surface, t_e, tau_sca=None, frequency_ghz=L_BAND_GHZ):
    """Invert one observed TbPair under an algorithm configuration.

    Args:
        tb_obs: observed TbPair (finite).
        algo: AlgorithmConfig, typically from a resolved preset.
        t_e: effective soil temperature in K, already resolved from the
            preset's temperature source.
        tau_sca: opacity from the optical chain; required for the
            single-channel kinds (fixed opacity) and RDCA (regularizer
            target).

    Returns:
        RetrievalResult. `converged` is False when the alternating
        refinement ran out of sweeps without stabilizing; the best point
        found is still reported.
    """
    if not tb_obs.is_finite():
        raise DomainError(f"observed brightness temperatures must be finite, got {tb_obs}")
    if not t_e > 0.0:
        raise DomainError(f"t_e must be positive, got {t_e}")
    if algo.kind in TAU_SCA_KINDS and tau_sca is None:
        raise DomainError(f"{algo.kind.value} requires tau_sca")
    if algo.kind in SCA_KINDS:
        return _retrieve_single(tb_obs, algo, surface, t_e, tau_sca, frequency_ghz)
    return _retrieve_dual(tb_obs, algo, surface, t_e, tau_sca, frequency_ghz)


# ----------------------------------------------------------------------
# Presets
# ----------------------------------------------------------------------

PRESET_NAMES = ("DCA0", "DCA1", "DCA2", "RDCA", "SCAH", "SCAV")


@dataclass(frozen=True)
class PresetSpec:
    """Parsed preset file; h and omega may vary by land cover."""

    name: str
    kind: AlgorithmKind
    t_e_source: TempSource
    tau_source: TauSource
    dielectric: DielectricModel
    h_by_cover: tuple       # (("*", 0.0),) style items
    omega_by_cover: tuple
    polarization: str = None
    lam: float = RDCA_LAMBDA

    def _lookup(self, items, land_cover, field):
        table = dict(items)
        if land_cover in table:
            return table[land_cover]
        if "*" in table:
            return table["*"]
        raise ConfigError(
            f"preset {self.name}: no {field} for land cover {land_cover!r}")

    def resolve(self, land_cover):
        """Concrete AlgorithmConfig for one land cover."""
        return AlgorithmConfig(
            kind=self.kind,
            h=self._lookup(self.h_by_cover, land_cover, "h"),
            omega=self._lookup(self.omega_by_cover, land_cover, "omega"),
            t_e_source=self.t_e_source,
            tau_source=self.tau_source,
            dielectric=self.dielectric,
            polarization=self.polarization,
            lam=self.lam,
        )


def _per_cover(kv, field):
    flat = kv.get_float(field)
    if flat is not None:
        return (("*", flat),)
    items = []
    for key in sorted(kv.keys()):
        if key.startswith(field + "."):
            items.append((key[len(field) + 1:], kv.get_float(key)))
    if not items:
        raise ConfigError(f"{kv.source}: missing {field!r}")
    return tuple(items)


def _parse_enum(kv, key, enum_cls):
    raw = kv.require(key)
    try:
        return enum_cls(raw.lower() if enum_cls is not AlgorithmKind else raw.upper())
    except ValueError:
        valid = ", ".join(e.value for e in enum_cls)
        raise ConfigError(f"{kv.source}: {key} must be one of {valid}, got {raw!r}") from None


def parse_preset(kv, name):
    kind = _parse_enum(kv, "kind", AlgorithmKind)
    spec = PresetSpec(
        name=name,
        kind=kind,
        t_e_source=_parse_enum(kv, "t_e_source", TempSource),
        tau_source=_parse_enum(kv, "tau_source", TauSource),
        dielectric=_parse_enum(kv, "dielectric", DielectricModel),
        h_by_cover=_per_cover(kv, "h"),
        omega_by_cover=_per_cover(kv, "omega"),
        polarization=kv.get_str("polarization"),
        lam=kv.get_float("lambda", RDCA_LAMBDA),
    )
    return spec


def load_preset(name_or_path):
    """Load a shipped preset by name or a user preset file by path."""
    name = str(name_or_path)
    if name in PRESET_NAMES:
        text = resources.files("lbandsm").joinpath(f"presets/{name}.cfg").read_text()
        return parse_preset(parse_kv_text(text, source=f"{name}.cfg"), name)
    path = Path(name_or_path)
    if not path.is_file():
        raise ConfigError(
            f"unknown preset {name!r}: not a shipped name {PRESET_NAMES} and not a file")
    return parse_preset(read_kv_file(path), path.stem)
