"""Electrochemical kernels: reversible potential, electrode kinetics and segment polarisation.

Temperatures are in kelvin, currents of a segment in amperes and current densities in A/m².
Overpotentials follow the electrolysis convention: positive values drive steam splitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from soec_opt.errors import ConvergenceError, DomainError
from soec_opt.schemas.models import CONSTANTS, CellParameters, Electrode, PhysicalConstants

_BRACKET_MARGIN = 1e-12


@dataclass(frozen=True, slots=True)
class Composition:
    """Mole fractions seen by the electrodes."""

    x_h2o: float
    x_h2: float
    x_o2: float


@dataclass(frozen=True, slots=True)
class Polarization:
    """Voltage breakdown of one segment at a given current."""

    e_ref: float
    eta_act_a: float
    eta_act_c: float
    eta_conc: float
    v_ohm: float

    @property
    def total(self) -> float:
        return self.e_ref + self.eta_act_a + self.eta_act_c + self.eta_conc + self.v_ohm

    @property
    def irreversible(self) -> float:
        return self.eta_act_a + self.eta_act_c + self.eta_conc + self.v_ohm


def _check_fraction(name: str, value: float) -> None:
    if not 0 < value <= 1:
        raise DomainError(f"Mole fraction {name} must lie in (0, 1], got {value}", species=name, value=value)


def _check_temperature(t: float) -> None:
    if not t > 0:
        raise DomainError(f"Temperature must be positive, got {t} K", temperature_k=t)


def nernst_potential(
    t: float,
    x_h2o: float,
    x_h2: float,
    x_o2: float,
    p_anode: float,
    e_ref_0: float,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Reversible cell voltage; a higher steam fraction lowers it."""

    _check_temperature(t)
    for name, value in (("h2o", x_h2o), ("h2", x_h2), ("o2", x_o2)):
        _check_fraction(name, value)
    if p_anode <= 0:
        raise DomainError(f"Anode pressure must be positive, got {p_anode} Pa", p_anode=p_anode)
    rt_f = constants.gas_constant * t / constants.faraday
    return e_ref_0 + rt_f / 4.0 * math.log(x_o2 * p_anode / constants.p_atm) - rt_f / 2.0 * math.log(x_h2o / x_h2)


def exchange_current_density(prefactor: float, activation_energy: float, t: float, constants: PhysicalConstants = CONSTANTS) -> float:
    return prefactor * math.exp(-activation_energy / (constants.gas_constant * t))


def ohmic_asr(t: float, params: CellParameters, constants: PhysicalConstants = CONSTANTS) -> float:
    """Area-specific electrolyte resistance in ohm·m²; falls with temperature."""

    return params.asr_ohm_pre * math.exp(params.e_act_ohm / (constants.gas_constant * t))


def butler_volmer_current(
    eta: float,
    t: float,
    x: Composition,
    params: CellParameters,
    electrode: Electrode,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Electrode current density for overpotential ``eta`` with composition ratios against the reference state.

    The steam term drives the fuel electrode forward and the oxygen term drives the air electrode
    backward, so both electrodes return positive densities for positive ``eta`` at the reference
    composition.
    """

    _check_temperature(t)
    for name, value in (("h2o", x.x_h2o), ("h2", x.x_h2), ("o2", x.x_o2)):
        _check_fraction(name, value)
    f_eta = params.alpha * constants.faraday * eta / (constants.gas_constant * t)
    if electrode == "cathode":
        i0 = exchange_current_density(params.i0_c_pre, params.e_act_c, t, constants)
        forward = x.x_h2o / params.x_ref_h2o * math.exp(f_eta)
        backward = x.x_h2 / params.x_ref_h2 * math.exp(-f_eta)
    else:
        i0 = exchange_current_density(params.i0_a_pre, params.e_act_a, t, constants)
        forward = math.exp(f_eta)
        backward = x.x_o2 / params.x_ref_o2 * math.exp(-f_eta)
    return i0 * (forward - backward)


def activation_overpotential(
    current_density: float,
    i0: float,
    t: float,
    alpha: float,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Invert the symmetric Butler-Volmer form taken at the bulk composition."""

    return constants.gas_constant * t / (alpha * constants.faraday) * math.asinh(current_density / (2.0 * i0))


def limiting_current_density(x_h2o: float, params: CellParameters) -> float:
    return params.j_lim_h2o * x_h2o


def concentration_overpotential(
    current_density: float,
    x_h2o: float,
    t: float,
    params: CellParameters,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Steam-diffusion loss of the fuel electrode; diverges at the limiting current."""

    ratio = current_density / limiting_current_density(x_h2o, params)
    if ratio >= 1.0:
        raise DomainError(
            "Current density at or beyond the steam diffusion limit",
            current_density=current_density,
            x_h2o=x_h2o,
        )
    return -constants.gas_constant * t / (2.0 * constants.faraday) * math.log1p(-ratio)


def polarization_voltage(
    current: float,
    t: float,
    x_h2o: float,
    x_h2: float,
    params: CellParameters,
    constants: PhysicalConstants = CONSTANTS,
) -> Polarization:
    """Voltage a segment needs to carry ``current`` at temperature ``t`` and mean composition."""

    e_ref = nernst_potential(t, x_h2o, x_h2, params.x_o2, params.p_anode, params.e_ref_0, constants)
    j = current / params.seg_area
    i0_a = exchange_current_density(params.i0_a_pre, params.e_act_a, t, constants)
    i0_c = exchange_current_density(params.i0_c_pre, params.e_act_c, t, constants)
    return Polarization(
        e_ref=e_ref,
        eta_act_a=activation_overpotential(j, i0_a, t, params.alpha, constants),
        eta_act_c=activation_overpotential(j, i0_c, t, params.alpha, constants),
        eta_conc=concentration_overpotential(j, x_h2o, t, params, constants),
        v_ohm=j * ohmic_asr(t, params, constants),
    )


def segment_polarization(
    v_cell: float,
    t: float,
    x_h2o_mean: float,
    x_h2_mean: float,
    params: CellParameters,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Segment current at fixed composition such that the polarisation voltage equals ``v_cell``.

    Returns 0 at or below the reversible potential. The search interval ends just below the
    steam-diffusion limit of the given composition.
    """

    if v_cell < 0:
        raise DomainError(f"Cell voltage must be non-negative, got {v_cell} V", v_cell=v_cell)
    e_ref = nernst_potential(t, x_h2o_mean, x_h2_mean, params.x_o2, params.p_anode, params.e_ref_0, constants)
    if v_cell <= e_ref:
        return 0.0

    i_limit = limiting_current_density(x_h2o_mean, params) * params.seg_area * (1.0 - _BRACKET_MARGIN)

    def residual(current: float) -> float:
        return polarization_voltage(current, t, x_h2o_mean, x_h2_mean, params, constants).total - v_cell

    upper = residual(i_limit)
    if upper < 0:
        raise ConvergenceError(
            "Polarisation root not bracketed below the limiting current",
            v_cell=v_cell,
            temperature_k=t,
            i_limit=i_limit,
            residual_at_limit=upper,
        )
    return float(brentq(residual, 0.0, i_limit, xtol=1e-14, rtol=1e-12, maxiter=200))
