"""Flow and temperature conversions."""

from __future__ import annotations

from soec_opt.errors import DomainError
from soec_opt.schemas.models import CONSTANTS, PhysicalConstants

KELVIN_OFFSET = 273.15


def sccm_to_mol_per_s(q: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """Convert a standard flow (25 °C, 1 atm) in sccm to mol/s."""

    if q < 0:
        raise DomainError(f"Flow must be non-negative, got {q} sccm", flow_sccm=q)
    return q / (constants.molar_volume_ref * 60.0)


def mol_per_s_to_sccm(n: float, constants: PhysicalConstants = CONSTANTS) -> float:
    if n < 0:
        raise DomainError(f"Molar flow must be non-negative, got {n} mol/s", flow_mol_s=n)
    return n * constants.molar_volume_ref * 60.0


def celsius_to_kelvin(t: float) -> float:
    return t + KELVIN_OFFSET


def kelvin_to_celsius(t: float) -> float:
    return t - KELVIN_OFFSET
