"""Performance indices: current and temperature inhomogeneity, steam utilisation."""

from __future__ import annotations

import logging

import numpy as np

from soec_opt.core.units import mol_per_s_to_sccm, sccm_to_mol_per_s
from soec_opt.errors import DomainError
from soec_opt.schemas.models import CONSTANTS, CellResponse, OperatingPoint, PerformanceIndices, PhysicalConstants

LOGGER = logging.getLogger(__name__)

# Floor on the up-stream current when IH_I is evaluated in bulk on surrogate output.
I_UP_FLOOR = 1e-3


def performance_indices(
    op: OperatingPoint,
    response: CellResponse,
    constants: PhysicalConstants = CONSTANTS,
) -> PerformanceIndices:
    """Return IH_I, IH_T, SU and the derived current, hydrogen flow and power of one state.

    IH_I compares the up-stream and down-stream segments only; the middle segment enters the
    total current. An up-stream current of zero reports ``open_circuit`` with ``ih_i=None``.
    """

    if op.q_st <= 0:
        raise DomainError("Steam flow must be positive to compute steam utilisation", q_st=op.q_st)
    i_tot = response.i_up + response.i_mid + response.i_down
    n_st = sccm_to_mol_per_s(op.q_st, constants)
    h2_mol_s = i_tot / (2.0 * constants.faraday)
    su = h2_mol_s / n_st

    open_circuit = response.i_up == 0
    ih_i = None if open_circuit else 1.0 - response.i_down / response.i_up
    steam_starved = su > 1.0
    if open_circuit or steam_starved:
        LOGGER.debug(
            "Index evaluation outside normal operation",
            extra={"open_circuit": open_circuit, "steam_starved": steam_starved, "su": su},
        )
    return PerformanceIndices(
        ih_i=ih_i,
        ih_t=response.t_max - response.t_min,
        su=su,
        i_tot=i_tot,
        q_h2=mol_per_s_to_sccm(h2_mol_s, constants),
        p_ele=op.v_cell * i_tot,
        open_circuit=open_circuit,
        steam_starved=steam_starved,
    )


def indices_array(inputs: np.ndarray, outputs: np.ndarray, constants: PhysicalConstants = CONSTANTS) -> dict[str, np.ndarray]:
    """Vectorised indices for ``(n, 4)`` inputs and ``(n, 5)`` outputs in canonical column order.

    The up-stream current is floored at ``I_UP_FLOOR`` and IH_I clipped to [-1, 1], so the result
    is finite for any surrogate output.
    """

    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    outputs = np.atleast_2d(np.asarray(outputs, dtype=float))
    t_max, t_min, i_up, i_mid, i_down = outputs.T
    i_tot = i_up + i_mid + i_down
    n_st = inputs[:, 2] / (constants.molar_volume_ref * 60.0)
    h2_mol_s = i_tot / (2.0 * constants.faraday)
    with np.errstate(divide="ignore", invalid="ignore"):
        su = np.where(n_st > 0, h2_mol_s / n_st, np.nan)
    ih_i = np.clip(1.0 - i_down / np.maximum(i_up, I_UP_FLOOR), -1.0, 1.0)
    return {
        "ih_i": ih_i,
        "ih_t": t_max - t_min,
        "su": su,
        "i_tot": i_tot,
        "q_h2": h2_mol_s * constants.molar_volume_ref * 60.0,
        "p_ele": inputs[:, 3] * i_tot,
    }
