from __future__ import annotations

import numpy as np
import pytest

from soec_opt.schemas.models import CONSTANTS

# Current per sccm of steam at full utilisation.
AMPS_PER_SCCM = 2.0 * CONSTANTS.faraday / (CONSTANTS.molar_volume_ref * 60.0)


class AnalyticCellModel:
    """Closed-form stand-in for a trained surrogate.

    ``su = 1 - exp(-k(t) (v - 0.95) 50 / q_st)`` with ``k(t) = 4 exp((t - 675) / 150)``; the current
    split gives ``ih_i = 0.2 + 0.4 su + 0.001 (t - 600)`` and the temperature spread grows with voltage.
    """

    def utilisation(self, t_fur: np.ndarray, q_st: np.ndarray, v_cell: np.ndarray) -> np.ndarray:
        rate = 4.0 * np.exp((t_fur - 675.0) / 150.0)
        return 1.0 - np.exp(-rate * (v_cell - 0.95) * 50.0 / q_st)

    def predict_array(self, inputs: np.ndarray) -> np.ndarray:
        t_fur, _, q_st, v_cell = np.atleast_2d(np.asarray(inputs, dtype=float)).T
        su = self.utilisation(t_fur, q_st, v_cell)
        i_tot = su * AMPS_PER_SCCM * q_st
        ih_i = 0.2 + 0.4 * su + 0.001 * (t_fur - 600.0)
        i_up = i_tot / (1.5 * (2.0 - ih_i))
        i_down = (1.0 - ih_i) * i_up
        i_mid = 0.5 * (i_up + i_down)
        t_max = t_fur + 20.0 * (v_cell - 1.0) ** 2 + 5.0
        return np.column_stack([t_max, t_fur, i_up, i_mid, i_down])


@pytest.fixture
def analytic_model() -> AnalyticCellModel:
    return AnalyticCellModel()
