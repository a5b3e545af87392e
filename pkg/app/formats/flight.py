"""Flight log CSV (`t,dp1..dp5,vx,vy,vz[,pitot_mps][,maneuver]`) and estimate tables."""
from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pandas as pd

from app.core.estimate import StreamOutput
from app.core.flight import REQUIRED_COLUMNS
from app.formats.common import read_csv, write_csv

ESTIMATE_COLUMNS = ("t", "airspeed_mps", "aoa_deg", "aos_deg", "q_pa", "calibrated", "gap")


def read_flight_log(path: str | Path) -> pd.DataFrame:
    return read_csv(path, REQUIRED_COLUMNS)


def write_flight_log(log: pd.DataFrame, path: str | Path) -> Path:
    return write_csv(log, path)


def estimates_frame(outputs: Sequence[StreamOutput]) -> pd.DataFrame:
    rows = []
    for out in outputs:
        if out.state is None:
            rows.append((out.t, np.nan, np.nan, np.nan, out.q, False, True))
        else:
            rows.append((out.t, out.state.airspeed, out.state.aoa, out.state.aos, out.q, out.state.calibrated, False))
    return pd.DataFrame(rows, columns=list(ESTIMATE_COLUMNS))


def write_estimates(outputs: Sequence[StreamOutput], path: str | Path) -> Path:
    return write_csv(estimates_frame(outputs), path)
