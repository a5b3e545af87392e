"""
Port geometry of the five-sensor probe in the body frame (x forward, y right, z down).

Peripheral ports sit on a cone around the probe axis; azimuth is measured from
+y towards up (-z). Sensor 1 reads static minus center, sensors 2..5 read the
difference across one antipodal peripheral pair.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, model_validator

Vector = tuple[float, float, float]

N_PERIPHERAL = 8
N_STATIC = 4
N_PORTS = 1 + N_PERIPHERAL + N_STATIC


def _peripheral(half_angle_deg: float) -> tuple[Vector, ...]:
    h = math.radians(half_angle_deg)
    front = []
    for k in range(N_PERIPHERAL // 2):
        phi = math.radians(45.0 * k)
        front.append((math.cos(h), math.sin(h) * math.cos(phi), -math.sin(h) * math.sin(phi)))
    back = [(x, -y, -z) for x, y, z in front]
    return tuple(front + back)


class ProbePortLayout(BaseModel):
    model_config = ConfigDict(frozen=True)

    half_angle_deg: float = 45.0
    center: Vector = (1.0, 0.0, 0.0)
    peripheral: tuple[Vector, ...] = _peripheral(45.0)
    static_ring: tuple[Vector, ...] = ((0.0, 1.0, 0.0), (0.0, 0.0, -1.0), (0.0, -1.0, 0.0), (0.0, 0.0, 1.0))
    # sensors 2..5 as (positive port, negative port) peripheral indices:
    # right-left, upper right-lower left, up-down, upper left-lower right
    sensor_pairs: tuple[tuple[int, int], ...] = ((0, 4), (1, 5), (2, 6), (3, 7))

    @classmethod
    def standard(cls, half_angle_deg: float = 45.0) -> ProbePortLayout:
        return cls(half_angle_deg=half_angle_deg, peripheral=_peripheral(half_angle_deg))

    @model_validator(mode="after")
    def _check_geometry(self) -> ProbePortLayout:
        if len(self.peripheral) != N_PERIPHERAL or len(self.static_ring) != N_STATIC:
            msg = f"layout needs {N_PERIPHERAL} peripheral and {N_STATIC} static ports"
            raise ValueError(msg)
        for v in (self.center, *self.peripheral, *self.static_ring):
            if abs(math.hypot(*v) - 1.0) > 1e-12:
                msg = f"port direction {v} is not unit length"
                raise ValueError(msg)
        used = sorted(i for pair in self.sensor_pairs for i in pair)
        if used != list(range(N_PERIPHERAL)):
            msg = f"every peripheral port must appear in exactly one pair, got {self.sensor_pairs}"
            raise ValueError(msg)
        for a, b in self.sensor_pairs:
            pa, pb = self.peripheral[a], self.peripheral[b]
            if pa[0] != pb[0] or pa[1] != -pb[1] or pa[2] != -pb[2]:
                msg = f"peripheral ports {a} and {b} are not antipodal in azimuth"
                raise ValueError(msg)
        return self

    def directions(self) -> NDArray[np.float64]:
        """(13, 3) array ordered center, peripheral 0..7, static 0..3."""
        return np.array([self.center, *self.peripheral, *self.static_ring], dtype=np.float64)

    def azimuth_deg(self, index: int) -> float:
        _, y, z = self.peripheral[index]
        return math.degrees(math.atan2(-z, y)) % 360.0
