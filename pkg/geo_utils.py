"""
AI-driven development file
Purpose: Geometric utilities for the search area of interest (SAI)
Module: UAV_LoRa_SAR_Lab/geo_utils.py
Dependencies: numpy
"""

import math
from typing import Tuple

import numpy as np


Point = Tuple[float, float]


class GeoUtils:
    """
    Geometric utilities for the disc-shaped search area and the shadowing lattice.

    The SAI is always the disc of radius R centred at the origin.
    """

    @staticmethod
    def is_point_in_sai(x: float, y: float, radius: float) -> bool:
        """
        Check if a ground point lies inside (or on) the SAI disc.

        Args:
            x: East coordinate in meters
            y: North coordinate in meters
            radius: SAI radius in meters

        Returns:
            Boolean indicating if the point is within the SAI
        """
        return math.hypot(x, y) <= radius

    @staticmethod
    def clamped_move(position: Point, delta: Point, radius: float) -> Point:
        """
        Apply a displacement, leaving the position unchanged if it would exit the SAI.

        Args:
            position: Current (x, y) in meters
            delta: Displacement (dx, dy) in meters
            radius: SAI radius in meters

        Returns:
            The new position, or the old one when the move points outside
        """
        x, y = position[0] + delta[0], position[1] + delta[1]
        if GeoUtils.is_point_in_sai(x, y, radius):
            return (x, y)
        return (float(position[0]), float(position[1]))

    @staticmethod
    def horizontal_distance(a: Point, b: Point) -> float:
        """Euclidean ground distance between two points."""
        return math.hypot(a[0] - b[0], a[1] - b[1])

    @staticmethod
    def point_on_circle(center: Point, radius: float, bearing_rad: float) -> Point:
        """
        Place a point at a given distance and bearing from a centre.

        Args:
            center: Circle centre (x, y)
            radius: Distance from the centre in meters
            bearing_rad: Angle from the +x (east) axis, counter-clockwise

        Returns:
            The (x, y) point on the circle
        """
        return (
            center[0] + radius * math.cos(bearing_rad),
            center[1] + radius * math.sin(bearing_rad),
        )

    @staticmethod
    def lattice_coordinates(extent: float, spacing: float) -> np.ndarray:
        """
        Generate the 1-D node coordinates of a square lattice covering [-extent, extent].

        The same coordinates are used along both axes, so a lattice of n nodes per
        axis covers the whole bounding box of the SAI.

        Args:
            extent: Half-width of the covered square in meters
            spacing: Distance between neighbouring nodes in meters

        Returns:
            Sorted array of node coordinates starting at -extent
        """
        if spacing <= 0:
            raise ValueError(f"Lattice spacing must be positive, got {spacing}")
        count = int(math.ceil(2.0 * extent / spacing)) + 1
        return -extent + spacing * np.arange(count, dtype=np.float64)
