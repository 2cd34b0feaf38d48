"""Great-circle distances and the local planar projection used by the KDE scorer."""

from __future__ import annotations

import numpy as np

EARTH_RADIUS_KM = 6371.0


def haversine_km(lat1, lon1, lat2, lon2):
    """Great-circle distance in kilometres.

    Arguments are degrees and broadcast like numpy arrays; a Python float is
    returned when every argument is a scalar.
    """
    p1 = np.radians(lat1)
    p2 = np.radians(lat2)
    dphi = p2 - p1
    dlmb = np.radians(np.asarray(lon2, dtype=float) - np.asarray(lon1, dtype=float))
    a = np.sin(dphi / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlmb / 2.0) ** 2
    d = 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))
    if np.ndim(d) == 0:
        return float(d)
    return d


def equirectangular_km(lat, lon, lat0, lon0):
    """Project degrees onto a local (x, y) plane in km centred at (lat0, lon0)."""
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    x = EARTH_RADIUS_KM * np.radians(lon - lon0) * np.cos(np.radians(lat0))
    y = EARTH_RADIUS_KM * np.radians(lat - lat0)
    return x, y
