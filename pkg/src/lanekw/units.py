"""Unit conventions and conversion constants.

Internally everything is miles, hours, vehicles: densities in veh/mi,
speeds in mi/h, flows in veh/h, lane-change durations in hours. Feet and
seconds appear only at I/O boundaries (trajectory files are ft/s), and
conversions happen exactly once on the way in or out.
"""

FEET_PER_MILE = 5280.0
SECONDS_PER_HOUR = 3600.0
KM_PER_MILE = 1.609344  # exact by definition


def miles_from_feet(ft: float) -> float:
    return ft / FEET_PER_MILE


def feet_from_miles(mi: float) -> float:
    return mi * FEET_PER_MILE


def hours_from_seconds(s: float) -> float:
    return s / SECONDS_PER_HOUR


def seconds_from_hours(h: float) -> float:
    return h * SECONDS_PER_HOUR


def mph_from_fps(fps: float) -> float:
    return fps * SECONDS_PER_HOUR / FEET_PER_MILE


def fps_from_mph(mph: float) -> float:
    return mph * FEET_PER_MILE / SECONDS_PER_HOUR
