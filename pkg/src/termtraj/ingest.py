"""Measurement-file parsing, track splitting, landing/takeoff classification.

The canonical measurement format is UTF-8 text, one record per line:

    target_id,unix_time_seconds,lat_deg,lon_deg,alt_m

Lines starting with ``#`` are ignored. Altitude is pressure altitude in
meters, treated as height above the airport reference.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import geo
from .geo import AirportReference, GeodeticPosition

M_PER_S_TO_FT_PER_MIN = 60.0 / 0.3048

LANDING = "landing"
TAKEOFF = "takeoff"
DISCARD = "discard"
UNCLASSIFIED = "unclassified"


class MeasurementRecord(NamedTuple):
    target_id: str
    time: float
    lat_deg: float
    lon_deg: float
    alt_m: float

    @property
    def position(self) -> GeodeticPosition:
        return GeodeticPosition(self.lat_deg, self.lon_deg, self.alt_m)


@dataclass
class RawTrack:
    """One flight segment: time-ordered positions in airport ENU meters.

    Times are integer seconds re-based so the first measurement is at 0.
    """

    target_id: str
    times: np.ndarray
    enu: np.ndarray
    mode: str = UNCLASSIFIED

    @property
    def duration(self) -> int:
        return int(self.times[-1] - self.times[0])

    def __len__(self) -> int:
        return len(self.times)


def parse_measurements(stream) -> tuple[list[MeasurementRecord], list[tuple[int, str]]]:
    """Parse a measurement stream.

    Returns (records, diagnostics) where diagnostics is a list of
    (line_number, reason) for lines that were skipped as malformed.
    An unreadable stream raises OSError/UnicodeDecodeError unchanged.
    """
    records: list[MeasurementRecord] = []
    diagnostics: list[tuple[int, str]] = []
    for line_no, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 5:
            diagnostics.append((line_no, f"expected 5 fields, got {len(parts)}"))
            continue
        try:
            time = float(parts[1])
            lat = float(parts[2])
            lon = float(parts[3])
            alt = float(parts[4])
        except ValueError:
            diagnostics.append((line_no, "non-numeric field"))
            continue
        if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
            diagnostics.append((line_no, "latitude/longitude out of range"))
            continue
        records.append(MeasurementRecord(parts[0], time, lat, lon, alt))
    return records, diagnostics


def split_tracks(times, enu, gap_threshold: float = 30.0, target_id: str = "") -> list[RawTrack]:
    """Split one target's time-sorted measurements at gaps > gap_threshold.

    Each output track is re-based to integer seconds starting at 0. Gaps
    exactly equal to the threshold do not split.
    """
    times = np.asarray(times, dtype=np.float64)
    enu = np.asarray(enu, dtype=np.float64)
    if len(times) == 0:
        return []
    cut_after = np.nonzero(np.diff(times) > gap_threshold)[0]
    starts = np.concatenate(([0], cut_after + 1))
    stops = np.concatenate((cut_after + 1, [len(times)]))
    tracks = []
    for a, b in zip(starts, stops):
        seg_t = np.rint(times[a:b] - times[a]).astype(np.int64)
        tracks.append(RawTrack(target_id, seg_t, enu[a:b].copy()))
    return tracks


def classify_track(
    track: RawTrack,
    ref: AirportReference,
    climb_threshold_fpm: float = 200.0,
    end_fraction: float = 0.95,
) -> str:
    """Label a track landing, takeoff, or discard.

    A landing comes from outside the runway neighborhood (radius R), is
    closest to the runway center at the very end of the track, and descends
    on average; a takeoff is the time mirror of that. Everything else is
    discarded.
    """
    if len(track) < 2 or track.duration <= 0:
        raise ValueError("track must span more than 0 seconds")
    norms = np.linalg.norm(track.enu, axis=1)
    c = int(np.argmin(norms))
    total = float(track.times[-1] - track.times[0])
    frac = float(track.times[c] - track.times[0]) / total
    zdot_fpm = (track.enu[-1, 2] - track.enu[0, 2]) / total * M_PER_S_TO_FT_PER_MIN
    r = ref.runway_radius_m
    if norms[c] < r and norms[0] > r and zdot_fpm < -climb_threshold_fpm and frac > end_fraction:
        return LANDING
    if (
        norms[c] < r
        and norms[-1] > r
        and zdot_fpm > climb_threshold_fpm
        and frac < 1.0 - end_fraction
    ):
        return TAKEOFF
    return DISCARD


def canonicalize(track: RawTrack, mode: str) -> RawTrack:
    """Re-anchor a classified track so t=0 is the runway-proximal point.

    Landings keep measurements up to the closest approach and run time
    backwards from it; takeoffs drop everything before the closest approach
    and shift. Either way the output starts at t=0 next to the runways.
    """
    if mode not in (LANDING, TAKEOFF):
        raise ValueError(f"mode must be {LANDING!r} or {TAKEOFF!r}, got {mode!r}")
    norms = np.linalg.norm(track.enu, axis=1)
    c = int(np.argmin(norms))
    if mode == LANDING:
        ts = track.times[: c + 1]
        if len(ts) < 2:
            raise ValueError("landing track empty after trimming at closest approach")
        new_t = ts[-1] - ts
        order = np.argsort(new_t, kind="stable")
        return RawTrack(track.target_id, new_t[order], track.enu[: c + 1][order], LANDING)
    ts = track.times[c:]
    if len(ts) < 2:
        raise ValueError("takeoff track empty after trimming at closest approach")
    return RawTrack(track.target_id, ts - ts[0], track.enu[c:].copy(), TAKEOFF)


def scale(track: RawTrack, up_factor: float = 10.0) -> RawTrack:
    """Multiply the up coordinate by up_factor (dimension standardization)."""
    enu = track.enu.copy()
    enu[:, 2] *= up_factor
    return replace(track, enu=enu)


def unscale(track: RawTrack, up_factor: float = 10.0) -> RawTrack:
    """Inverse of :func:`scale`."""
    enu = track.enu.copy()
    enu[:, 2] /= up_factor
    return replace(track, enu=enu)


def build_tracks(
    records: list[MeasurementRecord],
    ref: AirportReference,
    gap_threshold: float = 30.0,
    climb_threshold_fpm: float = 200.0,
    end_fraction: float = 0.95,
) -> tuple[list[RawTrack], dict[str, int]]:
    """Full ingest pass: ENU conversion, airspace filter, split, classify,
    canonicalize.

    Returns the canonicalized landing/takeoff tracks (in first-appearance
    order of their target ids) and a report dict with counts.
    """
    report = {LANDING: 0, TAKEOFF: 0, DISCARD: 0}
    if not records:
        return [], report
    ids = [r.target_id for r in records]
    lats = np.array([r.lat_deg for r in records])
    lons = np.array([r.lon_deg for r in records])
    alts = np.array([r.alt_m for r in records])
    times = np.array([r.time for r in records])
    enu = geo.ecef_to_enu(geo.wgs84_to_ecef(lats, lons, alts), ref)
    keep = geo.in_terminal_airspace(enu, ref)

    by_target: dict[str, list[int]] = {}
    for i in np.nonzero(keep)[0]:
        by_target.setdefault(ids[i], []).append(int(i))

    tracks: list[RawTrack] = []
    for target_id, idx in by_target.items():
        idx = sorted(idx, key=lambda i: times[i])
        t_sorted = times[idx]
        enu_sorted = enu[idx]
        for raw in split_tracks(t_sorted, enu_sorted, gap_threshold, target_id):
            try:
                mode = classify_track(raw, ref, climb_threshold_fpm, end_fraction)
            except ValueError:
                mode = DISCARD
            if mode == DISCARD:
                report[DISCARD] += 1
                continue
            tracks.append(canonicalize(raw, mode))
            report[mode] += 1
    return tracks, report


# --- track file round-trip (pipeline intermediate) -------------------------


def write_tracks(tracks: list[RawTrack], path) -> None:
    """Write canonicalized tracks as text: a `track` header line per track
    followed by `t,east,north,up` rows (unscaled meters)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# termtraj tracks v1\n")
        for tr in tracks:
            fh.write(f"track,{tr.target_id},{tr.mode},{len(tr)}\n")
            for t, (e, n, u) in zip(tr.times, tr.enu):
                fh.write(f"{int(t)},{float(e)!r},{float(n)!r},{float(u)!r}\n")


def read_tracks(path) -> list[RawTrack]:
    tracks = []
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    i = 0
    while i < len(lines):
        head = lines[i].split(",")
        if head[0] != "track" or len(head) != 4:
            raise ValueError(f"bad track header: {lines[i]!r}")
        target_id, mode, n = head[1], head[2], int(head[3])
        rows = [ln.split(",") for ln in lines[i + 1 : i + 1 + n]]
        if len(rows) != n:
            raise ValueError("truncated track file")
        times = np.array([int(r[0]) for r in rows], dtype=np.int64)
        enu = np.array([[float(r[1]), float(r[2]), float(r[3])] for r in rows])
        tracks.append(RawTrack(target_id, times, enu, mode))
        i += 1 + n
    return tracks
