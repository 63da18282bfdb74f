import io

import numpy as np
import pytest

from termtraj import geo, ingest

REF = geo.AirportReference(40.6413, -73.7781, 4.0)


def _track(times, enu, mode=ingest.UNCLASSIFIED):
    return ingest.RawTrack("T1", np.asarray(times, dtype=np.int64), np.asarray(enu, float), mode)


def _straight_track(start, end, n, duration):
    """Linear interpolation from start to end ENU over `duration` seconds."""
    f = np.linspace(0.0, 1.0, n)[:, None]
    enu = np.asarray(start, float) * (1 - f) + np.asarray(end, float) * f
    times = np.round(np.linspace(0, duration, n)).astype(np.int64)
    return _track(times, enu)


# --- parsing -----------------------------------------------------------------


def test_parse_empty_stream():
    records, diags = ingest.parse_measurements(io.StringIO(""))
    assert records == [] and diags == []


def test_parse_single_line():
    records, diags = ingest.parse_measurements(
        io.StringIO("AAL1,1000.5,40.64,-73.78,120.0\n")
    )
    assert diags == []
    (r,) = records
    assert r.target_id == "AAL1" and r.time == 1000.5
    assert r.position.lat_deg == 40.64


def test_parse_reports_malformed_lines():
    lines = [f"T{i},{100.0 + i},40.6,-73.7,{50.0 + i}" for i in range(100)]
    lines[41] = "T41,not-a-time,40.6,-73.7,50"
    records, diags = ingest.parse_measurements(io.StringIO("\n".join(lines)))
    assert len(records) == 99
    assert diags == [(42, "non-numeric field")]


def test_parse_skips_comments_and_validates_ranges():
    text = "# header\nT0,1,95.0,0.0,0\nT0,2,40.0,-73.0,10\n"
    records, diags = ingest.parse_measurements(io.StringIO(text))
    assert len(records) == 1
    assert diags[0][1] == "latitude/longitude out of range"


def test_parse_accepts_bytes():
    records, _ = ingest.parse_measurements(io.BytesIO(b"T0,1,40.0,-73.0,10\n"))
    assert len(records) == 1


# --- splitting ---------------------------------------------------------------


def test_split_no_gap():
    tracks = ingest.split_tracks([0.0, 1.0, 2.0], np.zeros((3, 3)))
    assert len(tracks) == 1
    np.testing.assert_array_equal(tracks[0].times, [0, 1, 2])


def test_split_on_gap_and_rebase():
    tracks = ingest.split_tracks([0.0, 1.0, 45.0, 46.0], np.arange(12.0).reshape(4, 3))
    assert len(tracks) == 2
    np.testing.assert_array_equal(tracks[0].times, [0, 1])
    np.testing.assert_array_equal(tracks[1].times, [0, 1])
    np.testing.assert_array_equal(tracks[1].enu[0], [6, 7, 8])


def test_split_gap_equal_threshold_kept():
    tracks = ingest.split_tracks([0.0, 30.0, 60.0], np.zeros((3, 3)))
    assert len(tracks) == 1
    np.testing.assert_array_equal(tracks[0].times, [0, 30, 60])


def test_split_never_leaves_internal_gap():
    rng = np.random.default_rng(0)
    times = np.sort(rng.uniform(0, 500, 80))
    tracks = ingest.split_tracks(times, rng.standard_normal((80, 3)), gap_threshold=15.0)
    assert sum(len(t) for t in tracks) == 80
    for t in tracks:
        assert t.times[0] == 0
        if len(t) > 1:
            # rounding can stretch a float gap by at most one second
            assert np.diff(t.times).max() <= 16


# --- classification ----------------------------------------------------------


def landing_example():
    # descends from 8 km out / 800 m up to 100 m out / 10 m up over 120 s
    return _straight_track([8000.0, 0.0, 800.0], [100.0, 0.0, 10.0], 13, 120)


def mirror(track):
    return _track(track.times[-1] - track.times[::-1], track.enu[::-1])


def test_classify_landing_example():
    assert ingest.classify_track(landing_example(), REF) == ingest.LANDING


def test_classify_time_mirror_is_takeoff():
    assert ingest.classify_track(mirror(landing_example()), REF) == ingest.TAKEOFF


def test_classify_level_faraway_discard():
    ref = geo.AirportReference(40.6413, -73.7781, 4.0, runway_radius_m=2000.0)
    track = _straight_track([3000.0, 0.0, 300.0], [3000.0, 4000.0, 300.0], 10, 60)
    assert ingest.classify_track(track, ref) == ingest.DISCARD


def test_classify_degenerate_duration_raises():
    with pytest.raises(ValueError):
        ingest.classify_track(_track([0, 0], np.zeros((2, 3))), REF)


def test_classify_mirror_symmetry_random():
    rng = np.random.default_rng(4)
    for _ in range(50):
        n = rng.integers(5, 30)
        enu = rng.uniform(-9000, 9000, (n, 3))
        enu[:, 2] = rng.uniform(0, 900, n)
        track = _track(np.arange(n) * 5, enu)
        label = ingest.classify_track(track, REF)
        mirrored = ingest.classify_track(mirror(track), REF)
        if label == ingest.LANDING:
            assert mirrored == ingest.TAKEOFF
        elif label == ingest.TAKEOFF:
            assert mirrored == ingest.LANDING


# --- canonicalization --------------------------------------------------------


def test_canonicalize_landing_reverses_positions():
    enu = np.array([[3000.0, 0, 300], [1500.0, 0, 150], [100.0, 0, 10]])
    track = _track([0, 10, 20], enu)
    out = ingest.canonicalize(track, ingest.LANDING)
    np.testing.assert_array_equal(out.times, [0, 10, 20])
    np.testing.assert_array_equal(out.enu, enu[::-1])
    assert out.mode == ingest.LANDING


def test_canonicalize_takeoff_identity_when_closest_first():
    enu = np.array([[100.0, 0, 10], [1500.0, 0, 150], [3000.0, 0, 300]])
    track = _track([0, 5, 10], enu)
    out = ingest.canonicalize(track, ingest.TAKEOFF)
    np.testing.assert_array_equal(out.times, track.times)
    np.testing.assert_array_equal(out.enu, enu)


def test_canonicalize_landing_twice_restores_order():
    enu = np.array([[3000.0, 0, 300], [1500.0, 0, 150], [100.0, 0, 10]])
    track = _track([0, 10, 20], enu)
    once = ingest.canonicalize(track, ingest.LANDING)
    # the minimum-norm point is now first, so reversing again restores order
    again = ingest.RawTrack("T1", once.times[-1] - once.times[::-1], once.enu[::-1])
    np.testing.assert_array_equal(again.enu, enu)


def test_canonicalize_anchors_min_norm_at_zero():
    rng = np.random.default_rng(5)
    for _ in range(25):
        n = int(rng.integers(4, 20))
        enu = rng.uniform(-5000, 5000, (n, 3))
        track = _track(np.sort(rng.choice(200, size=n, replace=False)), enu)
        track.times[0] = 0
        for mode in (ingest.LANDING, ingest.TAKEOFF):
            try:
                out = ingest.canonicalize(track, mode)
            except ValueError:
                continue
            assert out.times[0] == 0
            norms = np.linalg.norm(out.enu, axis=1)
            assert norms[0] == norms.min()


def test_canonicalize_rejects_unclassified():
    with pytest.raises(ValueError):
        ingest.canonicalize(_track([0, 1], np.zeros((2, 3))), ingest.UNCLASSIFIED)


def test_canonicalize_empty_after_trim():
    enu = np.array([[10.0, 0, 0], [500.0, 0, 50]])
    with pytest.raises(ValueError):
        ingest.canonicalize(_track([0, 5], enu), ingest.LANDING)


# --- scaling -----------------------------------------------------------------


def test_scale_up_by_ten():
    track = _track([0, 1], [[1.0, 2.0, 100.0], [3.0, 4.0, 200.0]])
    out = ingest.scale(track)
    np.testing.assert_array_equal(out.enu[:, 2], [1000.0, 2000.0])
    np.testing.assert_array_equal(out.enu[:, :2], track.enu[:, :2])


def test_scale_unscale_roundtrip_exact():
    # values whose product with 10 is exactly representable
    ups = np.array([0.0, 1.0, 2.5, 100.0, 12.125, -7.75, 512.0])
    track = _track(np.arange(len(ups)), np.column_stack([ups, ups, ups]))
    back = ingest.unscale(ingest.scale(track))
    assert np.array_equal(back.enu, track.enu)


def test_scale_factor_one_identity():
    rng = np.random.default_rng(6)
    enu = rng.standard_normal((5, 3))
    track = _track(np.arange(5), enu)
    assert np.array_equal(ingest.scale(track, 1.0).enu, enu)


# --- end-to-end ingest -------------------------------------------------------


def test_build_tracks_empty():
    tracks, report = ingest.build_tracks([], REF)
    assert tracks == [] and report == {"landing": 0, "takeoff": 0, "discard": 0}


def test_build_tracks_filters_airspace_and_classifies():
    # synthesize one landing approach in geodetic coordinates
    steps = 40
    east = np.linspace(8000.0, 100.0, steps)
    up = np.linspace(800.0, 10.0, steps)
    enu = np.column_stack([east, np.zeros(steps), up])
    lat, lon, alt = geo.enu_to_wgs84(enu, REF)
    records = [
        ingest.MeasurementRecord("FL1", 1000.0 + 3 * i, lat[i], lon[i], alt[i])
        for i in range(steps)
    ]
    # one far-outside point that must be dropped by the airspace filter
    far_lat, far_lon, far_alt = geo.enu_to_wgs84(np.array([20000.0, 0.0, 100.0]), REF)
    records.append(ingest.MeasurementRecord("FL1", 880.0, far_lat, far_lon, far_alt))
    tracks, report = ingest.build_tracks(records, REF)
    assert report == {"landing": 1, "takeoff": 0, "discard": 0}
    assert tracks[0].mode == ingest.LANDING
    assert tracks[0].times[0] == 0


def test_track_file_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    tracks = [
        ingest.RawTrack(
            f"T{i}",
            np.arange(4, dtype=np.int64) * 2,
            rng.standard_normal((4, 3)),
            ingest.LANDING if i % 2 else ingest.TAKEOFF,
        )
        for i in range(3)
    ]
    path = tmp_path / "tracks.txt"
    ingest.write_tracks(tracks, path)
    back = ingest.read_tracks(path)
    assert len(back) == 3
    for a, b in zip(tracks, back):
        assert a.target_id == b.target_id and a.mode == b.mode
        assert np.array_equal(a.times, b.times)
        assert np.array_equal(a.enu, b.enu)
