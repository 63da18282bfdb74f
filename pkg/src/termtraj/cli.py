"""Command-line pipeline: synth -> ingest -> train -> sample/predict/evaluate.

Every command is deterministic given explicit seeds. Data goes to files,
diagnostics to stderr, and the exit status is nonzero exactly on fatal
errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import evaluate, gmm, ingest, reconstruct, synth
from .config import PipelineConfig, load_config


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="random seed override")
    p.add_argument("--k", type=int, help="number of clusters")
    p.add_argument("--rank", type=int, help="principal deviations per cluster")
    p.add_argument("--tcom", type=int, help="common trajectory length, seconds")
    p.add_argument("--obs-noise", type=float, help="observation noise sigma, meters")
    p.add_argument("--mode", choices=["landing", "takeoff"], help="trajectory mode")


def _config_from(args) -> PipelineConfig:
    cfg = load_config(args.config)
    return cfg.replace(
        seed=getattr(args, "seed", None),
        k=getattr(args, "k", None),
        rank=getattr(args, "rank", None),
        t_com=getattr(args, "tcom", None),
        obs_noise_m=getattr(args, "obs_noise", None),
        mode=getattr(args, "mode", None),
    )


def cmd_synth(args) -> int:
    cfg = _config_from(args)
    spec = synth.GroundTruthSpec(
        k_true=args.k_true,
        t_com=args.tcom or 70,
        mode=cfg.mode,
        noise_m=args.noise,
        dropout=args.dropout,
    )
    model = synth.make_ground_truth(spec, seed=cfg.seed)
    content = synth.emit_radar_stream(model, args.flights, spec, seed=cfg.seed, ref=cfg.airport)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(content)
    if args.model_out:
        gmm.save_model(model, args.model_out)
    _err(f"wrote {args.flights} synthetic flights to {args.out}")
    return 0


def cmd_ingest(args) -> int:
    cfg = _config_from(args)
    try:
        with open(args.measurements, encoding="utf-8") as fh:
            records, diagnostics = ingest.parse_measurements(fh)
    except OSError as exc:
        _err(f"cannot read {args.measurements}: {exc}")
        return 1
    for line_no, reason in diagnostics:
        _err(f"{args.measurements}:{line_no}: skipped: {reason}")
    tracks, report = ingest.build_tracks(
        records,
        cfg.airport,
        gap_threshold=cfg.gap_threshold_s,
        climb_threshold_fpm=cfg.climb_threshold_fpm,
        end_fraction=cfg.end_fraction,
    )
    ingest.write_tracks(tracks, args.out)
    _err(
        f"ingest: {len(records)} records, {len(diagnostics)} malformed lines, "
        f"{report['landing']} landings, {report['takeoff']} takeoffs, "
        f"{report['discard']} discards -> {args.out}"
    )
    return 0


def cmd_train(args) -> int:
    cfg = _config_from(args)
    tracks = ingest.read_tracks(args.tracks)
    modes = {t.mode for t in tracks}
    mode = cfg.mode
    if args.mode is None and len(modes) == 1:
        mode = modes.pop()
    subset = [t for t in tracks if t.mode == mode]
    if not subset:
        _err(f"no {mode} tracks in {args.tracks}")
        return 1
    scaled = [ingest.scale(t, cfg.up_factor) for t in subset]
    t_com = cfg.t_com or reconstruct.select_common_length(scaled)
    trajs = reconstruct.filter_and_fit(
        scaled,
        t_com,
        short_slack=cfg.short_slack_s,
        grid=cfg.lambda_grid(),
        holdout_fraction=cfg.holdout_fraction,
        seed=cfg.seed,
    )
    if not trajs:
        _err("no tracks survived reconstruction")
        return 1

    table = None
    if cfg.k_grid or cfg.r_grid:
        k_grid = cfg.k_grid or (cfg.k,)
        r_grid = cfg.r_grid or (cfg.rank,)
        train, heldout = evaluate.train_test_split(trajs, cfg.split_fraction, cfg.seed)
        k, r, table, model = evaluate.select_hyperparams(
            train,
            heldout,
            k_grid,
            r_grid,
            cfg.objective,
            mode=mode,
            up_factor=cfg.up_factor,
            seed=cfg.seed,
            obs_noise_var=cfg.obs_noise_var,
            m=cfg.prediction_prefix,
            n_samples=cfg.n_samples_eval,
            return_model=True,
        )
        _err(f"selected k={k} r={r} by {cfg.objective}")
    else:
        model = evaluate.fit_pipeline_model(trajs, cfg.k, cfg.rank, mode, cfg.up_factor, seed=cfg.seed)
    gmm.save_model(model, args.out)
    if table is not None and args.score_table:
        evaluate.write_score_table(table, args.score_table)
    pis = ",".join(f"{c.weight:.4f}" for c in model.clusters)
    _err(
        f"train: {len(subset)} tracks, {len(trajs)} reconstructed, t_com={t_com}, "
        f"mode={mode}, k={model.k}, r={model.rank}, pi=[{pis}] -> {args.out}"
    )
    return 0


def cmd_sample(args) -> int:
    cfg = _config_from(args)
    model = gmm.load_model(args.model)
    trajs = gmm.sample(model, args.count, seed=cfg.seed)
    reconstruct.write_trajectories(trajs, args.out)
    _err(f"sampled {args.count} trajectories -> {args.out}")
    return 0


def _read_prefix(path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            e, n, u = (float(v) for v in line.split(","))
            rows.append([e, n, u])
    if not rows:
        raise ValueError(f"no prefix positions in {path}")
    return np.array(rows)


def cmd_predict(args) -> int:
    cfg = _config_from(args)
    model = gmm.load_model(args.model)
    try:
        prefix = _read_prefix(args.prefix)
    except (OSError, ValueError) as exc:
        _err(f"bad prefix file: {exc}")
        return 1
    var = cfg.obs_noise_var
    observed = [(t, prefix[t]) for t in range(len(prefix))]
    resp = gmm.posterior_clusters(model, observed, var)
    top = int(np.argmax(resp))
    mean = gmm.condition(model, top, observed, var).mean
    traj = gmm.devectorize(mean, model.t_com)
    reconstruct.write_trajectories([traj], args.out)

    lateral = np.linalg.norm(traj[:, :2], axis=1)
    closest = int(np.argmin(lateral))
    final = traj[-1]
    bearing = float(np.degrees(np.arctan2(final[0], final[1])) % 360.0)
    report = {
        "mode": model.mode,
        "responsibilities": [float(v) for v in resp],
        "top_cluster": top,
        "closest_approach_step": closest,
        "steps_until_closest_approach": max(closest - (len(prefix) - 1), 0),
        "exit_bearing_deg": bearing,
        "prediction_file": str(args.out),
    }
    report_path = args.report or f"{args.out}.report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1)
        fh.write("\n")
    _err(f"prediction -> {args.out}, report -> {report_path}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config_from(args)
    model = gmm.load_model(args.model)
    heldout = reconstruct.read_trajectories(args.heldout)
    if not heldout:
        _err(f"no trajectories in {args.heldout}")
        return 1
    objective = args.objective or cfg.objective
    if objective == "prediction":
        score = evaluate.prediction_rms(model, heldout, cfg.prediction_prefix, cfg.obs_noise_var)
        rows = [(model.k, model.rank, score)]
    else:
        score = evaluate.generation_score(
            model, heldout, cfg.n_samples_eval, seed=cfg.seed, lateral_bound=cfg.lateral_bound_m
        )
        rows = [(model.k, model.rank, score)]
    evaluate.write_score_table(rows, args.out)
    if args.dump_histograms:
        generated = gmm.sample(model, cfg.n_samples_eval, seed=cfg.seed)
        hists = evaluate.feature_histograms(heldout, generated, lateral_bound=cfg.lateral_bound_m)
        for path in evaluate.write_histograms(hists, args.dump_histograms):
            _err(f"histogram -> {path}")
    _err(f"evaluate[{objective}]: score={score!r} -> {args.out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="termtraj",
        description="Probabilistic terminal-airspace trajectory models from position data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic measurement file")
    p.add_argument("--out", required=True)
    p.add_argument("--flights", type=int, default=100)
    p.add_argument("--k-true", type=int, default=4)
    p.add_argument("--noise", type=float, default=15.0)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--model-out", help="also save the true generating model")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="measurements -> classified canonical tracks")
    p.add_argument("measurements")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="tracks -> trajectory model")
    p.add_argument("tracks")
    p.add_argument("--out", required=True)
    p.add_argument("--score-table", help="write the (k, r) grid scores here")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="draw trajectories from a model")
    p.add_argument("model")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("predict", help="posterior mean from a prefix of positions")
    p.add_argument("model")
    p.add_argument("prefix", help="CSV of east,north,up rows (model frame)")
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="JSON report path (default <out>.report.json)")
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score a model on held-out trajectories")
    p.add_argument("model")
    p.add_argument("heldout", help="trajectory batch file (model frame)")
    p.add_argument("--objective", choices=["generation", "prediction"])
    p.add_argument("--out", required=True)
    p.add_argument("--dump-histograms", help="path prefix for feature histograms")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # fatal: report and signal failure
        _err(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
