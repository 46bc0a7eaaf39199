"""Command-line entry point: ``ppgbench <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench, dut, hr, metrics, video, waveform
from .exceptions import PpgBenchError

log = logging.getLogger("ppgbench")


def _add_common(p, out_required=False):
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--out", type=Path, required=out_required, help="output path")


def _synth_config(args) -> waveform.SynthConfig:
    return waveform.SynthConfig(
        heart_rate_bpm=args.hr, duration_s=args.duration, sample_rate_hz=args.fs,
        rsa_freq_hz=args.rsa_freq, rsa_depth=args.rsa_depth,
        drift_freq_hz=args.drift_freq, drift_amplitude=args.drift_amplitude,
        powerline_freq_hz=args.powerline_freq, powerline_amplitude=args.powerline_amplitude,
        motion_burst_rate_per_min=args.motion_rate, motion_burst_amplitude=args.motion_amplitude,
        seed=args.seed,
    )


def _add_synth_options(p):
    p.add_argument("--hr", type=float, default=75.0, help="heart rate in bpm")
    p.add_argument("--duration", type=float, default=20.0, help="seconds")
    p.add_argument("--fs", type=float, default=100.0, help="sample rate in Hz")
    p.add_argument("--rsa-freq", type=float, default=0.25)
    p.add_argument("--rsa-depth", type=float, default=0.0)
    p.add_argument("--drift-freq", type=float, default=0.0)
    p.add_argument("--drift-amplitude", type=float, default=0.0)
    p.add_argument("--powerline-freq", type=float, default=0.0)
    p.add_argument("--powerline-amplitude", type=float, default=0.0)
    p.add_argument("--motion-rate", type=float, default=0.0, help="bursts per minute")
    p.add_argument("--motion-amplitude", type=float, default=0.0)
    p.add_argument("--snr-db", type=float, default=None, help="add white noise at this SNR")


def _profile(name: str) -> video.ChannelProfile:
    profiles = {p.name: p for p in video.standard_profiles()}
    if name not in profiles:
        raise PpgBenchError(f"unknown profile {name!r}; choose from {sorted(profiles)}")
    return profiles[name]


def _dut_config(args) -> dut.DegradationConfig:
    if args.drop_mode == "uniform":
        return dut.DegradationConfig.uniform(args.drop_p, jitter_std_ms=args.jitter_ms,
                                             sensor_noise_std=args.sensor_noise, seed=args.seed)
    if args.drop_mode == "hr_dependent":
        return dut.DegradationConfig.hr_dependent(args.base_p, args.slope, jitter_std_ms=args.jitter_ms,
                                                  sensor_noise_std=args.sensor_noise, seed=args.seed)
    return dut.DegradationConfig(jitter_std_ms=args.jitter_ms, sensor_noise_std=args.sensor_noise,
                                 seed=args.seed)


def _add_dut_options(p):
    p.add_argument("--drop-mode", choices=dut.DROP_MODES, default="none")
    p.add_argument("--drop-p", type=float, default=0.0)
    p.add_argument("--base-p", type=float, default=0.05)
    p.add_argument("--slope", type=float, default=0.005, help="drop probability per bpm above 120")
    p.add_argument("--jitter-ms", type=float, default=0.0)
    p.add_argument("--sensor-noise", type=float, default=0.0)


def _add_estimator_options(p):
    p.add_argument("--method", choices=hr.METHODS, default="spectral")
    p.add_argument("--band", type=float, nargs=2, default=(30.0, 240.0), metavar=("LOW", "HIGH"))
    p.add_argument("--channel", choices=("R", "G", "B"), default="G")
    p.add_argument("--naive-timing", action="store_true",
                   help="ignore timestamps and assume a constant frame rate")


def _estimator_config(args) -> hr.EstimatorConfig:
    return hr.EstimatorConfig(args.method, tuple(args.band), args.channel,
                              use_timestamps=not args.naive_timing)


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")
        log.info("wrote %s", out)


def cmd_synth(args):
    wf = waveform.synthesize_ppg(_synth_config(args))
    if args.snr_db is not None:
        wf = waveform.add_noise(wf, args.snr_db, seed=args.seed)
    if args.out is None:
        sys.stdout.write("t_s,value\n")
        for t, v in zip(wf.times, wf.samples):
            sys.stdout.write(f"{t!r},{float(v)!r}\n")
    else:
        waveform.save_waveform(wf, args.out)


def cmd_encode(args):
    if args.waveform:
        wf = waveform.load_waveform(args.waveform)
    else:
        wf = waveform.synthesize_ppg(_synth_config(args))
        if args.snr_db is not None:
            wf = waveform.add_noise(wf, args.snr_db, seed=args.seed)
    profile = _profile(args.profile)
    if args.dither_sigma != profile.dither_sigma:
        profile = video.ChannelProfile(profile.mean, profile.pulse_amplitude, profile.name,
                                       args.dither_sigma)
    spec = video.FrameSpec(args.width, args.height, args.fps)
    mapped = video.map_ppg_to_rgb(wf, profile, spec.fps)
    clip = video.encode_video(mapped, spec, args.dither_sigma, args.seed, n_jobs=args.jobs)
    video.write_video(clip, args.out)
    if args.png_dir:
        video.dump_png_frames(clip, args.png_dir)
    log.info("encoded %d frames to %s", len(clip), args.out)


def cmd_decode(args):
    signal = dut.decode_video(video.read_video(args.video))
    cfg = _dut_config(args)
    signal = dut.apply_degradation(signal, cfg, heart_rate_bpm=args.hr)
    if args.out is None:
        args.out = Path(args.video).with_suffix(".csv")
    dut.write_recovered_csv(signal, args.out)


def cmd_estimate(args):
    signal = dut.read_recovered_csv(args.recovered, nominal_fps=args.fps)
    est = hr.estimate_hr(signal, _estimator_config(args))
    if args.format == "json":
        text = json.dumps({"bpm": est.bpm, "method": est.method, "quality": est.quality}) + "\n"
    else:
        text = f"{est.bpm:.3f}\n"
    _emit(text, args.out)


def cmd_suite_build(args):
    suite = bench.build_standard_suite(args.seed, duration_s=args.duration)
    text = json.dumps(suite.to_dict(), indent=2) + "\n"
    _emit(text, args.out)


def cmd_suite_run(args):
    suite = bench.TestSuite.load(args.suite) if args.suite else bench.build_standard_suite(args.seed)
    result = bench.run_suite(suite, _dut_config(args), _estimator_config(args),
                             repetitions=args.repetitions, seed=args.seed,
                             fixed_videos=args.fixed_videos, n_jobs=args.jobs)
    text = bench.generate_report(result, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        sys.stderr.write(bench.report_summary(result))
    return 0 if result.passed else 1


def cmd_report(args):
    result = bench.load_report(args.report)
    result.verify()
    text = bench.generate_report(result, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)


def cmd_accel(args):
    trace = metrics.read_accel_csv(args.accel)
    dom = metrics.dominant_frequency(trace, tuple(args.band))
    match = dom.matches_bpm(args.bpm, args.tol) if args.bpm is not None else None
    payload = {"freq_hz": dom.freq_hz, "freq_bpm": 60.0 * dom.freq_hz, "bpm": args.bpm,
               "matches": match}
    _emit(json.dumps(payload) + "\n", args.out)
    return 0 if match in (None, True) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppgbench", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a PPG waveform to CSV")
    _add_common(p)
    _add_synth_options(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("encode", help="waveform CSV or synth parameters -> PPGV video")
    _add_common(p, out_required=True)
    _add_synth_options(p)
    p.add_argument("--waveform", type=Path, help="t_s,value CSV (otherwise synthesize)")
    p.add_argument("--profile", default="medium", help="strong | medium | low | very_low")
    p.add_argument("--width", type=int, default=320)
    p.add_argument("--height", type=int, default=240)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--dither-sigma", type=float, default=video.DEFAULT_DITHER_SIGMA)
    p.add_argument("--png-dir", type=Path, help="also dump frames as PNG")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="PPGV video -> recovered-signal CSV")
    _add_common(p)
    p.add_argument("video", type=Path)
    p.add_argument("--hr", type=float, default=None, help="heart rate for hr_dependent drops")
    _add_dut_options(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("estimate", help="recovered-signal CSV -> heart rate")
    _add_common(p)
    p.add_argument("recovered", type=Path)
    p.add_argument("--fps", type=float, default=None, help="nominal fps (default: inferred)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    _add_estimator_options(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("suite", help="build or run a test suite")
    suite_sub = p.add_subparsers(dest="suite_command", required=True)
    b = suite_sub.add_parser("build", help="write the standard 20-case suite as JSON")
    _add_common(b)
    b.add_argument("--duration", type=float, default=bench.STANDARD_DURATION_S)
    b.set_defaults(func=cmd_suite_build)
    r = suite_sub.add_parser("run", help="run a suite through the virtual DUT")
    _add_common(r)
    r.add_argument("--suite", type=Path, help="suite JSON (default: standard suite)")
    r.add_argument("--repetitions", type=int, default=1)
    r.add_argument("--format", choices=("json", "csv", "summary"), default="json")
    r.add_argument("--fixed-videos", action="store_true",
                   help="replay identical videos in every repetition")
    r.add_argument("--jobs", type=int, default=1, help="worker processes")
    _add_dut_options(r)
    _add_estimator_options(r)
    r.set_defaults(func=cmd_suite_run)

    p = sub.add_parser("report", help="re-render a JSON report as csv or summary")
    _add_common(p)
    p.add_argument("report", type=Path)
    p.add_argument("--format", choices=("json", "csv", "summary"), default="summary")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("accel", help="dominant accelerometer frequency vs. a heart rate")
    _add_common(p)
    p.add_argument("accel", type=Path, help="t_s,magnitude CSV")
    p.add_argument("--bpm", type=float, default=None)
    p.add_argument("--tol", type=float, default=0.1, help="match tolerance in Hz")
    p.add_argument("--band", type=float, nargs=2, default=(0.5, 4.0), metavar=("LOW", "HIGH"))
    p.set_defaults(func=cmd_accel)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args) or 0
    except (PpgBenchError, OSError) as exc:
        sys.stderr.write(f"ppgbench: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
