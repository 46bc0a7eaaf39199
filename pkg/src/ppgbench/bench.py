"""Test suites, repeated bench runs through a virtual DUT, and JSON/CSV reports."""
from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ._seeding import derive_seed
from .dut import DegradationConfig, apply_degradation, decode_frames
from .exceptions import ConfigurationError, InputError, PpgBenchError, RunError, WriteError
from .hr import EstimatorConfig, estimate_hr
from .metrics import classify_accuracy, coefficient_of_variation, frame_rate_stats, pearson, xcorr_aligned
from .video import ChannelProfile, FrameSpec, iter_frames, map_ppg_to_rgb, standard_profiles
from .waveform import PpgWaveform, SynthConfig, load_waveform, synthesize_ppg

log = logging.getLogger(__name__)

STANDARD_HEART_RATES = (60.0, 80.0, 100.0, 120.0, 180.0)
STANDARD_DURATION_S = 20.0
STANDARD_SYNTH_RATE_HZ = 100.0
DEFAULT_MAX_LAG_S = 1.0
AGGREGATE_RTOL = 1e-12


@dataclass(frozen=True)
class TestCase:
    """One test video: a waveform source, a signal-strength profile and a frame spec."""

    __test__ = False  # not a pytest class

    id: str
    waveform_source: SynthConfig | str
    profile: ChannelProfile
    spec: FrameSpec
    expected_bpm: float
    duration_s: float

    def __post_init__(self):
        if not self.expected_bpm > 0 or not self.duration_s > 0:
            raise ConfigurationError(f"case {self.id}: expected_bpm and duration_s must be > 0")
        src = self.waveform_source
        if isinstance(src, SynthConfig):
            if not math.isclose(src.heart_rate_bpm, self.expected_bpm, rel_tol=1e-9):
                raise ConfigurationError(
                    f"case {self.id}: expected_bpm {self.expected_bpm} != synth heart rate "
                    f"{src.heart_rate_bpm}")
        elif not isinstance(src, (str, Path)):
            raise ConfigurationError(f"case {self.id}: waveform_source must be SynthConfig or a path")

    def load_waveform(self) -> PpgWaveform:
        src = self.waveform_source
        if isinstance(src, SynthConfig):
            return synthesize_ppg(src)
        wf = load_waveform(src)
        n = int(round(self.duration_s * wf.sample_rate_hz))
        if n < len(wf):
            wf = PpgWaveform(wf.samples[:n], wf.sample_rate_hz, wf.label)
        return wf

    def to_dict(self) -> dict:
        src = self.waveform_source
        source = {"synth": src.to_dict()} if isinstance(src, SynthConfig) else {"file": str(src)}
        return {"id": self.id, "waveform_source": source, "profile": self.profile.to_dict(),
                "spec": self.spec.to_dict(), "expected_bpm": self.expected_bpm,
                "duration_s": self.duration_s}

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "TestCase":
        source = d["waveform_source"]
        if "synth" in source:
            src = SynthConfig.from_dict(source["synth"])
        elif "file" in source:
            src = str(Path(base_dir or ".") / source["file"])
        else:
            raise ConfigurationError(f"case {d.get('id')}: waveform_source needs 'synth' or 'file'")
        return cls(str(d["id"]), src, ChannelProfile.from_dict(d["profile"]),
                   FrameSpec(**d["spec"]), float(d["expected_bpm"]), float(d["duration_s"]))


@dataclass(frozen=True)
class TestSuite:
    __test__ = False

    name: str
    cases: tuple

    def __post_init__(self):
        cases = tuple(self.cases)
        ids = [c.id for c in cases]
        if len(set(ids)) != len(ids):
            raise ConfigurationError(f"suite {self.name}: case ids must be unique")
        object.__setattr__(self, "cases", cases)

    def __len__(self):
        return len(self.cases)

    def to_dict(self) -> dict:
        return {"name": self.name, "cases": [c.to_dict() for c in self.cases]}

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "TestSuite":
        return cls(d["name"], tuple(TestCase.from_dict(c, base_dir) for c in d["cases"]))

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "TestSuite":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")), base_dir=path.parent)


def build_standard_suite(seed: int = 0, duration_s: float = STANDARD_DURATION_S,
                         spec: FrameSpec | None = None) -> TestSuite:
    """Five heart rates crossed with the four standard signal-strength profiles."""
    spec = spec or FrameSpec()
    cases = []
    for hr in STANDARD_HEART_RATES:
        for profile in standard_profiles():
            case_id = f"hr{int(hr):03d}_{profile.name}"
            synth = SynthConfig(heart_rate_bpm=hr, duration_s=duration_s,
                                sample_rate_hz=STANDARD_SYNTH_RATE_HZ,
                                seed=derive_seed(int(seed), "suite", case_id))
            cases.append(TestCase(case_id, synth, profile, spec, hr, duration_s))
    return TestSuite("standard-20", tuple(cases))


@dataclass(frozen=True)
class CaseRecord:
    id: str
    repetition: int
    expected_bpm: float
    measured_bpm: float | None
    ape_pct: float | None
    xcorr_r: float | None
    lag_s: float | None
    drop_count: int | None
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class RunResult:
    suite: str
    config_digest: str
    repetitions: int
    cases: list
    aggregates: dict
    passed: bool
    run: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"suite": self.suite, "config_digest": self.config_digest,
                "repetitions": self.repetitions, "run": copy.deepcopy(self.run),
                "cases": [c.to_dict() for c in self.cases],
                "aggregates": copy.deepcopy(self.aggregates), "pass": self.passed}

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        return cls(d["suite"], d["config_digest"], d["repetitions"],
                   [CaseRecord(**c) for c in d["cases"]], d["aggregates"], d["pass"],
                   d.get("run", {}))

    def verify(self, rtol: float = AGGREGATE_RTOL) -> None:
        """Recompute aggregates from the case records and raise if they disagree."""
        fresh = compute_aggregates(self.cases, self.repetitions, self.run.get("bootstrap_seed", 0))
        for key, stored in self.aggregates.items():
            value = fresh.get(key)
            if key == "per_repetition":
                pairs = [(a[k], b[k]) for a, b in zip(stored, value) for k in ("mape_pct", "mean_r")]
            else:
                pairs = [(stored, value)]
            for s, v in pairs:
                if s is None and v is None:
                    continue
                if s is None or v is None or not math.isclose(s, v, rel_tol=rtol):
                    raise InputError(f"aggregate {key!r} mismatch: stored {s}, recomputed {v}")


def _mean_or_none(values):
    return float(np.mean(values)) if len(values) else None


def _cov_or_none(values):
    try:
        return coefficient_of_variation(values)
    except PpgBenchError:
        return None


def compute_aggregates(records, repetitions: int, bootstrap_seed: int = 0) -> dict:
    ok = [r for r in records if r.ok]
    per_rep = []
    for rep in range(repetitions):
        rows = [r for r in ok if r.repetition == rep]
        per_rep.append({"repetition": rep,
                        "mape_pct": _mean_or_none([r.ape_pct for r in rows]),
                        "mean_r": _mean_or_none([r.xcorr_r for r in rows if r.xcorr_r is not None])})
    rep_mapes = [p["mape_pct"] for p in per_rep if p["mape_pct"] is not None]
    rep_rs = [p["mean_r"] for p in per_rep if p["mean_r"] is not None]
    apes = [r.ape_pct for r in ok]
    try:
        ci95 = classify_accuracy(apes, seed=bootstrap_seed).ci95_upper_pct
    except PpgBenchError:
        ci95 = None
    try:
        hr_r = pearson([r.expected_bpm for r in ok], [r.measured_bpm for r in ok])
    except PpgBenchError:
        hr_r = None
    return {
        "mape_pct": _mean_or_none(apes),
        "mape_cov_pct": _cov_or_none(rep_mapes),
        "mean_r": _mean_or_none([r.xcorr_r for r in ok if r.xcorr_r is not None]),
        "r_cov_pct": _cov_or_none(rep_rs),
        "ci95_upper_pct": ci95,
        "hr_pearson_r": hr_r,
        "n_ok": len(ok),
        "n_failed": len(records) - len(ok),
        "per_repetition": per_rep,
    }


def config_digest(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def run_case(case: TestCase, repetition: int, seed: int, dut: DegradationConfig,
             estimator: EstimatorConfig, fixed_videos: bool = False,
             max_lag_s: float = DEFAULT_MAX_LAG_S) -> CaseRecord:
    """Synthesize, map, encode, decode, degrade, estimate and score one case.

    Errors are captured in ``status`` instead of propagating.
    """
    video_rep = 0 if fixed_videos else repetition
    try:
        waveform = case.load_waveform()
        mapped = map_ppg_to_rgb(waveform, case.profile, case.spec.fps)
        clip_seed = derive_seed(int(seed), "video", video_rep, case.id)
        frames = (frame for _, frame in iter_frames(mapped, case.spec, case.profile.dither_sigma, clip_seed))
        recovered = decode_frames(frames, np.arange(len(mapped)) / mapped.fps, mapped.fps)
        dut_seeded = replace(dut, seed=derive_seed(int(dut.seed), int(seed), "dut", repetition, case.id))
        seen = apply_degradation(recovered, dut_seeded, heart_rate_bpm=case.expected_bpm)
        estimate = estimate_hr(seen, estimator)
        ape = 100.0 * abs(estimate.bpm - case.expected_bpm) / case.expected_bpm
        xc = xcorr_aligned(waveform, seen, max_lag_s, channel=estimator.channel)
        drops = frame_rate_stats(seen.timestamps_s, case.spec.fps).drop_count if len(seen) > 1 else None
    except PpgBenchError as exc:
        log.warning("case %s rep %d failed: %s", case.id, repetition, exc)
        return CaseRecord(case.id, repetition, case.expected_bpm, None, None, None, None, None,
                          f"error: {type(exc).__name__}: {exc}")
    return CaseRecord(case.id, repetition, case.expected_bpm, float(estimate.bpm), float(ape),
                      float(xc.r), float(xc.lag_s), drops)


def _run_case_star(args):
    return run_case(*args)


def run_suite(suite: TestSuite, dut: DegradationConfig | None = None,
              estimator: EstimatorConfig | None = None, repetitions: int = 1, seed: int = 0,
              fixed_videos: bool = False, n_jobs: int = 1,
              max_lag_s: float = DEFAULT_MAX_LAG_S) -> RunResult:
    """Run every case ``repetitions`` times and aggregate.

    Seeds for each (repetition, case) are derived from ``seed`` so results do
    not depend on ``n_jobs``. With ``fixed_videos`` every repetition replays
    the videos of repetition 0; DUT degradations are still re-drawn.
    """
    dut = dut or DegradationConfig()
    estimator = estimator or EstimatorConfig()
    if int(repetitions) != repetitions or repetitions < 1:
        raise ConfigurationError(f"repetitions must be a positive integer, got {repetitions}")
    if len(suite) == 0:
        raise ConfigurationError("suite has no cases")
    jobs = [(case, rep, seed, dut, estimator, fixed_videos, max_lag_s)
            for rep in range(repetitions) for case in suite.cases]
    if n_jobs == 1:
        records = [_run_case_star(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs if n_jobs > 0 else None) as pool:
            records = list(pool.map(_run_case_star, jobs, chunksize=1))
    if not any(r.ok for r in records):
        raise RunError(f"all {len(records)} case runs failed; first: {records[0].status}")

    bootstrap_seed = derive_seed(int(seed), "bootstrap")
    run = {
        "seed": int(seed),
        "fixed_videos": bool(fixed_videos),
        "video_mode": "memory-stream",
        "max_lag_s": max_lag_s,
        "bootstrap_seed": bootstrap_seed,
        "dut": dut.to_dict(),
        "estimator": estimator.to_dict(),
    }
    digest = config_digest({"suite": suite.to_dict(), "repetitions": int(repetitions), **run})
    aggregates = compute_aggregates(records, int(repetitions), bootstrap_seed)
    ci95 = aggregates["ci95_upper_pct"]
    passed = ci95 is not None and ci95 < 10.0
    return RunResult(suite.name, digest, int(repetitions), records, aggregates, passed, run)


def report_json(result: RunResult) -> str:
    return json.dumps(result.to_dict(), indent=2) + "\n"


def report_csv(result: RunResult) -> str:
    buf = io.StringIO()
    fields = list(CaseRecord.__dataclass_fields__)
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for rec in result.cases:
        writer.writerow({k: ("" if v is None else v) for k, v in rec.to_dict().items()})
    return buf.getvalue()


def report_summary(result: RunResult) -> str:
    a = result.aggregates

    def fmt(v, spec=".4f"):
        return "n/a" if v is None else format(v, spec)

    lines = [
        f"suite {result.suite}  reps={result.repetitions}  digest={result.config_digest[:12]}",
        f"  cases ok/failed : {a['n_ok']}/{a['n_failed']}",
        f"  MAPE            : {fmt(a['mape_pct'])} %  (CoV {fmt(a['mape_cov_pct'], '.3f')} %)",
        f"  95% upper bound : {fmt(a['ci95_upper_pct'])} %",
        f"  mean xcorr r    : {fmt(a['mean_r'])}  (CoV {fmt(a['r_cov_pct'], '.3f')} %)",
        f"  HR pearson r    : {fmt(a['hr_pearson_r'], '.6f')}",
        f"  verdict         : {'PASS' if result.passed else 'FAIL'} (MAPE < 10% criterion)",
    ]
    return "\n".join(lines) + "\n"


def generate_report(result: RunResult, format: str = "json", path=None) -> str:
    """Render ``result`` as ``json``, ``csv`` or ``summary`` text; write it if ``path`` is given."""
    renderers = {"json": report_json, "csv": report_csv, "summary": report_summary}
    if format not in renderers:
        raise ConfigurationError(f"format must be one of {sorted(renderers)}, got {format!r}")
    text = renderers[format](result)
    if path is not None:
        try:
            Path(path).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise WriteError(f"cannot write report to {path}: {exc}") from exc
    return text


def load_report(path) -> RunResult:
    return RunResult.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
