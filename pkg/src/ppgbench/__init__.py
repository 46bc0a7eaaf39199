"""Synthetic PPG test videos and a virtual bench for camera heart-rate apps."""
from .bench import (
    TestCase, TestSuite, RunResult, CaseRecord, build_standard_suite, run_suite, run_case,
    generate_report, load_report,
)
from .dut import (
    DegradationConfig, RecoveredSignal, apply_degradation, decode_video, inject_motion,
    read_recovered_csv, write_recovered_csv,
)
from .hr import EstimatorConfig, HrEstimate, estimate_hr, estimate_hr_peaks, estimate_hr_spectral
from .metrics import (
    AccelTrace, PairedMeasurements, classify_accuracy, coefficient_of_variation,
    dominant_frequency, frame_rate_stats, mape, pearson, xcorr_aligned,
)
from .video import (
    ChannelProfile, FrameSpec, MappedSignal, VideoClip, encode_video, map_ppg_to_rgb,
    read_video, render_frame, standard_profiles, write_video,
)
from .waveform import (
    PpgWaveform, SynthConfig, add_noise, load_waveform, resample, save_waveform, synthesize_ppg,
)

__version__ = "0.1.0"
