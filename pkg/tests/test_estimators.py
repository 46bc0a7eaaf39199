import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from ppgbench import SynthConfig, synthesize_ppg
from ppgbench.estimators import HeartRateEstimator, PpgVideoEncoder, VirtualDUT


def test_get_params_and_clone():
    est = HeartRateEstimator(method="peak", band_bpm=(40, 200))
    params = est.get_params()
    assert params["method"] == "peak" and params["band_bpm"] == (40, 200)
    copy = clone(est).set_params(channel="R")
    assert copy.channel == "R" and est.channel == "G"


def test_not_fitted():
    with pytest.raises(NotFittedError):
        HeartRateEstimator().predict(np.zeros((1, 300)))


def test_predict_array():
    t = np.arange(600) / 30.0
    X = np.vstack([np.sin(2 * np.pi * f * t) for f in (1.0, 2.5)])
    pred = HeartRateEstimator(fps=30.0).fit().predict(X)
    np.testing.assert_allclose(pred, [60.0, 150.0], atol=0.5)
    assert HeartRateEstimator().fit().score(X, [60.0, 150.0]) > -0.5


def test_pipeline_end_to_end():
    waves = [synthesize_ppg(SynthConfig(heart_rate_bpm=hr, duration_s=12.0)) for hr in (66.0, 132.0)]
    pipe = make_pipeline(PpgVideoEncoder(width=64, height=48), VirtualDUT(), HeartRateEstimator())
    pred = pipe.fit(waves).predict(waves)
    np.testing.assert_allclose(pred, [66.0, 132.0], atol=1.0)


def test_wrong_input_type():
    with pytest.raises(TypeError):
        PpgVideoEncoder().fit().transform([np.zeros(10)])
