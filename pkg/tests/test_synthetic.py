import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vscale.errors import ValidationError
from vscale.patterns import Pattern, classify
from vscale.synthetic import (
    DYNAMIC_FAMILIES,
    EXPECTED_PATTERN,
    PRESETS,
    Family,
    SyntheticSpec,
    generate,
    preset,
    preset_spec,
)
from vscale.trace import duration, peak

from conftest import GB, MB


def test_same_seed_same_trace():
    spec = SyntheticSpec(Family.CHAOTIC_BURST, 500, 100 * MB, 0.02, seed=7)
    assert generate(spec) == generate(spec)
    assert generate(spec) != generate(SyntheticSpec(Family.CHAOTIC_BURST, 500, 100 * MB, 0.02, seed=8))


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(list(Family)), st.integers(0, 2**31), st.floats(0, 0.02),
       st.floats(60, 3000), st.integers(10**6, 10**11))
def test_family_label_holds(family, seed, noise, dur, pk):
    tr = generate(SyntheticSpec(family, dur, pk, noise, seed))
    expected = Pattern.DYNAMIC if family in DYNAMIC_FAMILIES else Pattern.GROWTH
    assert classify(tr).label is expected
    assert tr.usage.max() <= pk * (1 + noise)
    assert abs(peak(tr) - pk) <= pk * noise + 1


@pytest.mark.parametrize("family", list(Family))
def test_family_label_across_seeds(family):
    expected = Pattern.DYNAMIC if family in DYNAMIC_FAMILIES else Pattern.GROWTH
    for seed in range(100):
        tr = generate(SyntheticSpec(family, 600, GB, 0.02, seed))
        assert classify(tr).label is expected, seed


def test_noiseless_ramp():
    tr = generate(SyntheticSpec(Family.RAMP, 100, GB, 0.0))
    assert np.all(np.diff(tr.usage) >= 0)
    assert tr.usage[-1] == GB


def test_lammps_like_flat():
    tr = generate(SyntheticSpec(Family.STABLE_FLAT, 2321, int(23.7 * MB), 0.01, 0))
    assert classify(tr).label is Pattern.GROWTH
    assert tr.usage.max() <= 23.7 * MB * 1.01
    assert tr.usage.min() >= 23.7 * MB * 0.98


def test_minife_like_dip_then_spike():
    tr = generate(SyntheticSpec(Family.LATE_SPIKE, 352, int(63.7 * GB), 0.01, 0))
    assert classify(tr).label is Pattern.DYNAMIC
    n = len(tr)
    tail = tr.usage[int(0.6 * n):]
    assert tail.argmax() > tail.argmin()
    assert tail.max() == tr.usage.max()


@pytest.mark.parametrize("kwargs", [
    {"duration": 1}, {"duration": 0}, {"peak": 0}, {"noise": -0.1}, {"noise": 1.0},
])
def test_degenerate_specs(kwargs):
    base = dict(family=Family.RAMP, duration=100, peak=GB, noise=0.01)
    base.update(kwargs)
    with pytest.raises(ValidationError):
        generate(SyntheticSpec(**base))


def test_presets_match_table():
    assert len(PRESETS) == 9
    assert sorted(EXPECTED_PATTERN.values()).count("G") == 6
    for name in PRESETS:
        tr = preset(name)
        spec = preset_spec(name)
        assert duration(tr) == pytest.approx(spec.duration)
        assert abs(peak(tr) - spec.peak) <= spec.peak * 0.01 + 1
        assert classify(tr).label.short == EXPECTED_PATTERN[name]
        assert tr.label == name


def test_unknown_preset():
    with pytest.raises(ValidationError):
        preset("hpl")
