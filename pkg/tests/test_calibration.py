import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from effsnr.calibration import (DeliverySample, candidate_thresholds, fit_threshold,
                                fit_thresholds, rate_confusion, read_samples_csv, report_rows,
                                transition_windows, write_samples_csv)

snr_lists = st.lists(st.floats(-10, 40, allow_nan=False).map(lambda x: round(x, 3)),
                     min_size=1, max_size=25)


def samples_from(good, bad, mcs=0, mid=()):
    out = [DeliverySample(mcs, s, 1.0, f"g{i}") for i, s in enumerate(good)]
    out += [DeliverySample(mcs, s, 0.2, f"b{i}") for i, s in enumerate(bad)]
    out += [DeliverySample(mcs, s, 0.85, f"m{i}") for i, s in enumerate(mid)]
    return out


def test_sample_validation():
    with pytest.raises(ValueError):
        DeliverySample(0, 10.0, 1.2)
    with pytest.raises(ValueError):
        DeliverySample(0, float("nan"), 0.5)


def test_separable():
    rep = fit_thresholds(samples_from([21, 22, 25], [15, 18, 19]))
    assert rep.thresholds[0] == 20.0
    assert rep.balanced_error[0] == 0.0


def test_indistinguishable():
    vals = [10.0, 12.0, 14.0, 16.0]
    assert fit_thresholds(samples_from(vals, vals)).balanced_error[0] == 0.5


def test_middle_band_excluded():
    rep = fit_thresholds(samples_from([21, 22], [18, 19], mid=[0.0, 50.0]))
    assert rep.thresholds[0] == 20.0 and rep.balanced_error[0] == 0.0


def test_unconstrained_flags():
    rep = fit_thresholds(samples_from([10.0, 12.0], [], mcs=3) + samples_from([], [5.0, 7.0], mcs=4))
    assert rep.thresholds[3] == 9.0 and rep.fits[3].flag == "unconstrained-low"
    assert rep.thresholds[4] == 8.0 and rep.fits[4].flag == "unconstrained-high"
    assert rep.thresholds.flags == {3: "unconstrained-low", 4: "unconstrained-high"}


@given(snr_lists, snr_lists)
def test_matches_exhaustive_scan(good, bad):
    fit = fit_threshold(good, bad)
    tau, err = oracles.threshold_scan_naive(good, bad)
    assert fit.threshold_db == pytest.approx(tau, abs=1e-12)
    assert fit.balanced_error == pytest.approx(err, abs=1e-12)
    assert 0.0 <= fit.balanced_error <= 1.0


@given(snr_lists, snr_lists)
def test_duplication_invariant(good, bad):
    a = fit_threshold(good, bad)
    b = fit_threshold(good * 2, bad * 2)
    assert (a.threshold_db, a.balanced_error) == (b.threshold_db, b.balanced_error)


@given(snr_lists, snr_lists, st.floats(-10, 10))
def test_shift_equivariant(good, bad, c):
    a = fit_threshold(good, bad)
    b = fit_threshold([g + c for g in good], [x + c for x in bad])
    assert b.threshold_db == pytest.approx(a.threshold_db + c, abs=1e-9)
    assert b.balanced_error == pytest.approx(a.balanced_error, abs=1e-9)


@given(snr_lists, snr_lists)
def test_separable_strictly_between(good, bad):
    lo = max(bad)
    good = [g - min(good) + lo + 1.0 for g in good]
    fit = fit_threshold(good, bad)
    assert fit.balanced_error == 0.0
    assert lo < fit.threshold_db <= min(good)


def test_candidates():
    assert candidate_thresholds([3, 1, 1, 2]).tolist() == [1, 1.5, 2, 2.5, 3]


def test_windows_equal_values():
    s = [DeliverySample(0, 12.0, 0.5) for _ in range(6)]
    assert transition_windows(s)[0] == (0.0, 0.0)


def test_windows_uniform():
    x = np.linspace(10, 20, 10001)
    s = [DeliverySample(2, v, 0.5) for v in x]
    w95, w75 = transition_windows(s)[2]
    assert w75 == pytest.approx(5.0, abs=1e-6)
    assert w95 == pytest.approx(9.0, abs=1e-6)


def test_windows_need_transition_samples():
    s = [DeliverySample(0, 1.0 * i, 0.5) for i in range(3)] + \
        [DeliverySample(0, 9.0, 1.0), DeliverySample(0, 1.0, 0.05)]
    assert transition_windows(s)[0] == (None, None)


def test_windows_percentile_interpolation():
    s = [DeliverySample(1, v, 0.3) for v in (1.0, 2.0, 4.0, 8.0)]
    # linear interpolation: p25 = 1.75, p75 = 5.0
    assert transition_windows(s)[1][1] == pytest.approx(3.25)


def test_rate_confusion():
    assert rate_confusion([(10.2, 26.0), (10.7, 65.0)]) == {10.0: (65.0, 26.0)}
    same = rate_confusion([(x, 39.0) for x in (3.5, 4.1, 4.9, 9.0)])
    assert all(b == w for b, w in same.values())
    assert sorted(same) == [3.0, 4.0, 9.0]


def test_csv_roundtrip(tmp_path):
    s = [DeliverySample(3, 12.25, 0.9, "L1"), DeliverySample(11, -1.5, 0.0, "L2")]
    p = tmp_path / "s.csv"
    write_samples_csv(s, p)
    assert read_samples_csv(p) == s
    assert p.read_text().splitlines()[0] == "mcs,link_id,snr_db,prr"


def test_csv_errors(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("mcs,snr_db\n1,2\n")
    with pytest.raises(ValueError, match="columns"):
        read_samples_csv(p)
    p.write_text("mcs,link_id,snr_db,prr\n1,a,2,1.5\n")
    with pytest.raises(ValueError, match="line 2"):
        read_samples_csv(p)


def test_report_rows():
    rep = fit_thresholds(samples_from([21, 22], [18, 19]))
    rows = report_rows(rep)
    assert rows == [{"mcs": 0, "threshold_db": 20.0, "balanced_error": 0.0,
                     "window_5_95_db": None, "window_25_75_db": None, "flag": ""}]
