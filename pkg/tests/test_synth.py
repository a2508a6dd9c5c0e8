import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matchillum import datasets
from matchillum.errors import DegenerateError, FormatError
from matchillum.spectral import sensor_response
from matchillum.synth import (
    CombinationFit,
    fit_combination,
    fit_combinations,
    macbeth_candidates,
    synth_rgb,
    write_fits_csv,
)


@pytest.fixture(scope="module")
def candidates():
    return macbeth_candidates(*datasets.macbeth())


def test_candidate_pool(candidates):
    names, C = candidates
    assert C.shape == (31, 19)
    assert names[-1] == "neutral_8_23_d"
    names2, _ = macbeth_candidates(*datasets.macbeth(), neutral="white_9_5_05_d")
    assert names2[-1] == "white_9_5_05_d"
    with pytest.raises(FormatError):
        macbeth_candidates(*datasets.macbeth(), neutral="red")


def test_self_fit(candidates):
    _, C = candidates
    for j in (0, 7, 18):
        f = fit_combination(C[:, j], C)
        assert j in f.indices
        assert f.coeffs[f.indices.index(j)] == pytest.approx(1.0, abs=1e-9)
        assert f.rel_error < 1e-12


def test_exact_mixture(candidates):
    _, C = candidates
    f = fit_combination(0.5 * (C[:, 1] + C[:, 2]), C)
    assert f.rel_error < 1e-12
    assert f.indices == (0, 1, 2, 3)
    assert np.allclose(f.coeffs, [0, 0.5, 0.5, 0], atol=1e-9)


def test_rel_error_recomputes(candidates, rng):
    _, C = candidates
    for t in rng.random((5, 31)):
        f = fit_combination(t, C)
        err = np.linalg.norm(t - f.reflectance(C)) / np.linalg.norm(t)
        assert f.rel_error == pytest.approx(err, abs=1e-12)


def test_exhaustive_against_direct_lstsq(candidates, rng):
    from itertools import combinations

    _, C = candidates
    t = rng.random(31)
    best = min(
        (np.linalg.norm(t - C[:, s] @ np.linalg.lstsq(C[:, s], t, rcond=None)[0]), s)
        for s in map(list, combinations(range(19), 4))
    )
    f = fit_combination(t, C)
    assert f.rel_error == pytest.approx(best[0] / np.linalg.norm(t), rel=1e-9)
    assert list(f.indices) == best[1]


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31))
def test_supersets_never_worse(seed):
    _, C = macbeth_candidates(*datasets.macbeth())
    t = np.random.default_rng(seed).random(31)
    errs = [fit_combination(t, C, size=p).rel_error for p in (1, 2, 3, 4)]
    assert all(errs[i + 1] <= errs[i] + 1e-12 for i in range(3))


def test_zero_target(candidates):
    with pytest.raises(DegenerateError):
        fit_combination(np.zeros(31), candidates[1])


def test_fit_dataclass_validation():
    with pytest.raises(FormatError):
        CombinationFit((1, 1), [1, 2], 0.0)
    with pytest.raises(FormatError):
        CombinationFit((1, 2), [1], 0.0)


def test_synth_rgb_trivial(candidates, camera):
    _, C = candidates
    rgbs = sensor_response(camera, datasets.illuminant("D65"), C).T
    f = fit_combination(C[:, 4], C)
    assert np.allclose(synth_rgb(f, rgbs), rgbs[4], rtol=1e-9)
    assert np.all(synth_rgb(CombinationFit((1, 2), [0.0, 0.0], 0.0), rgbs) == 0)


def test_synth_rgb_linearity(candidates, camera, rng):
    _, C = candidates
    e = datasets.illuminant("A")
    rgbs = sensor_response(camera, e, C).T
    _, sfu = datasets.sfu1995_standin()
    for f in fit_combinations(sfu[:, rng.choice(1995, 50, replace=False)], C):
        direct = sensor_response(camera, e, f.reflectance(C))
        assert np.allclose(synth_rgb(f, rgbs), direct, rtol=1e-12, atol=0)


def test_fits_csv(tmp_path, candidates):
    _, C = candidates
    fits = fit_combinations(C[:, :3], C, size=2)
    p = write_fits_csv(tmp_path / "fits.csv", ["a", "b", "c"], fits)
    lines = p.read_text().splitlines()
    assert lines[0] == "target_id,idx1,idx2,idx3,idx4,c1,c2,c3,c4,rel_error"
    assert len(lines) == 4 and lines[1].startswith("a,")


def test_sfu_coefficient_range(candidates):
    # coefficients are unconstrained; the bulk stays within about +/-3
    _, C = candidates
    _, S = datasets.sfu1995_standin()
    c = np.concatenate([f.coeffs for f in fit_combinations(S, C)])
    assert np.mean(np.abs(c) <= 3) >= 0.98
    assert c.min() < -1 and c.max() > 1
