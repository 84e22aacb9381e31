import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transprop.models import (
    BinaryReadModel,
    InputError,
    ReadSet,
    delta_s_from_distance,
    hamming,
    load_reads,
    load_score_matrix,
    score_matrix_from_reads,
)

# 40-digit evaluations of -L ln 2 - d ln x - (L - d) ln(1 - x) at L=30, p_e=0.01
DS_D0 = -20.19445602159766146158
DS_D30 = 96.86778482165106571155
DS_D5 = -0.68408254772287359939
DS_D6 = 3.21799214705208397304
CROSSING = 5.17531251993686562539


@pytest.fixture
def model():
    return BinaryReadModel(30, 0.01)


def test_mismatch_probability(model):
    assert model.x == pytest.approx(0.0198, rel=1e-15)


def test_closed_form_values(model):
    assert delta_s_from_distance(model, 0) == pytest.approx(DS_D0, rel=1e-13)
    assert delta_s_from_distance(model, 30) == pytest.approx(DS_D30, rel=1e-13)
    assert delta_s_from_distance(model, 5) == pytest.approx(DS_D5, rel=1e-12)
    assert delta_s_from_distance(model, 6) == pytest.approx(DS_D6, rel=1e-12)


def test_sign_change_between_five_and_six(model):
    assert delta_s_from_distance(model, 5) < 0 < delta_s_from_distance(model, 6)
    assert model.threshold_distance() == pytest.approx(CROSSING, rel=1e-12)


def test_distance_out_of_range(model):
    with pytest.raises(ValueError):
        delta_s_from_distance(model, 31)
    with pytest.raises(ValueError):
        delta_s_from_distance(model, -1)


@pytest.mark.parametrize("pe", [0.0, 0.5, 0.7, -0.1])
def test_model_domain(pe):
    with pytest.raises(ValueError):
        BinaryReadModel(30, pe)


def test_uninformative_limit():
    # p_e just below 1/2 makes x -> 1/2 and the score flat in d
    m = BinaryReadModel(30, 0.5 - 1e-9)
    ds = delta_s_from_distance(m, np.arange(31))
    assert np.ptp(ds) < 1e-10


@pytest.mark.parametrize("pe", [0.001, 0.05, 0.2, 0.45])
def test_monotone_in_distance(pe):
    m = BinaryReadModel(30, pe)
    ds = delta_s_from_distance(m, np.arange(31))
    assert np.all(np.diff(ds) > 0)
    np.testing.assert_allclose(np.diff(ds), math.log((1 - m.x) / m.x), rtol=1e-9)


@pytest.mark.parametrize("pe", [0.01, 0.1, 0.3])
@pytest.mark.parametrize("length", [5, 12, 20])
def test_ratio_of_naive_likelihoods(pe, length):
    m = BinaryReadModel(length, pe)
    x = m.x
    for d in range(length + 1):
        f0 = math.comb(length, d) * x**d * (1 - x) ** (length - d)
        f1 = math.comb(length, d) / 2**length
        assert math.exp(delta_s_from_distance(m, d)) == pytest.approx(f1 / f0, rel=1e-10)
        # the binomial factor cancels
        assert math.exp(delta_s_from_distance(m, d)) == pytest.approx(
            (1 / 2**length) / (x**d * (1 - x) ** (length - d)), rel=1e-10
        )


def test_score_matrix_from_reads(model):
    same = "0" * 30
    other = "1" * 30
    s = score_matrix_from_reads(model, ReadSet.from_strings([same, same, other]))
    assert s.delta_s[0, 1] == pytest.approx(DS_D0, rel=1e-13)
    assert s.delta_s[0, 2] == pytest.approx(DS_D30, rel=1e-13)
    assert np.array_equal(s.delta_s, s.delta_s.T)
    one = score_matrix_from_reads(model, ReadSet.from_strings([same]))
    assert one.n == 1 and one.delta_s[0, 0] == 0


def test_read_length_mismatch():
    with pytest.raises(ValueError):
        ReadSet.from_strings(["0101", "010"])
    with pytest.raises(ValueError):
        score_matrix_from_reads(BinaryReadModel(5, 0.1), ReadSet.from_strings(["0101"]))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 70), st.integers(0, 2**32 - 1))
def test_packed_hamming_matches_strings(length, seed):
    rng = np.random.default_rng(seed)
    words = ["".join(rng.choice(["0", "1"], size=length)) for _ in range(5)]
    d = ReadSet.from_strings(words).hamming_matrix()
    for i in range(5):
        for j in range(5):
            assert d[i, j] == hamming(words[i], words[j])
            for k in range(5):
                assert d[i, k] <= d[i, j] + d[j, k]
    assert ReadSet.from_strings(words).to_strings() == words


def test_load_score_matrix(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("0,-2,3\n-2,0,-1\n3,-1,0\n")
    s = load_score_matrix(p)
    assert s.n == 3 and s.delta_s[0, 2] == 3.0


def test_load_score_matrix_header(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("a,b\n0,1\n1,0\n")
    assert load_score_matrix(p, has_header=True).n == 2


def test_load_score_matrix_rejects_inf(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("0,1,2\n1,0,inf\n2,inf,0\n")
    with pytest.raises(InputError, match=r"s\.csv:2: column 3"):
        load_score_matrix(p)


def test_load_score_matrix_symmetrises_small_gaps(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text(f"0,1.0\n{1.0 + 1e-12!r},0\n")
    s = load_score_matrix(p)
    assert s.delta_s[0, 1] == s.delta_s[1, 0] == pytest.approx(1.0 + 5e-13, abs=1e-16)


def test_load_score_matrix_rejects_large_gaps(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("0,1.0\n1.001,0\n")
    with pytest.raises(InputError, match="differs"):
        load_score_matrix(p)


@pytest.mark.parametrize("text, match", [("0,1\n1\n", "expected 2 columns"), ("0,x\nx,0\n", "not a number"), ("", "no data")])
def test_load_score_matrix_errors(tmp_path, text, match):
    p = tmp_path / "s.csv"
    p.write_text(text)
    with pytest.raises(InputError, match=match):
        load_score_matrix(p)


def test_load_reads(tmp_path):
    p = tmp_path / "r.txt"
    p.write_text("# header\n0101\n\n1100\n")
    reads = load_reads(p)
    assert len(reads) == 2 and reads.to_strings() == ["0101", "1100"]


@pytest.mark.parametrize("text, match", [("0101\n012\n", ":2: invalid"), ("0101\n010\n", ":2: read length"), ("\n# x\n", "no data")])
def test_load_reads_errors(tmp_path, text, match):
    p = tmp_path / "r.txt"
    p.write_text(text)
    with pytest.raises(InputError, match=match):
        load_reads(p)
