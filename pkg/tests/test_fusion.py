import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctxrec.fusion import (BASELINES, FusionConfig, encode_label, fuse, minmax, parse_label,
                           recommend_top_n, write_recommendations)
from ctxrec.scorers.base import CONTEXT_TAGS


def test_empty_context_equals_base():
    base = np.array([0.3, 0.1, 0.9])
    for norm in ("none", "minmax"):
        cfg = FusionConfig("M", (), norm)
        out = fuse(base, {}, cfg)
        ref = base if norm == "none" else minmax(base)
        assert np.array_equal(out, ref)


def test_raw_sum():
    cfg = FusionConfig("M", ("G", "T"), "none")
    assert fuse(0.2, {"G": 0.3, "T": 0.1}, cfg) == pytest.approx(0.6, abs=1e-15)


def test_missing_or_extra_context():
    cfg = FusionConfig("M", ("G",), "none")
    with pytest.raises(KeyError):
        fuse(0.1, {}, cfg)
    with pytest.raises(KeyError):
        fuse(0.1, {"G": 0.1, "T": 0.2}, cfg)


def test_minmax_extremes():
    v = np.array([3.0, -1.0, 7.25, 2.0])
    out = minmax(v)
    assert out.min() == 0.0 and out.max() == 1.0
    assert out[1] == 0.0 and out[2] == 1.0
    assert np.all(minmax(np.full(4, 2.5)) == 0.0)
    assert minmax(np.zeros(0)).size == 0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=30))
def test_minmax_maps_to_exact_endpoints(xs):
    v = np.array(xs)
    out = minmax(v)
    assert np.all((out >= 0) & (out <= 1))
    if v.max() > v.min():
        assert set(out[v == v.max()]) == {1.0} and set(out[v == v.min()]) == {0.0}


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 100), min_size=1, max_size=25), st.floats(-50, 50),
       st.sampled_from(["none", "minmax"]), st.integers(1, 30))
def test_constant_context_never_changes_list(base, c, norm, n):
    base = np.array(base)
    cand = np.arange(len(base)) * 3 + 1
    without = fuse(base, {}, FusionConfig("M", (), norm))
    with_c = fuse(base, {"T": np.full(len(base), c)}, FusionConfig("M", ("T",), norm))
    a = recommend_top_n(0, cand, without, n)
    b = recommend_top_n(0, cand, with_c, n)
    assert np.array_equal(a.pois, b.pois)


def test_constant_context_does_not_absorb_tiny_base():
    # 7e-51 + 1.0 rounds to 1.0 and would tie with 0.0 + 1.0
    base = np.array([0.0, 7.395428484714537e-51])
    fused = fuse(base, {"T": np.ones(2)}, FusionConfig("M", ("T",), "none"))
    assert np.array_equal(fused, base)
    assert recommend_top_n(0, np.array([1, 4]), fused, 1).pois.tolist() == [4]


def test_top_n_basic():
    cand = np.array([10, 11, 12])       # A, B, C
    rec = recommend_top_n(0, cand, np.array([0.9, 0.5, 0.7]), 2)
    assert rec.pois.tolist() == [10, 12]
    full = recommend_top_n(0, cand, lambda c: -c.astype(float), 10)
    assert full.pois.tolist() == [10, 11, 12]


def test_top_n_tie_goes_to_lower_index():
    cand = np.array([7, 3, 5])
    for _ in range(3):
        rec = recommend_top_n(0, cand, np.array([1.0, 1.0, 0.5]), 3)
        assert rec.pois.tolist() == [3, 7, 5]


def test_top_n_rejects_train_pois():
    with pytest.raises(ValueError, match="training"):
        recommend_top_n(0, [1, 2], np.array([0.1, 0.2]), 1, train_pois=[2])
    with pytest.raises(ValueError):
        recommend_top_n(0, [1, 2], np.array([0.1]), 1)
    assert len(recommend_top_n(0, [], np.zeros(0), 5)) == 0


def test_write_recommendations(tmp_path):
    rec = recommend_top_n(1, [0, 1], np.array([0.25, 0.5]), 2)
    write_recommendations([rec], ["ua", "ub"], ["pa", "pb"], tmp_path / "r.tsv")
    assert (tmp_path / "r.tsv").read_text() == "ub\t1\tpb\t0.5\nub\t2\tpa\t0.25\n"


# ---------------------------------------------------------------- labels

@pytest.mark.parametrize("label,base,ctx", [
    ("M", "M", ()),
    ("N-(ST)", "N", ("S", "T")),
    ("M-(GC)", "M", ("G", "C")),
    ("M-(GT)", "M", ("G", "T")),
    ("GeoSoCa-(G)", None, ("GU",)),
    ("GeoSoCa-(GS)", None, ("GU", "S")),
    ("FCFKDEAMC-(S)", None, ("FCF",)),
    ("FCFKDEAMC-(GT)", None, ("G", "T")),
    ("PFMMGM-(G)", None, ("MGM",)),
    ("PFMMGM-(MG)", "M", ("MGM",)),
    ("M-(G+FCF)", "M", ("G", "FCF")),
    ("X-(T)", None, ("T",)),
])
def test_known_labels(label, base, ctx):
    cfg = parse_label(label)
    assert cfg.base == base and set(cfg.contexts) == set(ctx)


def test_pfmmgm_m_is_plain_pfm():
    assert parse_label("PFMMGM-(M)").canonical().label == "M"


def test_label_canonical_order():
    assert parse_label("N-(TS)").canonical().label == "N-(ST)"
    assert parse_label("FCFKDEAMC-(TSG)").canonical().label == "FCFKDEAMC-(GST)"


@pytest.mark.parametrize("bad", ["Q", "M-(Z)", "M-(GG)", "GeoSoCa-(T)", "M-(", "X"])
def test_bad_labels(bad):
    with pytest.raises(ValueError):
        parse_label(bad)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(["M", "N", None]), st.sets(st.sampled_from(CONTEXT_TAGS), max_size=5))
def test_label_roundtrip_bijective(base, ctx):
    if base is None and not ctx:
        return
    cfg = FusionConfig(base, tuple(sorted(ctx)))
    label = encode_label(cfg)
    back = parse_label(label)
    assert back.base == cfg.base and set(back.contexts) == set(cfg.contexts)
    assert back.canonical() == cfg.canonical()


def test_distinct_configs_distinct_labels():
    import itertools
    seen = {}
    for base in ("M", "N", None):
        for r in range(0, 4):
            for ctx in itertools.combinations(CONTEXT_TAGS, r):
                if base is None and not ctx:
                    continue
                label = FusionConfig(base, ctx).label
                assert label not in seen, (label, seen.get(label), (base, ctx))
                seen[label] = (base, ctx)


def test_fusion_config_validation():
    with pytest.raises(ValueError):
        FusionConfig("Z")
    with pytest.raises(ValueError):
        FusionConfig("M", ("G", "G"))
    with pytest.raises(ValueError):
        FusionConfig("M", (), "zscore")
    with pytest.raises(ValueError):
        FusionConfig(None, ())
    assert set(BASELINES) == {"GeoSoCa", "FCFKDEAMC", "PFMMGM"}
