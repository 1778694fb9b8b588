import numpy as np
import pytest

from qspeech.metrics import apply_phone_map, edit_distance, load_phone_map, per


def full_matrix_edit_distance(a, b):
    """Reference: the complete DP table."""
    m, n = len(a), len(b)
    d = np.zeros((m + 1, n + 1), dtype=int)
    d[:, 0] = np.arange(m + 1)
    d[0, :] = np.arange(n + 1)
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            d[i, j] = min(d[i - 1, j] + 1, d[i, j - 1] + 1,
                          d[i - 1, j - 1] + (a[i - 1] != b[j - 1]))
    return int(d[m, n])


def test_identical_is_zero():
    assert edit_distance(["a", "b", "c"], ["a", "b", "c"]) == 0


def test_empty_hypothesis_all_deletions():
    assert edit_distance([], ["a", "b", "c"]) == 3


def test_known_distances():
    assert edit_distance(list("kitten"), list("sitting")) == 3
    assert edit_distance(list("abc"), list("cba")) == 2


def test_matches_full_dp_oracle():
    rng = np.random.default_rng(0)
    alphabet = list("abcd")
    for _ in range(200):
        a = [alphabet[i] for i in rng.integers(0, 4, size=rng.integers(0, 11))]
        b = [alphabet[i] for i in rng.integers(0, 4, size=rng.integers(0, 11))]
        assert edit_distance(a, b) == full_matrix_edit_distance(a, b)


def test_per_zero_for_exact():
    assert per([(["a", "b"], ["a", "b"]), (["c"], ["c"])]) == 0.0


def test_per_hundred_for_empty_hypotheses():
    assert per([([], ["a", "b"]), ([], ["c"])]) == 100.0


def test_per_weights_by_reference_length():
    # 1 error over 4 reference tokens
    assert per([(["x"], ["a"]), (["b", "c", "d"], ["b", "c", "d"])]) == 25.0


def test_per_rejects_empty_references():
    with pytest.raises(ValueError):
        per([([], [])])


def test_per_invariant_to_order():
    pairs = [(["a"], ["b"]), (["c", "c"], ["c"]), ([], ["d", "d"])]
    assert per(pairs) == per(list(reversed(pairs)))


def test_phone_map(tmp_path):
    p = tmp_path / "map.txt"
    p.write_text("# comment\nao aa\nq\n", encoding="utf-8")
    mapping = load_phone_map(p)
    assert mapping == {"ao": "aa", "q": None}
    assert apply_phone_map(["ao", "q", "iy"], mapping) == ["aa", "iy"]


def test_phone_map_bad_line(tmp_path):
    p = tmp_path / "map.txt"
    p.write_text("a b c\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_phone_map(p)


def test_packaged_timit_map():
    from importlib import resources
    with resources.as_file(resources.files("qspeech").joinpath(
            "data/timit_61to39.txt")) as p:
        mapping = load_phone_map(p)
    # the classic reductions
    assert mapping["zh"] == "sh"
    assert mapping["ux"] == "uw"
    assert mapping["q"] is None
    assert mapping["h#"] == "sil"
    # folding the full 61-phone inventory leaves 39 scoring classes
    inventory = """iy ih eh ey ae aa aw ay ah ao oy ow uh uw ux er ax ix axr ax-h
                   jh ch b d g p t k dx s sh z zh f th v dh m n ng em nx en eng
                   l r w y hh hv el q bcl dcl gcl pcl tcl kcl h# pau epi""".split()
    assert len(inventory) == 61
    folded = {mapping.get(ph, ph) for ph in inventory}
    folded.discard(None)
    assert len(folded) == 39
