import math

from cache import SimpleCache, cache_sweep_cell, cached_sweep_cell, sweep_cell_key
from sequence_models import Spectrum, WeightSequence
from utils import format_number, write_csv, write_text


def test_format_number():
    assert format_number(None) == ""
    assert format_number(True) == "true"
    assert format_number(3) == "3"
    assert format_number(0.1) == "0.10000000000000001"
    assert format_number(math.inf) == "inf"
    assert format_number(-math.inf) == "-inf"
    assert format_number(math.nan) == "nan"
    assert format_number("holds") == "holds"


def test_format_number_unwraps_numpy_scalars():
    import numpy as np

    assert format_number(np.int64(4)) == "4"
    assert format_number(np.float64(0.5)) == "0.5"


def test_write_csv(tmp_path):
    path = write_csv(tmp_path / "sub" / "t.csv", ["n", "value"], [[1, 0.5], [2, None]])
    assert path.read_text() == "n,value\n1,0.5\n2,\n"


def test_write_text_adds_newline(tmp_path):
    assert write_text(tmp_path / "t.txt", "x").read_text() == "x\n"


def test_sweep_cell_cache(tmp_path):
    store = SimpleCache(tmp_path)
    key = sweep_cell_key("g", Spectrum.linear(), WeightSequence.power(1), [4, 8], 64)
    assert cached_sweep_cell(key, store) is None
    cache_sweep_cell(key, [[4, 0.25, 0.0, 0.0]], store)
    assert cached_sweep_cell(key, store) == [[4, 0.25, 0.0, 0.0]]
    store.clear()
    assert cached_sweep_cell(key, store) is None


def test_cache_keys_separate_models():
    a = sweep_cell_key("g", Spectrum.linear(), WeightSequence.power(1), [4], 64)
    b = sweep_cell_key("g", Spectrum.linear(), WeightSequence.power(0.5), [4], 64)
    assert a != b
