import pytest

from fermi_blockade.errors import DomainError
from fermi_blockade.util import (THREADS_ENV, config_hash, dget, format_float, parallel_map,
                                 recurse_dict, round_floats, thread_count)



def test_dget_should_walk_nested_dicts():
    assert dget({"a": {"b": {"c": 1}}}, "a", "b", "c") == 1
    assert dget({"a": {}}, "a", "missing") is None



def test_recurse_dict_should_replace_in_lists():
    data = {"a": [1, {"b": 2}], "c": 3}
    result = recurse_dict(data, lambda k, v: v == 2, lambda k, v: 20)
    assert result == {"a": [1, {"b": 20}], "c": 3}



def test_floats_should_keep_nine_significant_digits():
    assert format_float(1 / 3) == "0.333333333"
    assert format_float(1e-12) == "1e-12"
    assert round_floats({"x": [2 / 3, 1], "y": {"z": 1 / 7}}) == \
        {"x": [0.666666667, 1], "y": {"z": 0.142857143}}



def test_config_hash_should_ignore_key_order():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})



def test_thread_count_should_come_from_environment(monkeypatch):
    assert thread_count() == 1
    monkeypatch.setenv(THREADS_ENV, "3")
    assert thread_count() == 3
    for bad in ("0", "two"):
        monkeypatch.setenv(THREADS_ENV, bad)
        with pytest.raises(DomainError):
            thread_count()



def test_parallel_map_should_keep_order(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "4")
    assert parallel_map(lambda x: x * x, range(20)) == [x * x for x in range(20)]
