"""Tests for the shared utilities: record store, tables, seeding, process fan-out and error handling."""

import json

import numpy as np
import pandas as pd
import pytest

from optimizer.imfil import OptimizationResult
from utils.caching import RunCache
from utils.error_handling import (DataSourceError, ProblemSizeError, ValidationError, cli_error_handler,
                                  validate_experiment_params)
from utils.parallel import default_jobs, run_parallel
from utils.seeding import derive_seed, make_rng
from utils.tables import median_mad, read_table, write_table


def _square(x):
    return x * x


def test_run_cache_roundtrip(tmp_path):
    """Test set, get, exists, delete and clear"""
    cache = RunCache(tmp_path / 'runs')
    key = {'instance_id': 'n03_000', 'p': 1, 'mode': 'exact'}
    assert cache.get(key) is None
    assert not cache.exists(key)

    path = cache.set(key, {'best_objective': -6.5, 'status': 'ok'})
    assert path.exists()
    assert path.parent == tmp_path / 'runs'
    assert cache.exists(key)
    assert cache.get(key) == {'best_objective': -6.5, 'status': 'ok'}

    # key order does not matter
    assert cache.get({'mode': 'exact', 'p': 1, 'instance_id': 'n03_000'}) is not None
    assert cache.get({**key, 'p': 2}) is None

    assert cache.delete(key)
    assert not cache.delete(key)
    cache.set(key, {})
    cache.set({**key, 'p': 2}, {})
    assert cache.clear() == 2
    assert list((tmp_path / 'runs').iterdir()) == []


def test_run_cache_rejects_bad_files(tmp_path):
    """Test that corrupt or mismatched record files read as absent"""
    cache = RunCache(tmp_path)
    key = {'a': 1}
    path = cache.path_for(key)

    path.write_text('{not json')
    assert cache.get(key) is None
    assert not path.exists()

    path.write_text(json.dumps({'key': 'something else', 'data': {}}))
    assert cache.get(key) is None


def test_write_table_header_and_roundtrip(tmp_path):
    """Test the versioned header line and stable float formatting"""
    path = write_table([{'n': 3, 'value': 0.1 + 0.2}, {'n': 4, 'value': 1.0}], tmp_path / 'sub' / 't.csv',
                       'results')
    lines = path.read_text().splitlines()
    assert lines[0] == '# qlslab results v1'
    assert lines[1] == 'n,value'
    assert lines[2] == '3,0.3'

    df = read_table(path)
    assert list(df.columns) == ['n', 'value']
    assert df['n'].tolist() == [3, 4]


def test_write_table_column_order(tmp_path):
    """Test tuple rows and explicit column order"""
    path = write_table([(1, 'a'), (2, 'b')], tmp_path / 't.csv', 'trace', columns=['eval_index', 'label'])
    assert path.read_text().splitlines()[1] == 'eval_index,label'

    df = pd.DataFrame({'b': [1], 'a': [2]})
    path = write_table(df, tmp_path / 'u.csv', 'x', columns=['a', 'b', 'c'])
    assert path.read_text().splitlines()[1:] == ['a,b,c', '2,1,']


def test_median_mad():
    """Test per-group median and median absolute deviation"""
    df = pd.DataFrame({
        'n': [3, 3, 3, 4, 4],
        'shots': [np.nan] * 5,
        'value': [1.0, 2.0, 10.0, 4.0, 6.0],
    })
    out = median_mad(df, ['n', 'shots'], 'value')
    assert out['n'].tolist() == [3, 4]
    assert out['value_median'].tolist() == [2.0, 5.0]
    assert out['value_mad'].tolist() == [1.0, 1.0]
    assert out['runs'].tolist() == [3, 2]


def test_derive_seed():
    """Test that derived seeds are stable, distinct and 63-bit"""
    a = derive_seed(7, 'n05_001', 1, 'shots', 32, 0)
    assert a == derive_seed(7, 'n05_001', 1, 'shots', 32, 0)
    assert a == derive_seed(np.int64(7), 'n05_001', 1, 'shots', 32, 0)
    assert a != derive_seed(7, 'n05_001', 1, 'shots', 32, 1)
    assert a != derive_seed(8, 'n05_001', 1, 'shots', 32, 0)
    assert 0 <= a < 2 ** 63


def test_make_rng():
    """Test int seeds, SeedSequences and pass-through generators"""
    assert make_rng(5).random() == make_rng(5).random()
    assert make_rng(5).random() != make_rng(6).random()
    gen = make_rng(1)
    assert make_rng(gen) is gen
    seq = np.random.SeedSequence(9)
    assert make_rng(seq).integers(1000) == make_rng(np.random.SeedSequence(9)).integers(1000)


def test_run_parallel_preserves_order():
    """Test that results come back in input order for any process count"""
    args = list(range(7))
    serial = run_parallel(_square, args, jobs=1)
    assert serial == [x * x for x in args]
    assert run_parallel(_square, args, jobs=3) == serial
    assert run_parallel(_square, [], jobs=4) == []


def test_default_jobs(monkeypatch):
    """Test the QLSLAB_JOBS override"""
    monkeypatch.setenv('QLSLAB_JOBS', '3')
    assert default_jobs() == 3
    monkeypatch.setenv('QLSLAB_JOBS', '0')
    assert default_jobs() == 1
    monkeypatch.setenv('QLSLAB_JOBS', 'many')
    assert default_jobs() >= 1
    monkeypatch.delenv('QLSLAB_JOBS')
    assert default_jobs() >= 1


def test_cli_error_handler_exit_codes(capsys):
    """Test the exit code for each error family"""
    @cli_error_handler
    def ok():
        return 0

    @cli_error_handler
    def invalid():
        raise ValidationError("rank must lie in 1..3", field='rank')

    @cli_error_handler
    def too_big():
        raise ProblemSizeError("too many qubits", n=30, limit=20)

    @cli_error_handler
    def missing():
        raise FileNotFoundError("no such file: V.csv")

    @cli_error_handler
    def broken():
        raise RuntimeError("boom")

    assert ok() == 0
    assert invalid() == 2
    assert "rank must lie in 1..3" in capsys.readouterr().err
    assert too_big() == 2
    assert missing() == 1
    assert "V.csv" in capsys.readouterr().err
    assert broken() == 1
    assert "unexpected error" in capsys.readouterr().err


def test_error_attributes():
    """Test that errors carry their message and context"""
    e = DataSourceError("unreadable", source='dir', details={'file': 'x.json'})
    assert e.message == "unreadable"
    assert e.source == 'dir'
    assert str(e) == "unreadable"
    assert ValidationError("bad", field='m').field == 'm'


@pytest.mark.parametrize('params,ok', [
    ({'p_values': [1, 2], 'modes': ['exact', 'shots'], 'shots': [8]}, True),
    ({'p_values': [], 'modes': ['exact']}, False),
    ({'p_values': [0], 'modes': ['exact']}, False),
    ({'p_values': [1], 'modes': ['exact', 'annealed']}, False),
    ({'p_values': [1], 'modes': ['shots'], 'shots': [0]}, False),
    ({'p_values': [1], 'modes': ['exact'], 'budget': 0}, False),
    ({'p_values': [1], 'modes': ['noisy'], 'noise_scales': [-1.0]}, False),
    ({'p_values': [1], 'modes': ['exact'], 'jobs': 0}, False),
])
def test_validate_experiment_params(params, ok):
    """Test experiment parameter validation"""
    is_valid, message = validate_experiment_params(params)
    assert is_valid == ok
    assert (message == "") == ok


def test_optimization_result_trace(tmp_path):
    """Test the per-evaluation trace CSV"""
    result = OptimizationResult(best_point=np.zeros(2), best_value=-1.0, trace=[(0, 0.5), (1, -1.0)])
    path = result.write_trace(tmp_path / 'trace.csv')
    df = read_table(path)
    assert df['eval_index'].tolist() == [0, 1]
    assert df['value'].tolist() == [0.5, -1.0]
