""" Tests for the on-disk artifact formats.
"""

import os
import json
import struct
import tempfile

import numpy as np

from divdistill.testing import run_tests_if_main, raises

from divdistill import ArtifactError, LabeledLatents, DistillConfig
from divdistill.numerics import RngStream
from divdistill.diffusion import init_denoiser
from divdistill.config import load_config
from divdistill.artifacts import (prepare_output_dir, write_params, read_params,
                                  write_distilled, read_distilled, write_csv,
                                  read_csv, write_memory_snapshots,
                                  write_resolved_config, snapshot_filename, clear_run,
                                  PARAMS_MAGIC, RESOLVED_CONFIG)


def test_params_file():
    params = init_denoiser(2, 3, 100, RngStream(0, 1), (5, 4))
    with tempfile.TemporaryDirectory() as dirname:
        filename = os.path.join(dirname, 'params.bin')
        write_params(filename, params)
        data = open(filename, 'rb').read()
        assert data[:8] == PARAMS_MAGIC
        version, n_header = struct.unpack('<II', data[8:16])
        assert version == 1
        header = json.loads(data[16:16 + n_header].decode())
        assert header['shapes'] == [list(a.shape) for a in params.arrays]
        n_floats = sum(a.size for a in params.arrays)
        assert len(data) == 16 + n_header + 8 * n_floats

        params2 = read_params(filename)
        assert params2.hidden == (5, 4) and params2.n_classes == 3
        assert params2.n_steps == 100 and params2.latent_dim == 2
        for a, b in zip(params.arrays, params2.arrays):
            assert a.tobytes() == b.tobytes()

        # Equal params give equal bytes
        write_params(filename + '2', params2)
        assert open(filename + '2', 'rb').read() == data


def test_params_file_corrupt():
    with tempfile.TemporaryDirectory() as dirname:
        filename = os.path.join(dirname, 'params.bin')
        with open(filename, 'wb') as f:
            f.write(b'NOTPARAMS0000000')
        with raises(ArtifactError):
            read_params(filename)
        params = init_denoiser(2, 2, 10, RngStream(0, 1), (3, ))
        write_params(filename, params)
        data = open(filename, 'rb').read()
        with open(filename, 'wb') as f:
            f.write(data[:-8])
        with raises(ArtifactError):
            read_params(filename)
        with open(filename, 'wb') as f:
            f.write(data[:8] + struct.pack('<II', 2, 0))
        with raises(ArtifactError):
            read_params(filename)
        with raises(ArtifactError):
            read_params(os.path.join(dirname, 'missing.bin'))


def test_distilled_csv():
    latents = np.array([[0.1, 2.0], [1 / 3, -4.0], [5.5, 6.25]])
    data = LabeledLatents(latents, [0, 0, 1])
    with tempfile.TemporaryDirectory() as dirname:
        filename = os.path.join(dirname, 'distilled.csv')
        assert write_distilled(filename, data) == 3
        header, rows = read_csv(filename)
        assert header == ['class', 'label', 'coord_0', 'coord_1']
        assert [r[:2] for r in rows] == [['0', '0'], ['0', '1'], ['1', '0']]
        back = read_distilled(filename)
        assert np.array_equal(back.latents, latents)
        assert back.labels.tolist() == [0, 0, 1]


def test_empty_csv_and_bad_files():
    with tempfile.TemporaryDirectory() as dirname:
        filename = os.path.join(dirname, 'x.csv')
        assert write_csv(filename, ['a', 'b'], []) == 0
        assert open(filename).read() == 'a,b\n'
        with open(filename, 'w') as f:
            f.write('')
        with raises(ArtifactError):
            read_csv(filename)
        with open(filename, 'w') as f:
            f.write('a,b\n1,2\n')
        with raises(ArtifactError):
            read_distilled(filename)


def test_prepare_output_dir():
    with tempfile.TemporaryDirectory() as dirname:
        out = os.path.join(dirname, 'runs', 'a')
        assert prepare_output_dir(out) == out
        assert os.path.isdir(out)
        # an empty directory can be reused
        prepare_output_dir(out)
        write_resolved_config(out, DistillConfig())
        with raises(ArtifactError):
            prepare_output_dir(out)
        prepare_output_dir(out, force=True)
        open(os.path.join(dirname, 'file'), 'w').close()
        with raises(ArtifactError):
            prepare_output_dir(os.path.join(dirname, 'file'))


def test_force_clears_old_run():
    with tempfile.TemporaryDirectory() as out:
        write_resolved_config(out, DistillConfig())
        write_memory_snapshots(os.path.join(out, 'memory'),
                               [(5, 'real', 0, [1], np.ones((1, 2)))])
        for name in ('params.bin', 'run.log', 'distilled.csv', 'field_class_0.svg',
                     'notes.txt'):
            open(os.path.join(out, name), 'w').close()
        prepare_output_dir(out, force=True,
                           keep=[os.path.join(out, 'distilled.csv'), None])
        assert sorted(os.listdir(out)) == ['distilled.csv', 'notes.txt']
        # nothing to clear without an earlier run
        prepare_output_dir(out, force=True)
        assert sorted(os.listdir(out)) == ['distilled.csv', 'notes.txt']
        assert clear_run(out) == 1
        assert os.listdir(out) == ['notes.txt']


def test_resolved_config_reproduces():
    config = DistillConfig(epochs=3, lambda_gen=0.016)
    with tempfile.TemporaryDirectory() as dirname:
        filename = write_resolved_config(dirname, config)
        assert os.path.basename(filename) == RESOLVED_CONFIG
        assert load_config(filename) == config
        assert 'lambda_gen = 0.016' in open(filename).read()


def test_memory_snapshots():
    snapshots = [(1, 'real', 0, [3, 5], np.array([[1.0, 2.0], [3.0, 4.0]])),
                 (1, 'gen', None, [], np.zeros((0, 2)))]
    with tempfile.TemporaryDirectory() as dirname:
        write_memory_snapshots(os.path.join(dirname, 'memory'), snapshots)
        name = snapshot_filename(1, 'real', 0)
        assert name == 'epoch_001_real_class_0.csv'
        header, rows = read_csv(os.path.join(dirname, 'memory', name))
        assert header == ['insertion', 'coord_0', 'coord_1']
        assert rows == [['3', '1.0', '2.0'], ['5', '3.0', '4.0']]
        header, rows = read_csv(os.path.join(dirname, 'memory', 'epoch_001_gen.csv'))
        assert rows == []


run_tests_if_main()
