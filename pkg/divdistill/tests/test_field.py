""" Tests for the denoising direction field.
"""

import os
import tempfile

import numpy as np

from divdistill.testing import run_tests_if_main, raises

from divdistill import ConfigError, DomainError, StepRangeError, LabeledLatents
from divdistill.numerics import RngStream
from divdistill.diffusion import make_schedule, init_denoiser
from divdistill.artifacts import read_csv
from divdistill.field import (grid_points, gradient_field, emit_gradient_field,
                              FIELD_HEADER)


def zero_net(latent_dim=2, n_classes=2, n_steps=100):
    params = init_denoiser(latent_dim, n_classes, n_steps, RngStream(0, 1), (6, ))
    return params.with_arrays([np.zeros_like(a) for a in params.arrays])


def test_grid_points():
    pts = grid_points((-1, 1, 0, 2), 3)
    assert pts.shape == (9, 2)
    assert pts[0].tolist() == [-1, 0] and pts[2].tolist() == [1, 0]
    assert pts[-1].tolist() == [1, 2]
    assert grid_points((-1, 1, -1, 1), 0).shape == (0, 2)
    with raises(ConfigError):
        grid_points((1, -1, 0, 1), 3)
    with raises(ConfigError):
        grid_points((-1, 1, -1, 1), -2)


def test_zero_net_points_away_from_origin():
    # With zero predicted noise the clean estimate is z / sqrt(alpha_bar),
    # which lies further out along z.
    sched = make_schedule(100)
    params = zero_net()
    points = np.array([[3.0, 4.0], [-1.0, 0.0], [0.0, 0.0]])
    field = gradient_field(params, points, 50, 1, sched)
    assert field.shape == (3, 4)
    assert np.allclose(field[:, :2], points)
    assert np.allclose(field[0, 2:], [0.6, 0.8])
    assert np.allclose(field[1, 2:], [-1.0, 0.0])
    assert field[2, 2:].tolist() == [0.0, 0.0]


def test_field_arrows_are_unit_or_zero():
    sched = make_schedule(100)
    params = init_denoiser(2, 3, 100, RngStream(2, 1), (8, 8))
    field = gradient_field(params, grid_points((-5, 5, -5, 5), 7), 10, 2, sched)
    norms = np.linalg.norm(field[:, 2:], axis=1)
    assert np.all((np.abs(norms - 1) < 1e-9) | (norms == 0))


def test_field_in_higher_dimensions():
    sched = make_schedule(100)
    params = zero_net(latent_dim=4)
    field = gradient_field(params, [[1.0, 1.0]], 5, 0, sched)
    assert np.allclose(field[0, 2:], [2 ** -0.5, 2 ** -0.5])


def test_field_errors():
    sched = make_schedule(100)
    params = zero_net()
    bad = params.with_arrays([a + np.nan for a in params.arrays])
    with raises(DomainError):
        gradient_field(bad, [[1.0, 0.0]], 5, 0, sched)
    with tempfile.TemporaryDirectory() as dirname:
        with raises(StepRangeError):
            emit_gradient_field(params, (-1, 1, -1, 1), 3, 0, 0, sched,
                                os.path.join(dirname, 'f.csv'))


def test_emit_gradient_field():
    sched = make_schedule(100)
    params = init_denoiser(2, 2, 100, RngStream(0, 1), (6, ))
    distilled = LabeledLatents([[1.0, 1.0], [-1.0, -1.0]], [0, 1])
    with tempfile.TemporaryDirectory() as dirname:
        csv_name = os.path.join(dirname, 'field.csv')
        svg_name = os.path.join(dirname, 'field.svg')
        field = emit_gradient_field(params, (-2, 2, -2, 2), 4, 10, 1, sched,
                                    csv_name, svg_name, distilled)
        header, rows = read_csv(csv_name)
        assert header == FIELD_HEADER and len(rows) == 16
        assert np.allclose(np.array(rows, dtype=float), field)
        svg = open(svg_name, 'rb').read().decode()
        assert '<svg' in svg and 'class 1, t=10' in svg

        # resolution 0 gives a header-only file
        emit_gradient_field(params, (-2, 2, -2, 2), 0, 10, 1, sched, csv_name)
        assert open(csv_name).read() == 'x,y,dx,dy\n'


run_tests_if_main()
