"""
The denoising direction field of a network.

At every point z of a regular grid, the arrow is the unit vector from z
toward the clean-latent estimate at a fixed timestep::

    (z_hat - z) / |z_hat - z|,   z_hat = predict_z0(z, t, eps_hat(z, t, c))

The sign is estimate minus point, so arrows point where denoising moves a
latent. A network that predicts zero noise has z_hat = z / sqrt(alpha_bar),
and its arrows are +z / |z|, pointing away from the origin.

Arrows with a zero difference are written as (0, 0). Only the first two
latent coordinates vary; the others are held at zero.
"""

import numpy as np

from .base import ConfigError, DomainError
from .diffusion import denoiser_forward_batch, predict_z0
from .artifacts import write_csv

FIELD_HEADER = ['x', 'y', 'dx', 'dy']


def grid_points(bounds, resolution):
    """ The points of a resolution x resolution grid over bounds
    (xmin, xmax, ymin, ymax), shape (resolution**2, 2), row-major in y.
    """
    xmin, xmax, ymin, ymax = [float(b) for b in bounds]
    if not (xmin <= xmax and ymin <= ymax):
        raise ConfigError('grid bounds must be (xmin, xmax, ymin, ymax)')
    if int(resolution) != resolution or resolution < 0:
        raise ConfigError('grid resolution must be an integer >= 0')
    if resolution == 0:
        return np.zeros((0, 2))
    xs = np.linspace(xmin, xmax, int(resolution))
    ys = np.linspace(ymin, ymax, int(resolution))
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def gradient_field(params, points, t, label, sched):
    """ Evaluate the unit denoising directions at the given 2D points.

    Returns:
        array: shape (n, 4) with columns x, y, dx, dy.
    """
    if not params.is_finite():
        raise DomainError('gradient_field() got non-finite parameters')
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = points.shape[0]
    if n == 0:
        return np.zeros((0, 4))
    z = np.zeros((n, params.latent_dim))
    k = min(2, params.latent_dim)
    z[:, :k] = points[:, :k]
    ts = np.full(n, int(t), dtype=np.int64)
    labels = np.full(n, int(label), dtype=np.int64)
    eps_hat = denoiser_forward_batch(params, z, ts, labels)
    diff = (predict_z0(z, ts, eps_hat, sched) - z)[:, :2]
    if diff.shape[1] < 2:
        diff = np.concatenate([diff, np.zeros((n, 1))], axis=1)
    norms = np.linalg.norm(diff, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    directions = np.where(norms[:, None] > 0, diff / safe[:, None], 0.0)
    return np.concatenate([points, directions], axis=1)


def write_field_csv(filename, field):
    return write_csv(filename, FIELD_HEADER, [[float(v) for v in row] for row in field])


def write_field_svg(filename, field, title='', distilled=None):
    """ Render the field as a self-contained SVG (text kept as text).
    Distilled samples, if given, are drawn on top.
    """
    import matplotlib
    matplotlib.use('Agg')
    import matplotlib.pyplot as plt

    matplotlib.rcParams.update({'svg.fonttype': 'none', 'svg.hashsalt': 'divdistill'})
    fig, ax = plt.subplots(figsize=(6, 6))
    try:
        if len(field):
            ax.quiver(field[:, 0], field[:, 1], field[:, 2], field[:, 3],
                      angles='xy', pivot='mid', color='0.35')
        if distilled is not None and len(distilled):
            ax.scatter(distilled.latents[:, 0], distilled.latents[:, 1], s=12,
                       c=distilled.labels, cmap='tab10', zorder=3)
        ax.set_aspect('equal')
        ax.set_title(title)
        fig.savefig(filename, format='svg', bbox_inches='tight',
                    metadata={'Date': None})
    finally:
        plt.close(fig)


def emit_gradient_field(params, bounds, resolution, t, label, sched,
                        csv_filename, svg_filename=None, distilled=None):
    """ Evaluate the field on a grid and write it as CSV (and SVG).

    Parameters:
        params (DenoiserParams): the network.
        bounds (tuple): (xmin, xmax, ymin, ymax).
        resolution (int): grid points per axis; 0 gives an empty file.
        t (int): the timestep, a small t shows the final denoising moves.
        label (int): the class to condition on.
        sched (VarianceSchedule): the schedule.
        csv_filename (str): where to write the rows.
        svg_filename (str, optional): where to write the rendering.
        distilled (LabeledLatents, optional): samples to overlay.

    Returns:
        array: the field rows (x, y, dx, dy).
    """
    sched.check_step(t)
    field = gradient_field(params, grid_points(bounds, resolution), t, label, sched)
    write_field_csv(csv_filename, field)
    if svg_filename:
        write_field_svg(svg_filename, field, 'class %i, t=%i' % (label, t), distilled)
    return field
