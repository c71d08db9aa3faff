"""
Reading and writing run artifacts.

A run directory holds:

* ``resolved.cfg``: the full config of the run (see config.py).
* ``params.bin``: the network parameters (format below).
* ``distilled.csv``: the distilled set, columns ``class, label,
  coord_0 .. coord_{d-1}``, where ``label`` is the index of the sample
  within its class.
* ``train_log.csv``: one row per (step, class) with the loss terms.
* ``pretrain_log.csv``: the mean diffusion loss per pretraining epoch.
* ``memory/epoch_EEE_{real,gen}[_class_C].csv``: memory snapshots.
* ``run.log``: the log of the command.

The parameter file is ``DIVDPARM``, a little-endian uint32 format
version, a uint32 header length, a UTF-8 JSON header (sorted keys) with
the architecture and array shapes, then each array as little-endian
float64 in header order. Floats in CSV files are written with ``repr``
so that equal runs give byte-identical files.
"""

import os
import csv
import json
import shutil
import struct

import numpy as np

from . import logger
from .base import ArtifactError, LabeledLatents
from .config import dump_config
from .diffusion import DenoiserParams

PARAMS_MAGIC = b'DIVDPARM'
PARAMS_VERSION = 1

RESOLVED_CONFIG = 'resolved.cfg'
PARAMS_FILE = 'params.bin'
DISTILLED_FILE = 'distilled.csv'
TRAIN_LOG_FILE = 'train_log.csv'
PRETRAIN_LOG_FILE = 'pretrain_log.csv'
MEMORY_DIR = 'memory'

TRAIN_LOG_HEADER = ['step', 'epoch', 'class', 'diffusion', 'real_term',
                    'gen_term', 'total']


RUN_FILES = (RESOLVED_CONFIG, PARAMS_FILE, 'run.log')
RUN_SUFFIXES = ('.csv', '.svg')


def clear_run(path, keep=()):
    """ Remove the artifacts of an earlier run from a directory: the
    memory snapshots, the known run files and the top-level CSV and SVG
    files. Other files, and the files in keep, are left alone. Returns the
    number of removed entries.
    """
    keep = set(os.path.abspath(k) for k in keep if k)
    n = 0
    memory = os.path.join(path, MEMORY_DIR)
    if os.path.isdir(memory):
        shutil.rmtree(memory)
        n += 1
    for name in sorted(os.listdir(path)):
        filename = os.path.join(path, name)
        if filename in keep or not os.path.isfile(filename):
            continue
        if name in RUN_FILES or name.endswith(RUN_SUFFIXES):
            os.remove(filename)
            n += 1
    return n


def prepare_output_dir(path, force=False, keep=()):
    """ Create an output directory. An existing directory that already
    holds a run (it has a resolved config) is refused unless force is set,
    in which case the old run's artifacts are removed first. Files in keep
    (the inputs of the new run) survive.
    """
    path = os.path.abspath(path)
    if os.path.isfile(path):
        raise ArtifactError('output path %r is a file' % path)
    if os.path.isfile(os.path.join(path, RESOLVED_CONFIG)):
        if not force:
            raise ArtifactError('%r already holds a run; use --force to overwrite'
                                % path)
        try:
            n = clear_run(path, keep)
        except OSError as err:
            raise ArtifactError('cannot clear the old run in %r: %s' % (path, err))
        logger.info('Removed %i artifact(s) of the previous run in %s', n, path)
    os.makedirs(path, exist_ok=True)
    return path


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    elif isinstance(value, (np.integer, )):
        return str(int(value))
    return str(value)


def write_csv(filename, header, rows):
    """ Write a CSV file with the given header and rows, with floats
    written exactly. Returns the number of rows.
    """
    n = 0
    try:
        with open(filename, 'w', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
                n += 1
    except (IOError, OSError) as err:
        raise ArtifactError('cannot write %r: %s' % (filename, err))
    return n


def read_csv(filename):
    """ Read a CSV file written by write_csv(). Returns (header, rows) with
    rows as lists of strings.
    """
    try:
        with open(filename, 'r', newline='') as f:
            rows = list(csv.reader(f))
    except (IOError, OSError) as err:
        raise ArtifactError('cannot read %r: %s' % (filename, err))
    if not rows:
        raise ArtifactError('%r is empty, expected a header' % filename)
    return rows[0], rows[1:]


## Parameters

def write_params(filename, params):
    """ Write DenoiserParams in the portable binary format.
    """
    arrays = params.arrays
    header = dict(latent_dim=params.latent_dim, n_classes=params.n_classes,
                  n_steps=params.n_steps, n_time_features=params.n_time_features,
                  shapes=[list(a.shape) for a in arrays])
    header_bytes = json.dumps(header, sort_keys=True).encode('utf-8')
    try:
        with open(filename, 'wb') as f:
            f.write(PARAMS_MAGIC)
            f.write(struct.pack('<II', PARAMS_VERSION, len(header_bytes)))
            f.write(header_bytes)
            for a in arrays:
                f.write(np.ascontiguousarray(a, dtype='<f8').tobytes())
    except (IOError, OSError) as err:
        raise ArtifactError('cannot write %r: %s' % (filename, err))


def read_params(filename):
    """ Read DenoiserParams written by write_params().
    """
    try:
        with open(filename, 'rb') as f:
            data = f.read()
    except (IOError, OSError) as err:
        raise ArtifactError('cannot read %r: %s' % (filename, err))
    n_magic = len(PARAMS_MAGIC)
    if data[:n_magic] != PARAMS_MAGIC or len(data) < n_magic + 8:
        raise ArtifactError('%r is not a divdistill parameter file' % filename)
    version, n_header = struct.unpack('<II', data[n_magic:n_magic + 8])
    if version != PARAMS_VERSION:
        raise ArtifactError('%r has unsupported format version %i' %
                            (filename, version))
    pos = n_magic + 8
    try:
        header = json.loads(data[pos:pos + n_header].decode('utf-8'))
    except ValueError as err:
        raise ArtifactError('%r has a corrupt header: %s' % (filename, err))
    pos += n_header
    arrays = []
    for shape in header['shapes']:
        size = int(np.prod(shape)) * 8
        if pos + size > len(data):
            raise ArtifactError('%r is truncated' % filename)
        a = np.frombuffer(data[pos:pos + size], dtype='<f8').reshape(shape)
        arrays.append(a.astype(np.float64))
        pos += size
    if pos != len(data):
        raise ArtifactError('%r has %i trailing bytes' % (filename, len(data) - pos))
    return DenoiserParams(arrays[0::2], arrays[1::2], header['latent_dim'],
                          header['n_classes'], header['n_steps'],
                          header['n_time_features'])


## Labeled latents

def write_distilled(filename, distilled):
    """ Write a LabeledLatents as CSV; ``label`` counts the samples within
    each class.
    """
    d = distilled.dim
    header = ['class', 'label'] + ['coord_%i' % i for i in range(d)]
    seen = {}
    rows = []
    for z, c in zip(distilled.latents, distilled.labels):
        c = int(c)
        k = seen.get(c, 0)
        seen[c] = k + 1
        rows.append([c, k] + [float(v) for v in z])
    return write_csv(filename, header, rows)


def read_distilled(filename):
    """ Read a distilled-set CSV into a LabeledLatents.
    """
    header, rows = read_csv(filename)
    if header[:2] != ['class', 'label']:
        raise ArtifactError('%r is not a distilled-set file' % filename)
    d = len(header) - 2
    try:
        labels = [int(r[0]) for r in rows]
        latents = np.array([[float(v) for v in r[2:]] for r in rows],
                           dtype=np.float64).reshape(len(rows), d)
    except (ValueError, IndexError) as err:
        raise ArtifactError('%r has a malformed row: %s' % (filename, err))
    return LabeledLatents(latents, labels)


## Logs and snapshots

def write_train_log(filename, rows):
    return write_csv(filename, TRAIN_LOG_HEADER, rows)


def write_pretrain_log(filename, history):
    return write_csv(filename, ['epoch', 'diffusion'],
                     [(i + 1, v) for i, v in enumerate(history)])


def snapshot_filename(epoch, kind, key):
    """ The file name of a memory snapshot; key is the class or None.
    """
    if key is None:
        return 'epoch_%03i_%s.csv' % (epoch, kind)
    return 'epoch_%03i_%s_class_%i.csv' % (epoch, kind, key)


def write_memory_snapshots(dirname, snapshots):
    """ Write the memory snapshots of a run, as produced by
    ``pipeline.snapshot_bank()``. Each snapshot is a tuple (epoch, kind,
    key, insertion indices, latents).
    """
    os.makedirs(dirname, exist_ok=True)
    for epoch, kind, key, insertion, latents in snapshots:
        d = latents.shape[1] if latents.ndim == 2 else 0
        header = ['insertion'] + ['coord_%i' % i for i in range(d)]
        rows = [[i] + [float(v) for v in z] for i, z in zip(insertion, latents)]
        write_csv(os.path.join(dirname, snapshot_filename(epoch, kind, key)),
                  header, rows)


def write_resolved_config(dirname, config):
    filename = os.path.join(dirname, RESOLVED_CONFIG)
    try:
        with open(filename, 'wb') as f:
            f.write(dump_config(config).encode())
    except (IOError, OSError) as err:
        raise ArtifactError('cannot write %r: %s' % (filename, err))
    return filename


def save_run(dirname, config, artifacts):
    """ Write all artifacts of a distillation run to a directory.
    """
    write_resolved_config(dirname, config)
    write_params(os.path.join(dirname, PARAMS_FILE), artifacts.params)
    write_distilled(os.path.join(dirname, DISTILLED_FILE), artifacts.distilled)
    write_train_log(os.path.join(dirname, TRAIN_LOG_FILE), artifacts.train_log)
    if artifacts.pretrain_history is not None:
        write_pretrain_log(os.path.join(dirname, PRETRAIN_LOG_FILE),
                           artifacts.pretrain_history)
    write_memory_snapshots(os.path.join(dirname, MEMORY_DIR), artifacts.snapshots)
    logger.info('Run artifacts written to %s', dirname)
