# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
Counter-based random streams keyed on (seed, setup, stream, trial).

Every trial owns its own Philox generator, so a trial draws the same numbers
whatever the chunking or the number of workers.
"""

# Imports
import numpy as np


# Stream identifiers
STREAMS = {
    "setup": 0,
    "warmup": 1,
    "trial": 2
}


def _stream_id(stream):
    if isinstance(stream, str):
        if stream not in STREAMS:
            raise ValueError("Unknown random stream '{0}'.".format(stream))
        return STREAMS[stream]
    return int(stream)


def trial_generator(seed, setup, stream, trial):
    """ Build the generator of one trial.

    Parameters
    ----------
    seed: int
        the master seed.
    setup: int
        the setup index.
    stream: str or int
        the stream name (see STREAMS) or identifier.
    trial: int
        the trial index.

    Returns
    -------
    rng: numpy.random.Generator
        a Philox backed generator.
    """
    sequence = np.random.SeedSequence(
        entropy=int(seed),
        spawn_key=(int(setup), _stream_id(stream), int(trial)))
    return np.random.Generator(np.random.Philox(sequence))


def trial_generators(seed, setup, stream, start, stop):
    """ Build the generators of the trials in [start, stop).
    """
    return [trial_generator(seed, setup, stream, idx)
            for idx in range(start, stop)]


def setup_generator(seed, setup):
    """ Build the generator used to draw a setup (geometry, shadowing,
    surface phases).
    """
    return trial_generator(seed, setup, "setup", 0)


def complex_normal(rng, shape, n_samples=None):
    """ Draw circularly-symmetric standard complex Gaussian samples.

    Parameters
    ----------
    rng: numpy.random.Generator or list of Generator
        a single generator or one generator per trial.
    shape: tuple
        the shape of one sample.
    n_samples: int, default None
        number of samples drawn from a single generator; ignored when
        a list of generators is given.

    Returns
    -------
    samples: array (n_samples, *shape)
        unit variance complex samples, leading axis indexes the trials.
    """
    shape = tuple(shape)
    if isinstance(rng, (list, tuple)):
        real = np.stack([gen.standard_normal((2, ) + shape) for gen in rng])
        return (real[:, 0] + 1j * real[:, 1]) / np.sqrt(2)
    n_samples = 1 if n_samples is None else n_samples
    real = rng.standard_normal((n_samples, 2) + shape)
    return (real[:, 0] + 1j * real[:, 1]) / np.sqrt(2)


def complex_normals(rng, shapes):
    """ Draw several blocks of standard complex Gaussian samples at once.

    Each generator is called once and its draws are split in the requested
    shapes, in order.

    Parameters
    ----------
    rng: list of numpy.random.Generator
        one generator per trial.
    shapes: list of tuple
        the shape of each block.

    Returns
    -------
    blocks: list of array (n_trials, *shape)
        the drawn blocks.
    """
    shapes = [tuple(shape) for shape in shapes]
    sizes = [int(np.prod(shape)) for shape in shapes]
    total = sum(sizes)
    if not isinstance(rng, (list, tuple)):
        rng = [rng]
    real = np.stack([gen.standard_normal((2, total)) for gen in rng])
    flat = (real[:, 0] + 1j * real[:, 1]) / np.sqrt(2)
    blocks, offset = [], 0
    for shape, size in zip(shapes, sizes):
        blocks.append(
            flat[:, offset: offset + size].reshape((len(rng), ) + shape))
        offset += size
    return blocks
