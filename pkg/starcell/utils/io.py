# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
Caching of expensive deterministic computations.
"""

# Imports
import inspect
from joblib import Memory
from logging import getLogger

logger = getLogger("starcell")


def compute_and_store(func, cachedir=None):
    """ Decorator allowing to compute and store a function's output to
    access them faster on the next calls of the wrapped function.

    Notes
    -----
    The decorator input function receives, by name, the arguments it shares
    with the decorated function and must return a dictionary: its items are
    passed as extra keyword arguments to the decorated function.

    Parameters
    ----------
    func: callable
        function to cache.
    cachedir: str, default None
        the path of the base directory to use as a data store or None.
        If None is given, no caching is done and the Memory object is
        completely transparent.

    Returns
    -------
    decorator: callable
        the decorated function that can use the cached function outputs.
    """
    memory = Memory(cachedir, verbose=0)
    cached_func = memory.cache(func)
    params = list(inspect.signature(func).parameters)

    def decorate(wrapped_func):
        signature = inspect.signature(wrapped_func)
        missing = [name for name in params
                   if name not in signature.parameters]
        if len(missing) > 0:
            raise ValueError(
                "The decorator input function and the decorated function "
                "must have overlaping arguments: {0} missing.".format(
                    missing))

        def wrapped(*args, **kwargs):
            bound = signature.bind_partial(*args, **kwargs)
            bound.apply_defaults()
            cached_kwargs = dict(
                (name, bound.arguments[name]) for name in params)
            logger.debug("cached call of {0}".format(func.__name__))
            stored = cached_func(**cached_kwargs)
            if not isinstance(stored, dict):
                raise ValueError(
                    "The decorator input function must also returns a "
                    "dictionnary containing the items to be stored.")
            kwargs.update(stored)
            return wrapped_func(*args, **kwargs)
        return wrapped

    return decorate
