# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

# Imports
import os
import unittest
import tempfile
import numpy as np
from starcell.utils.io import compute_and_store


class TestUtilsIO(unittest.TestCase):
    """ Test the computation cache.
    """
    def setUp(self):
        """ Setup test.
        """
        pass

    def tearDown(self):
        """ Run after each test.
        """
        pass

    def test_compute_and_store(self):
        """ Test compute and store decorator
        """
        def gram(a, b):
            return {"ab": np.outer(np.arange(a), np.arange(b))}

        def fast_function(a, b, c, ab=None):
            if ab is None:
                ab = np.outer(np.arange(a), np.arange(b))
            return ab * c

        with tempfile.TemporaryDirectory() as tmpdirname:
            cached_fast_function = compute_and_store(
                gram, tmpdirname)(fast_function)
            res_1 = cached_fast_function(30, 20, 5)
            res_2 = cached_fast_function(30, 20, 5)
            self.assertTrue(len(os.listdir(tmpdirname)) > 0)
        self.assertTrue(np.allclose(res_1, res_2))
        self.assertTrue(np.allclose(res_1, fast_function(30, 20, 5)))

    def test_no_cache(self):
        """ Test the transparent mode.
        """
        def square(a):
            return {"value": a ** 2}

        def identity(a, value=None):
            return value

        self.assertEqual(compute_and_store(square)(identity)(a=3), 9)

    def test_errors(self):
        """ Test the decorator misuses.
        """
        def square(a):
            return {"value": a ** 2}

        def unrelated(b, value=None):
            return value

        def scalar(a):
            return a ** 2

        def identity(a, value=None):
            return value

        self.assertRaises(ValueError, compute_and_store(square), unrelated)
        self.assertRaises(
            ValueError, compute_and_store(scalar)(identity), 2)


if __name__ == "__main__":
    from starcell.utils import setup_logging

    setup_logging(level="debug")
    unittest.main()
