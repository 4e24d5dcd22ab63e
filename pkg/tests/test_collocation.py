"""Collocation grids: counts, ordering, admissibility."""

import numpy as np
import pytest

from conlab.collocation import (
    gen_collocation_cz3d,
    gen_collocation_damage,
    gen_collocation_plastic,
    grid_1d,
)
from conlab.errors import EmptyRangeError


class TestGrid:
    def test_inclusive_end(self):
        np.testing.assert_allclose(grid_1d((0.0, 0.25, 1.0)), [0, 0.25, 0.5, 0.75, 1.0])

    def test_float_steps_hit_count(self):
        assert len(grid_1d((0.0, 0.01, 1.0))) == 101
        assert len(grid_1d((0.0, 0.02, 1.0))) == 51

    def test_bad_ranges(self):
        with pytest.raises(EmptyRangeError):
            grid_1d((0.0, -0.1, 1.0))
        with pytest.raises(EmptyRangeError):
            grid_1d((1.0, 0.1, 0.0))


class TestPlasticGrid:
    def test_default_row_count(self):
        rows = gen_collocation_plastic()
        assert rows.shape == (520251, 3)

    def test_first_row_and_order(self):
        rows = gen_collocation_plastic((0.0, 0.5, 1.0), (0.0, 0.5, 1.0), (0.0, 0.5, 1.0))
        np.testing.assert_allclose(rows[0], [0.0, 0.0, 0.0])
        # eps outer, eps_p middle, xi_p inner
        np.testing.assert_allclose(rows[1], [0.0, 0.0, 0.5])
        np.testing.assert_allclose(rows[3], [0.0, 0.5, 0.5])

    def test_inadmissible_row_absent(self):
        rows = gen_collocation_plastic((0.0, 0.1, 1.0), (0.0, 0.1, 1.0), (0.0, 0.1, 1.0))
        bad = np.array([0.5, 0.3, 0.2])
        assert not np.any(np.all(np.isclose(rows, bad), axis=1))

    def test_admissibility_holds_everywhere(self):
        rows = gen_collocation_plastic((0.0, 0.05, 1.0), (0.0, 0.05, 1.0), (0.0, 0.05, 1.0))
        assert np.all(rows[:, 2] + 1e-12 >= np.abs(rows[:, 1]))

    def test_symmetric_range_uses_magnitude(self):
        rows = gen_collocation_plastic((-1.0, 0.5, 1.0), (-1.0, 0.5, 1.0), (0.0, 0.5, 1.0))
        assert np.all(rows[:, 2] + 1e-12 >= np.abs(rows[:, 1]))
        assert np.any(rows[:, 1] < 0.0)


class TestDamageGrid:
    def test_default_row_count(self):
        rows = gen_collocation_damage()
        assert rows.shape == (2601, 3)

    def test_coarse_count(self):
        rows = gen_collocation_damage((0.0, 0.1, 1.0), (0.0, 0.1, 1.0))
        assert rows.shape == (121, 3)

    def test_hardening_equals_damage(self):
        rows = gen_collocation_damage()
        assert np.all(rows[:, 1] == rows[:, 2])


class TestCz3dGrid:
    def test_default_row_count(self):
        rows = gen_collocation_cz3d()
        assert rows.shape == (11 ** 3 * 11, 5)

    def test_hardening_equals_damage(self):
        rows = gen_collocation_cz3d((0.0, 0.5, 1.0), (0.0, 0.5, 1.0),
                                    (0.0, 0.5, 1.0), (0.0, 0.25, 1.0))
        assert np.all(rows[:, 3] == rows[:, 4])

    def test_shear_free_slice_matches_1d(self):
        rows3 = gen_collocation_cz3d((0.0, 1.0, 0.0), (0.0, 1.0, 0.0),
                                     (0.0, 0.2, 1.0), (0.0, 0.2, 1.0))
        rows1 = gen_collocation_damage((0.0, 0.2, 1.0), (0.0, 0.2, 1.0))
        np.testing.assert_array_equal(rows3[:, 2:], rows1)
        assert np.all(rows3[:, :2] == 0.0)
