import numpy as np
import pytest

from codatables.errors import InvalidSpec
from codatables.robust import detect_outliers
from codatables.synth import GeneratorSpec, axis_shift, contamination_scenario, generate, spiked_covariance
from codatables.tables import CompositionalTable, table_close, table_coords, table_pivot_system


def test_zero_covariance_copies_base():
    base = CompositionalTable([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], ("a", "b"), ("x", "y", "z"))
    g = generate(GeneratorSpec((2, 3), np.zeros((5, 5)), 6, base_table=base))
    for t in g.sample.tables:
        np.testing.assert_allclose(t.cells, table_close(base).cells, rtol=1e-12)
        assert t.row_labels == ("a", "b")
    assert not g.outlier.any()


def test_interaction_neutral():
    sys = table_pivot_system(3, 4)
    cov = np.zeros((11, 11))
    cov[sys.independence_slice, sys.independence_slice] = np.eye(5)
    g = generate(GeneratorSpec((3, 4), cov, 40, seed=2))
    for t in g.sample.tables:
        np.testing.assert_allclose(table_coords(t, sys).odds_ratios, 0, atol=1e-10)


def test_recovery():
    g = generate(contamination_scenario((2, 4), 200, 0.2, 10.0, seed=0))
    assert g.outlier.sum() == 40
    flags = detect_outliers(g.coords, seed=0).flags
    assert flags[g.outlier].mean() >= 0.95
    assert flags[~g.outlier].mean() <= 0.05


def test_ground_truth_distance():
    spec = contamination_scenario(seed=3)
    g = generate(spec)
    sigma = np.sqrt(np.linalg.eigvalsh(spec.coordinate_covariance).max())
    dist = np.linalg.norm(g.coords[g.outlier] - g.center, axis=1)
    assert dist.min() >= 10 - 3 * sigma


def test_coords_match_tables():
    g = generate(contamination_scenario(seed=4, n=20))
    sys = table_pivot_system(2, 4)
    for t, z in zip(g.sample.tables, g.coords):
        np.testing.assert_allclose(table_coords(t, sys).full, z, atol=1e-10)


def test_seed_determinism():
    a, b = generate(contamination_scenario(seed=9)), generate(contamination_scenario(seed=9))
    assert a.sample.cells.tobytes() == b.sample.cells.tobytes()
    np.testing.assert_array_equal(a.outlier, b.outlier)
    c = generate(contamination_scenario(seed=10))
    assert a.sample.cells.tobytes() != c.sample.cells.tobytes()


def test_floor_count():
    assert contamination_scenario(n=199, contamination=0.2).n_outliers == 39
    assert contamination_scenario(n=50, contamination=0.3).n_outliers == 15


def test_positive_tables():
    g = generate(contamination_scenario(shift_norm=40, seed=1))
    assert np.all(g.sample.cells > 0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"coordinate_covariance": -np.eye(3)},
        {"coordinate_covariance": np.array([[1.0, 2, 0], [2, 1, 0], [0, 0, 1]])},
        {"coordinate_covariance": np.eye(4)},
        {"contamination": 0.5},
        {"contamination_shift": np.ones(2)},
        {"n": 0},
    ],
)
def test_invalid_spec(kwargs):
    args = {"shape": (2, 2), "coordinate_covariance": np.eye(3), "n": 10} | kwargs
    with pytest.raises(InvalidSpec):
        GeneratorSpec(**args)


def test_helpers():
    np.testing.assert_array_equal(np.diag(spiked_covariance(3, 2, 0.5)), [4, 0.25, 0.25])
    np.testing.assert_array_equal(axis_shift(3, 10), [0, 10, 0])
