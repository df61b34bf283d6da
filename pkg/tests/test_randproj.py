import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lazyspca.randproj import ProjectionSpec, density_policy, export_omega, gen_gaussian, gen_very_sparse, generate, import_omega


def test_gaussian_is_seeded_and_scaled():
    spec = ProjectionSpec("gaussian", 50, 8, seed=4)
    a, b = gen_gaussian(spec), gen_gaussian(spec)
    np.testing.assert_array_equal(a.matrix, b.matrix)
    assert a.scale_c == pytest.approx(math.sqrt(8))
    assert not a.matrix.flags.writeable
    other = gen_gaussian(ProjectionSpec("gaussian", 50, 8, seed=5))
    assert not np.array_equal(a.matrix, other.matrix)


def test_columns_do_not_depend_on_l():
    # every column has its own stream, so widening the sketch keeps old columns
    small = gen_gaussian(ProjectionSpec("gaussian", 30, 4, seed=1)).matrix
    wide = gen_gaussian(ProjectionSpec("gaussian", 30, 9, seed=1)).matrix
    np.testing.assert_array_equal(small, wide[:, :4])


def test_gaussian_moments():
    omega = gen_gaussian(ProjectionSpec("gaussian", 4000, 50, seed=0)).matrix
    assert abs(omega.mean()) < 0.01
    assert abs(omega.var() - 1.0) < 0.01


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 1.0), st.integers(0, 2**31))
def test_very_sparse_entries_and_density(density, seed):
    spec = ProjectionSpec("very_sparse", 3000, 10, density, seed)
    pm = gen_very_sparse(spec)
    dense = pm.dense()
    assert set(np.unique(dense)) <= {-1.0, 0.0, 1.0}
    observed = np.count_nonzero(dense) / dense.size
    assert abs(observed - density) < 5 * math.sqrt(density * (1 - density) / dense.size) + 1e-3
    assert pm.scale_c == pytest.approx(math.sqrt(10 * density))


def test_very_sparse_signs_balanced():
    dense = gen_very_sparse(ProjectionSpec("very_sparse", 20000, 20, 0.1, 3)).dense()
    plus, minus = np.sum(dense > 0), np.sum(dense < 0)
    assert abs(plus - minus) < 5 * math.sqrt(plus + minus)


def test_density_policies():
    assert density_policy(100, "aggressive") == pytest.approx(math.log(100) / 100)
    assert density_policy(100, "conservative") == pytest.approx(0.1)
    assert density_policy(2, "aggressive") == pytest.approx(math.log(2) / 2)
    assert density_policy(3, "conservative") <= 1.0
    assert density_policy(1, "conservative") == 1.0
    with pytest.raises(ValueError):
        density_policy(1, "aggressive")
    with pytest.raises(ValueError):
        density_policy(10, "sparse")


@pytest.mark.parametrize(
    "args",
    [("uniform", 10, 3, 1.0), ("gaussian", 0, 3, 1.0), ("gaussian", 10, 1, 1.0), ("very_sparse", 10, 3, 0.0), ("very_sparse", 10, 3, 1.5)],
)
def test_spec_validation(args):
    with pytest.raises(ValueError):
        ProjectionSpec(*args)


def test_l_above_n_warns():
    with pytest.warns(UserWarning):
        ProjectionSpec("gaussian", 3, 5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ProjectionSpec("gaussian", 5, 5)


@pytest.mark.parametrize("kind,density", [("gaussian", 1.0), ("very_sparse", 0.3)])
def test_export_import_round_trip(tmp_path, kind, density):
    spec = ProjectionSpec(kind, 40, 6, density, 2)
    pm = generate(spec)
    path = tmp_path / "omega.mm"
    export_omega(path, pm)
    back = import_omega(path, spec)
    np.testing.assert_array_equal(back.dense(), pm.dense())
    assert back.scale_c == pm.scale_c
    with pytest.raises(ValueError):
        import_omega(path, ProjectionSpec(kind, 41, 6, density, 2))
