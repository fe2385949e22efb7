import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from penal_lab import kernels
from penal_lab.feynman_kac import density_table, mc_log_weights
from penal_lab import potential as P
from penal_lab.penalized import DiffusionSpec, simulate
from penal_lab.sturm import catalogue_profile

needs_cython = pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="extension not built")


def test_default_backend_listed():
    assert kernels.DEFAULT_BACKEND in kernels.BACKENDS
    with pytest.raises(ValueError):
        kernels.backend_module("fortran")


def test_normals_are_standard():
    z = kernels.normals(1, 2000, 50)
    assert abs(z.mean()) < 0.01
    assert abs(z.std() - 1.0) < 0.01


def test_rows_do_not_depend_on_batch_size():
    a = kernels.normals(7, 10, 20)
    b = kernels.normals(7, 3, 20)
    assert np.array_equal(a[:3], b)


@needs_cython
def test_backends_agree_normals():
    a = kernels.normals(3, 50, 40, backend="cython")
    b = kernels.normals(3, 50, 40, backend="python")
    assert np.max(np.abs(a - b)) < 1e-12


@needs_cython
def test_backends_agree_killed_bm():
    v = P.from_spec({"density": {"kind": "formula-id", "params": {"id": "box"}}, "atoms": [[0.5, 1.0]]})
    out = [mc_log_weights(v, 0.0, 1.0, 200, 1e-2, 4, backend=b) for b in ("cython", "python")]
    for x, y in zip(*out):
        assert np.max(np.abs(x - y)) < 1e-10


@needs_cython
def test_backends_agree_em_paths():
    phi = catalogue_profile("ex3.2")
    table = phi.drift_table(-10.0, 10.0, 1e-3)
    x0 = np.zeros(200)
    a = kernels.em_paths(5, x0, 1e-2, 100, table, phi.drift_tail(), backend="cython")
    b = kernels.em_paths(5, x0, 1e-2, 100, table, phi.drift_tail(), backend="python")
    assert np.max(np.abs(a - b)) < 1e-10


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("PENAL_LAB_THREADS", "3")
    assert kernels.thread_count() == 3
    monkeypatch.setenv("PENAL_LAB_THREADS", "junk")
    assert kernels.thread_count() >= 1


def test_results_independent_of_thread_count(monkeypatch):
    v = P.box(1.0, -1.0, 1.0)
    n = 2 * kernels.CHUNK + 17
    res = []
    for nt in ("1", "4"):
        monkeypatch.setenv("PENAL_LAB_THREADS", nt)
        res.append(mc_log_weights(v, 0.0, 0.5, n, 1e-2, 9))
    for x, y in zip(*res):
        assert np.array_equal(x, y)


def test_simulate_deterministic():
    spec = DiffusionSpec.from_phi(catalogue_profile("ex3.2"), 0.0, 1e-2, 1.0)
    a = simulate(spec, 500, 2, times=[0.5, 1.0])
    b = simulate(spec, 500, 2, times=[0.5, 1.0])
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, simulate(spec, 500, 3, times=[0.5, 1.0]).values)


@settings(max_examples=15)
@given(seed=st.integers(0, 2 ** 40), n=st.integers(1, 30), steps=st.integers(1, 30))
def test_normals_prefix_property(seed, n, steps):
    full = kernels.normals(seed, n, steps)
    assert np.array_equal(full[: max(1, n // 2)], kernels.normals(seed, max(1, n // 2), steps))
    assert np.all(np.isfinite(full))


def test_density_table_layout():
    lo, dx, vals = density_table(P.box(2.0, 0.0, 1.0), -1.0, 2.0, 0.5)
    assert (lo, dx) == (-1.0, 0.5)
    assert vals.tolist() == [0.0, 0.0, 2.0, 2.0, 2.0, 0.0, 0.0]
