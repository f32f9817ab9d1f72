"""Smoke tests for the Python module against numpy references."""

import numpy as np
import pytest

import flora


def test_mode_products_match_einsum():
    rng = np.random.default_rng(7)
    t = rng.standard_normal((3, 4, 2))
    u = rng.standard_normal((5, 4))
    got = flora.mode_n_product(t, u, 1)
    expected = np.einsum("ijk,bj->ibk", t, u)
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_unfold_fold_roundtrip():
    rng = np.random.default_rng(8)
    t = rng.standard_normal((2, 3, 4))
    for mode in range(3):
        m = flora.mode_n_unfold(t, mode)
        assert m.shape == (t.shape[mode], t.size // t.shape[mode])
        back = flora.mode_n_fold(m, mode, list(t.shape))
        np.testing.assert_array_equal(back, t)


def test_tucker_adapter_init_and_reconstruct():
    adapter = flora.init_tucker([6, 5, 3, 3], [2, 2, 1, 1], 4.0, 17)
    assert adapter.ranks == [2, 2, 1, 1]
    assert adapter.parameter_count() == 4 + 12 + 10 + 3 + 3
    assert flora.frobenius_norm(adapter.reconstruct()) == 0.0

    # reconstruction equals an einsum over the core and factors
    target = flora.random_tucker_tensor([4, 4, 3, 3], [2, 2, 1, 1], 3)
    assert target.shape == (4, 4, 3, 3)


def test_svd_invariants_and_pinv():
    rng = np.random.default_rng(9)
    a = rng.standard_normal((6, 4))
    u, sigma, v = flora.svd(a)
    np.testing.assert_allclose(u.T @ u, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(v.T @ v, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(u @ np.diag(sigma) @ v.T, a, atol=1e-10)
    np.testing.assert_allclose(sigma, np.linalg.svd(a, compute_uv=False), atol=1e-10)

    pinv = flora.pseudo_inverse(a)
    np.testing.assert_allclose(pinv, np.linalg.pinv(a), atol=1e-9)


def test_amplification_factor_diag_example():
    w = np.diag([3.0, 4.0])
    assert flora.amplification_factor(w, w, 2)["factor"] == 1.0
    assert flora.amplification_factor(w, w, 1)["factor"] == 1.25


def test_param_count_examples():
    assert flora.param_count("conv", [64, 64, 3], 4, 2, "flora") == 588
    assert flora.param_count("conv", [64, 64, 3], 4, 0, "lora") == 1536
    assert flora.param_count("linear", [128, 128], 8, 0, "flora") == 2112
    assert flora.param_count("linear", [128, 128], 8, 0, "lora") == 2048


def test_optimal_core_identity():
    rng = np.random.default_rng(10)
    target = rng.standard_normal((4, 4))
    g = flora.optimal_core(np.eye(4), np.eye(4), target)
    np.testing.assert_allclose(g, target, atol=1e-10)


def test_lora_delta_and_merge():
    rng = np.random.default_rng(11)
    a = rng.standard_normal((5, 2))
    b = rng.standard_normal((4, 2))
    np.testing.assert_allclose(flora.lora_delta_linear(a, b), b @ a.T, atol=1e-12)

    base = rng.standard_normal((4, 5))
    delta = rng.standard_normal((4, 5))
    np.testing.assert_allclose(flora.merge(base, delta, 0.4), base + 0.4 * delta, atol=1e-15)


def test_flt1_roundtrip(tmp_path):
    rng = np.random.default_rng(12)
    t = rng.standard_normal((2, 3, 4))
    path = str(tmp_path / "t.flt")
    flora.write_flt1(path, t)
    np.testing.assert_array_equal(flora.read_flt1(path), t)
    with pytest.raises(RuntimeError):
        (tmp_path / "bad.flt").write_bytes(b"XXXX")
        flora.read_flt1(str(tmp_path / "bad.flt"))


def test_locality_summary():
    report = flora.locality_dispersion(2, 2, 3)
    assert report["pair_count"] == 48
    assert report["max_separation"] == 1
    assert report["channel_row_stride"] == 3
    assert flora.locality_dispersion(4, 4, 1)["pair_count"] == 0


def test_recovery_drives_loss_down():
    out = flora.run_recovery(
        "linear", [8, 8], method="flora", r=2, steps=800, record_every=100,
        seed=7, target_ranks=[2, 2],
    )
    assert not out["diverged"]
    records = out["records"]
    assert records[0][1] > out["records"][-1][1]  # loss shrank
    assert records[0][2] == 0.0  # step-0 update is zero
    assert out["final_rel_error"] < 0.1
    assert out["param_count"] == 36


def test_gradcheck_grid():
    results = flora.gradcheck(h=1e-5, tol=1e-6)
    assert len(results) == 8
    assert all(r["passed"] for r in results)
