import json

import numpy as np
import pytest

import escgnn


def cloud(seed, n=40):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, 3)) * np.array([1.0, 0.8, 0.6])


def rotation(seed):
    q, r = np.linalg.qr(np.random.default_rng(seed).normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def test_lazy_walk_is_row_stochastic():
    p = escgnn.lazy_walk(cloud(1))
    assert p.shape == (40, 40)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-14)
    np.testing.assert_allclose(np.diag(p), 0.5)


def test_vector_diffusion_commutes_with_rotation():
    x = cloud(2)
    r = rotation(3)
    q = escgnn.vector_diffusion(x)
    q_rot = escgnn.vector_diffusion(x @ r.T)
    w = np.random.default_rng(4).normal(size=(40, 3))
    lhs = (np.linalg.matrix_power(q_rot, 4) @ (w @ r.T).ravel()).reshape(40, 3)
    rhs = (np.linalg.matrix_power(q, 4) @ w.ravel()).reshape(40, 3) @ r.T
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_scattering_shapes_and_invariance():
    x = cloud(5)
    r = rotation(6)
    s, v = escgnn.scattering(x, J=3)
    s_rot, v_rot = escgnn.scattering(x @ r.T, J=3)
    assert s.shape == (40, 2, 16)
    assert v.shape == (40, 3, 16)
    np.testing.assert_allclose(s, s_rot, atol=1e-12)
    np.testing.assert_allclose(np.einsum("ij,njs->nis", r, v), v_rot, atol=1e-9)


def test_datasets():
    recs = escgnn.diameter_dataset(3, n_points=32, seed=1)
    assert len(recs) == 3
    for rec in recs:
        d = np.max(np.linalg.norm(rec["coords"][:, None] - rec["coords"][None], axis=-1))
        assert rec["target"] == pytest.approx(d)
    vf = escgnn.vectorfield_dataset(2, n_small=24, n_large=96, num_eigs=4, seed=2)
    assert vf[0]["target"].shape == (24, 3)


def test_verify_suite_passes():
    checks = escgnn.verify(seed=7)
    failed = [c["name"] for c in checks if not c["passed"]]
    assert not failed


def test_cli_roundtrip(tmp_path):
    data = tmp_path / "d"
    assert escgnn.cli(["gen-data", "--n-graphs", "10", "--n-points", "24", "--out", str(data)]) == 0
    manifest = json.loads((data / "manifest.json").read_text())
    assert manifest["N"] == 10
    assert escgnn.cli(["train", "--data", str(data), "--epochs-max", "2", "--out", str(tmp_path / "m.bin"),
                       "--metrics", str(tmp_path / "m.csv")]) == 0
    assert (tmp_path / "m.csv").read_text().splitlines()[0] == escgnn.METRICS_HEADER
    assert escgnn.cli(["train", "--data", str(tmp_path / "missing"), "--out", "x"]) == 2


def test_errors_are_raised():
    with pytest.raises(escgnn.EscgnnError):
        escgnn.lazy_walk(np.zeros((4, 3)), k=2)
