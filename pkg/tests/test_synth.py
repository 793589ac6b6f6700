"""Synthetic pair generator: construction guarantees and the PCA premise."""
import numpy as np
import pytest

from embalign import io
from embalign.config import PipelineConfig
from embalign.errors import InvalidSpectrum
from embalign.linalg import procrustes
from embalign.orchestrator import StochasticityPolicy, reporting_convergence, run_many
from embalign.synth import (
    generate,
    gold_pairs,
    ground_truth_transforms,
    map_accuracy,
    word_name,
    write_vec_files,
)


def test_zero_noise_full_overlap_is_exact_construction():
    pair = generate(n=50, d=5, noise_sigma=0.0, overlap_fraction=1.0, seed=3)
    q = pair.ground_truth_transform
    for i, j in enumerate(pair.ground_truth_map):
        assert j >= 0
        assert np.allclose(pair.Y[j], pair.X[i] @ q.T, atol=1e-12)


def test_generation_is_bit_deterministic():
    a = generate(n=40, d=6, noise_sigma=0.02, overlap_fraction=0.8, seed=9)
    b = generate(n=40, d=6, noise_sigma=0.02, overlap_fraction=0.8, seed=9)
    assert np.array_equal(a.X, b.X)
    assert np.array_equal(a.Y, b.Y)
    assert np.array_equal(a.ground_truth_map, b.ground_truth_map)
    c = generate(n=40, d=6, noise_sigma=0.02, overlap_fraction=0.8, seed=10)
    assert not np.array_equal(a.Y, c.Y)


def test_invalid_spectrum_cases():
    with pytest.raises(InvalidSpectrum):
        generate(n=10, d=3, anisotropy=np.array([1.0, 2.0, 3.0]))  # increasing
    with pytest.raises(InvalidSpectrum):
        generate(n=10, d=3, anisotropy=np.array([1.0, -1.0, 0.5]))
    with pytest.raises(InvalidSpectrum):
        generate(n=10, d=3, anisotropy=np.array([2.0, 1.0]))  # wrong length
    with pytest.raises(InvalidSpectrum):
        generate(n=10, d=3, overlap_fraction=0.0)
    with pytest.raises(InvalidSpectrum):
        generate(n=10, d=1)


def test_transform_orthonormal_and_recoverable_by_procrustes():
    pair = generate(n=120, d=8, noise_sigma=0.0, seed=5)
    q = pair.ground_truth_transform
    assert np.max(np.abs(q.T @ q - np.eye(8))) < 1e-12
    gt = pair.ground_truth_map
    w = procrustes(pair.X, pair.Y[gt])
    assert np.max(np.abs(w - q.T)) < 1e-8  # row convention: X @ Q.T = Y


def test_overlap_fraction_controls_matched_rows():
    pair = generate(n=100, d=5, overlap_fraction=0.7, seed=6)
    assert int((pair.ground_truth_map >= 0).sum()) == 70
    assert pair.Y.shape == (100, 5)


def test_map_accuracy_scoring():
    gt = np.array([2, 0, 1, -1])
    assert map_accuracy(np.array([2, 0, 1, 9]), gt) == 1.0
    assert map_accuracy(np.array([2, 0, 9, 9]), gt) == pytest.approx(2 / 3)


def test_word_naming_and_vec_round_trip(tmp_path):
    pair = generate(n=12, d=4, seed=7)
    assert word_name(0) == "w000001"
    assert word_name(6) == "w000007"
    write_vec_files(pair, tmp_path / "s.vec", tmp_path / "t.vec")
    src = io.load_vec(tmp_path / "s.vec")
    assert src.words[0] == "w000001"
    assert np.array_equal(src.vectors, pair.X)
    gold = gold_pairs(pair)
    assert len(gold) == 12
    tp = ground_truth_transforms(pair)
    assert np.array_equal(tp.t_xy, pair.ground_truth_transform)


def test_isotropic_spectrum_is_a_negative_control():
    # identical task except for the spectrum: the axis-alignment premise
    # needs anisotropy, so the isotropic variant converges less often
    n, d, runs = 400, 15, 20

    def converged_runs(spectrum):
        pair = generate(
            n=n, d=d, noise_sigma=0.05, overlap_fraction=0.9,
            seed=51, anisotropy=spectrum,
        )
        cfg = PipelineConfig(vocab=n, pca_dim=d, epochs_pca=40, runs=runs, seed=100)
        records = run_many(pair.X, pair.Y, cfg, runs, StochasticityPolicy())
        return int(reporting_convergence(records).sum())

    aniso = converged_runs(np.linspace(float(d), 1.0, d))
    iso = converged_runs(np.full(d, float(d) / 2))
    assert aniso > iso
