#!/usr/bin/env python3
"""
Test suite for eigensolution, truncation control and spectral patterns
"""

import os
import sys

import numpy as np
import pytest

# Add the parent directory to the path to import our module
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.rabilab.exceptions import (
    ContractViolationError,
    ConvergenceError,
    DimensionError,
    ValidationError,
)
from src.rabilab.hamiltonians import ModelKind, h_qr, h_tilted, parity, parity_transformed
from src.rabilab.operators import ModelParams, OperatorMatrix, Structure
from src.rabilab.spectra import (
    SectorSpectrum,
    SpectrumResult,
    TruncationSpec,
    converged_spectrum,
    degeneracy_gaps,
    detect_susy,
    dimension_heuristic,
    eigensolve,
    fermion_number,
    merge_sectors,
    parity_labels,
    sector_decompose,
)


class TestTruncationSpec:
    """Test truncation schedule validation and growth"""

    @pytest.mark.parametrize("kwargs", [
        {"initial_dim": 4},
        {"growth_factor": 1.0},
        {"initial_dim": 64, "max_dim": 32},
        {"level_tol": 0.0},
    ])
    def test_invalid(self, kwargs):
        """Test unusable schedules are rejected"""
        with pytest.raises(ValidationError):
            TruncationSpec(**kwargs)

    def test_next_dim(self):
        """Test growth is geometric, always advances and stops at max_dim"""
        trunc = TruncationSpec(initial_dim=8, growth_factor=1.01, max_dim=100)
        assert trunc.next_dim(8) == 9
        assert TruncationSpec().next_dim(32) == 48
        assert trunc.next_dim(99) == 100
        assert trunc.next_dim(100) == 100

    def test_heuristic(self):
        """Test the starting dimension 16 (g/w_c)^2 + 60"""
        assert dimension_heuristic(ModelParams(omega_a=1.0, omega_c=1.0)) == 60
        assert dimension_heuristic(ModelParams(omega_a=1.0, omega_c=1.0, g=3.0)) == 204
        assert dimension_heuristic(ModelParams(omega_a=1.0, omega_c=2.0, g=1.0)) == 64


class TestEigensolve:
    """Test the dense hermitian eigensolver"""

    def test_ascending(self):
        """Test eigenvalues come back ascending with orthonormal vectors"""
        h = OperatorMatrix(np.array([[2.0, 1.0], [1.0, 2.0]]), Structure.HERMITIAN)
        values, vectors = eigensolve(h, 2)
        assert np.allclose(values, [1.0, 3.0])
        assert np.allclose(vectors.conj().T @ vectors, np.eye(2))

    def test_requires_hermitian_flag(self):
        """Test an unflagged matrix is refused even if it is symmetric"""
        with pytest.raises(ContractViolationError):
            eigensolve(OperatorMatrix(np.eye(3)), 1)

    @pytest.mark.parametrize("k", [0, 5, 1.5])
    def test_bad_k(self, k):
        """Test k must be an integer in [1, dim]"""
        with pytest.raises(ValidationError):
            eigensolve(OperatorMatrix(np.eye(4), Structure.HERMITIAN), k)

    def test_residual_bound(self):
        """Test |H v - e v| <= 1e-10 |H| for a random 50x50 hermitian matrix"""
        rng = np.random.default_rng(7)
        raw = rng.normal(size=(50, 50)) + 1j * rng.normal(size=(50, 50))
        h = OperatorMatrix(0.5 * (raw + raw.conj().T), Structure.HERMITIAN)
        values, vectors = eigensolve(h, 50)
        residual = h.entries @ vectors - vectors * values
        scale = np.linalg.norm(h.entries, 2)
        assert np.max(np.linalg.norm(residual, axis=0)) <= 1e-10 * scale

    def test_two_level(self):
        """Test the 2x2 qubit block at g = 0 has levels -/+ w_a/2 shifted by w_c/2"""
        params = ModelParams(omega_a=1.0, omega_c=1.0)
        values, _ = eigensolve(h_qr(params, 2), 2)
        assert np.allclose(values, [0.0, 1.0])


class TestSectors:
    """Test sector decomposition and merging"""

    def test_leak_detected(self):
        """Test a Hamiltonian that breaks the parity is refused"""
        params = ModelParams(omega_a=0.5, omega_c=1.0, g=1.0)
        with pytest.raises(ContractViolationError, match="does not commute"):
            sector_decompose(h_tilted(params, 12), parity(12))

    def test_size_mismatch(self):
        """Test Hamiltonian and parity must agree in size"""
        params = ModelParams(omega_a=0.5, omega_c=1.0)
        with pytest.raises(DimensionError):
            sector_decompose(h_qr(params, 6), parity(7))

    def test_sectors_partition_spectrum(self):
        """Test the two sectors together give the full spectrum"""
        params = ModelParams(omega_a=0.7, omega_c=1.0, g=0.9)
        h = h_qr(params, 16)
        sectors = sector_decompose(h, parity(16))
        assert len(sectors["plus"].values) == len(sectors["minus"].values) == 16
        combined = np.sort(np.concatenate([sectors["plus"].values, sectors["minus"].values]))
        assert np.allclose(combined, np.linalg.eigvalsh(h.entries), atol=1e-10)

    def test_non_diagonal_parity(self):
        """Test the eigenbasis path used for P~"""
        free = OperatorMatrix(np.kron(np.eye(2), np.diag([0.5, 1.5, 2.5, 3.5])),
                              Structure.HERMITIAN)
        sectors = sector_decompose(free, parity_transformed(4))
        assert sectors["plus"].values[0] == pytest.approx(0.5)
        assert sectors["minus"].values[0] == pytest.approx(0.5)

    def test_merge_ties_plus_first(self):
        """Test exact ties are listed plus before minus"""
        sectors = {
            "minus": SectorSpectrum(values=np.array([1.0, 2.0]), vectors=np.eye(2)),
            "plus": SectorSpectrum(values=np.array([1.0, 3.0]), vectors=np.eye(2)),
        }
        levels, labels = merge_sectors(sectors, 3)
        assert list(levels) == [1.0, 1.0, 2.0]
        assert labels == ("plus", "minus", "minus")


class TestConvergedSpectrum:
    """Test truncation growth until the low levels settle"""

    def test_free_boson(self):
        """Test the free boson converges at once with alternating sectors"""
        params = ModelParams(omega_a=1.0, omega_c=1.0)
        result = converged_spectrum(params, ModelKind.FREE_BOSON, 4)
        assert np.allclose(result.levels, [0.5, 0.5, 1.5, 1.5])
        assert result.parity_sector == ("plus", "minus", "plus", "minus")
        assert result.converged_dim == 32
        assert max(result.residual) == 0.0
        assert result.kind == "free_boson"

    def test_uncoupled_labels(self):
        """Test g = 0 resonance: ground state plus, first doublet minus"""
        params = ModelParams(omega_a=1.0, omega_c=1.0)
        result = converged_spectrum(params, ModelKind.QR, 3)
        assert np.allclose(result.levels, [0.0, 1.0, 1.0], atol=1e-12)
        assert result.parity_sector == ("plus", "minus", "minus")

    def test_strong_coupling_needs_more_bosons(self):
        """Test g = 3 converges at a larger truncation than g = 0.5"""
        weak = converged_spectrum(ModelParams(omega_a=0.5, omega_c=1.0, g=0.5), ModelKind.QR, 4)
        strong = converged_spectrum(ModelParams(omega_a=0.5, omega_c=1.0, g=3.0),
                                    ModelKind.QR, 4)
        assert strong.converged_dim > weak.converged_dim
        assert max(strong.residual) < 1e-10

    def test_stable_under_doubling(self):
        """Test reported levels move by at most 2 level_tol when the truncation doubles"""
        params = ModelParams(omega_a=0.5, omega_c=1.0, g=1.5)
        trunc = TruncationSpec()
        result = converged_spectrum(params, ModelKind.QR, 6, trunc)
        values, _ = eigensolve(h_qr(params, 2 * result.converged_dim), 6)
        assert np.max(np.abs(values - np.array(result.levels))) <= 2 * trunc.level_tol

    def test_transformed_strong_coupling(self):
        """Test the transformed frame at g = 3 needs at least 108 bosons"""
        params = ModelParams(omega_a=0.5, omega_c=1.0, g=3.0)
        result = converged_spectrum(params, ModelKind.TRANSFORMED, 4)
        assert result.converged_dim >= 108

    def test_too_many_levels(self):
        """Test k beyond the initial space is a dimension error"""
        with pytest.raises(DimensionError):
            converged_spectrum(ModelParams(omega_a=1.0, omega_c=1.0), ModelKind.QR, 65)

    def test_convergence_failure(self):
        """Test hitting max_dim raises ConvergenceError with the last dimension"""
        trunc = TruncationSpec(initial_dim=8, max_dim=12, level_tol=1e-14)
        with pytest.raises(ConvergenceError) as excinfo:
            converged_spectrum(ModelParams(omega_a=0.5, omega_c=1.0, g=3.0), ModelKind.QR, 2,
                               trunc)
        assert excinfo.value.last_dim == 12
        assert len(excinfo.value.residuals) == 2

    def test_renormalized_pairs_close(self):
        """Test deep-strong coupling collapses levels into near-degenerate pairs"""
        params = ModelParams(omega_a=0.5, omega_c=1.0, g=3.0)
        result = converged_spectrum(params, ModelKind.QR_REN, 6)
        for _, gap in degeneracy_gaps(result):
            assert 0 <= gap < 1e-3
        assert result.levels[0] == pytest.approx(0.5, abs=0.01)


class TestParityLabels:
    """Test per-vector sector labels"""

    def test_labels(self):
        """Test eigenvalue -1 is plus, +1 is minus and a superposition is mixed"""
        op = parity(2)
        plus = np.array([0, 1, 0, 0])   # |up,1>: P = -1
        minus = np.array([1, 0, 0, 0])  # |up,0>: P = +1
        mixed = (plus + minus) / np.sqrt(2)
        assert parity_labels(np.column_stack([plus, minus, mixed]), op) == (
            "plus", "minus", "mixed")

    def test_single_vector(self):
        """Test a 1-d vector is accepted"""
        assert parity_labels(np.array([0, 0, 1, 0]), parity(2)) == ("plus",)

    def test_size_checked(self):
        """Test vector length must match the parity"""
        with pytest.raises(DimensionError):
            parity_labels(np.ones(3), parity(2))


class TestDegeneracyGaps:
    """Test pair splittings"""

    def test_offsets(self):
        """Test {0, w, w, 2w, 2w} splits by w from the ground and pairs exactly after it"""
        levels = [0.0, 1.0, 1.0, 2.0, 2.0]
        assert degeneracy_gaps(levels) == [(0, 1.0), (1, 1.0)]
        assert degeneracy_gaps(levels, offset=1) == [(0, 0.0), (1, 0.0)]

    def test_from_result(self):
        """Test a SpectrumResult is accepted"""
        result = SpectrumResult(levels=(0.1, 0.3), parity_sector=("plus", "minus"),
                                converged_dim=8, residual=(0.0, 0.0))
        (pair, gap), = degeneracy_gaps(result)
        assert pair == 0 and gap == pytest.approx(0.2)


class TestDetectSusy:
    """Test the N=2 supersymmetric pattern detector"""

    def test_resonance(self):
        """Test g = 0, w_a = w_c shows the pattern with spacing hbar w_c"""
        result = converged_spectrum(ModelParams(omega_a=1.0, omega_c=1.0), ModelKind.QR, 10)
        report = detect_susy(result)
        assert report.is_susy_n2
        assert report.spacing == pytest.approx(1.0)

    def test_off_resonance(self):
        """Test w_a = 0.5 breaks the pattern"""
        result = converged_spectrum(ModelParams(omega_a=0.5, omega_c=1.0), ModelKind.QR, 10)
        report = detect_susy(result)
        assert not report.is_susy_n2
        assert report.spacing is None

    def test_degenerate_ground(self):
        """Test a degenerate ground level is not the pattern"""
        assert not detect_susy([0.0, 0.0, 1.0, 1.0]).is_susy_n2

    def test_uneven_spacing(self):
        """Test doublets must be equally spaced"""
        assert not detect_susy([0.0, 1.0, 1.0, 2.5, 2.5]).is_susy_n2

    def test_tolerance(self):
        """Test splittings below tol still count as doublets"""
        assert detect_susy([0.0, 1.0, 1.0 + 1e-10, 2.0, 2.0], tol=1e-8).is_susy_n2
        assert not detect_susy([0.0, 1.0, 1.0 + 1e-6, 2.0, 2.0], tol=1e-8).is_susy_n2


class TestFermionNumber:
    """Test <N_F> on composite-space states"""

    def test_basis_states(self):
        """Test |down, 0> is bosonic and |up, 0> is fermionic"""
        down = np.zeros(8)
        down[4] = 1.0
        up = np.zeros(8)
        up[0] = 1.0
        assert fermion_number(down) == pytest.approx(1.0)
        assert fermion_number(up) == pytest.approx(-1.0)

    def test_superposition_unnormalized(self):
        """Test an equal unnormalized mix of both qubit states averages to zero"""
        state = np.array([1.0j, 0.0, 1.0, 0.0]) * 3.0
        assert fermion_number(state) == pytest.approx(0.0, abs=1e-15)

    def test_resonant_ground_is_bosonic(self):
        """Test the uncoupled resonant ground state carries N_F = 1"""
        _, vectors = eigensolve(h_qr(ModelParams(omega_a=1.0, omega_c=1.0), 12), 1)
        assert fermion_number(vectors[:, 0]) == pytest.approx(1.0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
