"""
Hamiltonians, unitaries and parity operators on the composite qubit x boson space
"""

import enum
import logging
import math
from typing import Tuple

import numpy as np
import scipy.linalg

from .exceptions import ValidationError
from .operators import (
    ModelParams,
    OperatorMatrix,
    Structure,
    displacement,
    identity,
    make_ladder,
    number_parity,
    pauli,
    tensor,
)

logger = logging.getLogger(__name__)

# exp(-i pi m / 2) cycles through these four values exactly
_QUARTER_TURNS = np.array([1.0, -1j, -1.0, 1j])


class ModelKind(enum.Enum):
    """Which Hamiltonian a spectrum is taken from"""

    QR = "qr"
    QR_REN = "qr_ren"
    TRANSFORMED = "transformed"
    TRANSFORMED_REN = "transformed_ren"
    FREE_BOSON = "free_boson"

    @classmethod
    def parse(cls, text: str) -> "ModelKind":
        """Accept both snake_case tags and the CLI spellings (qr-ren, free)"""
        tag = text.strip().lower().replace("-", "_")
        if tag == "free":
            tag = "free_boson"
        try:
            return cls(tag)
        except ValueError:
            choices = ", ".join(kind.value for kind in cls)
            raise ValidationError(f"unknown model {text!r}, expected one of: {choices}")

    @property
    def renormalized(self) -> bool:
        """True when the self-energy is removed"""
        return self in (ModelKind.QR_REN, ModelKind.TRANSFORMED_REN)

    @property
    def transformed(self) -> bool:
        """True for the displaced, spin-rotated frame"""
        return self in (ModelKind.TRANSFORMED, ModelKind.TRANSFORMED_REN)


def _oscillator_diagonal(params: ModelParams, n_boson: int) -> np.ndarray:
    return params.hbar * params.omega_c * (np.arange(n_boson, dtype=float) + 0.5)


def self_energy_shift(params: ModelParams) -> float:
    """hbar g^2 / omega_c, the constant removed by renormalization"""
    return params.hbar * params.g ** 2 / params.omega_c


def h_qr(params: ModelParams, n_boson: int) -> OperatorMatrix:
    """Quantum Rabi Hamiltonian, optionally with the A^2 (mass) term"""
    spin = pauli()
    a, a_dag = make_ladder(n_boson)
    field = a.entries + a_dag.entries
    hbar = params.hbar

    h = 0.5 * hbar * params.omega_a * tensor(spin["z"], identity(n_boson)).entries
    h = h + np.kron(np.eye(2), np.diag(_oscillator_diagonal(params, n_boson)))
    h = h + hbar * params.g * np.kron(spin["x"].entries, field)
    if params.a2_coeff:
        h = h + hbar * params.a2_coeff * params.g ** 2 * np.kron(np.eye(2), field @ field)
    return OperatorMatrix(h, Structure.HERMITIAN)


def h_qr_ren(params: ModelParams, n_boson: int) -> OperatorMatrix:
    """H_QR + hbar g^2/omega_c, the self-energy removed"""
    shifted = h_qr(params, n_boson).entries + self_energy_shift(params) * np.eye(2 * n_boson)
    return OperatorMatrix(shifted, Structure.HERMITIAN)


def h_free_boson(params: ModelParams, n_boson: int) -> OperatorMatrix:
    """I tensor H_ho: the decoupled limit both sweeps approach"""
    oscillator = np.diag(_oscillator_diagonal(params, n_boson))
    return OperatorMatrix(np.kron(np.eye(2), oscillator),
                          Structure.HERMITIAN | Structure.DIAGONAL)


def h_tilted(params: ModelParams, n_boson: int) -> OperatorMatrix:
    """U0^dagger H_QR U0: -(hbar w_a/2) sigma_x + H_ho + hbar g sigma_z (a + a^dagger)"""
    spin = pauli()
    a, a_dag = make_ladder(n_boson)
    field = a.entries + a_dag.entries
    hbar = params.hbar

    h = -0.5 * hbar * params.omega_a * np.kron(spin["x"].entries, np.eye(n_boson))
    h = h + np.kron(np.eye(2), np.diag(_oscillator_diagonal(params, n_boson)))
    h = h + hbar * params.g * np.kron(spin["z"].entries, field)
    if params.a2_coeff:
        h = h + hbar * params.a2_coeff * params.g ** 2 * np.kron(np.eye(2), field @ field)
    return OperatorMatrix(h, Structure.HERMITIAN)


def u0() -> OperatorMatrix:
    """Qubit rotation exp(-i pi sigma_y / 4); U0^dagger sigma_z U0 = -sigma_x"""
    return OperatorMatrix(np.array([[1.0, -1.0], [1.0, 1.0]]) / math.sqrt(2.0),
                          Structure.UNITARY)


def boson_rotation(n_boson: int) -> OperatorMatrix:
    """exp(-i pi/2 a^dagger a) on the boson factor alone"""
    phases = _QUARTER_TURNS[np.arange(n_boson) % 4]
    return OperatorMatrix(np.diag(phases), Structure.UNITARY | Structure.DIAGONAL)


def u1(n_boson: int) -> OperatorMatrix:
    """I tensor exp(-i pi/2 a^dagger a)"""
    return tensor(identity(2), boson_rotation(n_boson))


def u_phi(params: ModelParams, n_boson: int) -> OperatorMatrix:
    """Block-diagonal displacement D(-i g/w_c) on |up>, D(+i g/w_c) on |down>"""
    beta = 1j * params.g / params.omega_c
    up = displacement(-beta, n_boson, method="exponentiate")
    down = displacement(beta, n_boson, method="exponentiate")
    return OperatorMatrix(scipy.linalg.block_diag(up.entries, down.entries), Structure.UNITARY)


def _boson_frame(params: ModelParams, n_boson: int) -> np.ndarray:
    return u1(n_boson).entries @ u_phi(params, n_boson).entries


def u_total(params: ModelParams, n_boson: int) -> OperatorMatrix:
    """U = (U0 tensor I) U1 U_phi"""
    spin_rotation = tensor(u0(), identity(n_boson)).entries
    combined = spin_rotation @ _boson_frame(params, n_boson)
    return OperatorMatrix(combined, Structure.UNITARY)


def a_operator(params: ModelParams, n_boson: int, renormalized: bool = False) -> OperatorMatrix:
    """I tensor H_ho, less the self-energy unless renormalized"""
    diagonal = np.tile(_oscillator_diagonal(params, n_boson), 2)
    if not renormalized:
        diagonal = diagonal - self_energy_shift(params)
    return OperatorMatrix(np.diag(diagonal), Structure.HERMITIAN | Structure.DIAGONAL)


def b_operator(params: ModelParams, n_boson: int) -> OperatorMatrix:
    """Off-diagonal blocks exp(+i g sqrt(8/hbar w_c) x) and its adjoint"""
    d_plus = displacement(2j * params.g / params.omega_c, n_boson, method="laguerre").entries
    zero = np.zeros((n_boson, n_boson), dtype=complex)
    return OperatorMatrix(np.block([[zero, d_plus], [d_plus.conj().T, zero]]),
                          Structure.HERMITIAN)


def h_transformed(params: ModelParams, n_boson: int, renormalized: bool = False) -> OperatorMatrix:
    """H~ = A - (hbar w_a/2) B, assembled directly from A and B"""
    if params.a2_coeff:
        raise ValidationError("the transformed Hamiltonian is only defined without the A^2 term; "
                              "use the qr model for a2_coeff != 0")
    h = (a_operator(params, n_boson, renormalized).entries
         - 0.5 * params.hbar * params.omega_a * b_operator(params, n_boson).entries)
    return OperatorMatrix(h, Structure.HERMITIAN)


def conjugated_h_qr(params: ModelParams, n_boson: int,
                    renormalized: bool = False) -> OperatorMatrix:
    """U^dagger H_QR U by explicit matrix products, starting from the tilted frame"""
    frame = _boson_frame(params, n_boson)
    source = h_tilted(params, n_boson).entries
    if renormalized:
        source = source + self_energy_shift(params) * np.eye(2 * n_boson)
    product = frame.conj().T @ source @ frame
    return OperatorMatrix(0.5 * (product + product.conj().T), Structure.HERMITIAN)


def parity(n_boson: int) -> OperatorMatrix:
    """P = sigma_z (-1)^(a^dagger a)"""
    return tensor(pauli()["z"], number_parity(n_boson))


def sigma_x_symmetry(n_boson: int) -> OperatorMatrix:
    """-sigma_x tensor I"""
    flip = OperatorMatrix(-pauli()["x"].entries, Structure.HERMITIAN | Structure.UNITARY)
    return tensor(flip, identity(n_boson))


def parity_transformed(n_boson: int) -> OperatorMatrix:
    """P~ = -sigma_x (-1)^(a^dagger a)"""
    flip = OperatorMatrix(-pauli()["x"].entries, Structure.HERMITIAN | Structure.UNITARY)
    return tensor(flip, number_parity(n_boson))


def build_hamiltonian(kind: ModelKind, params: ModelParams, n_boson: int) -> OperatorMatrix:
    """Hamiltonian of the given kind on the 2 n_boson dimensional space"""
    if kind is ModelKind.QR:
        return h_qr(params, n_boson)
    if kind is ModelKind.QR_REN:
        return h_qr_ren(params, n_boson)
    if kind is ModelKind.TRANSFORMED:
        return h_transformed(params, n_boson)
    if kind is ModelKind.TRANSFORMED_REN:
        return h_transformed(params, n_boson, renormalized=True)
    return h_free_boson(params, n_boson)


def parity_for(kind: ModelKind, n_boson: int) -> OperatorMatrix:
    """The Z2 parity that commutes with ``kind`` exactly"""
    if kind in (ModelKind.QR, ModelKind.QR_REN):
        return parity(n_boson)
    return parity_transformed(n_boson)


def commutator_norm(a: OperatorMatrix, b: OperatorMatrix) -> float:
    """Largest singular value of AB - BA"""
    if a.dim != b.dim:
        raise ValidationError(f"cannot commute a {a.dim}x{a.dim} with a {b.dim}x{b.dim} matrix")
    bracket = a.entries @ b.entries - b.entries @ a.entries
    if not np.any(bracket):
        return 0.0
    return float(scipy.linalg.svdvals(bracket)[0])


def z2_commutators(params: ModelParams, n_boson: int) -> Tuple[float, float]:
    """(||[P~, H~_ren]||, ||[-sigma_x, H~_ren]||)

    The first vanishes for every parameter set; the second measures how far
    the renormalized model is from the free-boson symmetry -sigma_x.
    """
    h = h_transformed(params, n_boson, renormalized=True)
    return (commutator_norm(parity_transformed(n_boson), h),
            commutator_norm(sigma_x_symmetry(n_boson), h))
