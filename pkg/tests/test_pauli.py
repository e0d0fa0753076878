"""Pauli-string encoding: algebraic conventions checked against kron products."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from eigenwork import pauli
from eigenwork.pauli import (PauliString, apply_to_basis_state, dense_matrix,
                             equal_up_to_phase, from_text, invert, make_pauli,
                             to_text, translate, window_span)

SIGMA = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_oracle(p: PauliString) -> np.ndarray:
    """Independent dense matrix: kron product over sites, high site leftmost.

    Bit l of the basis index holds site l, so site 0 is the fastest-running
    index and must sit rightmost in the kron chain.
    """
    mat = np.eye(1, dtype=complex)
    for site in reversed(range(p.n_sites)):
        mat = np.kron(mat, SIGMA[p.axis_at(site) or "I"])
    k = (p.phase_pow - p.n_y) % 4
    return (1j ** k) * mat


def st_pauli(max_L=6):
    def build(L, x, z, phase):
        full = (1 << L) - 1
        return PauliString(x & full, z & full, phase, L)
    return st.builds(build, st.integers(2, max_L), st.integers(0, 63),
                     st.integers(0, 63), st.integers(0, 3))


def test_make_single_x():
    p = make_pauli([(0, "X")], 4)
    assert (p.x_mask, p.z_mask, p.phase_pow) == (1, 0, 0)


def test_make_y_matches_sigma_y():
    p = make_pauli([(1, "Y")], 4)
    assert p.x_mask == 2 and p.z_mask == 2
    expected = np.kron(np.eye(4), np.kron(SIGMA["Y"], np.eye(2)))
    assert_allclose(dense_matrix(p), expected, atol=1e-15)


def test_make_zz_bond_hermitian():
    p = make_pauli([(0, "Z"), (1, "Z")], 4)
    assert p.z_mask == 0b11 and p.x_mask == 0
    assert p.is_hermitian()


def test_make_errors():
    with pytest.raises(ValueError):
        make_pauli([(4, "X")], 4)
    with pytest.raises(ValueError):
        make_pauli([(1, "X"), (1, "Z")], 4)


def test_translate_examples():
    x0 = make_pauli([(0, "X")], 4)
    assert translate(x0, 1) == make_pauli([(1, "X")], 4)
    zz = make_pauli([(0, "Z"), (1, "Z")], 4)
    assert translate(zz, 3) == make_pauli([(3, "Z"), (0, "Z")], 4)
    assert translate(zz, 4) == zz


@given(st_pauli(), st.integers(-8, 8), st.integers(-8, 8))
def test_translate_group_action(p, a, b):
    assert translate(p, a + b) == translate(translate(p, a), b)


def test_invert_examples():
    p = make_pauli([(0, "X"), (1, "Z")], 4)
    assert invert(p) == make_pauli([(3, "X"), (2, "Z")], 4)
    palindrome = make_pauli([(1, "Z"), (2, "Z")], 4)
    assert invert(palindrome) == palindrome


@given(st_pauli())
def test_invert_involution(p):
    assert invert(invert(p)) == p


@given(st_pauli(max_L=5))
def test_invert_matches_permutation_oracle(p):
    """Reflection acts as the basis permutation n -> reverse_bits(n)."""
    L = p.n_sites
    perm = np.array([int(format(n, f"0{L}b")[::-1], 2) for n in range(1 << L)])
    R = np.zeros((1 << L, 1 << L))
    R[perm, np.arange(1 << L)] = 1.0
    assert_allclose(dense_matrix(invert(p)), R @ dense_matrix(p) @ R.T, atol=1e-14)


def test_equal_up_to_phase():
    p = make_pauli([(0, "X")], 4)
    assert equal_up_to_phase(p, p) == 1
    flipped = PauliString(p.x_mask, p.z_mask, (p.phase_pow + 2) % 4, 4)
    assert equal_up_to_phase(flipped, p) == -1
    assert equal_up_to_phase(p, make_pauli([(0, "Z")], 4)) is None
    with pytest.raises(ValueError):
        equal_up_to_phase(p, make_pauli([(0, "X")], 6))


def test_apply_sign_conventions():
    L = 4
    z0 = make_pauli([(0, "Z")], L)
    assert apply_to_basis_state(z0, 0b0000) == (0b0000, 1)
    assert apply_to_basis_state(z0, 0b0001) == (0b0001, -1)
    x0 = make_pauli([(0, "X")], L)
    assert apply_to_basis_state(x0, 0b0000) == (0b0001, 1)
    y0 = make_pauli([(0, "Y")], L)
    m, c = apply_to_basis_state(y0, 0b0000)
    assert m == 0b0001 and c == 1j
    m, c = apply_to_basis_state(y0, 0b0001)
    assert m == 0b0000 and c == -1j


@given(st_pauli())
def test_dense_matches_kron_oracle(p):
    assert_allclose(dense_matrix(p), kron_oracle(p), atol=1e-14)


def test_hermitian_predicate_vs_dense_exhaustive():
    """Every (mask, phase) combination at L <= 4 agrees with the dense check."""
    for L in (2, 3, 4):
        for x in range(1 << L):
            for z in range(1 << L):
                for phase in range(4):
                    p = PauliString(x, z, phase, L)
                    mat = dense_matrix(p)
                    dense_herm = np.abs(mat - mat.conj().T).max() < 1e-12
                    assert dense_herm == p.is_hermitian()


def test_mask_range_validation():
    with pytest.raises(ValueError):
        PauliString(0b100, 0, 0, 2)


def test_window_span():
    L = 6
    assert window_span(pauli.identity(L)) == 0
    assert window_span(make_pauli([(2, "X")], L)) == 1
    assert window_span(make_pauli([(0, "X"), (2, "Z")], L)) == 3


def test_text_form_example():
    p = make_pauli([(0, "X"), (1, "Z")], 4)
    assert to_text(p) == "X0 Z1 @L=4 *i^0"
    assert to_text(pauli.identity(4)) == "I @L=4 *i^0"


@given(st_pauli())
def test_text_roundtrip(p):
    assert from_text(to_text(p)) == p


def test_text_rejects_garbage():
    with pytest.raises(ValueError):
        from_text("X0 Z1")
