//! Brute-force reference implementations for cross-checking the fast paths.
//!
//! Everything here is built from explicit 2x2 matrices and Kronecker
//! products, or literal index loops, and shares nothing with the sector
//! machinery beyond plain types. Not meant for production use: sizes are
//! capped at [`MAX_DENSE_SITES`] (and [`MAX_DOUBLE_SUM_DIM`] for the
//! eigenbasis double sum).

use nalgebra::SymmetricEigen;

use crate::basis::{split_config, SpinConfiguration};
use crate::config::{PauliLetter, SpinGraph};
use crate::error::{Error, Result};
use crate::operators::PauliStringSum;
use crate::{CMatrix, C64};

pub const MAX_DENSE_SITES: usize = 8;
/// Full-space dimension cap for [`rdm_double_sum`] (six sites).
pub const MAX_DOUBLE_SUM_DIM: usize = 64;

/// `2^N x 2^N` matrix.
pub type DenseOperator = CMatrix;

fn guard(n_sites: usize) -> Result<()> {
    if n_sites > MAX_DENSE_SITES {
        return Err(Error::TooLarge {
            n_sites,
            limit: MAX_DENSE_SITES,
        });
    }
    Ok(())
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Single-site matrix in the (down, up) = (0, 1) ordering.
fn single_site(letter: PauliLetter) -> CMatrix {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let data = match letter {
        PauliLetter::X => [z, one, one, z],
        PauliLetter::Y => [z, c(0.0, 1.0), c(0.0, -1.0), z],
        PauliLetter::Z => [-one, z, z, one],
        PauliLetter::Plus => [z, z, one, z],
        PauliLetter::Minus => [z, one, z, z],
    };
    CMatrix::from_row_slice(2, 2, &data)
}

/// `op_{N-1} (x) ... (x) op_0`, so that site `i` is bit `i` of the index.
fn kron_sites(n_sites: usize, factors: &[(usize, PauliLetter)]) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for site in (0..n_sites).rev() {
        let m = factors
            .iter()
            .find(|(s, _)| *s == site)
            .map(|&(_, l)| single_site(l))
            .unwrap_or_else(|| CMatrix::identity(2, 2));
        out = out.kronecker(&m);
    }
    out
}

/// `1/2 sum_<ij> (x_i x_j + y_i y_j + z_i z_j)` from Kronecker products.
pub fn dense_hamiltonian(graph: &SpinGraph) -> Result<DenseOperator> {
    let n = graph.n_sites();
    guard(n)?;
    let mut h = CMatrix::zeros(1 << n, 1 << n);
    for &(i, j) in graph.edges() {
        for letter in [PauliLetter::X, PauliLetter::Y, PauliLetter::Z] {
            h += kron_sites(n, &[(i, letter), (j, letter)]) * c(0.5, 0.0);
        }
    }
    Ok(h)
}

/// Dense matrix of a Pauli-string sum on the full `n_sites` space.
pub fn dense_pauli_sum(op: &PauliStringSum, n_sites: usize) -> Result<DenseOperator> {
    guard(n_sites)?;
    let mut m = CMatrix::zeros(1 << n_sites, 1 << n_sites);
    for term in op.terms() {
        m += kron_sites(n_sites, term.factors()) * term.coeff();
    }
    Ok(m)
}

/// Sorted eigenvalues of the dense Hamiltonian.
pub fn dense_spectrum(graph: &SpinGraph) -> Result<Vec<f64>> {
    let h = dense_hamiltonian(graph)?;
    let mut e: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// `tr_B rho` by summing over all index pairs with equal bath bits.
pub fn dense_partial_trace(rho_full: &DenseOperator, graph: &SpinGraph) -> Result<CMatrix> {
    let n = graph.n_sites();
    guard(n)?;
    let dim = 1usize << n;
    if rho_full.nrows() != dim || rho_full.ncols() != dim {
        return Err(Error::Dimension {
            expected: dim,
            actual: rho_full.nrows(),
        });
    }
    let sub = 1usize << graph.subsystem_len();
    let mut out = CMatrix::zeros(sub, sub);
    for row in 0..dim {
        let (s, b) = split_config(SpinConfiguration(row as u64), graph);
        for col in 0..dim {
            let (s2, b2) = split_config(SpinConfiguration(col as u64), graph);
            if b == b2 {
                out[(s as usize, s2 as usize)] += rho_full[(row, col)];
            }
        }
    }
    Ok(out)
}

/// Literal `sum_{n,m} c_n c_m^* e^{-i (E_n - E_m) t} rho_nm`.
///
/// `rdms[n * D + m]` holds `rho_nm = tr_B |n><m|`.
pub fn rdm_double_sum(coeffs: &[C64], energies: &[f64], t: f64, rdms: &[CMatrix]) -> Result<CMatrix> {
    let d = coeffs.len();
    if d > MAX_DOUBLE_SUM_DIM {
        return Err(Error::TooLarge {
            n_sites: d.trailing_zeros() as usize,
            limit: 6,
        });
    }
    if energies.len() != d || rdms.len() != d * d {
        return Err(Error::Dimension {
            expected: d * d,
            actual: rdms.len(),
        });
    }
    let sub = rdms[0].nrows();
    let mut out = CMatrix::zeros(sub, sub);
    for n in 0..d {
        for m in 0..d {
            let phase = C64::from_polar(1.0, -(energies[n] - energies[m]) * t);
            out += &rdms[n * d + m] * (coeffs[n] * coeffs[m].conj() * phase);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CVector;

    #[test]
    fn two_site_singlet_triplet() {
        let g = SpinGraph::new(2, vec![(0, 1)], vec![0]).unwrap();
        let h = dense_hamiltonian(&g).unwrap();
        assert_eq!(h.adjoint(), h);
        let e = dense_spectrum(&g).unwrap();
        for (a, b) in e.iter().zip([-1.5, 0.5, 0.5, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn size_guard() {
        let g = SpinGraph::new(9, vec![(0, 1)], vec![0]).unwrap();
        assert!(matches!(dense_hamiltonian(&g), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn partial_trace_of_identity() {
        let g = SpinGraph::new(4, vec![(0, 1)], vec![1, 3]).unwrap();
        let rho = CMatrix::identity(16, 16) / c(16.0, 0.0);
        let red = dense_partial_trace(&rho, &g).unwrap();
        assert!((red - CMatrix::identity(4, 4) / c(4.0, 0.0)).camax() < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_state() {
        // subsystem site 0 in (|d> + i|u>)/sqrt2, bath site 1 up
        let g = SpinGraph::new(2, vec![(0, 1)], vec![0]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = CVector::from_vec(vec![c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0), c(0.0, s)]);
        let red = dense_partial_trace(&(&psi * psi.adjoint()), &g).unwrap();
        let phi = CVector::from_vec(vec![c(s, 0.0), c(0.0, s)]);
        assert!((red - &phi * phi.adjoint()).camax() < 1e-15);
    }

    #[test]
    fn double_sum_single_eigenstate() {
        let rdms: Vec<CMatrix> = (0..4).map(|k| CMatrix::from_element(2, 2, c(k as f64, 0.0))).collect();
        let coeffs = [c(0.0, 0.0), c(1.0, 0.0)];
        let out = rdm_double_sum(&coeffs, &[0.0, 1.0], 0.0, &rdms).unwrap();
        assert_eq!(out, rdms[3]);
    }
}
