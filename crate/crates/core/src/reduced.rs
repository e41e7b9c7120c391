//! Transition reduced density matrices `rho_nm = tr_B |n><m|` and the
//! subsystem states built from them.

use nalgebra::SymmetricEigen;
use rayon::prelude::*;

use crate::basis::Bipartition;
use crate::config::SpinGraph;
use crate::dynamics::OverlapCoefficients;
use crate::error::{Error, Result};
use crate::spectral::EigenSystem;
use crate::{CMatrix, CVector, C64};

/// `tr_B |u><v|` for full-space vectors `u`, `v`.
///
/// Entry `(s, s')` is `sum_b u[join(s, b)] conj(v[join(s', b)])`.
pub fn transition_rdm(u: &CVector, v: &CVector, graph: &SpinGraph) -> Result<CMatrix> {
    transition_rdm_with(u, v, &Bipartition::new(graph))
}

pub fn transition_rdm_with(u: &CVector, v: &CVector, bp: &Bipartition) -> Result<CMatrix> {
    let dim = bp.sub_dim() * bp.bath_dim();
    for x in [u, v] {
        if x.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                actual: x.len(),
            });
        }
    }
    Ok(reshape(u, bp) * reshape(v, bp).adjoint())
}

/// `sub_dim x bath_dim` matrix `X[s, b] = x[join(s, b)]`.
fn reshape(x: &CVector, bp: &Bipartition) -> CMatrix {
    CMatrix::from_fn(bp.sub_dim(), bp.bath_dim(), |s, b| x[bp.join(s as u64, b as u64) as usize])
}

/// Reshaped eigenvector of label `n`, filled from its sector support only.
pub(crate) fn reshape_eigenstate(es: &EigenSystem, n: usize, bp: &Bipartition) -> CMatrix {
    let label = es.label(n);
    let basis = &es.sectors()[label.sector];
    let col = es.sector_eigen(label.sector).vectors.column(label.position);
    let mut m = CMatrix::zeros(bp.sub_dim(), bp.bath_dim());
    for (&c, &amp) in basis.states().iter().zip(col.iter()) {
        let (s, b) = bp.split(c);
        m[(s as usize, b as usize)] = amp;
    }
    m
}

/// `rho_nm = tr_B |Phi_n><Phi_m|` for global labels `n`, `m`.
pub fn eigen_rdm(es: &EigenSystem, n: usize, m: usize, bp: &Bipartition) -> Result<CMatrix> {
    es.check_label(n)?;
    es.check_label(m)?;
    let un = reshape_eigenstate(es, n, bp);
    if n == m {
        let adj = un.adjoint();
        return Ok(un * adj);
    }
    Ok(un * reshape_eigenstate(es, m, bp).adjoint())
}

/// Diagonal reduced states `(E_n, rho_nn)` for every eigenstate, energy-sorted.
pub fn eth_profile(es: &EigenSystem, graph: &SpinGraph) -> Vec<(f64, CMatrix)> {
    let bp = Bipartition::new(graph);
    (0..es.len())
        .into_par_iter()
        .map(|n| (es.energy(n), eigen_rdm(es, n, n, &bp).expect("label in range")))
        .collect()
}

/// Result of [`diagonal_ensemble`].
#[derive(Debug, Clone)]
pub struct DiagonalEnsemble {
    pub rho: CMatrix,
    /// Set when two populated eigenstates share a degeneracy group, in which
    /// case the infinite-time average also keeps their cross terms.
    pub degenerate_support: bool,
}

/// Amplitudes below this are treated as unpopulated in the degeneracy check.
const POPULATED: f64 = 1e-12;

/// `sum_n |c_n|^2 rho_nn`.
pub fn diagonal_ensemble(c: &OverlapCoefficients, es: &EigenSystem, graph: &SpinGraph) -> Result<DiagonalEnsemble> {
    if c.len() != es.len() {
        return Err(Error::Dimension {
            expected: es.len(),
            actual: c.len(),
        });
    }
    c.check_normalized()?;
    let bp = Bipartition::new(graph);
    let mut rho = CMatrix::zeros(bp.sub_dim(), bp.sub_dim());
    let mut seen_groups = std::collections::HashSet::new();
    let mut degenerate_support = false;
    for (n, amp) in c.amplitudes().iter().enumerate() {
        let weight = amp.norm_sqr();
        if weight == 0.0 {
            continue;
        }
        if amp.norm() > POPULATED {
            if let Some(g) = es.group_of(n) {
                degenerate_support |= !seen_groups.insert(g);
            }
        }
        rho += eigen_rdm(es, n, n, &bp)? * C64::new(weight, 0.0);
    }
    Ok(DiagonalEnsemble { rho, degenerate_support })
}

/// Hermitian mixing coefficients `a_mn` over a set of eigenstate labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MixCoefficients {
    labels: Vec<usize>,
    a: CMatrix,
}

impl MixCoefficients {
    /// Requires `a` exactly Hermitian with `sum_n a_nn = 1` (to 1e-12).
    pub fn new(labels: Vec<usize>, a: CMatrix) -> Result<Self> {
        let k = labels.len();
        if k == 0 {
            return Err(Error::Mixing("empty label set".into()));
        }
        if a.nrows() != k || a.ncols() != k {
            return Err(Error::Dimension {
                expected: k,
                actual: a.nrows(),
            });
        }
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Mixing("repeated label".into()));
        }
        for i in 0..k {
            for j in 0..k {
                if a[(i, j)] != a[(j, i)].conj() {
                    return Err(Error::Mixing(format!("a is not Hermitian at ({i}, {j})")));
                }
            }
        }
        let trace = a.trace();
        if (trace - C64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::Mixing(format!("trace of a is {trace}, expected 1")));
        }
        Ok(MixCoefficients { labels, a })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn coefficients(&self) -> &CMatrix {
        &self.a
    }

    /// Checks that every pair of labels lies within `gap_bound` in energy.
    pub fn check_gap(&self, es: &EigenSystem, gap_bound: f64) -> Result<()> {
        for &m in &self.labels {
            es.check_label(m)?;
            for &n in &self.labels {
                let gap = (es.energy(m) - es.energy(n)).abs();
                if gap > gap_bound {
                    return Err(Error::Mixing(format!("labels {m}, {n} have gap {gap} > {gap_bound}")));
                }
            }
        }
        Ok(())
    }

    /// `sum_n |a_nn|^2`, the alternative normalization diagnostic.
    pub fn diagonal_square_sum(&self) -> f64 {
        (0..self.labels.len()).map(|i| self.a[(i, i)].norm_sqr()).sum()
    }
}

/// `sum_{m,n in labels} a_mn rho_nm`.
pub fn mixed_state(mc: &MixCoefficients, es: &EigenSystem, graph: &SpinGraph) -> Result<CMatrix> {
    for &n in mc.labels() {
        es.check_label(n)?;
    }
    let bp = Bipartition::new(graph);
    let reshaped: Vec<CMatrix> = mc.labels().iter().map(|&n| reshape_eigenstate(es, n, &bp)).collect();
    let mut rho = CMatrix::zeros(bp.sub_dim(), bp.sub_dim());
    for (i, um) in reshaped.iter().enumerate() {
        for (j, un) in reshaped.iter().enumerate() {
            let a = mc.coefficients()[(i, j)];
            if a != C64::default() {
                rho += un * um.adjoint() * a;
            }
        }
    }
    Ok(rho)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(rho: &CMatrix) -> f64 {
    SymmetricEigen::new(rho.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `1/2 sum |eig(a - b)|`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * SymmetricEigen::new(a - b).eigenvalues.iter().map(|e| e.abs()).sum::<f64>()
}

pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

/// `tr(rho^2)`, real part.
pub fn purity(rho: &CMatrix) -> f64 {
    (rho * rho).trace().re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::builtin_graph;
    use crate::oracle;
    use crate::spectral::solve;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> CVector {
        let v = CVector::from_fn(dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let n = v.norm();
        v / c(n)
    }

    #[test]
    fn product_state() {
        let g = SpinGraph::new(3, vec![(0, 1), (1, 2)], vec![2]).unwrap();
        let bp = Bipartition::new(&g);
        // subsystem (site 2): (|d> - i|u>)/sqrt2, bath: sites 0 up, 1 down
        let mut psi = CVector::zeros(8);
        psi[bp.join(0, 0b01) as usize] = c(FRAC_1_SQRT_2);
        psi[bp.join(1, 0b01) as usize] = C64::new(0.0, -FRAC_1_SQRT_2);
        let rho = transition_rdm(&psi, &psi, &g).unwrap();
        let phi = CVector::from_vec(vec![c(FRAC_1_SQRT_2), C64::new(0.0, -FRAC_1_SQRT_2)]);
        assert!((rho - &phi * phi.adjoint()).camax() < 1e-15);
    }

    #[test]
    fn bell_state_is_maximally_mixed() {
        let g = SpinGraph::new(2, vec![(0, 1)], vec![0]).unwrap();
        let mut psi = CVector::zeros(4);
        psi[0b01] = c(FRAC_1_SQRT_2);
        psi[0b10] = c(FRAC_1_SQRT_2);
        let rho = transition_rdm(&psi, &psi, &g).unwrap();
        assert!((rho - CMatrix::identity(2, 2) * c(0.5)).camax() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let g = SpinGraph::new(2, vec![(0, 1)], vec![0]).unwrap();
        let r = transition_rdm(&CVector::zeros(4), &CVector::zeros(8), &g);
        assert!(matches!(r, Err(Error::Dimension { expected: 4, actual: 8 })));
    }

    #[test]
    fn orthogonal_eigenstates_match_dense_oracle() {
        let g = builtin_graph("chain", 6).unwrap();
        let es = solve(&g, 1e-8).unwrap();
        for (m, n) in [(0, 1), (3, 17), (20, 21), (5, 63)] {
            let u = es.eigenstate_full(m).unwrap();
            let v = es.eigenstate_full(n).unwrap();
            let rho = transition_rdm(&u, &v, &g).unwrap();
            assert!(rho.trace().norm() < 1e-10);
            let dense = oracle::dense_partial_trace(&(&u * v.adjoint()), &g).unwrap();
            assert!((&rho - dense).camax() < 1e-12);
            let bp = Bipartition::new(&g);
            assert!((eigen_rdm(&es, m, n, &bp).unwrap() - rho).camax() < 1e-14);
        }
    }

    #[test]
    fn sesquilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = builtin_graph("chain", 6).unwrap();
        let (u1, u2, v) = (random_unit(&mut rng, 64), random_unit(&mut rng, 64), random_unit(&mut rng, 64));
        let (a, b) = (C64::new(0.3, -1.2), C64::new(-0.7, 0.4));
        let lhs = transition_rdm(&(&u1 * a + &u2 * b), &v, &g).unwrap();
        let rhs = transition_rdm(&u1, &v, &g).unwrap() * a + transition_rdm(&u2, &v, &g).unwrap() * b;
        assert!((lhs - rhs).camax() < 1e-12);
        let lhs = transition_rdm(&v, &(&u1 * a + &u2 * b), &g).unwrap();
        let rhs =
            transition_rdm(&v, &u1, &g).unwrap() * a.conj() + transition_rdm(&v, &u2, &g).unwrap() * b.conj();
        assert!((lhs - rhs).camax() < 1e-12);
    }

    #[test]
    fn completeness() {
        let g = builtin_graph("chain", 6).unwrap().with_subsystem(vec![1, 4]).unwrap();
        let es = solve(&g, 1e-8).unwrap();
        let sum = eth_profile(&es, &g)
            .into_iter()
            .fold(CMatrix::zeros(4, 4), |acc, (_, r)| acc + r);
        assert!((sum / c(64.0) - CMatrix::identity(4, 4) / c(4.0)).camax() < 1e-10);
    }

    #[test]
    fn magnetization_bookkeeping_is_exact() {
        let g = builtin_graph("chain", 6).unwrap();
        let es = solve(&g, 1e-8).unwrap();
        let bp = Bipartition::new(&g);
        for (m, n) in [(0, 5), (10, 40), (33, 2), (7, 7)] {
            let rho = eigen_rdm(&es, n, m, &bp).unwrap();
            let dk = es.sector_of(n) as i64 - es.sector_of(m) as i64;
            for s in 0..8usize {
                for s2 in 0..8usize {
                    if s.count_ones() as i64 - s2.count_ones() as i64 != dk {
                        assert_eq!(rho[(s, s2)], C64::default());
                    }
                }
            }
        }
    }

    #[test]
    fn eth_profile_basics() {
        let g = builtin_graph("chain", 6).unwrap();
        let es = solve(&g, 1e-8).unwrap();
        let profile = eth_profile(&es, &g);
        assert_eq!(profile.len(), 64);
        for (n, (e, rho)) in profile.iter().enumerate() {
            assert_eq!(*e, es.energy(n));
            assert!((rho.trace() - c(1.0)).norm() < 1e-10);
        }
        let vacuum = (0..es.len()).find(|&n| es.sector_of(n) == 0).unwrap();
        let mut want = CMatrix::zeros(8, 8);
        want[(0, 0)] = c(1.0);
        assert!((&profile[vacuum].1 - want).camax() < 1e-14);
    }

    #[test]
    fn diagonal_ensemble_examples() {
        let g = builtin_graph("default10", 10).unwrap().with_subsystem(vec![0, 1, 2]).unwrap();
        let es = solve(&g, 1e-8).unwrap();
        let bp = Bipartition::new(&g);
        let k = 300;
        let mut amps = vec![C64::default(); es.len()];
        amps[k] = C64::new(0.0, 1.0);
        let de = diagonal_ensemble(&OverlapCoefficients::new(amps).unwrap(), &es, &g).unwrap();
        assert!((de.rho - eigen_rdm(&es, k, k, &bp).unwrap()).camax() < 1e-14);
        assert!(!de.degenerate_support);

        let (a, b) = (100, 700);
        let mut amps = vec![C64::default(); es.len()];
        amps[a] = c(FRAC_1_SQRT_2);
        amps[b] = c(FRAC_1_SQRT_2);
        let de = diagonal_ensemble(&OverlapCoefficients::new(amps).unwrap(), &es, &g).unwrap();
        let want = (eigen_rdm(&es, a, a, &bp).unwrap() + eigen_rdm(&es, b, b, &bp).unwrap()) * c(0.5);
        assert!((de.rho - want).camax() < 1e-14);
    }

    #[test]
    fn diagonal_ensemble_flags_degenerate_support() {
        let g = builtin_graph("chain", 4).unwrap();
        let es = solve(&g, 1e-8).unwrap();
        let grp = es.degeneracy_groups()[0].clone();
        let mut amps = vec![C64::default(); es.len()];
        amps[grp[0]] = c(FRAC_1_SQRT_2);
        amps[grp[1]] = c(FRAC_1_SQRT_2);
        let de = diagonal_ensemble(&OverlapCoefficients::new(amps).unwrap(), &es, &g).unwrap();
        assert!(de.degenerate_support);
    }

    #[test]
    fn mixed_state_examples() {
        let g = builtin_graph("chain", 6).unwrap();
        let es = solve(&g, 1e-8).unwrap();
        let bp = Bipartition::new(&g);
        let mc = MixCoefficients::new(vec![9], CMatrix::identity(1, 1)).unwrap();
        assert!((mixed_state(&mc, &es, &g).unwrap() - eigen_rdm(&es, 9, 9, &bp).unwrap()).camax() < 1e-15);

        let (m, n) = (12, 30);
        let mc = MixCoefficients::new(vec![m, n], CMatrix::from_element(2, 2, c(0.5))).unwrap();
        let psi = (es.eigenstate_full(m).unwrap() + es.eigenstate_full(n).unwrap()) * c(FRAC_1_SQRT_2);
        let want = transition_rdm(&psi, &psi, &g).unwrap();
        assert!((mixed_state(&mc, &es, &g).unwrap() - want).camax() < 1e-12);
        assert!(mc.check_gap(&es, 0.0).is_err());
        assert!(mc.check_gap(&es, 100.0).is_ok());
    }

    #[test]
    fn random_hermitian_mixture() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = builtin_graph("chain", 8).unwrap();
        let es = solve(&g, 1e-8).unwrap();
        let labels = vec![40, 41, 42, 43];
        let raw = CMatrix::from_fn(4, 4, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let mut a = (&raw + raw.adjoint()) * c(0.5);
        let shift = (a.trace() - c(1.0)) / c(4.0);
        for i in 0..4 {
            a[(i, i)] = C64::new((a[(i, i)] - shift).re, 0.0);
        }
        let mc = MixCoefficients::new(labels, a).unwrap();
        let rho = mixed_state(&mc, &es, &g).unwrap();
        assert!((rho.adjoint() - &rho).camax() < 1e-10);
        assert!((rho.trace() - c(1.0)).norm() < 1e-10);
    }

    #[test]
    fn mixing_validation() {
        let mut a = CMatrix::identity(2, 2) * c(0.5);
        a[(0, 1)] = C64::new(0.1, 0.2);
        a[(1, 0)] = C64::new(0.1, 0.2);
        assert!(MixCoefficients::new(vec![0, 1], a).is_err());
        assert!(MixCoefficients::new(vec![0, 1], CMatrix::identity(2, 2)).is_err());
        assert!(MixCoefficients::new(vec![0, 0], CMatrix::identity(2, 2) * c(0.5)).is_err());
        let mc = MixCoefficients::new(vec![0, 1], CMatrix::identity(2, 2) * c(0.5)).unwrap();
        assert!((mc.diagonal_square_sum() - 0.5).abs() < 1e-15);
        let g = builtin_graph("chain", 4).unwrap();
        let es = solve(&g, 1e-8).unwrap();
        let mc = MixCoefficients::new(vec![16], CMatrix::identity(1, 1)).unwrap();
        assert!(matches!(mixed_state(&mc, &es, &g), Err(Error::LabelOutOfRange { .. })));
    }

    #[test]
    fn distances() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), c(0.0)]));
        let b = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0), c(1.0)]));
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-15);
        assert!((frobenius_distance(&a, &b) - 2f64.sqrt()).abs() < 1e-15);
        assert!((purity(&(a * c(0.5) + b * c(0.5))) - 0.5).abs() < 1e-15);
    }
}
