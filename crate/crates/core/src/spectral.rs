//! Per-sector dense diagonalization merged into one energy-sorted spectrum.

use std::collections::BTreeMap;

use nalgebra::SymmetricEigen;
use rayon::prelude::*;

use crate::basis::{all_sectors, SectorBasis};
use crate::config::SpinGraph;
use crate::error::{Error, Result};
use crate::operators::{heisenberg_blocks, SectorBlockOperator};
use crate::{CMatrix, CVector, C64};

/// Eigenpairs of one sector block, energies ascending.
#[derive(Debug, Clone)]
pub struct SectorEigen {
    pub energies: Vec<f64>,
    /// Column `p` is the eigenvector for `energies[p]` over the sector basis.
    pub vectors: CMatrix,
}

/// Location of a global eigenstate label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Label {
    pub sector: usize,
    pub position: usize,
}

#[derive(Debug, Clone)]
pub struct EigenSystem {
    n_sites: usize,
    sectors: Vec<SectorBasis>,
    /// Indexed by `n_up`.
    eigen: Vec<SectorEigen>,
    labels: Vec<Label>,
    /// Inverse of `labels`, indexed `[sector][position]`.
    global: Vec<Vec<usize>>,
    energies: Vec<f64>,
    groups: Vec<Vec<usize>>,
    group_of: Vec<Option<usize>>,
    tolerance: f64,
}

/// Residual bound `|H v - E v| <= RESIDUAL_TOL * max(1, |E|)` checked after every solve.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Builds and diagonalizes the Heisenberg model on `graph`.
pub fn solve(graph: &SpinGraph, tol_deg: f64) -> Result<EigenSystem> {
    let sectors = all_sectors(graph.n_sites())?;
    let blocks = heisenberg_blocks(graph, &sectors);
    diagonalize(&blocks, sectors, tol_deg)
}

/// Diagonalizes every sector block (in parallel) and merges the spectra.
pub fn diagonalize(
    blocks: &BTreeMap<usize, SectorBlockOperator>,
    sectors: Vec<SectorBasis>,
    tol_deg: f64,
) -> Result<EigenSystem> {
    let n_sites = sectors.first().map(SectorBasis::n_sites).unwrap_or(0);
    if sectors.len() != n_sites + 1 || sectors.iter().enumerate().any(|(k, s)| s.n_up() != k) {
        return Err(Error::Dimension {
            expected: n_sites + 1,
            actual: sectors.len(),
        });
    }
    let eigen = sectors
        .par_iter()
        .map(|basis| {
            let block = blocks.get(&basis.n_up()).ok_or(Error::Eigensolver {
                sector: basis.n_up(),
                message: "missing block".into(),
            })?;
            if block.dim() != basis.len() {
                return Err(Error::Dimension {
                    expected: basis.len(),
                    actual: block.dim(),
                });
            }
            diagonalize_block(block)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut labels: Vec<Label> = eigen
        .iter()
        .enumerate()
        .flat_map(|(sector, e)| (0..e.energies.len()).map(move |position| Label { sector, position }))
        .collect();
    labels.sort_by(|a, b| {
        eigen[a.sector].energies[a.position]
            .total_cmp(&eigen[b.sector].energies[b.position])
            .then((a.sector, a.position).cmp(&(b.sector, b.position)))
    });
    let energies: Vec<f64> = labels.iter().map(|l| eigen[l.sector].energies[l.position]).collect();
    let mut global: Vec<Vec<usize>> = eigen.iter().map(|e| vec![0; e.energies.len()]).collect();
    for (n, l) in labels.iter().enumerate() {
        global[l.sector][l.position] = n;
    }

    let mut groups = Vec::new();
    let mut group_of = vec![None; energies.len()];
    let mut start = 0;
    for n in 1..=energies.len() {
        if n == energies.len() || energies[n] - energies[start] >= tol_deg {
            if n - start > 1 {
                for slot in &mut group_of[start..n] {
                    *slot = Some(groups.len());
                }
                groups.push((start..n).collect());
            }
            start = n;
        }
    }

    Ok(EigenSystem {
        n_sites,
        sectors,
        eigen,
        labels,
        global,
        energies,
        groups,
        group_of,
        tolerance: tol_deg,
    })
}

fn diagonalize_block(block: &SectorBlockOperator) -> Result<SectorEigen> {
    let sector = block.n_up();
    let eig = SymmetricEigen::try_new(block.to_dense(), f64::EPSILON, 100_000).ok_or_else(|| Error::Eigensolver {
        sector,
        message: "no convergence".into(),
    })?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(block.dim(), block.dim());
    for (p, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        v /= C64::new(v.norm(), 0.0);
        fix_gauge(&mut v);
        let residual = (block.matvec(&v) - &v * C64::new(energies[p], 0.0)).norm();
        if !(residual <= RESIDUAL_TOL * energies[p].abs().max(1.0)) {
            return Err(Error::Eigensolver {
                sector,
                message: format!("residual {residual:e} for eigenvalue {}", energies[p]),
            });
        }
        vectors.set_column(p, &v);
    }
    Ok(SectorEigen { energies, vectors })
}

/// Rotates `v` so its largest-magnitude entry (first one, up to roundoff)
/// is real and positive.
pub fn fix_gauge(v: &mut CVector) {
    let max = v.iter().fold(0.0f64, |acc, x| acc.max(x.norm()));
    if max == 0.0 {
        return;
    }
    let idx = v
        .iter()
        .position(|x| x.norm() >= max * (1.0 - 1e-9))
        .expect("max entry exists");
    let pivot = v[idx];
    *v *= pivot.conj() / pivot.norm();
    v[idx] = C64::new(pivot.norm(), 0.0);
}

impl EigenSystem {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Global energies, non-decreasing.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, n: usize) -> f64 {
        self.energies[n]
    }

    pub fn label(&self, n: usize) -> Label {
        self.labels[n]
    }

    /// Global label of eigenvector `position` in sector `n_up`.
    pub fn global_label(&self, n_up: usize, position: usize) -> usize {
        self.global[n_up][position]
    }

    pub fn sector_of(&self, n: usize) -> usize {
        self.labels[n].sector
    }

    pub fn sectors(&self) -> &[SectorBasis] {
        &self.sectors
    }

    pub fn sector_eigen(&self, n_up: usize) -> &SectorEigen {
        &self.eigen[n_up]
    }

    pub fn degeneracy_tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Groups of labels with pairwise energy differences below the tolerance.
    pub fn degeneracy_groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_of(&self, n: usize) -> Option<usize> {
        self.group_of[n]
    }

    /// Whether `n` shares its energy with another state of the same sector,
    /// which leaves its eigenvector (not just its phase) solver-dependent.
    pub fn has_sector_degeneracy(&self, n: usize) -> bool {
        match self.group_of[n] {
            None => false,
            Some(g) => {
                let sector = self.labels[n].sector;
                self.groups[g].iter().any(|&m| m != n && self.labels[m].sector == sector)
            }
        }
    }

    pub fn check_label(&self, n: usize) -> Result<()> {
        if n >= self.len() {
            return Err(Error::LabelOutOfRange { label: n, len: self.len() });
        }
        Ok(())
    }

    /// Eigenvector of label `n` over its sector basis.
    pub fn sector_vector(&self, n: usize) -> CVector {
        let l = self.labels[n];
        self.eigen[l.sector].vectors.column(l.position).into_owned()
    }

    /// Eigenvector of label `n` embedded in the full `2^N` space.
    pub fn eigenstate_full(&self, n: usize) -> Result<CVector> {
        self.check_label(n)?;
        let l = self.labels[n];
        let mut out = CVector::zeros(1 << self.n_sites);
        let col = self.eigen[l.sector].vectors.column(l.position);
        for (&c, &amp) in self.sectors[l.sector].states().iter().zip(col.iter()) {
            out[c as usize] = amp;
        }
        Ok(out)
    }

    /// Copy with every eigenvector multiplied by the given phase (indexed by
    /// global label). Used to probe gauge dependence.
    pub fn rephased(&self, phases: &[f64]) -> Self {
        let mut out = self.clone();
        for (n, &theta) in phases.iter().enumerate().take(self.len()) {
            let l = self.labels[n];
            let factor = C64::from_polar(1.0, theta);
            let mut col = out.eigen[l.sector].vectors.column_mut(l.position);
            col *= factor;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::binomial;
    use crate::config::builtin_graph;
    use crate::oracle;

    #[test]
    fn two_site_spectrum() {
        let g = SpinGraph::new(2, vec![(0, 1)], vec![0]).unwrap();
        let es = solve(&g, 1e-8).unwrap();
        for (e, w) in es.energies().iter().zip([-1.5, 0.5, 0.5, 0.5]) {
            assert!((e - w).abs() < 1e-12);
        }
        assert_eq!(es.degeneracy_groups(), &[vec![1, 2, 3]]);
    }

    #[test]
    fn default10_dimensions() {
        let g = builtin_graph("default10", 10).unwrap();
        let es = solve(&g, 1e-8).unwrap();
        assert_eq!(es.len(), 1024);
        for k in 0..=10 {
            assert_eq!(es.sectors()[k].len(), binomial(10, k));
            assert_eq!(es.sector_eigen(k).energies.len(), binomial(10, k));
        }
        assert_eq!(es.sectors().iter().map(SectorBasis::len).max(), Some(252));
        assert!(es.energies().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn residuals_and_orthonormality() {
        let g = builtin_graph("default10", 10).unwrap();
        let sectors = all_sectors(10).unwrap();
        let blocks = heisenberg_blocks(&g, &sectors);
        let es = diagonalize(&blocks, sectors, 1e-8).unwrap();
        for (k, block) in &blocks {
            let se = es.sector_eigen(*k);
            for (p, &e) in se.energies.iter().enumerate() {
                let v = se.vectors.column(p).into_owned();
                let r = (block.matvec(&v) - &v * C64::new(e, 0.0)).norm();
                assert!(r <= 1e-9 * e.abs().max(1.0));
            }
            let gram = se.vectors.adjoint() * &se.vectors;
            assert!((gram - CMatrix::identity(block.dim(), block.dim())).camax() <= 1e-10);
        }
    }

    #[test]
    fn six_site_chain_matches_dense() {
        let g = builtin_graph("chain", 6).unwrap();
        let es = solve(&g, 1e-8).unwrap();
        let dense = oracle::dense_spectrum(&g).unwrap();
        assert_eq!(dense.len(), es.len());
        for (a, b) in es.energies().iter().zip(&dense) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn trace_bookkeeping() {
        let g = builtin_graph("default10", 10).unwrap();
        let sectors = all_sectors(10).unwrap();
        let blocks = heisenberg_blocks(&g, &sectors);
        let es = diagonalize(&blocks, sectors, 1e-8).unwrap();
        let sum: f64 = es.energies().iter().sum();
        let diag: f64 = blocks.values().map(SectorBlockOperator::diagonal_sum).sum();
        assert!((sum - diag).abs() < 1e-8);
    }

    #[test]
    fn chain_multiplets_span_sectors() {
        let g = builtin_graph("chain", 4).unwrap();
        let es = solve(&g, 1e-8).unwrap();
        assert!(es.degeneracy_groups().iter().any(|grp| {
            let first = es.sector_of(grp[0]);
            grp.iter().any(|&n| es.sector_of(n) != first)
        }));
    }

    #[test]
    fn full_space_embedding() {
        let g = builtin_graph("chain", 4).unwrap();
        let es = solve(&g, 1e-8).unwrap();
        let vacuum = (0..es.len()).find(|&n| es.sector_of(n) == 0).unwrap();
        let v = es.eigenstate_full(vacuum).unwrap();
        assert!((v[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(v.iter().skip(1).all(|x| *x == C64::default()));
        let vecs: Vec<CVector> = (0..es.len()).map(|n| es.eigenstate_full(n).unwrap()).collect();
        for m in 0..es.len() {
            assert!((vecs[m].norm() - 1.0).abs() < 1e-12);
            for n in 0..es.len() {
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((vecs[m].dotc(&vecs[n]) - C64::new(want, 0.0)).norm() < 1e-10);
            }
        }
        assert!(matches!(es.eigenstate_full(16), Err(Error::LabelOutOfRange { .. })));
    }

    #[test]
    fn deterministic_spectra_and_gauge() {
        let g = builtin_graph("chain", 8).unwrap();
        let a = solve(&g, 1e-8).unwrap();
        let b = solve(&g, 1e-8).unwrap();
        assert_eq!(a.energies(), b.energies());
        for n in 0..a.len() {
            let (u, v) = (a.sector_vector(n), b.sector_vector(n));
            assert_eq!(u, v);
            let pivot = u.iter().fold(0.0f64, |acc, x| acc.max(x.norm()));
            let first = u.iter().find(|x| x.norm() >= pivot * (1.0 - 1e-9)).unwrap();
            assert!(first.im == 0.0 && first.re > 0.0);
        }
    }
}
