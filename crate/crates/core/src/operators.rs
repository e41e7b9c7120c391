//! Symbolic Pauli-string operators applied bitwise on configurations, and
//! the Heisenberg Hamiltonian assembled per magnetization sector.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::SymmetricEigen;

use crate::basis::{Bipartition, SectorBasis};
use crate::config::{OperatorKind, OperatorSpec, PauliLetter, SpinGraph};
use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

const I: C64 = C64::new(0.0, 1.0);

/// A product of single-site factors on distinct sites, times a coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    coeff: C64,
    /// Sorted by site.
    factors: Vec<(usize, PauliLetter)>,
    compiled: CompiledTerm,
}

/// Bit masks realizing a term on a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct CompiledTerm {
    flip: u64,
    /// Sites that must be up (sigma^- factors).
    need_up: u64,
    /// Sites that must be down (sigma^+ factors).
    need_down: u64,
    z: u64,
    y: u64,
}

impl PauliTerm {
    pub fn new(coeff: C64, mut factors: Vec<(usize, PauliLetter)>) -> Result<Self> {
        factors.sort_by_key(|&(site, _)| site);
        if factors.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::config("operators", "site repeated within a Pauli term"));
        }
        if factors.iter().any(|&(site, _)| site >= 64) {
            return Err(Error::config("operators", "site index too large"));
        }
        let mut c = CompiledTerm {
            flip: 0,
            need_up: 0,
            need_down: 0,
            z: 0,
            y: 0,
        };
        for &(site, letter) in &factors {
            let bit = 1u64 << site;
            match letter {
                PauliLetter::X => c.flip |= bit,
                PauliLetter::Y => {
                    c.flip |= bit;
                    c.y |= bit;
                }
                PauliLetter::Z => c.z |= bit,
                PauliLetter::Plus => {
                    c.flip |= bit;
                    c.need_down |= bit;
                }
                PauliLetter::Minus => {
                    c.flip |= bit;
                    c.need_up |= bit;
                }
            }
        }
        Ok(PauliTerm {
            coeff,
            factors,
            compiled: c,
        })
    }

    pub fn coeff(&self) -> C64 {
        self.coeff
    }

    pub fn factors(&self) -> &[(usize, PauliLetter)] {
        &self.factors
    }

    /// Image of a basis configuration: `term |c> = amp |c'>`, or `None` if
    /// the term annihilates `c`.
    #[inline]
    pub fn act(&self, config: u64) -> Option<(u64, C64)> {
        let t = &self.compiled;
        if config & t.need_up != t.need_up || config & t.need_down != 0 {
            return None;
        }
        let mut amp = self.coeff;
        if (t.z & !config).count_ones() % 2 == 1 {
            amp = -amp;
        }
        if t.y != 0 {
            // sigma^y |up> = i |down>, sigma^y |down> = -i |up>
            let up = (t.y & config).count_ones() as i64;
            let down = (t.y & !config).count_ones() as i64;
            amp *= match (up - down).rem_euclid(4) {
                0 => C64::new(1.0, 0.0),
                1 => I,
                2 => C64::new(-1.0, 0.0),
                _ => -I,
            };
        }
        Some((config ^ t.flip, amp))
    }

    /// Possible changes of the up-spin count produced by this term.
    fn shifts(&self) -> BTreeSet<i64> {
        let mut base = 0i64;
        let mut free = 0usize;
        for &(_, letter) in &self.factors {
            match letter {
                PauliLetter::Plus => base += 1,
                PauliLetter::Minus => base -= 1,
                PauliLetter::X | PauliLetter::Y => free += 1,
                PauliLetter::Z => {}
            }
        }
        (0..=free).map(|ups| base + 2 * ups as i64 - free as i64).collect()
    }

    fn adjoint(&self) -> Self {
        let factors = self
            .factors
            .iter()
            .map(|&(site, letter)| {
                let l = match letter {
                    PauliLetter::Plus => PauliLetter::Minus,
                    PauliLetter::Minus => PauliLetter::Plus,
                    other => other,
                };
                (site, l)
            })
            .collect();
        PauliTerm::new(self.coeff.conj(), factors).expect("adjoint of a valid term is valid")
    }
}

/// Sum of Pauli strings, stored symbolically and applied on the fly.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliStringSum {
    terms: Vec<PauliTerm>,
}

impl PauliStringSum {
    pub fn new(terms: Vec<PauliTerm>) -> Self {
        PauliStringSum { terms }
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn scaled(&self, factor: C64) -> Self {
        PauliStringSum {
            terms: self
                .terms
                .iter()
                .map(|t| PauliTerm {
                    coeff: t.coeff * factor,
                    ..t.clone()
                })
                .collect(),
        }
    }

    /// Sites touched by any term.
    pub fn support(&self) -> BTreeSet<usize> {
        self.terms
            .iter()
            .flat_map(|t| t.factors.iter().map(|&(s, _)| s))
            .collect()
    }

    /// Set of `n_up(out) - n_up(in)` values a nonzero matrix element can have.
    pub fn sector_shifts(&self) -> BTreeSet<i64> {
        self.terms.iter().flat_map(PauliTerm::shifts).collect()
    }

    /// Whether `<u|A|v>` can be nonzero for `u` in sector `to`, `v` in `from`.
    pub fn connects(&self, from: usize, to: usize) -> bool {
        self.sector_shifts().contains(&(to as i64 - from as i64))
    }

    /// Terms merged by factor string with zero coefficients dropped.
    fn canonical(&self) -> BTreeMap<Vec<(usize, PauliLetter)>, C64> {
        let mut map: BTreeMap<Vec<(usize, PauliLetter)>, C64> = BTreeMap::new();
        for t in &self.terms {
            *map.entry(t.factors.clone()).or_default() += t.coeff;
        }
        map.retain(|_, c| c.norm() > 0.0);
        map
    }

    /// Symbolic Hermiticity: the canonical term set is closed under adjoint.
    pub fn check_hermitian(&self) -> Result<()> {
        let canon = self.canonical();
        let scale = canon.values().map(|c| c.norm()).fold(1.0, f64::max);
        for (factors, &coeff) in &canon {
            let adj = PauliTerm::new(coeff, factors.clone())?.adjoint();
            let partner = canon.get(&adj.factors).copied().unwrap_or_default();
            if (partner - adj.coeff).norm() > 1e-12 * scale {
                let letters: Vec<String> = factors.iter().map(|(s, l)| format!("{}{s}", l.symbol())).collect();
                return Err(Error::NotHermitian(format!(
                    "adjoint of term {} {} is missing",
                    coeff,
                    letters.join(" ")
                )));
            }
        }
        Ok(())
    }

    /// Applies the operator to a full-space vector over `2^n_sites` configurations.
    pub fn apply(&self, v: &CVector, n_sites: usize) -> Result<CVector> {
        let dim = 1usize << n_sites;
        if v.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                actual: v.len(),
            });
        }
        if self.support().iter().any(|&s| s >= n_sites) {
            return Err(Error::config("operators", "operator acts outside the system"));
        }
        let mut out = CVector::zeros(dim);
        for (c, &amp) in v.iter().enumerate() {
            if amp == C64::default() {
                continue;
            }
            for t in &self.terms {
                if let Some((c2, a)) = t.act(c as u64) {
                    out[c2 as usize] += a * amp;
                }
            }
        }
        Ok(out)
    }

    /// Component of `A v` in sector `target`, for `v` expressed over `source`.
    ///
    /// Fails with [`Error::SectorMismatch`] if the operator cannot map
    /// `source` into `target`.
    pub fn apply_sector(&self, v: &CVector, source: &SectorBasis, target: &SectorBasis) -> Result<CVector> {
        if v.len() != source.len() {
            return Err(Error::Dimension {
                expected: source.len(),
                actual: v.len(),
            });
        }
        if source.n_sites() != target.n_sites() || !self.connects(source.n_up(), target.n_up()) {
            return Err(Error::SectorMismatch {
                source_sector: source.n_up(),
            });
        }
        let mut out = CVector::zeros(target.len());
        for (p, &amp) in source.states().iter().zip(v.iter()) {
            for t in &self.terms {
                if let Some((c2, a)) = t.act(*p) {
                    if let Some(q) = target.rank(c2) {
                        out[q] += a * amp;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Dense matrix over the configurations of `sites` (bit `j` = `sites[j]`).
    /// Entry `(r, c)` is `<r|A|c>`.
    pub fn dense_on(&self, sites: &[usize]) -> Result<CMatrix> {
        let pos: BTreeMap<usize, usize> = sites.iter().enumerate().map(|(j, &s)| (s, j)).collect();
        let relabeled = self
            .terms
            .iter()
            .map(|t| {
                let factors = t
                    .factors
                    .iter()
                    .map(|&(s, l)| {
                        pos.get(&s)
                            .map(|&j| (j, l))
                            .ok_or_else(|| Error::config("operators", format!("site {s} outside the operator domain")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                PauliTerm::new(t.coeff, factors)
            })
            .collect::<Result<Vec<_>>>()?;
        let dim = 1usize << sites.len();
        let mut m = CMatrix::zeros(dim, dim);
        for c in 0..dim {
            for t in &relabeled {
                if let Some((r, a)) = t.act(c as u64) {
                    m[(r as usize, c)] += a;
                }
            }
        }
        Ok(m)
    }

    /// `2^M x 2^M` matrix on the subsystem, indexed by packed subsystem bits.
    pub fn subsystem_matrix(&self, graph: &SpinGraph) -> Result<CMatrix> {
        self.dense_on(graph.subsystem())
    }
}

/// Largest subsystem for which [`operator_norm`] builds a dense matrix.
pub const MAX_NORM_SITES: usize = 12;

/// Spectral norm of a Hermitian operator on the space of `sites`.
pub fn operator_norm(op: &PauliStringSum, sites: &[usize]) -> Result<f64> {
    op.check_hermitian()?;
    if sites.len() > MAX_NORM_SITES {
        return Err(Error::TooLarge {
            n_sites: sites.len(),
            limit: MAX_NORM_SITES,
        });
    }
    let m = op.dense_on(sites)?;
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 10_000).ok_or_else(|| Error::Eigensolver {
        sector: usize::MAX,
        message: "norm eigensolve did not converge".into(),
    })?;
    Ok(eig.eigenvalues.iter().fold(0.0, |acc: f64, e| acc.max(e.abs())))
}

/// `prod_j sigma^+_j + prod_j sigma^-_j` over the given sites.
pub fn witness_w(sites: &[usize]) -> PauliStringSum {
    let one = C64::new(1.0, 0.0);
    let up = sites.iter().map(|&s| (s, PauliLetter::Plus)).collect();
    let down = sites.iter().map(|&s| (s, PauliLetter::Minus)).collect();
    PauliStringSum::new(vec![
        PauliTerm::new(one, up).expect("distinct sites"),
        PauliTerm::new(one, down).expect("distinct sites"),
    ])
}

/// `prod_j sigma^z_j` over the given sites.
pub fn classical_c(sites: &[usize]) -> PauliStringSum {
    let z = sites.iter().map(|&s| (s, PauliLetter::Z)).collect();
    PauliStringSum::new(vec![PauliTerm::new(C64::new(1.0, 0.0), z).expect("distinct sites")])
}

/// Builds the operator described by a model-file entry, placed on the
/// graph's subsystem.
pub fn build_operator(spec: &OperatorSpec, graph: &SpinGraph) -> Result<PauliStringSum> {
    Ok(match &spec.kind {
        OperatorKind::Witness => witness_w(graph.subsystem()),
        OperatorKind::Classical => classical_c(graph.subsystem()),
        OperatorKind::PauliSum(terms) => PauliStringSum::new(
            terms
                .iter()
                .map(|t| PauliTerm::new(C64::new(t.coeff_re, t.coeff_im), t.factors.clone()))
                .collect::<Result<Vec<_>>>()?,
        ),
    })
}

/// Sparse Hermitian block of an operator over one sector basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBlockOperator {
    n_up: usize,
    dim: usize,
    /// `(row, col, value)`, sorted, no stored zeros.
    entries: Vec<(usize, usize, C64)>,
}

impl SectorBlockOperator {
    pub fn n_up(&self) -> usize {
        self.n_up
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    pub fn matvec(&self, v: &CVector) -> CVector {
        let mut out = CVector::zeros(self.dim);
        for &(r, c, val) in &self.entries {
            out[r] += val * v[c];
        }
        out
    }

    pub fn diagonal_sum(&self) -> f64 {
        self.entries
            .iter()
            .filter(|(r, c, _)| r == c)
            .map(|(_, _, v)| v.re)
            .sum()
    }
}

/// Heisenberg Hamiltonian `1/2 sum_<ij> sigma_i . sigma_j` for every sector.
///
/// Diagonal: `1/2 sum z_i z_j`. Off-diagonal: `sigma^+ sigma^- + h.c.` swaps
/// an anti-aligned edge with amplitude 1.
pub fn heisenberg_blocks(graph: &SpinGraph, sectors: &[SectorBasis]) -> BTreeMap<usize, SectorBlockOperator> {
    sectors
        .iter()
        .map(|basis| (basis.n_up(), heisenberg_block(graph, basis)))
        .collect()
}

pub fn heisenberg_block(graph: &SpinGraph, basis: &SectorBasis) -> SectorBlockOperator {
    let masks: Vec<u64> = graph.edges().iter().map(|&(i, j)| 1u64 << i | 1u64 << j).collect();
    let mut entries = Vec::new();
    for (col, &c) in basis.states().iter().enumerate() {
        let mut diag = 0.0;
        let mut row_entries = Vec::new();
        for &mask in &masks {
            let pair = c & mask;
            if pair == 0 || pair == mask {
                diag += 0.5;
            } else {
                diag -= 0.5;
                let row = basis.rank(c ^ mask).expect("swap preserves magnetization");
                row_entries.push((row, col, C64::new(1.0, 0.0)));
            }
        }
        if diag != 0.0 {
            row_entries.push((col, col, C64::new(diag, 0.0)));
        }
        entries.extend(row_entries);
    }
    entries.sort_by_key(|e| (e.0, e.1));
    SectorBlockOperator {
        n_up: basis.n_up(),
        dim: basis.len(),
        entries,
    }
}

/// Applies `A` restricted to subsystem sites to a full-space vector through
/// the bipartition, i.e. `(A (x) 1_B) v`. Equivalent to [`PauliStringSum::apply`]
/// for operators supported on the subsystem.
pub fn apply_subsystem(sub_matrix: &CMatrix, v: &CVector, bp: &Bipartition) -> CVector {
    let mut out = CVector::zeros(v.len());
    let sub_dim = bp.sub_dim();
    for b in 0..bp.bath_dim() as u64 {
        for s in 0..sub_dim {
            let amp = v[bp.join(s as u64, b) as usize];
            if amp == C64::default() {
                continue;
            }
            for r in 0..sub_dim {
                let a = sub_matrix[(r, s)];
                if a != C64::default() {
                    out[bp.join(r as u64, b) as usize] += a * amp;
                }
            }
        }
    }
    out
}
