//! Quantumness witnesses: `w(rho) = |tr rho A|`, the pairwise eigenstate
//! witness `w_mn = 1/2 <m + n| A |m + n>`, full gap scans and binned
//! statistics.

use std::sync::Arc;

use rayon::prelude::*;

use crate::config::SpinGraph;
use crate::error::{Error, Result};
use crate::operators::{operator_norm, PauliStringSum};
use crate::spectral::EigenSystem;
use crate::{CMatrix, C64};

/// Allowed deviation of a witness operator norm from 1.
pub const NORM_TOL: f64 = 1e-10;

/// A Hermitian subsystem operator together with its dense subsystem matrix.
#[derive(Debug, Clone)]
pub struct Witness {
    id: Arc<str>,
    op: PauliStringSum,
    sub_matrix: CMatrix,
    norm: f64,
}

impl Witness {
    /// Checks Hermiticity and computes the norm on the subsystem. Does not
    /// require unit norm; [`quantumness`] does.
    pub fn new(id: &str, op: PauliStringSum, graph: &SpinGraph) -> Result<Self> {
        let norm = operator_norm(&op, graph.subsystem())?;
        let sub_matrix = op.subsystem_matrix(graph)?;
        Ok(Witness {
            id: id.into(),
            op,
            sub_matrix,
            norm,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn operator(&self) -> &PauliStringSum {
        &self.op
    }

    pub fn subsystem_matrix(&self) -> &CMatrix {
        &self.sub_matrix
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn check_unit_norm(&self) -> Result<()> {
        if (self.norm - 1.0).abs() > NORM_TOL {
            return Err(Error::WitnessNorm { norm: self.norm });
        }
        Ok(())
    }
}

/// `|tr(rho A)|` for a unit-norm witness.
pub fn quantumness(rho: &CMatrix, witness: &Witness) -> Result<f64> {
    witness.check_unit_norm()?;
    let a = witness.subsystem_matrix();
    if rho.nrows() != a.nrows() || rho.ncols() != a.ncols() {
        return Err(Error::Dimension {
            expected: a.nrows(),
            actual: rho.nrows(),
        });
    }
    Ok(trace_product(rho, a).norm())
}

/// `tr(X Y)` without forming the product.
pub(crate) fn trace_product(x: &CMatrix, y: &CMatrix) -> C64 {
    let mut acc = C64::default();
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            acc += x[(i, j)] * y[(j, i)];
        }
    }
    acc
}

/// Value of the pair witness and the gauge-invariant off-diagonal magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairWitness {
    /// `1/2 (A_mm + A_nn) + Re A_mn`.
    pub w: f64,
    /// `|A_mn|`.
    pub w_abs: f64,
}

/// `w_mn` from full-space eigenvectors: `A_ab = <Phi_a|A Phi_b>`.
pub fn pair_witness(m: usize, n: usize, witness: &Witness, es: &EigenSystem) -> Result<PairWitness> {
    es.check_label(m)?;
    es.check_label(n)?;
    if m == n {
        return Err(Error::Undefined("pair witness needs two distinct eigenstates".into()));
    }
    let phi_m = es.eigenstate_full(m)?;
    let phi_n = es.eigenstate_full(n)?;
    let a_phi_m = witness.operator().apply(&phi_m, es.n_sites())?;
    let a_phi_n = witness.operator().apply(&phi_n, es.n_sites())?;
    let a_mm = phi_m.dotc(&a_phi_m);
    let a_nn = phi_n.dotc(&a_phi_n);
    let a_mn = phi_m.dotc(&a_phi_n);
    Ok(PairWitness {
        w: 0.5 * (a_mm.re + a_nn.re) + a_mn.re,
        w_abs: a_mn.norm(),
    })
}

/// One scanned eigenstate pair, `m < n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessRecord {
    pub m: usize,
    pub n: usize,
    pub sector_m: usize,
    pub sector_n: usize,
    pub e_m: f64,
    pub e_n: f64,
    pub gap: f64,
    pub w: f64,
    pub w_abs: f64,
    pub operator_id: Arc<str>,
    /// `m` or `n` is degenerate with another state of its own sector.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub operator_id: Arc<str>,
    /// Sorted by `(gap, m, n)`.
    pub records: Vec<WitnessRecord>,
    /// Pairs whose off-diagonal element vanishes by the magnetization selection rule.
    pub structurally_zero: usize,
    /// Allowed pairs dropped because `gap > gap_max`.
    pub beyond_gap: usize,
    pub total_pairs: usize,
}

/// Matrix of `A` between eigenvectors: entry `(p, q)` is
/// `<Phi_(to, p)| A |Phi_(from, q)>`.
fn eigen_block(witness: &Witness, es: &EigenSystem, to: usize, from: usize) -> Result<CMatrix> {
    let source = &es.sectors()[from];
    let target = &es.sectors()[to];
    let mut a = CMatrix::zeros(target.len(), source.len());
    for (q, &c) in source.states().iter().enumerate() {
        for term in witness.operator().terms() {
            if let Some((c2, amp)) = term.act(c) {
                if let Some(p) = target.rank(c2) {
                    a[(p, q)] += amp;
                }
            }
        }
    }
    let v_to = &es.sector_eigen(to).vectors;
    let v_from = &es.sector_eigen(from).vectors;
    Ok(v_to.adjoint() * a * v_from)
}

/// Scans every eigenstate pair allowed by the selection rule of `A` with
/// `|E_m - E_n| <= gap_max`.
pub fn witness_scan(es: &EigenSystem, witness: &Witness, gap_max: f64) -> Result<ScanResult> {
    let op = witness.operator();
    let n_sectors = es.sectors().len();

    // Diagonal elements A_nn, nonzero only if A can preserve the sector.
    let diag: Vec<Vec<f64>> = (0..n_sectors)
        .into_par_iter()
        .map(|k| {
            if op.connects(k, k) {
                eigen_block(witness, es, k, k).map(|b| b.diagonal().iter().map(|x| x.re).collect())
            } else {
                Ok(vec![0.0; es.sectors()[k].len()])
            }
        })
        .collect::<Result<_>>()?;

    let sector_pairs: Vec<(usize, usize)> = (0..n_sectors)
        .flat_map(|a| (a..n_sectors).map(move |b| (a, b)))
        .filter(|&(a, b)| op.connects(b, a))
        .collect();

    let chunks: Vec<(Vec<WitnessRecord>, usize)> = sector_pairs
        .par_iter()
        .map(|&(ka, kb)| {
            let block = eigen_block(witness, es, ka, kb)?;
            let mut out = Vec::new();
            let mut beyond = 0;
            for p in 0..block.nrows() {
                let q_start = if ka == kb { p + 1 } else { 0 };
                for q in q_start..block.ncols() {
                    let la = es.global_label(ka, p);
                    let lb = es.global_label(kb, q);
                    let gap = (es.energy(la) - es.energy(lb)).abs();
                    if !(gap <= gap_max) {
                        beyond += 1;
                        continue;
                    }
                    // block[(p, q)] = <la|A|lb>; order the pair by global label
                    let (m, n, pm, pn, a_mn) = if la < lb {
                        (la, lb, (ka, p), (kb, q), block[(p, q)])
                    } else {
                        (lb, la, (kb, q), (ka, p), block[(p, q)].conj())
                    };
                    let a_mm = diag[pm.0][pm.1];
                    let a_nn = diag[pn.0][pn.1];
                    out.push(WitnessRecord {
                        m,
                        n,
                        sector_m: pm.0,
                        sector_n: pn.0,
                        e_m: es.energy(m),
                        e_n: es.energy(n),
                        gap,
                        w: 0.5 * (a_mm + a_nn) + a_mn.re,
                        w_abs: a_mn.norm(),
                        operator_id: witness.id.clone(),
                        degenerate: es.has_sector_degeneracy(m) || es.has_sector_degeneracy(n),
                    });
                }
            }
            Ok((out, beyond))
        })
        .collect::<Result<_>>()?;

    let beyond_gap = chunks.iter().map(|c| c.1).sum();
    let mut records: Vec<WitnessRecord> = chunks.into_iter().flat_map(|c| c.0).collect();
    records.sort_by(|a, b| a.gap.total_cmp(&b.gap).then((a.m, a.n).cmp(&(b.m, b.n))));
    let d = es.len();
    let total_pairs = d * d.saturating_sub(1) / 2;
    Ok(ScanResult {
        operator_id: witness.id.clone(),
        structurally_zero: total_pairs - records.len() - beyond_gap,
        beyond_gap,
        records,
        total_pairs,
    })
}

/// Records with neither eigenstate degenerate within its sector.
pub fn unflagged(records: &[WitnessRecord]) -> Vec<WitnessRecord> {
    records.iter().filter(|r| !r.degenerate).cloned().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

impl Bin {
    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedStats {
    pub bin_width: f64,
    pub use_abs: bool,
    pub bins: Vec<Bin>,
}

/// Uniform bins `[k w, (k+1) w)` covering `[0, max gap]`; statistics of
/// `w_abs` (if `use_abs`) or `|w|`. Empty bins report zeros.
pub fn bin_stats(records: &[WitnessRecord], bin_width: f64, use_abs: bool) -> Result<BinnedStats> {
    if !(bin_width > 0.0) {
        return Err(Error::Undefined("bin width must be positive".into()));
    }
    if records.is_empty() {
        return Err(Error::Undefined("no records to bin".into()));
    }
    let max_gap = records.iter().map(|r| r.gap).fold(0.0, f64::max);
    let n_bins = (max_gap / bin_width).floor() as usize + 1;
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
    for r in records {
        let k = ((r.gap / bin_width).floor() as usize).min(n_bins - 1);
        values[k].push(if use_abs { r.w_abs } else { r.w.abs() });
    }
    let bins = values
        .into_iter()
        .enumerate()
        .map(|(k, mut v)| {
            let lo = k as f64 * bin_width;
            let hi = (k + 1) as f64 * bin_width;
            if v.is_empty() {
                return Bin {
                    lo,
                    hi,
                    count: 0,
                    median: 0.0,
                    mean: 0.0,
                    max: 0.0,
                };
            }
            v.sort_by(f64::total_cmp);
            Bin {
                lo,
                hi,
                count: v.len(),
                median: median_sorted(&v),
                mean: v.iter().sum::<f64>() / v.len() as f64,
                max: v[v.len() - 1],
            }
        })
        .collect();
    Ok(BinnedStats {
        bin_width,
        use_abs,
        bins,
    })
}

pub fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median of an unsorted slice; `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(median_sorted(&v))
}

/// Ranks starting at 1, ties receive their average rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let rank = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; `None` for fewer than two points or a
/// constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Low-gap versus mid-gap comparison of binned medians.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    pub lowest_median: f64,
    /// Medians of the nonempty bins whose centers lie in the window.
    pub window_medians: Vec<f64>,
    /// Median of `window_medians`.
    pub window_median: f64,
    /// `lowest_median / window_median`.
    pub ratio: f64,
    /// Spearman correlation of `(gap, value)` over records with `gap <= low_gap_limit`.
    pub low_gap_spearman: Option<f64>,
}

impl GapProfile {
    /// Lowest bin strictly below every window bin.
    pub fn suppressed(&self) -> bool {
        !self.window_medians.is_empty() && self.window_medians.iter().all(|&m| self.lowest_median < m)
    }
}

pub fn gap_profile(
    records: &[WitnessRecord],
    stats: &BinnedStats,
    window: (f64, f64),
    low_gap_limit: f64,
) -> Result<GapProfile> {
    let lowest = stats
        .bins
        .first()
        .filter(|b| b.count > 0)
        .ok_or_else(|| Error::Undefined("lowest gap bin is empty".into()))?;
    let window_medians: Vec<f64> = stats
        .bins
        .iter()
        .filter(|b| b.count > 0 && b.center() >= window.0 && b.center() <= window.1)
        .map(|b| b.median)
        .collect();
    let window_median =
        median(&window_medians).ok_or_else(|| Error::Undefined("no populated bins in the window".into()))?;
    let (gaps, vals): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.gap <= low_gap_limit)
        .map(|r| (r.gap, if stats.use_abs { r.w_abs } else { r.w.abs() }))
        .unzip();
    Ok(GapProfile {
        lowest_median: lowest.median,
        ratio: lowest.median / window_median,
        window_medians,
        window_median,
        low_gap_spearman: spearman(&gaps, &vals),
    })
}
