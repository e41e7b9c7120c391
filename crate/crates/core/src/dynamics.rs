//! Quench dynamics in the eigenbasis: overlaps, `Psi_t`, the subsystem
//! density matrix `rho_t`, witness time series and long-time averages.

use rayon::prelude::*;

use crate::basis::Bipartition;
use crate::config::SpinGraph;
use crate::error::{Error, Result};
use crate::reduced::{purity, transition_rdm_with};
use crate::spectral::EigenSystem;
use crate::witness::{quantumness, Witness};
use crate::{CMatrix, CVector, C64};

/// Tolerance on `sum |c_n|^2 = 1` and on input state norms.
pub const NORM_TOL: f64 = 1e-10;

/// `c_n = <Phi_n|Psi_0>` indexed by global label.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapCoefficients {
    c: Vec<C64>,
}

impl OverlapCoefficients {
    pub fn new(c: Vec<C64>) -> Result<Self> {
        let out = OverlapCoefficients { c };
        out.check_normalized()?;
        Ok(out)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.c
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let norm_sqr = self.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::Unnormalized { norm_sqr });
        }
        Ok(())
    }
}

fn check_state(psi: &CVector, es: &EigenSystem) -> Result<()> {
    let dim = 1usize << es.n_sites();
    if psi.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            actual: psi.len(),
        });
    }
    let norm_sqr = psi.norm_squared();
    if (norm_sqr - 1.0).abs() > NORM_TOL {
        return Err(Error::Unnormalized { norm_sqr });
    }
    Ok(())
}

/// Expands a normalized full-space state in the eigenbasis.
pub fn overlaps(psi0: &CVector, es: &EigenSystem) -> Result<OverlapCoefficients> {
    check_state(psi0, es)?;
    let mut c = vec![C64::default(); es.len()];
    for (k, basis) in es.sectors().iter().enumerate() {
        let restricted = CVector::from_iterator(basis.len(), basis.states().iter().map(|&s| psi0[s as usize]));
        let proj = es.sector_eigen(k).vectors.adjoint() * restricted;
        for (p, amp) in proj.iter().enumerate() {
            c[es.global_label(k, p)] = *amp;
        }
    }
    OverlapCoefficients::new(c)
}

/// Alternating bath pattern `0101...`: the first bath site (ascending order)
/// down, the second up, and so on.
pub fn alternating_bath(graph: &SpinGraph) -> u64 {
    (0..graph.bath().len()).filter(|j| j % 2 == 1).fold(0, |acc, j| acc | 1 << j)
}

/// Parses a `0`/`1` string (one character per bath site, ascending) into bath bits.
pub fn parse_bath_bits(bits: &str, graph: &SpinGraph) -> Result<u64> {
    let len = graph.bath().len();
    if bits.len() != len {
        return Err(Error::config("bath_initial", format!("expected {len} characters")));
    }
    bits.chars().enumerate().try_fold(0u64, |acc, (j, ch)| match ch {
        '0' => Ok(acc),
        '1' => Ok(acc | 1 << j),
        _ => Err(Error::config("bath_initial", format!("invalid character `{ch}`"))),
    })
}

/// `(|up...up> + |down...down>)/sqrt2` on the subsystem times the bath configuration.
pub fn cat_initial(graph: &SpinGraph, bath_bits: u64) -> Result<CVector> {
    let bp = Bipartition::new(graph);
    if bath_bits as usize >= bp.bath_dim() {
        return Err(Error::config("bath_initial", "bath configuration out of range"));
    }
    let all_up = (bp.sub_dim() - 1) as u64;
    let mut psi = CVector::zeros(bp.sub_dim() * bp.bath_dim());
    let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    psi[bp.join(0, bath_bits) as usize] = amp;
    psi[bp.join(all_up, bath_bits) as usize] = amp;
    Ok(psi)
}

/// `Psi_t = sum_n c_n e^{-i E_n t} Phi_n` in the full space.
pub fn evolve_state(c: &OverlapCoefficients, t: f64, es: &EigenSystem) -> Result<CVector> {
    if c.len() != es.len() {
        return Err(Error::Dimension {
            expected: es.len(),
            actual: c.len(),
        });
    }
    let mut psi = CVector::zeros(1 << es.n_sites());
    for (k, basis) in es.sectors().iter().enumerate() {
        let se = es.sector_eigen(k);
        let weights = CVector::from_iterator(
            basis.len(),
            (0..basis.len()).map(|p| {
                let n = es.global_label(k, p);
                c.amplitudes()[n] * C64::from_polar(1.0, -es.energy(n) * t)
            }),
        );
        if weights.iter().all(|w| *w == C64::default()) {
            continue;
        }
        let part = &se.vectors * weights;
        for (&s, amp) in basis.states().iter().zip(part.iter()) {
            psi[s as usize] = *amp;
        }
    }
    Ok(psi)
}

/// Subsystem density matrix at time `t`, via `tr_B |Psi_t><Psi_t|`.
pub fn evolve_rdm(c: &OverlapCoefficients, t: f64, es: &EigenSystem, graph: &SpinGraph) -> Result<CMatrix> {
    evolve_rdm_with(c, t, es, &Bipartition::new(graph))
}

fn evolve_rdm_with(c: &OverlapCoefficients, t: f64, es: &EigenSystem, bp: &Bipartition) -> Result<CMatrix> {
    let psi = evolve_state(c, t, es)?;
    transition_rdm_with(&psi, &psi, bp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeRow {
    pub t: f64,
    pub w: f64,
    pub purity: f64,
    pub trace_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub rows: Vec<TimeRow>,
}

/// Witness value, purity and trace error of `rho_t` on a time grid.
pub fn witness_timeseries(
    psi0: &CVector,
    witness: &Witness,
    times: &[f64],
    es: &EigenSystem,
    graph: &SpinGraph,
) -> Result<TimeSeries> {
    if times.is_empty() || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("times", "time grid must be nonempty and strictly increasing"));
    }
    witness.check_unit_norm()?;
    let c = overlaps(psi0, es)?;
    let bp = Bipartition::new(graph);
    let rows = times
        .par_iter()
        .map(|&t| {
            let rho = evolve_rdm_with(&c, t, es, &bp)?;
            Ok(TimeRow {
                t,
                w: quantumness(&rho, witness)?,
                purity: purity(&rho),
                trace_err: (rho.trace() - C64::new(1.0, 0.0)).norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeries { rows })
}

const AVERAGE_CHUNK: usize = 64;

pub const DEFAULT_THRESHOLD_FRACTION: f64 = 1.0 / std::f64::consts::E;

/// First grid time with `w(t) <= threshold_fraction * w(0)`; `None` if the
/// threshold is never reached.
pub fn decoherence_time(series: &TimeSeries, threshold_fraction: f64) -> Result<Option<f64>> {
    let first = series
        .rows
        .first()
        .ok_or_else(|| Error::Undefined("empty time series".into()))?;
    if first.t != 0.0 {
        return Err(Error::Undefined("time series must start at t = 0".into()));
    }
    if first.w == 0.0 {
        return Err(Error::Undefined("witness vanishes at t = 0; decoherence time undefined".into()));
    }
    let threshold = threshold_fraction * first.w;
    Ok(series.rows.iter().find(|r| r.w <= threshold).map(|r| r.t))
}

/// Average of `rho_t` over the uniform grid `t_k = k T / n_samples`,
/// `k = 0..n_samples`. A full period of a two-level beat averages exactly to
/// zero on this grid.
pub fn time_average_rdm(
    c: &OverlapCoefficients,
    t_max: f64,
    n_samples: usize,
    es: &EigenSystem,
    graph: &SpinGraph,
) -> Result<CMatrix> {
    if !(t_max > 0.0) {
        return Err(Error::Undefined("averaging window must be positive".into()));
    }
    if n_samples < 2 {
        return Err(Error::Undefined("need at least two samples".into()));
    }
    let bp = Bipartition::new(graph);
    let dt = t_max / n_samples as f64;
    // Fixed chunks summed in order keep the result independent of the thread count.
    let chunk_sums = (0..n_samples.div_ceil(AVERAGE_CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut acc = CMatrix::zeros(bp.sub_dim(), bp.sub_dim());
            for k in chunk * AVERAGE_CHUNK..((chunk + 1) * AVERAGE_CHUNK).min(n_samples) {
                acc += evolve_rdm_with(c, k as f64 * dt, es, &bp)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let sum = chunk_sums
        .into_iter()
        .fold(CMatrix::zeros(bp.sub_dim(), bp.sub_dim()), |a, b| a + b);
    Ok(sum / C64::new(n_samples as f64, 0.0))
}
