//! Equivalence checks of the sector-resolved fast paths against the dense
//! brute-force references on small systems.

use edh_core::basis::{all_sectors, Bipartition};
use edh_core::config::{builtin_graph, SpinGraph};
use edh_core::dynamics::{evolve_rdm, OverlapCoefficients};
use edh_core::operators::{classical_c, heisenberg_blocks, witness_w};
use edh_core::oracle;
use edh_core::reduced::{eigen_rdm, min_eigenvalue, transition_rdm};
use edh_core::spectral::{solve, EigenSystem};
use edh_core::witness::{quantumness, witness_scan, Witness};
use edh_core::{CMatrix, CVector, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn within(name: &'static str, observed: f64, tol: f64) -> Self {
        Check {
            name,
            passed: observed <= tol,
            detail: format!("max deviation {observed:.3e} (tolerance {tol:.0e})"),
        }
    }

    fn failed(name: &'static str, err: impl std::fmt::Display) -> Self {
        Check {
            name,
            passed: false,
            detail: err.to_string(),
        }
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> CVector {
    let v = CVector::from_fn(dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

/// Six sites, three in the subsystem, with one chord.
pub fn six_site_graph() -> SpinGraph {
    SpinGraph::new(6, vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (1, 4)], vec![0, 1, 2]).expect("valid graph")
}

pub fn two_site_spectrum() -> Check {
    let name = "two-site singlet/triplet spectrum";
    let g = SpinGraph::new(2, vec![(0, 1)], vec![0]).expect("valid graph");
    match solve(&g, 1e-8) {
        Ok(es) => {
            let dev = es
                .energies()
                .iter()
                .zip([-1.5, 0.5, 0.5, 0.5])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Check::within(name, dev, 1e-12)
        }
        Err(e) => Check::failed(name, e),
    }
}

pub fn chain_spectrum_vs_dense(n_sites: usize) -> Check {
    let name = "sector spectrum equals dense spectrum";
    let run = || -> edh_core::Result<f64> {
        let g = builtin_graph("chain", n_sites)?;
        let es = solve(&g, 1e-8)?;
        let dense = oracle::dense_spectrum(&g)?;
        Ok(es
            .energies()
            .iter()
            .zip(&dense)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    };
    match run() {
        Ok(dev) => Check::within(name, dev, 1e-9),
        Err(e) => Check::failed(name, e),
    }
}

pub fn blocks_vs_dense_hamiltonian() -> Check {
    let name = "sector blocks reassemble the dense Hamiltonian";
    let run = || -> edh_core::Result<f64> {
        let g = six_site_graph();
        let sectors = all_sectors(6)?;
        let blocks = heisenberg_blocks(&g, &sectors);
        let mut assembled = CMatrix::zeros(64, 64);
        for basis in &sectors {
            let block = blocks[&basis.n_up()].to_dense();
            for (p, &a) in basis.states().iter().enumerate() {
                for (q, &b) in basis.states().iter().enumerate() {
                    assembled[(a as usize, b as usize)] = block[(p, q)];
                }
            }
        }
        Ok(max_abs(&(assembled - oracle::dense_hamiltonian(&g)?)))
    };
    match run() {
        Ok(dev) => Check::within(name, dev, 1e-12),
        Err(e) => Check::failed(name, e),
    }
}

/// Largest `|H v - E v| / max(1, |E|)` over all eigenpairs, using the dense
/// Hamiltonian when small enough and the sector blocks otherwise.
pub fn max_residual(es: &EigenSystem, graph: &SpinGraph) -> edh_core::Result<f64> {
    let blocks = heisenberg_blocks(graph, es.sectors());
    let mut worst = 0.0f64;
    for n in 0..es.len() {
        let v = es.sector_vector(n);
        let e = es.energy(n);
        let hv = blocks[&es.sector_of(n)].matvec(&v);
        let r = (hv - &v * C64::new(e, 0.0)).norm() / e.abs().max(1.0);
        worst = worst.max(r);
    }
    Ok(worst)
}

pub fn residuals(graph: &SpinGraph) -> Check {
    let name = "eigenpair residuals";
    match solve(graph, 1e-8).and_then(|es| max_residual(&es, graph)) {
        Ok(r) => Check::within(name, r, 1e-9),
        Err(e) => Check::failed(name, e),
    }
}

pub fn partial_trace_vs_transition_rdm(graph: &SpinGraph, samples: usize, seed: u64) -> Check {
    let name = "transition RDM equals dense partial trace";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 1usize << graph.n_sites();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let u = random_state(&mut rng, dim);
        let v = random_state(&mut rng, dim);
        let fast = match transition_rdm(&u, &v, graph) {
            Ok(r) => r,
            Err(e) => return Check::failed(name, e),
        };
        let slow = match oracle::dense_partial_trace(&(&u * v.adjoint()), graph) {
            Ok(r) => r,
            Err(e) => return Check::failed(name, e),
        };
        worst = worst.max(max_abs(&(fast - slow)));
    }
    Check::within(name, worst, 1e-12)
}

/// Trace, positivity, orthogonality and adjoint identities over every
/// eigenstate pair.
pub fn rdm_identities(graph: &SpinGraph) -> Vec<Check> {
    let es = match solve(graph, 1e-8) {
        Ok(es) => es,
        Err(e) => return vec![Check::failed("RDM identities", e)],
    };
    let bp = Bipartition::new(graph);
    let (mut tr_diag, mut min_eig, mut tr_off, mut adj) = (0.0f64, f64::INFINITY, 0.0f64, 0.0f64);
    for n in 0..es.len() {
        let rho = eigen_rdm(&es, n, n, &bp).expect("label in range");
        tr_diag = tr_diag.max((rho.trace() - C64::new(1.0, 0.0)).norm());
        min_eig = min_eig.min(min_eigenvalue(&rho));
        for m in n + 1..es.len() {
            let nm = eigen_rdm(&es, n, m, &bp).expect("label in range");
            let mn = eigen_rdm(&es, m, n, &bp).expect("label in range");
            tr_off = tr_off.max(nm.trace().norm());
            adj = adj.max(max_abs(&(nm.adjoint() - mn)));
        }
    }
    vec![
        Check::within("diagonal RDMs have unit trace", tr_diag, 1e-10),
        Check {
            name: "diagonal RDMs are positive semidefinite",
            passed: min_eig >= -1e-10,
            detail: format!("smallest eigenvalue {min_eig:.3e} (bound -1e-10)"),
        },
        Check::within("off-diagonal transition RDMs are traceless", tr_off, 1e-10),
        Check::within("transition RDMs satisfy rho_nm^dagger = rho_mn", adj, 1e-12),
    ]
}

pub fn double_sum_vs_evolution(times: usize, seed: u64) -> Check {
    let name = "eigenbasis evolution equals transition-RDM double sum";
    let run = || -> edh_core::Result<f64> {
        let g = six_site_graph();
        let es = solve(&g, 1e-8)?;
        let bp = Bipartition::new(&g);
        let d = es.len();
        let mut rdms = Vec::with_capacity(d * d);
        for n in 0..d {
            for m in 0..d {
                rdms.push(eigen_rdm(&es, n, m, &bp)?);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = OverlapCoefficients::new(random_state(&mut rng, d).iter().copied().collect())?;
        let mut worst = 0.0f64;
        for _ in 0..times {
            let t = rng.random_range(0.0..20.0);
            let fast = evolve_rdm(&c, t, &es, &g)?;
            let slow = oracle::rdm_double_sum(c.amplitudes(), es.energies(), t, &rdms)?;
            worst = worst.max(max_abs(&(fast - slow)));
        }
        Ok(worst)
    };
    match run() {
        Ok(dev) => Check::within(name, dev, 1e-9),
        Err(e) => Check::failed(name, e),
    }
}

pub fn scan_vs_dense_elements() -> Check {
    let name = "pair scan equals dense matrix elements";
    let run = || -> edh_core::Result<f64> {
        let g = six_site_graph();
        let es = solve(&g, 1e-8)?;
        let full: Vec<CVector> = (0..es.len()).map(|n| es.eigenstate_full(n)).collect::<Result<_, _>>()?;
        let mut worst = 0.0f64;
        for op in [witness_w(g.subsystem()), classical_c(g.subsystem())] {
            let dense = oracle::dense_pauli_sum(&op, 6)?;
            let scan = witness_scan(&es, &Witness::new("A", op, &g)?, f64::INFINITY)?;
            for r in &scan.records {
                let a_mn = full[r.m].dotc(&(&dense * &full[r.n]));
                let a_mm = full[r.m].dotc(&(&dense * &full[r.m])).re;
                let a_nn = full[r.n].dotc(&(&dense * &full[r.n])).re;
                worst = worst
                    .max((r.w_abs - a_mn.norm()).abs())
                    .max((r.w - (0.5 * (a_mm + a_nn) + a_mn.re)).abs());
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(dev) => Check::within(name, dev, 1e-10),
        Err(e) => Check::failed(name, e),
    }
}

pub fn witness_reference_values() -> Check {
    let name = "witness on cat and maximally mixed states";
    let run = || -> edh_core::Result<f64> {
        let g = six_site_graph();
        let wit = Witness::new("W", witness_w(g.subsystem()), &g)?;
        let dim = 1usize << g.subsystem_len();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut cat = CVector::zeros(dim);
        cat[0] = C64::new(s, 0.0);
        cat[dim - 1] = C64::new(s, 0.0);
        let w_cat = quantumness(&(&cat * cat.adjoint()), &wit)?;
        let mixed = CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0);
        let w_mixed = quantumness(&mixed, &wit)?;
        Ok((w_cat - 1.0).abs().max(w_mixed))
    };
    match run() {
        Ok(dev) => Check::within(name, dev, 1e-12),
        Err(e) => Check::failed(name, e),
    }
}

/// The full suite run by `edh selftest`.
pub fn run_all() -> Vec<Check> {
    let mut checks = vec![
        two_site_spectrum(),
        chain_spectrum_vs_dense(6),
        blocks_vs_dense_hamiltonian(),
        residuals(&six_site_graph()),
        partial_trace_vs_transition_rdm(&six_site_graph(), 100, 7),
    ];
    checks.extend(rdm_identities(&six_site_graph()));
    checks.push(double_sum_vs_evolution(10, 3));
    checks.push(scan_vs_dense_elements());
    checks.push(witness_reference_values());
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for c in run_all() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn failures_carry_the_error() {
        let big = builtin_graph("chain", 9).unwrap();
        let c = partial_trace_vs_transition_rdm(&big, 1, 0);
        assert!(!c.passed);
        assert!(c.detail.contains("too large"));
    }
}
