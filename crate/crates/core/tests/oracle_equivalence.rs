use edh_core::basis::all_sectors;
use edh_core::config::{builtin_graph, SpinGraph};
use edh_core::dynamics::{evolve_rdm, OverlapCoefficients};
use edh_core::operators::{classical_c, heisenberg_blocks, witness_w};
use edh_core::oracle;
use edh_core::reduced::{eigen_rdm, transition_rdm};
use edh_core::spectral::solve;
use edh_core::witness::{witness_scan, Witness};
use edh_core::{CMatrix, CVector, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> CVector {
    let v = CVector::from_fn(dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

#[test]
fn sector_blocks_reassemble_dense_hamiltonian() {
    let g = builtin_graph("chain", 6).unwrap();
    let sectors = all_sectors(6).unwrap();
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
    let dense = oracle::dense_hamiltonian(&g).unwrap();
    assert!(max_abs(&(assembled - dense)) < 1e-12);
}

#[test]
fn spectra_match_dense_oracle() {
    let irregular = SpinGraph::new(7, vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (0, 3), (2, 6)], vec![0, 2, 5])
        .unwrap();
    for g in [builtin_graph("chain", 6).unwrap(), irregular] {
        let es = solve(&g, 1e-8).unwrap();
        let dense = oracle::dense_spectrum(&g).unwrap();
        assert_eq!(es.len(), dense.len());
        for (a, b) in es.energies().iter().zip(&dense) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn transition_rdm_matches_partial_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (n, sub) in [(6, vec![0, 1, 2]), (8, vec![1, 4, 6, 7])] {
        let g = SpinGraph::new(n, vec![(0, 1)], sub).unwrap();
        for _ in 0..50 {
            let u = random_state(&mut rng, 1 << n);
            let v = random_state(&mut rng, 1 << n);
            let fast = transition_rdm(&u, &v, &g).unwrap();
            let slow = oracle::dense_partial_trace(&(&u * v.adjoint()), &g).unwrap();
            assert!(max_abs(&(fast - slow)) < 1e-12);
        }
    }
}

#[test]
fn double_sum_matches_eigenbasis_evolution() {
    let g = SpinGraph::new(6, vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (1, 4)], vec![0, 1, 2]).unwrap();
    let es = solve(&g, 1e-8).unwrap();
    let bp = edh_core::basis::Bipartition::new(&g);
    let d = es.len();
    let mut rdms = Vec::with_capacity(d * d);
    for n in 0..d {
        for m in 0..d {
            rdms.push(eigen_rdm(&es, n, m, &bp).unwrap());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let c = random_state(&mut rng, d);
    let coeffs = OverlapCoefficients::new(c.iter().copied().collect()).unwrap();
    for _ in 0..10 {
        let t = rng.random_range(0.0..20.0);
        let fast = evolve_rdm(&coeffs, t, &es, &g).unwrap();
        let slow = oracle::rdm_double_sum(coeffs.amplitudes(), es.energies(), t, &rdms).unwrap();
        assert!(max_abs(&(&fast - &slow)) < 1e-9);
        assert!(max_abs(&(&slow - slow.adjoint())) < 1e-12);
    }
}

#[test]
fn scan_matches_dense_matrix_elements() {
    let g = builtin_graph("chain", 8).unwrap();
    let es = solve(&g, 1e-8).unwrap();
    let full: Vec<CVector> = (0..es.len()).map(|n| es.eigenstate_full(n).unwrap()).collect();
    for op in [witness_w(g.subsystem()), classical_c(g.subsystem())] {
        let dense = oracle::dense_pauli_sum(&op, 8).unwrap();
        let wit = Witness::new("A", op, &g).unwrap();
        let scan = witness_scan(&es, &wit, f64::INFINITY).unwrap();
        assert_eq!(scan.records.len() + scan.structurally_zero, scan.total_pairs);
        for r in &scan.records {
            let a_mn = full[r.m].dotc(&(&dense * &full[r.n]));
            let a_mm = full[r.m].dotc(&(&dense * &full[r.m])).re;
            let a_nn = full[r.n].dotc(&(&dense * &full[r.n])).re;
            assert!((r.w_abs - a_mn.norm()).abs() < 1e-10);
            assert!((r.w - (0.5 * (a_mm + a_nn) + a_mn.re)).abs() < 1e-10);
        }
    }
}
