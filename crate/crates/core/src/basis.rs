//! Bitstring computational basis organized by total magnetization, and the
//! subsystem/bath factorization of configurations.

use crate::config::SpinGraph;
use crate::error::{Error, Result};

/// Computational basis state: bit `i` set means site `i` is up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpinConfiguration(pub u64);

impl SpinConfiguration {
    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn n_up(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_up(self, site: usize) -> bool {
        self.0 >> site & 1 == 1
    }
}

/// All configurations with a fixed number of up spins, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    n_sites: usize,
    n_up: usize,
    states: Vec<u64>,
}

impl SectorBasis {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_up(&self) -> usize {
        self.n_up
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, position: usize) -> SpinConfiguration {
        SpinConfiguration(self.states[position])
    }

    /// Position of `config` in this sector, if it belongs here.
    pub fn rank(&self, config: u64) -> Option<usize> {
        self.states.binary_search(&config).ok()
    }
}

/// Enumerates the `n_up` sector in ascending order (Gosper's hack).
pub fn enumerate_sector(n_sites: usize, n_up: usize) -> Result<SectorBasis> {
    if n_up > n_sites || n_sites > 63 {
        return Err(Error::SectorOutOfRange { n_sites, n_up });
    }
    let mut states = Vec::with_capacity(binomial(n_sites, n_up));
    if n_up == 0 {
        states.push(0);
    } else {
        let limit = 1u64 << n_sites;
        let mut c = (1u64 << n_up) - 1;
        while c < limit {
            states.push(c);
            let lowest = c & c.wrapping_neg();
            let ripple = c + lowest;
            c = (((ripple ^ c) >> 2) / lowest) | ripple;
        }
    }
    Ok(SectorBasis { n_sites, n_up, states })
}

/// All sectors `n_up = 0..=n_sites`.
pub fn all_sectors(n_sites: usize) -> Result<Vec<SectorBasis>> {
    (0..=n_sites).map(|k| enumerate_sector(n_sites, k)).collect()
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Lookup tables for `c <-> (s_bits, b_bits)`.
///
/// `s_bits` bit `j` is site `subsystem[j]`; `b_bits` bit `j` is the `j`-th
/// bath site in ascending order.
#[derive(Debug, Clone)]
pub struct Bipartition {
    subsystem: Vec<usize>,
    bath: Vec<usize>,
    sub_embed: Vec<u64>,
    bath_embed: Vec<u64>,
}

impl Bipartition {
    pub fn new(graph: &SpinGraph) -> Self {
        let subsystem = graph.subsystem().to_vec();
        let bath = graph.bath().to_vec();
        let sub_embed = (0..1u64 << subsystem.len()).map(|s| scatter(s, &subsystem)).collect();
        let bath_embed = (0..1u64 << bath.len()).map(|b| scatter(b, &bath)).collect();
        Bipartition {
            subsystem,
            bath,
            sub_embed,
            bath_embed,
        }
    }

    /// Subsystem dimension `2^M`.
    pub fn sub_dim(&self) -> usize {
        self.sub_embed.len()
    }

    /// Bath dimension `2^(N-M)`.
    pub fn bath_dim(&self) -> usize {
        self.bath_embed.len()
    }

    pub fn split(&self, config: u64) -> (u64, u64) {
        (gather(config, &self.subsystem), gather(config, &self.bath))
    }

    pub fn join(&self, s_bits: u64, b_bits: u64) -> u64 {
        self.sub_embed[s_bits as usize] | self.bath_embed[b_bits as usize]
    }

    /// Full-space bits of a subsystem pattern with the bath all down.
    pub fn embed_subsystem(&self, s_bits: u64) -> u64 {
        self.sub_embed[s_bits as usize]
    }

    pub fn embed_bath(&self, b_bits: u64) -> u64 {
        self.bath_embed[b_bits as usize]
    }
}

/// Splits a configuration into subsystem and bath bit patterns.
pub fn split_config(config: SpinConfiguration, graph: &SpinGraph) -> (u64, u64) {
    (gather(config.0, graph.subsystem()), gather(config.0, graph.bath()))
}

/// Inverse of [`split_config`].
pub fn join_config(s_bits: u64, b_bits: u64, graph: &SpinGraph) -> SpinConfiguration {
    SpinConfiguration(scatter(s_bits, graph.subsystem()) | scatter(b_bits, graph.bath()))
}

fn gather(config: u64, sites: &[usize]) -> u64 {
    sites
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &site)| acc | ((config >> site) & 1) << j)
}

fn scatter(packed: u64, sites: &[usize]) -> u64 {
    sites
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &site)| acc | ((packed >> j) & 1) << site)
}
