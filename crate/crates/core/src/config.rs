//! Model description: interaction graph, subsystem/bath bipartition, witness
//! operators and run parameters, plus the TOML model-file format.
//!
//! A model file looks like
//!
//! ```toml
//! n_sites = 4
//! edges = [[0, 1], [1, 2], [2, 3]]
//! subsystem = [0, 1]
//! degeneracy_tolerance = 1e-8
//! gap_max = "inf"
//! bin_width = 0.25
//! times = { start = 0.0, stop = 50.0, steps = 500 }
//!
//! [[operators]]
//! id = "W"
//! kind = "W"
//!
//! [[operators]]
//! id = "XX"
//! kind = "pauli_sum"
//! terms = [{ coeff_re = 1.0, coeff_im = 0.0, factors = [[0, "x"], [1, "x"]] }]
//! ```
//!
//! Instead of `edges`, a `preset` of `"chain"` or `"default10"` may be given.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};

/// Interaction graph with a subsystem/bath bipartition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinGraph {
    n_sites: usize,
    edges: Vec<(usize, usize)>,
    subsystem: Vec<usize>,
    bath: Vec<usize>,
}

/// Largest supported system. Configurations are stored in `u64` and the full
/// space is materialized as dense vectors.
pub const MAX_SITES: usize = 24;

impl SpinGraph {
    /// Validates and builds a graph. Edges are stored as `(min, max)` in the
    /// order given. A disconnected graph is accepted with a warning.
    pub fn new(n_sites: usize, edges: Vec<(usize, usize)>, subsystem: Vec<usize>) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::config("n_sites", "need at least 2 sites for a bipartition"));
        }
        if n_sites > MAX_SITES {
            return Err(Error::config("n_sites", format!("at most {MAX_SITES} sites supported")));
        }
        let mut seen = HashSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for &(i, j) in &edges {
            if i >= n_sites || j >= n_sites {
                return Err(Error::config(
                    "edges",
                    format!("site index out of range in edge [{i}, {j}] (n_sites = {n_sites})"),
                ));
            }
            if i == j {
                return Err(Error::config("edges", format!("self-loop on site {i}")));
            }
            let e = (i.min(j), i.max(j));
            if !seen.insert(e) {
                return Err(Error::config("edges", format!("duplicate edge [{}, {}]", e.0, e.1)));
            }
            normalized.push(e);
        }
        if subsystem.is_empty() {
            return Err(Error::config("subsystem", "empty subsystem"));
        }
        if subsystem.len() >= n_sites {
            return Err(Error::config("subsystem", "subsystem must be a proper subset of the sites"));
        }
        let mut in_sub = vec![false; n_sites];
        for &s in &subsystem {
            if s >= n_sites {
                return Err(Error::config(
                    "subsystem",
                    format!("site index {s} out of range (n_sites = {n_sites})"),
                ));
            }
            if in_sub[s] {
                return Err(Error::config("subsystem", format!("site {s} listed twice")));
            }
            in_sub[s] = true;
        }
        let bath = (0..n_sites).filter(|&s| !in_sub[s]).collect();
        let graph = SpinGraph {
            n_sites,
            edges: normalized,
            subsystem,
            bath,
        };
        if !graph.is_connected() {
            log::warn!("interaction graph with {n_sites} sites is disconnected");
        }
        Ok(graph)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Subsystem sites in packing order.
    pub fn subsystem(&self) -> &[usize] {
        &self.subsystem
    }

    /// Bath sites in ascending order.
    pub fn bath(&self) -> &[usize] {
        &self.bath
    }

    /// Number of subsystem sites, `M`.
    pub fn subsystem_len(&self) -> usize {
        self.subsystem.len()
    }

    pub fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n_sites];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut visited = vec![false; self.n_sites];
        let mut stack = vec![0];
        visited[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    stack.push(w);
                }
            }
        }
        visited.into_iter().all(|v| v)
    }

    /// Same graph with a different subsystem.
    pub fn with_subsystem(&self, subsystem: Vec<usize>) -> Result<Self> {
        SpinGraph::new(self.n_sites, self.edges.clone(), subsystem)
    }
}

/// Default subsystem: the first `floor(n_sites / 2)` sites.
pub fn default_subsystem(n_sites: usize) -> Vec<usize> {
    (0..(n_sites / 2).max(1)).collect()
}

/// Built-in graphs.
///
/// * `chain`: open chain `(i, i+1)`, the integrable reference.
/// * `default10`: open chain on 10 sites plus chords `(0,4)`, `(2,7)`, `(5,9)`,
///   which breaks integrability.
///
/// Both use the default subsystem (first half of the sites).
pub fn builtin_graph(name: &str, n_sites: usize) -> Result<SpinGraph> {
    let mut edges: Vec<(usize, usize)> = (0..n_sites.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    match name {
        "chain" => {}
        "default10" => {
            if n_sites != 10 {
                return Err(Error::config("preset", format!("default10 has 10 sites, not {n_sites}")));
            }
            edges.extend([(0, 4), (2, 7), (5, 9)]);
        }
        other => return Err(Error::config("preset", format!("unknown preset `{other}`"))),
    }
    SpinGraph::new(n_sites, edges, default_subsystem(n_sites))
}

/// Single-site factor of a Pauli string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliLetter {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "z")]
    Z,
    /// Raising operator `(x + iy)/2`.
    #[serde(rename = "+")]
    Plus,
    /// Lowering operator `(x - iy)/2`.
    #[serde(rename = "-")]
    Minus,
}

impl PauliLetter {
    pub fn symbol(self) -> &'static str {
        match self {
            PauliLetter::X => "x",
            PauliLetter::Y => "y",
            PauliLetter::Z => "z",
            PauliLetter::Plus => "+",
            PauliLetter::Minus => "-",
        }
    }
}

/// One term of a custom operator as written in the model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub coeff_re: f64,
    #[serde(default)]
    pub coeff_im: f64,
    pub factors: Vec<(usize, PauliLetter)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    /// `prod sigma^+ + prod sigma^-` over the subsystem.
    Witness,
    /// `prod sigma^z` over the subsystem.
    Classical,
    PauliSum(Vec<TermSpec>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    pub id: String,
    pub kind: OperatorKind,
}

/// Uniform time grid `start + k (stop - start) / steps`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid {
            start: 0.0,
            stop: 50.0,
            steps: 500,
        }
    }
}

impl TimeGrid {
    pub fn validate(&self) -> Result<()> {
        if self.start != 0.0 {
            return Err(Error::config("times", "time grid must start at 0"));
        }
        if !self.stop.is_finite() || self.stop < self.start {
            return Err(Error::config("times", "stop must be finite and >= start"));
        }
        if self.stop > self.start && self.steps == 0 {
            return Err(Error::config("times", "steps must be positive"));
        }
        Ok(())
    }

    /// Grid points; a zero-length interval yields the single time `start`.
    pub fn points(&self) -> Vec<f64> {
        if self.stop == self.start || self.steps == 0 {
            return vec![self.start];
        }
        let dt = (self.stop - self.start) / self.steps as f64;
        (0..=self.steps).map(|k| self.start + k as f64 * dt).collect()
    }
}

pub const DEFAULT_DEGENERACY_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_BIN_WIDTH: f64 = 0.25;

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub graph: SpinGraph,
    pub operators: Vec<OperatorSpec>,
    pub degeneracy_tolerance: f64,
    /// Largest `|E_m - E_n|` kept in scans; may be infinite.
    pub gap_max: f64,
    pub bin_width: f64,
    pub times: TimeGrid,
    /// Bath configuration for the cat quench, one `0`/`1` per bath site in
    /// ascending site order. `None` selects the alternating `0101...` pattern.
    pub bath_initial: Option<String>,
    pub out_dir: Option<String>,
}

impl RunConfig {
    /// Defaults around a given graph: operators `W` and `C`, tolerance 1e-8,
    /// unbounded gap, bin width 0.25, times 0..50 in 500 steps.
    pub fn with_graph(graph: SpinGraph) -> Self {
        RunConfig {
            graph,
            operators: default_operators(),
            degeneracy_tolerance: DEFAULT_DEGENERACY_TOLERANCE,
            gap_max: f64::INFINITY,
            bin_width: DEFAULT_BIN_WIDTH,
            times: TimeGrid::default(),
            bath_initial: None,
            out_dir: None,
        }
    }

    pub fn operator(&self, id: &str) -> Option<&OperatorSpec> {
        self.operators.iter().find(|op| op.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.degeneracy_tolerance > 0.0) {
            return Err(Error::config("degeneracy_tolerance", "must be > 0"));
        }
        if !(self.bin_width > 0.0) || !self.bin_width.is_finite() {
            return Err(Error::config("bin_width", "must be a finite value > 0"));
        }
        if self.gap_max.is_nan() || self.gap_max < 0.0 {
            return Err(Error::config("gap_max", "must be >= 0 or \"inf\""));
        }
        self.times.validate()?;
        let mut ids = HashSet::new();
        let sub: BTreeSet<usize> = self.graph.subsystem().iter().copied().collect();
        for op in &self.operators {
            if op.id.is_empty() {
                return Err(Error::config("operators", "operator id must be nonempty"));
            }
            if !ids.insert(op.id.as_str()) {
                return Err(Error::config("operators", format!("duplicate operator id `{}`", op.id)));
            }
            if let OperatorKind::PauliSum(terms) = &op.kind {
                if terms.is_empty() {
                    return Err(Error::config("operators", format!("operator `{}` has no terms", op.id)));
                }
                for term in terms {
                    let mut sites = HashSet::new();
                    for &(site, _) in &term.factors {
                        if !sub.contains(&site) {
                            return Err(Error::config(
                                "operators",
                                format!("operator `{}` acts on site {site} outside the subsystem", op.id),
                            ));
                        }
                        if !sites.insert(site) {
                            return Err(Error::config(
                                "operators",
                                format!("operator `{}` repeats site {site} within one term", op.id),
                            ));
                        }
                    }
                }
            }
        }
        if let Some(bits) = &self.bath_initial {
            let bath_len = self.graph.n_sites() - self.graph.subsystem_len();
            if bits.len() != bath_len || !bits.chars().all(|c| c == '0' || c == '1') {
                return Err(Error::config(
                    "bath_initial",
                    format!("expected {bath_len} characters of 0/1"),
                ));
            }
        }
        Ok(())
    }
}

pub fn default_operators() -> Vec<OperatorSpec> {
    vec![
        OperatorSpec {
            id: "W".into(),
            kind: OperatorKind::Witness,
        },
        OperatorSpec {
            id: "C".into(),
            kind: OperatorKind::Classical,
        },
    ]
}

const KNOWN_KEYS: &[&str] = &[
    "preset",
    "n_sites",
    "edges",
    "subsystem",
    "operators",
    "degeneracy_tolerance",
    "gap_max",
    "bin_width",
    "times",
    "bath_initial",
    "out_dir",
];

fn field<T: serde::de::DeserializeOwned>(table: &Table, key: &str) -> Result<Option<T>> {
    match table.get(key) {
        None => Ok(None),
        Some(v) => v
            .clone()
            .try_into()
            .map(Some)
            .map_err(|e: toml::de::Error| Error::config(key, e.message().trim().to_string())),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOperator {
    id: String,
    kind: String,
    #[serde(default)]
    terms: Option<Vec<TermSpec>>,
}

/// Parses and validates a model document.
pub fn parse_model(text: &str) -> Result<RunConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("document", e.message().trim().to_string()))?;
    if let Some(key) = table.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(Error::config(key.clone(), "unknown key"));
    }

    let preset: Option<String> = field(&table, "preset")?;
    let n_sites: Option<usize> = field(&table, "n_sites")?;
    let edges: Option<Vec<[usize; 2]>> = field(&table, "edges")?;
    let subsystem: Option<Vec<usize>> = field(&table, "subsystem")?;

    let graph = match (preset, edges) {
        (Some(_), Some(_)) => return Err(Error::config("edges", "give either `preset` or `edges`, not both")),
        (Some(name), None) => {
            let n = match (name.as_str(), n_sites) {
                (_, Some(n)) => n,
                ("default10", None) => 10,
                (_, None) => return Err(Error::config("n_sites", "missing")),
            };
            let g = builtin_graph(&name, n)?;
            match subsystem {
                Some(s) => g.with_subsystem(s)?,
                None => g,
            }
        }
        (None, Some(edges)) => {
            let n = n_sites.ok_or_else(|| Error::config("n_sites", "missing"))?;
            let edges = edges.into_iter().map(|[i, j]| (i, j)).collect();
            SpinGraph::new(n, edges, subsystem.unwrap_or_else(|| default_subsystem(n)))?
        }
        (None, None) => return Err(Error::config("edges", "missing (or give a `preset`)")),
    };

    let operators = match field::<Vec<RawOperator>>(&table, "operators")? {
        None => default_operators(),
        Some(raw) => raw
            .into_iter()
            .map(|op| {
                let kind = match (op.kind.as_str(), op.terms) {
                    ("W", None) => OperatorKind::Witness,
                    ("C", None) => OperatorKind::Classical,
                    ("pauli_sum", Some(terms)) => OperatorKind::PauliSum(terms),
                    ("pauli_sum", None) => {
                        return Err(Error::config("operators", format!("`{}` needs `terms`", op.id)))
                    }
                    ("W" | "C", Some(_)) => {
                        return Err(Error::config("operators", format!("`{}` takes no `terms`", op.id)))
                    }
                    (other, _) => {
                        return Err(Error::config("operators", format!("unknown operator kind `{other}`")))
                    }
                };
                Ok(OperatorSpec { id: op.id, kind })
            })
            .collect::<Result<Vec<_>>>()?,
    };

    let gap_max = match table.get("gap_max") {
        None => f64::INFINITY,
        Some(Value::Float(x)) => *x,
        Some(Value::Integer(x)) => *x as f64,
        Some(Value::String(s)) if s == "inf" => f64::INFINITY,
        Some(_) => return Err(Error::config("gap_max", "expected a number or \"inf\"")),
    };

    let cfg = RunConfig {
        graph,
        operators,
        degeneracy_tolerance: number(&table, "degeneracy_tolerance")?.unwrap_or(DEFAULT_DEGENERACY_TOLERANCE),
        gap_max,
        bin_width: number(&table, "bin_width")?.unwrap_or(DEFAULT_BIN_WIDTH),
        times: field(&table, "times")?.unwrap_or_default(),
        bath_initial: field(&table, "bath_initial")?,
        out_dir: field(&table, "out_dir")?,
    };
    cfg.validate()?;
    Ok(cfg)
}

// TOML integers do not coerce to floats through serde.
fn number(table: &Table, key: &str) -> Result<Option<f64>> {
    match table.get(key) {
        None => Ok(None),
        Some(Value::Float(x)) => Ok(Some(*x)),
        Some(Value::Integer(x)) => Ok(Some(*x as f64)),
        Some(_) => Err(Error::config(key, "expected a number")),
    }
}

/// Writes a configuration back out in the model-file format.
pub fn serialize_model(cfg: &RunConfig) -> String {
    let g = &cfg.graph;
    let mut t = Table::new();
    t.insert("n_sites".into(), Value::Integer(g.n_sites() as i64));
    t.insert(
        "edges".into(),
        Value::Array(
            g.edges()
                .iter()
                .map(|&(i, j)| Value::Array(vec![Value::Integer(i as i64), Value::Integer(j as i64)]))
                .collect(),
        ),
    );
    t.insert(
        "subsystem".into(),
        Value::Array(g.subsystem().iter().map(|&s| Value::Integer(s as i64)).collect()),
    );
    t.insert("degeneracy_tolerance".into(), Value::Float(cfg.degeneracy_tolerance));
    t.insert(
        "gap_max".into(),
        if cfg.gap_max.is_infinite() {
            Value::String("inf".into())
        } else {
            Value::Float(cfg.gap_max)
        },
    );
    t.insert("bin_width".into(), Value::Float(cfg.bin_width));
    t.insert("times".into(), Value::try_from(cfg.times).expect("time grid serializes"));
    if let Some(bits) = &cfg.bath_initial {
        t.insert("bath_initial".into(), Value::String(bits.clone()));
    }
    if let Some(dir) = &cfg.out_dir {
        t.insert("out_dir".into(), Value::String(dir.clone()));
    }
    let ops = cfg
        .operators
        .iter()
        .map(|op| {
            let mut o = Table::new();
            o.insert("id".into(), Value::String(op.id.clone()));
            let kind = match &op.kind {
                OperatorKind::Witness => "W",
                OperatorKind::Classical => "C",
                OperatorKind::PauliSum(terms) => {
                    o.insert("terms".into(), Value::try_from(terms).expect("terms serialize"));
                    "pauli_sum"
                }
            };
            o.insert("kind".into(), Value::String(kind.into()));
            Value::Table(o)
        })
        .collect();
    t.insert("operators".into(), Value::Array(ops));
    toml::to_string(&t).expect("model table serializes")
}
