//! Pipeline commands shared by the binary and the test suites.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use edh_core::config::{parse_model, OperatorKind, RunConfig, TimeGrid};
use edh_core::dynamics::{
    alternating_bath, cat_initial, decoherence_time, evolve_rdm, overlaps, parse_bath_bits, witness_timeseries,
    TimeSeries, DEFAULT_THRESHOLD_FRACTION,
};
use edh_core::operators::build_operator;
use edh_core::reduced::{diagonal_ensemble, eigen_rdm, trace_distance};
use edh_core::spectral::{solve, EigenSystem};
use edh_core::witness::{bin_stats, gap_profile, unflagged, witness_scan, BinnedStats, GapProfile, ScanResult, Witness};
use edh_core::{CVector, C64};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::output::{self, sci, OutputDir};
use crate::plot::scatter_svg;
use crate::regression;

/// Gap window whose bin medians are compared against the lowest bin.
pub const MID_GAP_WINDOW: (f64, f64) = (2.0, 5.0);
/// Records with `gap <= LOW_GAP_LIMIT` enter the rank correlation.
pub const LOW_GAP_LIMIT: f64 = 2.0;
/// Environment variable consulted for the output directory when neither
/// `--out` nor the model file names one.
pub const OUT_DIR_ENV: &str = "EDH_OUT_DIR";
const FALLBACK_OUT_DIR: &str = "edh-out";

pub fn load_config(path: &Path) -> CliResult<(RunConfig, String)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let cfg = parse_model(&text)?;
    Ok((cfg, text))
}

/// `--out`, then `out_dir` from the model file, then `$EDH_OUT_DIR`.
pub fn resolve_out_dir(flag: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.out_dir {
        return PathBuf::from(p);
    }
    std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from(FALLBACK_OUT_DIR), PathBuf::from)
}

/// Initial state for `evolve`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// Subsystem cat state times the configured bath pattern.
    Cat,
    Eigenstate(usize),
    /// CSV with header `config,re,im`; `config` is the full configuration index.
    File(PathBuf),
}

impl FromStr for InitialState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "cat" {
            return Ok(InitialState::Cat);
        }
        if let Some(n) = s.strip_prefix("eigenstate:") {
            return n
                .parse()
                .map(InitialState::Eigenstate)
                .map_err(|_| format!("invalid eigenstate label `{n}`"));
        }
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err("empty file path".into());
            }
            return Ok(InitialState::File(PathBuf::from(path)));
        }
        Err(format!("unknown initial state `{s}` (expected cat, eigenstate:<n> or file:<path>)"))
    }
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub operator: String,
    pub initial: InitialState,
    pub tmax: Option<f64>,
    pub steps: Option<usize>,
}

#[derive(Debug)]
pub struct ScanOutcome {
    pub scan: ScanResult,
    /// Over unflagged records, using `w_abs`.
    pub stats: BinnedStats,
    pub profile: Option<GapProfile>,
}

#[derive(Debug)]
pub struct EvolveOutcome {
    pub operator_id: String,
    pub series: TimeSeries,
    pub tau: Option<f64>,
    /// Trace distance between the state at the last grid time and the
    /// diagonal ensemble of the initial state.
    pub final_distance: f64,
    pub degenerate_support: bool,
}

/// A loaded model plus the directory results go to.
#[derive(Debug)]
pub struct Session {
    pub cfg: RunConfig,
    config_text: String,
    pub out: OutputDir,
    pub plot: bool,
}

impl Session {
    pub fn open(config: &Path, out_flag: Option<&Path>, plot: bool) -> CliResult<Self> {
        let (cfg, config_text) = load_config(config)?;
        let out = OutputDir::prepare(&resolve_out_dir(out_flag, &cfg))?;
        Ok(Session {
            cfg,
            config_text,
            out,
            plot,
        })
    }

    pub fn config_sha256(&self) -> String {
        Sha256::digest(self.config_text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn solve(&self) -> CliResult<EigenSystem> {
        let started = std::time::Instant::now();
        let es = solve(&self.cfg.graph, self.cfg.degeneracy_tolerance)?;
        log::info!(
            "diagonalized {} states in {:.2?} ({} degeneracy groups)",
            es.len(),
            started.elapsed(),
            es.degeneracy_groups().len()
        );
        Ok(es)
    }

    pub fn spectrum(&mut self) -> CliResult<EigenSystem> {
        let es = self.solve()?;
        self.out.write("spectrum.csv", &output::spectrum_csv(&es))?;
        Ok(es)
    }

    fn witness(&self, id: &str) -> CliResult<Witness> {
        let spec = self
            .cfg
            .operator(id)
            .ok_or_else(|| CliError::Config(format!("unknown operator id `{id}`")))?;
        let op = build_operator(spec, &self.cfg.graph)?;
        Witness::new(id, op, &self.cfg.graph).map_err(|e| match e {
            edh_core::Error::NotHermitian(msg) => CliError::Config(format!("operator `{id}` is not Hermitian: {msg}")),
            other => other.into(),
        })
    }

    pub fn witness_scan(&mut self, es: &EigenSystem, id: &str) -> CliResult<ScanOutcome> {
        let witness = self.witness(id)?;
        let scan = witness_scan(es, &witness, self.cfg.gap_max)?;
        log::info!(
            "operator {id}: {} records, {} pairs zero by selection rule, {} beyond gap_max",
            scan.records.len(),
            scan.structurally_zero,
            scan.beyond_gap
        );
        let kept = unflagged(&scan.records);
        let stats = bin_stats(&kept, self.cfg.bin_width, true).map_err(|e| {
            CliError::Numerical(format!("operator `{id}` has no unflagged records to bin: {e}"))
        })?;
        let profile = match gap_profile(&kept, &stats, MID_GAP_WINDOW, LOW_GAP_LIMIT) {
            Ok(p) => Some(p),
            Err(e) => {
                log::warn!("operator {id}: no gap profile ({e})");
                None
            }
        };
        let stem = output::file_stem(id);
        self.out.write(&format!("scan_{stem}.csv"), &output::records_csv(&scan.records))?;
        self.out.write(&format!("bins_{stem}.csv"), &output::bins_csv(&stats))?;
        if self.plot {
            let svg = scatter_svg(&scan.records, &stats, &format!("operator {id}"));
            self.out.write(&format!("scan_{stem}.svg"), svg.as_bytes())?;
        }
        Ok(ScanOutcome { scan, stats, profile })
    }

    fn initial_state(&self, es: &EigenSystem, initial: &InitialState) -> CliResult<CVector> {
        let graph = &self.cfg.graph;
        match initial {
            InitialState::Cat => {
                let bath = match &self.cfg.bath_initial {
                    Some(bits) => parse_bath_bits(bits, graph)?,
                    None => alternating_bath(graph),
                };
                Ok(cat_initial(graph, bath)?)
            }
            InitialState::Eigenstate(n) => es
                .eigenstate_full(*n)
                .map_err(|e| CliError::Config(format!("--initial: {e}"))),
            InitialState::File(path) => read_state_file(path, 1usize << graph.n_sites()),
        }
    }

    pub fn evolve(&mut self, es: &EigenSystem, opts: &EvolveOptions) -> CliResult<EvolveOutcome> {
        let grid = TimeGrid {
            start: 0.0,
            stop: opts.tmax.unwrap_or(self.cfg.times.stop),
            steps: opts.steps.unwrap_or(self.cfg.times.steps),
        };
        if !(grid.stop >= 0.0) || !grid.stop.is_finite() {
            return Err(CliError::Config("--tmax must be a finite value >= 0".into()));
        }
        grid.validate()?;
        let witness = self.witness(&opts.operator)?;
        witness
            .check_unit_norm()
            .map_err(|e| CliError::Config(format!("operator `{}`: {e}", opts.operator)))?;
        let psi0 = self.initial_state(es, &opts.initial)?;
        let times = grid.points();
        let series = witness_timeseries(&psi0, &witness, &times, es, &self.cfg.graph)?;
        let tau = match decoherence_time(&series, DEFAULT_THRESHOLD_FRACTION) {
            Ok(t) => t,
            Err(e) => {
                log::warn!("decoherence time undefined: {e}");
                None
            }
        };
        let c = overlaps(&psi0, es)?;
        let de = diagonal_ensemble(&c, es, &self.cfg.graph)?;
        let t_last = *times.last().expect("grid is nonempty");
        let rho_last = evolve_rdm(&c, t_last, es, &self.cfg.graph)?;
        let stem = output::file_stem(&opts.operator);
        self.out
            .write(&format!("evolve_{stem}.csv"), &output::timeseries_csv(&series))?;
        Ok(EvolveOutcome {
            operator_id: opts.operator.clone(),
            series,
            tau,
            final_distance: trace_distance(&rho_last, &de.rho),
            degenerate_support: de.degenerate_support,
        })
    }

    /// Spectrum, a scan per configured operator, a cat quench, optional
    /// transition RDM dumps, a summary table and the manifest.
    pub fn report(&mut self, rdm_pairs: &[(usize, usize)]) -> CliResult<()> {
        let started = unix_now();
        let es = self.spectrum()?;
        let mut summary = vec![
            ("n_sites".to_string(), self.cfg.graph.n_sites().to_string()),
            ("subsystem_sites".to_string(), self.cfg.graph.subsystem_len().to_string()),
            ("eigenpairs".to_string(), es.len().to_string()),
            ("degeneracy_groups".to_string(), es.degeneracy_groups().len().to_string()),
        ];

        let ids: Vec<String> = self.cfg.operators.iter().map(|op| op.id.clone()).collect();
        for id in &ids {
            let outcome = self.witness_scan(&es, id)?;
            summary.extend(scan_summary(id, &outcome));
        }

        let quench_op = self
            .cfg
            .operators
            .iter()
            .find(|op| op.kind == OperatorKind::Witness)
            .or(self.cfg.operators.first())
            .map(|op| op.id.clone());
        if let Some(op) = quench_op {
            let evolved = self.evolve(
                &es,
                &EvolveOptions {
                    operator: op,
                    initial: InitialState::Cat,
                    tmax: None,
                    steps: None,
                },
            )?;
            summary.extend(evolve_summary(&evolved));
        }

        let bp = edh_core::basis::Bipartition::new(&self.cfg.graph);
        for &(n, m) in rdm_pairs {
            let rho = eigen_rdm(&es, n, m, &bp).map_err(|e| CliError::Config(format!("--rdm {n}:{m}: {e}")))?;
            self.out.write(&format!("rdm_{n}_{m}.csv"), &output::rdm_csv(&rho))?;
        }

        self.out.write("summary.csv", &output::summary_csv(&summary))?;
        let manifest = self.manifest(started, unix_now());
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        self.out.write("manifest.json", text.as_bytes())?;
        Ok(())
    }

    fn manifest(&self, started: f64, finished: f64) -> serde_json::Value {
        let outputs: Vec<&String> = self.out.written().iter().collect();
        let constants: serde_json::Map<String, serde_json::Value> = regression::LOCKED
            .iter()
            .map(|c| {
                (
                    c.name.to_string(),
                    serde_json::json!({ "value": c.value, "tolerance": c.tolerance }),
                )
            })
            .collect();
        serde_json::json!({
            "tool": "edh",
            "tool_version": env!("CARGO_PKG_VERSION"),
            "config_sha256": self.config_sha256(),
            "started_unix": started,
            "finished_unix": finished,
            "outputs": outputs,
            "regression_constants": constants,
        })
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), sci)
}

pub fn scan_summary(id: &str, o: &ScanOutcome) -> Vec<(String, String)> {
    let flagged = o.scan.records.iter().filter(|r| r.degenerate).count();
    let mut rows = vec![
        (format!("{id}.records"), o.scan.records.len().to_string()),
        (format!("{id}.flagged_records"), flagged.to_string()),
        (format!("{id}.structurally_zero_pairs"), o.scan.structurally_zero.to_string()),
        (format!("{id}.beyond_gap_max"), o.scan.beyond_gap.to_string()),
    ];
    if let Some(p) = &o.profile {
        rows.extend([
            (format!("{id}.lowest_bin_median"), sci(p.lowest_median)),
            (format!("{id}.mid_gap_median"), sci(p.window_median)),
            (format!("{id}.suppression_ratio"), sci(p.ratio)),
            (format!("{id}.low_gap_spearman"), opt(p.low_gap_spearman)),
            (format!("{id}.lowest_bin_suppressed"), p.suppressed().to_string()),
        ]);
    }
    rows
}

pub fn evolve_summary(o: &EvolveOutcome) -> Vec<(String, String)> {
    let rows = &o.series.rows;
    let w_min = rows.iter().map(|r| r.w).fold(f64::INFINITY, f64::min);
    vec![
        ("quench.operator".to_string(), o.operator_id.clone()),
        ("quench.w_initial".to_string(), sci(rows[0].w)),
        ("quench.w_min".to_string(), sci(w_min)),
        ("quench.w_final".to_string(), sci(rows[rows.len() - 1].w)),
        ("quench.tau".to_string(), opt(o.tau)),
        ("quench.final_distance_to_diagonal_ensemble".to_string(), sci(o.final_distance)),
        ("quench.degenerate_support".to_string(), o.degenerate_support.to_string()),
    ]
}

/// Reads `config,re,im` rows into a full-space state; unlisted amplitudes are zero.
pub fn read_state_file(path: &Path, dim: usize) -> CliResult<CVector> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["config", "re", "im"] {
        return Err(CliError::Config(format!(
            "{}: expected header `config,re,im`",
            path.display()
        )));
    }
    let mut psi = CVector::zeros(dim);
    for (line, row) in reader.records().enumerate() {
        let bad = |what: &str| CliError::Config(format!("{} row {}: {what}", path.display(), line + 1));
        let row = row.map_err(|e| bad(&e.to_string()))?;
        let config: usize = row[0].parse().map_err(|_| bad("invalid configuration index"))?;
        if config >= dim {
            return Err(bad("configuration index out of range"));
        }
        let re: f64 = row[1].parse().map_err(|_| bad("invalid real part"))?;
        let im: f64 = row[2].parse().map_err(|_| bad("invalid imaginary part"))?;
        psi[config] += C64::new(re, im);
    }
    let norm_sqr = psi.norm_squared();
    if (norm_sqr - 1.0).abs() > edh_core::dynamics::NORM_TOL {
        return Err(CliError::Config(format!(
            "{}: state is not normalized (norm^2 = {norm_sqr})",
            path.display()
        )));
    }
    Ok(psi)
}
