//! CSV rendering and atomic file output.
//!
//! Every number is written in scientific notation with 12 significant
//! digits, so files produced from the same inputs compare byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use edh_core::dynamics::TimeSeries;
use edh_core::spectral::EigenSystem;
use edh_core::witness::{BinnedStats, WitnessRecord};
use edh_core::CMatrix;

use crate::error::{CliError, CliResult};

pub fn sci(x: f64) -> String {
    format!("{x:.11e}")
}

/// Output directory that remembers what was written to it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    /// Creates `root` if needed. Fails if `root` exists and is not a directory.
    pub fn prepare(root: &Path) -> CliResult<Self> {
        if root.exists() && !root.is_dir() {
            return Err(CliError::io(
                root,
                std::io::Error::new(std::io::ErrorKind::AlreadyExists, "output path is not a directory"),
            ));
        }
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Names of files written so far, in write order.
    pub fn written(&self) -> &[String] {
        &self.written
    }

    /// Writes to a temporary sibling, then renames over `name`.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let target = self.path(name);
        let tmp = self.path(&format!(".{name}.tmp"));
        fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
        fs::rename(&tmp, &target).map_err(|e| CliError::io(&target, e))?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        log::info!("wrote {}", target.display());
        Ok(target)
    }
}

struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("writing to memory");
        Table { w }
    }

    fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).expect("writing to memory");
    }

    fn finish(self) -> Vec<u8> {
        self.w.into_inner().expect("in-memory writer")
    }
}

pub fn spectrum_csv(es: &EigenSystem) -> Vec<u8> {
    let mut t = Table::new(&["n", "sector", "E_n", "degeneracy_group_id"]);
    for n in 0..es.len() {
        let group = es.group_of(n).map_or(-1, |g| g as i64);
        t.row([
            n.to_string(),
            es.sector_of(n).to_string(),
            sci(es.energy(n)),
            group.to_string(),
        ]);
    }
    t.finish()
}

pub fn records_csv(records: &[WitnessRecord]) -> Vec<u8> {
    let mut t = Table::new(&[
        "m",
        "n",
        "sector_m",
        "sector_n",
        "E_m",
        "E_n",
        "gap",
        "w",
        "w_abs",
        "degenerate_flag",
        "operator_id",
    ]);
    for r in records {
        t.row([
            r.m.to_string(),
            r.n.to_string(),
            r.sector_m.to_string(),
            r.sector_n.to_string(),
            sci(r.e_m),
            sci(r.e_n),
            sci(r.gap),
            sci(r.w),
            sci(r.w_abs),
            u8::from(r.degenerate).to_string(),
            r.operator_id.to_string(),
        ]);
    }
    t.finish()
}

pub fn bins_csv(stats: &BinnedStats) -> Vec<u8> {
    let mut t = Table::new(&["bin_lo", "bin_hi", "count", "median_abs", "mean_abs", "max_abs"]);
    for b in &stats.bins {
        t.row([
            sci(b.lo),
            sci(b.hi),
            b.count.to_string(),
            sci(b.median),
            sci(b.mean),
            sci(b.max),
        ]);
    }
    t.finish()
}

pub fn timeseries_csv(series: &TimeSeries) -> Vec<u8> {
    let mut t = Table::new(&["t", "w", "purity", "trace_err"]);
    for r in &series.rows {
        t.row([sci(r.t), sci(r.w), sci(r.purity), sci(r.trace_err)]);
    }
    t.finish()
}

pub fn rdm_csv(rho: &CMatrix) -> Vec<u8> {
    let mut t = Table::new(&["s", "s_prime", "re", "im"]);
    for s in 0..rho.nrows() {
        for s2 in 0..rho.ncols() {
            let x = rho[(s, s2)];
            t.row([s.to_string(), s2.to_string(), sci(x.re), sci(x.im)]);
        }
    }
    t.finish()
}

/// Two-column `key,value` table.
pub fn summary_csv(entries: &[(String, String)]) -> Vec<u8> {
    let mut t = Table::new(&["key", "value"]);
    for (k, v) in entries {
        t.row([k.as_str(), v.as_str()]);
    }
    t.finish()
}

/// Operator ids restricted to characters safe in file names.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sci(1.0), "1.00000000000e0");
        assert_eq!(sci(-0.00123456789012345), "-1.23456789012e-3");
        assert_eq!(sci(1.5e10), "1.50000000000e10");
    }

    #[test]
    fn atomic_write_replaces_and_tracks() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::prepare(&dir.path().join("nested")).unwrap();
        out.write("a.csv", b"1").unwrap();
        out.write("a.csv", b"2").unwrap();
        assert_eq!(fs::read(out.path("a.csv")).unwrap(), b"2");
        assert_eq!(out.written(), ["a.csv"]);
        assert!(!out.path(".a.csv.tmp").exists());
    }

    #[test]
    fn file_as_output_dir_is_io_error() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let err = OutputDir::prepare(f.path()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn file_stems() {
        assert_eq!(file_stem("W"), "W");
        assert_eq!(file_stem("a b/c"), "a_b_c");
    }
}
