//! Output directories, manifests and provenance checks.
//!
//! Every CSV starts with `# manifest_sha256=<hex>`. The hash covers the
//! configuration (minus the output path), the RNG id and the constant `c`
//! used, so reruns of one configuration share it and timestamps never leak
//! into CSV bodies.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use pgrowth::io::EstimateRow;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::HarnessError;

pub const HASH_PREFIX: &str = "# manifest_sha256=";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CSource {
    /// `c₂ = 2`.
    Exact,
    Override,
    /// An embedded `estimate_c` run.
    Estimated,
    /// The experiment does not use `c`.
    Unused,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CProvenance {
    pub value: Option<f64>,
    pub source: CSource,
    /// Standard error propagated into prediction tolerances.
    pub stderr: f64,
    pub estimate: Option<EstimateRow>,
}

impl CProvenance {
    pub fn unused() -> Self {
        CProvenance {
            value: None,
            source: CSource::Unused,
            stderr: 0.0,
            estimate: None,
        }
    }
}

#[derive(Serialize)]
struct HashInput<'a> {
    config: &'a ExperimentConfig,
    rng_id: &'a str,
    c: &'a CProvenance,
    version: &'a str,
}

pub fn manifest_hash(config: &ExperimentConfig, c: &CProvenance) -> String {
    let mut config = config.clone();
    config.output_dir = None;
    let input = HashInput {
        config: &config,
        rng_id: pgrowth::RNG_ID,
        c,
        version: env!("CARGO_PKG_VERSION"),
    };
    let bytes = serde_json::to_vec(&input).expect("config serializes");
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub rng_id: String,
    pub c: CProvenance,
    pub manifest_sha256: String,
    pub version: String,
    pub started_unix: u64,
    pub wall_time_s: f64,
    pub files: Vec<String>,
}

/// The hash recorded on the first line of a CSV artifact, if any.
pub fn read_hash(path: &Path) -> Result<Option<String>, HarnessError> {
    let mut first = String::new();
    BufReader::new(File::open(path)?).read_line(&mut first)?;
    Ok(first
        .trim_end()
        .strip_prefix(HASH_PREFIX)
        .map(str::to_owned))
}

fn csv_files(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn check_same(paths: &[PathBuf], expected: Option<&str>) -> Result<Option<String>, HarnessError> {
    let mut seen: Option<String> = expected.map(str::to_owned);
    for path in paths {
        let hash = read_hash(path)?.ok_or_else(|| {
            HarnessError::MixedManifest(format!("{} has no manifest hash", path.display()))
        })?;
        match &seen {
            Some(h) if *h != hash => {
                return Err(HarnessError::MixedManifest(format!(
                    "{} carries {hash}, expected {h}",
                    path.display()
                )))
            }
            Some(_) => {}
            None => seen = Some(hash),
        }
    }
    Ok(seen)
}

/// Checks that every CSV in `dir` carries the hash in its `manifest.json`.
pub fn verify_dir(dir: &Path) -> Result<Manifest, HarnessError> {
    let manifest: Manifest = pgrowth::io::read_json(File::open(dir.join("manifest.json"))?)?;
    check_same(&csv_files(dir)?, Some(&manifest.manifest_sha256))?;
    Ok(manifest)
}

/// Concatenates CSV tables with identical headers, refusing inputs from
/// different manifests. Returns the shared hash, the header and the rows.
pub fn collect_tables(
    paths: &[PathBuf],
) -> Result<(String, csv::StringRecord, Vec<csv::StringRecord>), HarnessError> {
    let hash = check_same(paths, None)?
        .ok_or_else(|| HarnessError::Validation("no tables to collect".into()))?;
    let mut header: Option<csv::StringRecord> = None;
    let mut rows = Vec::new();
    for path in paths {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)?;
        let h = rdr.headers()?.clone();
        match &header {
            Some(prev) if *prev != h => {
                return Err(HarnessError::Validation(format!(
                    "{} has header {h:?}, expected {prev:?}",
                    path.display()
                )))
            }
            Some(_) => {}
            None => header = Some(h),
        }
        for rec in rdr.records() {
            rows.push(rec?);
        }
    }
    Ok((hash, header.unwrap_or_default(), rows))
}

/// `root/{experiment}/{seed}/`, claimed for one manifest hash.
pub struct OutputDir {
    dir: PathBuf,
    hash: String,
    files: Vec<String>,
}

impl OutputDir {
    /// Creates the directory; existing CSVs from another manifest are an error.
    pub fn create(root: &Path, experiment: &str, seed: u64, hash: &str) -> Result<Self, HarnessError> {
        let dir = root.join(experiment).join(seed.to_string());
        fs::create_dir_all(&dir)?;
        check_same(&csv_files(&dir)?, Some(hash))?;
        Ok(OutputDir {
            dir,
            hash: hash.to_owned(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// A CSV file whose first line is the manifest hash.
    pub fn csv(&mut self, name: &str) -> Result<BufWriter<File>, HarnessError> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        writeln!(w, "{HASH_PREFIX}{}", self.hash)?;
        self.files.push(name.to_owned());
        Ok(w)
    }

    pub fn table(
        &mut self,
        name: &str,
        header: &[String],
        rows: &[Vec<String>],
    ) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(self.csv(name)?);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| e.into_error())?.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), HarnessError> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        pgrowth::io::write_json(&mut w, value)?;
        writeln!(w)?;
        self.files.push(name.to_owned());
        Ok(())
    }

    pub fn finish(
        self,
        config: &ExperimentConfig,
        c: CProvenance,
        started_unix: u64,
        wall_time_s: f64,
    ) -> Result<Manifest, HarnessError> {
        let manifest = Manifest {
            config: config.clone(),
            rng_id: pgrowth::RNG_ID.to_owned(),
            c,
            manifest_sha256: self.hash.clone(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            started_unix,
            wall_time_s,
            files: self.files,
        };
        let mut w = BufWriter::new(File::create(self.dir.join("manifest.json"))?);
        pgrowth::io::write_json(&mut w, &manifest)?;
        writeln!(w)?;
        Ok(manifest)
    }
}
