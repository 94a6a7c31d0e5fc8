//! CSV and JSON artifact formats. Readers accept `#`-prefixed comment lines.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::ChainEstimate;
use crate::coupling::DefectSnapshot;
use crate::geometry::{boundary_of, GridRegion, GridSpec};
use crate::growth::{EvolvedHeights, Query, SearchBox};
use crate::hammersley::Trajectories;
use crate::height::Height;
use crate::poisson::{CloudMeta, PointCloud};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed artifact: {0}")]
    Format(String),
}

fn format_err(msg: impl Into<String>) -> IoError {
    IoError::Format(msg.into())
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r)
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}{i}"))
}

fn bit(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn parse_bit(s: &str) -> Result<bool, IoError> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(format_err(format!("expected 0/1, got {other:?}"))),
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T, IoError> {
    s.parse()
        .map_err(|_| format_err(format!("cannot parse {s:?}")))
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[String]) -> Result<(), IoError> {
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if found != expected {
        return Err(format_err(format!("header {found:?}, expected {expected:?}")));
    }
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(w: W, value: &T) -> Result<(), IoError> {
    serde_json::to_writer_pretty(w, value)?;
    Ok(())
}

pub fn read_json<R: Read, T: DeserializeOwned>(r: R) -> Result<T, IoError> {
    Ok(serde_json::from_reader(r)?)
}

pub fn region_header(d: usize) -> Vec<String> {
    indexed("i", d).chain(["member".to_string()]).collect()
}

pub fn write_region_csv<W: Write>(w: W, region: &GridRegion) -> Result<(), IoError> {
    let grid = region.grid();
    let mut wr = writer(w);
    wr.write_record(region_header(grid.dim()))?;
    for flat in 0..grid.n_cells() {
        let mut row: Vec<String> = grid.multi_index(flat).iter().map(usize::to_string).collect();
        row.push(bit(region.contains(flat)).into());
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a region against its GridSpec sidecar; every cell must appear once.
pub fn read_region_csv<R: Read>(r: R, grid: GridSpec) -> Result<GridRegion, IoError> {
    let d = grid.dim();
    let mut rdr = reader(r);
    check_header(&mut rdr, &region_header(d))?;
    let mut membership = vec![None; grid.n_cells()];
    for rec in rdr.records() {
        let rec = rec?;
        let idx: Vec<usize> = (0..d).map(|a| parse(&rec[a])).collect::<Result<_, _>>()?;
        if idx.iter().zip(&grid.cells).any(|(i, n)| i >= n) {
            return Err(format_err(format!("cell {idx:?} outside the grid")));
        }
        let flat = grid.flat_index(&idx);
        if membership[flat].replace(parse_bit(&rec[d])?).is_some() {
            return Err(format_err(format!("cell {idx:?} listed twice")));
        }
    }
    let membership = membership
        .into_iter()
        .collect::<Option<Vec<bool>>>()
        .ok_or_else(|| format_err("missing cells"))?;
    GridRegion::new(grid, membership).map_err(|e| format_err(e.to_string()))
}

pub fn write_cloud_csv<W: Write>(w: W, cloud: &PointCloud) -> Result<(), IoError> {
    let mut wr = writer(w);
    wr.write_record(indexed("x", cloud.dim()))?;
    for p in cloud.points() {
        wr.write_record(p.iter().map(f64::to_string))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_cloud_csv<R: Read>(r: R, meta: &CloudMeta) -> Result<PointCloud, IoError> {
    let dim = meta.lower.dim();
    let mut rdr = reader(r);
    check_header(&mut rdr, &indexed("x", dim).collect::<Vec<_>>())?;
    let mut pts = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        pts.push((0..dim).map(|a| parse(&rec[a])).collect::<Result<Vec<f64>, _>>()?);
    }
    PointCloud::from_points(meta.lower.clone(), meta.upper.clone(), &pts, meta.rate, meta.seed)
        .map_err(|e| format_err(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightsSidecar<P> {
    pub profile: P,
    pub search_box: SearchBox,
    pub seed: u64,
}

pub fn heights_header(d: usize) -> Vec<String> {
    indexed("x", d)
        .chain(["t".to_string(), "value".to_string()])
        .collect()
}

pub fn write_heights_csv<W: Write>(w: W, heights: &EvolvedHeights) -> Result<(), IoError> {
    let d = heights.search_box.dim();
    let mut wr = writer(w);
    wr.write_record(heights_header(d))?;
    for (q, v) in heights.queries.iter().zip(&heights.values) {
        let mut row: Vec<String> = q.x.iter().map(f64::to_string).collect();
        row.push(q.t.to_string());
        row.push(v.to_string());
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_heights_csv<R: Read>(r: R, d: usize) -> Result<Vec<(Query, Height)>, IoError> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &heights_header(d))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let x = (0..d).map(|a| parse(&rec[a])).collect::<Result<Vec<f64>, _>>()?;
        out.push((Query::new(x, parse(&rec[d])?), parse(&rec[d + 1])?));
    }
    Ok(out)
}

/// One row of a Hopf-Lax solutions dump.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionRow {
    pub x: Vec<f64>,
    pub t: f64,
    pub u: f64,
    pub shock: bool,
}

pub fn solutions_header(d: usize) -> Vec<String> {
    indexed("x", d)
        .chain(["t", "u", "shock_flag"].map(String::from))
        .collect()
}

pub fn write_solutions_csv<W: Write>(w: W, d: usize, rows: &[SolutionRow]) -> Result<(), IoError> {
    let mut wr = writer(w);
    wr.write_record(solutions_header(d))?;
    for row in rows {
        if row.x.len() != d {
            return Err(format_err("solution row of the wrong dimension"));
        }
        let mut rec: Vec<String> = row.x.iter().map(f64::to_string).collect();
        rec.extend([row.t.to_string(), row.u.to_string(), bit(row.shock).into()]);
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_solutions_csv<R: Read>(r: R, d: usize) -> Result<Vec<SolutionRow>, IoError> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &solutions_header(d))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push(SolutionRow {
            x: (0..d).map(|a| parse(&rec[a])).collect::<Result<_, _>>()?,
            t: parse(&rec[d])?,
            u: parse(&rec[d + 1])?,
            shock: parse_bit(&rec[d + 2])?,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectSidecar {
    pub h: i64,
    pub grid: GridSpec,
    /// Human-readable description of the macroscopic set `B`.
    pub b_spec: String,
    /// Paths of region files holding the predicted `W`/`X` sets.
    pub predicted: Vec<String>,
}

pub fn defect_header(d: usize) -> Vec<String> {
    ["t".to_string()]
        .into_iter()
        .chain(indexed("i", d))
        .chain(["sigma", "zeta", "inA", "bd"].map(String::from))
        .collect()
}

pub fn write_defect_csv<W: Write>(w: W, snap: &DefectSnapshot) -> Result<(), IoError> {
    let d = snap.grid.dim();
    let mut wr = writer(w);
    wr.write_record(defect_header(d))?;
    for flat in 0..snap.grid.n_cells() {
        let mut row = vec![snap.t.to_string()];
        row.extend(snap.grid.multi_index(flat).iter().map(usize::to_string));
        row.push(snap.sigma[flat].to_string());
        row.push(snap.zeta[flat].to_string());
        row.push(bit(snap.in_a[flat]).into());
        row.push(bit(snap.boundary.contains(flat)).into());
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a snapshot back; the `bd` column must equal the recomputed boundary.
pub fn read_defect_csv<R: Read>(r: R, sidecar: &DefectSidecar) -> Result<DefectSnapshot, IoError> {
    let grid = &sidecar.grid;
    let d = grid.dim();
    let n = grid.n_cells();
    let mut rdr = reader(r);
    check_header(&mut rdr, &defect_header(d))?;
    let mut t = None;
    let mut seen = vec![false; n];
    let (mut sigma, mut zeta) = (vec![Height::NegInf; n], vec![Height::NegInf; n]);
    let (mut in_a, mut bd) = (vec![false; n], vec![false; n]);
    for rec in rdr.records() {
        let rec = rec?;
        let time: f64 = parse(&rec[0])?;
        if *t.get_or_insert(time) != time {
            return Err(format_err("mixed times in one snapshot"));
        }
        let idx: Vec<usize> = (0..d).map(|a| parse(&rec[1 + a])).collect::<Result<_, _>>()?;
        if idx.iter().zip(&grid.cells).any(|(i, n)| i >= n) {
            return Err(format_err(format!("cell {idx:?} outside the grid")));
        }
        let flat = grid.flat_index(&idx);
        if std::mem::replace(&mut seen[flat], true) {
            return Err(format_err(format!("cell {idx:?} listed twice")));
        }
        sigma[flat] = parse(&rec[1 + d])?;
        zeta[flat] = parse(&rec[2 + d])?;
        in_a[flat] = parse_bit(&rec[3 + d])?;
        bd[flat] = parse_bit(&rec[4 + d])?;
    }
    if seen.iter().any(|s| !s) {
        return Err(format_err("missing cells"));
    }
    let region = GridRegion::new(grid.clone(), in_a.clone()).map_err(|e| format_err(e.to_string()))?;
    let boundary = boundary_of(&region);
    if boundary.membership() != bd.as_slice() {
        return Err(format_err("bd column does not match the boundary of inA"));
    }
    Ok(DefectSnapshot {
        t: t.unwrap_or(0.0),
        h: sidecar.h,
        grid: grid.clone(),
        in_a,
        boundary,
        sigma,
        zeta,
    })
}

pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectories) -> Result<(), IoError> {
    let mut wr = writer(w);
    wr.write_record(["k", "t", "pos"])?;
    for (k, t, pos) in traj.jump_rows() {
        wr.write_record([k.to_string(), t.to_string(), pos.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(r: R) -> Result<Vec<(i64, f64, f64)>, IoError> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &["k", "t", "pos"].map(String::from))?;
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok((parse(&rec[0])?, parse(&rec[1])?, parse(&rec[2])?))
        })
        .collect()
}

/// One line of the `estimate_c` results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub nu: usize,
    pub n: f64,
    pub b_product: f64,
    pub replicas: usize,
    pub mean: f64,
    pub stderr: f64,
    pub seed: u64,
    pub rng_id: String,
}

impl From<&ChainEstimate> for EstimateRow {
    fn from(e: &ChainEstimate) -> Self {
        EstimateRow {
            nu: e.dim,
            n: e.n,
            b_product: e.b_product(),
            replicas: e.replicas,
            mean: e.mean,
            stderr: e.stderr,
            seed: e.seed,
            rng_id: e.rng_id.clone(),
        }
    }
}

pub const ESTIMATE_HEADER: [&str; 8] = [
    "nu", "n", "b_product", "replicas", "mean", "stderr", "seed", "rng_id",
];

/// Appends rows; the header is written only when `with_header` is set.
pub fn write_estimates_csv<W: Write>(
    w: W,
    rows: &[EstimateRow],
    with_header: bool,
) -> Result<(), IoError> {
    let mut wr = csv::WriterBuilder::new()
        .has_headers(with_header)
        .from_writer(w);
    if rows.is_empty() && with_header {
        wr.write_record(ESTIMATE_HEADER)?;
    }
    for row in rows {
        wr.serialize(row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_estimates_csv<R: Read>(r: R) -> Result<Vec<EstimateRow>, IoError> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &ESTIMATE_HEADER.map(String::from))?;
    Ok(rdr.deserialize().collect::<Result<_, _>>()?)
}
