//! Reference evaluator: a finite scan over candidate lower corners.
//!
//! Between consecutive profile breakpoints and cloud coordinates both
//! `σ₀(y)` and `H((y, 0), (x, t))` are constant in `y`, so the supremum is a
//! maximum over corners built per axis from the search-box corner, the
//! profile breakpoints (tagged `At`) and the cloud coordinates (tagged
//! `Before`). Chain lengths come from a reverse `O(N²)` recursion of chains
//! *starting* at each point, independent of the forward recursion.

use rayon::prelude::*;

use super::{check_inputs, participants, EvolvedHeights, GrowthError, HeightProfile, Query, SearchBox};
use crate::geometry::{TaggedCoord, TaggedCorner};
use crate::height::Height;
use crate::poisson::PointCloud;

pub fn evaluate_oracle(
    profile: &dyn HeightProfile,
    cloud: &PointCloud,
    queries: &[Query],
    search_box: &SearchBox,
) -> Result<EvolvedHeights, GrowthError> {
    let t_max = check_inputs(profile, cloud, queries, search_box)?;
    let coords = participants(cloud, search_box, t_max);
    let results: Vec<(Height, Vec<TaggedCorner>)> = queries
        .par_iter()
        .map(|q| scan_query(profile, &coords, q, search_box))
        .collect();
    let (values, maximizers) = results.into_iter().unzip();
    Ok(EvolvedHeights {
        queries: queries.to_vec(),
        values,
        maximizers,
        search_box: search_box.clone(),
    })
}

/// Longest chain starting at each point, among the given points.
fn chains_from(points: &[&[f64]]) -> Vec<i64> {
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[b][0].total_cmp(&points[a][0]));
    let mut len = vec![1i64; n];
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[..k] {
            if points[i].iter().zip(points[j]).all(|(a, b)| a < b) {
                len[i] = len[i].max(len[j] + 1);
            }
        }
    }
    len
}

fn scan_query(
    profile: &dyn HeightProfile,
    coords: &[f64],
    q: &Query,
    sb: &SearchBox,
) -> (Height, Vec<TaggedCorner>) {
    let d = q.x.len();
    let nu = d + 1;
    let pts: Vec<&[f64]> = coords
        .chunks_exact(nu)
        .filter(|p| p[d] <= q.t && p[..d].iter().zip(&q.x).all(|(a, b)| a <= b))
        .collect();
    let starts = chains_from(&pts);

    let axes: Vec<Vec<TaggedCoord>> = (0..d)
        .map(|a| {
            let low = sb.lower.coords[a];
            let mut cands = vec![low];
            cands.extend(
                profile
                    .breakpoints(a, low.value, q.x[a])
                    .into_iter()
                    .map(TaggedCoord::at),
            );
            cands.extend(pts.iter().map(|p| TaggedCoord::before(p[a])));
            cands.retain(|c| *c >= low && c.value <= q.x[a]);
            cands.sort();
            cands.dedup();
            cands
        })
        .collect();
    let sizes: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().product();
    let strides: Vec<usize> = (0..d)
        .map(|a| sizes[a + 1..].iter().product())
        .collect();

    // best[idx] = longest chain among points admitted by corner idx.
    let mut best = vec![0i64; total];
    for (p, &len) in pts.iter().zip(&starts) {
        let mut flat = 0;
        for a in 0..d {
            let admitted = axes[a].partition_point(|c| c.is_exceeded_by(p[a]));
            flat += (admitted - 1) * strides[a];
        }
        best[flat] = best[flat].max(len);
    }
    for a in 0..d {
        for flat in (0..total).rev() {
            let k = (flat / strides[a]) % sizes[a];
            if k + 1 < sizes[a] {
                let up = best[flat + strides[a]];
                if up > best[flat] {
                    best[flat] = up;
                }
            }
        }
    }

    let mut value = Height::NegInf;
    let mut argmax: Vec<usize> = Vec::new();
    let mut corner = vec![TaggedCoord::at(0.0); d];
    for (flat, &chain) in best.iter().enumerate() {
        for a in 0..d {
            corner[a] = axes[a][(flat / strides[a]) % sizes[a]];
        }
        let v = profile.value_at(&corner) + chain;
        if v > value || argmax.is_empty() {
            value = v;
            argmax.clear();
            argmax.push(flat);
        } else if v == value {
            argmax.push(flat);
        }
    }
    let maximizers = argmax
        .into_iter()
        .map(|flat| {
            TaggedCorner::new(
                (0..d)
                    .map(|a| axes[a][(flat / strides[a]) % sizes[a]])
                    .collect(),
            )
        })
        .collect();
    (value, maximizers)
}
