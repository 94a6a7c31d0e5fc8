//! Last-passage recursion over cloud points.
//!
//! `W(p) = 1 + max(max{W(q) : q < p}, σ₀(space(p)−))` and
//! `σ(x, t) = max(σ₀(x), max{W(p) : space(p) ≤ x, time(p) ≤ t})`.

use rayon::prelude::*;

use super::{check_inputs, participants, EvolvedHeights, GrowthError, HeightProfile, Query, SearchBox};
use crate::chain::{better, chain_weights, Best, MaxFenwick};
use crate::geometry::TaggedCorner;
use crate::poisson::PointCloud;

pub fn evaluate_lpp(
    profile: &dyn HeightProfile,
    cloud: &PointCloud,
    queries: &[Query],
    search_box: &SearchBox,
) -> Result<EvolvedHeights, GrowthError> {
    let t_max = check_inputs(profile, cloud, queries, search_box)?;
    let d = profile.dim();
    let nu = d + 1;
    let coords = participants(cloud, search_box, t_max);
    let base: Vec<_> = coords
        .chunks_exact(nu)
        .map(|p| profile.left_limit(&p[..d]))
        .collect();
    let weights = chain_weights(&coords, nu, &base);

    let best: Vec<Best> = if d == 1 {
        sweep_queries(&coords, &weights.weight, queries)
    } else {
        queries
            .par_iter()
            .map(|q| {
                let mut acc = None;
                for (j, p) in coords.chunks_exact(nu).enumerate() {
                    if p[d] <= q.t && p[..d].iter().zip(&q.x).all(|(a, b)| a <= b) {
                        acc = better(acc, Some((weights.weight[j], j)));
                    }
                }
                acc
            })
            .collect()
    };

    let mut values = Vec::with_capacity(queries.len());
    let mut maximizers = Vec::with_capacity(queries.len());
    for (q, b) in queries.iter().zip(best) {
        let own = profile.eval(&q.x);
        match b {
            Some((w, j)) if w > own => {
                let start = weights.chain_start(j);
                let space = &coords[start * nu..start * nu + d];
                values.push(w);
                maximizers.push(vec![TaggedCorner::before(space)]);
            }
            _ => {
                values.push(own);
                maximizers.push(vec![TaggedCorner::at(&q.x)]);
            }
        }
    }
    Ok(EvolvedHeights {
        queries: queries.to_vec(),
        values,
        maximizers,
        search_box: search_box.clone(),
    })
}

/// Offline two-dimensional dominance maximum: sweep time, Fenwick over space.
fn sweep_queries(coords: &[f64], weight: &[crate::Height], queries: &[Query]) -> Vec<Best> {
    let n = weight.len();
    let mut xs: Vec<f64> = (0..n).map(|i| coords[2 * i]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut by_time: Vec<usize> = (0..n).collect();
    by_time.sort_by(|&a, &b| coords[2 * a + 1].total_cmp(&coords[2 * b + 1]));
    let mut order: Vec<usize> = (0..queries.len()).collect();
    order.sort_by(|&a, &b| queries[a].t.total_cmp(&queries[b].t));

    let mut fen = MaxFenwick::new(xs.len());
    let mut out = vec![None; queries.len()];
    let mut next = 0;
    for qi in order {
        let q = &queries[qi];
        while next < n && coords[2 * by_time[next] + 1] <= q.t {
            let p = by_time[next];
            let rank = xs.partition_point(|&v| v < coords[2 * p]);
            fen.update(rank, (weight[p], p));
            next += 1;
        }
        let count = xs.partition_point(|&v| v <= q.x[0]);
        out[qi] = fen.query_below(count);
    }
    out
}
