//! Jump regions `S_x(σ) = {y ≤ x : σ(y) = σ(x)}` and the generator applied
//! to cylinder events `{σ(x₀) ≥ k}`.

use super::{HeightProfile, StaircaseField};
use crate::height::Height;

/// Union of staircase cells clipped to `{y ≤ x}`.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpRegion {
    pub cells: Vec<(Vec<f64>, Vec<f64>)>,
    pub volume: f64,
}

impl JumpRegion {
    pub fn contains(&self, y: &[f64]) -> bool {
        self.cells.iter().any(|(lo, hi)| {
            y.iter()
                .zip(lo.iter().zip(hi))
                .all(|(&v, (&a, &b))| v >= a && v <= b)
        })
    }
}

pub fn jump_region(field: &StaircaseField, x: &[f64]) -> JumpRegion {
    let empty = JumpRegion {
        cells: vec![],
        volume: 0.0,
    };
    let level = field.eval(x);
    if !level.is_finite() {
        return empty;
    }
    let top = match field.cell_of(&x.iter().map(|&v| crate::TaggedCoord::at(v)).collect::<Vec<_>>()) {
        Some(idx) => idx,
        None => return empty,
    };
    let cells_per_axis = field.cells();
    let mut cells = Vec::new();
    let mut volume = 0.0;
    for flat in 0..field.n_cells() {
        let idx = field.multi_index(flat);
        if idx.iter().zip(&top).any(|(a, b)| a > b) || field.values()[flat] != level {
            continue;
        }
        let (lo, mut hi) = field.cell_bounds(&idx);
        for a in 0..x.len() {
            if idx[a] + 1 == cells_per_axis[a] || hi[a] > x[a] {
                hi[a] = x[a];
            }
        }
        volume += lo.iter().zip(&hi).map(|(a, b)| b - a).product::<f64>();
        cells.push((lo, hi));
    }
    JumpRegion { cells, volume }
}

/// `L 1{σ(x₀) ≥ k}`: the volume of `S_{x₀}` when `σ(x₀) = k − 1`, else 0.
pub fn generator_apply(field: &StaircaseField, x0: &[f64], k: i64) -> f64 {
    if field.eval(x0) == Height::Finite(k - 1) {
        jump_region(field, x0).volume
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wedge_field() -> StaircaseField {
        StaircaseField::constant(&[0.0, 0.0], &[4.0, 4.0], Height::ZERO).unwrap()
    }

    #[test]
    fn wedge_jump_region() {
        let r = jump_region(&wedge_field(), &[1.0, 1.0]);
        assert_eq!(r.cells, vec![(vec![0.0, 0.0], vec![1.0, 1.0])]);
        assert_eq!(r.volume, 1.0);
        let r = jump_region(&wedge_field(), &[-1.0, 1.0]);
        assert_eq!(r.volume, 0.0);
        assert!(r.cells.is_empty());
    }

    #[test]
    fn generator_cases() {
        let f = wedge_field();
        assert_eq!(generator_apply(&f, &[1.0, 1.0], 1), 1.0);
        assert_eq!(generator_apply(&f, &[1.0, 1.0], 0), 0.0);
        assert_eq!(generator_apply(&f, &[1.0, 1.0], 2), 0.0);
    }

    /// Staircase on `[0, 8)²` with breakpoints on multiples of 1/8.
    fn random_field(steps: &[i64], cuts0: &[u8], cuts1: &[u8]) -> StaircaseField {
        let axis = |cuts: &[u8]| {
            let mut b: Vec<f64> = vec![0.0, 8.0];
            b.extend(cuts.iter().map(|&k| k as f64 / 8.0));
            b.sort_by(f64::total_cmp);
            b.dedup();
            b
        };
        let (b0, b1) = (axis(cuts0), axis(cuts1));
        let (n0, n1) = (b0.len() - 1, b1.len() - 1);
        let mut values = Vec::new();
        for i in 0..n0 {
            for j in 0..n1 {
                let v: i64 = steps[..=i.min(steps.len() - 1)].iter().sum::<i64>()
                    + steps[..=j.min(steps.len() - 1)].iter().sum::<i64>();
                values.push(Height::Finite(v));
            }
        }
        StaircaseField::new(vec![b0, b1], values).unwrap()
    }

    proptest! {
        #[test]
        fn volume_matches_quadrature(
            steps in proptest::collection::vec(0i64..2, 6),
            cuts0 in proptest::collection::vec(1u8..48, 0..4),
            cuts1 in proptest::collection::vec(1u8..48, 0..4),
            x0 in 1u8..48,
            x1 in 1u8..48,
        ) {
            let f = random_field(&steps, &cuts0, &cuts1);
            let x = [x0 as f64 / 8.0, x1 as f64 / 8.0];
            let r = jump_region(&f, &x);
            let level = f.eval(&x);
            // Midpoint rule on a 1/64 lattice aligned with every breakpoint.
            let h = 1.0 / 64.0;
            let mut quad = 0.0;
            for i in 0..(x0 as usize * 8) {
                for j in 0..(x1 as usize * 8) {
                    let y = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h];
                    if f.eval(&y) == level {
                        quad += h * h;
                    }
                }
            }
            prop_assert!((r.volume - quad).abs() <= h * h, "{} vs {}", r.volume, quad);
        }
    }
}
