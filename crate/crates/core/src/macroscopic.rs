//! The deterministic limit: shape function `g`, velocity `f`, Hopf-Lax
//! solutions (numeric and closed form), maximizer sets, forward sets `W`
//! and interface sets `X`.

use serde::{Deserialize, Serialize};

use crate::geometry::{GeometryError, GridRegion, GridSpec, Point};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MacroError {
    #[error("slope vectors must be strictly positive with matching dimensions")]
    BadSlopes,
    #[error("grid profile values must be nondecreasing along every axis")]
    NotMonotone,
    #[error("grid profile needs one value per cell ({expected}), got {found}")]
    ValueCount { expected: usize, found: usize },
    #[error("c must be positive, got {0}")]
    BadConstant(f64),
    #[error("t must be positive, got {0}")]
    BadTime(f64),
    #[error("velocity needs a strictly positive density")]
    NonPositiveDensity,
    #[error("closed forms exist only for flat, shock and rarefaction profiles")]
    Unsupported,
    #[error("maximizer stays on the lower boundary of the search grid after doubling")]
    BoundaryMaximizer,
    #[error("no grid candidate lies below the query point")]
    NoCandidates,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Macroscopic initial condition `u₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MacroProfile {
    /// `u₀(y) = ρ·y`.
    Flat { rho: Vec<f64> },
    /// `u₀ = ρ·y` on `{(ρ−λ)·y ≥ 0}`, `λ·y` elsewhere.
    Shock { lambda: Vec<f64>, rho: Vec<f64> },
    /// `u₀ = λ·y` on `{(ρ−λ)·y ≥ 0}`, `ρ·y` elsewhere.
    Rarefaction { lambda: Vec<f64>, rho: Vec<f64> },
    /// Values at cell centers, multilinear in between and clamped outside.
    Grid { grid: GridSpec, values: Vec<f64> },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn positive(v: &[f64]) -> bool {
    !v.is_empty() && v.iter().all(|&x| x > 0.0 && x.is_finite())
}

impl MacroProfile {
    pub fn flat(rho: Vec<f64>) -> Result<Self, MacroError> {
        let p = MacroProfile::Flat { rho };
        p.validate()?;
        Ok(p)
    }

    pub fn shock(lambda: Vec<f64>, rho: Vec<f64>) -> Result<Self, MacroError> {
        let p = MacroProfile::Shock { lambda, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn rarefaction(lambda: Vec<f64>, rho: Vec<f64>) -> Result<Self, MacroError> {
        let p = MacroProfile::Rarefaction { lambda, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn grid(grid: GridSpec, values: Vec<f64>) -> Result<Self, MacroError> {
        let p = MacroProfile::Grid { grid, values };
        p.validate()?;
        Ok(p)
    }

    /// Tabulates `u₀` at the cell centers of `grid`.
    pub fn tabulate(grid: GridSpec, u0: impl Fn(&[f64]) -> f64) -> Result<Self, MacroError> {
        let values = grid.centers().iter().map(|c| u0(c)).collect();
        Self::grid(grid, values)
    }

    pub fn validate(&self) -> Result<(), MacroError> {
        match self {
            MacroProfile::Flat { rho } => {
                if !positive(rho) {
                    return Err(MacroError::BadSlopes);
                }
            }
            MacroProfile::Shock { lambda, rho } | MacroProfile::Rarefaction { lambda, rho } => {
                if !positive(rho) || !positive(lambda) || rho.len() != lambda.len() {
                    return Err(MacroError::BadSlopes);
                }
            }
            MacroProfile::Grid { grid, values } => {
                if values.len() != grid.n_cells() {
                    return Err(MacroError::ValueCount {
                        expected: grid.n_cells(),
                        found: values.len(),
                    });
                }
                for flat in 0..grid.n_cells() {
                    let idx = grid.multi_index(flat);
                    for axis in 0..grid.dim() {
                        if idx[axis] + 1 < grid.cells[axis] {
                            let mut up = idx.clone();
                            up[axis] += 1;
                            if values[grid.flat_index(&up)] < values[flat] {
                                return Err(MacroError::NotMonotone);
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            MacroProfile::Flat { rho }
            | MacroProfile::Shock { rho, .. }
            | MacroProfile::Rarefaction { rho, .. } => rho.len(),
            MacroProfile::Grid { grid, .. } => grid.dim(),
        }
    }

    /// Positively 1-homogeneous initial data: `u₀(ay) = a·u₀(y)` for `a > 0`.
    pub fn is_homogeneous(&self) -> bool {
        !matches!(self, MacroProfile::Grid { .. })
    }

    pub fn u0(&self, y: &[f64]) -> f64 {
        match self {
            MacroProfile::Flat { rho } => dot(rho, y),
            MacroProfile::Shock { lambda, rho } => {
                if dot(&diff(rho, lambda), y) >= 0.0 {
                    dot(rho, y)
                } else {
                    dot(lambda, y)
                }
            }
            MacroProfile::Rarefaction { lambda, rho } => {
                if dot(&diff(rho, lambda), y) >= 0.0 {
                    dot(lambda, y)
                } else {
                    dot(rho, y)
                }
            }
            MacroProfile::Grid { grid, values } => interpolate(grid, values, y),
        }
    }

    /// Bound on `Σ_i |∂_i u₀|`.
    pub fn lipschitz(&self) -> f64 {
        match self {
            MacroProfile::Flat { rho } => rho.iter().sum(),
            MacroProfile::Shock { lambda, rho } | MacroProfile::Rarefaction { lambda, rho } => {
                rho.iter().zip(lambda).map(|(a, b)| a.max(*b)).sum()
            }
            MacroProfile::Grid { grid, values } => (0..grid.dim())
                .map(|axis| {
                    let w = grid.cell_width(axis);
                    let mut steepest: f64 = 0.0;
                    for flat in 0..grid.n_cells() {
                        let idx = grid.multi_index(flat);
                        if idx[axis] + 1 < grid.cells[axis] {
                            let mut up = idx.clone();
                            up[axis] += 1;
                            steepest =
                                steepest.max((values[grid.flat_index(&up)] - values[flat]) / w);
                        }
                    }
                    steepest
                })
                .sum(),
        }
    }
}

fn interpolate(grid: &GridSpec, values: &[f64], y: &[f64]) -> f64 {
    let d = grid.dim();
    let mut base = vec![0usize; d];
    let mut frac = vec![0.0; d];
    for axis in 0..d {
        let n = grid.cells[axis];
        let s = ((y[axis] - grid.center_coord(axis, 0)) / grid.cell_width(axis))
            .clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n.saturating_sub(2));
        base[axis] = i;
        frac[axis] = if n == 1 { 0.0 } else { s - i as f64 };
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << d) {
        let mut weight = 1.0;
        let mut idx = base.clone();
        for axis in 0..d {
            if corner & (1 << axis) != 0 {
                if grid.cells[axis] == 1 {
                    weight = 0.0;
                    break;
                }
                idx[axis] += 1;
                weight *= frac[axis];
            } else {
                weight *= 1.0 - frac[axis];
            }
        }
        if weight != 0.0 {
            acc += weight * values[grid.flat_index(&idx)];
        }
    }
    acc
}

/// `κ_d = (c/(d+1))^{d+1}`.
pub fn kappa(d: usize, c: f64) -> f64 {
    (c / (d as f64 + 1.0)).powi(d as i32 + 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Velocity {
    pub kappa: f64,
    pub f: f64,
    pub gradf: Vec<f64>,
}

/// `f(ρ) = κ_d / (ρ₁⋯ρ_d)` and its gradient `∂_i f = −f/ρ_i`.
pub fn velocity(rho: &[f64], c: f64) -> Result<Velocity, MacroError> {
    if !(c > 0.0) {
        return Err(MacroError::BadConstant(c));
    }
    if rho.is_empty() || rho.iter().any(|&r| !(r > 0.0)) {
        return Err(MacroError::NonPositiveDensity);
    }
    let kappa = kappa(rho.len(), c);
    let f = kappa / rho.iter().product::<f64>();
    Ok(Velocity {
        kappa,
        f,
        gradf: rho.iter().map(|r| -f / r).collect(),
    })
}

/// `g(x) = c (x₁⋯x_d)^{1/(d+1)}` on the closed orthant, `−∞` outside.
pub fn shape_g(x: &[f64], c: f64) -> f64 {
    if x.iter().any(|&v| v < 0.0) {
        return f64::NEG_INFINITY;
    }
    c * x.iter().product::<f64>().powf(1.0 / (x.len() as f64 + 1.0))
}

/// The Hopf-Lax objective `u₀(y) + t g((x − y)/t)`.
pub fn hopf_lax_objective(profile: &MacroProfile, x: &[f64], y: &[f64], t: f64, c: f64) -> f64 {
    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - b) / t).collect();
    let g = shape_g(&z, c);
    if g == f64::NEG_INFINITY {
        return g;
    }
    profile.u0(y) + t * g
}

/// Maximizers of the Hopf-Lax objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxSet {
    pub points: Vec<Point>,
    pub tolerance: f64,
    pub shock: bool,
}

impl ArgmaxSet {
    /// ℓ∞ diameter of the maximizer set.
    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for a in &self.points {
            for b in &self.points {
                let dist = a
                    .coords()
                    .iter()
                    .zip(b.coords())
                    .map(|(u, v)| (u - v).abs())
                    .fold(0.0, f64::max);
                best = best.max(dist);
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HopfLax {
    pub u: f64,
    pub argmax: ArgmaxSet,
}

/// Default argmax tolerance: four Lipschitz-cell units.
pub fn default_tolerance(profile: &MacroProfile, grid: &GridSpec) -> f64 {
    4.0 * profile.lipschitz().max(1e-12) * grid.max_cell_width()
}

fn check_time_and_c(t: f64, c: f64) -> Result<(), MacroError> {
    if !(t > 0.0) {
        return Err(MacroError::BadTime(t));
    }
    if !(c > 0.0) {
        return Err(MacroError::BadConstant(c));
    }
    Ok(())
}

/// Grid search for the Hopf-Lax supremum over `y ≤ x`.
///
/// Candidates are the search-grid cell centers below `x` together with
/// `y = x`. The maximizer set keeps the discrete local maxima within `tol` of
/// the best value; a shock is flagged when that set is wider than one cell.
/// A maximizer in the lowest cell layer triggers one retry on a grid doubled
/// downward; if it persists the call fails.
pub fn hopf_lax_solve(
    profile: &MacroProfile,
    x: &[f64],
    t: f64,
    c: f64,
    search_grid: &GridSpec,
    tol: f64,
) -> Result<HopfLax, MacroError> {
    check_time_and_c(t, c)?;
    if x.len() != profile.dim() || search_grid.dim() != profile.dim() {
        return Err(MacroError::DimensionMismatch {
            expected: profile.dim(),
            found: x.len(),
        });
    }
    match scan(profile, x, t, c, search_grid, tol)? {
        Some(hl) => Ok(hl),
        None => {
            let d = search_grid.dim();
            let lo: Vec<f64> = (0..d)
                .map(|a| search_grid.hi[a] - 2.0 * (search_grid.hi[a] - search_grid.lo[a]))
                .collect();
            let doubled = GridSpec::new(
                Point::from(lo),
                search_grid.hi.clone(),
                search_grid.cells.iter().map(|n| 2 * n).collect(),
            )?;
            scan(profile, x, t, c, &doubled, tol)?.ok_or(MacroError::BoundaryMaximizer)
        }
    }
}

/// One scan; `None` when a maximizer sits on the lower boundary layer.
fn scan(
    profile: &MacroProfile,
    x: &[f64],
    t: f64,
    c: f64,
    grid: &GridSpec,
    tol: f64,
) -> Result<Option<HopfLax>, MacroError> {
    let d = grid.dim();
    // Candidate index range per axis: centers <= x.
    let mut extent = vec![0usize; d];
    for axis in 0..d {
        let below = (0..grid.cells[axis])
            .take_while(|&k| grid.center_coord(axis, k) <= x[axis])
            .count();
        extent[axis] = below;
    }
    let count: usize = extent.iter().product();
    let sub_index = |mut flat: usize| {
        let mut idx = vec![0; d];
        for axis in (0..d).rev() {
            idx[axis] = flat % extent[axis];
            flat /= extent[axis];
        }
        idx
    };
    let sub_flat = |idx: &[usize]| idx.iter().zip(&extent).fold(0, |acc, (&i, &n)| acc * n + i);
    let mut values = Vec::with_capacity(count);
    let mut centers = Vec::with_capacity(count);
    for flat in 0..count {
        let idx = sub_index(flat);
        let y: Vec<f64> = (0..d).map(|a| grid.center_coord(a, idx[a])).collect();
        values.push(hopf_lax_objective(profile, x, &y, t, c));
        centers.push((idx, y));
    }
    let at_x = profile.u0(x);
    let best = values.iter().copied().fold(at_x, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(MacroError::NoCandidates);
    }

    let mut points = Vec::new();
    let mut on_boundary = false;
    for flat in 0..count {
        let v = values[flat];
        if v < best - tol {
            continue;
        }
        let (idx, y) = &centers[flat];
        let mut is_local_max = true;
        'nb: for offset in 0..3usize.pow(d as u32) {
            let mut nb = idx.clone();
            let mut o = offset;
            let mut moved = false;
            for axis in 0..d {
                let step = o % 3;
                o /= 3;
                match step {
                    0 => {}
                    1 if nb[axis] + 1 < extent[axis] => {
                        nb[axis] += 1;
                        moved = true;
                    }
                    2 if nb[axis] > 0 => {
                        nb[axis] -= 1;
                        moved = true;
                    }
                    _ => continue 'nb,
                }
            }
            if moved && values[sub_flat(&nb)] > v {
                is_local_max = false;
                break;
            }
        }
        if is_local_max {
            if idx.contains(&0) {
                on_boundary = true;
            }
            points.push(Point::from(y.clone()));
        }
    }
    let top_cell_value = if count > 0 {
        values[count - 1]
    } else {
        f64::NEG_INFINITY
    };
    if at_x >= best - tol && at_x >= top_cell_value {
        points.push(Point::from(x.to_vec()));
    }
    if on_boundary {
        return Ok(None);
    }
    let mut argmax = ArgmaxSet {
        points,
        tolerance: tol,
        shock: false,
    };
    argmax.shock = argmax.diameter() > grid.max_cell_width() * (1.0 + 1e-9);
    Ok(Some(HopfLax { u: best, argmax }))
}

/// Interpolation parameter `s ∈ [0, 1]` of the rarefaction fan: solves
/// `(ρ−λ)·x = −t (ρ−λ)·∇f(sλ + (1−s)ρ)` by bisection.
fn fan_parameter(lambda: &[f64], rho: &[f64], x: &[f64], t: f64, c: f64) -> Result<f64, MacroError> {
    let n = diff(rho, lambda);
    let target = dot(&n, x);
    let rhs = |s: f64| -> Result<f64, MacroError> {
        let r: Vec<f64> = lambda
            .iter()
            .zip(rho)
            .map(|(l, p)| s * l + (1.0 - s) * p)
            .collect();
        Ok(-t * dot(&n, &velocity(&r, c)?.gradf))
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let increasing = rhs(1.0)? >= rhs(0.0)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let below = rhs(mid)? < target;
        if below == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1e-300) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn shifted(x: &[f64], t: f64, gradf: &[f64]) -> Point {
    Point::from(x.iter().zip(gradf).map(|(a, g)| a + t * g).collect::<Vec<_>>())
}

/// Closed-form Hopf-Lax solution for flat, shock and rarefaction data.
///
/// Points on a shock hyperplane report both branch maximizers.
pub fn closed_form_u(
    profile: &MacroProfile,
    x: &[f64],
    t: f64,
    c: f64,
) -> Result<(f64, ArgmaxSet), MacroError> {
    check_time_and_c(t, c)?;
    if x.len() != profile.dim() {
        return Err(MacroError::DimensionMismatch {
            expected: profile.dim(),
            found: x.len(),
        });
    }
    let single = |points: Vec<Point>| {
        let shock = points.len() > 1;
        ArgmaxSet {
            points,
            tolerance: 0.0,
            shock,
        }
    };
    match profile {
        MacroProfile::Flat { rho } => {
            let v = velocity(rho, c)?;
            Ok((dot(rho, x) + t * v.f, single(vec![shifted(x, t, &v.gradf)])))
        }
        MacroProfile::Shock { lambda, rho } => {
            let (vr, vl) = (velocity(rho, c)?, velocity(lambda, c)?);
            let side = dot(&diff(rho, lambda), x) - t * (vl.f - vr.f);
            let u_rho = dot(rho, x) + t * vr.f;
            let u_lambda = dot(lambda, x) + t * vl.f;
            let points = if side > 0.0 {
                vec![shifted(x, t, &vr.gradf)]
            } else if side < 0.0 {
                vec![shifted(x, t, &vl.gradf)]
            } else {
                vec![shifted(x, t, &vr.gradf), shifted(x, t, &vl.gradf)]
            };
            let u = if side >= 0.0 { u_rho } else { u_lambda };
            Ok((u, single(points)))
        }
        MacroProfile::Rarefaction { lambda, rho } => {
            let (vr, vl) = (velocity(rho, c)?, velocity(lambda, c)?);
            let n = diff(rho, lambda);
            let proj = dot(&n, x);
            let left_edge = -t * dot(&n, &vr.gradf);
            let right_edge = -t * dot(&n, &vl.gradf);
            if proj <= left_edge {
                Ok((dot(rho, x) + t * vr.f, single(vec![shifted(x, t, &vr.gradf)])))
            } else if proj >= right_edge {
                Ok((
                    dot(lambda, x) + t * vl.f,
                    single(vec![shifted(x, t, &vl.gradf)]),
                ))
            } else {
                let s = fan_parameter(lambda, rho, x, t, c)?;
                let r: Vec<f64> = lambda
                    .iter()
                    .zip(rho)
                    .map(|(l, p)| s * l + (1.0 - s) * p)
                    .collect();
                let vr = velocity(&r, c)?;
                Ok((dot(&r, x) + t * vr.f, single(vec![shifted(x, t, &vr.gradf)])))
            }
        }
        MacroProfile::Grid { .. } => Err(MacroError::Unsupported),
    }
}

fn check_eval(t: f64, c: f64) -> Result<(), MacroError> {
    check_time_and_c(t, c)
}

/// Cells `x` of `eval_grid` with some maximizer of `u(x, t)` in `b`.
///
/// Analytic profiles use their closed-form maximizers (membership tested
/// with a tiny positional slack `tol` so points exactly on a cell face are
/// not lost); grid profiles scan over their own grid.
pub fn forward_w(
    profile: &MacroProfile,
    b: &GridRegion,
    t: f64,
    c: f64,
    eval_grid: &GridSpec,
    tol: f64,
) -> Result<GridRegion, MacroError> {
    check_eval(t, c)?;
    if let MacroProfile::Grid { grid, .. } = profile {
        let tol = default_tolerance(profile, grid);
        return forward_w_scan(profile, b, t, c, eval_grid, grid, tol);
    }
    let mut membership = Vec::with_capacity(eval_grid.n_cells());
    for x in eval_grid.centers() {
        let (_, argmax) = closed_form_u(profile, &x, t, c)?;
        membership.push(
            argmax
                .points
                .iter()
                .any(|y| b.contains_point_near(y.coords(), tol)),
        );
    }
    Ok(GridRegion::new(eval_grid.clone(), membership)?)
}

/// Generic [`forward_w`] through [`hopf_lax_solve`] on `search_grid`.
pub fn forward_w_scan(
    profile: &MacroProfile,
    b: &GridRegion,
    t: f64,
    c: f64,
    eval_grid: &GridSpec,
    search_grid: &GridSpec,
    tol: f64,
) -> Result<GridRegion, MacroError> {
    check_eval(t, c)?;
    let mut membership = Vec::with_capacity(eval_grid.n_cells());
    for x in eval_grid.centers() {
        let hl = hopf_lax_solve(profile, &x, t, c, search_grid, tol)?;
        membership.push(hl.argmax.points.iter().any(|y| b.contains_point(y.coords())));
    }
    Ok(GridRegion::new(eval_grid.clone(), membership)?)
}

/// `X(B, t) = W(B, t) ∩ W(closure of Bᶜ, t)`.
pub fn interface_x(
    profile: &MacroProfile,
    b: &GridRegion,
    t: f64,
    c: f64,
    eval_grid: &GridSpec,
    tol: f64,
) -> Result<GridRegion, MacroError> {
    let w_b = forward_w(profile, b, t, c, eval_grid, tol)?;
    let w_c = forward_w(profile, &b.closure_of_complement(), t, c, eval_grid, tol)?;
    Ok(w_b.intersection(&w_c)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid1(lo: f64, hi: f64, n: usize) -> GridSpec {
        GridSpec::uniform(Point::from([lo]), Point::from([hi]), n).unwrap()
    }

    #[test]
    fn velocity_examples() {
        let v = velocity(&[1.0], 2.0).unwrap();
        assert_eq!((v.kappa, v.f, v.gradf.clone()), (1.0, 1.0, vec![-1.0]));
        let v = velocity(&[1.0, 1.0], 3.0).unwrap();
        assert_eq!((v.kappa, v.f, v.gradf.clone()), (1.0, 1.0, vec![-1.0, -1.0]));
        let a = velocity(&[0.7, 1.3], 2.4).unwrap().f;
        let b = velocity(&[1.4, 2.6], 2.4).unwrap().f;
        assert!((b - a / 4.0).abs() < 1e-14);
        assert_eq!(velocity(&[1.0, 0.0], 2.0), Err(MacroError::NonPositiveDensity));
        assert_eq!(velocity(&[1.0], 0.0), Err(MacroError::BadConstant(0.0)));
    }

    #[test]
    fn shape_examples() {
        assert_eq!(shape_g(&[0.0, 0.0], 2.5), 0.0);
        assert_eq!(shape_g(&[1.0], 2.0), 2.0);
        assert_eq!(shape_g(&[1.0, -0.1], 2.0), f64::NEG_INFINITY);
        // u = t g(x/t) = 2 sqrt(x t) in one dimension.
        let (x, t) = (0.3, 1.7);
        assert!((t * shape_g(&[x / t], 2.0) - 2.0 * (x * t).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn flat_closed_form_and_scan() {
        let p = MacroProfile::flat(vec![1.0]).unwrap();
        let (u, am) = closed_form_u(&p, &[0.4], 1.0, 2.0).unwrap();
        assert!((u - 1.4).abs() < 1e-14);
        assert!((am.points[0][0] - (0.4 - 1.0)).abs() < 1e-14);
        let g = grid1(-3.0, 1.0, 800);
        let hl = hopf_lax_solve(&p, &[0.4], 1.0, 2.0, &g, default_tolerance(&p, &g)).unwrap();
        assert!((hl.u - 1.4).abs() <= 2.0 * p.lipschitz() * g.max_cell_width());
        assert!(!hl.argmax.shock);
        assert!((hl.argmax.points[0][0] + 0.6).abs() <= g.max_cell_width());
    }

    #[test]
    fn shock_location_one_dimension() {
        let p = MacroProfile::shock(vec![1.0], vec![2.0]).unwrap();
        let t = 1.3;
        let (_, am) = closed_form_u(&p, &[t / 2.0], t, 2.0).unwrap();
        assert_eq!(am.points.len(), 2);
        assert!(am.shock);
        let (_, am) = closed_form_u(&p, &[t / 2.0 + 0.01], t, 2.0).unwrap();
        assert_eq!(am.points.len(), 1);
        let g = grid1(-4.0, 2.0, 1200);
        let hl = hopf_lax_solve(&p, &[t / 2.0], t, 2.0, &g, default_tolerance(&p, &g)).unwrap();
        assert!(hl.argmax.shock);
        let hl = hopf_lax_solve(&p, &[t / 2.0 + 0.4], t, 2.0, &g, default_tolerance(&p, &g)).unwrap();
        assert!(!hl.argmax.shock);
    }

    #[test]
    fn rarefaction_fan_is_square_root() {
        let p = MacroProfile::rarefaction(vec![1.0], vec![2.0]).unwrap();
        let t = 2.0;
        for x in [0.6, 1.0, 1.5, 1.9] {
            let (u, am) = closed_form_u(&p, &[x], t, 2.0).unwrap();
            assert!((u - 2.0 * (x * t).sqrt()).abs() < 1e-9, "{x}");
            assert!(am.points[0][0].abs() < 1e-9);
        }
    }

    #[test]
    fn closed_forms_continuous_across_branches() {
        let c = 2.3;
        let t = 0.8;
        let lambda = vec![1.0, 2.0];
        let rho = vec![2.0, 3.0];
        let n = diff(&rho, &lambda);
        let shock = MacroProfile::shock(lambda.clone(), rho.clone()).unwrap();
        let rare = MacroProfile::rarefaction(lambda.clone(), rho.clone()).unwrap();
        let (vr, vl) = (velocity(&rho, c).unwrap(), velocity(&lambda, c).unwrap());
        let nn = dot(&n, &n);
        let at_level = |level: f64, tangent: f64| {
            // Point with (ρ−λ)·x = level, offset along the hyperplane.
            let base: Vec<f64> = n.iter().map(|v| v * level / nn).collect();
            vec![base[0] + tangent * n[1], base[1] - tangent * n[0]]
        };
        for tangent in [-0.7, 0.0, 0.9] {
            let levels = [
                (&shock, t * (vl.f - vr.f)),
                (&rare, -t * dot(&n, &vr.gradf)),
                (&rare, -t * dot(&n, &vl.gradf)),
            ];
            for (profile, level) in levels {
                let lo = closed_form_u(profile, &at_level(level - 1e-10, tangent), t, c).unwrap().0;
                let hi = closed_form_u(profile, &at_level(level + 1e-10, tangent), t, c).unwrap().0;
                assert!((lo - hi).abs() < 1e-9, "{lo} {hi}");
            }
        }
    }

    #[test]
    fn forward_and_interface_sets_one_dimension() {
        let eval = grid1(-2.0, 3.0, 500);
        let bgrid = grid1(-6.0, 6.0, 1200);
        let half = GridRegion::from_predicate(bgrid.clone(), |y| y[0] >= 0.0);
        let flat = MacroProfile::flat(vec![1.0]).unwrap();
        let w = forward_w(&flat, &half, 1.0, 2.0, &eval, 1e-9).unwrap();
        for i in 0..eval.n_cells() {
            let x = eval.center(i)[0];
            if (x - 1.0).abs() > 0.011 {
                assert_eq!(w.contains(i), x >= 1.0, "{x}");
            }
        }
        let all = GridRegion::full(bgrid.clone());
        assert_eq!(forward_w(&flat, &all, 1.0, 2.0, &eval, 1e-9).unwrap().count(), eval.n_cells());
        let empty = GridRegion::empty(bgrid.clone());
        assert!(interface_x(&flat, &empty, 1.0, 2.0, &eval, 1e-9).unwrap().is_empty());

        let rare = MacroProfile::rarefaction(vec![1.0], vec![2.0]).unwrap();
        let x = interface_x(&rare, &half, 1.0, 2.0, &eval, 1e-9).unwrap();
        for i in 0..eval.n_cells() {
            let xc = eval.center(i)[0];
            if (xc - 0.25).abs() > 0.011 && (xc - 1.0).abs() > 0.011 {
                assert_eq!(x.contains(i), (0.25..=1.0).contains(&xc), "{xc}");
            }
        }

        let shock = MacroProfile::shock(vec![1.0], vec![2.0]).unwrap();
        let band = GridRegion::from_predicate(bgrid, |y| (-0.3..=0.1).contains(&y[0]));
        assert!(forward_w(&shock, &band, 1.0, 2.0, &eval, 1e-9).unwrap().is_empty());
    }

    #[test]
    fn wedge_like_grid_profile_matches_shape() {
        let pg = grid1(-4.0, 4.0, 400);
        let wedge = MacroProfile::tabulate(pg.clone(), |y| if y[0] >= 0.0 { 0.0 } else { -1e3 }).unwrap();
        let t = 1.0;
        for x in [0.5, 1.0, 2.0] {
            let hl = hopf_lax_solve(&wedge, &[x], t, 2.0, &pg, 1e-9).unwrap();
            assert!((hl.u - t * shape_g(&[x / t], 2.0)).abs() < 0.05, "{x}: {}", hl.u);
        }
    }

    #[test]
    fn boundary_maximizer_is_an_error() {
        let p = MacroProfile::flat(vec![0.01]).unwrap();
        // Maximizer x − t f/ρ = x − 10000 lies far below any doubled grid.
        let g = grid1(-1.0, 1.0, 100);
        assert_eq!(
            hopf_lax_solve(&p, &[0.5], 1.0, 2.0, &g, 1e-6),
            Err(MacroError::BoundaryMaximizer)
        );
    }

    #[test]
    fn conjugacy_two_dimensions() {
        // f(ρ) = sup_x {g(x) − x·ρ} by nested ternary search on the concave objective.
        let c = 2.4;
        let sup1 = |x0: f64, rho: &[f64]| {
            let (mut a, mut b) = (0.0f64, 50.0f64);
            let h = |x1: f64| shape_g(&[x0, x1], c) - x0 * rho[0] - x1 * rho[1];
            for _ in 0..200 {
                let (m1, m2) = (a + (b - a) / 3.0, b - (b - a) / 3.0);
                if h(m1) < h(m2) { a = m1 } else { b = m2 }
            }
            h(0.5 * (a + b))
        };
        for rho in [[1.0, 1.0], [0.8, 1.7], [2.0, 0.5]] {
            let (mut a, mut b) = (0.0f64, 50.0f64);
            for _ in 0..200 {
                let (m1, m2) = (a + (b - a) / 3.0, b - (b - a) / 3.0);
                if sup1(m1, &rho) < sup1(m2, &rho) { a = m1 } else { b = m2 }
            }
            let numeric = sup1(0.5 * (a + b), &rho);
            let exact = velocity(&rho, c).unwrap().f;
            assert!(((numeric - exact) / exact).abs() < 1e-6, "{numeric} vs {exact}");
        }
    }

    #[test]
    fn grid_profile_rejects_decreasing_values() {
        let g = grid1(0.0, 1.0, 3);
        assert_eq!(
            MacroProfile::grid(g, vec![0.0, 2.0, 1.0]),
            Err(MacroError::NotMonotone)
        );
    }

    proptest! {
        #[test]
        fn flat_maximizer_is_singleton(x0 in -1.0f64..1.0, x1 in -1.0f64..1.0, t in 0.1f64..2.0) {
            let p = MacroProfile::flat(vec![1.2, 0.8]).unwrap();
            let (u, am) = closed_form_u(&p, &[x0, x1], t, 2.5).unwrap();
            prop_assert_eq!(am.points.len(), 1);
            prop_assert!(!am.shock);
            let y = &am.points[0];
            let direct = hopf_lax_objective(&p, &[x0, x1], y.coords(), t, 2.5);
            prop_assert!((direct - u).abs() < 1e-9);
        }

        #[test]
        fn hopf_lax_monotone(x in -1.0f64..1.0, dx in 0.0f64..0.5, t in 0.2f64..1.5, dt in 0.05f64..0.5) {
            let p = MacroProfile::rarefaction(vec![1.0], vec![2.0]).unwrap();
            let g = grid1(-6.0, 2.0, 800);
            let tol = default_tolerance(&p, &g);
            let u = |x: f64, t: f64| hopf_lax_solve(&p, &[x], t, 2.0, &g, tol).unwrap().u;
            prop_assert!(u(x + dx, t) >= u(x, t) - 1e-12);
            prop_assert!(u(x, t + dt) > u(x, t));
        }

        #[test]
        fn forward_set_grows_with_b(cut in -1.0f64..1.0, extra in 0.0f64..1.0) {
            let p = MacroProfile::shock(vec![1.0], vec![2.0]).unwrap();
            let bg = grid1(-5.0, 5.0, 200);
            let eval = grid1(-1.0, 2.0, 60);
            let small = GridRegion::from_predicate(bg.clone(), |y| y[0] >= cut);
            let big = GridRegion::from_predicate(bg, |y| y[0] >= cut - extra);
            let ws = forward_w(&p, &small, 1.0, 2.0, &eval, 1e-9).unwrap();
            let wb = forward_w(&p, &big, 1.0, 2.0, &eval, 1e-9).unwrap();
            prop_assert!(ws.is_subset_of(&wb).unwrap());
        }
    }
}
