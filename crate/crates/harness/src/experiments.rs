//! The canonical experiments. Each one writes per-replica CSVs, an
//! `aggregate.csv` with an `error` column against the macroscopic
//! prediction, and a manifest.

use std::io::Write;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use pgrowth::chain::{chain_replica, mean_stderr};
use pgrowth::coupling::{couple_evolve, CoupledState, DefectSnapshot};
use pgrowth::geometry::{boundary_of, inclusion_gap};
use pgrowth::growth::{
    evaluate_lpp, evaluate_oracle, generator_apply, run_event_driven, validate_search_box,
    Evaluator, HeightProfile, ProfileSpec, Query, SearchBox,
};
use pgrowth::hammersley::{
    build_coupled_shock_pair, build_flat_field_2d, build_shock_field_2d, flux_past, simulate_padded,
};
use pgrowth::io::{write_defect_csv, write_estimates_csv, write_region_csv, write_trajectory_csv};
use pgrowth::io::{DefectSidecar, EstimateRow};
use pgrowth::macroscopic::{closed_form_u, forward_w, interface_x, shape_g, MacroProfile};
use pgrowth::poisson::{mix, sample};
use pgrowth::{GridRegion, GridSpec, Height, Point, PointCloud, RNG_ID};
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig, HalfSpace, InitKind};
use crate::output::{manifest_hash, CProvenance, CSource, Manifest, OutputDir};
use crate::{validation, HarnessError};

/// Replica rows per `replica-*.csv` shard for tabular experiments.
const REPLICAS_PER_FILE: usize = 1000;

/// Seed stream for the embedded `c` estimate.
const C_STREAM: u64 = 0xC;

#[derive(Debug)]
pub struct RunReport {
    pub dir: PathBuf,
    pub manifest: Manifest,
    /// Checks that failed after all artifacts were written.
    pub failures: Vec<String>,
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn axis_names(prefix: &str, d: usize) -> Vec<String> {
    (0..d).map(|i| format!("{prefix}{i}")).collect()
}

fn cloud(lo: &[f64], hi: &[f64], seed: u64) -> Result<PointCloud, HarnessError> {
    sample(&Point::from(lo.to_vec()), &Point::from(hi.to_vec()), 1.0, seed).map_err(validation)
}

pub fn c_provenance(config: &ExperimentConfig) -> Result<CProvenance, HarnessError> {
    let needs_c = matches!(
        config.experiment,
        Experiment::WedgeShape | Experiment::HydroProfile | Experiment::Defect
    );
    if !needs_c {
        return Ok(CProvenance::unused());
    }
    if config.d == 1 {
        return Ok(CProvenance {
            value: Some(2.0),
            source: CSource::Exact,
            stderr: 0.0,
            estimate: None,
        });
    }
    if let Some(c) = config.c_override {
        return Ok(CProvenance {
            value: Some(c),
            source: CSource::Override,
            stderr: 0.0,
            estimate: None,
        });
    }
    let est = config.c_estimate.clone().unwrap_or_default();
    let nu = config.d + 1;
    let seed = mix(config.seed, C_STREAM);
    let b = Point::splat(1.0, nu);
    let estimate = pgrowth::chain::estimate_c(nu, est.n, &b, est.replicas, seed).map_err(validation)?;
    Ok(CProvenance {
        value: Some(estimate.mean),
        source: CSource::Estimated,
        stderr: estimate.stderr,
        estimate: Some(EstimateRow::from(&estimate)),
    })
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    config.validate()?;
    let started = Instant::now();
    let started_unix = now_unix();
    let c = c_provenance(config)?;
    let hash = manifest_hash(config, &c);
    let root = config.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut out = OutputDir::create(&root, config.experiment.as_str(), config.seed, &hash)?;
    let ctx = Ctx { config, c: &c };
    let failures = match config.experiment {
        Experiment::EstimateC => ctx.estimate_c(&mut out)?,
        Experiment::WedgeShape => ctx.heights(&mut out, HeightKind::Wedge)?,
        Experiment::HydroProfile => ctx.heights(&mut out, HeightKind::Hydro)?,
        Experiment::GeneratorCheck => ctx.generator_check(&mut out)?,
        Experiment::Defect => ctx.defect(&mut out)?,
        Experiment::HammersleyFlux => ctx.hammersley_flux(&mut out)?,
        Experiment::OracleXcheck => ctx.oracle_xcheck(&mut out)?,
    };
    let dir = out.path().to_path_buf();
    let manifest = out.finish(config, c, started_unix, started.elapsed().as_secs_f64())?;
    Ok(RunReport {
        dir,
        manifest,
        failures,
    })
}

struct Reach {
    floor: Vec<f64>,
    /// Largest `t + max_i (x_i − y_i)` from a maximizer `y` to its query.
    extent: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum HeightKind {
    Wedge,
    Hydro,
}

struct Ctx<'a> {
    config: &'a ExperimentConfig,
    c: &'a CProvenance,
}

impl Ctx<'_> {
    fn replica_seed(&self, r: usize) -> u64 {
        mix(self.config.seed, r as u64)
    }

    fn c(&self) -> f64 {
        self.c.value.expect("experiment uses c")
    }

    /// A prediction and its spread when `c` moves by one standard error.
    fn predict(&self, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
        let c = self.c();
        let se = self.c.stderr;
        let spread = if se > 0.0 {
            0.5 * (f(c + se) - f(c - se)).abs()
        } else {
            0.0
        };
        (f(c), spread)
    }

    /// Writes rows (each starting with the replica index) in shards.
    fn replica_tables(
        &self,
        out: &mut OutputDir,
        head: &[String],
        per_replica: &[Vec<Vec<String>>],
    ) -> Result<(), HarnessError> {
        for (shard, chunk) in per_replica.chunks(REPLICAS_PER_FILE).enumerate() {
            let rows: Vec<Vec<String>> = chunk.iter().flatten().cloned().collect();
            out.table(&format!("replica-{shard:04}.csv"), head, &rows)?;
        }
        Ok(())
    }

    fn estimate_c(&self, out: &mut OutputDir) -> Result<Vec<String>, HarnessError> {
        let cfg = self.config;
        let nu = cfg.d + 1;
        let b = Point::from(cfg.aspect());
        let mut per_replica = vec![Vec::new(); cfg.replicas];
        let mut estimates = Vec::new();
        for (ni, &n) in cfg.n_list.iter().enumerate() {
            let seed = mix(cfg.seed, ni as u64);
            let values: Vec<f64> = (0..cfg.replicas)
                .into_par_iter()
                .map(|r| chain_replica(nu, n, &b, mix(seed, r as u64)).map_err(validation))
                .collect::<Result<_, _>>()?;
            for (r, v) in values.iter().enumerate() {
                per_replica[r].push(vec![r.to_string(), num(n), num(*v)]);
            }
            let (mean, stderr) = mean_stderr(&values);
            estimates.push(EstimateRow {
                nu,
                n,
                b_product: b.product(),
                replicas: cfg.replicas,
                mean,
                stderr,
                seed,
                rng_id: RNG_ID.to_string(),
            });
        }
        self.replica_tables(out, &header(&["replica", "n", "value"]), &per_replica)?;
        let mut w = out.csv("estimates.csv")?;
        write_estimates_csv(&mut w, &estimates, true)?;
        w.flush()?;
        // c₂ = 2 is the one exactly known value, scaled per the aspect's product.
        let reference = (nu == 2).then(|| 2.0 * b.product().sqrt());
        let rows: Vec<Vec<String>> = estimates
            .iter()
            .map(|e| {
                vec![
                    nu.to_string(),
                    num(e.n),
                    e.replicas.to_string(),
                    num(e.mean),
                    num(e.stderr),
                    opt(reference),
                    opt(reference.map(|r| e.mean - r)),
                ]
            })
            .collect();
        out.table(
            "aggregate.csv",
            &header(&["nu", "n", "replicas", "mean", "stderr", "reference", "error"]),
            &rows,
        )?;
        Ok(vec![])
    }

    /// Where the closed-form maximizers over the grid and times reach, in
    /// macroscopic units.
    fn maximizer_reach(&self, profile: &MacroProfile, grid: &GridSpec) -> Result<Reach, HarnessError> {
        let mut floor = grid.lo.coords().to_vec();
        let mut extent: f64 = 0.0;
        for x in grid.centers() {
            for &t in &self.config.t_list {
                let (_, argmax) = closed_form_u(profile, &x, t, self.c()).map_err(validation)?;
                for y in &argmax.points {
                    let span = x.iter().zip(y.coords()).map(|(a, b)| a - b).fold(0.0, f64::max);
                    extent = extent.max(t + span);
                    for (f, v) in floor.iter_mut().zip(y.coords()) {
                        *f = f.min(*v);
                    }
                }
            }
        }
        Ok(Reach { floor, extent })
    }

    /// Microscopic search box below `micro_hi` reaching past every maximizer
    /// by a margin on the transversal fluctuation scale of the longest path.
    fn search_box(&self, reach: &Reach, n: f64, micro_hi: &[f64]) -> SearchBox {
        let pad = 4.0 * (n * reach.extent).powf(2.0 / 3.0) + 10.0;
        let lower: Vec<f64> = reach.floor.iter().map(|f| n * f - pad).collect();
        SearchBox::at(&lower, micro_hi)
    }

    fn doubled_lower(sb: &SearchBox) -> Vec<f64> {
        sb.doubled().lower.values()
    }

    /// Unit-cell grid on `[lo, hi]` for random initial fields.
    fn field_grid(lo: &[f64], hi: &[f64]) -> Result<GridSpec, HarnessError> {
        let cells = lo.iter().zip(hi).map(|(l, h)| (h - l).ceil().max(1.0) as usize).collect();
        let hi: Vec<f64> = lo.iter().zip(&cells).map(|(l, c): (&f64, &usize)| l + *c as f64).collect();
        GridSpec::new(Point::from(lo.to_vec()), Point::from(hi), cells).map_err(validation)
    }

    fn initial_profile(
        &self,
        profile: &MacroProfile,
        n: f64,
        window: (&[f64], &[f64]),
        seed: u64,
    ) -> Result<ProfileSpec, HarnessError> {
        match (self.config.init, profile) {
            (InitKind::Rounded, _) => Ok(ProfileSpec::rounded(profile.clone(), n)),
            (InitKind::Hammersley, MacroProfile::Flat { rho }) => {
                build_flat_field_2d(rho, &Self::field_grid(window.0, window.1)?, seed).map_err(validation)
            }
            (InitKind::Hammersley, MacroProfile::Shock { lambda, rho }) => {
                build_shock_field_2d(lambda, rho, &Self::field_grid(window.0, window.1)?, seed)
                    .map_err(validation)
            }
            _ => Err(HarnessError::Config("unsupported init/profile pair".into())),
        }
    }

    fn heights(&self, out: &mut OutputDir, kind: HeightKind) -> Result<Vec<String>, HarnessError> {
        let cfg = self.config;
        let d = cfg.d;
        let grid_cfg = cfg.grid.as_ref().expect("validated");
        let profile = match kind {
            HeightKind::Wedge => None,
            HeightKind::Hydro => Some(cfg.macro_profile()?),
        };
        let mut head = header(&["replica", "n", "t"]);
        head.extend(axis_names("x", d));
        head.extend(header(&["value", "scaled", "prediction", "error"]));
        let mut per_replica = vec![Vec::new(); cfg.replicas];
        let mut agg = Vec::new();
        for (ni, &n) in cfg.n_list.iter().enumerate() {
            let micro = grid_cfg.micro(n)?;
            let micro_hi = micro.hi.coords().to_vec();
            let queries: Vec<Query> = cfg
                .t_list
                .iter()
                .flat_map(|&t| micro.centers().into_iter().map(move |x| Query::new(x, n * t)))
                .collect();
            let (sb, cloud_lo) = match &profile {
                None => {
                    let sb = SearchBox::at(&vec![0.0; d], &micro_hi);
                    (sb, vec![0.0; d])
                }
                Some(p) => {
                    let reach = self.maximizer_reach(p, &micro.scaled(1.0 / n))?;
                    let sb = self.search_box(&reach, n, &micro_hi);
                    let lo = Self::doubled_lower(&sb);
                    (sb, lo)
                }
            };
            let mut cloud_hi = micro_hi.clone();
            cloud_hi.push(n * cfg.max_t());
            let mut lo = cloud_lo.clone();
            lo.push(0.0);
            let predictions: Vec<(f64, f64)> = queries
                .iter()
                .map(|q| {
                    let x: Vec<f64> = q.x.iter().map(|v| v / n).collect();
                    let t = q.t / n;
                    match &profile {
                        None => Ok(self.predict(|c| t * shape_g(&x.iter().map(|v| v / t).collect::<Vec<_>>(), c))),
                        Some(p) => {
                            let mut err = None;
                            let pred = self.predict(|c| {
                                closed_form_u(p, &x, t, c)
                                    .map(|r| r.0)
                                    .unwrap_or_else(|e| {
                                        err = Some(e.to_string());
                                        f64::NAN
                                    })
                            });
                            match err {
                                Some(e) => Err(HarnessError::Validation(e)),
                                None => Ok(pred),
                            }
                        }
                    }
                })
                .collect::<Result<_, _>>()?;
            let values: Vec<Vec<Height>> = (0..cfg.replicas)
                .into_par_iter()
                .map(|r| {
                    let seed = mix(self.replica_seed(r), ni as u64);
                    let c = cloud(&lo, &cloud_hi, seed)?;
                    let out = match &profile {
                        None => {
                            evaluate_lpp(&ProfileSpec::wedge(vec![0.0; d]), &c, &queries, &sb)
                        }
                        Some(p) => {
                            let init = self.initial_profile(
                                p,
                                n,
                                (&cloud_lo, &micro_hi),
                                mix(seed, 1),
                            )?;
                            validate_search_box(Evaluator::Lpp, &init, &c, &queries, &sb)
                        }
                    };
                    Ok(out.map_err(validation)?.values)
                })
                .collect::<Result<_, HarnessError>>()?;
            for (qi, q) in queries.iter().enumerate() {
                let x: Vec<String> = q.x.iter().map(|v| num(v / n)).collect();
                let t = q.t / n;
                let (pred, pred_se) = predictions[qi];
                let scaled: Vec<f64> = values.iter().map(|v| v[qi].as_f64() / n).collect();
                for (r, s) in scaled.iter().enumerate() {
                    let mut row = vec![r.to_string(), num(n), num(t)];
                    row.extend(x.iter().cloned());
                    row.extend([values[r][qi].to_string(), num(*s), num(pred), num(s - pred)]);
                    per_replica[r].push(row);
                }
                let (mean, se) = mean_stderr(&scaled);
                let mut row = vec![num(n), num(t)];
                row.extend(x);
                row.extend([num(mean), num(se), num(pred), num(pred_se), num(mean - pred)]);
                agg.push(row);
            }
        }
        self.replica_tables(out, &head, &per_replica)?;
        let mut agg_head = header(&["n", "t"]);
        agg_head.extend(axis_names("x", d));
        agg_head.extend(header(&["mean", "stderr", "prediction", "prediction_stderr", "error"]));
        out.table("aggregate.csv", &agg_head, &agg)?;
        Ok(vec![])
    }

    fn generator_check(&self, out: &mut OutputDir) -> Result<Vec<String>, HarnessError> {
        let cfg = self.config;
        let d = cfg.d;
        let x0 = cfg.x0();
        let k = cfg.k();
        let wedge = ProfileSpec::wedge(vec![0.0; d]);
        let hi: Vec<f64> = x0.iter().map(|v| 1.5 * v).collect();
        let mut cloud_hi = hi.clone();
        cloud_hi.push(cfg.max_t());
        let zero = vec![0.0; d];
        let mut lo = zero.clone();
        lo.push(0.0);
        // Per replica and time: (σ(x₀, t) ≥ k, ∫₀ᵗ L 1{σ(x₀) ≥ k} ds).
        let results: Vec<Vec<(bool, f64)>> = (0..cfg.replicas)
            .into_par_iter()
            .map(|r| {
                let c = cloud(&lo, &cloud_hi, self.replica_seed(r))?;
                cfg.t_list
                    .iter()
                    .map(|&t| {
                        let (mut last, mut rate, mut integral) = (0.0, 0.0, 0.0);
                        let field = run_event_driven(&wedge, &c, (&zero, &hi), t, |s, f| {
                            integral += rate * (s - last);
                            last = s;
                            rate = generator_apply(f, &x0, k);
                        })
                        .map_err(validation)?;
                        integral += rate * (t - last);
                        Ok((field.eval(&x0) >= Height::Finite(k), integral))
                    })
                    .collect::<Result<Vec<_>, HarnessError>>()
            })
            .collect::<Result<_, HarnessError>>()?;
        let per_replica: Vec<Vec<Vec<String>>> = results
            .iter()
            .enumerate()
            .map(|(r, rows)| {
                rows.iter()
                    .zip(&cfg.t_list)
                    .map(|((hit, integral), t)| {
                        vec![r.to_string(), num(*t), (*hit as u8).to_string(), num(*integral)]
                    })
                    .collect()
            })
            .collect();
        self.replica_tables(out, &header(&["replica", "t", "hit", "integral"]), &per_replica)?;
        let volume: f64 = x0.iter().product();
        let mut agg = Vec::new();
        for (ti, &t) in cfg.t_list.iter().enumerate() {
            let hits: Vec<f64> = results.iter().map(|r| r[ti].0 as u8 as f64).collect();
            let ints: Vec<f64> = results.iter().map(|r| r[ti].1).collect();
            let (p, p_se) = mean_stderr(&hits);
            let (m, m_se) = mean_stderr(&ints);
            // A Poisson void: P{σ(x₀, t) ≥ 1} = 1 − exp(−|[0, x₀]| t).
            let reference = (k == 1).then(|| 1.0 - (-volume * t).exp());
            agg.push(vec![
                num(t),
                cfg.replicas.to_string(),
                num(p),
                num(p_se),
                num(m),
                num(m_se),
                opt(reference),
                opt(reference.map(|r| p - r)),
                num(p - m),
            ]);
        }
        out.table(
            "aggregate.csv",
            &header(&[
                "t",
                "replicas",
                "p_hat",
                "p_stderr",
                "integral_mean",
                "integral_stderr",
                "reference",
                "error",
                "dynkin_error",
            ]),
            &agg,
        )?;
        Ok(vec![])
    }

    fn defect(&self, out: &mut OutputDir) -> Result<Vec<String>, HarnessError> {
        let cfg = self.config;
        let profile = cfg.macro_profile()?;
        let grid_cfg = cfg.grid.as_ref().expect("validated");
        let shock_pair = cfg.init == InitKind::Hammersley && matches!(profile, MacroProfile::Shock { .. });
        let b = match (&profile, shock_pair) {
            (MacroProfile::Shock { lambda, rho }, true) => HalfSpace {
                normal: rho.iter().zip(lambda).map(|(r, l)| r - l).collect(),
                offset: 0.0,
            },
            _ => cfg.b.clone().expect("validated"),
        };
        let mut agg = Vec::new();
        for (ni, &n) in cfg.n_list.iter().enumerate() {
            let micro = grid_cfg.micro(n)?;
            let macro_grid = micro.scaled(1.0 / n);
            let micro_hi = micro.hi.coords().to_vec();
            let reach = self.maximizer_reach(&profile, &macro_grid)?;
            let sb = self.search_box(&reach, n, &micro_hi);
            let cloud_lo = Self::doubled_lower(&sb);
            let mut lo = cloud_lo.clone();
            lo.push(0.0);
            let mut hi = micro_hi.clone();
            hi.push(n * cfg.max_t());
            out.json(&format!("grid-n{ni}.json"), &micro)?;
            let b_macro = GridRegion::from_predicate(macro_grid.clone(), |y| b.contains(y, 1.0));
            let mut predicted_x = Vec::new();
            for (ti, &t) in cfg.t_list.iter().enumerate() {
                let w = forward_w(&profile, &b_macro, t, self.c(), &macro_grid, 1e-9).map_err(validation)?;
                // A shock or characteristic interface has no cell centers on it;
                // the cells where W changes resolve it on the grid.
                let x = interface_x(&profile, &b_macro, t, self.c(), &macro_grid, 1e-9)
                    .and_then(|x| Ok(x.union(&boundary_of(&w))?))
                    .map_err(validation)?;
                let names = [format!("predicted-w-n{ni}-t{ti}.csv"), format!("predicted-x-n{ni}-t{ti}.csv")];
                for (name, region) in names.iter().zip([&w, &x]) {
                    let mut f = out.csv(name)?;
                    write_region_csv(&mut f, region)?;
                    f.flush()?;
                }
                out.json(
                    &format!("defect-n{ni}-t{ti}.json"),
                    &DefectSidecar {
                        h: cfg.h(),
                        grid: micro.clone(),
                        b_spec: b.describe(),
                        predicted: names.to_vec(),
                    },
                )?;
                predicted_x.push(x);
            }
            let snapshots: Vec<Vec<DefectSnapshot>> = (0..cfg.replicas)
                .into_par_iter()
                .map(|r| {
                    let seed = mix(self.replica_seed(r), ni as u64);
                    let state = if shock_pair {
                        let MacroProfile::Shock { lambda, rho } = &profile else { unreachable!() };
                        let fg = Self::field_grid(&cloud_lo, &micro_hi)?;
                        let (sigma, zeta, a0) =
                            build_coupled_shock_pair(lambda, rho, &fg, mix(seed, 1)).map_err(validation)?;
                        CoupledState::from_pair(sigma, zeta, a0, 1, &cloud_lo, &micro_hi)
                    } else {
                        let sigma = self.initial_profile(&profile, n, (&cloud_lo, &micro_hi), mix(seed, 1))?;
                        let a0 = GridRegion::from_predicate(micro.clone(), |y| b.contains(y, n));
                        CoupledState::raised(sigma, a0, cfg.h(), &cloud_lo, &micro_hi)
                    }
                    .map_err(validation)?;
                    let c = cloud(&lo, &hi, seed)?;
                    cfg.t_list
                        .iter()
                        .map(|&t| {
                            let queries: Vec<Query> =
                                micro.centers().into_iter().map(|x| Query::new(x, n * t)).collect();
                            validate_search_box(Evaluator::Lpp, &state.sigma, &c, &queries, &sb)
                                .map_err(validation)?;
                            validate_search_box(Evaluator::Lpp, &state.zeta, &c, &queries, &sb)
                                .map_err(validation)?;
                            couple_evolve(&state, &c, &micro, n * t, &sb).map_err(validation)
                        })
                        .collect()
                })
                .collect::<Result<_, HarnessError>>()?;
            for (r, snaps) in snapshots.iter().enumerate() {
                for (ti, ((snap, &t), x)) in snaps.iter().zip(&cfg.t_list).zip(&predicted_x).enumerate() {
                    let mut f = out.csv(&format!("replica-{r:04}-n{ni}-t{ti}.csv"))?;
                    write_defect_csv(&mut f, snap)?;
                    f.flush()?;
                    let bd = snap.boundary.rescaled(1.0 / n);
                    let gap = one_sided_gap(&bd, x)?;
                    let reverse = one_sided_gap(x, &bd)?;
                    agg.push(vec![
                        r.to_string(),
                        num(n),
                        num(t),
                        bd.count().to_string(),
                        num(gap),
                        num(reverse),
                        num(gap.max(reverse)),
                    ]);
                }
            }
        }
        out.table(
            "aggregate.csv",
            &header(&["replica", "n", "t", "boundary_cells", "inclusion_gap", "reverse_gap", "error"]),
            &agg,
        )?;
        Ok(vec![])
    }

    fn hammersley_flux(&self, out: &mut OutputDir) -> Result<Vec<String>, HarnessError> {
        let cfg = self.config;
        let (mu, tau) = (cfg.mu(), cfg.tau());
        let window = cfg
            .grid
            .as_ref()
            .map(|g| (g.lo[0], g.hi[0]))
            .unwrap_or((-10.0, 10.0));
        let ys: Vec<f64> = match &cfg.grid {
            Some(g) => g.micro(1.0)?.centers().into_iter().map(|c| c[0]).collect(),
            None => (0..10).map(|k| -9.0 + 2.0 * k as f64).collect(),
        };
        let y0 = 0.5 * (window.0 + window.1);
        let mut times = vec![0.0];
        times.extend(cfg.t_list.iter().copied());
        let horizon = cfg.max_t();
        let runs: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.replicas)
            .into_par_iter()
            .map(|r| {
                let run = simulate_padded(mu, tau, window, (0.0, horizon), self.replica_seed(r))
                    .map_err(validation)?;
                let fluxes = cfg.t_list.iter().map(|&t| flux_past(&run.traj, y0, t) as f64).collect();
                let counts = ys
                    .iter()
                    .flat_map(|&y| times.iter().map(move |&t| (y, t)))
                    .map(|(y, t)| run.traj.count(y, t) as f64)
                    .collect();
                Ok((fluxes, counts))
            })
            .collect::<Result<_, HarnessError>>()?;
        let first = simulate_padded(mu, tau, window, (0.0, horizon), self.replica_seed(0)).map_err(validation)?;
        let mut f = out.csv("trajectory-0000.csv")?;
        write_trajectory_csv(&mut f, &first.traj)?;
        f.flush()?;

        let per_replica: Vec<Vec<Vec<String>>> = runs
            .iter()
            .enumerate()
            .map(|(r, (fluxes, _))| {
                fluxes
                    .iter()
                    .zip(&cfg.t_list)
                    .map(|(fl, t)| vec![r.to_string(), num(*t), num(*fl)])
                    .collect()
            })
            .collect();
        self.replica_tables(out, &header(&["replica", "t", "flux"]), &per_replica)?;

        let mut agg = Vec::new();
        for (ti, &t) in cfg.t_list.iter().enumerate() {
            let fl: Vec<f64> = runs.iter().map(|r| r.0[ti]).collect();
            let (mean, se) = mean_stderr(&fl);
            let var = se * se * fl.len() as f64;
            let prediction = tau / mu * t;
            agg.push(vec![
                num(t),
                cfg.replicas.to_string(),
                num(mean),
                num(se),
                num(var / mean),
                num(prediction),
                num(mean - prediction),
            ]);
        }
        out.table(
            "aggregate.csv",
            &header(&["t", "replicas", "flux_mean", "flux_stderr", "var_over_mean", "prediction", "error"]),
            &agg,
        )?;

        let k = cfg.replicas as f64;
        let mut fit_rows = Vec::new();
        let mut count_rows = Vec::new();
        for (i, &y) in ys.iter().enumerate() {
            for (j, &t) in times.iter().enumerate() {
                let idx = i * times.len() + j;
                let mean = runs.iter().map(|r| r.1[idx]).sum::<f64>() / k;
                let prediction = mu * (y - 0.0) + tau / mu * t;
                count_rows.push(vec![num(y), num(t), num(mean), num(prediction), num(mean - prediction)]);
                fit_rows.push((y, t, mean));
            }
        }
        out.table(
            "counts.csv",
            &header(&["y", "t", "mean_count", "prediction", "error"]),
            &count_rows,
        )?;
        let (slope_y, slope_t) = plane_slopes(&fit_rows);
        out.table(
            "regression.csv",
            &header(&["quantity", "estimate", "prediction", "error"]),
            &[
                vec!["slope_y".into(), num(slope_y), num(mu), num(slope_y - mu)],
                vec!["slope_t".into(), num(slope_t), num(tau / mu), num(slope_t - tau / mu)],
            ],
        )?;
        Ok(vec![])
    }

    fn oracle_xcheck(&self, out: &mut OutputDir) -> Result<Vec<String>, HarnessError> {
        let cfg = self.config;
        let d = cfg.d;
        let micro = cfg.grid.as_ref().expect("validated").micro(1.0)?;
        let micro_hi = micro.hi.coords().to_vec();
        let macro_profile = cfg.profile.map(|_| cfg.macro_profile()).transpose()?;
        let (profile, lower) = match &macro_profile {
            None => {
                let corner = vec![0.0; d];
                let lower = micro.lo.coords().iter().map(|v| v.min(0.0) - 1.0).collect();
                (ProfileSpec::wedge(corner), lower)
            }
            Some(p) => {
                // Margins from the d = 1 constant; only the box extent depends on it.
                let ctx = Ctx {
                    config: cfg,
                    c: &CProvenance {
                        value: Some(2.0),
                        source: CSource::Exact,
                        stderr: 0.0,
                        estimate: None,
                    },
                };
                let reach = ctx.maximizer_reach(p, &micro)?;
                (ProfileSpec::rounded(p.clone(), 1.0), ctx.search_box(&reach, 1.0, &micro_hi).lower.values())
            }
        };
        let sb = SearchBox::at(&lower, &micro_hi);
        let wedge = macro_profile.is_none();
        let queries: Vec<Query> = cfg
            .t_list
            .iter()
            .flat_map(|&t| micro.centers().into_iter().map(move |x| Query::new(x, t)))
            .collect();
        let mut lo = lower.clone();
        lo.push(0.0);
        let mut hi = micro_hi.clone();
        hi.push(cfg.max_t());
        let results: Vec<Vec<(Height, Height, Option<Height>)>> = (0..cfg.replicas)
            .into_par_iter()
            .map(|r| {
                let c = cloud(&lo, &hi, self.replica_seed(r))?;
                let lpp = evaluate_lpp(&profile, &c, &queries, &sb).map_err(validation)?;
                let oracle = evaluate_oracle(&profile, &c, &queries, &sb).map_err(validation)?;
                let mut event = vec![None; queries.len()];
                if wedge {
                    for &t in &cfg.t_list {
                        let zero = vec![0.0; d];
                        let field = run_event_driven(&profile, &c, (&zero, &micro_hi), t, |_, _| {})
                            .map_err(validation)?;
                        for (qi, q) in queries.iter().enumerate() {
                            if q.t == t {
                                event[qi] = Some(field.eval(&q.x));
                            }
                        }
                    }
                }
                Ok((0..queries.len())
                    .map(|qi| (lpp.values[qi], oracle.values[qi], event[qi]))
                    .collect())
            })
            .collect::<Result<_, HarnessError>>()?;
        let mut head = header(&["replica", "t"]);
        head.extend(axis_names("x", d));
        head.extend(header(&["lpp", "oracle", "event", "agree"]));
        let mut mismatches = 0usize;
        let per_replica: Vec<Vec<Vec<String>>> = results
            .iter()
            .enumerate()
            .map(|(r, rows)| {
                rows.iter()
                    .zip(&queries)
                    .map(|((a, b, e), q)| {
                        let agree = a == b && e.is_none_or(|e| e == *a);
                        mismatches += !agree as usize;
                        let mut row = vec![r.to_string(), num(q.t)];
                        row.extend(q.x.iter().map(|v| num(*v)));
                        row.extend([
                            a.to_string(),
                            b.to_string(),
                            e.map(|e| e.to_string()).unwrap_or_default(),
                            (agree as u8).to_string(),
                        ]);
                        row
                    })
                    .collect()
            })
            .collect();
        self.replica_tables(out, &head, &per_replica)?;
        out.table(
            "aggregate.csv",
            &header(&["replicas", "queries", "mismatches", "error"]),
            &[vec![
                cfg.replicas.to_string(),
                queries.len().to_string(),
                mismatches.to_string(),
                mismatches.to_string(),
            ]],
        )?;
        Ok(if mismatches > 0 {
            vec![format!("{mismatches} evaluator mismatches")]
        } else {
            vec![]
        })
    }
}

/// `inclusion_gap(a, b)`, with an empty `a` inside anything and nothing
/// nonempty inside an empty `b`.
fn one_sided_gap(a: &GridRegion, b: &GridRegion) -> Result<f64, HarnessError> {
    match (a.is_empty(), b.is_empty()) {
        (true, _) => Ok(0.0),
        (false, true) => Ok(f64::INFINITY),
        _ => inclusion_gap(a, b).map_err(validation),
    }
}

/// Slopes `(b, c)` of the least squares plane `v ≈ a + b y + c t`.
fn plane_slopes(rows: &[(f64, f64, f64)]) -> (f64, f64) {
    let k = rows.len() as f64;
    let my = rows.iter().map(|r| r.0).sum::<f64>() / k;
    let mt = rows.iter().map(|r| r.1).sum::<f64>() / k;
    let mv = rows.iter().map(|r| r.2).sum::<f64>() / k;
    let (mut syy, mut stt, mut syt, mut syv, mut stv) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(y, t, v) in rows {
        let (y, t, v) = (y - my, t - mt, v - mv);
        syy += y * y;
        stt += t * t;
        syt += y * t;
        syv += y * v;
        stv += t * v;
    }
    let det = syy * stt - syt * syt;
    ((stt * syv - syt * stv) / det, (syy * stv - syt * syv) / det)
}
