use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Model};
use super::output::{loglog_slope, median, write_json, write_rows};
use crate::error::{Error, Result};
use crate::field::MacroField;
use crate::graph::{self, InteractionGraph};
use crate::kernels::{MemoryKernel, SynapticResponse};
use crate::macroscopic::{self, FineExtension, FixedPoint, MacroTrajectory, NfeSolution};
use crate::micro::{self, Observers, SimulationOptions, Termination};
use crate::operator::{self, GridOperator, StabilityReport};
use crate::rng::derive_seed;

/// Observation spacing in units of `1/α`.
const OBS_SPACING: f64 = 0.1;
/// Macro solver steps per observation interval.
const MACRO_SUBSTEPS: usize = 50;

fn exponential_rate(h: &MemoryKernel, what: &str) -> Result<f64> {
    h.decay_rate()
        .ok_or_else(|| Error::Config(format!("{what} needs an exponential memory kernel")))
}

fn eta_inf_field(model: &Model, m: usize) -> MacroField {
    let eta = model.drive.eta_inf();
    MacroField::from_fn(m, |x| eta.eval(x))
}

fn graph_seed(cfg: &ExperimentConfig, n: usize, replica: usize) -> u64 {
    derive_seed(cfg.master_seed, &[n as u64, replica as u64])
}

fn termination_label(t: Termination) -> String {
    match t {
        Termination::Completed => "completed".into(),
        Termination::Extinct(t) => format!("extinct@{t}"),
        Termination::BlowUp(t) => format!("blow_up@{t}"),
        Termination::SpikeLimit(t) => format!("spike_limit@{t}"),
    }
}

/// Operator, stability verdict and (when subcritical) the stationary profile.
struct Prepared {
    model: Model,
    op: GridOperator,
    report: StabilityReport,
    fixed: FixedPoint,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let model = cfg.build_model()?;
    let op = operator::build_operator(&model.w, cfg.grid)?;
    let r = operator::spectral_radius(&op, operator::DEFAULT_TOL, operator::DEFAULT_MAX_ITER)?.value;
    let report = StabilityReport::from_radius(r, &model.f, &model.h);
    if !report.is_subcritical {
        return Err(Error::Supercritical {
            product: report.subcritical_product,
        });
    }
    let fixed = macroscopic::fixed_point(
        &op,
        &model.f,
        &model.h,
        &eta_inf_field(&model, cfg.grid),
        macroscopic::DEFAULT_PICARD_TOL,
        macroscopic::DEFAULT_PICARD_MAX_ITER,
    )?;
    Ok(Prepared { model, op, report, fixed })
}

/// Macro step for a leakage rate: a fiftieth of the observation spacing.
fn macro_dt(alpha: f64) -> f64 {
    OBS_SPACING / alpha / MACRO_SUBSTEPS as f64
}

/// `t_ε` from the macroscopic current started at zero, extending the
/// horizon until the trajectory settles in the `ε/4` ball.
fn entry_time(p: &Prepared, alpha: f64, eps: f64) -> Result<f64> {
    let gamma = p.report.gamma.unwrap_or(alpha);
    let mut horizon = 20.0 / gamma;
    for _ in 0..6 {
        let sol = macroscopic::solve_nfe_exponential(
            &p.op,
            &p.model.f,
            alpha,
            &p.model.drive,
            &MacroField::zeros(p.op.m()),
            horizon,
            macro_dt(alpha),
            MACRO_SUBSTEPS,
        )?;
        match macroscopic::time_to_neighborhood(&sol.current, &p.fixed.x_inf, eps) {
            Ok(t) => return Ok(t),
            Err(Error::NotReached { .. }) => horizon *= 2.0,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NotReached { radius: eps / 4.0 })
}

fn tasks(cfg: &ExperimentConfig) -> Vec<(usize, usize)> {
    cfg.sizes
        .iter()
        .flat_map(|&n| (0..cfg.replicas).map(move |r| (n, r)))
        .collect()
}

fn sample_replica_graph(cfg: &ExperimentConfig, model: &Model, n: usize, replica: usize) -> Result<InteractionGraph> {
    graph::sample_graph(n, cfg.rho.at(n), &model.w, graph_seed(cfg, n, replica))
}

fn write_trajectory(dir: &Path, name: &str, out: &micro::SimulationOutcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let file = std::fs::File::create(dir.join(name))?;
    out.record.write_csv(std::io::BufWriter::new(file))
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct DilutionRow {
    pub n: usize,
    pub rho: f64,
    pub general: f64,
    pub bounded: f64,
    pub verdict: graph::Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub stability: StabilityReport,
    pub dilution: Vec<DilutionRow>,
}

pub fn run_check(cfg: &ExperimentConfig) -> Result<CheckResult> {
    let model = cfg.build_model()?;
    let stability = operator::stability_report(&model.w, &model.f, &model.h, cfg.grid)?;
    let bounded = !model.f.is_linear();
    let dilution = cfg
        .sizes
        .iter()
        .map(|&n| {
            let rho = cfg.rho.at(n);
            let report = graph::dilution_report(n, rho, cfg.tau, bounded, graph::DEFAULT_DILUTION_FLOOR)?;
            Ok(DilutionRow {
                n,
                rho,
                general: report.general,
                bounded: report.bounded,
                verdict: report.verdict,
            })
        })
        .collect::<Result<_>>()?;
    Ok(CheckResult { stability, dilution })
}

impl CheckResult {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("check.json"), self)?;
        write_rows(&dir.join("dilution.csv"), &self.dilution)
    }
}

// ---------------------------------------------------------------------------
// macro
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct MacroSummary {
    pub stability: StabilityReport,
    pub picard_iterations: usize,
    pub picard_residual: f64,
    pub dt: f64,
    pub horizon: f64,
    /// First time the trajectory stays in the `ε/4` ball of the target.
    pub t_eps: Option<f64>,
    /// `‖X_T − X∞‖∞` at the horizon (exponential memory only).
    pub current_gap: Option<f64>,
    /// `‖λ_T − ℓ‖∞` at the horizon.
    pub lambda_gap: f64,
    /// Largest `‖λ^{ODE}_t − λ^{Volterra}_t‖∞` over common samples.
    pub solver_gap: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MacroResult {
    pub fixed: FixedPoint,
    pub nfe: Option<NfeSolution>,
    pub volterra: MacroTrajectory,
    pub summary: MacroSummary,
}

/// Stationary profile plus the trajectory from zero up to
/// `max(t_final, 20/γ)`, solved both as an ODE (exponential memory) and as a
/// Volterra equation.
pub fn run_macro(cfg: &ExperimentConfig) -> Result<MacroResult> {
    let p = prepare(cfg)?;
    let alpha = p.model.h.decay_rate();
    let gamma = p.report.gamma.unwrap_or(1.0);
    let rate = alpha.unwrap_or(1.0 / p.model.h.l1_norm().max(f64::MIN_POSITIVE));
    let dt = 0.01_f64.min(0.05 / rate);
    let sample_every = ((0.1 / dt).round() as usize).max(1);
    let spacing = dt * sample_every as f64;
    let horizon = (cfg.t_final.max(20.0 / gamma) / spacing).ceil() * spacing;
    let volterra =
        macroscopic::solve_lambda_volterra(&p.op, &p.model.f, &p.model.h, &p.model.drive, horizon, dt, sample_every)?;
    let nfe = match alpha {
        Some(alpha) => Some(macroscopic::solve_nfe_exponential(
            &p.op,
            &p.model.f,
            alpha,
            &p.model.drive,
            &MacroField::zeros(cfg.grid),
            horizon,
            dt,
            sample_every,
        )?),
        None => None,
    };
    let lambda_traj = nfe.as_ref().map(|s| &s.lambda).unwrap_or(&volterra);
    let lambda_gap = lambda_traj.last().linf_distance(&p.fixed.ell)?;
    let (t_eps, current_gap, solver_gap) = match &nfe {
        Some(sol) => {
            let t_eps = macroscopic::time_to_neighborhood(&sol.current, &p.fixed.x_inf, cfg.eps).ok();
            let gap = sol
                .lambda
                .fields()
                .iter()
                .zip(volterra.fields())
                .map(|(a, b)| a.linf_distance(b))
                .try_fold(0.0_f64, |acc, d| d.map(|d| acc.max(d)))?;
            (t_eps, Some(sol.current.last().linf_distance(&p.fixed.x_inf)?), Some(gap))
        }
        None => (macroscopic::time_to_neighborhood(&volterra, &p.fixed.ell, cfg.eps).ok(), None, None),
    };
    let summary = MacroSummary {
        stability: p.report,
        picard_iterations: p.fixed.iterations,
        picard_residual: p.fixed.residual,
        dt,
        horizon,
        t_eps,
        current_gap,
        lambda_gap,
        solver_gap,
    };
    Ok(MacroResult {
        fixed: p.fixed,
        nfe,
        volterra,
        summary,
    })
}

impl MacroResult {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let create = |name: &str| -> Result<_> { Ok(std::io::BufWriter::new(std::fs::File::create(dir.join(name))?)) };
        macroscopic::write_profile_csv(&self.fixed.x_inf, create("x_inf.csv")?)?;
        macroscopic::write_profile_csv(&self.fixed.ell, create("ell.csv")?)?;
        self.volterra.write_csv(create("lambda_volterra.csv")?)?;
        if let Some(sol) = &self.nfe {
            sol.current.write_csv(create("current.csv")?)?;
            sol.lambda.write_csv(create("lambda.csv")?)?;
        }
        write_json(&dir.join("macro.json"), &self.summary)
    }
}

// ---------------------------------------------------------------------------
// stability
// ---------------------------------------------------------------------------

/// Sup and exceedance of a sampled distance over the window.
fn window_stats(values: &[f64], eps: f64) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let sup = values.iter().fold(0.0_f64, |a, &b| a.max(b));
    let exceed = values.iter().filter(|&&v| v > eps).count() as f64 / values.len() as f64;
    (sup, exceed)
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityRow {
    pub n: usize,
    pub replica: usize,
    pub rho: f64,
    pub t_eps: f64,
    pub horizon: f64,
    pub samples: usize,
    pub sup_dist: f64,
    pub exceedance: f64,
    pub sup_dist_ell: f64,
    pub exceedance_ell: f64,
    /// Largest weighted spike count between consecutive samples: how far a
    /// current can rise between two observations.
    pub lattice_gap: f64,
    pub within_eps: bool,
    pub termination: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilitySummaryRow {
    pub n: usize,
    pub mean_exceedance: f64,
    pub mean_exceedance_ell: f64,
    /// Share of replicas whose exceedance is zero.
    pub clean_share: f64,
    pub clean_share_ell: f64,
}

#[derive(Debug, Clone)]
pub struct StabilityResult {
    pub report: StabilityReport,
    pub t_eps: f64,
    pub rows: Vec<StabilityRow>,
    pub summary: Vec<StabilitySummaryRow>,
}

pub fn run_stability(cfg: &ExperimentConfig) -> Result<StabilityResult> {
    let alpha = exponential_rate(&cfg.memory.build()?, "the stability experiment")?;
    let p = prepare(cfg)?;
    let t_eps = entry_time(&p, alpha, cfg.eps)?;
    let dt_obs = OBS_SPACING / alpha;
    let eta = p.model.drive.eta_inf().clone();
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        let rho = cfg.rho.at(n);
        let dilution = graph::dilution_report(n, rho, cfg.tau, !p.model.f.is_linear(), graph::DEFAULT_DILUTION_FLOOR)?;
        if dilution.verdict == graph::Verdict::Warn {
            log::warn!("N = {n}: dilution proxy {:.3} below the advisory floor", dilution.general);
        }
        let nodes = micro::fine_nodes(n, cfg.fine_factor);
        let observers = Observers {
            dt: dt_obs,
            fine_factor: cfg.fine_factor,
            x_inf: Some(p.fixed.x_inf_at(&p.model.w, &nodes)),
            ell: Some(p.fixed.ell_at(&p.model.w, &p.model.f, |x| eta.eval(x), &nodes)),
            x_t: None,
        };
        let horizon = (n as f64 * rho).powi(cfg.horizon_exponent as i32).ceil() * cfg.t_f + t_eps;
        let chunk: Vec<StabilityRow> = (0..cfg.replicas)
            .into_par_iter()
            .map(|replica| -> Result<StabilityRow> {
                let g = sample_replica_graph(cfg, &p.model, n, replica)?;
                let opts = SimulationOptions::new(horizon, graph_seed(cfg, n, replica));
                let out = micro::simulate_exponential(&g, &p.model.f, alpha, &p.model.drive, &observers, &opts)?;
                if cfg.write_trajectories {
                    write_trajectory(&cfg.output_dir.join("trajectories"), &format!("stability_n{n}_r{replica}.csv"), &out)?;
                }
                let window: Vec<_> = out.record.window(t_eps, horizon).collect();
                let d: Vec<f64> = window.iter().filter_map(|s| s.dist_to_xinf).collect();
                let d_ell: Vec<f64> = window.iter().filter_map(|s| s.dist_to_ell).collect();
                let (sup_dist, exceedance) = window_stats(&d, cfg.eps);
                let (sup_dist_ell, exceedance_ell) = window_stats(&d_ell, cfg.eps);
                let lattice_gap = window
                    .windows(2)
                    .map(|w| (w[1].total_spikes - w[0].total_spikes) as f64 * g.weight())
                    .fold(0.0_f64, f64::max);
                Ok(StabilityRow {
                    n,
                    replica,
                    rho,
                    t_eps,
                    horizon,
                    samples: d.len(),
                    sup_dist,
                    exceedance,
                    sup_dist_ell,
                    exceedance_ell,
                    lattice_gap,
                    within_eps: sup_dist <= cfg.eps,
                    termination: termination_label(out.termination),
                })
            })
            .collect::<Result<_>>()?;
        rows.extend(chunk);
    }
    rows.sort_by_key(|r| (r.n, r.replica));
    let summary = cfg
        .sizes
        .iter()
        .map(|&n| {
            let mine: Vec<&StabilityRow> = rows.iter().filter(|r| r.n == n).collect();
            let k = mine.len() as f64;
            StabilitySummaryRow {
                n,
                mean_exceedance: mine.iter().map(|r| r.exceedance).sum::<f64>() / k,
                mean_exceedance_ell: mine.iter().map(|r| r.exceedance_ell).sum::<f64>() / k,
                clean_share: mine.iter().filter(|r| r.exceedance == 0.0).count() as f64 / k,
                clean_share_ell: mine.iter().filter(|r| r.exceedance_ell == 0.0).count() as f64 / k,
            }
        })
        .collect();
    Ok(StabilityResult {
        report: p.report,
        t_eps,
        rows,
        summary,
    })
}

impl StabilityResult {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        write_rows(&dir.join("stability.csv"), &self.rows)?;
        write_rows(&dir.join("stability_summary.csv"), &self.summary)
    }
}

// ---------------------------------------------------------------------------
// finite time
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ErrorRow {
    pub n: usize,
    pub replica: usize,
    pub rho: f64,
    pub sup_error: f64,
    /// Distance at the first sample, `t = 0`.
    pub initial_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MedianRow {
    pub n: usize,
    pub rho: f64,
    pub median: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FiniteTimeResult {
    pub rows: Vec<ErrorRow>,
    pub medians: Vec<MedianRow>,
    /// Log-log slope of the median error against `Nρ_N`.
    pub slope: Option<f64>,
}

fn medians_by_size<R>(cfg: &ExperimentConfig, rows: &[R], key: impl Fn(&R) -> (usize, f64)) -> Vec<MedianRow> {
    cfg.sizes
        .iter()
        .map(|&n| {
            let values: Vec<f64> = rows.iter().map(&key).filter(|(m, _)| *m == n).map(|(_, v)| v).collect();
            MedianRow {
                n,
                rho: cfg.rho.at(n),
                median: median(&values),
            }
        })
        .collect()
}

fn slope_of(medians: &[MedianRow]) -> Option<f64> {
    let xs: Vec<f64> = medians.iter().map(|m| m.n as f64 * m.rho).collect();
    let ys: Vec<f64> = medians.iter().map(|m| m.median).collect();
    loglog_slope(&xs, &ys)
}

/// `sup_{t ≤ T} ‖X_N(t) − X_t‖₂` against the macroscopic current with the
/// same drive, both started at zero.
pub fn run_finite_time(cfg: &ExperimentConfig) -> Result<FiniteTimeResult> {
    let model = cfg.build_model()?;
    let alpha = exponential_rate(&model.h, "the finite-time experiment")?;
    let op = operator::build_operator(&model.w, cfg.grid)?;
    let dt_obs = OBS_SPACING / alpha;
    let t_end = cfg.t_final;
    let sol = macroscopic::solve_nfe_exponential(
        &op,
        &model.f,
        alpha,
        &model.drive,
        &MacroField::zeros(cfg.grid),
        t_end,
        macro_dt(alpha),
        MACRO_SUBSTEPS,
    )?;
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        let nodes = micro::fine_nodes(n, cfg.fine_factor);
        let ext = FineExtension::new(&model.w, cfg.grid, &nodes);
        let mut observers = Observers {
            dt: dt_obs,
            fine_factor: cfg.fine_factor,
            ..Observers::default()
        };
        let lattice = observers.times(t_end).len();
        if lattice != sol.current.len() {
            return Err(Error::InvariantBreach(format!(
                "macro samples ({}) do not match the observation lattice ({lattice})",
                sol.current.len()
            )));
        }
        observers.x_t = Some((0..lattice).map(|k| sol.profile_with(k, &ext, &nodes)).collect());
        let chunk: Vec<ErrorRow> = (0..cfg.replicas)
            .into_par_iter()
            .map(|replica| -> Result<ErrorRow> {
                let g = sample_replica_graph(cfg, &model, n, replica)?;
                let opts = SimulationOptions::new(t_end, graph_seed(cfg, n, replica));
                let out = micro::simulate_exponential(&g, &model.f, alpha, &model.drive, &observers, &opts)?;
                if cfg.write_trajectories {
                    write_trajectory(&cfg.output_dir.join("trajectories"), &format!("finite_n{n}_r{replica}.csv"), &out)?;
                }
                let d: Vec<f64> = out.record.samples.iter().filter_map(|s| s.dist_to_xt).collect();
                Ok(ErrorRow {
                    n,
                    replica,
                    rho: g.rho(),
                    sup_error: d.iter().fold(0.0_f64, |a, &b| a.max(b)),
                    initial_error: d.first().copied().unwrap_or(0.0),
                })
            })
            .collect::<Result<_>>()?;
        rows.extend(chunk);
    }
    rows.sort_by_key(|r| (r.n, r.replica));
    let medians = medians_by_size(cfg, &rows, |r| (r.n, r.sup_error));
    let slope = slope_of(&medians);
    Ok(FiniteTimeResult { rows, medians, slope })
}

impl FiniteTimeResult {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        write_rows(&dir.join("finite_time.csv"), &self.rows)?;
        write_rows(&dir.join("finite_time_medians.csv"), &self.medians)?;
        write_json(&dir.join("finite_time_slope.json"), &serde_json::json!({ "slope": self.slope }))
    }
}

// ---------------------------------------------------------------------------
// phase
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct PhaseRow {
    pub h_l1: f64,
    pub alpha: f64,
    pub product: f64,
    /// Mean of the stationary intensity profile, when subcritical.
    pub predicted: Option<f64>,
    /// Time-averaged mean intensity over the second half of the horizon.
    pub tail_mean: Option<f64>,
    pub blow_up: bool,
    pub blow_up_time: Option<f64>,
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseResult {
    pub n: usize,
    pub rows: Vec<PhaseRow>,
}

/// Sweeps `‖h‖₁` through `α = 1/‖h‖₁` for a linear response.
pub fn run_phase(cfg: &ExperimentConfig) -> Result<PhaseResult> {
    let model = cfg.build_model()?;
    let SynapticResponse::Linear { mu } = model.f else {
        return Err(Error::Config("the phase sweep needs a linear response".into()));
    };
    let settings = &cfg.phase;
    let n = settings.n;
    let rho = cfg.rho.at(n);
    let op = operator::build_operator(&model.w, cfg.grid)?;
    let r = operator::spectral_radius(&op, operator::DEFAULT_TOL, operator::DEFAULT_MAX_ITER)?.value;
    let g = graph::sample_graph(n, rho, &model.w, graph_seed(cfg, n, 0))?;
    let eta_inf = eta_inf_field(&model, cfg.grid);
    let threshold = settings.blow_up_factor * mu.max(f64::MIN_POSITIVE);
    let rows = settings
        .norms
        .par_iter()
        .enumerate()
        .map(|(k, &norm)| -> Result<PhaseRow> {
            let alpha = 1.0 / norm;
            let h = MemoryKernel::exponential(alpha)?;
            let report = StabilityReport::from_radius(r, &model.f, &h);
            let predicted = if report.is_subcritical {
                let fp = macroscopic::fixed_point(
                    &op,
                    &model.f,
                    &h,
                    &eta_inf,
                    macroscopic::DEFAULT_PICARD_TOL,
                    macroscopic::DEFAULT_PICARD_MAX_ITER,
                )?;
                Some(fp.ell.mean())
            } else {
                None
            };
            let t_end = settings.horizon_alpha_units / alpha;
            let mut opts = SimulationOptions::new(t_end, derive_seed(cfg.master_seed, &[n as u64, 1 + k as u64]));
            opts.blow_up_intensity = Some(threshold);
            let out = micro::simulate_exponential(&g, &model.f, alpha, &model.drive, &Observers::lattice(OBS_SPACING / alpha), &opts)?;
            let (blow_up, blow_up_time, tail_mean) = match out.termination {
                Termination::BlowUp(t) => (true, Some(t), None),
                _ => {
                    let tail: Vec<f64> = out.record.window(0.5 * t_end, t_end).map(|s| s.mean_intensity).collect();
                    let mean = tail.iter().sum::<f64>() / tail.len().max(1) as f64;
                    (false, None, Some(mean))
                }
            };
            let relative_error = match (predicted, tail_mean) {
                (Some(p), Some(m)) if p > 0.0 => Some((m - p).abs() / p),
                _ => None,
            };
            Ok(PhaseRow {
                h_l1: norm,
                alpha,
                product: report.subcritical_product,
                predicted,
                tail_mean,
                blow_up,
                blow_up_time,
                relative_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseResult { n, rows })
}

impl PhaseResult {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        write_rows(&dir.join("phase.csv"), &self.rows)
    }
}

// ---------------------------------------------------------------------------
// noise
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct NoiseRow {
    pub n: usize,
    pub replica: usize,
    pub rho: f64,
    pub sup_norm_sq: f64,
    pub final_norm_sq: f64,
    /// `E ‖M_N(T)‖₂²` for a constant response on this graph.
    pub expected_final: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseSummaryRow {
    pub n: usize,
    pub rho: f64,
    pub median_sup: f64,
    pub mean_final: f64,
    /// Standard error of `mean_final`.
    pub sem_final: f64,
    pub mean_expected_final: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseResult {
    pub rows: Vec<NoiseRow>,
    pub summary: Vec<NoiseSummaryRow>,
    /// Log-log slope of the median sup against `Nρ_N`.
    pub slope: Option<f64>,
}

/// `E‖M_N(T)‖₂² = (1/N) Σ_i d_i^{in} w² c T` for `F ≡ c`.
pub fn constant_response_noise(g: &InteractionGraph, rate: f64, t: f64) -> f64 {
    let w = g.weight();
    let sum: f64 = g.in_degrees().iter().map(|&d| d as f64).sum();
    sum / g.n() as f64 * w * w * rate * t
}

pub fn run_noise_scaling(cfg: &ExperimentConfig) -> Result<NoiseResult> {
    let model = cfg.build_model()?;
    let alpha = exponential_rate(&model.h, "the noise experiment")?;
    let constant_rate = match model.f {
        SynapticResponse::Constant { rate } => Some(rate),
        _ => None,
    };
    let t_end = cfg.t_final;
    let mut rows: Vec<NoiseRow> = tasks(cfg)
        .into_par_iter()
        .map(|(n, replica)| -> Result<NoiseRow> {
            let g = sample_replica_graph(cfg, &model, n, replica)?;
            let path = micro::martingale_diagnostic(
                &g,
                &model.f,
                alpha,
                &model.drive,
                t_end,
                OBS_SPACING / alpha,
                graph_seed(cfg, n, replica),
            )?;
            Ok(NoiseRow {
                n,
                replica,
                rho: g.rho(),
                sup_norm_sq: path.iter().fold(0.0_f64, |a, &(_, m)| a.max(m)),
                final_norm_sq: path.last().map(|&(_, m)| m).unwrap_or(0.0),
                expected_final: constant_rate.map(|c| constant_response_noise(&g, c, t_end)),
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| (r.n, r.replica));
    let medians = medians_by_size(cfg, &rows, |r| (r.n, r.sup_norm_sq));
    let slope = slope_of(&medians);
    let summary = medians
        .iter()
        .map(|m| {
            let mine: Vec<&NoiseRow> = rows.iter().filter(|r| r.n == m.n).collect();
            let k = mine.len() as f64;
            let mean = mine.iter().map(|r| r.final_norm_sq).sum::<f64>() / k;
            let var = if k > 1.0 {
                mine.iter().map(|r| (r.final_norm_sq - mean).powi(2)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            NoiseSummaryRow {
                n: m.n,
                rho: m.rho,
                median_sup: m.median,
                mean_final: mean,
                sem_final: (var / k).sqrt(),
                mean_expected_final: constant_rate
                    .map(|_| mine.iter().filter_map(|r| r.expected_final).sum::<f64>() / k),
            }
        })
        .collect();
    Ok(NoiseResult { rows, summary, slope })
}

impl NoiseResult {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        write_rows(&dir.join("noise.csv"), &self.rows)?;
        write_rows(&dir.join("noise_summary.csv"), &self.summary)?;
        write_json(&dir.join("noise_slope.json"), &serde_json::json!({ "slope": self.slope }))
    }
}

// ---------------------------------------------------------------------------
// graph diagnostics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct GraphRow {
    pub n: usize,
    pub replica: usize,
    pub rho: f64,
    pub max_norm_in: f64,
    pub max_norm_out: f64,
    pub s_max: f64,
    /// `N^{τ−1/2}`.
    pub s_bound: f64,
    pub s_exact: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityRow {
    pub n: usize,
    pub r1: f64,
    pub r2: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphDiagResult {
    pub rows: Vec<GraphRow>,
    pub regularity: Vec<RegularityRow>,
}

pub fn run_graph_diag(cfg: &ExperimentConfig) -> Result<GraphDiagResult> {
    let model = cfg.build_model()?;
    let settings = &cfg.graph_diag;
    let mut rows: Vec<GraphRow> = tasks(cfg)
        .into_par_iter()
        .map(|(n, replica)| -> Result<GraphRow> {
            let g = sample_replica_graph(cfg, &model, n, replica)?;
            let degrees = graph::degree_concentration(&g);
            let s = graph::s_max_statistic(&g, &model.w, cfg.tau, settings.pair_budget)?;
            Ok(GraphRow {
                n,
                replica,
                rho: g.rho(),
                max_norm_in: degrees.max_norm_in,
                max_norm_out: degrees.max_norm_out,
                s_max: s.s_max,
                s_bound: s.bound,
                s_exact: s.exact,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| (r.n, r.replica));
    let regularity = cfg
        .sizes
        .iter()
        .map(|&n| {
            let sums = graph::kernel_regularity(&model.w, n, settings.cell_points, settings.inner_points);
            RegularityRow {
                n,
                r1: sums.r1,
                r2: sums.r2,
                s: sums.s,
            }
        })
        .collect();
    Ok(GraphDiagResult { rows, regularity })
}

impl GraphDiagResult {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        write_rows(&dir.join("graph_diag.csv"), &self.rows)?;
        write_rows(&dir.join("graph_regularity.csv"), &self.regularity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_statistics() {
        assert_eq!(window_stats(&[], 0.1), (0.0, 0.0));
        let (sup, frac) = window_stats(&[0.05, 0.2, 0.15, 0.01], 0.1);
        assert_eq!(sup, 0.2);
        assert_eq!(frac, 0.5);
    }
}
