//! Event-driven simulation of the N-neuron system by thinning.
//!
//! Every neuron carries a cached rate bound in a sum tree. A proposal time is
//! drawn from the total bound, a neuron is picked in proportion to its bound,
//! and the proposal is accepted with probability `λ_i / bound_i`. Between
//! incoming spikes the currents only decay, so a bound taken at time `t`
//! stays valid; an incoming spike of weight `w` raises the rate by at most
//! `‖∂ₓF‖∞ · w · sup h`, which is added to the targets' bounds by range
//! updates.

mod accumulator;
mod currents;
mod record;
mod tree;

use rand::Rng;
use rand_distr::Exp1;

pub use record::{write_spike_log, Sample, TrajectoryRecord};

use self::currents::{CurrentModel, ExponentialCurrents, HistoryCurrents};
use self::tree::RateTree;
use crate::error::{invalid, Error, Result};
use crate::graph::{position, InteractionGraph};
use crate::kernels::{ExogenousDrive, MemoryKernel, SynapticResponse};
use crate::rng::{self, Domain};

/// Default ratio `q / N` of fine quadrature nodes per neuron.
pub const DEFAULT_FINE_FACTOR: usize = 4;

const BOUND_SLACK: f64 = 1e-9;

/// What is recorded on the observation lattice `t = k · dt`.
#[derive(Debug, Clone, Default)]
pub struct Observers {
    pub dt: f64,
    /// Fine nodes per neuron cell for profile distances.
    pub fine_factor: usize,
    /// `X∞` on the fine grid of `fine_factor · N` midpoints.
    pub x_inf: Option<Vec<f64>>,
    /// `ℓ` on the same fine grid.
    pub ell: Option<Vec<f64>>,
    /// `X_t` on the fine grid, one entry per lattice index.
    pub x_t: Option<Vec<Vec<f64>>>,
}

impl Observers {
    pub fn lattice(dt: f64) -> Self {
        Self {
            dt,
            fine_factor: DEFAULT_FINE_FACTOR,
            ..Self::default()
        }
    }

    /// Lattice times `k · dt ≤ t_end`.
    pub fn times(&self, t_end: f64) -> Vec<f64> {
        let count = (t_end / self.dt + 1e-9).floor() as usize;
        (0..=count).map(|k| k as f64 * self.dt).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOptions {
    pub t_end: f64,
    pub seed: u64,
    /// Proposals between global bound refreshes; `8N` when absent.
    pub refresh_every: Option<u64>,
    pub max_spikes: Option<u64>,
    /// Stop once the mean intensity at an observation exceeds this value.
    pub blow_up_intensity: Option<f64>,
    /// Track the compensated noise `M_N` (exponential memory only).
    pub martingale: bool,
    pub spike_log: bool,
    /// Currents at time 0 (exponential memory only); zero when absent.
    pub initial_currents: Option<Vec<f64>>,
}

impl SimulationOptions {
    pub fn new(t_end: f64, seed: u64) -> Self {
        Self {
            t_end,
            seed,
            refresh_every: None,
            max_spikes: None,
            blow_up_intensity: None,
            martingale: false,
            spike_log: false,
            initial_currents: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimulationStats {
    pub proposals: u64,
    pub acceptances: u64,
    pub local_refreshes: u64,
    pub global_refreshes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    /// All rate bounds vanished at this time.
    Extinct(f64),
    /// The mean intensity crossed the blow-up threshold at this time.
    BlowUp(f64),
    /// The spike budget was exhausted at this time.
    SpikeLimit(f64),
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub record: TrajectoryRecord,
    pub stats: SimulationStats,
    pub termination: Termination,
    pub spike_counts: Vec<u64>,
    pub final_time: f64,
    pub final_currents: Vec<f64>,
    pub spikes: Option<Vec<(f64, u32)>>,
    /// `∫₀ᵗ λ_i` at the final time, when the martingale is tracked.
    pub compensator: Option<Vec<f64>>,
}

impl SimulationOutcome {
    pub fn total_spikes(&self) -> u64 {
        self.spike_counts.iter().sum()
    }
}

/// L²(I) distance between the step profile of `x` (value `x_i` on cell
/// `B_i`) and `target`, sampled at `q` fine midpoints with `q` a multiple
/// of `N`.
pub fn profile_distance(x: &[f64], target: &[f64]) -> Result<f64> {
    let n = x.len();
    let q = target.len();
    if n == 0 || q == 0 || !q.is_multiple_of(n) {
        return Err(Error::GridMismatch {
            expected: n * (q / n.max(1)).max(1),
            actual: q,
        });
    }
    let r = q / n;
    let sum: f64 = target
        .chunks(r)
        .zip(x)
        .map(|(cell, xi)| cell.iter().map(|y| (xi - y) * (xi - y)).sum::<f64>())
        .sum();
    Ok((sum / q as f64).sqrt())
}

/// Fine-grid midpoints `(k + ½)/q` for `q = fine_factor · n`.
pub fn fine_nodes(n: usize, fine_factor: usize) -> Vec<f64> {
    let q = n * fine_factor;
    (0..q).map(|k| (k as f64 + 0.5) / q as f64).collect()
}

/// Exponential memory `h(t) = e^{−αt}`: `O(log N)` per proposal plus
/// `O(runs · log N)` per accepted spike.
pub fn simulate_exponential(
    g: &InteractionGraph,
    f: &SynapticResponse,
    alpha: f64,
    drive: &ExogenousDrive,
    observers: &Observers,
    opts: &SimulationOptions,
) -> Result<SimulationOutcome> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid("leakage rate must be positive"));
    }
    let n = g.n();
    let initial = match &opts.initial_currents {
        Some(x0) if x0.len() != n => return Err(Error::GridMismatch { expected: n, actual: x0.len() }),
        Some(x0) if x0.iter().any(|v| !(*v >= 0.0)) => return Err(invalid("initial currents must be nonnegative")),
        Some(x0) => x0.clone(),
        None => vec![0.0; n],
    };
    let compensator = opts.martingale.then(|| Compensator::new(f, alpha, &initial));
    let currents = ExponentialCurrents::new(alpha, g.weight(), initial, opts.martingale);
    run(g, f, drive, observers, opts, currents, compensator)
}

/// Arbitrary memory kernel, with currents recomputed from per-neuron spike
/// histories. Intended for a few hundred neurons.
pub fn simulate_general_h(
    g: &InteractionGraph,
    f: &SynapticResponse,
    h: &MemoryKernel,
    drive: &ExogenousDrive,
    observers: &Observers,
    opts: &SimulationOptions,
) -> Result<SimulationOutcome> {
    if opts.initial_currents.is_some() {
        return Err(invalid("initial currents need exponential memory"));
    }
    if opts.martingale {
        return Err(invalid("the martingale diagnostic needs exponential memory"));
    }
    let currents = HistoryCurrents::new(h.clone(), g.weight(), g.n());
    run(g, f, drive, observers, opts, currents, None)
}

/// `(t, ‖M_N(t)‖₂²)` on the observation lattice.
pub fn martingale_diagnostic(
    g: &InteractionGraph,
    f: &SynapticResponse,
    alpha: f64,
    drive: &ExogenousDrive,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let mut opts = SimulationOptions::new(t_end, seed);
    opts.martingale = true;
    let out = simulate_exponential(g, f, alpha, drive, &Observers::lattice(dt), &opts)?;
    Ok(out
        .record
        .samples
        .iter()
        .map(|s| (s.t, s.martingale_sq.unwrap_or(0.0)))
        .collect())
}

// ---------------------------------------------------------------------------
// Compensator ∫₀ᵗ λ_i
// ---------------------------------------------------------------------------

enum Compensator {
    /// `F = μ + η + x`: `∫λ = μt + ∫η + (J + x₀ − X(t))/α`.
    Linear { mu: f64, alpha: f64, x0: Vec<f64> },
    Constant { rate: f64 },
    /// Piecewise integration between incoming spikes.
    Quadrature { alpha: f64, last: Vec<f64>, acc: Vec<f64> },
}

const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

impl Compensator {
    fn new(f: &SynapticResponse, alpha: f64, x0: &[f64]) -> Self {
        match *f {
            SynapticResponse::Linear { mu } => Self::Linear { mu, alpha, x0: x0.to_vec() },
            SynapticResponse::Constant { rate } => Self::Constant { rate },
            SynapticResponse::Sigmoid { .. } => Self::Quadrature {
                alpha,
                last: vec![0.0; x0.len()],
                acc: vec![0.0; x0.len()],
            },
        }
    }

    /// `∫_a^b F(x_b e^{α(b−s)}, η_s(pos)) ds`, the current decaying freely
    /// from `a` to its value `x_b` at `b`.
    fn piece(f: &SynapticResponse, drive: &ExogenousDrive, alpha: f64, pos: f64, a: f64, b: f64, x_b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let pieces = ((b - a) * alpha * 4.0).ceil().max(1.0) as usize;
        let len = (b - a) / pieces as f64;
        let mut total = 0.0;
        for p in 0..pieces {
            let lo = a + p as f64 * len;
            let mid = lo + 0.5 * len;
            for (z, wq) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                let s = mid + 0.5 * len * z;
                let x = if x_b == 0.0 { 0.0 } else { x_b * (alpha * (b - s)).exp() };
                total += wq * 0.5 * len * f.eval(x, drive.eta(s, pos));
            }
        }
        total
    }

    fn before_delivery<C: CurrentModel>(
        &mut self,
        g: &InteractionGraph,
        f: &SynapticResponse,
        drive: &ExogenousDrive,
        currents: &mut C,
        j: usize,
        t: f64,
    ) {
        if let Self::Quadrature { alpha, last, acc } = self {
            let n = g.n();
            for i in g.out_neighbors(j) {
                let x = currents.current(i, t);
                acc[i] += Self::piece(f, drive, *alpha, position(i, n), last[i], t, x);
                last[i] = t;
            }
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn values(&self, f: &SynapticResponse, drive: &ExogenousDrive, currents: &ExponentialLike, t: f64, out: &mut Vec<f64>) {
        let n = currents.x.len();
        out.clear();
        match self {
            Self::Linear { mu, alpha, x0 } => {
                for i in 0..n {
                    let eta = drive.integral(t, position(i, n));
                    out.push(mu * t + eta + (currents.received[i] + x0[i] - currents.x[i]) / alpha);
                }
            }
            Self::Constant { rate } => out.extend(std::iter::repeat_n(rate * t, n)),
            Self::Quadrature { alpha, last, acc } => {
                for i in 0..n {
                    let tail = Self::piece(f, drive, *alpha, position(i, n), last[i], t, currents.x[i]);
                    out.push(acc[i] + tail);
                }
            }
        }
    }
}

/// Materialized state handed to the compensator.
struct ExponentialLike<'a> {
    x: &'a [f64],
    received: &'a [f64],
}

// ---------------------------------------------------------------------------
// Thinning loop
// ---------------------------------------------------------------------------

trait ReceivedMass {
    fn received_into(&self, out: &mut Vec<f64>) -> bool;
}

impl ReceivedMass for ExponentialCurrents {
    fn received_into(&self, out: &mut Vec<f64>) -> bool {
        self.received(out)
    }
}

impl ReceivedMass for HistoryCurrents {
    fn received_into(&self, _out: &mut Vec<f64>) -> bool {
        false
    }
}

struct Scratch {
    x: Vec<f64>,
    received: Vec<f64>,
    lambda: Vec<f64>,
    comp: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn observe<C: CurrentModel + ReceivedMass>(
    g: &InteractionGraph,
    f: &SynapticResponse,
    drive: &ExogenousDrive,
    observers: &Observers,
    currents: &mut C,
    compensator: Option<&Compensator>,
    counts: &[u64],
    total_spikes: u64,
    k: usize,
    t: f64,
    scratch: &mut Scratch,
) -> Result<Sample> {
    let n = g.n();
    currents.materialize(t, &mut scratch.x);
    scratch.lambda.clear();
    scratch
        .lambda
        .extend(scratch.x.iter().enumerate().map(|(i, &x)| f.eval(x, drive.eta(t, position(i, n)))));
    let nf = n as f64;
    let mean_intensity = scratch.lambda.iter().sum::<f64>() / nf;
    let mean_current = scratch.x.iter().sum::<f64>() / nf;
    let max_current = scratch.x.iter().fold(0.0_f64, |a, &b| a.max(b));
    let dist_to_xinf = observers.x_inf.as_deref().map(|tg| profile_distance(&scratch.x, tg)).transpose()?;
    let dist_to_ell = observers.ell.as_deref().map(|tg| profile_distance(&scratch.lambda, tg)).transpose()?;
    let dist_to_xt = observers
        .x_t
        .as_ref()
        .and_then(|table| table.get(k))
        .map(|tg| profile_distance(&scratch.x, tg))
        .transpose()?;
    let martingale_sq = match compensator {
        Some(comp) => {
            if !currents.received_into(&mut scratch.received) {
                scratch.received.clear();
                scratch.received.resize(n, 0.0);
            }
            let state = ExponentialLike { x: &scratch.x, received: &scratch.received };
            comp.values(f, drive, &state, t, &mut scratch.comp);
            let centered: Vec<f64> = counts.iter().zip(&scratch.comp).map(|(&z, l)| z as f64 - l).collect();
            let m = g.apply_adjacency(&centered);
            Some(m.iter().map(|v| v * v).sum::<f64>() / nf)
        }
        None => None,
    };
    Ok(Sample {
        t,
        dist_to_xinf,
        dist_to_xt,
        dist_to_ell,
        mean_intensity,
        mean_current,
        total_spikes,
        max_current,
        martingale_sq,
    })
}

fn run<C: CurrentModel + ReceivedMass>(
    g: &InteractionGraph,
    f: &SynapticResponse,
    drive: &ExogenousDrive,
    observers: &Observers,
    opts: &SimulationOptions,
    mut currents: C,
    mut compensator: Option<Compensator>,
) -> Result<SimulationOutcome> {
    if !(opts.t_end > 0.0 && opts.t_end.is_finite()) {
        return Err(invalid("simulation horizon must be positive"));
    }
    if !(observers.dt > 0.0) {
        return Err(invalid("observation spacing must be positive"));
    }
    if observers.fine_factor == 0 {
        return Err(invalid("fine grid factor must be at least one"));
    }
    let n = g.n();
    let positions: Vec<f64> = (0..n).map(|i| position(i, n)).collect();
    let eta_inf: Vec<f64> = positions.iter().map(|&x| drive.eta_inf().eval(x)).collect();
    let fast = drive.is_nonincreasing();
    let eta_lip = f.eta_lip();
    let bound_rate = |x_bound: f64, i: usize, t: f64| -> f64 {
        if fast {
            f.eval(x_bound, drive.eta(t, positions[i]))
        } else {
            f.eval(x_bound, eta_inf[i]) + eta_lip * drive.delta(t)
        }
    };
    let jump_increment = f.dx_sup() * g.weight() * currents.jump_sup();
    let refresh_every = opts.refresh_every.unwrap_or(8 * n as u64).max(1);

    let mut scratch = Scratch {
        x: Vec::with_capacity(n),
        received: Vec::with_capacity(n),
        lambda: Vec::with_capacity(n),
        comp: Vec::with_capacity(n),
    };
    let fill_bounds = |currents: &mut C, t: f64, bounds: &mut Vec<f64>| {
        currents.bound_all(t, bounds);
        for (i, b) in bounds.iter_mut().enumerate() {
            *b = bound_rate(*b, i, t);
        }
    };
    let mut bounds = Vec::with_capacity(n);
    fill_bounds(&mut currents, 0.0, &mut bounds);
    let mut tree = RateTree::new(&bounds);

    let mut rng = rng::stream(opts.seed, Domain::Simulation, 0);
    let obs_times = observers.times(opts.t_end);
    let mut next_obs = 0;
    let mut counts = vec![0u64; n];
    let mut total_spikes = 0u64;
    let mut spikes = opts.spike_log.then(Vec::new);
    let mut stats = SimulationStats::default();
    let mut record = TrajectoryRecord::default();
    let mut t = 0.0;

    let termination = 'sim: loop {
        let total = tree.total();
        let t_next = if total > 0.0 {
            let e: f64 = rng.sample(Exp1);
            t + e / total
        } else {
            f64::INFINITY
        };
        while next_obs < obs_times.len() && obs_times[next_obs] <= t_next {
            let to = obs_times[next_obs];
            let sample = observe(
                g, f, drive, observers, &mut currents, compensator.as_ref(), &counts, total_spikes, next_obs, to, &mut scratch,
            )?;
            let blown = opts.blow_up_intensity.is_some_and(|limit| sample.mean_intensity > limit);
            record.samples.push(sample);
            next_obs += 1;
            if blown {
                t = to;
                break 'sim Termination::BlowUp(to);
            }
        }
        if t_next > opts.t_end {
            if total > 0.0 {
                t = opts.t_end;
                break 'sim Termination::Completed;
            }
            let extinct_at = t;
            t = opts.t_end;
            break 'sim Termination::Extinct(extinct_at);
        }
        t = t_next;
        stats.proposals += 1;
        let u: f64 = rng.random();
        let i = tree.sample(u * total);
        let bound = tree.get(i);
        let lambda = f.eval(currents.current(i, t), drive.eta(t, positions[i]));
        if lambda > bound * (1.0 + BOUND_SLACK) + f64::MIN_POSITIVE {
            return Err(Error::InvariantBreach(format!(
                "intensity {lambda} of neuron {i} exceeds its bound {bound} at t = {t}"
            )));
        }
        let u2: f64 = rng.random();
        if u2 * bound < lambda {
            stats.acceptances += 1;
            counts[i] += 1;
            total_spikes += 1;
            if let Some(log) = spikes.as_mut() {
                log.push((t, i as u32));
            }
            if let Some(comp) = compensator.as_mut() {
                comp.before_delivery(g, f, drive, &mut currents, i, t);
            }
            currents.deliver(g, i, t);
            if jump_increment > 0.0 {
                for &(a, b) in g.out_runs(i) {
                    tree.range_add(a as usize, b as usize, jump_increment);
                }
            }
            if opts.max_spikes.is_some_and(|cap| total_spikes >= cap) {
                break 'sim Termination::SpikeLimit(t);
            }
        } else {
            stats.local_refreshes += 1;
            let xb = currents.bound_current(i, t);
            tree.set(i, bound_rate(xb, i, t));
        }
        if stats.proposals % refresh_every == 0 {
            stats.global_refreshes += 1;
            fill_bounds(&mut currents, t, &mut bounds);
            tree.rebuild(&bounds);
        }
    };

    let mut final_currents = Vec::with_capacity(n);
    currents.materialize(t, &mut final_currents);
    let compensator_values = match compensator.as_ref() {
        Some(comp) => {
            if !currents.received_into(&mut scratch.received) {
                scratch.received.resize(n, 0.0);
            }
            let state = ExponentialLike { x: &final_currents, received: &scratch.received };
            let mut out = Vec::with_capacity(n);
            comp.values(f, drive, &state, t, &mut out);
            Some(out)
        }
        None => None,
    };
    Ok(SimulationOutcome {
        record,
        stats,
        termination,
        spike_counts: counts,
        final_time: t,
        final_currents,
        spikes,
        compensator: compensator_values,
    })
}
