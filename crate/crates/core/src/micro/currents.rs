//! Synaptic current bookkeeping for the thinning loop.

use std::collections::VecDeque;

use super::accumulator::RangeAccumulator;
use crate::graph::InteractionGraph;
use crate::kernels::MemoryKernel;

/// Storage of the currents `X_i(t) = Σ_j w_ij/N Σ_s h(t − s)`.
pub(crate) trait CurrentModel {
    /// `X_i(t)`, for `t` no earlier than the last delivered spike.
    fn current(&mut self, i: usize, t: f64) -> f64;

    /// An upper bound on `X_i(s)` for every `s ≥ t` up to the next spike
    /// delivered to `i`.
    fn bound_current(&mut self, i: usize, t: f64) -> f64;

    fn materialize(&mut self, t: f64, out: &mut Vec<f64>);

    fn bound_all(&mut self, t: f64, out: &mut Vec<f64>);

    /// Delivers a spike of `j` at time `t` to all its targets.
    fn deliver(&mut self, g: &InteractionGraph, j: usize, t: f64);

    /// Largest single-spike increment `sup h` of a current, per unit weight.
    fn jump_sup(&self) -> f64;
}

/// Beyond this value of `α(t − t_ref)` the stored values are rescaled.
const RENORMALIZE_AT: f64 = 16.0;

/// Exponential memory: `X_i(t) = e^{−α(t − t_ref)} Y_i` with one shared
/// reference time, so a spike adds the same amount to a whole run of
/// targets.
pub(crate) struct ExponentialCurrents {
    alpha: f64,
    weight: f64,
    t_ref: f64,
    y: RangeAccumulator,
    received: Option<RangeAccumulator>,
}

impl ExponentialCurrents {
    pub(crate) fn new(alpha: f64, weight: f64, initial: Vec<f64>, track_received: bool) -> Self {
        let n = initial.len();
        Self {
            alpha,
            weight,
            t_ref: 0.0,
            y: RangeAccumulator::new(initial),
            received: track_received.then(|| RangeAccumulator::new(vec![0.0; n])),
        }
    }

    fn decay(&self, t: f64) -> f64 {
        (-self.alpha * (t - self.t_ref)).exp()
    }

    /// Total jump mass `J_i(t)` received so far, when tracked.
    pub(crate) fn received(&self, out: &mut Vec<f64>) -> bool {
        match &self.received {
            Some(acc) => {
                acc.materialize_into(out);
                true
            }
            None => false,
        }
    }
}

impl CurrentModel for ExponentialCurrents {
    fn current(&mut self, i: usize, t: f64) -> f64 {
        self.y.get(i) * self.decay(t)
    }

    fn bound_current(&mut self, i: usize, t: f64) -> f64 {
        self.current(i, t)
    }

    fn materialize(&mut self, t: f64, out: &mut Vec<f64>) {
        self.y.materialize_into(out);
        let d = self.decay(t);
        out.iter_mut().for_each(|v| *v *= d);
    }

    fn bound_all(&mut self, t: f64, out: &mut Vec<f64>) {
        self.materialize(t, out);
    }

    fn deliver(&mut self, g: &InteractionGraph, j: usize, t: f64) {
        if self.alpha * (t - self.t_ref) > RENORMALIZE_AT {
            self.y.fold_and_scale(self.decay(t));
            self.t_ref = t;
        }
        let v = self.weight / self.decay(t);
        for &(a, b) in g.out_runs(j) {
            self.y.range_add(a as usize, b as usize, v);
            if let Some(acc) = self.received.as_mut() {
                acc.range_add(a as usize, b as usize, self.weight);
            }
        }
    }

    fn jump_sup(&self) -> f64 {
        1.0
    }
}

/// General memory: each neuron keeps the arrival times of its incoming
/// spikes, dropped once they fall outside the kernel support.
pub(crate) struct HistoryCurrents {
    h: MemoryKernel,
    weight: f64,
    horizon: f64,
    arrivals: Vec<VecDeque<f64>>,
}

impl HistoryCurrents {
    pub(crate) fn new(h: MemoryKernel, weight: f64, n: usize) -> Self {
        Self {
            horizon: h.support(),
            h,
            weight,
            arrivals: vec![VecDeque::new(); n],
        }
    }

    fn prune(&mut self, i: usize, t: f64) {
        let q = &mut self.arrivals[i];
        while q.front().is_some_and(|&s| t - s > self.horizon) {
            q.pop_front();
        }
    }
}

impl CurrentModel for HistoryCurrents {
    fn current(&mut self, i: usize, t: f64) -> f64 {
        self.prune(i, t);
        self.weight * self.arrivals[i].iter().map(|&s| self.h.value(t - s)).sum::<f64>()
    }

    fn bound_current(&mut self, i: usize, t: f64) -> f64 {
        self.prune(i, t);
        self.weight * self.arrivals[i].iter().map(|&s| self.h.envelope(t - s)).sum::<f64>()
    }

    fn materialize(&mut self, t: f64, out: &mut Vec<f64>) {
        out.clear();
        for i in 0..self.arrivals.len() {
            let x = self.current(i, t);
            out.push(x);
        }
    }

    fn bound_all(&mut self, t: f64, out: &mut Vec<f64>) {
        out.clear();
        for i in 0..self.arrivals.len() {
            let x = self.bound_current(i, t);
            out.push(x);
        }
    }

    fn deliver(&mut self, g: &InteractionGraph, j: usize, t: f64) {
        for i in g.out_neighbors(j) {
            self.arrivals[i].push_back(t);
        }
    }

    fn jump_sup(&self) -> f64 {
        self.h.sup()
    }
}
