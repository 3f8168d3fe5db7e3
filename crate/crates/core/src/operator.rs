//! Midpoint Nyström discretization of `T_W g(x) = ∫ W(x, y) g(y) dy`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::field::{l2_norm, midpoint, MacroField};
use crate::kernels::{MemoryKernel, SpatialKernel, SynapticResponse};

pub const DEFAULT_GRID: usize = 512;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

const PARALLEL_ROWS: usize = 256;
const BLOW_UP_NORM: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct GridOperator {
    m: usize,
    /// Row-major, `matrix[k * m + l] = W(x_k, x_l) / m`.
    matrix: Vec<f64>,
}

pub fn build_operator(w: &SpatialKernel, m: usize) -> Result<GridOperator> {
    if m < 2 {
        return Err(invalid(format!("operator grid needs m >= 2, got {m}")));
    }
    let inv = 1.0 / m as f64;
    let mut matrix = vec![0.0; m * m];
    matrix.par_chunks_mut(m).enumerate().for_each(|(k, row)| {
        let xk = midpoint(k, m);
        for (l, v) in row.iter_mut().enumerate() {
            *v = w.value(xk, midpoint(l, m)) * inv;
        }
    });
    Ok(GridOperator { m, matrix })
}

impl GridOperator {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.matrix[k * self.m..(k + 1) * self.m]
    }

    pub fn entry(&self, k: usize, l: usize) -> f64 {
        self.matrix[k * self.m + l]
    }

    /// Matrix–vector product on raw grid values.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.m, "vector length must equal the grid size");
        let dot = |row: &[f64]| row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        if self.m >= PARALLEL_ROWS {
            self.matrix.par_chunks(self.m).map(dot).collect()
        } else {
            self.matrix.chunks(self.m).map(dot).collect()
        }
    }

    pub fn apply_tw(&self, g: &MacroField) -> Result<MacroField> {
        g.check_grid(self.m)?;
        Ok(MacroField::new(self.apply(g.values())))
    }

    fn is_zero(&self) -> bool {
        self.matrix.iter().all(|&v| v == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerronPair {
    pub value: f64,
    /// Nonnegative eigenvector estimate with unit discrete L² norm.
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Perron root of the discretized operator by power iteration from the
/// constant vector.
///
/// The iteration runs on `A + I`, which has the same Perron vector but no
/// other eigenvalue of the same modulus, so periodic block structures still
/// converge. The returned value is the Rayleigh quotient `vᵀAv / vᵀv`.
pub fn spectral_radius(op: &GridOperator, tol: f64, max_iter: usize) -> Result<PerronPair> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let m = op.m;
    if op.is_zero() {
        return Ok(PerronPair {
            value: 0.0,
            vector: vec![1.0; m],
            iterations: 0,
        });
    }
    let mut v = vec![1.0; m];
    let mut av = op.apply(&v);
    let mut estimate = rayleigh(&v, &av);
    let mut change = f64::INFINITY;
    for iter in 1..=max_iter {
        let mut next: Vec<f64> = v.iter().zip(&av).map(|(a, b)| a + b).collect();
        let norm = l2_norm(&next);
        next.iter_mut().for_each(|x| *x /= norm);
        v = next;
        av = op.apply(&v);
        let fresh = rayleigh(&v, &av);
        change = (fresh - estimate).abs();
        estimate = fresh;
        if change < tol {
            return Ok(PerronPair {
                value: estimate,
                vector: v,
                iterations: iter,
            });
        }
    }
    Err(Error::NotConverged {
        what: "power iteration",
        iterations: max_iter,
        residual: change,
        last_iterate: v,
    })
}

fn rayleigh(v: &[f64], av: &[f64]) -> f64 {
    let num: f64 = v.iter().zip(av).map(|(a, b)| a * b).sum();
    let den: f64 = v.iter().map(|a| a * a).sum();
    num / den
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub r_inf: f64,
    #[serde(rename = "product")]
    pub subcritical_product: f64,
    /// `α − r_∞ ‖∂_x F‖∞`, exponential memory only.
    pub gamma: Option<f64>,
    #[serde(rename = "subcritical")]
    pub is_subcritical: bool,
}

impl StabilityReport {
    pub fn from_radius(r_inf: f64, f: &SynapticResponse, h: &MemoryKernel) -> Self {
        let product = f.dx_sup() * h.l1_norm() * r_inf;
        Self {
            r_inf,
            subcritical_product: product,
            gamma: h.decay_rate().map(|alpha| alpha - r_inf * f.dx_sup()),
            is_subcritical: product < 1.0,
        }
    }
}

pub fn stability_report(w: &SpatialKernel, f: &SynapticResponse, h: &MemoryKernel, m: usize) -> Result<StabilityReport> {
    let op = build_operator(w, m)?;
    let r = spectral_radius(&op, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    Ok(StabilityReport::from_radius(r.value, f, h))
}

/// Integrates `∂_t Y = −αY + T_W(G Y)` by RK4 and returns `(t, ‖Y_t‖₂)`
/// at every step, starting with `t = 0`.
pub fn linearized_semigroup_decay(
    op: &GridOperator,
    g: &MacroField,
    alpha: f64,
    y0: &MacroField,
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, f64)>> {
    g.check_grid(op.m)?;
    y0.check_grid(op.m)?;
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(invalid("need dt > 0 and t_end >= 0"));
    }
    let gv = g.values();
    let rhs = |_t: f64, y: &[f64]| -> Vec<f64> {
        let gy: Vec<f64> = y.iter().zip(gv).map(|(a, b)| a * b).collect();
        op.apply(&gy)
            .into_iter()
            .zip(y)
            .map(|(tw, yk)| tw - alpha * yk)
            .collect()
    };
    let steps = (t_end / dt).round() as usize;
    let mut y = y0.values().to_vec();
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, l2_norm(&y)));
    for s in 1..=steps {
        y = rk4_step((s - 1) as f64 * dt, &y, dt, &rhs);
        let norm = l2_norm(&y);
        let t = s as f64 * dt;
        if !norm.is_finite() || norm > BLOW_UP_NORM {
            return Err(Error::BlowUp { t, norm });
        }
        out.push((t, norm));
    }
    Ok(out)
}

pub(crate) fn rk4_step(t: f64, y: &[f64], dt: f64, rhs: &impl Fn(f64, &[f64]) -> Vec<f64>) -> Vec<f64> {
    let shifted = |k: &[f64], c: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    let k1 = rhs(t, y);
    let k2 = rhs(t + 0.5 * dt, &shifted(&k1, 0.5 * dt));
    let k3 = rhs(t + 0.5 * dt, &shifted(&k2, 0.5 * dt));
    let k4 = rhs(t + dt, &shifted(&k3, dt));
    (0..y.len())
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}
