//! Macroscopic limit objects: stationary profiles, the neural field ODE for
//! exponential memory, and the Volterra equation for the intensity.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::field::{l2_norm, midpoint, MacroField};
use crate::kernels::{ExogenousDrive, MemoryKernel, SpatialKernel, SynapticResponse};
use crate::operator::{rk4_step, spectral_radius, GridOperator, DEFAULT_MAX_ITER, DEFAULT_TOL};

pub const DEFAULT_PICARD_TOL: f64 = 1e-12;
pub const DEFAULT_PICARD_MAX_ITER: usize = 100_000;

const BLOW_UP_NORM: f64 = 1e12;

/// Nyström extension `scale · Σ_l W(y, x_l) v_l / m` of grid values to
/// arbitrary points `y`.
pub fn nystrom_extend(w: &SpatialKernel, values: &[f64], scale: f64, ys: &[f64]) -> Vec<f64> {
    let m = values.len();
    let c = scale / m as f64;
    ys.iter()
        .map(|&y| {
            values
                .iter()
                .enumerate()
                .map(|(l, v)| w.value(y, midpoint(l, m)) * v)
                .sum::<f64>()
                * c
        })
        .collect()
}

/// Dense Nyström extension from an `m`-point grid to fixed points `y_k`:
/// `(E v)_k = Σ_l W(y_k, x_l) v_l / m`.
#[derive(Debug, Clone, PartialEq)]
pub struct FineExtension {
    m: usize,
    matrix: Vec<f64>,
}

impl FineExtension {
    pub fn new(w: &SpatialKernel, m: usize, ys: &[f64]) -> Self {
        let inv = 1.0 / m as f64;
        let mut matrix = vec![0.0; ys.len() * m];
        matrix.par_chunks_mut(m).zip(ys.par_iter()).for_each(|(row, &y)| {
            for (l, v) in row.iter_mut().enumerate() {
                *v = w.value(y, midpoint(l, m)) * inv;
            }
        });
        Self { m, matrix }
    }

    pub fn apply(&self, values: &[f64], scale: f64) -> Vec<f64> {
        assert_eq!(values.len(), self.m, "grid size mismatch");
        self.matrix
            .chunks(self.m)
            .map(|row| scale * row.iter().zip(values).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub ell: MacroField,
    pub x_inf: MacroField,
    pub iterations: usize,
    /// `‖X∞ − ‖h‖₁ T_W F(X∞, η∞)‖∞`.
    pub residual: f64,
    /// Ratios of successive Picard increments.
    pub ratios: Vec<f64>,
    pub h_l1: f64,
    /// Set when the configuration was not subcritical; the iteration still ran.
    pub flagged_supercritical: bool,
}

impl FixedPoint {
    /// `X∞` at arbitrary positions through the Nyström extension of `ℓ`.
    pub fn x_inf_at(&self, w: &SpatialKernel, ys: &[f64]) -> Vec<f64> {
        nystrom_extend(w, self.ell.values(), self.h_l1, ys)
    }

    /// `ℓ = F(X∞, η∞)` at arbitrary positions.
    pub fn ell_at(&self, w: &SpatialKernel, f: &SynapticResponse, eta_inf: impl Fn(f64) -> f64, ys: &[f64]) -> Vec<f64> {
        self.x_inf_at(w, ys)
            .into_iter()
            .zip(ys)
            .map(|(x, &y)| f.eval(x, eta_inf(y)))
            .collect()
    }
}

/// Two-column CSV `node,value`.
pub fn write_profile_csv(field: &MacroField, out: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["node", "value"])?;
    for (x, v) in field.nodes().zip(field.values()) {
        wtr.write_record([x.to_string(), v.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Picard iteration `ℓ ← F(‖h‖₁ T_W ℓ, η∞)` from `ℓ₀ = F(0, η∞)`.
pub fn fixed_point(
    op: &GridOperator,
    f: &SynapticResponse,
    h: &MemoryKernel,
    eta_inf: &MacroField,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPoint> {
    eta_inf.check_grid(op.m())?;
    if !(tol > 0.0) {
        return Err(invalid("Picard tolerance must be positive"));
    }
    let h_l1 = h.l1_norm();
    let r = spectral_radius(op, DEFAULT_TOL, DEFAULT_MAX_ITER)?.value;
    let product = f.dx_sup() * h_l1 * r;
    let flagged = product >= 1.0;
    if flagged {
        log::warn!("stationary profile requested for a supercritical configuration (product {product:.4})");
    }
    let eta = eta_inf.values();
    let map = |ell: &[f64]| -> Vec<f64> {
        op.apply(ell)
            .into_iter()
            .zip(eta)
            .map(|(tw, &e)| f.eval(h_l1 * tw, e))
            .collect()
    };
    let mut ell: Vec<f64> = eta.iter().map(|&e| f.eval(0.0, e)).collect();
    let mut ratios = Vec::new();
    let mut previous_step = f64::NAN;
    let mut step = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        let next = map(&ell);
        step = next
            .iter()
            .zip(&ell)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
        iterations += 1;
        if previous_step > 0.0 {
            ratios.push(step / previous_step);
        }
        previous_step = step;
        ell = next;
        if !step.is_finite() || ell.iter().any(|v| v.abs() > BLOW_UP_NORM) {
            break;
        }
        if step < tol {
            let x_inf: Vec<f64> = op.apply(&ell).into_iter().map(|v| h_l1 * v).collect();
            let lam: Vec<f64> = x_inf.iter().zip(eta).map(|(&x, &e)| f.eval(x, e)).collect();
            let residual = op
                .apply(&lam)
                .into_iter()
                .zip(&x_inf)
                .fold(0.0_f64, |acc, (tw, x)| acc.max((x - h_l1 * tw).abs()));
            return Ok(FixedPoint {
                ell: MacroField::new(ell),
                x_inf: MacroField::new(x_inf),
                iterations,
                residual,
                ratios,
                h_l1,
                flagged_supercritical: flagged,
            });
        }
    }
    Err(Error::NotConverged {
        what: "Picard iteration",
        iterations,
        residual: step,
        last_iterate: ell,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    Lambda,
    Current,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroTrajectory {
    kind: TrajectoryKind,
    times: Vec<f64>,
    fields: Vec<MacroField>,
}

impl MacroTrajectory {
    pub fn new(kind: TrajectoryKind, times: Vec<f64>, fields: Vec<MacroField>) -> Result<Self> {
        if times.len() != fields.len() || times.is_empty() {
            return Err(invalid("trajectory needs one field per sample time"));
        }
        if times.windows(2).any(|p| p[1] <= p[0]) {
            return Err(invalid("trajectory times must be strictly increasing"));
        }
        let m = fields[0].len();
        for f in &fields {
            f.check_grid(m)?;
        }
        Ok(Self { kind, times, fields })
    }

    pub fn kind(&self) -> TrajectoryKind {
        self.kind
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[MacroField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &MacroField {
        self.fields.last().expect("trajectories are nonempty")
    }

    pub fn grid(&self) -> usize {
        self.fields[0].len()
    }

    /// CSV with header `t,node_0,...,node_{m−1}`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.grid()).map(|k| format!("node_{k}")));
        wtr.write_record(&header)?;
        for (t, f) in self.times.iter().zip(&self.fields) {
            let mut row = vec![t.to_string()];
            row.extend(f.values().iter().map(|v| v.to_string()));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Solution of the neural field ODE with enough state to evaluate `X_t`
/// off the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NfeSolution {
    pub current: MacroTrajectory,
    pub lambda: MacroTrajectory,
    /// `C_t = ∫₀ᵗ e^{−α(t−s)} F(X_s, η_s) ds` at the sample times.
    convolved: Vec<MacroField>,
    x0: MacroField,
    alpha: f64,
}

impl NfeSolution {
    /// [`NfeSolution::profile_at`] through a precomputed extension; `ys` are
    /// the extension's points.
    pub fn profile_with(&self, k: usize, ext: &FineExtension, ys: &[f64]) -> Vec<f64> {
        let decay = (-self.alpha * self.current.times[k]).exp();
        ext.apply(self.convolved[k].values(), 1.0)
            .into_iter()
            .zip(ys)
            .map(|(v, &y)| v + decay * self.x0.interpolate(y))
            .collect()
    }

    /// `X_t(y) = e^{−αt} x0(y) + Σ_l W(y, x_l) C_t(x_l) / m` for sample `k`.
    pub fn profile_at(&self, k: usize, w: &SpatialKernel, ys: &[f64]) -> Vec<f64> {
        let t = self.current.times[k];
        let decay = (-self.alpha * t).exp();
        nystrom_extend(w, self.convolved[k].values(), 1.0, ys)
            .into_iter()
            .zip(ys)
            .map(|(v, &y)| v + decay * self.x0.interpolate(y))
            .collect()
    }
}

/// RK4 integration of `∂_t X = −αX + T_W F(X, η_t)`, keeping every
/// `sample_every`-th step.
#[allow(clippy::too_many_arguments)]
pub fn solve_nfe_exponential(
    op: &GridOperator,
    f: &SynapticResponse,
    alpha: f64,
    drive: &ExogenousDrive,
    x0: &MacroField,
    t_end: f64,
    dt: f64,
    sample_every: usize,
) -> Result<NfeSolution> {
    let m = op.m();
    x0.check_grid(m)?;
    if !(dt > 0.0 && alpha > 0.0 && t_end >= 0.0) || sample_every == 0 {
        return Err(invalid("need dt > 0, alpha > 0, t_end >= 0 and sample_every >= 1"));
    }
    let nodes: Vec<f64> = (0..m).map(|k| midpoint(k, m)).collect();
    let rhs = |t: f64, y: &[f64]| -> Vec<f64> {
        let (x, c) = y.split_at(m);
        let lam: Vec<f64> = x
            .iter()
            .zip(&nodes)
            .map(|(&xk, &node)| f.eval(xk, drive.eta(t, node)))
            .collect();
        let tw = op.apply(&lam);
        let mut out = Vec::with_capacity(2 * m);
        out.extend(x.iter().zip(&tw).map(|(xk, a)| a - alpha * xk));
        out.extend(c.iter().zip(&lam).map(|(ck, l)| l - alpha * ck));
        out
    };
    let lambda_of = |t: f64, x: &[f64]| -> MacroField {
        MacroField::new(x.iter().zip(&nodes).map(|(&xk, &node)| f.eval(xk, drive.eta(t, node))).collect())
    };
    let steps = (t_end / dt).round() as usize;
    let mut y = x0.values().to_vec();
    y.extend(std::iter::repeat_n(0.0, m));
    let mut times = vec![0.0];
    let mut current = vec![x0.clone()];
    let mut lambda = vec![lambda_of(0.0, x0.values())];
    let mut convolved = vec![MacroField::zeros(m)];
    for s in 1..=steps {
        y = rk4_step((s - 1) as f64 * dt, &y, dt, &rhs);
        let t = s as f64 * dt;
        let norm = y[..m].iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if !norm.is_finite() || norm > BLOW_UP_NORM {
            return Err(Error::BlowUp { t, norm });
        }
        if s % sample_every == 0 || s == steps {
            times.push(t);
            current.push(MacroField::new(y[..m].to_vec()));
            lambda.push(lambda_of(t, &y[..m]));
            convolved.push(MacroField::new(y[m..].to_vec()));
        }
    }
    Ok(NfeSolution {
        current: MacroTrajectory::new(TrajectoryKind::Current, times.clone(), current)?,
        lambda: MacroTrajectory::new(TrajectoryKind::Lambda, times, lambda)?,
        convolved,
        x0: x0.clone(),
        alpha,
    })
}

/// Explicit trapezoid time stepping of
/// `λ_t = F(T_W ∫₀ᵗ h(t−s) λ_s ds, η_t)` on the operator grid.
///
/// The endpoint term of the trapezoid rule is handled by one predictor step
/// (using `λ_{k−1}`) and one corrector step.
#[allow(clippy::too_many_arguments)]
pub fn solve_lambda_volterra(
    op: &GridOperator,
    f: &SynapticResponse,
    h: &MemoryKernel,
    drive: &ExogenousDrive,
    t_end: f64,
    dt: f64,
    sample_every: usize,
) -> Result<MacroTrajectory> {
    if !(dt > 0.0 && t_end >= 0.0) || sample_every == 0 {
        return Err(invalid("need dt > 0, t_end >= 0 and sample_every >= 1"));
    }
    let m = op.m();
    let steps = (t_end / dt).round() as usize;
    let support = h.support();
    let window = if support.is_finite() {
        ((support / dt).ceil() as usize + 1).min(steps + 1)
    } else {
        steps + 1
    };
    let hk: Vec<f64> = (0..=steps.min(window)).map(|n| h.value(n as f64 * dt)).collect();
    let hv = |n: usize| hk.get(n).copied().unwrap_or(0.0);
    let nodes: Vec<f64> = (0..m).map(|k| midpoint(k, m)).collect();
    let respond = |t: f64, conv: &[f64]| -> Vec<f64> {
        op.apply(conv)
            .into_iter()
            .zip(&nodes)
            .map(|(x, &node)| f.eval(x, drive.eta(t, node)))
            .collect()
    };

    let mut history: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    history.push(respond(0.0, &vec![0.0; m]));
    let mut times = vec![0.0];
    let mut fields = vec![MacroField::new(history[0].clone())];
    for k in 1..=steps {
        let t = k as f64 * dt;
        // Σ_{j<k} trapezoid-weighted h(t_k − t_j) λ_j, excluding the endpoint
        let mut partial = vec![0.0; m];
        let first = k.saturating_sub(window);
        for (j, lam) in history.iter().enumerate().skip(first) {
            let weight = if j == 0 { 0.5 } else { 1.0 } * hv(k - j) * dt;
            if weight == 0.0 {
                continue;
            }
            for (p, l) in partial.iter_mut().zip(lam) {
                *p += weight * l;
            }
        }
        let endpoint = 0.5 * hv(0) * dt;
        let with_end = |lam: &[f64]| -> Vec<f64> {
            partial.iter().zip(lam).map(|(p, l)| p + endpoint * l).collect()
        };
        let predicted = respond(t, &with_end(&history[k - 1]));
        let corrected = respond(t, &with_end(&predicted));
        let norm = l2_norm(&corrected);
        if !norm.is_finite() || norm > BLOW_UP_NORM {
            return Err(Error::BlowUp { t, norm });
        }
        if k % sample_every == 0 || k == steps {
            times.push(t);
            fields.push(MacroField::new(corrected.clone()));
        }
        history.push(corrected);
    }
    MacroTrajectory::new(TrajectoryKind::Lambda, times, fields)
}

/// First sample time after which the whole remaining trajectory stays within
/// `eps/4` of `target` in L².
pub fn time_to_neighborhood(traj: &MacroTrajectory, target: &MacroField, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    let radius = eps / 4.0;
    let mut entry = None;
    for (k, field) in traj.fields.iter().enumerate().rev() {
        if field.l2_distance(target)? > radius {
            break;
        }
        entry = Some(k);
    }
    entry
        .map(|k| traj.times[k])
        .ok_or(Error::NotReached { radius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::SpatialFunction;
    use crate::operator::build_operator;

    fn mean_field(m: usize) -> GridOperator {
        build_operator(&SpatialKernel::constant(1.0).unwrap(), m).unwrap()
    }

    #[test]
    fn linear_mean_field_fixed_point() {
        let op = mean_field(32);
        let fp = fixed_point(
            &op,
            &SynapticResponse::linear(1.0).unwrap(),
            &MemoryKernel::exponential(2.0).unwrap(),
            &MacroField::zeros(32),
            DEFAULT_PICARD_TOL,
            DEFAULT_PICARD_MAX_ITER,
        )
        .unwrap();
        assert!(fp.ell.values().iter().all(|v| (v - 2.0).abs() < 1e-10));
        assert!(fp.x_inf.values().iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert!(fp.residual < 1e-12);
        assert!(!fp.flagged_supercritical);
        assert!(fp.ratios.iter().skip(2).all(|r| *r <= 0.5 + 0.05));
    }

    #[test]
    fn empty_kernel_fixed_point() {
        let op = build_operator(&SpatialKernel::constant(0.0).unwrap(), 16).unwrap();
        let eta = MacroField::from_fn(16, |x| 0.5 * x);
        let fp = fixed_point(&op, &SynapticResponse::linear(1.0).unwrap(), &MemoryKernel::exponential(1.0).unwrap(), &eta, 1e-12, 100).unwrap();
        for (l, e) in fp.ell.values().iter().zip(eta.values()) {
            assert!((l - (1.0 + e)).abs() < 1e-15);
        }
        assert!(fp.x_inf.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sigmoid_fixed_point_matches_scalar_newton() {
        // z = 2 / (1 + e^{−(z−1)})
        let g = |z: f64| z - 2.0 / (1.0 + (-(z - 1.0)).exp());
        let dg = |z: f64| {
            let e = (-(z - 1.0)).exp();
            1.0 - 2.0 * e / ((1.0 + e) * (1.0 + e))
        };
        let mut z = 1.0;
        for _ in 0..50 {
            z -= g(z) / dg(z);
        }
        let op = mean_field(8);
        let fp = fixed_point(
            &op,
            &SynapticResponse::sigmoid(2.0, 1.0, 1.0).unwrap(),
            &MemoryKernel::exponential(1.0).unwrap(),
            &MacroField::zeros(8),
            1e-13,
            100_000,
        )
        .unwrap();
        assert!(fp.ell.values().iter().all(|v| (v - z).abs() < 1e-11));
    }

    #[test]
    fn supercritical_picard_fails_with_last_iterate() {
        let op = mean_field(4);
        let res = fixed_point(&op, &SynapticResponse::linear(1.0).unwrap(), &MemoryKernel::exponential(0.5).unwrap(), &MacroField::zeros(4), 1e-12, 200);
        match res {
            Err(Error::NotConverged { last_iterate, .. }) => assert_eq!(last_iterate.len(), 4),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn nfe_stationary_start_stays_put() {
        let w = SpatialKernel::exp_distance(0.5).unwrap();
        let op = build_operator(&w, 32).unwrap();
        let f = SynapticResponse::linear(1.0).unwrap();
        let h = MemoryKernel::exponential(2.0).unwrap();
        let fp = fixed_point(&op, &f, &h, &MacroField::zeros(32), 1e-13, 10_000).unwrap();
        let sol = solve_nfe_exponential(&op, &f, 2.0, &ExogenousDrive::zero(), &fp.x_inf, 5.0, 1e-3, 100).unwrap();
        for field in sol.current.fields() {
            assert!(field.linf_distance(&fp.x_inf).unwrap() < 1e-10);
        }
    }

    #[test]
    fn nfe_pure_decay_and_mean_field_closed_form() {
        let op = build_operator(&SpatialKernel::constant(0.0).unwrap(), 8).unwrap();
        let x0 = MacroField::from_fn(8, |x| 1.0 + x);
        let sol = solve_nfe_exponential(&op, &SynapticResponse::linear(1.0).unwrap(), 1.5, &ExogenousDrive::zero(), &x0, 3.0, 1e-3, 10).unwrap();
        for (t, field) in sol.current.times().iter().zip(sol.current.fields()) {
            for (v, x) in field.values().iter().zip(x0.values()) {
                assert!((v - (-1.5 * t).exp() * x).abs() < 1e-12);
            }
        }

        let op = mean_field(8);
        let sol = solve_nfe_exponential(&op, &SynapticResponse::linear(1.0).unwrap(), 2.0, &ExogenousDrive::zero(), &MacroField::zeros(8), 10.0, 1e-3, 50).unwrap();
        for (t, field) in sol.current.times().iter().zip(sol.current.fields()) {
            assert!(field.values().iter().all(|v| (v - (1.0 - (-t).exp())).abs() < 1e-10));
        }
        let lam = sol.lambda.last();
        assert!(lam.values().iter().all(|v| (v - 2.0).abs() < 1e-3));
    }

    #[test]
    fn off_grid_profile_reconstruction() {
        let w = SpatialKernel::edd(
            SpatialFunction::polynomial(vec![0.5, 0.5]).unwrap(),
            SpatialFunction::polynomial(vec![0.5, 0.5]).unwrap(),
        )
        .unwrap();
        let op = build_operator(&w, 64).unwrap();
        let x0 = MacroField::from_fn(64, |x| 0.3 * x);
        let sol = solve_nfe_exponential(&op, &SynapticResponse::linear(1.0).unwrap(), 2.0, &ExogenousDrive::zero(), &x0, 2.0, 1e-3, 100).unwrap();
        let nodes: Vec<f64> = x0.nodes().collect();
        for k in 0..sol.current.len() {
            let rebuilt = sol.profile_at(k, &w, &nodes);
            for (a, b) in rebuilt.iter().zip(sol.current.fields()[k].values()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn supercritical_nfe_blows_up() {
        let op = mean_field(4);
        let res = solve_nfe_exponential(&op, &SynapticResponse::linear(1.0).unwrap(), 0.5, &ExogenousDrive::zero(), &MacroField::zeros(4), 200.0, 1e-2, 1);
        assert!(matches!(res, Err(Error::BlowUp { .. })));
    }

    #[test]
    fn volterra_without_memory_follows_the_drive() {
        let op = mean_field(8);
        let drive = ExogenousDrive::new(SpatialFunction::Constant(0.2), SpatialFunction::Constant(1.0), 0.7).unwrap();
        let traj = solve_lambda_volterra(&op, &SynapticResponse::linear(1.0).unwrap(), &MemoryKernel::zero(), &drive, 3.0, 0.01, 1).unwrap();
        for (t, field) in traj.times().iter().zip(traj.fields()) {
            assert!(field.values().iter().all(|v| (v - (1.0 + drive.eta(*t, 0.5))).abs() < 1e-12));
        }
    }

    #[test]
    fn volterra_matches_nfe_for_exponential_memory() {
        let w = SpatialKernel::exp_distance(0.5).unwrap();
        let op = build_operator(&w, 16).unwrap();
        let f = SynapticResponse::linear(1.0).unwrap();
        let dt = 0.01;
        let h = MemoryKernel::tabulate_exponential(2.0, 1e-3).unwrap();
        let drive = ExogenousDrive::zero();
        let volterra = solve_lambda_volterra(&op, &f, &h, &drive, 5.0, dt, 10).unwrap();
        let nfe = solve_nfe_exponential(&op, &f, 2.0, &drive, &MacroField::zeros(16), 5.0, dt, 10).unwrap();
        assert_eq!(volterra.times().len(), nfe.lambda.times().len());
        for (a, b) in volterra.fields().iter().zip(nfe.lambda.fields()) {
            assert!(a.linf_distance(b).unwrap() < 10.0 * dt);
        }
    }

    #[test]
    fn volterra_supercritical_growth() {
        let op = mean_field(4);
        let h = MemoryKernel::tabulate_exponential(0.5, 1e-3).unwrap();
        let traj = solve_lambda_volterra(&op, &SynapticResponse::linear(1.0).unwrap(), &h, &ExogenousDrive::zero(), 40.0, 0.05, 10).unwrap();
        assert!(traj.last().mean() > 10.0 * traj.fields()[0].mean());
    }

    #[test]
    fn neighborhood_entry_times() {
        let target = MacroField::constant(4, 1.0);
        let flat = MacroTrajectory::new(TrajectoryKind::Current, vec![0.5, 1.0], vec![target.clone(), target.clone()]).unwrap();
        assert_eq!(time_to_neighborhood(&flat, &target, 0.1).unwrap(), 0.5);

        let op = mean_field(4);
        let dt = 1e-3;
        let sol = solve_nfe_exponential(&op, &SynapticResponse::linear(1.0).unwrap(), 2.0, &ExogenousDrive::zero(), &MacroField::zeros(4), 6.0, dt, 1).unwrap();
        let t_eps = time_to_neighborhood(&sol.current, &target, 0.4).unwrap();
        assert!((t_eps - 10f64.ln()).abs() <= dt);

        let diverging = MacroTrajectory::new(
            TrajectoryKind::Current,
            vec![0.0, 1.0, 2.0],
            vec![MacroField::constant(4, 1.0), MacroField::constant(4, 5.0), MacroField::constant(4, 50.0)],
        )
        .unwrap();
        assert!(matches!(time_to_neighborhood(&diverging, &target, 0.4), Err(Error::NotReached { .. })));
    }

    #[test]
    fn trajectory_csv_layout() {
        let traj = MacroTrajectory::new(TrajectoryKind::Lambda, vec![0.0, 0.5], vec![MacroField::constant(3, 1.0), MacroField::constant(3, 2.0)]).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,node_0,node_1,node_2");
        assert_eq!(text.lines().count(), 3);
        assert!(MacroTrajectory::new(TrajectoryKind::Lambda, vec![1.0, 1.0], vec![MacroField::zeros(2), MacroField::zeros(2)]).is_err());
    }
}
