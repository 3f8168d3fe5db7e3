//! Parametric families for the memory kernel `h`, the synaptic response `F`,
//! the spatial kernel `W` and the exogenous drive `η`, together with the
//! analytic bounds (‖h‖₁, sup|∂ₓF|, Lipschitz constants, δ_t) the solvers and
//! the simulator consume.
//!
//! Every object here is immutable once built and can be shared freely
//! between worker threads.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};

// ---------------------------------------------------------------------------
// Functions on I = [0, 1]
// ---------------------------------------------------------------------------

/// A scalar function on [0, 1], used for drive profiles and for the factors
/// of expected-degree kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum SpatialFunction {
    Constant(f64),
    /// Coefficients in ascending order: `c[0] + c[1] x + c[2] x² + ...`.
    Polynomial(Vec<f64>),
    /// Piecewise-linear through `(grid[k], values[k])`, constant outside.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

const SCAN_INTERVALS: usize = 2048;
const DENSE_SAMPLES: usize = 10_001;

impl SpatialFunction {
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(invalid("polynomial needs at least one finite coefficient"));
        }
        Ok(Self::Polynomial(coeffs))
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() {
            return Err(invalid("tabulated function needs matching, non-empty grid and values"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("tabulated grid must be strictly increasing"));
        }
        if grid.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(invalid("tabulated function contains non-finite entries"));
        }
        Ok(Self::Tabulated { grid, values })
    }

    /// Loads a two-column CSV `(grid, value)`. A non-numeric first row is
    /// treated as a header; `#` starts a comment line.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let (grid, values) = read_two_column_csv(path.as_ref())?;
        Self::tabulated(grid, values)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Polynomial(c) => horner(c, x),
            Self::Tabulated { grid, values } => interpolate_clamped(grid, values, x),
        }
    }

    /// `(min, max)` over [0, 1]. Exact for constants, polynomials (critical
    /// points by bracketing the derivative) and piecewise-linear tables.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Self::Constant(c) => (*c, *c),
            Self::Polynomial(c) => polynomial_range(c),
            Self::Tabulated { .. } => dense_range(|x| self.eval(x), self.breakpoints()),
        }
    }

    /// `(min, max)` of `a − b` over [0, 1].
    pub fn difference_range(a: &Self, b: &Self) -> (f64, f64) {
        match (a.as_polynomial(), b.as_polynomial()) {
            (Some(pa), Some(pb)) => {
                let len = pa.len().max(pb.len());
                let diff: Vec<f64> = (0..len)
                    .map(|k| pa.get(k).copied().unwrap_or(0.0) - pb.get(k).copied().unwrap_or(0.0))
                    .collect();
                polynomial_range(&diff)
            }
            _ => {
                let mut extra = a.breakpoints();
                extra.extend(b.breakpoints());
                dense_range(|x| a.eval(x) - b.eval(x), extra)
            }
        }
    }

    fn as_polynomial(&self) -> Option<Vec<f64>> {
        match self {
            Self::Constant(c) => Some(vec![*c]),
            Self::Polynomial(c) => Some(c.clone()),
            Self::Tabulated { .. } => None,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Tabulated { grid, .. } => grid.iter().copied().filter(|x| (0.0..=1.0).contains(x)).collect(),
            _ => Vec::new(),
        }
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn polynomial_range(c: &[f64]) -> (f64, f64) {
    let deriv: Vec<f64> = c.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect();
    let mut candidates = vec![0.0, 1.0];
    if !deriv.is_empty() {
        let mut a = 0.0;
        let mut da = horner(&deriv, a);
        for k in 1..=SCAN_INTERVALS {
            let b = k as f64 / SCAN_INTERVALS as f64;
            let db = horner(&deriv, b);
            if da == 0.0 {
                candidates.push(a);
            } else if da * db < 0.0 {
                candidates.push(bisect(|x| horner(&deriv, x), a, b));
            }
            a = b;
            da = db;
        }
    }
    candidates
        .into_iter()
        .map(|x| horner(c, x))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa0 = f(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if f(mid) * fa0 > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn dense_range(f: impl Fn(f64) -> f64, extra: Vec<f64>) -> (f64, f64) {
    (0..DENSE_SAMPLES)
        .map(|k| k as f64 / (DENSE_SAMPLES - 1) as f64)
        .chain(extra)
        .map(f)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn interpolate_clamped(grid: &[f64], values: &[f64], x: f64) -> f64 {
    let n = grid.len();
    if x <= grid[0] {
        return values[0];
    }
    if x >= grid[n - 1] {
        return values[n - 1];
    }
    let k = grid.partition_point(|&g| g <= x) - 1;
    let frac = (x - grid[k]) / (grid[k + 1] - grid[k]);
    values[k] + frac * (values[k + 1] - values[k])
}

pub(crate) fn read_two_column_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::Config(format!("{}: row {} has fewer than two columns", path.display(), row + 1)));
        }
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(x), Ok(v)) => {
                grid.push(x);
                values.push(v);
            }
            _ if row == 0 => continue,
            _ => {
                return Err(Error::Config(format!("{}: row {} is not numeric", path.display(), row + 1)));
            }
        }
    }
    Ok((grid, values))
}

// ---------------------------------------------------------------------------
// Memory kernel h
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum MemoryShape {
    /// `h(t) = e^{−αt}`; α is the leakage rate.
    Exponential { alpha: f64 },
    /// Samples of `h` at `k·step`, linearly interpolated and zero past the
    /// last sample.
    Tabulated { samples: Vec<f64>, step: f64 },
}

/// A nonnegative integrable memory kernel with its L¹ norm precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryKernel {
    shape: MemoryShape,
    l1_norm: f64,
    sup: f64,
    /// `suffix_max[k] = max_{j ≥ k} samples[j]` (tabulated only).
    suffix_max: Vec<f64>,
}

impl MemoryKernel {
    pub fn exponential(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("leakage rate must be positive, got {alpha}")));
        }
        Ok(Self {
            shape: MemoryShape::Exponential { alpha },
            l1_norm: 1.0 / alpha,
            sup: 1.0,
            suffix_max: Vec::new(),
        })
    }

    pub fn tabulated(samples: Vec<f64>, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(invalid("tabulated kernel step must be positive"));
        }
        if samples.is_empty() {
            return Err(invalid("tabulated kernel needs at least one sample"));
        }
        if samples.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("memory kernel must be nonnegative and finite"));
        }
        let l1_norm = trapezoid(&samples, step);
        let mut suffix_max = samples.clone();
        for k in (0..suffix_max.len().saturating_sub(1)).rev() {
            suffix_max[k] = suffix_max[k].max(suffix_max[k + 1]);
        }
        let sup = suffix_max[0];
        Ok(Self {
            shape: MemoryShape::Tabulated { samples, step },
            l1_norm,
            sup,
            suffix_max,
        })
    }

    /// Samples `e^{−αt}` every `step` until it falls below 1e-17.
    pub fn tabulate_exponential(alpha: f64, step: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(invalid("leakage rate must be positive"));
        }
        if !(step > 0.0) {
            return Err(invalid("tabulation step must be positive"));
        }
        let horizon = 40.0 / alpha;
        let count = (horizon / step).ceil() as usize + 1;
        let samples = (0..count).map(|k| (-alpha * k as f64 * step).exp()).collect();
        Self::tabulated(samples, step)
    }

    /// `h ≡ 0`.
    pub fn zero() -> Self {
        Self::tabulated(vec![0.0, 0.0], 1.0).expect("zero kernel is valid")
    }

    pub fn shape(&self) -> &MemoryShape {
        &self.shape
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    /// `sup_t h(t)`.
    pub fn sup(&self) -> f64 {
        self.sup
    }

    pub fn decay_rate(&self) -> Option<f64> {
        match self.shape {
            MemoryShape::Exponential { alpha } => Some(alpha),
            MemoryShape::Tabulated { .. } => None,
        }
    }

    /// Length of the support, infinite for the exponential kernel.
    pub fn support(&self) -> f64 {
        match &self.shape {
            MemoryShape::Exponential { .. } => f64::INFINITY,
            MemoryShape::Tabulated { samples, step } => (samples.len() - 1) as f64 * step,
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(invalid(format!("memory kernel evaluated at negative time {t}")));
        }
        Ok(self.value(t))
    }

    /// `h(t)` for `t ≥ 0` without argument checks.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match &self.shape {
            MemoryShape::Exponential { alpha } => (-alpha * t).exp(),
            MemoryShape::Tabulated { samples, step } => {
                let s = t / step;
                let k = s.floor() as usize;
                if k + 1 >= samples.len() {
                    return if k + 1 == samples.len() && s == k as f64 { samples[k] } else { 0.0 };
                }
                let frac = s - k as f64;
                samples[k] + frac * (samples[k + 1] - samples[k])
            }
        }
    }

    /// `sup_{u ≥ t} h(u)`: nonincreasing, equal to `h` for monotone kernels.
    #[inline]
    pub fn envelope(&self, t: f64) -> f64 {
        match &self.shape {
            MemoryShape::Exponential { .. } => self.value(t),
            MemoryShape::Tabulated { step, .. } => {
                let k = (t / step).floor() as usize;
                let tail = self.suffix_max.get(k + 1).copied().unwrap_or(0.0);
                self.value(t).max(tail)
            }
        }
    }
}

fn trapezoid(samples: &[f64], step: f64) -> f64 {
    match samples.len() {
        1 => 0.0,
        n => step * (samples.iter().sum::<f64>() - 0.5 * (samples[0] + samples[n - 1])),
    }
}

// ---------------------------------------------------------------------------
// Synaptic response F(x, η)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynapticResponse {
    /// `F(x, η) = μ + η + x`.
    Linear { mu: f64 },
    /// `F(x, η) = λ_max / (1 + exp(−b(x + η − θ)))`.
    Sigmoid { max_rate: f64, slope: f64, threshold: f64 },
    /// `F ≡ c`.
    Constant { rate: f64 },
}

impl SynapticResponse {
    pub fn linear(mu: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(invalid("linear baseline must be nonnegative"));
        }
        Ok(Self::Linear { mu })
    }

    pub fn sigmoid(max_rate: f64, slope: f64, threshold: f64) -> Result<Self> {
        if !(max_rate > 0.0 && max_rate.is_finite()) || !(slope > 0.0 && slope.is_finite()) || !threshold.is_finite() {
            return Err(invalid("sigmoid needs positive gain and slope and a finite threshold"));
        }
        Ok(Self::Sigmoid { max_rate, slope, threshold })
    }

    pub fn constant(rate: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(invalid("constant rate must be nonnegative"));
        }
        Ok(Self::Constant { rate })
    }

    #[inline]
    pub fn eval(&self, x: f64, eta: f64) -> f64 {
        match *self {
            Self::Linear { mu } => mu + eta + x,
            Self::Sigmoid { max_rate, slope, threshold } => {
                max_rate / (1.0 + (-slope * (x + eta - threshold)).exp())
            }
            Self::Constant { rate } => rate,
        }
    }

    /// `∂ₓF(x, η)`.
    pub fn dx(&self, x: f64, eta: f64) -> f64 {
        match *self {
            Self::Linear { .. } => 1.0,
            Self::Sigmoid { max_rate, slope, threshold } => {
                let s = 1.0 / (1.0 + (-slope * (x + eta - threshold)).exp());
                max_rate * slope * s * (1.0 - s)
            }
            Self::Constant { .. } => 0.0,
        }
    }

    /// `sup |∂ₓF|`.
    pub fn dx_sup(&self) -> f64 {
        match *self {
            Self::Linear { .. } => 1.0,
            Self::Sigmoid { max_rate, slope, .. } => max_rate * slope / 4.0,
            Self::Constant { .. } => 0.0,
        }
    }

    /// Lipschitz constant in the drive variable.
    pub fn eta_lip(&self) -> f64 {
        self.dx_sup()
    }

    /// Joint Lipschitz constant ‖F‖_L for `|x − x'| + |η − η'|`.
    pub fn lip(&self) -> f64 {
        self.dx_sup()
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Self::Linear { .. })
    }
}

// ---------------------------------------------------------------------------
// Spatial kernel W
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum KernelShape {
    Constant(f64),
    /// `min(1, e^{−|x−y|/σ} / 2σ)`.
    ExpDistance { sigma: f64 },
    /// Expected-degree kernel `f(x) g(y)`.
    Edd { f: SpatialFunction, g: SpatialFunction },
    /// Indicator of circle distance `< r`.
    PNearest { r: f64 },
    /// Block-constant kernel: `boundaries` split I into communities and
    /// `probs[k][l]` connects community `l` (source) into `k` (target).
    Sbm { boundaries: Vec<f64>, probs: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialKernel {
    shape: KernelShape,
    sup: f64,
}

impl SpatialKernel {
    pub fn constant(c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) {
            return Err(invalid(format!("constant kernel must lie in [0, 1], got {c}")));
        }
        Ok(Self { shape: KernelShape::Constant(c), sup: c })
    }

    pub fn exp_distance(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("exponential-distance width must be positive"));
        }
        let peak = 1.0 / (2.0 * sigma);
        if peak > 1.0 {
            log::warn!("exponential-distance kernel with sigma = {sigma} exceeds 1 near the diagonal; values are clipped to 1");
        }
        Ok(Self {
            shape: KernelShape::ExpDistance { sigma },
            sup: peak.min(1.0),
        })
    }

    /// `W(x, y) = f(x) g(y)` with nonnegative factors. The product may exceed
    /// one (it is still a valid integral kernel); graph sampling then checks
    /// that `ρ · sup W ≤ 1`.
    pub fn edd(f: SpatialFunction, g: SpatialFunction) -> Result<Self> {
        let (fmin, fmax) = f.range();
        let (gmin, gmax) = g.range();
        if fmin < 0.0 || gmin < 0.0 {
            return Err(invalid("expected-degree factors must be nonnegative on [0, 1]"));
        }
        if !(fmax.is_finite() && gmax.is_finite()) {
            return Err(invalid("expected-degree factors must be bounded"));
        }
        Ok(Self {
            shape: KernelShape::Edd { f, g },
            sup: fmax * gmax,
        })
    }

    pub fn p_nearest(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 0.5) {
            return Err(invalid(format!("nearest-neighbour radius must lie in (0, 1/2), got {r}")));
        }
        Ok(Self { shape: KernelShape::PNearest { r }, sup: 1.0 })
    }

    pub fn sbm(boundaries: Vec<f64>, probs: Vec<Vec<f64>>) -> Result<Self> {
        let blocks = boundaries.len() + 1;
        if boundaries.iter().any(|b| !(*b > 0.0 && *b < 1.0)) || boundaries.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("block boundaries must be strictly increasing inside (0, 1)"));
        }
        if probs.len() != blocks || probs.iter().any(|row| row.len() != blocks) {
            return Err(invalid(format!("block matrix must be {blocks}x{blocks}")));
        }
        if probs.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(invalid("block probabilities must lie in [0, 1]"));
        }
        let sup = probs.iter().flatten().fold(0.0_f64, |a, &p| a.max(p));
        Ok(Self {
            shape: KernelShape::Sbm { boundaries, probs },
            sup,
        })
    }

    pub fn shape(&self) -> &KernelShape {
        &self.shape
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.shape, KernelShape::Constant(_))
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(invalid(format!("kernel positions must lie in [0, 1], got ({x}, {y})")));
        }
        Ok(self.value(x, y))
    }

    /// `W(x, y)` without range checks.
    #[inline]
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match &self.shape {
            KernelShape::Constant(c) => *c,
            KernelShape::ExpDistance { sigma } => {
                ((-(x - y).abs() / sigma).exp() / (2.0 * sigma)).min(1.0)
            }
            KernelShape::Edd { f, g } => f.eval(x) * g.eval(y),
            KernelShape::PNearest { r } => {
                let d = (x - y).abs();
                if d.min(1.0 - d) < *r {
                    1.0
                } else {
                    0.0
                }
            }
            KernelShape::Sbm { boundaries, probs } => {
                let k = boundaries.partition_point(|&b| b <= x);
                let l = boundaries.partition_point(|&b| b <= y);
                probs[k][l]
            }
        }
    }

    /// Short content hash identifying the kernel parameters.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(format!("{:?}", self.shape).as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

// ---------------------------------------------------------------------------
// Exogenous drive η_t
// ---------------------------------------------------------------------------

/// `η_t(x) = η_∞(x) + e^{−βt}(η_0(x) − η_∞(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousDrive {
    eta_inf: SpatialFunction,
    eta_zero: SpatialFunction,
    beta: f64,
    gap_sup: f64,
    gap_min: f64,
}

impl ExogenousDrive {
    pub fn new(eta_inf: SpatialFunction, eta_zero: SpatialFunction, beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(invalid("drive relaxation rate must be nonnegative"));
        }
        let (gap_min, gap_max) = SpatialFunction::difference_range(&eta_zero, &eta_inf);
        let gap_sup = gap_min.abs().max(gap_max.abs());
        if beta == 0.0 && gap_sup > 0.0 {
            return Err(invalid("a drive with beta = 0 never relaxes: eta_zero must equal eta_inf"));
        }
        Ok(Self { eta_inf, eta_zero, beta, gap_sup, gap_min })
    }

    /// Time-independent drive `η_t = η_∞`.
    pub fn autonomous(eta_inf: SpatialFunction) -> Self {
        Self {
            eta_zero: eta_inf.clone(),
            eta_inf,
            beta: 0.0,
            gap_sup: 0.0,
            gap_min: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self::autonomous(SpatialFunction::Constant(0.0))
    }

    /// Overrides `sup_x |η_0 − η_∞|` with a user-supplied modulus, for
    /// profiles whose exact supremum is not computed here. It may only
    /// enlarge the computed value.
    pub fn with_gap_modulus(mut self, sup_gap: f64) -> Result<Self> {
        if !(sup_gap >= self.gap_sup) {
            return Err(invalid("gap modulus must dominate the computed sup|eta_zero - eta_inf|"));
        }
        self.gap_sup = sup_gap;
        Ok(self)
    }

    pub fn eta_inf(&self) -> &SpatialFunction {
        &self.eta_inf
    }

    pub fn eta_zero(&self) -> &SpatialFunction {
        &self.eta_zero
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[inline]
    pub fn eta(&self, t: f64, x: f64) -> f64 {
        let inf = self.eta_inf.eval(x);
        if self.gap_sup == 0.0 {
            return inf;
        }
        inf + (-self.beta * t).exp() * (self.eta_zero.eval(x) - inf)
    }

    /// `δ_t = sup_x |η_t(x) − η_∞(x)|`.
    pub fn delta(&self, t: f64) -> f64 {
        if self.gap_sup == 0.0 {
            0.0
        } else {
            (-self.beta * t).exp() * self.gap_sup
        }
    }

    /// True when `t ↦ η_t(x)` is nonincreasing for every x.
    pub fn is_nonincreasing(&self) -> bool {
        self.gap_sup == 0.0 || self.gap_min >= 0.0
    }

    /// `∫₀ᵗ η_s(x) ds` in closed form.
    pub fn integral(&self, t: f64, x: f64) -> f64 {
        let inf = self.eta_inf.eval(x);
        if self.gap_sup == 0.0 {
            return inf * t;
        }
        inf * t + (self.eta_zero.eval(x) - inf) * (1.0 - (-self.beta * t).exp()) / self.beta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exponential_memory_kernel_values() {
        let h = MemoryKernel::exponential(2.0).unwrap();
        assert_eq!(h.eval(0.0).unwrap(), 1.0);
        assert!((h.eval(std::f64::consts::LN_2 / 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(h.l1_norm(), 0.5);
        assert!(h.eval(-1e-3).is_err());
    }

    #[test]
    fn tabulated_exponential_matches_closed_form() {
        let h = MemoryKernel::tabulate_exponential(1.0, 1e-3).unwrap();
        assert!((h.eval(1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-6);
        assert!((h.eval(0.4567).unwrap() - (-0.4567f64).exp()).abs() < 1e-6);
        assert_eq!(h.value(1e6), 0.0);
    }

    #[test]
    fn tabulated_l1_is_its_own_trapezoid_sum() {
        let samples = vec![1.0, 0.7, 0.2, 0.05, 0.0];
        let h = MemoryKernel::tabulated(samples.clone(), 0.1).unwrap();
        let recomputed = 0.1 * (0.5 * 1.0 + 0.7 + 0.2 + 0.05 + 0.5 * 0.0);
        assert!((h.l1_norm() - recomputed).abs() < 1e-12);
    }

    #[test]
    fn tabulated_l1_converges_at_least_first_order() {
        let exact = 1.0 / 1.5;
        let errs: Vec<f64> = [0.04, 0.02, 0.01, 0.005]
            .iter()
            .map(|&s| (MemoryKernel::tabulate_exponential(1.5, s).unwrap().l1_norm() - exact).abs())
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] <= 0.5 * w[0] * 1.01, "errors {errs:?}");
        }
    }

    #[test]
    fn negative_samples_are_rejected() {
        assert!(MemoryKernel::tabulated(vec![1.0, -0.1], 0.1).is_err());
        assert!(MemoryKernel::exponential(0.0).is_err());
    }

    #[test]
    fn envelope_dominates_and_is_monotone() {
        let h = MemoryKernel::tabulated(vec![0.0, 1.0, 0.3, 0.6, 0.0], 0.5).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..300 {
            let t = k as f64 * 0.01;
            let e = h.envelope(t);
            assert!(e >= h.value(t) - 1e-15);
            assert!(e <= prev + 1e-15);
            prev = e;
        }
        assert_eq!(h.sup(), 1.0);
    }

    #[test]
    fn synaptic_response_examples() {
        assert_eq!(SynapticResponse::linear(0.0).unwrap().eval(0.5, 1.0), 1.5);
        assert_eq!(SynapticResponse::constant(3.0).unwrap().eval(17.0, 0.2), 3.0);
        let s = SynapticResponse::sigmoid(2.0, 1.0, 0.0).unwrap();
        assert!((s.eval(0.0, 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(s.dx_sup(), 0.5);
        assert!((s.dx(0.0, 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn spatial_kernel_examples() {
        let c = SpatialKernel::constant(0.3).unwrap();
        assert_eq!(c.eval(0.1, 0.9).unwrap(), 0.3);
        let p = SpatialKernel::p_nearest(0.1).unwrap();
        assert_eq!(p.eval(0.05, 0.97).unwrap(), 1.0);
        // circle distance exactly 0.1 is not < r
        assert_eq!(p.eval(0.25, 0.35 + 1e-12).unwrap(), 0.0);
        let sbm = SpatialKernel::sbm(vec![0.5], vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        assert_eq!(sbm.eval(0.25, 0.75).unwrap(), 0.1);
        assert_eq!(sbm.eval(0.75, 0.75).unwrap(), 0.9);
        assert!(c.eval(1.2, 0.5).is_err());
    }

    #[test]
    fn kernel_constructors_validate() {
        assert!(SpatialKernel::constant(1.2).is_err());
        assert!(SpatialKernel::p_nearest(0.5).is_err());
        assert!(SpatialKernel::sbm(vec![0.5], vec![vec![0.9, 1.1], vec![0.1, 0.9]]).is_err());
        assert!(SpatialKernel::sbm(vec![0.6, 0.4], vec![vec![0.0; 3]; 3]).is_err());
        let neg = SpatialFunction::polynomial(vec![0.5, -1.0]).unwrap();
        assert!(SpatialKernel::edd(neg, SpatialFunction::Constant(1.0)).is_err());
        let clipped = SpatialKernel::exp_distance(0.1).unwrap();
        assert_eq!(clipped.value(0.3, 0.3), 1.0);
        assert_eq!(clipped.sup(), 1.0);
    }

    #[test]
    fn edd_sup_is_product_of_factor_maxima() {
        let f = SpatialFunction::polynomial(vec![0.0, 2.0]).unwrap();
        let w = SpatialKernel::edd(f, SpatialFunction::Constant(1.0)).unwrap();
        assert!((w.sup() - 2.0).abs() < 1e-12);
        assert!((w.value(0.25, 0.9) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn polynomial_range_finds_interior_extrema() {
        // 1 - 4(x - 0.3)^2 = 0.64 + 2.4x - 4x^2, max 1 at x = 0.3, min -0.96 at x = 1
        let p = SpatialFunction::polynomial(vec![0.64, 2.4, -4.0]).unwrap();
        let (lo, hi) = p.range();
        assert!((hi - 1.0).abs() < 1e-13);
        assert!((lo + 0.96).abs() < 1e-13);
    }

    #[test]
    fn drive_delta_matches_brute_force_sup() {
        // gaps 0.3 - 0.1x + x^2 (sup at x = 1) and 0.3 + x - x^2 (sup at x = 1/2)
        let inf = SpatialFunction::polynomial(vec![0.2, 0.1]).unwrap();
        let zero_a = SpatialFunction::polynomial(vec![0.5, 0.0, 1.0]).unwrap();
        let zero_b = SpatialFunction::polynomial(vec![0.5, 1.1, -1.0]).unwrap();
        for zero in [zero_a, zero_b] {
        let d = ExogenousDrive::new(inf.clone(), zero, 0.7).unwrap();
        for &t in &[0.0, 0.3, 1.0, 4.0] {
            let brute = (0..=10_000)
                .map(|k| {
                    let x = k as f64 / 10_000.0;
                    (d.eta(t, x) - d.eta_inf().eval(x)).abs()
                })
                .fold(0.0_f64, f64::max);
            assert!((d.delta(t) - brute).abs() < 1e-9, "t={t}: {} vs {brute}", d.delta(t));
        }
        }
    }

    #[test]
    fn drive_monotonicity_and_integral() {
        let d = ExogenousDrive::new(SpatialFunction::Constant(0.2), SpatialFunction::Constant(1.0), 2.0).unwrap();
        assert!(d.is_nonincreasing());
        let up = ExogenousDrive::new(SpatialFunction::Constant(1.0), SpatialFunction::Constant(0.2), 2.0).unwrap();
        assert!(!up.is_nonincreasing());
        // ∫₀¹ 0.2 + 0.8 e^{-2s} ds
        let exact = 0.2 + 0.8 * (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((d.integral(1.0, 0.4) - exact).abs() < 1e-14);
        assert!(ExogenousDrive::new(SpatialFunction::Constant(1.0), SpatialFunction::Constant(0.2), 0.0).is_err());
    }

    #[test]
    fn tabulated_function_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eta.csv");
        std::fs::write(&path, "x,value\n0,1\n0.5,3\n1,2\n").unwrap();
        let f = SpatialFunction::from_csv(&path).unwrap();
        assert_eq!(f.eval(0.25), 2.0);
        assert_eq!(f.range(), (1.0, 3.0));
    }

    fn any_kernel() -> impl Strategy<Value = SpatialKernel> {
        prop_oneof![
            (0.0..=1.0f64).prop_map(|c| SpatialKernel::constant(c).unwrap()),
            (0.05..2.0f64).prop_map(|s| SpatialKernel::exp_distance(s).unwrap()),
            (0.01..0.49f64).prop_map(|r| SpatialKernel::p_nearest(r).unwrap()),
            (0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b)| {
                let f = SpatialFunction::polynomial(vec![a * 0.5, 0.5 * (1.0 - a)]).unwrap();
                let g = SpatialFunction::polynomial(vec![b, 0.0, 1.0 - b]).unwrap();
                SpatialKernel::edd(f, g).unwrap()
            }),
            (0.05..0.95f64, prop::collection::vec(0.0..=1.0f64, 4)).prop_map(|(b, p)| {
                SpatialKernel::sbm(vec![b], vec![vec![p[0], p[1]], vec![p[2], p[3]]]).unwrap()
            }),
        ]
    }

    fn any_response() -> impl Strategy<Value = SynapticResponse> {
        prop_oneof![
            (0.0..5.0f64).prop_map(|mu| SynapticResponse::linear(mu).unwrap()),
            (0.1..5.0f64, 0.1..5.0f64, -3.0..3.0f64)
                .prop_map(|(m, b, th)| SynapticResponse::sigmoid(m, b, th).unwrap()),
            (0.0..5.0f64).prop_map(|c| SynapticResponse::constant(c).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn kernels_stay_in_unit_interval(w in any_kernel(), pairs in prop::collection::vec((0.0..=1.0f64, 0.0..=1.0f64), 1000)) {
            for (x, y) in pairs {
                let v = w.eval(x, y).unwrap();
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert!(v <= w.sup() + 1e-12);
            }
        }

        #[test]
        fn responses_are_nondecreasing_and_nonnegative(f in any_response(), x in 0.0..10.0f64, dx in 0.0..10.0f64, eta in 0.0..3.0f64) {
            let a = f.eval(x, eta);
            let b = f.eval(x + dx, eta);
            prop_assert!(a >= 0.0);
            prop_assert!(a <= b + 1e-12);
            prop_assert!(b - a <= f.dx_sup() * dx + 1e-12);
        }
    }
}
