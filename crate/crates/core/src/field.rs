use crate::error::{Error, Result};

/// Midpoint of cell `k` in a uniform grid of `m` cells on [0, 1].
#[inline]
pub fn midpoint(k: usize, m: usize) -> f64 {
    (k as f64 + 0.5) / m as f64
}

/// A function on [0, 1] sampled at the midpoints of a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroField {
    values: Vec<f64>,
}

impl MacroField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(m: usize, c: f64) -> Self {
        Self { values: vec![c; m] }
    }

    pub fn zeros(m: usize) -> Self {
        Self::constant(m, 0.0)
    }

    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: (0..m).map(|k| f(midpoint(k, m))).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let m = self.len();
        (0..m).map(move |k| midpoint(k, m))
    }

    /// Discrete L²(I) norm, √(1/m Σ v²).
    pub fn l2(&self) -> f64 {
        l2_norm(&self.values)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn check_grid(&self, m: usize) -> Result<()> {
        if self.len() != m {
            return Err(Error::GridMismatch {
                expected: m,
                actual: self.len(),
            });
        }
        Ok(())
    }

    pub fn sub(&self, other: &MacroField) -> Result<MacroField> {
        other.check_grid(self.len())?;
        Ok(MacroField::new(
            self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn l2_distance(&self, other: &MacroField) -> Result<f64> {
        Ok(self.sub(other)?.l2())
    }

    pub fn linf_distance(&self, other: &MacroField) -> Result<f64> {
        Ok(self.sub(other)?.linf())
    }

    /// Piecewise-linear interpolation between midpoints, constant beyond the
    /// outermost midpoints.
    pub fn interpolate(&self, x: f64) -> f64 {
        let m = self.len();
        if m == 1 {
            return self.values[0];
        }
        let s = x * m as f64 - 0.5;
        if s <= 0.0 {
            return self.values[0];
        }
        let k = s.floor() as usize;
        if k >= m - 1 {
            return self.values[m - 1];
        }
        let frac = s - k as f64;
        self.values[k] * (1.0 - frac) + self.values[k + 1] * frac
    }

    /// Resamples onto a grid of `q` midpoints by linear interpolation.
    pub fn resample(&self, q: usize) -> MacroField {
        MacroField::from_fn(q, |x| self.interpolate(x))
    }
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_norms() {
        let f = MacroField::constant(37, -2.5);
        assert!((f.l2() - 2.5).abs() < 1e-14);
        assert_eq!(f.linf(), 2.5);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = MacroField::zeros(4);
        let b = MacroField::zeros(5);
        assert!(matches!(a.sub(&b), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn interpolation_reproduces_linear_functions() {
        let f = MacroField::from_fn(16, |x| 3.0 * x - 1.0);
        for &x in &[0.1, 0.33, 0.5, 0.77, 0.9] {
            assert!((f.interpolate(x) - (3.0 * x - 1.0)).abs() < 1e-12);
        }
        // clamped outside the outer midpoints
        assert_eq!(f.interpolate(0.0), f.values()[0]);
        assert_eq!(f.interpolate(1.0), f.values()[15]);
    }
}
