//! Per-neuron values under range increments: `O(log N)` range add and point
//! read, `O(N)` materialization.

#[derive(Debug, Clone)]
pub(crate) struct RangeAccumulator {
    base: Vec<f64>,
    diff: Vec<f64>,
    fenwick: Vec<f64>,
    dirty: bool,
}

impl RangeAccumulator {
    pub(crate) fn new(base: Vec<f64>) -> Self {
        let n = base.len();
        Self {
            base,
            diff: vec![0.0; n + 1],
            fenwick: vec![0.0; n + 1],
            dirty: false,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.base.len()
    }

    pub(crate) fn range_add(&mut self, a: usize, b: usize, v: f64) {
        if a >= b {
            return;
        }
        self.dirty = true;
        self.diff[a] += v;
        self.diff[b] -= v;
        self.fenwick_add(a, v);
        if b < self.len() {
            self.fenwick_add(b, -v);
        }
    }

    fn fenwick_add(&mut self, i: usize, v: f64) {
        let mut k = i + 1;
        while k <= self.len() {
            self.fenwick[k] += v;
            k += k & k.wrapping_neg();
        }
    }

    pub(crate) fn get(&self, i: usize) -> f64 {
        let mut acc = self.base[i];
        let mut k = i + 1;
        while k > 0 {
            acc += self.fenwick[k];
            k &= k - 1;
        }
        acc
    }

    pub(crate) fn materialize_into(&self, out: &mut Vec<f64>) {
        out.clear();
        let mut running = 0.0;
        out.extend(self.base.iter().zip(&self.diff).map(|(b, d)| {
            running += d;
            b + running
        }));
    }

    /// Folds pending increments into the base values and multiplies them by
    /// `factor`.
    pub(crate) fn fold_and_scale(&mut self, factor: f64) {
        if self.dirty {
            let mut running = 0.0;
            for (b, d) in self.base.iter_mut().zip(&self.diff) {
                running += d;
                *b += running;
            }
            self.diff.iter_mut().for_each(|v| *v = 0.0);
            self.fenwick.iter_mut().for_each(|v| *v = 0.0);
            self.dirty = false;
        }
        if factor != 1.0 {
            self.base.iter_mut().for_each(|b| *b *= factor);
        }
    }
}
