//! Sum tree over per-neuron rate bounds with lazy range increments.
//!
//! `sum[p]` is the subtree total including `lazy[p]` (a per-leaf increment
//! pending for the whole subtree) but excluding the lazies of ancestors.

#[derive(Debug, Clone)]
pub(crate) struct RateTree {
    n: usize,
    size: usize,
    sum: Vec<f64>,
    lazy: Vec<f64>,
}

impl RateTree {
    pub(crate) fn new(values: &[f64]) -> Self {
        let n = values.len();
        let size = n.next_power_of_two().max(1);
        let mut tree = Self {
            n,
            size,
            sum: vec![0.0; 2 * size],
            lazy: vec![0.0; 2 * size],
        };
        tree.rebuild(values);
        tree
    }

    pub(crate) fn rebuild(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.n);
        self.lazy.iter_mut().for_each(|v| *v = 0.0);
        self.sum[self.size..self.size + self.n].copy_from_slice(values);
        self.sum[self.size + self.n..].iter_mut().for_each(|v| *v = 0.0);
        for p in (1..self.size).rev() {
            self.sum[p] = self.sum[2 * p] + self.sum[2 * p + 1];
        }
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum[1]
    }

    pub(crate) fn get(&self, i: usize) -> f64 {
        let mut p = self.size + i;
        let mut value = self.sum[p];
        p >>= 1;
        while p >= 1 {
            value += self.lazy[p];
            p >>= 1;
        }
        value
    }

    pub(crate) fn set(&mut self, i: usize, value: f64) {
        let delta = value - self.get(i);
        let mut p = self.size + i;
        while p >= 1 {
            self.sum[p] += delta;
            p >>= 1;
        }
    }

    /// Adds `v` to every leaf in `[a, b)`.
    pub(crate) fn range_add(&mut self, a: usize, b: usize, v: f64) {
        if a < b {
            self.add_rec(1, 0, self.size, a, b, v);
        }
    }

    fn add_rec(&mut self, p: usize, lo: usize, hi: usize, a: usize, b: usize, v: f64) {
        if a <= lo && hi <= b {
            self.sum[p] += v * (hi - lo) as f64;
            self.lazy[p] += v;
            return;
        }
        let mid = (lo + hi) / 2;
        if a < mid {
            self.add_rec(2 * p, lo, mid, a, b, v);
        }
        if mid < b {
            self.add_rec(2 * p + 1, mid, hi, a, b, v);
        }
        self.sum[p] = self.sum[2 * p] + self.sum[2 * p + 1] + self.lazy[p] * (hi - lo) as f64;
    }

    /// Leaf `i` with `Σ_{k<i} v_k ≤ u < Σ_{k≤i} v_k`; descends left whenever
    /// the right subtree carries no mass.
    pub(crate) fn sample(&self, mut u: f64) -> usize {
        let mut p = 1;
        let mut pending = 0.0;
        let mut len = self.size;
        while p < self.size {
            pending += self.lazy[p];
            len /= 2;
            let left = 2 * p;
            let left_mass = self.sum[left] + pending * len as f64;
            let right_mass = self.sum[left + 1] + pending * len as f64;
            if u < left_mass || right_mass <= 0.0 {
                p = left;
            } else {
                u -= left_mass;
                p = left + 1;
            }
        }
        (p - self.size).min(self.n - 1)
    }

    #[cfg(test)]
    pub(crate) fn materialize(&self) -> Vec<f64> {
        let mut pending = vec![0.0; 2 * self.size];
        for p in 2..2 * self.size {
            pending[p] = pending[p / 2] + self.lazy[p / 2];
        }
        (0..self.n)
            .map(|i| self.sum[self.size + i] + pending[self.size + i])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sampling_follows_prefix_sums() {
        let tree = RateTree::new(&[1.0, 0.0, 2.0, 3.0, 0.5]);
        assert_eq!(tree.total(), 6.5);
        assert_eq!(tree.sample(0.0), 0);
        assert_eq!(tree.sample(0.999), 0);
        assert_eq!(tree.sample(1.0), 2);
        assert_eq!(tree.sample(2.999), 2);
        assert_eq!(tree.sample(3.0), 3);
        assert_eq!(tree.sample(6.2), 4);
        assert_eq!(tree.sample(7.0), 4);
    }

    #[test]
    fn zero_mass_on_the_right_is_never_chosen() {
        let tree = RateTree::new(&[1.0, 2.0, 0.0, 0.0]);
        assert_eq!(tree.sample(3.0 + 1e-9), 1);
        let single = RateTree::new(&[0.0]);
        assert_eq!(single.sample(0.3), 0);
    }

    #[derive(Debug, Clone)]
    enum Op {
        Add(usize, usize, f64),
        Set(usize, f64),
    }

    fn ops(n: usize) -> impl Strategy<Value = Vec<Op>> {
        prop::collection::vec(
            prop_oneof![
                (0..n, 0..=n, 0.0..5.0f64).prop_map(|(a, b, v)| Op::Add(a.min(b), a.max(b), v)),
                (0..n, 0.0..5.0f64).prop_map(|(i, v)| Op::Set(i, v)),
            ],
            0..60,
        )
    }

    proptest! {
        #[test]
        fn matches_naive_array(
            (init, script) in (1usize..40).prop_flat_map(|n| (prop::collection::vec(0.0..3.0f64, n), ops(n))),
            probe in 0.0..1.0f64,
        ) {
            let mut naive = init.clone();
            let mut tree = RateTree::new(&init);
            for op in script {
                match op {
                    Op::Add(a, b, v) => {
                        tree.range_add(a, b, v);
                        naive[a..b].iter_mut().for_each(|x| *x += v);
                    }
                    Op::Set(i, v) => {
                        tree.set(i, v);
                        naive[i] = v;
                    }
                }
            }
            let total: f64 = naive.iter().sum();
            prop_assert!((tree.total() - total).abs() <= 1e-9 * (1.0 + total));
            let mat = tree.materialize();
            for (i, v) in naive.iter().enumerate() {
                prop_assert!((tree.get(i) - v).abs() < 1e-9);
                prop_assert!((mat[i] - v).abs() < 1e-9);
            }
            if total > 0.0 {
                let u = probe * total;
                let chosen = tree.sample(u);
                let below: f64 = naive[..chosen].iter().sum();
                prop_assert!(naive[chosen] > 0.0);
                prop_assert!(below <= u + 1e-9 && u < below + naive[chosen] + 1e-9);
            }
        }
    }
}
