//! Diluted W-random interaction graphs and their concentration diagnostics.
//!
//! Neuron `i` (0-based) sits at `x_i = (i + 1)/N` and owns the cell
//! `B_i = (i/N, (i + 1)/N)`. The edge `j → i` (spikes of `j` excite `i`) is
//! present with probability `ρ · W(x_i, x_j)`, independently over all ordered
//! pairs, self-loops included. Each source stores its targets as sorted,
//! maximal runs of consecutive indices, so the simulator can deliver a spike
//! to a whole block of targets with one range update.

use std::io::{BufRead, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::kernels::SpatialKernel;
use crate::rng::{self, Domain};

/// Position of neuron `i` (0-based) among `n`.
#[inline]
pub fn position(i: usize, n: usize) -> f64 {
    (i + 1) as f64 / n as f64
}

/// Half-open run `[start, end)` of target indices.
pub type Run = (u32, u32);

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionGraph {
    n: usize,
    rho: f64,
    seed: u64,
    kernel_digest: String,
    offsets: Vec<usize>,
    runs: Vec<Run>,
    in_degrees: Vec<u32>,
    out_degrees: Vec<u32>,
}

pub fn sample_graph(n: usize, rho: f64, w: &SpatialKernel, seed: u64) -> Result<InteractionGraph> {
    if n == 0 {
        return Err(invalid("graph needs at least one neuron"));
    }
    if n > u32::MAX as usize {
        return Err(invalid("graph size exceeds u32 indices"));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(invalid(format!("dilution must lie in (0, 1], got {rho}")));
    }
    if rho * w.sup() > 1.0 + 1e-12 {
        return Err(invalid(format!(
            "edge probabilities rho * W reach {} > 1",
            rho * w.sup()
        )));
    }
    let positions: Vec<f64> = (0..n).map(|i| position(i, n)).collect();
    let per_source: Vec<Vec<Run>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut rng = rng::stream(seed, Domain::Graph, j as u64);
            let xj = positions[j];
            let mut runs = Vec::new();
            let mut open: Option<u32> = None;
            for (i, &xi) in positions.iter().enumerate() {
                let p = rho * w.value(xi, xj);
                let edge = rng.random::<f64>() < p;
                match (edge, open) {
                    (true, None) => open = Some(i as u32),
                    (false, Some(start)) => {
                        runs.push((start, i as u32));
                        open = None;
                    }
                    _ => {}
                }
            }
            if let Some(start) = open {
                runs.push((start, n as u32));
            }
            runs
        })
        .collect();
    Ok(InteractionGraph::from_runs(n, rho, seed, w.digest(), per_source))
}

impl InteractionGraph {
    fn from_runs(n: usize, rho: f64, seed: u64, kernel_digest: String, per_source: Vec<Vec<Run>>) -> Self {
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut runs = Vec::with_capacity(per_source.iter().map(Vec::len).sum());
        let mut out_degrees = Vec::with_capacity(n);
        let mut in_diff = vec![0i64; n + 1];
        for source in per_source {
            let mut deg = 0u32;
            for &(a, b) in &source {
                deg += b - a;
                in_diff[a as usize] += 1;
                in_diff[b as usize] -= 1;
            }
            out_degrees.push(deg);
            runs.extend(source);
            offsets.push(runs.len());
        }
        let mut acc = 0i64;
        let in_degrees = in_diff[..n]
            .iter()
            .map(|d| {
                acc += d;
                acc as u32
            })
            .collect();
        Self {
            n,
            rho,
            seed,
            kernel_digest,
            offsets,
            runs,
            in_degrees,
            out_degrees,
        }
    }

    /// Builds a graph from explicit `(source, target)` edges.
    pub fn from_edges(n: usize, rho: f64, seed: u64, kernel_digest: String, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 || !(rho > 0.0 && rho <= 1.0) {
            return Err(invalid("graph needs n >= 1 and rho in (0, 1]"));
        }
        let mut targets: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(j, i) in edges {
            if j >= n || i >= n {
                return Err(invalid(format!("edge {j} -> {i} out of range for n = {n}")));
            }
            targets[j].push(i as u32);
        }
        let per_source = targets
            .into_iter()
            .map(|mut t| {
                t.sort_unstable();
                t.dedup();
                let mut runs: Vec<Run> = Vec::new();
                for i in t {
                    match runs.last_mut() {
                        Some(last) if last.1 == i => last.1 = i + 1,
                        _ => runs.push((i, i + 1)),
                    }
                }
                runs
            })
            .collect();
        Ok(Self::from_runs(n, rho, seed, kernel_digest, per_source))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kernel_digest(&self) -> &str {
        &self.kernel_digest
    }

    /// Per-edge interaction weight `1/(Nρ)`.
    pub fn weight(&self) -> f64 {
        1.0 / (self.n as f64 * self.rho)
    }

    pub fn out_runs(&self, j: usize) -> &[Run] {
        &self.runs[self.offsets[j]..self.offsets[j + 1]]
    }

    /// Targets of `j` in increasing order.
    pub fn out_neighbors(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.out_runs(j)
            .iter()
            .flat_map(|&(a, b)| (a as usize)..(b as usize))
    }

    pub fn has_edge(&self, j: usize, i: usize) -> bool {
        let runs = self.out_runs(j);
        let k = runs.partition_point(|&(_, end)| end as usize <= i);
        k < runs.len() && runs[k].0 as usize <= i
    }

    pub fn in_degrees(&self) -> &[u32] {
        &self.in_degrees
    }

    pub fn out_degrees(&self) -> &[u32] {
        &self.out_degrees
    }

    pub fn edge_count(&self) -> u64 {
        self.out_degrees.iter().map(|&d| d as u64).sum()
    }

    pub fn run_count(&self) -> usize {
        self.runs.len()
    }

    /// `(A v)_i = Σ_j (w_ij / N) v_j` with `w_ij = ξ_ij / ρ`, in
    /// `O(N + runs)`.
    pub fn apply_adjacency(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "vector length must equal the graph size");
        let mut diff = vec![0.0; self.n + 1];
        for (j, &vj) in v.iter().enumerate() {
            if vj == 0.0 {
                continue;
            }
            for &(a, b) in self.out_runs(j) {
                diff[a as usize] += vj;
                diff[b as usize] -= vj;
            }
        }
        let w = self.weight();
        let mut acc = 0.0;
        diff[..self.n]
            .iter()
            .map(|d| {
                acc += d;
                acc * w
            })
            .collect()
    }

    /// Writes the text edge list: one header line, then `j i` per edge,
    /// sorted by source then target.
    pub fn write_edge_list(&self, mut out: impl Write) -> Result<()> {
        writeln!(
            out,
            "# graphon-hawkes edges n={} rho={} seed={} kernel={} edges={}",
            self.n,
            self.rho,
            self.seed,
            self.kernel_digest,
            self.edge_count()
        )?;
        for j in 0..self.n {
            for i in self.out_neighbors(j) {
                writeln!(out, "{j} {i}")?;
            }
        }
        Ok(())
    }

    pub fn read_edge_list(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty edge list".into()))??;
        let field = |key: &str| -> Result<String> {
            header
                .split_whitespace()
                .find_map(|tok| tok.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .map(str::to_owned)
                .ok_or_else(|| Error::Config(format!("edge list header lacks `{key}`")))
        };
        let parse_err = |key: &str| Error::Config(format!("edge list header has a malformed `{key}`"));
        let n: usize = field("n")?.parse().map_err(|_| parse_err("n"))?;
        let rho: f64 = field("rho")?.parse().map_err(|_| parse_err("rho"))?;
        let seed: u64 = field("seed")?.parse().map_err(|_| parse_err("seed"))?;
        let digest = field("kernel")?;
        let declared: u64 = field("edges")?.parse().map_err(|_| parse_err("edges"))?;
        let mut edges = Vec::with_capacity(declared as usize);
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace().map(str::parse::<usize>);
            match (parts.next(), parts.next()) {
                (Some(Ok(j)), Some(Ok(i))) => edges.push((j, i)),
                _ => return Err(Error::Config(format!("edge list line {} is malformed", lineno + 2))),
            }
        }
        let graph = Self::from_edges(n, rho, seed, digest, &edges)?;
        if graph.edge_count() != declared {
            return Err(Error::Config(format!(
                "edge list declares {declared} edges but contains {}",
                graph.edge_count()
            )));
        }
        Ok(graph)
    }
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeConcentration {
    /// `sup_i Σ_j ξ_ij / (Nρ)`.
    pub max_norm_in: f64,
    /// `sup_j Σ_i ξ_ij / (Nρ)`.
    pub max_norm_out: f64,
}

pub fn degree_concentration(g: &InteractionGraph) -> DegreeConcentration {
    let w = g.weight();
    let max = |d: &[u32]| d.iter().copied().max().unwrap_or(0) as f64 * w;
    DegreeConcentration {
        max_norm_in: max(g.in_degrees()),
        max_norm_out: max(g.out_degrees()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmaxReport {
    /// Largest `|S_jj'|` over the evaluated pairs.
    pub s_max: f64,
    /// Reference bound `N^{τ − 1/2}`.
    pub bound: f64,
    pub pairs: u64,
    pub exact: bool,
}

/// Default number of sampled pairs for [`s_max_statistic`].
pub const DEFAULT_PAIR_BUDGET: u64 = 100_000;

/// Maximum over pairs `j ≠ j'` of
/// `S_jj' = (1/N) Σ_i (ξ_ij − ρW(x_i,x_j))(ξ_ij' − ρW(x_i,x_j'))`.
///
/// All pairs are enumerated (through one dense Gram product) when
/// `pair_budget ≥ N(N−1)/2`; otherwise `pair_budget` pairs are drawn
/// uniformly from a stream tied to the graph seed.
pub fn s_max_statistic(g: &InteractionGraph, w: &SpatialKernel, tau: f64, pair_budget: u64) -> Result<SmaxReport> {
    let n = g.n();
    if n < 2 {
        return Err(invalid("the pair statistic needs at least two neurons"));
    }
    if pair_budget == 0 {
        return Err(invalid("pair budget must be at least one"));
    }
    let total_pairs = (n as u64) * (n as u64 - 1) / 2;
    let bound = (n as f64).powf(tau - 0.5);
    let rho = g.rho();
    let column = |j: usize, out: &mut [f64]| {
        let xj = position(j, n);
        for (i, v) in out.iter_mut().enumerate() {
            *v = -rho * w.value(position(i, n), xj);
        }
        for i in g.out_neighbors(j) {
            out[i] += 1.0;
        }
    };

    if pair_budget >= total_pairs {
        // centered[i * n + j] = ξ_ij − ρ W(x_i, x_j)
        let mut centered = vec![0.0; n * n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            column(j, &mut col);
            for (i, v) in col.iter().enumerate() {
                centered[i * n + j] = *v;
            }
        }
        let mut gram = vec![0.0; n * n];
        // gram = centeredᵀ · centered
        unsafe {
            matrixmultiply::dgemm(
                n, n, n, 1.0,
                centered.as_ptr(), 1, n as isize,
                centered.as_ptr(), n as isize, 1,
                0.0,
                gram.as_mut_ptr(), n as isize, 1,
            );
        }
        let mut s_max = 0.0_f64;
        for j in 0..n {
            for k in (j + 1)..n {
                s_max = s_max.max(gram[j * n + k].abs());
            }
        }
        return Ok(SmaxReport {
            s_max: s_max / n as f64,
            bound,
            pairs: total_pairs,
            exact: true,
        });
    }

    let mut rng = rng::stream(g.seed(), Domain::PairSampling, 0);
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut s_max = 0.0_f64;
    for _ in 0..pair_budget {
        let j = rng.random_range(0..n);
        let mut k = rng.random_range(0..n - 1);
        if k >= j {
            k += 1;
        }
        column(j, &mut a);
        column(k, &mut b);
        let s: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / n as f64;
        s_max = s_max.max(s.abs());
    }
    Ok(SmaxReport {
        s_max,
        bound,
        pairs: pair_budget,
        exact: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Warn,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DilutionReport {
    /// `N^{1−2τ} ρ⁴`.
    pub general: f64,
    /// `N ρ²`, the weaker requirement for bounded `F`.
    pub bounded: f64,
    pub verdict: Verdict,
}

pub const DEFAULT_DILUTION_FLOOR: f64 = 10.0;

/// Finite-size proxy for the dilution condition; warns when the relevant
/// quantity is below `floor`.
pub fn dilution_report(n: usize, rho: f64, tau: f64, f_bounded: bool, floor: f64) -> Result<DilutionReport> {
    if !(tau > 0.0 && tau < 0.5) {
        return Err(invalid(format!("tau must lie in (0, 1/2), got {tau}")));
    }
    let nf = n as f64;
    let general = nf.powf(1.0 - 2.0 * tau) * rho.powi(4);
    let bounded = nf * rho * rho;
    let value = if f_bounded { bounded } else { general };
    Ok(DilutionReport {
        general,
        bounded,
        verdict: if value >= floor { Verdict::Pass } else { Verdict::Warn },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularitySums {
    pub r1: f64,
    pub r2: f64,
    pub s: f64,
}

/// Deterministic kernel-regularity sums
/// `R_k = (1/N) Σ_{i,j} ∫_{B_j} |W(x_i,x_j) − W(x_i,y)|^k dy` and
/// `S = Σ_i ∫_{B_i} ∫_I |W(x_i,y) − W(x,y)|² dy dx`,
/// by midpoint quadrature with `cell_points` nodes per cell (and
/// `inner_points` nodes for the inner integral over I).
pub fn kernel_regularity(w: &SpatialKernel, n: usize, cell_points: usize, inner_points: usize) -> RegularitySums {
    let nf = n as f64;
    let q = cell_points.max(1);
    let cell = |j: usize, k: usize| (j as f64 + (k as f64 + 0.5) / q as f64) / nf;
    let (r1, r2) = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = position(i, n);
            let mut acc = (0.0, 0.0);
            for j in 0..n {
                let wij = w.value(xi, position(j, n));
                for k in 0..q {
                    let d = (wij - w.value(xi, cell(j, k))).abs();
                    acc.0 += d;
                    acc.1 += d * d;
                }
            }
            acc
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let per_cell = 1.0 / (nf * q as f64);
    let m = inner_points.max(1);
    let ys: Vec<f64> = (0..m).map(|k| (k as f64 + 0.5) / m as f64).collect();
    let s: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = position(i, n);
            let row: Vec<f64> = ys.iter().map(|&y| w.value(xi, y)).collect();
            (0..q)
                .map(|k| {
                    let x = cell(i, k);
                    ys.iter()
                        .zip(&row)
                        .map(|(&y, &wi)| {
                            let d = wi - w.value(x, y);
                            d * d
                        })
                        .sum::<f64>()
                        / m as f64
                })
                .sum::<f64>()
        })
        .sum();
    RegularitySums {
        r1: r1 * per_cell / nf,
        r2: r2 * per_cell / nf,
        s: s * per_cell,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::SpatialFunction;

    #[test]
    fn complete_and_empty_graphs() {
        let full = sample_graph(5, 1.0, &SpatialKernel::constant(1.0).unwrap(), 3).unwrap();
        assert_eq!(full.edge_count(), 25);
        assert!(full.has_edge(2, 2));
        assert_eq!(full.run_count(), 5);
        let dc = degree_concentration(&full);
        assert_eq!((dc.max_norm_in, dc.max_norm_out), (1.0, 1.0));

        let empty = sample_graph(5, 1.0, &SpatialKernel::constant(0.0).unwrap(), 3).unwrap();
        assert_eq!(empty.edge_count(), 0);
        let dc = degree_concentration(&empty);
        assert_eq!((dc.max_norm_in, dc.max_norm_out), (0.0, 0.0));
    }

    #[test]
    fn invalid_dilution_is_rejected() {
        let w = SpatialKernel::constant(0.5).unwrap();
        assert!(sample_graph(10, 0.0, &w, 1).is_err());
        assert!(sample_graph(10, 1.5, &w, 1).is_err());
        assert!(sample_graph(0, 1.0, &w, 1).is_err());
        let steep = SpatialKernel::edd(
            SpatialFunction::polynomial(vec![0.0, 2.0]).unwrap(),
            SpatialFunction::Constant(1.0),
        )
        .unwrap();
        assert!(sample_graph(10, 1.0, &steep, 1).is_err());
        assert!(sample_graph(10, 0.5, &steep, 1).is_ok());
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let w = SpatialKernel::exp_distance(0.7).unwrap();
        let a = sample_graph(300, 0.8, &w, 11).unwrap();
        let b = sample_graph(300, 0.8, &w, 11).unwrap();
        let c = sample_graph(300, 0.8, &w, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn neighbor_lists_are_sorted_and_consistent() {
        let w = SpatialKernel::constant(0.3).unwrap();
        let g = sample_graph(200, 1.0, &w, 5).unwrap();
        let mut in_count = vec![0u32; 200];
        for j in 0..200 {
            let list: Vec<usize> = g.out_neighbors(j).collect();
            assert!(list.windows(2).all(|p| p[0] < p[1]));
            assert_eq!(list.len() as u32, g.out_degrees()[j]);
            for i in 0..200 {
                assert_eq!(g.has_edge(j, i), list.binary_search(&i).is_ok());
            }
            for &i in &list {
                in_count[i] += 1;
            }
        }
        assert_eq!(in_count, g.in_degrees());
        // runs are maximal
        for j in 0..200 {
            for p in g.out_runs(j).windows(2) {
                assert!(p[0].1 < p[1].0);
            }
        }
    }

    #[test]
    fn adjacency_product_matches_definition() {
        let w = SpatialKernel::p_nearest(0.2).unwrap();
        let g = sample_graph(60, 0.7, &w, 9).unwrap();
        let v: Vec<f64> = (0..60).map(|k| (k as f64 * 0.37).sin()).collect();
        let fast = g.apply_adjacency(&v);
        for (i, got) in fast.iter().enumerate() {
            let direct: f64 = (0..60)
                .filter(|&j| g.has_edge(j, i))
                .map(|j| v[j] / (60.0 * 0.7))
                .sum();
            assert!((got - direct).abs() < 1e-12);
        }
        // weight times in-degree is the normalized row sum
        let ones = g.apply_adjacency(&vec![1.0; 60]);
        for (one, &d) in ones.iter().zip(g.in_degrees()) {
            assert!((one - g.weight() * d as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let w = SpatialKernel::constant(0.4).unwrap();
        let g = sample_graph(40, 0.9, &w, 77).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# graphon-hawkes edges n=40 rho=0.9 seed=77"));
        let back = InteractionGraph::read_edge_list(buf.as_slice()).unwrap();
        assert_eq!(g, back);
        let truncated: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(InteractionGraph::read_edge_list(truncated.as_bytes()).is_err());
    }

    #[test]
    fn s_max_vanishes_on_deterministic_graphs() {
        let zero = SpatialKernel::constant(0.0).unwrap();
        let g = sample_graph(30, 1.0, &zero, 1).unwrap();
        assert_eq!(s_max_statistic(&g, &zero, 0.25, u64::MAX).unwrap().s_max, 0.0);
        let one = SpatialKernel::constant(1.0).unwrap();
        let g = sample_graph(30, 1.0, &one, 1).unwrap();
        let rep = s_max_statistic(&g, &one, 0.25, u64::MAX).unwrap();
        assert_eq!(rep.s_max, 0.0);
        assert!(rep.exact);
        assert!(s_max_statistic(&sample_graph(1, 1.0, &one, 1).unwrap(), &one, 0.25, 10).is_err());
    }

    #[test]
    fn exact_and_brute_force_s_max_agree() {
        let w = SpatialKernel::exp_distance(0.8).unwrap();
        let g = sample_graph(40, 0.9, &w, 4).unwrap();
        let exact = s_max_statistic(&g, &w, 0.25, u64::MAX).unwrap();
        let n = 40;
        let xi = |i: usize, j: usize| if g.has_edge(j, i) { 1.0 } else { 0.0 };
        let mut brute = 0.0_f64;
        for j in 0..n {
            for k in (j + 1)..n {
                let s: f64 = (0..n)
                    .map(|i| {
                        let x = position(i, n);
                        (xi(i, j) - 0.9 * w.value(x, position(j, n))) * (xi(i, k) - 0.9 * w.value(x, position(k, n)))
                    })
                    .sum::<f64>()
                    / n as f64;
                brute = brute.max(s.abs());
            }
        }
        assert!((exact.s_max - brute).abs() < 1e-12);
        let sampled = s_max_statistic(&g, &w, 0.25, 200).unwrap();
        assert!(!sampled.exact);
        assert!(sampled.s_max <= brute + 1e-12);
    }

    #[test]
    fn dilution_report_examples() {
        let r = dilution_report(10_000, 1.0, 0.25, false, DEFAULT_DILUTION_FLOOR).unwrap();
        assert!((r.general - 100.0).abs() < 1e-9);
        assert_eq!(r.verdict, Verdict::Pass);
        let r = dilution_report(10_000, 0.05, 0.25, false, DEFAULT_DILUTION_FLOOR).unwrap();
        assert!((r.general - 6.25e-4).abs() < 1e-15);
        assert_eq!(r.verdict, Verdict::Warn);
        let r = dilution_report(10_000, 0.05, 0.25, true, DEFAULT_DILUTION_FLOOR).unwrap();
        assert!((r.bounded - 25.0).abs() < 1e-9);
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(dilution_report(100, 1.0, 0.5, false, 10.0).is_err());
    }

    #[test]
    fn regularity_sums_vanish_for_constant_kernel() {
        let r = kernel_regularity(&SpatialKernel::constant(0.6).unwrap(), 50, 8, 64);
        assert_eq!((r.r1, r.r2, r.s), (0.0, 0.0, 0.0));
    }

    #[test]
    fn regularity_sums_for_linear_edd() {
        // W(x, y) = 2y: R_1 = 1/N exactly, R_2 = 4/(3N²), S = 0; the midpoint
        // rule with q nodes gives R_2 = 4(1/3 − 1/(12q²))/N² exactly
        let mid_sq = |q: f64| 4.0 * (1.0 / 3.0 - 1.0 / (12.0 * q * q));
        let w = SpatialKernel::edd(
            SpatialFunction::Constant(1.0),
            SpatialFunction::polynomial(vec![0.0, 2.0]).unwrap(),
        )
        .unwrap();
        for n in [25, 50, 100] {
            let r = kernel_regularity(&w, n, 16, 64);
            let nf = n as f64;
            assert!((r.r1 - 1.0 / nf).abs() < 1e-12, "{n}: {}", r.r1);
            assert!((r.r2 - mid_sq(16.0) / (nf * nf)).abs() < 1e-12 / (nf * nf));
            assert!(r.s.abs() < 1e-14);
        }
        // W(x, y) = 2x depends on x only: R vanishes, S = 4/(3N²)
        let w = SpatialKernel::edd(
            SpatialFunction::polynomial(vec![0.0, 2.0]).unwrap(),
            SpatialFunction::Constant(1.0),
        )
        .unwrap();
        let r = kernel_regularity(&w, 40, 32, 16);
        assert_eq!(r.r1, 0.0);
        assert!((r.s - mid_sq(32.0) / 1600.0).abs() < 1e-12);
    }
}
