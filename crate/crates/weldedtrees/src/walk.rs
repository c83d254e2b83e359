//! Grover walk over directed arcs.
//!
//! The walk lives on the space spanned by directed arcs `(u, v)` with `v` a
//! neighbor of `u`. One step applies `U = S C`: the coin `C` mixes the arcs
//! leaving each vertex with the Grover diffusion of matching degree, and the
//! shift `S` reverses every arc. Amplitudes stay real because the initial
//! state is real and both operators are real orthogonal matrices, so states
//! are plain `f64` vectors here.
//!
//! The production path is the two-pass recurrence kernel in
//! [`ArcState::step`]; [`dense_unitary`] builds the explicit matrix product
//! for cross-checking it on small instances.

use std::sync::Arc;

use thiserror::Error;

use crate::graph::{Vertex, WeldedTreesInstance};

/// Arc index space above the matrix dimension we allow for dense oracles.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("Grover operator undefined for degree 0")]
    DomainError,
    #[error("arc space of dimension {0} exceeds the dense-matrix limit {DENSE_LIMIT}")]
    SizeLimit(usize),
}

/// Base of the logarithm in the step-count bound `3.6 n log n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogBase {
    Two,
    Natural,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::Natural => x.ln(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LogBase::Two => "2",
            LogBase::Natural => "e",
        }
    }
}

/// Step range `[2n, ceil(3.6 n log n)]` scanned for the hitting time.
pub fn step_range(n: u32, base: LogBase) -> (u32, u32) {
    let hi = (3.6 * n as f64 * base.log(n as f64)).ceil() as u32;
    (2 * n, hi)
}

/// Diagonal and off-diagonal entries of the Grover diffusion on `d`
/// dimensions: `2/d - 1` and `2/d`.
pub fn grover_coeffs(d: usize) -> Result<(f64, f64), WalkError> {
    if d == 0 {
        return Err(WalkError::DomainError);
    }
    let off = 2.0 / d as f64;
    Ok((off - 1.0, off))
}

/// Arc-indexed view of a graph: CSR offsets plus the reverse-arc permutation.
#[derive(Clone, Debug)]
pub struct ArcSpace {
    offsets: Vec<u32>,
    rev: Vec<u32>,
    source: Vertex,
    target: Vertex,
}

impl ArcSpace {
    pub fn of_instance(inst: &WeldedTreesInstance) -> Self {
        let num_vertices = inst.num_vertices();
        let mut offsets = Vec::with_capacity(num_vertices + 1);
        offsets.push(0u32);
        for v in 0..num_vertices as Vertex {
            offsets.push(offsets[v as usize] + inst.degree(v) as u32);
        }
        let rev = (0..inst.num_arcs())
            .map(|a| inst.rev_arc(a) as u32)
            .collect();
        ArcSpace {
            offsets,
            rev,
            source: inst.source(),
            target: inst.target(),
        }
    }

    /// Arc space of an arbitrary undirected graph given as adjacency lists.
    pub fn from_adjacency(adj: &[Vec<Vertex>], source: Vertex, target: Vertex) -> Self {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        offsets.push(0u32);
        for list in adj {
            offsets.push(offsets.last().unwrap() + list.len() as u32);
        }
        let mut rev = vec![0u32; *offsets.last().unwrap() as usize];
        for (u, list) in adj.iter().enumerate() {
            for (slot, &v) in list.iter().enumerate() {
                let back = adj[v as usize]
                    .iter()
                    .position(|&w| w == u as Vertex)
                    .expect("adjacency must be symmetric");
                rev[offsets[u] as usize + slot] = offsets[v as usize] + back as u32;
            }
        }
        ArcSpace {
            offsets,
            rev,
            source,
            target,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_arcs(&self) -> usize {
        self.rev.len()
    }

    pub fn degree(&self, v: Vertex) -> usize {
        (self.offsets[v as usize + 1] - self.offsets[v as usize]) as usize
    }

    pub fn arc_range(&self, v: Vertex) -> std::ops::Range<usize> {
        self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize
    }

    pub fn rev(&self, a: usize) -> usize {
        self.rev[a] as usize
    }
}

/// Walk state: one real amplitude per directed arc, plus the step count.
#[derive(Clone, Debug)]
pub struct ArcState {
    space: Arc<ArcSpace>,
    amp: Vec<f64>,
    scratch: Vec<f64>,
    t: u32,
}

/// The walk's start state: `1/sqrt 2` on each arc leaving source.
pub fn initial_state(inst: &WeldedTreesInstance) -> ArcState {
    ArcState::initial(Arc::new(ArcSpace::of_instance(inst)))
}

impl ArcState {
    pub fn initial(space: Arc<ArcSpace>) -> Self {
        let mut amp = vec![0.0; space.num_arcs()];
        let range = space.arc_range(space.source);
        let value = 1.0 / (range.len() as f64).sqrt();
        for a in range {
            amp[a] = value;
        }
        let scratch = vec![0.0; amp.len()];
        ArcState {
            space,
            amp,
            scratch,
            t: 0,
        }
    }

    /// State with explicit amplitudes (tests and custom starts).
    pub fn with_amplitudes(space: Arc<ArcSpace>, amp: Vec<f64>) -> Self {
        assert_eq!(amp.len(), space.num_arcs());
        let scratch = vec![0.0; amp.len()];
        ArcState {
            space,
            amp,
            scratch,
            t: 0,
        }
    }

    pub fn space(&self) -> &ArcSpace {
        &self.space
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amp
    }

    /// One application of `U = S C` via the arc recurrence
    /// `amp'(u, v) = (2/deg v) * sum_w amp(v, w) - amp(v, u)`.
    pub fn step(&mut self) {
        let space = &self.space;
        // Coin pass: diffusion within each vertex's outgoing arcs.
        for v in 0..space.num_vertices() as Vertex {
            let range = space.arc_range(v);
            let scale = 2.0 / range.len() as f64;
            let total: f64 = self.amp[range.clone()].iter().sum();
            for a in range {
                self.scratch[a] = scale * total - self.amp[a];
            }
        }
        // Shift pass: transport every arc's coined amplitude to its reverse.
        for a in 0..space.num_arcs() {
            self.amp[a] = self.scratch[space.rev(a)];
        }
        self.t += 1;
    }

    /// Advance to step `t` (no-op if already there or past).
    pub fn run_to(&mut self, t: u32) {
        while self.t < t {
            self.step();
        }
    }

    /// Probability mass on the arcs leaving target.
    pub fn hit_probability(&self) -> f64 {
        self.space
            .arc_range(self.space.target)
            .map(|a| self.amp[a] * self.amp[a])
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amp.iter().map(|x| x * x).sum()
    }
}

/// Result of scanning `p(T)` over a step range.
#[derive(Clone, Debug)]
pub struct SweepResult {
    /// `(T, p(T))` for every `T` in the requested range.
    pub entries: Vec<(u32, f64)>,
    /// Smallest `T` with `p(T) > 1/(20n)`, if any.
    pub t_hat: Option<u32>,
    /// `T` maximizing `p(T)`; ties break toward smaller `T`.
    pub argmax: Option<u32>,
    /// The threshold `1/(20n)` used for `t_hat`.
    pub threshold: f64,
}

/// Record `p(T)` for every `T` in `[t_min, t_max]` along a single trajectory.
pub fn sweep_t(inst: &WeldedTreesInstance, t_min: u32, t_max: u32) -> SweepResult {
    assert!(t_min <= t_max, "sweep range must be ordered");
    let threshold = 1.0 / (20.0 * inst.n() as f64);
    let mut state = initial_state(inst);
    state.run_to(t_min);
    let mut entries = Vec::with_capacity((t_max - t_min + 1) as usize);
    for t in t_min..=t_max {
        state.run_to(t);
        entries.push((t, state.hit_probability()));
    }
    let t_hat = entries.iter().find(|&&(_, p)| p > threshold).map(|e| e.0);
    let argmax = entries
        .iter()
        .fold(None::<(u32, f64)>, |best, &(t, p)| match best {
            Some((_, bp)) if p <= bp => best,
            _ => Some((t, p)),
        })
        .map(|e| e.0);
    SweepResult {
        entries,
        t_hat,
        argmax,
        threshold,
    }
}

/// Dense square matrix over the arc basis, row-major.
#[derive(Clone, Debug)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        DenseMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, other.dim);
        let mut out = DenseMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for k in 0..self.dim {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..self.dim {
                    out.data[i * self.dim + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| self.get(i, j) * v[j])
                    .sum()
            })
            .collect()
    }

    /// Largest absolute entry of `self^T self - I`.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let dot: f64 = (0..self.dim)
                    .map(|k| self.get(k, i) * self.get(k, j))
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - expect).abs());
            }
        }
        worst
    }
}

fn check_dense_size(inst: &WeldedTreesInstance) -> Result<(), WalkError> {
    if inst.num_arcs() > DENSE_LIMIT {
        return Err(WalkError::SizeLimit(inst.num_arcs()));
    }
    Ok(())
}

/// The coin operator `C` as an explicit matrix: one Grover block per vertex.
pub fn dense_coin(inst: &WeldedTreesInstance) -> Result<DenseMatrix, WalkError> {
    check_dense_size(inst)?;
    let mut coin = DenseMatrix::zeros(inst.num_arcs());
    for u in 0..inst.num_vertices() as Vertex {
        let range = inst.arc_range(u);
        let (diag, off) = grover_coeffs(range.len()).expect("positive degree");
        for col in range.clone() {
            for row in range.clone() {
                coin.set(row, col, if row == col { diag } else { off });
            }
        }
    }
    Ok(coin)
}

/// The shift operator `S` as an explicit matrix: the reverse-arc permutation.
pub fn dense_shift(inst: &WeldedTreesInstance) -> Result<DenseMatrix, WalkError> {
    check_dense_size(inst)?;
    let mut shift = DenseMatrix::zeros(inst.num_arcs());
    for a in 0..inst.num_arcs() {
        shift.set(inst.rev_arc(a), a, 1.0);
    }
    Ok(shift)
}

/// The full evolution operator `U = S C`, built from the explicit matrices.
/// Verification oracle for the recurrence kernel; limited to small instances.
pub fn dense_unitary(inst: &WeldedTreesInstance) -> Result<DenseMatrix, WalkError> {
    Ok(dense_shift(inst)?.matmul(&dense_coin(inst)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_instance;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn grover_coeff_values() {
        assert_eq!(grover_coeffs(2).unwrap(), (0.0, 1.0));
        let (diag, off) = grover_coeffs(3).unwrap();
        assert!((diag + 1.0 / 3.0).abs() < 1e-15);
        assert!((off - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(grover_coeffs(1).unwrap(), (1.0, 2.0));
        assert!(matches!(grover_coeffs(0), Err(WalkError::DomainError)));
    }

    #[test]
    fn initial_state_shape() {
        let inst = build_instance(3, 1).unwrap();
        let state = initial_state(&inst);
        assert!((state.norm_sq() - 1.0).abs() < 1e-15);
        assert_eq!(state.hit_probability(), 0.0);
        let nonzero = state.amplitudes().iter().filter(|&&a| a != 0.0).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn step_on_two_vertex_path_swaps_arcs() {
        // Two degree-1 vertices: the coin is the identity, so one step is the
        // bare arc reversal.
        let adj = vec![vec![1], vec![0]];
        let space = Arc::new(ArcSpace::from_adjacency(&adj, 0, 1));
        let mut state = ArcState::with_amplitudes(space, vec![0.8, 0.6]);
        state.step();
        assert_eq!(state.amplitudes(), &[0.6, 0.8]);
    }

    #[test]
    fn norm_preserved_over_many_steps() {
        let inst = build_instance(3, 5).unwrap();
        let mut state = initial_state(&inst);
        for _ in 0..1000 {
            state.step();
            assert!((state.norm_sq() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn dense_unitary_is_orthogonal_and_sized() {
        let inst = build_instance(1, 2).unwrap();
        let u = dense_unitary(&inst).unwrap();
        assert_eq!(u.dim(), inst.num_arcs());
        assert!(u.orthogonality_defect() < 1e-12);
    }

    #[test]
    fn dense_rejects_large_instances() {
        let inst = build_instance(10, 2).unwrap();
        assert!(matches!(
            dense_unitary(&inst),
            Err(WalkError::SizeLimit(_))
        ));
    }

    #[test]
    fn coin_columns_hold_grover_coefficients() {
        let inst = build_instance(1, 4).unwrap();
        let coin = dense_coin(&inst).unwrap();
        for u in 0..inst.num_vertices() as Vertex {
            let (diag, off) = grover_coeffs(inst.degree(u)).unwrap();
            for col in inst.arc_range(u) {
                let mut nonzeros = 0;
                for row in 0..coin.dim() {
                    let value = coin.get(row, col);
                    if value != 0.0 {
                        nonzeros += 1;
                        let expect = if row == col { diag } else { off };
                        assert!((value - expect).abs() < 1e-15);
                    }
                }
                // The degree-2 diagonal is exactly zero, hence one fewer
                // stored nonzero than the block size.
                let expect_nonzeros = if inst.degree(u) == 2 {
                    2 - 1
                } else {
                    inst.degree(u)
                };
                assert_eq!(nonzeros, expect_nonzeros);
            }
        }
    }

    #[test]
    fn recurrence_matches_dense_evolution() {
        let inst = build_instance(1, 6).unwrap();
        let u = dense_unitary(&inst).unwrap();
        let mut state = initial_state(&inst);
        let mut dense_vec = state.amplitudes().to_vec();
        for _ in 0..2 {
            state.step();
            dense_vec = u.matvec(&dense_vec);
        }
        assert!(max_abs_diff(state.amplitudes(), &dense_vec) < 1e-12);
    }

    #[test]
    fn hit_probability_against_dense_and_extremes() {
        let inst = build_instance(2, 3).unwrap();
        let u = dense_unitary(&inst).unwrap();
        let mut state = initial_state(&inst);
        let mut dense_vec = state.amplitudes().to_vec();
        for _ in 0..4 {
            state.step();
            dense_vec = u.matvec(&dense_vec);
        }
        let dense_p: f64 = inst
            .arc_range(inst.target())
            .map(|a| dense_vec[a] * dense_vec[a])
            .sum();
        assert!((state.hit_probability() - dense_p).abs() < 1e-12);

        // All mass on one target arc.
        let space = Arc::new(ArcSpace::of_instance(&inst));
        let mut amp = vec![0.0; inst.num_arcs()];
        amp[inst.arc_range(inst.target()).start] = 1.0;
        let loaded = ArcState::with_amplitudes(space, amp);
        assert_eq!(loaded.hit_probability(), 1.0);
    }

    #[test]
    fn sweep_degenerate_range() {
        let inst = build_instance(2, 3).unwrap();
        let sweep = sweep_t(&inst, 0, 0);
        assert_eq!(sweep.entries, vec![(0, 0.0)]);
        assert_eq!(sweep.argmax, Some(0));
        assert_eq!(sweep.t_hat, None);
    }

    #[test]
    fn sweep_matches_dense_powers() {
        let inst = build_instance(2, 9).unwrap();
        let u = dense_unitary(&inst).unwrap();
        let sweep = sweep_t(&inst, 0, 20);
        let mut dense_vec = initial_state(&inst).amplitudes().to_vec();
        for (t, p) in sweep.entries {
            let dense_p: f64 = inst
                .arc_range(inst.target())
                .map(|a| dense_vec[a] * dense_vec[a])
                .sum();
            assert!((p - dense_p).abs() < 1e-12, "mismatch at T={t}");
            dense_vec = u.matvec(&dense_vec);
        }
    }

    #[test]
    fn crossing_found_at_n4() {
        let inst = build_instance(4, 13).unwrap();
        let (lo, hi) = step_range(4, LogBase::Two);
        assert_eq!((lo, hi), (8, 29));
        let sweep = sweep_t(&inst, lo, hi);
        assert!(sweep.t_hat.is_some(), "no T with p(T) > 1/80 in range");
    }

    #[test]
    fn walk_ignores_weld_and_port_randomness() {
        let (lo, hi) = step_range(4, LogBase::Two);
        let reference: Vec<f64> = sweep_t(&build_instance(4, 0).unwrap(), lo, hi)
            .entries
            .into_iter()
            .map(|(_, p)| p)
            .collect();
        for seed in 1..=5 {
            let other: Vec<f64> = sweep_t(&build_instance(4, seed).unwrap(), lo, hi)
                .entries
                .into_iter()
                .map(|(_, p)| p)
                .collect();
            let diff = max_abs_diff(&reference, &other);
            assert!(diff < 1e-9, "p-curve differs across seeds by {diff}");
        }
    }
}
