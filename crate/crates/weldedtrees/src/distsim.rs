//! Round-based distributed simulation with exact message-complexity ledgers.
//!
//! Every node `u` owns an emission register `E(u -> v)` and a reception
//! register `R(u <- v)` per neighbor `v`; a round is a local operation on each
//! node's registers followed by delivery, which swaps `E(u -> v)` with
//! `R(v <- u)` across every edge. Registers hold either the payload or the
//! empty marker, and empty registers cost nothing to send.
//!
//! The walk-based routing algorithm keeps the network in a superposition of
//! configurations that each have the payload in exactly one register, so the
//! simulator tracks one amplitude per payload location instead of
//! materializing payload contents; the payload width `b` enters only the
//! ledger, at `b + 1` qubits per register (payload plus the empty-marker flag
//! dimension).
//!
//! Two backends compute the same distribution: [`run_distqwalk_register`]
//! simulates the registers and delivery swaps literally, while
//! [`run_distqwalk_fast`] reuses the arc recurrence of [`crate::walk`] and
//! scales to large instances. [`run_traversal`] wraps either in the retry
//! schedule that amplifies the success probability to `1 - epsilon`.

use rand::RngExt;

use crate::graph::WeldedTreesInstance;
use crate::rng::SplitRng;
use crate::walk::{self, LogBase};

/// What a ledger is counting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LedgerMode {
    /// Sum of bits sent per round (a single deterministic configuration).
    ClassicalBits,
    /// Max over superposed configurations of the qubits sent per round.
    Qubits,
}

/// Per-round and cumulative message costs.
#[derive(Clone, Debug)]
pub struct RoundLedger {
    mode: LedgerMode,
    per_round: Vec<u64>,
    total: u64,
}

impl RoundLedger {
    pub fn new(mode: LedgerMode) -> Self {
        RoundLedger {
            mode,
            per_round: Vec::new(),
            total: 0,
        }
    }

    pub fn mode(&self) -> LedgerMode {
        self.mode
    }

    pub fn push_round(&mut self, cost: u64) {
        self.per_round.push(cost);
        self.total += cost;
    }

    pub fn rounds(&self) -> usize {
        self.per_round.len()
    }

    pub fn per_round(&self) -> &[u64] {
        &self.per_round
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// A classical basis configuration at send time, reduced to what the ledger
/// needs: the sizes of its loaded (non-empty) emission registers.
#[derive(Clone, Debug, Default)]
pub struct Configuration {
    pub emission_bits: Vec<u64>,
}

/// Quantum cost of one round: the maximum over nonzero-amplitude
/// configurations of the total size of their loaded emission registers.
pub fn account_round<I>(configs: I) -> u64
where
    I: IntoIterator<Item = Configuration>,
{
    configs
        .into_iter()
        .map(|c| c.emission_bits.iter().sum::<u64>())
        .max()
        .unwrap_or(0)
}

/// Outcome of one algorithm run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    pub success: bool,
    /// Network rounds executed (summed over calls for the retry schedule).
    pub rounds: u64,
    /// Qubits sent (or bits, for classical ledgers).
    pub total_cost: u64,
    /// Number of walk invocations executed.
    pub calls: u64,
}

/// Register-level state of the walk algorithm: one amplitude per payload
/// location. Locations `0..A` are the reception registers (`R(u <- v)` at the
/// arc `(u, v)` index), locations `A..2A` the emission registers.
#[derive(Clone, Debug)]
pub struct RegisterConfigState<'g> {
    inst: &'g WeldedTreesInstance,
    payload_bits: u64,
    amp: Vec<f64>,
    round: u32,
}

impl<'g> RegisterConfigState<'g> {
    /// The algorithm's initial state: the payload split `1/sqrt 2` between
    /// source's two reception registers, every other register empty.
    pub fn new(inst: &'g WeldedTreesInstance, payload_bits: u64) -> Self {
        assert!(payload_bits >= 1, "payload must have at least one bit");
        let arcs = inst.num_arcs();
        let mut amp = vec![0.0; 2 * arcs];
        let range = inst.arc_range(inst.source());
        let value = 1.0 / (range.len() as f64).sqrt();
        for a in range {
            amp[a] = value;
        }
        RegisterConfigState {
            inst,
            payload_bits,
            amp,
            round: 0,
        }
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn payload_bits(&self) -> u64 {
        self.payload_bits
    }

    /// Amplitudes over reception-register locations, indexed like arcs.
    pub fn reception_amps(&self) -> &[f64] {
        &self.amp[..self.inst.num_arcs()]
    }

    /// Amplitudes over emission-register locations, indexed like arcs.
    pub fn emission_amps(&self) -> &[f64] {
        &self.amp[self.inst.num_arcs()..]
    }

    pub fn norm_sq(&self) -> f64 {
        self.amp.iter().map(|x| x * x).sum()
    }

    /// One full round: per-node diffusion over reception registers, the local
    /// emission/reception swap, ledger accounting at send time, then the
    /// delivery swap across every edge.
    pub fn run_round(&mut self, ledger: &mut RoundLedger) {
        let inst = self.inst;
        let arcs = inst.num_arcs();
        // Diffusion: within each node's reception registers, the payload
        // location mixes with coefficients 2/d (moved) and 2/d - 1 (stays).
        for u in 0..inst.num_vertices() as u32 {
            let range = inst.arc_range(u);
            let scale = 2.0 / range.len() as f64;
            let total: f64 = self.amp[range.clone()].iter().sum();
            for a in range {
                self.amp[a] = scale * total - self.amp[a];
            }
        }
        // Local swap E(u -> v) <-> R(u <- v).
        for a in 0..arcs {
            self.amp.swap(a, arcs + a);
        }
        // Send time: charge the round. Every nonzero-amplitude configuration
        // holds the payload in exactly one emission register of b+1 qubits.
        let register_qubits = self.payload_bits + 1;
        let cost = account_round(
            self.amp[arcs..]
                .iter()
                .filter(|&&amp| amp != 0.0)
                .map(|_| Configuration {
                    emission_bits: vec![register_qubits],
                })
                .collect::<Vec<_>>(),
        );
        ledger.push_round(cost);
        // Delivery: E(u -> v) swaps with R(v <- u); the location pairs are
        // disjoint, so swapping in place over all arcs is exact.
        for a in 0..arcs {
            self.amp.swap(arcs + a, inst.rev_arc(a));
        }
        self.round += 1;
    }

    /// Probability that measuring target's reception registers finds the
    /// payload.
    pub fn success_probability(&self) -> f64 {
        self.inst
            .arc_range(self.inst.target())
            .map(|a| self.amp[a] * self.amp[a])
            .sum()
    }

    /// Sample the measurement at target: `Some(arc index)` of the reception
    /// register that holds the payload on success, `None` on failure.
    pub fn sample_target_register(&self, rng: &mut SplitRng) -> Option<usize> {
        let mut draw: f64 = rng.random();
        for a in self.inst.arc_range(self.inst.target()) {
            let weight = self.amp[a] * self.amp[a];
            if draw < weight {
                return Some(a);
            }
            draw -= weight;
        }
        None
    }
}

/// Run the walk algorithm for `t_steps` rounds on the literal register
/// simulation and measure at target.
pub fn run_distqwalk_register(
    inst: &WeldedTreesInstance,
    t_steps: u32,
    payload_bits: u64,
    rng: &mut SplitRng,
) -> RunOutcome {
    let mut state = RegisterConfigState::new(inst, payload_bits);
    let mut ledger = RoundLedger::new(LedgerMode::Qubits);
    for _ in 0..t_steps {
        state.run_round(&mut ledger);
    }
    let success = state.sample_target_register(rng).is_some();
    RunOutcome {
        success,
        rounds: t_steps as u64,
        total_cost: ledger.total(),
        calls: 1,
    }
}

/// Run the walk algorithm for `t_steps` rounds using the arc recurrence and
/// sample success with the hitting probability; the ledger is synthesized as
/// `(b + 1) * T`, which the register backend realizes round by round.
pub fn run_distqwalk_fast(
    inst: &WeldedTreesInstance,
    t_steps: u32,
    payload_bits: u64,
    rng: &mut SplitRng,
) -> RunOutcome {
    assert!(payload_bits >= 1, "payload must have at least one bit");
    let mut state = walk::initial_state(inst);
    state.run_to(t_steps);
    let success = rng.random::<f64>() < state.hit_probability();
    RunOutcome {
        success,
        rounds: t_steps as u64,
        total_cost: (payload_bits + 1) * t_steps as u64,
        calls: 1,
    }
}

/// Which walk backend the retry schedule drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Fast,
    Register,
}

impl Backend {
    pub fn label(self) -> &'static str {
        match self {
            Backend::Fast => "fast",
            Backend::Register => "register",
        }
    }
}

/// Knobs of the retry schedule.
#[derive(Clone, Copy, Debug)]
pub struct TraversalConfig {
    pub epsilon: f64,
    pub payload_bits: u64,
    /// Base of the log in the step-range bound `ceil(3.6 n log n)`.
    pub range_log: LogBase,
    /// Base of the log in the retry bound `ceil(20 n log(1/epsilon))`.
    pub eps_log: LogBase,
    pub backend: Backend,
}

impl TraversalConfig {
    pub fn new(epsilon: f64, payload_bits: u64) -> Self {
        TraversalConfig {
            epsilon,
            payload_bits,
            range_log: LogBase::Two,
            eps_log: LogBase::Natural,
            backend: Backend::Fast,
        }
    }
}

/// Retries per step count: `ceil(20 n log(1/epsilon))`.
pub fn retries_per_step(n: u32, epsilon: f64, eps_log: LogBase) -> u64 {
    (20.0 * n as f64 * eps_log.log(1.0 / epsilon)).ceil().max(0.0) as u64
}

/// Number of walk invocations if no call ever succeeds.
pub fn max_calls(n: u32, cfg: &TraversalConfig) -> u64 {
    let (lo, hi) = walk::step_range(n, cfg.range_log);
    if hi < lo {
        return 0;
    }
    (hi - lo + 1) as u64 * retries_per_step(n, cfg.epsilon, cfg.eps_log)
}

/// The routing algorithm: sweep `T` over `[2n, ceil(3.6 n log n)]`, retry
/// each `T` up to `ceil(20 n log(1/epsilon))` times on a fresh payload copy,
/// and stop at the first success. Each call is measured at its end and the
/// network is reset before the next call.
pub fn run_traversal(
    inst: &WeldedTreesInstance,
    cfg: &TraversalConfig,
    rng: &mut SplitRng,
) -> RunOutcome {
    assert!(
        cfg.epsilon > 0.0 && cfg.epsilon < 1.0,
        "epsilon must lie in (0, 1)"
    );
    let n = inst.n();
    let (t_lo, t_hi) = walk::step_range(n, cfg.range_log);
    let retries = retries_per_step(n, cfg.epsilon, cfg.eps_log);
    if t_hi < t_lo {
        return RunOutcome {
            success: false,
            rounds: 0,
            total_cost: 0,
            calls: 0,
        };
    }
    match cfg.backend {
        Backend::Fast => {
            // The success probability per T is a deterministic property of
            // the instance; compute the trajectory once and sample per call.
            let mut state = walk::initial_state(inst);
            let mut curve = Vec::with_capacity((t_hi - t_lo + 1) as usize);
            for t in t_lo..=t_hi {
                state.run_to(t);
                curve.push((t, state.hit_probability()));
            }
            traversal_schedule(&curve, cfg.payload_bits, retries, rng, |_, p, rng| {
                rng.random::<f64>() < p
            })
        }
        Backend::Register => {
            let steps: Vec<(u32, f64)> = (t_lo..=t_hi).map(|t| (t, 0.0)).collect();
            traversal_schedule(&steps, cfg.payload_bits, retries, rng, |t, _, rng| {
                run_distqwalk_register(inst, t, cfg.payload_bits, rng).success
            })
        }
    }
}

fn traversal_schedule(
    curve: &[(u32, f64)],
    payload_bits: u64,
    retries: u64,
    rng: &mut SplitRng,
    mut attempt: impl FnMut(u32, f64, &mut SplitRng) -> bool,
) -> RunOutcome {
    let mut outcome = RunOutcome {
        success: false,
        rounds: 0,
        total_cost: 0,
        calls: 0,
    };
    for &(t, p) in curve {
        for _ in 0..retries {
            outcome.calls += 1;
            outcome.rounds += t as u64;
            outcome.total_cost += (payload_bits + 1) * t as u64;
            if attempt(t, p, rng) {
                outcome.success = true;
                return outcome;
            }
        }
    }
    outcome
}

#[cfg(test)]
pub(crate) fn traversal_with_curve(
    curve: &[(u32, f64)],
    payload_bits: u64,
    retries: u64,
    rng: &mut SplitRng,
) -> RunOutcome {
    traversal_schedule(curve, payload_bits, retries, rng, |_, p, rng| {
        rng.random::<f64>() < p
    })
}
