//! Classical routing baselines and the exploration lower-bound games.
//!
//! Three layers build on each other:
//!
//! - [`run_flooding_baseline`]: the trivial classical router; every node
//!   forwards the payload once over all its ports, and the ledger counts the
//!   bits.
//! - [`game2_play`]: the oracle exploration game. A player grows exploration
//!   trees from `source`, `target`, and freshly guessed identifiers, querying
//!   one unknown port per turn; it wins when two explorations touch or one
//!   loops back on itself. Strategies choose *which* exploration to extend,
//!   while the engine owns all randomness (fresh-identifier draws and port
//!   draws), so a strategy cannot peek beyond the public trace.
//! - [`game3_play`]: the random-embedding game. The player commits to a
//!   forest of rooted trees; the trees are embedded by uniform random child
//!   draws, and the player wins if two embedded trees intersect or one is
//!   improper (hits the same vertex twice). Monte Carlo estimators over fresh
//!   random instances measure how the win rate decays with the height `n`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use rand::RngExt;
use thiserror::Error;

use crate::distsim::{LedgerMode, RoundLedger};
use crate::graph::{
    GraphError, Ident, OracleAnswer, Port, Vertex, WeldedTreesInstance, build_instance,
};
use crate::rng::SplitRng;
use crate::runner::run_trials;
use crate::stats::{chi2_uniform, wilson_stderr};

#[derive(Debug, Error)]
pub enum GameError {
    #[error("invalid move: {0}")]
    InvalidMove(String),
    #[error("invalid tree: {0}")]
    TreeInvariant(String),
    #[error("embedding needs {children} root children but the root vertex has degree {degree}")]
    RootArity { children: usize, degree: usize },
    #[error("the exploration game needs identifiers drawn from the matching domain")]
    DomainMismatch,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

// ---------------------------------------------------------------------------
// Flooding baseline
// ---------------------------------------------------------------------------

/// Flood the `payload_bits`-bit payload from source: every node transmits it
/// once, over all of its ports, in the round after first holding it
/// (duplicates are suppressed). Returns total bits sent and whether target
/// received the payload.
pub fn run_flooding_baseline(inst: &WeldedTreesInstance, payload_bits: u64) -> (u64, bool) {
    let mut ledger = RoundLedger::new(LedgerMode::ClassicalBits);
    let mut has_payload = vec![false; inst.num_vertices()];
    has_payload[inst.source() as usize] = true;
    let mut frontier = vec![inst.source()];
    while !frontier.is_empty() {
        let mut round_bits = 0u64;
        let mut next = Vec::new();
        for &v in &frontier {
            round_bits += payload_bits * inst.degree(v) as u64;
            for &w in inst.neighbors_of(v) {
                if !has_payload[w as usize] {
                    has_payload[w as usize] = true;
                    next.push(w);
                }
            }
        }
        ledger.push_round(round_bits);
        frontier = next;
    }
    (ledger.total(), has_payload[inst.target() as usize])
}

// ---------------------------------------------------------------------------
// Rooted trees and tree-building strategies
// ---------------------------------------------------------------------------

/// A rooted tree with labels `0..=t` (0 is the root) and `parent(j) < j`.
/// The root has at most `root_cap` children, every other node at most 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedTree {
    parent: Vec<u32>,
    children: Vec<Vec<u32>>,
    root_cap: u8,
}

impl RootedTree {
    /// `parents[j - 1]` is the parent of label `j`.
    pub fn new(parents: Vec<u32>, root_cap: u8) -> Result<Self, GameError> {
        let nodes = parents.len() + 1;
        let mut children = vec![Vec::new(); nodes];
        for (offset, &p) in parents.iter().enumerate() {
            let label = offset as u32 + 1;
            if p >= label {
                return Err(GameError::TreeInvariant(format!(
                    "parent {p} of label {label} must be smaller"
                )));
            }
            children[p as usize].push(label);
        }
        if children[0].len() > root_cap as usize {
            return Err(GameError::TreeInvariant(format!(
                "root has {} children, cap is {root_cap}",
                children[0].len()
            )));
        }
        for (label, kids) in children.iter().enumerate().skip(1) {
            if kids.len() > 2 {
                return Err(GameError::TreeInvariant(format!(
                    "node {label} has {} children, cap is 2",
                    kids.len()
                )));
            }
        }
        Ok(RootedTree {
            parent: parents,
            children,
            root_cap,
        })
    }

    pub fn edge_count(&self) -> usize {
        self.parent.len()
    }

    pub fn node_count(&self) -> usize {
        self.parent.len() + 1
    }

    pub fn root_cap(&self) -> u8 {
        self.root_cap
    }

    /// Parent of `label`; `None` for the root.
    pub fn parent_of(&self, label: u32) -> Option<u32> {
        (label > 0).then(|| self.parent[label as usize - 1])
    }

    pub fn children_of(&self, label: u32) -> &[u32] {
        &self.children[label as usize]
    }

    pub fn is_leaf(&self, label: u32) -> bool {
        self.children[label as usize].is_empty()
    }
}

/// Named tree-building strategies for the embedding game.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeStrategy {
    /// Every tree is a path of `t` edges.
    Paths,
    /// Breadth-first fill: the root takes its full cap, then level by level.
    Balanced,
    /// The root takes its full cap; the branches then extend as paths,
    /// round-robin.
    StarsThenPaths,
}

impl TreeStrategy {
    pub fn name(self) -> &'static str {
        match self {
            TreeStrategy::Paths => "paths",
            TreeStrategy::Balanced => "balanced",
            TreeStrategy::StarsThenPaths => "stars-then-paths",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        builtin_strategies()
            .into_iter()
            .find(|(label, _)| *label == name)
            .map(|(_, s)| s)
    }

    /// A single tree with `edges` edges under the given root cap.
    pub fn build(self, edges: usize, root_cap: u8) -> RootedTree {
        assert!(root_cap >= 1);
        let mut parents = Vec::with_capacity(edges);
        match self {
            TreeStrategy::Paths => {
                for label in 1..=edges as u32 {
                    parents.push(label - 1);
                }
            }
            TreeStrategy::Balanced => {
                let mut open: VecDeque<(u32, u8)> = VecDeque::from([(0, root_cap)]);
                for label in 1..=edges as u32 {
                    let (node, cap) = *open.front().expect("capacity never runs out");
                    parents.push(node);
                    if cap == 1 {
                        open.pop_front();
                    } else {
                        open.front_mut().unwrap().1 -= 1;
                    }
                    open.push_back((label, 2));
                }
            }
            TreeStrategy::StarsThenPaths => {
                let star = edges.min(root_cap as usize) as u32;
                let mut tails: VecDeque<u32> = VecDeque::new();
                for label in 1..=star {
                    parents.push(0);
                    tails.push_back(label);
                }
                for label in star + 1..=edges as u32 {
                    let tail = tails.pop_front().expect("star arm exists");
                    parents.push(tail);
                    tails.push_back(label);
                }
            }
        }
        RootedTree::new(parents, root_cap).expect("builders produce valid trees")
    }

    /// The `t + 2` trees of the embedding game with parameter `t`: two
    /// 2-rooted trees (for source and target) followed by `t` 3-rooted ones.
    pub fn game_trees(self, t: usize) -> Vec<RootedTree> {
        let mut trees = vec![self.build(t, 2), self.build(t, 2)];
        for _ in 0..t {
            trees.push(self.build(t, 3));
        }
        trees
    }
}

/// All named strategies.
pub fn builtin_strategies() -> [(&'static str, TreeStrategy); 3] {
    [
        ("paths", TreeStrategy::Paths),
        ("balanced", TreeStrategy::Balanced),
        ("stars-then-paths", TreeStrategy::StarsThenPaths),
    ]
}

// ---------------------------------------------------------------------------
// Random embedding
// ---------------------------------------------------------------------------

/// A (possibly partial) image of a rooted tree in the graph.
#[derive(Clone, Debug)]
pub struct Embedding {
    image: Vec<Option<Vertex>>,
    improper: bool,
    truncated_at: Option<u32>,
}

impl Embedding {
    pub fn vertex(&self, label: u32) -> Option<Vertex> {
        self.image[label as usize]
    }

    /// Two distinct labels map to the same vertex.
    pub fn improper(&self) -> bool {
        self.improper
    }

    /// First label whose subtree was left undefined because it landed on
    /// source or target.
    pub fn truncated_at(&self) -> Option<u32> {
        self.truncated_at
    }

    pub fn defined_vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.image.iter().flatten().copied()
    }
}

/// Embed `tree` at `root`: children of the root are drawn uniformly without
/// replacement from its neighbors; children of an internal node from its
/// vertex's neighbors minus the parent's vertex. A non-root node landing on
/// source or target ends its branch (the subtree below it stays undefined).
pub fn random_embedding(
    inst: &WeldedTreesInstance,
    tree: &RootedTree,
    root: Vertex,
    rng: &mut SplitRng,
) -> Result<Embedding, GameError> {
    let mut image: Vec<Option<Vertex>> = vec![None; tree.node_count()];
    image[0] = Some(root);
    let mut truncated_at = None;
    let mut candidates: Vec<Vertex> = Vec::with_capacity(3);
    for label in 0..tree.node_count() as u32 {
        let kids = tree.children_of(label);
        if kids.is_empty() {
            continue;
        }
        let Some(here) = image[label as usize] else {
            continue; // undefined branch
        };
        if label > 0 && (here == inst.source() || here == inst.target()) {
            if truncated_at.is_none() {
                truncated_at = Some(label);
            }
            continue;
        }
        candidates.clear();
        let parent_vertex = tree.parent_of(label).map(|p| {
            image[p as usize].expect("parent embedded before child")
        });
        candidates.extend(
            inst.neighbors_of(here)
                .iter()
                .copied()
                .filter(|&w| Some(w) != parent_vertex),
        );
        if kids.len() > candidates.len() {
            return Err(GameError::RootArity {
                children: kids.len(),
                degree: candidates.len(),
            });
        }
        for &kid in kids {
            let pick = rng.random_range(0..candidates.len());
            image[kid as usize] = Some(candidates.swap_remove(pick));
        }
    }
    let mut seen: Vec<Vertex> = image.iter().flatten().copied().collect();
    seen.sort_unstable();
    let improper = seen.windows(2).any(|w| w[0] == w[1]);
    Ok(Embedding {
        image,
        improper,
        truncated_at,
    })
}

// ---------------------------------------------------------------------------
// The oracle exploration game
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WinCondition {
    /// Two explorations discovered a common identifier.
    TreesIntersect,
    /// One exploration returned to an identifier it already held.
    TreeSelfHit,
}

#[derive(Clone, Debug)]
pub struct QueryRecord {
    pub id: Ident,
    pub port: Port,
    pub answer: OracleAnswer,
    /// Root of the exploration this query extended.
    pub root: Ident,
}

/// Public state of an exploration game: the roots in creation order
/// (source's and target's identifiers first), the discovered set per root,
/// and the full query log.
#[derive(Clone, Debug)]
pub struct GameTrace {
    pub roots: Vec<Ident>,
    pub sets: BTreeMap<Ident, BTreeSet<Ident>>,
    pub queries: Vec<QueryRecord>,
    pub win: Option<WinCondition>,
}

impl GameTrace {
    /// Most recent identifier added to the root's set, or the root itself.
    pub fn frontier_of(&self, root: Ident) -> Ident {
        self.queries
            .iter()
            .rev()
            .find(|q| q.root == root)
            .and_then(|q| match q.answer {
                OracleAnswer::Link { id, .. } => Some(id),
                OracleAnswer::Bottom => None,
            })
            .unwrap_or(root)
    }

    /// Re-derive the legality of every recorded query: the port restrictions
    /// of the game, and that set members only ever come from root draws or
    /// oracle answers. Returns a description of the first violation.
    pub fn check_legality(&self, source_id: Ident, target_id: Ident) -> Result<(), String> {
        let mut used: HashSet<(Ident, Port)> = HashSet::new();
        let mut reverse: HashSet<(Ident, Port)> = HashSet::new();
        let mut known: HashSet<Ident> = self.roots.iter().copied().collect();
        for (i, q) in self.queries.iter().enumerate() {
            if (q.id == source_id || q.id == target_id) && q.port == 3 {
                return Err(format!("query {i} uses port 3 of a special node"));
            }
            if !(1..=3).contains(&q.port) {
                return Err(format!("query {i} uses port {}", q.port));
            }
            if !used.insert((q.id, q.port)) {
                return Err(format!("query {i} repeats a queried port"));
            }
            if reverse.contains(&(q.id, q.port)) {
                return Err(format!("query {i} re-walks a discovered edge"));
            }
            if !known.contains(&q.id) {
                return Err(format!("query {i} starts from an unknown identifier"));
            }
            if let OracleAnswer::Link { id, port } = q.answer {
                reverse.insert((id, port));
                known.insert(id);
            }
        }
        for (root, set) in &self.sets {
            if !set.contains(root) {
                return Err(format!("root {root} missing from its own set"));
            }
            for member in set {
                if !known.contains(member) {
                    return Err(format!("set member {member} has no provenance"));
                }
            }
        }
        Ok(())
    }
}

/// One turn of the exploration game, chosen by the strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Game2Move {
    /// Draw a fresh identifier uniformly among the never-encountered ones and
    /// start a new exploration there.
    NewRoot,
    /// Query an unexplored port of `from`, which must belong to `root`'s set.
    Extend { root: Ident, from: Ident },
}

/// Chooses moves from the public trace; all randomness stays in the engine.
pub trait Game2Strategy {
    fn next_move(&mut self, trace: &GameTrace, turn: usize) -> Game2Move;
}

/// Always extends source's exploration at its most recent discovery.
#[derive(Clone, Copy, Debug, Default)]
pub struct PathFromSource;

impl Game2Strategy for PathFromSource {
    fn next_move(&mut self, trace: &GameTrace, _turn: usize) -> Game2Move {
        let root = trace.roots[0];
        Game2Move::Extend {
            root,
            from: trace.frontier_of(root),
        }
    }
}

/// Play the exploration game for up to `turns` turns (stopping early on a
/// win). The instance must use the matching identifier domain.
pub fn game2_play(
    inst: &WeldedTreesInstance,
    strategy: &mut dyn Game2Strategy,
    turns: usize,
    rng: &mut SplitRng,
) -> Result<GameTrace, GameError> {
    if inst.id_domain_size() != inst.num_vertices() as u64 {
        return Err(GameError::DomainMismatch);
    }
    let source_id = inst.id_of(inst.source());
    let target_id = inst.id_of(inst.target());
    let mut trace = GameTrace {
        roots: vec![source_id, target_id],
        sets: BTreeMap::from([
            (source_id, BTreeSet::from([source_id])),
            (target_id, BTreeSet::from([target_id])),
        ]),
        queries: Vec::new(),
        win: None,
    };
    let mut seen: HashSet<Ident> = HashSet::from([source_id, target_id]);
    let mut used: HashSet<(Ident, Port)> = HashSet::new();
    let mut reverse: HashSet<(Ident, Port)> = HashSet::new();
    let domain = inst.id_domain_size();

    for turn in 0..turns {
        let mv = strategy.next_move(&trace, turn);
        let (root_id, query_id) = match mv {
            Game2Move::NewRoot => {
                if seen.len() as u64 >= domain {
                    return Err(GameError::InvalidMove(
                        "no unseen identifier left to draw".into(),
                    ));
                }
                let fresh = loop {
                    let candidate = rng.random_range(1..=domain);
                    if !seen.contains(&candidate) {
                        break candidate;
                    }
                };
                trace.roots.push(fresh);
                trace.sets.insert(fresh, BTreeSet::from([fresh]));
                seen.insert(fresh);
                (fresh, fresh)
            }
            Game2Move::Extend { root, from } => {
                let set = trace
                    .sets
                    .get(&root)
                    .ok_or_else(|| GameError::InvalidMove(format!("{root} is not a root")))?;
                if !set.contains(&from) {
                    return Err(GameError::InvalidMove(format!(
                        "{from} not discovered by root {root}"
                    )));
                }
                (root, from)
            }
        };
        // Available ports: no port 3 at source/target, no re-queried port, no
        // reverse of an earlier answer.
        let max_port: Port = if query_id == source_id || query_id == target_id {
            2
        } else {
            3
        };
        let available: Vec<Port> = (1..=max_port)
            .filter(|&p| !used.contains(&(query_id, p)) && !reverse.contains(&(query_id, p)))
            .collect();
        if available.is_empty() {
            return Err(GameError::InvalidMove(format!(
                "no unexplored port left at identifier {query_id}"
            )));
        }
        let port = available[rng.random_range(0..available.len())];
        let answer = inst.oracle_query(query_id, port)?;
        let OracleAnswer::Link {
            id: answer_id,
            port: answer_port,
        } = answer
        else {
            unreachable!("port 3 of the special nodes is never available");
        };
        used.insert((query_id, port));
        reverse.insert((answer_id, answer_port));
        trace.queries.push(QueryRecord {
            id: query_id,
            port,
            answer,
            root: root_id,
        });

        // Winning conditions: the answer already belongs to this exploration
        // (a self loop) or to another one (two explorations touch). The
        // duplicate is inserted either way.
        let already_here = trace.sets[&root_id].contains(&answer_id);
        let elsewhere = !already_here && seen.contains(&answer_id);
        trace.sets.get_mut(&root_id).unwrap().insert(answer_id);
        seen.insert(answer_id);
        if already_here {
            trace.win = Some(WinCondition::TreeSelfHit);
            break;
        }
        if elsewhere {
            trace.win = Some(WinCondition::TreesIntersect);
            break;
        }
    }
    Ok(trace)
}

/// Whether a trace's discovered edges contain a path linking the two special
/// identifiers (the winning condition of the plain oracle game).
pub fn trace_connects_source_target(
    trace: &GameTrace,
    source_id: Ident,
    target_id: Ident,
) -> bool {
    let mut adjacency: HashMap<Ident, Vec<Ident>> = HashMap::new();
    for q in &trace.queries {
        if let OracleAnswer::Link { id, .. } = q.answer {
            adjacency.entry(q.id).or_default().push(id);
            adjacency.entry(id).or_default().push(q.id);
        }
    }
    let mut visited: HashSet<Ident> = HashSet::from([source_id]);
    let mut queue = VecDeque::from([source_id]);
    while let Some(v) = queue.pop_front() {
        if v == target_id {
            return true;
        }
        for w in adjacency.get(&v).into_iter().flatten() {
            if visited.insert(*w) {
                queue.push_back(*w);
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// The random-embedding game
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Game3Win {
    Intersection { i: usize, j: usize },
    Improper { i: usize },
}

#[derive(Clone, Debug)]
pub struct Game3Outcome {
    pub win: bool,
    pub reason: Option<Game3Win>,
}

/// Validate a forest for the embedding game: `t + 2` trees of `t` edges
/// each, the first two 2-rooted, the rest 3-rooted.
fn check_game3_trees(trees: &[RootedTree]) -> Result<usize, GameError> {
    if trees.len() < 2 {
        return Err(GameError::TreeInvariant(
            "the embedding game needs at least the two special trees".into(),
        ));
    }
    let t = trees.len() - 2;
    for (i, tree) in trees.iter().enumerate() {
        if tree.edge_count() != t {
            return Err(GameError::TreeInvariant(format!(
                "tree {i} has {} edges, expected {t}",
                tree.edge_count()
            )));
        }
        let cap = if i < 2 { 2 } else { 3 };
        if tree.children_of(0).len() > cap {
            return Err(GameError::TreeInvariant(format!(
                "tree {i} has {} root children, cap is {cap}",
                tree.children_of(0).len()
            )));
        }
    }
    Ok(t)
}

/// Draw the roots for the embedding game: source, target, then uniform over
/// the remaining vertices with replacement.
fn game3_roots(inst: &WeldedTreesInstance, count: usize, rng: &mut SplitRng) -> Vec<Vertex> {
    let mut roots = Vec::with_capacity(count);
    roots.push(inst.source());
    roots.push(inst.target());
    let others: u64 = inst.num_vertices() as u64 - 2;
    for _ in 2..count {
        let mut pick = rng.random_range(0..others) as Vertex;
        // Skip over source and target in index order.
        for special in [inst.source().min(inst.target()), inst.source().max(inst.target())] {
            if pick >= special {
                pick += 1;
            }
        }
        roots.push(pick);
    }
    roots
}

/// Embed the player's forest with random roots and evaluate the win
/// conditions: some pair of embedded trees intersects, or some embedding is
/// improper. A branch truncated at source or target still lands there, which
/// intersects the corresponding special tree.
pub fn game3_play(
    inst: &WeldedTreesInstance,
    trees: &[RootedTree],
    rng: &mut SplitRng,
) -> Result<Game3Outcome, GameError> {
    check_game3_trees(trees)?;
    let roots = game3_roots(inst, trees.len(), rng);
    let mut owner: HashMap<Vertex, usize> = HashMap::new();
    let mut reason = None;
    for (i, tree) in trees.iter().enumerate() {
        let embedding = random_embedding(inst, tree, roots[i], rng)?;
        if embedding.improper() && reason.is_none() {
            reason = Some(Game3Win::Improper { i });
        }
        for v in embedding.defined_vertices() {
            match owner.get(&v) {
                Some(&j) if j != i => {
                    if reason.is_none() {
                        reason = Some(Game3Win::Intersection { i: j, j: i });
                    }
                }
                _ => {
                    owner.insert(v, i);
                }
            }
        }
        if reason.is_some() {
            break;
        }
    }
    Ok(Game3Outcome {
        win: reason.is_some(),
        reason,
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo estimators
// ---------------------------------------------------------------------------

/// A Monte Carlo rate with its Wilson standard error.
#[derive(Clone, Copy, Debug)]
pub struct RateEstimate {
    pub trials: u64,
    pub wins: u64,
    pub rate: f64,
    pub stderr: f64,
}

impl RateEstimate {
    fn from_wins(wins: u64, trials: u64) -> Self {
        RateEstimate {
            trials,
            wins,
            rate: wins as f64 / trials as f64,
            stderr: wilson_stderr(wins, trials),
        }
    }
}

/// Estimate the embedding-game win rate at height `n` and parameter `t`:
/// each trial draws a fresh instance, fresh roots, and fresh embeddings.
/// Deterministic in `rng` regardless of `threads`.
pub fn estimate_game3(
    n: u32,
    t: usize,
    strategy: TreeStrategy,
    trials: u64,
    threads: usize,
    rng: &SplitRng,
) -> Result<RateEstimate, GameError> {
    let trees = strategy.game_trees(t);
    check_game3_trees(&trees)?;
    let outcomes = run_trials(trials, threads, |trial| {
        let mut trial_rng = rng.split(trial);
        let seed = trial_rng.random::<u64>();
        let inst = build_instance(n, seed).expect("valid height");
        game3_play(&inst, &trees, &mut trial_rng)
            .expect("strategy trees are valid")
            .win
    });
    Ok(RateEstimate::from_wins(
        outcomes.iter().filter(|&&w| w).count() as u64,
        trials,
    ))
}

/// Columns `[floor(n/2) + 1, floor(3n/2)]`, the wide middle of the graph.
pub fn middle_columns(n: u32) -> (u32, u32) {
    (n / 2 + 1, 3 * n / 2)
}

/// Estimate the probability that two distinct embedded trees meet inside the
/// middle columns.
pub fn estimate_middle_intersection(
    n: u32,
    t: usize,
    strategy: TreeStrategy,
    trials: u64,
    threads: usize,
    rng: &SplitRng,
) -> Result<RateEstimate, GameError> {
    let trees = strategy.game_trees(t);
    check_game3_trees(&trees)?;
    let (lo, hi) = middle_columns(n);
    let outcomes = run_trials(trials, threads, |trial| {
        let mut trial_rng = rng.split(trial);
        let seed = trial_rng.random::<u64>();
        let inst = build_instance(n, seed).expect("valid height");
        let roots = game3_roots(&inst, trees.len(), &mut trial_rng);
        let mut owner: HashMap<Vertex, usize> = HashMap::new();
        let mut hit = false;
        'trees: for (i, tree) in trees.iter().enumerate() {
            let embedding = random_embedding(&inst, tree, roots[i], &mut trial_rng)
                .expect("strategy trees are valid");
            for v in embedding.defined_vertices() {
                let column = inst.column_of(v);
                if column < lo || column > hi {
                    continue;
                }
                match owner.get(&v) {
                    Some(&j) if j != i => {
                        hit = true;
                        break 'trees;
                    }
                    _ => {
                        owner.insert(v, i);
                    }
                }
            }
        }
        hit
    });
    Ok(RateEstimate::from_wins(
        outcomes.iter().filter(|&&w| w).count() as u64,
        trials,
    ))
}

/// Estimate the per-tree improperness rate: the fraction of embedded trees
/// that map two labels to one vertex.
pub fn estimate_improperness(
    n: u32,
    t: usize,
    strategy: TreeStrategy,
    trials: u64,
    threads: usize,
    rng: &SplitRng,
) -> Result<RateEstimate, GameError> {
    let trees = strategy.game_trees(t);
    check_game3_trees(&trees)?;
    let counts = run_trials(trials, threads, |trial| {
        let mut trial_rng = rng.split(trial);
        let seed = trial_rng.random::<u64>();
        let inst = build_instance(n, seed).expect("valid height");
        let roots = game3_roots(&inst, trees.len(), &mut trial_rng);
        let mut improper = 0u64;
        for (i, tree) in trees.iter().enumerate() {
            let embedding = random_embedding(&inst, tree, roots[i], &mut trial_rng)
                .expect("strategy trees are valid");
            if embedding.improper() {
                improper += 1;
            }
        }
        improper
    });
    let wins: u64 = counts.iter().sum();
    Ok(RateEstimate::from_wins(
        wins,
        trials * (t as u64 + 2),
    ))
}

/// Estimate the probability that a path tree rooted in the right quarter
/// (column at least `ceil(3n/4)`) reaches the left quarter `C(0, n/2)`.
pub fn estimate_extremity_reach(
    n: u32,
    t: usize,
    trials: u64,
    threads: usize,
    rng: &SplitRng,
) -> RateEstimate {
    let tree = TreeStrategy::Paths.build(t, 3);
    let boundary = (3 * n).div_ceil(4);
    let left_edge = n / 2;
    let outcomes = run_trials(trials, threads, |trial| {
        let mut trial_rng = rng.split(trial);
        let seed = trial_rng.random::<u64>();
        let inst = build_instance(n, seed).expect("valid height");
        let eligible: Vec<Vertex> = (0..inst.num_vertices() as Vertex)
            .filter(|&v| inst.column_of(v) >= boundary && v != inst.target())
            .collect();
        let root = eligible[trial_rng.random_range(0..eligible.len())];
        let embedding =
            random_embedding(&inst, &tree, root, &mut trial_rng).expect("path tree fits");
        embedding
            .defined_vertices()
            .any(|v| inst.column_of(v) <= left_edge)
    });
    RateEstimate::from_wins(outcomes.iter().filter(|&&w| w).count() as u64, trials)
}

/// Chi-square evidence for one `(tree, node, column)` combination.
#[derive(Clone, Debug)]
pub struct UniformityResult {
    pub column: u32,
    pub samples: u64,
    pub counts: Vec<u64>,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Empirical conditional distribution of `node`'s image per column, pooled
/// over fresh instances and uniform non-special roots. Vertices pool across
/// instances by structural index, which the construction keeps canonical.
/// Columns whose expected per-vertex count falls below `min_expected` are
/// skipped.
pub fn column_uniformity(
    n: u32,
    tree: &RootedTree,
    node: u32,
    trials: u64,
    threads: usize,
    rng: &SplitRng,
    min_expected: f64,
) -> Vec<UniformityResult> {
    assert!((node as usize) < tree.node_count());
    let reference = build_instance(n, 0).expect("valid height");
    let mut position: HashMap<Vertex, (u32, usize)> = HashMap::new();
    for k in 0..=2 * n + 1 {
        for (idx, v) in reference.column_members(k).into_iter().enumerate() {
            position.insert(v, (k, idx));
        }
    }
    let samples = run_trials(trials, threads, |trial| {
        let mut trial_rng = rng.split(trial);
        let seed = trial_rng.random::<u64>();
        let inst = build_instance(n, seed).expect("valid height");
        let others = inst.num_vertices() as u64 - 2;
        let mut pick = trial_rng.random_range(0..others) as Vertex;
        for special in [
            inst.source().min(inst.target()),
            inst.source().max(inst.target()),
        ] {
            if pick >= special {
                pick += 1;
            }
        }
        let embedding = random_embedding(&inst, tree, pick, &mut trial_rng)
            .expect("tree arity fits every non-special vertex");
        embedding.vertex(node)
    });
    let mut counts: Vec<Vec<u64>> = (0..=2 * n + 1)
        .map(|k| vec![0u64; column_members_len(&reference, k)])
        .collect();
    for vertex in samples.into_iter().flatten() {
        let (k, idx) = position[&vertex];
        counts[k as usize][idx] += 1;
    }
    let mut results = Vec::new();
    for (k, column_counts) in counts.into_iter().enumerate() {
        if column_counts.len() < 2 {
            continue;
        }
        let total: u64 = column_counts.iter().sum();
        if (total as f64) < min_expected * column_counts.len() as f64 {
            continue;
        }
        let (chi2, dof, p_value) = chi2_uniform(&column_counts);
        results.push(UniformityResult {
            column: k as u32,
            samples: total,
            counts: column_counts,
            chi2,
            dof,
            p_value,
        });
    }
    results
}

fn column_members_len(inst: &WeldedTreesInstance, k: u32) -> usize {
    inst.column_members(k).len()
}
