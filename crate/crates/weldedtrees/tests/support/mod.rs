#![allow(clippy::too_many_arguments)]

//! Test-side oracles: exact win probabilities for the exploration and
//! embedding games on the 6-vertex instance, computed by exhaustive weighted
//! enumeration, independent of the engine implementations they check.

use std::collections::HashMap;

use weldedtrees::classical::RootedTree;
use weldedtrees::graph::{Vertex, WeldedTreesInstance};

/// Neighbor sets of an instance, stripped of port order.
pub fn adjacency_sets(inst: &WeldedTreesInstance) -> Vec<Vec<Vertex>> {
    (0..inst.num_vertices() as Vertex)
        .map(|v| {
            let mut list = inst.neighbors_of(v).to_vec();
            list.sort_unstable();
            list
        })
        .collect()
}

/// All orderings of `items`.
fn permutations(items: &[Vertex]) -> Vec<Vec<Vertex>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Exploration game (single path grown from source)
// ---------------------------------------------------------------------------

/// Exact win probability of the exploration game under the strategy that
/// always extends source's most recent discovery, averaged over every port
/// numbering and every uniform engine draw.
///
/// Identifier assignments are integrated out: the strategy and the winning
/// conditions compare identifiers only for equality, so the probability is
/// invariant under relabeling.
pub fn exact_game2_path_win(inst: &WeldedTreesInstance, turns: usize) -> f64 {
    let adj = adjacency_sets(inst);
    let source = inst.source();
    let target = inst.target();
    let per_vertex: Vec<Vec<Vec<Vertex>>> = adj.iter().map(|list| permutations(list)).collect();

    // Walk the cartesian product of per-vertex orderings.
    let mut numbering: Vec<Vec<Vertex>> = vec![Vec::new(); adj.len()];
    let mut total = 0.0f64;
    let mut count = 0u64;
    fn assign(
        v: usize,
        per_vertex: &[Vec<Vec<Vertex>>],
        numbering: &mut Vec<Vec<Vertex>>,
        visit: &mut impl FnMut(&[Vec<Vertex>]),
    ) {
        if v == per_vertex.len() {
            visit(numbering);
            return;
        }
        for ordering in &per_vertex[v] {
            numbering[v] = ordering.clone();
            assign(v + 1, per_vertex, numbering, visit);
        }
    }
    {
        let mut visit = |numbering: &[Vec<Vertex>]| {
            total += game2_path_win_for_numbering(numbering, source, target, turns);
            count += 1;
        };
        assign(0, &per_vertex, &mut numbering, &mut visit);
    }
    total / count as f64
}

fn game2_path_win_for_numbering(
    numbering: &[Vec<Vertex>],
    source: Vertex,
    target: Vertex,
    turns: usize,
) -> f64 {
    #[derive(Clone)]
    struct State {
        used: Vec<[bool; 3]>,
        reverse_known: Vec<[bool; 3]>,
        in_source_set: u64,
        frontier: Vertex,
    }
    fn recurse(
        numbering: &[Vec<Vertex>],
        target: Vertex,
        state: &State,
        turns_left: usize,
    ) -> f64 {
        if turns_left == 0 {
            return 0.0;
        }
        let q = state.frontier as usize;
        // Ports still available at the frontier: the special nodes only have
        // two ports, others three; used and reverse-known ports drop out.
        let deg = numbering[q].len();
        let available: Vec<usize> = (0..deg)
            .filter(|&p| !state.used[q][p] && !state.reverse_known[q][p])
            .collect();
        assert!(
            !available.is_empty(),
            "the path strategy never exhausts a frontier within these turn counts"
        );
        let weight = 1.0 / available.len() as f64;
        let mut win = 0.0;
        for &p in &available {
            let answer = numbering[q][p];
            if state.in_source_set & (1 << answer) != 0 {
                win += weight; // loops back into its own exploration
                continue;
            }
            if answer == target {
                win += weight; // touches target's exploration
                continue;
            }
            let mut next = state.clone();
            next.used[q][p] = true;
            let back = numbering[answer as usize]
                .iter()
                .position(|&w| w == state.frontier)
                .expect("symmetric adjacency");
            next.reverse_known[answer as usize][back] = true;
            next.in_source_set |= 1 << answer;
            next.frontier = answer;
            win += weight * recurse(numbering, target, &next, turns_left - 1);
        }
        win
    }
    let state = State {
        used: vec![[false; 3]; numbering.len()],
        reverse_known: vec![[false; 3]; numbering.len()],
        in_source_set: 1 << source,
        frontier: source,
    };
    recurse(numbering, target, &state, turns)
}

// ---------------------------------------------------------------------------
// Embedding game
// ---------------------------------------------------------------------------

/// One fully expanded embedding outcome: the set of covered vertices (as a
/// bitmask), whether it is improper, and its probability.
#[derive(Clone, Copy, Debug)]
struct EmbeddingOutcome {
    mask: u64,
    improper: bool,
    prob: f64,
}

fn enumerate_embeddings(
    adj: &[Vec<Vertex>],
    source: Vertex,
    target: Vertex,
    tree: &RootedTree,
    root: Vertex,
) -> Vec<EmbeddingOutcome> {
    fn expand(
        adj: &[Vec<Vertex>],
        source: Vertex,
        target: Vertex,
        tree: &RootedTree,
        label: u32,
        image: &mut Vec<Option<Vertex>>,
        prob: f64,
        out: &mut Vec<EmbeddingOutcome>,
    ) {
        if label as usize == tree.node_count() {
            let mut mask = 0u64;
            let mut improper = false;
            for v in image.iter().flatten() {
                let bit = 1u64 << v;
                improper |= mask & bit != 0;
                mask |= bit;
            }
            out.push(EmbeddingOutcome {
                mask,
                improper,
                prob,
            });
            return;
        }
        let kids = tree.children_of(label);
        let here = image[label as usize];
        let expandable = match here {
            None => false,
            Some(v) => label == 0 || (v != source && v != target),
        };
        if kids.is_empty() || !expandable {
            expand(adj, source, target, tree, label + 1, image, prob, out);
            return;
        }
        let here = here.unwrap();
        let parent_vertex = tree
            .parent_of(label)
            .map(|p| image[p as usize].expect("parent before child"));
        let candidates: Vec<Vertex> = adj[here as usize]
            .iter()
            .copied()
            .filter(|&w| Some(w) != parent_vertex)
            .collect();
        assert!(kids.len() <= candidates.len(), "arity must fit");
        // Ordered draws without replacement over the candidates.
        fn draw_children(
            adj: &[Vec<Vertex>],
            source: Vertex,
            target: Vertex,
            tree: &RootedTree,
            label: u32,
            kids: &[u32],
            kid_idx: usize,
            candidates: &[Vertex],
            image: &mut Vec<Option<Vertex>>,
            prob: f64,
            out: &mut Vec<EmbeddingOutcome>,
        ) {
            if kid_idx == kids.len() {
                expand(adj, source, target, tree, label + 1, image, prob, out);
                return;
            }
            let weight = 1.0 / candidates.len() as f64;
            for (i, &c) in candidates.iter().enumerate() {
                image[kids[kid_idx] as usize] = Some(c);
                let mut rest = candidates.to_vec();
                rest.swap_remove(i);
                draw_children(
                    adj,
                    source,
                    target,
                    tree,
                    label,
                    kids,
                    kid_idx + 1,
                    &rest,
                    image,
                    prob * weight,
                    out,
                );
                image[kids[kid_idx] as usize] = None;
            }
        }
        draw_children(
            adj, source, target, tree, label, kids, 0, &candidates, image, prob, out,
        );
    }

    let mut image = vec![None; tree.node_count()];
    image[0] = Some(root);
    let mut out = Vec::new();
    expand(adj, source, target, tree, 0, &mut image, 1.0, &mut out);
    out
}

/// Exact win probability of the embedding game: source- and target-rooted
/// trees first, the remaining roots uniform (with replacement) over the other
/// vertices, every embedding draw expanded with its weight.
pub fn exact_game3_win(inst: &WeldedTreesInstance, trees: &[RootedTree]) -> f64 {
    let adj = adjacency_sets(inst);
    let source = inst.source();
    let target = inst.target();
    let others: Vec<Vertex> =
        (0..inst.num_vertices() as Vertex).filter(|&v| v != source && v != target).collect();

    let mut cache: HashMap<(usize, Vertex), Vec<EmbeddingOutcome>> = HashMap::new();
    fn no_win(
        adj: &[Vec<Vertex>],
        source: Vertex,
        target: Vertex,
        trees: &[RootedTree],
        others: &[Vertex],
        cache: &mut HashMap<(usize, Vertex), Vec<EmbeddingOutcome>>,
        idx: usize,
        occupied: u64,
    ) -> f64 {
        if idx == trees.len() {
            return 1.0;
        }
        let (roots, root_weight): (Vec<Vertex>, f64) = match idx {
            0 => (vec![source], 1.0),
            1 => (vec![target], 1.0),
            _ => (others.to_vec(), 1.0 / others.len() as f64),
        };
        let mut acc = 0.0;
        for root in roots {
            let outcomes = cache
                .entry((idx, root))
                .or_insert_with(|| enumerate_embeddings(adj, source, target, &trees[idx], root))
                .clone();
            for outcome in outcomes {
                if outcome.improper || outcome.mask & occupied != 0 {
                    continue; // the player wins here; no survival mass
                }
                acc += root_weight
                    * outcome.prob
                    * no_win(
                        adj,
                        source,
                        target,
                        trees,
                        others,
                        cache,
                        idx + 1,
                        occupied | outcome.mask,
                    );
            }
        }
        acc
    }
    1.0 - no_win(
        &adj, source, target, trees, &others, &mut cache, 0, 0,
    )
}
