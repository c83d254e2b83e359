//! Welded-trees network instances.
//!
//! An instance of height `n` consists of two balanced binary trees of height
//! `n` whose roots are `source` and `target`, with the two leaf sets joined
//! by a random cycle that alternates sides. The graph has `2^(n+2) - 2`
//! vertices; the roots have degree 2 and every other vertex degree 3.
//!
//! Vertices carry two independent random layers on top of the fixed
//! structure: a private port numbering per vertex (messages are addressed by
//! port, not by neighbor identity) and a global identifier assignment.
//! Internal vertex indices are dense and structural; algorithms under test
//! only ever see identifiers and ports.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::OnceLock;

use rand::RngExt;
use rand::seq::SliceRandom;
use thiserror::Error;

use crate::rng::SplitRng;

pub type Vertex = u32;
pub type Ident = u64;
pub type Port = u8;

/// Largest supported height; keeps arc indices within `u32`.
pub const MAX_N: u32 = 28;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("tree height must be at least 1")]
    HeightTooSmall,
    #[error("tree height {0} exceeds the supported maximum {MAX_N}")]
    SizeLimit(u32),
    #[error("unknown identifier {0}")]
    UnknownIdentifier(Ident),
    #[error("port {0} outside [1..3]")]
    InvalidPort(Port),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("validation failed: {0}")]
    Validation(String),
}

/// Identifier domain the instance draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdDomain {
    /// Exactly `[1 ..= 2^(n+2) - 2]`; the assignment is a bijection.
    Matching,
    /// The larger domain `[1 ..= factor * (2^(n+2) - 2)]`; the assignment is
    /// an injection.
    Scaled(u32),
}

/// Answer of the neighborhood oracle: the identifier reached through a port
/// and the port leading back, or bottom for the roots' nonexistent third
/// port.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleAnswer {
    Link { id: Ident, port: Port },
    Bottom,
}

impl OracleAnswer {
    pub fn is_bottom(&self) -> bool {
        matches!(self, OracleAnswer::Bottom)
    }
}

/// Identifier-to-vertex lookup; a flat array when the domain matches the
/// vertex count (the hot construction path), a map otherwise.
#[derive(Clone, Debug)]
enum IdLookup {
    Dense(Vec<Vertex>),
    Sparse(HashMap<Ident, Vertex>),
}

impl IdLookup {
    fn get(&self, id: Ident) -> Option<Vertex> {
        match self {
            IdLookup::Dense(slots) => {
                if id == 0 || id > slots.len() as u64 {
                    return None;
                }
                let v = slots[id as usize - 1];
                (v != Vertex::MAX).then_some(v)
            }
            IdLookup::Sparse(map) => map.get(&id).copied(),
        }
    }
}

/// The identifier assignment and its inverse lookup.
#[derive(Clone, Debug)]
struct IdLayer {
    ids: Vec<Ident>,
    lookup: IdLookup,
}

/// A concrete welded-trees network. Immutable after construction; safe to
/// share read-only across threads.
///
/// The reciprocal-port table and the identifier layer are derived lazily (and
/// deterministically) on first use: the embedding experiments churn through
/// fresh instances by the hundred thousand and touch neither.
#[derive(Clone, Debug)]
pub struct WeldedTreesInstance {
    n: u32,
    /// CSR offsets, length `num_vertices + 1`.
    offsets: Vec<u32>,
    /// Neighbor per arc slot; slot `s` within a vertex block is port `s + 1`.
    neighbors: Vec<Vertex>,
    /// Per arc `(u, v)`: the port of `v` that leads back to `u`.
    recip_port: OnceLock<Vec<Port>>,
    id_layer: OnceLock<IdLayer>,
    /// Seed of the identifier sub-generator, for lazy materialization.
    id_seed: u64,
    columns: Vec<u16>,
    source: Vertex,
    target: Vertex,
    id_domain_size: u64,
}

/// Number of vertices of an instance of height `n`.
pub fn num_vertices_for(n: u32) -> u64 {
    (1u64 << (n + 2)) - 2
}

/// Size of column `k` (vertices at distance `k` from source): `2^min(k, 2n+1-k)`.
pub fn column_size(n: u32, k: u32) -> u64 {
    debug_assert!(k <= 2 * n + 1);
    1u64 << k.min(2 * n + 1 - k)
}

/// Build a uniformly random instance of height `n`, deterministic in `seed`.
/// Identifiers use the matching domain `[2^(n+2) - 2]`.
pub fn build_instance(n: u32, seed: u64) -> Result<WeldedTreesInstance, GraphError> {
    build_instance_with(n, seed, IdDomain::Matching)
}

/// [`build_instance`] with an explicit identifier domain.
pub fn build_instance_with(
    n: u32,
    seed: u64,
    domain: IdDomain,
) -> Result<WeldedTreesInstance, GraphError> {
    if n == 0 {
        return Err(GraphError::HeightTooSmall);
    }
    if n > MAX_N {
        return Err(GraphError::SizeLimit(n));
    }
    let rng = SplitRng::seeded(seed);
    let tree_size = (1u32 << (n + 1)) - 1; // vertices per side
    let num_vertices = 2 * tree_size as usize;
    let source: Vertex = 0;
    let target: Vertex = tree_size;

    // Degrees are fixed by the shape (roots 2, everyone else 3), so the CSR
    // layout is known up front and edges scatter straight into it.
    let mut offsets = Vec::with_capacity(num_vertices + 1);
    offsets.push(0u32);
    for v in 0..num_vertices as Vertex {
        let deg = if v == source || v == target { 2 } else { 3 };
        offsets.push(offsets[v as usize] + deg);
    }
    let arcs = offsets[num_vertices] as usize;
    let mut neighbors = vec![0 as Vertex; arcs];
    let mut cursor: Vec<u32> = offsets[..num_vertices].to_vec();
    let mut add_edge = |neighbors: &mut Vec<Vertex>, u: Vertex, v: Vertex| {
        neighbors[cursor[u as usize] as usize] = v;
        cursor[u as usize] += 1;
        neighbors[cursor[v as usize] as usize] = u;
        cursor[v as usize] += 1;
    };

    // Heap layout per side: children of local index i are 2i+1 and 2i+2.
    // Left side occupies global [0, tree_size), right side the rest.
    for side in [0, tree_size] {
        for local in 0..tree_size {
            for child in [2 * local + 1, 2 * local + 2] {
                if child < tree_size {
                    add_edge(&mut neighbors, side + local, side + child);
                }
            }
        }
    }

    // Alternating weld cycle over the two leaf sets, uniform over all valid
    // weldings: fix the first left leaf, interleave a shuffled right leaf
    // order with a shuffled order of the remaining left leaves.
    let leaf_count = 1u32 << n;
    let first_leaf = leaf_count - 1; // local heap index of the leftmost leaf
    let mut weld_rng = rng.split(0);
    let mut rights: Vec<Vertex> = (0..leaf_count)
        .map(|i| tree_size + first_leaf + i)
        .collect();
    rights.shuffle(&mut weld_rng);
    let mut lefts_rest: Vec<Vertex> = (1..leaf_count).map(|i| first_leaf + i).collect();
    lefts_rest.shuffle(&mut weld_rng);
    let mut prev = first_leaf;
    for i in 0..leaf_count as usize {
        add_edge(&mut neighbors, prev, rights[i]);
        if i + 1 < leaf_count as usize {
            prev = lefts_rest[i];
            add_edge(&mut neighbors, rights[i], prev);
        } else {
            add_edge(&mut neighbors, rights[i], first_leaf);
        }
    }
    debug_assert_eq!(&cursor[..], &offsets[1..]);

    // Port numberings: independent uniform shuffle of each vertex's block.
    let mut port_rng = rng.split(1);
    for v in 0..num_vertices {
        neighbors[offsets[v] as usize..offsets[v + 1] as usize].shuffle(&mut port_rng);
    }

    let id_domain_size = match domain {
        IdDomain::Matching => num_vertices as u64,
        IdDomain::Scaled(f) => num_vertices as u64 * f.max(1) as u64,
    };

    // Columns follow from the structural layout: left heap level k sits in
    // column k, right heap level j in column 2n+1-j.
    let mut columns = vec![0u16; num_vertices];
    for local in 0..tree_size {
        let level = (local + 1).ilog2() as u16;
        columns[local as usize] = level;
        columns[(tree_size + local) as usize] = (2 * n + 1) as u16 - level;
    }

    Ok(WeldedTreesInstance {
        n,
        offsets,
        neighbors,
        recip_port: OnceLock::new(),
        id_layer: OnceLock::new(),
        id_seed: rng.split(2).seed(),
        columns,
        source,
        target,
        id_domain_size,
    })
}

/// Materialize the identifier layer for `id_seed`.
fn make_id_layer(num_vertices: usize, id_domain_size: u64, id_seed: u64) -> IdLayer {
    let mut id_rng = SplitRng::seeded(id_seed);
    if id_domain_size == num_vertices as u64 {
        let mut ids: Vec<Ident> = (1..=num_vertices as u64).collect();
        ids.shuffle(&mut id_rng);
        let mut slots = vec![Vertex::MAX; num_vertices];
        for (v, &id) in ids.iter().enumerate() {
            slots[id as usize - 1] = v as Vertex;
        }
        IdLayer {
            ids,
            lookup: IdLookup::Dense(slots),
        }
    } else {
        let mut map = HashMap::with_capacity(num_vertices);
        let mut ids = Vec::with_capacity(num_vertices);
        while ids.len() < num_vertices {
            let candidate = id_rng.random_range(1..=id_domain_size);
            if let std::collections::hash_map::Entry::Vacant(e) = map.entry(candidate) {
                e.insert(ids.len() as Vertex);
                ids.push(candidate);
            }
        }
        IdLayer {
            ids,
            lookup: IdLookup::Sparse(map),
        }
    }
}

/// For each arc `(u, v)`, the port of `v` that leads back to `u`.
fn recip_ports(offsets: &[u32], neighbors: &[Vertex]) -> Vec<Port> {
    let mut recip = vec![0 as Port; neighbors.len()];
    for u in 0..offsets.len() - 1 {
        for slot in offsets[u] as usize..offsets[u + 1] as usize {
            let v = neighbors[slot] as usize;
            let back = neighbors[offsets[v] as usize..offsets[v + 1] as usize]
                .iter()
                .position(|&w| w == u as Vertex)
                .expect("adjacency must be symmetric");
            recip[slot] = (back + 1) as Port;
        }
    }
    recip
}

impl WeldedTreesInstance {
    fn assemble(
        n: u32,
        adj: Vec<Vec<Vertex>>,
        ids: Vec<Ident>,
        columns: Vec<u16>,
        source: Vertex,
        target: Vertex,
        id_domain_size: u64,
    ) -> Self {
        let num_vertices = adj.len();
        let mut offsets = Vec::with_capacity(num_vertices + 1);
        offsets.push(0u32);
        let mut neighbors = Vec::new();
        for list in &adj {
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len() as u32);
        }
        let recip_port = OnceLock::new();
        recip_port
            .set(recip_ports(&offsets, &neighbors))
            .expect("fresh cell");
        let lookup = IdLookup::Sparse(
            ids.iter()
                .enumerate()
                .map(|(v, &id)| (id, v as Vertex))
                .collect(),
        );
        let id_layer = OnceLock::new();
        id_layer.set(IdLayer { ids, lookup }).expect("fresh cell");
        WeldedTreesInstance {
            n,
            offsets,
            neighbors,
            recip_port,
            id_layer,
            id_seed: 0,
            columns,
            source,
            target,
            id_domain_size,
        }
    }

    /// Reciprocal ports, computed on first use.
    fn recips(&self) -> &[Port] {
        self.recip_port
            .get_or_init(|| recip_ports(&self.offsets, &self.neighbors))
    }

    /// Identifier layer, materialized on first use.
    fn ids(&self) -> &IdLayer {
        self.id_layer
            .get_or_init(|| make_id_layer(self.num_vertices(), self.id_domain_size, self.id_seed))
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn num_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Number of directed arcs, `2 |E|`.
    pub fn num_arcs(&self) -> usize {
        self.neighbors.len()
    }

    pub fn source(&self) -> Vertex {
        self.source
    }

    pub fn target(&self) -> Vertex {
        self.target
    }

    pub fn degree(&self, v: Vertex) -> usize {
        (self.offsets[v as usize + 1] - self.offsets[v as usize]) as usize
    }

    /// Neighbors of `v` in port order (slot `s` is port `s + 1`).
    pub fn neighbors_of(&self, v: Vertex) -> &[Vertex] {
        &self.neighbors[self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize]
    }

    /// Arc index range of the arcs leaving `v`.
    pub fn arc_range(&self, v: Vertex) -> std::ops::Range<usize> {
        self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize
    }

    /// Head vertex of arc `a`.
    pub fn arc_head(&self, a: usize) -> Vertex {
        self.neighbors[a]
    }

    /// Index of the reversed arc `(v, u)` for arc `a = (u, v)`.
    pub fn rev_arc(&self, a: usize) -> usize {
        let v = self.neighbors[a] as usize;
        self.offsets[v] as usize + (self.recips()[a] - 1) as usize
    }

    /// The neighbor reached from `v` through `port`, when it exists.
    pub fn port_target(&self, v: Vertex, port: Port) -> Option<Vertex> {
        if port == 0 || port as usize > self.degree(v) {
            return None;
        }
        Some(self.neighbors[self.offsets[v as usize] as usize + port as usize - 1])
    }

    pub fn id_of(&self, v: Vertex) -> Ident {
        self.ids().ids[v as usize]
    }

    pub fn vertex_of(&self, id: Ident) -> Option<Vertex> {
        self.ids().lookup.get(id)
    }

    pub fn id_domain_size(&self) -> u64 {
        self.id_domain_size
    }

    /// BFS distance of `v` from source.
    pub fn column_of(&self, v: Vertex) -> u32 {
        self.columns[v as usize] as u32
    }

    /// Vertices of column `k`, ascending by structural index. The structural
    /// layout does not depend on the seed, so these sets are identical across
    /// instances of the same height.
    pub fn column_members(&self, k: u32) -> Vec<Vertex> {
        (0..self.num_vertices() as Vertex)
            .filter(|&v| self.columns[v as usize] as u32 == k)
            .collect()
    }

    /// The neighborhood oracle: for a node identifier and one of its ports,
    /// the identifier on the other end and the port leading back. The roots'
    /// port 3 answers bottom.
    pub fn oracle_query(&self, id: Ident, port: Port) -> Result<OracleAnswer, GraphError> {
        if port == 0 || port > 3 {
            return Err(GraphError::InvalidPort(port));
        }
        let v = self
            .vertex_of(id)
            .ok_or(GraphError::UnknownIdentifier(id))?;
        match self.port_target(v, port) {
            Some(u) => {
                let slot = self.offsets[v as usize] as usize + port as usize - 1;
                Ok(OracleAnswer::Link {
                    id: self.id_of(u),
                    port: self.recips()[slot],
                })
            }
            None => {
                debug_assert!(v == self.source || v == self.target);
                Ok(OracleAnswer::Bottom)
            }
        }
    }

    /// Serialize to the plain-text edge-list format: a header line followed
    /// by one `id_u,port_u,id_v,port_v` record per undirected edge, sorted by
    /// identifier pair.
    pub fn serialize(&self) -> String {
        let ids = &self.ids().ids;
        let recips = self.recips();
        let mut records = Vec::with_capacity(self.num_edges());
        for u in 0..self.num_vertices() as Vertex {
            for slot in self.arc_range(u) {
                let v = self.neighbors[slot];
                let (id_u, id_v) = (ids[u as usize], ids[v as usize]);
                if id_u < id_v {
                    let port_u = (slot - self.offsets[u as usize] as usize + 1) as Port;
                    records.push((id_u, port_u, id_v, recips[slot]));
                }
            }
        }
        records.sort_unstable();
        let mut out = String::new();
        write!(
            out,
            "weldedtrees v1 n={} source={} target={}",
            self.n,
            ids[self.source as usize],
            ids[self.target as usize]
        )
        .unwrap();
        if self.id_domain_size != self.num_vertices() as u64 {
            write!(out, " domain={}", self.id_domain_size).unwrap();
        }
        out.push('\n');
        for (id_u, port_u, id_v, port_v) in records {
            writeln!(out, "{id_u},{port_u},{id_v},{port_v}").unwrap();
        }
        out
    }

    /// Parse and fully validate an instance from the edge-list format.
    pub fn deserialize(text: &str) -> Result<Self, GraphError> {
        let parse = |line: usize, msg: &str| GraphError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| parse(1, "empty input"))?;
        let mut n = None;
        let mut source_id = None;
        let mut target_id = None;
        let mut domain = None;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some("weldedtrees") || tokens.next() != Some("v1") {
            return Err(parse(1, "expected header `weldedtrees v1 ...`"));
        }
        for token in tokens {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| parse(1, "malformed header field"))?;
            match key {
                "n" => n = value.parse::<u32>().ok(),
                "source" => source_id = value.parse::<Ident>().ok(),
                "target" => target_id = value.parse::<Ident>().ok(),
                "domain" => domain = value.parse::<u64>().ok(),
                _ => return Err(parse(1, &format!("unknown header field `{key}`"))),
            }
        }
        let n = n.ok_or_else(|| parse(1, "missing or invalid n"))?;
        let source_id = source_id.ok_or_else(|| parse(1, "missing or invalid source"))?;
        let target_id = target_id.ok_or_else(|| parse(1, "missing or invalid target"))?;
        if n == 0 {
            return Err(GraphError::HeightTooSmall);
        }
        if n > MAX_N {
            return Err(GraphError::SizeLimit(n));
        }
        let num_vertices = num_vertices_for(n) as usize;
        let id_domain_size = domain.unwrap_or(num_vertices as u64);

        // First pass: assign dense indices by first appearance.
        let mut vertex_of_id: HashMap<Ident, Vertex> = HashMap::with_capacity(num_vertices);
        let mut ids: Vec<Ident> = Vec::with_capacity(num_vertices);
        let mut ports: Vec<[Option<Vertex>; 3]> = Vec::with_capacity(num_vertices);
        let intern = |id: Ident,
                          ids: &mut Vec<Ident>,
                          ports: &mut Vec<[Option<Vertex>; 3]>,
                          map: &mut HashMap<Ident, Vertex>|
         -> Vertex {
            *map.entry(id).or_insert_with(|| {
                ids.push(id);
                ports.push([None; 3]);
                (ids.len() - 1) as Vertex
            })
        };
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(parse(lineno, "expected 4 comma-separated fields"));
            }
            let id_u: Ident = fields[0]
                .trim()
                .parse()
                .map_err(|_| parse(lineno, "bad id"))?;
            let port_u: Port = fields[1]
                .trim()
                .parse()
                .map_err(|_| parse(lineno, "bad port"))?;
            let id_v: Ident = fields[2]
                .trim()
                .parse()
                .map_err(|_| parse(lineno, "bad id"))?;
            let port_v: Port = fields[3]
                .trim()
                .parse()
                .map_err(|_| parse(lineno, "bad port"))?;
            if !(1..=3).contains(&port_u) || !(1..=3).contains(&port_v) {
                return Err(parse(lineno, "port outside [1..3]"));
            }
            let u = intern(id_u, &mut ids, &mut ports, &mut vertex_of_id);
            let v = intern(id_v, &mut ids, &mut ports, &mut vertex_of_id);
            if ids.len() > num_vertices {
                return Err(parse(lineno, "more identifiers than vertices"));
            }
            for (w, port, other) in [(u, port_u, v), (v, port_v, u)] {
                let slot = &mut ports[w as usize][port as usize - 1];
                if slot.is_some() {
                    return Err(parse(lineno, "duplicate port assignment"));
                }
                *slot = Some(other);
            }
        }
        if ids.len() != num_vertices {
            return Err(GraphError::Validation(format!(
                "expected {num_vertices} vertices, found {}",
                ids.len()
            )));
        }
        let source = *vertex_of_id
            .get(&source_id)
            .ok_or_else(|| GraphError::Validation("source id not present".into()))?;
        let target = *vertex_of_id
            .get(&target_id)
            .ok_or_else(|| GraphError::Validation("target id not present".into()))?;

        // Ports must form a bijection [deg] -> neighbors: occupied slots are
        // a prefix of [1..3].
        let mut adj: Vec<Vec<Vertex>> = Vec::with_capacity(num_vertices);
        for (v, slots) in ports.iter().enumerate() {
            let deg = slots.iter().filter(|s| s.is_some()).count();
            let mut list = Vec::with_capacity(deg);
            for (i, slot) in slots.iter().enumerate() {
                if let Some(w) = slot {
                    if i >= deg {
                        return Err(GraphError::Validation(format!(
                            "vertex with id {} has a gap in its port numbering",
                            ids[v]
                        )));
                    }
                    list.push(*w);
                }
            }
            adj.push(list);
        }

        // Columns via BFS from source.
        let columns = bfs_columns(&adj, source)?;

        let inst = WeldedTreesInstance::assemble(
            n,
            adj,
            ids,
            columns,
            source,
            target,
            id_domain_size,
        );
        inst.validate()?;
        Ok(inst)
    }

    /// Check every structural invariant. Construction satisfies these by
    /// design; deserialized data is checked before use.
    pub fn validate(&self) -> Result<(), GraphError> {
        let fail = |msg: String| Err(GraphError::Validation(msg));
        let n = self.n;
        let num_vertices = num_vertices_for(n) as usize;
        if self.num_vertices() != num_vertices {
            return fail(format!(
                "vertex count {} != 2^(n+2)-2 = {num_vertices}",
                self.num_vertices()
            ));
        }
        // Degree profile: roots 2, everyone else 3.
        for v in 0..self.num_vertices() as Vertex {
            let expected = if v == self.source || v == self.target {
                2
            } else {
                3
            };
            if self.degree(v) != expected {
                return fail(format!(
                    "degree {} at vertex {v}, expected {expected}",
                    self.degree(v)
                ));
            }
        }
        // Identifier layer: distinct, within the domain, bijective when the
        // domain matches the vertex count.
        {
            let mut sorted = self.ids().ids.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return fail("identifiers are not distinct".into());
            }
        }
        for v in 0..self.num_vertices() as Vertex {
            let id = self.id_of(v);
            if id == 0 || id > self.id_domain_size {
                return fail(format!("identifier {id} outside the domain"));
            }
            if self.vertex_of(id) != Some(v) {
                return fail(format!("identifier {id} lookup is inconsistent"));
            }
        }
        // Columns: recompute by BFS, compare with the cached layer, check the
        // histogram 2^min(k, 2n+1-k).
        let adj: Vec<Vec<Vertex>> = (0..self.num_vertices() as Vertex)
            .map(|v| self.neighbors_of(v).to_vec())
            .collect();
        let bfs = bfs_columns(&adj, self.source)?;
        if bfs != self.columns {
            return fail("cached columns disagree with BFS distances".into());
        }
        let mut histogram = vec![0u64; 2 * n as usize + 2];
        for &c in &self.columns {
            let c = c as usize;
            if c >= histogram.len() {
                return fail(format!("column {c} out of range"));
            }
            histogram[c] += 1;
        }
        for (k, &count) in histogram.iter().enumerate() {
            if count != column_size(n, k as u32) {
                return fail(format!(
                    "column {k} has {count} vertices, expected {}",
                    column_size(n, k as u32)
                ));
            }
        }
        if self.column_of(self.target) != 2 * n + 1 {
            return fail("target is not in the last column".into());
        }
        // Per-column neighbor profile: this pins the two-trees-plus-weld
        // shape exactly (see module docs).
        for v in 0..self.num_vertices() as Vertex {
            let k = self.column_of(v);
            let mut up = 0; // neighbors in column k-1
            let mut down = 0; // neighbors in column k+1
            for &w in self.neighbors_of(v) {
                let kw = self.column_of(w);
                if kw + 1 == k {
                    up += 1;
                } else if kw == k + 1 {
                    down += 1;
                } else {
                    return fail(format!(
                        "edge between columns {k} and {kw} skips a level"
                    ));
                }
            }
            // Left side: one parent above, two below (children, or weld
            // edges at the leaves). Right side mirrors it.
            let expected = if k == 0 {
                (0, 2)
            } else if k <= n {
                (1, 2)
            } else if k <= 2 * n {
                (2, 1)
            } else {
                (2, 0)
            };
            if (up, down) != expected {
                return fail(format!(
                    "vertex {v} in column {k} has neighbor profile ({up},{down}), expected {expected:?}"
                ));
            }
        }
        // The weld edges (between columns n and n+1) must form one cycle.
        let leaf = self
            .column_members(n)
            .first()
            .copied()
            .expect("column n is nonempty");
        let weld_next = |prev: Vertex, cur: Vertex| -> Option<Vertex> {
            self.neighbors_of(cur)
                .iter()
                .copied()
                .find(|&w| w != prev && self.column_of(w) >= n && self.column_of(w) <= n + 1)
        };
        let start_next = self
            .neighbors_of(leaf)
            .iter()
            .copied()
            .find(|&w| self.column_of(w) == n + 1)
            .expect("leaf has weld edges");
        let (mut prev, mut cur) = (leaf, start_next);
        let mut steps = 1u64;
        while cur != leaf {
            let next = match weld_next(prev, cur) {
                Some(w) => w,
                None => return fail("weld edges do not close a cycle".into()),
            };
            prev = cur;
            cur = next;
            steps += 1;
            if steps > 1u64 << (n + 2) {
                return fail("weld traversal does not terminate".into());
            }
        }
        let cycle_len = 1u64 << (n + 1);
        if steps != cycle_len {
            return fail(format!(
                "weld cycle visits {steps} leaves, expected {cycle_len}"
            ));
        }
        Ok(())
    }
}

/// BFS distances from `start`; errors if the graph is disconnected.
fn bfs_columns(adj: &[Vec<Vertex>], start: Vertex) -> Result<Vec<u16>, GraphError> {
    let mut dist = vec![u16::MAX; adj.len()];
    dist[start as usize] = 0;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v as usize] {
            if dist[w as usize] == u16::MAX {
                dist[w as usize] = dist[v as usize] + 1;
                queue.push_back(w);
            }
        }
    }
    if dist.contains(&u16::MAX) {
        return Err(GraphError::Validation("graph is disconnected".into()));
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_instance_shape() {
        let inst = build_instance(1, 3).unwrap();
        assert_eq!(inst.num_vertices(), 6);
        assert_eq!(inst.degree(inst.source()), 2);
        assert_eq!(inst.degree(inst.target()), 2);
        let leaves: Vec<Vertex> = (0..6)
            .filter(|&v| v != inst.source() && v != inst.target())
            .collect();
        assert_eq!(leaves.len(), 4);
        for v in leaves {
            assert_eq!(inst.degree(v), 3);
        }
        // Weld cycle length 2^(n+1) = 4: edges between columns 1 and 2.
        let weld_edges = (0..6u32)
            .flat_map(|v| inst.neighbors_of(v).iter().map(move |&w| (v, w)))
            .filter(|&(v, w)| v < w && inst.column_of(v) >= 1 && inst.column_of(w) >= 1)
            .filter(|&(v, w)| inst.column_of(v) <= 2 && inst.column_of(w) <= 2)
            .count();
        assert_eq!(weld_edges, 4);
        inst.validate().unwrap();
    }

    #[test]
    fn vertex_count_formula() {
        assert_eq!(build_instance(4, 0).unwrap().num_vertices(), 62);
    }

    #[test]
    fn arc_count_formula() {
        // 2|E| = 6 * 2^(n+1) - 8.
        for n in 1..=6u32 {
            let inst = build_instance(n, 1).unwrap();
            assert_eq!(inst.num_arcs() as u64, 6 * (1u64 << (n + 1)) - 8);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = build_instance(3, 7).unwrap().serialize();
        let b = build_instance(3, 7).unwrap().serialize();
        assert_eq!(a, b);
        let c = build_instance(3, 8).unwrap().serialize();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_degenerate_heights() {
        assert!(matches!(
            build_instance(0, 1),
            Err(GraphError::HeightTooSmall)
        ));
        assert!(matches!(
            build_instance(MAX_N + 1, 1),
            Err(GraphError::SizeLimit(_))
        ));
    }

    #[test]
    fn oracle_round_trips() {
        let inst = build_instance(2, 11).unwrap();
        let source_id = inst.id_of(inst.source());
        let OracleAnswer::Link { id, port } = inst.oracle_query(source_id, 1).unwrap() else {
            panic!("port 1 of source must exist");
        };
        assert_eq!(
            inst.oracle_query(id, port).unwrap(),
            OracleAnswer::Link {
                id: source_id,
                port: 1
            }
        );
    }

    #[test]
    fn oracle_bottom_on_root_port_3() {
        let inst = build_instance(2, 5).unwrap();
        for v in [inst.source(), inst.target()] {
            assert_eq!(
                inst.oracle_query(inst.id_of(v), 3).unwrap(),
                OracleAnswer::Bottom
            );
        }
    }

    #[test]
    fn oracle_rejects_unknown_id_and_bad_port() {
        let inst = build_instance(1, 5).unwrap();
        let unknown = inst.id_domain_size() + 1;
        assert!(matches!(
            inst.oracle_query(unknown, 1),
            Err(GraphError::UnknownIdentifier(_))
        ));
        assert!(matches!(
            inst.oracle_query(inst.id_of(0), 4),
            Err(GraphError::InvalidPort(4))
        ));
    }

    #[test]
    fn leaf_ports_reach_distinct_identifiers() {
        let inst = build_instance(1, 17).unwrap();
        for v in 0..inst.num_vertices() as Vertex {
            if inst.degree(v) != 3 {
                continue;
            }
            let mut seen = Vec::new();
            for port in 1..=3 {
                match inst.oracle_query(inst.id_of(v), port).unwrap() {
                    OracleAnswer::Link { id, .. } => seen.push(id),
                    OracleAnswer::Bottom => panic!("leaf has all three ports"),
                }
            }
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), 3);
        }
    }

    #[test]
    fn columns_match_closed_form() {
        let inst = build_instance(2, 23).unwrap();
        assert_eq!(inst.column_of(inst.source()), 0);
        assert_eq!(inst.column_of(inst.target()), 2 * inst.n() + 1);
        assert_eq!(inst.column_members(2).len(), 4);
        assert_eq!(inst.column_members(3).len(), 4);
        for k in 0..=2 * inst.n() {
            assert_eq!(
                inst.column_members(k).len() as u64,
                column_size(inst.n(), k)
            );
        }
    }

    #[test]
    fn serialization_round_trip() {
        for n in 1..=5 {
            let inst = build_instance(n, 100 + n as u64).unwrap();
            let text = inst.serialize();
            let back = WeldedTreesInstance::deserialize(&text).unwrap();
            assert_eq!(back.serialize(), text);
        }
    }

    #[test]
    fn edge_record_count_matches_instance() {
        let inst = build_instance(1, 9).unwrap();
        let text = inst.serialize();
        let records = text.lines().count() - 1;
        assert_eq!(records, inst.num_edges());
    }

    #[test]
    fn deserialize_rejects_degree_violation() {
        let inst = build_instance(1, 2).unwrap();
        let text = inst.serialize();
        // Drop one edge record: some vertex ends up with degree below profile.
        let mut lines: Vec<&str> = text.lines().collect();
        lines.pop();
        let truncated = lines.join("\n");
        assert!(WeldedTreesInstance::deserialize(&truncated).is_err());
    }

    #[test]
    fn deserialize_reports_line_numbers() {
        let inst = build_instance(1, 2).unwrap();
        let mut text = inst.serialize();
        text.push_str("not,a,valid\n");
        let expected_line = text.lines().count();
        match WeldedTreesInstance::deserialize(&text) {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, expected_line),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn scaled_domain_round_trips() {
        let inst = build_instance_with(2, 4, IdDomain::Scaled(100)).unwrap();
        assert_eq!(inst.id_domain_size(), 1400);
        inst.validate().unwrap();
        let text = inst.serialize();
        let back = WeldedTreesInstance::deserialize(&text).unwrap();
        assert_eq!(back.id_domain_size(), 1400);
        assert_eq!(back.serialize(), text);
    }
}
