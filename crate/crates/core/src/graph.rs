//! Matsubara graphs: oriented, connected multigraphs without self-loops in
//! which every vertex has degree at least two.
//!
//! Vertices are addressed by their position in the input order. The last
//! vertex is the root; its `N` symbol is eliminated through `Σ_v N_v = 0`.
//! Lines are addressed by their positive integer id and are always kept
//! sorted by id, so parallel lines stay distinct objects.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest number of lines accepted by the subset-enumerating operations.
pub const MAX_LINES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LineId(pub u32);

impl fmt::Display for LineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("line {0} joins a vertex to itself")]
    SelfLoop(LineId),
    #[error("vertex {0:?} has degree below two")]
    DegreeBelowTwo(String),
    #[error("graph is not connected")]
    Disconnected,
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("unknown line {0}")]
    UnknownLine(LineId),
    #[error("line ids must be positive")]
    NonPositiveLineId,
    #[error("graph has no vertices")]
    Empty,
    #[error("graph has {0} lines; at most {MAX_LINES} are supported here")]
    GraphTooLarge(usize),
    #[error("line set is not a spanning tree")]
    NotASpanningTree,
    #[error("line {0} is not in the tree")]
    NotInTree(LineId),
    #[error("line {0} is in the tree")]
    InTree(LineId),
    #[error("malformed graph description: {0}")]
    Parse(String),
}

/// Graph description as read from JSON, before validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGraph {
    pub vertices: Vec<String>,
    pub edges: Vec<RawEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEdge {
    pub id: i64,
    pub from: String,
    pub to: String,
}

impl RawGraph {
    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        serde_json::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Line {
    pub id: LineId,
    pub tail: usize,
    pub head: usize,
}

impl Line {
    fn other_end(&self, v: usize) -> usize {
        if self.tail == v {
            self.head
        } else {
            self.tail
        }
    }
}

/// A validated Matsubara graph. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatsubaraGraph {
    vertices: Vec<String>,
    lines: Vec<Line>,
}

/// Set of line ids, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LineSubset(pub BTreeSet<LineId>);

impl LineSubset {
    pub fn new<I: IntoIterator<Item = u32>>(ids: I) -> Self {
        LineSubset(ids.into_iter().map(LineId).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: LineId) -> bool {
        self.0.contains(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = LineId> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for LineSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "{{{}}}", ids.join(","))
    }
}

/// A spanning tree: `V - 1` lines joining every vertex without cycles.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpanningTree(LineSubset);

impl SpanningTree {
    pub fn lines(&self) -> &LineSubset {
        &self.0
    }

    pub fn contains(&self, id: LineId) -> bool {
        self.0.contains(id)
    }
}

impl fmt::Display for SpanningTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.components -= 1;
        true
    }

    pub(crate) fn components(&self) -> usize {
        self.components
    }
}

impl MatsubaraGraph {
    /// Validates a raw description. Line order in the result is by id.
    pub fn validate(raw: &RawGraph) -> Result<Self, GraphError> {
        if raw.vertices.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut index = BTreeMap::new();
        for (i, name) in raw.vertices.iter().enumerate() {
            if index.insert(name.as_str(), i).is_some() {
                return Err(GraphError::DuplicateId(name.clone()));
            }
        }
        let mut lines = Vec::with_capacity(raw.edges.len());
        let mut seen = BTreeSet::new();
        for e in &raw.edges {
            if e.id <= 0 || e.id > u32::MAX as i64 {
                return Err(GraphError::NonPositiveLineId);
            }
            let id = LineId(e.id as u32);
            if !seen.insert(id) {
                return Err(GraphError::DuplicateId(id.to_string()));
            }
            let tail = *index
                .get(e.from.as_str())
                .ok_or_else(|| GraphError::UnknownVertex(e.from.clone()))?;
            let head = *index
                .get(e.to.as_str())
                .ok_or_else(|| GraphError::UnknownVertex(e.to.clone()))?;
            if tail == head {
                return Err(GraphError::SelfLoop(id));
            }
            lines.push(Line { id, tail, head });
        }
        lines.sort_by_key(|l| l.id);

        let mut degree = vec![0usize; raw.vertices.len()];
        for l in &lines {
            degree[l.tail] += 1;
            degree[l.head] += 1;
        }
        if let Some(v) = degree.iter().position(|&d| d < 2) {
            return Err(GraphError::DegreeBelowTwo(raw.vertices[v].clone()));
        }

        let mut uf = UnionFind::new(raw.vertices.len());
        for l in &lines {
            uf.union(l.tail, l.head);
        }
        if uf.components() != 1 {
            return Err(GraphError::Disconnected);
        }

        Ok(MatsubaraGraph {
            vertices: raw.vertices.clone(),
            lines,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        Self::validate(&RawGraph::from_json(text)?)
    }

    pub fn to_raw(&self) -> RawGraph {
        RawGraph {
            vertices: self.vertices.clone(),
            edges: self
                .lines
                .iter()
                .map(|l| RawEdge {
                    id: l.id.0 as i64,
                    from: self.vertices[l.tail].clone(),
                    to: self.vertices[l.head].clone(),
                })
                .collect(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    /// Lines sorted by id.
    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn line_ids(&self) -> impl Iterator<Item = LineId> + '_ {
        self.lines.iter().map(|l| l.id)
    }

    pub fn root(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Names of the vertices that carry an independent `N` symbol.
    pub fn free_vertices(&self) -> &[String] {
        &self.vertices[..self.root()]
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    pub fn line(&self, id: LineId) -> Result<&Line, GraphError> {
        self.lines
            .binary_search_by_key(&id, |l| l.id)
            .map(|i| &self.lines[i])
            .map_err(|_| GraphError::UnknownLine(id))
    }

    /// `+1` if the line points into the vertex, `-1` if it leaves it, `0` otherwise.
    pub fn incidence_sign(&self, vertex: usize, line: LineId) -> Result<i8, GraphError> {
        if vertex >= self.vertices.len() {
            return Err(GraphError::UnknownVertex(vertex.to_string()));
        }
        let l = self.line(line)?;
        Ok(if l.head == vertex {
            1
        } else if l.tail == vertex {
            -1
        } else {
            0
        })
    }

    /// Number of independent cycles, `I - V + 1`.
    pub fn cycle_rank(&self) -> usize {
        self.lines.len() + 1 - self.vertices.len()
    }

    fn check_subset(&self, subset: &LineSubset) -> Result<(), GraphError> {
        for id in subset.iter() {
            self.line(id)?;
        }
        Ok(())
    }

    fn components_without(&self, removed: &LineSubset) -> usize {
        let mut uf = UnionFind::new(self.vertices.len());
        for l in self.lines.iter().filter(|l| !removed.contains(l.id)) {
            uf.union(l.tail, l.head);
        }
        uf.components()
    }

    /// True iff removing the lines leaves the graph disconnected.
    pub fn is_cutset(&self, subset: &LineSubset) -> Result<bool, GraphError> {
        self.check_subset(subset)?;
        Ok(self.components_without(subset) >= 2)
    }

    /// All spanning trees in lexicographic order of their sorted line ids.
    pub fn spanning_trees(&self) -> Vec<SpanningTree> {
        let mut out = Vec::new();
        let mut chosen = Vec::with_capacity(self.vertices.len() - 1);
        self.grow_trees(0, &mut chosen, &mut out);
        out
    }

    fn grow_trees(&self, next: usize, chosen: &mut Vec<LineId>, out: &mut Vec<SpanningTree>) {
        let needed = self.vertices.len() - 1;
        if chosen.len() == needed {
            out.push(SpanningTree(LineSubset(chosen.iter().copied().collect())));
            return;
        }
        if next == self.lines.len() || self.lines.len() - next < needed - chosen.len() {
            return;
        }
        // The chosen lines plus everything not yet decided must still connect the graph.
        let mut uf = UnionFind::new(self.vertices.len());
        for id in chosen.iter() {
            let l = self.line(*id).expect("chosen line exists");
            uf.union(l.tail, l.head);
        }
        for l in &self.lines[next..] {
            uf.union(l.tail, l.head);
        }
        if uf.components() != 1 {
            return;
        }

        let line = self.lines[next];
        let mut acyclic = UnionFind::new(self.vertices.len());
        for id in chosen.iter() {
            let l = self.line(*id).expect("chosen line exists");
            acyclic.union(l.tail, l.head);
        }
        if acyclic.union(line.tail, line.head) {
            chosen.push(line.id);
            self.grow_trees(next + 1, chosen, out);
            chosen.pop();
        }
        self.grow_trees(next + 1, chosen, out);
    }

    /// Spanning-tree count from the determinant of the reduced Laplacian.
    pub fn count_spanning_trees(&self) -> u128 {
        let n = self.vertices.len() - 1;
        if n == 0 {
            return 1;
        }
        let mut lap = vec![vec![0i128; n]; n];
        for l in &self.lines {
            let (a, b) = (l.tail, l.head);
            if a < n {
                lap[a][a] += 1;
            }
            if b < n {
                lap[b][b] += 1;
            }
            if a < n && b < n {
                lap[a][b] -= 1;
                lap[b][a] -= 1;
            }
        }
        bareiss_determinant(lap).unsigned_abs()
    }

    /// Checks that the subset is a spanning tree of this graph.
    pub fn spanning_tree(&self, subset: LineSubset) -> Result<SpanningTree, GraphError> {
        self.check_subset(&subset)?;
        if subset.len() + 1 != self.vertices.len() {
            return Err(GraphError::NotASpanningTree);
        }
        let mut uf = UnionFind::new(self.vertices.len());
        for id in subset.iter() {
            let l = self.line(id)?;
            if !uf.union(l.tail, l.head) {
                return Err(GraphError::NotASpanningTree);
            }
        }
        Ok(SpanningTree(subset))
    }

    /// Lines outside the tree, ascending.
    pub fn cotree(&self, tree: &SpanningTree) -> Vec<LineId> {
        self.line_ids().filter(|id| !tree.contains(*id)).collect()
    }

    /// All subsets of size `0..=max_size` that are not cutsets, ordered by size
    /// and then lexicographically.
    pub fn non_cutset_subsets(&self, max_size: usize) -> Result<Vec<LineSubset>, GraphError> {
        if self.lines.len() > MAX_LINES {
            return Err(GraphError::GraphTooLarge(self.lines.len()));
        }
        let ids: Vec<LineId> = self.line_ids().collect();
        let mut out = Vec::new();
        for size in 0..=max_size.min(ids.len()) {
            for combo in combinations(&ids, size) {
                let subset = LineSubset(combo.into_iter().collect());
                if self.components_without(&subset) == 1 {
                    out.push(subset);
                }
            }
        }
        Ok(out)
    }

    /// Every subset of the lines, ordered by size and then lexicographically.
    pub fn all_subsets(&self) -> Result<Vec<LineSubset>, GraphError> {
        if self.lines.len() > MAX_LINES {
            return Err(GraphError::GraphTooLarge(self.lines.len()));
        }
        let ids: Vec<LineId> = self.line_ids().collect();
        Ok(power_set(&ids))
    }

    /// The fundamental cutset of a tree line.
    ///
    /// Removing `tree_line` splits the tree in two; the returned side is the
    /// component `tree_line` points into. Crossing lines are signed `+1` when
    /// oriented into that side and `-1` otherwise, so `tree_line` itself is
    /// always `+1`.
    pub fn fundamental_cutset(
        &self,
        tree: &SpanningTree,
        tree_line: LineId,
    ) -> Result<(BTreeSet<usize>, BTreeMap<LineId, i8>), GraphError> {
        if !tree.contains(tree_line) {
            return Err(GraphError::NotInTree(tree_line));
        }
        let cut = self.line(tree_line)?;
        let mut uf = UnionFind::new(self.vertices.len());
        for id in tree.lines().iter().filter(|&id| id != tree_line) {
            let l = self.line(id)?;
            uf.union(l.tail, l.head);
        }
        let side_root = uf.find(cut.head);
        let side: BTreeSet<usize> = (0..self.vertices.len())
            .filter(|&v| uf.find(v) == side_root)
            .collect();
        let crossing = self
            .lines
            .iter()
            .filter_map(|l| match (side.contains(&l.tail), side.contains(&l.head)) {
                (false, true) => Some((l.id, 1)),
                (true, false) => Some((l.id, -1)),
                _ => None,
            })
            .collect();
        Ok((side, crossing))
    }

    /// The fundamental cycle of a line outside the tree.
    ///
    /// The cycle is walked in the direction of `cotree_line`; each member is
    /// signed `+1` when traversed along its own orientation. The first entry
    /// is `cotree_line` with sign `+1`, followed by the tree path in walking order.
    pub fn fundamental_cycle(
        &self,
        tree: &SpanningTree,
        cotree_line: LineId,
    ) -> Result<Vec<(LineId, i8)>, GraphError> {
        if tree.contains(cotree_line) {
            return Err(GraphError::InTree(cotree_line));
        }
        let closing = self.line(cotree_line)?;
        // Breadth-first search through the tree from the head back to the tail.
        let mut via: Vec<Option<LineId>> = vec![None; self.vertices.len()];
        let mut visited = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([closing.head]);
        visited[closing.head] = true;
        while let Some(v) = queue.pop_front() {
            if v == closing.tail {
                break;
            }
            for id in tree.lines().iter() {
                let l = self.line(id)?;
                if l.tail != v && l.head != v {
                    continue;
                }
                let w = l.other_end(v);
                if !visited[w] {
                    visited[w] = true;
                    via[w] = Some(id);
                    queue.push_back(w);
                }
            }
        }
        // Unwind from tail to head, then reverse into walking order.
        let mut path = Vec::new();
        let mut v = closing.tail;
        while v != closing.head {
            let id = via[v].ok_or(GraphError::NotASpanningTree)?;
            let l = self.line(id)?;
            let prev = l.other_end(v);
            // Walking prev -> v.
            path.push((id, if l.tail == prev { 1 } else { -1 }));
            v = prev;
        }
        path.reverse();
        let mut cycle = vec![(cotree_line, 1)];
        cycle.extend(path);
        Ok(cycle)
    }
}

fn bareiss_determinant(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&r| m[r][k] != 0) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

pub(crate) fn combinations<T: Copy>(items: &[T], k: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec<T: Copy>(items: &[T], k: usize, start: usize, cur: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut current, &mut out);
    out
}

pub(crate) fn power_set(ids: &[LineId]) -> Vec<LineSubset> {
    (0..=ids.len())
        .flat_map(|k| combinations(ids, k))
        .map(|c| LineSubset(c.into_iter().collect()))
        .collect()
}
