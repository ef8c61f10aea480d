//! Weighted graphs with killing term and measure.
//!
//! A graph here is always a *finite active truncation* of a (possibly
//! infinite) vertex set. Edges between active vertices are stored once per
//! unordered pair; edges that leave the truncation ("crossing edges") are
//! kept separately together with the tail region they lead into, so that
//! energies and Laplacians of functions with declared tail behaviour stay
//! finite and exact.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::function::VertexFunction;

/// Index of a vertex inside the active truncation.
pub type Vertex = usize;

/// Undirected edge stored once with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: Vertex,
    pub v: Vertex,
    pub weight: f64,
}

/// Edge from an active vertex to the first vertex beyond the truncation.
///
/// `region` identifies the tail component the edge leads into (the ray
/// index for star graphs, `0` for lattices and paths).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingEdge {
    pub vertex: Vertex,
    pub region: usize,
    pub weight: f64,
}

/// What infinite family the truncation was cut from.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphFamily {
    /// A finite graph given explicitly; there is nothing beyond the truncation.
    Explicit,
    /// Star with `rays` infinite rays truncated at `depth`.
    Star { rays: usize, depth: usize },
    /// Integer lattice of dimension `dim`, truncated to the ball of `radius`
    /// around the origin in graph distance.
    Lattice { dim: usize, radius: usize },
    /// Half-line 0 - 1 - 2 - ... truncated at `length`.
    Path { length: usize },
}

impl GraphFamily {
    /// Number of tail regions a function's per-region tail rule must cover.
    pub fn tail_regions(&self) -> usize {
        match self {
            GraphFamily::Explicit => 0,
            GraphFamily::Star { rays, .. } => *rays,
            GraphFamily::Lattice { .. } | GraphFamily::Path { .. } => 1,
        }
    }
}

/// A weighted graph `(b, c)` over a discrete measure space, truncated to a
/// finite active vertex set.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    labels: Vec<String>,
    index: HashMap<String, Vertex>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(Vertex, f64)>>,
    killing: Vec<f64>,
    measure: Vec<f64>,
    crossing: Vec<CrossingEdge>,
    crossing_by_vertex: Vec<Vec<usize>>,
    family: GraphFamily,
    /// True when the infinite family carries killing beyond the truncation.
    tail_killing: bool,
    /// True when the total measure of the infinite family is finite.
    tail_measure_finite: bool,
}

impl WeightedGraph {
    /// Validates and assembles a graph. Edge weights must be positive (zero
    /// weight entries are treated as absent edges and rejected to avoid
    /// ambiguity), the measure strictly positive, killing nonnegative and
    /// the active part connected.
    pub fn new(
        labels: Vec<String>,
        edges: Vec<Edge>,
        killing: Vec<f64>,
        measure: Vec<f64>,
        crossing: Vec<CrossingEdge>,
        family: GraphFamily,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Invariant("graph has no vertices".into()));
        }
        if killing.len() != n || measure.len() != n {
            return Err(Error::Invariant(
                "killing and measure must cover every vertex".into(),
            ));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::Invariant(format!("duplicate vertex label {l:?}")));
            }
        }
        for (i, &c) in killing.iter().enumerate() {
            if !(c >= 0.0) {
                return Err(Error::Invariant(format!(
                    "killing must be nonnegative, got c({}) = {c}",
                    labels[i]
                )));
            }
        }
        for (i, &m) in measure.iter().enumerate() {
            if !(m > 0.0) {
                return Err(Error::Invariant(format!(
                    "measure must be strictly positive, got m({}) = {m}",
                    labels[i]
                )));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            if e.u >= n || e.v >= n {
                return Err(Error::Invariant("edge references unknown vertex".into()));
            }
            if e.u == e.v {
                return Err(Error::Invariant(format!(
                    "self-loop at {} (b must vanish on the diagonal)",
                    labels[e.u]
                )));
            }
            if !(e.weight > 0.0) {
                return Err(Error::Invariant(format!(
                    "edge weight must be positive, got b({},{}) = {}",
                    labels[e.u], labels[e.v], e.weight
                )));
            }
            if e.u > e.v {
                return Err(Error::Invariant("edges must be stored with u < v".into()));
            }
            adjacency[e.u].push((e.v, e.weight));
            adjacency[e.v].push((e.u, e.weight));
        }
        let mut crossing_by_vertex = vec![Vec::new(); n];
        let regions = family.tail_regions();
        for (i, ce) in crossing.iter().enumerate() {
            if ce.vertex >= n {
                return Err(Error::Invariant(
                    "crossing edge references unknown vertex".into(),
                ));
            }
            if ce.region >= regions {
                return Err(Error::Invariant(format!(
                    "crossing edge region {} out of range (graph has {} tail regions)",
                    ce.region, regions
                )));
            }
            if !(ce.weight > 0.0) {
                return Err(Error::Invariant("crossing edge weight must be positive".into()));
            }
            crossing_by_vertex[ce.vertex].push(i);
        }
        let tail_measure_finite = matches!(family, GraphFamily::Explicit);
        let g = WeightedGraph {
            labels,
            index,
            edges,
            adjacency,
            killing,
            measure,
            crossing,
            crossing_by_vertex,
            family,
            tail_killing: false,
            tail_measure_finite,
        };
        if !g.is_connected() {
            return Err(Error::Invariant("graph is not connected".into()));
        }
        Ok(g)
    }

    /// Marks the infinite family as carrying killing beyond the truncation.
    /// Energies of functions with a nonvanishing tail then become infinite.
    pub fn with_tail_killing(mut self, flag: bool) -> Self {
        self.tail_killing = flag;
        self
    }

    pub(crate) fn override_killing(&mut self, v: Vertex, c: f64) {
        debug_assert!(c >= 0.0);
        self.killing[v] = c;
    }

    pub(crate) fn override_measure(&mut self, v: Vertex, m: f64) {
        debug_assert!(m > 0.0);
        self.measure[v] = m;
    }

    pub(crate) fn set_finite_total_measure(&mut self, flag: bool) {
        self.tail_measure_finite = flag;
    }

    /// Declares the total measure of the infinite family finite (e.g. a
    /// summably decaying measure was chosen beyond the truncation).
    pub fn with_finite_total_measure(mut self, flag: bool) -> Self {
        self.tail_measure_finite = flag;
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, v: Vertex) -> &str {
        &self.labels[v]
    }

    pub fn vertex(&self, label: &str) -> Option<Vertex> {
        self.index.get(label).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: Vertex) -> &[(Vertex, f64)] {
        &self.adjacency[v]
    }

    pub fn crossing_edges(&self, v: Vertex) -> impl Iterator<Item = &CrossingEdge> {
        self.crossing_by_vertex[v].iter().map(|&i| &self.crossing[i])
    }

    pub fn all_crossing_edges(&self) -> &[CrossingEdge] {
        &self.crossing
    }

    /// A vertex is interior when it has no edges leaving the truncation;
    /// pointwise identities involving the Laplacian of tail-truncated
    /// functions are only meaningful there.
    pub fn is_interior(&self, v: Vertex) -> bool {
        self.crossing_by_vertex[v].is_empty()
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.vertex_count()).filter(|&v| self.is_interior(v))
    }

    pub fn killing(&self, v: Vertex) -> f64 {
        self.killing[v]
    }

    pub fn total_killing(&self) -> f64 {
        self.killing.iter().sum()
    }

    pub fn measure(&self, v: Vertex) -> f64 {
        self.measure[v]
    }

    pub fn family(&self) -> &GraphFamily {
        &self.family
    }

    pub fn tail_regions(&self) -> usize {
        self.family.tail_regions()
    }

    pub fn has_tail_killing(&self) -> bool {
        self.tail_killing
    }

    pub fn has_finite_total_measure(&self) -> bool {
        self.tail_measure_finite
    }

    /// Weighted degree including edges that leave the truncation.
    pub fn weighted_degree(&self, v: Vertex) -> f64 {
        let inner: f64 = self.adjacency[v].iter().map(|&(_, w)| w).sum();
        let outer: f64 = self.crossing_edges(v).map(|ce| ce.weight).sum();
        inner + outer
    }

    fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        seen[0] = true;
        queue.push_back(0);
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &self.adjacency[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count == n
    }

    /// Graph distance from `root` to every active vertex.
    pub fn distances(&self, root: Vertex) -> Vec<usize> {
        let n = self.vertex_count();
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        dist[root] = 0;
        queue.push_back(root);
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &self.adjacency[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Sorted vertex list of the metric ball of `radius` around `root`.
    pub fn ball(&self, root: Vertex, radius: usize) -> Vec<Vertex> {
        let dist = self.distances(root);
        let mut ball: Vec<Vertex> = (0..self.vertex_count())
            .filter(|&v| dist[v] <= radius)
            .collect();
        ball.sort_unstable();
        ball
    }

    /// Pointwise Laplacian: sum of `b(x,y) (f(x) - f(y))` over all neighbors
    /// of `x` (crossing edges evaluate `f` by its tail rule) plus `c(x) f(x)`.
    pub fn laplacian_apply(&self, f: &VertexFunction, x: Vertex) -> Result<f64> {
        self.check_function(f)?;
        if x >= self.vertex_count() {
            return Err(Error::Eval(format!("vertex {x} out of range")));
        }
        let fx = f.value(x);
        let mut acc = self.killing[x] * fx;
        for &(y, w) in &self.adjacency[x] {
            acc += w * (fx - f.value(y));
        }
        for ce in self.crossing_edges(x) {
            acc += ce.weight * (fx - f.tail_value(ce.region));
        }
        Ok(acc)
    }

    /// Checks that a function is evaluable on this graph (dense over the
    /// truncation, per-region tails matching the family's regions).
    pub fn check_function(&self, f: &VertexFunction) -> Result<()> {
        if f.len() != self.vertex_count() {
            return Err(Error::Eval(format!(
                "function defined on {} vertices, graph has {}",
                f.len(),
                self.vertex_count()
            )));
        }
        if let Some(regions) = f.per_region_len() {
            if regions != self.tail_regions() {
                return Err(Error::Eval(format!(
                    "per-region tail covers {} regions, graph has {}",
                    regions,
                    self.tail_regions()
                )));
            }
        }
        Ok(())
    }
}

/// Builds the star truncation: a center vertex `0` and `rays` rays of
/// `depth` vertices labelled `j:k` with edge weights `weights[j][k-1]`
/// between `(k-1)_j` and `k_j`. The slice `weights[j]` must have length
/// `depth + 1`; the extra entry is the weight of the crossing edge.
pub fn star_graph(
    ray_weights: &[Vec<f64>],
    depth: usize,
    measure: impl Fn(usize, usize) -> f64,
    finite_total_measure: bool,
) -> Result<WeightedGraph> {
    let rays = ray_weights.len();
    if rays < 2 {
        return Err(Error::Invariant("a star needs at least two rays".into()));
    }
    if depth == 0 {
        return Err(Error::Invariant("star depth must be positive".into()));
    }
    for w in ray_weights {
        if w.len() != depth + 1 {
            return Err(Error::Invariant(
                "per-ray weights must cover depth + 1 edges".into(),
            ));
        }
    }
    let mut labels = vec!["0".to_string()];
    let mut measures = vec![measure(0, 0)];
    for j in 1..=rays {
        for k in 1..=depth {
            labels.push(format!("{j}:{k}"));
            measures.push(measure(j, k));
        }
    }
    let idx = |j: usize, k: usize| -> usize {
        if k == 0 {
            0
        } else {
            1 + (j - 1) * depth + (k - 1)
        }
    };
    let mut edges = Vec::new();
    let mut crossing = Vec::new();
    for (j, w) in ray_weights.iter().enumerate() {
        let j = j + 1;
        for k in 1..=depth {
            let (a, b) = (idx(j, k - 1), idx(j, k));
            edges.push(Edge {
                u: a.min(b),
                v: a.max(b),
                weight: w[k - 1],
            });
        }
        crossing.push(CrossingEdge {
            vertex: idx(j, depth),
            region: j - 1,
            weight: w[depth],
        });
    }
    let n = labels.len();
    let g = WeightedGraph::new(
        labels,
        edges,
        vec![0.0; n],
        measures,
        crossing,
        GraphFamily::Star { rays, depth },
    )?;
    Ok(g.with_finite_total_measure(finite_total_measure))
}

/// Truncation of the integer lattice `Z^d` with unit weights: all vertices
/// with graph distance at most `radius` from the origin. Labels are
/// comma-separated coordinates.
pub fn lattice_graph(dim: usize, radius: usize) -> Result<WeightedGraph> {
    if dim == 0 {
        return Err(Error::Invariant("lattice dimension must be positive".into()));
    }
    let mut points: Vec<Vec<i64>> = Vec::new();
    let mut frontier: Vec<Vec<i64>> = vec![vec![0; dim]];
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    seen.insert(vec![0; dim], 0);
    points.push(vec![0; dim]);
    for _ in 0..radius {
        let mut next = Vec::new();
        for p in frontier {
            for axis in 0..dim {
                for step in [-1i64, 1] {
                    let mut q = p.clone();
                    q[axis] += step;
                    if !seen.contains_key(&q) {
                        seen.insert(q.clone(), points.len());
                        points.push(q.clone());
                        next.push(q);
                    }
                }
            }
        }
        frontier = next;
    }
    // deterministic ordering: by distance, then lexicographic
    let mut order: Vec<usize> = (0..points.len()).collect();
    let norm = |p: &Vec<i64>| -> i64 { p.iter().map(|x| x.abs()).sum() };
    order.sort_by(|&a, &b| {
        norm(&points[a])
            .cmp(&norm(&points[b]))
            .then_with(|| points[a].cmp(&points[b]))
    });
    let points: Vec<Vec<i64>> = order.into_iter().map(|i| points[i].clone()).collect();
    let index: HashMap<Vec<i64>, usize> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), i))
        .collect();
    let labels: Vec<String> = points
        .iter()
        .map(|p| {
            p.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    let mut edges = Vec::new();
    let mut crossing = Vec::new();
    for (i, p) in points.iter().enumerate() {
        for axis in 0..dim {
            for step in [-1i64, 1] {
                let mut q = p.clone();
                q[axis] += step;
                match index.get(&q) {
                    Some(&j) => {
                        if i < j {
                            edges.push(Edge {
                                u: i,
                                v: j,
                                weight: 1.0,
                            });
                        }
                    }
                    None => crossing.push(CrossingEdge {
                        vertex: i,
                        region: 0,
                        weight: 1.0,
                    }),
                }
            }
        }
    }
    let n = labels.len();
    WeightedGraph::new(
        labels,
        edges,
        vec![0.0; n],
        vec![1.0; n],
        crossing,
        GraphFamily::Lattice { dim, radius },
    )
}

/// Truncation of the half-line graph on {0, 1, 2, ...} with unit weights.
pub fn path_graph(length: usize) -> Result<WeightedGraph> {
    if length == 0 {
        return Err(Error::Invariant("path length must be positive".into()));
    }
    let labels: Vec<String> = (0..=length).map(|k| k.to_string()).collect();
    let edges: Vec<Edge> = (0..length)
        .map(|k| Edge {
            u: k,
            v: k + 1,
            weight: 1.0,
        })
        .collect();
    let crossing = vec![CrossingEdge {
        vertex: length,
        region: 0,
        weight: 1.0,
    }];
    let n = labels.len();
    WeightedGraph::new(
        labels,
        edges,
        vec![0.0; n],
        vec![1.0; n],
        crossing,
        GraphFamily::Path { length },
    )
}
