//! Undirected topologies, the generator families used in the experiments,
//! and exact structural metrics.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::rng::rng_from_seed;

/// Above this size the diameter comes from the family's closed form instead
/// of all-pairs BFS.
pub const EXACT_DIAMETER_LIMIT: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Line,
    Ring,
    Grid,
    BinaryTree,
    Complete,
    Barbell,
    Gnp,
    Star,
}

impl Family {
    /// The families swept by default experiments.
    pub const STANDARD: [Family; 7] = [
        Family::Line,
        Family::Ring,
        Family::Grid,
        Family::BinaryTree,
        Family::Complete,
        Family::Barbell,
        Family::Gnp,
    ];

    /// Families whose maximum degree does not grow with n.
    pub fn bounded_degree(self) -> bool {
        matches!(self, Family::Line | Family::Ring | Family::Grid | Family::BinaryTree)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Line => "line",
            Family::Ring => "ring",
            Family::Grid => "grid",
            Family::BinaryTree => "binary_tree",
            Family::Complete => "complete",
            Family::Barbell => "barbell",
            Family::Gnp => "gnp",
            Family::Star => "star",
        }
    }

    /// Whether `n` is a legal size for this family.
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Family::Grid => n >= 4 && is_square(n),
            Family::Barbell => n >= 4 && n % 2 == 0,
            Family::Ring => n >= 3,
            _ => n >= 2,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "line" | "path" => Family::Line,
            "ring" | "cycle" => Family::Ring,
            "grid" => Family::Grid,
            "binary_tree" | "tree" => Family::BinaryTree,
            "complete" => Family::Complete,
            "barbell" => Family::Barbell,
            "gnp" => Family::Gnp,
            "star" => Family::Star,
            other => return Err(param(format!("unknown graph family {other:?}"))),
        })
    }
}

/// Extra generator inputs. Only `gnp` reads them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    /// Edge probability; `None` means 2 ln n / n.
    pub edge_prob: Option<f64>,
    pub seed: u64,
    pub max_retries: usize,
}

impl Default for FamilyParams {
    fn default() -> Self {
        FamilyParams { edge_prob: None, seed: 0, max_retries: 100 }
    }
}

fn is_square(n: usize) -> bool {
    let s = (n as f64).sqrt().round() as usize;
    s * s == n
}

/// An immutable, connected, undirected simple graph with sorted adjacency.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    adj: Vec<Vec<usize>>,
    family: Option<Family>,
    name: String,
}

impl Topology {
    /// Builds a topology from an edge list, rejecting self-loops, duplicate
    /// edges and disconnected graphs.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], name: impl Into<String>) -> Result<Topology> {
        if n == 0 {
            return Err(param("graph needs at least one node"));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(param(format!("edge ({u}, {v}) out of range for n={n}")));
            }
            if u == v {
                return Err(param(format!("self-loop at {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(param(format!("duplicate edge at node {u}")));
            }
        }
        let g = Topology { adj, family: None, name: name.into() };
        if !g.is_connected() {
            return Err(Error::Disconnected(1));
        }
        Ok(g)
    }

    fn with_family(mut self, family: Family) -> Self {
        self.family = Some(family);
        self
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn family(&self) -> Option<Family> {
        self.family
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(|d| *d != usize::MAX)
    }

    /// Hop distances from `root`; unreachable nodes get `usize::MAX`.
    pub fn bfs_distances(&self, root: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        let mut queue = VecDeque::from([root]);
        dist[root] = 0;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Shortest-path tree from `root`. Each node's parent is the node that
    /// discovered it when neighbors are scanned in ascending order.
    pub fn bfs_tree(&self, root: usize) -> Result<SpanningTree> {
        if root >= self.n() {
            return Err(param(format!("root {root} not in graph of {} nodes", self.n())));
        }
        let mut parent = vec![None; self.n()];
        let mut depth = vec![usize::MAX; self.n()];
        let mut queue = VecDeque::from([root]);
        depth[root] = 0;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if depth[v] == usize::MAX {
                    depth[v] = depth[u] + 1;
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        Ok(SpanningTree::from_parts(root, parent, depth))
    }

    pub fn eccentricity(&self, v: usize) -> usize {
        self.bfs_distances(v).into_iter().max().unwrap_or(0)
    }

    /// Exact diameter, max degree and per-root BFS depth.
    ///
    /// Uses all-pairs BFS up to [`EXACT_DIAMETER_LIMIT`] nodes and the
    /// family closed form above it (per-root depths are then omitted).
    pub fn metrics(&self) -> GraphMetrics {
        let max_degree = self.max_degree();
        if self.n() > EXACT_DIAMETER_LIMIT {
            if let Some(d) = self.family.and_then(|f| closed_form_diameter(f, self.n())) {
                return GraphMetrics { diameter: d, max_degree, bfs_depth: None };
            }
        }
        let ecc: Vec<usize> = (0..self.n()).map(|v| self.eccentricity(v)).collect();
        GraphMetrics { diameter: ecc.iter().copied().max().unwrap_or(0), max_degree, bfs_depth: Some(ecc) }
    }

    /// Largest degree sum along the canonical BFS shortest path, over all
    /// ordered pairs of nodes. Both endpoints' degrees are included.
    pub fn max_shortest_path_degree_sum(&self) -> usize {
        let mut best = 0;
        let mut sum = vec![0usize; self.n()];
        for root in 0..self.n() {
            let tree = self.bfs_tree(root).expect("root in range");
            for v in tree.bfs_order() {
                sum[v] = self.degree(v) + tree.parent(v).map_or(0, |p| sum[p]);
                best = best.max(sum[v]);
            }
        }
        best
    }

    /// Like [`max_shortest_path_degree_sum`](Self::max_shortest_path_degree_sum)
    /// but maximized over every shortest path, by a longest-path pass over
    /// each BFS layering.
    pub fn max_any_shortest_path_degree_sum(&self) -> usize {
        let n = self.n();
        let mut best = 0;
        let mut sum = vec![0usize; n];
        let mut order: Vec<usize> = (0..n).collect();
        for root in 0..n {
            let dist = self.bfs_distances(root);
            order.sort_by_key(|&v| dist[v]);
            for &v in &order {
                let from = self.adj[v]
                    .iter()
                    .filter(|&&u| dist[u] + 1 == dist[v])
                    .map(|&u| sum[u])
                    .max()
                    .unwrap_or(0);
                sum[v] = self.degree(v) + from;
                best = best.max(sum[v]);
            }
        }
        best
    }

    /// Serializes as "n m" followed by one "u v" line per edge (0-based, u < v).
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n(), self.edge_count());
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Topology> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (lno, header) = lines.next().ok_or(Error::Format { line: 1, msg: "empty edge list".into() })?;
        let [n, m] = parse_pair(header, lno + 1)?;
        let mut edges = Vec::with_capacity(m);
        for (lno, line) in lines {
            let [u, v] = parse_pair(line, lno + 1)?;
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(Error::Format { line: 1, msg: format!("header declares {m} edges, found {}", edges.len()) });
        }
        Topology::from_edges(n, &edges, format!("edgelist(n={n})"))
    }
}

fn parse_pair(line: &str, lno: usize) -> Result<[usize; 2]> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let bad = |msg: String| Error::Format { line: lno, msg };
    if fields.len() != 2 {
        return Err(bad(format!("expected two integers, got {line:?}")));
    }
    let p = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("{s:?}: {e}")));
    Ok([p(fields[0])?, p(fields[1])?])
}

/// Diameter formulas for the deterministic families.
pub fn closed_form_diameter(family: Family, n: usize) -> Option<usize> {
    Some(match family {
        Family::Line => n - 1,
        Family::Ring => n / 2,
        Family::Grid => 2 * ((n as f64).sqrt().round() as usize - 1),
        Family::Complete => 1,
        Family::Barbell => 3,
        Family::Star => {
            if n == 2 {
                1
            } else {
                2
            }
        }
        Family::BinaryTree => {
            if n == 2 {
                return Some(1);
            }
            let h = usize::BITS as usize - 1 - n.leading_zeros() as usize;
            // First level-h descendant of node 2 in heap order.
            let right_first = (1usize << h) - 1 + (1usize << (h - 1));
            let right_depth = if n > right_first { h } else { h - 1 };
            h + right_depth
        }
        Family::Gnp => return None,
    })
}

/// Generates a topology of the given family.
pub fn generate(family: Family, n: usize, params: &FamilyParams) -> Result<Topology> {
    if !family.accepts(n) {
        return Err(param(format!("{family} cannot have n={n}")));
    }
    let name = format!("{family}(n={n})");
    let mut edges = Vec::new();
    match family {
        Family::Line => edges.extend((1..n).map(|i| (i - 1, i))),
        Family::Ring => {
            edges.extend((1..n).map(|i| (i - 1, i)));
            edges.push((0, n - 1));
        }
        Family::Grid => {
            let s = (n as f64).sqrt().round() as usize;
            for r in 0..s {
                for c in 0..s {
                    let v = r * s + c;
                    if c + 1 < s {
                        edges.push((v, v + 1));
                    }
                    if r + 1 < s {
                        edges.push((v, v + s));
                    }
                }
            }
        }
        Family::BinaryTree => edges.extend((1..n).map(|i| ((i - 1) / 2, i))),
        Family::Complete => clique(0..n, &mut edges),
        Family::Barbell => {
            let h = n / 2;
            clique(0..h, &mut edges);
            clique(h..n, &mut edges);
            edges.push((0, h));
        }
        Family::Star => edges.extend((1..n).map(|i| (0, i))),
        Family::Gnp => {
            let p = params.edge_prob.unwrap_or(2.0 * (n as f64).ln() / n as f64);
            if !(p > 0.0 && p <= 1.0) {
                return Err(param(format!("gnp edge probability {p} not in (0, 1]")));
            }
            let mut rng = rng_from_seed(params.seed);
            for attempt in 1..=params.max_retries.max(1) {
                let mut edges = Vec::new();
                for u in 0..n {
                    for v in u + 1..n {
                        if rng.random::<f64>() < p {
                            edges.push((u, v));
                        }
                    }
                }
                match Topology::from_edges(n, &edges, format!("gnp(n={n},p={p:.4})")) {
                    Ok(g) => return Ok(g.with_family(Family::Gnp)),
                    Err(Error::Disconnected(_)) => log::debug!("gnp draw {attempt} disconnected, resampling"),
                    Err(e) => return Err(e),
                }
            }
            return Err(Error::Disconnected(params.max_retries.max(1)));
        }
    }
    Ok(Topology::from_edges(n, &edges, name)?.with_family(family))
}

fn clique(range: std::ops::Range<usize>, edges: &mut Vec<(usize, usize)>) {
    for u in range.clone() {
        for v in u + 1..range.end {
            edges.push((u, v));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphMetrics {
    pub diameter: usize,
    pub max_degree: usize,
    /// BFS depth (eccentricity) per root, when computed exactly.
    pub bfs_depth: Option<Vec<usize>>,
}

/// A rooted spanning tree given by parent pointers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanningTree {
    root: usize,
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    l_max: usize,
}

impl SpanningTree {
    fn from_parts(root: usize, parent: Vec<Option<usize>>, depth: Vec<usize>) -> Self {
        let l_max = depth.iter().copied().max().unwrap_or(0);
        SpanningTree { root, parent, depth, l_max }
    }

    /// Builds a tree from parent pointers, checking that every node reaches
    /// `root` and that every parent edge exists in `g`.
    pub fn from_parents(g: &Topology, root: usize, parent: Vec<Option<usize>>) -> Result<Self> {
        let n = g.n();
        if parent.len() != n || root >= n {
            return Err(param("parent map does not match graph size"));
        }
        if parent[root].is_some() {
            return Err(param("root has a parent"));
        }
        let mut depth = vec![usize::MAX; n];
        depth[root] = 0;
        for start in 0..n {
            let mut path = Vec::new();
            let mut v = start;
            while depth[v] == usize::MAX {
                if path.len() > n {
                    return Err(param("parent pointers contain a cycle"));
                }
                path.push(v);
                let p = parent[v].ok_or_else(|| param(format!("node {v} has no parent")))?;
                if !g.has_edge(v, p) {
                    return Err(param(format!("parent edge ({v}, {p}) not in graph")));
                }
                v = p;
            }
            let mut d = depth[v];
            for &u in path.iter().rev() {
                d += 1;
                depth[u] = d;
            }
        }
        Ok(Self::from_parts(root, parent, depth))
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    /// Depth of the deepest node.
    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.n()];
        for (v, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                ch[*p].push(v);
            }
        }
        ch
    }

    /// Nodes sorted by depth, ties by id.
    pub fn bfs_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.sort_by_key(|&v| (self.depth[v], v));
        order
    }
}
