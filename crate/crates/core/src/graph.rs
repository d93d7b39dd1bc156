//! Undirected simple graphs, local structure statistics and edge-list I/O.

use std::collections::{BTreeMap, VecDeque};
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::seed;

/// Graphs with fewer nodes than this use a dense adjusted adjacency and a
/// dense LU solve for converged beliefs.
pub const DENSE_THRESHOLD: usize = 2_000;

/// Undirected simple graph on nodes `0..n`.
///
/// Neighbor lists are kept sorted; degrees and local clustering coefficients
/// are computed once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
    degrees: Vec<usize>,
    clustering: Vec<f64>,
    labels: Vec<i64>,
}

impl Graph {
    /// Build a graph from an edge iterator. Duplicate and reversed pairs
    /// collapse to one edge; self-loops and out-of-range endpoints are errors.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop at node {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        Ok(Self::from_adjacency(adjacency))
    }

    /// Build from raw neighbor lists (unsorted, possibly with duplicates).
    /// Lists must be symmetric and free of self-loops.
    pub(crate) fn from_adjacency(mut adjacency: Vec<Vec<usize>>) -> Self {
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        let n = adjacency.len();
        let labels = (0..n as i64).collect();
        Self::assemble(adjacency, labels)
    }

    fn assemble(adjacency: Vec<Vec<usize>>, labels: Vec<i64>) -> Self {
        let degrees: Vec<usize> = adjacency.iter().map(Vec::len).collect();
        let edge_count = degrees.iter().sum::<usize>() / 2;
        let clustering = local_clustering(&adjacency);
        Graph {
            adjacency,
            edge_count,
            degrees,
            clustering,
            labels,
        }
    }

    pub fn complete(n: usize) -> Self {
        let adjacency = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).collect())
            .collect();
        Self::from_adjacency(adjacency)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.node_count() && self.adjacency[i].binary_search(&j).is_ok()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn clustering(&self) -> &[f64] {
        &self.clustering
    }

    /// Original node identifiers (input ids for parsed graphs, parent ids for
    /// samples, `0..n` otherwise).
    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn average_clustering(&self) -> f64 {
        if self.clustering.is_empty() {
            return 0.0;
        }
        self.clustering.iter().sum::<f64>() / self.clustering.len() as f64
    }

    /// Node-induced subgraph on `nodes`, reindexed in ascending order of the
    /// parent index.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Self {
        let mut kept: Vec<usize> = nodes.to_vec();
        kept.sort_unstable();
        kept.dedup();
        let mut index = vec![usize::MAX; self.node_count()];
        for (new, &old) in kept.iter().enumerate() {
            index[old] = new;
        }
        let adjacency = kept
            .iter()
            .map(|&old| {
                self.adjacency[old]
                    .iter()
                    .filter_map(|&v| (index[v] != usize::MAX).then_some(index[v]))
                    .collect()
            })
            .collect();
        let labels = kept.iter().map(|&old| self.labels[old]).collect();
        Self::assemble(adjacency, labels)
    }
}

/// Local clustering coefficients γ_i = 2·t_i / (d_i (d_i − 1)), with
/// γ_i = 0 when d_i ≤ 1.
pub fn clustering_coefficients(graph: &Graph) -> Vec<f64> {
    local_clustering(&graph.adjacency)
}

fn local_clustering(adjacency: &[Vec<usize>]) -> Vec<f64> {
    let n = adjacency.len();
    let mut triangles = vec![0usize; n];
    for (u, list) in adjacency.iter().enumerate() {
        for &v in list.iter().filter(|&&v| v > u) {
            // each common neighbor w > v closes the triangle (u, v, w) exactly once
            let shared = sorted_intersection(&adjacency[u], &adjacency[v], v);
            for w in shared {
                triangles[u] += 1;
                triangles[v] += 1;
                triangles[w] += 1;
            }
        }
    }
    adjacency
        .iter()
        .zip(&triangles)
        .map(|(list, &t)| {
            let d = list.len();
            if d <= 1 {
                0.0
            } else {
                2.0 * t as f64 / (d * (d - 1)) as f64
            }
        })
        .collect()
}

fn sorted_intersection(a: &[usize], b: &[usize], above: usize) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if a[i] > above {
                    out.push(a[i]);
                }
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Result of reading an edge list.
#[derive(Debug, Clone)]
pub struct ParsedEdgeList {
    pub graph: Graph,
    pub skipped_self_loops: usize,
}

const NODES_DIRECTIVE: &str = "nodes:";

/// Parse a whitespace-separated edge list (SNAP style).
///
/// Lines starting with `#` are comments, except for an optional
/// `# nodes: N` header which fixes the id space to `0..N` (this is what
/// [`write_edge_list`] emits, so isolated nodes survive a round trip).
/// Without the header, distinct ids are mapped to `0..n` in ascending order.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<ParsedEdgeList> {
    let mut declared_nodes: Option<usize> = None;
    let mut pairs: Vec<(i64, i64, usize)> = Vec::new();
    let mut skipped_self_loops = 0;

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(count) = comment.trim().strip_prefix(NODES_DIRECTIVE) {
                let count = count.trim().parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid node count in header: {:?}", count.trim()),
                })?;
                declared_nodes = Some(count);
            }
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let mut next_id = || -> Result<i64> {
            let token = tokens.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected two node ids".into(),
            })?;
            token.parse::<i64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("non-integer node id {token:?}"),
            })
        };
        let u = next_id()?;
        let v = next_id()?;
        if u == v {
            skipped_self_loops += 1;
            // a self-loop still declares its node
            pairs.push((u, u, line_no));
            continue;
        }
        pairs.push((u, v, line_no));
    }

    let (labels, index): (Vec<i64>, BTreeMap<i64, usize>) = match declared_nodes {
        Some(count) => {
            for &(u, v, line) in &pairs {
                for id in [u, v] {
                    if id < 0 || id as usize >= count {
                        return Err(Error::Parse {
                            line,
                            message: format!("node id {id} outside declared range 0..{count}"),
                        });
                    }
                }
            }
            let labels: Vec<i64> = (0..count as i64).collect();
            let index = labels.iter().map(|&l| (l, l as usize)).collect();
            (labels, index)
        }
        None => {
            let mut index = BTreeMap::new();
            for &(u, v, _) in &pairs {
                index.insert(u, 0);
                index.insert(v, 0);
            }
            for (i, slot) in index.values_mut().enumerate() {
                *slot = i;
            }
            (index.keys().copied().collect(), index)
        }
    };

    if labels.is_empty() {
        return Err(Error::EmptyGraph);
    }

    let mut adjacency = vec![Vec::new(); labels.len()];
    for &(u, v, _) in &pairs {
        if u == v {
            continue;
        }
        let (a, b) = (index[&u], index[&v]);
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    for list in &mut adjacency {
        list.sort_unstable();
        list.dedup();
    }
    Ok(ParsedEdgeList {
        graph: Graph::assemble(adjacency, labels),
        skipped_self_loops,
    })
}

pub fn parse_edge_list_str(text: &str) -> Result<ParsedEdgeList> {
    parse_edge_list(text.as_bytes())
}

/// Write the graph as a `# nodes: N` header followed by sorted `u v` pairs
/// with `u < v`, using dense indices.
pub fn write_edge_list<W: Write>(graph: &Graph, mut out: W) -> Result<()> {
    writeln!(out, "# {} {}", NODES_DIRECTIVE, graph.node_count())?;
    for (u, v) in graph.edges() {
        writeln!(out, "{u} {v}")?;
    }
    Ok(())
}

pub fn edge_list_string(graph: &Graph) -> String {
    let mut buf = Vec::new();
    write_edge_list(graph, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("edge list is ASCII")
}

/// Snowball (BFS) sample of `min(target_size, n)` nodes.
///
/// Starts from a uniformly random node; neighbors of each dequeued node are
/// visited in shuffled order. When the frontier empties before the target is
/// reached, the walk restarts at a random unvisited node.
pub fn snowball_sample(graph: &Graph, target_size: usize, seed: u64) -> Result<Graph> {
    if target_size == 0 {
        return Err(Error::InvalidInput("snowball target size must be at least 1".into()));
    }
    let n = graph.node_count();
    let target = target_size.min(n);
    let mut rng = seed::rng(seed);
    let mut visited = vec![false; n];
    let mut chosen = Vec::with_capacity(target);
    let mut queue = VecDeque::new();

    while chosen.len() < target {
        if queue.is_empty() {
            let unvisited: Vec<usize> = (0..n).filter(|&i| !visited[i]).collect();
            let start = unvisited[rng.gen_range(0..unvisited.len())];
            visited[start] = true;
            chosen.push(start);
            queue.push_back(start);
            continue;
        }
        let node = queue.pop_front().expect("queue is non-empty");
        let mut next: Vec<usize> = graph
            .neighbors(node)
            .iter()
            .copied()
            .filter(|&v| !visited[v])
            .collect();
        next.shuffle(&mut rng);
        for v in next {
            if chosen.len() == target {
                break;
            }
            visited[v] = true;
            chosen.push(v);
            queue.push_back(v);
        }
    }
    Ok(graph.induced_subgraph(&chosen))
}

/// The adjusted adjacency A*_{i,j} = A_{i,j} / (1 + d_j).
#[derive(Debug, Clone)]
pub enum AdjustedAdjacency {
    Dense(DMatrix<f64>),
    /// Row-wise sparse storage: `rows[i]` holds `(j, A*_{i,j})`.
    Sparse { n: usize, rows: Vec<Vec<(usize, f64)>> },
}

impl AdjustedAdjacency {
    pub fn new(graph: &Graph) -> Self {
        if graph.node_count() < DENSE_THRESHOLD {
            Self::dense(graph)
        } else {
            Self::sparse(graph)
        }
    }

    pub fn dense(graph: &Graph) -> Self {
        let n = graph.node_count();
        let mut m = DMatrix::zeros(n, n);
        for (u, v) in graph.edges() {
            m[(u, v)] = 1.0 / (1.0 + graph.degree(v) as f64);
            m[(v, u)] = 1.0 / (1.0 + graph.degree(u) as f64);
        }
        AdjustedAdjacency::Dense(m)
    }

    pub fn sparse(graph: &Graph) -> Self {
        let rows = (0..graph.node_count())
            .map(|i| {
                graph
                    .neighbors(i)
                    .iter()
                    .map(|&j| (j, 1.0 / (1.0 + graph.degree(j) as f64)))
                    .collect()
            })
            .collect();
        AdjustedAdjacency::Sparse {
            n: graph.node_count(),
            rows,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            AdjustedAdjacency::Dense(m) => m.nrows(),
            AdjustedAdjacency::Sparse { n, .. } => *n,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            AdjustedAdjacency::Dense(m) => m[(i, j)],
            AdjustedAdjacency::Sparse { rows, .. } => rows[i]
                .iter()
                .find(|(col, _)| *col == j)
                .map_or(0.0, |(_, v)| *v),
        }
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let n = self.size();
        let mut sums = vec![0.0; n];
        match self {
            AdjustedAdjacency::Dense(m) => {
                for (j, col) in m.column_iter().enumerate() {
                    sums[j] = col.sum();
                }
            }
            AdjustedAdjacency::Sparse { rows, .. } => {
                for row in rows {
                    for &(j, v) in row {
                        sums[j] += v;
                    }
                }
            }
        }
        sums
    }
}

pub fn adjusted_adjacency(graph: &Graph) -> AdjustedAdjacency {
    AdjustedAdjacency::new(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn parse_with_comment() {
        let parsed = parse_edge_list_str("# c\n0 1\n1 2").unwrap();
        assert_eq!(parsed.graph.node_count(), 3);
        assert_eq!(parsed.graph.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert_eq!(parsed.skipped_self_loops, 0);
    }

    #[test]
    fn parse_collapses_reversed_edges() {
        let parsed = parse_edge_list_str("0 1\n1 0").unwrap();
        assert_eq!(parsed.graph.node_count(), 2);
        assert_eq!(parsed.graph.edge_count(), 1);
    }

    #[test]
    fn parse_skips_self_loops() {
        let parsed = parse_edge_list_str("0 0\n0 1").unwrap();
        assert_eq!(parsed.graph.node_count(), 2);
        assert_eq!(parsed.graph.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(parsed.skipped_self_loops, 1);
    }

    #[test]
    fn parse_remaps_sparse_ids() {
        let parsed = parse_edge_list_str("100 7\n7 -3\n").unwrap();
        assert_eq!(parsed.graph.labels(), &[-3, 7, 100]);
        assert_eq!(parsed.graph.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn parse_reports_line_of_bad_token() {
        let err = parse_edge_list_str("0 1\n# ok\n1 x\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(matches!(
            parse_edge_list_str("0\n").unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn parse_empty_input_is_an_error() {
        assert!(matches!(parse_edge_list_str("").unwrap_err(), Error::EmptyGraph));
        assert!(matches!(
            parse_edge_list_str("# only comments\n\n").unwrap_err(),
            Error::EmptyGraph
        ));
    }

    #[test]
    fn header_keeps_isolated_nodes() {
        let g = Graph::from_edges(5, [(0, 3), (3, 1)]).unwrap();
        let text = edge_list_string(&g);
        assert!(text.starts_with("# nodes: 5\n"));
        let back = parse_edge_list_str(&text).unwrap().graph;
        assert_eq!(back.node_count(), 5);
        assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
        assert!(parse_edge_list_str("# nodes: 2\n0 5\n").is_err());
    }

    #[test]
    fn clustering_small_graphs() {
        assert_eq!(clustering_coefficients(&triangle()), vec![1.0, 1.0, 1.0]);
        assert_eq!(clustering_coefficients(&path3()), vec![0.0, 0.0, 0.0]);
        // K4 minus edge (2,3): nodes 0 and 1 have degree 3, nodes 2 and 3 degree 2
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        let gamma = g.clustering();
        assert_relative_eq!(gamma[0], 2.0 / 3.0);
        assert_relative_eq!(gamma[1], 2.0 / 3.0);
        assert_relative_eq!(gamma[2], 1.0);
        assert_relative_eq!(gamma[3], 1.0);
    }

    #[test]
    fn from_edges_rejects_bad_input() {
        assert!(Graph::from_edges(2, [(0, 0)]).is_err());
        assert!(Graph::from_edges(2, [(0, 2)]).is_err());
        let g = Graph::from_edges(3, [(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.degrees(), &[1, 1, 0]);
    }

    #[test]
    fn adjusted_adjacency_entries() {
        let a = adjusted_adjacency(&triangle());
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 0.0 } else { 1.0 / 3.0 };
                assert_relative_eq!(a.get(i, j), expected);
            }
        }
        let a = adjusted_adjacency(&path3());
        assert_relative_eq!(a.get(0, 1), 1.0 / 3.0);
        assert_relative_eq!(a.get(1, 0), 0.5);

        let g = Graph::from_edges(4, [(0, 1), (1, 2)]).unwrap();
        for a in [AdjustedAdjacency::dense(&g), AdjustedAdjacency::sparse(&g)] {
            for k in 0..4 {
                assert_eq!(a.get(3, k), 0.0);
                assert_eq!(a.get(k, 3), 0.0);
            }
            assert_eq!(a.column_sums()[3], 0.0);
        }
    }

    #[test]
    fn dense_and_sparse_agree() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 0), (3, 4), (1, 4)]).unwrap();
        let (d, s) = (AdjustedAdjacency::dense(&g), AdjustedAdjacency::sparse(&g));
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(d.get(i, j), s.get(i, j));
            }
        }
        assert_eq!(d.column_sums(), s.column_sums());
    }

    fn star(leaves: usize) -> Graph {
        Graph::from_edges(leaves + 1, (1..=leaves).map(|l| (0, l))).unwrap()
    }

    #[test]
    fn snowball_saturates_and_is_deterministic() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (3, 4)]).unwrap();
        let whole = snowball_sample(&g, 10, 3).unwrap();
        assert_eq!(whole, g);
        let a = snowball_sample(&g, 4, 11).unwrap();
        let b = snowball_sample(&g, 4, 11).unwrap();
        assert_eq!(a.labels(), b.labels());
        assert_eq!(a.node_count(), 4);
        assert!(snowball_sample(&g, 0, 1).is_err());
    }

    #[test]
    fn snowball_from_star_center() {
        let g = star(5);
        // find seeds that start at the center; the start node is uniform so some will
        let mut hits = 0;
        for seed in 0..200 {
            let s = snowball_sample(&g, 3, seed).unwrap();
            if s.labels().contains(&0) && s.degree(0) == 2 {
                hits += 1;
                assert_eq!(s.node_count(), 3);
                assert_eq!(s.edge_count(), 2);
            }
        }
        assert!(hits > 0);
        // every sample, wherever it starts, is connected through the center
        for seed in 0..50 {
            let s = snowball_sample(&g, 3, seed).unwrap();
            assert_eq!(s.labels()[0], 0);
            assert_eq!(s.edge_count(), 2);
        }
    }
}
