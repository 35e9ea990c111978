//! Domain trust weights from link-graph PageRank.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{IngestError, QueryCorpus};

/// Directed graph over domains. Self-loops and repeated edges are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainGraph {
    nodes: Vec<String>,
    edges: Vec<(usize, usize)>,
}

impl DomainGraph {
    pub fn new(nodes: Vec<String>, edges: Vec<(usize, usize)>) -> Result<Self, IngestError> {
        let n = nodes.len();
        let mut seen = BTreeSet::new();
        let mut kept = Vec::with_capacity(edges.len());
        for (from, to) in edges {
            if from >= n || to >= n {
                return Err(IngestError::InvalidGraph(format!(
                    "edge ({from}, {to}) out of range for {n} nodes"
                )));
            }
            if from != to && seen.insert((from, to)) {
                kept.push((from, to));
            }
        }
        Ok(Self { nodes, edges: kept })
    }

    /// Build from named edges, creating nodes in first-seen order.
    pub fn from_named_edges<'a, I>(edges: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut nodes = Vec::new();
        let mut id = |name: &str| -> usize {
            *index.entry(name.to_string()).or_insert_with(|| {
                nodes.push(name.to_string());
                nodes.len() - 1
            })
        };
        let pairs: Vec<(usize, usize)> = edges.into_iter().map(|(a, b)| (id(a), id(b))).collect();
        Self::new(nodes, pairs).expect("indices come from the node table")
    }

    /// Read a `from,to` CSV of domain links (header row required).
    pub fn from_csv(path: &Path) -> Result<Self, IngestError> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| IngestError::InvalidGraph(e.to_string()))?;
        let mut pairs = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| IngestError::InvalidGraph(e.to_string()))?;
            if row.len() < 2 {
                return Err(IngestError::Parse {
                    line: i + 2,
                    message: "expected from,to".into(),
                });
            }
            pairs.push((row[0].trim().to_ascii_lowercase(), row[1].trim().to_ascii_lowercase()));
        }
        Ok(Self::from_named_edges(pairs.iter().map(|(a, b)| (a.as_str(), b.as_str()))))
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        Self {
            damping: 0.85,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

/// Domain → weight.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DomainWeights(pub BTreeMap<String, f64>);

impl DomainWeights {
    pub fn get(&self, domain: &str) -> Option<f64> {
        self.0.get(domain).copied()
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }
}

/// Power iteration from the uniform vector:
/// `p ← (1−d)/n + d·(Mᵀp + dangling/n)`, where the mass of nodes without
/// out-links is spread uniformly. Stops once the L1 change drops below
/// `tol`; the result is renormalized to sum to one.
pub fn pagerank(graph: &DomainGraph, params: PageRankParams) -> Result<DomainWeights, IngestError> {
    let n = graph.nodes.len();
    if n == 0 {
        return Err(IngestError::InvalidGraph("graph has no nodes".into()));
    }
    if !(0.0..=1.0).contains(&params.damping) {
        return Err(IngestError::InvalidGraph(format!(
            "damping {} outside [0, 1]",
            params.damping
        )));
    }
    let mut out_degree = vec![0usize; n];
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(from, to) in &graph.edges {
        out_degree[from] += 1;
        incoming[to].push(from);
    }
    let nf = n as f64;
    let d = params.damping;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];

    for _ in 0..params.max_iter {
        let dangling: f64 = (0..n).filter(|&i| out_degree[i] == 0).map(|i| rank[i]).sum();
        let base = (1.0 - d) / nf + d * dangling / nf;
        for (j, slot) in next.iter_mut().enumerate() {
            let inflow: f64 = incoming[j]
                .iter()
                .map(|&i| rank[i] / out_degree[i] as f64)
                .sum();
            *slot = base + d * inflow;
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let change: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if change < params.tol {
            return Ok(to_weights(graph, &rank));
        }
    }
    Err(IngestError::NoConvergence {
        iterations: params.max_iter,
        last: to_weights(graph, &rank),
    })
}

fn to_weights(graph: &DomainGraph, rank: &[f64]) -> DomainWeights {
    DomainWeights(graph.nodes.iter().cloned().zip(rank.iter().copied()).collect())
}

/// Per-result weights in rank order; domains missing from `weights` get `floor`.
pub fn weights_for_corpus(corpus: &QueryCorpus, weights: &DomainWeights, floor: f64) -> Vec<f64> {
    corpus
        .records
        .iter()
        .map(|r| weights.get(&r.domain).unwrap_or(floor))
        .collect()
}

pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-6;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> DomainGraph {
        DomainGraph::new((0..n).map(|i| format!("d{i}")).collect(), edges.to_vec()).unwrap()
    }

    fn values(w: &DomainWeights, n: usize) -> Vec<f64> {
        (0..n).map(|i| w.get(&format!("d{i}")).unwrap()).collect()
    }

    #[test]
    fn two_cycle_is_even() {
        let w = pagerank(&graph(2, &[(0, 1), (1, 0)]), PageRankParams::default()).unwrap();
        for v in values(&w, 2) {
            assert!((v - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn single_node() {
        let w = pagerank(&graph(1, &[]), PageRankParams::default()).unwrap();
        assert!((w.get("d0").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_cycle_is_uniform() {
        let w = pagerank(&graph(3, &[(0, 1), (1, 2), (2, 0)]), PageRankParams::default()).unwrap();
        for v in values(&w, 3) {
            assert!((v - 1.0 / 3.0).abs() < 1e-8);
        }
        assert!((w.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn complete_graph_is_uniform() {
        let n = 6;
        let edges: Vec<_> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        let w = pagerank(&graph(n, &edges), PageRankParams::default()).unwrap();
        for v in values(&w, n) {
            assert!((v - 1.0 / n as f64).abs() < 1e-8);
        }
    }

    #[test]
    fn dangling_sink_collects_mass() {
        // a -> b, b dangling: b must outrank a
        let w = pagerank(&graph(2, &[(0, 1)]), PageRankParams::default()).unwrap();
        let v = values(&w, 2);
        assert!(v[1] > v[0]);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn no_convergence_reports_last_iterate() {
        let params = PageRankParams {
            max_iter: 2,
            tol: 0.0,
            ..Default::default()
        };
        match pagerank(&graph(3, &[(0, 1), (1, 2)]), params) {
            Err(IngestError::NoConvergence { iterations, last }) => {
                assert_eq!(iterations, 2);
                assert!((last.total() - 1.0).abs() < 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn self_loops_and_duplicates_dropped() {
        let g = DomainGraph::from_named_edges([("a", "a"), ("a", "b"), ("a", "b"), ("b", "a")]);
        assert_eq!(g.nodes(), ["a", "b"]);
        assert_eq!(g.edges(), [(0, 1), (1, 0)]);
        assert!(DomainGraph::new(vec!["x".into()], vec![(0, 3)]).is_err());
    }

    proptest! {
        #[test]
        fn relabeling_is_equivariant(
            edges in prop::collection::vec((0usize..8, 0usize..8), 0..30),
            perm in Just((0usize..8).collect::<Vec<_>>()).prop_shuffle(),
        ) {
            let g = graph(8, &edges);
            let relabeled: Vec<_> = edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
            let h = graph(8, &relabeled);
            let wg = values(&pagerank(&g, PageRankParams::default()).unwrap(), 8);
            let wh = values(&pagerank(&h, PageRankParams::default()).unwrap(), 8);
            for i in 0..8 {
                prop_assert!((wg[i] - wh[perm[i]]).abs() < 1e-9);
            }
            prop_assert!((wg.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(wg.iter().all(|&x| x >= 0.0));
        }
    }
}
