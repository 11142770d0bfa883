//! Activity-activity proximity, country-activity relatedness density, and
//! the spanning-tree network backbone used for visualization exports.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::specialization::SpecializationMatrix;

#[derive(Debug, Error)]
pub enum RelatednessError {
    #[error("activity `{0}` has zero ubiquity; proximity is undefined")]
    ZeroUbiquity(String),
    #[error("activity `{0}` has a zero proximity-row sum; density is undefined")]
    ZeroDenominator(String),
    #[error("invalid backbone threshold {0}: must lie in [0, 1]")]
    InvalidThreshold(f64),
    #[error("proximity labels do not match specialization labels")]
    LabelMismatch,
}

/// Symmetric activity-activity proximity with unit diagonal: the share of
/// countries specialized in both activities among countries specialized in
/// the more ubiquitous one.
#[derive(Debug, Clone)]
pub struct ProximityMatrix {
    activities: Vec<String>,
    values: DMatrix<f64>,
}

impl ProximityMatrix {
    pub fn from_parts(activities: Vec<String>, values: DMatrix<f64>) -> Self {
        assert_eq!(activities.len(), values.nrows());
        assert_eq!(values.nrows(), values.ncols());
        Self { activities, values }
    }

    pub fn activities(&self) -> &[String] {
        &self.activities
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[(a, b)]
    }
}

/// Computes pairwise proximity. Co-occurrence counts divide by the larger
/// ubiquity, which equals the minimum of the two conditional probabilities.
pub fn proximity(m: &SpecializationMatrix) -> Result<ProximityMatrix, RelatednessError> {
    if let Some(idx) = m.ubiquity().iter().position(|&k| k == 0) {
        return Err(RelatednessError::ZeroUbiquity(m.activities()[idx].clone()));
    }
    let entries = m.entries();
    let n_act = entries.ncols();
    let mut values = DMatrix::zeros(n_act, n_act);
    for a in 0..n_act {
        values[(a, a)] = 1.0;
        for b in (a + 1)..n_act {
            let mut cooc = 0u32;
            for c in 0..entries.nrows() {
                if entries[(c, a)] == 1 && entries[(c, b)] == 1 {
                    cooc += 1;
                }
            }
            let denom = m.ubiquity()[a].max(m.ubiquity()[b]) as f64;
            let phi = cooc as f64 / denom;
            values[(a, b)] = phi;
            values[(b, a)] = phi;
        }
    }
    Ok(ProximityMatrix {
        activities: m.activities().to_vec(),
        values,
    })
}

/// Country-activity relatedness density, each entry in [0, 1].
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    countries: Vec<String>,
    activities: Vec<String>,
    values: DMatrix<f64>,
    pub include_diagonal: bool,
}

impl DensityMatrix {
    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn activities(&self) -> &[String] {
        &self.activities
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, country: &str, activity: &str) -> Option<f64> {
        let i = self.countries.iter().position(|c| c == country)?;
        let j = self.activities.iter().position(|a| a == activity)?;
        Some(self.values[(i, j)])
    }
}

/// Relatedness density with the self-term included in both sums.
pub fn relatedness_density(
    m: &SpecializationMatrix,
    phi: &ProximityMatrix,
) -> Result<DensityMatrix, RelatednessError> {
    relatedness_density_with(m, phi, true)
}

/// As [`relatedness_density`], optionally excluding the diagonal self-term
/// from both numerator and denominator for sensitivity runs.
///
/// Numerator and denominator accumulate in the same activity order, and
/// every numerator term is bounded by its denominator term, so the ratio
/// stays in [0, 1] exactly even in floating point.
pub fn relatedness_density_with(
    m: &SpecializationMatrix,
    phi: &ProximityMatrix,
    include_diagonal: bool,
) -> Result<DensityMatrix, RelatednessError> {
    if m.activities() != phi.activities() {
        return Err(RelatednessError::LabelMismatch);
    }
    let entries = m.entries();
    let n_countries = entries.nrows();
    let n_act = entries.ncols();

    let mut denominators = vec![0.0_f64; n_act];
    for l in 0..n_act {
        let mut acc = 0.0;
        for other in 0..n_act {
            if !include_diagonal && other == l {
                continue;
            }
            acc += phi.get(l, other);
        }
        if acc <= 0.0 {
            return Err(RelatednessError::ZeroDenominator(m.activities()[l].clone()));
        }
        denominators[l] = acc;
    }

    let mut values = DMatrix::zeros(n_countries, n_act);
    for c in 0..n_countries {
        for l in 0..n_act {
            let mut numer = 0.0;
            for other in 0..n_act {
                if !include_diagonal && other == l {
                    continue;
                }
                if entries[(c, other)] == 1 {
                    numer += phi.get(l, other);
                }
            }
            values[(c, l)] = numer / denominators[l];
        }
    }
    Ok(DensityMatrix {
        countries: m.countries().to_vec(),
        activities: m.activities().to_vec(),
        values,
        include_diagonal,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BackboneEdge {
    pub a: String,
    pub b: String,
    pub phi: f64,
    pub in_spanning_tree: bool,
}

/// Maximum-spanning-tree backbone plus all edges at or above the threshold.
#[derive(Debug, Clone, Serialize)]
pub struct NetworkBackbone {
    pub activities: Vec<String>,
    pub edges: Vec<BackboneEdge>,
    /// Number of connected components of the positive-proximity graph; a
    /// value above 1 means the "tree" is a spanning forest.
    pub components: usize,
}

impl NetworkBackbone {
    pub fn is_connected(&self) -> bool {
        self.components == 1
    }

    pub fn tree_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.in_spanning_tree).count()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn root(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let r = self.root(self.parent[x]);
            self.parent[x] = r;
        }
        self.parent[x]
    }

    fn unite(&mut self, a: usize, b: usize) -> bool {
        let ra = self.root(a);
        let rb = self.root(b);
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Extracts the backbone: a maximum spanning tree over positive proximities
/// (Kruskal, ties broken by lexicographic edge label) plus every edge with
/// proximity at or above `threshold`. Zero-proximity pairs never appear.
pub fn backbone(phi: &ProximityMatrix, threshold: f64) -> Result<NetworkBackbone, RelatednessError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(RelatednessError::InvalidThreshold(threshold));
    }
    let n = phi.activities().len();
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if phi.get(a, b) > 0.0 {
                candidates.push((a, b));
            }
        }
    }
    // Descending weight; ties resolved by the lexicographically smaller
    // (label_a, label_b) pair so reruns pick the same tree.
    candidates.sort_by(|&(a1, b1), &(a2, b2)| {
        let key = |a: usize, b: usize| {
            let (first, second) = if phi.activities()[a] <= phi.activities()[b] {
                (a, b)
            } else {
                (b, a)
            };
            (phi.activities()[first].clone(), phi.activities()[second].clone())
        };
        phi.get(a2, b2)
            .partial_cmp(&phi.get(a1, b1))
            .expect("finite proximity")
            .then_with(|| key(a1, b1).cmp(&key(a2, b2)))
    });

    let mut uf = UnionFind::new(n);
    let mut in_tree = vec![false; n * n];
    let mut tree_edges = 0usize;
    for &(a, b) in &candidates {
        if uf.unite(a, b) {
            in_tree[a * n + b] = true;
            tree_edges += 1;
        }
    }
    let mut roots: Vec<usize> = (0..n).map(|i| uf.root(i)).collect();
    roots.sort_unstable();
    roots.dedup();
    let components = roots.len();

    let mut edges = Vec::new();
    for &(a, b) in &candidates {
        let tree = in_tree[a * n + b];
        let keep = tree || phi.get(a, b) >= threshold;
        if keep {
            edges.push(BackboneEdge {
                a: phi.activities()[a].clone(),
                b: phi.activities()[b].clone(),
                phi: phi.get(a, b),
                in_spanning_tree: tree,
            });
        }
    }
    debug_assert_eq!(tree_edges, n - components);
    Ok(NetworkBackbone {
        activities: phi.activities().to_vec(),
        edges,
        components,
    })
}
