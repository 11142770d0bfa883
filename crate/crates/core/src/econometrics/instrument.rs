//! Similarity instrument: each country's score is instrumented by the mean
//! score of its most similar non-neighboring countries, with similarity
//! measured as minimum conditional co-specialization probability.

use serde::Serialize;

use super::EconError;
use crate::complexity::ComplexityScores;
use crate::ingest::NeighborGraph;
use crate::specialization::SpecializationMatrix;

#[derive(Debug, Clone, Serialize)]
pub struct InstrumentValue {
    pub country: String,
    pub value: f64,
    /// Peer countries whose scores were averaged, in selection order.
    pub peers: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstrumentResult {
    pub k: usize,
    pub values: Vec<InstrumentValue>,
    /// Countries with no eligible (non-self, non-neighbor) peer.
    pub dropped: Vec<String>,
}

impl InstrumentResult {
    pub fn value_for(&self, country: &str) -> Option<f64> {
        self.values.iter().find(|v| v.country == country).map(|v| v.value)
    }
}

/// Pairwise country similarity: shared specializations divided by the
/// larger diversity.
fn similarity(m: &SpecializationMatrix, a: usize, b: usize) -> f64 {
    let entries = m.entries();
    let mut shared = 0u32;
    for l in 0..entries.ncols() {
        if entries[(a, l)] == 1 && entries[(b, l)] == 1 {
            shared += 1;
        }
    }
    shared as f64 / m.diversity()[a].max(m.diversity()[b]) as f64
}

/// Builds the instrument: the mean standardized score of the top-`k` most
/// similar non-neighboring countries (ties by country code). Countries
/// with no eligible peer are dropped and reported; countries with fewer
/// than `k` eligible peers use all of them.
pub fn build_similarity_instrument(
    scores: &ComplexityScores,
    m: &SpecializationMatrix,
    graph: &NeighborGraph,
    k: usize,
) -> Result<InstrumentResult, EconError> {
    if k == 0 {
        return Err(EconError::InvalidSpec("instrument peer count k must be at least 1".into()));
    }
    if scores.countries != m.countries() {
        return Err(EconError::InvalidSpec(
            "complexity scores and specialization matrix cover different countries".into(),
        ));
    }
    let countries = m.countries();
    let n = countries.len();
    let mut values = Vec::new();
    let mut dropped = Vec::new();
    for c in 0..n {
        let mut candidates: Vec<(f64, usize)> = (0..n)
            .filter(|&other| other != c && !graph.are_neighbors(&countries[c], &countries[other]))
            .map(|other| (similarity(m, c, other), other))
            .collect();
        if candidates.is_empty() {
            dropped.push(countries[c].clone());
            continue;
        }
        candidates.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .expect("finite similarity")
                .then_with(|| countries[a.1].cmp(&countries[b.1]))
        });
        let chosen: Vec<usize> = candidates.iter().take(k).map(|&(_, idx)| idx).collect();
        let value = chosen.iter().map(|&idx| scores.eci_z[idx]).sum::<f64>() / chosen.len() as f64;
        values.push(InstrumentValue {
            country: countries[c].clone(),
            value,
            peers: chosen.iter().map(|&idx| countries[idx].clone()).collect(),
        });
    }
    Ok(InstrumentResult { k, values, dropped })
}
