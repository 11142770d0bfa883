//! Yearly specialization panels, entry/exit event detection over split
//! windows, and assembly of regression-ready transition datasets.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::YearlyCounts;
use crate::relatedness::DensityMatrix;
use crate::specialization::SpecializationMatrix;
use crate::stats;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("base and post windows overlap on year {0}")]
    WindowOverlap(i32),
    #[error("year {0} is not in the panel")]
    YearMissing(i32),
    #[error("window is empty")]
    EmptyWindow,
    #[error("duplicate year {0} in panel input")]
    DuplicateYear(i32),
    #[error("panel input is empty")]
    EmptyPanel,
    #[error("at-risk set is empty")]
    EmptyAtRiskSet,
    #[error("at-risk rule `{0}` requires yearly count data")]
    MissingCounts(String),
    #[error("log ubiquity transform undefined: activity `{0}` has zero base ubiquity")]
    NonPositiveUbiquity(String),
    #[error("only {found} activities overlap the external series; need at least {needed}")]
    InsufficientOverlap { found: usize, needed: usize },
}

/// Where a panel cell came from: a country or activity absent from a year's
/// matrix is zero-filled and flagged here.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ZeroFill {
    pub year: i32,
    pub kind: ZeroFillKind,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroFillKind {
    Country,
    Activity,
}

/// Yearly specialization matrices aligned onto the union label sets, in
/// strictly increasing year order. Labels are sorted lexicographically.
#[derive(Debug, Clone)]
pub struct SpecializationPanel {
    years: Vec<i32>,
    countries: Vec<String>,
    activities: Vec<String>,
    matrices: Vec<DMatrix<u8>>,
    zero_filled: Vec<ZeroFill>,
}

impl SpecializationPanel {
    pub fn from_yearly(mut items: Vec<(i32, SpecializationMatrix)>) -> Result<Self, DynamicsError> {
        if items.is_empty() {
            return Err(DynamicsError::EmptyPanel);
        }
        items.sort_by_key(|(year, _)| *year);
        for pair in items.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(DynamicsError::DuplicateYear(pair[0].0));
            }
        }

        let mut countries: BTreeSet<String> = BTreeSet::new();
        let mut activities: BTreeSet<String> = BTreeSet::new();
        for (_, m) in &items {
            countries.extend(m.countries().iter().cloned());
            activities.extend(m.activities().iter().cloned());
        }
        let countries: Vec<String> = countries.into_iter().collect();
        let activities: Vec<String> = activities.into_iter().collect();
        let country_pos: HashMap<&str, usize> =
            countries.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let activity_pos: HashMap<&str, usize> =
            activities.iter().enumerate().map(|(j, a)| (a.as_str(), j)).collect();

        let mut years = Vec::with_capacity(items.len());
        let mut matrices = Vec::with_capacity(items.len());
        let mut zero_filled = Vec::new();
        for (year, m) in &items {
            years.push(*year);
            let mut aligned = DMatrix::zeros(countries.len(), activities.len());
            for (i, c) in m.countries().iter().enumerate() {
                for (j, a) in m.activities().iter().enumerate() {
                    aligned[(country_pos[c.as_str()], activity_pos[a.as_str()])] = m.entries()[(i, j)];
                }
            }
            for c in &countries {
                if m.country_index(c).is_none() {
                    zero_filled.push(ZeroFill {
                        year: *year,
                        kind: ZeroFillKind::Country,
                        label: c.clone(),
                    });
                }
            }
            for a in &activities {
                if m.activity_index(a).is_none() {
                    zero_filled.push(ZeroFill {
                        year: *year,
                        kind: ZeroFillKind::Activity,
                        label: a.clone(),
                    });
                }
            }
            matrices.push(aligned);
        }
        Ok(Self {
            years,
            countries,
            activities,
            matrices,
            zero_filled,
        })
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn activities(&self) -> &[String] {
        &self.activities
    }

    pub fn zero_filled(&self) -> &[ZeroFill] {
        &self.zero_filled
    }

    fn year_index(&self, year: i32) -> Result<usize, DynamicsError> {
        self.years
            .iter()
            .position(|&y| y == year)
            .ok_or(DynamicsError::YearMissing(year))
    }

    pub fn value(&self, year_idx: usize, country_idx: usize, activity_idx: usize) -> u8 {
        self.matrices[year_idx][(country_idx, activity_idx)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Entry,
    Exit,
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EventKind::Entry => write!(f, "entry"),
            EventKind::Exit => write!(f, "exit"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventRecord {
    pub country: String,
    pub activity: String,
    pub kind: EventKind,
}

/// Entry/exit events for one window split, ordered by (country, activity).
#[derive(Debug, Clone, Serialize)]
pub struct EventTable {
    pub base_years: Vec<i32>,
    pub post_years: Vec<i32>,
    pub records: Vec<EventRecord>,
}

fn check_windows(
    panel: &SpecializationPanel,
    base_years: &[i32],
    post_years: &[i32],
) -> Result<(Vec<usize>, Vec<usize>), DynamicsError> {
    if base_years.is_empty() || post_years.is_empty() {
        return Err(DynamicsError::EmptyWindow);
    }
    if let Some(overlap) = base_years.iter().find(|y| post_years.contains(y)) {
        return Err(DynamicsError::WindowOverlap(*overlap));
    }
    let base_idx = base_years
        .iter()
        .map(|&y| panel.year_index(y))
        .collect::<Result<Vec<_>, _>>()?;
    let post_idx = post_years
        .iter()
        .map(|&y| panel.year_index(y))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((base_idx, post_idx))
}

/// Classifies each (country, activity) pair: entry when unspecialized in
/// every base year and specialized in every post year; exit when the exact
/// reverse holds; anything else is no event.
pub fn detect_events(
    panel: &SpecializationPanel,
    base_years: &[i32],
    post_years: &[i32],
) -> Result<EventTable, DynamicsError> {
    let (base_idx, post_idx) = check_windows(panel, base_years, post_years)?;
    let mut records = Vec::new();
    for (ci, country) in panel.countries().iter().enumerate() {
        for (ai, activity) in panel.activities().iter().enumerate() {
            let all_base_zero = base_idx.iter().all(|&t| panel.value(t, ci, ai) == 0);
            let all_base_one = base_idx.iter().all(|&t| panel.value(t, ci, ai) == 1);
            let all_post_zero = post_idx.iter().all(|&t| panel.value(t, ci, ai) == 0);
            let all_post_one = post_idx.iter().all(|&t| panel.value(t, ci, ai) == 1);
            let kind = if all_base_zero && all_post_one {
                Some(EventKind::Entry)
            } else if all_base_one && all_post_zero {
                Some(EventKind::Exit)
            } else {
                None
            };
            if let Some(kind) = kind {
                records.push(EventRecord {
                    country: country.clone(),
                    activity: activity.clone(),
                    kind,
                });
            }
        }
    }
    Ok(EventTable {
        base_years: base_years.to_vec(),
        post_years: post_years.to_vec(),
        records,
    })
}

/// Extra restriction applied to the entry at-risk set on top of "not
/// specialized in any base year".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AtRiskRule {
    /// All unspecialized pairs.
    None,
    /// Pairs with a positive developer count in every base year.
    NonzeroCount,
    /// Pairs with a defined, positive RCA in every base year (the country
    /// and activity must survive that year's matrix construction).
    RcaPositive,
}

impl std::fmt::Display for AtRiskRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AtRiskRule::None => write!(f, "none"),
            AtRiskRule::NonzeroCount => write!(f, "nonzero-count"),
            AtRiskRule::RcaPositive => write!(f, "rca-positive"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UbiquityTransform {
    Raw,
    #[serde(rename = "z")]
    ZScore,
    Log,
}

impl std::fmt::Display for UbiquityTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UbiquityTransform::Raw => write!(f, "raw"),
            UbiquityTransform::ZScore => write!(f, "z"),
            UbiquityTransform::Log => write!(f, "log"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow {
    pub country: String,
    pub activity: String,
    pub outcome: u8,
    pub density: f64,
    pub ubiquity: f64,
}

/// Regression-ready rows for one event type: the at-risk pairs with their
/// outcome and base-period regressors, ordered by (country, activity).
#[derive(Debug, Clone)]
pub struct TransitionDataset {
    pub kind: EventKind,
    pub at_risk_rule: AtRiskRule,
    pub ubiquity_transform: UbiquityTransform,
    pub base_year: i32,
    pub rows: Vec<TransitionRow>,
    /// At-risk pairs dropped because the base-period density matrix does
    /// not cover their country or activity.
    pub skipped_no_density: usize,
}

/// Assembles the transition dataset for `kind`.
///
/// Entry at-risk pairs are unspecialized in every base year, optionally
/// restricted by `rule` (which needs `counts` for the count-based floors).
/// Exit at-risk pairs are specialized in every base year, no extra floor.
/// Density and ubiquity regressors come from the first base year: `density`
/// must be the base-period relatedness density and `base_m` the base-period
/// specialization matrix that defines ubiquity.
#[allow(clippy::too_many_arguments)]
pub fn build_transition_dataset(
    panel: &SpecializationPanel,
    events: &EventTable,
    kind: EventKind,
    density: &DensityMatrix,
    base_m: &SpecializationMatrix,
    counts: Option<&YearlyCounts>,
    rule: AtRiskRule,
    transform: UbiquityTransform,
) -> Result<TransitionDataset, DynamicsError> {
    let (base_idx, _post_idx) = check_windows(panel, &events.base_years, &events.post_years)?;
    let base_year = *events.base_years.iter().min().expect("nonempty window");

    // Count lookups for the at-risk floors (entry only).
    let needs_counts = kind == EventKind::Entry && rule != AtRiskRule::None;
    let mut pair_counts: HashMap<(i32, &str, &str), f64> = HashMap::new();
    let mut country_year_totals: HashMap<(i32, &str), f64> = HashMap::new();
    let mut activity_year_totals: HashMap<(i32, &str), f64> = HashMap::new();
    if needs_counts {
        let counts = counts.ok_or_else(|| DynamicsError::MissingCounts(rule.to_string()))?;
        for row in &counts.rows {
            if !events.base_years.contains(&row.year) {
                continue;
            }
            pair_counts.insert((row.year, row.country.as_str(), row.language.as_str()), row.developers);
            *country_year_totals.entry((row.year, row.country.as_str())).or_default() += row.developers;
            *activity_year_totals.entry((row.year, row.language.as_str())).or_default() += row.developers;
        }
    }

    let event_pairs: BTreeMap<(&str, &str), EventKind> = events
        .records
        .iter()
        .map(|r| ((r.country.as_str(), r.activity.as_str()), r.kind))
        .collect();

    // Ubiquity regressor per base-period activity, transformed.
    let base_ubiquity: Vec<f64> = base_m.ubiquity().iter().map(|&k| k as f64).collect();
    let transformed_ubiquity: Vec<f64> = match transform {
        UbiquityTransform::Raw => base_ubiquity.clone(),
        UbiquityTransform::ZScore => {
            let mean = stats::mean(&base_ubiquity);
            let std = stats::pop_std(&base_ubiquity);
            if std == 0.0 {
                base_ubiquity.iter().map(|_| 0.0).collect()
            } else {
                base_ubiquity.iter().map(|k| (k - mean) / std).collect()
            }
        }
        UbiquityTransform::Log => {
            if let Some(idx) = base_ubiquity.iter().position(|&k| k <= 0.0) {
                return Err(DynamicsError::NonPositiveUbiquity(base_m.activities()[idx].clone()));
            }
            base_ubiquity.iter().map(|k| k.ln()).collect()
        }
    };

    let mut rows = Vec::new();
    let mut skipped_no_density = 0usize;
    for (ci, country) in panel.countries().iter().enumerate() {
        for (ai, activity) in panel.activities().iter().enumerate() {
            let at_risk = match kind {
                EventKind::Entry => base_idx.iter().all(|&t| panel.value(t, ci, ai) == 0),
                EventKind::Exit => base_idx.iter().all(|&t| panel.value(t, ci, ai) == 1),
            };
            if !at_risk {
                continue;
            }
            if kind == EventKind::Entry {
                let passes_floor = match rule {
                    AtRiskRule::None => true,
                    AtRiskRule::NonzeroCount => events.base_years.iter().all(|&y| {
                        pair_counts
                            .get(&(y, country.as_str(), activity.as_str()))
                            .is_some_and(|&v| v > 0.0)
                    }),
                    AtRiskRule::RcaPositive => events.base_years.iter().all(|&y| {
                        pair_counts
                            .get(&(y, country.as_str(), activity.as_str()))
                            .is_some_and(|&v| v > 0.0)
                            && country_year_totals
                                .get(&(y, country.as_str()))
                                .is_some_and(|&v| v > 0.0)
                            && activity_year_totals
                                .get(&(y, activity.as_str()))
                                .is_some_and(|&v| v > 0.0)
                    }),
                };
                if !passes_floor {
                    continue;
                }
            }
            let Some(omega) = density.get(country, activity) else {
                skipped_no_density += 1;
                continue;
            };
            let Some(base_ai) = base_m.activity_index(activity) else {
                skipped_no_density += 1;
                continue;
            };
            let outcome = u8::from(event_pairs.get(&(country.as_str(), activity.as_str())) == Some(&kind));
            rows.push(TransitionRow {
                country: country.clone(),
                activity: activity.clone(),
                outcome,
                density: omega,
                ubiquity: transformed_ubiquity[base_ai],
            });
        }
    }
    if rows.is_empty() {
        return Err(DynamicsError::EmptyAtRiskSet);
    }
    Ok(TransitionDataset {
        kind,
        at_risk_rule: rule,
        ubiquity_transform: transform,
        base_year,
        rows,
        skipped_no_density,
    })
}

/// Pearson and Spearman correlation between activity ubiquity and an
/// external per-activity score series, with two-sided p-values.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    pub n: usize,
    pub pearson_r: f64,
    pub pearson_p: f64,
    pub spearman_rho: f64,
    pub spearman_p: f64,
    pub unmatched_activities: Vec<String>,
    pub unmatched_external: Vec<String>,
}

pub fn correlate_ubiquity_external(
    activities: &[String],
    ubiquity: &[u32],
    external: &[(String, f64)],
) -> Result<CorrelationReport, DynamicsError> {
    assert_eq!(activities.len(), ubiquity.len());
    let external_map: BTreeMap<&str, f64> = external.iter().map(|(name, v)| (name.as_str(), *v)).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut unmatched_activities = Vec::new();
    for (activity, &k) in activities.iter().zip(ubiquity) {
        match external_map.get(activity.as_str()) {
            Some(&score) => {
                xs.push(k as f64);
                ys.push(score);
            }
            None => unmatched_activities.push(activity.clone()),
        }
    }
    let matched: BTreeSet<&str> = activities.iter().map(|a| a.as_str()).collect();
    let unmatched_external: Vec<String> = external_map
        .keys()
        .filter(|name| !matched.contains(*name))
        .map(|name| name.to_string())
        .collect();
    if xs.len() < 3 {
        return Err(DynamicsError::InsufficientOverlap {
            found: xs.len(),
            needed: 3,
        });
    }
    let pearson_r = stats::pearson(&xs, &ys);
    let rank_x = stats::average_ranks(&xs);
    let rank_y = stats::average_ranks(&ys);
    let spearman_rho = stats::pearson(&rank_x, &rank_y);
    Ok(CorrelationReport {
        n: xs.len(),
        pearson_r,
        pearson_p: stats::correlation_p_value(pearson_r, xs.len()),
        spearman_rho,
        spearman_p: stats::correlation_p_value(spearman_rho, xs.len()),
        unmatched_activities,
        unmatched_external,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relatedness::{proximity, relatedness_density};
    use approx::assert_relative_eq;

    fn binary_with_labels(countries: &[&str], activities: &[&str], rows: &[&[u8]]) -> SpecializationMatrix {
        let entries = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
        SpecializationMatrix::from_binary(
            countries.iter().map(|s| s.to_string()).collect(),
            activities.iter().map(|s| s.to_string()).collect(),
            entries,
            None,
        )
        .unwrap()
    }

    /// Panel with one country/one activity following `pattern` across the
    /// given years, plus an anchor pair that is always specialized so no
    /// matrix is empty.
    fn pattern_panel(years: &[i32], pattern: &[u8]) -> SpecializationPanel {
        assert_eq!(years.len(), pattern.len());
        let items = years
            .iter()
            .zip(pattern)
            .map(|(&year, &bit)| {
                let m = binary_with_labels(
                    &["AAA", "ZZZ"],
                    &["lang", "anchor"],
                    &[&[bit, 1], &[0, 1]],
                );
                (year, m)
            })
            .collect();
        SpecializationPanel::from_yearly(items).unwrap()
    }

    const YEARS: [i32; 4] = [2020, 2021, 2022, 2023];

    fn classify(pattern: &[u8; 4]) -> Option<EventKind> {
        let panel = pattern_panel(&YEARS, pattern);
        let events = detect_events(&panel, &[2020, 2021], &[2022, 2023]).unwrap();
        events
            .records
            .iter()
            .find(|r| r.country == "AAA" && r.activity == "lang")
            .map(|r| r.kind)
    }

    #[test]
    fn entry_and_exit_patterns() {
        assert_eq!(classify(&[0, 0, 1, 1]), Some(EventKind::Entry));
        assert_eq!(classify(&[1, 1, 0, 0]), Some(EventKind::Exit));
        assert_eq!(classify(&[0, 1, 1, 1]), None);
    }

    #[test]
    fn exhaustive_four_year_patterns() {
        for bits in 0u8..16 {
            let pattern = [
                (bits >> 3) & 1,
                (bits >> 2) & 1,
                (bits >> 1) & 1,
                bits & 1,
            ];
            let expected = match pattern {
                [0, 0, 1, 1] => Some(EventKind::Entry),
                [1, 1, 0, 0] => Some(EventKind::Exit),
                _ => None,
            };
            assert_eq!(classify(&pattern), expected, "pattern {pattern:?}");
        }
    }

    #[test]
    fn windows_must_not_overlap() {
        let panel = pattern_panel(&YEARS, &[0, 0, 1, 1]);
        assert!(matches!(
            detect_events(&panel, &[2020, 2021], &[2021, 2023]),
            Err(DynamicsError::WindowOverlap(2021))
        ));
    }

    #[test]
    fn missing_year_is_reported() {
        let panel = pattern_panel(&YEARS, &[0, 0, 1, 1]);
        assert!(matches!(
            detect_events(&panel, &[2019, 2020], &[2022, 2023]),
            Err(DynamicsError::YearMissing(2019))
        ));
    }

    #[test]
    fn constant_panel_has_no_events() {
        let panel = pattern_panel(&YEARS, &[1, 1, 1, 1]);
        let events = detect_events(&panel, &[2020, 2021], &[2022, 2023]).unwrap();
        assert!(events.records.is_empty());
    }

    #[test]
    fn entry_and_exit_are_mutually_exclusive() {
        for bits in 0u8..16 {
            let pattern = [
                (bits >> 3) & 1,
                (bits >> 2) & 1,
                (bits >> 1) & 1,
                bits & 1,
            ];
            let panel = pattern_panel(&YEARS, &pattern);
            let events = detect_events(&panel, &[2020, 2021], &[2022, 2023]).unwrap();
            let for_pair: Vec<_> = events
                .records
                .iter()
                .filter(|r| r.country == "AAA" && r.activity == "lang")
                .collect();
            assert!(for_pair.len() <= 1);
        }
    }

    #[test]
    fn absent_year_entities_are_zero_filled_and_flagged() {
        let m2020 = binary_with_labels(&["AAA", "BBB"], &["x", "y"], &[&[1, 0], &[0, 1]]);
        let m2021 = binary_with_labels(&["AAA"], &["x"], &[&[1]]);
        let panel = SpecializationPanel::from_yearly(vec![(2020, m2020), (2021, m2021)]).unwrap();
        assert_eq!(panel.countries(), &["AAA".to_string(), "BBB".to_string()]);
        assert!(panel
            .zero_filled()
            .iter()
            .any(|z| z.year == 2021 && z.kind == ZeroFillKind::Country && z.label == "BBB"));
        // BBB's 2021 row is all zeros.
        let bbb = panel.countries().iter().position(|c| c == "BBB").unwrap();
        for ai in 0..panel.activities().len() {
            assert_eq!(panel.value(1, bbb, ai), 0);
        }
    }

    fn nested_density() -> (SpecializationMatrix, DensityMatrix) {
        let m = binary_with_labels(
            &["AAA", "ZZZ"],
            &["anchor", "lang"],
            &[&[1, 1], &[1, 0]],
        );
        let phi = proximity(&m).unwrap();
        let omega = relatedness_density(&m, &phi).unwrap();
        (m, omega)
    }

    #[test]
    fn planted_entry_has_outcome_one() {
        let panel = pattern_panel(&YEARS, &[0, 0, 1, 1]);
        let events = detect_events(&panel, &[2020, 2021], &[2022, 2023]).unwrap();
        let m = binary_with_labels(&["AAA", "ZZZ"], &["anchor", "lang"], &[&[1, 0], &[1, 1]]);
        let phi = proximity(&m).unwrap();
        let omega = relatedness_density(&m, &phi).unwrap();
        let ds = build_transition_dataset(
            &panel,
            &events,
            EventKind::Entry,
            &omega,
            &m,
            None,
            AtRiskRule::None,
            UbiquityTransform::Raw,
        )
        .unwrap();
        let entry_row = ds
            .rows
            .iter()
            .find(|r| r.country == "AAA" && r.activity == "lang")
            .unwrap();
        assert_eq!(entry_row.outcome, 1);
    }

    #[test]
    fn stable_exit_set_has_all_zero_outcomes() {
        let panel = pattern_panel(&YEARS, &[1, 1, 1, 1]);
        let events = detect_events(&panel, &[2020, 2021], &[2022, 2023]).unwrap();
        let (m, omega) = nested_density();
        let ds = build_transition_dataset(
            &panel,
            &events,
            EventKind::Exit,
            &omega,
            &m,
            None,
            AtRiskRule::None,
            UbiquityTransform::Raw,
        )
        .unwrap();
        assert!(!ds.rows.is_empty());
        assert!(ds.rows.iter().all(|r| r.outcome == 0));
    }

    #[test]
    fn synthetic_panel_matches_exhaustive_scan() {
        // 5x5 panel over four years with two planted entries and one exit.
        let countries = ["C0", "C1", "C2", "C3", "C4"];
        let activities = ["L0", "L1", "L2", "L3", "L4"];
        // Base pattern: country i specialized in activity j iff (i + j) even.
        let base = |i: usize, j: usize| u8::from((i + j) % 2 == 0);
        let planted_entries = [(0usize, 1usize), (2, 3)]; // base 0 -> post 1
        let planted_exit = (1, 1); // base 1 -> post 0
        let mut items = Vec::new();
        for (t, year) in YEARS.iter().enumerate() {
            let is_post = t >= 2;
            let mut rows = Vec::new();
            for i in 0..5 {
                let mut row = Vec::new();
                for j in 0..5 {
                    let mut v = base(i, j);
                    if planted_entries.contains(&(i, j)) {
                        v = u8::from(is_post);
                    }
                    if (i, j) == planted_exit {
                        v = u8::from(!is_post);
                    }
                    row.push(v);
                }
                rows.push(row);
            }
            let entries = DMatrix::from_fn(5, 5, |i, j| rows[i][j]);
            let m = SpecializationMatrix::from_binary(
                countries.iter().map(|s| s.to_string()).collect(),
                activities.iter().map(|s| s.to_string()).collect(),
                entries,
                Some(*year),
            )
            .unwrap();
            items.push((*year, m));
        }
        let panel = SpecializationPanel::from_yearly(items).unwrap();
        let events = detect_events(&panel, &[2020, 2021], &[2022, 2023]).unwrap();

        let entries: Vec<(&str, &str)> = events
            .records
            .iter()
            .filter(|r| r.kind == EventKind::Entry)
            .map(|r| (r.country.as_str(), r.activity.as_str()))
            .collect();
        assert_eq!(entries, vec![("C0", "L1"), ("C2", "L3")]);
        let exits: Vec<(&str, &str)> = events
            .records
            .iter()
            .filter(|r| r.kind == EventKind::Exit)
            .map(|r| (r.country.as_str(), r.activity.as_str()))
            .collect();
        assert_eq!(exits, vec![("C1", "L1")]);

        // Dataset row counts match the brute-force at-risk enumeration.
        let base_m = binary_with_labels(
            &countries,
            &activities,
            &[
                &[1, 0, 1, 0, 1],
                &[0, 1, 0, 1, 0],
                &[1, 0, 1, 0, 1],
                &[0, 1, 0, 1, 0],
                &[1, 0, 1, 0, 1],
            ],
        );
        let phi = proximity(&base_m).unwrap();
        let omega = relatedness_density(&base_m, &phi).unwrap();
        let entry_ds = build_transition_dataset(
            &panel,
            &events,
            EventKind::Entry,
            &omega,
            &base_m,
            None,
            AtRiskRule::None,
            UbiquityTransform::Raw,
        )
        .unwrap();
        // At-risk for entry: pairs zero in both base years = 12 of 25
        // (13 are specialized at base, including the exit pair).
        assert_eq!(entry_ds.rows.len(), 12);
        assert_eq!(entry_ds.rows.iter().filter(|r| r.outcome == 1).count(), 2);
        let exit_ds = build_transition_dataset(
            &panel,
            &events,
            EventKind::Exit,
            &omega,
            &base_m,
            None,
            AtRiskRule::None,
            UbiquityTransform::Raw,
        )
        .unwrap();
        assert_eq!(exit_ds.rows.len(), 13);
        assert_eq!(exit_ds.rows.iter().filter(|r| r.outcome == 1).count(), 1);

        // Outcome-count identity: events + stable = at-risk size.
        let stable_zero = entry_ds.rows.iter().filter(|r| r.outcome == 0).count();
        assert_eq!(stable_zero + 2, entry_ds.rows.len());
    }

    #[test]
    fn nonzero_count_floor_requires_counts() {
        let panel = pattern_panel(&YEARS, &[0, 0, 1, 1]);
        let events = detect_events(&panel, &[2020, 2021], &[2022, 2023]).unwrap();
        let (m, omega) = nested_density();
        let err = build_transition_dataset(
            &panel,
            &events,
            EventKind::Entry,
            &omega,
            &m,
            None,
            AtRiskRule::NonzeroCount,
            UbiquityTransform::Raw,
        )
        .unwrap_err();
        assert!(matches!(err, DynamicsError::MissingCounts(_)));
    }

    #[test]
    fn nonzero_count_floor_filters_pairs() {
        use crate::ingest::{YearlyCounts, YearlyRow};
        let panel = pattern_panel(&YEARS, &[0, 0, 1, 1]);
        let events = detect_events(&panel, &[2020, 2021], &[2022, 2023]).unwrap();
        let (m, omega) = nested_density();
        // Only AAA/lang has positive counts in both base years.
        let counts = YearlyCounts {
            rows: vec![
                YearlyRow { year: 2020, country: "AAA".into(), language: "lang".into(), developers: 3.0 },
                YearlyRow { year: 2021, country: "AAA".into(), language: "lang".into(), developers: 2.0 },
                YearlyRow { year: 2020, country: "ZZZ".into(), language: "lang".into(), developers: 1.0 },
            ],
        };
        let ds = build_transition_dataset(
            &panel,
            &events,
            EventKind::Entry,
            &omega,
            &m,
            Some(&counts),
            AtRiskRule::NonzeroCount,
            UbiquityTransform::Raw,
        )
        .unwrap();
        assert_eq!(ds.rows.len(), 1);
        assert_eq!(ds.rows[0].country, "AAA");
        assert_eq!(ds.rows[0].outcome, 1);
    }

    #[test]
    fn ubiquity_zscore_transform() {
        let panel = pattern_panel(&YEARS, &[0, 0, 1, 1]);
        let events = detect_events(&panel, &[2020, 2021], &[2022, 2023]).unwrap();
        let m = binary_with_labels(&["AAA", "ZZZ"], &["anchor", "lang"], &[&[1, 0], &[1, 1]]);
        let phi = proximity(&m).unwrap();
        let omega = relatedness_density(&m, &phi).unwrap();
        let ds = build_transition_dataset(
            &panel,
            &events,
            EventKind::Entry,
            &omega,
            &m,
            None,
            AtRiskRule::None,
            UbiquityTransform::ZScore,
        )
        .unwrap();
        // Base ubiquities are (2, 1): z-scores (+1, -1).
        let row = ds.rows.iter().find(|r| r.activity == "lang").unwrap();
        assert_relative_eq!(row.ubiquity, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn correlation_identity_and_sign_flip() {
        let activities: Vec<String> = (0..5).map(|i| format!("l{i}")).collect();
        let ubiquity = [5u32, 4, 3, 2, 1];
        let same: Vec<(String, f64)> = activities
            .iter()
            .zip(&ubiquity)
            .map(|(a, &k)| (a.clone(), k as f64))
            .collect();
        let report = correlate_ubiquity_external(&activities, &ubiquity, &same).unwrap();
        assert_relative_eq!(report.pearson_r, 1.0, epsilon = 1e-12);
        assert_relative_eq!(report.spearman_rho, 1.0, epsilon = 1e-12);

        let negated: Vec<(String, f64)> = same.iter().map(|(a, v)| (a.clone(), -v)).collect();
        let report = correlate_ubiquity_external(&activities, &ubiquity, &negated).unwrap();
        assert_relative_eq!(report.pearson_r, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn correlation_lists_unmatched() {
        let activities = vec!["a".to_string(), "b".to_string(), "c".to_string(), "d".to_string()];
        let ubiquity = [4u32, 3, 2, 1];
        let external = vec![
            ("a".to_string(), 1.0),
            ("b".to_string(), 2.0),
            ("c".to_string(), 3.0),
            ("x".to_string(), 9.0),
        ];
        let report = correlate_ubiquity_external(&activities, &ubiquity, &external).unwrap();
        assert_eq!(report.unmatched_activities, vec!["d".to_string()]);
        assert_eq!(report.unmatched_external, vec!["x".to_string()]);
        assert_eq!(report.n, 3);
    }

    #[test]
    fn correlation_requires_three_points() {
        let activities = vec!["a".to_string(), "b".to_string()];
        let external = vec![("a".to_string(), 1.0), ("b".to_string(), 2.0)];
        assert!(matches!(
            correlate_ubiquity_external(&activities, &[1, 2], &external),
            Err(DynamicsError::InsufficientOverlap { found: 2, .. })
        ));
    }

    #[test]
    fn random_series_matches_textbook_pearson() {
        // Deterministic pseudo-random 20-point series, evaluated against
        // the direct covariance/stddev formula written out longhand.
        let activities: Vec<String> = (0..20).map(|i| format!("l{i:02}")).collect();
        let ubiquity: Vec<u32> = (0..20).map(|i| ((i * 7 + 3) % 13 + 1) as u32).collect();
        let external: Vec<(String, f64)> = activities
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), ((i * 11 + 5) % 17) as f64 / 3.0))
            .collect();
        let report = correlate_ubiquity_external(&activities, &ubiquity, &external).unwrap();

        let xs: Vec<f64> = ubiquity.iter().map(|&k| k as f64).collect();
        let ys: Vec<f64> = external.iter().map(|(_, v)| *v).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n;
        let sx = (xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>() / n).sqrt();
        let sy = (ys.iter().map(|y| (y - my) * (y - my)).sum::<f64>() / n).sqrt();
        assert_relative_eq!(report.pearson_r, cov / (sx * sy), epsilon = 1e-12);
    }
}
