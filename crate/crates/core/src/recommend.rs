//! Rule-based layout ranking.
//!
//! Each rule in the table adds exactly one point to every layout it names
//! when its predicate holds. Layouts are then sorted by score, with ties
//! kept in canonical [`LayoutKind`] order.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::model::{LayoutKind, NarrativeRelationKind, StoryMetrics};

pub const RULE_SCHEMA_VERSION: u32 = 1;

const BUILTIN_RULES: &str = include_str!("../data/layout_rules.json");

#[derive(Debug, thiserror::Error)]
pub enum RecommendError {
    #[error("cannot score a frame with no story pieces")]
    NoPieces,
}

#[derive(Debug, thiserror::Error)]
pub enum RuleTableError {
    #[error("malformed rule table: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unknown rule table schema_version {0} (expected {RULE_SCHEMA_VERSION})")]
    Version(u32),
    #[error("duplicate rule id `{0}`")]
    DuplicateId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    NSp,
    RhoSu,
    RhoRel,
    Diversity,
    MaxRef,
}

impl Feature {
    fn read(self, m: &StoryMetrics) -> f64 {
        match self {
            Feature::NSp => m.n_sp as f64,
            Feature::RhoSu => m.rho_su,
            Feature::RhoRel => m.rho_rel,
            Feature::Diversity => m.diversity() as f64,
            Feature::MaxRef => m.max_ref() as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    /// Kinds of piece-to-piece relations.
    Relations,
    /// Each piece's relation to the goal.
    Goal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Predicate {
    Range {
        feature: Feature,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gt: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ge: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lt: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        le: Option<f64>,
    },
    /// Share of goal relations whose kind is in `kinds` is at least `at_least`.
    GoalShare { kinds: Vec<NarrativeRelationKind>, at_least: f64 },
    /// `kind` has a non-zero count that no other kind exceeds.
    Modal { distribution: Distribution, kind: NarrativeRelationKind },
}

impl Predicate {
    pub fn holds(&self, m: &StoryMetrics) -> bool {
        match self {
            Predicate::Range { feature, gt, ge, lt, le } => {
                let v = feature.read(m);
                gt.is_none_or(|b| v > b)
                    && ge.is_none_or(|b| v >= b)
                    && lt.is_none_or(|b| v < b)
                    && le.is_none_or(|b| v <= b)
            }
            Predicate::GoalShare { kinds, at_least } => {
                let total: usize = m.goal_relation_counts.values().sum();
                if total == 0 {
                    return false;
                }
                let hit: usize = kinds.iter().map(|&k| m.goal_relation_count(k)).sum();
                hit as f64 / total as f64 >= *at_least
            }
            Predicate::Modal { distribution, kind } => {
                let counts = match distribution {
                    Distribution::Relations => &m.relation_counts,
                    Distribution::Goal => &m.goal_relation_counts,
                };
                let own = counts.get(kind).copied().unwrap_or(0);
                own > 0 && counts.values().all(|&c| c <= own)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub rule_id: String,
    pub layouts: Vec<LayoutKind>,
    pub predicate: Predicate,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleTable {
    pub schema_version: u32,
    pub rules: Vec<Rule>,
}

impl RuleTable {
    pub fn from_json(text: &str) -> Result<Self, RuleTableError> {
        let table: RuleTable = serde_json::from_str(text)?;
        if table.schema_version != RULE_SCHEMA_VERSION {
            return Err(RuleTableError::Version(table.schema_version));
        }
        let mut ids = std::collections::HashSet::new();
        for r in &table.rules {
            if !ids.insert(r.rule_id.as_str()) {
                return Err(RuleTableError::DuplicateId(r.rule_id.clone()));
            }
        }
        Ok(table)
    }

    /// The rule table shipped with the crate.
    pub fn builtin() -> &'static RuleTable {
        static TABLE: OnceLock<RuleTable> = OnceLock::new();
        TABLE.get_or_init(|| RuleTable::from_json(BUILTIN_RULES).expect("builtin rule table is valid"))
    }

    pub fn score(&self, metrics: &StoryMetrics) -> Result<LayoutRanking, RecommendError> {
        if metrics.n_sp == 0 {
            return Err(RecommendError::NoPieces);
        }
        let firings: Vec<RuleFiring> = self
            .rules
            .iter()
            .filter(|r| r.predicate.holds(metrics))
            .flat_map(|r| {
                r.layouts.iter().map(move |&layout| RuleFiring { rule_id: r.rule_id.clone(), layout, increment: 1 })
            })
            .collect();
        Ok(LayoutRanking::from_firings(firings))
    }
}

/// One rule adding one point to one layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleFiring {
    pub rule_id: String,
    pub layout: LayoutKind,
    pub increment: u32,
}

impl fmt::Display for RuleFiring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}→{}", self.rule_id, self.layout)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutRanking {
    pub scores: BTreeMap<LayoutKind, u32>,
    pub order: Vec<LayoutKind>,
    pub firings: Vec<RuleFiring>,
}

impl LayoutRanking {
    fn from_firings(firings: Vec<RuleFiring>) -> Self {
        let mut scores: BTreeMap<LayoutKind, u32> = LayoutKind::ALL.iter().map(|&l| (l, 0)).collect();
        for f in &firings {
            *scores.get_mut(&f.layout).expect("all layouts present") += f.increment;
        }
        let mut order = LayoutKind::ALL.to_vec();
        // stable: equal scores keep canonical order
        order.sort_by(|a, b| scores[b].cmp(&scores[a]));
        LayoutRanking { scores, order, firings }
    }

    pub fn top(&self) -> LayoutKind {
        self.order[0]
    }

    pub fn fired(&self, rule_id: &str, layout: LayoutKind) -> bool {
        self.firings.iter().any(|f| f.rule_id == rule_id && f.layout == layout)
    }
}

/// Scores all six layouts with the built-in rule table.
pub fn score_layouts(metrics: &StoryMetrics) -> Result<LayoutRanking, RecommendError> {
    RuleTable::builtin().score(metrics)
}
