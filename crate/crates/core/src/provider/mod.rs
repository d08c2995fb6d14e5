//! Story construction and visual-encoding suggestions behind one trait,
//! with a deterministic offline mock and an HTTP chat-completion backend.

pub mod mock;
pub mod text;

#[cfg(feature = "http")]
pub mod http;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::{
    validate_structure, PieceRelation, StoryPiece, StoryUnit, Stylization, TextSpan, Violation, MAX_UNITS_PER_PIECE,
};

pub use mock::MockProvider;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Mock,
    Http,
}

impl std::str::FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mock" => Ok(ProviderKind::Mock),
            "http" => Ok(ProviderKind::Http),
            other => Err(format!("unknown provider `{other}` (expected mock or http)")),
        }
    }
}

pub const ENV_ENDPOINT: &str = "STORYFRAME_ENDPOINT";
pub const ENV_API_KEY: &str = "STORYFRAME_API_KEY";
pub const ENV_MODEL: &str = "STORYFRAME_MODEL";
pub const ENV_TIMEOUT: &str = "STORYFRAME_TIMEOUT";
pub const ENV_ICON_ENDPOINT: &str = "STORYFRAME_ICON_ENDPOINT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model_name: Option<String>,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    #[serde(default)]
    pub icon_endpoint: Option<String>,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub seed: u64,
    pub max_in_flight: usize,
}

impl ProviderConfig {
    pub fn mock(seed: u64) -> Self {
        ProviderConfig {
            kind: ProviderKind::Mock,
            endpoint: None,
            model_name: None,
            api_key: None,
            icon_endpoint: None,
            timeout_secs: 30.0,
            max_retries: 2,
            seed,
            max_in_flight: 4,
        }
    }

    pub fn http(endpoint: impl Into<String>) -> Self {
        ProviderConfig { kind: ProviderKind::Http, endpoint: Some(endpoint.into()), ..ProviderConfig::mock(0) }
    }

    /// Fills unset http fields from `STORYFRAME_*` environment variables.
    pub fn with_env(mut self) -> Self {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        self.endpoint = self.endpoint.or_else(|| var(ENV_ENDPOINT));
        self.api_key = self.api_key.or_else(|| var(ENV_API_KEY));
        self.model_name = self.model_name.or_else(|| var(ENV_MODEL));
        self.icon_endpoint = self.icon_endpoint.or_else(|| var(ENV_ICON_ENDPOINT));
        if let Some(t) = var(ENV_TIMEOUT).and_then(|t| t.parse().ok()) {
            self.timeout_secs = t;
        }
        self
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(ProviderError::Config("timeout must be positive".into()));
        }
        if self.max_in_flight == 0 {
            return Err(ProviderError::Config("max_in_flight must be at least 1".into()));
        }
        match (self.kind, &self.endpoint) {
            (ProviderKind::Http, None) => Err(ProviderError::Config("http provider requires an endpoint".into())),
            (ProviderKind::Mock, Some(_)) => Err(ProviderError::Config("mock provider takes no endpoint".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("provider configuration: {0}")]
    Config(String),
    #[error("transport failure after {attempts} attempt(s): {cause}")]
    Transport { attempts: u32, cause: String },
    #[error("timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("provider response violates the contract: {}", .0.join("; "))]
    ContractViolation(Vec<String>),
    #[error("invalid input: {0}")]
    Input(String),
}

impl ProviderError {
    fn contract(violations: Vec<Violation>) -> Self {
        ProviderError::ContractViolation(violations.iter().map(ToString::to_string).collect())
    }
}

/// Pieces without units, plus their relations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub pieces: Vec<StoryPiece>,
    #[serde(default)]
    pub relations: Vec<PieceRelation>,
}

/// Scalable vector icon: SVG markup drawn in a 100 by 100 viewBox.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IconAsset {
    pub keyword: String,
    pub svg: String,
    pub placeholder: bool,
}

pub struct Highlights {
    pub primary: Option<TextSpan>,
    pub secondary: Vec<TextSpan>,
}

pub trait Provider: Send + Sync {
    fn segment_story(&self, text: &str, goal: &str) -> Result<ExtractionResult, ProviderError>;
    fn extract_units(&self, piece: &StoryPiece) -> Result<Vec<StoryUnit>, ProviderError>;
    fn suggest_highlights(&self, unit: &StoryUnit) -> Result<Highlights, ProviderError>;
    fn suggest_icon_keyword(&self, unit: &StoryUnit) -> Result<Option<String>, ProviderError>;
    fn suggest_stylization(&self, summary: &str, seed: u64) -> Result<Stylization, ProviderError>;
    /// Never fails: a placeholder and a warning replace a missing asset.
    fn fetch_icon(&self, keyword: &str, stylization: &Stylization) -> (IconAsset, Option<String>);
}

pub fn make_provider(config: &ProviderConfig) -> Result<Box<dyn Provider>, ProviderError> {
    config.validate()?;
    match config.kind {
        ProviderKind::Mock => Ok(Box::new(MockProvider::new(config.seed))),
        #[cfg(feature = "http")]
        ProviderKind::Http => Ok(Box::new(http::HttpProvider::new(config.clone())?)),
        #[cfg(not(feature = "http"))]
        ProviderKind::Http => Err(ProviderError::Config("built without the http feature".into())),
    }
}

pub fn check_extraction(result: &ExtractionResult) -> Result<(), ProviderError> {
    let v = validate_structure(&result.pieces, &result.relations, false);
    let mut msgs: Vec<String> = v.iter().map(ToString::to_string).collect();
    for (i, p) in result.pieces.iter().enumerate() {
        if !p.units.is_empty() {
            msgs.push(format!("pieces[{i}].units: extraction must not carry units"));
        }
        if p.content.trim().is_empty() {
            msgs.push(format!("pieces[{i}].content: empty content"));
        }
    }
    if msgs.is_empty() {
        Ok(())
    } else {
        Err(ProviderError::ContractViolation(msgs))
    }
}

pub fn check_units(piece: &StoryPiece, units: &[StoryUnit]) -> Result<(), ProviderError> {
    if units.is_empty() || units.len() > MAX_UNITS_PER_PIECE {
        return Err(ProviderError::ContractViolation(vec![format!("piece `{}`: {} units, expected 1 to 4", piece.id, units.len())]));
    }
    let mut probe = piece.clone();
    probe.units = units.to_vec();
    let v = validate_structure(std::slice::from_ref(&probe), &[], true);
    if v.is_empty() {
        Ok(())
    } else {
        Err(ProviderError::contract(v))
    }
}

pub fn check_highlights(unit: &StoryUnit, h: &Highlights) -> Result<(), ProviderError> {
    let mut probe = unit.clone();
    probe.primary_highlight = h.primary;
    probe.secondary_highlights = h.secondary.clone();
    probe.chart = None;
    probe.icon_keyword = None;
    let piece = StoryPiece {
        id: "_".into(),
        subtitle: String::new(),
        content: unit.text.clone(),
        relation_to_goal: crate::model::NarrativeRelationKind::Example,
        units: vec![probe],
    };
    let v = validate_structure(&[piece], &[], true);
    if v.is_empty() {
        Ok(())
    } else {
        Err(ProviderError::contract(v))
    }
}

/// Keyword initial in a filled circle.
pub fn placeholder_icon(keyword: &str, stylization: &Stylization) -> IconAsset {
    let initial: String = keyword.chars().find(|c| c.is_alphanumeric()).map(|c| c.to_uppercase().collect()).unwrap_or_else(|| "?".into());
    let fill = stylization.theme(0);
    let svg = format!(
        "<circle cx=\"50\" cy=\"50\" r=\"48\" fill=\"{fill}\"/>\
         <text x=\"50\" y=\"50\" text-anchor=\"middle\" dominant-baseline=\"central\" font-family=\"sans-serif\" \
         font-size=\"56\" fill=\"#FFFFFF\">{}</text>",
        crate::render::escape(&initial)
    );
    IconAsset { keyword: keyword.to_string(), svg, placeholder: true }
}
