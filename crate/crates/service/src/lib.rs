//! Project service: persisted per-project pipeline state with optimistic
//! revisions, plus the HTTP API the editor talks to.

pub mod http;
pub mod store;

use std::path::PathBuf;
use std::sync::Arc;

use serde::Deserialize;
use storyframe::blueprint::{layout_frame, BuildError, Blueprint, GlyphMetrics, Override};
use storyframe::model::{validate_frame, InvalidFrame, LayoutKind, StoryFrame, StoryMetrics, Stylization};
use storyframe::pipeline::{self, fetch_assets, frame_summary, CanvasOptions, PipelineError};
use storyframe::provider::{self, MockProvider, Provider, ProviderConfig, ProviderError, ProviderKind};
use storyframe::recommend::{LayoutRanking, RecommendError};
use storyframe::render::{render, Rendered, RenderError};

pub use http::{router, serve};
pub use store::{Project, ProjectStore, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("project `{0}` not found")]
    NotFound(String),
    #[error("stale revision: project is at {current}, request was based on {given}")]
    Stale { current: u64, given: u64 },
    #[error("this request needs an If-Match header carrying the current revision")]
    RevisionRequired,
    #[error(transparent)]
    Invalid(#[from] InvalidFrame),
    #[error("malformed request: {0}")]
    Malformed(String),
    #[error("project has no {0} yet")]
    MissingStage(&'static str),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Layout(#[from] BuildError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error("storage: {0}")]
    Storage(String),
}

impl ServiceError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::NotFound(_) => "not_found",
            ServiceError::Stale { .. } => "stale_revision",
            ServiceError::RevisionRequired => "revision_required",
            ServiceError::Invalid(_) => "validation_failed",
            ServiceError::Malformed(_) => "malformed_request",
            ServiceError::MissingStage(_) => "missing_stage",
            ServiceError::Provider(_) => "provider_failed",
            ServiceError::Layout(_) => "layout_failed",
            ServiceError::Render(_) => "render_failed",
            ServiceError::Recommend(_) => "recommend_failed",
            ServiceError::Storage(_) => "storage_failed",
        }
    }
}

impl From<StoreError> for ServiceError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(id) => ServiceError::NotFound(id),
            StoreError::Stale { current, base } => ServiceError::Stale { current, given: base },
            other => ServiceError::Storage(other.to_string()),
        }
    }
}

impl From<PipelineError> for ServiceError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Provider(e) => e.into(),
            PipelineError::Invalid(e) => e.into(),
            PipelineError::Recommend(e) => e.into(),
            PipelineError::Build(e) => e.into(),
            PipelineError::Render(e) => e.into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateProject {
    pub source_text: String,
    pub goal: String,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct RefreshStylization {
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct BuildRequest {
    pub layout: LayoutKind,
    #[serde(default)]
    pub width: Option<f64>,
    #[serde(default)]
    pub height: Option<f64>,
    /// Replaces the stored overrides when present.
    #[serde(default)]
    pub overrides: Option<Vec<Override>>,
}

pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub provider: ProviderConfig,
}

/// Mock providers are built per project seed; an http provider is shared so
/// its in-flight cap holds across requests.
struct Providers {
    config: ProviderConfig,
    shared: Option<Arc<dyn Provider>>,
}

impl Providers {
    fn new(config: ProviderConfig) -> Result<Self, ProviderError> {
        config.validate()?;
        let shared = match config.kind {
            ProviderKind::Mock => None,
            ProviderKind::Http => Some(Arc::from(provider::make_provider(&config)?)),
        };
        Ok(Providers { config, shared })
    }

    fn for_seed(&self, seed: u64) -> Arc<dyn Provider> {
        match &self.shared {
            Some(p) => p.clone(),
            None => Arc::new(MockProvider::new(seed)),
        }
    }
}

pub struct Service {
    store: ProjectStore,
    providers: Providers,
    glyphs: &'static GlyphMetrics,
}

fn check_revision(project: &Project, expected: Option<u64>) -> Result<(), ServiceError> {
    match expected {
        Some(given) if given != project.revision => Err(ServiceError::Stale { current: project.revision, given }),
        _ => Ok(()),
    }
}

impl Service {
    pub fn open(config: ServiceConfig) -> Result<Self, ServiceError> {
        Ok(Service {
            store: ProjectStore::open(config.data_dir)?,
            providers: Providers::new(config.provider)?,
            glyphs: GlyphMetrics::builtin(),
        })
    }

    pub fn store(&self) -> &ProjectStore {
        &self.store
    }

    pub fn glyphs(&self) -> &'static GlyphMetrics {
        self.glyphs
    }

    /// Provider used for a project with this seed.
    pub fn provider(&self, seed: u64) -> Arc<dyn Provider> {
        self.providers.for_seed(seed)
    }

    /// Runs story construction and every suggestion step on the source text.
    pub fn create_project(&self, req: CreateProject) -> Result<Arc<Project>, ServiceError> {
        let seed = req.seed.unwrap_or(self.providers.config.seed);
        let provider = self.provider(seed);
        let frame = pipeline::build_frame(&*provider, &req.source_text, &req.goal, seed)?;
        let project = Project {
            id: String::new(),
            source_text: req.source_text,
            goal: req.goal,
            seed,
            revision: 0,
            frame,
            chosen_layout: None,
            canvas: None,
            blueprint: None,
            overrides: Vec::new(),
        };
        Ok(self.store.create(project)?)
    }

    pub fn get_project(&self, id: &str) -> Result<Arc<Project>, ServiceError> {
        Ok(self.store.get(id)?)
    }

    /// Replaces the frame. The stored blueprint is dropped because its ids may
    /// no longer match; the chosen layout and overrides are kept.
    pub fn put_storyframe(&self, id: &str, expected: u64, frame: StoryFrame) -> Result<Arc<Project>, ServiceError> {
        let base = self.store.get(id)?;
        check_revision(&base, Some(expected))?;
        let report = validate_frame(&frame);
        if !report.is_empty() {
            return Err(InvalidFrame(report).into());
        }
        let mut next = (*base).clone();
        next.frame = frame;
        next.blueprint = None;
        Ok(self.store.commit(&base, next)?)
    }

    /// New stylization suggestion; without a seed, the stored seed plus one.
    pub fn refresh_stylization(
        &self,
        id: &str,
        req: RefreshStylization,
        expected: Option<u64>,
    ) -> Result<(Arc<Project>, Stylization), ServiceError> {
        let base = self.store.get(id)?;
        check_revision(&base, expected)?;
        let seed = req.seed.unwrap_or_else(|| base.seed.wrapping_add(1));
        let summary = frame_summary(&base.frame.goal, base.frame.pieces.iter().map(|p| p.subtitle.as_str()));
        let stylization = self.provider(seed).suggest_stylization(&summary, seed)?;
        let mut next = (*base).clone();
        next.seed = seed;
        next.frame.stylization = stylization.clone();
        Ok((self.store.commit(&base, next)?, stylization))
    }

    pub fn rank_layouts(&self, id: &str) -> Result<(Arc<Project>, StoryMetrics, LayoutRanking), ServiceError> {
        let project = self.store.get(id)?;
        let metrics = storyframe::model::compute_metrics(&project.frame)?;
        let ranking = storyframe::recommend::score_layouts(&metrics)?;
        Ok((project, metrics, ranking))
    }

    /// Solves the blueprint for `layout`. The stored copy is rounded the same
    /// way the blueprint document is, so reads and renders see identical values.
    /// The project keeps every override; the blueprint only those whose
    /// element still exists.
    pub fn build(&self, id: &str, req: BuildRequest, expected: Option<u64>) -> Result<Arc<Project>, ServiceError> {
        let base = self.store.get(id)?;
        check_revision(&base, expected)?;
        let canvas = CanvasOptions { width: req.width, height: req.height }.resolve(req.layout);
        let mut blueprint = layout_frame(&base.frame, req.layout, canvas, self.glyphs)?;
        let overrides = req.overrides.unwrap_or_else(|| base.overrides.clone());
        blueprint.apply_overrides(&overrides);
        let mut next = (*base).clone();
        next.chosen_layout = Some(req.layout);
        next.canvas = Some(canvas);
        next.blueprint = Some(blueprint.rounded());
        next.overrides = overrides;
        Ok(self.store.commit(&base, next)?)
    }

    pub fn blueprint(&self, project: &Project) -> Result<Blueprint, ServiceError> {
        project.blueprint.clone().ok_or(ServiceError::MissingStage("blueprint"))
    }

    pub fn render_svg(&self, id: &str) -> Result<(Arc<Project>, Rendered), ServiceError> {
        let project = self.store.get(id)?;
        let blueprint = self.blueprint(&project)?;
        let (assets, mut warnings) = fetch_assets(&*self.provider(project.seed), &project.frame);
        let rendered = render(&project.frame, &blueprint, &project.frame.stylization, &assets, self.glyphs)?;
        warnings.extend(rendered.warnings);
        Ok((project.clone(), Rendered { svg: rendered.svg, warnings }))
    }
}
