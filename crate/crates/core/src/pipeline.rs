//! End-to-end orchestration: text and goal to frame, ranking, blueprint and SVG.

use serde::{Deserialize, Serialize};

use crate::blueprint::{layout_frame, BuildError, Blueprint, Canvas, GlyphMetrics};
use crate::chart::{map_insight_to_chart, parse_numbers, trend_icon_hint};
use crate::model::{compute_metrics, validate_frame, DataInsightKind, InvalidFrame, LayoutKind, StoryFrame};
use crate::provider::{Provider, ProviderError};
use crate::recommend::{score_layouts, LayoutRanking, RecommendError};
use crate::render::{render, IconAssets, RenderError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Invalid(#[from] InvalidFrame),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

/// Text fed to the stylization suggestion: the goal then each subtitle.
pub fn frame_summary(goal: &str, subtitles: impl IntoIterator<Item = impl AsRef<str>>) -> String {
    let mut s = goal.trim().to_string();
    for sub in subtitles {
        let sub = sub.as_ref().trim();
        if !sub.is_empty() {
            s.push('\n');
            s.push_str(sub);
        }
    }
    s
}

/// Runs story construction and every suggestion step, returning a validated frame.
pub fn build_frame(provider: &dyn Provider, text: &str, goal: &str, seed: u64) -> Result<StoryFrame, PipelineError> {
    let extraction = provider.segment_story(text, goal)?;
    let mut pieces = extraction.pieces;
    for piece in &mut pieces {
        let mut units = provider.extract_units(piece)?;
        for unit in &mut units {
            let h = provider.suggest_highlights(unit)?;
            unit.primary_highlight = h.primary;
            unit.secondary_highlights = h.secondary;
            let parse = parse_numbers(&unit.text);
            unit.chart = map_insight_to_chart(unit.insight, &parse);
            unit.icon_keyword = provider.suggest_icon_keyword(unit)?;
            if unit.chart.is_none() && unit.insight == DataInsightKind::Trend && parse.is_empty() {
                if let Some(hint) = trend_icon_hint(&unit.text) {
                    unit.icon_keyword = Some(hint.to_string());
                }
            }
        }
        piece.units = units;
    }
    let summary = frame_summary(goal, pieces.iter().map(|p| p.subtitle.as_str()));
    let stylization = provider.suggest_stylization(&summary, seed)?;
    let frame = StoryFrame {
        goal: goal.to_string(),
        title: goal.to_string(),
        pieces,
        relations: extraction.relations,
        stylization,
    };
    let violations = validate_frame(&frame);
    if !violations.is_empty() {
        return Err(ProviderError::ContractViolation(violations.iter().map(ToString::to_string).collect()).into());
    }
    Ok(frame)
}

/// Fetches one asset per distinct icon keyword, in keyword order.
pub fn fetch_assets(provider: &dyn Provider, frame: &StoryFrame) -> (IconAssets, Vec<String>) {
    let mut assets = IconAssets::new();
    let mut warnings = Vec::new();
    let mut keywords: Vec<&str> = frame.units().filter_map(|u| u.icon_keyword.as_deref()).collect();
    keywords.sort_unstable();
    keywords.dedup();
    for k in keywords {
        let (asset, warning) = provider.fetch_icon(k, &frame.stylization);
        warnings.extend(warning);
        assets.insert(k.to_string(), asset);
    }
    (assets, warnings)
}

pub fn rank(frame: &StoryFrame) -> Result<LayoutRanking, PipelineError> {
    Ok(score_layouts(&compute_metrics(frame)?)?)
}

/// Canvas size options; `None` takes the layout's default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CanvasOptions {
    pub width: Option<f64>,
    pub height: Option<f64>,
}

impl CanvasOptions {
    pub fn resolve(&self, layout: LayoutKind) -> Canvas {
        let d = Canvas::default_for(layout);
        Canvas::new(self.width.unwrap_or(d.width), self.height.unwrap_or(d.height))
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub frame: StoryFrame,
    pub ranking: LayoutRanking,
    pub blueprint: Blueprint,
    pub svg: String,
    pub warnings: Vec<String>,
}

/// Lays out and renders an existing frame.
pub fn layout_and_render(
    provider: &dyn Provider,
    frame: &StoryFrame,
    layout: LayoutKind,
    canvas: Canvas,
    glyphs: &GlyphMetrics,
) -> Result<(Blueprint, String, Vec<String>), PipelineError> {
    let blueprint = layout_frame(frame, layout, canvas, glyphs)?;
    let (assets, mut warnings) = fetch_assets(provider, frame);
    let rendered = render(frame, &blueprint, &frame.stylization, &assets, glyphs)?;
    warnings.extend(rendered.warnings);
    Ok((blueprint, rendered.svg, warnings))
}

/// extract, recommend, blueprint (top-ranked or `layout`), render.
pub fn run(
    provider: &dyn Provider,
    text: &str,
    goal: &str,
    seed: u64,
    layout: Option<LayoutKind>,
    canvas: CanvasOptions,
    glyphs: &GlyphMetrics,
) -> Result<PipelineOutput, PipelineError> {
    let frame = build_frame(provider, text, goal, seed)?;
    let ranking = rank(&frame)?;
    let chosen = layout.unwrap_or_else(|| ranking.top());
    let (blueprint, svg, warnings) = layout_and_render(provider, &frame, chosen, canvas.resolve(chosen), glyphs)?;
    let mut all = blueprint.warnings.clone();
    all.extend(warnings);
    Ok(PipelineOutput { frame, ranking, blueprint, svg, warnings: all })
}
