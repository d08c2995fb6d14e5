//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every operation takes the source text and goal, extracts a frame with the
//! deterministic mock provider, and returns JSON or SVG as a string.

use serde_json::json;
use storyframe::blueprint::{layout_frame, GlyphMetrics};
use storyframe::document::{blueprint_document, to_pretty_json};
use storyframe::model::{compute_metrics, LayoutKind, StoryFrame};
use storyframe::pipeline::{build_frame, fetch_assets, CanvasOptions};
use storyframe::provider::MockProvider;
use storyframe::recommend::score_layouts;
use storyframe::render::render;
use wasm_bindgen::prelude::*;

fn frame(text: &str, goal: &str, seed: u64) -> Result<StoryFrame, String> {
    build_frame(&MockProvider::new(seed), text, goal, seed).map_err(|e| e.to_string())
}

/// Empty means the top-ranked layout.
fn pick_layout(frame: &StoryFrame, layout: &str) -> Result<LayoutKind, String> {
    if layout.trim().is_empty() {
        let metrics = compute_metrics(frame).map_err(|e| e.to_string())?;
        return Ok(score_layouts(&metrics).map_err(|e| e.to_string())?.top());
    }
    layout.parse::<LayoutKind>().map_err(|e| e.to_string())
}

/// Metrics, scores, order and rule firings as JSON.
pub fn rank(text: &str, goal: &str, seed: u64) -> Result<String, String> {
    let frame = frame(text, goal, seed)?;
    let metrics = compute_metrics(&frame).map_err(|e| e.to_string())?;
    let ranking = score_layouts(&metrics).map_err(|e| e.to_string())?;
    let firings: Vec<String> = ranking.firings.iter().map(|f| f.to_string()).collect();
    Ok(to_pretty_json(&json!({
        "metrics": metrics,
        "scores": ranking.scores,
        "order": ranking.order,
        "firings": firings,
    })))
}

/// Blueprint document for `layout` at the given canvas size (0 means the layout default).
pub fn blueprint(text: &str, goal: &str, seed: u64, layout: &str, width: f64, height: f64) -> Result<String, String> {
    let frame = frame(text, goal, seed)?;
    let layout = pick_layout(&frame, layout)?;
    let canvas = canvas_options(width, height).resolve(layout);
    let bp = layout_frame(&frame, layout, canvas, GlyphMetrics::builtin()).map_err(|e| e.to_string())?;
    Ok(to_pretty_json(&blueprint_document(&bp.rounded())))
}

/// Rendered infographic SVG, drawn from the rounded blueprint like the CLI's.
pub fn svg(text: &str, goal: &str, seed: u64, layout: &str, width: f64, height: f64) -> Result<String, String> {
    let frame = frame(text, goal, seed)?;
    let layout = pick_layout(&frame, layout)?;
    let canvas = canvas_options(width, height).resolve(layout);
    let glyphs = GlyphMetrics::builtin();
    let bp = layout_frame(&frame, layout, canvas, glyphs).map_err(|e| e.to_string())?.rounded();
    let (assets, _) = fetch_assets(&MockProvider::new(seed), &frame);
    let rendered = render(&frame, &bp, &frame.stylization, &assets, glyphs).map_err(|e| e.to_string())?;
    Ok(rendered.svg)
}

fn canvas_options(width: f64, height: f64) -> CanvasOptions {
    let given = |v: f64| (v > 0.0).then_some(v);
    CanvasOptions { width: given(width), height: given(height) }
}

#[wasm_bindgen(js_name = rankLayouts)]
pub fn rank_layouts(text: &str, goal: &str, seed: u32) -> Result<String, JsError> {
    rank(text, goal, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = buildBlueprint)]
pub fn build_blueprint(text: &str, goal: &str, seed: u32, layout: &str, width: f64, height: f64) -> Result<String, JsError> {
    blueprint(text, goal, seed.into(), layout, width, height).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = renderSvg)]
pub fn render_svg(text: &str, goal: &str, seed: u32, layout: &str, width: f64, height: f64) -> Result<String, JsError> {
    svg(text, goal, seed.into(), layout, width, height).map_err(|e| JsError::new(&e))
}
