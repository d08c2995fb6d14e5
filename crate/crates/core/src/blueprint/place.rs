//! Placement of highlight, icon, chart and text inside one story unit.
//!
//! The primary highlight sits in a `2x` band at the top of the unit. The
//! rest of the unit is the content region. Icon and chart are anchored at
//! fixed points of that region by a strategy and sized from an aspect ratio
//! so that text, icon and chart get equal shares of the region. Strategies
//! and aspects are tried in a fixed order; the first combination without
//! overlap whose leftover block holds the wrapped text wins. Otherwise the
//! least-overlapping combination is kept and its icon and chart shrink
//! toward their anchors until nothing overlaps and the text fits.
//! Text takes the largest empty rectangle left over.

use serde::{Deserialize, Serialize};

use crate::model::StoryUnit;

use super::geometry::Rect;
use super::glyph::{rows_needed, text_width, wrap_lines, GlyphMetrics};

/// Overlap below this share of the content area counts as none.
pub const OVERLAP_EPS: f64 = 1e-9;
/// Inner padding of a unit, as a multiple of `x`.
pub const UNIT_PADDING: f64 = 0.25;
/// Icon and chart never shrink below this share of their target size.
pub const MIN_DESIGN_SCALE: f64 = 0.25;
/// Bracket width at which the design shrink search stops.
pub const SHRINK_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "icon-left/text-right")]
    IconLeftTextRight,
    #[serde(rename = "icon-right/text-left")]
    IconRightTextLeft,
    #[serde(rename = "icon-top/text-bottom")]
    IconTopTextBottom,
    #[serde(rename = "chart-bottom/text-top")]
    ChartBottomTextTop,
    #[serde(rename = "chart-right/text-left")]
    ChartRightTextLeft,
    #[serde(rename = "icon-top-left+chart-bottom/text-right")]
    IconTopLeftChartBottomTextRight,
}

pub const STRATEGIES: [Strategy; 6] = [
    Strategy::IconLeftTextRight,
    Strategy::IconRightTextLeft,
    Strategy::IconTopTextBottom,
    Strategy::ChartBottomTextTop,
    Strategy::ChartRightTextLeft,
    Strategy::IconTopLeftChartBottomTextRight,
];

/// Width-to-height ratio of icon and chart boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Aspect {
    pub w: u32,
    pub h: u32,
}

pub const ASPECTS: [Aspect; 4] =
    [Aspect { w: 1, h: 1 }, Aspect { w: 4, h: 3 }, Aspect { w: 3, h: 4 }, Aspect { w: 16, h: 9 }];

impl Aspect {
    pub fn ratio(&self) -> f64 {
        f64::from(self.w) / f64::from(self.h)
    }
}

impl std::fmt::Display for Aspect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.w, self.h)
    }
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::IconLeftTextRight => "icon-left/text-right",
            Strategy::IconRightTextLeft => "icon-right/text-left",
            Strategy::IconTopTextBottom => "icon-top/text-bottom",
            Strategy::ChartBottomTextTop => "chart-bottom/text-top",
            Strategy::ChartRightTextLeft => "chart-right/text-left",
            Strategy::IconTopLeftChartBottomTextRight => "icon-top-left+chart-bottom/text-right",
        }
    }

    fn anchors(self) -> (Anchor, Anchor) {
        use Anchor::*;
        // (icon, chart)
        match self {
            Strategy::IconLeftTextRight => (TopLeft, MiddleLeft),
            Strategy::IconRightTextLeft => (TopRight, BottomRight),
            Strategy::IconTopTextBottom => (TopCenter, BottomCenter),
            Strategy::ChartBottomTextTop => (TopRight, BottomCenter),
            Strategy::ChartRightTextLeft => (BottomRight, TopRight),
            Strategy::IconTopLeftChartBottomTextRight => (TopLeft, BottomLeft),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Anchor {
    TopLeft,
    TopRight,
    TopCenter,
    BottomLeft,
    BottomRight,
    BottomCenter,
    MiddleLeft,
}

/// A box whose edges are `base + scale * slope`.
#[derive(Debug, Clone, Copy)]
struct LinearBox {
    left: (f64, f64),
    right: (f64, f64),
    top: (f64, f64),
    bottom: (f64, f64),
}

impl LinearBox {
    fn fixed(r: Rect) -> Self {
        LinearBox { left: (r.x, 0.0), right: (r.right(), 0.0), top: (r.y, 0.0), bottom: (r.bottom(), 0.0) }
    }

    fn anchored(anchor: Anchor, region: Rect, w: f64, h: f64) -> Self {
        let (ax, ay, fx, fy) = match anchor {
            Anchor::TopLeft => (region.x, region.y, 0.0, 0.0),
            Anchor::TopRight => (region.right(), region.y, 1.0, 0.0),
            Anchor::TopCenter => (region.x + region.w / 2.0, region.y, 0.5, 0.0),
            Anchor::BottomLeft => (region.x, region.bottom(), 0.0, 1.0),
            Anchor::BottomRight => (region.right(), region.bottom(), 1.0, 1.0),
            Anchor::BottomCenter => (region.x + region.w / 2.0, region.bottom(), 0.5, 1.0),
            Anchor::MiddleLeft => (region.x, region.y + region.h / 2.0, 0.0, 0.5),
        };
        // fx, fy: share of the box that lies left of / above the anchor
        LinearBox { left: (ax, -fx * w), right: (ax, (1.0 - fx) * w), top: (ay, -fy * h), bottom: (ay, (1.0 - fy) * h) }
    }

    fn at(&self, s: f64) -> Rect {
        let e = |(b, m): (f64, f64)| b + s * m;
        Rect::from_edges(e(self.left), e(self.top), e(self.right), e(self.bottom))
    }
}

/// Largest `s >= 0` with `lo + s * lo_slope <= hi + s * hi_slope`.
fn below(lo: (f64, f64), hi: (f64, f64)) -> f64 {
    let k = lo.1 - hi.1;
    let rhs = hi.0 - lo.0;
    if k <= 0.0 {
        if rhs >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        rhs / k
    }
}

fn separation_limit(a: &LinearBox, b: &LinearBox) -> f64 {
    below(a.right, b.left).max(below(b.right, a.left)).max(below(a.bottom, b.top)).max(below(b.bottom, a.top))
}

fn containment_limit(b: &LinearBox, region: Rect) -> f64 {
    let fixed = |v: f64| (v, 0.0);
    below(fixed(region.x), b.left)
        .min(below(b.right, fixed(region.right())))
        .min(below(fixed(region.y), b.top))
        .min(below(b.bottom, fixed(region.bottom())))
}

/// Geometry of one strategy/aspect combination before text placement.
#[derive(Debug, Clone, Copy)]
pub struct DesignFrame {
    pub highlight: Option<Rect>,
    pub content: Rect,
    icon: Option<LinearBox>,
    chart: Option<LinearBox>,
}

impl DesignFrame {
    pub fn icon_at(&self, scale: f64) -> Option<Rect> {
        self.icon.map(|b| b.at(scale))
    }

    pub fn chart_at(&self, scale: f64) -> Option<Rect> {
        self.chart.map(|b| b.at(scale))
    }

    /// Largest scale in `[0, 1]` at which icon and chart overlap nothing and
    /// stay in the content region.
    pub fn free_scale(&self) -> f64 {
        let moving: Vec<LinearBox> = self.icon.iter().chain(self.chart.iter()).copied().collect();
        let mut limit = 1.0_f64;
        for (i, m) in moving.iter().enumerate() {
            limit = limit.min(containment_limit(m, self.content));
            if let Some(h) = self.highlight {
                limit = limit.min(separation_limit(m, &LinearBox::fixed(h)));
            }
            for other in &moving[i + 1..] {
                limit = limit.min(separation_limit(m, other));
            }
        }
        limit.max(0.0)
    }
}

/// Height of the primary highlight band: as many `2x` rows as the
/// highlight needs at `width`, or zero without a highlight.
pub fn highlight_band_height(unit: &StoryUnit, width: f64, x: f64, glyphs: &GlyphMetrics) -> f64 {
    match unit.primary_text().filter(|t| !t.trim().is_empty()) {
        Some(text) => 2.0 * x * rows_needed(&text, width, 2.0 * x, glyphs) as f64,
        None => 0.0,
    }
}

/// Highlight band and content region of a unit rectangle.
/// Padding shrinks when the unit is too small to hold it plus one text row.
pub fn unit_regions(unit: &StoryUnit, su_rect: Rect, x: f64, glyphs: &GlyphMetrics) -> (Option<Rect>, Rect) {
    let primary = unit.primary_text().filter(|t| !t.trim().is_empty());
    let band_h = highlight_band_height(unit, su_rect.w - 2.0 * UNIT_PADDING * x, x, glyphs);
    let need_h = x + band_h;
    let pad = (UNIT_PADDING * x).min(((su_rect.h - need_h) / 2.0).max(0.0)).min(((su_rect.w - x) / 2.0).max(0.0));
    let inner = su_rect.inset(pad);
    match primary {
        Some(text) => {
            let rows = rows_needed(&text, inner.w, 2.0 * x, glyphs);
            let w = if rows == 1 { text_width(&text, 2.0 * x, glyphs).min(inner.w) } else { inner.w };
            let h = (2.0 * x * rows as f64).min(inner.h);
            let band = Rect::new(inner.x, inner.y, w, h);
            (Some(band), Rect::new(inner.x, inner.y + h, inner.w, inner.h - h))
        }
        None => (None, inner),
    }
}

pub fn design_frame(
    unit: &StoryUnit,
    su_rect: Rect,
    x: f64,
    glyphs: &GlyphMetrics,
    strategy: Strategy,
    aspect: Aspect,
) -> DesignFrame {
    let (highlight, content) = unit_regions(unit, su_rect, x, glyphs);
    let has_icon = unit.icon_keyword.is_some();
    let has_chart = unit.chart.is_some();
    let shares = 1 + usize::from(has_icon) + usize::from(has_chart);
    let target = content.area() / shares as f64;
    let w = (target * aspect.ratio()).sqrt();
    let h = (target / aspect.ratio()).sqrt();
    let (icon_anchor, chart_anchor) = strategy.anchors();
    DesignFrame {
        highlight,
        content,
        icon: has_icon.then(|| LinearBox::anchored(icon_anchor, content, w, h)),
        chart: has_chart.then(|| LinearBox::anchored(chart_anchor, content, w, h)),
    }
}

/// Sum of pairwise intersections plus area outside `region`.
pub fn overlap_measure(region: Rect, boxes: &[Rect]) -> f64 {
    let mut total = 0.0;
    for (i, a) in boxes.iter().enumerate() {
        total += a.area() - a.intersection_area(&region);
        for b in &boxes[i + 1..] {
            total += a.intersection_area(b);
        }
    }
    total
}

/// Largest axis-aligned rectangle in `region` free of `obstacles`.
/// Ties keep the first candidate in edge-enumeration order.
pub fn largest_empty_rect(region: Rect, obstacles: &[Rect]) -> Rect {
    let clipped: Vec<Rect> = obstacles.iter().filter_map(|o| o.intersection(&region)).collect();
    if clipped.is_empty() {
        return region;
    }
    let mut xs = vec![region.x, region.right()];
    let mut ys = vec![region.y, region.bottom()];
    for o in &clipped {
        xs.extend([o.x, o.right()]);
        ys.extend([o.y, o.bottom()]);
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    // edges rebuilt from (x, w) pairs drift by an ulp; ignore such slivers
    let eps = OVERLAP_EPS * region.area().max(1.0);
    let mut best = Rect::new(region.x, region.y, 0.0, 0.0);
    for (i, &x0) in xs.iter().enumerate() {
        for &x1 in &xs[i + 1..] {
            for (j, &y0) in ys.iter().enumerate() {
                for &y1 in &ys[j + 1..] {
                    let cand = Rect::from_edges(x0, y0, x1, y1);
                    if cand.area() > best.area() && clipped.iter().all(|o| o.intersection_area(&cand) <= eps) {
                        best = cand;
                    }
                }
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuBox {
    pub unit_id: String,
    pub rect: Rect,
    pub highlight_box: Option<Rect>,
    pub text_box: Rect,
    pub icon_box: Option<Rect>,
    pub chart_box: Option<Rect>,
    pub chosen_strategy: Strategy,
    pub chosen_aspect: String,
    /// Scale applied to icon and chart; 1 when no shrink was needed.
    pub shrink_factor: f64,
}

impl SuBox {
    pub fn design_boxes(&self) -> Vec<Rect> {
        self.highlight_box.iter().chain(Some(&self.text_box)).chain(self.icon_box.iter()).chain(self.chart_box.iter()).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("unit `{unit_id}` has no room for its text")]
pub struct PlaceError {
    pub unit_id: String,
}

/// Relative slack for fit checks; exact fits lose a few ulps to padding arithmetic.
pub const FIT_SLACK: f64 = 1e-9;

/// Whether the unit text, wrapped at height `x`, fits inside `text`
/// (at least one row, no word wider than the box).
/// Whether `text` wrapped at glyph height `size` fits inside `rect`. Blank text always fits.
pub fn block_fits(text: &str, rect: &Rect, size: f64, glyphs: &GlyphMetrics) -> bool {
    let wrap = wrap_lines(text, rect.w * (1.0 + FIT_SLACK), size, glyphs);
    wrap.lines == 0 || !wrap.overflow && wrap.lines as f64 * size <= rect.h * (1.0 + FIT_SLACK)
}

pub fn text_fits(unit: &StoryUnit, text: &Rect, x: f64, glyphs: &GlyphMetrics) -> bool {
    let wrap = wrap_lines(&unit.text, text.w * (1.0 + FIT_SLACK), x, glyphs);
    let rows = wrap.lines.max(1) as f64;
    !wrap.overflow && text.w >= x * (1.0 - FIT_SLACK) && rows * x <= text.h * (1.0 + FIT_SLACK)
}

/// Evaluated combination: designs at full scale plus leftover text block.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub strategy: Strategy,
    pub aspect: Aspect,
    pub frame: DesignFrame,
    pub text: Rect,
    pub overlap: f64,
}

pub fn evaluate(
    unit: &StoryUnit,
    su_rect: Rect,
    x: f64,
    glyphs: &GlyphMetrics,
    strategy: Strategy,
    aspect: Aspect,
) -> Candidate {
    let frame = design_frame(unit, su_rect, x, glyphs, strategy, aspect);
    let designs: Vec<Rect> = frame.icon_at(1.0).into_iter().chain(frame.chart_at(1.0)).collect();
    let text = largest_empty_rect(frame.content, &designs);
    let mut overlap = overlap_measure(frame.content, &designs);
    if let Some(h) = frame.highlight {
        overlap += designs.iter().map(|d| d.intersection_area(&h)).sum::<f64>();
    }
    Candidate { strategy, aspect, frame, text, overlap }
}

pub fn is_zero_overlap(overlap: f64, content: Rect) -> bool {
    overlap <= OVERLAP_EPS * content.area().max(1.0)
}

/// Leftover text block with icon and chart at `scale`.
pub fn text_block_at(frame: &DesignFrame, scale: f64) -> Rect {
    let designs: Vec<Rect> = frame.icon_at(scale).into_iter().chain(frame.chart_at(scale)).collect();
    largest_empty_rect(frame.content, &designs)
}

pub fn place_unit_designs(unit: &StoryUnit, su_rect: Rect, x: f64, glyphs: &GlyphMetrics) -> Result<SuBox, PlaceError> {
    if let (Some(band), Some(text)) = (unit_regions(unit, su_rect, x, glyphs).0, unit.primary_text()) {
        if !block_fits(&text, &band, 2.0 * x, glyphs) {
            return Err(PlaceError { unit_id: unit.id.clone() });
        }
    }
    let mut fallback: Option<Candidate> = None;
    for strategy in STRATEGIES {
        for aspect in ASPECTS {
            let c = evaluate(unit, su_rect, x, glyphs, strategy, aspect);
            if is_zero_overlap(c.overlap, c.frame.content) && text_fits(unit, &c.text, x, glyphs) {
                return Ok(finish(unit, su_rect, &c, 1.0, c.text));
            }
            if fallback.as_ref().is_none_or(|f| c.overlap < f.overlap) {
                fallback = Some(c);
            }
        }
    }
    let c = fallback.expect("strategy grid is not empty");
    let has_designs = c.frame.icon.is_some() || c.frame.chart.is_some();
    let free = if is_zero_overlap(c.overlap, c.frame.content) { 1.0 } else { c.frame.free_scale() };
    let fits = |s: f64| text_fits(unit, &text_block_at(&c.frame, s), x, glyphs);
    if fits(free) {
        return Ok(finish(unit, su_rect, &c, free, text_block_at(&c.frame, free)));
    }
    let floor = MIN_DESIGN_SCALE.min(free);
    if !has_designs || !fits(floor) {
        return Err(PlaceError { unit_id: unit.id.clone() });
    }
    let (mut lo, mut hi) = (floor, free);
    while hi - lo > SHRINK_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(finish(unit, su_rect, &c, lo, text_block_at(&c.frame, lo)))
}

fn finish(unit: &StoryUnit, su_rect: Rect, c: &Candidate, scale: f64, text: Rect) -> SuBox {
    SuBox {
        unit_id: unit.id.clone(),
        rect: su_rect,
        highlight_box: c.frame.highlight,
        text_box: text,
        icon_box: c.frame.icon_at(scale),
        chart_box: c.frame.chart_at(scale),
        chosen_strategy: c.strategy,
        chosen_aspect: c.aspect.to_string(),
        shrink_factor: scale,
    }
}
