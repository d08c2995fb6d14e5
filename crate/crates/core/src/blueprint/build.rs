//! Turns a solved scale and a cell assignment into positioned rectangles.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{LayoutKind, StoryFrame, StoryPiece, StoryUnit};

use super::area::{sp_area, su_area};
use super::cells::{Assignment, GroupAxis, StarSide};
use super::geometry::{round3, Canvas, Point, Rect};
use super::glyph::{rows_needed, text_width, GlyphMetrics};
use super::place::{block_fits, highlight_band_height, place_unit_designs, PlaceError, SuBox, UNIT_PADDING};

/// Scale applied to Spiral pieces wrapped by the path on three sides.
pub const SPIRAL_SHRINK: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlyphHeights {
    pub title: f64,
    pub subtitle: f64,
    pub highlight: f64,
    pub regular: f64,
}

impl GlyphHeights {
    pub fn for_base(x: f64) -> Self {
        GlyphHeights { title: 3.0 * x, subtitle: 1.5 * x, highlight: 2.0 * x, regular: x }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpBox {
    pub piece_id: String,
    pub cell: usize,
    pub rect: Rect,
    pub subtitle_rect: Rect,
    pub units: Vec<SuBox>,
}

/// Editor-applied delta on one rendered element, keyed by its SVG id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Override {
    pub element_id: String,
    #[serde(default)]
    pub dx: f64,
    #[serde(default)]
    pub dy: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Blueprint {
    pub layout: LayoutKind,
    pub canvas: Canvas,
    pub x: f64,
    pub glyph_heights: GlyphHeights,
    pub glyph_table: String,
    pub title_box: Rect,
    pub sp_boxes: Vec<SpBox>,
    #[serde(default)]
    pub spiral_path: Option<Vec<Point>>,
    #[serde(default)]
    pub center_box: Option<Rect>,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub overrides: Vec<Override>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BuildError {
    #[error("cannot place unit `{unit_id}` after clamping the scale")]
    Unplaceable { unit_id: String },
    /// Title, subtitle or goal text does not fit its box.
    #[error("text of `{owner}` does not fit its box")]
    TextOverflow { owner: String },
    #[error("invalid canvas {width}x{height}")]
    Canvas { width: f64, height: f64 },
    #[error("assignment covers {cells} cells but the frame has {pieces} pieces")]
    Assignment { cells: usize, pieces: usize },
}

impl From<PlaceError> for BuildError {
    fn from(e: PlaceError) -> Self {
        BuildError::Unplaceable { unit_id: e.unit_id }
    }
}

/// Square inscribed in the Star centre circle, where the goal is printed.
pub fn center_text_rect(center: Rect) -> Rect {
    let half = center.w.min(center.h) / 2.0 / std::f64::consts::SQRT_2;
    let c = center.center();
    Rect::new(c.x - half, c.y - half, 2.0 * half, 2.0 * half)
}

pub fn svg_id(domain_id: &str) -> String {
    format!("sf-{domain_id}")
}

impl Blueprint {
    /// Copy with every coordinate rounded to three decimals.
    pub fn rounded(&self) -> Blueprint {
        let mut b = self.clone();
        b.title_box = b.title_box.rounded();
        b.center_box = b.center_box.map(|r| r.rounded());
        if let Some(path) = &mut b.spiral_path {
            for p in path {
                *p = Point::new(round3(p.x), round3(p.y));
            }
        }
        for sp in &mut b.sp_boxes {
            sp.rect = sp.rect.rounded();
            sp.subtitle_rect = sp.subtitle_rect.rounded();
            for su in &mut sp.units {
                su.rect = su.rect.rounded();
                su.text_box = su.text_box.rounded();
                su.highlight_box = su.highlight_box.map(|r| r.rounded());
                su.icon_box = su.icon_box.map(|r| r.rounded());
                su.chart_box = su.chart_box.map(|r| r.rounded());
            }
        }
        b
    }

    pub fn sp(&self, piece_id: &str) -> Option<&SpBox> {
        self.sp_boxes.iter().find(|s| s.piece_id == piece_id)
    }

    pub fn su(&self, unit_id: &str) -> Option<&SuBox> {
        self.sp_boxes.iter().flat_map(|s| s.units.iter()).find(|u| u.unit_id == unit_id)
    }

    /// SVG ids of every element the renderer emits for this blueprint.
    pub fn element_ids(&self) -> BTreeSet<String> {
        let mut ids = BTreeSet::new();
        ids.insert(svg_id("title"));
        if self.center_box.is_some() {
            ids.insert(svg_id("center"));
        }
        if self.spiral_path.is_some() {
            ids.insert(svg_id("spiral"));
        }
        for sp in &self.sp_boxes {
            ids.insert(svg_id(&sp.piece_id));
            ids.insert(svg_id(&format!("{}-subtitle", sp.piece_id)));
            for su in &sp.units {
                ids.insert(svg_id(&su.unit_id));
                ids.insert(svg_id(&format!("{}-text", su.unit_id)));
                for (part, present) in [
                    ("highlight", su.highlight_box.is_some()),
                    ("icon", su.icon_box.is_some()),
                    ("chart", su.chart_box.is_some()),
                ] {
                    if present {
                        ids.insert(svg_id(&format!("{}-{part}", su.unit_id)));
                    }
                }
            }
        }
        ids
    }

    /// Replaces the override list, warning about ids this blueprint lacks.
    pub fn apply_overrides(&mut self, overrides: &[Override]) -> Vec<String> {
        let ids = self.element_ids();
        let mut warnings = Vec::new();
        self.overrides.clear();
        for o in overrides {
            if ids.contains(&o.element_id) {
                self.overrides.push(o.clone());
            } else {
                warnings.push(format!("override for vanished element `{}` ignored", o.element_id));
            }
        }
        self.warnings.extend(warnings.iter().cloned());
        warnings
    }
}

/// Splits `total` into consecutive lengths proportional to `weights`, each
/// at least its entry in `mins` when the minimums fit. The last part absorbs
/// rounding so the parts cover `total` exactly.
fn split_min(start: f64, total: f64, weights: &[f64], mins: &[f64]) -> Vec<(f64, f64)> {
    let n = weights.len();
    let min_sum: f64 = mins.iter().sum();
    let lens: Vec<f64> = if min_sum >= total && min_sum > 0.0 {
        mins.iter().map(|m| total * m / min_sum).collect()
    } else {
        let mut fixed = vec![false; n];
        loop {
            let free_total = total - (0..n).filter(|&i| fixed[i]).map(|i| mins[i]).sum::<f64>();
            let free_w: f64 = (0..n).filter(|&i| !fixed[i]).map(|i| weights[i]).sum();
            let free_n = fixed.iter().filter(|f| !**f).count().max(1) as f64;
            let lens: Vec<f64> = (0..n)
                .map(|i| {
                    if fixed[i] {
                        mins[i]
                    } else if free_w > 0.0 {
                        free_total * weights[i] / free_w
                    } else {
                        free_total / free_n
                    }
                })
                .collect();
            let short: Vec<usize> = (0..n).filter(|&i| !fixed[i] && lens[i] < mins[i]).collect();
            if short.is_empty() {
                break lens;
            }
            for i in short {
                fixed[i] = true;
            }
        }
    };
    let mut out = Vec::with_capacity(n);
    let mut cursor = start;
    for (i, len) in lens.into_iter().enumerate() {
        let len = if i + 1 == n { start + total - cursor } else { len };
        out.push((cursor, len));
        cursor += len;
    }
    out
}

#[cfg(test)]
fn split(start: f64, total: f64, weights: &[f64]) -> Vec<(f64, f64)> {
    split_min(start, total, weights, &vec![0.0; weights.len()])
}

/// Smallest height that holds a unit's wrapped highlight band and its
/// wrapped text at `width`.
pub fn unit_min_height(unit: &StoryUnit, width: f64, x: f64, glyphs: &GlyphMetrics) -> f64 {
    let inner = width - 2.0 * UNIT_PADDING * x;
    let text = rows_needed(&unit.text, inner, x, glyphs) as f64 * x;
    highlight_band_height(unit, inner, x, glyphs) + text + 2.0 * UNIT_PADDING * x
}

fn subtitle_height(piece: &StoryPiece, width: f64, x: f64, glyphs: &GlyphMetrics) -> f64 {
    if piece.subtitle.is_empty() {
        0.0
    } else {
        1.5 * x * rows_needed(&piece.subtitle, width, 1.5 * x, glyphs) as f64
    }
}

/// Narrowest cell that holds every word of the piece on a line of its own.
pub fn cell_min_width(piece: &StoryPiece, x: f64, glyphs: &GlyphMetrics) -> f64 {
    let widest = |text: &str, size: f64| text.split_whitespace().map(|w| text_width(w, size, glyphs)).fold(0.0, f64::max);
    let mut w = widest(&piece.subtitle, 1.5 * x);
    for unit in &piece.units {
        w = w.max(widest(&unit.text, x) + 2.0 * UNIT_PADDING * x);
        if let Some(text) = unit.primary_text() {
            w = w.max(widest(&text, 2.0 * x) + 2.0 * UNIT_PADDING * x);
        }
    }
    w.max((1.0 + 2.0 * UNIT_PADDING) * x)
}

/// Per-cell target areas and minimum sizes.
struct Sizing {
    area: Vec<f64>,
    min_h: Vec<f64>,
    min_w: Vec<f64>,
}

impl Sizing {
    fn widest(&self, cells: &[usize]) -> f64 {
        cells.iter().map(|&c| self.min_w[c]).fold(0.0, f64::max)
    }

    fn gather<T: Copy>(&self, cells: &[usize], v: &[T]) -> Vec<T> {
        cells.iter().map(|&c| v[c]).collect()
    }
}

fn group_cells(assignment: &Assignment, group: usize) -> Vec<usize> {
    let mut cells: Vec<usize> =
        assignment.plan.cells.iter().enumerate().filter(|(_, c)| c.group == group).map(|(i, _)| i).collect();
    cells.sort_by_key(|&c| assignment.plan.cells[c].slot);
    cells
}

struct CellGeometry {
    rects: Vec<Rect>,
    center: Option<Rect>,
    path: Option<Vec<Point>>,
}

fn banded_cells(content: Rect, assignment: &Assignment, sz: &Sizing) -> Vec<Rect> {
    let plan = &assignment.plan;
    let mut rects = vec![Rect::default(); plan.len()];
    let groups: Vec<Vec<usize>> = (0..plan.groups.len()).map(|g| group_cells(assignment, g)).collect();
    let group_weight: Vec<f64> = groups.iter().map(|cs| cs.iter().map(|&c| sz.area[c]).sum()).collect();
    let columns = plan.groups.first().is_some_and(|g| g.axis == GroupAxis::Column);
    let bands = if columns {
        split_min(content.x, content.w, &group_weight, &groups.iter().map(|cs| sz.widest(cs)).collect::<Vec<_>>())
    } else {
        let mins: Vec<f64> = groups.iter().map(|cs| cs.iter().map(|&c| sz.min_h[c]).fold(0.0, f64::max)).collect();
        split_min(content.y, content.h, &group_weight, &mins)
    };
    for (cells, (start, len)) in groups.iter().zip(bands) {
        let weights = sz.gather(cells, &sz.area);
        if columns {
            for (&c, (y, h)) in cells.iter().zip(split_min(content.y, content.h, &weights, &sz.gather(cells, &sz.min_h))) {
                rects[c] = Rect::new(start, y, len, h);
            }
        } else {
            for (&c, (x, w)) in cells.iter().zip(split_min(content.x, content.w, &weights, &sz.gather(cells, &sz.min_w))) {
                rects[c] = Rect::new(x, start, w, len);
            }
        }
    }
    rects
}

fn star_cells(content: Rect, assignment: &Assignment, sz: &Sizing) -> (Vec<Rect>, Rect) {
    let plan = &assignment.plan;
    let total = content.area();
    let ring_total = total * 4.0 / 5.0;
    let sum: f64 = sz.area.iter().sum();
    let n = sz.area.len();
    // ring areas rescaled to four fifths of the region, centre takes the rest
    let scaled: Vec<f64> =
        sz.area.iter().map(|a| if sum > 0.0 { ring_total * a / sum } else { ring_total / n as f64 }).collect();
    let side_cells = |side: StarSide| -> Vec<usize> {
        plan.groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.side == Some(side))
            .flat_map(|(gi, _)| group_cells(assignment, gi))
            .collect()
    };
    let area_of = |side: StarSide| -> f64 { side_cells(side).iter().map(|&c| scaled[c]).sum() };
    let strip_min = |side: StarSide| -> f64 { side_cells(side).iter().map(|&c| sz.min_h[c]).fold(0.0, f64::max) };
    let (left, right) = (area_of(StarSide::Left), area_of(StarSide::Right));
    let has = |side: StarSide| plan.groups.iter().any(|g| g.side == Some(side));
    let (has_left, has_right) = (has(StarSide::Left), has(StarSide::Right));
    let (left_min, right_min) = (sz.widest(&side_cells(StarSide::Left)), sz.widest(&side_cells(StarSide::Right)));
    let side_min = left_min + right_min;
    // the middle band must hold the centre (a fifth of the region) beside
    // the side columns at their minimum width
    let m_min = if content.w > side_min { (total / 5.0) / (content.w - side_min) } else { content.h / 5.0 };
    let limit = (content.h - m_min.max(content.h / 5.0)).max(0.0);
    let mut t = (area_of(StarSide::Top) / content.w).max(strip_min(StarSide::Top));
    let mut b = (area_of(StarSide::Bottom) / content.w).max(strip_min(StarSide::Bottom));
    if t + b > limit {
        let k = if t + b > 0.0 { limit / (t + b) } else { 0.0 };
        t *= k;
        b *= k;
    }
    let m = content.h - t - b;
    let cw = ((total / 5.0) / m).min(content.w);
    let sides = content.w - cw;
    let (lw, rw) = match (has_left, has_right) {
        (true, true) => {
            let parts = split_min(0.0, sides, &[left, right], &[left_min, right_min]);
            (parts[0].1, parts[1].1)
        }
        (true, false) => (sides, 0.0),
        (false, true) => (0.0, sides),
        (false, false) => (0.0, 0.0),
    };
    let mid_y = content.y + t;
    let center = Rect::new(content.x + lw, mid_y, cw, m);

    let mut rects = vec![Rect::default(); n];
    for (gi, g) in plan.groups.iter().enumerate() {
        let cells = group_cells(assignment, gi);
        let weights = sz.gather(&cells, &scaled);
        let (strip, along_x) = match g.side.expect("star groups have sides") {
            StarSide::Top => (Rect::new(content.x, content.y, content.w, t), true),
            StarSide::Bottom => (Rect::new(content.x, content.bottom() - b, content.w, b), true),
            StarSide::Left => (Rect::new(content.x, mid_y, lw, m), false),
            StarSide::Right => (Rect::new(content.right() - rw, mid_y, rw, m), false),
        };
        if along_x {
            for (&c, (x, w)) in cells.iter().zip(split_min(strip.x, strip.w, &weights, &sz.gather(&cells, &sz.min_w))) {
                rects[c] = Rect::new(x, strip.y, w, strip.h);
            }
        } else {
            for (&c, (y, h)) in cells.iter().zip(split_min(strip.y, strip.h, &weights, &sz.gather(&cells, &sz.min_h))) {
                rects[c] = Rect::new(strip.x, y, strip.w, h);
            }
        }
    }
    (rects, center)
}

/// Serpentine path along the row boundaries, plus the cells it wraps on
/// three sides.
fn spiral(content: Rect, assignment: &Assignment, rects: &[Rect], x: f64) -> (Vec<Point>, Vec<usize>) {
    let plan = &assignment.plan;
    let rows = plan.groups.len();
    let margin = x.min(content.w / 4.0);
    let (left, right) = (content.x + margin, content.right() - margin);
    let row_bottom = |g: usize| rects[group_cells(assignment, g)[0]].bottom();
    let mut path = Vec::new();
    if rows == 1 {
        let y = content.y + content.h / 2.0;
        path.push(Point::new(left, y));
        path.push(Point::new(right, y));
    } else {
        for k in 0..rows - 1 {
            let y = row_bottom(k);
            if k % 2 == 0 {
                path.extend([Point::new(left, y), Point::new(right, y)]);
            } else {
                path.extend([Point::new(right, y), Point::new(left, y)]);
            }
        }
    }
    (path, spiral_enclosed(assignment))
}

/// Cells at the turning end of middle rows, wrapped by the path on three sides.
fn spiral_enclosed(assignment: &Assignment) -> Vec<usize> {
    let rows = assignment.plan.groups.len();
    (1..rows.saturating_sub(1))
        .map(|r| {
            let cells = group_cells(assignment, r);
            if r % 2 == 1 {
                *cells.last().expect("row not empty")
            } else {
                cells[0]
            }
        })
        .collect()
}

fn cell_geometry(content: Rect, assignment: &Assignment, sz: &Sizing, x: f64) -> CellGeometry {
    match assignment.plan.layout {
        LayoutKind::Star => {
            let (rects, center) = star_cells(content, assignment, sz);
            CellGeometry { rects, center: Some(center), path: None }
        }
        LayoutKind::Spiral => {
            let mut rects = banded_cells(content, assignment, sz);
            let (path, enclosed) = spiral(content, assignment, &rects, x);
            for c in enclosed {
                rects[c] = rects[c].scaled_about_center(SPIRAL_SHRINK);
            }
            CellGeometry { rects, center: None, path: Some(path) }
        }
        _ => CellGeometry { rects: banded_cells(content, assignment, sz), center: None, path: None },
    }
}

pub fn build_blueprint(
    frame: &StoryFrame,
    canvas: Canvas,
    layout: LayoutKind,
    x: f64,
    assignment: &Assignment,
    glyphs: &GlyphMetrics,
) -> Result<Blueprint, BuildError> {
    if !canvas.is_valid() {
        return Err(BuildError::Canvas { width: canvas.width, height: canvas.height });
    }
    if assignment.cell_pieces.len() != frame.pieces.len() {
        return Err(BuildError::Assignment { cells: assignment.cell_pieces.len(), pieces: frame.pieces.len() });
    }
    let heights = GlyphHeights::for_base(x);
    let title_rows = rows_needed(&frame.title, canvas.width, heights.title, glyphs) as f64;
    let title_box = Rect::new(0.0, 0.0, canvas.width, (heights.title * title_rows).min(canvas.height));
    let content = Rect::from_edges(0.0, title_box.bottom(), canvas.width, canvas.height);

    let mut sizing = Sizing {
        area: assignment
            .cell_pieces
            .iter()
            .enumerate()
            .map(|(c, &p)| sp_area(&frame.pieces[p], x, assignment.plan.cells[c].nominal_width, glyphs))
            .collect(),
        min_h: assignment
            .cell_pieces
            .iter()
            .enumerate()
            .map(|(c, &p)| {
                let piece = &frame.pieces[p];
                let w = assignment.plan.cells[c].nominal_width;
                subtitle_height(piece, w, x, glyphs)
                    + piece.units.iter().map(|u| unit_min_height(u, w, x, glyphs)).sum::<f64>()
            })
            .collect(),
        min_w: assignment.cell_pieces.iter().map(|&p| cell_min_width(&frame.pieces[p], x, glyphs)).collect(),
    };
    if layout == LayoutKind::Spiral {
        // enclosed cells shrink after the split, so they need more room before it
        for c in spiral_enclosed(assignment) {
            sizing.min_w[c] /= SPIRAL_SHRINK;
            sizing.min_h[c] /= SPIRAL_SHRINK;
        }
    }
    let geometry = cell_geometry(content, assignment, &sizing, x);
    let overflow = |owner: &str| BuildError::TextOverflow { owner: owner.to_string() };
    if !block_fits(&frame.title, &title_box, heights.title, glyphs) {
        return Err(overflow("title"));
    }
    if let Some(center) = geometry.center {
        if !block_fits(&frame.goal, &center_text_rect(center), heights.subtitle, glyphs) {
            return Err(overflow("center"));
        }
    }

    let mut sp_boxes = Vec::with_capacity(frame.pieces.len());
    for (cell, &p) in assignment.cell_pieces.iter().enumerate() {
        let piece = &frame.pieces[p];
        let rect = geometry.rects[cell];
        let sub_h = subtitle_height(piece, rect.w, x, glyphs).min(rect.h);
        let subtitle_rect = Rect::new(rect.x, rect.y, rect.w, sub_h);
        if !block_fits(&piece.subtitle, &subtitle_rect, heights.subtitle, glyphs) {
            return Err(overflow(&piece.id));
        }
        let weights: Vec<f64> = piece.units.iter().map(|u| su_area(u, x, glyphs)).collect();
        let mins: Vec<f64> = piece.units.iter().map(|u| unit_min_height(u, rect.w, x, glyphs)).collect();
        let mut units = Vec::with_capacity(piece.units.len());
        for (unit, (y, h)) in piece.units.iter().zip(split_min(rect.y + sub_h, rect.h - sub_h, &weights, &mins)) {
            units.push(place_unit_designs(unit, Rect::new(rect.x, y, rect.w, h), x, glyphs)?);
        }
        sp_boxes.push(SpBox { piece_id: piece.id.clone(), cell, rect, subtitle_rect, units });
    }

    let mut warnings = assignment.warnings.clone();
    for sp in &sp_boxes {
        for su in &sp.units {
            if su.shrink_factor < 1.0 {
                warnings.push(format!("unit `{}`: icon and chart shrunk to {:.3}", su.unit_id, su.shrink_factor));
            }
        }
    }

    Ok(Blueprint {
        layout,
        canvas,
        x,
        glyph_heights: heights,
        glyph_table: glyphs.version().to_string(),
        title_box,
        sp_boxes,
        spiral_path: geometry.path,
        center_box: geometry.center,
        warnings,
        overrides: Vec::new(),
    })
}
