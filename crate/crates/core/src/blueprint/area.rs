//! Total content area as a function of the base letter height `x`.
//!
//! Title `3Wx`; subtitle `1.5 * W_sp * x`; highlight `2x * 2 * W_text(x)`;
//! regular text `x * W_text(x)`; icon and chart each equal to the text area.
//! Star adds a virtual centre piece of one quarter of the piece total.
//! Every term is linear or quadratic in `x`, so `A(x) = a x^2 + b x`.

use crate::model::{LayoutKind, StoryFrame, StoryPiece, StoryUnit};

use super::cells::{assign_sp_cells, Assignment};
use super::geometry::Canvas;
use super::glyph::GlyphMetrics;

/// Virtual Star centre area as a share of the summed piece areas.
pub const STAR_CENTER_SHARE: f64 = 0.25;

/// Coefficients of `A(x) = quadratic * x^2 + linear * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaPolynomial {
    pub quadratic: f64,
    pub linear: f64,
}

impl AreaPolynomial {
    pub fn eval(&self, x: f64) -> f64 {
        (self.quadratic * x + self.linear) * x
    }

    /// Positive root of `A(x) = target`.
    pub fn root(&self, target: f64) -> f64 {
        let (a, b) = (self.quadratic, self.linear);
        if a == 0.0 {
            return target / b;
        }
        // numerically stable form of (-b + sqrt(b^2 + 4 a t)) / 2a
        2.0 * target / (b + (b * b + 4.0 * a * target).sqrt())
    }
}

fn unit_coefficient(unit: &StoryUnit, glyphs: &GlyphMetrics) -> f64 {
    let text = glyphs.ratio_sum(&unit.text);
    let highlight = unit.primary_text().map_or(0.0, |h| glyphs.ratio_sum(&h));
    let designs = 1.0 + f64::from(u8::from(unit.icon_keyword.is_some())) + f64::from(u8::from(unit.chart.is_some()));
    // 2x tall, twice the base-height width
    4.0 * highlight + designs * text
}

/// Area of one unit at base height `x`.
pub fn su_area(unit: &StoryUnit, x: f64, glyphs: &GlyphMetrics) -> f64 {
    unit_coefficient(unit, glyphs) * x * x
}

fn subtitle_coefficient(piece: &StoryPiece, nominal_width: f64) -> f64 {
    if piece.subtitle.is_empty() {
        0.0
    } else {
        1.5 * nominal_width
    }
}

/// Area of one piece at base height `x`, given its nominal cell width.
pub fn sp_area(piece: &StoryPiece, x: f64, nominal_width: f64, glyphs: &GlyphMetrics) -> f64 {
    subtitle_coefficient(piece, nominal_width) * x
        + piece.units.iter().map(|u| su_area(u, x, glyphs)).sum::<f64>()
}

pub fn area_polynomial_with(
    frame: &StoryFrame,
    canvas: Canvas,
    layout: LayoutKind,
    assignment: &Assignment,
    glyphs: &GlyphMetrics,
) -> AreaPolynomial {
    let mut quadratic = 0.0;
    let mut linear = 0.0;
    for (i, piece) in frame.pieces.iter().enumerate() {
        linear += subtitle_coefficient(piece, assignment.nominal_width(i));
        quadratic += piece.units.iter().map(|u| unit_coefficient(u, glyphs)).sum::<f64>();
    }
    if layout == LayoutKind::Star {
        quadratic *= 1.0 + STAR_CENTER_SHARE;
        linear *= 1.0 + STAR_CENTER_SHARE;
    }
    AreaPolynomial { quadratic, linear: linear + 3.0 * canvas.width }
}

pub fn area_polynomial(frame: &StoryFrame, canvas: Canvas, layout: LayoutKind, glyphs: &GlyphMetrics) -> AreaPolynomial {
    let assignment = assign_sp_cells(frame, layout, canvas.width);
    area_polynomial_with(frame, canvas, layout, &assignment, glyphs)
}

/// `A(x)`: title plus every piece (plus the Star centre) at base height `x`.
pub fn total_area(frame: &StoryFrame, x: f64, layout: LayoutKind, canvas: Canvas, glyphs: &GlyphMetrics) -> f64 {
    let assignment = assign_sp_cells(frame, layout, canvas.width);
    let pieces: f64 = frame
        .pieces
        .iter()
        .enumerate()
        .map(|(i, p)| sp_area(p, x, assignment.nominal_width(i), glyphs))
        .sum();
    let pieces = if layout == LayoutKind::Star { pieces * (1.0 + STAR_CENTER_SHARE) } else { pieces };
    3.0 * canvas.width * x + pieces
}
