//! Bisection for the base letter height.

use serde::{Deserialize, Serialize};

use crate::model::{LayoutKind, StoryFrame};

use super::area::{area_polynomial_with, AreaPolynomial};
use super::cells::Assignment;
use super::geometry::Canvas;
use super::glyph::GlyphMetrics;

/// Smallest base letter height the solver will return.
pub const MIN_LEGIBLE_X: f64 = 6.0;
pub const MAX_ITERATIONS: u32 = 200;
/// Residual above which a clamped solution is reported.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

pub const UNDER_FILLED: &str = "under-filled canvas";
pub const OVER_FULL: &str = "over-full canvas";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clamp {
    /// Content cannot fill the canvas even at `x = H/3`.
    UnderFilled,
    /// The root fell below [`MIN_LEGIBLE_X`].
    OverFull,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: f64,
    pub iterations: u32,
    pub polynomial: AreaPolynomial,
    pub clamp: Option<Clamp>,
    pub warnings: Vec<String>,
}

impl Solution {
    pub fn residual(&self, canvas: Canvas) -> f64 {
        (self.polynomial.eval(self.x) - canvas.area()).abs() / canvas.area()
    }
}

/// Solves `A(x) = W * H` on `(0, H/3]`. `A` is strictly increasing on
/// `x > 0` because its linear coefficient is positive.
pub fn solve_scale_with(
    frame: &StoryFrame,
    canvas: Canvas,
    layout: LayoutKind,
    assignment: &Assignment,
    glyphs: &GlyphMetrics,
) -> Solution {
    let poly = area_polynomial_with(frame, canvas, layout, assignment, glyphs);
    let target = canvas.area();
    let hi_bound = canvas.height / 3.0;
    let mut warnings = Vec::new();

    if poly.eval(hi_bound) <= target {
        let residual = (target - poly.eval(hi_bound)) / target;
        let clamp = (residual > RESIDUAL_TOLERANCE).then(|| {
            warnings.push(UNDER_FILLED.to_string());
            Clamp::UnderFilled
        });
        return Solution { x: hi_bound, iterations: 0, polynomial: poly, clamp, warnings };
    }

    let (mut lo, mut hi) = (0.0_f64, hi_bound);
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if poly.eval(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    let mut clamp = None;
    if x < MIN_LEGIBLE_X {
        x = MIN_LEGIBLE_X.min(hi_bound);
        warnings.push(OVER_FULL.to_string());
        clamp = Some(Clamp::OverFull);
    }
    Solution { x, iterations, polynomial: poly, clamp, warnings }
}

pub fn solve_scale(frame: &StoryFrame, canvas: Canvas, layout: LayoutKind, glyphs: &GlyphMetrics) -> Solution {
    let assignment = super::cells::assign_sp_cells(frame, layout, canvas.width);
    solve_scale_with(frame, canvas, layout, &assignment, glyphs)
}
