//! Blueprint solving: cell assignment, base-height solve, rectangle layout,
//! and per-unit design placement.

pub mod area;
pub mod build;
pub mod cells;
pub mod geometry;
pub mod glyph;
pub mod place;
pub mod solve;

pub use area::{area_polynomial, total_area, AreaPolynomial};
pub use build::{build_blueprint, center_text_rect, svg_id, Blueprint, BuildError, GlyphHeights, Override, SpBox};
pub use cells::{assign_sp_cells, Assignment, CellPlan};
pub use geometry::{Canvas, Point, Rect};
pub use glyph::{rows_needed, text_width, wrap_lines, GlyphMetrics, Wrap};
pub use place::{place_unit_designs, PlaceError, Strategy, SuBox};
pub use solve::{solve_scale, Clamp, Solution};

use crate::model::{LayoutKind, StoryFrame};

/// Relative width of the bracket at which the fit search stops.
pub const FIT_TOLERANCE: f64 = 1e-6;
pub const FIT_CLAMP: &str = "fit clamp";

/// Assigns cells, solves `x`, and builds the blueprint in one call.
///
/// When some unit cannot hold its wrapped text at the solved `x`, the base
/// height is lowered to the largest value (found by bisection, no lower than
/// [`solve::MIN_LEGIBLE_X`]) at which every unit fits, and a warning records it.
pub fn layout_frame(
    frame: &StoryFrame,
    layout: LayoutKind,
    canvas: Canvas,
    glyphs: &GlyphMetrics,
) -> Result<Blueprint, BuildError> {
    let assignment = assign_sp_cells(frame, layout, canvas.width);
    let solution = solve::solve_scale_with(frame, canvas, layout, &assignment, glyphs);
    let build = |x: f64| build_blueprint(frame, canvas, layout, x, &assignment, glyphs);
    let mut warnings = solution.warnings;
    let mut blueprint = match build(solution.x) {
        Ok(b) => b,
        Err(e @ (BuildError::Unplaceable { .. } | BuildError::TextOverflow { .. })) => {
            let owner = match &e {
                BuildError::Unplaceable { unit_id } => unit_id.clone(),
                BuildError::TextOverflow { owner } => owner.clone(),
                _ => unreachable!(),
            };
            let (mut fits, mut fails) = (None, solution.x);
            let mut probe = solution.x;
            while probe > solve::MIN_LEGIBLE_X {
                probe = (probe * 0.8).max(solve::MIN_LEGIBLE_X);
                if let Ok(b) = build(probe) {
                    fits = Some((probe, b));
                    break;
                }
                fails = probe;
            }
            let Some((mut lo, mut best)) = fits else {
                return Err(e);
            };
            while fails - lo > FIT_TOLERANCE * lo {
                let mid = 0.5 * (lo + fails);
                match build(mid) {
                    Ok(b) => {
                        lo = mid;
                        best = b;
                    }
                    Err(_) => fails = mid,
                }
            }
            warnings.push(format!(
                "{FIT_CLAMP}: base height lowered from {:.3} to {:.3} so `{owner}` fits",
                solution.x, lo
            ));
            best
        }
        Err(e) => return Err(e),
    };
    warnings.append(&mut blueprint.warnings);
    blueprint.warnings = warnings;
    Ok(blueprint)
}
