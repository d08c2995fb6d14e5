//! SVG fragments for the five chart kinds.

use std::fmt::Write;

use crate::blueprint::Rect;
use crate::model::{ChartKind, ChartSpec, Stylization};

use super::{escape, num};

/// Share of the box height filled by the tallest bar.
pub const BAR_FILL: f64 = 0.9;
/// Opacity of unfilled pictograph glyphs.
pub const PICTOGRAPH_DIM: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid chart: {}", .0.join("; "))]
pub struct ChartError(pub Vec<String>);

/// Slice angles in degrees, proportional to the values.
pub fn pie_angles(values: &[f64]) -> Vec<f64> {
    let total: f64 = values.iter().sum();
    values.iter().map(|v| 360.0 * v / total).collect()
}

fn polar(cx: f64, cy: f64, r: f64, deg: f64) -> (f64, f64) {
    // 0 degrees at 12 o'clock, clockwise
    let t = deg.to_radians();
    (cx + r * t.sin(), cy - r * t.cos())
}

fn slice_path(cx: f64, cy: f64, r: f64, from: f64, sweep: f64) -> String {
    let (x0, y0) = polar(cx, cy, r, from);
    let (x1, y1) = polar(cx, cy, r, from + sweep);
    let large = u8::from(sweep > 180.0);
    format!(
        "M{} {} L{} {} A{} {} 0 {large} 1 {} {} Z",
        num(cx),
        num(cy),
        num(x0),
        num(y0),
        num(r),
        num(r),
        num(x1),
        num(y1)
    )
}

fn slice(out: &mut String, cx: f64, cy: f64, r: f64, from: f64, sweep: f64, fill: &str, extra: &str) {
    if sweep <= 0.0 {
        return;
    }
    if sweep >= 360.0 - 1e-9 {
        let _ = write!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\" data-angle=\"{}\"{extra}/>",
            num(cx),
            num(cy),
            num(r),
            num(sweep)
        );
    } else {
        let _ = write!(
            out,
            "<path d=\"{}\" fill=\"{fill}\" data-angle=\"{}\"{extra}/>",
            slice_path(cx, cy, r, from, sweep),
            num(sweep)
        );
    }
}

fn pie(spec: &ChartSpec, b: Rect, s: &Stylization, out: &mut String) {
    let c = b.center();
    let r = b.w.min(b.h) / 2.0;
    let values: Vec<f64> = spec.series.iter().map(|p| p.value).collect();
    let mut from = 0.0;
    for (i, (p, sweep)) in spec.series.iter().zip(pie_angles(&values)).enumerate() {
        let extra = format!(" data-label=\"{}\"", escape(&p.label));
        slice(out, c.x, c.y, r, from, sweep, &s.theme(i).to_string(), &extra);
        from += sweep;
    }
}

fn single_pie(spec: &ChartSpec, b: Rect, s: &Stylization, out: &mut String) {
    let c = b.center();
    let r = b.w.min(b.h) / 2.0;
    let v = spec.single_value.unwrap_or(0.0);
    let _ = write!(
        out,
        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\" fill-opacity=\"{}\"/>",
        num(c.x),
        num(c.y),
        num(r),
        s.theme(0),
        num(PICTOGRAPH_DIM)
    );
    slice(out, c.x, c.y, r, 0.0, 3.6 * v, &s.theme(0).to_string(), "");
}

/// Bar rectangles `(x, y, w, h)` for the given values inside `b`.
pub fn bar_geometry(values: &[f64], b: Rect) -> Vec<Rect> {
    let n = values.len().max(1) as f64;
    let slot = b.w / n;
    let bw = slot * 0.7;
    let max_pos = values.iter().copied().fold(0.0_f64, f64::max);
    let max_neg = values.iter().copied().fold(0.0_f64, |m, v| m.max(-v));
    let range = max_pos + max_neg;
    let usable = BAR_FILL * b.h;
    let baseline = b.bottom() - if range > 0.0 { usable * max_neg / range } else { 0.0 };
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let h = if range > 0.0 { usable * v.abs() / range } else { 0.0 };
            let x = b.x + i as f64 * slot + (slot - bw) / 2.0;
            let y = if *v >= 0.0 { baseline - h } else { baseline };
            Rect::new(x, y, bw, h)
        })
        .collect()
}

fn bar(spec: &ChartSpec, b: Rect, s: &Stylization, out: &mut String) {
    let values: Vec<f64> = spec.series.iter().map(|p| p.value).collect();
    let label_size = (b.h * (1.0 - BAR_FILL)).min(b.w / values.len().max(1) as f64 / 3.0);
    for (i, (p, r)) in spec.series.iter().zip(bar_geometry(&values, b)).enumerate() {
        let _ = write!(
            out,
            "<rect class=\"bar\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" data-label=\"{}\" data-value=\"{}\"/>",
            num(r.x),
            num(r.y),
            num(r.w),
            num(r.h),
            s.theme(i),
            escape(&p.label),
            num(p.value)
        );
        let ly = (r.y - 0.1 * label_size).max(b.y + label_size);
        let _ = write!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"{}\" text-anchor=\"middle\" fill=\"{}\">{}</text>",
            num(r.x + r.w / 2.0),
            num(ly),
            num(label_size),
            s.text_colors.regular,
            escape(&num(p.value))
        );
    }
}

fn line(spec: &ChartSpec, b: Rect, s: &Stylization, out: &mut String) {
    let values: Vec<f64> = spec.series.iter().map(|p| p.value).collect();
    let label_size = b.h * (1.0 - BAR_FILL) / 2.0;
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let plot = Rect::new(b.x + label_size, b.y + label_size, b.w - 2.0 * label_size, b.h - 2.0 * label_size);
    let n = values.len();
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = plot.x + plot.w * i as f64 / (n - 1).max(1) as f64;
            let y = plot.bottom() - plot.h * (v - lo) / span;
            (x, y)
        })
        .collect();
    let path: Vec<String> = pts.iter().map(|(x, y)| format!("{},{}", num(*x), num(*y))).collect();
    let _ = write!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\"/>",
        path.join(" "),
        s.theme(0),
        num((label_size / 3.0).max(0.5))
    );
    for (i, anchor) in [(0, "start"), (n - 1, "end")] {
        let (x, y) = pts[i];
        let ty = if y - label_size * 0.2 < b.y + label_size { y + label_size } else { y - label_size * 0.2 };
        let _ = write!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"{}\" text-anchor=\"{anchor}\" fill=\"{}\">{}</text>",
            num(x),
            num(ty.min(b.bottom())),
            num(label_size),
            s.text_colors.regular,
            escape(&num(values[i]))
        );
    }
}

/// Columns of the pictograph grid that maximise glyph size.
pub fn pictograph_columns(count: u32, b: Rect) -> u32 {
    let mut best = (1, 0.0);
    for c in 1..=count.max(1) {
        let rows = count.div_ceil(c);
        let size = (b.w / f64::from(c)).min(b.h / f64::from(rows));
        if size > best.1 {
            best = (c, size);
        }
    }
    best.0
}

fn pictograph(spec: &ChartSpec, b: Rect, s: &Stylization, out: &mut String) {
    let f = spec.fraction.expect("validated");
    let cols = pictograph_columns(f.denominator, b);
    let rows = f.denominator.div_ceil(cols);
    let cell = (b.w / f64::from(cols)).min(b.h / f64::from(rows));
    let r = cell * 0.4;
    for i in 0..f.denominator {
        let (row, col) = (i / cols, i % cols);
        let cx = b.x + (f64::from(col) + 0.5) * cell;
        let cy = b.y + (f64::from(row) + 0.5) * cell;
        let opacity = if i < f.numerator { 1.0 } else { PICTOGRAPH_DIM };
        let _ = write!(
            out,
            "<circle class=\"glyph\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\" fill-opacity=\"{}\"/>",
            num(cx),
            num(cy),
            num(r),
            s.theme(0),
            num(opacity)
        );
    }
}

pub fn render_chart(spec: &ChartSpec, b: Rect, stylization: &Stylization) -> Result<String, ChartError> {
    let v = spec.violations();
    if !v.is_empty() {
        return Err(ChartError(v));
    }
    if !(b.w > 0.0 && b.h > 0.0) {
        return Err(ChartError(vec!["chart box must be positive".into()]));
    }
    let mut out = String::new();
    match spec.kind {
        ChartKind::Pie => pie(spec, b, stylization, &mut out),
        ChartKind::Bar => bar(spec, b, stylization, &mut out),
        ChartKind::Line => line(spec, b, stylization, &mut out),
        ChartKind::SinglePie => single_pie(spec, b, stylization, &mut out),
        ChartKind::Pictograph => pictograph(spec, b, stylization, &mut out),
    }
    Ok(out)
}
