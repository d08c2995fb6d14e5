//! Standalone SVG output for a frame and its blueprint.

pub mod chart;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use crate::blueprint::{center_text_rect, svg_id, text_width, Blueprint, GlyphMetrics, Point, Rect};
use crate::model::{Color, StoryFrame, StoryUnit, Stylization, TextSpan};
use crate::provider::{placeholder_icon, IconAsset};

pub use chart::{render_chart, ChartError};

/// Baseline offset below the top of a line, as a share of glyph height.
pub const ASCENT: f64 = 0.8;
pub const ELLIPSIS: char = '\u{2026}';
/// Blueprint documents store three decimals, so boxes may come back up to
/// half a thousandth short of the text they were sized for.
const PRINT_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("blueprint does not match frame at id `{id}`")]
    IdMismatch { id: String },
    #[error("unit `{unit_id}`: {source}")]
    Chart { unit_id: String, source: ChartError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub svg: String,
    pub warnings: Vec<String>,
}

/// Icon assets keyed by keyword.
pub type IconAssets = BTreeMap<String, IconAsset>;

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && !matches!(c, '\t' | '\n' | '\r') => {}
            c => out.push(c),
        }
    }
    out
}

/// Three-decimal number with trailing zeros removed.
pub fn num(v: f64) -> String {
    let s = format!("{:.3}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Style {
    Regular,
    Primary,
    Secondary,
}

#[derive(Debug, Clone)]
struct Word {
    text: String,
    style: Style,
}

/// Greedy word wrap. Returns the lines that fit `max_lines` and whether
/// text was cut.
fn wrap(words: &[Word], width: f64, size: f64, glyphs: &GlyphMetrics, max_lines: usize) -> (Vec<Vec<Word>>, bool) {
    let space = text_width(" ", size, glyphs);
    let mut lines: Vec<Vec<Word>> = Vec::new();
    let mut cur: Vec<Word> = Vec::new();
    let mut cur_w = 0.0;
    let mut cut = false;
    for w in words {
        let ww = text_width(&w.text, size, glyphs);
        let needed = if cur.is_empty() { ww } else { cur_w + space + ww };
        if needed <= width || cur.is_empty() && ww <= width {
            cur_w = needed;
            cur.push(w.clone());
            continue;
        }
        if !cur.is_empty() {
            lines.push(std::mem::take(&mut cur));
        }
        if lines.len() >= max_lines {
            cut = true;
            break;
        }
        let fitted = fit_chars(&w.text, width, size, glyphs);
        if fitted.chars().count() < w.text.chars().count() {
            // a single word wider than the line: cut it
            lines.push(vec![Word { text: fitted, style: w.style }]);
            cut = true;
            break;
        }
        cur_w = ww;
        cur.push(w.clone());
    }
    if !cut && !cur.is_empty() {
        lines.push(cur);
    }
    if lines.len() > max_lines {
        lines.truncate(max_lines);
        cut = true;
    }
    if cut {
        if let Some(last) = lines.last_mut() {
            add_ellipsis(last, width, size, glyphs);
        }
    }
    (lines, cut)
}

fn fit_chars(s: &str, width: f64, size: f64, glyphs: &GlyphMetrics) -> String {
    let mut out = String::new();
    for c in s.chars() {
        out.push(c);
        if text_width(&out, size, glyphs) > width {
            out.pop();
            break;
        }
    }
    out
}

fn line_width(line: &[Word], size: f64, glyphs: &GlyphMetrics) -> f64 {
    let joined: Vec<&str> = line.iter().map(|w| w.text.as_str()).collect();
    text_width(&joined.join(" "), size, glyphs)
}

fn add_ellipsis(line: &mut Vec<Word>, width: f64, size: f64, glyphs: &GlyphMetrics) {
    loop {
        let Some(last) = line.last_mut() else { return };
        let candidate = format!("{}{ELLIPSIS}", last.text);
        last.text = candidate;
        if line_width(line, size, glyphs) <= width {
            return;
        }
        let last = line.last_mut().expect("non-empty");
        last.text.pop();
        if last.text.pop().is_none() || last.text.is_empty() {
            line.pop();
            if line.is_empty() {
                return;
            }
        }
    }
}

fn styled_words(unit: &StoryUnit) -> Vec<Word> {
    let chars: Vec<char> = unit.text.chars().collect();
    let style_at = |span: TextSpan| -> Style {
        if unit.primary_highlight.is_some_and(|p| p.overlaps(&span)) {
            Style::Primary
        } else if unit.secondary_highlights.iter().any(|s| s.overlaps(&span)) {
            Style::Secondary
        } else {
            Style::Regular
        }
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        out.push(Word { text: chars[start..i].iter().collect(), style: style_at(TextSpan::new(start, i)) });
    }
    out
}

fn plain_words(s: &str) -> Vec<Word> {
    s.split_whitespace().map(|w| Word { text: w.to_string(), style: Style::Regular }).collect()
}

#[derive(Clone, Copy)]
struct Font<'a> {
    family: &'a str,
    weight: &'a str,
    fill: Color,
}

struct Ctx<'a> {
    s: &'a Stylization,
    glyphs: &'a GlyphMetrics,
    transforms: HashMap<String, String>,
    warnings: Vec<String>,
}

impl Ctx<'_> {
    fn open_group(&self, out: &mut String, id: &str, extra: &str) {
        let t = self.transforms.get(id).map(|t| format!(" transform=\"{t}\"")).unwrap_or_default();
        let _ = write!(out, "<g id=\"{}\"{extra}{t}>", escape(id));
    }

    fn text_block(&mut self, out: &mut String, words: &[Word], b: Rect, size: f64, font: Font<'_>, owner: &str) {
        if size <= 0.0 || b.w <= 0.0 {
            return;
        }
        let max_lines = ((b.h + PRINT_SLACK) / size).floor() as usize;
        if max_lines == 0 {
            if !words.is_empty() {
                self.warnings.push(format!("`{owner}`: no room for text"));
            }
            return;
        }
        let (lines, cut) = wrap(words, b.w + PRINT_SLACK, size, self.glyphs, max_lines);
        if cut {
            self.warnings.push(format!("`{owner}`: text truncated"));
        }
        if lines.is_empty() {
            return;
        }
        let _ = write!(
            out,
            "<text font-family=\"{}\" font-size=\"{}\" font-weight=\"{}\" fill=\"{}\">",
            escape(font.family),
            num(size),
            font.weight,
            font.fill
        );
        for (li, line) in lines.iter().enumerate() {
            let y = b.y + li as f64 * size + ASCENT * size;
            let lw = line_width(line, size, self.glyphs);
            let _ = write!(
                out,
                "<tspan x=\"{}\" y=\"{}\" textLength=\"{}\" lengthAdjust=\"spacingAndGlyphs\">",
                num(b.x),
                num(y),
                num(lw)
            );
            for (wi, w) in line.iter().enumerate() {
                let text = if wi + 1 < line.len() { format!("{} ", w.text) } else { w.text.clone() };
                match w.style {
                    Style::Regular => out.push_str(&escape(&text)),
                    Style::Primary => {
                        let _ = write!(
                            out,
                            "<tspan class=\"primary\" fill=\"{}\" font-weight=\"bold\">{}</tspan>",
                            self.s.text_colors.primary_highlight,
                            escape(&text)
                        );
                    }
                    Style::Secondary => {
                        let _ = write!(
                            out,
                            "<tspan class=\"secondary\" fill=\"{}\" font-weight=\"bold\">{}</tspan>",
                            self.s.text_colors.secondary_highlight,
                            escape(&text)
                        );
                    }
                }
            }
            out.push_str("</tspan>");
        }
        out.push_str("</text>");
    }
}

fn transform_for(rect: Rect, dx: f64, dy: f64, scale: f64) -> String {
    if (scale - 1.0).abs() < 1e-12 {
        return format!("translate({} {})", num(dx), num(dy));
    }
    let c = rect.center();
    format!(
        "translate({} {}) scale({}) translate({} {})",
        num(c.x + dx),
        num(c.y + dy),
        num(scale),
        num(-c.x),
        num(-c.y)
    )
}

/// Rect of every addressable element, keyed by SVG id.
pub fn element_rects(b: &Blueprint) -> BTreeMap<String, Rect> {
    let mut m = BTreeMap::new();
    m.insert(svg_id("title"), b.title_box);
    if let Some(c) = b.center_box {
        m.insert(svg_id("center"), c);
    }
    if b.spiral_path.is_some() {
        m.insert(svg_id("spiral"), b.canvas.rect());
    }
    for sp in &b.sp_boxes {
        m.insert(svg_id(&sp.piece_id), sp.rect);
        m.insert(svg_id(&format!("{}-subtitle", sp.piece_id)), sp.subtitle_rect);
        for su in &sp.units {
            m.insert(svg_id(&su.unit_id), su.rect);
            m.insert(svg_id(&format!("{}-text", su.unit_id)), su.text_box);
            for (part, r) in [("highlight", su.highlight_box), ("icon", su.icon_box), ("chart", su.chart_box)] {
                if let Some(r) = r {
                    m.insert(svg_id(&format!("{}-{part}", su.unit_id)), r);
                }
            }
        }
    }
    m
}

fn check_ids(frame: &StoryFrame, b: &Blueprint) -> Result<(), RenderError> {
    if frame.pieces.len() != b.sp_boxes.len() {
        let missing = frame
            .pieces
            .iter()
            .find(|p| b.sp(&p.id).is_none())
            .map(|p| p.id.clone())
            .or_else(|| b.sp_boxes.iter().find(|s| frame.piece(&s.piece_id).is_none()).map(|s| s.piece_id.clone()))
            .unwrap_or_default();
        return Err(RenderError::IdMismatch { id: missing });
    }
    for sp in &b.sp_boxes {
        let piece = frame.piece(&sp.piece_id).ok_or_else(|| RenderError::IdMismatch { id: sp.piece_id.clone() })?;
        if piece.units.len() != sp.units.len() {
            return Err(RenderError::IdMismatch { id: sp.piece_id.clone() });
        }
        for (u, su) in piece.units.iter().zip(&sp.units) {
            if u.id != su.unit_id {
                return Err(RenderError::IdMismatch { id: su.unit_id.clone() });
            }
        }
    }
    Ok(())
}

/// Path through the spiral points; row ends joined by half-circle arcs.
pub fn spiral_d(points: &[Point]) -> String {
    let mut d = String::new();
    for (i, p) in points.iter().enumerate() {
        if i == 0 {
            let _ = write!(d, "M{} {}", num(p.x), num(p.y));
        } else if i % 2 == 1 {
            let _ = write!(d, " L{} {}", num(p.x), num(p.y));
        } else {
            let prev = points[i - 1];
            let r = (p.y - prev.y).abs() / 2.0;
            // the path turns on the right after even rows, on the left after odd rows
            let sweep = u8::from((i / 2) % 2 == 1);
            let _ = write!(d, " A{} {} 0 0 {sweep} {} {}", num(r), num(r), num(p.x), num(p.y));
        }
    }
    d
}

fn embed_icon(asset: &IconAsset, r: Rect) -> String {
    let body = asset.svg.trim();
    let body = if body.starts_with("<?xml") { body.split_once("?>").map_or(body, |(_, rest)| rest.trim()) } else { body };
    if body.starts_with("<svg") {
        // remote asset: nest it, forcing our box
        let inner = body.trim_start_matches("<svg");
        format!(
            "<svg x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" preserveAspectRatio=\"xMidYMid meet\"{}",
            num(r.x),
            num(r.y),
            num(r.w),
            num(r.h),
            inner
        )
    } else {
        format!(
            "<svg x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" viewBox=\"0 0 100 100\" preserveAspectRatio=\"xMidYMid meet\">{body}</svg>",
            num(r.x),
            num(r.y),
            num(r.w),
            num(r.h)
        )
    }
}

pub fn render(
    frame: &StoryFrame,
    blueprint: &Blueprint,
    stylization: &Stylization,
    assets: &IconAssets,
    glyphs: &GlyphMetrics,
) -> Result<Rendered, RenderError> {
    check_ids(frame, blueprint)?;
    let rects = element_rects(blueprint);
    let mut transforms = HashMap::new();
    let mut warnings = Vec::new();
    for o in &blueprint.overrides {
        match rects.get(&o.element_id) {
            Some(r) => {
                transforms.insert(o.element_id.clone(), transform_for(*r, o.dx, o.dy, o.scale));
            }
            None => warnings.push(format!("override for unknown element `{}` ignored", o.element_id)),
        }
    }
    let mut cx = Ctx { s: stylization, glyphs, transforms, warnings };
    let h = blueprint.glyph_heights;
    let (w_c, h_c) = (blueprint.canvas.width, blueprint.canvas.height);
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" data-layout=\"{}\" data-x=\"{}\">",
        num(w_c),
        num(h_c),
        num(w_c),
        num(h_c),
        blueprint.layout,
        num(blueprint.x)
    );
    let _ = writeln!(
        out,
        "<rect id=\"{}\" x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
        svg_id("background"),
        num(w_c),
        num(h_c),
        stylization.background
    );

    let title_id = svg_id("title");
    cx.open_group(&mut out, &title_id, "");
    let title_words = plain_words(&frame.title);
    let font = Font { family: &stylization.fonts.title, weight: "bold", fill: stylization.text_colors.regular };
    cx.text_block(&mut out, &title_words, blueprint.title_box, h.title, font, "title");
    out.push_str("</g>\n");

    if let Some(points) = &blueprint.spiral_path {
        let id = svg_id("spiral");
        cx.open_group(&mut out, &id, "");
        let _ = write!(
            out,
            "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\" stroke-linecap=\"round\"/>",
            spiral_d(points),
            stylization.theme(1),
            num(0.5 * blueprint.x)
        );
        out.push_str("</g>\n");
    }

    if let Some(c) = blueprint.center_box {
        let id = svg_id("center");
        cx.open_group(&mut out, &id, "");
        let r = c.w.min(c.h) / 2.0;
        let cc = c.center();
        let _ = write!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\" fill-opacity=\"0.15\"/>",
            num(cc.x),
            num(cc.y),
            num(r),
            stylization.theme(0)
        );
        let inner = center_text_rect(c);
        let font = Font { family: &stylization.fonts.subtitle, weight: "bold", fill: stylization.text_colors.regular };
        cx.text_block(&mut out, &plain_words(&frame.goal), inner, h.subtitle, font, "center");
        out.push_str("</g>\n");
    }

    for (k, sp) in blueprint.sp_boxes.iter().enumerate() {
        let piece = frame.piece(&sp.piece_id).expect("checked");
        let pid = svg_id(&sp.piece_id);
        cx.open_group(&mut out, &pid, " class=\"piece\"");
        let _ = write!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" fill-opacity=\"0.08\"/>",
            num(sp.rect.x),
            num(sp.rect.y),
            num(sp.rect.w),
            num(sp.rect.h),
            stylization.theme(k)
        );
        let sub_id = svg_id(&format!("{}-subtitle", sp.piece_id));
        cx.open_group(&mut out, &sub_id, "");
        let sub_words = plain_words(&piece.subtitle);
        let font = Font { family: &stylization.fonts.subtitle, weight: "bold", fill: stylization.text_colors.regular };
        cx.text_block(&mut out, &sub_words, sp.subtitle_rect, h.subtitle, font, &sp.piece_id);
        out.push_str("</g>");

        for (unit, su) in piece.units.iter().zip(&sp.units) {
            let uid = svg_id(&unit.id);
            cx.open_group(&mut out, &uid, " class=\"unit\"");
            if let (Some(hb), Some(text)) = (su.highlight_box, unit.primary_text()) {
                let hid = svg_id(&format!("{}-highlight", unit.id));
                cx.open_group(&mut out, &hid, " class=\"highlight\"");
                let words = vec![Word { text: text.split_whitespace().collect::<Vec<_>>().join(" "), style: Style::Regular }];
                let font = Font {
                    family: &stylization.fonts.highlight,
                    weight: "bold",
                    fill: stylization.text_colors.primary_highlight,
                };
                cx.text_block(&mut out, &words, hb, h.highlight, font, &unit.id);
                out.push_str("</g>");
            }
            let tid = svg_id(&format!("{}-text", unit.id));
            cx.open_group(&mut out, &tid, " class=\"text\"");
            let font = Font { family: &stylization.fonts.regular, weight: "normal", fill: stylization.text_colors.regular };
            cx.text_block(&mut out, &styled_words(unit), su.text_box, h.regular, font, &unit.id);
            out.push_str("</g>");
            if let (Some(ib), Some(k)) = (su.icon_box, &unit.icon_keyword) {
                let iid = svg_id(&format!("{}-icon", unit.id));
                cx.open_group(&mut out, &iid, " class=\"icon\"");
                let asset = match assets.get(k) {
                    Some(a) => a.clone(),
                    None => {
                        cx.warnings.push(format!("icon `{k}` missing, placeholder used"));
                        placeholder_icon(k, stylization)
                    }
                };
                out.push_str(&embed_icon(&asset, ib));
                out.push_str("</g>");
            }
            if let (Some(cb), Some(spec)) = (su.chart_box, &unit.chart) {
                let cid = svg_id(&format!("{}-chart", unit.id));
                cx.open_group(&mut out, &cid, &format!(" class=\"chart\" data-chart=\"{}\"", spec.kind));
                let frag = render_chart(spec, cb, stylization)
                    .map_err(|source| RenderError::Chart { unit_id: unit.id.clone(), source })?;
                out.push_str(&frag);
                out.push_str("</g>");
            }
            out.push_str("</g>");
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Ok(Rendered { svg: out, warnings: cx.warnings })
}
