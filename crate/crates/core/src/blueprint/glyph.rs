//! Per-character width-to-height ratios used to measure text.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Deserialize;

const BUILTIN_GLYPHS: &str = include_str!("../../data/glyphs.json");
pub const GLYPH_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum GlyphTableError {
    #[error("malformed glyph table: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unknown glyph table schema_version {0}")]
    Version(u32),
    #[error("glyph ratio {ratio} for {glyph:?} outside (0, 2]")]
    Ratio { glyph: Option<char>, ratio: f64 },
}

#[derive(Deserialize)]
struct GlyphClass {
    chars: String,
    ratio: f64,
}

#[derive(Deserialize)]
struct GlyphDoc {
    schema_version: u32,
    version: String,
    default_ratio: f64,
    classes: Vec<GlyphClass>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlyphMetrics {
    version: String,
    default_ratio: f64,
    ratios: BTreeMap<char, f64>,
}

fn check(glyph: Option<char>, ratio: f64) -> Result<(), GlyphTableError> {
    if ratio > 0.0 && ratio <= 2.0 {
        Ok(())
    } else {
        Err(GlyphTableError::Ratio { glyph, ratio })
    }
}

impl GlyphMetrics {
    pub fn from_json(text: &str) -> Result<Self, GlyphTableError> {
        let doc: GlyphDoc = serde_json::from_str(text)?;
        if doc.schema_version != GLYPH_SCHEMA_VERSION {
            return Err(GlyphTableError::Version(doc.schema_version));
        }
        check(None, doc.default_ratio)?;
        let mut ratios = BTreeMap::new();
        for class in doc.classes {
            for c in class.chars.chars() {
                check(Some(c), class.ratio)?;
                ratios.insert(c, class.ratio);
            }
        }
        Ok(GlyphMetrics { version: doc.version, default_ratio: doc.default_ratio, ratios })
    }

    /// Every glyph the same width.
    pub fn uniform(ratio: f64) -> Self {
        assert!(ratio > 0.0 && ratio <= 2.0, "glyph ratio must lie in (0, 2]");
        GlyphMetrics { version: format!("uniform-{ratio}"), default_ratio: ratio, ratios: BTreeMap::new() }
    }

    pub fn builtin() -> &'static GlyphMetrics {
        static TABLE: OnceLock<GlyphMetrics> = OnceLock::new();
        TABLE.get_or_init(|| GlyphMetrics::from_json(BUILTIN_GLYPHS).expect("builtin glyph table is valid"))
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn ratio(&self, c: char) -> f64 {
        self.ratios.get(&c).copied().unwrap_or(self.default_ratio)
    }

    /// Width of `s` at unit glyph height.
    pub fn ratio_sum(&self, s: &str) -> f64 {
        s.chars().map(|c| self.ratio(c)).sum()
    }
}

/// Rendered width of `s` at glyph height `height`.
pub fn text_width(s: &str, height: f64, metrics: &GlyphMetrics) -> f64 {
    height * metrics.ratio_sum(s)
}

/// Outcome of a greedy word wrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Wrap {
    pub lines: usize,
    /// Some word is wider than the line on its own.
    pub overflow: bool,
}

/// Greedy wrap of the whitespace-separated words of `text` at glyph height
/// `size` into lines at most `width` wide. The renderer breaks lines the same way.
pub fn wrap_lines(text: &str, width: f64, size: f64, metrics: &GlyphMetrics) -> Wrap {
    let space = text_width(" ", size, metrics);
    let mut wrap = Wrap { lines: 0, overflow: false };
    let mut cur: Option<f64> = None;
    for word in text.split_whitespace() {
        let ww = text_width(word, size, metrics);
        match cur {
            Some(w) if w + space + ww <= width => cur = Some(w + space + ww),
            _ => {
                wrap.lines += 1;
                wrap.overflow |= ww > width;
                cur = Some(ww);
            }
        }
    }
    wrap
}

/// Rows of height `size` that `text` needs in `width`; at least one.
pub fn rows_needed(text: &str, width: f64, size: f64, metrics: &GlyphMetrics) -> usize {
    wrap_lines(text, width, size, metrics).lines.max(1)
}
