//! Storyframe domain types, validation and feature metrics.
//!
//! A [`StoryFrame`] is the full narrative structure handed from extraction
//! to layout: a goal, up to ten story pieces with up to four story units
//! each, directed relations between pieces, and a stylization.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Maximum number of story pieces in a frame.
pub const MAX_PIECES: usize = 10;
/// Maximum number of story units in a piece.
pub const MAX_UNITS_PER_PIECE: usize = 4;
/// Largest denominator a pictograph may show.
pub const MAX_PICTOGRAPH_DENOMINATOR: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {what} `{value}`")]
pub struct ParseNameError {
    pub what: &'static str,
    pub value: String,
}

fn normalize(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

macro_rules! named_enum {
    (
        $(#[$meta:meta])*
        $name:ident, $what:literal {
            $($variant:ident => $text:literal $(| $alias:literal)*),+ $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            /// All variants in canonical order.
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = ParseNameError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let key = normalize(s);
                $(
                    if key == normalize($text) $(|| key == normalize($alias))* {
                        return Ok($name::$variant);
                    }
                )+
                Err(ParseNameError { what: $what, value: s.to_string() })
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

named_enum! {
    /// Narrative logic linking two story pieces, or a piece to the goal.
    NarrativeRelationKind, "narrative relation" {
        Similarity => "Similarity" | "Silimarity",
        CauseEffect => "CauseEffect",
        Contrast => "Contrast",
        ViolatedExpectation => "ViolatedExpectation",
        Temporal => "Temporal",
        Attribution => "Attribution",
        Example => "Example",
        Generalization => "Generalization",
        Elaboration => "Elaboration",
    }
}

named_enum! {
    /// Analytic type of the insight carried by a story unit.
    DataInsightKind, "data insight" {
        Value => "Value",
        Difference => "Difference",
        Proportion => "Proportion",
        Trend => "Trend",
        Categorization => "Categorization",
        Distribution => "Distribution",
        Rank => "Rank",
        Extreme => "Extreme",
        TextualStatement => "TextualStatement",
    }
}

named_enum! {
    /// Layout family. Declaration order is the canonical tie-break order.
    LayoutKind, "layout" {
        Grid => "Grid",
        Spiral => "Spiral",
        Landscape => "Landscape",
        Star => "Star",
        Portrait => "Portrait",
        PortraitGrid => "PortraitGrid",
    }
}

named_enum! {
    ChartKind, "chart kind" {
        Pie => "Pie",
        Bar => "Bar",
        Line => "Line",
        SinglePie => "SinglePie",
        Pictograph => "Pictograph",
    }
}

/// Half-open character range `[start, end)` into a unit's text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TextSpan {
    pub start: usize,
    pub end: usize,
}

impl TextSpan {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &TextSpan) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index < self.end
    }

    /// Characters of `text` covered by this span, or `None` when out of range.
    pub fn slice(&self, text: &str) -> Option<String> {
        if self.start >= self.end || self.end > text.chars().count() {
            return None;
        }
        Some(text.chars().skip(self.start).take(self.len()).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub label: String,
    pub value: f64,
}

impl SeriesPoint {
    pub fn new(label: impl Into<String>, value: f64) -> Self {
        Self { label: label.into(), value }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub numerator: u32,
    pub denominator: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub kind: ChartKind,
    #[serde(default)]
    pub series: Vec<SeriesPoint>,
    #[serde(default)]
    pub fraction: Option<Fraction>,
    #[serde(default)]
    pub single_value: Option<f64>,
}

impl ChartSpec {
    pub fn pie(series: Vec<SeriesPoint>) -> Self {
        Self { kind: ChartKind::Pie, series, fraction: None, single_value: None }
    }

    pub fn bar(series: Vec<SeriesPoint>) -> Self {
        Self { kind: ChartKind::Bar, series, fraction: None, single_value: None }
    }

    pub fn line(series: Vec<SeriesPoint>) -> Self {
        Self { kind: ChartKind::Line, series, fraction: None, single_value: None }
    }

    pub fn single_pie(percent: f64) -> Self {
        Self { kind: ChartKind::SinglePie, series: Vec::new(), fraction: None, single_value: Some(percent) }
    }

    pub fn pictograph(numerator: u32, denominator: u32) -> Self {
        Self {
            kind: ChartKind::Pictograph,
            series: Vec::new(),
            fraction: Some(Fraction { numerator, denominator }),
            single_value: None,
        }
    }

    /// Rules this spec breaks; empty when the spec is well formed.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.series.iter().any(|p| !p.value.is_finite()) {
            out.push("non-finite series value".to_string());
        }
        if self.kind != ChartKind::Pictograph && self.fraction.is_some() {
            out.push("fraction only allowed on Pictograph".to_string());
        }
        if self.kind != ChartKind::SinglePie && self.single_value.is_some() {
            out.push("single_value only allowed on SinglePie".to_string());
        }
        match self.kind {
            ChartKind::Pie | ChartKind::Bar => {
                if self.series.len() < 2 {
                    out.push(format!("{} needs at least 2 series points", self.kind));
                }
                if self.kind == ChartKind::Pie && self.series.iter().any(|p| p.value < 0.0) {
                    out.push("negative pie value".to_string());
                }
                if self.kind == ChartKind::Pie
                    && !self.series.is_empty()
                    && self.series.iter().all(|p| p.value == 0.0)
                {
                    out.push("pie values sum to zero".to_string());
                }
            }
            ChartKind::Line => {
                if self.series.len() < 3 {
                    out.push("Line needs at least 3 series points".to_string());
                }
            }
            ChartKind::SinglePie => {
                match self.single_value {
                    Some(v) if v.is_finite() && (0.0..=100.0).contains(&v) => {}
                    Some(_) => out.push("single_value outside [0, 100]".to_string()),
                    None => out.push("SinglePie requires single_value".to_string()),
                }
                if !self.series.is_empty() {
                    out.push("SinglePie series must be empty".to_string());
                }
            }
            ChartKind::Pictograph => {
                match self.fraction {
                    Some(Fraction { numerator, denominator })
                        if numerator >= 1
                            && numerator <= denominator
                            && denominator <= MAX_PICTOGRAPH_DENOMINATOR => {}
                    Some(_) => out.push("pictograph fraction must satisfy 1 <= numerator <= denominator <= 20".to_string()),
                    None => out.push("Pictograph requires fraction".to_string()),
                }
                if !self.series.is_empty() {
                    out.push("Pictograph series must be empty".to_string());
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryUnit {
    pub id: String,
    pub text: String,
    pub insight: DataInsightKind,
    #[serde(default)]
    pub primary_highlight: Option<TextSpan>,
    #[serde(default)]
    pub secondary_highlights: Vec<TextSpan>,
    #[serde(default)]
    pub icon_keyword: Option<String>,
    #[serde(default)]
    pub chart: Option<ChartSpec>,
}

impl StoryUnit {
    /// A bare unit with no visual designs yet.
    pub fn new(id: impl Into<String>, text: impl Into<String>, insight: DataInsightKind) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            insight,
            primary_highlight: None,
            secondary_highlights: Vec::new(),
            icon_keyword: None,
            chart: None,
        }
    }

    pub fn primary_text(&self) -> Option<String> {
        self.primary_highlight.and_then(|s| s.slice(&self.text))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryPiece {
    pub id: String,
    pub subtitle: String,
    pub content: String,
    pub relation_to_goal: NarrativeRelationKind,
    #[serde(default)]
    pub units: Vec<StoryUnit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PieceRelation {
    pub from_id: String,
    pub to_id: String,
    pub kind: NarrativeRelationKind,
}

impl PieceRelation {
    pub fn new(from: impl Into<String>, to: impl Into<String>, kind: NarrativeRelationKind) -> Self {
        Self { from_id: from.into(), to_id: to.into(), kind }
    }
}

/// 24-bit RGB color, written as `#RRGGBB`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Color(pub [u8; 3]);

impl Color {
    pub const fn rgb(r: u8, g: u8, b: u8) -> Self {
        Color([r, g, b])
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [r, g, b] = self.0;
        write!(f, "#{r:02X}{g:02X}{b:02X}")
    }
}

impl FromStr for Color {
    type Err = ParseNameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseNameError { what: "color", value: s.to_string() };
        let hex = s.strip_prefix('#').ok_or_else(err)?;
        if hex.len() != 6 || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(err());
        }
        let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| err());
        Ok(Color([byte(0)?, byte(2)?, byte(4)?]))
    }
}

impl Serialize for Color {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Color {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fonts {
    pub title: String,
    pub subtitle: String,
    pub highlight: String,
    pub regular: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextColors {
    pub primary_highlight: Color,
    pub secondary_highlight: Color,
    pub regular: Color,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stylization {
    pub theme_colors: Vec<Color>,
    pub background: Color,
    pub fonts: Fonts,
    pub text_colors: TextColors,
}

impl Stylization {
    /// Theme color `i`, cycling when the palette is shorter.
    pub fn theme(&self, i: usize) -> Color {
        if self.theme_colors.is_empty() {
            return Color::rgb(0x44, 0x44, 0x44);
        }
        self.theme_colors[i % self.theme_colors.len()]
    }
}

impl Default for Stylization {
    fn default() -> Self {
        Stylization {
            theme_colors: vec![
                Color::rgb(0x3B, 0x4C, 0x8C),
                Color::rgb(0x6A, 0x4C, 0x93),
                Color::rgb(0x8E, 0x9A, 0xC8),
                Color::rgb(0xC9, 0xA2, 0x27),
            ],
            background: Color::rgb(0xF7, 0xF7, 0xFB),
            fonts: Fonts {
                title: "Georgia".into(),
                subtitle: "Helvetica".into(),
                highlight: "Helvetica".into(),
                regular: "Helvetica".into(),
            },
            text_colors: TextColors {
                primary_highlight: Color::rgb(0xC0, 0x1C, 0x28),
                secondary_highlight: Color::rgb(0x11, 0x11, 0x11),
                regular: Color::rgb(0x33, 0x33, 0x33),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryFrame {
    pub goal: String,
    pub title: String,
    pub pieces: Vec<StoryPiece>,
    #[serde(default)]
    pub relations: Vec<PieceRelation>,
    pub stylization: Stylization,
}

impl StoryFrame {
    pub fn piece(&self, id: &str) -> Option<&StoryPiece> {
        self.pieces.iter().find(|p| p.id == id)
    }

    pub fn units(&self) -> impl Iterator<Item = &StoryUnit> {
        self.pieces.iter().flat_map(|p| p.units.iter())
    }
}

/// One broken invariant: which field, which rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self { field: field.into(), rule: rule.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// A frame that failed validation, carrying the full report.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid storyframe: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct InvalidFrame(pub Vec<Violation>);

/// Checks every frame invariant. An empty report means the frame is valid.
pub fn validate_frame(frame: &StoryFrame) -> Vec<Violation> {
    let mut out = validate_structure(&frame.pieces, &frame.relations, true);
    let n = frame.stylization.theme_colors.len();
    if !(3..=5).contains(&n) {
        out.push(Violation::new("stylization.theme_colors", format!("theme colors must number 3 to 5 (got {n})")));
    }
    out
}

/// Piece-level checks shared by full frames and raw extraction output.
/// `require_units` is false for extraction results that have no units yet.
pub fn validate_structure(pieces: &[StoryPiece], relations: &[PieceRelation], require_units: bool) -> Vec<Violation> {
    let mut out = Vec::new();
    if pieces.is_empty() {
        out.push(Violation::new("pieces", "pieces < 1"));
    }
    if pieces.len() > MAX_PIECES {
        out.push(Violation::new("pieces", format!("pieces > {MAX_PIECES}")));
    }

    let mut ids: HashSet<&str> = HashSet::new();
    for (pi, piece) in pieces.iter().enumerate() {
        let field = format!("pieces[{pi}]");
        if piece.id.is_empty() {
            out.push(Violation::new(format!("{field}.id"), "empty id"));
        } else if !ids.insert(piece.id.as_str()) {
            out.push(Violation::new(format!("{field}.id"), format!("duplicate id `{}`", piece.id)));
        }
        if require_units && piece.units.is_empty() {
            out.push(Violation::new(format!("{field}.units"), "units < 1"));
        }
        if piece.units.len() > MAX_UNITS_PER_PIECE {
            out.push(Violation::new(format!("{field}.units"), format!("units > {MAX_UNITS_PER_PIECE}")));
        }
        for (ui, unit) in piece.units.iter().enumerate() {
            let field = format!("{field}.units[{ui}]");
            if unit.id.is_empty() {
                out.push(Violation::new(format!("{field}.id"), "empty id"));
            } else if !ids.insert(unit.id.as_str()) {
                out.push(Violation::new(format!("{field}.id"), format!("duplicate id `{}`", unit.id)));
            }
            validate_unit(unit, &field, &mut out);
        }
    }

    let piece_ids: HashSet<&str> = pieces.iter().map(|p| p.id.as_str()).collect();
    let mut seen = HashSet::new();
    for (ri, rel) in relations.iter().enumerate() {
        let field = format!("relations[{ri}]");
        if rel.from_id == rel.to_id {
            out.push(Violation::new(&field, "relation links a piece to itself"));
        }
        for end in [&rel.from_id, &rel.to_id] {
            if !piece_ids.contains(end.as_str()) {
                out.push(Violation::new(&field, format!("unknown piece id `{end}`")));
            }
        }
        if !seen.insert((rel.from_id.as_str(), rel.to_id.as_str(), rel.kind)) {
            out.push(Violation::new(&field, "duplicate relation"));
        }
    }
    out
}

fn validate_unit(unit: &StoryUnit, field: &str, out: &mut Vec<Violation>) {
    let len = unit.text.chars().count();
    if len == 0 {
        out.push(Violation::new(format!("{field}.text"), "empty text"));
    }
    let mut spans: Vec<(String, TextSpan)> = Vec::new();
    if let Some(p) = unit.primary_highlight {
        spans.push((format!("{field}.primary_highlight"), p));
    }
    for (i, s) in unit.secondary_highlights.iter().enumerate() {
        spans.push((format!("{field}.secondary_highlights[{i}]"), *s));
    }
    for (name, span) in &spans {
        if span.start >= span.end || span.end > len {
            out.push(Violation::new(name, "span out of range"));
        }
    }
    for i in 0..spans.len() {
        for j in i + 1..spans.len() {
            if spans[i].1.overlaps(&spans[j].1) {
                out.push(Violation::new(&spans[j].0, "overlapping highlight spans"));
            }
        }
    }
    if let Some(k) = &unit.icon_keyword {
        if k.trim().is_empty() || k.contains('\n') {
            out.push(Violation::new(format!("{field}.icon_keyword"), "icon keyword must be a single non-empty phrase"));
        }
    }
    if let Some(chart) = &unit.chart {
        for v in chart.violations() {
            out.push(Violation::new(format!("{field}.chart"), v));
        }
    }
}

/// Scoring features of a frame.
///
/// `rho_su` is pieces per unit (`n_sp / n_su`), so it falls as pieces get
/// denser. `relation_counts` counts the kinds of piece-to-piece relations,
/// `goal_relation_counts` the pieces' relations to the goal, and `in_degree`
/// holds one entry per piece in frame order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryMetrics {
    pub n_sp: usize,
    pub n_su: usize,
    pub rho_su: f64,
    pub rho_rel: f64,
    pub relation_counts: BTreeMap<NarrativeRelationKind, usize>,
    pub goal_relation_counts: BTreeMap<NarrativeRelationKind, usize>,
    #[serde(rename = "ref")]
    pub in_degree: Vec<usize>,
}

impl StoryMetrics {
    /// Number of relation kinds with a non-zero count.
    pub fn diversity(&self) -> usize {
        self.relation_counts.values().filter(|&&c| c > 0).count()
    }

    pub fn max_ref(&self) -> usize {
        self.in_degree.iter().copied().max().unwrap_or(0)
    }

    pub fn relation_count(&self, kind: NarrativeRelationKind) -> usize {
        self.relation_counts.get(&kind).copied().unwrap_or(0)
    }

    pub fn goal_relation_count(&self, kind: NarrativeRelationKind) -> usize {
        self.goal_relation_counts.get(&kind).copied().unwrap_or(0)
    }
}

fn zero_counts() -> BTreeMap<NarrativeRelationKind, usize> {
    NarrativeRelationKind::ALL.iter().map(|&k| (k, 0)).collect()
}

pub fn compute_metrics(frame: &StoryFrame) -> Result<StoryMetrics, InvalidFrame> {
    let report = validate_frame(frame);
    if !report.is_empty() {
        return Err(InvalidFrame(report));
    }
    let n_sp = frame.pieces.len();
    let n_su: usize = frame.pieces.iter().map(|p| p.units.len()).sum();

    let index: BTreeMap<&str, usize> = frame.pieces.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
    let mut in_degree = vec![0usize; n_sp];
    let mut related = vec![false; n_sp];
    let mut relation_counts = zero_counts();
    for rel in &frame.relations {
        let from = index[rel.from_id.as_str()];
        let to = index[rel.to_id.as_str()];
        in_degree[to] += 1;
        related[from] = true;
        related[to] = true;
        *relation_counts.entry(rel.kind).or_default() += 1;
    }
    let mut goal_relation_counts = zero_counts();
    for p in &frame.pieces {
        *goal_relation_counts.entry(p.relation_to_goal).or_default() += 1;
    }

    Ok(StoryMetrics {
        n_sp,
        n_su,
        rho_su: n_sp as f64 / n_su as f64,
        rho_rel: related.iter().filter(|&&r| r).count() as f64 / n_sp as f64,
        relation_counts,
        goal_relation_counts,
        in_degree,
    })
}
