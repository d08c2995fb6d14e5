//! Numeric parsing of unit text and the insight-to-chart rule table.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::model::{ChartSpec, DataInsightKind, SeriesPoint, MAX_PICTOGRAPH_DENOMINATOR};

/// Minimum time points for a Line chart.
pub const MIN_TREND_POINTS: usize = 3;
/// Minimum entities for Pie and Bar.
pub const MIN_ENTITIES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutOfPair {
    pub part: f64,
    pub whole: f64,
    pub part_label: Option<String>,
    pub whole_label: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NumericParse {
    pub percentages: Vec<f64>,
    pub out_of_pairs: Vec<OutOfPair>,
    pub fractions: Vec<(u32, u32)>,
    pub bare_values: Vec<(String, f64)>,
    pub time_points: Vec<(String, f64)>,
}

impl NumericParse {
    pub fn is_empty(&self) -> bool {
        self.percentages.is_empty()
            && self.out_of_pairs.is_empty()
            && self.fractions.is_empty()
            && self.bare_values.is_empty()
            && self.time_points.is_empty()
    }

    /// Distinct labelled quantities, best source first.
    pub fn entities(&self) -> Vec<SeriesPoint> {
        if let Some(p) = self.out_of_pairs.first() {
            return vec![
                SeriesPoint::new(p.part_label.clone().unwrap_or_else(|| "part".into()), p.part),
                SeriesPoint::new(p.whole_label.clone().unwrap_or_else(|| "whole".into()), p.whole),
            ];
        }
        if self.percentages.len() >= MIN_ENTITIES {
            return self.percentages.iter().enumerate().map(|(i, v)| SeriesPoint::new(format!("#{}", i + 1), *v)).collect();
        }
        self.bare_values.iter().map(|(l, v)| SeriesPoint::new(l.clone(), *v)).collect()
    }
}

const NUM: &str = r"(\d+(?:,\d{3})*(?:\.\d+)?)";

struct Grammar {
    percent: Regex,
    out_of: Regex,
    of: Regex,
    in_: Regex,
    year: Regex,
    number: Regex,
    word: Regex,
}

fn grammar() -> &'static Grammar {
    static G: OnceLock<Grammar> = OnceLock::new();
    G.get_or_init(|| Grammar {
        percent: Regex::new(&format!(r"{NUM}\s*(?:%|percent\b)")).unwrap(),
        out_of: Regex::new(&format!(r"{NUM}((?:\s+[A-Za-z]+){{0,4}}?)\s+out\s+of\s+{NUM}")).unwrap(),
        of: Regex::new(&format!(r"\b{NUM}\s+of\s+(?:the\s+)?{NUM}\b")).unwrap(),
        in_: Regex::new(r"\b(\d{1,3})\s+in\s+(\d{1,3})\b").unwrap(),
        year: Regex::new(&format!(r"\bin\s+((?:1[5-9]|20)\d\d)\b[^0-9%]{{0,60}}?{NUM}")).unwrap(),
        number: Regex::new(NUM).unwrap(),
        word: Regex::new(r"^\s*([A-Za-z]+(?:\s+[A-Za-z]+)?)").unwrap(),
    })
}

fn num(s: &str) -> f64 {
    s.replace(',', "").parse().unwrap_or(0.0)
}

fn is_year(s: &str) -> bool {
    s.len() == 4 && !s.contains(['.', ',']) && matches!(s.parse::<u32>(), Ok(1500..=2099))
}

/// Up to two words following `end`, stopping at punctuation.
fn label_after(text: &str, end: usize) -> Option<String> {
    let g = grammar();
    let rest = &text[end..];
    let stop = rest.find([',', '.', ';', ':', '!', '?', '(', ')']).unwrap_or(rest.len());
    let caps = g.word.captures(&rest[..stop])?;
    let words: Vec<&str> = caps[1].split_whitespace().filter(|w| !is_filler(w)).collect();
    (!words.is_empty()).then(|| words.join(" ").to_lowercase())
}

fn is_filler(w: &str) -> bool {
    matches!(w.to_ascii_lowercase().as_str(), "and" | "or" | "but" | "the" | "a" | "an" | "were" | "was" | "is" | "are")
}

fn overlaps(used: &[(usize, usize)], s: usize, e: usize) -> bool {
    used.iter().any(|&(a, b)| s < b && a < e)
}

pub fn parse_numbers(text: &str) -> NumericParse {
    let g = grammar();
    let mut out = NumericParse::default();
    let mut used: Vec<(usize, usize)> = Vec::new();

    for c in g.out_of.captures_iter(text) {
        let m = c.get(0).unwrap();
        let between: Vec<&str> = c[2].split_whitespace().collect();
        let part_label = between.last().map(|w| w.to_lowercase());
        let whole = c.get(3).unwrap();
        out.out_of_pairs.push(OutOfPair {
            part: num(&c[1]),
            whole: num(whole.as_str()),
            part_label,
            whole_label: label_after(text, whole.end()),
        });
        used.push((m.start(), m.end()));
    }
    for c in g.of.captures_iter(text) {
        let m = c.get(0).unwrap();
        if overlaps(&used, m.start(), m.end()) || is_year(&c[2]) {
            continue;
        }
        let whole = c.get(2).unwrap();
        out.out_of_pairs.push(OutOfPair {
            part: num(&c[1]),
            whole: num(whole.as_str()),
            part_label: None,
            whole_label: label_after(text, whole.end()),
        });
        used.push((m.start(), m.end()));
    }
    for c in g.percent.captures_iter(text) {
        let m = c.get(0).unwrap();
        if overlaps(&used, m.start(), m.end()) {
            continue;
        }
        out.percentages.push(num(&c[1]));
        used.push((m.start(), m.end()));
    }
    for c in g.in_.captures_iter(text) {
        let m = c.get(0).unwrap();
        if overlaps(&used, m.start(), m.end()) {
            continue;
        }
        let (n, d) = (c[1].parse::<u32>().unwrap_or(0), c[2].parse::<u32>().unwrap_or(0));
        if n >= 1 && n <= d {
            out.fractions.push((n, d));
            used.push((m.start(), m.end()));
        }
    }
    for c in g.year.captures_iter(text) {
        let m = c.get(0).unwrap();
        let value = c.get(2).unwrap();
        if overlaps(&used, m.start(), m.end()) || is_year(value.as_str()) {
            continue;
        }
        out.time_points.push((c[1].to_string(), num(value.as_str())));
        used.push((m.start(), m.end()));
    }
    for m in g.number.find_iter(text) {
        if overlaps(&used, m.start(), m.end()) || is_year(m.as_str()) {
            continue;
        }
        let label = label_after(text, m.end()).unwrap_or_else(|| format!("value {}", out.bare_values.len() + 1));
        out.bare_values.push((label, num(m.as_str())));
    }
    out.percentages.retain(|v| v.is_finite());
    out.out_of_pairs.retain(|p| p.part.is_finite() && p.whole.is_finite());
    out.bare_values.retain(|(_, v)| v.is_finite());
    out.time_points.retain(|(_, v)| v.is_finite());
    out
}

/// Chart for an insight given the numbers found in its text, if any rule applies.
pub fn map_insight_to_chart(insight: DataInsightKind, parse: &NumericParse) -> Option<ChartSpec> {
    use DataInsightKind::*;
    let spec = match insight {
        Trend => (parse.time_points.len() >= MIN_TREND_POINTS).then(|| {
            ChartSpec::line(parse.time_points.iter().map(|(t, v)| SeriesPoint::new(t.clone(), *v)).collect())
        }),
        Proportion => {
            if let Some(&(n, d)) = parse.fractions.iter().find(|(n, d)| *n >= 1 && n <= d && *d <= MAX_PICTOGRAPH_DENOMINATOR) {
                Some(ChartSpec::pictograph(n, d))
            } else if let [p] = parse.percentages[..] {
                Some(ChartSpec::single_pie(p))
            } else {
                let e = parse.entities();
                (e.len() >= MIN_ENTITIES).then(|| ChartSpec::pie(e))
            }
        }
        Difference | Value | Rank => {
            let e = parse.entities();
            (e.len() >= MIN_ENTITIES).then(|| ChartSpec::bar(e))
        }
        _ => None,
    };
    spec.filter(ChartSpec::is_valid)
}

/// Directional icon suggested for a trend with no chartable numbers.
pub fn trend_icon_hint(text: &str) -> Option<&'static str> {
    const UP: [&str; 8] = ["rise", "rose", "increase", "grew", "grow", "up", "higher", "climb"];
    const DOWN: [&str; 8] = ["fall", "fell", "decrease", "drop", "decline", "down", "lower", "shrank"];
    let lower = text.to_lowercase();
    let words: Vec<&str> = lower.split(|c: char| !c.is_alphabetic()).filter(|w| !w.is_empty()).collect();
    let hit = |set: &[&str]| words.iter().position(|w| set.iter().any(|s| w.starts_with(s)));
    match (hit(&UP), hit(&DOWN)) {
        (Some(u), Some(d)) => Some(if u <= d { "upward arrow" } else { "downward arrow" }),
        (Some(_), None) => Some("upward arrow"),
        (None, Some(_)) => Some("downward arrow"),
        (None, None) => None,
    }
}
