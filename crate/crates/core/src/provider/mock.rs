//! Deterministic offline provider. Its heuristics exist so the pipeline runs
//! reproducibly without a model; they make no claim to extraction quality.

use std::collections::HashSet;

use crate::model::{
    Color, DataInsightKind, Fonts, NarrativeRelationKind, PieceRelation, StoryPiece, StoryUnit, Stylization,
    TextColors, TextSpan, MAX_PIECES, MAX_UNITS_PER_PIECE,
};

use super::text::{fnv1a, keywords, numerals, paragraphs, sentences, stem, words};
use super::{check_extraction, placeholder_icon, ExtractionResult, Highlights, IconAsset, Provider, ProviderError};

const MAX_SECONDARY: usize = 2;
const HEADING_MAX_WORDS: usize = 12;
const SUBTITLE_WORDS: usize = 6;
const HUE_STEP: u64 = 137;
const HUE_OFFSETS: [f64; 4] = [0.0, 40.0, 180.0, 220.0];

#[derive(Debug, Clone, Copy, Default)]
pub struct MockProvider {
    pub seed: u64,
}

impl MockProvider {
    pub fn new(seed: u64) -> Self {
        MockProvider { seed }
    }
}

fn contains_cue(lower: &str, cues: &[&str]) -> bool {
    cues.iter().any(|c| {
        lower.match_indices(c).any(|(i, _)| {
            let before = lower[..i].chars().next_back().is_none_or(|ch| !ch.is_alphanumeric());
            let after = lower[i + c.len()..].chars().next().is_none_or(|ch| !ch.is_alphanumeric());
            before && after
        })
    })
}

const GOAL_CUES: [(NarrativeRelationKind, &[&str]); 8] = [
    (NarrativeRelationKind::CauseEffect, &["because", "due to", "caused", "led to", "as a result"]),
    (NarrativeRelationKind::ViolatedExpectation, &["surprisingly", "despite", "unexpectedly", "contrary to"]),
    (NarrativeRelationKind::Contrast, &["however", "in contrast", "whereas", "unlike"]),
    (NarrativeRelationKind::Generalization, &["overall", "in general", "generally", "in total"]),
    (NarrativeRelationKind::Attribution, &["according to", "reported", "said"]),
    (NarrativeRelationKind::Similarity, &["similarly", "likewise"]),
    (NarrativeRelationKind::Elaboration, &["moreover", "furthermore", "in addition"]),
    (NarrativeRelationKind::Temporal, &["afterwards", "later", "then"]),
];

const LINK_CUES: [(NarrativeRelationKind, &[&str]); 6] = [
    (NarrativeRelationKind::Contrast, &["however", "but", "in contrast", "on the other hand"]),
    (NarrativeRelationKind::CauseEffect, &["as a result", "therefore", "consequently", "thus"]),
    (NarrativeRelationKind::Temporal, &["then", "later", "afterwards", "meanwhile"]),
    (NarrativeRelationKind::Similarity, &["similarly", "likewise"]),
    (NarrativeRelationKind::ViolatedExpectation, &["surprisingly", "despite"]),
    (NarrativeRelationKind::Elaboration, &["moreover", "furthermore", "in addition"]),
];

fn goal_relation(content: &str) -> NarrativeRelationKind {
    let lower = content.to_lowercase();
    GOAL_CUES.iter().find(|(_, cues)| contains_cue(&lower, cues)).map_or(NarrativeRelationKind::Example, |(k, _)| *k)
}

fn stems(text: &str) -> HashSet<String> {
    keywords(text).iter().map(|w| stem(w).to_string()).collect()
}

fn link_relation(prev: &StoryPiece, next: &StoryPiece) -> Option<NarrativeRelationKind> {
    let opening: String = sentences(&next.content).first().cloned().unwrap_or_default().to_lowercase();
    let head: String = opening.split_whitespace().take(4).collect::<Vec<_>>().join(" ");
    if let Some((k, _)) = LINK_CUES.iter().find(|(_, cues)| contains_cue(&head, cues)) {
        return Some(*k);
    }
    let shared = stems(&format!("{} {}", prev.subtitle, prev.content))
        .intersection(&stems(&format!("{} {}", next.subtitle, next.content)))
        .count();
    (shared >= 3).then_some(NarrativeRelationKind::Elaboration)
}

fn is_heading(line: &str) -> bool {
    let n = line.split_whitespace().count();
    n > 0 && n <= HEADING_MAX_WORDS && !line.ends_with(['.', '!', '?', ':', ';', ','])
}

fn short_subtitle(content: &str) -> String {
    let first = sentences(content).into_iter().next().unwrap_or_default();
    let ws: Vec<&str> = first.split_whitespace().take(SUBTITLE_WORDS).collect();
    ws.join(" ").trim_end_matches(['.', '!', '?', ',', ';', ':']).to_string()
}

fn classify(sentence: &str) -> DataInsightKind {
    let lower = sentence.to_lowercase();
    let parse = crate::chart::parse_numbers(sentence);
    if !parse.out_of_pairs.is_empty() && contains_cue(&lower, &["out of"]) {
        DataInsightKind::Difference
    } else if !parse.percentages.is_empty() || !parse.fractions.is_empty() {
        DataInsightKind::Proportion
    } else if !numerals(sentence).is_empty() {
        DataInsightKind::Value
    } else {
        DataInsightKind::TextualStatement
    }
}

const SUPERLATIVES: [&str; 10] =
    ["highest", "lowest", "largest", "smallest", "best", "worst", "greatest", "fewest", "biggest", "most"];

/// Span of a numeral and up to two following words, stopping at punctuation.
fn noun_run(text: &str, start: usize, end: usize) -> TextSpan {
    let chars: Vec<char> = text.chars().collect();
    let mut stop = end;
    let mut taken = 0;
    for w in words(text).into_iter().filter(|w| w.start >= end) {
        let gap: String = chars[stop..w.start].iter().collect();
        if taken == 2 || !gap.chars().all(char::is_whitespace) {
            break;
        }
        stop = w.end;
        taken += 1;
    }
    TextSpan::new(start, stop)
}

fn hsl(h: f64, s: f64, l: f64) -> Color {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let q = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    Color::rgb(q(r), q(g), q(b))
}

impl Provider for MockProvider {
    fn segment_story(&self, text: &str, goal: &str) -> Result<ExtractionResult, ProviderError> {
        if text.trim().is_empty() || goal.trim().is_empty() {
            return Err(ProviderError::Input("text and goal must be non-empty".into()));
        }
        let goal_stems = stems(goal);
        let mut candidates: Vec<(StoryPiece, usize)> = Vec::new();
        for lines in paragraphs(text) {
            let (subtitle, body) = if lines.len() > 1 && is_heading(&lines[0]) {
                (lines[0].clone(), lines[1..].join(" "))
            } else {
                let body = lines.join(" ");
                (short_subtitle(&body), body)
            };
            let overlap = stems(&format!("{subtitle} {body}")).intersection(&goal_stems).count();
            let piece = StoryPiece {
                id: String::new(),
                subtitle,
                relation_to_goal: goal_relation(&body),
                content: body,
                units: Vec::new(),
            };
            candidates.push((piece, overlap));
        }
        while candidates.len() > MAX_PIECES {
            // drop the lowest overlap; among ties, the latest
            let (idx, _) = candidates.iter().enumerate().min_by_key(|(i, (_, o))| (*o, std::cmp::Reverse(*i))).expect("non-empty");
            candidates.remove(idx);
        }
        let mut pieces: Vec<StoryPiece> = candidates.into_iter().map(|(p, _)| p).collect();
        for (i, p) in pieces.iter_mut().enumerate() {
            p.id = format!("sp{}", i + 1);
        }
        let relations = pieces
            .windows(2)
            .filter_map(|w| link_relation(&w[0], &w[1]).map(|k| PieceRelation::new(w[0].id.clone(), w[1].id.clone(), k)))
            .collect();
        let result = ExtractionResult { pieces, relations };
        check_extraction(&result)?;
        Ok(result)
    }

    fn extract_units(&self, piece: &StoryPiece) -> Result<Vec<StoryUnit>, ProviderError> {
        let sents = sentences(&piece.content);
        if sents.is_empty() {
            return Err(ProviderError::Input(format!("piece `{}` has no content", piece.id)));
        }
        let kinds: Vec<DataInsightKind> = sents.iter().map(|s| classify(s)).collect();
        // numeric sentences first, then fill with plain ones, keeping text order
        let mut chosen: Vec<usize> = (0..sents.len()).filter(|&i| kinds[i] != DataInsightKind::TextualStatement).collect();
        chosen.truncate(MAX_UNITS_PER_PIECE);
        for i in 0..sents.len() {
            if chosen.len() >= MAX_UNITS_PER_PIECE {
                break;
            }
            if !chosen.contains(&i) {
                chosen.push(i);
            }
        }
        chosen.sort_unstable();
        Ok(chosen
            .into_iter()
            .enumerate()
            .map(|(k, i)| StoryUnit::new(format!("{}u{}", piece.id, k + 1), sents[i].clone(), kinds[i]))
            .collect())
    }

    fn suggest_highlights(&self, unit: &StoryUnit) -> Result<Highlights, ProviderError> {
        let nums = numerals(&unit.text);
        if let Some((first, rest)) = nums.split_first() {
            let primary = TextSpan::new(first.start, first.end);
            let secondary = rest.iter().take(MAX_SECONDARY).map(|n| noun_run(&unit.text, n.start, n.end)).collect();
            return Ok(Highlights { primary: Some(primary), secondary });
        }
        let sup = words(&unit.text).into_iter().find(|w| SUPERLATIVES.contains(&w.text.to_lowercase().as_str()));
        Ok(Highlights { primary: sup.map(|w| noun_run(&unit.text, w.start, w.end)), secondary: Vec::new() })
    }

    fn suggest_icon_keyword(&self, unit: &StoryUnit) -> Result<Option<String>, ProviderError> {
        let ks = keywords(&unit.text);
        let mut best: Option<(&str, usize)> = None;
        for k in &ks {
            let n = ks.iter().filter(|o| *o == k).count();
            if best.is_none_or(|(_, m)| n > m) {
                best = Some((k, n));
            }
        }
        Ok(best.map(|(k, _)| k.to_string()))
    }

    fn suggest_stylization(&self, summary: &str, seed: u64) -> Result<Stylization, ProviderError> {
        if summary.trim().is_empty() {
            return Err(ProviderError::Input("empty stylization summary".into()));
        }
        let base = (fnv1a(summary.as_bytes()) % 360 + seed.wrapping_mul(HUE_STEP) % 360) % 360;
        let hue = base as f64;
        Ok(Stylization {
            theme_colors: HUE_OFFSETS.iter().map(|o| hsl(hue + o, 0.55, 0.42)).collect(),
            background: hsl(hue, 0.35, 0.97),
            fonts: Fonts {
                title: "Georgia".into(),
                subtitle: "Helvetica".into(),
                highlight: "Helvetica".into(),
                regular: "Helvetica".into(),
            },
            text_colors: TextColors {
                primary_highlight: Color::rgb(0xC0, 0x1C, 0x28),
                secondary_highlight: hsl(hue, 0.6, 0.25),
                regular: Color::rgb(0x33, 0x33, 0x33),
            },
        })
    }

    fn fetch_icon(&self, keyword: &str, stylization: &Stylization) -> (IconAsset, Option<String>) {
        (placeholder_icon(keyword, stylization), None)
    }
}
