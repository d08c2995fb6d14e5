//! Random valid frames for property and oracle tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use storyframe::model::{
    ChartSpec, DataInsightKind, NarrativeRelationKind, PieceRelation, SeriesPoint, StoryFrame, StoryPiece, StoryUnit,
    Stylization, TextSpan,
};

const WORDS: &[&str] = &[
    "women", "survived", "board", "class", "passengers", "crew", "lifeboats", "ship", "night", "ice", "north",
    "rescue", "children", "men", "third", "first", "deck", "hours", "cold", "water", "the", "of", "and", "on",
    "most", "fewer", "rate", "percent", "more",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sentence(rng: &mut impl Rng, max_words: usize) -> String {
    let n = rng.gen_range(1..=max_words);
    let mut words: Vec<String> = Vec::with_capacity(n);
    for _ in 0..n {
        if rng.gen_bool(0.15) {
            words.push(rng.gen_range(1..1000).to_string());
        } else {
            words.push((*WORDS.choose(rng).unwrap()).to_string());
        }
    }
    words.join(" ")
}

/// Word-aligned spans: maybe a primary, up to two secondaries, disjoint.
fn spans(rng: &mut impl Rng, text: &str) -> (Option<TextSpan>, Vec<TextSpan>) {
    let mut bounds = Vec::new();
    let mut start = None;
    for (i, c) in text.chars().enumerate() {
        match (c == ' ', start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                bounds.push(TextSpan::new(s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        bounds.push(TextSpan::new(s, text.chars().count()));
    }
    bounds.shuffle(rng);
    let primary = if rng.gen_bool(0.6) { bounds.pop() } else { None };
    let k = rng.gen_range(0..=2).min(bounds.len());
    (primary, bounds.into_iter().take(k).collect())
}

fn series(rng: &mut impl Rng, lo: usize, hi: usize) -> Vec<SeriesPoint> {
    let n = rng.gen_range(lo..hi);
    (0..n).map(|i| SeriesPoint::new(format!("e{i}"), f64::from(rng.gen_range(1u32..500)))).collect()
}

pub fn chart(rng: &mut impl Rng) -> ChartSpec {
    match rng.gen_range(0..5) {
        0 => ChartSpec::pie(series(rng, 2, 6)),
        1 => ChartSpec::bar(series(rng, 2, 6)),
        2 => ChartSpec::line(series(rng, 3, 8)),
        3 => ChartSpec::single_pie(f64::from(rng.gen_range(0u32..=1000)) / 10.0),
        _ => {
            let d = rng.gen_range(1..=20);
            ChartSpec::pictograph(rng.gen_range(1..=d), d)
        }
    }
}

pub fn unit(rng: &mut impl Rng, id: String, max_words: usize) -> StoryUnit {
    let text = sentence(rng, max_words);
    let insight = *DataInsightKind::ALL.choose(rng).unwrap();
    let mut u = StoryUnit::new(id, text, insight);
    let (p, s) = spans(rng, &u.text);
    u.primary_highlight = p;
    u.secondary_highlights = s;
    if rng.gen_bool(0.5) {
        u.icon_keyword = Some((*WORDS.choose(rng).unwrap()).to_string());
    }
    if rng.gen_bool(0.4) {
        u.chart = Some(chart(rng));
    }
    u
}

/// Shape limits for generated frames.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_pieces: usize,
    pub max_units: usize,
    pub max_words: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { max_pieces: 10, max_units: 4, max_words: 18 }
    }
}

pub fn frame_with(rng: &mut impl Rng, shape: Shape) -> StoryFrame {
    let n = rng.gen_range(1..=shape.max_pieces);
    let pieces: Vec<StoryPiece> = (1..=n)
        .map(|i| {
            let k = rng.gen_range(1..=shape.max_units);
            let units: Vec<StoryUnit> = (1..=k).map(|j| unit(rng, format!("sp{i}u{j}"), shape.max_words)).collect();
            StoryPiece {
                id: format!("sp{i}"),
                subtitle: if rng.gen_bool(0.9) { sentence(rng, 5) } else { String::new() },
                content: units.iter().map(|u| u.text.clone()).collect::<Vec<_>>().join(". "),
                relation_to_goal: *NarrativeRelationKind::ALL.choose(rng).unwrap(),
                units,
            }
        })
        .collect();
    let mut relations: Vec<PieceRelation> = Vec::new();
    if n > 1 {
        for _ in 0..rng.gen_range(0..=2 * n) {
            let a = rng.gen_range(1..=n);
            let b = rng.gen_range(1..=n);
            let kind = *NarrativeRelationKind::ALL.choose(rng).unwrap();
            let r = PieceRelation::new(format!("sp{a}"), format!("sp{b}"), kind);
            if a != b && !relations.contains(&r) {
                relations.push(r);
            }
        }
    }
    StoryFrame { goal: sentence(rng, 8), title: sentence(rng, 6), pieces, relations, stylization: Stylization::default() }
}

pub fn frame(rng: &mut impl Rng) -> StoryFrame {
    frame_with(rng, Shape::default())
}
