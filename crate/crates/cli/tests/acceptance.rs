//! Acceptance suite: one line per criterion, checked against oracles written
//! here rather than the library's own helpers.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use storyframe::blueprint::cells::{assign_sp_cells, CellPlan};
use storyframe::blueprint::place::{design_frame, ASPECTS, MIN_DESIGN_SCALE, STRATEGIES};
use storyframe::blueprint::solve::{solve_scale, solve_scale_with};
use storyframe::blueprint::{layout_frame, place_unit_designs, Blueprint, Canvas, GlyphMetrics, Rect};
use storyframe::chart::{map_insight_to_chart, parse_numbers, NumericParse, OutOfPair};
use storyframe::document::{blueprint_document, parse_frame, serialize_frame};
use storyframe::model::{
    compute_metrics, validate_frame, ChartKind, ChartSpec, DataInsightKind, LayoutKind, NarrativeRelationKind,
    SeriesPoint, StoryFrame, StoryMetrics, StoryPiece, StoryUnit,
};
use storyframe::pipeline::{build_frame, fetch_assets, frame_summary};
use storyframe::provider::{MockProvider, Provider, ProviderConfig};
use storyframe::recommend::score_layouts;
use storyframe::render::render;
use storyframe_service::{router, ProjectStore, Service, ServiceConfig};

const TITANIC: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/titanic.txt");
const GOAL: &str = "What factors influenced the survival rate on the Titanic?";

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_secs, || format!("took {:.2}s, limit {limit_secs}s", elapsed.as_secs_f64()))
}

fn glyphs() -> &'static GlyphMetrics {
    GlyphMetrics::builtin()
}

fn metrics_with(n_sp: usize, rho_su: f64, rho_rel: f64, diversity: usize, max_ref: usize) -> StoryMetrics {
    let mut relation_counts: BTreeMap<NarrativeRelationKind, usize> =
        NarrativeRelationKind::ALL.iter().map(|&k| (k, 0)).collect();
    for k in NarrativeRelationKind::ALL.iter().take(diversity) {
        relation_counts.insert(*k, 1);
    }
    let mut in_degree = vec![0; n_sp];
    in_degree[0] = max_ref;
    StoryMetrics {
        n_sp,
        n_su: n_sp,
        rho_su,
        rho_rel,
        relation_counts,
        goal_relation_counts: NarrativeRelationKind::ALL.iter().map(|&k| (k, 0)).collect(),
        in_degree,
    }
}

// ---------------------------------------------------------------- 1

fn verbatim_rules() -> Outcome {
    let start = Instant::now();
    let mut points = 0;
    for n_sp in [8, 9] {
        for rho_su in [0.29, 0.3, 0.6, 0.61] {
            for rho_rel in [0.8, 0.81] {
                for diversity in [3, 4] {
                    for max_ref in [2, 3] {
                        let m = metrics_with(n_sp, rho_su, rho_rel, diversity, max_ref);
                        let r = score_layouts(&m).map_err(|e| e.to_string())?;
                        let expected = [
                            ("sp_gt8", LayoutKind::Grid, n_sp > 8),
                            ("density_0_3to0_6", LayoutKind::Star, (0.3..=0.6).contains(&rho_su)),
                            ("rel_gt0_8", LayoutKind::Spiral, rho_rel > 0.8),
                            ("diversity_gt3", LayoutKind::Portrait, diversity > 3),
                            ("ref_max_gt2", LayoutKind::PortraitGrid, max_ref > 2),
                        ];
                        for (id, layout, want) in expected {
                            ensure(r.fired(id, layout) == want, || {
                                format!("{id}→{layout} fired={} at n_sp={n_sp} rho_su={rho_su} rho_rel={rho_rel} diversity={diversity} max_ref={max_ref}", !want)
                            })?;
                        }
                        points += 1;
                    }
                }
            }
        }
    }
    within(start.elapsed(), 1.0)?;
    Ok(format!("{points} grid points, 5 rules each"))
}

// ---------------------------------------------------------------- 2

/// Independent reading of the rule table: (id, layouts, predicate).
fn oracle_rules() -> Vec<(&'static str, Vec<LayoutKind>, Box<dyn Fn(&StoryMetrics) -> bool>)> {
    use LayoutKind::*;
    use NarrativeRelationKind as R;
    let diversity = |m: &StoryMetrics| m.relation_counts.values().filter(|c| **c > 0).count();
    let max_ref = |m: &StoryMetrics| m.in_degree.iter().copied().max().unwrap_or(0);
    let modal = |counts: &BTreeMap<R, usize>, kind: R| {
        let own = *counts.get(&kind).unwrap_or(&0);
        own > 0 && counts.iter().all(|(_, c)| *c <= own)
    };
    vec![
        ("sp_le4", vec![Portrait, Landscape], Box::new(|m: &StoryMetrics| m.n_sp <= 4)),
        ("sp_5to8", vec![Star, PortraitGrid], Box::new(|m: &StoryMetrics| m.n_sp >= 5 && m.n_sp <= 8)),
        ("sp_gt8", vec![Grid, Spiral], Box::new(|m: &StoryMetrics| m.n_sp > 8)),
        ("density_lt0_5", vec![Portrait, Landscape], Box::new(|m: &StoryMetrics| m.rho_su < 0.5)),
        ("density_0_3to0_6", vec![Star], Box::new(|m: &StoryMetrics| m.rho_su >= 0.3 && m.rho_su <= 0.6)),
        ("density_0_5to0_85", vec![Grid, PortraitGrid], Box::new(|m: &StoryMetrics| m.rho_su >= 0.5 && m.rho_su <= 0.85)),
        ("density_gt0_8", vec![Spiral], Box::new(|m: &StoryMetrics| m.rho_su > 0.8)),
        ("rel_lt0_4", vec![Grid], Box::new(|m: &StoryMetrics| m.rho_rel < 0.4)),
        (
            "rel_0_4to0_8",
            vec![Star, Portrait, Landscape, PortraitGrid],
            Box::new(|m: &StoryMetrics| m.rho_rel >= 0.4 && m.rho_rel <= 0.8),
        ),
        ("rel_gt0_8", vec![Spiral], Box::new(|m: &StoryMetrics| m.rho_rel > 0.8)),
        ("diversity_gt3", vec![Portrait, Landscape, Grid], Box::new(move |m: &StoryMetrics| diversity(m) > 3)),
        (
            "general_specific",
            vec![Star, PortraitGrid],
            Box::new(|m: &StoryMetrics| {
                let total: usize = m.goal_relation_counts.values().sum();
                let hit = m.goal_relation_counts.get(&R::Generalization).unwrap_or(&0)
                    + m.goal_relation_counts.get(&R::Example).unwrap_or(&0);
                total > 0 && 2 * hit >= total
            }),
        ),
        ("temporal_modal", vec![PortraitGrid, Spiral], Box::new(move |m: &StoryMetrics| modal(&m.relation_counts, R::Temporal))),
        ("example_goal_modal", vec![Spiral], Box::new(move |m: &StoryMetrics| modal(&m.goal_relation_counts, R::Example))),
        ("ref_max_gt2", vec![PortraitGrid], Box::new(move |m: &StoryMetrics| max_ref(m) > 2)),
    ]
}

fn random_metrics(rng: &mut impl Rng) -> StoryMetrics {
    let boundaries = [0.0, 0.29, 0.3, 0.4, 0.5, 0.6, 0.61, 0.8, 0.81, 0.85, 0.86, 1.0, 2.0];
    let pick = |rng: &mut dyn rand::RngCore| -> f64 {
        if rng.gen_bool(0.5) {
            *boundaries.choose(rng).unwrap()
        } else {
            rng.gen_range(0.0..1.5)
        }
    };
    let n_sp = rng.gen_range(1..=10);
    let counts = |rng: &mut dyn rand::RngCore| -> BTreeMap<NarrativeRelationKind, usize> {
        NarrativeRelationKind::ALL
            .iter()
            .map(|&k| (k, if rng.gen_bool(0.4) { rng.gen_range(0..5) } else { 0 }))
            .collect()
    };
    StoryMetrics {
        n_sp,
        n_su: rng.gen_range(n_sp..=4 * n_sp),
        rho_su: pick(rng),
        rho_rel: pick(rng),
        relation_counts: counts(rng),
        goal_relation_counts: counts(rng),
        in_degree: (0..n_sp).map(|_| rng.gen_range(0..5)).collect(),
    }
}

fn scoring_oracle() -> Outcome {
    let start = Instant::now();
    let rules = oracle_rules();
    let mut rng = common::rng(2);
    for case in 0..1000 {
        let m = random_metrics(&mut rng);
        let mut scores: BTreeMap<LayoutKind, u32> = LayoutKind::ALL.iter().map(|&l| (l, 0)).collect();
        let mut fired = Vec::new();
        for (id, layouts, pred) in &rules {
            if pred(&m) {
                for l in layouts {
                    *scores.get_mut(l).unwrap() += 1;
                    fired.push((id.to_string(), *l));
                }
            }
        }
        // highest score first, canonical order among equals
        let mut order: Vec<(usize, LayoutKind)> = LayoutKind::ALL.iter().copied().enumerate().collect();
        order.sort_by_key(|&(i, l)| (std::cmp::Reverse(scores[&l]), i));
        let order: Vec<LayoutKind> = order.into_iter().map(|(_, l)| l).collect();

        let r = score_layouts(&m).map_err(|e| e.to_string())?;
        let got: Vec<(String, LayoutKind)> = r.firings.iter().map(|f| (f.rule_id.clone(), f.layout)).collect();
        ensure(r.scores == scores, || format!("case {case}: scores {:?} != {:?}", r.scores, scores))?;
        ensure(r.order == order, || format!("case {case}: order {:?} != {:?}", r.order, order))?;
        ensure(got == fired, || format!("case {case}: firings {got:?} != {fired:?}"))?;
    }
    within(start.elapsed(), 5.0)?;
    Ok(format!("1000 metrics in {:.2}s", start.elapsed().as_secs_f64()))
}

// ---------------------------------------------------------------- 3, 4

struct Quadratic {
    a: f64,
    b: f64,
}

impl Quadratic {
    fn of(frame: &StoryFrame, canvas: Canvas, layout: LayoutKind, widths: &[f64], g: &GlyphMetrics) -> Self {
        let mut a = 0.0;
        let mut b = 0.0;
        for (piece, w) in frame.pieces.iter().zip(widths) {
            if !piece.subtitle.is_empty() {
                b += 1.5 * w;
            }
            for u in &piece.units {
                let text = g.ratio_sum(&u.text);
                let hl = u.primary_text().map(|h| g.ratio_sum(&h)).unwrap_or(0.0);
                let designs = 1 + usize::from(u.icon_keyword.is_some()) + usize::from(u.chart.is_some());
                a += 2.0 * 2.0 * hl + text * designs as f64;
            }
        }
        if layout == LayoutKind::Star {
            a *= 1.25;
            b *= 1.25;
        }
        Quadratic { a, b: b + 3.0 * canvas.width }
    }

    fn area(&self, x: f64) -> f64 {
        self.a * x * x + self.b * x
    }

    /// Clamped positive root of `a x^2 + b x = t`.
    fn root(&self, canvas: Canvas) -> f64 {
        let t = canvas.width * canvas.height;
        let x = if self.a == 0.0 { t / self.b } else { (-self.b + (self.b * self.b + 4.0 * self.a * t).sqrt()) / (2.0 * self.a) };
        let top = canvas.height / 3.0;
        if x >= top {
            top
        } else if x < 6.0 {
            6.0_f64.min(top)
        } else {
            x
        }
    }
}

fn solver_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = common::rng(3);
    let (mut free, mut clamped) = (0, 0);
    for case in 0..200 {
        let frame = common::frame(&mut rng);
        let layout = *LayoutKind::ALL.choose(&mut rng).unwrap();
        let canvas = match rng.gen_range(0..6) {
            0 | 1 | 2 => Canvas::default_for(layout),
            3 => Canvas::new(rng.gen_range(300.0..2000.0), rng.gen_range(300.0..2500.0)),
            // cramped enough to hit the legibility floor
            4 => Canvas::new(rng.gen_range(60.0..200.0), rng.gen_range(60.0..200.0)),
            // too tall to fill even at H/3
            _ => Canvas::new(rng.gen_range(100.0..300.0), rng.gen_range(5000.0..20000.0)),
        };
        let assignment = assign_sp_cells(&frame, layout, canvas.width);
        let widths: Vec<f64> = (0..frame.pieces.len()).map(|i| assignment.nominal_width(i)).collect();
        let q = Quadratic::of(&frame, canvas, layout, &widths, glyphs());
        let want = q.root(canvas);
        let s = solve_scale_with(&frame, canvas, layout, &assignment, glyphs());
        ensure((s.x - want).abs() <= 1e-6 * want, || format!("case {case} {layout}: x {} vs root {want}", s.x))?;
        if s.warnings.is_empty() {
            let target = canvas.width * canvas.height;
            let residual = (q.area(s.x) - target).abs() / target;
            ensure(residual <= 1e-6, || format!("case {case} {layout}: residual {residual:e} without warnings"))?;
            free += 1;
        } else {
            clamped += 1;
        }
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!("200 frames ({free} unclamped, {clamped} clamped)"))
}

fn degenerate_frame() -> StoryFrame {
    StoryFrame {
        goal: "goal".into(),
        title: "Title only".into(),
        pieces: vec![StoryPiece {
            id: "sp1".into(),
            subtitle: String::new(),
            content: String::new(),
            relation_to_goal: NarrativeRelationKind::Elaboration,
            units: vec![StoryUnit::new("sp1u1", "", DataInsightKind::TextualStatement)],
        }],
        relations: vec![],
        stylization: Default::default(),
    }
}

fn degenerate_solve() -> Outcome {
    let frame = degenerate_frame();
    for &layout in LayoutKind::ALL.iter() {
        let canvas = Canvas::default_for(layout);
        let s = solve_scale(&frame, canvas, layout, glyphs());
        ensure(s.x == canvas.height / 3.0, || format!("{layout}: x = {} not H/3 = {}", s.x, canvas.height / 3.0))?;
        ensure(s.iterations == 0, || format!("{layout}: bisection ran {} iterations", s.iterations))?;
    }
    Ok("x = H/3 on all six layouts, no bisection".into())
}

// ---------------------------------------------------------------- 5, 6

fn overlap_area(a: &Rect, b: &Rect) -> f64 {
    let w = a.x.max(b.x) - (a.x + a.w).min(b.x + b.w);
    let h = a.y.max(b.y) - (a.y + a.h).min(b.y + b.h);
    if w < 0.0 && h < 0.0 {
        w * h
    } else {
        0.0
    }
}

fn inside(outer: &Rect, inner: &Rect) -> bool {
    let eps = 1e-9 * (outer.w + outer.h).max(1.0);
    inner.x >= outer.x - eps
        && inner.y >= outer.y - eps
        && inner.x + inner.w <= outer.x + outer.w + eps
        && inner.y + inner.h <= outer.y + outer.h + eps
}

fn check_geometry(bp: &Blueprint) -> Result<(), String> {
    let x = bp.x;
    let h = bp.glyph_heights;
    ensure(h.title == 3.0 * x && h.subtitle == 1.5 * x && h.highlight == 2.0 * x && h.regular == x, || {
        format!("glyph heights {h:?} at x = {x}")
    })?;
    let canvas = Rect::new(0.0, 0.0, bp.canvas.width, bp.canvas.height);
    let mut top: Vec<(String, Rect)> = vec![("title".into(), bp.title_box)];
    top.extend(bp.sp_boxes.iter().map(|s| (s.piece_id.clone(), s.rect)));
    if let Some(c) = bp.center_box {
        top.push(("center".into(), c));
    }
    for (i, (a, ra)) in top.iter().enumerate() {
        ensure(inside(&canvas, ra), || format!("{a} leaves the canvas"))?;
        for (b, rb) in &top[i + 1..] {
            let o = overlap_area(ra, rb);
            ensure(o <= 1e-9 * ra.w.max(rb.w) * ra.h.max(rb.h), || format!("{a} and {b} overlap by {o}"))?;
        }
    }
    for sp in &bp.sp_boxes {
        ensure(inside(&sp.rect, &sp.subtitle_rect), || format!("{} subtitle leaves its piece", sp.piece_id))?;
        for (i, su) in sp.units.iter().enumerate() {
            ensure(inside(&sp.rect, &su.rect), || format!("{} leaves {}", su.unit_id, sp.piece_id))?;
            ensure(overlap_area(&su.rect, &sp.subtitle_rect) <= 1e-9 * su.rect.area().max(1.0), || {
                format!("{} covers the subtitle", su.unit_id)
            })?;
            for other in &sp.units[i + 1..] {
                ensure(overlap_area(&su.rect, &other.rect) <= 1e-9 * su.rect.area().max(1.0), || {
                    format!("{} and {} overlap", su.unit_id, other.unit_id)
                })?;
            }
            let designs: Vec<(&str, Rect)> = [("highlight", su.highlight_box), ("text", Some(su.text_box)), ("icon", su.icon_box), ("chart", su.chart_box)]
                .into_iter()
                .filter_map(|(n, r)| r.map(|r| (n, r)))
                .collect();
            for (j, (n, r)) in designs.iter().enumerate() {
                ensure(inside(&su.rect, r), || format!("{} {n} box leaves the unit", su.unit_id))?;
                for (m, q) in &designs[j + 1..] {
                    ensure(overlap_area(r, q) <= 1e-9 * su.rect.area().max(1.0), || {
                        format!("{} {n} and {m} boxes overlap", su.unit_id)
                    })?;
                }
            }
        }
    }
    Ok(())
}

fn blueprint_geometry() -> Outcome {
    let start = Instant::now();
    let mut rng = common::rng(5);
    let mut built = 0;
    for case in 0..200 {
        let frame = common::frame(&mut rng);
        for &layout in LayoutKind::ALL.iter() {
            let bp = layout_frame(&frame, layout, Canvas::default_for(layout), glyphs())
                .map_err(|e| format!("case {case} {layout}: {e}"))?;
            check_geometry(&bp).map_err(|e| format!("case {case} {layout}: {e}"))?;
            built += 1;
        }
    }
    within(start.elapsed(), 30.0)?;
    Ok(format!("{built} blueprints in {:.1}s", start.elapsed().as_secs_f64()))
}

fn star_constraint() -> Outcome {
    let mut rng = common::rng(6);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let frame = common::frame(&mut rng);
        let bp = layout_frame(&frame, LayoutKind::Star, Canvas::default_for(LayoutKind::Star), glyphs())
            .map_err(|e| format!("case {case}: {e}"))?;
        let center = bp.center_box.ok_or_else(|| format!("case {case}: no center box"))?;
        let pieces: f64 = bp.sp_boxes.iter().map(|s| s.rect.w * s.rect.h).sum();
        let err = (center.w * center.h - pieces / 4.0).abs() / (pieces / 4.0);
        worst = worst.max(err);
        ensure(err <= 1e-6, || format!("case {case}: centre off by {err:e} relative"))?;
    }
    Ok(format!("50 Star blueprints, worst relative error {worst:.1e}"))
}

// ---------------------------------------------------------------- 7

fn adjacent_count(plan: &CellPlan, cell_pieces: &[usize], related: &[(usize, usize)]) -> usize {
    let mut cell = vec![usize::MAX; cell_pieces.len()];
    for (c, &p) in cell_pieces.iter().enumerate() {
        cell[p] = c;
    }
    related
        .iter()
        .filter(|&&(a, b)| {
            let (x, y) = (cell[a].min(cell[b]), cell[a].max(cell[b]));
            plan.adjacency.contains(&(x, y))
        })
        .count()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    fn rec(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == p.len() {
            out.push(p.clone());
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            rec(k + 1, p, out);
            p.swap(k, i);
        }
    }
    rec(0, &mut p, &mut out);
    out
}

fn adjacency_guarantee() -> Outcome {
    let start = Instant::now();
    let mut rng = common::rng(7);
    let perms: Vec<Vec<Vec<usize>>> = (0..=6).map(permutations).collect();
    let (mut checked, mut improved) = (0, 0);
    for case in 0..300 {
        let shape = common::Shape { max_pieces: 6, max_units: 1, max_words: 4 };
        let frame = common::frame_with(&mut rng, shape);
        let n = frame.pieces.len();
        let index = |id: &str| frame.pieces.iter().position(|p| p.id == id).unwrap();
        let mut related: Vec<(usize, usize)> = frame
            .relations
            .iter()
            .map(|r| (index(&r.from_id), index(&r.to_id)))
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        related.sort();
        related.dedup();
        for &layout in LayoutKind::ALL.iter() {
            let a = assign_sp_cells(&frame, layout, Canvas::default_for(layout).width);
            let identity: Vec<usize> = (0..n).collect();
            let greedy = adjacent_count(&a.plan, &a.cell_pieces, &related);
            let base = adjacent_count(&a.plan, &identity, &related);
            let best = perms[n].iter().map(|p| adjacent_count(&a.plan, p, &related)).max().unwrap();
            ensure(greedy >= base && greedy <= best, || {
                format!("case {case} {layout}: identity {base}, greedy {greedy}, optimum {best}")
            })?;
            improved += usize::from(greedy > base);
            checked += 1;
        }
    }
    within(start.elapsed(), 20.0)?;
    Ok(format!("{checked} assignments, {improved} improved on identity"))
}

// ---------------------------------------------------------------- 8

/// Pairwise overlap plus area spilling out of the content region plus overlap with the highlight.
fn oracle_overlap(content: &Rect, highlight: Option<Rect>, boxes: &[Rect]) -> f64 {
    let mut total = 0.0;
    for (i, a) in boxes.iter().enumerate() {
        total += (a.w * a.h - overlap_area(a, content)).max(0.0);
        if let Some(h) = highlight {
            total += overlap_area(a, &h);
        }
        for b in &boxes[i + 1..] {
            total += overlap_area(a, b);
        }
    }
    total
}

fn clip(r: &Rect, region: &Rect) -> Option<Rect> {
    let x0 = r.x.max(region.x);
    let y0 = r.y.max(region.y);
    let x1 = (r.x + r.w).min(region.x + region.w);
    let y1 = (r.y + r.h).min(region.y + region.h);
    (x1 > x0 && y1 > y0).then(|| Rect::new(x0, y0, x1 - x0, y1 - y0))
}

/// Brute-force largest empty rectangle over every combination of obstacle
/// and region edges; the first of equal-area candidates wins.
fn oracle_empty_rect(region: &Rect, obstacles: &[Rect]) -> Rect {
    let clipped: Vec<Rect> = obstacles.iter().filter_map(|o| clip(o, region)).collect();
    if clipped.is_empty() {
        return *region;
    }
    let mut xs = vec![region.x, region.x + region.w];
    let mut ys = vec![region.y, region.y + region.h];
    for o in &clipped {
        xs.push(o.x);
        xs.push(o.x + o.w);
        ys.push(o.y);
        ys.push(o.y + o.h);
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.dedup();
    let eps = 1e-9 * (region.w * region.h).max(1.0);
    let mut best = Rect::new(region.x, region.y, 0.0, 0.0);
    let mut best_area = 0.0;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            for k in 0..ys.len() {
                for l in k + 1..ys.len() {
                    let cand = Rect::new(xs[i], ys[k], xs[j] - xs[i], ys[l] - ys[k]);
                    let area = cand.w * cand.h;
                    if area > best_area && clipped.iter().all(|o| overlap_area(o, &cand) <= eps) {
                        best = cand;
                        best_area = area;
                    }
                }
            }
        }
    }
    best
}

/// Greedy word wrap: (lines, some word wider than the line).
fn oracle_wrap(text: &str, width: f64, size: f64, g: &GlyphMetrics) -> (usize, bool) {
    let space = size * g.ratio_sum(" ");
    let (mut lines, mut overflow) = (0, false);
    let mut line: Option<f64> = None;
    for word in text.split_whitespace() {
        let w = size * g.ratio_sum(word);
        match line {
            Some(cur) if cur + space + w <= width => line = Some(cur + space + w),
            _ => {
                lines += 1;
                overflow |= w > width;
                line = Some(w);
            }
        }
    }
    (lines, overflow)
}

fn oracle_text_fits(text: &str, block: &Rect, x: f64, g: &GlyphMetrics) -> bool {
    let slack = 1.0 + 1e-9;
    let (lines, overflow) = oracle_wrap(text, block.w * slack, x, g);
    !overflow && block.w >= x * (1.0 - 1e-9) && lines.max(1) as f64 * x <= block.h * slack
}

#[derive(Debug, PartialEq)]
enum Placement {
    Placed { strategy: String, aspect: String, shrink: f64 },
    NoRoom,
}

fn oracle_place(unit: &StoryUnit, su: Rect, x: f64, g: &GlyphMetrics) -> Placement {
    let first = design_frame(unit, su, x, g, STRATEGIES[0], ASPECTS[0]);
    if let (Some(band), Some(text)) = (first.highlight, unit.primary_text()) {
        let (lines, overflow) = oracle_wrap(&text, band.w * (1.0 + 1e-9), 2.0 * x, g);
        if lines > 0 && (overflow || lines as f64 * 2.0 * x > band.h * (1.0 + 1e-9)) {
            return Placement::NoRoom;
        }
    }
    let boxes_at = |f: &storyframe::blueprint::place::DesignFrame, s: f64| -> Vec<Rect> {
        f.icon_at(s).into_iter().chain(f.chart_at(s)).collect()
    };
    let mut fallback = None;
    let mut fallback_overlap = f64::INFINITY;
    for strategy in STRATEGIES {
        for aspect in ASPECTS {
            let f = design_frame(unit, su, x, g, strategy, aspect);
            let boxes = boxes_at(&f, 1.0);
            let overlap = oracle_overlap(&f.content, f.highlight, &boxes);
            let zero = overlap <= 1e-9 * (f.content.w * f.content.h).max(1.0);
            let block = oracle_empty_rect(&f.content, &boxes);
            if zero && oracle_text_fits(&unit.text, &block, x, g) {
                return Placement::Placed { strategy: strategy.as_str().into(), aspect: aspect.to_string(), shrink: 1.0 };
            }
            if overlap < fallback_overlap {
                fallback_overlap = overlap;
                fallback = Some((strategy, aspect, f));
            }
        }
    }
    let (strategy, aspect, f) = fallback.unwrap();
    let clear = |s: f64| oracle_overlap(&f.content, f.highlight, &boxes_at(&f, s)) <= 1e-12 * (f.content.w * f.content.h).max(1.0);
    let free = if clear(1.0) {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if clear(mid) {
                lo = mid
            } else {
                hi = mid
            }
        }
        lo
    };
    let fits = |s: f64| oracle_text_fits(&unit.text, &oracle_empty_rect(&f.content, &boxes_at(&f, s)), x, g);
    let placed = |shrink| Placement::Placed { strategy: strategy.as_str().into(), aspect: aspect.to_string(), shrink };
    if fits(free) {
        return placed(free);
    }
    let floor = MIN_DESIGN_SCALE.min(free);
    if boxes_at(&f, 1.0).is_empty() || !fits(floor) {
        return Placement::NoRoom;
    }
    let (mut lo, mut hi) = (floor, free);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid
        } else {
            hi = mid
        }
    }
    placed(lo)
}

fn placement_oracle() -> Outcome {
    let mut rng = common::rng(8);
    let (mut direct, mut shrunk, mut none) = (0, 0, 0);
    for case in 0..100 {
        let unit = common::unit(&mut rng, format!("u{case}"), 14);
        let su = Rect::new(rng.gen_range(0.0..50.0), rng.gen_range(0.0..50.0), rng.gen_range(80.0..420.0), rng.gen_range(50.0..320.0));
        let x = rng.gen_range(6.0..14.0);
        let want = oracle_place(&unit, su, x, glyphs());
        let got = match place_unit_designs(&unit, su, x, glyphs()) {
            Ok(b) => Placement::Placed {
                strategy: b.chosen_strategy.as_str().into(),
                aspect: b.chosen_aspect.clone(),
                shrink: b.shrink_factor,
            },
            Err(_) => Placement::NoRoom,
        };
        match (&got, &want) {
            (
                Placement::Placed { strategy: s1, aspect: a1, shrink: k1 },
                Placement::Placed { strategy: s2, aspect: a2, shrink: k2 },
            ) => {
                ensure(s1 == s2 && a1 == a2, || format!("case {case}: {s1} {a1} vs oracle {s2} {a2}"))?;
                ensure((k1 - k2).abs() <= 1e-3, || format!("case {case}: shrink {k1} vs oracle {k2}"))?;
                if *k1 < 1.0 {
                    shrunk += 1
                } else {
                    direct += 1
                }
            }
            (Placement::NoRoom, Placement::NoRoom) => none += 1,
            _ => return Err(format!("case {case}: library {got:?}, oracle {want:?}")),
        }
    }
    Ok(format!("100 units ({direct} at full size, {shrunk} shrunk, {none} without room)"))
}

// ---------------------------------------------------------------- 9

fn oracle_chart_valid(c: &ChartSpec) -> bool {
    let finite = c.series.iter().all(|p| p.value.is_finite());
    let other_fields = |fraction: bool, single: bool| c.fraction.is_some() == fraction && c.single_value.is_some() == single;
    finite
        && match c.kind {
            ChartKind::Bar => c.series.len() >= 2 && other_fields(false, false),
            ChartKind::Pie => {
                c.series.len() >= 2
                    && c.series.iter().all(|p| p.value >= 0.0)
                    && c.series.iter().any(|p| p.value > 0.0)
                    && other_fields(false, false)
            }
            ChartKind::Line => c.series.len() >= 3 && other_fields(false, false),
            ChartKind::SinglePie => {
                c.series.is_empty()
                    && other_fields(false, true)
                    && c.single_value.is_some_and(|v| v.is_finite() && (0.0..=100.0).contains(&v))
            }
            ChartKind::Pictograph => {
                c.series.is_empty()
                    && other_fields(true, false)
                    && c.fraction.is_some_and(|f| f.numerator >= 1 && f.numerator <= f.denominator && f.denominator <= 20)
            }
        }
}

fn random_parse(rng: &mut impl Rng) -> NumericParse {
    let value = |rng: &mut dyn rand::RngCore| -> f64 {
        match rng.gen_range(0..10) {
            0 => -rng.gen_range(0.0..100.0),
            1 => 0.0,
            2 => rng.gen_range(100.0..1000.0),
            _ => rng.gen_range(0.0..100.0),
        }
    };
    let n = |rng: &mut dyn rand::RngCore| rng.gen_range(0..5);
    NumericParse {
        percentages: (0..n(rng)).map(|_| value(rng)).collect(),
        out_of_pairs: (0..n(rng).min(2))
            .map(|_| OutOfPair {
                part: value(rng),
                whole: value(rng),
                part_label: rng.gen_bool(0.5).then(|| "part".into()),
                whole_label: rng.gen_bool(0.5).then(|| "whole".into()),
            })
            .collect(),
        fractions: (0..n(rng)).map(|_| (rng.gen_range(0..30), rng.gen_range(0..30))).collect(),
        bare_values: (0..n(rng)).map(|i| (format!("v{i}"), value(rng))).collect(),
        time_points: (0..n(rng)).map(|i| (format!("{}", 1990 + i), value(rng))).collect(),
    }
}

fn chart_table() -> Outcome {
    let bar = map_insight_to_chart(DataInsightKind::Difference, &parse_numbers("339 women survived out of 466 on board"));
    let want = ChartSpec::bar(vec![SeriesPoint::new("survived", 339.0), SeriesPoint::new("on board", 466.0)]);
    ensure(bar.as_ref() == Some(&want), || format!("gender unit gave {bar:?}"))?;
    let pie = map_insight_to_chart(DataInsightKind::Proportion, &parse_numbers("61.9% of first class passengers survived"));
    ensure(pie == Some(ChartSpec::single_pie(61.9)), || format!("61.9% gave {pie:?}"))?;
    let picto = map_insight_to_chart(DataInsightKind::Proportion, &parse_numbers("about 1 in 10 crew members"));
    ensure(picto == Some(ChartSpec::pictograph(1, 10)), || format!("1 in 10 gave {picto:?}"))?;
    let two = parse_numbers("in 1990 sales were 5, in 2000 sales were 9");
    ensure(two.time_points.len() == 2, || format!("expected two time points, parsed {:?}", two.time_points))?;
    let trend = map_insight_to_chart(DataInsightKind::Trend, &two);
    ensure(trend.is_none(), || format!("two-point trend gave {trend:?}"))?;

    let mut rng = common::rng(9);
    let mut charts = 0;
    for case in 0..5000 {
        let insight = *DataInsightKind::ALL.choose(&mut rng).unwrap();
        let parse = random_parse(&mut rng);
        if let Some(c) = map_insight_to_chart(insight, &parse) {
            ensure(oracle_chart_valid(&c), || format!("case {case}: {insight} gave invalid {c:?}"))?;
            charts += 1;
        }
    }
    Ok(format!("4 examples exact; 5000 fuzzed pairs, {charts} charts all valid"))
}

// ---------------------------------------------------------------- 10

fn constraint_enforcement() -> Outcome {
    let piece = |i: usize, units: usize| StoryPiece {
        id: format!("sp{i}"),
        subtitle: format!("Part {i}"),
        content: "Fact.".into(),
        relation_to_goal: NarrativeRelationKind::Elaboration,
        units: (1..=units).map(|j| StoryUnit::new(format!("sp{i}u{j}"), "Some fact.", DataInsightKind::TextualStatement)).collect(),
    };
    let stylization = MockProvider::new(0).suggest_stylization("goal", 0).map_err(|e| e.to_string())?;
    let frame = |pieces| StoryFrame { goal: "g".into(), title: "t".into(), pieces, relations: vec![], stylization: stylization.clone() };

    let ok = frame((1..=10).map(|i| piece(i, 4)).collect());
    ensure(validate_frame(&ok).is_empty(), || format!("10 x 4 frame rejected: {:?}", validate_frame(&ok)))?;

    let eleven = frame((1..=11).map(|i| piece(i, 1)).collect());
    let v = validate_frame(&eleven);
    ensure(v.iter().any(|v| v.field == "pieces" && v.rule == "pieces > 10"), || format!("11 pieces: {v:?}"))?;
    ensure(compute_metrics(&eleven).is_err(), || "metrics accepted 11 pieces".into())?;

    let five = frame(vec![piece(1, 1), piece(2, 5)]);
    let v = validate_frame(&five);
    ensure(v.iter().any(|v| v.field == "pieces[1].units" && v.rule == "units > 4"), || format!("5 units: {v:?}"))?;
    ensure(compute_metrics(&five).is_err(), || "metrics accepted 5 units".into())?;
    Ok("`pieces: pieces > 10` and `pieces[1].units: units > 4`".into())
}

// ---------------------------------------------------------------- 11

fn run_pipeline(out: &Path) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_storyframe"))
        .args(["pipeline", "--provider", "mock", "--seed", "7", TITANIC, "--goal", GOAL, "--out-dir"])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.success(), || format!("pipeline failed: {}", String::from_utf8_lossy(&o.stderr)))
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_pipeline(&a)?;
    run_pipeline(&b)?;
    for name in ["storyframe.json", "ranking.json", "blueprint.json", "infographic.svg"] {
        let (x, y) = (fs::read(a.join(name)).map_err(|e| format!("{name}: {e}"))?, fs::read(b.join(name)).unwrap());
        ensure(x == y, || format!("{name} differs between runs"))?;
    }
    let svg = fs::read_to_string(a.join("infographic.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).map_err(|e| format!("svg not well formed: {e}"))?;
    let chart = doc
        .descendants()
        .find(|n| n.attribute("id") == Some("sf-sp1u1-chart"))
        .ok_or("no chart group for the gender unit")?;
    let bars: Vec<(String, f64)> = chart
        .descendants()
        .filter(|n| n.has_tag_name("rect") && n.attribute("class") == Some("bar"))
        .map(|n| (n.attribute("data-value").unwrap_or("").to_string(), n.attribute("height").unwrap().parse().unwrap()))
        .collect();
    ensure(bars.len() == 2 && bars[0].0 == "339" && bars[1].0 == "466", || format!("gender bars {bars:?}"))?;
    let (h1, h2) = (bars[0].1, bars[1].1);
    let err = (h1 * 466.0 - h2 * 339.0).abs();
    ensure(err <= 0.0005 * (466.0 + 339.0), || format!("bar heights {h1}:{h2} off the 339:466 ratio by {err}"))?;
    Ok(format!("4 files byte-identical, svg well formed, bars {h1}:{h2}"))
}

// ---------------------------------------------------------------- 12

struct Reply {
    status: u16,
    etag: Option<String>,
    body: String,
}

async fn call(app: &axum::Router, method: &str, uri: &str, if_match: Option<&str>, body: Option<String>) -> Reply {
    use http_body_util::BodyExt;
    let mut req = axum::http::Request::builder().method(method).uri(uri);
    if let Some(m) = if_match {
        req = req.header("if-match", m);
    }
    let req = req.body(body.map(axum::body::Body::from).unwrap_or_else(axum::body::Body::empty)).unwrap();
    let res = tower::ServiceExt::oneshot(app.clone(), req).await.unwrap();
    let status = res.status().as_u16();
    let etag = res.headers().get("etag").map(|v| v.to_str().unwrap().to_string());
    let body = String::from_utf8(res.into_body().collect().await.unwrap().to_bytes().to_vec()).unwrap();
    Reply { status, etag, body }
}

fn json(r: &Reply) -> Result<serde_json::Value, String> {
    serde_json::from_str(&r.body).map_err(|e| format!("{e}: {}", r.body))
}

async fn service_flow(dir: &Path) -> Result<String, String> {
    let svc = Arc::new(
        Service::open(ServiceConfig { data_dir: dir.to_path_buf(), provider: ProviderConfig::mock(7) })
            .map_err(|e| e.to_string())?,
    );
    let app = router(svc);
    let persisted = |id: &str| -> Result<storyframe_service::Project, String> {
        let store = ProjectStore::open(dir).map_err(|e| e.to_string())?;
        store.get(id).map(|p| (*p).clone()).map_err(|e| e.to_string())
    };
    let text = fs::read_to_string(TITANIC).map_err(|e| e.to_string())?;
    let mut checks = 0;

    // create
    let r = call(&app, "POST", "/projects", None, Some(serde_json::json!({"source_text": text, "goal": GOAL}).to_string())).await;
    ensure(r.status == 201, || format!("create: {} {}", r.status, r.body))?;
    let id = json(&r)?["project_id"].as_str().ok_or("no project_id")?.to_string();
    let stored = persisted(&id)?;
    let direct = build_frame(&MockProvider::new(7), &text, GOAL, 7).map_err(|e| e.to_string())?;
    ensure(stored.frame == direct, || "persisted frame differs from library extraction".into())?;
    let created = parse_frame(&serde_json::to_string(&json(&r)?["storyframe"]).unwrap()).map_err(|e| e.to_string())?;
    ensure(created == direct, || "create reply differs from library extraction".into())?;
    checks += 1;

    // get storyframe
    let uri = format!("/projects/{id}/storyframe");
    let r = call(&app, "GET", &uri, None, None).await;
    ensure(r.status == 200 && r.body == serialize_frame(&persisted(&id)?.frame), || "GET storyframe differs".into())?;
    ensure(r.etag.as_deref() == Some("\"1\""), || format!("etag {:?}", r.etag))?;
    checks += 1;

    // layouts
    let r = call(&app, "GET", &format!("/projects/{id}/layouts"), None, None).await;
    let frame = persisted(&id)?.frame;
    let metrics = compute_metrics(&frame).map_err(|e| e.to_string())?;
    let ranking = score_layouts(&metrics).map_err(|e| e.to_string())?;
    let body = json(&r)?;
    ensure(body["ranking"] == serde_json::to_value(&ranking).unwrap(), || "ranking differs".into())?;
    ensure(body["metrics"] == serde_json::to_value(&metrics).unwrap(), || "metrics differ".into())?;
    checks += 1;

    // refresh stylization
    let r = call(&app, "POST", &format!("/projects/{id}/stylization:refresh"), Some("\"1\""), None).await;
    ensure(r.status == 200, || format!("refresh: {} {}", r.status, r.body))?;
    let summary = frame_summary(&frame.goal, frame.pieces.iter().map(|p| p.subtitle.as_str()));
    let style = MockProvider::new(8).suggest_stylization(&summary, 8).map_err(|e| e.to_string())?;
    ensure(json(&r)?["stylization"] == serde_json::to_value(&style).unwrap(), || "stylization differs".into())?;
    ensure(persisted(&id)?.frame.stylization == style, || "persisted stylization differs".into())?;
    checks += 1;

    // build blueprint
    let r = call(&app, "POST", &format!("/projects/{id}/blueprint"), Some("\"2\""), Some(r#"{"layout":"Star"}"#.into())).await;
    ensure(r.status == 200, || format!("build: {} {}", r.status, r.body))?;
    let stored = persisted(&id)?;
    let direct = layout_frame(&stored.frame, LayoutKind::Star, Canvas::default_for(LayoutKind::Star), glyphs())
        .map_err(|e| e.to_string())?
        .rounded();
    ensure(stored.blueprint.as_ref() == Some(&direct), || "persisted blueprint differs from library layout".into())?;
    ensure(json(&r)?["blueprint"] == serde_json::to_value(blueprint_document(&direct)).unwrap(), || {
        "blueprint reply differs".into()
    })?;
    checks += 1;

    // render
    let r = call(&app, "GET", &format!("/projects/{id}/render.svg"), None, None).await;
    let provider = MockProvider::new(stored.seed);
    let (assets, _) = fetch_assets(&provider, &stored.frame);
    let rendered = render(&stored.frame, &direct, &stored.frame.stylization, &assets, glyphs()).map_err(|e| e.to_string())?;
    ensure(r.status == 200 && r.body == rendered.svg, || "render.svg differs from library render".into())?;
    checks += 1;

    // put storyframe, then stale writes
    let file = dir.join(format!("{id}.json"));
    let mut edited = stored.frame.clone();
    edited.title = "Edited title".into();
    let r = call(&app, "PUT", &uri, Some("\"3\""), Some(serialize_frame(&edited))).await;
    ensure(r.status == 200 && r.body == serialize_frame(&edited), || format!("put: {} {}", r.status, r.body))?;
    ensure(persisted(&id)?.frame == edited, || "PUT not persisted".into())?;
    checks += 1;

    let before = fs::read(&file).map_err(|e| e.to_string())?;
    let mut stale = edited.clone();
    stale.title = "Stale".into();
    for (method, path, body) in [
        ("PUT", uri.clone(), serialize_frame(&stale)),
        ("POST", format!("/projects/{id}/blueprint"), r#"{"layout":"Grid"}"#.to_string()),
        ("POST", format!("/projects/{id}/stylization:refresh"), String::new()),
    ] {
        let r = call(&app, method, &path, Some("\"3\""), Some(body)).await;
        ensure(r.status == 409 && r.etag.as_deref() == Some("\"4\""), || format!("stale {method} {path}: {} {:?}", r.status, r.etag))?;
        ensure(json(&r)?["error"]["current_revision"] == 4, || format!("stale body {}", r.body))?;
        ensure(fs::read(&file).unwrap() == before, || format!("stale {method} {path} changed the stored project"))?;
        checks += 1;
    }
    let r = call(&app, "GET", &uri, None, None).await;
    ensure(r.body == serialize_frame(&edited) && r.etag.as_deref() == Some("\"4\""), || "state moved after conflicts".into())?;
    Ok(format!("{checks} endpoint checks against library calls on the stored project"))
}

fn service_equivalence() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(service_flow(tmp.path()))
}

// ----------------------------------------------------------------

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("rule fidelity on the boundary grid", verbatim_rules),
        ("scoring equals rule-table oracle", scoring_oracle),
        ("solver matches the quadratic root", solver_correctness),
        ("degenerate frame solves to H/3", degenerate_solve),
        ("blueprint geometry", blueprint_geometry),
        ("Star centre is a quarter of the pieces", star_constraint),
        ("adjacency between identity and optimum", adjacency_guarantee),
        ("placement equals exhaustive oracle", placement_oracle),
        ("chart rule table", chart_table),
        ("frame caps enforced", constraint_enforcement),
        ("end-to-end determinism", determinism),
        ("service equals library calls", service_equivalence),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name} [{secs:.2}s]: {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} [{secs:.2}s]: {reason}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
