//! Cell structure per layout and the piece-to-cell assignment.
//!
//! Cells are listed in reading order. A cell belongs to a `group` (a row,
//! a column, or a side of the Star ring) and sits at physical `slot` inside
//! that group, counted left to right or top to bottom.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::model::{LayoutKind, NarrativeRelationKind, StoryFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupAxis {
    /// Group is a horizontal band; its cells split the width.
    Row,
    /// Group is a vertical band; its cells split the height.
    Column,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StarSide {
    Top,
    Right,
    Bottom,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub group: usize,
    pub slot: usize,
    /// Nominal share of the canvas width used while solving the scale.
    pub nominal_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub axis: GroupAxis,
    pub len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<StarSide>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellPlan {
    pub layout: LayoutKind,
    pub groups: Vec<Group>,
    pub cells: Vec<Cell>,
    /// Unordered adjacent cell pairs `(a, b)` with `a < b`.
    pub adjacency: Vec<(usize, usize)>,
}

/// Grid column rule shared by Grid, Spiral and the middle of PortraitGrid.
pub fn grid_columns(n_sp: usize) -> usize {
    if n_sp <= 6 {
        2
    } else {
        3
    }
}

fn rows_of(n: usize, cols: usize) -> Vec<usize> {
    let mut rows = Vec::new();
    let mut left = n;
    while left > 0 {
        let take = left.min(cols);
        rows.push(take);
        left -= take;
    }
    rows
}

/// Number of ring cells on each Star side, in Top/Right/Bottom/Left order.
pub fn star_sides(n: usize) -> Vec<(StarSide, usize)> {
    match n {
        0 => vec![],
        1 => vec![(StarSide::Top, 1)],
        2 => vec![(StarSide::Top, 1), (StarSide::Bottom, 1)],
        3 => vec![(StarSide::Top, 1), (StarSide::Right, 1), (StarSide::Bottom, 1)],
        _ => {
            let base = n / 4;
            let rem = n % 4;
            // extras go to top, bottom, right, left in that order
            let extra = |rank: usize| usize::from(rem > rank);
            vec![
                (StarSide::Top, base + extra(0)),
                (StarSide::Right, base + extra(2)),
                (StarSide::Bottom, base + extra(1)),
                (StarSide::Left, base + extra(3)),
            ]
        }
    }
}

impl CellPlan {
    pub fn new(layout: LayoutKind, n: usize, width: f64) -> CellPlan {
        let mut groups = Vec::new();
        let mut cells = Vec::new();
        let push_rows = |rows: &[usize], groups: &mut Vec<Group>, cells: &mut Vec<Cell>, nominal: &dyn Fn(usize) -> f64| {
            for &len in rows {
                let g = groups.len();
                groups.push(Group { axis: GroupAxis::Row, len, side: None });
                for slot in 0..len {
                    cells.push(Cell { group: g, slot, nominal_width: nominal(g) });
                }
            }
        };
        match layout {
            LayoutKind::Portrait => push_rows(&vec![1; n], &mut groups, &mut cells, &|_| width),
            LayoutKind::Landscape => {
                for g in 0..n {
                    groups.push(Group { axis: GroupAxis::Column, len: 1, side: None });
                    cells.push(Cell { group: g, slot: 0, nominal_width: width / n as f64 });
                }
            }
            LayoutKind::Grid => {
                let cols = grid_columns(n);
                push_rows(&rows_of(n, cols), &mut groups, &mut cells, &|_| width / cols as f64);
            }
            LayoutKind::PortraitGrid => {
                let cols = grid_columns(n);
                let mut rows = vec![1];
                let tail = usize::from(n >= 4);
                if n > 1 {
                    rows.extend(rows_of(n - 1 - tail, cols));
                }
                if tail == 1 {
                    rows.push(1);
                }
                let last = rows.len() - 1;
                let single_rows: Vec<bool> =
                    rows.iter().enumerate().map(|(i, _)| i == 0 || (tail == 1 && i == last)).collect();
                push_rows(&rows, &mut groups, &mut cells, &|g| {
                    if single_rows[g] {
                        width
                    } else {
                        width / cols as f64
                    }
                });
            }
            LayoutKind::Spiral => {
                let cols = grid_columns(n);
                let rows = rows_of(n, cols);
                for (g, &len) in rows.iter().enumerate() {
                    groups.push(Group { axis: GroupAxis::Row, len, side: None });
                    for k in 0..len {
                        // boustrophedon: odd rows read right to left
                        let slot = if g % 2 == 0 { k } else { len - 1 - k };
                        cells.push(Cell { group: g, slot, nominal_width: width / cols as f64 });
                    }
                }
            }
            LayoutKind::Star => {
                let sides = star_sides(n);
                let has_left = sides.iter().any(|(s, _)| *s == StarSide::Left);
                for (g, &(side, len)) in sides.iter().enumerate() {
                    let axis = match side {
                        StarSide::Top | StarSide::Bottom => GroupAxis::Row,
                        StarSide::Left | StarSide::Right => GroupAxis::Column,
                    };
                    groups.push(Group { axis, len, side: Some(side) });
                    let nominal = match axis {
                        GroupAxis::Row => width / len as f64,
                        GroupAxis::Column if has_left => width / 3.0,
                        GroupAxis::Column => width / 2.0,
                    };
                    for k in 0..len {
                        // clockwise: bottom reads right to left, left reads bottom to top
                        let slot = match side {
                            StarSide::Top | StarSide::Right => k,
                            StarSide::Bottom | StarSide::Left => len - 1 - k,
                        };
                        cells.push(Cell { group: g, slot, nominal_width: nominal });
                    }
                }
            }
        }
        let adjacency = adjacency(layout, &groups, &cells);
        CellPlan { layout, groups, cells, adjacency }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.adjacency.binary_search(&key).is_ok()
    }

    /// Cell index at `(group, slot)`.
    pub fn cell_at(&self, group: usize, slot: usize) -> Option<usize> {
        self.cells.iter().position(|c| c.group == group && c.slot == slot)
    }
}

fn adjacency(layout: LayoutKind, groups: &[Group], cells: &[Cell]) -> Vec<(usize, usize)> {
    let mut pairs = BTreeSet::new();
    let at: HashMap<(usize, usize), usize> = cells.iter().enumerate().map(|(i, c)| ((c.group, c.slot), i)).collect();
    let mut add = |a: usize, b: usize| {
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    };
    match layout {
        LayoutKind::Star => {
            let n = cells.len();
            for i in 1..n {
                add(i - 1, i);
            }
            if groups.iter().any(|g| g.side == Some(StarSide::Left)) {
                add(n - 1, 0);
            }
        }
        _ => {
            for (g, group) in groups.iter().enumerate() {
                for s in 1..group.len {
                    add(at[&(g, s - 1)], at[&(g, s)]);
                }
                if let Some(next) = groups.get(g + 1) {
                    if group.len == 1 || next.len == 1 {
                        // a full-width band touches every cell of its neighbour
                        for s in 0..group.len {
                            for t in 0..next.len {
                                add(at[&(g, s)], at[&(g + 1, t)]);
                            }
                        }
                    } else {
                        for s in 0..group.len.min(next.len) {
                            add(at[&(g, s)], at[&(g + 1, s)]);
                        }
                    }
                }
            }
        }
    }
    pairs.into_iter().collect()
}

/// Pieces in cells, for one layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub plan: CellPlan,
    /// `cell_pieces[c]` is the index (in frame order) of the piece in cell `c`.
    pub cell_pieces: Vec<usize>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl Assignment {
    pub fn cell_of(&self, piece: usize) -> usize {
        self.cell_pieces.iter().position(|&p| p == piece).expect("every piece has a cell")
    }

    pub fn nominal_width(&self, piece: usize) -> f64 {
        self.plan.cells[self.cell_of(piece)].nominal_width
    }

    pub fn adjacent_related_pairs(&self, related: &[(usize, usize)]) -> usize {
        count_adjacent(&self.plan, &self.cell_pieces, related)
    }
}

/// Unordered pairs of piece indices linked by at least one relation.
pub fn related_pairs(frame: &StoryFrame) -> Vec<(usize, usize)> {
    let index: HashMap<&str, usize> = frame.pieces.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
    let mut pairs = BTreeSet::new();
    for r in &frame.relations {
        if let (Some(&a), Some(&b)) = (index.get(r.from_id.as_str()), index.get(r.to_id.as_str())) {
            if a != b {
                pairs.insert((a.min(b), a.max(b)));
            }
        }
    }
    pairs.into_iter().collect()
}

/// Related pairs whose pieces occupy adjacent cells under `cell_pieces`.
pub fn count_adjacent(plan: &CellPlan, cell_pieces: &[usize], related: &[(usize, usize)]) -> usize {
    let mut cell_of = vec![0; cell_pieces.len()];
    for (c, &p) in cell_pieces.iter().enumerate() {
        cell_of[p] = c;
    }
    related.iter().filter(|&&(a, b)| plan.are_adjacent(cell_of[a], cell_of[b])).count()
}

/// Kahn's algorithm over Temporal relations, always taking the earliest
/// available piece. Pieces caught in a cycle keep input order at the end.
pub fn temporal_order(frame: &StoryFrame) -> (Vec<usize>, bool) {
    let n = frame.pieces.len();
    let index: HashMap<&str, usize> = frame.pieces.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
    let mut succ = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for r in frame.relations.iter().filter(|r| r.kind == NarrativeRelationKind::Temporal) {
        if let (Some(&a), Some(&b)) = (index.get(r.from_id.as_str()), index.get(r.to_id.as_str())) {
            succ[a].push(b);
            indeg[b] += 1;
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    let mut done = vec![false; n];
    while let Some(&i) = ready.iter().next() {
        ready.remove(&i);
        order.push(i);
        done[i] = true;
        for &j in &succ[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                ready.insert(j);
            }
        }
    }
    let acyclic = order.len() == n;
    order.extend((0..n).filter(|&i| !done[i]));
    (order, acyclic)
}

fn temporal_edges(frame: &StoryFrame) -> Vec<(usize, usize)> {
    let index: HashMap<&str, usize> = frame.pieces.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
    frame
        .relations
        .iter()
        .filter(|r| r.kind == NarrativeRelationKind::Temporal)
        .filter_map(|r| Some((*index.get(r.from_id.as_str())?, *index.get(r.to_id.as_str())?)))
        .collect()
}

fn respects(cell_pieces: &[usize], edges: &[(usize, usize)]) -> bool {
    let mut cell_of = vec![0; cell_pieces.len()];
    for (c, &p) in cell_pieces.iter().enumerate() {
        cell_of[p] = c;
    }
    edges.iter().all(|&(a, b)| cell_of[a] < cell_of[b])
}

/// Repeatedly applies the best strictly improving swap of two cells.
fn hill_climb(
    plan: &CellPlan,
    mut cell_pieces: Vec<usize>,
    related: &[(usize, usize)],
    keep: &dyn Fn(&[usize]) -> bool,
) -> Vec<usize> {
    let n = cell_pieces.len();
    let mut current = count_adjacent(plan, &cell_pieces, related);
    loop {
        let mut best: Option<(usize, usize, usize)> = None;
        for i in 0..n {
            for j in i + 1..n {
                cell_pieces.swap(i, j);
                let score = count_adjacent(plan, &cell_pieces, related);
                if score > current && best.is_none_or(|(_, _, s)| score > s) && keep(&cell_pieces) {
                    best = Some((i, j, score));
                }
                cell_pieces.swap(i, j);
            }
        }
        match best {
            Some((i, j, score)) => {
                cell_pieces.swap(i, j);
                current = score;
            }
            None => return cell_pieces,
        }
    }
}

/// Places pieces into the layout's cells, keeping related pieces adjacent
/// where a swap improves on the starting order. Spiral starts from the
/// Temporal order and keeps it while it does not lose adjacency.
pub fn assign_sp_cells(frame: &StoryFrame, layout: LayoutKind, width: f64) -> Assignment {
    let n = frame.pieces.len();
    let plan = CellPlan::new(layout, n, width);
    let related = related_pairs(frame);
    let identity: Vec<usize> = (0..n).collect();
    let mut warnings = Vec::new();

    let cell_pieces = if layout == LayoutKind::Spiral {
        let (order, acyclic) = temporal_order(frame);
        let edges = temporal_edges(frame);
        let chosen = if acyclic {
            hill_climb(&plan, order, &related, &|cp| respects(cp, &edges))
        } else {
            warnings.push("temporal relations form a cycle; spiral order follows input order for the cycle".into());
            hill_climb(&plan, order, &related, &|_| true)
        };
        if count_adjacent(&plan, &chosen, &related) < count_adjacent(&plan, &identity, &related) {
            warnings.push("temporal order relaxed to keep related pieces adjacent".into());
            hill_climb(&plan, identity, &related, &|_| true)
        } else {
            chosen
        }
    } else {
        hill_climb(&plan, identity, &related, &|_| true)
    };
    Assignment { plan, cell_pieces, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::PieceRelation;

    fn frame_n(n: usize, rels: &[(usize, usize, NarrativeRelationKind)]) -> StoryFrame {
        let pieces = (0..n).map(|i| piece(&format!("p{i}"), vec![unit(&format!("u{i}"), "text")])).collect();
        let relations = rels.iter().map(|&(a, b, k)| PieceRelation::new(format!("p{a}"), format!("p{b}"), k)).collect();
        frame(pieces, relations)
    }

    #[test]
    fn grid_four_is_two_by_two() {
        let plan = CellPlan::new(LayoutKind::Grid, 4, 800.0);
        assert_eq!(plan.groups.len(), 2);
        let pos: Vec<_> = plan.cells.iter().map(|c| (c.group, c.slot)).collect();
        assert_eq!(pos, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(plan.adjacency, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn portrait_rows_in_order() {
        let a = assign_sp_cells(&frame_n(3, &[]), LayoutKind::Portrait, 800.0);
        assert_eq!(a.cell_pieces, vec![0, 1, 2]);
        assert!(a.plan.cells.iter().all(|c| c.nominal_width == 800.0 && c.slot == 0));
    }

    #[test]
    fn portrait_grid_rows() {
        let lens = |n| CellPlan::new(LayoutKind::PortraitGrid, n, 800.0).groups.iter().map(|g| g.len).collect::<Vec<_>>();
        assert_eq!(lens(1), vec![1]);
        assert_eq!(lens(3), vec![1, 2]);
        assert_eq!(lens(4), vec![1, 2, 1]);
        assert_eq!(lens(7), vec![1, 3, 2, 1]);
        assert_eq!(lens(10), vec![1, 3, 3, 2, 1]);
    }

    #[test]
    fn star_sides_cover_all() {
        for n in 1..=10 {
            let total: usize = star_sides(n).iter().map(|s| s.1).sum();
            assert_eq!(total, n);
        }
        assert_eq!(star_sides(5)[0], (StarSide::Top, 2));
    }

    #[test]
    fn spiral_boustrophedon() {
        let plan = CellPlan::new(LayoutKind::Spiral, 5, 800.0);
        let pos: Vec<_> = plan.cells.iter().map(|c| (c.group, c.slot)).collect();
        assert_eq!(pos, vec![(0, 0), (0, 1), (1, 1), (1, 0), (2, 0)]);
        // consecutive cells along the path always touch
        for i in 1..plan.len() {
            assert!(plan.are_adjacent(i - 1, i));
        }
    }

    #[test]
    fn spiral_follows_temporal_chain() {
        use NarrativeRelationKind::Temporal;
        let f = frame_n(4, &[(3, 1, Temporal), (1, 0, Temporal), (0, 2, Temporal)]);
        let a = assign_sp_cells(&f, LayoutKind::Spiral, 800.0);
        assert_eq!(a.cell_pieces, vec![3, 1, 0, 2]);
        assert!(a.warnings.is_empty());
    }

    #[test]
    fn greedy_improves_adjacency() {
        use NarrativeRelationKind::Similarity;
        let f = frame_n(4, &[(0, 3, Similarity)]);
        let a = assign_sp_cells(&f, LayoutKind::Portrait, 800.0);
        let related = related_pairs(&f);
        assert_eq!(a.adjacent_related_pairs(&related), 1);
    }

    #[test]
    fn temporal_cycle_falls_back() {
        use NarrativeRelationKind::Temporal;
        let f = frame_n(3, &[(0, 1, Temporal), (1, 0, Temporal)]);
        let (order, acyclic) = temporal_order(&f);
        assert!(!acyclic);
        assert_eq!(order, vec![2, 0, 1]);
    }
}
