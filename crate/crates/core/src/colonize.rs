//! Space-colonization growth of vessel-like trees and Murray's-law radii.
//!
//! Growth iterates: associate each live attractor with its nearest tree node
//! within the attraction radius, average the pull directions per node, step
//! every influenced node by one segment length, then kill attractors that a
//! node has reached. Branch radii are assigned afterwards, leaves to root,
//! with `radius^n = sum(child_radius^n)`.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::BinaryMask;
use crate::seed::derive_seed;

/// Positions closer than this are treated as the same point; candidate nodes
/// this close to an existing node are rejected to prevent zero-length segments.
pub const POSITION_EPS: f64 = 1e-6;

/// Mean pull vectors shorter than this are treated as cancelled out and the
/// node is skipped for the iteration.
pub const DEGENERATE_DIRECTION_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ColonizeError {
    #[error("ROI has no foreground pixels")]
    EmptyRoi,
    #[error("ROI foreground has {available} pixels, fewer than the {requested} requested attractors")]
    InsufficientArea { available: usize, requested: usize },
    #[error("invalid growth parameters: {0}")]
    InvalidParams(String),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
}

/// Continuous 2-D position in pixel units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_sq(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

/// Auxin source point cloud with liveness flags. Dead attractors stay dead.
#[derive(Clone, Debug, PartialEq)]
pub struct AttractorSet {
    points: Vec<Point2>,
    alive: Vec<bool>,
}

impl AttractorSet {
    pub fn from_points(points: Vec<Point2>) -> Self {
        let alive = vec![true; points.len()];
        Self { points, alive }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> Point2 {
        self.points[i]
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn is_alive(&self, i: usize) -> bool {
        self.alive[i]
    }

    pub fn any_alive(&self) -> bool {
        self.alive.iter().any(|&a| a)
    }

    pub fn kill(&mut self, i: usize) {
        self.alive[i] = false;
    }

    pub fn live_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.alive
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(i, _)| i)
    }
}

/// One growth node. `radius` is 0 until [`assign_radii`] runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeNode {
    pub position: Point2,
    pub parent: Option<usize>,
    pub radius: f64,
}

/// Rooted tree of growth nodes. Node 0 is the root; every parent index
/// refers to an earlier node, so parent pointers cannot form a cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct VesselTree {
    nodes: Vec<TreeNode>,
}

impl VesselTree {
    /// Validates the structural invariants: nonempty, node 0 is the sole
    /// root, and every parent precedes its child.
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Result<Self, ColonizeError> {
        if nodes.is_empty() {
            return Err(ColonizeError::InvalidTree("tree has no nodes".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            match node.parent {
                None if i != 0 => {
                    return Err(ColonizeError::InvalidTree(format!(
                        "node {i} has no parent but is not node 0"
                    )));
                }
                Some(p) if p >= i => {
                    return Err(ColonizeError::InvalidTree(format!(
                        "node {i} has parent {p}, which is not an earlier node"
                    )));
                }
                _ => {}
            }
            if !node.position.x.is_finite() || !node.position.y.is_finite() {
                return Err(ColonizeError::InvalidTree(format!(
                    "node {i} has a non-finite position"
                )));
            }
        }
        if nodes[0].parent.is_some() {
            return Err(ColonizeError::InvalidTree("node 0 must be the root".into()));
        }
        Ok(Self { nodes })
    }

    fn single(root: Point2) -> Self {
        Self {
            nodes: vec![TreeNode {
                position: root,
                parent: None,
                radius: 0.0,
            }],
        }
    }

    fn push(&mut self, node: TreeNode) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub(crate) fn node_mut(&mut self, i: usize) -> &mut TreeNode {
        &mut self.nodes[i]
    }

    /// Child index lists, parallel to `nodes()`.
    pub fn children_lists(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                children[p].push(i);
            }
        }
        children
    }
}

/// Growth configuration. The default attraction 5 / segment 20 / kill 5 are
/// unusual in that the segment length exceeds the attraction radius, so
/// growth frequently stalls; practical configs typically override them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowthParams {
    pub attraction_radius_d: f64,
    pub kill_radius_k: f64,
    pub segment_length_l: f64,
    pub max_nodes_m: usize,
    pub perturb_sigma: f64,
    pub leaf_radius: f64,
    pub murray_exponent_n: f64,
    pub seed: u64,
    /// Overrides the default root placement (nearest foreground pixel to the
    /// midpoint of the ROI bounding box's left edge).
    pub root: Option<Point2>,
}

impl Default for GrowthParams {
    fn default() -> Self {
        Self {
            attraction_radius_d: 5.0,
            kill_radius_k: 5.0,
            segment_length_l: 20.0,
            max_nodes_m: 2000,
            perturb_sigma: 2.0,
            leaf_radius: 1.0,
            murray_exponent_n: 3.0,
            seed: 0,
            root: None,
        }
    }
}

impl GrowthParams {
    pub fn validate(&self) -> Result<(), ColonizeError> {
        let positive = [
            ("attraction_radius_d", self.attraction_radius_d),
            ("kill_radius_k", self.kill_radius_k),
            ("segment_length_l", self.segment_length_l),
            ("leaf_radius", self.leaf_radius),
            ("murray_exponent_n", self.murray_exponent_n),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ColonizeError::InvalidParams(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.max_nodes_m < 1 {
            return Err(ColonizeError::InvalidParams(
                "max_nodes_m must be at least 1".into(),
            ));
        }
        if !(self.perturb_sigma >= 0.0) || !self.perturb_sigma.is_finite() {
            return Err(ColonizeError::InvalidParams(format!(
                "perturb_sigma must be non-negative, got {}",
                self.perturb_sigma
            )));
        }
        Ok(())
    }
}

/// What happened to each attractor and node during a growth run, in order.
/// Lets tests replay kill decisions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum GrowthEvent {
    NodeAdded {
        iteration: usize,
        node: usize,
        parent: usize,
    },
    /// Killed because a tree node entered its kill radius.
    AttractorPruned { iteration: usize, attractor: usize },
    /// Marked dead because it kept influencing nodes without producing growth.
    AttractorStalled { iteration: usize, attractor: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GrowthLog {
    pub events: Vec<GrowthEvent>,
    pub iterations: usize,
}

fn pixel_center(x: u32, y: u32) -> Point2 {
    Point2::new(f64::from(x) + 0.5, f64::from(y) + 0.5)
}

/// Uniformly samples `count` distinct foreground pixel centers.
pub fn sample_attractors(
    roi: &BinaryMask,
    count: usize,
    seed: u64,
) -> Result<AttractorSet, ColonizeError> {
    if count < 1 {
        return Err(ColonizeError::InvalidParams(
            "attractor count must be at least 1".into(),
        ));
    }
    let foreground: Vec<(u32, u32)> = roi.iter_foreground().collect();
    if foreground.is_empty() {
        return Err(ColonizeError::EmptyRoi);
    }
    if foreground.len() < count {
        return Err(ColonizeError::InsufficientArea {
            available: foreground.len(),
            requested: count,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..foreground.len()).collect();
    // Partial Fisher-Yates: only the first `count` slots are needed.
    for i in 0..count {
        let j = rng.random_range(i..indices.len());
        indices.swap(i, j);
    }
    let points = indices[..count]
        .iter()
        .map(|&i| pixel_center(foreground[i].0, foreground[i].1))
        .collect();
    Ok(AttractorSet::from_points(points))
}

fn roi_contains(roi: &BinaryMask, p: Point2) -> bool {
    let x = p.x.floor();
    let y = p.y.floor();
    if x < 0.0 || y < 0.0 || x >= f64::from(roi.width()) || y >= f64::from(roi.height()) {
        return false;
    }
    roi.get(x as u32, y as u32)
}

/// Nearest foreground pixel center to `p`, ties broken row-major.
///
/// Expanding ring search from the pixel containing `p`; a cell at Chebyshev
/// ring `r` is at least `r - 0.5` away, which bounds the rings that must be
/// visited once a candidate is found.
fn nearest_foreground_center(roi: &BinaryMask, p: Point2) -> Option<Point2> {
    let (w, h) = (i64::from(roi.width()), i64::from(roi.height()));
    if w == 0 || h == 0 {
        return None;
    }
    let cx = (p.x.floor() as i64).clamp(0, w - 1);
    let cy = (p.y.floor() as i64).clamp(0, h - 1);
    let mut best: Option<(f64, i64, i64)> = None;
    let max_ring = w.max(h) + (p.x.abs() + p.y.abs()).ceil() as i64 + 2;
    for r in 0..=max_ring {
        if let Some((d, _, _)) = best {
            if (r as f64 - 0.5) > d.sqrt() {
                break;
            }
        }
        let visit = |x: i64, y: i64, best: &mut Option<(f64, i64, i64)>| {
            if x < 0 || y < 0 || x >= w || y >= h || !roi.get(x as u32, y as u32) {
                return;
            }
            let c = pixel_center(x as u32, y as u32);
            let d = p.distance_sq(&c);
            let cand = (d, y, x);
            if best.map_or(true, |(bd, by, bx)| cand < (bd, by, bx)) {
                *best = Some(cand);
            }
        };
        if r == 0 {
            visit(cx, cy, &mut best);
            continue;
        }
        for x in (cx - r)..=(cx + r) {
            visit(x, cy - r, &mut best);
            visit(x, cy + r, &mut best);
        }
        for y in (cy - r + 1)..=(cy + r - 1) {
            visit(cx - r, y, &mut best);
            visit(cx + r, y, &mut best);
        }
    }
    best.map(|(_, y, x)| pixel_center(x as u32, y as u32))
}

/// Displaces every live attractor by independent Gaussian offsets
/// (std `sigma` per axis). Points landing outside the ROI foreground are
/// re-clamped to the nearest foreground pixel center.
pub fn perturb_attractors(
    a: &AttractorSet,
    sigma: f64,
    seed: u64,
    roi: &BinaryMask,
) -> AttractorSet {
    assert!(sigma >= 0.0, "perturbation sigma must be non-negative");
    if sigma == 0.0 {
        return a.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma checked above");
    let mut out = a.clone();
    for i in 0..a.len() {
        if !a.is_alive(i) {
            continue;
        }
        let dx: f64 = normal.sample(&mut rng);
        let dy: f64 = normal.sample(&mut rng);
        let p = a.point(i);
        let mut moved = Point2::new(p.x + dx, p.y + dy);
        if !roi_contains(roi, moved) {
            if let Some(clamped) = nearest_foreground_center(roi, moved) {
                moved = clamped;
            } else {
                moved = p;
            }
        }
        out.points[i] = moved;
    }
    out
}

/// Maps each live attractor to its nearest node when that node lies strictly
/// within `d`; ties resolve to the lowest node index. `None` marks attractors
/// that are dead or out of range.
pub fn associate_attractors(a: &AttractorSet, t: &VesselTree, d: f64) -> Vec<Option<usize>> {
    assert!(!t.is_empty(), "tree must be nonempty");
    let d_sq = d * d;
    let mut assoc = vec![None; a.len()];
    for i in 0..a.len() {
        if !a.is_alive(i) {
            continue;
        }
        let p = a.point(i);
        let mut best: Option<(f64, usize)> = None;
        for (j, node) in t.nodes().iter().enumerate() {
            let dist = p.distance_sq(&node.position);
            if best.map_or(true, |b| (dist, j) < b) {
                best = Some((dist, j));
            }
        }
        if let Some((dist, j)) = best {
            if dist < d_sq {
                assoc[i] = Some(j);
            }
        }
    }
    assoc
}

/// Unit growth direction per influenced node: the normalized mean of unit
/// vectors from the node toward each influencing attractor. Nodes whose mean
/// pull cancels below [`DEGENERATE_DIRECTION_EPS`] are skipped.
pub fn growth_directions(
    t: &VesselTree,
    a: &AttractorSet,
    assoc: &[Option<usize>],
) -> BTreeMap<usize, Point2> {
    let mut sums: BTreeMap<usize, (f64, f64, usize)> = BTreeMap::new();
    for (ai, &node) in assoc.iter().enumerate() {
        let Some(ni) = node else { continue };
        let pos = t.node(ni).position;
        let ap = a.point(ai);
        let dx = ap.x - pos.x;
        let dy = ap.y - pos.y;
        let norm = (dx * dx + dy * dy).sqrt();
        let entry = sums.entry(ni).or_insert((0.0, 0.0, 0));
        if norm > 0.0 {
            entry.0 += dx / norm;
            entry.1 += dy / norm;
        }
        entry.2 += 1;
    }
    let mut dirs = BTreeMap::new();
    for (ni, (sx, sy, count)) in sums {
        let mx = sx / count as f64;
        let my = sy / count as f64;
        let norm = (mx * mx + my * my).sqrt();
        if norm < DEGENERATE_DIRECTION_EPS {
            continue;
        }
        dirs.insert(ni, Point2::new(mx / norm, my / norm));
    }
    dirs
}

/// Uniform bucket grid over node positions. Cell size is at least the largest
/// query radius, so a 3x3 neighborhood covers every query.
struct NodeGrid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl NodeGrid {
    fn new(max_query_radius: f64) -> Self {
        Self {
            cell: max_query_radius.max(1e-3),
            buckets: HashMap::new(),
        }
    }

    fn key(&self, p: Point2) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    fn insert(&mut self, idx: usize, p: Point2) {
        self.buckets.entry(self.key(p)).or_default().push(idx);
    }

    fn for_candidates(&self, p: Point2, mut f: impl FnMut(usize)) {
        let (kx, ky) = self.key(p);
        for dy in -1..=1 {
            for dx in -1..=1 {
                if let Some(bucket) = self.buckets.get(&(kx + dx, ky + dy)) {
                    for &idx in bucket {
                        f(idx);
                    }
                }
            }
        }
    }

    /// Nearest node within strict radius `r`, ties to the lowest index.
    fn nearest_within(&self, p: Point2, r: f64, tree: &VesselTree) -> Option<usize> {
        let r_sq = r * r;
        let mut best: Option<(f64, usize)> = None;
        self.for_candidates(p, |idx| {
            let d = p.distance_sq(&tree.node(idx).position);
            if d < r_sq && best.map_or(true, |b| (d, idx) < b) {
                best = Some((d, idx));
            }
        });
        best.map(|(_, idx)| idx)
    }

    /// True when any node lies within `r` (inclusive) of `p`.
    fn any_within(&self, p: Point2, r: f64, tree: &VesselTree) -> bool {
        let r_sq = r * r;
        let mut hit = false;
        self.for_candidates(p, |idx| {
            if !hit && p.distance_sq(&tree.node(idx).position) <= r_sq {
                hit = true;
            }
        });
        hit
    }

    /// True when any node lies strictly within `r` of `p`.
    fn any_within_strict(&self, p: Point2, r: f64, tree: &VesselTree) -> bool {
        let r_sq = r * r;
        let mut hit = false;
        self.for_candidates(p, |idx| {
            if !hit && p.distance_sq(&tree.node(idx).position) < r_sq {
                hit = true;
            }
        });
        hit
    }
}

/// Root placement rule: the foreground pixel center nearest to the midpoint
/// of the foreground bounding box's left edge (ties row-major). `None` for an
/// empty ROI.
pub fn default_root(roi: &BinaryMask) -> Option<Point2> {
    let mut bbox: Option<(u32, u32, u32, u32)> = None;
    for (x, y) in roi.iter_foreground() {
        bbox = Some(match bbox {
            None => (x, x, y, y),
            Some((x0, x1, y0, y1)) => (x0.min(x), x1.max(x), y0.min(y), y1.max(y)),
        });
    }
    let (min_x, _, min_y, max_y) = bbox?;
    let target = Point2::new(f64::from(min_x), f64::from(min_y + max_y + 1) / 2.0);
    let mut best: Option<(f64, u32, u32)> = None;
    for (x, y) in roi.iter_foreground() {
        let d = target.distance_sq(&pixel_center(x, y));
        let cand = (d, y, x);
        if best.map_or(true, |b| cand < b) {
            best = Some(cand);
        }
    }
    best.map(|(_, y, x)| pixel_center(x, y))
}

/// Runs the growth loop from an explicit root over an explicit attractor set.
///
/// Each iteration associates attractors, grows every influenced node by one
/// segment, then prunes attractors within the kill radius of any node.
/// Iterations that add no node mark their influencing attractors dead (the
/// stall rule), so the loop always terminates: on the node budget, on
/// attractor exhaustion, or when no live attractor can reach the tree.
pub fn grow_from(
    root: Point2,
    mut attractors: AttractorSet,
    params: &GrowthParams,
) -> (VesselTree, GrowthLog) {
    let mut tree = VesselTree::single(root);
    let mut log = GrowthLog::default();
    let mut grid = NodeGrid::new(params.attraction_radius_d.max(params.kill_radius_k));
    grid.insert(0, root);

    loop {
        if tree.len() >= params.max_nodes_m || !attractors.any_alive() {
            break;
        }
        log.iterations += 1;
        let iteration = log.iterations;

        let mut assoc = vec![None; attractors.len()];
        let mut any_assoc = false;
        for i in attractors.live_indices() {
            let hit = grid.nearest_within(attractors.point(i), params.attraction_radius_d, &tree);
            if hit.is_some() {
                any_assoc = true;
            }
            assoc[i] = hit;
        }
        if !any_assoc {
            // No live attractor can ever influence the tree again.
            let stalled: Vec<usize> = attractors.live_indices().collect();
            for i in stalled {
                attractors.kill(i);
                log.events.push(GrowthEvent::AttractorStalled {
                    iteration,
                    attractor: i,
                });
            }
            break;
        }

        let dirs = growth_directions(&tree, &attractors, &assoc);
        let mut added = 0usize;
        for (&ni, dir) in &dirs {
            if tree.len() >= params.max_nodes_m {
                break;
            }
            let base = tree.node(ni).position;
            let candidate = Point2::new(
                base.x + params.segment_length_l * dir.x,
                base.y + params.segment_length_l * dir.y,
            );
            if grid.any_within(candidate, POSITION_EPS, &tree) {
                continue;
            }
            let idx = tree.push(TreeNode {
                position: candidate,
                parent: Some(ni),
                radius: 0.0,
            });
            grid.insert(idx, candidate);
            log.events.push(GrowthEvent::NodeAdded {
                iteration,
                node: idx,
                parent: ni,
            });
            added += 1;
        }

        if added == 0 {
            // Stall: the influencing attractors keep pulling without growth.
            let stalled: Vec<usize> = (0..attractors.len())
                .filter(|&i| assoc[i].is_some())
                .collect();
            for i in stalled {
                attractors.kill(i);
                log.events.push(GrowthEvent::AttractorStalled {
                    iteration,
                    attractor: i,
                });
            }
            continue;
        }

        let live: Vec<usize> = attractors.live_indices().collect();
        for i in live {
            if grid.any_within_strict(attractors.point(i), params.kill_radius_k, &tree) {
                attractors.kill(i);
                log.events.push(GrowthEvent::AttractorPruned {
                    iteration,
                    attractor: i,
                });
            }
        }
    }
    (tree, log)
}

/// Samples attractors from the ROI, perturbs them, and grows a tree.
/// Deterministic for a given `(roi, params, attractor_count)`.
pub fn grow(
    roi: &BinaryMask,
    params: &GrowthParams,
    attractor_count: usize,
) -> Result<VesselTree, ColonizeError> {
    grow_with_log(roi, params, attractor_count).map(|(t, _)| t)
}

/// [`grow`], also returning the growth log.
pub fn grow_with_log(
    roi: &BinaryMask,
    params: &GrowthParams,
    attractor_count: usize,
) -> Result<(VesselTree, GrowthLog), ColonizeError> {
    params.validate()?;
    let root = match params.root {
        Some(r) => r,
        None => default_root(roi).ok_or(ColonizeError::EmptyRoi)?,
    };
    let sampled = sample_attractors(roi, attractor_count, derive_seed(params.seed, "attractors", 0))?;
    let perturbed = perturb_attractors(
        &sampled,
        params.perturb_sigma,
        derive_seed(params.seed, "perturb", 0),
        roi,
    );
    Ok(grow_from(root, perturbed, params))
}

/// Assigns radii leaves-to-root: leaves get `leaf_radius`, a pass-through
/// node inherits its child's radius exactly, and a branching node gets
/// `(sum(child_radius^n))^(1/n)` (clamped up to the largest child so radii
/// never decrease toward the root under floating-point rounding).
pub fn assign_radii(mut t: VesselTree, leaf_radius: f64, n: f64) -> VesselTree {
    let children = t.children_lists();
    for i in (0..t.len()).rev() {
        let radius = match children[i].as_slice() {
            [] => leaf_radius,
            [only] => t.node(*only).radius,
            many => {
                let sum: f64 = many.iter().map(|&c| t.node(c).radius.powf(n)).sum();
                let max_child = many
                    .iter()
                    .map(|&c| t.node(c).radius)
                    .fold(f64::NEG_INFINITY, f64::max);
                sum.powf(1.0 / n).max(max_child)
            }
        };
        t.node_mut(i).radius = radius;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_roi(w: u32, h: u32) -> BinaryMask {
        BinaryMask::from_fn(w, h, |_, _| true)
    }

    #[test]
    fn sample_full_roi_gives_distinct_in_bounds_points() {
        let roi = full_roi(100, 100);
        let a = sample_attractors(&roi, 1000, 7).unwrap();
        assert_eq!(a.len(), 1000);
        let mut seen = std::collections::HashSet::new();
        for i in 0..a.len() {
            let p = a.point(i);
            assert!(p.x > 0.0 && p.x < 100.0 && p.y > 0.0 && p.y < 100.0);
            assert!(seen.insert((p.x.to_bits(), p.y.to_bits())), "duplicate point");
        }
    }

    #[test]
    fn sample_single_pixel_roi_forces_location() {
        let roi = BinaryMask::from_fn(8, 8, |x, y| x == 3 && y == 4);
        let a = sample_attractors(&roi, 1, 123).unwrap();
        assert_eq!(a.point(0), Point2::new(3.5, 4.5));
    }

    #[test]
    fn sample_respects_membership() {
        // Left half foreground; every sampled point must scan as foreground.
        let roi = BinaryMask::from_fn(64, 64, |x, _| x < 32);
        let a = sample_attractors(&roi, 500, 99).unwrap();
        for i in 0..a.len() {
            assert!(a.point(i).x < 32.0);
            assert!(roi_contains(&roi, a.point(i)));
        }
    }

    #[test]
    fn sample_errors() {
        let empty = BinaryMask::new(4, 4);
        assert_eq!(
            sample_attractors(&empty, 1, 0).unwrap_err(),
            ColonizeError::EmptyRoi
        );
        let tiny = BinaryMask::from_fn(4, 4, |x, y| x == 0 && y == 0);
        assert_eq!(
            sample_attractors(&tiny, 2, 0).unwrap_err(),
            ColonizeError::InsufficientArea {
                available: 1,
                requested: 2
            }
        );
    }

    #[test]
    fn sample_is_deterministic() {
        let roi = full_roi(40, 40);
        let a = sample_attractors(&roi, 200, 5).unwrap();
        let b = sample_attractors(&roi, 200, 5).unwrap();
        assert_eq!(a, b);
        let c = sample_attractors(&roi, 200, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn perturb_sigma_zero_is_identity() {
        let roi = full_roi(16, 16);
        let a = sample_attractors(&roi, 30, 1).unwrap();
        let b = perturb_attractors(&a, 0.0, 99, &roi);
        assert_eq!(a, b);
    }

    #[test]
    fn perturb_is_deterministic() {
        let roi = full_roi(16, 16);
        let a = sample_attractors(&roi, 30, 1).unwrap();
        let b1 = perturb_attractors(&a, 2.0, 7, &roi);
        let b2 = perturb_attractors(&a, 2.0, 7, &roi);
        assert_eq!(b1, b2);
    }

    #[test]
    fn perturb_clamps_to_roi() {
        // Huge sigma on a small ROI: every output point must stay foreground.
        let roi = BinaryMask::from_fn(12, 12, |x, y| (2..6).contains(&x) && (3..9).contains(&y));
        let a = sample_attractors(&roi, 10, 3).unwrap();
        let b = perturb_attractors(&a, 50.0, 11, &roi);
        for i in 0..b.len() {
            assert!(roi_contains(&roi, b.point(i)), "point {:?} left the ROI", b.point(i));
        }
    }

    #[test]
    fn nearest_center_picks_true_nearest() {
        let roi = BinaryMask::from_fn(8, 8, |x, y| (x, y) == (0, 0) || (x, y) == (5, 5));
        // Clearly closer to (5,5)'s center.
        let p = Point2::new(4.9, 4.9);
        assert_eq!(nearest_foreground_center(&roi, p), Some(Point2::new(5.5, 5.5)));
        // Equidistant from both centers: row-major order prefers (0,0).
        let mid = Point2::new(3.0, 3.0);
        assert_eq!(nearest_foreground_center(&roi, mid), Some(Point2::new(0.5, 0.5)));
    }

    fn tree_of(points: &[(f64, f64, Option<usize>)]) -> VesselTree {
        VesselTree::from_nodes(
            points
                .iter()
                .map(|&(x, y, parent)| TreeNode {
                    position: Point2::new(x, y),
                    parent,
                    radius: 0.0,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn associate_hand_geometry() {
        let t = tree_of(&[(0.0, 0.0, None)]);
        let a = AttractorSet::from_points(vec![Point2::new(3.0, 0.0)]);
        assert_eq!(associate_attractors(&a, &t, 5.0), vec![Some(0)]);
        let far = AttractorSet::from_points(vec![Point2::new(6.0, 0.0)]);
        // 6 >= 5: out of range.
        assert_eq!(associate_attractors(&far, &t, 5.0), vec![None]);
        // Exactly at distance d: strict inequality keeps it out.
        let edge = AttractorSet::from_points(vec![Point2::new(5.0, 0.0)]);
        assert_eq!(associate_attractors(&edge, &t, 5.0), vec![None]);
    }

    #[test]
    fn associate_tie_breaks_to_lower_index() {
        let t = tree_of(&[(0.0, 0.0, None), (2.0, 0.0, Some(0))]);
        let a = AttractorSet::from_points(vec![Point2::new(1.0, 0.0)]);
        assert_eq!(associate_attractors(&a, &t, 5.0), vec![Some(0)]);
    }

    #[test]
    fn associate_skips_dead() {
        let t = tree_of(&[(0.0, 0.0, None)]);
        let mut a = AttractorSet::from_points(vec![Point2::new(1.0, 0.0)]);
        a.kill(0);
        assert_eq!(associate_attractors(&a, &t, 5.0), vec![None]);
    }

    #[test]
    fn direction_single_influencer() {
        let t = tree_of(&[(0.0, 0.0, None)]);
        let a = AttractorSet::from_points(vec![Point2::new(0.0, 10.0)]);
        let assoc = associate_attractors(&a, &t, 15.0);
        let dirs = growth_directions(&t, &a, &assoc);
        assert_eq!(dirs[&0], Point2::new(0.0, 1.0));
    }

    #[test]
    fn direction_vector_sum_by_hand() {
        let t = tree_of(&[(0.0, 0.0, None)]);
        let a = AttractorSet::from_points(vec![Point2::new(1.0, 1.0), Point2::new(-1.0, 1.0)]);
        let assoc = associate_attractors(&a, &t, 5.0);
        let dirs = growth_directions(&t, &a, &assoc);
        let d = dirs[&0];
        assert!(d.x.abs() < 1e-15);
        assert!((d.y - 1.0).abs() < 1e-15);
    }

    #[test]
    fn direction_cancellation_skips_node() {
        let t = tree_of(&[(0.0, 0.0, None)]);
        let a = AttractorSet::from_points(vec![Point2::new(1.0, 0.0), Point2::new(-1.0, 0.0)]);
        let assoc = associate_attractors(&a, &t, 5.0);
        let dirs = growth_directions(&t, &a, &assoc);
        assert!(dirs.is_empty());
    }

    #[test]
    fn grow_hand_simulation() {
        // Root (0,0), single attractor (0,10), d=15, l=4, k=5:
        // nodes (0,0),(0,4),(0,8); attractor pruned once (0,8) lands within 5.
        let params = GrowthParams {
            attraction_radius_d: 15.0,
            kill_radius_k: 5.0,
            segment_length_l: 4.0,
            max_nodes_m: 100,
            ..GrowthParams::default()
        };
        let attractors = AttractorSet::from_points(vec![Point2::new(0.0, 10.0)]);
        let (tree, log) = grow_from(Point2::new(0.0, 0.0), attractors, &params);
        let positions: Vec<(f64, f64)> = tree
            .nodes()
            .iter()
            .map(|n| (n.position.x, n.position.y))
            .collect();
        assert_eq!(positions, vec![(0.0, 0.0), (0.0, 4.0), (0.0, 8.0)]);
        assert_eq!(tree.node(1).parent, Some(0));
        assert_eq!(tree.node(2).parent, Some(1));
        // Pruned at the iteration that created node 2.
        assert!(log.events.contains(&GrowthEvent::AttractorPruned {
            iteration: 2,
            attractor: 0
        }));
    }

    #[test]
    fn grow_budget_of_one_keeps_only_root() {
        let roi = full_roi(32, 32);
        let params = GrowthParams {
            max_nodes_m: 1,
            ..GrowthParams::default()
        };
        let tree = grow(&roi, &params, 50).unwrap();
        assert_eq!(tree.len(), 1);
        assert_eq!(tree.node(0).parent, None);
    }

    #[test]
    fn grow_segment_lengths_match_l() {
        let roi = full_roi(48, 48);
        let params = GrowthParams {
            attraction_radius_d: 12.0,
            kill_radius_k: 3.0,
            segment_length_l: 4.0,
            max_nodes_m: 300,
            seed: 21,
            ..GrowthParams::default()
        };
        let tree = grow(&roi, &params, 200).unwrap();
        assert!(tree.len() > 3, "expected some growth, got {}", tree.len());
        for node in tree.nodes().iter().skip(1) {
            let parent = tree.node(node.parent.unwrap());
            let len = node.position.distance(&parent.position);
            assert!((len - 4.0).abs() < 1e-6, "segment length {len}");
        }
    }

    #[test]
    fn grow_is_deterministic() {
        let roi = BinaryMask::from_fn(64, 64, |x, y| {
            let dx = f64::from(x) - 32.0;
            let dy = f64::from(y) - 32.0;
            dx * dx + dy * dy < 30.0 * 30.0
        });
        let params = GrowthParams {
            attraction_radius_d: 10.0,
            kill_radius_k: 4.0,
            segment_length_l: 3.0,
            max_nodes_m: 400,
            seed: 77,
            ..GrowthParams::default()
        };
        let a = grow(&roi, &params, 300).unwrap();
        let b = grow(&roi, &params, 300).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grow_terminates_under_printed_defaults() {
        // d=5, l=20: most attractors never associate; the stall rule must
        // still end the loop.
        let roi = full_roi(64, 64);
        let params = GrowthParams {
            seed: 3,
            ..GrowthParams::default()
        };
        let (tree, log) = grow_with_log(&roi, &params, 500).unwrap();
        assert!(tree.len() >= 1);
        assert!(log.iterations < 10_000);
    }

    #[test]
    fn default_root_sits_near_left_edge_midpoint() {
        let roi = BinaryMask::from_fn(20, 20, |x, y| (4..16).contains(&x) && (2..14).contains(&y));
        // Bounding box x in [4,15], y in [2,13]; left-edge midpoint (4, 8).
        let root = default_root(&roi).unwrap();
        assert_eq!(root, Point2::new(4.5, 7.5));
    }

    #[test]
    fn murray_two_leaves() {
        // Parent with two unit-radius leaf children: radius = 2^(1/3).
        let t = tree_of(&[
            (0.0, 0.0, None),
            (1.0, 1.0, Some(0)),
            (-1.0, 1.0, Some(0)),
        ]);
        let t = assign_radii(t, 1.0, 3.0);
        assert!((t.node(0).radius - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!((t.node(0).radius - 1.259921).abs() < 1e-6);
    }

    #[test]
    fn murray_chain_passes_radius_through() {
        let t = tree_of(&[(0.0, 0.0, None), (0.0, 1.0, Some(0)), (0.0, 2.0, Some(1))]);
        let t = assign_radii(t, 1.0, 3.0);
        for node in t.nodes() {
            assert_eq!(node.radius, 1.0);
        }
    }

    #[test]
    fn murray_symmetric_bifurcation() {
        for n in [2.0, 3.0, 4.0] {
            let t = tree_of(&[
                (0.0, 0.0, None),
                (1.0, 1.0, Some(0)),
                (-1.0, 1.0, Some(0)),
            ]);
            let r = 1.7;
            let t = assign_radii(t, r, n);
            assert!((t.node(0).radius - r * 2f64.powf(1.0 / n)).abs() < 1e-12);
        }
    }

    #[test]
    fn tree_validation_rejects_bad_structures() {
        assert!(VesselTree::from_nodes(vec![]).is_err());
        // Two roots.
        assert!(VesselTree::from_nodes(vec![
            TreeNode {
                position: Point2::new(0.0, 0.0),
                parent: None,
                radius: 0.0
            },
            TreeNode {
                position: Point2::new(1.0, 0.0),
                parent: None,
                radius: 0.0
            },
        ])
        .is_err());
        // Forward parent reference.
        assert!(VesselTree::from_nodes(vec![
            TreeNode {
                position: Point2::new(0.0, 0.0),
                parent: None,
                radius: 0.0
            },
            TreeNode {
                position: Point2::new(1.0, 0.0),
                parent: Some(1),
                radius: 0.0
            },
        ])
        .is_err());
    }
}
