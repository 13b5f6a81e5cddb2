//! Rasterization of vessel trees and the mask post-processing chain.
//!
//! A tree renders as a union of "uneven capsules": every parent-child segment
//! sweeps a disk whose radius interpolates linearly between the endpoint
//! radii. A pixel is painted when its center lies inside some swept disk.
//! [`make_structure_mask`] chains rasterization with threshold, largest
//! connected component, erosion, and ROI fit.

mod morph;

pub use morph::{component_count, dilate, erode, largest_component, Connectivity, StructElement};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colonize::{self, ColonizeError, GrowthParams, Point2, VesselTree};
use crate::image::{BinaryMask, GrayImage};

#[derive(Debug, Error, PartialEq)]
pub enum RasterError {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error(transparent)]
    Colonize(#[from] ColonizeError),
}

/// Coverage test for the tapered capsule from `a` (radius `ra`) to `b`
/// (radius `rb`): is `p` within the interpolated radius of some point on the
/// segment? The squared clearance `|p - c(t)|^2 - r(t)^2` is a quadratic in
/// `t`, so its minimum over `[0, 1]` is exact.
pub(crate) fn capsule_covers(p: Point2, a: Point2, b: Point2, ra: f64, rb: f64) -> bool {
    let ux = b.x - a.x;
    let uy = b.y - a.y;
    let dr = rb - ra;
    let wx = p.x - a.x;
    let wy = p.y - a.y;
    let qa = ux * ux + uy * uy - dr * dr;
    let qb = -2.0 * (wx * ux + wy * uy + ra * dr);
    let qc = wx * wx + wy * wy - ra * ra;
    let mut min = qc.min(qa + qb + qc);
    if qa > 0.0 {
        let t = -qb / (2.0 * qa);
        if t > 0.0 && t < 1.0 {
            min = min.min(qc - qb * qb / (4.0 * qa));
        }
    }
    min <= 0.0
}

/// Renders each parent-child segment as a tapered capsule. Painted pixels are
/// 1.0, background 0.0; geometry outside the canvas is clipped.
pub fn rasterize(t: &VesselTree, width: u32, height: u32) -> GrayImage {
    assert!(!t.is_empty(), "tree must be nonempty");
    let mut img = GrayImage::zeros(width, height);
    for node in t.nodes() {
        let Some(parent) = node.parent else { continue };
        let a = t.node(parent).position;
        let b = node.position;
        let (ra, rb) = (t.node(parent).radius, node.radius);
        let x_lo = (a.x - ra).min(b.x - rb).floor().max(0.0) as i64;
        let x_hi = (a.x + ra).max(b.x + rb).ceil().min(f64::from(width) - 1.0) as i64;
        let y_lo = (a.y - ra).min(b.y - rb).floor().max(0.0) as i64;
        let y_hi = (a.y + ra).max(b.y + rb).ceil().min(f64::from(height) - 1.0) as i64;
        if x_lo > x_hi || y_lo > y_hi {
            continue;
        }
        for y in y_lo..=y_hi {
            for x in x_lo..=x_hi {
                let center = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
                if capsule_covers(center, a, b, ra, rb) {
                    img.set(x as u32, y as u32, 1.0);
                }
            }
        }
    }
    img
}

/// Pixel is foreground iff its intensity is strictly greater than `t`.
pub fn threshold(img: &GrayImage, t: f64) -> BinaryMask {
    let (w, h) = img.dims();
    BinaryMask::from_data(w, h, img.data().iter().map(|&v| v > t).collect())
}

/// Pixel-wise AND of `m` and `roi`.
pub fn fit_to_roi(m: &BinaryMask, roi: &BinaryMask) -> Result<BinaryMask, RasterError> {
    if m.dims() != roi.dims() {
        return Err(RasterError::DimensionMismatch(
            m.width(),
            m.height(),
            roi.width(),
            roi.height(),
        ));
    }
    Ok(BinaryMask::from_data(
        m.width(),
        m.height(),
        m.data()
            .iter()
            .zip(roi.data())
            .map(|(&a, &b)| a && b)
            .collect(),
    ))
}

/// Post-processing configuration for [`make_structure_mask`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PostprocessParams {
    /// Rasterization threshold; 0 keeps every painted pixel.
    pub threshold: f64,
    pub connectivity: Connectivity,
    pub erosion_element: StructElement,
    pub erosion_iterations: usize,
    /// Drops terminal branches shorter than this before rasterizing.
    pub min_branch_length: Option<f64>,
}

impl Default for PostprocessParams {
    fn default() -> Self {
        Self {
            threshold: 0.0,
            connectivity: Connectivity::Eight,
            erosion_element: StructElement::Cross,
            erosion_iterations: 1,
            min_branch_length: None,
        }
    }
}

/// Removes terminal chains (leaf up to, exclusive, the first branching node
/// or the root) whose summed segment length is below `min_len`. Single pass
/// over the original topology.
pub fn prune_short_branches(t: &VesselTree, min_len: f64) -> VesselTree {
    let children = t.children_lists();
    let mut removed = vec![false; t.len()];
    for leaf in 0..t.len() {
        if !children[leaf].is_empty() {
            continue;
        }
        let mut chain = vec![leaf];
        let mut length = 0.0;
        let mut cur = leaf;
        while let Some(parent) = t.node(cur).parent {
            length += t.node(cur).position.distance(&t.node(parent).position);
            if children[parent].len() != 1 {
                break;
            }
            chain.push(parent);
            cur = parent;
        }
        if length < min_len {
            for i in chain {
                removed[i] = true;
            }
        }
    }
    let mut remap = vec![usize::MAX; t.len()];
    let mut nodes = Vec::new();
    for (i, node) in t.nodes().iter().enumerate() {
        if removed[i] {
            continue;
        }
        let mut kept = *node;
        kept.parent = node.parent.map(|p| remap[p]);
        remap[i] = nodes.len();
        nodes.push(kept);
    }
    VesselTree::from_nodes(nodes).expect("pruning keeps the root and parent order")
}

/// Full structure-mask pipeline: grow, assign radii, rasterize, threshold,
/// keep the largest component, erode, fit to the ROI. A final
/// largest-component pass restores coherence when erosion or the ROI cut
/// split the mask.
pub fn make_structure_mask(
    roi: &BinaryMask,
    growth: &GrowthParams,
    attractor_count: usize,
    post: &PostprocessParams,
) -> Result<BinaryMask, RasterError> {
    make_structure_mask_with_tree(roi, growth, attractor_count, post).map(|(mask, _)| mask)
}

/// [`make_structure_mask`] that also returns the radii-annotated tree
/// (for export alongside the mask).
pub fn make_structure_mask_with_tree(
    roi: &BinaryMask,
    growth: &GrowthParams,
    attractor_count: usize,
    post: &PostprocessParams,
) -> Result<(BinaryMask, VesselTree), RasterError> {
    let tree = colonize::grow(roi, growth, attractor_count)?;
    let tree = colonize::assign_radii(tree, growth.leaf_radius, growth.murray_exponent_n);
    let render_tree = match post.min_branch_length {
        Some(min_len) => prune_short_branches(&tree, min_len),
        None => tree.clone(),
    };
    let gray = rasterize(&render_tree, roi.width(), roi.height());
    let mask = threshold(&gray, post.threshold);
    let mask = largest_component(&mask, post.connectivity);
    let mask = erode(&mask, post.erosion_element, post.erosion_iterations);
    let mask = fit_to_roi(&mask, roi)?;
    Ok((largest_component(&mask, post.connectivity), tree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colonize::TreeNode;

    fn two_node_tree(a: (f64, f64), b: (f64, f64), ra: f64, rb: f64) -> VesselTree {
        VesselTree::from_nodes(vec![
            TreeNode {
                position: Point2::new(a.0, a.1),
                parent: None,
                radius: ra,
            },
            TreeNode {
                position: Point2::new(b.0, b.1),
                parent: Some(0),
                radius: rb,
            },
        ])
        .unwrap()
    }

    #[test]
    fn vertical_bar_has_expected_extent() {
        // Constant radius 1, length 10: a bar ~3 px wide and 10+2 px tall.
        let t = two_node_tree((8.0, 5.0), (8.0, 15.0), 1.0, 1.0);
        let img = rasterize(&t, 16, 24);
        let m = threshold(&img, 0.0);
        let xs: Vec<u32> = m.iter_foreground().map(|(x, _)| x).collect();
        let ys: Vec<u32> = m.iter_foreground().map(|(_, y)| y).collect();
        assert_eq!(*xs.iter().min().unwrap(), 7);
        assert_eq!(*xs.iter().max().unwrap(), 8);
        assert_eq!(*ys.iter().min().unwrap(), 4);
        assert_eq!(*ys.iter().max().unwrap(), 15);
        // Far corner untouched.
        assert!(!m.get(0, 23) && !m.get(15, 0));
    }

    #[test]
    fn tree_outside_canvas_renders_empty() {
        let t = two_node_tree((100.0, 100.0), (120.0, 100.0), 2.0, 2.0);
        let img = rasterize(&t, 16, 16);
        assert!(img.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn threshold_is_strict() {
        let img = GrayImage::from_data(2, 1, vec![0.6, 0.5]);
        let m = threshold(&img, 0.5);
        assert!(m.get(0, 0));
        assert!(!m.get(1, 0));
    }

    #[test]
    fn threshold_zero_keeps_nonzero() {
        let img = GrayImage::from_data(3, 1, vec![0.0, 1.0, 0.01]);
        let m = threshold(&img, 0.0);
        assert_eq!(m.data(), &[false, true, true]);
    }

    #[test]
    fn threshold_one_empties() {
        let img = GrayImage::from_data(2, 1, vec![1.0, 0.3]);
        assert_eq!(threshold(&img, 1.0).count_foreground(), 0);
    }

    #[test]
    fn fit_to_roi_masks_pixelwise() {
        let m = BinaryMask::from_fn(3, 1, |x, _| x < 2);
        let all = BinaryMask::from_fn(3, 1, |_, _| true);
        assert_eq!(fit_to_roi(&m, &all).unwrap(), m);
        let none = BinaryMask::new(3, 1);
        assert_eq!(fit_to_roi(&m, &none).unwrap().count_foreground(), 0);
        let roi = BinaryMask::from_fn(3, 1, |x, _| x != 0);
        let fitted = fit_to_roi(&m, &roi).unwrap();
        assert!(!fitted.get(0, 0) && fitted.get(1, 0));
        let bad = BinaryMask::new(2, 2);
        assert!(matches!(
            fit_to_roi(&m, &bad),
            Err(RasterError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn prune_drops_short_terminal_chain() {
        // Root -> a -> b (branch) -> long chain and short stub.
        let t = VesselTree::from_nodes(vec![
            TreeNode {
                position: Point2::new(0.0, 0.0),
                parent: None,
                radius: 0.0,
            },
            TreeNode {
                position: Point2::new(0.0, 4.0),
                parent: Some(0),
                radius: 0.0,
            },
            TreeNode {
                position: Point2::new(0.0, 8.0),
                parent: Some(1),
                radius: 0.0,
            },
            // short stub off node 2
            TreeNode {
                position: Point2::new(2.0, 8.0),
                parent: Some(2),
                radius: 0.0,
            },
            // longer branch off node 2
            TreeNode {
                position: Point2::new(0.0, 12.0),
                parent: Some(2),
                radius: 0.0,
            },
            TreeNode {
                position: Point2::new(0.0, 16.0),
                parent: Some(4),
                radius: 0.0,
            },
        ])
        .unwrap();
        let pruned = prune_short_branches(&t, 3.0);
        assert_eq!(pruned.len(), 5);
        assert!(pruned
            .nodes()
            .iter()
            .all(|n| n.position != Point2::new(2.0, 8.0)));
    }

    #[test]
    fn capsule_containment_degenerate_cases() {
        // Radius shrinks faster than the segment advances: union is the big disk.
        let a = Point2::new(5.0, 5.0);
        let b = Point2::new(6.0, 5.0);
        assert!(capsule_covers(Point2::new(1.5, 5.0), a, b, 4.0, 0.5));
        // Inside big disk but "behind" the segment.
        assert!(capsule_covers(Point2::new(2.0, 7.0), a, b, 4.0, 0.5));
        assert!(!capsule_covers(Point2::new(10.8, 5.0), a, b, 4.0, 0.5));
        // Zero-length segment behaves as a disk.
        assert!(capsule_covers(Point2::new(5.5, 5.0), a, a, 1.0, 1.0));
        assert!(!capsule_covers(Point2::new(6.5, 5.0), a, a, 1.0, 1.0));
    }
}
