//! Zhang–Suen thinning to a 1-pixel-wide, 8-connected skeleton.

use crate::image::BinaryMask;

/// The two sub-passes of one Zhang–Suen iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThinningPass {
    First,
    Second,
}

/// Neighbors P2..P9 clockwise from north.
fn neighbors(m: &BinaryMask, x: u32, y: u32) -> [bool; 8] {
    let (xi, yi) = (i64::from(x), i64::from(y));
    [
        m.get_or_bg(xi, yi - 1),     // P2 N
        m.get_or_bg(xi + 1, yi - 1), // P3 NE
        m.get_or_bg(xi + 1, yi),     // P4 E
        m.get_or_bg(xi + 1, yi + 1), // P5 SE
        m.get_or_bg(xi, yi + 1),     // P6 S
        m.get_or_bg(xi - 1, yi + 1), // P7 SW
        m.get_or_bg(xi - 1, yi),     // P8 W
        m.get_or_bg(xi - 1, yi - 1), // P9 NW
    ]
}

/// True when the Zhang–Suen conditions delete the (foreground) pixel in the
/// given sub-pass: 2..=6 foreground neighbors, exactly one 0→1 transition
/// around the ring, and the pass-specific background requirements.
pub fn removable(m: &BinaryMask, x: u32, y: u32, pass: ThinningPass) -> bool {
    if !m.get(x, y) {
        return false;
    }
    let n = neighbors(m, x, y);
    let count = n.iter().filter(|&&v| v).count();
    if !(2..=6).contains(&count) {
        return false;
    }
    let transitions = (0..8).filter(|&i| !n[i] && n[(i + 1) % 8]).count();
    if transitions != 1 {
        return false;
    }
    let (p2, p4, p6, p8) = (n[0], n[2], n[4], n[6]);
    match pass {
        ThinningPass::First => (!p2 || !p4 || !p6) && (!p4 || !p6 || !p8),
        ThinningPass::Second => (!p2 || !p4 || !p8) && (!p2 || !p6 || !p8),
    }
}

/// Morphological thinning (Zhang–Suen) to a 1-px-wide skeleton. The result
/// is a subset of the input and preserves 8-connectivity of each component.
pub fn skeletonize(m: &BinaryMask) -> BinaryMask {
    let mut mask = m.clone();
    let (w, h) = mask.dims();
    let mut to_delete = Vec::new();
    loop {
        let mut changed = false;
        for pass in [ThinningPass::First, ThinningPass::Second] {
            to_delete.clear();
            for y in 0..h {
                for x in 0..w {
                    if removable(&mask, x, y, pass) {
                        to_delete.push((x, y));
                    }
                }
            }
            for &(x, y) in &to_delete {
                mask.set(x, y, false);
            }
            changed |= !to_delete.is_empty();
        }
        if !changed {
            return mask;
        }
    }
}
