//! Binary morphology and connected-component labeling.
//!
//! Out-of-bounds pixels count as background for both erosion and dilation,
//! so foreground touching the border erodes away.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::image::BinaryMask;

/// Pixel adjacency for component labeling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    pub fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Connectivity::Four => &[(0, -1), (-1, 0), (1, 0), (0, 1)],
            Connectivity::Eight => &[
                (-1, -1),
                (0, -1),
                (1, -1),
                (-1, 0),
                (1, 0),
                (-1, 1),
                (0, 1),
                (1, 1),
            ],
        }
    }
}

/// 3x3 structuring element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructElement {
    Cross,
    Square,
}

impl StructElement {
    pub fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            StructElement::Cross => &[(0, 0), (0, -1), (-1, 0), (1, 0), (0, 1)],
            StructElement::Square => &[
                (-1, -1),
                (0, -1),
                (1, -1),
                (-1, 0),
                (0, 0),
                (1, 0),
                (-1, 1),
                (0, 1),
                (1, 1),
            ],
        }
    }
}

fn erode_once(m: &BinaryMask, se: StructElement) -> BinaryMask {
    let (w, h) = m.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        se.offsets()
            .iter()
            .all(|&(dx, dy)| m.get_or_bg(i64::from(x) + dx, i64::from(y) + dy))
    })
}

fn dilate_once(m: &BinaryMask, se: StructElement) -> BinaryMask {
    let (w, h) = m.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        se.offsets()
            .iter()
            .any(|&(dx, dy)| m.get_or_bg(i64::from(x) + dx, i64::from(y) + dy))
    })
}

/// Iterated binary erosion; `iterations == 0` is the identity.
pub fn erode(m: &BinaryMask, se: StructElement, iterations: usize) -> BinaryMask {
    let mut out = m.clone();
    for _ in 0..iterations {
        out = erode_once(&out, se);
    }
    out
}

/// Iterated binary dilation; `iterations == 0` is the identity.
pub fn dilate(m: &BinaryMask, se: StructElement, iterations: usize) -> BinaryMask {
    let mut out = m.clone();
    for _ in 0..iterations {
        out = dilate_once(&out, se);
    }
    out
}

/// Flood-fill labels in row-major discovery order. Returns per-pixel labels
/// (`usize::MAX` for background) and the pixel count of each component.
pub(crate) fn label_components(m: &BinaryMask, conn: Connectivity) -> (Vec<usize>, Vec<usize>) {
    let (w, h) = m.dims();
    let (wu, hu) = (w as usize, h as usize);
    let mut labels = vec![usize::MAX; wu * hu];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..wu * hu {
        if !m.data()[start] || labels[start] != usize::MAX {
            continue;
        }
        let label = sizes.len();
        sizes.push(0);
        labels[start] = label;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            sizes[label] += 1;
            let x = (idx % wu) as i64;
            let y = (idx / wu) as i64;
            for &(dx, dy) in conn.offsets() {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= i64::from(w) || ny >= i64::from(h) {
                    continue;
                }
                let nidx = ny as usize * wu + nx as usize;
                if m.data()[nidx] && labels[nidx] == usize::MAX {
                    labels[nidx] = label;
                    queue.push_back(nidx);
                }
            }
        }
    }
    (labels, sizes)
}

/// Number of connected components.
pub fn component_count(m: &BinaryMask, conn: Connectivity) -> usize {
    label_components(m, conn).1.len()
}

/// Keeps only the component with the most pixels. Size ties go to the
/// component discovered first in row-major order (the one containing the
/// top-left-most pixel). An empty mask stays empty.
pub fn largest_component(m: &BinaryMask, conn: Connectivity) -> BinaryMask {
    let (labels, sizes) = label_components(m, conn);
    // First label achieving the max size wins; labels are created in
    // row-major discovery order, which implements the tie-break.
    let Some(best) = sizes
        .iter()
        .enumerate()
        .fold(None::<(usize, usize)>, |best, (label, &size)| match best {
            Some((_, bs)) if size <= bs => best,
            _ => Some((label, size)),
        })
        .map(|(label, _)| label)
    else {
        return BinaryMask::new(m.width(), m.height());
    };
    let (w, h) = m.dims();
    let wu = w as usize;
    BinaryMask::from_fn(w, h, |x, y| labels[y as usize * wu + x as usize] == best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from_rows(rows: &[&str]) -> BinaryMask {
        let h = rows.len() as u32;
        let w = rows[0].len() as u32;
        BinaryMask::from_fn(w, h, |x, y| {
            rows[y as usize].as_bytes()[x as usize] == b'1'
        })
    }

    #[test]
    fn erode_solid_square_with_cross_keeps_center() {
        let m = mask_from_rows(&["111", "111", "111"]);
        let e = erode(&m, StructElement::Cross, 1);
        assert_eq!(e.count_foreground(), 1);
        assert!(e.get(1, 1));
    }

    #[test]
    fn erode_zero_iterations_is_identity() {
        let m = mask_from_rows(&["10", "01"]);
        assert_eq!(erode(&m, StructElement::Square, 0), m);
    }

    #[test]
    fn erosion_never_adds_pixels() {
        let m = mask_from_rows(&["0110", "1111", "0110"]);
        for se in [StructElement::Cross, StructElement::Square] {
            for iters in 0..3 {
                assert!(erode(&m, se, iters).is_subset_of(&m));
            }
        }
    }

    #[test]
    fn largest_component_keeps_bigger_blob() {
        // 5-pixel blob (top-left) and 3-pixel blob (bottom-right), 8-conn.
        let m = mask_from_rows(&[
            "110000", //
            "110000", //
            "100000", //
            "000011", //
            "000010", //
            "000000",
        ]);
        let keep = largest_component(&m, Connectivity::Eight);
        assert_eq!(keep.count_foreground(), 5);
        assert!(keep.get(0, 0) && keep.get(0, 2));
        assert!(!keep.get(4, 3));
    }

    #[test]
    fn largest_component_is_idempotent_on_single_blob() {
        let m = mask_from_rows(&["0110", "0110"]);
        assert_eq!(largest_component(&m, Connectivity::Four), m);
    }

    #[test]
    fn diagonal_pixels_connectivity() {
        let m = mask_from_rows(&["10", "01"]);
        assert_eq!(component_count(&m, Connectivity::Eight), 1);
        assert_eq!(component_count(&m, Connectivity::Four), 2);
        // Under 4-connectivity only one pixel survives; ties go to the
        // component containing the top-left-most pixel.
        let keep = largest_component(&m, Connectivity::Four);
        assert_eq!(keep.count_foreground(), 1);
        assert!(keep.get(0, 0));
    }

    #[test]
    fn largest_component_of_empty_is_empty() {
        let m = BinaryMask::new(4, 3);
        assert_eq!(largest_component(&m, Connectivity::Eight), m);
    }
}
