//! Exact Euclidean distance transform (Felzenszwalb–Huttenlocher).
//!
//! Distances are measured between pixel centers; all intermediate values are
//! integers represented in `f64`, so results are exact and safe to compare
//! with brute force bit-for-bit.

use crate::image::BinaryMask;

const INF: f64 = f64::INFINITY;

/// 1-D squared distance transform under the parabola envelope. `f` holds the
/// per-position base costs (squared vertical distances or `INF`).
fn dt_1d(f: &[f64], out: &mut [f64], hull_sites: &mut Vec<usize>, hull_bounds: &mut Vec<f64>) {
    hull_sites.clear();
    hull_bounds.clear();
    for (q, &fq) in f.iter().enumerate() {
        if !fq.is_finite() {
            continue;
        }
        let qf = q as f64;
        loop {
            match hull_sites.last() {
                None => {
                    hull_sites.push(q);
                    hull_bounds.push(-INF);
                    break;
                }
                Some(&p) => {
                    let pf = p as f64;
                    let s = ((fq + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf);
                    if s <= *hull_bounds.last().unwrap() {
                        hull_sites.pop();
                        hull_bounds.pop();
                    } else {
                        hull_sites.push(q);
                        hull_bounds.push(s);
                        break;
                    }
                }
            }
        }
    }
    if hull_sites.is_empty() {
        out.fill(INF);
        return;
    }
    let mut k = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while k + 1 < hull_sites.len() && hull_bounds[k + 1] < qf {
            k += 1;
        }
        let p = hull_sites[k] as f64;
        *slot = (qf - p) * (qf - p) + f[hull_sites[k]];
    }
}

/// Squared Euclidean distance from every pixel to the nearest site pixel.
/// Pixels with no site anywhere get `INF`.
pub(crate) fn squared_distance_to_sites(
    width: u32,
    height: u32,
    site: impl Fn(u32, u32) -> bool,
) -> Vec<f64> {
    let (w, h) = (width as usize, height as usize);
    let mut grid = vec![INF; w * h];

    // Column pass: squared distance to the nearest site in the same column.
    for x in 0..w {
        let mut last_site: Option<usize> = None;
        for y in 0..h {
            if site(x as u32, y as u32) {
                grid[y * w + x] = 0.0;
                last_site = Some(y);
            } else if let Some(s) = last_site {
                let d = (y - s) as f64;
                grid[y * w + x] = d * d;
            }
        }
        last_site = None;
        for y in (0..h).rev() {
            if grid[y * w + x] == 0.0 {
                last_site = Some(y);
            } else if let Some(s) = last_site {
                let d = (s - y) as f64;
                grid[y * w + x] = grid[y * w + x].min(d * d);
            }
        }
    }

    // Row pass: combine columns with the parabola envelope.
    let mut f = vec![INF; w];
    let mut row_out = vec![INF; w];
    let mut hull_sites = Vec::with_capacity(w);
    let mut hull_bounds = Vec::with_capacity(w);
    for y in 0..h {
        f.copy_from_slice(&grid[y * w..(y + 1) * w]);
        dt_1d(&f, &mut row_out, &mut hull_sites, &mut hull_bounds);
        grid[y * w..(y + 1) * w].copy_from_slice(&row_out);
    }
    grid
}

/// Distance from each foreground pixel to the nearest background pixel
/// (`0.0` on background, `INF` when the mask has no background at all).
pub fn radius_map(m: &BinaryMask) -> Vec<f64> {
    let sq = squared_distance_to_sites(m.width(), m.height(), |x, y| !m.get(x, y));
    m.data()
        .iter()
        .zip(sq)
        .map(|(&fg, d)| if fg { d.sqrt() } else { 0.0 })
        .collect()
}
