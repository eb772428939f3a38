//! Zhang–Suen thinning.
//!
//! Neighbors are labelled clockwise from north:
//!
//! ```text
//!   P9 P2 P3
//!   P8 P1 P4
//!   P7 P6 P5
//! ```
//!
//! Pixels outside the raster count as background.

use super::BinaryImage;

/// Thin `img` to a fixed point of the two Zhang–Suen sub-iterations.
pub fn thin(img: &BinaryImage) -> BinaryImage {
    let mut out = img.clone();
    let mut candidates: Vec<(usize, usize)> = (0..img.height())
        .flat_map(|y| (0..img.width()).map(move |x| (x, y)))
        .filter(|&(x, y)| img.get(x, y))
        .collect();
    let mut doomed = Vec::new();
    loop {
        let mut changed = false;
        for first_pass in [true, false] {
            doomed.clear();
            doomed.extend(
                candidates
                    .iter()
                    .copied()
                    .filter(|&(x, y)| deletable(&out, x, y, first_pass)),
            );
            for &(x, y) in &doomed {
                out.set(x, y, false);
            }
            changed |= !doomed.is_empty();
            candidates.retain(|&(x, y)| out.get(x, y));
        }
        if !changed {
            return out;
        }
    }
}

fn neighbors(img: &BinaryImage, x: usize, y: usize) -> [bool; 8] {
    let at = |dx: isize, dy: isize| {
        let nx = x as isize + dx;
        let ny = y as isize + dy;
        nx >= 0
            && ny >= 0
            && (nx as usize) < img.width()
            && (ny as usize) < img.height()
            && img.get(nx as usize, ny as usize)
    };
    // P2..P9
    [
        at(0, -1),
        at(1, -1),
        at(1, 0),
        at(1, 1),
        at(0, 1),
        at(-1, 1),
        at(-1, 0),
        at(-1, -1),
    ]
}

fn deletable(img: &BinaryImage, x: usize, y: usize, first_pass: bool) -> bool {
    let p = neighbors(img, x, y);
    let set = p.iter().filter(|&&v| v).count();
    if !(2..=6).contains(&set) {
        return false;
    }
    let transitions = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
    if transitions != 1 {
        return false;
    }
    let [p2, _, p4, _, p6, _, p8, _] = p;
    if first_pass {
        !(p2 && p4 && p6) && !(p4 && p6 && p8)
    } else {
        !(p2 && p4 && p8) && !(p2 && p6 && p8)
    }
}
