//! Binary erosion and dilation with a 3×3 square element.
//!
//! Pixels outside the frame count as background for both operations, so
//! erosion eats into shapes touching the border while dilation never grows
//! anything from outside.

use super::raster::BinaryMask;

fn neighbourhood(mask: &BinaryMask, x: usize, y: usize) -> impl Iterator<Item = Option<bool>> + '_ {
    (-1isize..=1).flat_map(move |dy| {
        (-1isize..=1).map(move |dx| {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx < 0 || ny < 0 || nx >= mask.width() as isize || ny >= mask.height() as isize {
                None
            } else {
                Some(mask.get(nx as usize, ny as usize))
            }
        })
    })
}

/// One pass: `erode` keeps a pixel when its whole neighbourhood is set,
/// otherwise a pixel is set when any neighbour is.
fn step(mask: &BinaryMask, erode: bool) -> BinaryMask {
    BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
        let mut it = neighbourhood(mask, x, y);
        if erode {
            it.all(|v| v == Some(true))
        } else {
            it.any(|v| v == Some(true))
        }
    })
    .expect("same dims as the source")
}

pub fn erode(mask: &BinaryMask, iterations: usize) -> BinaryMask {
    let mut out = mask.clone();
    for _ in 0..iterations {
        out = step(&out, true);
    }
    out
}

pub fn dilate(mask: &BinaryMask, iterations: usize) -> BinaryMask {
    let mut out = mask.clone();
    for _ in 0..iterations {
        out = step(&out, false);
    }
    out
}
