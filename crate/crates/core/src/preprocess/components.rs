//! 8-connected component labelling and the largest component's bounds.
//!
//! The extreme points of a component's outer contour are its minimum and
//! maximum row and column, so the bounding box of the largest component is
//! exactly the box spanned by the extreme points of the largest contour.

use super::raster::{BinaryMask, BoundingBox};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComponentBox {
    pub bbox: BoundingBox,
    /// Pixel count of the selected component (0 for the fallback).
    pub area: usize,
    /// True when the mask was empty and the whole frame was returned.
    pub fallback: bool,
}

/// Picks the component with the most pixels; ties go to the component
/// containing the earliest pixel in row-major order.
pub fn largest_component_bbox(mask: &BinaryMask) -> ComponentBox {
    let (w, h) = (mask.width(), mask.height());
    let bits = mask.bits();
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut best: Option<ComponentBox> = None;

    for start in 0..w * h {
        if !bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut area = 0;
        let mut b = BoundingBox { top: start / w, bottom: start / w, left: start % w, right: start % w };
        while let Some(i) = stack.pop() {
            area += 1;
            let (x, y) = (i % w, i / w);
            b.top = b.top.min(y);
            b.bottom = b.bottom.max(y);
            b.left = b.left.min(x);
            b.right = b.right.max(x);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if bits[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if best.is_none_or(|cur| area > cur.area) {
            best = Some(ComponentBox { bbox: b, area, fallback: false });
        }
    }

    best.unwrap_or(ComponentBox { bbox: BoundingBox::full(w, h), area: 0, fallback: true })
}
