//! 4-connected component labeling on row-major grids.

pub(crate) const UNLABELED: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct ComponentBox {
    pub min_x: usize,
    pub max_x: usize,
    pub min_y: usize,
    pub max_y: usize,
}

impl ComponentBox {
    pub fn width(&self) -> usize {
        self.max_x - self.min_x + 1
    }

    pub fn height(&self) -> usize {
        self.max_y - self.min_y + 1
    }
}

/// Labels 4-connected components of `key` among cells where `key` is `Some`;
/// neighbours join when their keys are equal. Labels are numbered in raster
/// order of each component's first cell.
pub(crate) fn label<K: PartialEq + Copy>(
    width: usize,
    height: usize,
    key: impl Fn(usize) -> Option<K>,
) -> (Vec<u32>, Vec<ComponentBox>) {
    let n = width * height;
    let mut labels = vec![UNLABELED; n];
    let mut boxes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if labels[start] != UNLABELED {
            continue;
        }
        let Some(k) = key(start) else { continue };
        let id = boxes.len() as u32;
        let (sx, sy) = (start % width, start / width);
        let mut bb = ComponentBox {
            min_x: sx,
            max_x: sx,
            min_y: sy,
            max_y: sy,
        };
        labels[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % width, i / width);
            bb.min_x = bb.min_x.min(x);
            bb.max_x = bb.max_x.max(x);
            bb.min_y = bb.min_y.min(y);
            bb.max_y = bb.max_y.max(y);
            let mut visit = |j: usize| {
                if labels[j] == UNLABELED && key(j) == Some(k) {
                    labels[j] = id;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < width {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - width);
            }
            if y + 1 < height {
                visit(i + width);
            }
        }
        boxes.push(bb);
    }
    (labels, boxes)
}
