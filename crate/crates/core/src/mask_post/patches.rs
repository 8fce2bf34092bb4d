use crate::components;
use crate::scene_io::{LabelMask, VOID};

/// Side of the square a patch's bounding box must fit in to be ignored.
/// Zero disables the filter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatchFilterConfig {
    pub patch_size: usize,
}

impl PatchFilterConfig {
    pub const DEFAULT_PATCH_SIZE: usize = 12;

    pub fn new(patch_size: usize) -> Self {
        Self { patch_size }
    }

    pub fn disabled() -> Self {
        Self { patch_size: 0 }
    }
}

impl Default for PatchFilterConfig {
    fn default() -> Self {
        Self::new(Self::DEFAULT_PATCH_SIZE)
    }
}

/// Binary grid of pixels excluded from evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IgnoreMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl IgnoreMask {
    pub fn none(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<bool>) -> Self {
        assert_eq!(data.len(), width * height, "ignore mask size");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn union(&self, other: &IgnoreMask) -> IgnoreMask {
        assert_eq!(self.dims(), other.dims(), "ignore mask dimensions differ");
        IgnoreMask {
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a || *b).collect(),
            ..*self
        }
    }
}

/// Marks every 4-connected single-class component of a non-void class whose
/// bounding box fits inside `patch_size x patch_size` (inclusive). The mask
/// itself is not modified.
pub fn suppress_small_patches(mask: &LabelMask, cfg: PatchFilterConfig) -> IgnoreMask {
    let (w, h) = mask.dims();
    let mut ignore = IgnoreMask::none(w, h);
    let l = cfg.patch_size;
    if l == 0 {
        return ignore;
    }
    let data = mask.data();
    let (labels, boxes) = components::label(w, h, |i| (data[i] != VOID).then_some(data[i]));
    let small: Vec<bool> = boxes
        .iter()
        .map(|b| b.width() <= l && b.height() <= l)
        .collect();
    for (i, &lab) in labels.iter().enumerate() {
        if lab != components::UNLABELED && small[lab as usize] {
            ignore.data[i] = true;
        }
    }
    ignore
}

/// Rendering variant of the patch filter: small patches become void.
pub fn scrub_small_patches(mask: &LabelMask, cfg: PatchFilterConfig) -> LabelMask {
    let ignore = suppress_small_patches(mask, cfg);
    let (w, _) = mask.dims();
    let mut out = mask.clone();
    for (i, &ign) in ignore.data().iter().enumerate() {
        if ign {
            out.set(i % w, i / w, VOID);
        }
    }
    out
}
