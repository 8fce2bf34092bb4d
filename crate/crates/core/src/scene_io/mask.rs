use std::path::Path;

use super::class_table::{ClassId, ClassTable, VOID};
use super::png_io;
use crate::error::{Error, Result};

/// Row-major grid of class ids, one per pixel.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelMask {
    width: usize,
    height: usize,
    data: Vec<ClassId>,
}

impl LabelMask {
    pub fn new(width: usize, height: usize, data: Vec<ClassId>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroArea);
        }
        if data.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "mask data has {} cells, expected {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// A mask with every pixel set to `id`.
    ///
    /// Panics if either dimension is zero.
    pub fn filled(width: usize, height: usize, id: ClassId) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        Self {
            width,
            height,
            data: vec![id; width * height],
        }
    }

    /// Builds a mask from rows of equal length. Handy in tests.
    pub fn from_rows<R: AsRef<[ClassId]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(width * height);
        for r in rows {
            if r.as_ref().len() != width {
                return Err(Error::InvalidParameter("ragged mask rows".into()));
            }
            data.extend_from_slice(r.as_ref());
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[ClassId] {
        &self.data
    }

    pub fn into_data(self) -> Vec<ClassId> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> ClassId {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, id: ClassId) {
        self.data[y * self.width + x] = id;
    }

    pub fn row(&self, y: usize) -> &[ClassId] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn count(&self, id: ClassId) -> usize {
        self.data.iter().filter(|&&c| c == id).count()
    }

    /// Distinct class ids present, ascending.
    pub fn classes(&self) -> Vec<ClassId> {
        let mut seen = [false; 256];
        for &c in &self.data {
            seen[c as usize] = true;
        }
        (0..=255u8).filter(|&c| seen[c as usize]).collect()
    }

    /// Left-right mirror image.
    pub fn mirrored(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            data.extend(self.row(y).iter().rev());
        }
        Self { data, ..*self }
    }

    /// Replaces every id unknown to `table` with [`VOID`]; returns how many
    /// pixels changed.
    pub fn remap_unknown(&mut self, table: &ClassTable) -> usize {
        let mut n = 0;
        for c in &mut self.data {
            if !table.contains(*c) {
                *c = VOID;
                n += 1;
            }
        }
        n
    }
}

#[derive(Clone, Debug)]
pub struct LoadedMask {
    pub mask: LabelMask,
    /// Pixels whose value was not in the class table and became void.
    pub remap_count: usize,
}

pub fn load_mask(path: impl AsRef<Path>, table: &ClassTable) -> Result<LoadedMask> {
    let (w, h, data) = png_io::read_gray8(path.as_ref())?;
    let mut mask = LabelMask::new(w, h, data)?;
    let remap_count = mask.remap_unknown(table);
    Ok(LoadedMask { mask, remap_count })
}

pub fn save_mask(mask: &LabelMask, path: impl AsRef<Path>) -> Result<()> {
    let bytes = png_io::encode_gray8(mask.width, mask.height, &mask.data)?;
    png_io::write_atomic(path.as_ref(), &bytes)
}

/// Sets pixels of `filtered`-category classes to void. Kept classes and the
/// dimensions are untouched.
pub fn filter_classes(mask: &LabelMask, table: &ClassTable) -> LabelMask {
    let mut lut = [0u8; 256];
    for (i, v) in lut.iter_mut().enumerate() {
        let id = i as ClassId;
        *v = if table.is_filtered(id) { VOID } else { id };
    }
    LabelMask {
        data: mask.data.iter().map(|&c| lut[c as usize]).collect(),
        ..*mask
    }
}
