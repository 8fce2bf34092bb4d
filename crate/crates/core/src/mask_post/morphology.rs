use crate::error::{Error, Result};
use crate::scene_io::{LabelMask, VOID};

pub const DEFAULT_CLOSING_KERNEL: usize = 3;

/// For every cell, whether any (`want_all == false`) or all (`true`) in-bounds
/// cells within `r` along one axis are set. `stride`/`len`/`lines`/`step`
/// describe the axis walk over the row-major buffer.
fn axis_pass(
    src: &[bool],
    len: usize,
    lines: usize,
    stride: usize,
    step: usize,
    r: usize,
    want_all: bool,
) -> Vec<bool> {
    let mut out = vec![false; src.len()];
    let mut prefix = vec![0usize; len + 1];
    for line in 0..lines {
        let base = line * step;
        for i in 0..len {
            prefix[i + 1] = prefix[i] + src[base + i * stride] as usize;
        }
        for i in 0..len {
            let lo = i.saturating_sub(r);
            let hi = (i + r).min(len - 1);
            let set = prefix[hi + 1] - prefix[lo];
            out[base + i * stride] = if want_all {
                set == hi + 1 - lo
            } else {
                set > 0
            };
        }
    }
    out
}

fn square_pass(src: &[bool], width: usize, height: usize, r: usize, want_all: bool) -> Vec<bool> {
    let horiz = axis_pass(src, width, height, 1, width, r, want_all);
    axis_pass(&horiz, height, width, width, 1, r, want_all)
}

/// Binary closing with a `kernel x kernel` square. Pixels outside the image
/// take part in neither the dilation nor the erosion, so the result always
/// contains the input.
pub fn close_binary(src: &[bool], width: usize, height: usize, kernel: usize) -> Result<Vec<bool>> {
    check_kernel(kernel)?;
    assert_eq!(src.len(), width * height);
    let r = kernel / 2;
    if r == 0 {
        return Ok(src.to_vec());
    }
    let dilated = square_pass(src, width, height, r, false);
    Ok(square_pass(&dilated, width, height, r, true))
}

fn check_kernel(kernel: usize) -> Result<()> {
    if kernel == 0 || kernel.is_multiple_of(2) {
        return Err(Error::InvalidKernel(kernel as i64));
    }
    Ok(())
}

/// Closes each non-void class in ascending id order and paints the result
/// onto a copy of the mask, so higher ids win where closings overlap.
pub fn close_mask(mask: &LabelMask, kernel: usize) -> Result<LabelMask> {
    check_kernel(kernel)?;
    if kernel == 1 {
        return Ok(mask.clone());
    }
    let (w, h) = mask.dims();
    let mut out = mask.clone();
    for class in mask.classes() {
        if class == VOID {
            continue;
        }
        let bin: Vec<bool> = mask.data().iter().map(|&c| c == class).collect();
        let closed = close_binary(&bin, w, h, kernel)?;
        for (i, &on) in closed.iter().enumerate() {
            if on {
                out.set(i % w, i / w, class);
            }
        }
    }
    Ok(out)
}
