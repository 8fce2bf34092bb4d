//! Overlay rendering: class-coloured base, translucent zone bands and
//! detection boxes outlined in their criticality colour.

use crate::error::Result;
use crate::scene_io::png_io;
use crate::scene_io::{ClassId, LabelMask, VOID};
use crate::violation::{Criticality, ViolationReport};
use crate::scene_io::DetectionSet;
use crate::zones::{Zone, ZoneRaster};

/// Zone tint opacity, in percent.
pub const TINT_ALPHA_PERCENT: u32 = 35;
pub const OUTLINE_PX: usize = 2;

const PALETTE: [[u8; 3]; 19] = [
    [128, 64, 128],
    [244, 35, 232],
    [70, 70, 70],
    [192, 0, 128],
    [190, 153, 153],
    [153, 153, 153],
    [250, 170, 30],
    [220, 220, 0],
    [107, 142, 35],
    [152, 251, 152],
    [70, 130, 180],
    [220, 20, 60],
    [230, 150, 140],
    [0, 0, 142],
    [0, 0, 70],
    [90, 40, 40],
    [0, 80, 100],
    [0, 254, 254],
    [0, 68, 63],
];

pub fn class_color(id: ClassId) -> [u8; 3] {
    match id {
        VOID => [0, 0, 0],
        i if (i as usize) < PALETTE.len() => PALETTE[i as usize],
        i => {
            let i = i as u32;
            [(i * 37 % 256) as u8, (i * 91 % 256) as u8, (i * 173 % 256) as u8]
        }
    }
}

pub fn zone_color(z: Zone) -> Option<[u8; 3]> {
    match z {
        Zone::None => None,
        Zone::Yellow => Some(Criticality::Yellow.rgb()),
        Zone::Orange => Some(Criticality::Orange.rgb()),
        Zone::Red => Some(Criticality::Red.rgb()),
    }
}

/// RGB image, row-major, 3 bytes per pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rgb {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Rgb {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    fn put(&mut self, x: usize, y: usize, c: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&c);
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        png_io::encode_rgb8(self.width, self.height, &self.data)
    }
}

fn blend(base: [u8; 3], tint: [u8; 3]) -> [u8; 3] {
    let a = TINT_ALPHA_PERCENT;
    let mix = |b: u8, t: u8| ((b as u32 * (100 - a) + t as u32 * a + 50) / 100) as u8;
    [mix(base[0], tint[0]), mix(base[1], tint[1]), mix(base[2], tint[2])]
}

/// Renders the overlay. Dimensions equal the mask's.
pub fn render_overlay(
    mask: &LabelMask,
    zones: &ZoneRaster,
    dets: &DetectionSet,
    report: &ViolationReport,
) -> Rgb {
    let (w, h) = mask.dims();
    let mut img = Rgb {
        width: w,
        height: h,
        data: Vec::with_capacity(w * h * 3),
    };
    for (&c, &z) in mask.data().iter().zip(zones.data()) {
        let base = class_color(c);
        let px = zone_color(z).map_or(base, |t| blend(base, t));
        img.data.extend_from_slice(&px);
    }
    for v in &report.verdicts {
        let b = &dets.detections[v.detection_index].bbox;
        let clamp_x = |x: f64| (x.round().max(0.0) as usize).min(w - 1);
        let clamp_y = |y: f64| (y.round().max(0.0) as usize).min(h - 1);
        outline(
            &mut img,
            (clamp_x(b.x), clamp_y(b.y)),
            (clamp_x(b.right()), clamp_y(b.bottom())),
            v.criticality.rgb(),
        );
    }
    img
}

/// Rectangle outline `OUTLINE_PX` thick, drawn inward from the corners.
fn outline(img: &mut Rgb, (x0, y0): (usize, usize), (x1, y1): (usize, usize), c: [u8; 3]) {
    for y in y0..=y1 {
        for x in x0..=x1 {
            let edge = x < x0 + OUTLINE_PX
                || x + OUTLINE_PX > x1
                || y < y0 + OUTLINE_PX
                || y + OUTLINE_PX > y1;
            if edge {
                img.put(x, y, c);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene_io::{BBox, ClassTable, Detection};
    use crate::violation::{classify, ViolationPolicy};
    use crate::zones::CriticalZoneMap;

    #[test]
    fn blend_is_integer_alpha() {
        assert_eq!(blend([0, 0, 0], [255, 255, 255]), [89, 89, 89]);
        assert_eq!(blend([100, 100, 100], [100, 100, 100]), [100, 100, 100]);
    }

    #[test]
    fn outline_and_tint() {
        let mask = LabelMask::filled(20, 10, 9);
        let mut zones = ZoneRaster::new(20, 10);
        for y in 0..10 {
            zones.raise(10, y, Zone::Red);
        }
        let zmap = CriticalZoneMap {
            boundaries: vec![],
            raster: zones,
        };
        let t = ClassTable::default_table();
        let ds = DetectionSet::new(
            vec![Detection::new("person", BBox::new(8.0, 2.0, 6.0, 6.0), 1.0)],
            (20, 10),
            &t,
        );
        let report = classify(&ds, &zmap, &t, &ViolationPolicy::default()).unwrap();
        let img = render_overlay(&mask, &zmap.raster, &ds, &report);
        assert_eq!((img.width, img.height, img.data.len()), (20, 10, 600));
        let red = Criticality::Red.rgb();
        assert_eq!(img.pixel(8, 2), red);
        assert_eq!(img.pixel(9, 5), red);
        assert_eq!(img.pixel(14, 8), red);
        // Interior of the box, off the zone column: plain class colour.
        assert_eq!(img.pixel(11, 5), class_color(9));
        assert_eq!(img.pixel(10, 0), blend(class_color(9), red));
        assert_eq!(img.pixel(0, 0), class_color(9));
    }
}
