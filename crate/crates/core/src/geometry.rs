//! Axis-aligned face boxes and detection quality attributes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Face box in continuous pixel coordinates: left, top, width, height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct BBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

impl TryFrom<RawBox> for BBox {
    type Error = Error;

    fn try_from(raw: RawBox) -> Result<Self> {
        BBox::new(raw.x, raw.y, raw.w, raw.h)
    }
}

impl From<BBox> for RawBox {
    fn from(b: BBox) -> Self {
        RawBox {
            x: b.x,
            y: b.y,
            w: b.w,
            h: b.h,
        }
    }
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(Error::InvalidBox(format!(
                "non-finite coordinate in ({x}, {y}, {w}, {h})"
            )));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::InvalidBox(format!(
                "width and height must be positive, got {w}x{h}"
            )));
        }
        Ok(Self { x, y, w, h })
    }

    /// Box of the given size centred on `(cx, cy)`.
    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        Self::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn width(&self) -> f64 {
        self.w
    }

    pub fn height(&self) -> f64 {
        self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Same size, translated so the centre lands on `(cx, cy)`.
    pub fn recentered(&self, cx: f64, cy: f64) -> Self {
        Self {
            x: cx - self.w / 2.0,
            y: cy - self.h / 2.0,
            w: self.w,
            h: self.h,
        }
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let iw = self.right().min(other.right()) - self.x.max(other.x);
        let ih = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }
}

/// Intersection over union of two boxes, in `[0, 1]`.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Face quality indicators supplied by the upstream detector and pose/blur estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityAttrs {
    pub det_confidence: f64,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub blur: f64,
}

impl QualityAttrs {
    /// Checks every field against its range. On failure returns the offending field name.
    pub fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let unit = |name: &'static str, v: f64| {
            if v.is_finite() && (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err((name, format!("{v} is outside [0, 1]")))
            }
        };
        let angle = |name: &'static str, v: f64| {
            if v.is_finite() && (-180.0..=180.0).contains(&v) {
                Ok(())
            } else {
                Err((name, format!("{v} is outside [-180, 180]")))
            }
        };
        unit("confidence", self.det_confidence)?;
        angle("yaw", self.yaw)?;
        angle("pitch", self.pitch)?;
        angle("roll", self.roll)?;
        unit("blur", self.blur)?;
        Ok(())
    }

    /// Largest absolute head-pose angle.
    pub fn max_abs_angle(&self) -> f64 {
        self.yaw.abs().max(self.pitch.abs()).max(self.roll.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x: f64, y: f64, w: f64, h: f64) -> BBox {
        BBox::new(x, y, w, h).unwrap()
    }

    #[test]
    fn iou_identity() {
        let a = b(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
    }

    #[test]
    fn iou_disjoint() {
        assert_eq!(
            iou(&b(0.0, 0.0, 10.0, 10.0), &b(100.0, 100.0, 5.0, 5.0)),
            0.0
        );
    }

    #[test]
    fn iou_half_shift() {
        // 50 shared cells out of 150 on the pixel grid.
        let v = iou(&b(0.0, 0.0, 10.0, 10.0), &b(5.0, 0.0, 10.0, 10.0));
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn touching_edges_do_not_overlap() {
        assert_eq!(
            iou(&b(0.0, 0.0, 10.0, 10.0), &b(10.0, 0.0, 10.0, 10.0)),
            0.0
        );
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(BBox::new(0.0, 0.0, 0.0, 5.0).is_err());
        assert!(BBox::new(0.0, 0.0, 5.0, -1.0).is_err());
        assert!(BBox::new(f64::NAN, 0.0, 5.0, 5.0).is_err());
        assert!(BBox::new(0.0, f64::INFINITY, 5.0, 5.0).is_err());
    }

    #[test]
    fn quality_check_names_field() {
        let q = QualityAttrs {
            det_confidence: 0.9,
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
            blur: 1.5,
        };
        assert_eq!(q.check().unwrap_err().0, "blur");
        let q = QualityAttrs {
            yaw: -181.0,
            blur: 0.5,
            ..q
        };
        assert_eq!(q.check().unwrap_err().0, "yaw");
    }

    #[test]
    fn serde_rejects_invalid_box() {
        let err = serde_json::from_str::<BBox>(r#"{"x":0,"y":0,"w":0,"h":1}"#);
        assert!(err.is_err());
    }
}
