//! Box types, pinhole projection and overlap measures.
//!
//! 3D boxes follow the KITTI label convention: coordinates are in the
//! rectified camera frame (x right, y down, z forward) and `location` is the
//! bottom-center of the box, `yaw` the rotation about the camera y axis.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Matrix3x4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Corners closer than this to the image plane are clipped away.
pub const NEAR_PLANE: f64 = 0.1;

/// Wraps an angle into (−π, π].
pub fn normalize_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let r = angle.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dims {
    pub height: f64,
    pub width: f64,
    pub length: f64,
}

impl Dims {
    pub fn new(height: f64, width: f64, length: f64) -> Self {
        Self {
            height,
            width,
            length,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.height > 0.0 && self.width > 0.0 && self.length > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    /// Bottom-center of the box.
    pub location: Vector3<f64>,
    pub dims: Dims,
    pub yaw: f64,
}

impl Box3D {
    /// Builds a box and normalizes its yaw. Fails on non-positive dimensions.
    pub fn new(location: Vector3<f64>, dims: Dims, yaw: f64) -> Result<Self> {
        if !dims.is_valid() {
            return Err(Error::Geometry(format!(
                "box dimensions must be positive, got {dims:?}"
            )));
        }
        if !location.iter().all(|v| v.is_finite()) || !yaw.is_finite() {
            return Err(Error::Geometry("non-finite box pose".into()));
        }
        Ok(Self {
            location,
            dims,
            yaw: normalize_angle(yaw),
        })
    }

    /// Builds a box from its geometric center rather than its bottom-center.
    pub fn from_center(center: Vector3<f64>, dims: Dims, yaw: f64) -> Result<Self> {
        let location = Vector3::new(center.x, center.y + dims.height / 2.0, center.z);
        Self::new(location, dims, yaw)
    }

    pub fn center(&self) -> Vector3<f64> {
        Vector3::new(
            self.location.x,
            self.location.y - self.dims.height / 2.0,
            self.location.z,
        )
    }

    fn rotate(&self, local: Vector3<f64>) -> Vector3<f64> {
        let (s, c) = self.yaw.sin_cos();
        Vector3::new(c * local.x + s * local.z, local.y, -s * local.x + c * local.z)
    }

    /// The eight corners; indices 0..4 form the bottom face, 4..8 the top
    /// face, with corner `i + 4` directly above corner `i`.
    pub fn corners(&self) -> [Vector3<f64>; 8] {
        let (hl, hw, h) = (
            self.dims.length / 2.0,
            self.dims.width / 2.0,
            self.dims.height,
        );
        let footprint = [(hl, hw), (hl, -hw), (-hl, -hw), (-hl, hw)];
        let mut out = [Vector3::zeros(); 8];
        for (i, &(x, z)) in footprint.iter().enumerate() {
            out[i] = self.location + self.rotate(Vector3::new(x, 0.0, z));
            out[i + 4] = self.location + self.rotate(Vector3::new(x, -h, z));
        }
        out
    }

    /// Bird's-eye-view footprint in the (x, z) plane, counter-clockwise.
    pub fn footprint(&self) -> [(f64, f64); 4] {
        let c = self.corners();
        let mut pts = [(c[0].x, c[0].z), (c[1].x, c[1].z), (c[2].x, c[2].z), (c[3].x, c[3].z)];
        if signed_area(&pts) < 0.0 {
            pts.reverse();
        }
        pts
    }

    pub fn translated(&self, offset: Vector3<f64>) -> Self {
        Self {
            location: self.location + offset,
            ..*self
        }
    }
}

/// Axis-aligned image-plane box in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box2D {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Box2D {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let b = Self {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        if b.is_valid() {
            Ok(b)
        } else {
            Err(Error::Geometry(format!("degenerate 2D box {b:?}")))
        }
    }

    pub fn is_valid(&self) -> bool {
        self.x_min < self.x_max && self.y_min < self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.x_min && u <= self.x_max && v >= self.y_min && v <= self.y_max
    }

    pub fn translated(&self, du: f64, dv: f64) -> Self {
        Self {
            x_min: self.x_min + du,
            y_min: self.y_min + dv,
            x_max: self.x_max + du,
            y_max: self.y_max + dv,
        }
    }
}

/// Camera calibration for the left color camera.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Projects rectified camera coordinates to pixels.
    pub projection: Matrix3x4<f64>,
    pub rectification: Matrix3<f64>,
    pub lidar_to_cam: Matrix3x4<f64>,
    /// Image width and height in pixels; projected hulls are clipped to it.
    pub image_size: (f64, f64),
}

/// KITTI color camera resolution.
pub const KITTI_IMAGE_SIZE: (f64, f64) = (1242.0, 375.0);

impl Calibration {
    pub fn new(
        projection: Matrix3x4<f64>,
        rectification: Matrix3<f64>,
        lidar_to_cam: Matrix3x4<f64>,
    ) -> Result<Self> {
        let calib = Self {
            projection,
            rectification,
            lidar_to_cam,
            image_size: KITTI_IMAGE_SIZE,
        };
        calib.validate()?;
        Ok(calib)
    }

    /// Ideal pinhole camera with identity rectification and extrinsics.
    pub fn pinhole(focal: f64, cx: f64, cy: f64, image_size: (f64, f64)) -> Self {
        #[rustfmt::skip]
        let projection = Matrix3x4::new(
            focal, 0.0, cx, 0.0,
            0.0, focal, cy, 0.0,
            0.0, 0.0, 1.0, 0.0,
        );
        Self {
            projection,
            rectification: Matrix3::identity(),
            lidar_to_cam: Matrix3x4::identity(),
            image_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rank = self.projection.rank(1e-9);
        if rank != 3 {
            return Err(Error::Geometry(format!("projection matrix has rank {rank}")));
        }
        let r = &self.rectification;
        let deviation = (r.transpose() * r - Matrix3::identity()).amax();
        if deviation > 1e-6 {
            return Err(Error::Geometry(format!(
                "rectification is not orthonormal (deviation {deviation:.3e})"
            )));
        }
        Ok(())
    }

    pub fn focal_length(&self) -> f64 {
        self.projection[(0, 0)]
    }

    /// Maps a lidar point into the rectified camera frame.
    pub fn lidar_to_rect(&self, point: Vector3<f64>) -> Vector3<f64> {
        let cam = self.lidar_to_cam * Vector4::new(point.x, point.y, point.z, 1.0);
        self.rectification * cam
    }

    /// Pixel coordinates of a rectified-camera point; `None` at or behind the
    /// camera center.
    pub fn project_point(&self, p: Vector3<f64>) -> Option<(f64, f64)> {
        let h = self.projection * Vector4::new(p.x, p.y, p.z, 1.0);
        if h.z <= 0.0 {
            return None;
        }
        Some((h.x / h.z, h.y / h.z))
    }
}

/// Projects a 3D box into the image as the axis-aligned hull of its visible
/// part, clipped to the image bounds.
///
/// The box is first clipped against the plane `z = NEAR_PLANE` so corners
/// behind the camera never contribute sign-flipped pixels. Returns `None`
/// when no corner lies in front of that plane or when the hull misses the
/// image entirely.
pub fn project_box3d(b: &Box3D, calib: &Calibration) -> Option<Box2D> {
    const EDGES: [(usize, usize); 12] = [
        (0, 1), (1, 2), (2, 3), (3, 0),
        (4, 5), (5, 6), (6, 7), (7, 4),
        (0, 4), (1, 5), (2, 6), (3, 7),
    ];
    let corners = b.corners();
    if !corners.iter().any(|c| c.z > NEAR_PLANE) {
        return None;
    }

    let mut visible: Vec<Vector3<f64>> = corners
        .iter()
        .copied()
        .filter(|c| c.z >= NEAR_PLANE)
        .collect();
    for &(i, j) in &EDGES {
        let (a, c) = (corners[i], corners[j]);
        if (a.z < NEAR_PLANE) != (c.z < NEAR_PLANE) {
            let t = (NEAR_PLANE - a.z) / (c.z - a.z);
            visible.push(a + (c - a) * t);
        }
    }

    let mut hull = Box2D {
        x_min: f64::INFINITY,
        y_min: f64::INFINITY,
        x_max: f64::NEG_INFINITY,
        y_max: f64::NEG_INFINITY,
    };
    for p in visible {
        let (u, v) = calib.project_point(p)?;
        hull.x_min = hull.x_min.min(u);
        hull.y_min = hull.y_min.min(v);
        hull.x_max = hull.x_max.max(u);
        hull.y_max = hull.y_max.max(v);
    }

    let (w, h) = calib.image_size;
    if hull.x_max < 0.0 || hull.y_max < 0.0 || hull.x_min > w || hull.y_min > h {
        return None;
    }
    Some(Box2D {
        x_min: hull.x_min.clamp(0.0, w),
        y_min: hull.y_min.clamp(0.0, h),
        x_max: hull.x_max.clamp(0.0, w),
        y_max: hull.y_max.clamp(0.0, h),
    })
}

/// Intersection over union of two image boxes. Zero when the union is empty.
pub fn iou_2d(a: &Box2D, b: &Box2D) -> f64 {
    let iw = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let ih = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssociationMetric {
    BevIou,
    CentroidDistance,
}

impl FromStr for AssociationMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bev-iou" => Ok(Self::BevIou),
            "centroid-distance" => Ok(Self::CentroidDistance),
            other => Err(Error::config(
                "association_metric",
                format!("unknown metric `{other}` (expected bev-iou or centroid-distance)"),
            )),
        }
    }
}

impl fmt::Display for AssociationMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::BevIou => "bev-iou",
            Self::CentroidDistance => "centroid-distance",
        })
    }
}

/// Overlap between two 3D boxes: BEV IoU in [0, 1] or centroid distance in
/// meters, depending on `metric`.
pub fn overlap_3d(a: &Box3D, b: &Box3D, metric: AssociationMetric) -> f64 {
    match metric {
        AssociationMetric::BevIou => bev_iou(a, b),
        AssociationMetric::CentroidDistance => (a.center() - b.center()).norm(),
    }
}

/// Yaw-aware bird's-eye-view IoU (no height term).
pub fn bev_iou(a: &Box3D, b: &Box3D) -> f64 {
    let pa = a.footprint();
    let pb = b.footprint();
    let inter = convex_intersection_area(&pa, &pb);
    let union = a.dims.length * a.dims.width + b.dims.length * b.dims.width - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

fn signed_area(poly: &[(f64, f64)]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (x0, y0) = poly[i];
            let (x1, y1) = poly[(i + 1) % n];
            x0 * y1 - x1 * y0
        })
        .sum::<f64>()
        / 2.0
}

/// Area of the intersection of two counter-clockwise convex polygons
/// (Sutherland–Hodgman clipping).
pub fn convex_intersection_area(subject: &[(f64, f64)], clip: &[(f64, f64)]) -> f64 {
    let mut output: Vec<(f64, f64)> = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        let inside = |p: (f64, f64)| (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= 0.0;
        let input = std::mem::take(&mut output);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            match (inside(prev), inside(cur)) {
                (true, true) => output.push(cur),
                (true, false) => output.push(line_intersection(prev, cur, a, b)),
                (false, true) => {
                    output.push(line_intersection(prev, cur, a, b));
                    output.push(cur);
                }
                (false, false) => {}
            }
        }
    }
    if output.len() < 3 {
        0.0
    } else {
        signed_area(&output).abs()
    }
}

fn line_intersection(p: (f64, f64), q: (f64, f64), a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    let (ex, ey) = (b.0 - a.0, b.1 - a.1);
    let denom = dx * ey - dy * ex;
    if denom.abs() < 1e-15 {
        return q;
    }
    let t = ((a.0 - p.0) * ey - (a.1 - p.1) * ex) / denom;
    (p.0 + t * dx, p.1 + t * dy)
}
