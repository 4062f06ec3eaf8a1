//! Projects a car into the image and compares it against nearby boxes in the
//! image plane and from above.

use framedrop::geometry::{bev_iou, iou_2d, overlap_3d, project_box3d};
use framedrop::scenario::synthetic_calibration;
use framedrop::{AssociationMetric, Box3D, Dims};
use nalgebra::Vector3;

fn main() -> framedrop::Result<()> {
    let calib = synthetic_calibration();
    let car = Box3D::new(Vector3::new(0.0, 1.65, 12.0), Dims::new(1.5, 1.6, 3.9), 0.0)?;
    let hull = project_box3d(&car, &calib).expect("car is in front of the camera");
    println!("car at 12 m projects to {hull:?} ({:.0} px tall)", hull.height());

    for (label, offset, yaw) in [
        ("shifted 0.5 m", Vector3::new(0.5, 0.0, 0.0), 0.0),
        ("shifted 2 m", Vector3::new(2.0, 0.0, 0.0), 0.0),
        ("turned 90 deg", Vector3::zeros(), std::f64::consts::FRAC_PI_2),
    ] {
        let other = Box3D {
            yaw,
            ..car.translated(offset)
        };
        let image = project_box3d(&other, &calib).map_or(0.0, |h| iou_2d(&hull, &h));
        println!(
            "{label:>14}: image IoU {image:.3}, BEV IoU {:.3}, centroid distance {:.2} m",
            bev_iou(&car, &other),
            overlap_3d(&car, &other, AssociationMetric::CentroidDistance),
        );
    }

    let behind = car.translated(Vector3::new(0.0, 0.0, -20.0));
    println!("box behind the camera projects to {:?}", project_box3d(&behind, &calib));
    Ok(())
}
