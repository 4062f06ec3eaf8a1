//! Published evaluation results for the two tracker families, three lidar
//! detectors and five baseline processing targets, kept as reference data
//! for calibrating and checking the power model.

use serde::Serialize;

use super::{fit_profile, EnergyProfile, FitMethod, FitResult, ModelId};

/// Baseline processing targets n/m, in column order.
pub const BASELINE_TARGETS: [(u32, u32); 5] = [(1, 1), (1, 2), (1, 3), (1, 5), (1, 10)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrackerFamily {
    CasTrack,
    DeepFusionMot,
}

impl TrackerFamily {
    pub fn name(self) -> &'static str {
        match self {
            TrackerFamily::CasTrack => "CasTrack",
            TrackerFamily::DeepFusionMot => "DeepFusionMOT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    Baseline,
    Extension,
}

/// One detector's five columns. `None` marks cells the table leaves empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceSeries {
    pub tracker: TrackerFamily,
    pub mode: Mode,
    pub model: ModelId,
    /// Effective processing target, percent.
    pub effective_target: [Option<f64>; 5],
    pub mota: [Option<f64>; 5],
    pub motp: [Option<f64>; 5],
    pub hota: [Option<f64>; 5],
    pub draw_w: [Option<f64>; 5],
    pub yield_w: [Option<f64>; 5],
}

const fn full(v: [f64; 5]) -> [Option<f64>; 5] {
    [Some(v[0]), Some(v[1]), Some(v[2]), Some(v[3]), Some(v[4])]
}

const fn tail(v: [f64; 4]) -> [Option<f64>; 5] {
    [None, Some(v[0]), Some(v[1]), Some(v[2]), Some(v[3])]
}

use Mode::*;
use ModelId::*;
use TrackerFamily::*;

pub const TABLE: [ReferenceSeries; 12] = [
    ReferenceSeries {
        tracker: CasTrack,
        mode: Baseline,
        model: PointPillars,
        effective_target: full([100.0, 50.0, 33.0, 20.0, 10.0]),
        mota: full([81.2, 76.2, 53.0, 40.0, 30.9]),
        motp: full([87.8, 86.5, 85.5, 83.7, 81.4]),
        hota: full([74.9, 70.2, 61.4, 53.1, 42.8]),
        draw_w: full([396.0, 375.0, 313.0, 256.0, 221.0]),
        yield_w: tail([4.4, 6.2, 6.4, 5.5]),
    },
    ReferenceSeries {
        tracker: CasTrack,
        mode: Baseline,
        model: PvRcnn,
        effective_target: full([100.0, 50.0, 33.0, 20.0, 10.0]),
        mota: full([83.7, 77.7, 56.6, 42.2, 32.0]),
        motp: full([88.6, 87.6, 86.5, 84.7, 82.2]),
        hota: full([78.0, 72.9, 63.2, 56.7, 46.0]),
        draw_w: full([461.0, 384.0, 335.0, 295.0, 256.0]),
        yield_w: tail([15.0, 8.5, 7.8, 6.4]),
    },
    ReferenceSeries {
        tracker: CasTrack,
        mode: Baseline,
        model: Second,
        effective_target: full([100.0, 50.0, 33.0, 20.0, 10.0]),
        mota: full([83.0, 76.7, 54.1, 37.2, 29.0]),
        motp: full([87.4, 86.5, 85.4, 83.7, 81.0]),
        hota: full([77.0, 72.0, 62.6, 55.4, 44.5]),
        draw_w: full([494.0, 418.0, 349.0, 297.0, 241.0]),
        yield_w: tail([15.3, 10.1, 9.1, 7.8]),
    },
    ReferenceSeries {
        tracker: CasTrack,
        mode: Extension,
        model: PointPillars,
        effective_target: tail([55.0, 41.0, 30.0, 22.0]),
        mota: tail([76.7, 56.9, 51.6, 45.5]),
        motp: tail([86.6, 85.6, 84.6, 83.7]),
        hota: tail([70.4, 62.5, 57.7, 52.0]),
        draw_w: tail([378.0, 319.0, 266.0, 230.0]),
        yield_w: tail([7.3, 4.1, 6.2, 7.6]),
    },
    ReferenceSeries {
        tracker: CasTrack,
        mode: Extension,
        model: PvRcnn,
        effective_target: tail([55.0, 40.0, 30.0, 23.0]),
        mota: tail([77.9, 60.8, 52.7, 46.7]),
        motp: tail([87.6, 86.6, 85.4, 84.4]),
        hota: tail([73.0, 64.2, 59.7, 54.5]),
        draw_w: tail([388.0, 346.0, 306.0, 270.0]),
        yield_w: tail([8.1, 14.3, 8.3, 8.5]),
    },
    ReferenceSeries {
        tracker: CasTrack,
        mode: Extension,
        model: Second,
        effective_target: tail([54.0, 39.0, 29.0, 21.0]),
        mota: tail([77.4, 58.6, 50.9, 41.7]),
        motp: tail([86.5, 85.5, 84.3, 83.1]),
        hota: tail([72.2, 63.9, 59.3, 52.3]),
        draw_w: tail([423.0, 354.0, 302.0, 260.0]),
        yield_w: tail([9.5, 14.9, 10.7, 10.8]),
    },
    ReferenceSeries {
        tracker: DeepFusionMot,
        mode: Baseline,
        model: PointPillars,
        effective_target: full([100.0, 50.0, 33.0, 20.0, 10.0]),
        mota: full([76.5, 75.6, 64.7, 44.7, 5.4]),
        motp: full([78.2, 77.8, 77.1, 76.2, 76.1]),
        hota: full([66.0, 64.6, 58.9, 50.9, 37.4]),
        draw_w: full([399.0, 381.0, 315.0, 259.0, 225.0]),
        yield_w: tail([13.1, 11.8, 9.3, 6.1]),
    },
    ReferenceSeries {
        tracker: DeepFusionMot,
        mode: Baseline,
        model: PvRcnn,
        effective_target: full([100.0, 50.0, 33.0, 20.0, 10.0]),
        mota: full([74.2, 71.7, 62.2, 43.4, 4.5]),
        motp: full([78.9, 78.5, 77.8, 76.6, 76.2]),
        hota: full([66.5, 65.0, 59.5, 52.1, 39.4]),
        draw_w: full([464.0, 385.0, 338.0, 295.0, 261.0]),
        yield_w: tail([52.7, 18.0, 11.8, 7.5]),
    },
    ReferenceSeries {
        tracker: DeepFusionMot,
        mode: Baseline,
        model: Second,
        effective_target: full([100.0, 50.0, 33.0, 20.0, 10.0]),
        mota: full([70.8, 67.4, 58.1, 36.4, 0.0]),
        motp: full([78.2, 77.7, 77.0, 75.9, 75.5]),
        hota: full([64.6, 63.2, 58.4, 50.7, 37.9]),
        draw_w: full([477.0, 417.0, 349.0, 297.0, 247.0]),
        yield_w: tail([43.5, 20.4, 12.9, 8.6]),
    },
    ReferenceSeries {
        tracker: DeepFusionMot,
        mode: Extension,
        model: PointPillars,
        effective_target: tail([54.0, 39.0, 27.0, 19.0]),
        mota: tail([76.0, 69.4, 64.2, 50.5]),
        motp: tail([77.8, 77.4, 76.9, 76.0]),
        hota: tail([64.8, 60.9, 58.1, 51.4]),
        draw_w: tail([379.0, 316.0, 264.0, 228.0]),
        yield_w: tail([11.7, 16.9, 16.5, 17.1]),
    },
    ReferenceSeries {
        tracker: DeepFusionMot,
        mode: Extension,
        model: PvRcnn,
        effective_target: tail([55.0, 39.0, 28.0, 20.0]),
        mota: tail([72.6, 66.4, 61.0, 47.1]),
        motp: tail([78.5, 78.0, 77.4, 76.7]),
        hota: tail([65.2, 61.1, 58.9, 52.7]),
        draw_w: tail([389.0, 342.0, 300.0, 266.0]),
        yield_w: tail([14.4, 59.2, 22.8, 21.6]),
    },
    ReferenceSeries {
        tracker: DeepFusionMot,
        mode: Extension,
        model: Second,
        effective_target: tail([53.0, 38.0, 27.0, 18.0]),
        mota: tail([68.8, 63.3, 55.7, 40.5]),
        motp: tail([77.7, 77.2, 76.6, 75.6]),
        hota: tail([63.6, 60.0, 57.0, 51.2]),
        draw_w: tail([421.0, 355.0, 305.0, 261.0]),
        yield_w: tail([16.1, 52.7, 26.5, 22.4]),
    },
];

pub fn series(tracker: TrackerFamily, mode: Mode, model: ModelId) -> &'static ReferenceSeries {
    TABLE
        .iter()
        .find(|s| s.tracker == tracker && s.mode == mode && s.model == model)
        .expect("table covers every combination")
}

impl ReferenceSeries {
    /// (effective target as a fraction, draw) pairs of the filled columns.
    pub fn draw_observations(&self) -> Vec<(f64, f64)> {
        self.effective_target
            .iter()
            .zip(&self.draw_w)
            .filter_map(|(t, d)| Some((t.as_ref()? / 100.0, *d.as_ref()?)))
            .collect()
    }
}

/// Profile fitted to one baseline series.
pub fn fitted_profile(tracker: TrackerFamily, model: ModelId, method: FitMethod) -> FitResult {
    fit_profile(model, &series(tracker, Mode::Baseline, model).draw_observations(), method)
        .expect("reference draws admit a non-negative affine fit")
}

/// Shipped default: least-squares fit to the single-modality baseline.
pub fn default_profile(model: ModelId) -> EnergyProfile {
    fitted_profile(TrackerFamily::CasTrack, model, FitMethod::LeastSquares).profile
}
