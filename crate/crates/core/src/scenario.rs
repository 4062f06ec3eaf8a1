//! Synthetic scenarios: scripted agents with occlusion windows, rendered into
//! noisy lidar and camera detection streams in place of real detectors.
//!
//! Every random draw comes from a ChaCha stream keyed by
//! `(seed, stream, agent, frame)`, so changing one agent or one frame never
//! perturbs the draws of another.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, project_box3d, Box2D, Box3D, Calibration, Dims, KITTI_IMAGE_SIZE};
use crate::kitti::{
    assemble_sequence, ground_truth_tracks, observation_angle, Detection2D, Detection3D, FrameBundle, GroundTruth,
    KittiRecord, ObjectClass,
};
use crate::CYCLE_TIME_S;

/// Camera height above the road in KITTI; ground-level boxes sit at this y.
pub const GROUND_Y: f64 = 1.65;

pub fn synthetic_calibration() -> Calibration {
    Calibration::pinhole(720.0, 621.0, 187.5, KITTI_IMAGE_SIZE)
}

pub fn default_dims(class: ObjectClass) -> Dims {
    match class {
        ObjectClass::Car => Dims::new(1.5, 1.6, 3.9),
        ObjectClass::Pedestrian => Dims::new(1.75, 0.6, 0.8),
        ObjectClass::Cyclist => Dims::new(1.75, 0.6, 1.8),
        ObjectClass::Other => Dims::new(2.5, 2.0, 6.0),
    }
}

fn ground_y() -> f64 {
    GROUND_Y
}

/// Bottom-center position and heading in rectified camera coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub x: f64,
    #[serde(default = "ground_y")]
    pub y: f64,
    pub z: f64,
    #[serde(default)]
    pub yaw: f64,
}

/// Velocity change taking effect `from_age` frames after spawn. m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocitySegment {
    pub from_age: u32,
    pub vx: f64,
    pub vz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VelocityProfile {
    Constant { vx: f64, vz: f64 },
    Piecewise { segments: Vec<VelocitySegment> },
}

impl Default for VelocityProfile {
    fn default() -> Self {
        VelocityProfile::Constant { vx: 0.0, vz: 0.0 }
    }
}

impl VelocityProfile {
    fn at_age(&self, age: u32) -> (f64, f64) {
        match self {
            VelocityProfile::Constant { vx, vz } => (*vx, *vz),
            VelocityProfile::Piecewise { segments } => segments
                .iter()
                .take_while(|s| s.from_age <= age)
                .last()
                .map_or((0.0, 0.0), |s| (s.vx, s.vz)),
        }
    }
}

/// Frames `[start_frame, end_frame)` in which the agent is hidden from both
/// sensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcclusionWindow {
    pub start_frame: u32,
    pub end_frame: u32,
}

impl OcclusionWindow {
    pub fn contains(&self, frame: u32) -> bool {
        (self.start_frame..self.end_frame).contains(&frame)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub class: ObjectClass,
    pub spawn_frame: u32,
    /// Frames alive; until the end of the scenario when absent.
    #[serde(default)]
    pub lifetime_frames: Option<u32>,
    pub pose: Pose,
    #[serde(default)]
    pub velocity: VelocityProfile,
    #[serde(default)]
    pub occlusions: Vec<OcclusionWindow>,
    /// Class default when absent.
    #[serde(default)]
    pub dims: Option<Dims>,
}

impl AgentSpec {
    fn end_frame(&self, duration: u32) -> u32 {
        self.lifetime_frames
            .map_or(duration, |l| self.spawn_frame.saturating_add(l).min(duration))
    }

    fn occluded(&self, frame: u32) -> bool {
        self.occlusions.iter().any(|w| w.contains(frame))
    }
}

/// Region false positives are drawn from, in camera coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingVolume {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Default for SensingVolume {
    fn default() -> Self {
        Self {
            x_min: -20.0,
            x_max: 20.0,
            z_min: 5.0,
            z_max: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Per-axis σ of the box position, meters.
    pub position_sigma: f64,
    /// σ of each box dimension, meters.
    pub dimension_sigma: f64,
    /// σ of the heading, radians.
    pub yaw_sigma: f64,
    pub lidar_recall: f64,
    pub camera_recall: f64,
    /// Mean false positives per frame.
    pub lidar_fp_rate: f64,
    pub camera_fp_rate: f64,
    /// Score ranges for true and false detections.
    pub tp_score: (f64, f64),
    pub fp_score: (f64, f64),
    pub fp_volume: SensingVolume,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            position_sigma: 0.0,
            dimension_sigma: 0.0,
            yaw_sigma: 0.0,
            lidar_recall: 1.0,
            camera_recall: 1.0,
            lidar_fp_rate: 0.0,
            camera_fp_rate: 0.0,
            tp_score: (0.9, 0.9),
            fp_score: (0.3, 0.6),
            fp_volume: SensingVolume::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub duration_frames: u32,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_name() -> String {
    "0000".into()
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.duration_frames == 0 {
            return Err(Error::config("duration_frames", "must be positive"));
        }
        let n = &self.noise;
        for (field, v) in [("noise.lidar_recall", n.lidar_recall), ("noise.camera_recall", n.camera_recall)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(field, format!("recall must lie in [0, 1], got {v}")));
            }
        }
        for (field, v) in [
            ("noise.position_sigma", n.position_sigma),
            ("noise.dimension_sigma", n.dimension_sigma),
            ("noise.yaw_sigma", n.yaw_sigma),
            ("noise.lidar_fp_rate", n.lidar_fp_rate),
            ("noise.camera_fp_rate", n.camera_fp_rate),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        for (field, (lo, hi)) in [("noise.tp_score", n.tp_score), ("noise.fp_score", n.fp_score)] {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(Error::config(field, format!("need 0 <= lo <= hi <= 1, got ({lo}, {hi})")));
            }
        }
        let v = &n.fp_volume;
        if !(v.x_min < v.x_max && v.z_min < v.z_max && v.z_min > 0.0) {
            return Err(Error::config("noise.fp_volume", "need x_min < x_max and 0 < z_min < z_max"));
        }
        for (i, a) in self.agents.iter().enumerate() {
            let field = |f: &str| format!("agents[{i}].{f}");
            if a.spawn_frame >= self.duration_frames {
                return Err(Error::config(field("spawn_frame"), "must precede the end of the scenario"));
            }
            if a.lifetime_frames == Some(0) {
                return Err(Error::config(field("lifetime_frames"), "must be positive"));
            }
            if let Some(d) = a.dims {
                if !d.is_valid() {
                    return Err(Error::config(field("dims"), "dimensions must be positive"));
                }
            }
            let end = a.end_frame(self.duration_frames);
            for w in &a.occlusions {
                if w.start_frame >= w.end_frame || w.start_frame < a.spawn_frame || w.end_frame > end {
                    return Err(Error::config(
                        field("occlusions"),
                        format!("window [{}, {}) outside lifetime [{}, {end})", w.start_frame, w.end_frame, a.spawn_frame),
                    ));
                }
            }
            if let VelocityProfile::Piecewise { segments } = &a.velocity {
                if segments.windows(2).any(|s| s[0].from_age >= s[1].from_age) {
                    return Err(Error::config(field("velocity"), "segments must be ordered by from_age"));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Self = toml::from_str(text).map_err(|e| Error::Toml(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }
}

/// A generated sequence: labels plus both detection streams.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub frames: usize,
    pub calibration: Calibration,
    /// Ground truth rows as they would appear in a label file.
    pub labels: Vec<KittiRecord>,
    pub ground_truth: GroundTruth,
    pub lidar: Vec<Vec<Detection3D>>,
    pub camera: Vec<Vec<Detection2D>>,
}

impl Scenario {
    pub fn bundles(&self) -> Vec<FrameBundle> {
        assemble_sequence(&self.name, self.lidar.clone(), self.camera.clone(), self.frames, CYCLE_TIME_S)
    }
}

#[derive(Clone, Copy)]
enum Stream {
    LidarAgent = 0,
    CameraAgent = 1,
    LidarClutter = 2,
    CameraClutter = 3,
}

const CLUTTER: u32 = u32::MAX >> 4;

fn rng_for(seed: u64, stream: Stream, agent: u32, frame: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 60) | ((agent as u64 & 0x0fff_ffff) << 32) | frame as u64);
    rng
}

fn gauss(rng: &mut impl Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).expect("validated sigma").sample(rng)
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn perturb(b: &Box3D, noise: &NoiseSpec, rng: &mut impl Rng) -> Box3D {
    let offset = Vector3::new(
        gauss(rng, noise.position_sigma),
        gauss(rng, noise.position_sigma),
        gauss(rng, noise.position_sigma),
    );
    let jitter = |v: f64, rng: &mut _| (v + gauss(rng, noise.dimension_sigma)).max(0.1 * v);
    let dims = Dims::new(
        jitter(b.dims.height, rng),
        jitter(b.dims.width, rng),
        jitter(b.dims.length, rng),
    );
    let yaw = normalize_angle(b.yaw + gauss(rng, noise.yaw_sigma));
    Box3D {
        location: b.location + offset,
        dims,
        yaw,
    }
}

/// Fraction of the unclipped image footprint falling outside the image.
fn truncation(b: &Box3D, calib: &Calibration, clipped: &Box2D) -> f64 {
    let mut pts = Vec::with_capacity(8);
    for c in b.corners() {
        match calib.project_point(c) {
            Some(p) if c.z > crate::geometry::NEAR_PLANE => pts.push(p),
            _ => return 1.0,
        }
    }
    let (mut u0, mut v0, mut u1, mut v1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (u, v) in pts {
        u0 = u0.min(u);
        v0 = v0.min(v);
        u1 = u1.max(u);
        v1 = v1.max(v);
    }
    let full = (u1 - u0) * (v1 - v0);
    if full <= 0.0 {
        return 1.0;
    }
    (1.0 - clipped.area() / full).clamp(0.0, 1.0)
}

/// Ground-truth box of every agent for every frame of its lifetime.
fn trajectories(spec: &ScenarioSpec) -> Vec<Vec<(u32, Box3D)>> {
    spec.agents
        .iter()
        .map(|a| {
            let dims = a.dims.unwrap_or_else(|| default_dims(a.class));
            let mut pos = Vector3::new(a.pose.x, a.pose.y, a.pose.z);
            let mut out = Vec::new();
            for frame in a.spawn_frame..a.end_frame(spec.duration_frames) {
                let age = frame - a.spawn_frame;
                if age > 0 {
                    let (vx, vz) = a.velocity.at_age(age - 1);
                    pos += Vector3::new(vx, 0.0, vz) * CYCLE_TIME_S;
                }
                out.push((
                    frame,
                    Box3D {
                        location: pos,
                        dims,
                        yaw: normalize_angle(a.pose.yaw),
                    },
                ));
            }
            out
        })
        .collect()
}

fn clutter_box(rng: &mut impl Rng, noise: &NoiseSpec) -> Box3D {
    let v = &noise.fp_volume;
    let x = rng.random_range(v.x_min..v.x_max);
    let z = rng.random_range(v.z_min..v.z_max);
    let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    Box3D {
        location: Vector3::new(x, GROUND_Y, z),
        dims: default_dims(ObjectClass::Car),
        yaw: normalize_angle(yaw),
    }
}

fn clutter_count(rng: &mut impl Rng, rate: f64) -> u64 {
    if rate == 0.0 {
        return 0;
    }
    Poisson::new(rate).expect("validated rate").sample(rng) as u64
}

pub fn generate(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let calib = synthetic_calibration();
    let frames = spec.duration_frames as usize;
    let noise = &spec.noise;
    let mut labels = Vec::new();
    let mut lidar = vec![Vec::new(); frames];
    let mut camera = vec![Vec::new(); frames];

    for (id, (agent, traj)) in spec.agents.iter().zip(trajectories(spec)).enumerate() {
        for (frame, truth) in traj {
            // Outside the camera field of view the agent is neither labeled
            // nor detected.
            let Some(box2d) = project_box3d(&truth, &calib) else { continue };
            let occluded = agent.occluded(frame);
            labels.push(KittiRecord {
                frame,
                track_id: id as i64,
                type_name: agent.class.kitti_name().to_string(),
                truncated: truncation(&truth, &calib, &box2d),
                occluded: if occluded { 3 } else { 0 },
                alpha: observation_angle(&truth),
                bbox: [box2d.x_min, box2d.y_min, box2d.x_max, box2d.y_max],
                dims: [truth.dims.height, truth.dims.width, truth.dims.length],
                location: [truth.location.x, truth.location.y, truth.location.z],
                rotation_y: truth.yaw,
                score: None,
            });
            if occluded {
                continue;
            }
            let f = frame as usize;
            let mut rng = rng_for(spec.rng_seed, Stream::LidarAgent, id as u32, frame);
            if rng.random::<f64>() < noise.lidar_recall {
                let b = perturb(&truth, noise, &mut rng);
                let score = uniform(&mut rng, noise.tp_score);
                lidar[f].push(Detection3D {
                    class: agent.class,
                    box3d: b,
                    box2d_hint: project_box3d(&b, &calib),
                    score,
                });
            }
            let mut rng = rng_for(spec.rng_seed, Stream::CameraAgent, id as u32, frame);
            if rng.random::<f64>() < noise.camera_recall {
                let b = perturb(&truth, noise, &mut rng);
                let score = uniform(&mut rng, noise.tp_score);
                if let Some(box2d) = project_box3d(&b, &calib) {
                    camera[f].push(Detection2D {
                        class: agent.class,
                        box2d,
                        score,
                    });
                }
            }
        }
    }

    for frame in 0..spec.duration_frames {
        let f = frame as usize;
        let mut rng = rng_for(spec.rng_seed, Stream::LidarClutter, CLUTTER, frame);
        for _ in 0..clutter_count(&mut rng, noise.lidar_fp_rate) {
            let b = clutter_box(&mut rng, noise);
            let score = uniform(&mut rng, noise.fp_score);
            lidar[f].push(Detection3D {
                class: ObjectClass::Car,
                box3d: b,
                box2d_hint: project_box3d(&b, &calib),
                score,
            });
        }
        let mut rng = rng_for(spec.rng_seed, Stream::CameraClutter, CLUTTER, frame);
        for _ in 0..clutter_count(&mut rng, noise.camera_fp_rate) {
            let b = clutter_box(&mut rng, noise);
            let score = uniform(&mut rng, noise.fp_score);
            if let Some(box2d) = project_box3d(&b, &calib) {
                camera[f].push(Detection2D {
                    class: ObjectClass::Car,
                    box2d,
                    score,
                });
            }
        }
    }

    labels.sort_by_key(|r| r.frame);
    let ground_truth = ground_truth_tracks(&labels)?;
    Ok(Scenario {
        name: spec.name.clone(),
        frames,
        calibration: calib,
        labels,
        ground_truth,
        lidar,
        camera,
    })
}

/// Frame at which the canned late-detection vehicle leaves its occlusion.
pub const LATE_DETECTION_FRAME: u32 = 36;

/// One vehicle crossing from the left about 12 m ahead, hidden until
/// [`LATE_DETECTION_FRAME`]. Noise-free.
pub fn late_detection_scenario() -> ScenarioSpec {
    late_detection_scenario_at(LATE_DETECTION_FRAME, 12.0)
}

/// The late-detection vehicle emerging at `appear_frame`, `depth` meters
/// ahead of the camera.
pub fn late_detection_scenario_at(appear_frame: u32, depth: f64) -> ScenarioSpec {
    // Crossing at 4 m/s; emerges 6 m left of the optical axis.
    let speed = 4.0;
    let hidden = 6;
    let spawn = appear_frame.saturating_sub(hidden);
    let hidden_frames = appear_frame - spawn;
    let x0 = -6.0 * depth / 12.0 - speed * CYCLE_TIME_S * hidden_frames as f64;
    ScenarioSpec {
        name: "late-detection".into(),
        duration_frames: appear_frame + 34,
        agents: vec![AgentSpec {
            class: ObjectClass::Car,
            spawn_frame: spawn,
            lifetime_frames: None,
            pose: Pose {
                x: x0,
                y: GROUND_Y,
                z: depth,
                yaw: 0.0,
            },
            velocity: VelocityProfile::Constant { vx: speed, vz: 0.0 },
            occlusions: if hidden_frames > 0 {
                vec![OcclusionWindow {
                    start_frame: spawn,
                    end_frame: appear_frame,
                }]
            } else {
                Vec::new()
            },
            dims: None,
        }],
        noise: NoiseSpec::default(),
        rng_seed: 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UrbanParams {
    pub duration_frames: u32,
    /// Mean frames between near-field appearances.
    pub appearance_interval: f64,
    /// Vehicles driving ahead beyond the trigger range.
    pub far_vehicles: u32,
    pub seed: u64,
}

impl Default for UrbanParams {
    fn default() -> Self {
        Self {
            duration_frames: 600,
            appearance_interval: 24.0,
            far_vehicles: 4,
            seed: 7,
        }
    }
}

/// Busy street scene: vehicles keep emerging close to the ego from behind
/// occluders (parked cars, corners) and cross or pass, while a few distant
/// vehicles drive ahead. Detections are noisy with clutter in both streams.
pub fn urban_scenario(params: &UrbanParams) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let duration = params.duration_frames;
    let mut agents = Vec::new();

    let mut frame = rng.random_range(0.0..params.appearance_interval);
    while (frame as u32) + 10 < duration {
        let spawn = frame as u32;
        let depth = rng.random_range(8.0..20.0);
        let hidden = rng.random_range(2..6);
        let lifetime = rng.random_range(30..70);
        let agent = if rng.random::<f64>() < 0.6 {
            // Crossing from one side.
            let left = rng.random::<bool>();
            let speed = rng.random_range(3.0..7.0) * if left { 1.0 } else { -1.0 };
            let x = if left { -0.45 * depth } else { 0.45 * depth };
            AgentSpec {
                class: ObjectClass::Car,
                spawn_frame: spawn,
                lifetime_frames: Some(lifetime),
                pose: Pose {
                    x,
                    y: GROUND_Y,
                    z: depth,
                    yaw: 0.0,
                },
                velocity: VelocityProfile::Constant { vx: speed, vz: 0.0 },
                occlusions: vec![],
                dims: None,
            }
        } else {
            // Oncoming in the adjacent lane, pulling out from a side street.
            let x = rng.random_range(-5.0..-2.5);
            AgentSpec {
                class: ObjectClass::Car,
                spawn_frame: spawn,
                lifetime_frames: Some(lifetime),
                pose: Pose {
                    x,
                    y: GROUND_Y,
                    z: depth + 10.0,
                    yaw: std::f64::consts::FRAC_PI_2,
                },
                velocity: VelocityProfile::Constant {
                    vx: 0.0,
                    vz: -rng.random_range(3.0..8.0),
                },
                occlusions: vec![],
                dims: None,
            }
        };
        let end = agent.end_frame(duration);
        let mut agent = agent;
        agent.occlusions = vec![OcclusionWindow {
            start_frame: spawn,
            end_frame: (spawn + hidden).min(end),
        }];
        agents.push(agent);
        frame += rng.random_range(0.5..1.5) * params.appearance_interval;
    }

    for _ in 0..params.far_vehicles {
        let spawn = rng.random_range(0..duration / 2);
        agents.push(AgentSpec {
            class: ObjectClass::Car,
            spawn_frame: spawn,
            lifetime_frames: Some(rng.random_range(100..300)),
            pose: Pose {
                x: rng.random_range(-6.0..6.0),
                y: GROUND_Y,
                z: rng.random_range(30.0..45.0),
                yaw: -std::f64::consts::FRAC_PI_2,
            },
            velocity: VelocityProfile::Constant {
                vx: 0.0,
                vz: rng.random_range(-0.5..0.5),
            },
            occlusions: vec![],
            dims: None,
        });
    }

    ScenarioSpec {
        name: "urban".into(),
        duration_frames: duration,
        agents,
        noise: NoiseSpec {
            position_sigma: 0.15,
            dimension_sigma: 0.05,
            yaw_sigma: 0.05,
            lidar_recall: 0.9,
            camera_recall: 0.9,
            lidar_fp_rate: 0.3,
            camera_fp_rate: 0.3,
            tp_score: (0.6, 1.0),
            fp_score: (0.3, 0.6),
            fp_volume: SensingVolume::default(),
        },
        rng_seed: params.seed,
    }
}
