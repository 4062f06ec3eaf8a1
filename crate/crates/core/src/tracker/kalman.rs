//! Constant-velocity Kalman filter over (x, y, z, yaw, l, w, h, vx, vy, vz).
//!
//! Velocities are in meters per cycle, so a dropped frame is one integer
//! prediction step.

use nalgebra::{SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Box3D, Dims};

pub const STATE_DIM: usize = 10;
pub const MEAS_DIM: usize = 7;

pub type StateVector = SVector<f64, STATE_DIM>;
pub type StateMatrix = SMatrix<f64, STATE_DIM, STATE_DIM>;
pub type Measurement = SVector<f64, MEAS_DIM>;

const YAW: usize = 3;
const MIN_DIM: f64 = 1e-3;

/// Standard deviations for process, measurement and birth noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub process_position: f64,
    pub process_yaw: f64,
    pub process_size: f64,
    /// Per-cycle velocity random walk, m/cycle.
    pub process_velocity: f64,
    pub measurement_position: f64,
    pub measurement_yaw: f64,
    pub measurement_size: f64,
    pub birth_position: f64,
    pub birth_yaw: f64,
    pub birth_size: f64,
    pub birth_velocity: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            process_position: 0.05,
            process_yaw: 0.05,
            process_size: 0.01,
            process_velocity: 0.05,
            measurement_position: 0.25,
            measurement_yaw: 0.2,
            measurement_size: 0.15,
            birth_position: 0.5,
            birth_yaw: 0.3,
            birth_size: 0.3,
            birth_velocity: 1.0,
        }
    }
}

impl NoiseConfig {
    fn process(&self) -> StateMatrix {
        let p = self.process_position.powi(2);
        let s = self.process_size.powi(2);
        let v = self.process_velocity.powi(2);
        StateMatrix::from_diagonal(&StateVector::from_column_slice(&[
            p,
            p,
            p,
            self.process_yaw.powi(2),
            s,
            s,
            s,
            v,
            v,
            v,
        ]))
    }

    pub(crate) fn measurement(&self) -> SMatrix<f64, MEAS_DIM, MEAS_DIM> {
        let p = self.measurement_position.powi(2);
        let s = self.measurement_size.powi(2);
        SMatrix::<f64, MEAS_DIM, MEAS_DIM>::from_diagonal(&Measurement::from_column_slice(&[
            p,
            p,
            p,
            self.measurement_yaw.powi(2),
            s,
            s,
            s,
        ]))
    }
}

fn transition() -> StateMatrix {
    let mut f = StateMatrix::identity();
    for i in 0..3 {
        f[(i, 7 + i)] = 1.0;
    }
    f
}

fn observation() -> SMatrix<f64, MEAS_DIM, STATE_DIM> {
    let mut h = SMatrix::<f64, MEAS_DIM, STATE_DIM>::zeros();
    for i in 0..MEAS_DIM {
        h[(i, i)] = 1.0;
    }
    h
}

pub fn measurement_of(b: &Box3D) -> Measurement {
    Measurement::from_column_slice(&[
        b.location.x,
        b.location.y,
        b.location.z,
        b.yaw,
        b.dims.length,
        b.dims.width,
        b.dims.height,
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub mean: StateVector,
    pub covariance: StateMatrix,
}

impl TrackState {
    /// Initial state at a detection: zero velocity with wide velocity
    /// uncertainty.
    pub fn from_box(b: &Box3D, noise: &NoiseConfig) -> Self {
        let z = measurement_of(b);
        let mut mean = StateVector::zeros();
        mean.fixed_rows_mut::<MEAS_DIM>(0).copy_from(&z);
        let p = noise.birth_position.powi(2);
        let s = noise.birth_size.powi(2);
        let v = noise.birth_velocity.powi(2);
        let covariance = StateMatrix::from_diagonal(&StateVector::from_column_slice(&[
            p,
            p,
            p,
            noise.birth_yaw.powi(2),
            s,
            s,
            s,
            v,
            v,
            v,
        ]));
        Self { mean, covariance }
    }

    /// Advances one cycle.
    pub fn predict(&mut self, noise: &NoiseConfig) {
        let f = transition();
        self.mean = f * self.mean;
        self.mean[YAW] = normalize_angle(self.mean[YAW]);
        self.covariance = f * self.covariance * f.transpose() + noise.process();
        self.symmetrize();
    }

    pub fn predict_cycles(&mut self, cycles: u32, noise: &NoiseConfig) {
        for _ in 0..cycles {
            self.predict(noise);
        }
    }

    /// Linear Kalman correction with a full box measurement. On a singular
    /// innovation covariance the state is left unchanged.
    pub fn update(&mut self, z: &Measurement, noise: &NoiseConfig) -> Result<()> {
        self.update_with(z, &noise.measurement())
    }

    pub fn update_with(
        &mut self,
        z: &Measurement,
        r: &SMatrix<f64, MEAS_DIM, MEAS_DIM>,
    ) -> Result<()> {
        let h = observation();
        let mut innovation = z - h * self.mean;
        innovation[YAW] = normalize_angle(innovation[YAW]);
        let s = h * self.covariance * h.transpose() + r;
        let chol = s.cholesky().ok_or(Error::NumericalFailure)?;
        // K = P H' S^-1
        let gain = chol.solve(&(h * self.covariance)).transpose();
        self.mean += gain * innovation;
        self.mean[YAW] = normalize_angle(self.mean[YAW]);
        for i in 4..7 {
            self.mean[i] = self.mean[i].max(MIN_DIM);
        }
        let i_kh = StateMatrix::identity() - gain * h;
        self.covariance = i_kh * self.covariance * i_kh.transpose() + gain * r * gain.transpose();
        self.symmetrize();
        Ok(())
    }

    /// Scalar correction of one state component.
    pub fn update_component(&mut self, index: usize, value: f64, variance: f64) -> Result<()> {
        let s = self.covariance[(index, index)] + variance;
        if !(s > 0.0) {
            return Err(Error::NumericalFailure);
        }
        let gain: StateVector = self.covariance.column(index) / s;
        self.mean += gain * (value - self.mean[index]);
        let mut i_kh = StateMatrix::identity();
        for r in 0..STATE_DIM {
            i_kh[(r, index)] -= gain[r];
        }
        self.covariance =
            i_kh * self.covariance * i_kh.transpose() + gain * gain.transpose() * variance;
        self.symmetrize();
        Ok(())
    }

    fn symmetrize(&mut self) {
        self.covariance = (self.covariance + self.covariance.transpose()) * 0.5;
    }

    pub fn velocity(&self) -> Vector3<f64> {
        Vector3::new(self.mean[7], self.mean[8], self.mean[9])
    }

    pub fn box3d(&self) -> Box3D {
        Box3D {
            location: Vector3::new(self.mean[0], self.mean[1], self.mean[2]),
            dims: Dims::new(
                self.mean[6].max(MIN_DIM),
                self.mean[5].max(MIN_DIM),
                self.mean[4].max(MIN_DIM),
            ),
            yaw: normalize_angle(self.mean[YAW]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn sample_box() -> Box3D {
        Box3D::new(Vector3::new(1.0, 1.6, 15.0), Dims::new(1.5, 1.6, 3.9), 0.4).unwrap()
    }

    #[test]
    fn constant_velocity_prediction() {
        let noise = NoiseConfig::default();
        let mut st = TrackState::from_box(&sample_box(), &noise);
        st.mean[7] = 1.0;
        st.mean[9] = -0.5;
        st.predict_cycles(3, &noise);
        assert_close!(st.mean[0], 4.0, 1e-12);
        assert_close!(st.mean[1], 1.6, 1e-12);
        assert_close!(st.mean[2], 13.5, 1e-12);
        assert_close!(st.mean[3], 0.4, 1e-12);
        assert_close!(st.mean[4], 3.9, 1e-12);
    }

    #[test]
    fn stationary_prediction_grows_covariance() {
        let noise = NoiseConfig::default();
        let mut st = TrackState::from_box(&sample_box(), &noise);
        let before = st.clone();
        st.predict(&noise);
        assert_eq!(st.mean, before.mean);
        assert!(st.covariance.trace() > before.covariance.trace());
    }

    #[test]
    fn zero_innovation_shrinks_covariance() {
        let noise = NoiseConfig::default();
        let mut st = TrackState::from_box(&sample_box(), &noise);
        st.predict(&noise);
        let before = st.clone();
        st.update(&measurement_of(&sample_box()), &noise).unwrap();
        assert!((st.mean - before.mean).amax() < 1e-12);
        assert!(st.covariance.trace() < before.covariance.trace());
    }

    #[test]
    fn vanishing_measurement_noise_snaps_to_measurement() {
        let noise = NoiseConfig {
            measurement_position: 1e-7,
            measurement_yaw: 1e-7,
            measurement_size: 1e-7,
            ..NoiseConfig::default()
        };
        let mut st = TrackState::from_box(&sample_box(), &noise);
        st.predict_cycles(2, &noise);
        let target = Box3D::new(Vector3::new(2.0, 1.5, 14.0), Dims::new(1.4, 1.7, 4.1), -0.3).unwrap();
        st.update(&measurement_of(&target), &noise).unwrap();
        let z = measurement_of(&target);
        for i in 0..MEAS_DIM {
            assert_close!(st.mean[i], z[i], 1e-6);
        }
    }

    #[test]
    fn yaw_innovation_wraps() {
        let noise = NoiseConfig::default();
        let b = Box3D { yaw: 3.1, ..sample_box() };
        let mut st = TrackState::from_box(&b, &noise);
        let m = Box3D { yaw: -3.1, ..sample_box() };
        st.update(&measurement_of(&m), &noise).unwrap();
        // The short way round crosses ±π, never through 0.
        assert!(st.mean[YAW].abs() > 3.0, "yaw {}", st.mean[YAW]);
    }

    #[test]
    fn singular_innovation_is_numerical_failure() {
        let noise = NoiseConfig::default();
        let mut st = TrackState::from_box(&sample_box(), &noise);
        st.covariance = StateMatrix::zeros();
        let zero_r = SMatrix::<f64, MEAS_DIM, MEAS_DIM>::zeros();
        let before = st.clone();
        assert!(matches!(
            st.update_with(&measurement_of(&sample_box()), &zero_r),
            Err(Error::NumericalFailure)
        ));
        assert_eq!(st, before);
    }

    /// Textbook Kalman step on dynamically sized matrices with an explicit
    /// inverse, kept separate from the fixed-size implementation.
    fn reference_update(mean: &[f64], cov: &[f64], z: &[f64], r: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = STATE_DIM;
        let m = MEAS_DIM;
        let x = DMatrix::from_column_slice(n, 1, mean);
        let p = DMatrix::from_row_slice(n, n, cov);
        let mut h = DMatrix::zeros(m, n);
        for i in 0..m {
            h[(i, i)] = 1.0;
        }
        let rm = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(r));
        let zv = DMatrix::from_column_slice(m, 1, z);
        let mut y = &zv - &h * &x;
        let mut yaw = y[(3, 0)] % (2.0 * std::f64::consts::PI);
        if yaw > std::f64::consts::PI {
            yaw -= 2.0 * std::f64::consts::PI;
        } else if yaw <= -std::f64::consts::PI {
            yaw += 2.0 * std::f64::consts::PI;
        }
        y[(3, 0)] = yaw;
        let s = &h * &p * h.transpose() + &rm;
        let k = &p * h.transpose() * s.try_inverse().unwrap();
        let x_new = &x + &k * y;
        let p_new = (DMatrix::identity(n, n) - &k * &h) * &p;
        (x_new.iter().copied().collect(), p_new.transpose().iter().copied().collect())
    }

    proptest! {
        #[test]
        fn predict_twice_equals_two_cycles(
            pos in prop::array::uniform3(-30.0..30.0f64),
            vel in prop::array::uniform3(-2.0..2.0f64),
        ) {
            let noise = NoiseConfig::default();
            let b = Box3D::new(Vector3::new(pos[0], pos[1], pos[2]), Dims::new(1.5, 1.6, 3.9), 0.1).unwrap();
            let mut a = TrackState::from_box(&b, &noise);
            a.mean[7] = vel[0];
            a.mean[8] = vel[1];
            a.mean[9] = vel[2];
            let mut stepped = a.clone();
            stepped.predict(&noise);
            stepped.predict(&noise);
            a.predict_cycles(2, &noise);
            prop_assert_eq!(a, stepped);
        }

        #[test]
        fn update_matches_textbook_kalman(
            pos in prop::array::uniform3(-20.0..20.0f64),
            delta in prop::array::uniform3(-1.0..1.0f64),
            yaw in -3.0..3.0f64,
            dyaw in -0.5..0.5f64,
            cycles in 1u32..5,
        ) {
            let noise = NoiseConfig::default();
            let b = Box3D::new(Vector3::new(pos[0], pos[1], pos[2]), Dims::new(1.5, 1.6, 3.9), yaw).unwrap();
            let mut st = TrackState::from_box(&b, &noise);
            st.predict_cycles(cycles, &noise);
            let meas_box = Box3D::new(
                Vector3::new(pos[0] + delta[0], pos[1] + delta[1], pos[2] + delta[2]),
                Dims::new(1.45, 1.65, 4.0),
                yaw + dyaw,
            ).unwrap();
            let z = measurement_of(&meas_box);
            let r = noise.measurement();
            let cov_rows: Vec<f64> = st.covariance.transpose().iter().copied().collect();
            let (want_mean, want_cov) = reference_update(
                st.mean.as_slice(),
                &cov_rows,
                z.as_slice(),
                r.diagonal().as_slice(),
            );
            st.update(&z, &noise).unwrap();
            for i in 0..STATE_DIM {
                let want = if i == YAW { normalize_angle(want_mean[i]) } else { want_mean[i] };
                prop_assert!((st.mean[i] - want).abs() < 1e-9, "mean[{}] {} vs {}", i, st.mean[i], want);
            }
            let got_cov: Vec<f64> = st.covariance.transpose().iter().copied().collect();
            for (g, w) in got_cov.iter().zip(&want_cov) {
                prop_assert!((g - w).abs() < 1e-9);
            }
        }
    }
}
