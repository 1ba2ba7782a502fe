//! Per-obstacle constant-velocity Kalman filtering: prediction, update,
//! greedy gated association of detections to tracks, and track lifecycle.
//!
//! State is `(x, y, vx, vy)` in meters and m/s; only positions are
//! observed. The matrices are small and fixed-size, so the linear algebra
//! is written out directly.
#![allow(clippy::needless_range_loop)]

use thiserror::Error;

use crate::geom::Vec2;
use crate::scalar::Real;

pub type Vec4<T> = [T; 4];
pub type Mat4<T> = [[T; 4]; 4];
pub type Mat2<T> = [[T; 2]; 2];
/// 2x4 observation matrix shape.
pub type Mat24<T> = [[T; 4]; 2];

#[derive(Debug, Error, PartialEq)]
pub enum TrackError {
    #[error("innovation covariance H*P*H^T + R is not invertible")]
    SingularInnovation,
}

/// Constant-velocity process and position-only measurement model.
///
/// `a` has `dt` in the position-velocity coupling slots; `h` selects the
/// two position components. There is no control input, so `b` is held at
/// zero purely for completeness of the state equation.
#[derive(Debug, Clone, Copy)]
pub struct KalmanModel<T> {
    pub a: Mat4<T>,
    pub h: Mat24<T>,
    pub q: Mat4<T>,
    pub r: Mat2<T>,
    pub b: Vec4<T>,
    pub dt: T,
}

impl<T: Real> KalmanModel<T> {
    /// Standard model for this application: process noise
    /// `q_scale * diag(dt^4/4, dt^4/4, dt^2, dt^2)` (kept very small for
    /// mostly-linear obstacle motion) and measurement noise `sigma_z^2 * I`.
    pub fn constant_velocity(dt: T, q_scale: T, sigma_z: T) -> Self {
        let z = T::zero();
        let one = T::one();
        let dt2 = dt * dt;
        let dt4q = dt2 * dt2 / T::of(4.0);
        KalmanModel {
            a: [
                [one, z, dt, z],
                [z, one, z, dt],
                [z, z, one, z],
                [z, z, z, one],
            ],
            h: [[one, z, z, z], [z, one, z, z]],
            q: [
                [q_scale * dt4q, z, z, z],
                [z, q_scale * dt4q, z, z],
                [z, z, q_scale * dt2, z],
                [z, z, z, q_scale * dt2],
            ],
            r: [[sigma_z * sigma_z, z], [z, sigma_z * sigma_z]],
            b: [z; 4],
            dt,
        }
    }
}

/// Filter state for one tracked obstacle.
#[derive(Debug, Clone, Copy)]
pub struct ObstacleTrack<T> {
    pub id: u32,
    /// `(x, y, vx, vy)` estimate.
    pub state: Vec4<T>,
    /// Estimate covariance, kept symmetric.
    pub cov: Mat4<T>,
    /// Ticks since spawn (>= 1).
    pub age: u32,
    /// Consecutive ticks without an associated detection.
    pub missed: u32,
}

impl<T: Real> ObstacleTrack<T> {
    pub fn position(&self) -> Vec2<T> {
        Vec2::new(self.state[0], self.state[1])
    }

    pub fn velocity(&self) -> Vec2<T> {
        Vec2::new(self.state[2], self.state[3])
    }

    pub fn speed(&self) -> T {
        self.velocity().norm()
    }
}

/// One noisy position measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection<T> {
    pub pos: Vec2<T>,
    pub tick: u64,
}

fn m4_mul<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut out = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            for j in 0..4 {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn m4_mul_transpose<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    // a * b^T
    let mut out = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = T::zero();
            for k in 0..4 {
                s += a[i][k] * b[j][k];
            }
            out[i][j] = s;
        }
    }
    out
}

fn m4_add<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut out = *a;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] += b[i][j];
        }
    }
    out
}

fn m4_vec<T: Real>(a: &Mat4<T>, v: &Vec4<T>) -> Vec4<T> {
    let mut out = [T::zero(); 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i] += a[i][j] * v[j];
        }
    }
    out
}

/// Propagate the estimate `steps` ticks ahead without touching the track:
/// `x <- A x`, `P <- A P A^T + Q`, iterated.
pub fn predict<T: Real>(
    track: &ObstacleTrack<T>,
    model: &KalmanModel<T>,
    steps: u32,
) -> (Vec4<T>, Mat4<T>) {
    let mut x = track.state;
    let mut p = track.cov;
    for _ in 0..steps {
        x = m4_vec(&model.a, &x);
        p = m4_add(&m4_mul_transpose(&m4_mul(&model.a, &p), &model.a), &model.q);
    }
    (x, p)
}

/// Measurement update. The track must already hold this tick's predicted
/// state. Returns the refreshed track with `missed` reset; the covariance
/// is re-symmetrized to keep round-off from accumulating.
pub fn update<T: Real>(
    track: &ObstacleTrack<T>,
    model: &KalmanModel<T>,
    z: &Detection<T>,
) -> Result<ObstacleTrack<T>, TrackError> {
    let p = &track.cov;
    let h = &model.h;
    // S = H P H^T + R  (2x2)
    let mut hp = [[T::zero(); 4]; 2];
    for i in 0..2 {
        for j in 0..4 {
            let mut s = T::zero();
            for k in 0..4 {
                s += h[i][k] * p[k][j];
            }
            hp[i][j] = s;
        }
    }
    let mut s_mat = [[T::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut s = T::zero();
            for k in 0..4 {
                s += hp[i][k] * h[j][k];
            }
            s_mat[i][j] = s + model.r[i][j];
        }
    }
    let det = s_mat[0][0] * s_mat[1][1] - s_mat[0][1] * s_mat[1][0];
    if det == T::zero() || !det.is_finite() {
        return Err(TrackError::SingularInnovation);
    }
    let s_inv: Mat2<T> = [
        [s_mat[1][1] / det, -s_mat[0][1] / det],
        [-s_mat[1][0] / det, s_mat[0][0] / det],
    ];
    // K = P H^T S^-1  (4x2)
    let mut pht = [[T::zero(); 2]; 4];
    for i in 0..4 {
        for j in 0..2 {
            let mut s = T::zero();
            for k in 0..4 {
                s += p[i][k] * h[j][k];
            }
            pht[i][j] = s;
        }
    }
    let mut k_gain = [[T::zero(); 2]; 4];
    for i in 0..4 {
        for j in 0..2 {
            k_gain[i][j] = pht[i][0] * s_inv[0][j] + pht[i][1] * s_inv[1][j];
        }
    }
    // x <- x + K (z - H x)
    let innov = [
        z.pos.x
            - (h[0][0] * track.state[0]
                + h[0][1] * track.state[1]
                + h[0][2] * track.state[2]
                + h[0][3] * track.state[3]),
        z.pos.y
            - (h[1][0] * track.state[0]
                + h[1][1] * track.state[1]
                + h[1][2] * track.state[2]
                + h[1][3] * track.state[3]),
    ];
    let mut x = track.state;
    for i in 0..4 {
        x[i] += k_gain[i][0] * innov[0] + k_gain[i][1] * innov[1];
    }
    // P <- (I - K H) P
    let mut ikh = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let kh = k_gain[i][0] * h[0][j] + k_gain[i][1] * h[1][j];
            ikh[i][j] = if i == j { T::one() - kh } else { -kh };
        }
    }
    let mut new_p = m4_mul(&ikh, p);
    for i in 0..4 {
        for j in (i + 1)..4 {
            let m = (new_p[i][j] + new_p[j][i]) * T::of(0.5);
            new_p[i][j] = m;
            new_p[j][i] = m;
        }
    }
    Ok(ObstacleTrack {
        id: track.id,
        state: x,
        cov: new_p,
        age: track.age,
        missed: 0,
    })
}

/// Result of associating one frame of detections with the track list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Association {
    /// `(track index, detection index)` pairs.
    pub pairs: Vec<(usize, usize)>,
    /// Indices of detections no track claimed.
    pub unmatched_detections: Vec<usize>,
}

/// Greedy nearest-neighbor association on the tracks' (already predicted)
/// positions: repeatedly match the globally closest pair within `gate`
/// meters, removing both. Tracks left unmatched get `missed` incremented.
pub fn associate<T: Real>(
    tracks: &mut [ObstacleTrack<T>],
    detections: &[Detection<T>],
    gate: T,
) -> Association {
    let mut track_used = vec![false; tracks.len()];
    let mut det_used = vec![false; detections.len()];
    let mut pairs = Vec::new();
    loop {
        let mut best: Option<(T, usize, usize)> = None;
        for (ti, t) in tracks.iter().enumerate() {
            if track_used[ti] {
                continue;
            }
            for (di, d) in detections.iter().enumerate() {
                if det_used[di] {
                    continue;
                }
                let dist = t.position().distance(d.pos);
                if dist <= gate && best.is_none_or(|(bd, _, _)| dist < bd) {
                    best = Some((dist, ti, di));
                }
            }
        }
        match best {
            Some((_, ti, di)) => {
                track_used[ti] = true;
                det_used[di] = true;
                pairs.push((ti, di));
            }
            None => break,
        }
    }
    for (ti, used) in track_used.iter().enumerate() {
        if !used {
            tracks[ti].missed += 1;
        }
    }
    Association {
        pairs,
        unmatched_detections: (0..detections.len()).filter(|&i| !det_used[i]).collect(),
    }
}

/// Track birth/death policy.
#[derive(Debug, Clone, Copy)]
pub struct TrackPolicy<T> {
    /// Initial covariance diagonal for spawned tracks
    /// (position m^2, velocity (m/s)^2).
    pub spawn_cov_diag: [T; 4],
    /// Tracks with `missed > prune_missed` are dropped.
    pub prune_missed: u32,
}

impl<T: Real> Default for TrackPolicy<T> {
    fn default() -> Self {
        TrackPolicy {
            spawn_cov_diag: [T::of(0.25), T::of(0.25), T::one(), T::one()],
            prune_missed: 10,
        }
    }
}

/// Drop stale tracks, then spawn one zero-velocity track per unmatched
/// detection (coincident detections deliberately spawn duplicates; the
/// gate sorts them out on later ticks).
pub fn spawn_and_prune<T: Real>(
    tracks: &mut Vec<ObstacleTrack<T>>,
    unmatched: &[Detection<T>],
    policy: &TrackPolicy<T>,
    next_id: &mut u32,
) {
    tracks.retain(|t| t.missed <= policy.prune_missed);
    for d in unmatched {
        let z = T::zero();
        let mut cov = [[z; 4]; 4];
        for i in 0..4 {
            cov[i][i] = policy.spawn_cov_diag[i];
        }
        tracks.push(ObstacleTrack {
            id: *next_id,
            state: [d.pos.x, d.pos.y, z, z],
            cov,
            age: 1,
            missed: 0,
        });
        *next_id += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn model() -> KalmanModel<f64> {
        KalmanModel::constant_velocity(0.1, 1e-3, 0.05)
    }

    fn track(state: Vec4<f64>, cov: Mat4<f64>) -> ObstacleTrack<f64> {
        ObstacleTrack {
            id: 0,
            state,
            cov,
            age: 1,
            missed: 0,
        }
    }

    fn eye() -> Mat4<f64> {
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            m[i][i] = 1.0;
        }
        m
    }

    // ---- independent dense oracle (Vec-based, textbook loops) ----------

    #[derive(Clone)]
    struct Dense(Vec<Vec<f64>>);

    impl Dense {
        fn from(m: &[&[f64]]) -> Self {
            Dense(m.iter().map(|r| r.to_vec()).collect())
        }
        fn mul(&self, o: &Dense) -> Dense {
            let (r, inner, c) = (self.0.len(), o.0.len(), o.0[0].len());
            let mut out = vec![vec![0.0; c]; r];
            for i in 0..r {
                for j in 0..c {
                    for k in 0..inner {
                        out[i][j] += self.0[i][k] * o.0[k][j];
                    }
                }
            }
            Dense(out)
        }
        fn t(&self) -> Dense {
            let (r, c) = (self.0.len(), self.0[0].len());
            let mut out = vec![vec![0.0; r]; c];
            for i in 0..r {
                for j in 0..c {
                    out[j][i] = self.0[i][j];
                }
            }
            Dense(out)
        }
        fn add(&self, o: &Dense) -> Dense {
            let mut out = self.0.clone();
            for i in 0..out.len() {
                for j in 0..out[i].len() {
                    out[i][j] += o.0[i][j];
                }
            }
            Dense(out)
        }
        fn sub(&self, o: &Dense) -> Dense {
            let mut out = self.0.clone();
            for i in 0..out.len() {
                for j in 0..out[i].len() {
                    out[i][j] -= o.0[i][j];
                }
            }
            Dense(out)
        }
        fn inv(&self) -> Dense {
            // Gauss-Jordan with partial pivoting on an augmented matrix.
            let n = self.0.len();
            let mut a: Vec<Vec<f64>> = self
                .0
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    let mut r = row.clone();
                    r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
                    r
                })
                .collect();
            for col in 0..n {
                let piv = (col..n)
                    .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                    .unwrap();
                a.swap(col, piv);
                let p = a[col][col];
                assert!(p.abs() > 1e-300);
                for v in a[col].iter_mut() {
                    *v /= p;
                }
                for r in 0..n {
                    if r != col {
                        let f = a[r][col];
                        if f != 0.0 {
                            for k in 0..2 * n {
                                let x = a[col][k];
                                a[r][k] -= f * x;
                            }
                        }
                    }
                }
            }
            Dense(a.into_iter().map(|r| r[n..].to_vec()).collect())
        }
    }

    fn dense4(m: &Mat4<f64>) -> Dense {
        Dense(m.iter().map(|r| r.to_vec()).collect())
    }

    fn oracle_predict(
        x: &Vec4<f64>,
        p: &Mat4<f64>,
        m: &KalmanModel<f64>,
        steps: u32,
    ) -> (Vec<f64>, Dense) {
        let a = dense4(&m.a);
        let q = dense4(&m.q);
        let mut xv = Dense(x.iter().map(|&v| vec![v]).collect());
        let mut pd = dense4(p);
        for _ in 0..steps {
            xv = a.mul(&xv);
            pd = a.mul(&pd).mul(&a.t()).add(&q);
        }
        (xv.0.iter().map(|r| r[0]).collect(), pd)
    }

    fn oracle_update(
        x: &Vec4<f64>,
        p: &Mat4<f64>,
        m: &KalmanModel<f64>,
        z: Vec2<f64>,
    ) -> (Vec<f64>, Dense) {
        let h = Dense::from(&[&m.h[0], &m.h[1]]);
        let r = Dense::from(&[&m.r[0], &m.r[1]]);
        let pd = dense4(p);
        let s = h.mul(&pd).mul(&h.t()).add(&r);
        let k = pd.mul(&h.t()).mul(&s.inv());
        let xv = Dense(x.iter().map(|&v| vec![v]).collect());
        let zv = Dense(vec![vec![z.x], vec![z.y]]);
        let innov = zv.sub(&h.mul(&xv));
        let x_new = xv.add(&k.mul(&innov));
        let eye4 = Dense(
            (0..4)
                .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        );
        let p_new = eye4.sub(&k.mul(&h)).mul(&pd);
        (x_new.0.iter().map(|r| r[0]).collect(), p_new)
    }

    fn random_spd(rng: &mut StdRng, scale: f64) -> Mat4<f64> {
        // M M^T + eps I is symmetric positive definite.
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = rng.gen_range(-scale..scale);
            }
        }
        let mut spd = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    spd[i][j] += m[i][k] * m[j][k];
                }
            }
            spd[i][i] += 1e-3;
        }
        spd
    }

    // ---- predict -------------------------------------------------------

    #[test]
    fn predict_constant_velocity_exact() {
        let mut m = model();
        m.q = [[0.0; 4]; 4];
        let t = track([0.0, 0.0, 1.0, 0.0], eye());
        let (x, _) = predict(&t, &m, 5);
        assert!((x[0] - 0.5).abs() < 1e-15);
        assert_eq!(x[1], 0.0);
        assert_eq!(x[2], 1.0);
        assert_eq!(x[3], 0.0);
        // The track itself is untouched.
        assert_eq!(t.state[0], 0.0);
    }

    #[test]
    fn predict_identity_covariance_algebra() {
        let mut m = model();
        m.q = [[0.0; 4]; 4];
        let t = track([0.0; 4], eye());
        let (_, p) = predict(&t, &m, 1);
        // P' = A I A^T = A A^T.
        let want = m4_mul_transpose(&m.a, &m.a);
        for i in 0..4 {
            for j in 0..4 {
                assert!((p[i][j] - want[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn predict_matches_dense_oracle() {
        let mut rng = StdRng::seed_from_u64(3);
        let m = model();
        for _ in 0..200 {
            let x = [
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ];
            let p = random_spd(&mut rng, 1.0);
            let t = track(x, p);
            let (gx, gp) = predict(&t, &m, 3);
            let (ox, op) = oracle_predict(&x, &p, &m, 3);
            for i in 0..4 {
                assert!((gx[i] - ox[i]).abs() < 1e-12);
                for j in 0..4 {
                    assert!((gp[i][j] - op.0[i][j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn predict_composes_over_steps() {
        let mut rng = StdRng::seed_from_u64(9);
        let m = model();
        let t = track([1.0, -2.0, 0.3, 0.7], random_spd(&mut rng, 0.5));
        let (xa, pa) = predict(&t, &m, 2);
        let mid = ObstacleTrack {
            state: xa,
            cov: pa,
            ..t
        };
        let (x_ab, p_ab) = predict(&mid, &m, 3);
        let (x5, p5) = predict(&t, &m, 5);
        for i in 0..4 {
            assert!((x_ab[i] - x5[i]).abs() < 1e-12);
            for j in 0..4 {
                assert!((p_ab[i][j] - p5[i][j]).abs() < 1e-12);
            }
        }
    }

    // ---- update --------------------------------------------------------

    #[test]
    fn update_zero_innovation_keeps_state_shrinks_cov() {
        let m = model();
        let t = track([2.0, 3.0, 0.5, -0.5], eye());
        let z = Detection {
            pos: Vec2::new(2.0, 3.0),
            tick: 0,
        };
        let u = update(&t, &m, &z).unwrap();
        for i in 0..4 {
            assert!((u.state[i] - t.state[i]).abs() < 1e-12);
        }
        let trace_before: f64 = (0..4).map(|i| t.cov[i][i]).sum();
        let trace_after: f64 = (0..4).map(|i| u.cov[i][i]).sum();
        assert!(trace_after < trace_before);
        assert_eq!(u.missed, 0);
    }

    #[test]
    fn update_scalar_slice_gain_half() {
        // Position-only 1D analogue: P = diag(1,1,0,0), R = I gives
        // S = 2I and K = 0.5 on the observed components.
        let mut m = model();
        m.r = [[1.0, 0.0], [0.0, 1.0]];
        let mut p = [[0.0; 4]; 4];
        p[0][0] = 1.0;
        p[1][1] = 1.0;
        let t = track([0.0; 4], p);
        let z = Detection {
            pos: Vec2::new(1.0, 0.0),
            tick: 0,
        };
        let u = update(&t, &m, &z).unwrap();
        // x0 <- 0 + K * (1 - 0) = 0.5
        assert!((u.state[0] - 0.5).abs() < 1e-15);
        assert!((u.cov[0][0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn update_matches_dense_oracle() {
        let mut rng = StdRng::seed_from_u64(4);
        let m = model();
        for _ in 0..200 {
            let x = [
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ];
            let p = random_spd(&mut rng, 1.0);
            let z = Vec2::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let t = track(x, p);
            let got = update(&t, &m, &Detection { pos: z, tick: 0 }).unwrap();
            let (ox, op) = oracle_update(&x, &p, &m, z);
            for i in 0..4 {
                assert!((got.state[i] - ox[i]).abs() < 1e-12);
                for j in 0..4 {
                    // The implementation symmetrizes; compare to the
                    // symmetrized oracle.
                    let sym = 0.5 * (op.0[i][j] + op.0[j][i]);
                    assert!((got.cov[i][j] - sym).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn update_singular_innovation_detected() {
        let mut m = model();
        m.r = [[0.0; 2]; 2];
        let t = track([0.0; 4], [[0.0; 4]; 4]);
        let z = Detection {
            pos: Vec2::new(0.0, 0.0),
            tick: 0,
        };
        assert_eq!(
            update(&t, &m, &z).unwrap_err(),
            TrackError::SingularInnovation
        );
    }

    #[test]
    fn covariance_stays_symmetric() {
        let mut rng = StdRng::seed_from_u64(5);
        let m = model();
        let mut t = track([0.0, 0.0, 0.2, 0.1], random_spd(&mut rng, 1.0));
        for k in 0..50 {
            let (x, p) = predict(&t, &m, 1);
            t.state = x;
            t.cov = p;
            let z = Detection {
                pos: Vec2::new(
                    t.state[0] + rng.gen_range(-0.1..0.1),
                    t.state[1] + rng.gen_range(-0.1..0.1),
                ),
                tick: k,
            };
            t = update(&t, &m, &z).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert!((t.cov[i][j] - t.cov[j][i]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn noiseless_constant_velocity_converges() {
        // Q = 0 and exact measurements of a constant-velocity target:
        // prediction error reaches < 1e-6 m within 20 updates and decays
        // monotonically once the filter has seen a few detections. The
        // model's R matches the noiseless data.
        let mut m = KalmanModel::constant_velocity(0.1, 0.0, 1e-6);
        m.q = [[0.0; 4]; 4];
        let dt = 0.1;
        let (vx, vy) = (0.4, -0.3);
        let mut t = track([0.0, 0.0, 0.0, 0.0], {
            let mut p = [[0.0; 4]; 4];
            p[0][0] = 0.25;
            p[1][1] = 0.25;
            p[2][2] = 1.0;
            p[3][3] = 1.0;
            p
        });
        let mut errors = Vec::new();
        for k in 1..=20u32 {
            let (x, p) = predict(&t, &m, 1);
            t.state = x;
            t.cov = p;
            let truth = Vec2::new(vx * dt * k as f64, vy * dt * k as f64);
            errors.push(t.position().distance(truth));
            t = update(
                &t,
                &m,
                &Detection {
                    pos: truth,
                    tick: k as u64,
                },
            )
            .unwrap();
        }
        for w in errors.windows(2).skip(3) {
            assert!(w[1] <= w[0] + 1e-12, "error increased: {w:?}");
        }
        assert!(*errors.last().unwrap() < 1e-6);
    }

    #[test]
    fn update_decreases_observed_covariance_trace() {
        let mut rng = StdRng::seed_from_u64(6);
        let m = model();
        for _ in 0..100 {
            let t = track([0.0; 4], random_spd(&mut rng, 1.0));
            let z = Detection {
                pos: Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                tick: 0,
            };
            let u = update(&t, &m, &z).unwrap();
            let obs_trace = |p: &Mat4<f64>| p[0][0] + p[1][1];
            assert!(obs_trace(&u.cov) < obs_trace(&t.cov));
        }
    }

    // ---- association and lifecycle --------------------------------------

    #[test]
    fn associate_simple_match() {
        let mut tracks = vec![track([1.0, 1.0, 0.0, 0.0], eye())];
        let dets = vec![Detection {
            pos: Vec2::new(1.05, 1.0),
            tick: 0,
        }];
        let a = associate(&mut tracks, &dets, 0.5);
        assert_eq!(a.pairs, vec![(0, 0)]);
        assert!(a.unmatched_detections.is_empty());
        assert_eq!(tracks[0].missed, 0);
    }

    #[test]
    fn associate_outside_gate() {
        let mut tracks = vec![track([0.0, 0.0, 0.0, 0.0], eye())];
        let dets = vec![Detection {
            pos: Vec2::new(0.6, 0.0),
            tick: 0,
        }];
        let a = associate(&mut tracks, &dets, 0.5);
        assert!(a.pairs.is_empty());
        assert_eq!(a.unmatched_detections, vec![0]);
        assert_eq!(tracks[0].missed, 1);
    }

    /// Brute-force assignment oracle: enumerate every matching within the
    /// gate, prefer maximum pair count, break ties by total distance.
    fn oracle_assign(tracks: &[Vec2<f64>], dets: &[Vec2<f64>], gate: f64) -> (usize, f64) {
        fn rec(
            ti: usize,
            tracks: &[Vec2<f64>],
            dets: &[Vec2<f64>],
            used: &mut Vec<bool>,
            gate: f64,
        ) -> (usize, f64) {
            if ti == tracks.len() {
                return (0, 0.0);
            }
            // Option: leave track ti unmatched.
            let mut best = rec(ti + 1, tracks, dets, used, gate);
            for di in 0..dets.len() {
                if used[di] {
                    continue;
                }
                let d = tracks[ti].distance(dets[di]);
                if d > gate {
                    continue;
                }
                used[di] = true;
                let (c, td) = rec(ti + 1, tracks, dets, used, gate);
                used[di] = false;
                let cand = (c + 1, td + d);
                if cand.0 > best.0 || (cand.0 == best.0 && cand.1 < best.1) {
                    best = cand;
                }
            }
            best
        }
        rec(0, tracks, dets, &mut vec![false; dets.len()], gate)
    }

    #[test]
    fn associate_crossed_configuration_matches_oracle() {
        // Two tracks and two detections in a crossed layout: greedy takes
        // the globally closest pair first, which here is also optimal.
        let mut tracks = vec![
            track([0.0, 0.0, 0.0, 0.0], eye()),
            track([1.0, 0.0, 0.0, 0.0], eye()),
        ];
        let dets = vec![
            Detection {
                pos: Vec2::new(0.9, 0.05),
                tick: 0,
            },
            Detection {
                pos: Vec2::new(0.2, 0.0),
                tick: 0,
            },
        ];
        let a = associate(&mut tracks, &dets, 2.0);
        // Globally closest: track 1 <-> det 0 (0.1118...), then track 0 <-> det 1.
        assert_eq!(a.pairs, vec![(1, 0), (0, 1)]);
        let total: f64 = a
            .pairs
            .iter()
            .map(|&(ti, di)| tracks[ti].position().distance(dets[di].pos))
            .sum();
        let (count, oracle_total) = oracle_assign(
            &tracks.iter().map(|t| t.position()).collect::<Vec<_>>(),
            &dets.iter().map(|d| d.pos).collect::<Vec<_>>(),
            2.0,
        );
        assert_eq!(a.pairs.len(), count);
        assert!((total - oracle_total).abs() < 1e-12);
    }

    #[test]
    fn associate_with_wide_gate_matches_oracle_count() {
        // With an effectively unbounded gate greedy always reaches the
        // maximum matching size; the globally closest pair is matched
        // together.
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..200 {
            let nt = rng.gen_range(1..=4);
            let nd = rng.gen_range(1..=4);
            let mut tracks: Vec<_> = (0..nt)
                .map(|_| {
                    track(
                        [rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0), 0.0, 0.0],
                        eye(),
                    )
                })
                .collect();
            let dets: Vec<_> = (0..nd)
                .map(|_| Detection {
                    pos: Vec2::new(rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0)),
                    tick: 0,
                })
                .collect();
            let gate = 100.0;
            let (count, _) = oracle_assign(
                &tracks.iter().map(|t| t.position()).collect::<Vec<_>>(),
                &dets.iter().map(|d| d.pos).collect::<Vec<_>>(),
                gate,
            );
            let closest = (0..nt)
                .flat_map(|ti| (0..nd).map(move |di| (ti, di)))
                .min_by(|&(a1, b1), &(a2, b2)| {
                    let d1 = tracks[a1].position().distance(dets[b1].pos);
                    let d2 = tracks[a2].position().distance(dets[b2].pos);
                    d1.partial_cmp(&d2).unwrap()
                })
                .unwrap();
            let a = associate(&mut tracks, &dets, gate);
            assert_eq!(a.pairs.len(), count);
            assert_eq!(a.pairs[0], closest);
        }
    }

    /// Greedy matchings are pairwise stable: no unmatched track and
    /// unmatched detection remain within the gate of each other.
    #[test]
    fn associate_leaves_no_matchable_pair_behind() {
        let mut rng = StdRng::seed_from_u64(10);
        for _ in 0..200 {
            let nt = rng.gen_range(0..=4);
            let nd = rng.gen_range(0..=4);
            let mut tracks: Vec<_> = (0..nt)
                .map(|_| {
                    track(
                        [rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0), 0.0, 0.0],
                        eye(),
                    )
                })
                .collect();
            let dets: Vec<_> = (0..nd)
                .map(|_| Detection {
                    pos: Vec2::new(rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0)),
                    tick: 0,
                })
                .collect();
            let gate = 0.8;
            let a = associate(&mut tracks, &dets, gate);
            let matched_tracks: Vec<usize> = a.pairs.iter().map(|p| p.0).collect();
            for ti in 0..nt {
                if matched_tracks.contains(&ti) {
                    continue;
                }
                for &di in &a.unmatched_detections {
                    assert!(tracks[ti].position().distance(dets[di].pos) > gate);
                }
            }
        }
    }

    #[test]
    fn spawn_from_unmatched_detection() {
        let mut tracks = Vec::new();
        let mut next_id = 0;
        let det = Detection {
            pos: Vec2::new(3.0, 4.0),
            tick: 7,
        };
        spawn_and_prune(&mut tracks, &[det], &TrackPolicy::default(), &mut next_id);
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].state, [3.0, 4.0, 0.0, 0.0]);
        assert_eq!(tracks[0].age, 1);
        assert_eq!(tracks[0].cov[0][0], 0.25);
        assert_eq!(tracks[0].cov[2][2], 1.0);
        assert_eq!(next_id, 1);
    }

    #[test]
    fn prune_after_missed_threshold() {
        let mut t = track([0.0; 4], eye());
        t.missed = 11;
        let mut keep = track([1.0, 1.0, 0.0, 0.0], eye());
        keep.missed = 10;
        let mut tracks = vec![t, keep];
        let mut next_id = 2;
        spawn_and_prune(&mut tracks, &[], &TrackPolicy::default(), &mut next_id);
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].state[0], 1.0);
    }

    #[test]
    fn coincident_detections_spawn_two_tracks() {
        let mut tracks = Vec::new();
        let mut next_id = 0;
        let d = Detection {
            pos: Vec2::new(1.0, 1.0),
            tick: 0,
        };
        spawn_and_prune(&mut tracks, &[d, d], &TrackPolicy::default(), &mut next_id);
        assert_eq!(tracks.len(), 2);
        assert_ne!(tracks[0].id, tracks[1].id);
    }
}
