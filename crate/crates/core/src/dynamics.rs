//! Wave-packet dynamics on finite lattices.
//!
//! States evolve under `d psi / dt = -i H psi` with classic fourth-order
//! Runge-Kutta stepping on the sparse operator. Non-Hermitian evolution
//! shrinks (or grows) the norm, so the state is renormalized to one after
//! every step when requested; snapshots record the normalized fields.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::LatticeGeometry;
use crate::operator::CsrMatrix;
use crate::scatter::LatticeFrame;

/// Stability constant: `dt <= RK4_STABILITY / ||H||_1` is enforced.
pub const RK4_STABILITY: f64 = 0.4;

/// A state vector on a lattice at one time.
#[derive(Debug, Clone)]
pub struct WaveState {
    /// Length `N * q`, site-major (internal index fastest).
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl WaveState {
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
        }
    }

    /// Total density per site (summed over internal components).
    pub fn site_density(&self, dim: usize) -> Vec<f64> {
        self.amplitudes
            .chunks(dim)
            .map(|chunk| chunk.iter().map(|a| a.norm_sqr()).sum())
            .collect()
    }
}

/// Snapshot series from one evolution run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub geometry: Arc<LatticeGeometry>,
    pub dim: usize,
    pub snapshots: Vec<WaveState>,
}

/// Gaussian packet `exp[-(r - r0)^2 / sigma^2 + i k . r]` times a spinor,
/// normalized to one.
///
/// Warns when more than 1% of the weight sits on boundary sites, since
/// open-boundary truncation then distorts the packet from the start.
pub fn gaussian_packet(
    geometry: &Arc<LatticeGeometry>,
    r0: [f64; 2],
    sigma: f64,
    k: [f64; 2],
    spinor: &[Complex64],
) -> Result<WaveState> {
    if sigma <= 0.0 {
        return Err(Error::InvalidArgument("packet width sigma must be positive".into()));
    }
    let q = spinor.len();
    if q == 0 {
        return Err(Error::InvalidArgument("spinor must have at least one component".into()));
    }
    if geometry.index_of((r0[0].round() as i32, r0[1].round() as i32)).is_none() {
        return Err(Error::InvalidArgument(format!(
            "packet center ({}, {}) lies outside the geometry",
            r0[0], r0[1]
        )));
    }
    let mut amplitudes = Vec::with_capacity(geometry.len() * q);
    for &(x, y) in geometry.sites() {
        let dx = x as f64 - r0[0];
        let dy = y as f64 - r0[1];
        let envelope = (-(dx * dx + dy * dy) / (sigma * sigma)).exp();
        let phase = Complex64::new(0.0, k[0] * x as f64 + k[1] * y as f64).exp();
        let site_amp = envelope * phase;
        for s in spinor {
            amplitudes.push(site_amp * s);
        }
    }
    let mut state = WaveState { amplitudes, time: 0.0 };
    let boundary_weight: f64 = geometry
        .sites()
        .iter()
        .enumerate()
        .filter(|(i, _)| geometry.is_boundary(*i))
        .flat_map(|(i, _)| state.amplitudes[i * q..(i + 1) * q].iter().map(|a| a.norm_sqr()))
        .sum();
    let total: f64 = state.amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if boundary_weight > 0.01 * total {
        log::warn!(
            "gaussian packet puts {:.2}% of its weight on boundary sites",
            100.0 * boundary_weight / total
        );
    }
    state.normalize();
    Ok(state)
}

/// Evolve a state for `n_steps` of size `dt`, capturing snapshots at the
/// steps nearest the requested times.
///
/// `renormalize` rescales the norm to one after every step (the normalized
/// evolution `psi(t) = N(t) exp(-i H t) phi_0`); without it the raw
/// semigroup evolution is used. Errors on norm underflow, non-finite
/// amplitudes, or a time step above the RK4 stability bound.
#[allow(clippy::too_many_arguments)]
pub fn evolve(
    operator: &CsrMatrix,
    geometry: &Arc<LatticeGeometry>,
    dim: usize,
    initial: &WaveState,
    dt: f64,
    n_steps: usize,
    snapshot_times: &[f64],
    renormalize: bool,
) -> Result<Trajectory> {
    let n = operator.n();
    if initial.amplitudes.len() != n {
        return Err(Error::InvalidArgument(format!(
            "state length {} does not match operator dimension {}",
            initial.amplitudes.len(),
            n
        )));
    }
    if dt <= 0.0 {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    let bound = RK4_STABILITY / operator.norm_one().max(1e-300);
    if dt > bound {
        return Err(Error::UnstableTimeStep { dt, bound });
    }

    // map requested times to step indices (nearest step)
    let mut snap_steps: Vec<usize> = snapshot_times
        .iter()
        .map(|&t| (t / dt).round().max(0.0) as usize)
        .map(|s| s.min(n_steps))
        .collect();
    snap_steps.sort_unstable();
    snap_steps.dedup();

    let mut psi = initial.amplitudes.clone();
    let mut snapshots: Vec<WaveState> = Vec::with_capacity(snap_steps.len());
    let mut snap_iter = snap_steps.iter().peekable();

    let mut k1 = vec![Complex64::new(0.0, 0.0); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut work = k1.clone();
    let mut stage = k1.clone();

    let minus_i = Complex64::new(0.0, -1.0);
    let rhs = |op: &CsrMatrix, x: &[Complex64], out: &mut [Complex64], tmp: &mut [Complex64]| {
        op.matvec(x, tmp);
        for (o, t) in out.iter_mut().zip(tmp.iter()) {
            *o = minus_i * t;
        }
    };

    if snap_iter.peek() == Some(&&0) {
        snapshots.push(WaveState { amplitudes: psi.clone(), time: 0.0 });
        snap_iter.next();
    }

    for step in 1..=n_steps {
        // classic RK4
        rhs(operator, &psi, &mut k1, &mut work);
        for i in 0..n {
            stage[i] = psi[i] + 0.5 * dt * k1[i];
        }
        rhs(operator, &stage, &mut k2, &mut work);
        for i in 0..n {
            stage[i] = psi[i] + 0.5 * dt * k2[i];
        }
        rhs(operator, &stage, &mut k3, &mut work);
        for i in 0..n {
            stage[i] = psi[i] + dt * k3[i];
        }
        rhs(operator, &stage, &mut k4, &mut work);
        for i in 0..n {
            psi[i] += dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }

        let norm_sq: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sq.is_finite() {
            return Err(Error::NanDetected(step as f64 * dt));
        }
        if norm_sq < 1e-280 {
            return Err(Error::NormUnderflow(step as f64 * dt));
        }
        if renormalize {
            let inv = norm_sq.sqrt().recip();
            for a in &mut psi {
                *a *= inv;
            }
        }

        if snap_iter.peek() == Some(&&step) {
            snapshots.push(WaveState { amplitudes: psi.clone(), time: step as f64 * dt });
            snap_iter.next();
        }
    }

    Ok(Trajectory { geometry: Arc::clone(geometry), dim, snapshots })
}

/// Per-snapshot weights of a site partition; every site gets the label
/// produced by `partition` and densities within each label are summed.
pub fn region_weights(
    traj: &Trajectory,
    partition: &dyn Fn((i32, i32)) -> String,
) -> Vec<std::collections::BTreeMap<String, f64>> {
    let labels: Vec<String> = traj.geometry.sites().iter().map(|&site| partition(site)).collect();
    traj.snapshots
        .iter()
        .map(|snap| {
            let density = snap.site_density(traj.dim);
            let mut weights = std::collections::BTreeMap::new();
            for (label, d) in labels.iter().zip(density.iter()) {
                *weights.entry(label.clone()).or_insert(0.0) += d;
            }
            weights
        })
        .collect()
}

/// Standard three-way partition for impurity-line runs: `"near"` within
/// `strip_halfwidth` of the line (in integer chain units), `"neg"` and
/// `"pos"` by the sign of the perpendicular coordinate beyond it.
pub fn line_partition(
    frame: LatticeFrame,
    anchor: (i32, i32),
    strip_halfwidth: i64,
) -> impl Fn((i32, i32)) -> String {
    move |(x, y)| {
        let r_perp = frame.r_perp(((x - anchor.0) as i64, (y - anchor.1) as i64));
        if r_perp.abs() <= strip_halfwidth {
            "near".to_string()
        } else if r_perp < 0 {
            "neg".to_string()
        } else {
            "pos".to_string()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::ModelSpec;
    use crate::model::{builtin, BlochModel};
    use crate::operator::real_space_operator;

    fn hermitian_chain_2d() -> BlochModel {
        let spec = ModelSpec::new("nn", 1, &[], &["cos(kx) + cos(ky)"]).unwrap();
        BlochModel::build(&spec).unwrap()
    }

    #[test]
    fn packet_is_normalized_and_centered() {
        let g = Arc::new(LatticeGeometry::square(30).unwrap());
        let state = gaussian_packet(
            &g,
            [14.0, 20.0],
            4.0,
            [std::f64::consts::FRAC_PI_2, 0.0],
            &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
        )
        .unwrap();
        assert!((state.norm() - 1.0).abs() < 1e-12);
        let density = state.site_density(2);
        let (imax, _) =
            density.iter().enumerate().max_by(|(_, a), (_, b)| a.total_cmp(b)).unwrap();
        assert_eq!(g.site(imax), (14, 20));
    }

    #[test]
    fn broad_packet_limit_is_nearly_uniform() {
        let g = Arc::new(LatticeGeometry::square(10).unwrap());
        let state =
            gaussian_packet(&g, [4.5, 4.5], 1e4, [0.0, 0.0], &[Complex64::new(1.0, 0.0)]).unwrap();
        let density = state.site_density(1);
        let expect = 1.0 / g.len() as f64;
        for d in density {
            assert!((d - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn hermitian_norm_drift_is_tiny_without_renormalization() {
        let m = hermitian_chain_2d();
        let g = Arc::new(LatticeGeometry::square(16).unwrap());
        let op = real_space_operator(&m, &g, None).unwrap();
        let psi0 =
            gaussian_packet(&g, [8.0, 8.0], 3.0, [0.5, 0.3], &[Complex64::new(1.0, 0.0)]).unwrap();
        let dt = 0.01;
        let steps = (20.0 / dt) as usize;
        let traj = evolve(&op, &g, 1, &psi0, dt, steps, &[20.0], false).unwrap();
        let final_norm = traj.snapshots.last().unwrap().norm();
        assert!((final_norm - 1.0).abs() < 1e-8, "norm drift {:.3e}", final_norm - 1.0);
    }

    #[test]
    fn renormalized_hermitian_evolution_matches_plain() {
        let m = hermitian_chain_2d();
        let g = Arc::new(LatticeGeometry::square(10).unwrap());
        let op = real_space_operator(&m, &g, None).unwrap();
        let psi0 =
            gaussian_packet(&g, [5.0, 5.0], 2.0, [0.4, -0.2], &[Complex64::new(1.0, 0.0)])
                .unwrap();
        let a = evolve(&op, &g, 1, &psi0, 0.01, 500, &[5.0], false).unwrap();
        let b = evolve(&op, &g, 1, &psi0, 0.01, 500, &[5.0], true).unwrap();
        let pa = &a.snapshots[0].amplitudes;
        let pb = &b.snapshots[0].amplitudes;
        let diff: f64 =
            pa.iter().zip(pb.iter()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff < 1e-7, "renormalization changed a unitary evolution by {diff:.2e}");
    }

    #[test]
    fn fourth_order_convergence_under_dt_halving() {
        let m = builtin("gdse2band", &[]).unwrap();
        let g = Arc::new(LatticeGeometry::square(8).unwrap());
        let op = real_space_operator(&m, &g, None).unwrap();
        let psi0 = gaussian_packet(
            &g,
            [4.0, 4.0],
            2.0,
            [0.7, 0.1],
            &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
        )
        .unwrap();
        let run = |dt: f64| {
            let steps = (2.0 / dt).round() as usize;
            evolve(&op, &g, 2, &psi0, dt, steps, &[2.0], false).unwrap().snapshots[0]
                .amplitudes
                .clone()
        };
        let coarse = run(0.02);
        let fine = run(0.01);
        let finest = run(0.005);
        let err_coarse: f64 =
            coarse.iter().zip(finest.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let err_fine: f64 =
            fine.iter().zip(finest.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err_fine < 1e-6);
        // halving dt cuts the error by roughly 2^4 (the finest reference
        // biases the ratio toward 8-16)
        assert!(
            err_coarse / err_fine.max(1e-300) > 8.0,
            "convergence ratio {:.1}",
            err_coarse / err_fine
        );
    }

    #[test]
    fn unstable_time_step_is_rejected() {
        let m = hermitian_chain_2d();
        let g = Arc::new(LatticeGeometry::square(6).unwrap());
        let op = real_space_operator(&m, &g, None).unwrap();
        let psi0 =
            gaussian_packet(&g, [3.0, 3.0], 1.5, [0.0, 0.0], &[Complex64::new(1.0, 0.0)]).unwrap();
        let err = evolve(&op, &g, 1, &psi0, 1.0, 10, &[1.0], true);
        assert!(matches!(err, Err(Error::UnstableTimeStep { .. })));
    }

    #[test]
    fn weights_sum_to_one_and_track_packet_side() {
        let m = builtin("sm-singleband", &[]).unwrap();
        let g = Arc::new(LatticeGeometry::square(24).unwrap());
        let frame = LatticeFrame::new((0, 1)).unwrap();
        let psi0 =
            gaussian_packet(&g, [6.0, 12.0], 3.0, [1.0, 0.0], &[Complex64::new(1.0, 0.0)])
                .unwrap();
        let op = real_space_operator(&m, &g, None).unwrap();
        let traj = evolve(&op, &g, 1, &psi0, 0.02, 50, &[0.0, 1.0], true).unwrap();
        let weights = region_weights(&traj, &line_partition(frame, (12, 12), 3));
        for w in &weights {
            let total: f64 = w.values().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        // packet starts well left of the strip around x = 12
        let side: f64 = weights[0].get("neg").copied().unwrap_or(0.0)
            + weights[0].get("pos").copied().unwrap_or(0.0);
        assert!(side > 0.9);
    }

    #[test]
    fn free_packet_moves_at_the_group_velocity() {
        // centroid displacement over a time window tracks d Re E / dk
        let m = builtin("gdse2band", &[]).unwrap();
        let g = Arc::new(LatticeGeometry::square(40).unwrap());
        let op = real_space_operator(&m, &g, None).unwrap();
        let k_i = [std::f64::consts::FRAC_PI_2, 0.0];
        let psi0 = gaussian_packet(
            &g,
            [14.0, 20.0],
            4.0,
            k_i,
            &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
        )
        .unwrap();
        let traj = evolve(&op, &g, 2, &psi0, 0.02, 200, &[1.0, 4.0], true).unwrap();
        let centroid = |state: &WaveState| {
            let d = state.site_density(2);
            let mut cx = 0.0;
            let mut cy = 0.0;
            for (i, w) in d.iter().enumerate() {
                let (x, y) = g.site(i);
                cx += w * x as f64;
                cy += w * y as f64;
            }
            [cx, cy]
        };
        let c1 = centroid(&traj.snapshots[0]);
        let c2 = centroid(&traj.snapshots[1]);
        let measured = [(c2[0] - c1[0]) / 3.0, (c2[1] - c1[1]) / 3.0];
        let e0 = m.bands(k_i).unwrap().energies[1];
        let v = crate::scatter::band_velocity(&m, k_i, e0).unwrap();
        let err = ((measured[0] - v[0]).powi(2) + (measured[1] - v[1]).powi(2)).sqrt();
        let speed = (v[0] * v[0] + v[1] * v[1]).sqrt();
        assert!(err < 0.1 * speed, "centroid velocity {measured:?} vs band {v:?}");
    }
}
