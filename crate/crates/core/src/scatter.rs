//! Impurity-line scattering: pole partition, spectral winding, and the
//! conventional/anomalous classification.
//!
//! An impurity line along a coprime lattice direction conserves the
//! momentum component along the line. In the unimodular frame attached to
//! the line, the dispersion relation at a reference energy becomes a
//! Laurent polynomial `g(E0 + i eta, k_theta, z)` in `z = exp(i k_perp)`,
//! with an `m`-order pole at the origin. Its zeros inside and outside the
//! unit circle carry the transmitted and reflected waves respectively:
//!
//! * conventional scattering: one inside and one outside zero pinch the
//!   unit circle together as `eta -> 0+` (a propagating reflected wave);
//! * anomalous scattering: only the inside zero pinches, the closest
//!   outside zero stays away, and the reflected wave decays like
//!   `exp(kappa * r_perp)` with `kappa = ln |z_out^min|`.
//!
//! The spectral winding number of `g` around zero equals the number of
//! zeros inside the unit circle minus `m`, and is computed both ways
//! (root count and argument-principle quadrature); any disagreement is an
//! error, never silently resolved.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{FourierSeries, PRUNE_EPS};
use crate::linalg;
use crate::model::{BandSymmetry, BlochModel};

/// Unimodular coordinate frame attached to an impurity line.
///
/// `U = [direction | complement]` has determinant one, so integer lattice
/// vectors decompose uniquely as `r = r_par * direction + r_perp *
/// complement`. The line is the set `r_perp = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeFrame {
    /// `(p, q)`: coprime direction along the line.
    pub direction: (i64, i64),
    /// `(a, b)` with `p*b - q*a = 1`.
    pub complement: (i64, i64),
}

impl LatticeFrame {
    /// Build the frame for a coprime direction, completing it to a
    /// unimodular matrix by the extended Euclidean algorithm.
    pub fn new(direction: (i64, i64)) -> Result<Self> {
        let (p, q) = direction;
        if (p, q) == (0, 0) || gcd(p.unsigned_abs(), q.unsigned_abs()) != 1 {
            return Err(Error::BadDirection(p, q));
        }
        // p*u + q*v = 1  =>  complement (a, b) = (-v, u)
        let (u, v) = extended_gcd(p, q);
        let (mut a, mut b) = (-v, u);
        // The completion is unique up to multiples of the direction; pick
        // the shortest one, preferring a positive projection on ties.
        let norm2 = p * p + q * q;
        let t0 = (-(a * p + b * q) as f64 / norm2 as f64).round() as i64;
        (a, b) = [t0 - 1, t0, t0 + 1]
            .into_iter()
            .map(|t| (a + t * p, b + t * q))
            .min_by_key(|&(ca, cb)| (ca * ca + cb * cb, std::cmp::Reverse(ca * p + cb * q)))
            .unwrap();
        let frame = Self { direction, complement: (a, b) };
        debug_assert_eq!(frame.det(), 1);
        Ok(frame)
    }

    pub fn det(&self) -> i64 {
        self.direction.0 * self.complement.1 - self.direction.1 * self.complement.0
    }

    /// Reverse the perpendicular axis (and the direction, keeping det = 1).
    pub fn flipped(&self) -> Self {
        Self {
            direction: (-self.direction.0, -self.direction.1),
            complement: (-self.complement.0, -self.complement.1),
        }
    }

    /// Momentum conjugate to `r_par`: `k . direction`.
    pub fn k_parallel(&self, k: [f64; 2]) -> f64 {
        k[0] * self.direction.0 as f64 + k[1] * self.direction.1 as f64
    }

    /// Momentum conjugate to `r_perp`: `k . complement`.
    pub fn k_perp(&self, k: [f64; 2]) -> f64 {
        k[0] * self.complement.0 as f64 + k[1] * self.complement.1 as f64
    }

    /// Integer frame coordinates `(r_par, r_perp)` of a lattice vector.
    pub fn decompose(&self, r: (i64, i64)) -> (i64, i64) {
        let (p, q) = self.direction;
        let (a, b) = self.complement;
        (b * r.0 - a * r.1, -q * r.0 + p * r.1)
    }

    /// Perpendicular coordinate of a lattice vector.
    pub fn r_perp(&self, r: (i64, i64)) -> i64 {
        -self.direction.1 * r.0 + self.direction.0 * r.1
    }

    /// Rate of change of `r_perp` along a real-space velocity.
    pub fn perp_rate(&self, v: [f64; 2]) -> f64 {
        -self.direction.1 as f64 * v[0] + self.direction.0 as f64 * v[1]
    }

    /// Momentum from frame momenta: `k = U^{-T} (k_par, k_perp)`.
    pub fn reconstruct_k(&self, k_par: f64, k_perp: f64) -> [f64; 2] {
        let (p, q) = (self.direction.0 as f64, self.direction.1 as f64);
        let (a, b) = (self.complement.0 as f64, self.complement.1 as f64);
        [b * k_par - q * k_perp, -a * k_par + p * k_perp]
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `(u, v)` with `p*u + q*v = gcd(p, q)`.
fn extended_gcd(p: i64, q: i64) -> (i64, i64) {
    if q == 0 {
        return (p.signum(), 0);
    }
    let (u, v) = extended_gcd(q, p.rem_euclid(q));
    (v, u - p.div_euclid(q) * v)
}

/// A Laurent polynomial in `z` with complex coefficients.
#[derive(Debug, Clone, Default)]
pub struct LaurentPoly {
    terms: BTreeMap<i64, Complex64>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        Self::term(0, c)
    }

    pub fn term(power: i64, c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c.norm() > PRUNE_EPS {
            terms.insert(power, c);
        }
        Self { terms }
    }

    fn accumulate(&mut self, power: i64, c: Complex64) {
        let entry = self.terms.entry(power).or_insert(linalg::ZERO);
        *entry += c;
        if entry.norm() <= PRUNE_EPS {
            self.terms.remove(&power);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_power(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_power(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    pub fn coefficient(&self, power: i64) -> Complex64 {
        self.terms.get(&power).copied().unwrap_or(linalg::ZERO)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&p, &c) in &other.terms {
            out.accumulate(p, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&p, &c) in &other.terms {
            out.accumulate(p, -c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (&pa, &ca) in &self.terms {
            for (&pb, &cb) in &other.terms {
                out.accumulate(pa + pb, ca * cb);
            }
        }
        out
    }

    pub fn neg(&self) -> Self {
        Self { terms: self.terms.iter().map(|(&p, &c)| (p, -c)).collect() }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.terms.iter().map(|(&p, &c)| c * z.powi(p as i32)).sum()
    }

    /// Derivative as a Laurent polynomial.
    pub fn derivative(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(&p, _)| p != 0)
                .map(|(&p, &c)| (p - 1, c * Complex64::new(p as f64, 0.0)))
                .collect(),
        }
    }

    /// Ascending coefficients of `z^m * self` with `m = max(0, -min_power)`;
    /// returns `(coeffs, m)`.
    pub fn cleared(&self) -> (Vec<Complex64>, usize) {
        match (self.min_power(), self.max_power()) {
            (Some(lo), Some(hi)) => {
                let m = (-lo).max(0) as usize;
                let top = hi.max(0) as usize + m;
                let mut coeffs = vec![linalg::ZERO; top + 1];
                for (&p, &c) in &self.terms {
                    coeffs[(p + m as i64) as usize] = c;
                }
                (coeffs, m)
            }
            _ => (Vec::new(), 0),
        }
    }
}

/// The boundary characteristic polynomial `g(E0 + i eta, k_theta, z)`.
///
/// For single-band models `g = E0 + i eta - H(k_theta, z)`; for multiband
/// models `g = det[(E0 + i eta) I - H(k_theta, z)]`.
#[derive(Debug, Clone)]
pub struct BoundaryPoly {
    pub e0: Complex64,
    pub eta: f64,
    pub k_theta: f64,
    pub laurent: LaurentPoly,
    /// Order of the pole at `z = 0`.
    pub pole_order: usize,
    /// Highest positive power of `z`.
    pub max_positive: usize,
}

/// Substitute the frame momenta into one Fourier series: each hopping `l`
/// contributes `c_l exp(i k_theta m) z^n` with `(m, n)` the frame
/// decomposition of `l`.
fn series_to_laurent(series: &FourierSeries, frame: &LatticeFrame, k_theta: f64) -> LaurentPoly {
    let mut out = LaurentPoly::zero();
    for ((l1, l2), c) in series.terms() {
        let (m, n) = frame.decompose((l1 as i64, l2 as i64));
        let phase = Complex64::new(0.0, k_theta * m as f64).exp();
        out = out.add(&LaurentPoly::term(n, c * phase));
    }
    out
}

/// Build the boundary characteristic polynomial for a model and frame.
pub fn boundary_polynomial(
    model: &BlochModel,
    frame: &LatticeFrame,
    k_theta: f64,
    e0: Complex64,
    eta: f64,
) -> Result<BoundaryPoly> {
    let q = model.dim();
    let e_ref = e0 + Complex64::new(0.0, eta);
    let g = if q == 1 {
        LaurentPoly::constant(e_ref).sub(&series_to_laurent(model.entry(0, 0), frame, k_theta))
    } else {
        // (E0 + i eta) I - H as a matrix of Laurent polynomials
        let mut mat = Vec::with_capacity(q * q);
        for r in 0..q {
            for c in 0..q {
                let mut ent = series_to_laurent(model.entry(r, c), frame, k_theta).neg();
                if r == c {
                    ent = ent.add(&LaurentPoly::constant(e_ref));
                }
                mat.push(ent);
            }
        }
        laurent_det(&mat, q)
    };
    if g.is_zero() {
        return Err(Error::DegenerateBoundaryPoly);
    }
    let pole_order = (-g.min_power().unwrap()).max(0) as usize;
    let max_positive = g.max_power().unwrap().max(0) as usize;
    Ok(BoundaryPoly { e0, eta, k_theta, laurent: g, pole_order, max_positive })
}

/// Determinant of a small matrix of Laurent polynomials by cofactor
/// expansion along the first row.
fn laurent_det(mat: &[LaurentPoly], n: usize) -> LaurentPoly {
    if n == 1 {
        return mat[0].clone();
    }
    let mut det = LaurentPoly::zero();
    for col in 0..n {
        let entry = &mat[col];
        if entry.is_zero() {
            continue;
        }
        let minor: Vec<LaurentPoly> = (1..n)
            .flat_map(|r| (0..n).filter(|&c| c != col).map(move |c| mat[r * n + c].clone()))
            .collect();
        let cofactor = entry.mul(&laurent_det(&minor, n - 1));
        det = if col % 2 == 0 { det.add(&cofactor) } else { det.sub(&cofactor) };
    }
    det
}

/// One zero of `g` with its scattered-wave residue weight
/// `C = 2 pi i / (z g'(z))`.
#[derive(Debug, Clone, Copy)]
pub struct Pole {
    pub z: Complex64,
    pub modulus: f64,
    pub residue_c: Complex64,
}

/// Zeros of `g` partitioned by the unit circle.
#[derive(Debug, Clone)]
pub struct PolePartition {
    /// Inside poles, descending modulus (dominant transmitted first).
    pub inside: Vec<Pole>,
    /// Outside poles, ascending modulus (dominant reflected first).
    pub outside: Vec<Pole>,
}

impl PolePartition {
    pub fn residue_sum(&self) -> Complex64 {
        self.inside.iter().chain(self.outside.iter()).map(|p| p.residue_c).sum()
    }
}

const ON_CIRCLE_TOL: f64 = 1e-9;
const MULTIPLE_ROOT_TOL: f64 = 1e-8;

/// Find and partition all zeros of the boundary polynomial.
pub fn pole_partition(bp: &BoundaryPoly) -> Result<PolePartition> {
    let (coeffs, _m) = bp.laurent.cleared();
    if coeffs.len() < 2 {
        return Err(Error::DegenerateBoundaryPoly);
    }
    let roots = linalg::polynomial_roots(&coeffs)?;
    for (i, zi) in roots.iter().enumerate() {
        for zj in roots.iter().skip(i + 1) {
            let sep = (zi - zj).norm();
            if sep < MULTIPLE_ROOT_TOL * zi.norm().max(1.0) {
                return Err(Error::MultipleRoot(sep));
            }
        }
    }
    let g_prime = bp.laurent.derivative();
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for z in roots {
        let modulus = z.norm();
        if (modulus - 1.0).abs() < ON_CIRCLE_TOL {
            return Err(Error::OnCircleAmbiguity { dist: (modulus - 1.0).abs(), eta: bp.eta });
        }
        let denom = z * g_prime.eval(z);
        let residue_c = Complex64::new(0.0, std::f64::consts::TAU) / denom;
        let pole = Pole { z, modulus, residue_c };
        if modulus < 1.0 {
            inside.push(pole);
        } else {
            outside.push(pole);
        }
    }
    inside.sort_by(|a, b| b.modulus.total_cmp(&a.modulus));
    outside.sort_by(|a, b| a.modulus.total_cmp(&b.modulus));
    Ok(PolePartition { inside, outside })
}

const ARG_PRINCIPLE_SAMPLES: usize = 4096;

/// Spectral winding number of `g` around zero, computed two ways: zeros
/// inside minus pole order, and the argument-principle quadrature over
/// `|z| = 1` with 4096 samples. The two must agree exactly.
pub fn winding_number(bp: &BoundaryPoly) -> Result<i64> {
    let partition = pole_partition(bp)?;
    let from_roots = partition.inside.len() as i64 - bp.pole_order as i64;

    let mut total = 0.0_f64;
    let mut prev = bp.laurent.eval(Complex64::new(1.0, 0.0));
    for j in 1..=ARG_PRINCIPLE_SAMPLES {
        let theta = std::f64::consts::TAU * j as f64 / ARG_PRINCIPLE_SAMPLES as f64;
        let g = bp.laurent.eval(Complex64::from_polar(1.0, theta));
        if g.norm() == 0.0 {
            return Err(Error::OnCircleAmbiguity { dist: 0.0, eta: bp.eta });
        }
        total += (g / prev).arg();
        prev = g;
    }
    let cycles = total / std::f64::consts::TAU;
    let from_integral = cycles.round() as i64;
    if (cycles - from_integral as f64).abs() > 0.25 || from_integral != from_roots {
        return Err(Error::WindingDisagreement {
            root_count: from_roots,
            arg_principle: from_integral,
        });
    }
    Ok(from_roots)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Conventional,
    Anomalous,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Classification::Conventional => write!(f, "Conventional"),
            Classification::Anomalous => write!(f, "Anomalous"),
        }
    }
}

/// Options for the small-eta limit of the classification.
#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    /// Broadenings to sweep, largest first; the limit is extrapolated
    /// linearly from the two smallest.
    pub eta_schedule: Vec<f64>,
    /// Extrapolated circle distances below this count as pinching.
    pub kappa_threshold: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { eta_schedule: vec![1e-2, 1e-3, 1e-4], kappa_threshold: 1e-3 }
    }
}

/// Full classification record for one incident momentum and line direction.
#[derive(Debug, Clone)]
pub struct ScatterReport {
    pub classification: Classification,
    /// Reflected decay rate `ln |z_out^min|` in the `eta -> 0` limit;
    /// zero for conventional scattering.
    pub kappa: f64,
    pub winding: i64,
    pub e0: Complex64,
    pub k_theta: f64,
    /// Frame actually used (flipped if needed so the incident wave moves
    /// toward positive `r_perp`).
    pub frame: LatticeFrame,
    /// Poles at the smallest eta in the schedule.
    pub poles_in: Vec<Pole>,
    pub poles_out: Vec<Pole>,
    pub dominant_in: Complex64,
    pub dominant_out: Complex64,
    /// Momentum of the propagating reflected partner (conventional only).
    pub partner_k: Option<[f64; 2]>,
    pub eta_schedule: Vec<f64>,
    /// `min |z_out| - 1` per eta.
    pub outside_gap: Vec<f64>,
    /// `1 - max |z_in|` per eta.
    pub inside_gap: Vec<f64>,
}

/// Group velocity `d Re E / dk` of the eigen-branch closest to `e_ref`, by
/// central finite differences with nearest-eigenvalue tracking.
pub fn band_velocity(model: &BlochModel, k: [f64; 2], e_ref: Complex64) -> Result<[f64; 2]> {
    let h = 1e-5;
    let nearest = |kk: [f64; 2]| -> Result<f64> {
        let energies = model.bands(kk)?.energies;
        Ok(energies
            .iter()
            .min_by(|a, b| (*a - e_ref).norm().total_cmp(&(*b - e_ref).norm()))
            .map(|e| e.re)
            .unwrap())
    };
    Ok([
        (nearest([k[0] + h, k[1]])? - nearest([k[0] - h, k[1]])?) / (2.0 * h),
        (nearest([k[0], k[1] + h])? - nearest([k[0], k[1] - h])?) / (2.0 * h),
    ])
}

/// Band index (in the `(Re, Im)` sort) whose real part is closest to omega.
pub fn band_index_nearest(model: &BlochModel, k: [f64; 2], omega: f64) -> Result<usize> {
    let energies = model.bands(k)?.energies;
    Ok(energies
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| (a.re - omega).abs().total_cmp(&(b.re - omega).abs()))
        .map(|(i, _)| i)
        .unwrap())
}

/// Linear small-eta extrapolation from the two smallest schedule entries.
fn extrapolate_limit(etas: &[f64], values: &[f64]) -> f64 {
    let n = values.len();
    if n == 1 {
        return values[0];
    }
    let (e1, e2) = (etas[n - 2], etas[n - 1]);
    let (d1, d2) = (values[n - 2], values[n - 1]);
    // d(eta) ~ limit + c * eta
    let limit = (d2 * e1 - d1 * e2) / (e1 - e2);
    limit.max(0.0)
}

fn partition_with_eta_nudges(
    model: &BlochModel,
    frame: &LatticeFrame,
    k_theta: f64,
    e0: Complex64,
    eta: f64,
) -> Result<(f64, BoundaryPoly, PolePartition)> {
    // On-circle hits and multiple roots at one exact eta are resolved by
    // nudging eta, per the error contract.
    let mut last_err = None;
    for factor in [1.0, 1.2589254117941673, 0.7943282347242815] {
        let eta_try = eta * factor;
        let bp = boundary_polynomial(model, frame, k_theta, e0, eta_try)?;
        match pole_partition(&bp) {
            Ok(part) => return Ok((eta_try, bp, part)),
            Err(e @ (Error::OnCircleAmbiguity { .. } | Error::MultipleRoot(_))) => {
                last_err = Some(e);
            }
            Err(other) => return Err(other),
        }
    }
    Err(last_err.unwrap())
}

/// Classify the scattering of the incident Bloch state `(k_i, band)` off an
/// impurity line along `direction`.
///
/// The incident state must move across the line; the frame is flipped if
/// needed so it comes from `r_perp < 0`. Tracks the circle distances of the
/// closest inside and outside zeros over the eta schedule, extrapolates to
/// `eta -> 0+`, and asserts that exactly one inside zero pinches.
pub fn classify_scattering(
    model: &BlochModel,
    k_i: [f64; 2],
    band: usize,
    direction: (i64, i64),
    opts: &ClassifyOptions,
) -> Result<ScatterReport> {
    let q = model.dim();
    if band >= q {
        return Err(Error::InvalidArgument(format!(
            "band index {band} out of range for a {q}-band model"
        )));
    }
    if opts.eta_schedule.is_empty() {
        return Err(Error::InvalidArgument("eta schedule must be nonempty".into()));
    }
    let mut etas = opts.eta_schedule.clone();
    etas.sort_by(|a, b| b.total_cmp(a));

    let e0 = model.bands(k_i)?.energies[band];
    let velocity = band_velocity(model, k_i, e0)?;

    let mut frame = LatticeFrame::new(direction)?;
    let rate = frame.perp_rate(velocity);
    if rate.abs() < 1e-9 {
        return Err(Error::GrazingIncidence);
    }
    if rate < 0.0 {
        frame = frame.flipped();
    }
    let k_theta = frame.k_parallel(k_i);

    let mut outside_gap = Vec::with_capacity(etas.len());
    let mut inside_gap = Vec::with_capacity(etas.len());
    let mut second_inside_gap = Vec::with_capacity(etas.len());
    let mut used_etas = Vec::with_capacity(etas.len());
    let mut last: Option<(BoundaryPoly, PolePartition)> = None;

    for &eta in &etas {
        let (eta_used, bp, part) = partition_with_eta_nudges(model, &frame, k_theta, e0, eta)?;
        if part.inside.is_empty() {
            return Err(Error::ContractViolation(
                "no zero inside the unit circle; incident pole missing".into(),
            ));
        }
        used_etas.push(eta_used);
        outside_gap.push(part.outside.first().map(|p| p.modulus - 1.0).unwrap_or(f64::INFINITY));
        inside_gap.push(1.0 - part.inside[0].modulus);
        second_inside_gap
            .push(part.inside.get(1).map(|p| 1.0 - p.modulus).unwrap_or(f64::INFINITY));
        last = Some((bp, part));
    }
    let (bp, partition) = last.unwrap();

    // Exactly one inside zero must pinch the circle.
    let inside_limit = extrapolate_limit(&used_etas, &inside_gap);
    if inside_limit > opts.kappa_threshold {
        return Err(Error::ContractViolation(format!(
            "closest inside zero stays {inside_limit:.3e} from the unit circle"
        )));
    }
    if second_inside_gap.iter().all(|d| d.is_finite()) {
        let second_limit = extrapolate_limit(&used_etas, &second_inside_gap);
        if second_limit < opts.kappa_threshold {
            return Err(Error::ContractViolation(
                "two inside zeros pinch the unit circle".into(),
            ));
        }
    }

    let outside_finite = outside_gap.iter().all(|d| d.is_finite());
    let outside_limit = if outside_finite {
        extrapolate_limit(&used_etas, &outside_gap)
    } else {
        f64::INFINITY
    };
    let (classification, kappa) = if outside_limit < opts.kappa_threshold {
        (Classification::Conventional, 0.0)
    } else {
        (Classification::Anomalous, (1.0 + outside_limit).ln())
    };

    let winding = winding_number(&bp)?;

    let dominant_in = partition.inside[0].z;
    let dominant_out = partition.outside.first().map(|p| p.z).unwrap_or(linalg::ZERO);
    let partner_k = if classification == Classification::Conventional {
        partition.outside.first().map(|p| {
            let k = frame.reconstruct_k(k_theta, p.z.arg());
            [wrap_to_pi(k[0]), wrap_to_pi(k[1])]
        })
    } else {
        None
    };

    Ok(ScatterReport {
        classification,
        kappa,
        winding,
        e0,
        k_theta,
        frame,
        poles_in: partition.inside,
        poles_out: partition.outside,
        dominant_in,
        dominant_out,
        partner_k,
        eta_schedule: used_etas,
        outside_gap,
        inside_gap,
    })
}

fn wrap_to_pi(x: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut y = (x + std::f64::consts::PI).rem_euclid(tau);
    if y < 0.0 {
        y += tau;
    }
    y - std::f64::consts::PI
}

/// Scattered-wave profile across the impurity line (single-band models).
#[derive(Debug, Clone)]
pub struct ScatteredProfile {
    /// Full-wave amplitude on the line, `psi(k_theta, 0)`.
    pub psi_on_line: Complex64,
    /// `(r_perp, scattered amplitude)` samples.
    pub values: Vec<(i64, Complex64)>,
    pub report: ScatterReport,
}

/// Residue solution of the scattered wave for a `q = 1` model:
/// `phi_s(r) = lambda psi(0) sum_in C z^r` for `r > 0` and
/// `-lambda psi(0) sum_out C z^r` for `r < 0`, with
/// `psi(0) = 1 / (1 - lambda G0(0))` fixed self-consistently.
pub fn scattered_profile(
    model: &BlochModel,
    k_i: [f64; 2],
    direction: (i64, i64),
    lambda: Complex64,
    r_min: i64,
    r_max: i64,
    opts: &ClassifyOptions,
) -> Result<ScatteredProfile> {
    if model.dim() != 1 {
        return Err(Error::InvalidArgument(
            "closed-form scattered profiles exist only for single-band models".into(),
        ));
    }
    let report = classify_scattering(model, k_i, 0, direction, opts)?;
    let eta = *report.eta_schedule.last().unwrap();
    let bp = boundary_polynomial(model, &report.frame, report.k_theta, report.e0, eta)?;
    let partition = pole_partition(&bp)?;

    // On-line Green's function: G0(0) = sum_in C / (2 pi i)
    let two_pi_i = Complex64::new(0.0, std::f64::consts::TAU);
    let g0: Complex64 =
        partition.inside.iter().map(|p| p.residue_c).sum::<Complex64>() / two_pi_i;
    let denom = linalg::ONE - lambda * g0;
    if denom.norm() < 1e-8 {
        return Err(Error::BoundStateResonance(denom.norm()));
    }
    let psi_on_line = denom.inv();

    let prefactor = lambda * psi_on_line;
    let mut values = Vec::with_capacity((r_max - r_min + 1).max(0) as usize);
    for r in r_min..=r_max {
        let amp = if r >= 0 {
            partition.inside.iter().map(|p| p.residue_c * p.z.powi(r as i32)).sum::<Complex64>()
        } else {
            -partition.outside.iter().map(|p| p.residue_c * p.z.powi(r as i32)).sum::<Complex64>()
        };
        values.push((r, prefactor * amp));
    }
    Ok(ScatteredProfile { psi_on_line, values, report })
}

/// A lattice direction along which scattering is conventional for every
/// incident state, and the band-structure invariance protecting it.
#[derive(Debug, Clone, Copy)]
pub struct ProtectedDirection {
    pub direction: (i64, i64),
    /// The momentum-map invariance that protects the direction. The same
    /// map arises from a point-group mirror (line parallel to the mirror)
    /// or from reciprocity composed with the orthogonal mirror (line
    /// perpendicular to that one); both protect the same direction.
    pub symmetry: BandSymmetry,
    /// Whether reciprocity also holds, making the composite reading valid.
    pub composite_with_reciprocity: bool,
}

/// Impurity-line directions guaranteed conventional for all incident
/// momenta, from the mirrors of the band structure.
pub fn symmetry_protected_directions(
    model: &BlochModel,
    grid_n: usize,
    tol: f64,
) -> Result<Vec<ProtectedDirection>> {
    let reciprocal = model.band_symmetry_holds(BandSymmetry::Reciprocity, grid_n, tol)?;
    let candidates = [
        (BandSymmetry::Mx, (0_i64, 1_i64)),
        (BandSymmetry::My, (1, 0)),
        (BandSymmetry::Mdiag, (1, 1)),
        (BandSymmetry::Manti, (1, -1)),
    ];
    let mut out = Vec::new();
    for (sym, direction) in candidates {
        if model.band_symmetry_holds(sym, grid_n, tol)? {
            out.push(ProtectedDirection {
                direction,
                symmetry: sym,
                composite_with_reciprocity: reciprocal,
            });
        }
    }
    Ok(out)
}
