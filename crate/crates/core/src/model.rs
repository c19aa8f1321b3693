//! Bloch Hamiltonians: evaluation, bands, and band-structure symmetries.

use ndarray::Array2;
use num_complex::Complex64;

use crate::dsl::ModelSpec;
use crate::error::{Error, Result};
use crate::fourier::FourierSeries;
use crate::linalg;

/// A matrix-valued finite Fourier series over the 2D Brillouin zone.
///
/// Immutable after construction; shareable across threads.
#[derive(Debug, Clone)]
pub struct BlochModel {
    name: String,
    dim: usize,
    /// Row-major `dim x dim` entries.
    entries: Vec<FourierSeries>,
}

/// Eigenvalue multiset at one momentum, sorted by `(Re, Im)`.
///
/// The sort is a storage convention only; band labels are not continued
/// across momenta (degeneracy points make a global labeling ill-defined).
#[derive(Debug, Clone)]
pub struct BandSet {
    pub k: [f64; 2],
    pub energies: Vec<Complex64>,
}

/// Band-structure symmetry operations on momentum space.
///
/// Each variant is the momentum map under which the eigenvalue multiset is
/// compared. A detected invariance may come from a point-group mirror or
/// from reciprocity composed with a mirror; both protect the same
/// impurity-line direction, so the map is the useful identity here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BandSymmetry {
    /// `(kx, ky) -> (-kx, ky)`
    Mx,
    /// `(kx, ky) -> (kx, -ky)`
    My,
    /// `(kx, ky) -> (ky, kx)`, mirror about the `kx = ky` line.
    Mdiag,
    /// `(kx, ky) -> (-ky, -kx)`, mirror about the `kx = -ky` line.
    Manti,
    /// `(kx, ky) -> (-kx, -ky)`, i.e. `E(-k) = E(k)`.
    Reciprocity,
}

impl BandSymmetry {
    pub fn apply(self, k: [f64; 2]) -> [f64; 2] {
        match self {
            BandSymmetry::Mx => [-k[0], k[1]],
            BandSymmetry::My => [k[0], -k[1]],
            BandSymmetry::Mdiag => [k[1], k[0]],
            BandSymmetry::Manti => [-k[1], -k[0]],
            BandSymmetry::Reciprocity => [-k[0], -k[1]],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BandSymmetry::Mx => "Mx",
            BandSymmetry::My => "My",
            BandSymmetry::Mdiag => "Mdiag",
            BandSymmetry::Manti => "Manti",
            BandSymmetry::Reciprocity => "reciprocity",
        }
    }
}

impl BlochModel {
    /// Lower every entry of a validated spec.
    pub fn build(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { name: spec.name.clone(), dim: spec.dim, entries: spec.lower_entries()? })
    }

    pub fn from_entries(name: &str, dim: usize, entries: Vec<FourierSeries>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::ShapeMismatch {
                dim,
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self { name: name.to_string(), dim, entries })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> &FourierSeries {
        &self.entries[row * self.dim + col]
    }

    /// Largest hopping displacement component over all entries.
    pub fn max_range(&self) -> i32 {
        self.entries.iter().map(|s| s.max_range()).max().unwrap_or(0)
    }

    /// The Bloch matrix `H(k)` with entries `sum_l c_l exp(i k . l)`.
    pub fn bloch_matrix(&self, k: [f64; 2]) -> Array2<Complex64> {
        let q = self.dim;
        Array2::from_shape_fn((q, q), |(r, c)| self.entry(r, c).eval(k))
    }

    /// Eigenvalue multiset of the Bloch matrix, sorted by `(Re, Im)`.
    pub fn bands(&self, k: [f64; 2]) -> Result<BandSet> {
        let mut energies = if self.dim == 1 {
            vec![self.entry(0, 0).eval(k)]
        } else {
            linalg::eigenvalues(&self.bloch_matrix(k))?
        };
        energies.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(BandSet { k, energies })
    }

    /// True iff every entry set is Hermitian as an operator:
    /// `H(k)` equals its conjugate transpose for all `k`.
    pub fn is_hermitian(&self) -> bool {
        let q = self.dim;
        (0..q).all(|r| {
            (r..q).all(|c| {
                self.entry(r, c)
                    .approx_eq(&self.entry(c, r).conjugate_reversed(), 1e-12)
            })
        })
    }

    /// Check a band-structure symmetry on a `grid_n x grid_n` momentum grid.
    ///
    /// The eigenvalue multisets at `k` and `sym(k)` are compared with the
    /// Hausdorff distance; returns true iff it stays below `tol` everywhere.
    pub fn band_symmetry_holds(
        &self,
        sym: BandSymmetry,
        grid_n: usize,
        tol: f64,
    ) -> Result<bool> {
        assert!(grid_n >= 8, "symmetry grid must have at least 8 points per axis");
        let step = std::f64::consts::TAU / grid_n as f64;
        for ix in 0..grid_n {
            for iy in 0..grid_n {
                let k = [-std::f64::consts::PI + ix as f64 * step,
                         -std::f64::consts::PI + iy as f64 * step];
                let a = self.bands(k)?.energies;
                let b = self.bands(sym.apply(k))?.energies;
                if multiset_hausdorff(&a, &b) > tol {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// All symmetries from the candidate set that hold on the grid.
    pub fn detected_symmetries(&self, grid_n: usize, tol: f64) -> Result<Vec<BandSymmetry>> {
        let candidates = [
            BandSymmetry::Mx,
            BandSymmetry::My,
            BandSymmetry::Mdiag,
            BandSymmetry::Manti,
            BandSymmetry::Reciprocity,
        ];
        let mut found = Vec::new();
        for sym in candidates {
            if self.band_symmetry_holds(sym, grid_n, tol)? {
                found.push(sym);
            }
        }
        Ok(found)
    }
}

/// Hausdorff distance between two eigenvalue multisets.
pub fn multiset_hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let one_sided = |from: &[Complex64], to: &[Complex64]| {
        from.iter()
            .map(|x| to.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0_f64, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// Built-in model registry.
///
/// `gdse2band` is the dissipative two-band model with the geometry-dependent
/// skin effect; `fig2` the single-band anomalous-scattering example; `fig4`
/// the single-band model whose decay-rate splitting is frequency-selective;
/// `sm-singleband` a single-band model with one vertical mirror.
pub const BUILTIN_NAMES: [&str; 4] = ["gdse2band", "fig2", "fig4", "sm-singleband"];

/// Model description of a built-in, with its default parameters.
pub fn builtin_spec(name: &str) -> Result<ModelSpec> {
    match name {
        "gdse2band" => ModelSpec::new(
            "gdse2band",
            2,
            &[
                ("mu0", 1.35),
                ("muz", -0.05),
                ("t0", -0.4),
                ("t", 0.4),
                ("tz", -0.6),
                ("gamma", 1.0),
            ],
            &[
                "mu0 + t0*(cos(kx)+cos(ky)) + muz + tz*(cos(kx)-cos(ky))",
                "t*(1-cos(kx)-cos(ky)+cos(kx-ky)) - i*t*(sin(kx)-sin(ky)-sin(kx-ky))",
                "t*(1-cos(kx)-cos(ky)+cos(kx-ky)) + i*t*(sin(kx)-sin(ky)-sin(kx-ky))",
                "mu0 + t0*(cos(kx)+cos(ky)) - muz - tz*(cos(kx)-cos(ky)) - i*gamma",
            ],
        ),
        "fig2" => ModelSpec::new(
            "fig2",
            1,
            &[],
            &["2*sin(kx)*cos(ky) - 2*cos(kx) + i*(cos(kx)-1)"],
        ),
        "fig4" => ModelSpec::new(
            "fig4",
            1,
            &[],
            &["cos(kx) + cos(ky) + i*((1/2 - cos(kx) - cos(ky))*cos(kx))"],
        ),
        "sm-singleband" => ModelSpec::new(
            "sm-singleband",
            1,
            &[("g", 1.0)],
            &["-2*(cos(kx)+cos(ky)) + i*g*(cos(ky)-1)"],
        ),
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}

/// Build a built-in model, optionally overriding parameters by name.
pub fn builtin(name: &str, overrides: &[(&str, f64)]) -> Result<BlochModel> {
    let mut spec = builtin_spec(name)?;
    for &(key, value) in overrides {
        if !spec.params.contains_key(key) {
            return Err(Error::UnknownParam(key.to_string()));
        }
        spec.params.insert(key.to_string(), value);
    }
    BlochModel::build(&spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Closed-form dispersion of the two-band built-in:
    /// `E_pm = d0 - i g/2 pm sqrt(|d|^2 - g^2/4 + i g dz)`.
    /// Independent oracle; shares nothing with the eigensolver path.
    fn gdse2band_closed_form(k: [f64; 2], gamma: f64) -> (Complex64, Complex64) {
        let (kx, ky) = (k[0], k[1]);
        let (mu0, muz, t0, t, tz) = (1.35, -0.05, -0.4, 0.4, -0.6);
        let d0 = mu0 + t0 * (kx.cos() + ky.cos());
        let dx = t * (1.0 - kx.cos() - ky.cos() + (kx - ky).cos());
        let dy = t * (kx.sin() - ky.sin() - (kx - ky).sin());
        let dz = muz + tz * (kx.cos() - ky.cos());
        let d2 = dx * dx + dy * dy + dz * dz;
        let root =
            Complex64::new(d2 - gamma * gamma / 4.0, gamma * dz).sqrt();
        let base = Complex64::new(d0, -gamma / 2.0);
        (base + root, base - root)
    }

    #[test]
    fn gdse2band_is_diagonal_at_k_zero() {
        let m = builtin("gdse2band", &[]).unwrap();
        let h = m.bloch_matrix([0.0, 0.0]);
        assert!((h[(0, 0)] - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((h[(1, 1)] - Complex64::new(0.6, -1.0)).norm() < 1e-12);
        assert!(h[(0, 1)].norm() < 1e-12);
        assert!(h[(1, 0)].norm() < 1e-12);
        let bands = m.bands([0.0, 0.0]).unwrap();
        assert!((bands.energies[0] - Complex64::new(0.5, 0.0)).norm() < 1e-10);
        assert!((bands.energies[1] - Complex64::new(0.6, -1.0)).norm() < 1e-10);
    }

    #[test]
    fn bloch_matrix_is_periodic() {
        let m = builtin("gdse2band", &[]).unwrap();
        let k = [0.73, -1.91];
        let shifted = [k[0] + std::f64::consts::TAU, k[1] - std::f64::consts::TAU];
        let a = m.bloch_matrix(k);
        let b = m.bloch_matrix(shifted);
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn fig4_vanishes_at_half_pi() {
        let m = builtin("fig4", &[]).unwrap();
        let h = m.bloch_matrix([std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2]);
        assert!(h[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn gdse2band_band_on_efc_at_three_halves() {
        let m = builtin("gdse2band", &[]).unwrap();
        let bands = m.bands([std::f64::consts::FRAC_PI_2, 0.0]).unwrap();
        let (plus, _minus) = gdse2band_closed_form([std::f64::consts::FRAC_PI_2, 0.0], 1.0);
        // The upper band sits on the omega = 3/2 contour.
        let top = bands.energies[1];
        assert_relative_eq!(top.re, 1.5, epsilon = 1e-3);
        assert!((top - plus).norm() < 1e-9);
    }

    #[test]
    fn bands_match_closed_form_as_multisets() {
        let m = builtin("gdse2band", &[]).unwrap();
        let ks = [[0.1, 0.2], [1.0, -2.0], [-2.5, 0.7], [3.0, 3.0], [0.5, -0.5]];
        for k in ks {
            let bands = m.bands(k).unwrap();
            let (p, q) = gdse2band_closed_form(k, 1.0);
            let d = multiset_hausdorff(&bands.energies, &[p, q]);
            assert!(d < 1e-9, "closed-form mismatch {d:.2e} at {k:?}");
        }
    }

    #[test]
    fn hermitian_limit_has_real_spectrum() {
        let m = builtin("gdse2band", &[("gamma", 0.0)]).unwrap();
        assert!(m.is_hermitian());
        for k in [[0.3, 1.1], [-1.0, 2.2], [2.9, -0.4]] {
            for e in m.bands(k).unwrap().energies {
                assert!(e.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trace_and_determinant_checks() {
        let m = builtin("gdse2band", &[]).unwrap();
        // Simple deterministic pseudo-random momenta.
        let mut state = 0x9e3779b97f4a7c15_u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * std::f64::consts::TAU
                - std::f64::consts::PI
        };
        for _ in 0..100 {
            let k = [next(), next()];
            let h = m.bloch_matrix(k);
            let bands = m.bands(k).unwrap();
            let tr: Complex64 = h[(0, 0)] + h[(1, 1)];
            let sum: Complex64 = bands.energies.iter().sum();
            assert!((tr - sum).norm() < 1e-10);
            let det = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)];
            let prod: Complex64 = bands.energies.iter().product();
            assert!((det - prod).norm() < 1e-9);
            // each root kills det(H - E)
            for e in &bands.energies {
                let resid =
                    (h[(0, 0)] - e) * (h[(1, 1)] - e) - h[(0, 1)] * h[(1, 0)];
                assert!(resid.norm() < 1e-9, "root residual {:.2e}", resid.norm());
            }
        }
    }

    #[test]
    fn gdse2band_has_both_mirrors() {
        let m = builtin("gdse2band", &[]).unwrap();
        assert!(m.band_symmetry_holds(BandSymmetry::Mx, 32, 1e-9).unwrap());
        assert!(m.band_symmetry_holds(BandSymmetry::My, 32, 1e-9).unwrap());
    }

    #[test]
    fn fig2_breaks_mx_keeps_my() {
        let m = builtin("fig2", &[]).unwrap();
        assert!(m.band_symmetry_holds(BandSymmetry::My, 64, 1e-9).unwrap());
        assert!(!m.band_symmetry_holds(BandSymmetry::Mx, 64, 1e-9).unwrap());
    }

    #[test]
    fn unknown_builtin_is_rejected() {
        assert!(matches!(builtin("nonesuch", &[]), Err(Error::UnknownBuiltin(_))));
    }
}
