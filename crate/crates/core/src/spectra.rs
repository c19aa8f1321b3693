//! Open-boundary spectra and frequency-resolved skin-mode densities.

use std::sync::Arc;

use ndarray::Array2;
use ndarray_linalg::SVD;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::LatticeGeometry;
use crate::linalg;
use crate::model::BlochModel;
use crate::operator::real_space_operator;

/// Dimension cap for the dense eigensolver.
pub const DEFAULT_DENSE_CAP: usize = 8000;

/// Full dense eigendecomposition of an open-boundary operator.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    /// Unit-normalized right eigenvectors, one column per eigenvalue.
    pub eigenvectors: Array2<Complex64>,
    pub geometry: Arc<LatticeGeometry>,
    pub dim: usize,
}

/// Density of the eigenstates in one frequency window,
/// `P_omega(r) = sum_{|Re E_i - omega| < delta} |psi_i(r)|^2`.
#[derive(Debug, Clone)]
pub struct DensityField {
    pub omega: f64,
    pub delta: f64,
    /// Per-site density (summed over internal components).
    pub values: Vec<f64>,
    pub n_states: usize,
}

/// Edge-localization summary of a density field.
#[derive(Debug, Clone, Copy)]
pub struct LocalizationMetrics {
    /// Fraction of the density within `edge_width` rings of the boundary.
    pub edge_fraction: f64,
    /// Same fraction for a uniform field: the site-count ratio.
    pub uniform_edge_fraction: f64,
    /// Inverse participation ratio of the normalized density.
    pub ipr: f64,
    pub edge_width: usize,
    pub n_edge_sites: usize,
}

/// Dense non-symmetric eigendecomposition of the open-boundary operator.
///
/// Every eigenpair is validated against the residual bound
/// `||H v - E v|| < 1e-8 ||H||_1`; a violation is reported as an
/// eigensolver failure rather than returned silently.
pub fn obc_spectrum(
    model: &BlochModel,
    geometry: &Arc<LatticeGeometry>,
    cap: usize,
) -> Result<Spectrum> {
    let n = geometry.len() * model.dim();
    if n > cap {
        return Err(Error::DenseCap { n, cap });
    }
    let op = real_space_operator(model, geometry, None)?;
    let dense = op.to_dense();
    let (eigenvalues, eigenvectors) = linalg::eigenpairs(&dense)?;

    let scale = op.norm_one().max(1e-300);
    let product = dense.dot(&eigenvectors);
    let mut worst = 0.0_f64;
    for (j, &e) in eigenvalues.iter().enumerate() {
        let mut resid = 0.0;
        for i in 0..n {
            resid += (product[(i, j)] - e * eigenvectors[(i, j)]).norm_sqr();
        }
        worst = worst.max(resid.sqrt());
    }
    if worst > 1e-8 * scale {
        return Err(Error::Eigensolver(format!(
            "eigenpair residual {worst:.3e} exceeds 1e-8 * ||H|| = {:.3e}",
            1e-8 * scale
        )));
    }

    Ok(Spectrum { eigenvalues, eigenvectors, geometry: Arc::clone(geometry), dim: model.dim() })
}

impl Spectrum {
    /// Indices of eigenvalues with `|Re E - omega| < delta`.
    pub fn window(&self, omega: f64, delta: f64) -> Vec<usize> {
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, e)| (e.re - omega).abs() < delta)
            .map(|(i, _)| i)
            .collect()
    }

    /// 2-norm condition number of the right-eigenvector matrix. Values
    /// beyond ~1e8 flag proximity to an exceptional point, where the
    /// biorthogonal left/right pairing degrades.
    pub fn eigenvector_condition(&self) -> Result<f64> {
        let (_, sv, _) =
            self.eigenvectors.svd(false, false).map_err(|e| Error::Eigensolver(e.to_string()))?;
        let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(smax / smin.max(1e-300))
    }
}

/// Density of the eigenstates with `Re E` within `delta` of `omega`.
///
/// Errors with the nearest available `Re E` when the window is empty.
pub fn frequency_density(spec: &Spectrum, omega: f64, delta: f64) -> Result<DensityField> {
    let selected = spec.window(omega, delta);
    if selected.is_empty() {
        let nearest = spec
            .eigenvalues
            .iter()
            .map(|e| e.re)
            .min_by(|a, b| (a - omega).abs().total_cmp(&(b - omega).abs()))
            .unwrap_or(f64::NAN);
        return Err(Error::EmptyWindow { omega, delta, nearest });
    }
    let n_sites = spec.geometry.len();
    let q = spec.dim;
    let mut values = vec![0.0_f64; n_sites];
    for &j in &selected {
        let col = spec.eigenvectors.column(j);
        for site in 0..n_sites {
            for a in 0..q {
                values[site] += col[site * q + a].norm_sqr();
            }
        }
    }
    Ok(DensityField { omega, delta, values, n_states: selected.len() })
}

/// Edge fraction, uniform baseline, and inverse participation ratio.
///
/// A site is within the edge region when its graph distance to the nearest
/// boundary site is below `edge_width` (so `edge_width = 1` means the
/// boundary ring itself).
pub fn localization_metrics(
    field: &DensityField,
    geometry: &LatticeGeometry,
    edge_width: usize,
) -> LocalizationMetrics {
    assert!(edge_width >= 1, "edge width must be at least one ring");
    let dist = geometry.boundary_distance();
    let in_edge = |i: usize| dist[i] < edge_width;
    let total: f64 = field.values.iter().sum();
    let edge_sum: f64 =
        field.values.iter().enumerate().filter(|(i, _)| in_edge(*i)).map(|(_, v)| v).sum();
    let n_edge_sites = (0..geometry.len()).filter(|&i| in_edge(i)).count();
    let ipr = if total > 0.0 {
        field.values.iter().map(|v| (v / total) * (v / total)).sum()
    } else {
        0.0
    };
    LocalizationMetrics {
        edge_fraction: if total > 0.0 { edge_sum / total } else { 0.0 },
        uniform_edge_fraction: n_edge_sites as f64 / geometry.len() as f64,
        ipr,
        edge_width,
        n_edge_sites,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::ModelSpec;
    use crate::model::builtin;

    #[test]
    fn hermitian_spectrum_is_real() {
        let m = builtin("gdse2band", &[("gamma", 0.0)]).unwrap();
        let g = Arc::new(LatticeGeometry::diamond(8).unwrap());
        let spec = obc_spectrum(&m, &g, DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(spec.eigenvalues.len(), g.len() * 2);
        for e in &spec.eigenvalues {
            assert!(e.im.abs() < 1e-10, "nonreal eigenvalue {e}");
        }
    }

    #[test]
    fn y_independent_model_reduces_to_1d_chain() {
        // a model hopping only along x on an Lx x 1 strip is the 1D chain
        let spec_1d = ModelSpec::new("x-chain", 1, &[], &["2*cos(kx) + i*(cos(kx) - 1)"]).unwrap();
        let m = crate::model::BlochModel::build(&spec_1d).unwrap();
        let lx = 14;
        let strip =
            Arc::new(LatticeGeometry::from_points((0..lx as i32).map(|x| (x, 0)).collect()).unwrap());
        assert_eq!(strip.len(), lx);
        let spec = obc_spectrum(&m, &strip, DEFAULT_DENSE_CAP).unwrap();
        // independent tridiagonal build: onsite t_0 and hoppings t_(+-1)
        let onsite = m.entry(0, 0).coefficient((0, 0));
        let hop_plus = m.entry(0, 0).coefficient((1, 0));
        let hop_minus = m.entry(0, 0).coefficient((-1, 0));
        let mut tri = ndarray::Array2::<Complex64>::zeros((lx, lx));
        for i in 0..lx {
            tri[(i, i)] = onsite;
            if i + 1 < lx {
                tri[(i, i + 1)] = hop_plus;
                tri[(i + 1, i)] = hop_minus;
            }
        }
        let direct = linalg::eigenvalues(&tri).unwrap();
        let d = crate::model::multiset_hausdorff(&spec.eigenvalues, &direct);
        assert!(d < 1e-9, "1D reduction mismatch {d:.2e}");
    }

    #[test]
    fn whole_spectrum_window_is_complete() {
        let m = builtin("fig4", &[]).unwrap();
        let g = Arc::new(LatticeGeometry::diamond(10).unwrap());
        let spec = obc_spectrum(&m, &g, DEFAULT_DENSE_CAP).unwrap();
        let field = frequency_density(&spec, 0.0, 1e6).unwrap();
        assert_eq!(field.n_states, g.len());
        let total: f64 = field.values.iter().sum();
        assert!((total - g.len() as f64).abs() < 1e-8);
    }

    #[test]
    fn empty_window_reports_nearest() {
        let m = builtin("fig4", &[]).unwrap();
        let g = Arc::new(LatticeGeometry::diamond(6).unwrap());
        let spec = obc_spectrum(&m, &g, DEFAULT_DENSE_CAP).unwrap();
        match frequency_density(&spec, 100.0, 0.01) {
            Err(Error::EmptyWindow { nearest, .. }) => assert!(nearest.abs() < 10.0),
            other => panic!("expected empty window, got {other:?}"),
        }
    }

    #[test]
    fn uniform_field_edge_fraction_is_site_ratio() {
        let g = LatticeGeometry::diamond(40).unwrap();
        let field = DensityField {
            omega: 0.0,
            delta: 1.0,
            values: vec![1.0; g.len()],
            n_states: g.len(),
        };
        let metrics = localization_metrics(&field, &g, 3);
        assert!((metrics.edge_fraction - metrics.uniform_edge_fraction).abs() < 1e-12);
        // ipr of a uniform field is 1/N
        assert!((metrics.ipr - 1.0 / g.len() as f64).abs() < 1e-12);
    }

    #[test]
    fn dense_cap_is_enforced() {
        let m = builtin("gdse2band", &[]).unwrap();
        let g = Arc::new(LatticeGeometry::square(20).unwrap());
        assert!(matches!(
            obc_spectrum(&m, &g, 100),
            Err(Error::DenseCap { n: 800, cap: 100 })
        ));
    }

    #[test]
    fn eigenvector_condition_is_modest_for_hermitian_operators() {
        let m = builtin("gdse2band", &[("gamma", 0.0)]).unwrap();
        let g = Arc::new(LatticeGeometry::diamond(6).unwrap());
        let spec = obc_spectrum(&m, &g, DEFAULT_DENSE_CAP).unwrap();
        let cond = spec.eigenvector_condition().unwrap();
        assert!(cond < 1e4, "hermitian eigenbasis should be well conditioned, got {cond:.2e}");
    }
}
