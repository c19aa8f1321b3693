//! Finite Fourier series over the 2D Brillouin zone.
//!
//! A matrix entry of a tight-binding Bloch Hamiltonian is a finite sum
//! `sum_l c_l exp(i k . l)` over integer displacements `l = (l1, l2)`.
//! [`FourierSeries`] stores the map `l -> c_l` and supports the ring
//! operations needed to lower trigonometric-polynomial expressions:
//! addition, convolution product, and scaling. Coefficients with magnitude
//! below [`PRUNE_EPS`] are dropped so that cancellation dust never inflates
//! the hopping range.

use std::collections::BTreeMap;

use num_complex::Complex64;

/// Amplitudes below this magnitude are treated as exact zeros.
pub const PRUNE_EPS: f64 = 1e-14;

/// A finite Fourier series `sum_l c_l exp(i k . l)` on the square lattice.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FourierSeries {
    terms: BTreeMap<(i32, i32), Complex64>,
}

impl FourierSeries {
    /// The zero series.
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }

    /// A constant (the `l = (0,0)` term).
    pub fn constant(c: Complex64) -> Self {
        Self::monomial((0, 0), c)
    }

    /// A single term `c * exp(i k . l)`.
    pub fn monomial(l: (i32, i32), c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c.norm() > PRUNE_EPS {
            terms.insert(l, c);
        }
        Self { terms }
    }

    pub fn from_terms<I: IntoIterator<Item = ((i32, i32), Complex64)>>(iter: I) -> Self {
        let mut s = Self::zero();
        for (l, c) in iter {
            s.accumulate(l, c);
        }
        s
    }

    fn accumulate(&mut self, l: (i32, i32), c: Complex64) {
        let entry = self.terms.entry(l).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() <= PRUNE_EPS {
            self.terms.remove(&l);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of stored terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterate over `(displacement, amplitude)` pairs in displacement order.
    pub fn terms(&self) -> impl Iterator<Item = ((i32, i32), Complex64)> + '_ {
        self.terms.iter().map(|(&l, &c)| (l, c))
    }

    pub fn coefficient(&self, l: (i32, i32)) -> Complex64 {
        self.terms.get(&l).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Largest stored `|l1|` or `|l2|`; zero for the empty series.
    pub fn max_range(&self) -> i32 {
        self.terms
            .keys()
            .map(|&(l1, l2)| l1.abs().max(l2.abs()))
            .max()
            .unwrap_or(0)
    }

    /// `Some(c)` if the series is the constant `c` (or zero), else `None`.
    pub fn try_constant(&self) -> Option<Complex64> {
        match self.terms.len() {
            0 => Some(Complex64::new(0.0, 0.0)),
            1 => self.terms.get(&(0, 0)).copied(),
            _ => None,
        }
    }

    /// Evaluate at a momentum `k` (radians).
    pub fn eval(&self, k: [f64; 2]) -> Complex64 {
        self.terms
            .iter()
            .map(|(&(l1, l2), &c)| c * Complex64::new(0.0, k[0] * l1 as f64 + k[1] * l2 as f64).exp())
            .sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (l, c) in other.terms() {
            out.accumulate(l, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (l, c) in other.terms() {
            out.accumulate(l, -c);
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_terms(self.terms().map(|(l, a)| (l, a * c)))
    }

    /// Convolution product: `(f * g)_l = sum_{m} f_m g_{l-m}`.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (la, ca) in self.terms() {
            for (lb, cb) in other.terms() {
                out.accumulate((la.0 + lb.0, la.1 + lb.1), ca * cb);
            }
        }
        out
    }

    /// The series of the adjoint entry: `l -> conj(c_{-l})`.
    ///
    /// A diagonal Hamiltonian entry is Hermitian iff it equals its own
    /// conjugate-reversal, and an off-diagonal pair `(H_{ab}, H_{ba})` is
    /// Hermitian iff `H_{ba}` equals the conjugate-reversal of `H_{ab}`.
    pub fn conjugate_reversed(&self) -> Self {
        Self::from_terms(self.terms().map(|((l1, l2), c)| ((-l1, -l2), c.conj())))
    }

    /// Term-by-term approximate equality.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let keys: std::collections::BTreeSet<_> =
            self.terms.keys().chain(other.terms.keys()).collect();
        keys.into_iter()
            .all(|&l| (self.coefficient(l) - other.coefficient(l)).norm() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn convolution_matches_pointwise_product() {
        // (cos kx) * (cos ky) evaluated both ways at a few momenta.
        let coskx = FourierSeries::from_terms([((1, 0), c(0.5, 0.0)), ((-1, 0), c(0.5, 0.0))]);
        let cosky = FourierSeries::from_terms([((0, 1), c(0.5, 0.0)), ((0, -1), c(0.5, 0.0))]);
        let prod = coskx.mul(&cosky);
        for &k in &[[0.3_f64, -1.2], [2.0, 0.7], [-2.9, 2.9]] {
            let direct = k[0].cos() * k[1].cos();
            assert!((prod.eval(k) - c(direct, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn pruning_removes_cancellation_dust() {
        let a = FourierSeries::monomial((2, -1), c(0.75, 0.25));
        let diff = a.sub(&a);
        assert!(diff.is_zero());
        assert_eq!(diff.max_range(), 0);
    }

    #[test]
    fn conjugate_reversal_detects_hermiticity() {
        // cos kx + 2 sin ky is Hermitian as an operator entry.
        let herm = FourierSeries::from_terms([
            ((1, 0), c(0.5, 0.0)),
            ((-1, 0), c(0.5, 0.0)),
            ((0, 1), c(0.0, -1.0)),
            ((0, -1), c(0.0, 1.0)),
        ]);
        assert!(herm.approx_eq(&herm.conjugate_reversed(), 1e-15));
        // i cos kx is not.
        let non = FourierSeries::from_terms([((1, 0), c(0.0, 0.5)), ((-1, 0), c(0.0, 0.5))]);
        assert!(!non.approx_eq(&non.conjugate_reversed(), 1e-15));
    }

    #[test]
    fn max_range_tracks_largest_component() {
        let s = FourierSeries::from_terms([((1, -3), c(1.0, 0.0)), ((0, 2), c(1.0, 0.0))]);
        assert_eq!(s.max_range(), 3);
    }
}
