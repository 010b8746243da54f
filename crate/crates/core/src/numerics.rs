//! Complex vector/matrix primitives, Gaussian tail functions and the
//! finite-difference oracle used by all gradient tests.
//!
//! Conventions: channel application uses the plain transpose (`h^T w`, via
//! [`CVec::tdot`]), not the conjugate transpose. Gradients of real functions
//! with respect to complex vectors are complex vectors `g` whose real and
//! imaginary parts are the partial derivatives with respect to the real and
//! imaginary parts of the argument, so they can be checked coordinate by
//! coordinate against central finite differences of the flattened real
//! objective.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};

/// A fixed-length complex vector (beamformer, channel, steering vector,
/// receive filter).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct CVec {
    entries: Vec<Complex64>,
}

impl CVec {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDimension(
                "complex vector must have at least one entry".into(),
            ));
        }
        Ok(Self { entries })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: N >= 1
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.entries
    }

    /// Squared L2 norm, `Σ |x_k|²`.
    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Transpose dot product `Σ a_k b_k` (no conjugation), i.e. `a^T b`.
    pub fn tdot(&self, other: &CVec) -> Complex64 {
        debug_assert_eq!(self.len(), other.len());
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Hermitian dot product `Σ conj(a_k) b_k`, i.e. `a^H b`.
    pub fn hdot(&self, other: &CVec) -> Complex64 {
        debug_assert_eq!(self.len(), other.len());
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn conj(&self) -> CVec {
        CVec {
            entries: self.entries.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scaled(&self, c: Complex64) -> CVec {
        CVec {
            entries: self.entries.iter().map(|z| z * c).collect(),
        }
    }

    pub fn scaled_re(&self, c: f64) -> CVec {
        self.scaled(Complex64::new(c, 0.0))
    }

    /// In-place `self += c * other`.
    pub fn axpy(&mut self, c: Complex64, other: &CVec) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += c * b;
        }
    }

    pub fn add(&self, other: &CVec) -> CVec {
        let mut out = self.clone();
        out.axpy(Complex64::new(1.0, 0.0), other);
        out
    }

    /// Append the 2N real coordinates `[re_0, im_0, re_1, im_1, ...]`.
    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for z in &self.entries {
            out.push(z.re);
            out.push(z.im);
        }
    }

    /// Rebuild from 2N flattened real coordinates.
    pub fn from_real_coords(coords: &[f64]) -> Result<Self> {
        if coords.len() % 2 != 0 || coords.is_empty() {
            return Err(Error::InvalidDimension(format!(
                "need an even, positive number of real coordinates, got {}",
                coords.len()
            )));
        }
        Self::new(
            coords
                .chunks_exact(2)
                .map(|c| Complex64::new(c[0], c[1]))
                .collect(),
        )
    }
}

impl TryFrom<Vec<[f64; 2]>> for CVec {
    type Error = Error;
    fn try_from(pairs: Vec<[f64; 2]>) -> Result<Self> {
        CVec::new(pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect())
    }
}

impl From<CVec> for Vec<[f64; 2]> {
    fn from(v: CVec) -> Self {
        v.entries.iter().map(|z| [z.re, z.im]).collect()
    }
}

/// A rank-one sensing channel matrix `A = β a a^H`, stored in factored form so
/// every product costs O(N) instead of O(N²).
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    beta: Complex64,
    steer: CVec,
}

impl CMat {
    pub fn new(beta: Complex64, steer: CVec) -> Self {
        Self { beta, steer }
    }

    pub fn dim(&self) -> usize {
        self.steer.len()
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    pub fn steer(&self) -> &CVec {
        &self.steer
    }

    /// Matrix trace; every steering entry has unit modulus so this is `β·N`.
    pub fn trace(&self) -> Complex64 {
        self.beta * self.steer.norm_sq()
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.beta * self.steer.as_slice()[r] * self.steer.as_slice()[c].conj()
    }

    /// `A x = β a (a^H x)`.
    pub fn mul_vec(&self, x: &CVec) -> CVec {
        self.steer.scaled(self.beta * self.steer.hdot(x))
    }

    /// `v^T A w = β (v^T a)(a^H w)`.
    pub fn bilinear_t(&self, v: &CVec, w: &CVec) -> Complex64 {
        self.beta * v.tdot(&self.steer) * self.steer.hdot(w)
    }

    /// `a^H w`, the projection of `w` onto the array response.
    pub fn steer_response(&self, w: &CVec) -> Complex64 {
        self.steer.hdot(w)
    }
}

/// Array steering vector of a uniform linear array: entry `k` equals
/// `exp(j 2π k ζ sin θ)`.
pub fn steering_vector(theta: f64, n: usize, zeta: f64) -> Result<CVec> {
    if n == 0 {
        return Err(Error::InvalidDimension(
            "steering vector needs at least one antenna".into(),
        ));
    }
    if zeta <= 0.0 {
        return Err(Error::Domain(format!(
            "antenna spacing ratio must be positive, got {zeta}"
        )));
    }
    let phase = 2.0 * std::f64::consts::PI * zeta * theta.sin();
    CVec::new(
        (0..n)
            .map(|k| Complex64::from_polar(1.0, phase * k as f64))
            .collect(),
    )
}

/// Right tail of the standard Gaussian, `Q(x) = P[Z > x]`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Standard Gaussian density.
fn gauss_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse of [`q_function`] on (0, 1).
///
/// Safeguarded bisection followed by Newton polishing, so the round trip
/// `q_function(q_inverse(p)) = p` holds to 1e-10 across the whole domain.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "q_inverse requires p in (0, 1), got {p}"
        )));
    }
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    // Q is strictly decreasing: Q(lo) ~ 1, Q(hi) ~ 0.
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if q_function(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..4 {
        let f = q_function(x) - p;
        let d = -gauss_pdf(x);
        if d == 0.0 {
            break;
        }
        let step = f / d;
        let next = x - step;
        if next > lo && next < hi {
            x = next;
        }
    }
    Ok(x)
}

/// Central-difference gradient oracle: `(f(x + h e_k) - f(x - h e_k)) / 2h`
/// per real coordinate. Complex arguments are differentiated by flattening
/// them into interleaved real/imaginary coordinates first.
pub fn finite_diff_gradient<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if h <= 0.0 {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let fp = f(&probe);
        probe[k] = x[k] - h;
        let fm = f(&probe);
        probe[k] = x[k];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::Numeric(format!(
                "finite-difference oracle hit a non-finite value at coordinate {k}"
            )));
        }
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn steering_vector_trivial_angles() {
        let a = steering_vector(0.0, 4, 0.5).unwrap();
        for z in a.as_slice() {
            assert_abs_diff_eq!(z.re, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-15);
        }
        let b = steering_vector(std::f64::consts::FRAC_PI_2, 2, 0.5).unwrap();
        assert_abs_diff_eq!(b.as_slice()[1].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.as_slice()[1].im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn steering_vector_quarter_turns() {
        // theta = pi/6 with half-wavelength spacing: phase step pi/2.
        let a = steering_vector(std::f64::consts::FRAC_PI_6, 4, 0.5).unwrap();
        let expected = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        for (z, e) in a.as_slice().iter().zip(expected) {
            assert_abs_diff_eq!(z.re, e.re, epsilon = 1e-12);
            assert_abs_diff_eq!(z.im, e.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn steering_vector_rejects_zero_antennas() {
        assert!(steering_vector(0.3, 0, 0.5).is_err());
    }

    #[test]
    fn q_function_basics() {
        assert_abs_diff_eq!(q_function(0.0), 0.5, epsilon = 1e-15);
        assert!(q_function(10.0) < 1e-20);
        // Derived from numerical integration of the Gaussian density.
        assert_abs_diff_eq!(q_function(1.6448536), 0.05, epsilon = 1e-7);
    }

    #[test]
    fn q_function_against_quadrature_oracle() {
        // Simpson's rule on the Gaussian density over [x, 40], with Kahan
        // summation so the oracle itself is accurate to ~1 ulp.
        let quad = |x: f64| {
            let n = 200_000usize;
            let hi = 40.0;
            let h = (hi - x) / n as f64;
            let mut s = gauss_pdf(x) + gauss_pdf(hi);
            let mut comp = 0.0;
            for k in 1..n {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                let term = w * gauss_pdf(x + k as f64 * h) - comp;
                let next = s + term;
                comp = (next - s) - term;
                s = next;
            }
            s * h / 3.0
        };
        for &x in &[-2.0, -0.5, 0.3, 1.0, 2.5] {
            assert_abs_diff_eq!(q_function(x), quad(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn q_inverse_basics() {
        assert_abs_diff_eq!(q_inverse(0.5).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q_inverse(0.1).unwrap(), 1.2815515655446004, epsilon = 1e-8);
        assert_abs_diff_eq!(q_inverse(q_function(1.3)).unwrap(), 1.3, epsilon = 1e-9);
        assert!(q_inverse(0.0).is_err());
        assert!(q_inverse(1.0).is_err());
        assert!(q_inverse(-0.2).is_err());
    }

    #[test]
    fn q_round_trip_on_wide_grid() {
        let mut x = -6.0;
        while x <= 6.0 {
            let p = q_function(x);
            // The x-space tolerance is conditioning-aware: a 1-ulp change in
            // p near 0 or 1 moves the root by roughly eps/pdf(x).
            let tol_x = 1e-9 + 4.0 * f64::EPSILON / gauss_pdf(x);
            assert_abs_diff_eq!(q_inverse(p).unwrap(), x, epsilon = tol_x);
            assert_abs_diff_eq!(q_function(q_inverse(p).unwrap()), p, epsilon = 1e-10);
            x += 0.25;
        }
    }

    #[test]
    fn q_function_strictly_decreasing() {
        let mut prev = q_function(-8.0);
        let mut x = -7.9;
        while x <= 8.0 {
            let q = q_function(x);
            assert!(q < prev, "Q not strictly decreasing at {x}");
            prev = q;
            x += 0.1;
        }
    }

    #[test]
    fn finite_diff_quadratic() {
        let g = finite_diff_gradient(|x| x.iter().map(|v| v * v).sum(), &[1.0, 2.0], 1e-5)
            .unwrap();
        assert_abs_diff_eq!(g[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(g[1], 4.0, epsilon = 1e-9);

        let z = finite_diff_gradient(|_| 3.25, &[0.3, -0.7, 1.1], 1e-5).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));

        let s = finite_diff_gradient(|x| x[0].sin(), &[0.0], 1e-5).unwrap();
        assert_abs_diff_eq!(s[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn finite_diff_reports_non_finite() {
        let err = finite_diff_gradient(|x| (x[0] - 1.0).ln(), &[1.0], 1e-5);
        assert!(err.is_err());
    }

    #[test]
    fn rank_one_matrix_identities() {
        let a = steering_vector(0.4, 5, 0.5).unwrap();
        let beta = Complex64::new(0.3, -0.7);
        let m = CMat::new(beta, a.clone());
        let tr = m.trace();
        assert_abs_diff_eq!(tr.re, (beta * 5.0).re, epsilon = 1e-12);
        assert_abs_diff_eq!(tr.im, (beta * 5.0).im, epsilon = 1e-12);

        // A x = beta a (a^H x) against explicit entries.
        let x = CVec::new(
            (0..5)
                .map(|k| Complex64::new(0.1 * k as f64 - 0.2, 0.05 * k as f64))
                .collect(),
        )
        .unwrap();
        let y = m.mul_vec(&x);
        for r in 0..5 {
            let mut dense = Complex64::new(0.0, 0.0);
            for c in 0..5 {
                dense += m.entry(r, c) * x.as_slice()[c];
            }
            assert_abs_diff_eq!(y.as_slice()[r].re, dense.re, epsilon = 1e-12);
            assert_abs_diff_eq!(y.as_slice()[r].im, dense.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn flatten_round_trip() {
        let v = CVec::new(vec![Complex64::new(1.0, -2.0), Complex64::new(0.5, 3.0)]).unwrap();
        let mut flat = Vec::new();
        v.flatten_into(&mut flat);
        assert_eq!(flat, vec![1.0, -2.0, 0.5, 3.0]);
        assert_eq!(CVec::from_real_coords(&flat).unwrap(), v);
    }

    proptest! {
        #[test]
        fn steering_norm_is_antenna_count(theta in -1.5f64..1.5, n in 1usize..24) {
            let a = steering_vector(theta, n, 0.5).unwrap();
            prop_assert!((a.norm_sq() - n as f64).abs() < 1e-10);
        }

        #[test]
        fn finite_diff_matches_random_quadratic(
            coeffs in proptest::collection::vec(-2.0f64..2.0, 4),
            x in proptest::collection::vec(-1.0f64..1.0, 4),
        ) {
            // f(x) = sum c_k x_k^2, grad = 2 c_k x_k
            let c = coeffs.clone();
            let g = finite_diff_gradient(
                move |x| x.iter().zip(&c).map(|(v, c)| c * v * v).sum(),
                &x,
                1e-5,
            ).unwrap();
            for k in 0..4 {
                let exact = 2.0 * coeffs[k] * x[k];
                prop_assert!((g[k] - exact).abs() <= 1e-7 * exact.abs().max(1.0));
            }
        }
    }
}
