//! The Poisson-type kernel, its primitive in the angular variable, the
//! closed-form gradient factors `K1`/`K2`, and the gradient of a
//! checkerboard atom's extension.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atoms::SpecialAtom;
use crate::error::{Error, Result};
use crate::TWO_PI;

/// `3 √(4 ln²2 + π²)`, the constant the `K2` bound is stated with.
pub const K2_STATED_BOUND: f64 = 10.301_589_591_459_148;

/// A point `z = r e^{iθ}` of the open polydisc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolydiscPoint {
    radius: Vec<f64>,
    angle: Vec<f64>,
}

impl PolydiscPoint {
    pub fn new(radius: Vec<f64>, angle: Vec<f64>) -> Result<Self> {
        if radius.len() != angle.len() {
            return Err(Error::DimensionMismatch {
                expected: radius.len(),
                got: angle.len(),
            });
        }
        if radius.is_empty() {
            return Err(Error::InvalidArgument("polydisc point needs at least one coordinate".into()));
        }
        if let Some(&r) = radius.iter().find(|r| !(**r >= 0.0 && **r < 1.0)) {
            return Err(Error::Domain { modulus: r.abs() });
        }
        if angle.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("angles must be finite".into()));
        }
        Ok(PolydiscPoint { radius, angle })
    }

    /// Every coordinate at radius `r` with the given angles.
    pub fn diagonal(r: f64, angle: &[f64]) -> Result<Self> {
        Self::new(vec![r; angle.len()], angle.to_vec())
    }

    pub fn from_complex(z: &[Complex64]) -> Result<Self> {
        Self::new(z.iter().map(|z| z.norm()).collect(), z.iter().map(|z| z.arg()).collect())
    }

    pub fn dim(&self) -> usize {
        self.radius.len()
    }

    pub fn radius(&self) -> &[f64] {
        &self.radius
    }

    pub fn angle(&self) -> &[f64] {
        &self.angle
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.radius
            .iter()
            .zip(&self.angle)
            .map(|(&r, &t)| Complex64::from_polar(r, t))
            .collect()
    }
}

fn check_disc(z: Complex64) -> Result<()> {
    let m = z.norm();
    if m < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { modulus: m })
    }
}

fn check_all(z: &[Complex64]) -> Result<()> {
    z.iter().try_for_each(|&z| check_disc(z))
}

/// `(e^{iξ} + z) / (e^{iξ} - z)`.
pub fn poisson_factor(z: Complex64, xi: f64) -> Result<Complex64> {
    check_disc(z)?;
    let e = Complex64::cis(xi);
    Ok((e + z) / (e - z))
}

/// `∂/∂z (e^{iξ} + z) / (e^{iξ} - z) = 2 e^{iξ} / (e^{iξ} - z)²`.
pub fn poisson_derivative(z: Complex64, xi: f64) -> Result<Complex64> {
    check_disc(z)?;
    let e = Complex64::cis(xi);
    let d = e - z;
    Ok(2.0 * e / (d * d))
}

/// `∏_j P(z_j, ξ_j)`.
pub fn product_kernel(z: &[Complex64], xi: &[f64]) -> Result<Complex64> {
    if z.len() != xi.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            got: xi.len(),
        });
    }
    z.iter()
        .zip(xi)
        .try_fold(Complex64::new(1.0, 0.0), |acc, (&z, &x)| Ok(acc * poisson_factor(z, x)?))
}

/// Principal `Log(1 + w)` without cancellation for small `w`.
fn ln_1p(w: Complex64) -> Complex64 {
    let t = 2.0 * w.re + w.norm_sqr();
    let re = if t > -0.5 {
        0.5 * t.ln_1p()
    } else {
        (1.0 + w.re).hypot(w.im).ln()
    };
    let im = w.im.atan2(1.0 + w.re);
    Complex64::new(re, im)
}

/// `iθ + Log(1 - z e^{-iθ})`, a branch of `ln(e^{iθ} - z)` continuous in `z`
/// on the open disc.
pub fn log_shifted(theta: f64, z: Complex64) -> Result<Complex64> {
    check_disc(z)?;
    Ok(log_shifted_unchecked(theta, z))
}

fn log_shifted_unchecked(theta: f64, z: Complex64) -> Complex64 {
    Complex64::new(0.0, theta) + ln_1p(-z * Complex64::cis(-theta))
}

/// `K1(a, h, z) = (1/i)[1/(z - e^{i(a-h)}) + 1/(z - e^{i(a+h)}) + 2/(e^{ia} - z)]`,
/// evaluated in the cancellation-free form
/// `-2i e^{ia}(z + e^{ia})(1 - cos h) / ((e^{ia} - z) Q)`,
/// `Q = (e^{ia} - z)² + 2 e^{ia} z (1 - cos h)`.
pub fn k1(a: f64, h: f64, z: Complex64) -> Result<Complex64> {
    check_disc(z)?;
    Ok(k1_unchecked(a, h, z))
}

fn k1_unchecked(a: f64, h: f64, z: Complex64) -> Complex64 {
    let e = Complex64::cis(a);
    let c = 2.0 * (0.5 * h).sin().powi(2);
    let d = e - z;
    let q = d * d + 2.0 * c * e * z;
    Complex64::new(0.0, -2.0 * c) * e * (z + e) / (d * q)
}

/// `K1` straight from its three-term definition.
pub fn k1_direct(a: f64, h: f64, z: Complex64) -> Result<Complex64> {
    check_disc(z)?;
    let t = 1.0 / (z - Complex64::cis(a - h)) + 1.0 / (z - Complex64::cis(a + h)) + 2.0 / (Complex64::cis(a) - z);
    Ok(t / Complex64::i())
}

/// `K2(a, h, z) = (2/i)[ln(e^{i(a-h)} - z) + ln(e^{i(a+h)} - z) - 2 ln(e^{ia} - z)]`.
pub fn k2(a: f64, h: f64, z: Complex64) -> Result<Complex64> {
    check_disc(z)?;
    Ok(k2_unchecked(a, h, z))
}

fn k2_unchecked(a: f64, h: f64, z: Complex64) -> Complex64 {
    // The iθ parts of the three log_shifted terms cancel identically.
    let l = |t: f64| ln_1p(-z * Complex64::cis(-t));
    let s = l(a - h) + l(a + h) - 2.0 * l(a);
    Complex64::new(0.0, -2.0) * s
}

/// `(K1, K2)` at once.
pub fn k_pair(a: f64, h: f64, z: Complex64) -> Result<(Complex64, Complex64)> {
    check_disc(z)?;
    Ok((k1_unchecked(a, h, z), k2_unchecked(a, h, z)))
}

/// Upper envelope `(8/3) h² / |e^{ia} - z|³`, valid where `|e^{ia} - z| > 2h`.
pub fn k1_upper_envelope(h: f64, delta: f64) -> f64 {
    8.0 / 3.0 * h * h / delta.powi(3)
}

/// Lower envelope `(2 - δ)(h² - h⁴/12) / (2 δ³)`, valid where `h < δ`.
pub fn k1_lower_envelope(h: f64, delta: f64) -> f64 {
    (2.0 - delta) * (h * h - h.powi(4) / 12.0) / (2.0 * delta.powi(3))
}

/// `∫_lo^hi P(z, ξ) dξ` from the primitive `Π(ξ) = ξ - 2i Log(1 - z e^{-iξ})`.
pub fn coordinate_primitive(lo: f64, hi: f64, z: Complex64) -> Result<Complex64> {
    check_disc(z)?;
    Ok(primitive_unchecked(lo, hi, z))
}

fn primitive_unchecked(lo: f64, hi: f64, z: Complex64) -> Complex64 {
    let pi = |x: f64| Complex64::new(x, 0.0) - Complex64::new(0.0, 2.0) * ln_1p(-z * Complex64::cis(-x));
    pi(hi) - pi(lo)
}

/// `∂/∂z ∫_lo^hi P(z, ξ) dξ = 2i [1/(e^{i·hi} - z) - 1/(e^{i·lo} - z)]`.
pub fn primitive_derivative(lo: f64, hi: f64, z: Complex64) -> Result<Complex64> {
    check_disc(z)?;
    Ok(primitive_derivative_unchecked(lo, hi, z))
}

fn primitive_derivative_unchecked(lo: f64, hi: f64, z: Complex64) -> Complex64 {
    Complex64::new(0.0, 2.0) * (1.0 / (Complex64::cis(hi) - z) - 1.0 / (Complex64::cis(lo) - z))
}

/// Sign-and-factor constant of the checkerboard gradient in dimension `d`:
/// `f_j = κ_d / (w(J)(2π)^d) · K1_j ∏_{l≠j} K2_l` with `κ_d = 2(-1)^{d+1}`.
pub fn kappa(d: usize) -> f64 {
    if d % 2 == 1 {
        2.0
    } else {
        -2.0
    }
}

/// `C(J) = κ_d / (w(J)(2π)^d)`.
pub fn gradient_constant(d: usize, wj: f64) -> f64 {
    kappa(d) / (wj * TWO_PI.powi(d as i32))
}

fn require_checkerboard(atom: &SpecialAtom, z: &[Complex64]) -> Result<()> {
    if !atom.pattern().is_checkerboard() {
        return Err(Error::PatternUnsupported);
    }
    if z.len() != atom.dim() {
        return Err(Error::DimensionMismatch {
            expected: atom.dim(),
            got: z.len(),
        });
    }
    check_all(z)
}

/// `∂F/∂z_j` for a checkerboard atom.
pub fn grad_component(atom: &SpecialAtom, j: usize, z: &[Complex64]) -> Result<Complex64> {
    require_checkerboard(atom, z)?;
    if j >= atom.dim() {
        return Err(Error::InvalidArgument(format!("coordinate {j} out of range for d = {}", atom.dim())));
    }
    let cube = atom.cube();
    let mut value = Complex64::new(gradient_constant(atom.dim(), atom.wj()), 0.0);
    for (l, &zl) in z.iter().enumerate() {
        let (a, h) = (cube.center()[l], cube.halfwidth()[l]);
        value *= if l == j { k1_unchecked(a, h, zl) } else { k2_unchecked(a, h, zl) };
    }
    Ok(value)
}

/// All `d` gradient components of a checkerboard atom's extension.
pub fn atom_gradient(atom: &SpecialAtom, z: &[Complex64]) -> Result<Vec<Complex64>> {
    require_checkerboard(atom, z)?;
    let cube = atom.cube();
    let pairs: Vec<(Complex64, Complex64)> = z
        .iter()
        .enumerate()
        .map(|(l, &zl)| {
            let (a, h) = (cube.center()[l], cube.halfwidth()[l]);
            (k1_unchecked(a, h, zl), k2_unchecked(a, h, zl))
        })
        .collect();
    let c = gradient_constant(atom.dim(), atom.wj());
    Ok((0..z.len())
        .map(|j| {
            pairs
                .iter()
                .enumerate()
                .fold(Complex64::new(c, 0.0), |acc, (l, p)| acc * if l == j { p.0 } else { p.1 })
        })
        .collect())
}

/// `√(Σ |f_j|²)`.
pub fn grad_norm(components: &[Complex64]) -> f64 {
    components.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Cube, SignPattern};
    use crate::quadrature;

    #[test]
    fn k2_finite_next_to_the_pole() {
        let (a, h) = (1.0, 0.25);
        for k in [20, 30, 40, 50] {
            let r = 1.0 - 0.5f64.powi(k);
            for dt in [0.0, 1e-12, 1e-9, 1e-6] {
                let z = Complex64::from_polar(r, a - h + dt);
                let v = k2(a, h, z).unwrap();
                assert!(v.is_finite(), "k = {k}, dt = {dt}: {v}");
            }
        }
    }
    use crate::weights::ProductWeight;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_disc(rng: &mut ChaCha8Rng, rmax: f64) -> Complex64 {
        Complex64::from_polar(rmax * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..TWO_PI))
    }

    #[test]
    fn stated_bound_constant() {
        let v = 3.0 * (4.0 * 2f64.ln().powi(2) + std::f64::consts::PI.powi(2)).sqrt();
        assert_relative_eq!(v, K2_STATED_BOUND, max_relative = 1e-15);
    }

    #[test]
    fn poisson_factor_examples() {
        assert_eq!(poisson_factor(c(0.0, 0.0), 1.3).unwrap(), c(1.0, 0.0));
        assert_relative_eq!(poisson_factor(c(0.5, 0.0), 0.0).unwrap().re, 3.0, epsilon = 1e-15);
        assert!(matches!(poisson_factor(c(1.0, 0.0), 0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn real_part_is_classical_poisson_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let r: f64 = rng.gen_range(0.0..0.99);
            let th: f64 = rng.gen_range(0.0..TWO_PI);
            let xi: f64 = rng.gen_range(0.0..TWO_PI);
            let p = poisson_factor(Complex64::from_polar(r, th), xi).unwrap();
            let classic = (1.0 - r * r) / (1.0 - 2.0 * r * (xi - th).cos() + r * r);
            assert!((p.re - classic).abs() < 1e-14 * classic.max(1.0));
        }
    }

    #[test]
    fn product_kernel_examples() {
        assert_eq!(product_kernel(&[c(0.0, 0.0); 3], &[1.0, 2.0, 3.0]).unwrap(), c(1.0, 0.0));
        let v = product_kernel(&[c(0.5, 0.0), c(0.0, 0.0)], &[0.0, 2.2]).unwrap();
        assert_relative_eq!(v.re, 3.0, epsilon = 1e-15);
        assert!(product_kernel(&[c(0.5, 0.0)], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn log_shifted_examples() {
        assert_eq!(log_shifted(0.7, c(0.0, 0.0)).unwrap(), c(0.0, 0.7));
        assert_relative_eq!(log_shifted(0.0, c(0.5, 0.0)).unwrap().re, 0.5f64.ln(), epsilon = 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let z = random_disc(&mut rng, 0.999);
            let th = rng.gen_range(-10.0..10.0);
            let e = log_shifted(th, z).unwrap().exp();
            assert!((e - (Complex64::cis(th) - z)).norm() < 1e-14);
        }
    }

    #[test]
    fn log_shifted_is_continuous_across_the_negative_axis() {
        // θ = π: a raw principal log of e^{iθ} - z would jump as z crosses the real axis
        let above = log_shifted(std::f64::consts::PI, c(0.3, 1e-12)).unwrap();
        let below = log_shifted(std::f64::consts::PI, c(0.3, -1e-12)).unwrap();
        assert!((above - below).norm() < 1e-10);
    }

    #[test]
    fn k1_examples() {
        let a = 0.9;
        let h: f64 = 0.4;
        let expect = c(0.0, -2.0) * (1.0 - h.cos()) * Complex64::cis(-a);
        assert!((k1(a, h, c(0.0, 0.0)).unwrap() - expect).norm() < 1e-15);
        let v = k1(0.0, std::f64::consts::FRAC_PI_2, c(0.0, 0.0)).unwrap();
        assert!((v - c(0.0, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn k1_stable_form_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let z = random_disc(&mut rng, 0.98);
            let a = rng.gen_range(0.0..TWO_PI);
            let h = rng.gen_range(0.05..3.0);
            let s = k1(a, h, z).unwrap();
            let d = k1_direct(a, h, z).unwrap();
            assert!((s - d).norm() <= 1e-10 * d.norm().max(1e-3), "{s} vs {d}");
        }
    }

    #[test]
    fn k1_upper_envelope_on_d1() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut checked = 0;
        while checked < 1000 {
            let z = random_disc(&mut rng, 1.0 - 1e-12);
            let a = rng.gen_range(0.0..TWO_PI);
            let h = rng.gen_range(1e-3..0.9);
            let delta = (Complex64::cis(a) - z).norm();
            if delta <= 2.0 * h {
                continue;
            }
            checked += 1;
            assert!(k1(a, h, z).unwrap().norm() <= k1_upper_envelope(h, delta) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn k1_corrected_lower_envelope() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 1000 {
            let z = random_disc(&mut rng, 1.0 - 1e-12);
            let a = rng.gen_range(0.0..TWO_PI);
            let h = rng.gen_range(1e-3..1.5);
            let delta = (Complex64::cis(a) - z).norm();
            if delta <= h {
                continue;
            }
            checked += 1;
            assert!(k1(a, h, z).unwrap().norm() >= k1_lower_envelope(h, delta) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn stated_lower_envelope_fails_near_antipode() {
        // z close to -e^{ia}: the factor |z + e^{ia}| vanishes
        let (a, h): (f64, f64) = (0.0, 0.1);
        let z = c(-0.999, 0.0);
        let delta = (Complex64::cis(a) - z).norm();
        let stated = (2.0 - h) * (h * h - h.powi(4) / 12.0) / delta.powi(3);
        assert!(k1(a, h, z).unwrap().norm() < stated);
    }

    #[test]
    fn k2_examples() {
        for (a, h) in [(0.3, 0.2), (3.0, 1.0), (6.0, 0.1)] {
            assert!(k2(a, h, c(0.0, 0.0)).unwrap().norm() < 1e-15);
        }
    }

    #[test]
    fn k2_exceeds_stated_bound_near_a_pole() {
        // logarithmic growth as z approaches e^{ia}
        let z = Complex64::from_polar(1.0 - 1e-6, 1.0);
        assert!(k2(1.0, 0.5, z).unwrap().norm() > K2_STATED_BOUND);
    }

    #[test]
    fn k2_derivative_is_twice_k1() {
        let (a, h) = (1.1, 0.35);
        let z = c(0.3, 0.4);
        let eps = 1e-5;
        let d = (k2(a, h, z + eps).unwrap() - k2(a, h, z - eps).unwrap()) / (2.0 * eps);
        assert!((d - 2.0 * k1(a, h, z).unwrap()).norm() < 1e-8);
    }

    #[test]
    fn primitive_examples() {
        assert!((coordinate_primitive(0.2, 1.7, c(0.0, 0.0)).unwrap() - c(1.5, 0.0)).norm() < 1e-15);
        let full = coordinate_primitive(0.0, TWO_PI, c(0.5, 0.0)).unwrap();
        assert!((full - c(TWO_PI, 0.0)).norm() < 1e-13);
        let z = Complex64::from_polar(0.4, 0.2);
        let exact = coordinate_primitive(0.3, 1.1, z).unwrap();
        let re = quadrature::adaptive(&|x| poisson_factor(z, x).unwrap().re, 0.3, 1.1, 1e-14);
        let im = quadrature::adaptive(&|x| poisson_factor(z, x).unwrap().im, 0.3, 1.1, 1e-14);
        assert!((exact - c(re, im)).norm() <= 1e-10 * exact.norm());
    }

    #[test]
    fn primitive_derivative_matches_difference_quotient() {
        let z = c(-0.2, 0.55);
        let eps = 1e-6;
        let fd = (coordinate_primitive(0.4, 2.0, z + c(eps, 0.0)).unwrap()
            - coordinate_primitive(0.4, 2.0, z - c(eps, 0.0)).unwrap())
            / (2.0 * eps);
        assert!((fd - primitive_derivative(0.4, 2.0, z).unwrap()).norm() < 1e-8);
    }

    #[test]
    fn grad_component_examples() {
        let cube = Cube::new(vec![1.0, 2.0], vec![0.5, 0.25]).unwrap();
        let atom = SpecialAtom::new(cube, SignPattern::checkerboard(2).unwrap(), ProductWeight::lebesgue(2).unwrap())
            .unwrap();
        let z0 = [c(0.0, 0.0); 2];
        assert_eq!(grad_component(&atom, 0, &z0).unwrap().norm(), 0.0);
        let axis = SpecialAtom::new(
            atom.cube().clone(),
            SignPattern::axis(2, 0).unwrap(),
            ProductWeight::lebesgue(2).unwrap(),
        )
        .unwrap();
        assert!(matches!(grad_component(&axis, 0, &z0), Err(Error::PatternUnsupported)));
        let z = [c(0.2, 0.1), c(-0.3, 0.5)];
        let all = atom_gradient(&atom, &z).unwrap();
        for (j, g) in all.iter().enumerate() {
            assert_eq!(*g, grad_component(&atom, j, &z).unwrap());
        }
    }

    #[test]
    fn grad_norm_examples() {
        assert_eq!(grad_norm(&[c(0.0, 0.0); 3]), 0.0);
        assert_eq!(grad_norm(&[c(3.0, 4.0)]), 5.0);
    }

    proptest! {
        #[test]
        fn grad_norm_is_permutation_invariant(v in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..6)) {
            let comps: Vec<Complex64> = v.iter().map(|&(a, b)| c(a, b)).collect();
            let mut rev = comps.clone();
            rev.reverse();
            prop_assert!((grad_norm(&comps) - grad_norm(&rev)).abs() <= 1e-12 * (1.0 + grad_norm(&comps)));
        }

        #[test]
        fn product_kernel_is_multiplicative(r1 in 0.0f64..0.99, t1 in 0.0f64..std::f64::consts::TAU, r2 in 0.0f64..0.99,
                                           t2 in 0.0f64..6.28, x1 in 0.0f64..6.28, x2 in 0.0f64..6.28) {
            let z = [Complex64::from_polar(r1, t1), Complex64::from_polar(r2, t2)];
            let p = product_kernel(&z, &[x1, x2]).unwrap();
            let m = poisson_factor(z[0], x1).unwrap().norm() * poisson_factor(z[1], x2).unwrap().norm();
            prop_assert!((p.norm() - m).abs() <= 1e-12 * m);
        }
    }
}
