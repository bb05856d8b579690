//! Weighted special atoms, type-2 atoms, finite atomic sums and the
//! multiscale Haar decomposition into special atoms.

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cube, SignPattern};
use crate::weights::{ProductWeight, Weight1D};
use crate::TWO_PI;

/// `b_w = (χ_R - χ_L) / w(J)` on a cube `J`, zero outside.
#[derive(Debug, Clone, Serialize)]
pub struct SpecialAtom {
    cube: Cube,
    pattern: SignPattern,
    weight: ProductWeight,
    #[serde(skip)]
    wj: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomRepr {
    cube: Cube,
    pattern: SignPattern,
    weight: ProductWeight,
}

impl<'de> Deserialize<'de> for SpecialAtom {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let r = AtomRepr::deserialize(deserializer)?;
        SpecialAtom::new(r.cube, r.pattern, r.weight).map_err(de::Error::custom)
    }
}

impl SpecialAtom {
    pub fn new(cube: Cube, pattern: SignPattern, weight: ProductWeight) -> Result<Self> {
        let d = cube.dim();
        if pattern.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: pattern.dim(),
            });
        }
        if weight.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: weight.dim(),
            });
        }
        let wj = weight.measure(&cube)?;
        if !(wj.is_finite() && wj > 0.0) {
            return Err(Error::InvalidWeight(format!("w(J) = {wj} must be positive and finite")));
        }
        Ok(SpecialAtom {
            cube,
            pattern,
            weight,
            wj,
        })
    }

    /// Checkerboard atom with the given weight.
    pub fn checkerboard(cube: Cube, weight: ProductWeight) -> Result<Self> {
        let pattern = SignPattern::checkerboard(cube.dim())?;
        Self::new(cube, pattern, weight)
    }

    pub fn dim(&self) -> usize {
        self.cube.dim()
    }

    pub fn cube(&self) -> &Cube {
        &self.cube
    }

    pub fn pattern(&self) -> &SignPattern {
        &self.pattern
    }

    pub fn weight(&self) -> &ProductWeight {
        &self.weight
    }

    /// Cached `w(J)`.
    pub fn wj(&self) -> f64 {
        self.wj
    }

    /// `±1/w(J)` on the positive/negative subcubes, `0` outside `J`.
    pub fn eval(&self, point: &[f64]) -> f64 {
        match self.cube.subcube_index(point) {
            Some(k) => self.pattern.sign(k) / self.wj,
            None => 0.0,
        }
    }
}

/// `|J|^{-1/p}` on `J`, zero outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Type2Atom {
    cube: Cube,
    p: f64,
}

impl Type2Atom {
    pub fn new(cube: Cube, p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("type-2 exponent must be in [1, inf), got {p}")));
        }
        Ok(Type2Atom { cube, p })
    }

    pub fn cube(&self) -> &Cube {
        &self.cube
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        if self.cube.contains(point) {
            self.cube.volume().powf(-1.0 / self.p)
        } else {
            0.0
        }
    }
}

/// The level-`n`, position-`k` Haar function on `[0, scale)` as a special
/// atom: `∓2^{n/2}/√scale` on the two halves of
/// `[k 2^{-n} scale, (k+1) 2^{-n} scale)`.
pub fn haar_atom(n: u32, k: u64, scale: f64) -> Result<SpecialAtom> {
    if n >= 63 || k >= 1u64 << n {
        return Err(Error::InvalidArgument(format!("position {k} out of range at level {n}")));
    }
    if !(scale > 0.0 && scale <= TWO_PI) {
        return Err(Error::InvalidArgument(format!("scale must lie in (0, 2π], got {scale}")));
    }
    let len = scale * 0.5f64.powi(n as i32);
    let cube = Cube::from_bounds(&[k as f64 * len], &[(k + 1) as f64 * len])?;
    let c = 2f64.powf(n as f64 / 2.0) / scale.sqrt();
    let weight = ProductWeight::new(vec![Weight1D::constant(c)?])?;
    SpecialAtom::checkerboard(cube, weight)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coefficient: f64,
    pub atom: SpecialAtom,
}

/// `Σ αₙ b_{w,n}` over a finite list of terms.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicFunction {
    terms: Vec<Term>,
}

impl AtomicFunction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<Term>) -> Result<Self> {
        let mut f = Self::new();
        for t in terms {
            f.push(t.coefficient, t.atom)?;
        }
        Ok(f)
    }

    pub fn single(coefficient: f64, atom: SpecialAtom) -> Self {
        AtomicFunction {
            terms: vec![Term { coefficient, atom }],
        }
    }

    pub fn push(&mut self, coefficient: f64, atom: SpecialAtom) -> Result<()> {
        if let Some(first) = self.terms.first() {
            if first.atom.dim() != atom.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.atom.dim(),
                    got: atom.dim(),
                });
            }
        }
        if !coefficient.is_finite() {
            return Err(Error::InvalidArgument("coefficients must be finite".into()));
        }
        self.terms.push(Term { coefficient, atom });
        Ok(())
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Dimension of the terms, `None` when empty.
    pub fn dim(&self) -> Option<usize> {
        self.terms.first().map(|t| t.atom.dim())
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.coefficient * t.atom.eval(point)).sum()
    }

    /// `Σ |αₙ|` for this representation, an upper bound on the `B_w` norm.
    pub fn bw_norm_upper(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }

    /// Term list of `self` followed by that of `other`.
    pub fn concat(&self, other: &AtomicFunction) -> Result<Self> {
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.coefficient, t.atom.clone())?;
        }
        Ok(out)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        AtomicFunction {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coefficient: alpha * t.coefficient,
                    atom: t.atom.clone(),
                })
                .collect(),
        }
    }
}

/// Piecewise-constant samples on the `2^m`-per-axis dyadic grid of
/// `[0, 2π)^d`. Cell `(i_0, …, i_{d-1})` is stored at `Σ_j i_j 2^{m j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DyadicSamples {
    pub d: usize,
    pub m: u32,
    pub values: Vec<f64>,
}

impl DyadicSamples {
    pub fn new(d: usize, m: u32, values: Vec<f64>) -> Result<Self> {
        if d == 0 || d > crate::MAX_DIM {
            return Err(Error::InvalidArgument(format!("dimension {d} out of range")));
        }
        let expected = Self::cell_count(d, m)?;
        if values.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "expected {expected} samples for d = {d}, m = {m}, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("samples must be finite".into()));
        }
        Ok(DyadicSamples { d, m, values })
    }

    fn cell_count(d: usize, m: u32) -> Result<usize> {
        let bits = d as u32 * m;
        if bits > 30 {
            return Err(Error::InvalidArgument(format!("grid with 2^{bits} cells is too large")));
        }
        Ok(1usize << bits)
    }

    /// Samples `f` at cell midpoints.
    pub fn sample<F: Fn(&[f64]) -> f64>(d: usize, m: u32, f: F) -> Result<Self> {
        let n = Self::cell_count(d, m)?;
        let side = 1usize << m;
        let width = TWO_PI / side as f64;
        let mut point = vec![0.0; d];
        let values = (0..n)
            .map(|idx| {
                for (j, p) in point.iter_mut().enumerate() {
                    let i = (idx >> (m as usize * j)) & (side - 1);
                    *p = (i as f64 + 0.5) * width;
                }
                f(&point)
            })
            .collect();
        Self::new(d, m, values)
    }

    pub fn cell_midpoint(&self, idx: usize) -> Vec<f64> {
        let side = 1usize << self.m;
        let width = TWO_PI / side as f64;
        (0..self.d)
            .map(|j| (((idx >> (self.m as usize * j)) & (side - 1)) as f64 + 0.5) * width)
            .collect()
    }
}

/// Re-expresses a zero-mean dyadic step function as a sum of special atoms,
/// one per nonzero tensor-Haar detail coefficient. The atom on a parent cell
/// for the nonempty axis subset `S` uses the parity pattern of `S` (an axis
/// pattern when `|S| = 1`, the checkerboard when `S` is every axis).
pub fn haar_decompose(samples: &DyadicSamples, weight: &ProductWeight) -> Result<AtomicFunction> {
    let d = samples.d;
    if weight.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: weight.dim(),
        });
    }
    let max_abs = samples.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean = samples.values.iter().sum::<f64>() / samples.values.len() as f64;
    if mean.abs() > 1e-12 * max_abs {
        return Err(Error::NonZeroMean { mean, max_abs });
    }
    let patterns: Vec<SignPattern> = (1..1usize << d)
        .map(|mask| SignPattern::parity(d, mask))
        .collect::<Result<_>>()?;
    let children = 1usize << d;
    let scale = 1.0 / children as f64;
    let mut out = AtomicFunction::new();
    let mut level_values = samples.values.clone();
    for level in (0..samples.m).rev() {
        // level_values lives on the 2^{level+1} grid; parents on 2^level.
        let child_bits = level as usize + 1;
        let parent_side = 1usize << level;
        let parent_count = 1usize << (level as usize * d);
        let width = TWO_PI / parent_side as f64;
        let mut parents = vec![0.0; parent_count];
        let mut v = vec![0.0; children];
        for (p, parent_mean) in parents.iter_mut().enumerate() {
            let mut lower = vec![0.0; d];
            let mut upper = vec![0.0; d];
            let mut base = 0usize;
            for j in 0..d {
                let pj = (p >> (level as usize * j)) & (parent_side - 1);
                base |= (2 * pj) << (child_bits * j);
                lower[j] = pj as f64 * width;
                upper[j] = (pj + 1) as f64 * width;
            }
            for (k, vk) in v.iter_mut().enumerate() {
                let mut idx = base;
                for j in 0..d {
                    idx += ((k >> j) & 1) << (child_bits * j);
                }
                *vk = level_values[idx];
            }
            *parent_mean = v.iter().sum::<f64>() * scale;
            let cube = Cube::from_bounds(&lower, &upper)?;
            for pattern in &patterns {
                let beta = v
                    .iter()
                    .enumerate()
                    .map(|(k, &vk)| pattern.sign(k) * vk)
                    .sum::<f64>()
                    * scale;
                if beta == 0.0 {
                    continue;
                }
                let atom = SpecialAtom::new(cube.clone(), pattern.clone(), weight.clone())?;
                let coefficient = beta * atom.wj();
                out.push(coefficient, atom)?;
            }
        }
        level_values = parents;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_atom(d: usize) -> SpecialAtom {
        let cube = Cube::new(vec![0.5; d], vec![0.5; d]).unwrap();
        SpecialAtom::checkerboard(cube, ProductWeight::lebesgue(d).unwrap()).unwrap()
    }

    #[test]
    fn atom_eval_examples() {
        let a = unit_atom(1);
        assert_eq!(a.eval(&[0.25]), -1.0);
        assert_eq!(a.eval(&[0.75]), 1.0);
        assert_eq!(a.eval(&[1.5]), 0.0);
        let cube = Cube::new(vec![1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let b = SpecialAtom::checkerboard(cube, ProductWeight::lebesgue(2).unwrap()).unwrap();
        // lower-left quadrant (index 0) and upper-right (index 3) are negative
        assert_eq!(b.eval(&[0.7, 0.7]), -1.0);
        assert_eq!(b.eval(&[1.2, 1.2]), -1.0);
        assert_eq!(b.eval(&[1.2, 0.7]), 1.0);
        assert_eq!(b.eval(&[3.0, 0.7]), 0.0);
    }

    #[test]
    fn type2_examples() {
        let a = Type2Atom::new(Cube::from_bounds(&[0.0], &[1.0]).unwrap(), 1.0).unwrap();
        assert_eq!(a.eval(&[0.5]), 1.0);
        let b = Type2Atom::new(Cube::from_bounds(&[0.0], &[0.25]).unwrap(), 2.0).unwrap();
        assert_relative_eq!(b.eval(&[0.1]), 2.0, epsilon = 1e-15);
        assert_eq!(b.eval(&[0.3]), 0.0);
        assert!(Type2Atom::new(b.cube().clone(), 0.5).is_err());
    }

    #[test]
    fn haar_atom_examples() {
        let h = haar_atom(0, 0, 1.0).unwrap();
        assert_eq!(h.eval(&[0.25]), -1.0);
        assert_eq!(h.eval(&[0.75]), 1.0);
        let h = haar_atom(1, 0, 1.0).unwrap();
        assert_relative_eq!(h.eval(&[0.1]), -2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(h.eval(&[0.3]), 2f64.sqrt(), epsilon = 1e-14);
        assert_eq!(h.eval(&[0.6]), 0.0);
        assert!(haar_atom(2, 4, 1.0).is_err());
    }

    #[test]
    fn haar_atoms_are_orthonormal_on_a_grid() {
        let n = 1 << 12;
        let dx = 1.0 / n as f64;
        let atoms: Vec<SpecialAtom> = (0..3)
            .flat_map(|lvl| (0..1u64 << lvl).map(move |k| haar_atom(lvl, k, 1.0).unwrap()))
            .collect();
        for (i, a) in atoms.iter().enumerate() {
            for (j, b) in atoms.iter().enumerate() {
                let ip: f64 = (0..n)
                    .map(|s| {
                        let x = (s as f64 + 0.5) * dx;
                        a.eval(&[x]) * b.eval(&[x]) * dx
                    })
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-12, "<{i},{j}> = {ip}");
            }
        }
    }

    #[test]
    fn atomic_eval_examples() {
        let a = unit_atom(1);
        assert_eq!(AtomicFunction::new().eval(&[0.3]), 0.0);
        let f = AtomicFunction::single(2.0, a.clone());
        assert_eq!(f.eval(&[0.75]), 2.0);
        let g = f.concat(&f.scaled(-1.0)).unwrap();
        for x in [0.1, 0.6, 0.9, 2.0] {
            assert_eq!(g.eval(&[x]), 0.0);
        }
    }

    #[test]
    fn bw_norm_examples() {
        let a = unit_atom(1);
        assert_eq!(AtomicFunction::single(1.0, a.clone()).bw_norm_upper(), 1.0);
        let mut f = AtomicFunction::new();
        for c in [1.0, -2.0, 0.5] {
            f.push(c, a.clone()).unwrap();
        }
        assert_eq!(f.bw_norm_upper(), 3.5);
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let mut f = AtomicFunction::single(1.0, unit_atom(1));
        assert!(f.push(1.0, unit_atom(2)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = AtomicFunction::single(-1.5, unit_atom(2));
        let s = serde_json::to_string(&f).unwrap();
        let back: AtomicFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back.terms()[0].atom.wj(), 1.0);
        assert_eq!(back.eval(&[0.2, 0.7]), f.eval(&[0.2, 0.7]));
    }

    #[test]
    fn decompose_single_atom_is_fixed_point() {
        // the atom on [π/2, π)² sampled on the 8-per-axis grid
        let w = ProductWeight::lebesgue(2).unwrap();
        let q = std::f64::consts::FRAC_PI_2;
        let cube = Cube::from_bounds(&[q, q], &[2.0 * q, 2.0 * q]).unwrap();
        let atom = SpecialAtom::checkerboard(cube, w.clone()).unwrap();
        let s = DyadicSamples::sample(2, 3, |p| atom.eval(p)).unwrap();
        let f = haar_decompose(&s, &w).unwrap();
        assert_eq!(f.len(), 1);
        assert_relative_eq!(f.terms()[0].coefficient, 1.0, max_relative = 1e-14);
        assert!(f.terms()[0].atom.pattern().is_checkerboard());
    }

    #[test]
    fn decompose_haar_wavelet_gives_one_term() {
        let h = haar_atom(2, 1, TWO_PI).unwrap();
        let w = ProductWeight::lebesgue(1).unwrap();
        let s = DyadicSamples::sample(1, 5, |p| h.eval(p)).unwrap();
        let f = haar_decompose(&s, &w).unwrap();
        assert_eq!(f.len(), 1);
        for (idx, v) in s.values.iter().enumerate() {
            assert!((f.eval(&s.cell_midpoint(idx)) - v).abs() < 1e-14);
        }
    }

    #[test]
    fn decompose_rejects_nonzero_mean() {
        let s = DyadicSamples::new(1, 1, vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            haar_decompose(&s, &ProductWeight::lebesgue(1).unwrap()),
            Err(Error::NonZeroMean { .. })
        ));
    }

    fn random_zero_mean(d: usize, m: u32, seed: u64) -> DyadicSamples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 1usize << (d * m as usize);
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mean = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|x| *x -= mean);
        DyadicSamples::new(d, m, v).unwrap()
    }

    #[test]
    fn decompose_reconstructs_random_step_functions() {
        for (d, m) in [(1, 6), (2, 3), (3, 2)] {
            let s = random_zero_mean(d, m, 10 + d as u64);
            let w = ProductWeight::uniform(d, Weight1D::power(0.5).unwrap()).unwrap();
            let f = haar_decompose(&s, &w).unwrap();
            let err = s
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| (f.eval(&s.cell_midpoint(i)) - v).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "d={d}: {err}");
        }
    }

    fn atom_strategy() -> impl Strategy<Value = SpecialAtom> {
        (1usize..=3)
            .prop_flat_map(|d| {
                (
                    proptest::collection::vec((0.05f64..6.2, 0.01f64..1.0), d),
                    proptest::bool::ANY,
                    0usize..d,
                )
            })
            .prop_map(|(axes, checker, j)| {
                let d = axes.len();
                let (lo, hi): (Vec<f64>, Vec<f64>) = axes
                    .iter()
                    .map(|&(c, h)| {
                        let h = h.min(c).min(TWO_PI - c);
                        (c - h, c + h)
                    })
                    .unzip();
                let cube = Cube::from_bounds(&lo, &hi).unwrap();
                let pattern = if checker {
                    SignPattern::checkerboard(d).unwrap()
                } else {
                    SignPattern::axis(d, j).unwrap()
                };
                SpecialAtom::new(cube, pattern, ProductWeight::uniform(d, Weight1D::power(0.5).unwrap()).unwrap())
                    .unwrap()
            })
    }

    proptest! {
        #[test]
        fn atoms_take_three_values_and_have_zero_mean(atom in atom_strategy()) {
            let d = atom.dim();
            let per_axis = match d { 1 => 64, 2 => 16, _ => 8 };
            let cube = atom.cube().clone();
            let n = per_axis * 2;
            let total = (per_axis * 2usize).pow(d as u32);
            let mut sum = 0.0;
            for idx in 0..total {
                let p: Vec<f64> = (0..d)
                    .map(|j| {
                        let i = (idx / n.pow(j as u32)) % n;
                        cube.lower(j) + (i as f64 + 0.5) / n as f64 * (cube.upper(j) - cube.lower(j))
                    })
                    .collect();
                let v = atom.eval(&p);
                prop_assert!(v == 1.0 / atom.wj() || v == -1.0 / atom.wj());
                sum += v;
            }
            prop_assert!((sum * cube.volume() / total as f64).abs() < 1e-10);
        }

        #[test]
        fn triangle_inequality(a in atom_strategy(), c1 in -3.0f64..3.0, c2 in -3.0f64..3.0) {
            let f = AtomicFunction::single(c1, a.clone());
            let g = AtomicFunction::single(c2, a.clone());
            let fg = f.concat(&g).unwrap();
            prop_assert!(fg.bw_norm_upper() <= f.bw_norm_upper() + g.bw_norm_upper() + 1e-15);
            prop_assert_eq!(fg.bw_norm_upper(), f.bw_norm_upper() + g.bw_norm_upper());
        }
    }
}
