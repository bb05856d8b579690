//! Axis-aligned cubes on the torus and the sign patterns that split them.
//!
//! A cube `J = ∏ [a_j − h_j, a_j + h_j]` is cut by the hyperplanes
//! `ξ_j = a_j` into `2^d` subcubes. Subcube `k` lies in the upper half of
//! coordinate `j` exactly when bit `j` of `k` is set. Subcubes are
//! half-open (lower-closed), so every point of `J` belongs to exactly one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{MAX_DIM, TWO_PI};

/// Slack allowed when checking that a cube fits inside one period.
const PERIOD_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CubeRepr", into = "CubeRepr")]
pub struct Cube {
    center: Vec<f64>,
    halfwidth: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CubeRepr {
    center: Vec<f64>,
    halfwidth: Vec<f64>,
}

impl TryFrom<CubeRepr> for Cube {
    type Error = Error;

    fn try_from(repr: CubeRepr) -> Result<Self> {
        Cube::new(repr.center, repr.halfwidth)
    }
}

impl From<Cube> for CubeRepr {
    fn from(cube: Cube) -> Self {
        CubeRepr {
            center: cube.center,
            halfwidth: cube.halfwidth,
        }
    }
}

impl Cube {
    pub fn new(center: Vec<f64>, halfwidth: Vec<f64>) -> Result<Self> {
        let d = center.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidCube(format!(
                "dimension must be in 1..={MAX_DIM}, got {d}"
            )));
        }
        if halfwidth.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: halfwidth.len(),
            });
        }
        for (j, (&a, &h)) in center.iter().zip(&halfwidth).enumerate() {
            if !(a.is_finite() && h.is_finite() && h > 0.0) {
                return Err(Error::InvalidCube(format!(
                    "coordinate {j}: center {a}, halfwidth {h}"
                )));
            }
            if a - h < -PERIOD_SLACK || a + h > TWO_PI + PERIOD_SLACK {
                return Err(Error::InvalidCube(format!(
                    "coordinate {j}: [{}, {}] leaves [0, 2π]",
                    a - h,
                    a + h
                )));
            }
        }
        Ok(Cube { center, halfwidth })
    }

    /// Builds a cube from per-coordinate `[lo, hi]` bounds.
    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        let center = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
        let halfwidth = lo.iter().zip(hi).map(|(l, h)| 0.5 * (h - l)).collect();
        Cube::new(center, halfwidth)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn halfwidth(&self) -> &[f64] {
        &self.halfwidth
    }

    pub fn lower(&self, j: usize) -> f64 {
        self.center[j] - self.halfwidth[j]
    }

    pub fn upper(&self, j: usize) -> f64 {
        self.center[j] + self.halfwidth[j]
    }

    /// Lebesgue volume `|J|`.
    pub fn volume(&self) -> f64 {
        self.halfwidth.iter().map(|h| 2.0 * h).product()
    }

    /// Membership in the half-open box `∏ [lo_j, hi_j)`.
    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && (0..self.dim()).all(|j| point[j] >= self.lower(j) && point[j] < self.upper(j))
    }

    /// Index of the subcube containing `point`, or `None` outside the cube.
    pub fn subcube_index(&self, point: &[f64]) -> Option<usize> {
        if !self.contains(point) {
            return None;
        }
        Some(
            (0..self.dim())
                .filter(|&j| point[j] >= self.center[j])
                .fold(0usize, |k, j| k | (1 << j)),
        )
    }

    /// Bounds `(lo, hi)` of subcube `k` in coordinate `j`.
    pub fn subcube_interval(&self, k: usize, j: usize) -> (f64, f64) {
        if k >> j & 1 == 1 {
            (self.center[j], self.upper(j))
        } else {
            (self.lower(j), self.center[j])
        }
    }

    /// The `2^d` subcubes cut out by the hyperplanes through the center,
    /// ordered by binary index.
    pub fn split(&self) -> Vec<Cube> {
        let d = self.dim();
        (0..1usize << d)
            .map(|k| {
                let center = (0..d)
                    .map(|j| {
                        let shift = 0.5 * self.halfwidth[j];
                        if k >> j & 1 == 1 {
                            self.center[j] + shift
                        } else {
                            self.center[j] - shift
                        }
                    })
                    .collect();
                let halfwidth = self.halfwidth.iter().map(|h| 0.5 * h).collect();
                Cube { center, halfwidth }
            })
            .collect()
    }
}

/// The set `R` of positive subcubes of an atom; its complement is `L`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PatternRepr", into = "PatternRepr")]
pub struct SignPattern {
    d: usize,
    positive: Vec<usize>,
    /// `+1` / `-1` per subcube index.
    signs: Vec<i8>,
    /// Nonzero when the pattern is a parity pattern over these axes.
    parity_mask: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternRepr {
    d: usize,
    positive: Vec<usize>,
}

impl TryFrom<PatternRepr> for SignPattern {
    type Error = Error;

    fn try_from(repr: PatternRepr) -> Result<Self> {
        SignPattern::from_positive(repr.d, repr.positive)
    }
}

impl From<SignPattern> for PatternRepr {
    fn from(p: SignPattern) -> Self {
        PatternRepr {
            d: p.d,
            positive: p.positive,
        }
    }
}

impl SignPattern {
    /// Any subset of `2^{d-1}` subcube indices.
    pub fn from_positive(d: usize, mut positive: Vec<usize>) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidPattern(format!(
                "dimension must be in 1..={MAX_DIM}, got {d}"
            )));
        }
        let n = 1usize << d;
        positive.sort_unstable();
        positive.dedup();
        if positive.len() != n / 2 {
            return Err(Error::InvalidPattern(format!(
                "need exactly {} distinct positive subcubes, got {}",
                n / 2,
                positive.len()
            )));
        }
        if let Some(&bad) = positive.iter().find(|&&k| k >= n) {
            return Err(Error::InvalidPattern(format!(
                "subcube index {bad} out of range for d = {d}"
            )));
        }
        let mut signs = vec![-1i8; n];
        for &k in &positive {
            signs[k] = 1;
        }
        let parity_mask = (1..n)
            .find(|&mask| (0..n).all(|k| (signs[k] == 1) == ((k & mask).count_ones() % 2 == 1)))
            .unwrap_or(0);
        Ok(SignPattern {
            d,
            positive,
            signs,
            parity_mask,
        })
    }

    /// Subcubes whose index has odd parity over the axes in `mask`.
    pub fn parity(d: usize, mask: usize) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidPattern(format!(
                "dimension must be in 1..={MAX_DIM}, got {d}"
            )));
        }
        let n = 1usize << d;
        if mask == 0 || mask >= n {
            return Err(Error::InvalidPattern(format!(
                "axis mask {mask:#b} must be a nonempty subset of {d} axes"
            )));
        }
        let positive = (0..n)
            .filter(|k| (k & mask).count_ones() % 2 == 1)
            .collect();
        SignPattern::from_positive(d, positive)
    }

    /// Positive on subcubes with an odd number of upper halves. For `d = 2`
    /// this is `R = {1, 2}`, the two off-diagonal quadrants.
    pub fn checkerboard(d: usize) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidPattern(format!(
                "dimension must be in 1..={MAX_DIM}, got {d}"
            )));
        }
        SignPattern::parity(d, (1usize << d) - 1)
    }

    /// Positive on the upper half of coordinate `j`.
    pub fn axis(d: usize, j: usize) -> Result<Self> {
        if j >= d {
            return Err(Error::InvalidPattern(format!(
                "axis {j} out of range for d = {d}"
            )));
        }
        SignPattern::parity(d, 1 << j)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn positive(&self) -> &[usize] {
        &self.positive
    }

    /// `+1.0` on `R`, `-1.0` on `L`.
    pub fn sign(&self, k: usize) -> f64 {
        f64::from(self.signs[k])
    }

    pub fn is_checkerboard(&self) -> bool {
        self.parity_mask == (1usize << self.d) - 1
    }

    /// The axis set of a parity pattern, `None` for other patterns.
    pub fn parity_mask(&self) -> Option<usize> {
        (self.parity_mask != 0).then_some(self.parity_mask)
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("'{t}' is not a number in {what}")))
        })
        .collect()
}

/// Parses `a1,…,ad:h1,…,hd` (centers, then halfwidths).
pub fn parse_cube(spec: &str) -> Result<Cube> {
    let (c, h) = spec
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("cube '{spec}' must look like a1,..,ad:h1,..,hd")))?;
    Cube::new(parse_list(c, "cube centers")?, parse_list(h, "cube halfwidths")?)
}

/// Parses `checkerboard`, `axis:J`, `parity:MASK` or `positive:K1,K2,…`.
pub fn parse_pattern(spec: &str, d: usize) -> Result<SignPattern> {
    let (kind, arg) = spec.trim().split_once(':').unwrap_or((spec.trim(), ""));
    let int = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("'{t}' is not an index in pattern '{spec}'")))
    };
    match kind {
        "checkerboard" if arg.is_empty() => SignPattern::checkerboard(d),
        "axis" => SignPattern::axis(d, int(arg)?),
        "parity" => SignPattern::parity(d, int(arg)?),
        "positive" => SignPattern::from_positive(d, arg.split(',').map(int).collect::<Result<_>>()?),
        _ => Err(Error::Parse(format!(
            "unknown pattern '{spec}' (expected checkerboard, axis:J, parity:MASK, positive:K1,K2,..)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_specs() {
        let c = parse_cube("1.0,1.0:0.5,0.5").unwrap();
        assert_eq!(c.center(), &[1.0, 1.0]);
        assert_eq!(c.halfwidth(), &[0.5, 0.5]);
        assert!(matches!(parse_cube("1.0,1.0"), Err(Error::Parse(_))));
        assert!(matches!(parse_cube("1.0,x:0.5,0.5"), Err(Error::Parse(_))));
        assert!(parse_pattern("checkerboard", 2).unwrap().is_checkerboard());
        assert_eq!(parse_pattern("axis:1", 2).unwrap(), SignPattern::axis(2, 1).unwrap());
        assert_eq!(parse_pattern("parity:3", 2).unwrap(), SignPattern::checkerboard(2).unwrap());
        assert_eq!(parse_pattern("positive:1,2", 2).unwrap(), SignPattern::checkerboard(2).unwrap());
        assert!(parse_pattern("diagonal", 2).is_err());
    }

    #[test]
    fn split_one_dimension() {
        let cube = Cube::from_bounds(&[0.0], &[1.0]).unwrap();
        let parts = cube.split();
        assert_eq!(parts.len(), 2);
        assert_eq!((parts[0].lower(0), parts[0].upper(0)), (0.0, 0.5));
        assert_eq!((parts[1].lower(0), parts[1].upper(0)), (0.5, 1.0));
    }

    #[test]
    fn split_two_dimensions_binary_order() {
        let cube = Cube::from_bounds(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let parts = cube.split();
        let lows: Vec<(f64, f64)> = parts.iter().map(|c| (c.lower(0), c.lower(1))).collect();
        assert_eq!(lows, vec![(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)]);
    }

    #[test]
    fn split_three_dimensions_index_five() {
        let cube = Cube::from_bounds(&[0.0; 3], &[2.0; 3]).unwrap();
        let parts = cube.split();
        assert_eq!(parts.len(), 8);
        // 5 = 0b101: upper in x, lower in y, upper in z.
        assert_eq!(parts[5].center(), &[1.5, 0.5, 1.5]);
        assert!(parts.iter().all(|c| c.volume() == 1.0));
    }

    #[test]
    fn checkerboard_sets() {
        assert_eq!(SignPattern::checkerboard(1).unwrap().positive(), &[1]);
        assert_eq!(SignPattern::checkerboard(2).unwrap().positive(), &[1, 2]);
        assert_eq!(SignPattern::checkerboard(3).unwrap().positive(), &[1, 2, 4, 7]);
    }

    #[test]
    fn axis_sets() {
        assert_eq!(SignPattern::axis(2, 0).unwrap().positive(), &[1, 3]);
        assert_eq!(SignPattern::axis(2, 1).unwrap().positive(), &[2, 3]);
        assert_eq!(SignPattern::axis(3, 2).unwrap().positive(), &[4, 5, 6, 7]);
        assert!(SignPattern::axis(2, 2).is_err());
    }

    #[test]
    fn pattern_flags() {
        let cb = SignPattern::checkerboard(2).unwrap();
        assert!(cb.is_checkerboard());
        let ax = SignPattern::axis(2, 1).unwrap();
        assert!(!ax.is_checkerboard());
        assert_eq!(ax.parity_mask(), Some(2));
        let odd = SignPattern::from_positive(2, vec![0, 3]).unwrap();
        // {0, 3} is the complement of the checkerboard: not a parity pattern.
        assert_eq!(odd.parity_mask(), None);
    }

    #[test]
    fn rejects_bad_patterns() {
        assert!(SignPattern::from_positive(2, vec![1]).is_err());
        assert!(SignPattern::from_positive(2, vec![1, 1]).is_err());
        assert!(SignPattern::from_positive(2, vec![1, 4]).is_err());
        assert!(SignPattern::checkerboard(0).is_err());
    }

    #[test]
    fn rejects_bad_cubes() {
        assert!(Cube::new(vec![1.0], vec![0.0]).is_err());
        assert!(Cube::new(vec![0.1], vec![0.2]).is_err());
        assert!(Cube::new(vec![6.0], vec![0.5]).is_err());
        assert!(Cube::new(vec![1.0, 1.0], vec![0.5]).is_err());
        assert!(Cube::new(vec![std::f64::consts::PI], vec![std::f64::consts::PI]).is_ok());
    }

    #[test]
    fn json_shapes() {
        let cube = Cube::new(vec![1.0, 2.0], vec![0.5, 0.25]).unwrap();
        assert_eq!(
            serde_json::to_string(&cube).unwrap(),
            r#"{"center":[1.0,2.0],"halfwidth":[0.5,0.25]}"#
        );
        let p = SignPattern::checkerboard(2).unwrap();
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"{"d":2,"positive":[1,2]}"#);
        let back: SignPattern = serde_json::from_str(r#"{"d":2,"positive":[2,1]}"#).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<SignPattern>(r#"{"d":2,"positive":[1]}"#).is_err());
        assert!(serde_json::from_str::<Cube>(r#"{"center":[1.0],"halfwidth":[-1.0]}"#).is_err());
    }

    fn cube_strategy() -> impl Strategy<Value = Cube> {
        (1usize..=3)
            .prop_flat_map(|d| {
                (
                    prop::collection::vec(0.05f64..0.95, d),
                    prop::collection::vec(0.01f64..1.0, d),
                )
            })
            .prop_map(|(pos, frac)| {
                let h: Vec<f64> = pos
                    .iter()
                    .zip(&frac)
                    .map(|(p, f)| f * (p * TWO_PI).min((1.0 - p) * TWO_PI))
                    .collect();
                let a = pos.iter().map(|p| p * TWO_PI).collect();
                Cube::new(a, h).unwrap()
            })
    }

    proptest! {
        #[test]
        fn subcubes_partition_the_cube(cube in cube_strategy(), t in prop::collection::vec(0.0f64..1.0, 3)) {
            let d = cube.dim();
            let point: Vec<f64> = (0..d).map(|j| cube.lower(j) + t[j] * 2.0 * cube.halfwidth()[j]).collect();
            let parts = cube.split();
            let hits: Vec<usize> = (0..parts.len()).filter(|&k| parts[k].contains(&point)).collect();
            prop_assert_eq!(hits.len(), 1);
            prop_assert_eq!(Some(hits[0]), cube.subcube_index(&point));
            let total: f64 = parts.iter().map(Cube::volume).sum();
            prop_assert!((total - cube.volume()).abs() <= 1e-12 * cube.volume());
        }

        #[test]
        fn patterns_are_balanced(d in 1usize..=6, j in 0usize..6) {
            let cb = SignPattern::checkerboard(d).unwrap();
            prop_assert_eq!(cb.positive().len(), 1 << (d - 1));
            let sum: f64 = (0..1usize << d).map(|k| cb.sign(k)).sum();
            prop_assert_eq!(sum, 0.0);
            if j < d {
                let ax = SignPattern::axis(d, j).unwrap();
                prop_assert_eq!(ax.positive().len(), 1 << (d - 1));
            }
        }
    }
}
