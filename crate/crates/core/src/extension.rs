//! Analytic extension of boundary functions to the polydisc, radial limits,
//! and the weighted analytic norm `|F(0)| + (2π)^{-d} ∫ |F'|^p w`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atoms::{AtomicFunction, SpecialAtom};
use crate::error::{Error, Result};
use crate::kernels::{self, PolydiscPoint};
use crate::quadrature::{self, DiscMesh, DiscNode, Mark};
use crate::weights::{ProductWeight, Weight1D};
use crate::TWO_PI;

/// Resolution of the disc and boundary quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Gauss–Legendre order per angular panel.
    pub angular_order: usize,
    /// Radial cells `1 - r ∈ [2^{-k-1}, 2^{-k}]`, `k < radial_levels`.
    pub radial_levels: usize,
    /// Gauss–Legendre order per radial cell.
    pub radial_order: usize,
    /// Relative tolerance for the refinement indicator.
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            angular_order: 6,
            radial_levels: 30,
            radial_order: 6,
            tolerance: 1e-2,
        }
    }
}

impl QuadratureSpec {
    pub fn new(angular_order: usize, radial_levels: usize, radial_order: usize, tolerance: f64) -> Result<Self> {
        let q = QuadratureSpec {
            angular_order,
            radial_levels,
            radial_order,
            tolerance,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [self.angular_order, self.radial_levels, self.radial_order];
        if counts.contains(&0) || self.angular_order > 64 || self.radial_order > 64 || self.radial_levels > 60 {
            return Err(Error::InvalidArgument(format!(
                "quadrature counts out of range: orders 1..=64, levels 1..=60, got {self:?}"
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        Ok(())
    }

    /// The one-step refinement used for error indicators.
    pub fn refined(&self) -> Self {
        QuadratureSpec {
            angular_order: (self.angular_order + 3).min(64),
            radial_levels: (self.radial_levels + 4).min(60),
            radial_order: (self.radial_order + 3).min(64),
            tolerance: self.tolerance,
        }
    }
}

/// How the disc weight depends on `z = r e^{iξ}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `w(ξ)`.
    Angular,
    /// `w(1 - r) / (1 - r)`.
    Radial,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "angular" => Ok(Mode::Angular),
            "radial" => Ok(Mode::Radial),
            _ => Err(Error::Parse(format!("unknown mode '{s}' (expected angular or radial)"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Angular => "angular",
            Mode::Radial => "radial",
        })
    }
}

/// Per-coordinate factor of a separable extension term.
#[derive(Debug, Clone, Copy, PartialEq)]
enum AxisFactor {
    /// `(K2, 2 K1)` of the cube interval `[a - h, a + h]`.
    Checker { a: f64, h: f64 },
    /// `(M, dM/dz)` of `∫_lo^hi P dξ`.
    Interval { lo: f64, hi: f64 },
}

impl AxisFactor {
    fn eval(&self, z: Complex64) -> (Complex64, Complex64) {
        match *self {
            AxisFactor::Checker { a, h } => {
                let (k1, k2) = kernels::k_pair(a, h, z).expect("caller checks the disc");
                (k2, 2.0 * k1)
            }
            AxisFactor::Interval { lo, hi } => (
                kernels::coordinate_primitive(lo, hi, z).expect("caller checks the disc"),
                kernels::primitive_derivative(lo, hi, z).expect("caller checks the disc"),
            ),
        }
    }

    fn poles(&self, out: &mut Vec<f64>) {
        match *self {
            AxisFactor::Checker { a, h } => out.extend([a - h, a, a + h]),
            AxisFactor::Interval { lo, hi } => out.extend([lo, hi]),
        }
    }
}

/// `coef · ∏_j V_j(z_j)`; its `z_j` derivative swaps `V_j` for `D_j`.
#[derive(Debug, Clone)]
struct Separable {
    coef: f64,
    axes: Vec<AxisFactor>,
}

fn atom_separables(alpha: f64, atom: &SpecialAtom, out: &mut Vec<Separable>) {
    let d = atom.dim();
    let cube = atom.cube();
    let norm = alpha / (atom.wj() * TWO_PI.powi(d as i32));
    match atom.pattern().parity_mask() {
        Some(mask) => {
            // Σ_k s_k ∏ g_j(k_j) = -∏_{j∈S}(g_j(0) - g_j(1)) ∏_{j∉S}(g_j(0) + g_j(1)),
            // and g_j(0) - g_j(1) = -K2_j.
            let s = mask.count_ones() as i32;
            let sign = if s % 2 == 0 { -1.0 } else { 1.0 };
            let axes = (0..d)
                .map(|j| {
                    if mask >> j & 1 == 1 {
                        AxisFactor::Checker {
                            a: cube.center()[j],
                            h: cube.halfwidth()[j],
                        }
                    } else {
                        AxisFactor::Interval {
                            lo: cube.lower(j),
                            hi: cube.upper(j),
                        }
                    }
                })
                .collect();
            out.push(Separable {
                coef: sign * norm,
                axes,
            });
        }
        None => {
            for k in 0..1usize << d {
                let axes = (0..d)
                    .map(|j| {
                        let (lo, hi) = cube.subcube_interval(k, j);
                        AxisFactor::Interval { lo, hi }
                    })
                    .collect();
                out.push(Separable {
                    coef: atom.pattern().sign(k) * norm,
                    axes,
                });
            }
        }
    }
}

fn separables(f: &AtomicFunction) -> Vec<Separable> {
    let mut out = Vec::new();
    for t in f.terms() {
        atom_separables(t.coefficient, &t.atom, &mut out);
    }
    out
}

fn check_point(z: &[Complex64], d: usize) -> Result<()> {
    if z.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: z.len() });
    }
    for &zj in z {
        let m = zj.norm();
        if !(m < 1.0) {
            return Err(Error::Domain { modulus: m });
        }
    }
    Ok(())
}

/// `F(z)` for one atom as the signed sum over its subcubes of products of
/// angular primitives.
pub fn extend_atom_closed(atom: &SpecialAtom, z: &[Complex64]) -> Result<Complex64> {
    let d = atom.dim();
    check_point(z, d)?;
    let cube = atom.cube();
    let halves: Vec<[Complex64; 2]> = (0..d)
        .map(|j| {
            let (a, lo, hi) = (cube.center()[j], cube.lower(j), cube.upper(j));
            Ok([kernels::coordinate_primitive(lo, a, z[j])?, kernels::coordinate_primitive(a, hi, z[j])?])
        })
        .collect::<Result<_>>()?;
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..1usize << d {
        let prod = (0..d).fold(Complex64::new(1.0, 0.0), |acc, j| acc * halves[j][(k >> j) & 1]);
        total += atom.pattern().sign(k) * prod;
    }
    Ok(total / (atom.wj() * TWO_PI.powi(d as i32)))
}

/// `Σ αₙ F_n(z)` over the terms of an atomic function.
pub fn extend_atomic_closed(f: &AtomicFunction, z: &[Complex64]) -> Result<Complex64> {
    f.terms()
        .iter()
        .try_fold(Complex64::new(0.0, 0.0), |acc, t| Ok(acc + t.coefficient * extend_atom_closed(&t.atom, z)?))
}

/// A bounded boundary function known only through point evaluations, with
/// per-axis discontinuity locations.
#[derive(Clone)]
pub struct SampledFunction {
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    d: usize,
    breakpoints: Vec<Vec<f64>>,
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledFunction")
            .field("d", &self.d)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl SampledFunction {
    pub fn new<F>(d: usize, breakpoints: Vec<Vec<f64>>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if d == 0 || d > crate::MAX_DIM {
            return Err(Error::InvalidArgument(format!("dimension {d} out of range")));
        }
        let breakpoints = if breakpoints.is_empty() { vec![Vec::new(); d] } else { breakpoints };
        if breakpoints.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: breakpoints.len(),
            });
        }
        Ok(SampledFunction {
            f: Arc::new(f),
            d,
            breakpoints,
        })
    }

    /// The pointwise values of an atomic function, with its cube edges and
    /// midlines as breakpoints.
    pub fn from_atomic(f: &AtomicFunction) -> Result<Self> {
        let d = f
            .dim()
            .ok_or_else(|| Error::InvalidArgument("atomic function has no terms".into()))?;
        let mut breaks = vec![Vec::new(); d];
        for t in f.terms() {
            let c = t.atom.cube();
            for (j, b) in breaks.iter_mut().enumerate() {
                b.extend([c.lower(j), c.center()[j], c.upper(j)]);
            }
        }
        let g = f.clone();
        Self::new(d, breaks, move |p| g.eval(p))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        (self.f)(p)
    }
}

/// Value with the magnitude of its one-step refinement change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub indicator: f64,
}

fn boundary_rule(breaks: &[f64], z: Complex64, order: usize, fine: bool) -> Vec<(f64, f64)> {
    let mut marks: Vec<Mark> = breaks.iter().map(|&b| Mark::cut(b)).collect();
    let m = z.norm();
    if m > 0.0 {
        let width = ((1.0 - m) / if fine { 4.0 } else { 2.0 }).max(1e-15);
        quadrature::periodic_marks(z.arg(), width, &mut marks);
    }
    let max_width = if fine { std::f64::consts::PI / 16.0 } else { std::f64::consts::PI / 8.0 };
    let edges = quadrature::panels(0.0, TWO_PI, &marks, max_width);
    quadrature::composite(&edges, if fine { order + 4 } else { order })
}

fn tensor_extension(f: &SampledFunction, z: &[Complex64], rules: &[Vec<(f64, f64)>]) -> Complex64 {
    let d = f.d;
    // Kernel-weighted nodes per axis.
    let axes: Vec<Vec<(f64, Complex64)>> = rules
        .iter()
        .zip(z)
        .map(|(rule, &zj)| {
            rule.iter()
                .map(|&(x, w)| {
                    let e = Complex64::cis(x);
                    (x, w * (e + zj) / (e - zj))
                })
                .collect()
        })
        .collect();
    let outer = &axes[0];
    let partial: Vec<Complex64> = outer
        .par_iter()
        .map(|&(x0, k0)| {
            let mut point = vec![0.0; d];
            point[0] = x0;
            let mut idx = vec![0usize; d];
            let mut sum = Complex64::new(0.0, 0.0);
            if d == 1 {
                return k0 * f.eval(&point);
            }
            loop {
                let mut k = k0;
                for j in 1..d {
                    let (x, kj) = axes[j][idx[j]];
                    point[j] = x;
                    k *= kj;
                }
                sum += k * f.eval(&point);
                let mut j = 1;
                loop {
                    idx[j] += 1;
                    if idx[j] < axes[j].len() {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                    if j == d {
                        return sum;
                    }
                }
            }
        })
        .collect();
    let re: Vec<f64> = partial.iter().map(|c| c.re).collect();
    let im: Vec<f64> = partial.iter().map(|c| c.im).collect();
    Complex64::new(quadrature::pairwise_sum(&re), quadrature::pairwise_sum(&im)) / TWO_PI.powi(d as i32)
}

fn general_rules(f: &SampledFunction, z: &[Complex64], q: &QuadratureSpec, fine: bool) -> Vec<Vec<(f64, f64)>> {
    f.breakpoints
        .iter()
        .zip(z)
        .map(|(b, &zj)| boundary_rule(b, zj, q.angular_order, fine))
        .collect()
}

/// `(2π)^{-d} ∫ P(z, ξ) f(ξ) dξ` by composite tensor Gauss–Legendre, graded
/// toward `arg z_j` and split at the function's breakpoints.
pub fn extend_general(f: &SampledFunction, z: &[Complex64], q: &QuadratureSpec) -> Result<Estimate> {
    q.validate()?;
    check_point(z, f.d)?;
    let coarse = tensor_extension(f, z, &general_rules(f, z, q, false));
    let fine = tensor_extension(f, z, &general_rules(f, z, q, true));
    let indicator = (fine - coarse).norm();
    let scale = fine.norm().max(1.0);
    if !(indicator <= q.tolerance * scale) {
        return Err(Error::ToleranceNotMet {
            estimate: fine.norm(),
            indicator,
            tolerance: q.tolerance * scale,
        });
    }
    Ok(Estimate { value: fine, indicator })
}

/// `∂F/∂z` of a quadrature extension by Richardson-extrapolated central
/// differences on a frozen boundary rule.
fn general_gradient(f: &SampledFunction, z: &[Complex64], q: &QuadratureSpec) -> Vec<Complex64> {
    let rules = general_rules(f, z, q, true);
    (0..f.d)
        .map(|j| {
            let eps = ((1.0 - z[j].norm()) / 16.0).min(1e-3);
            let diff = |e: f64| {
                let mut zp = z.to_vec();
                let mut zm = z.to_vec();
                zp[j] += e;
                zm[j] -= e;
                (tensor_extension(f, &zp, &rules) - tensor_extension(f, &zm, &rules)) / (2.0 * e)
            };
            (4.0 * diff(0.5 * eps) - diff(eps)) / 3.0
        })
        .collect()
}

/// Source of `F` and `F'` on the polydisc.
#[derive(Debug, Clone)]
pub enum ExtensionProvider {
    /// Closed form for finite sums of special atoms.
    Closed(AtomicFunction),
    /// Boundary quadrature of an arbitrary bounded function.
    Quadrature { function: SampledFunction, spec: QuadratureSpec },
}

impl ExtensionProvider {
    pub fn closed(f: AtomicFunction) -> Result<Self> {
        if f.is_empty() {
            return Err(Error::InvalidArgument("atomic function has no terms".into()));
        }
        Ok(ExtensionProvider::Closed(f))
    }

    pub fn quadrature(function: SampledFunction, spec: QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        Ok(ExtensionProvider::Quadrature { function, spec })
    }

    pub fn dim(&self) -> usize {
        match self {
            ExtensionProvider::Closed(f) => f.dim().unwrap_or(0),
            ExtensionProvider::Quadrature { function, .. } => function.d,
        }
    }

    pub fn value(&self, z: &[Complex64]) -> Result<Complex64> {
        match self {
            ExtensionProvider::Closed(f) => {
                check_point(z, self.dim())?;
                Ok(separables(f)
                    .iter()
                    .map(|s| s.axes.iter().zip(z).fold(Complex64::new(s.coef, 0.0), |acc, (a, &zj)| acc * a.eval(zj).0))
                    .sum())
            }
            ExtensionProvider::Quadrature { function, spec } => Ok(extend_general(function, z, spec)?.value),
        }
    }

    pub fn value_at(&self, point: &PolydiscPoint) -> Result<Complex64> {
        self.value(&point.to_complex())
    }

    pub fn gradient(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        check_point(z, self.dim())?;
        match self {
            ExtensionProvider::Closed(f) => {
                let d = z.len();
                let mut grad = vec![Complex64::new(0.0, 0.0); d];
                for s in separables(f) {
                    let vals: Vec<(Complex64, Complex64)> = s.axes.iter().zip(z).map(|(a, &zj)| a.eval(zj)).collect();
                    for (j, g) in grad.iter_mut().enumerate() {
                        let mut term = Complex64::new(s.coef, 0.0);
                        for (l, v) in vals.iter().enumerate() {
                            term *= if l == j { v.1 } else { v.0 };
                        }
                        *g += term;
                    }
                }
                Ok(grad)
            }
            ExtensionProvider::Quadrature { function, spec } => Ok(general_gradient(function, z, spec)),
        }
    }
}

/// Values along `r_k = 1 - 2^{-k}` and the extrapolated limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialLimit {
    pub limit: f64,
    /// Ratio of the last two successive differences.
    pub ratio: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

/// `lim_{r→1} Re F(r e^{iξ})` with one shared radius for every coordinate.
pub fn radial_limit(provider: &ExtensionProvider, xi: &[f64], k0: u32, k1: u32) -> Result<RadialLimit> {
    if k1 < k0 + 2 || k1 > 52 {
        return Err(Error::InvalidArgument(format!(
            "schedule k = {k0}..={k1} needs at least three radii and k1 <= 52"
        )));
    }
    if xi.len() != provider.dim() {
        return Err(Error::DimensionMismatch {
            expected: provider.dim(),
            got: xi.len(),
        });
    }
    let radii: Vec<f64> = (k0..=k1).map(|k| 1.0 - 0.5f64.powi(k as i32)).collect();
    let values: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let z: Vec<Complex64> = xi.iter().map(|&t| Complex64::from_polar(r, t)).collect();
            provider.value(&z).map(|v| v.re)
        })
        .collect::<Result<_>>()?;
    let n = values.len();
    let last = values[n - 1] - values[n - 2];
    let prev = values[n - 2] - values[n - 3];
    let noise = 64.0 * f64::EPSILON * values[n - 1].abs().max(1.0);
    let ratio = if last.abs() <= noise {
        0.0
    } else if prev.abs() <= noise {
        f64::INFINITY
    } else {
        last / prev
    };
    if !ratio.is_finite() || ratio.abs() >= 1.0 {
        return Err(Error::NoConvergence { ratio });
    }
    let limit = if ratio > 0.0 {
        values[n - 1] + last * ratio / (1.0 - ratio)
    } else {
        values[n - 1]
    };
    Ok(RadialLimit {
        limit,
        ratio,
        radii,
        values,
    })
}

/// Outcome of a norm quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    /// Relative change under one refinement step.
    pub error_indicator: f64,
    /// Quadrature nodes used at the refined level (product over axes).
    pub cells: f64,
    /// `|F(0)|`.
    pub f0: f64,
}

pub(crate) fn angular_kinks(w: &Weight1D) -> Vec<Mark> {
    match w.power_exponent() {
        Some(alpha) if alpha.fract() == 0.0 && alpha >= 0.0 => Vec::new(),
        Some(_) => vec![Mark::graded(0.0, 1e-8)],
        None => {
            let mut marks = vec![Mark::graded(0.0, 1e-8)];
            // table knots are visible through the domain cut points only;
            // a cut at the declared domain end covers tables shorter than 2π.
            if w.domain() < TWO_PI {
                marks.push(Mark::cut(w.domain()));
            }
            marks
        }
    }
}

/// Node weights and per-term `(V, D)` values on one axis.
struct AxisTable {
    weight: Vec<f64>,
    values: Vec<Vec<(Complex64, Complex64)>>,
}

fn axis_table(
    terms: &[Separable],
    j: usize,
    w: &Weight1D,
    mode: Mode,
    q: &QuadratureSpec,
) -> AxisTable {
    let mut poles = Vec::new();
    for s in terms {
        s.axes[j].poles(&mut poles);
    }
    poles.sort_by(f64::total_cmp);
    poles.dedup();
    let kinks = match mode {
        Mode::Angular => angular_kinks(w),
        Mode::Radial => Vec::new(),
    };
    let nodes: Vec<DiscNode> = DiscMesh::new(poles, q.radial_levels, q.radial_order, q.angular_order)
        .with_kinks(kinks)
        .nodes();
    let weight = nodes
        .iter()
        .map(|n| {
            n.weight
                * match mode {
                    Mode::Angular => w.eval(n.xi),
                    Mode::Radial => w.eval(n.u) / n.u,
                }
        })
        .collect();
    let values = nodes
        .par_iter()
        .map(|n| {
            let z = Complex64::from_polar(n.r(), n.xi);
            terms.iter().map(|s| s.axes[j].eval(z)).collect()
        })
        .collect();
    AxisTable { weight, values }
}

const H_GRID: usize = 512;

/// `Σ_{n1,n2} W1 W2 (A1 B2 + B1 A2)^{p/2}` through the one-parameter table
/// `H(c) = Σ_{n2} W2 (c B2 + (1 - c) A2)^{p/2}` with `c = A1 / (A1 + B1)`.
fn separable_sum_2d(x: &[(f64, f64, f64)], y: &[(f64, f64, f64)], p: f64) -> f64 {
    let half_p = 0.5 * p;
    let thetas: Vec<f64> = (0..=H_GRID).map(|i| std::f64::consts::PI * i as f64 / H_GRID as f64).collect();
    let table: Vec<f64> = thetas
        .par_iter()
        .map(|&t| {
            let c = 0.5 * (1.0 - t.cos());
            let vals: Vec<f64> = y
                .iter()
                .map(|&(w, a, b)| {
                    let v = c * b + (1.0 - c) * a;
                    if half_p == 0.5 { w * v.sqrt() } else { w * v.powf(half_p) }
                })
                .collect();
            quadrature::pairwise_sum(&vals)
        })
        .collect();
    let step = std::f64::consts::PI / H_GRID as f64;
    let lookup = |c: f64| {
        let t = (1.0 - 2.0 * c).clamp(-1.0, 1.0).acos();
        let s = t / step;
        let i = (s.floor() as isize - 1).clamp(0, H_GRID as isize - 3) as usize;
        // cubic Lagrange through i..i+3
        let xs = [i as f64, i as f64 + 1.0, i as f64 + 2.0, i as f64 + 3.0];
        let mut v = 0.0;
        for a in 0..4 {
            let mut l = 1.0;
            for b in 0..4 {
                if a != b {
                    l *= (s - xs[b]) / (xs[a] - xs[b]);
                }
            }
            v += l * table[i + a];
        }
        v
    };
    let vals: Vec<f64> = x
        .par_iter()
        .map(|&(w, a, b)| {
            let s = a + b;
            if s == 0.0 || w == 0.0 {
                return 0.0;
            }
            w * s.powf(half_p) * lookup(a / s)
        })
        .collect();
    quadrature::pairwise_sum(&vals)
}

/// Direct tensor sum of `|F'|^p` for an arbitrary list of separable terms.
fn direct_sum(tables: &[AxisTable], coefs: &[f64], p: f64) -> f64 {
    let d = tables.len();
    let outer = &tables[0];
    let vals: Vec<f64> = (0..outer.weight.len())
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0usize; d];
            idx[0] = i0;
            let mut acc = 0.0;
            loop {
                let mut w = outer.weight[i0];
                for j in 1..d {
                    w *= tables[j].weight[idx[j]];
                }
                if w != 0.0 {
                    let mut norm2 = 0.0;
                    for j in 0..d {
                        let mut g = Complex64::new(0.0, 0.0);
                        for (s, &c) in coefs.iter().enumerate() {
                            let mut t = Complex64::new(c, 0.0);
                            for l in 0..d {
                                let (v, dv) = tables[l].values[idx[l]][s];
                                t *= if l == j { dv } else { v };
                            }
                            g += t;
                        }
                        norm2 += g.norm_sqr();
                    }
                    acc += w * norm2.powf(0.5 * p);
                }
                if d == 1 {
                    return acc;
                }
                let mut j = 1;
                loop {
                    idx[j] += 1;
                    if idx[j] < tables[j].weight.len() {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                    if j == d {
                        return acc;
                    }
                }
            }
        })
        .collect();
    quadrature::pairwise_sum(&vals)
}

const DIRECT_LIMIT: f64 = 4e9;

fn closed_gradient_integral(f: &AtomicFunction, weight: &ProductWeight, mode: Mode, p: f64, q: &QuadratureSpec) -> Result<(f64, f64)> {
    let terms = separables(f);
    let d = weight.dim();
    let tables: Vec<AxisTable> = (0..d).map(|j| axis_table(&terms, j, weight.factor(j), mode, q)).collect();
    let cells: f64 = tables.iter().map(|t| t.weight.len() as f64).product();
    let coefs: Vec<f64> = terms.iter().map(|s| s.coef).collect();
    let value = if d == 2 && terms.len() == 1 {
        let c = coefs[0].abs();
        let pack = |t: &AxisTable| -> Vec<(f64, f64, f64)> {
            t.weight
                .iter()
                .zip(&t.values)
                .map(|(&w, v)| (w, v[0].1.norm_sqr(), v[0].0.norm_sqr()))
                .collect()
        };
        c.powf(p) * separable_sum_2d(&pack(&tables[0]), &pack(&tables[1]), p)
    } else {
        if cells * terms.len() as f64 > DIRECT_LIMIT {
            return Err(Error::InvalidArgument(format!(
                "direct quadrature would need {cells:e} node tuples for {} terms; lower radial_levels or the orders",
                terms.len()
            )));
        }
        direct_sum(&tables, &coefs, p)
    };
    Ok((value, cells))
}

fn generic_gradient_integral(
    provider: &ExtensionProvider,
    weight: &ProductWeight,
    mode: Mode,
    p: f64,
    q: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let ExtensionProvider::Quadrature { function, .. } = provider else {
        unreachable!()
    };
    let d = weight.dim();
    let meshes: Vec<Vec<(DiscNode, f64)>> = (0..d)
        .map(|j| {
            let w = weight.factor(j);
            let kinks = match mode {
                Mode::Angular => angular_kinks(w),
                Mode::Radial => Vec::new(),
            };
            DiscMesh::new(function.breakpoints[j].clone(), q.radial_levels, q.radial_order, q.angular_order)
                .with_kinks(kinks)
                .nodes()
                .into_iter()
                .map(|n| {
                    let f = match mode {
                        Mode::Angular => w.eval(n.xi),
                        Mode::Radial => w.eval(n.u) / n.u,
                    };
                    (n, n.weight * f)
                })
                .collect()
        })
        .collect();
    let cells: f64 = meshes.iter().map(|m| m.len() as f64).product();
    if cells > DIRECT_LIMIT / 1e3 {
        return Err(Error::InvalidArgument(format!(
            "quadrature provider would need {cells:e} gradient evaluations; lower radial_levels or the orders"
        )));
    }
    let total = cells as usize;
    let vals: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut z = Vec::with_capacity(d);
            let mut w = 1.0;
            for m in &meshes {
                let (n, wn) = m[rem % m.len()];
                rem /= m.len();
                z.push(Complex64::from_polar(n.r(), n.xi));
                w *= wn;
            }
            if w == 0.0 {
                return Ok(0.0);
            }
            let g = provider.gradient(&z)?;
            Ok(w * kernels::grad_norm(&g).powf(p))
        })
        .collect::<Result<_>>()?;
    Ok((quadrature::pairwise_sum(&vals), cells))
}

/// `∫_{𝔻^d} |F'|^p w` (no `(2π)^{-d}` factor, no `|F(0)|`) at one
/// resolution. The disc is truncated at `1 - r ≥ 2^{-radial_levels}`; no
/// integrability precondition is enforced.
pub fn gradient_integral(
    provider: &ExtensionProvider,
    weight: &ProductWeight,
    mode: Mode,
    p: f64,
    q: &QuadratureSpec,
) -> Result<f64> {
    norm_inputs(provider, weight, p, q)?;
    Ok(gradient_integral_inner(provider, weight, mode, p, q)?.0)
}

fn gradient_integral_inner(
    provider: &ExtensionProvider,
    weight: &ProductWeight,
    mode: Mode,
    p: f64,
    q: &QuadratureSpec,
) -> Result<(f64, f64)> {
    match provider {
        ExtensionProvider::Closed(f) => closed_gradient_integral(f, weight, mode, p, q),
        ExtensionProvider::Quadrature { .. } => generic_gradient_integral(provider, weight, mode, p, q),
    }
}

fn norm_inputs(provider: &ExtensionProvider, weight: &ProductWeight, p: f64, q: &QuadratureSpec) -> Result<()> {
    q.validate()?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must be in [1, inf), got {p}")));
    }
    if weight.dim() != provider.dim() {
        return Err(Error::DimensionMismatch {
            expected: provider.dim(),
            got: weight.dim(),
        });
    }
    Ok(())
}

/// Checks that `∫_0^1 w(u)/u du < ∞` for every factor.
pub fn require_radial_integrable(weight: &ProductWeight) -> Result<()> {
    for w in weight.factors() {
        match w.moment(0.0, 1.0f64.min(w.domain()), -1.0) {
            Ok(v) if v.is_finite() => {}
            Ok(v) => {
                return Err(Error::NonIntegrableWeight(format!("{}: ∫ w(u)/u du = {v}", w.name())));
            }
            Err(e) => return Err(Error::NonIntegrableWeight(format!("{}: {e}", w.name()))),
        }
    }
    Ok(())
}

/// `|F(0)| + (2π)^{-d} ∫_{[0,1)^d × [0,2π)^d} |F'(r e^{iξ})|^p w dξ dr`.
pub fn aw_norm(
    provider: &ExtensionProvider,
    weight: &ProductWeight,
    mode: Mode,
    p: f64,
    q: &QuadratureSpec,
) -> Result<NormEstimate> {
    norm_inputs(provider, weight, p, q)?;
    if mode == Mode::Radial {
        require_radial_integrable(weight)?;
    }
    let d = provider.dim();
    let f0 = provider.value(&vec![Complex64::new(0.0, 0.0); d])?.norm();
    let scale = TWO_PI.powi(d as i32);
    let (coarse, _) = gradient_integral_inner(provider, weight, mode, p, q)?;
    let (fine, cells) = gradient_integral_inner(provider, weight, mode, p, &q.refined())?;
    let coarse = f0 + coarse / scale;
    let value = f0 + fine / scale;
    let indicator = if value == 0.0 {
        (value - coarse).abs()
    } else {
        ((value - coarse) / value).abs()
    };
    if !value.is_finite() {
        return Err(Error::NonIntegrable(format!("norm quadrature produced {value}")));
    }
    if indicator > q.tolerance {
        return Err(Error::ToleranceNotMet {
            estimate: value,
            indicator,
            tolerance: q.tolerance,
        });
    }
    Ok(NormEstimate {
        value,
        error_indicator: indicator,
        cells,
        f0,
    })
}

/// Estimates `κ_d` in `f_j = κ_d/(w(J)(2π)^d) K1_j ∏_{l≠j} K2_l` by central
/// differences of the closed-form extension of a reference atom.
pub fn calibrate_kappa(d: usize) -> Result<f64> {
    let centers: Vec<f64> = (0..d).map(|j| 1.3 + 0.9 * j as f64).collect();
    let halfwidths: Vec<f64> = (0..d).map(|j| 0.45 + 0.1 * j as f64).collect();
    let cube = crate::geometry::Cube::new(centers, halfwidths)?;
    let atom = SpecialAtom::checkerboard(cube, ProductWeight::lebesgue(d)?)?;
    let z: Vec<Complex64> = (0..d)
        .map(|j| Complex64::from_polar(0.35 + 0.1 * j as f64, 0.4 + 1.1 * j as f64))
        .collect();
    let eps = 1e-5;
    let mut ratios = Vec::with_capacity(d);
    for j in 0..d {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[j] += eps;
        zm[j] -= eps;
        let fd = (extend_atom_closed(&atom, &zp)? - extend_atom_closed(&atom, &zm)?) / (2.0 * eps);
        let mut shape = Complex64::new(1.0 / (atom.wj() * TWO_PI.powi(d as i32)), 0.0);
        for (l, &zl) in z.iter().enumerate() {
            let (a, h) = (atom.cube().center()[l], atom.cube().halfwidth()[l]);
            shape *= if l == j { kernels::k1(a, h, zl)? } else { kernels::k2(a, h, zl)? };
        }
        ratios.push((fd / shape).re);
    }
    Ok(ratios.iter().sum::<f64>() / d as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Cube, SignPattern};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn atom2(pattern: SignPattern) -> SpecialAtom {
        let cube = Cube::new(vec![2.0, 4.0], vec![0.6, 0.4]).unwrap();
        SpecialAtom::new(cube, pattern, ProductWeight::uniform(2, Weight1D::power(0.5).unwrap()).unwrap()).unwrap()
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::new(8, 30, 6, 1e-8).unwrap()
    }

    #[test]
    fn closed_extension_vanishes_at_origin() {
        let a = atom2(SignPattern::checkerboard(2).unwrap());
        assert!(extend_atom_closed(&a, &[c(0.0, 0.0); 2]).unwrap().norm() < 1e-16);
    }

    #[test]
    fn closed_extension_hand_evaluated_1d() {
        // J = [0, π], Lebesgue, z = 1/2: F = (M(π/2, π) - M(0, π/2)) / (2π · π)
        let cube = Cube::from_bounds(&[0.0], &[std::f64::consts::PI]).unwrap();
        let a = SpecialAtom::checkerboard(cube, ProductWeight::lebesgue(1).unwrap()).unwrap();
        let z = c(0.5, 0.0);
        let h = std::f64::consts::FRAC_PI_2;
        // Π(ξ) = ξ - 2i Log(1 - z e^{-iξ})
        let pi = |x: f64| c(x, 0.0) - c(0.0, 2.0) * (c(1.0, 0.0) - z * Complex64::cis(-x)).ln();
        let expect = ((pi(2.0 * h) - pi(h)) - (pi(h) - pi(0.0))) / (TWO_PI * 2.0 * h);
        let got = extend_atom_closed(&a, &[z]).unwrap();
        assert!((got - expect).norm() < 1e-14);
        // the same value spelled out: Log(1 + i/2) terms
        let l = (c(1.0, 0.5)).ln();
        let manual = (c(0.0, -2.0) * (1.5f64.ln() - 2.0 * l + 0.5f64.ln())) / (TWO_PI * 2.0 * h);
        assert!((got - manual).norm() < 1e-14, "{got} vs {manual}");
    }

    #[test]
    fn separable_form_matches_subcube_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for pattern in [
            SignPattern::checkerboard(2).unwrap(),
            SignPattern::axis(2, 0).unwrap(),
            SignPattern::axis(2, 1).unwrap(),
        ] {
            let a = atom2(pattern);
            let provider = ExtensionProvider::closed(AtomicFunction::single(1.0, a.clone())).unwrap();
            for _ in 0..20 {
                let z: Vec<Complex64> = (0..2)
                    .map(|_| Complex64::from_polar(rng.gen_range(0.0..0.95), rng.gen_range(0.0..TWO_PI)))
                    .collect();
                let s = provider.value(&z).unwrap();
                let d = extend_atom_closed(&a, &z).unwrap();
                assert!((s - d).norm() <= 1e-13 * d.norm().max(1e-3));
            }
        }
        let cube = Cube::new(vec![1.0, 1.0, 1.0], vec![0.5, 0.5, 0.5]).unwrap();
        let odd = SignPattern::from_positive(3, vec![0, 1, 2, 4]).unwrap();
        let a = SpecialAtom::new(cube, odd, ProductWeight::lebesgue(3).unwrap()).unwrap();
        let provider = ExtensionProvider::closed(AtomicFunction::single(1.0, a.clone())).unwrap();
        let z = [c(0.3, 0.2), c(-0.1, 0.5), c(0.6, -0.3)];
        assert!((provider.value(&z).unwrap() - extend_atom_closed(&a, &z).unwrap()).norm() < 1e-14);
    }

    #[test]
    fn closed_gradient_matches_grad_component() {
        let a = atom2(SignPattern::checkerboard(2).unwrap());
        let provider = ExtensionProvider::closed(AtomicFunction::single(1.0, a.clone())).unwrap();
        let z = [c(0.3, -0.4), c(-0.6, 0.2)];
        let g = provider.gradient(&z).unwrap();
        let k = kernels::atom_gradient(&a, &z).unwrap();
        for j in 0..2 {
            assert!((g[j] - k[j]).norm() <= 1e-13 * k[j].norm());
        }
    }

    #[test]
    fn kappa_calibration_matches_closed_form() {
        for d in 1..=3 {
            let k = calibrate_kappa(d).unwrap();
            assert_relative_eq!(k, kernels::kappa(d), max_relative = 1e-7);
        }
    }

    #[test]
    fn general_extension_examples() {
        let one = SampledFunction::new(1, vec![], |_| 1.0).unwrap();
        let z = [Complex64::from_polar(0.9, 2.0)];
        assert!((extend_general(&one, &z, &spec()).unwrap().value - 1.0).norm() < 1e-12);
        let three = SampledFunction::new(2, vec![], |_| 3.0).unwrap();
        let z2 = [c(0.2, 0.7), c(-0.5, -0.5)];
        assert!((extend_general(&three, &z2, &spec()).unwrap().value - 3.0).norm() < 1e-12);
        let cos = SampledFunction::new(1, vec![], |p| p[0].cos()).unwrap();
        let z = Complex64::from_polar(0.3, 0.7);
        assert!((extend_general(&cos, &[z], &spec()).unwrap().value - z).norm() < 1e-12);
    }

    #[test]
    fn general_extension_matches_closed_form() {
        let a = atom2(SignPattern::checkerboard(2).unwrap());
        let f = AtomicFunction::single(1.0, a.clone());
        let sampled = SampledFunction::from_atomic(&f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let z: Vec<Complex64> = (0..2)
                .map(|_| Complex64::from_polar(rng.gen_range(0.0..0.9), rng.gen_range(0.0..TWO_PI)))
                .collect();
            let q = extend_general(&sampled, &z, &spec()).unwrap().value;
            let e = extend_atom_closed(&a, &z).unwrap();
            assert!((q - e).norm() <= 1e-8 * e.norm().max(1e-6), "{q} vs {e}");
        }
    }

    #[test]
    fn tolerance_not_met_is_reported() {
        let rough = SampledFunction::new(1, vec![], |p| (50.0 * p[0]).sin().signum()).unwrap();
        let q = QuadratureSpec::new(2, 4, 2, 1e-14).unwrap();
        assert!(matches!(
            extend_general(&rough, &[c(0.9, 0.0)], &q),
            Err(Error::ToleranceNotMet { .. })
        ));
    }

    #[test]
    fn radial_limit_examples() {
        let one = ExtensionProvider::quadrature(SampledFunction::new(1, vec![], |_| 1.0).unwrap(), spec()).unwrap();
        let r = radial_limit(&one, &[1.0], 2, 6).unwrap();
        assert!((r.limit - 1.0).abs() < 1e-10);

        let cube = Cube::new(vec![2.0], vec![0.5]).unwrap();
        let atom = SpecialAtom::checkerboard(cube, ProductWeight::lebesgue(1).unwrap()).unwrap();
        let p = ExtensionProvider::closed(AtomicFunction::single(1.0, atom.clone())).unwrap();
        let r = radial_limit(&p, &[2.3], 4, 14).unwrap();
        assert!((r.limit - 1.0).abs() < 1e-3, "{r:?}");
        assert!((r.ratio - 0.5).abs() < 0.05);
        // at the jump the values approach the average of the one-sided limits
        let r = radial_limit(&p, &[2.0], 4, 20).unwrap();
        assert!(r.limit.abs() < 1e-2, "{r:?}");
    }

    #[test]
    fn h_table_matches_direct_double_sum() {
        let a = atom2(SignPattern::checkerboard(2).unwrap());
        let f = AtomicFunction::single(1.0, a);
        let w = ProductWeight::uniform(2, Weight1D::power(0.5).unwrap()).unwrap();
        let q = QuadratureSpec::new(3, 8, 3, 1e-2).unwrap();
        let terms = separables(&f);
        let tables: Vec<AxisTable> = (0..2).map(|j| axis_table(&terms, j, w.factor(j), Mode::Radial, &q)).collect();
        let coefs = [terms[0].coef];
        let direct = direct_sum(&tables, &coefs, 1.0);
        let (fast, _) = closed_gradient_integral(&f, &w, Mode::Radial, 1.0, &q).unwrap();
        assert_relative_eq!(fast, direct, max_relative = 1e-8);
        let direct3 = direct_sum(&tables, &coefs, 3.0);
        let (fast3, _) = closed_gradient_integral(&f, &w, Mode::Radial, 3.0, &q).unwrap();
        assert_relative_eq!(fast3, direct3, max_relative = 1e-6);
    }

    #[test]
    fn norm_of_constant_is_its_modulus() {
        let provider =
            ExtensionProvider::quadrature(SampledFunction::new(1, vec![], |_| -2.5).unwrap(), spec()).unwrap();
        let q = QuadratureSpec::new(3, 6, 3, 1e-2).unwrap();
        let n = aw_norm(&provider, &ProductWeight::lebesgue(1).unwrap(), Mode::Angular, 1.0, &q).unwrap();
        assert_relative_eq!(n.value, 2.5, max_relative = 1e-9);
    }

    #[test]
    fn single_atom_norm_is_pure_gradient_term() {
        let cube = Cube::new(vec![1.5], vec![0.4]).unwrap();
        let w = ProductWeight::uniform(1, Weight1D::power(0.5).unwrap()).unwrap();
        let atom = SpecialAtom::checkerboard(cube, w.clone()).unwrap();
        let provider = ExtensionProvider::closed(AtomicFunction::single(1.0, atom)).unwrap();
        let n = aw_norm(&provider, &w, Mode::Radial, 1.0, &QuadratureSpec::default()).unwrap();
        assert!(n.f0 < 1e-15);
        assert!(n.value.is_finite() && n.value > 0.0);
        assert!(n.error_indicator < 1e-2, "{n:?}");
    }

    #[test]
    fn radial_norm_rejects_non_dini_weight() {
        let cube = Cube::new(vec![1.5], vec![0.4]).unwrap();
        let w = ProductWeight::lebesgue(1).unwrap();
        let atom = SpecialAtom::checkerboard(cube, w.clone()).unwrap();
        let provider = ExtensionProvider::closed(AtomicFunction::single(1.0, atom)).unwrap();
        assert!(matches!(
            aw_norm(&provider, &w, Mode::Radial, 1.0, &QuadratureSpec::default()),
            Err(Error::NonIntegrableWeight(_))
        ));
    }

    #[test]
    fn norm_is_homogeneous_for_p_one() {
        let a = atom2(SignPattern::checkerboard(2).unwrap());
        let w = ProductWeight::lebesgue(2).unwrap();
        let q = QuadratureSpec::new(4, 16, 4, 0.05).unwrap();
        let one = aw_norm(&ExtensionProvider::closed(AtomicFunction::single(1.0, a.clone())).unwrap(), &w, Mode::Angular, 1.0, &q)
            .unwrap();
        let three = aw_norm(&ExtensionProvider::closed(AtomicFunction::single(-3.0, a)).unwrap(), &w, Mode::Angular, 1.0, &q)
            .unwrap();
        assert_relative_eq!(three.value, 3.0 * one.value, max_relative = 1e-12);
    }

    #[test]
    fn quadrature_gradient_matches_closed_gradient() {
        let cube = Cube::new(vec![2.0], vec![0.5]).unwrap();
        let atom = SpecialAtom::checkerboard(cube, ProductWeight::lebesgue(1).unwrap()).unwrap();
        let f = AtomicFunction::single(1.0, atom);
        let closed = ExtensionProvider::closed(f.clone()).unwrap();
        let quad = ExtensionProvider::quadrature(SampledFunction::from_atomic(&f).unwrap(), spec()).unwrap();
        for z in [c(0.3, 0.1), Complex64::from_polar(0.99, 2.2), Complex64::from_polar(0.999, 4.0)] {
            let g1 = closed.gradient(&[z]).unwrap()[0];
            let g2 = quad.gradient(&[z]).unwrap()[0];
            assert!((g1 - g2).norm() <= 1e-6 * g1.norm(), "{z}: {g1} vs {g2}");
        }
    }
}
