//! One-dimensional weights, product weights, and finite-resolution
//! membership tests for the weight classes used by the norm inequalities.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::de::{self, Deserializer};
use serde::ser::{self, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Cube;
use crate::quadrature;
use crate::TWO_PI;

type WeightFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Power { alpha: f64, scale: f64 },
    Table { t: Vec<f64>, w: Vec<f64> },
    Custom { f: WeightFn },
}

/// A nonnegative weight on `(0, T]`.
#[derive(Clone)]
pub struct Weight1D {
    kind: Kind,
    domain: f64,
    name: String,
}

impl fmt::Debug for Weight1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight1D")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish()
    }
}

impl Weight1D {
    /// `w(t) = t^alpha` on `(0, 2π]`.
    pub fn power(alpha: f64) -> Result<Self> {
        Self::scaled_power(alpha, 1.0)
    }

    pub fn scaled_power(alpha: f64, scale: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= -1.0 {
            return Err(Error::InvalidWeight(format!(
                "power exponent must exceed -1 for local integrability, got {alpha}"
            )));
        }
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::InvalidWeight(format!("power scale must be positive, got {scale}")));
        }
        let name = if scale == 1.0 {
            format!("power({alpha})")
        } else {
            format!("{scale}*power({alpha})")
        };
        Ok(Weight1D {
            kind: Kind::Power { alpha, scale },
            domain: TWO_PI,
            name,
        })
    }

    /// The Lebesgue weight.
    pub fn lebesgue() -> Self {
        Self::power(0.0).expect("exponent 0 is valid")
    }

    pub fn constant(c: f64) -> Result<Self> {
        let mut w = Self::scaled_power(0.0, c)?;
        w.name = format!("const({c})");
        Ok(w)
    }

    /// Piecewise-linear interpolation of `(t, w)` samples; constant beyond
    /// the first and last knot. The declared domain is `(0, t_last]`.
    pub fn table(t: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if t.len() != w.len() {
            return Err(Error::InvalidWeight(format!(
                "table has {} abscissae but {} values",
                t.len(),
                w.len()
            )));
        }
        if t.len() < 2 {
            return Err(Error::InvalidWeight("table needs at least two rows".into()));
        }
        if t.iter().chain(&w).any(|v| !v.is_finite()) {
            return Err(Error::InvalidWeight("table contains non-finite entries".into()));
        }
        if t[0] < 0.0 || t.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidWeight(
                "table abscissae must be nonnegative and strictly increasing".into(),
            ));
        }
        if w.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidWeight("table values must be nonnegative".into()));
        }
        let domain = *t.last().unwrap();
        Ok(Weight1D {
            kind: Kind::Table { t, w },
            domain,
            name: "table".into(),
        })
    }

    /// Reads a two-column CSV `t,w` (an optional header row is skipped).
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let mut t = Vec::new();
        let mut w = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            if record.len() != 2 {
                return Err(Error::Parse(format!(
                    "{}: row {} has {} columns, expected 2",
                    path.display(),
                    i + 1,
                    record.len()
                )));
            }
            let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(v) => {
                    t.push(v[0]);
                    w.push(v[1]);
                }
                Err(_) if i == 0 => continue,
                Err(e) => {
                    return Err(Error::Parse(format!("{}: row {}: {e}", path.display(), i + 1)));
                }
            }
        }
        let mut weight = Self::table(t, w)?;
        weight.name = format!("table({})", path.display());
        Ok(weight)
    }

    /// Arbitrary evaluator on `(0, domain]`. Rejected unless a probe integral
    /// over the domain is finite.
    pub fn custom<F>(name: &str, domain: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(domain.is_finite() && domain > 0.0) {
            return Err(Error::InvalidWeight(format!("domain must be positive, got {domain}")));
        }
        let weight = Weight1D {
            kind: Kind::Custom { f: Arc::new(f) },
            domain,
            name: name.to_string(),
        };
        match weight.measure(0.0, domain) {
            Ok(m) if m.is_finite() => Ok(weight),
            Ok(m) => Err(Error::InvalidWeight(format!("{name}: probe integral is {m}"))),
            Err(e) => Err(Error::InvalidWeight(format!("{name}: {e}"))),
        }
    }

    /// Re-declares the domain `(0, T]` used by the interval-based class tests.
    pub fn with_domain(mut self, domain: f64) -> Result<Self> {
        if !(domain.is_finite() && domain > 0.0) {
            return Err(Error::InvalidWeight(format!("domain must be positive, got {domain}")));
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> f64 {
        self.domain
    }

    /// The exponent of a power weight.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.kind {
            Kind::Power { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Power { alpha, scale } => {
                if *alpha == 0.0 {
                    *scale
                } else {
                    scale * t.abs().powf(*alpha)
                }
            }
            Kind::Table { t: ts, w } => interpolate(ts, w, t),
            Kind::Custom { f } => f(t),
        }
    }

    fn knots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        match &self.kind {
            Kind::Table { t, .. } => t.iter().copied().filter(|&x| x > lo && x < hi).collect(),
            _ => Vec::new(),
        }
    }

    fn singular_at_zero(&self) -> bool {
        match &self.kind {
            Kind::Power { alpha, .. } => *alpha < 0.0,
            Kind::Table { .. } => false,
            Kind::Custom { .. } => true,
        }
    }

    /// `∫_lo^hi w(t) t^e dt`.
    pub fn moment(&self, lo: f64, hi: f64, e: f64) -> Result<f64> {
        if !(lo <= hi) || lo < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "integration interval [{lo}, {hi}] must satisfy 0 <= lo <= hi"
            )));
        }
        if lo == hi {
            return Ok(0.0);
        }
        match &self.kind {
            Kind::Power { alpha, scale } => {
                let b = alpha + e;
                if lo == 0.0 && b <= -1.0 {
                    return Err(Error::NonIntegrable(format!(
                        "t^{b} is not integrable at 0"
                    )));
                }
                let v = if b == -1.0 {
                    (hi / lo).ln()
                } else {
                    (hi.powf(b + 1.0) - lo.powf(b + 1.0)) / (b + 1.0)
                };
                Ok(scale * v)
            }
            _ => {
                let g = |t: f64| {
                    let v = self.eval(t);
                    if e == 0.0 {
                        v
                    } else {
                        v * t.powf(e)
                    }
                };
                let grade_zero = lo == 0.0 && (e < 0.0 || self.singular_at_zero());
                let mut edges = vec![lo];
                edges.extend(self.knots_in(lo, hi));
                edges.push(hi);
                let mut total = 0.0;
                for (i, pair) in edges.windows(2).enumerate() {
                    let piece = quadrature::graded(&g, pair[0], pair[1], i == 0 && grade_zero, false)?;
                    total += piece;
                }
                if total.is_finite() {
                    Ok(total)
                } else {
                    Err(Error::NonIntegrable(format!("{} on [{lo}, {hi}]", self.name)))
                }
            }
        }
    }

    /// `w([lo, hi]) = ∫_lo^hi w`.
    pub fn measure(&self, lo: f64, hi: f64) -> Result<f64> {
        match &self.kind {
            Kind::Table { t, w } if lo >= 0.0 && lo <= hi => Ok(table_integral(t, w, lo, hi)),
            _ => self.moment(lo, hi, 0.0),
        }
    }
}

fn interpolate(ts: &[f64], ws: &[f64], t: f64) -> f64 {
    if t <= ts[0] {
        return ws[0];
    }
    let n = ts.len();
    if t >= ts[n - 1] {
        return ws[n - 1];
    }
    let i = ts.partition_point(|&x| x <= t) - 1;
    let s = (t - ts[i]) / (ts[i + 1] - ts[i]);
    ws[i] + s * (ws[i + 1] - ws[i])
}

/// Exact integral of the piecewise-linear interpolant.
fn table_integral(ts: &[f64], ws: &[f64], lo: f64, hi: f64) -> f64 {
    let mut edges = vec![lo];
    edges.extend(ts.iter().copied().filter(|&x| x > lo && x < hi));
    edges.push(hi);
    edges
        .windows(2)
        .map(|p| 0.5 * (p[1] - p[0]) * (interpolate(ts, ws, p[0]) + interpolate(ts, ws, p[1])))
        .sum()
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum WeightRepr {
    Power {
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "two_pi")]
        domain: f64,
    },
    Const {
        value: f64,
        #[serde(default = "two_pi")]
        domain: f64,
    },
    Table {
        t: Vec<f64>,
        w: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn two_pi() -> f64 {
    TWO_PI
}

impl Serialize for Weight1D {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match &self.kind {
            Kind::Power { alpha, scale } if *alpha == 0.0 && self.name.starts_with("const") => WeightRepr::Const {
                value: *scale,
                domain: self.domain,
            },
            Kind::Power { alpha, scale } => WeightRepr::Power {
                alpha: *alpha,
                scale: *scale,
                domain: self.domain,
            },
            Kind::Table { t, w } => WeightRepr::Table {
                t: t.clone(),
                w: w.clone(),
            },
            Kind::Custom { .. } => {
                return Err(ser::Error::custom(format!(
                    "custom weight '{}' has no serialized form",
                    self.name
                )))
            }
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Weight1D {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = WeightRepr::deserialize(deserializer)?;
        let weight = match repr {
            WeightRepr::Power { alpha, scale, domain } => {
                Weight1D::scaled_power(alpha, scale).and_then(|w| w.with_domain(domain))
            }
            WeightRepr::Const { value, domain } => Weight1D::constant(value).and_then(|w| w.with_domain(domain)),
            WeightRepr::Table { t, w } => Weight1D::table(t, w),
        };
        weight.map_err(de::Error::custom)
    }
}

/// Parses `power:ALPHA`, `const:C`, `lebesgue`, `table:PATH.csv`, or an
/// inline JSON object.
pub fn parse_weight(spec: &str) -> Result<Weight1D> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        return serde_json::from_str(spec).map_err(|e| Error::Parse(format!("weight JSON: {e}")));
    }
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("'{s}' is not a number in weight spec '{spec}'")))
    };
    match kind {
        "power" => Weight1D::power(number(arg)?),
        "const" => Weight1D::constant(number(arg)?),
        "lebesgue" if arg.is_empty() => Ok(Weight1D::lebesgue()),
        "table" if !arg.is_empty() => Weight1D::from_csv(Path::new(arg)),
        _ => Err(Error::Parse(format!(
            "unknown weight spec '{spec}' (expected power:A, const:C, lebesgue, table:FILE)"
        ))),
    }
}

/// `w(ξ) = ∏_j w_j(ξ_j)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProductWeight {
    factors: Vec<Weight1D>,
}

impl ProductWeight {
    pub fn new(factors: Vec<Weight1D>) -> Result<Self> {
        if factors.is_empty() || factors.len() > crate::MAX_DIM {
            return Err(Error::InvalidWeight(format!(
                "product weight needs 1..={} factors, got {}",
                crate::MAX_DIM,
                factors.len()
            )));
        }
        Ok(ProductWeight { factors })
    }

    /// The same factor in every coordinate.
    pub fn uniform(d: usize, factor: Weight1D) -> Result<Self> {
        Self::new(vec![factor; d])
    }

    pub fn lebesgue(d: usize) -> Result<Self> {
        Self::uniform(d, Weight1D::lebesgue())
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Weight1D] {
        &self.factors
    }

    pub fn factor(&self, j: usize) -> &Weight1D {
        &self.factors[j]
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.factors.iter().zip(point).map(|(w, &x)| w.eval(x)).product()
    }

    /// `w(J) = ∏_j w_j(J_j)`.
    pub fn measure(&self, cube: &Cube) -> Result<f64> {
        if cube.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: cube.dim(),
            });
        }
        let mut m = 1.0;
        for (j, w) in self.factors.iter().enumerate() {
            m *= w.measure(cube.lower(j), cube.upper(j))?;
        }
        Ok(m)
    }
}

/// Parses `d` factor specs separated by `;`, or a single spec used for all
/// coordinates.
pub fn parse_product_weight(spec: &str, d: usize) -> Result<ProductWeight> {
    let parts: Vec<&str> = if spec.trim_start().starts_with('{') || spec.trim_start().starts_with('[') {
        vec![spec]
    } else {
        spec.split(';').collect()
    };
    if parts.len() == 1 && spec.trim_start().starts_with('[') {
        let factors: Vec<Weight1D> =
            serde_json::from_str(spec).map_err(|e| Error::Parse(format!("weight JSON: {e}")))?;
        if factors.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: factors.len(),
            });
        }
        return ProductWeight::new(factors);
    }
    match parts.len() {
        1 => ProductWeight::uniform(d, parse_weight(parts[0])?),
        n if n == d => ProductWeight::new(parts.iter().map(|p| parse_weight(p)).collect::<Result<_>>()?),
        n => Err(Error::DimensionMismatch { expected: d, got: n }),
    }
}

// ---------------------------------------------------------------------------
// Class tests

/// A weight class with its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightClass {
    Dini(u32),
    Bn(u32),
    CalBp(f64),
    Doubling,
    Muckenhoupt(f64),
}

impl WeightClass {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = s.split_once(':').unwrap_or((s, ""));
        let int = |a: &str| {
            a.parse::<u32>()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| Error::Parse(format!("class '{s}' needs a positive integer order")))
        };
        let real = |a: &str| {
            a.parse::<f64>()
                .ok()
                .filter(|&p| p > 1.0 && p.is_finite())
                .ok_or_else(|| Error::Parse(format!("class '{s}' needs an exponent p > 1")))
        };
        match name {
            "dini" => Ok(WeightClass::Dini(int(arg)?)),
            "bn" => Ok(WeightClass::Bn(int(arg)?)),
            "calbp" => Ok(WeightClass::CalBp(real(arg)?)),
            "doubling" if arg.is_empty() => Ok(WeightClass::Doubling),
            "ap" => Ok(WeightClass::Muckenhoupt(real(arg)?)),
            _ => Err(Error::Parse(format!(
                "unknown weight class '{s}' (expected dini:M, bn:N, calbp:P, doubling, ap:P)"
            ))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            WeightClass::Dini(m) => format!("dini:{m}"),
            WeightClass::Bn(n) => format!("bn:{n}"),
            WeightClass::CalBp(p) => format!("calbp:{p}"),
            WeightClass::Doubling => "doubling".into(),
            WeightClass::Muckenhoupt(p) => format!("ap:{p}"),
        }
    }
}

/// Sampling density of a class test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    /// Smallest sampled `u` is `2^-depth`.
    pub depth: u32,
    pub per_octave: u32,
    /// Interval lengths `T·2^-1 … T·2^-lengths`.
    pub lengths: u32,
    pub centers: u32,
}

impl Resolution {
    pub const COARSE: Resolution = Resolution {
        depth: 20,
        per_octave: 4,
        lengths: 10,
        centers: 64,
    };
    pub const FINE: Resolution = Resolution {
        depth: 40,
        per_octave: 8,
        lengths: 20,
        centers: 128,
    };

    fn describe(&self) -> String {
        format!(
            "u in [2^-{}, 1] at {}/octave; lengths T*2^-1..T*2^-{} at {} centers",
            self.depth, self.per_octave, self.lengths, self.centers
        )
    }

    fn u_grid(&self, top: f64) -> Vec<f64> {
        let n = self.depth * self.per_octave;
        (0..=n)
            .map(|i| top * 2f64.powf(-(i as f64) / self.per_octave as f64))
            .collect()
    }

    /// `(center, halfwidth)` pairs of sampled intervals in `[0, T]`.
    fn intervals(&self, domain: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for k in 1..=self.lengths {
            let h = domain * 2f64.powi(-(k as i32)) / 2.0;
            for i in 0..self.centers {
                let c = h + (domain - 2.0 * h) * i as f64 / (self.centers - 1) as f64;
                out.push((c, h));
            }
        }
        out
    }
}

/// Verdict of a class test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub class: String,
    pub pass: bool,
    /// Estimated best constant at the fine resolution.
    pub constant: f64,
    /// The same estimate at the coarse resolution.
    pub coarse_constant: f64,
    /// Where the supremum was attained: `[u]` or `[lo, hi]`.
    pub witness: Vec<f64>,
    pub resolution: String,
    pub note: Option<String>,
}

const STABILITY: f64 = 0.05;

#[derive(Clone, Copy)]
struct Sup {
    value: f64,
    at: [f64; 2],
}

fn reduce_sup(values: Vec<(f64, [f64; 2])>) -> Sup {
    let mut best = Sup {
        value: f64::NEG_INFINITY,
        at: [f64::NAN; 2],
    };
    for (v, at) in values {
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v > best.value {
            best = Sup { value: v, at };
        }
    }
    best
}

fn verdict(class: String, coarse: Sup, fine: Sup, witness_len: usize, note: Option<String>) -> ClassReport {
    let finite = coarse.value.is_finite() && fine.value.is_finite();
    let stable = finite && (fine.value - coarse.value).abs() <= STABILITY * coarse.value.abs().max(f64::MIN_POSITIVE);
    let note = note.or_else(|| {
        if !finite {
            Some("constant estimate is unbounded".into())
        } else if !stable {
            Some(format!(
                "constant changed from {} to {} under refinement",
                coarse.value, fine.value
            ))
        } else {
            None
        }
    });
    ClassReport {
        class,
        pass: stable,
        constant: fine.value,
        coarse_constant: coarse.value,
        witness: fine.at[..witness_len].to_vec(),
        resolution: format!("coarse: {}; fine: {}", Resolution::COARSE.describe(), Resolution::FINE.describe()),
        note,
    }
}

fn failed(class: String, note: String) -> ClassReport {
    ClassReport {
        class,
        pass: false,
        constant: f64::INFINITY,
        coarse_constant: f64::INFINITY,
        witness: Vec::new(),
        resolution: format!("coarse: {}; fine: {}", Resolution::COARSE.describe(), Resolution::FINE.describe()),
        note: Some(note),
    }
}

/// Largest `u` probed by the `(0, 1]` tests.
fn unit_top(w: &Weight1D) -> f64 {
    w.domain().min(1.0)
}

fn dini_sup(w: &Weight1D, m: u32, res: Resolution) -> Result<Sup> {
    let e = -(m as f64);
    let grid = res.u_grid(unit_top(w));
    // grid is decreasing; accumulate ∫_0^u from the smallest u upward
    let n = grid.len();
    let mut cumulative = vec![0.0; n];
    cumulative[n - 1] = w.moment(0.0, grid[n - 1], e)?;
    let pieces: Vec<f64> = (0..n - 1)
        .into_par_iter()
        .map(|i| w.moment(grid[i + 1], grid[i], e))
        .collect::<Result<_>>()?;
    for i in (0..n - 1).rev() {
        cumulative[i] = cumulative[i + 1] + pieces[i];
    }
    Ok(reduce_sup(
        grid.iter()
            .zip(&cumulative)
            .map(|(&u, &c)| (c / w.eval(u), [u, f64::NAN]))
            .collect(),
    ))
}

/// Dini class of order `m`: `∫_0^u w(ξ)/ξ^m dξ ≤ C w(u)` on `(0, 1)`.
pub fn is_dini(w: &Weight1D, m: u32) -> Result<ClassReport> {
    let class = format!("dini:{m}");
    let coarse = dini_sup(w, m, Resolution::COARSE)?;
    let fine = dini_sup(w, m, Resolution::FINE)?;
    Ok(verdict(class, coarse, fine, 1, None))
}

fn bn_sup(w: &Weight1D, n: u32, res: Resolution) -> Result<Sup> {
    let e = -(n as f64) - 1.0;
    let grid = res.u_grid(unit_top(w));
    let pieces: Vec<f64> = (0..grid.len() - 1)
        .into_par_iter()
        .map(|i| w.moment(grid[i + 1], grid[i], e))
        .collect::<Result<_>>()?;
    let mut tail = 0.0;
    let mut values = Vec::with_capacity(grid.len());
    for (i, &u) in grid.iter().enumerate() {
        if i > 0 {
            tail += pieces[i - 1];
        }
        values.push((u.powi(n as i32) * tail / w.eval(u), [u, f64::NAN]));
    }
    Ok(reduce_sup(values))
}

/// Class `𝒫ℬ_n`: nondecreasing, `w(0) = 0`, and
/// `∫_u^1 w(ξ)/ξ^{n+1} dξ ≤ C w(u)/u^n`.
pub fn is_bn(w: &Weight1D, n: u32) -> ClassReport {
    let class = format!("bn:{n}");
    let grid = Resolution::FINE.u_grid(unit_top(w));
    if let Some(pair) = grid.windows(2).find(|p| w.eval(p[1]) > w.eval(p[0]) * (1.0 + 1e-12)) {
        return failed(class, format!("weight decreases between {} and {}", pair[1], pair[0]));
    }
    let at_zero = w.eval(0.0);
    let origin = if at_zero.is_finite() {
        at_zero
    } else {
        w.eval(*grid.last().unwrap())
    };
    let scale = w.eval(unit_top(w)).abs().max(f64::MIN_POSITIVE);
    if origin.abs() > 1e-12 * scale {
        return failed(class, format!("w(0) = {origin} is not zero"));
    }
    let sups = bn_sup(w, n, Resolution::COARSE).and_then(|c| Ok((c, bn_sup(w, n, Resolution::FINE)?)));
    match sups {
        Ok((coarse, fine)) => verdict(class, coarse, fine, 1, None),
        Err(e) => failed(class, e.to_string()),
    }
}

fn calbp_value(w: &Weight1D, p: f64, c: f64, h: f64) -> f64 {
    let domain = w.domain();
    let lo = (c - h).max(0.0);
    let hi = (c + h).min(domain);
    let wj = match w.measure(lo, hi) {
        Ok(m) => m,
        Err(_) => return f64::INFINITY,
    };
    if wj <= 0.0 {
        return f64::INFINITY;
    }
    let left = |x: f64| w.eval(x) / (c - x).powf(p);
    let right = |x: f64| w.eval(x) / (x - c).powf(p);
    let outside = quadrature::graded(&left, 0.0, lo, w.singular_at_zero(), true).and_then(|l| {
        let r = quadrature::graded(&right, hi, domain, false, true)?;
        Ok(l + r)
    });
    match outside {
        Ok(v) => (2.0 * h).powf(p) / wj * v,
        Err(_) => f64::INFINITY,
    }
}

fn interval_sup<F: Fn(f64, f64) -> f64 + Sync>(w: &Weight1D, res: Resolution, value: F) -> Sup {
    let values: Vec<(f64, [f64; 2])> = res
        .intervals(w.domain())
        .into_par_iter()
        .map(|(c, h)| (value(c, h), [c - h, c + h]))
        .collect();
    reduce_sup(values)
}

/// Class `ℬ_p` on the weight's declared domain `[0, T]`:
/// `|J|^p / w(J) ∫_{J^c} w(ξ)/|ξ - ξ_J|^p dξ ≤ C`.
pub fn is_calbp(w: &Weight1D, p: f64) -> ClassReport {
    let class = format!("calbp:{p}");
    let coarse = interval_sup(w, Resolution::COARSE, |c, h| calbp_value(w, p, c, h));
    let fine = interval_sup(w, Resolution::FINE, |c, h| calbp_value(w, p, c, h));
    verdict(class, coarse, fine, 2, None)
}

fn doubling_value(w: &Weight1D, c: f64, h: f64) -> f64 {
    let domain = w.domain();
    let q = |r: f64| w.measure((c - r).max(0.0), (c + r).min(domain));
    match (q(h), q(2.0 * h)) {
        (Ok(small), Ok(big)) if small > 0.0 => big / small,
        (Ok(_), Ok(big)) if big > 0.0 => f64::INFINITY,
        (Ok(_), Ok(_)) => f64::NEG_INFINITY,
        _ => f64::INFINITY,
    }
}

fn doubling_points(res: Resolution, domain: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for k in 1..=res.lengths {
        let h = domain * 2f64.powi(-(k as i32));
        for i in 0..res.centers {
            out.push((domain * i as f64 / (res.centers - 1) as f64, h));
        }
    }
    out
}

fn doubling_sup(w: &Weight1D, res: Resolution) -> Sup {
    let values: Vec<(f64, [f64; 2])> = doubling_points(res, w.domain())
        .into_par_iter()
        .map(|(c, h)| (doubling_value(w, c, h), [c, h]))
        .collect();
    reduce_sup(values)
}

/// Doubling: `w(Q_{2h}(ξ)) ≤ C w(Q_h(ξ))` with `Q_h` clipped to `[0, T]`.
/// The witness is `[ξ, h]`.
pub fn is_doubling(w: &Weight1D) -> ClassReport {
    verdict(
        "doubling".into(),
        doubling_sup(w, Resolution::COARSE),
        doubling_sup(w, Resolution::FINE),
        2,
        None,
    )
}

fn ap_value(w: &Weight1D, p: f64, c: f64, h: f64) -> f64 {
    let lo = (c - h).max(0.0);
    let hi = (c + h).min(w.domain());
    let len = hi - lo;
    let avg = match w.measure(lo, hi) {
        Ok(m) => m / len,
        Err(_) => return f64::INFINITY,
    };
    let q = 1.0 / (1.0 - p);
    let dual = match w.power_exponent() {
        Some(alpha) => {
            let Kind::Power { scale, .. } = w.kind else { unreachable!() };
            let b = alpha * q;
            if lo == 0.0 && b <= -1.0 {
                return f64::INFINITY;
            }
            let v = if b == -1.0 {
                (hi / lo).ln()
            } else {
                (hi.powf(b + 1.0) - lo.powf(b + 1.0)) / (b + 1.0)
            };
            scale.powf(q) * v
        }
        None => {
            let g = |t: f64| w.eval(t).powf(q);
            match quadrature::graded(&g, lo, hi, lo == 0.0, false) {
                Ok(v) => v,
                Err(_) => return f64::INFINITY,
            }
        }
    };
    avg * (dual / len).powf(p - 1.0)
}

/// Muckenhoupt `A_p`: `(avg_I w)(avg_I w^{1/(1-p)})^{p-1}` bounded.
pub fn is_muckenhoupt(w: &Weight1D, p: f64) -> ClassReport {
    let class = format!("ap:{p}");
    let coarse = interval_sup(w, Resolution::COARSE, |c, h| ap_value(w, p, c, h));
    let fine = interval_sup(w, Resolution::FINE, |c, h| ap_value(w, p, c, h));
    verdict(class, coarse, fine, 2, None)
}

/// Runs one class test, mapping a divergent Dini integral to a failing
/// report.
pub fn classify(w: &Weight1D, class: WeightClass) -> ClassReport {
    match class {
        WeightClass::Dini(m) => is_dini(w, m).unwrap_or_else(|e| failed(class.label(), e.to_string())),
        WeightClass::Bn(n) => is_bn(w, n),
        WeightClass::CalBp(p) => is_calbp(w, p),
        WeightClass::Doubling => is_doubling(w),
        WeightClass::Muckenhoupt(p) => is_muckenhoupt(w, p),
    }
}
