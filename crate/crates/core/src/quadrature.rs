//! Quadrature building blocks shared by the weight tests, the extension
//! integrals and the disc norms.
//!
//! Everything here is deterministic: node sets are generated in a fixed
//! order and sums are reduced either sequentially or by [`pairwise_sum`].

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::TWO_PI;

const MAX_ORDER: usize = 128;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached rule of order `n` (clamped to `1..=128`).
pub fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    static CACHE: [OnceLock<GaussLegendre>; MAX_ORDER + 1] = [const { OnceLock::new() }; MAX_ORDER + 1];
    let n = n.clamp(1, MAX_ORDER);
    CACHE[n].get_or_init(|| GaussLegendre::compute(n))
}

/// Pairwise (cascade) summation; the result depends only on the order of
/// `values`, never on how they were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Adaptive bisection on Gauss–Legendre(16) pairs.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let rule = gauss_legendre(16);
        let m = 0.5 * (a + b);
        let left = rule.integrate(a, m, f);
        let right = rule.integrate(m, b, f);
        let halves = left + right;
        if depth == 0 || (halves - whole).abs() <= tol || !halves.is_finite() {
            return halves;
        }
        recurse(f, a, m, left, 0.5 * tol, depth - 1) + recurse(f, m, b, right, 0.5 * tol, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let whole = gauss_legendre(16).integrate(a, b, f);
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    recurse(f, a, b, whole, rel_tol * scale, 24)
}

/// Integral over `[a, b]` built from dyadic shells accumulating toward `a`
/// (`toward_lo`) or toward `b`. Handles integrable endpoint singularities and
/// reports divergence as [`Error::NonIntegrable`].
pub fn shells<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, toward_lo: bool) -> Result<f64> {
    const MAX_SHELLS: usize = 1000;
    const DIVERGENT_RATIO: f64 = 0.97;
    if b <= a {
        return Ok(0.0);
    }
    let rule = gauss_legendre(16);
    let len = b - a;
    let mut total = 0.0;
    let mut history: Vec<f64> = Vec::with_capacity(64);
    for k in 0..MAX_SHELLS {
        let outer = len * 0.5f64.powi(k as i32);
        let inner = 0.5 * outer;
        let (lo, hi) = if toward_lo {
            (a + inner, a + outer)
        } else {
            (b - outer, b - inner)
        };
        let end = if toward_lo { a } else { b };
        if !(hi > lo) || inner < 1e-11 * end.abs() {
            break;
        }
        let s = rule.integrate(lo, hi, f);
        if !s.is_finite() {
            return Err(Error::NonIntegrable(format!(
                "non-finite contribution near {}",
                if toward_lo { a } else { b }
            )));
        }
        total += s;
        history.push(s);
        let n = history.len();
        if n < 10 {
            continue;
        }
        let last = history[n - 1];
        if last == 0.0 && history[n - 2] == 0.0 {
            return Ok(total);
        }
        if last.abs() <= 1e-17 * total.abs() {
            return Ok(total);
        }
        let ratios: Vec<f64> = (n - 6..n)
            .map(|i| history[i] / history[i - 1])
            .collect();
        let q = ratios[5];
        let settled = ratios.iter().all(|r| (r - q).abs() <= 1e-9 * q.abs().max(1e-3));
        if settled && q > 0.0 && q < DIVERGENT_RATIO {
            return Ok(total + last * q / (1.0 - q));
        }
        let stable = ratios.iter().all(|r| (r - q).abs() <= 2e-3 * q.abs().max(1e-3));
        if stable && q >= DIVERGENT_RATIO && n >= 40 {
            return Err(Error::NonIntegrable(format!(
                "dyadic contributions near {} shrink by a factor {q:.4} per shell",
                if toward_lo { a } else { b }
            )));
        }
    }
    // Ran out of shells or resolution without a stable geometric tail.
    let n = history.len();
    if n == 0 {
        return Ok(rule.integrate(a, b, f));
    }
    if n >= 4 {
        let mut q: Vec<f64> = (n - 3..n).map(|i| history[i] / history[i - 1]).collect();
        q.sort_by(f64::total_cmp);
        let q = q[1];
        if q.abs() < 0.5 {
            return Ok(total);
        }
        if q > 0.0 && q < DIVERGENT_RATIO {
            return Ok(total + history[n - 1] * q / (1.0 - q));
        }
    }
    Err(Error::NonIntegrable(format!(
        "no geometric decay near {}",
        if toward_lo { a } else { b }
    )))
}

/// `∫_a^b f`, grading toward whichever endpoints are flagged.
pub fn graded<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, grade_lo: bool, grade_hi: bool) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    match (grade_lo, grade_hi) {
        (false, false) => Ok(adaptive(f, a, b, 1e-13)),
        (true, false) => shells(f, a, b, true),
        (false, true) => shells(f, a, b, false),
        (true, true) => {
            let m = 0.5 * (a + b);
            Ok(shells(f, a, m, true)? + shells(f, m, b, false)?)
        }
    }
}

/// A breakpoint for [`panels`]. Panels adjacent to the mark start at
/// `min_width` and double moving away; `min_width == 0` is a plain cut.
#[derive(Debug, Clone, Copy)]
pub struct Mark {
    pub at: f64,
    pub min_width: f64,
}

impl Mark {
    pub fn cut(at: f64) -> Self {
        Mark { at, min_width: 0.0 }
    }

    pub fn graded(at: f64, min_width: f64) -> Self {
        Mark { at, min_width }
    }
}

/// Panel boundaries of `[lo, hi]`, geometrically graded toward marks and
/// capped at `max_width`.
pub fn panels(lo: f64, hi: f64, marks: &[Mark], max_width: f64) -> Vec<f64> {
    let mut cuts: Vec<Mark> = vec![Mark::cut(lo), Mark::cut(hi)];
    cuts.extend(marks.iter().copied().filter(|m| m.at >= lo && m.at <= hi));
    cuts.sort_by(|x, y| x.at.total_cmp(&y.at));
    // Merge coincident marks, keeping the finest grading.
    let mut merged: Vec<Mark> = Vec::with_capacity(cuts.len());
    for m in cuts {
        match merged.last_mut() {
            Some(last) if (m.at - last.at).abs() <= 1e-14 * (1.0 + m.at.abs()) => {
                last.min_width = match (last.min_width > 0.0, m.min_width > 0.0) {
                    (true, true) => last.min_width.min(m.min_width),
                    (true, false) => last.min_width,
                    _ => m.min_width,
                };
            }
            _ => merged.push(m),
        }
    }
    let mut out = vec![merged[0].at];
    for pair in merged.windows(2) {
        let (s, t) = (pair[0], pair[1]);
        let mid = 0.5 * (s.at + t.at);
        let mut left = Vec::new();
        if s.min_width > 0.0 {
            let mut w = s.min_width;
            while s.at + w < mid {
                left.push(s.at + w);
                w *= 2.0;
            }
        }
        let mut right = Vec::new();
        if t.min_width > 0.0 {
            let mut w = t.min_width;
            while t.at - w > mid {
                right.push(t.at - w);
                w *= 2.0;
            }
        }
        let mut seg: Vec<f64> = left;
        if s.min_width > 0.0 || t.min_width > 0.0 {
            seg.push(mid);
        }
        seg.extend(right.into_iter().rev());
        seg.push(t.at);
        for x in seg {
            let prev = *out.last().unwrap();
            let width = x - prev;
            if width <= 0.0 {
                continue;
            }
            let pieces = (width / max_width).ceil().max(1.0) as usize;
            for i in 1..pieces {
                out.push(prev + width * i as f64 / pieces as f64);
            }
            out.push(x);
        }
    }
    out
}

/// Nodes `(ξ, weight)` of a composite Gauss–Legendre rule on the panels.
pub fn composite(edges: &[f64], order: usize) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(order);
    edges
        .windows(2)
        .flat_map(|e| rule.mapped(e[0], e[1]).collect::<Vec<_>>())
        .collect()
}

/// Marks on `[0, 2π]` for a periodic feature at `theta`: the point itself and,
/// for its periodic images, the nearer domain endpoint graded at the scale of
/// the image's distance.
pub fn periodic_marks(theta: f64, min_width: f64, out: &mut Vec<Mark>) {
    let t = theta.rem_euclid(TWO_PI);
    out.push(Mark::graded(t, min_width));
    // Image below 0 is t - 2π, distance to 0 is 2π - t; image above 2π is
    // t + 2π, distance to 2π is t.
    out.push(Mark::graded(TWO_PI, min_width.max(t)));
    out.push(Mark::graded(0.0, min_width.max(TWO_PI - t)));
}

/// One quadrature node in disc coordinates `u = 1 - r`, angle `ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscNode {
    pub u: f64,
    pub xi: f64,
    /// Product of the `du` and `dξ` weights.
    pub weight: f64,
}

impl DiscNode {
    pub fn r(&self) -> f64 {
        1.0 - self.u
    }
}

/// Restriction of a disc integral relative to the boundary point `e^{iθ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiscRegion {
    Full,
    /// `|e^{iθ} - z| > radius`.
    Outside { theta: f64, radius: f64 },
    /// `|e^{iθ} - z| ≤ radius`.
    Inside { theta: f64, radius: f64 },
}

/// Graded mesh over `u ∈ (0, 1]`, `ξ ∈ [0, 2π)` for integrands with
/// boundary poles at a few angles.
#[derive(Debug, Clone)]
pub struct DiscMesh {
    /// Angles of boundary singularities (panels graded to the scale of `u`).
    pub poles: Vec<f64>,
    /// Angles where the integrand is merely non-smooth, with their finest
    /// panel width.
    pub kinks: Vec<Mark>,
    pub region: DiscRegion,
    /// Dyadic `u` cells `[2^{-k-1}, 2^{-k}]`, `k < radial_levels`.
    pub radial_levels: usize,
    pub radial_order: usize,
    pub angular_order: usize,
}

impl DiscMesh {
    pub fn new(poles: Vec<f64>, radial_levels: usize, radial_order: usize, angular_order: usize) -> Self {
        DiscMesh {
            poles,
            kinks: Vec::new(),
            region: DiscRegion::Full,
            radial_levels,
            radial_order,
            angular_order,
        }
    }

    pub fn with_region(mut self, region: DiscRegion) -> Self {
        self.region = region;
        self
    }

    pub fn with_kinks(mut self, kinks: Vec<Mark>) -> Self {
        self.kinks = kinks;
        self
    }

    fn radial_cells(&self) -> Vec<(f64, f64)> {
        let levels = self.radial_levels.max(1);
        let (top, cut) = match self.region {
            DiscRegion::Full => (1.0, None),
            DiscRegion::Outside { radius, .. } => (1.0, (radius < 1.0).then_some(radius)),
            DiscRegion::Inside { radius, .. } => (radius.min(1.0), None),
        };
        let mut edges: Vec<f64> = (0..=levels).map(|k| top * 0.5f64.powi(k as i32)).collect();
        if let Some(c) = cut {
            if c > edges[levels] && c < top && !edges.contains(&c) {
                edges.push(c);
            }
        }
        // The arc half-angle has a square-root onset at u = radius.
        if let DiscRegion::Outside { radius, .. } | DiscRegion::Inside { radius, .. } = self.region {
            if let Some(lo) = edges.iter().copied().filter(|&e| e < radius).reduce(f64::max) {
                let width = radius - lo;
                edges.extend((1..=24).map(|i| radius - width * 0.5f64.powi(i)));
            }
        }
        edges.sort_by(|a, b| b.total_cmp(a));
        edges.dedup();
        edges.windows(2).map(|w| (w[1], w[0])).collect()
    }

    /// Half-angle of the arc `|e^{iθ} - (1-u)e^{iξ}| ≤ radius` at depth `u`.
    fn half_angle(u: f64, radius: f64) -> Option<f64> {
        if u >= radius {
            return None;
        }
        let r = 1.0 - u;
        let c = 1.0 - (radius * radius - u * u) / (2.0 * r);
        Some(if c <= -1.0 { std::f64::consts::PI } else { c.acos() })
    }

    fn angular_nodes(&self, u_scale: f64, window: Option<(f64, f64, bool)>) -> Vec<(f64, f64)> {
        let mut marks = Vec::with_capacity(4 * self.poles.len() + self.kinks.len() + 4);
        let pole_width = 0.5 * u_scale;
        for &p in &self.poles {
            periodic_marks(p, pole_width, &mut marks);
        }
        marks.extend(self.kinks.iter().copied());
        let max_width = std::f64::consts::FRAC_PI_4;
        match window {
            None => composite(&panels(0.0, TWO_PI, &marks, max_width), self.angular_order),
            Some((lo, hi, inside)) => {
                // [lo, hi] is the arc around θ, possibly wrapping.
                let mut pieces: Vec<(f64, f64)> = Vec::new();
                let arcs: Vec<(f64, f64)> = if lo < 0.0 {
                    vec![(0.0, hi), (lo + TWO_PI, TWO_PI)]
                } else if hi > TWO_PI {
                    vec![(lo, TWO_PI), (0.0, hi - TWO_PI)]
                } else {
                    vec![(lo, hi)]
                };
                if inside {
                    pieces.extend(arcs);
                } else {
                    let mut cuts = vec![0.0];
                    let mut sorted = arcs.clone();
                    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                    for (a, b) in sorted {
                        cuts.push(a);
                        cuts.push(b);
                    }
                    cuts.push(TWO_PI);
                    for pair in cuts.chunks(2) {
                        if pair[1] > pair[0] {
                            pieces.push((pair[0], pair[1]));
                        }
                    }
                }
                let mut nodes = Vec::new();
                for (a, b) in pieces {
                    // Poles just beyond a window edge need grading from the edge.
                    let mut local = marks.clone();
                    local.push(Mark::graded(a, pole_width));
                    local.push(Mark::graded(b, pole_width));
                    let edges: Vec<f64> = panels(0.0, TWO_PI, &local, max_width)
                        .into_iter()
                        .filter(|&x| x >= a && x <= b)
                        .collect();
                    nodes.extend(composite(&edges, self.angular_order));
                }
                nodes
            }
        }
    }

    /// Node list, grouped by radial cell (outermost cell first).
    pub fn nodes(&self) -> Vec<DiscNode> {
        let radial = gauss_legendre(self.radial_order);
        let mut out = Vec::new();
        for (u_lo, u_hi) in self.radial_cells() {
            match self.region {
                DiscRegion::Full => {
                    let ang = self.angular_nodes(u_lo, None);
                    for (u, wu) in radial.mapped(u_lo, u_hi) {
                        out.extend(ang.iter().map(|&(xi, wx)| DiscNode {
                            u,
                            xi,
                            weight: wu * wx,
                        }));
                    }
                }
                DiscRegion::Outside { theta, radius } | DiscRegion::Inside { theta, radius } => {
                    let inside = matches!(self.region, DiscRegion::Inside { .. });
                    for (u, wu) in radial.mapped(u_lo, u_hi) {
                        let window = Self::half_angle(u, radius).map(|phi| (theta - phi, theta + phi, inside));
                        if inside && window.is_none() {
                            continue;
                        }
                        let ang = self.angular_nodes(u_lo, window);
                        out.extend(ang.iter().map(|&(xi, wx)| DiscNode {
                            u,
                            xi,
                            weight: wu * wx,
                        }));
                    }
                }
            }
        }
        out
    }
}
