//! Bounded maximal monotone graphs on the real line and relaxation functions.
//!
//! A [`MonotoneGraph`] is stored as an ordered list of breakpoints. At a
//! breakpoint `r` the image is the closed interval `[s_low, s_high]` (a
//! vertical segment when `s_low < s_high`); between two breakpoints the graph
//! is the affine branch joining `(r_i, s_high_i)` to `(r_{i+1}, s_low_{i+1})`;
//! beyond the outermost breakpoints it is constant. This covers the sign
//! graph, clamps and constants, and keeps the resolvent solvable by case
//! analysis.
//!
//! A [`RelaxationFunction`] is a Lipschitz map `psi(tau, chi)`, increasing in
//! `tau` and decreasing in `chi`, whose zero set is the graph it carries.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Absolute tolerance for zero-set and membership checks.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Closed interval `[lo, hi]`; either end may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn real_line() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    /// Distance from `x` to the interval (zero inside).
    pub fn distance(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }

    /// Nearest point of the interval to `x`.
    pub fn project(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Breakpoint {
    pub r: f64,
    pub s_low: f64,
    pub s_high: f64,
}

impl Breakpoint {
    pub fn new(r: f64, s_low: f64, s_high: f64) -> Self {
        Breakpoint { r, s_low, s_high }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneGraph {
    breakpoints: Vec<Breakpoint>,
    bound: f64,
    domain: Interval,
}

impl MonotoneGraph {
    /// Graph defined on the whole real line.
    pub fn new(breakpoints: Vec<Breakpoint>) -> Result<Self> {
        Self::with_domain(breakpoints, Interval::real_line())
    }

    /// Graph restricted to `domain`. A proper subinterval of the real line
    /// cannot carry a bounded maximal graph; such graphs are accepted so that
    /// the resolvent can report the gap.
    pub fn with_domain(breakpoints: Vec<Breakpoint>, domain: Interval) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::Parameter("a monotone graph needs at least one breakpoint".into()));
        }
        if domain.lo.is_nan() || domain.hi.is_nan() || domain.lo > domain.hi {
            return Err(Error::Parameter(format!(
                "invalid graph domain [{}, {}]",
                domain.lo, domain.hi
            )));
        }
        for (i, bp) in breakpoints.iter().enumerate() {
            if !(bp.r.is_finite() && bp.s_low.is_finite() && bp.s_high.is_finite()) {
                return Err(Error::Parameter(format!("breakpoint {i} is not finite")));
            }
            if bp.s_low > bp.s_high {
                return Err(Error::Parameter(format!(
                    "breakpoint {i}: s_low = {} exceeds s_high = {}",
                    bp.s_low, bp.s_high
                )));
            }
        }
        for (i, pair) in breakpoints.windows(2).enumerate() {
            if pair[0].r >= pair[1].r {
                return Err(Error::Parameter(format!(
                    "breakpoints {i} and {} are not strictly increasing in r",
                    i + 1
                )));
            }
            if pair[0].s_high > pair[1].s_low {
                return Err(Error::Parameter(format!(
                    "breakpoints {i} and {} violate monotonicity ({} > {})",
                    i + 1,
                    pair[0].s_high,
                    pair[1].s_low
                )));
            }
        }
        let bound = breakpoints
            .iter()
            .map(|bp| bp.s_low.abs().max(bp.s_high.abs()))
            .fold(0.0, f64::max);
        Ok(MonotoneGraph {
            breakpoints,
            bound,
            domain,
        })
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    /// Uniform bound `M` on every output value.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// Image `alpha(r)` as a closed interval.
    pub fn eval(&self, r: f64) -> Result<Interval> {
        if !self.domain.contains(r, 0.0) || r.is_nan() {
            return Err(Error::Domain {
                r,
                lo: self.domain.lo,
                hi: self.domain.hi,
            });
        }
        Ok(self.image(r))
    }

    /// Hull of the images over `[r - dr, r + dr]` with `dr = tol * (1 + |r|)`;
    /// absorbs the rounding of a shifted argument such as `theta + u`.
    pub fn eval_near(&self, r: f64, tol: f64) -> Result<Interval> {
        let dr = tol * (1.0 + r.abs());
        let lo = self.eval((r - dr).max(self.domain.lo))?;
        let hi = self.eval((r + dr).min(self.domain.hi))?;
        Ok(Interval::new(lo.lo, hi.hi))
    }

    fn image(&self, r: f64) -> Interval {
        let bps = &self.breakpoints;
        // index of the first breakpoint with bp.r >= r
        let k = bps.partition_point(|bp| bp.r < r);
        if k < bps.len() && bps[k].r == r {
            return Interval::new(bps[k].s_low, bps[k].s_high);
        }
        if k == 0 {
            return Interval::point(bps[0].s_low);
        }
        if k == bps.len() {
            return Interval::point(bps[k - 1].s_high);
        }
        let (left, right) = (bps[k - 1], bps[k]);
        let t = (r - left.r) / (right.r - left.r);
        Interval::point((1.0 - t) * left.s_high + t * right.s_low)
    }

    /// Unique `w` with `e ∈ w + lambda * alpha(w)`.
    pub fn resolvent(&self, lambda: f64, e: f64) -> Result<f64> {
        self.resolvent_with_slope(lambda, e).map(|(w, _)| w)
    }

    /// Resolvent together with one element of its generalized derivative
    /// `dw/de`, which lies in `[0, 1]`.
    pub fn resolvent_with_slope(&self, lambda: f64, e: f64) -> Result<(f64, f64)> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Parameter(format!("resolvent parameter lambda = {lambda} must be positive")));
        }
        if !e.is_finite() {
            return Err(Error::Parameter(format!("resolvent argument e = {e} is not finite")));
        }
        let (w, slope) = self.resolvent_case_analysis(lambda, e);
        if !self.domain.contains(w, 0.0) {
            return Err(Error::NonMaximal {
                lambda,
                e,
                detail: format!(
                    "candidate w = {w} lies outside the domain [{}, {}]",
                    self.domain.lo, self.domain.hi
                ),
            });
        }
        // (e - w) / lambda must lie in alpha(w); measured in e-units.
        let gap = lambda * self.image(w).distance((e - w) / lambda);
        if gap > MEMBERSHIP_TOL * e.abs().max(1.0) {
            return Err(Error::NonMaximal {
                lambda,
                e,
                detail: format!("w = {w} misses the graph by {gap:.3e}"),
            });
        }
        Ok((w, slope))
    }

    fn resolvent_case_analysis(&self, lambda: f64, e: f64) -> (f64, f64) {
        let bps = &self.breakpoints;
        let first = bps[0];
        if e < first.r + lambda * first.s_low {
            return (e - lambda * first.s_low, 1.0);
        }
        for (i, bp) in bps.iter().enumerate() {
            let lo = bp.r + lambda * bp.s_low;
            let hi = bp.r + lambda * bp.s_high;
            if e >= lo && e <= hi {
                let slope = if hi > lo {
                    0.0
                } else {
                    // degenerate corner: take the branch on the right
                    match bps.get(i + 1) {
                        Some(next) => {
                            let sigma = (next.s_low - bp.s_high) / (next.r - bp.r);
                            1.0 / (1.0 + lambda * sigma)
                        }
                        None => 1.0,
                    }
                };
                return (bp.r, slope);
            }
            if let Some(next) = bps.get(i + 1) {
                let next_lo = next.r + lambda * next.s_low;
                if e > hi && e < next_lo {
                    let sigma = (next.s_low - bp.s_high) / (next.r - bp.r);
                    let w = bp.r + (e - hi) / (1.0 + lambda * sigma);
                    return (w.clamp(bp.r, next.r), 1.0 / (1.0 + lambda * sigma));
                }
            }
        }
        let last = bps[bps.len() - 1];
        (e - lambda * last.s_high, 1.0)
    }
}

pub fn make_sign_graph() -> MonotoneGraph {
    MonotoneGraph::new(vec![Breakpoint::new(0.0, -1.0, 1.0)]).expect("sign graph is valid")
}

/// The constant graph `alpha ≡ {0}`.
pub fn make_zero_graph() -> MonotoneGraph {
    MonotoneGraph::new(vec![Breakpoint::new(0.0, 0.0, 0.0)]).expect("zero graph is valid")
}

/// Single-valued `alpha(r) = min(max(r, -1), 1)`.
pub fn make_clamp_graph() -> MonotoneGraph {
    MonotoneGraph::new(vec![
        Breakpoint::new(-1.0, -1.0, -1.0),
        Breakpoint::new(1.0, 1.0, 1.0),
    ])
    .expect("clamp graph is valid")
}

pub type PsiRule = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct RelaxationFunction {
    name: String,
    rule: PsiRule,
    lipschitz: f64,
    graph: MonotoneGraph,
}

impl fmt::Debug for RelaxationFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RelaxationFunction")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("graph", &self.graph)
            .finish()
    }
}

impl RelaxationFunction {
    pub fn new(
        name: impl Into<String>,
        rule: PsiRule,
        lipschitz: f64,
        graph: MonotoneGraph,
    ) -> Result<Self> {
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::Parameter(format!("Lipschitz constant {lipschitz} must be positive")));
        }
        Ok(RelaxationFunction {
            name: name.into(),
            rule,
            lipschitz,
            graph,
        })
    }

    /// `psi(tau, chi) = tau - J(tau + chi)` with `J` the unit resolvent of
    /// `graph`. Its zero set is exactly the graph and its Lipschitz constant
    /// is 1; for `alpha ≡ {0}` it reduces to `psi = -chi`.
    pub fn resolvent_form(name: impl Into<String>, graph: MonotoneGraph) -> Result<Self> {
        let g = graph.clone();
        if g.domain() != Interval::real_line() {
            return Err(Error::Parameter(
                "the resolvent-form relaxation needs a graph defined on the whole line".into(),
            ));
        }
        let rule: PsiRule = Arc::new(move |tau, chi| {
            let w = g
                .resolvent(1.0, tau + chi)
                .expect("resolvent of a full-domain graph always exists");
            tau - w
        });
        Self::new(name, rule, 1.0, graph)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, tau: f64, chi: f64) -> f64 {
        (self.rule)(tau, chi)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn graph(&self) -> &MonotoneGraph {
        &self.graph
    }
}

/// Melting/crystallization relaxation built on the sign graph.
///
/// For `|chi| <= 1`:
/// `psi = p(tau+)(1 - chi)/2 - p(tau-)(1 + chi)/2`.
/// Outside that band the products use `chi` clamped to `[-1, 1]` and a unit
/// restoring term `-(chi - 1)+ + (-1 - chi)+` is added, so that the zero set is
/// exactly the sign graph on the whole plane and `psi` is globally Lipschitz
/// with constant `max(lip_p, 1)`.
pub fn make_melting_psi(name: impl Into<String>, p: ScalarFn, lip_p: f64) -> Result<RelaxationFunction> {
    if !(lip_p > 0.0 && lip_p.is_finite()) {
        return Err(Error::Parameter(format!("Lipschitz constant of p must be positive, got {lip_p}")));
    }
    if p(0.0) != 0.0 {
        return Err(Error::Validation(format!("p(0) = {} must vanish", p(0.0))));
    }
    let n = 2000;
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..=n {
        let r = -10.0 + 20.0 * k as f64 / n as f64;
        let v = p(r);
        if !v.is_finite() || v.abs() > 1.0 {
            return Err(Error::Validation(format!("p({r}) = {v} is not bounded by 1")));
        }
        if r != 0.0 && v * r <= 0.0 {
            return Err(Error::Validation(format!("p(r) * r > 0 fails at r = {r} (p = {v})")));
        }
        if let Some((r0, v0)) = prev {
            if v < v0 {
                return Err(Error::Validation(format!("p is not nondecreasing between {r0} and {r}")));
            }
            if (v - v0).abs() > lip_p * (r - r0) * (1.0 + 1e-12) + 1e-15 {
                return Err(Error::Validation(format!(
                    "p exceeds the Lipschitz constant {lip_p} between {r0} and {r}"
                )));
            }
        }
        prev = Some((r, v));
    }
    let rule: PsiRule = Arc::new(move |tau: f64, chi: f64| {
        let c = chi.clamp(-1.0, 1.0);
        let melt = p(tau.max(0.0)) * (1.0 - c) / 2.0;
        let freeze = p((-tau).max(0.0)) * (1.0 + c) / 2.0;
        melt - freeze - (chi - 1.0).max(0.0) + (-1.0 - chi).max(0.0)
    });
    RelaxationFunction::new(name, rule, lip_p.max(1.0), make_sign_graph())
}

/// Named graph / relaxation presets accepted by configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsiPreset {
    Sign,
    Zero,
    Clamp,
    MeltingClamp,
    MeltingTanh,
}

impl PsiPreset {
    pub const ALL: [PsiPreset; 5] = [
        PsiPreset::Sign,
        PsiPreset::Zero,
        PsiPreset::Clamp,
        PsiPreset::MeltingClamp,
        PsiPreset::MeltingTanh,
    ];

    pub fn build(self) -> RelaxationFunction {
        let name = self.to_string();
        match self {
            PsiPreset::Sign => RelaxationFunction::resolvent_form(name, make_sign_graph()),
            PsiPreset::Zero => RelaxationFunction::resolvent_form(name, make_zero_graph()),
            PsiPreset::Clamp => RelaxationFunction::resolvent_form(name, make_clamp_graph()),
            PsiPreset::MeltingClamp => {
                make_melting_psi(name, Arc::new(|r: f64| r.clamp(-1.0, 1.0)), 1.0)
            }
            PsiPreset::MeltingTanh => make_melting_psi(name, Arc::new(f64::tanh), 1.0),
        }
        .expect("shipped presets are valid")
    }
}

impl fmt::Display for PsiPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PsiPreset::Sign => "sign",
            PsiPreset::Zero => "zero",
            PsiPreset::Clamp => "clamp",
            PsiPreset::MeltingClamp => "melting(p=clamp)",
            PsiPreset::MeltingTanh => "melting(p=tanh)",
        };
        f.write_str(s)
    }
}

impl FromStr for PsiPreset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        PsiPreset::ALL
            .into_iter()
            .find(|p| p.to_string() == compact)
            .ok_or_else(|| {
                format!("unknown preset `{s}` (expected sign, zero, clamp, melting(p=clamp) or melting(p=tanh))")
            })
    }
}

/// Rectangular grid of `(tau, chi)` sample points.
#[derive(Clone, Debug)]
pub struct SampleGrid {
    pub taus: Vec<f64>,
    pub chis: Vec<f64>,
}

impl SampleGrid {
    pub fn square(lo: f64, hi: f64, n: usize) -> Self {
        let axis = linspace(lo, hi, n);
        SampleGrid {
            taus: axis.clone(),
            chis: axis,
        }
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Clone, Debug)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub checked: usize,
    pub counterexample: Option<String>,
}

impl PropertyCheck {
    fn new(name: &'static str) -> Self {
        PropertyCheck {
            name,
            checked: 0,
            counterexample: None,
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok && self.counterexample.is_none() {
            self.counterexample = Some(describe());
        }
    }

    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct CompatibilityReport {
    pub psi: String,
    pub checks: Vec<PropertyCheck>,
    /// Largest `dist((e - w)/lambda, alpha(w))` over the resolvent samples.
    pub resolvent_consistency: f64,
}

impl CompatibilityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(PropertyCheck::passed)
    }

    pub fn check(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Sign3 {
    Neg,
    Zero,
    Pos,
}

/// Checks the sign/zero-set equivalences between `psi` and its graph, the
/// Lipschitz bound, the two monotonicity conditions, graph ordering and
/// resolvent consistency on `grid`.
///
/// Lipschitz and monotonicity are checked over every pair sharing a grid
/// row or column, plus every pair of diagonal neighbours.
pub fn verify_compatibility(psi: &RelaxationFunction, grid: &SampleGrid) -> CompatibilityReport {
    let tol = MEMBERSHIP_TOL;
    let graph = psi.graph();
    let (nt, nc) = (grid.taus.len(), grid.chis.len());
    let values: Vec<f64> = grid
        .taus
        .iter()
        .flat_map(|&t| grid.chis.iter().map(move |&c| psi.eval(t, c)))
        .collect();
    let at = |i: usize, j: usize| values[i * nc + j];

    let mut positive = PropertyCheck::new("positive_iff_below");
    let mut negative = PropertyCheck::new("negative_iff_above");
    let mut zero = PropertyCheck::new("zero_iff_member");
    let mut domain = PropertyCheck::new("graph_domain");
    for (i, &tau) in grid.taus.iter().enumerate() {
        let image = match graph.eval(tau) {
            Ok(img) => img,
            Err(e) => {
                domain.record(false, || e.to_string());
                continue;
            }
        };
        domain.record(true, String::new);
        for (j, &chi) in grid.chis.iter().enumerate() {
            let v = at(i, j);
            let s = if v > tol {
                Sign3::Pos
            } else if v < -tol {
                Sign3::Neg
            } else {
                Sign3::Zero
            };
            let below = chi < image.lo - tol;
            let above = chi > image.hi + tol;
            let describe = || format!("tau = {tau}, chi = {chi}: psi = {v:e}, alpha(tau) = [{}, {}]", image.lo, image.hi);
            positive.record((s == Sign3::Pos) == below, describe);
            negative.record((s == Sign3::Neg) == above, describe);
            zero.record((s == Sign3::Zero) == (!below && !above), describe);
        }
    }

    let lip = psi.lipschitz();
    let mut lipschitz = PropertyCheck::new("lipschitz");
    let mut increasing = PropertyCheck::new("increasing_in_tau");
    let mut decreasing = PropertyCheck::new("decreasing_in_chi");
    let mut lip_pair = |a: (usize, usize), b: (usize, usize)| {
        let (ta, ca) = (grid.taus[a.0], grid.chis[a.1]);
        let (tb, cb) = (grid.taus[b.0], grid.chis[b.1]);
        let dv = (at(a.0, a.1) - at(b.0, b.1)).abs();
        let bound = lip * ((ta - tb).abs() + (ca - cb).abs());
        lipschitz.record(dv <= bound * (1.0 + 1e-12) + tol, || {
            format!("({ta}, {ca}) vs ({tb}, {cb}): |dpsi| = {dv:e} > {bound:e}")
        });
    };
    for j in 0..nc {
        for i1 in 0..nt {
            for i2 in i1 + 1..nt {
                lip_pair((i1, j), (i2, j));
                let d = (at(i2, j) - at(i1, j)) * (grid.taus[i2] - grid.taus[i1]);
                increasing.record(d >= -tol, || {
                    format!("chi = {}: tau {} vs {}", grid.chis[j], grid.taus[i1], grid.taus[i2])
                });
            }
        }
    }
    for i in 0..nt {
        for j1 in 0..nc {
            for j2 in j1 + 1..nc {
                lip_pair((i, j1), (i, j2));
                let d = (at(i, j2) - at(i, j1)) * (grid.chis[j2] - grid.chis[j1]);
                decreasing.record(d <= tol, || {
                    format!("tau = {}: chi {} vs {}", grid.taus[i], grid.chis[j1], grid.chis[j2])
                });
            }
        }
    }
    for i in 0..nt.saturating_sub(1) {
        for j in 0..nc.saturating_sub(1) {
            lip_pair((i, j), (i + 1, j + 1));
            lip_pair((i + 1, j), (i, j + 1));
        }
    }

    let mut ordering = PropertyCheck::new("graph_monotone");
    let mut sorted = grid.taus.clone();
    sorted.sort_by(f64::total_cmp);
    for pair in sorted.windows(2) {
        if let (Ok(a), Ok(b)) = (graph.eval(pair[0]), graph.eval(pair[1])) {
            if pair[0] < pair[1] {
                ordering.record(a.hi <= b.lo + tol, || {
                    format!("sup alpha({}) = {} > inf alpha({}) = {}", pair[0], a.hi, pair[1], b.lo)
                });
            }
        }
    }
    for pair in graph.breakpoints().windows(2) {
        ordering.record(pair[0].s_high <= pair[1].s_low, || {
            format!("breakpoints at {} and {}", pair[0].r, pair[1].r)
        });
    }

    let mut resolvent = PropertyCheck::new("resolvent_consistent");
    let mut nonexpansive = PropertyCheck::new("resolvent_nonexpansive");
    let mut worst = 0.0_f64;
    for &lambda in &[0.1, 1.0, 10.0] {
        let mut prev: Option<(f64, f64)> = None;
        for &e in &sorted {
            match graph.resolvent(lambda, e) {
                Ok(w) => {
                    let gap = graph.image(w).distance((e - w) / lambda);
                    worst = worst.max(gap);
                    resolvent.record(gap <= tol, || format!("lambda = {lambda}, e = {e}: gap {gap:e}"));
                    if let Some((e0, w0)) = prev {
                        nonexpansive.record((w - w0).abs() <= (e - e0).abs() * (1.0 + 1e-12) + tol, || {
                            format!("lambda = {lambda}: e {e0} -> {e} moved w {w0} -> {w}")
                        });
                    }
                    prev = Some((e, w));
                }
                Err(err) => resolvent.record(false, || err.to_string()),
            }
        }
    }

    CompatibilityReport {
        psi: psi.name().to_string(),
        checks: vec![
            positive,
            negative,
            zero,
            domain,
            lipschitz,
            increasing,
            decreasing,
            ordering,
            resolvent,
            nonexpansive,
        ],
        resolvent_consistency: worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clamp_p() -> ScalarFn {
        Arc::new(|r: f64| r.clamp(-1.0, 1.0))
    }

    #[test]
    fn sign_graph_images() {
        let g = make_sign_graph();
        assert_eq!(g.eval(0.0).unwrap(), Interval::new(-1.0, 1.0));
        assert_eq!(g.eval(3.0).unwrap(), Interval::point(1.0));
        assert_eq!(g.eval(-0.5).unwrap(), Interval::point(-1.0));
        assert_eq!(g.bound(), 1.0);
    }

    #[test]
    fn zero_and_clamp_images() {
        let z = make_zero_graph();
        for r in [-4.0, 0.0, 2.5] {
            assert_eq!(z.eval(r).unwrap(), Interval::point(0.0));
        }
        let c = make_clamp_graph();
        let mid = c.eval(0.3).unwrap();
        assert!((mid.lo - 0.3).abs() < 1e-15 && mid.lo == mid.hi);
        assert_eq!(c.eval(7.0).unwrap(), Interval::point(1.0));
        assert_eq!(c.eval(-1.0).unwrap(), Interval::point(-1.0));
    }

    #[test]
    fn eval_outside_domain_is_an_error() {
        let g = MonotoneGraph::with_domain(vec![Breakpoint::new(0.0, -1.0, 1.0)], Interval::new(-1.0, 1.0)).unwrap();
        assert!(matches!(g.eval(2.0), Err(Error::Domain { .. })));
        assert!(g.eval(0.5).is_ok());
    }

    #[test]
    fn rejects_non_monotone_breakpoints() {
        let bad = MonotoneGraph::new(vec![Breakpoint::new(0.0, 0.0, 1.0), Breakpoint::new(1.0, 0.5, 0.5)]);
        assert!(bad.is_err());
        let unordered = MonotoneGraph::new(vec![Breakpoint::new(1.0, 0.0, 0.0), Breakpoint::new(0.0, 0.0, 0.0)]);
        assert!(unordered.is_err());
        assert!(MonotoneGraph::new(vec![]).is_err());
    }

    #[test]
    fn resolvent_examples() {
        let g = make_sign_graph();
        assert_eq!(g.resolvent(1.0, 2.0).unwrap(), 1.0);
        assert_eq!(g.resolvent(1.0, 0.5).unwrap(), 0.0);
        assert_eq!(g.resolvent(1.0, -3.0).unwrap(), -2.0);
        assert_eq!(make_zero_graph().resolvent(1.0, 0.7).unwrap(), 0.7);
        // clamp: w + 2w = 1.5 -> w = 0.5
        assert!((make_clamp_graph().resolvent(2.0, 1.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(g.resolvent(0.0, 1.0).is_err());
    }

    #[test]
    fn resolvent_reports_gap_for_truncated_domain() {
        let g = MonotoneGraph::with_domain(vec![Breakpoint::new(0.0, -1.0, 1.0)], Interval::new(-1.0, 1.0)).unwrap();
        assert!(g.resolvent(1.0, 0.3).is_ok());
        assert!(matches!(g.resolvent(1.0, 5.0), Err(Error::NonMaximal { .. })));
    }

    #[test]
    fn resolvent_slopes() {
        let g = make_sign_graph();
        assert_eq!(g.resolvent_with_slope(1.0, 0.5).unwrap().1, 0.0);
        assert_eq!(g.resolvent_with_slope(1.0, 2.0).unwrap().1, 1.0);
        let c = make_clamp_graph();
        assert!((c.resolvent_with_slope(1.0, 0.2).unwrap().1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn melting_psi_examples() {
        let psi = make_melting_psi("m", clamp_p(), 1.0).unwrap();
        assert_eq!(psi.eval(0.0, 0.3), 0.0);
        assert_eq!(psi.eval(1.0, 1.0), 0.0);
        assert!((psi.eval(0.5, 0.0) - 0.25).abs() < 1e-15);
        assert!(psi.eval(1.0, 0.0) > 0.0);
        assert!(psi.eval(-1.0, 0.0) < 0.0);
        // outside the physical band the restoring term takes over
        assert!(psi.eval(0.0, 2.0) < 0.0);
        assert!(psi.eval(0.0, -2.0) > 0.0);
    }

    #[test]
    fn melting_psi_rejects_bad_profiles() {
        assert!(make_melting_psi("bad", Arc::new(|r: f64| -r.clamp(-1.0, 1.0)), 1.0).is_err());
        assert!(make_melting_psi("big", Arc::new(|r: f64| 2.0 * r), 2.0).is_err());
        assert!(make_melting_psi("flat", Arc::new(|r: f64| if r.abs() < 0.5 { 0.0 } else { r.signum() }), 1.0).is_err());
    }

    #[test]
    fn resolvent_form_of_zero_graph_is_linear_decay() {
        let psi = PsiPreset::Zero.build();
        assert_eq!(psi.eval(5.0, -2.0), 2.0);
        assert_eq!(psi.eval(-1.0, 0.25), -0.25);
    }

    #[test]
    fn preset_names_round_trip() {
        for p in PsiPreset::ALL {
            assert_eq!(p.to_string().parse::<PsiPreset>().unwrap(), p);
        }
        assert_eq!("melting( p = tanh )".parse::<PsiPreset>().unwrap(), PsiPreset::MeltingTanh);
        assert!("bogus".parse::<PsiPreset>().is_err());
    }

    #[test]
    fn compatibility_examples() {
        let psi = PsiPreset::MeltingClamp.build();
        let grid = SampleGrid {
            taus: vec![-1.0, 1.0],
            chis: vec![0.0],
        };
        let report = verify_compatibility(&psi, &grid);
        assert!(report.all_passed(), "{report:?}");

        let linear = RelaxationFunction::new("linear", Arc::new(|_t, c| -c), 1.0, make_zero_graph()).unwrap();
        let report = verify_compatibility(&linear, &SampleGrid { taus: vec![5.0], chis: vec![-2.0] });
        assert!(report.all_passed());
    }

    #[test]
    fn compatibility_detects_a_wrong_zero_set() {
        // zero set {chi = 0}, paired with the sign graph
        let wrong = RelaxationFunction::new("wrong", Arc::new(|_t, c| -c), 1.0, make_sign_graph()).unwrap();
        let report = verify_compatibility(&wrong, &SampleGrid::square(-3.0, 3.0, 11));
        assert!(!report.all_passed());
        assert!(!report.check("zero_iff_member").unwrap().passed());
    }
}
