//! Left and right sides of the logarithmic Sobolev inequalities on the
//! Heisenberg group and on rank-two Carnot groups, reported as deficits
//! `rhs - lhs` with confidence intervals.
//!
//! A report that holds is evidence for the inequality on one test function
//! at one sample size, not a proof.

use std::fmt::Write as _;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::carnot::{CarnotSpec, GroupPoint};
use crate::error::{Error, Result};
use crate::estimators::{
    entropy, entropy_blocked, jet_grad, require_integrable, theorem1_path_mean, variance, BridgeDesign, BridgeFit,
    EnergyForm, Euclidean, Midpoint, Weight, Weighted,
};
use crate::rng::{Purpose, SeedPlan};
use crate::sampler::{draw_increments, endpoint_bank, map_carnot_chunks, map_path_chunks, walk_from_increments};
use crate::sampler::{CarnotPath, PathConfig, PathSample};
use crate::stats::{Moments, McEstimate, Sum, Z95};
use crate::testfn::NamedFunction;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Multiples of the combined half-width used to classify a deficit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictRule {
    pub holds: f64,
    pub violated: f64,
}

impl Default for VerdictRule {
    fn default() -> Self {
        VerdictRule {
            holds: 1.0,
            violated: 3.0,
        }
    }
}

impl VerdictRule {
    pub fn classify(&self, deficit: f64, ci: f64) -> Verdict {
        if deficit >= -self.holds * ci {
            Verdict::Holds
        } else if deficit < -self.violated * ci {
            Verdict::Violated
        } else {
            Verdict::Inconclusive
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub schema: u32,
    pub name: String,
    pub function: String,
    pub lhs: McEstimate,
    pub rhs: McEstimate,
    pub deficit: f64,
    pub verdict: Verdict,
    pub params: Map<String, Value>,
}

impl InequalityReport {
    pub fn new(
        name: impl Into<String>,
        function: impl Into<String>,
        lhs: McEstimate,
        rhs: McEstimate,
        params: Map<String, Value>,
        rule: VerdictRule,
    ) -> Self {
        let deficit = rhs.value - lhs.value;
        let verdict = rule.classify(deficit, lhs.ci_half_width + rhs.ci_half_width);
        InequalityReport {
            schema: SCHEMA,
            name: name.into(),
            function: function.into(),
            lhs,
            rhs,
            deficit,
            verdict,
            params,
        }
    }

    pub fn combined_ci(&self) -> f64 {
        self.lhs.ci_half_width + self.rhs.ci_half_width
    }
}

fn params<const N: usize>(pairs: [(&str, Value); N]) -> Map<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Worst verdict of a batch: violated > inconclusive > holds.
pub fn any_violated(reports: &[InequalityReport]) -> bool {
    reports.iter().any(|r| r.verdict == Verdict::Violated)
}

pub fn reports_json(reports: &[InequalityReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)? + "\n")
}

pub fn parse_reports(text: &str) -> Result<Vec<InequalityReport>> {
    let reports: Vec<InequalityReport> = serde_json::from_str(text)?;
    if let Some(r) = reports.iter().find(|r| r.schema != SCHEMA) {
        return Err(Error::invalid(format!("unsupported report schema {}", r.schema)));
    }
    Ok(reports)
}

/// Fixed-width text table, one line per report.
pub fn render_table(reports: &[InequalityReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:<22} {:>24} {:>24} {:>12}  {:<12} params",
        "name", "function", "lhs", "rhs", "deficit", "verdict"
    );
    for r in reports {
        let p: Vec<String> = r
            .params
            .iter()
            .filter(|(_, v)| v.is_number() || v.is_string())
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        let _ = writeln!(
            out,
            "{:<16} {:<22} {:>24} {:>24} {:>12.6}  {:<12} {}",
            r.name,
            r.function,
            format!("{:.6} +/- {:.6}", r.lhs.value, r.lhs.ci_half_width),
            format!("{:.6} +/- {:.6}", r.rhs.value, r.rhs.ci_half_width),
            r.deficit,
            r.verdict.to_string(),
            p.join(" ")
        );
    }
    out
}

// ---------------------------------------------------------------- path sources

/// Where Brownian paths come from: simulated chunk by chunk, or a bank held
/// in memory (for instance one read from disk).
#[derive(Debug, Clone, Copy)]
pub enum PathSource<'a> {
    Simulate {
        cfg: PathConfig,
        count: usize,
        plan: SeedPlan,
    },
    Bank {
        paths: &'a [PathSample],
        plan: SeedPlan,
    },
}

impl PathSource<'_> {
    pub fn seed(&self) -> u64 {
        match self {
            PathSource::Simulate { plan, .. } | PathSource::Bank { plan, .. } => plan.master_seed,
        }
    }

    pub fn count(&self) -> usize {
        match self {
            PathSource::Simulate { count, .. } => *count,
            PathSource::Bank { paths, .. } => paths.len(),
        }
    }

    pub fn cells(&self) -> Result<usize> {
        match self {
            PathSource::Simulate { cfg, .. } => Ok(cfg.k),
            PathSource::Bank { paths, .. } => paths
                .first()
                .map(|p| p.cells())
                .ok_or_else(|| Error::InsufficientSamples("empty path bank".into())),
        }
    }

    fn map_chunks<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&[PathSample]) -> T + Sync + Send,
    {
        match self {
            PathSource::Simulate { cfg, count, plan } => map_path_chunks(cfg, *count, *plan, f),
            PathSource::Bank { paths, plan } => Ok(plan
                .chunks(paths.len())
                .into_par_iter()
                .map(|r| f(&paths[r]))
                .collect()),
        }
    }

    /// Endpoints with the vertical Brownian part dropped (`beta = 0`).
    pub fn planar_endpoints(&self) -> Result<Vec<GroupPoint>> {
        match self {
            PathSource::Simulate { cfg, count, plan } => {
                let cfg0 = PathConfig { beta: 0.0, ..*cfg };
                endpoint_bank(&cfg0, *count, *plan)
            }
            PathSource::Bank { paths, .. } => Ok(paths
                .iter()
                .map(|p| {
                    let k = p.cells();
                    GroupPoint::new(p.bx[k], p.by[k], p.area[k])
                })
                .collect()),
        }
    }
}

// ---------------------------------------------------------------- path-space entropy and variance bounds

/// Per-function sums from one pass over the paths, shared by the
/// entropy inequality and its linearisation.
#[derive(Debug, Clone)]
pub struct Theorem1Stats {
    pub function: String,
    pub beta: f64,
    pub nodes: usize,
    /// `f(H_1)` for every path.
    pub values: Vec<f64>,
    /// `int_0^1 E g(H_1, H_t) dt` with `nodes` midpoint nodes.
    pub energy: McEstimate,
    /// The same with twice as many nodes, when the grid allows it.
    pub energy_doubled: Option<McEstimate>,
    pub seed: u64,
}

impl Theorem1Stats {
    fn quadrature_params(&self, rhs_scale: f64) -> Vec<(&'static str, Value)> {
        let mut out = vec![("beta", json!(self.beta)), ("nodes", json!(self.nodes))];
        if let Some(d) = self.energy_doubled {
            let r = rhs_scale * self.energy.value;
            let r2 = rhs_scale * d.value;
            let gap = (r2 - r).abs();
            out.push(("rhs_doubled_nodes", json!(r2)));
            out.push(("richardson", json!((4.0 * r2 - r) / 3.0)));
            out.push(("doubling_gap", json!(gap)));
            out.push((
                "doubling_within_ci",
                json!(gap <= rhs_scale * self.energy.ci_half_width),
            ));
        }
        out
    }

    /// `Ent(f^2) <= 2 int_0^1 E g(H_1, H_t) dt`.
    pub fn theorem1_report(&self, rule: VerdictRule) -> Result<InequalityReport> {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        let lhs = entropy(&sq, self.seed)?;
        let mut p: Map<String, Value> = self.quadrature_params(2.0).into_iter().map(|(k, v)| (k.into(), v)).collect();
        p.insert("prefactor".into(), json!(2.0));
        Ok(InequalityReport::new("theorem1", &self.function, lhs, self.energy.scale(2.0), p, rule))
    }

    /// `Var(f) <= int_0^1 E g(H_1, H_t) dt`.
    pub fn poincare_report(&self, rule: VerdictRule) -> Result<InequalityReport> {
        let lhs = variance(&self.values, self.seed)?;
        let mut p: Map<String, Value> = self.quadrature_params(1.0).into_iter().map(|(k, v)| (k.into(), v)).collect();
        p.insert("prefactor".into(), json!(1.0));
        Ok(InequalityReport::new("poincare", &self.function, lhs, self.energy, p, rule))
    }
}

#[derive(Default, Clone)]
struct Acc {
    values: Vec<f64>,
    rhs: Moments,
    rhs2: Moments,
}

impl Acc {
    fn merge(&mut self, o: Acc) {
        self.values.extend(o.values);
        self.rhs.merge(&o.rhs);
        self.rhs2.merge(&o.rhs2);
    }
}

fn merge_chunks(chunks: Vec<Result<Vec<Acc>>>, slots: usize) -> Result<Vec<Acc>> {
    let mut total = vec![Acc::default(); slots];
    for c in chunks {
        for (t, a) in total.iter_mut().zip(c?) {
            t.merge(a);
        }
    }
    Ok(total)
}

fn doubled_rule(rule: Midpoint, cells: usize) -> Option<(Midpoint, Vec<usize>)> {
    let d = Midpoint { nodes: 2 * rule.nodes };
    d.indices(cells).ok().map(|i| (d, i))
}

/// One pass over `paths` evaluating every function at every `beta`.
/// The planar part of a path does not depend on `beta`, so the stored
/// vertical Brownian motion is rescaled for each requested value.
/// Output order: function-major, then `betas`.
pub fn theorem1_stats(
    funcs: &[NamedFunction],
    betas: &[f64],
    paths: &PathSource,
    rule: Midpoint,
) -> Result<Vec<Theorem1Stats>> {
    for f in funcs {
        require_integrable(&f.func)?;
    }
    if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
        return Err(Error::invalid(format!("beta must be nonnegative, got {b}")));
    }
    let cells = paths.cells()?;
    let idx = rule.indices(cells)?;
    let doubled = doubled_rule(rule, cells);
    let jets: Vec<_> = funcs.iter().map(|f| f.func.jet()).collect();
    let nb = betas.len();
    let chunks = paths.map_chunks(|chunk| -> Result<Vec<Acc>> {
        let mut acc = vec![Acc::default(); funcs.len() * nb];
        let mut pows = Vec::new();
        for p in chunk {
            let kk = p.cells();
            for (bi, &beta) in betas.iter().enumerate() {
                let h = GroupPoint::new(p.bx[kk], p.by[kk], p.area[kk] + beta * p.w[kk]);
                for (fi, jet) in jets.iter().enumerate() {
                    let [v, fx, fy, fz] = jet_grad(jet, h, &mut pows)?;
                    let a = &mut acc[fi * nb + bi];
                    a.values.push(v);
                    a.rhs.push(theorem1_path_mean([fx, fy, fz], h, p, &idx, beta));
                    if let Some((_, i2)) = &doubled {
                        a.rhs2.push(theorem1_path_mean([fx, fy, fz], h, p, i2, beta));
                    }
                }
            }
        }
        Ok(acc)
    })?;
    let total = merge_chunks(chunks, funcs.len() * nb)?;
    let seed = paths.seed();
    Ok(total
        .into_iter()
        .enumerate()
        .map(|(i, a)| Theorem1Stats {
            function: funcs[i / nb].name.clone(),
            beta: betas[i % nb],
            nodes: rule.nodes,
            energy: a.rhs.estimate(seed),
            energy_doubled: doubled.as_ref().map(|_| a.rhs2.estimate(seed)),
            values: a.values,
            seed,
        })
        .collect())
}

/// Entropy inequality for one function; see `theorem1_stats`.
pub fn check_theorem1(
    f: &NamedFunction,
    beta: f64,
    paths: &PathSource,
    rule: Midpoint,
    verdict: VerdictRule,
) -> Result<InequalityReport> {
    theorem1_stats(std::slice::from_ref(f), &[beta], paths, rule)?[0].theorem1_report(verdict)
}

pub fn check_poincare(
    f: &NamedFunction,
    beta: f64,
    paths: &PathSource,
    rule: Midpoint,
    verdict: VerdictRule,
) -> Result<InequalityReport> {
    theorem1_stats(std::slice::from_ref(f), &[beta], paths, rule)?[0].poincare_report(verdict)
}

// ---------------------------------------------------------------- best constant

#[derive(Debug, Clone, Serialize)]
pub struct BestConstant {
    /// `max_f Ent(f^2) / int E g`, with a delta-method interval.
    pub estimate: McEstimate,
    pub argmax: String,
    pub ratios: Vec<(String, McEstimate)>,
}

impl BestConstant {
    /// Report of `estimate <= 2`.
    pub fn report(&self, rule: VerdictRule) -> InequalityReport {
        InequalityReport::new(
            "best_constant",
            &self.argmax,
            self.estimate,
            McEstimate::exact(2.0, self.estimate.n_samples, self.estimate.seed),
            params([("members", json!(self.ratios.len()))]),
            rule,
        )
    }
}

/// Smallest multiplier of the energy that covers every theorem1 report
/// given, i.e. the maximum of `lhs / (rhs / 2)`. Reports with zero energy
/// (constant functions) are skipped.
pub fn estimate_best_constant(reports: &[InequalityReport]) -> Result<BestConstant> {
    let mut ratios = Vec::new();
    for r in reports.iter().filter(|r| r.name == "theorem1") {
        let e = r.rhs.scale(0.5);
        if e.value <= 0.0 {
            continue;
        }
        let l = r.lhs;
        let q = l.value / e.value;
        let rel_l = if l.value != 0.0 { l.se() / l.value } else { 0.0 };
        let rel_e = e.se() / e.value;
        let se = q.abs() * (rel_l * rel_l + rel_e * rel_e).sqrt();
        ratios.push((
            r.function.clone(),
            McEstimate {
                value: q,
                ci_half_width: Z95 * se,
                n_samples: l.n_samples,
                seed: l.seed,
            },
        ));
    }
    let (argmax, estimate) = ratios
        .iter()
        .max_by(|a, b| a.1.value.total_cmp(&b.1.value))
        .cloned()
        .ok_or_else(|| Error::InsufficientSamples("no member with positive energy".into()))?;
    Ok(BestConstant {
        estimate,
        argmax,
        ratios,
    })
}

// ---------------------------------------------------------------- endpoint inequalities

#[allow(clippy::too_many_arguments)]
fn endpoint_report(
    name: &str,
    f: &NamedFunction,
    points: &[GroupPoint],
    block: usize,
    form: &dyn EnergyForm,
    prefactor: f64,
    seed: u64,
    mut extra: Map<String, Value>,
    rule: VerdictRule,
) -> Result<InequalityReport> {
    require_integrable(&f.func)?;
    if points.is_empty() {
        return Err(Error::InsufficientSamples(format!("{name}: no samples")));
    }
    let jet = f.func.jet();
    let mut pows = Vec::new();
    let mut sq = Vec::with_capacity(points.len());
    let mut energy = Moments::default();
    for &h in points {
        let [v, fx, fy, fz] = jet_grad(&jet, h, &mut pows)?;
        sq.push(v * v);
        energy.push(form.density(h, [fx, fy, fz]));
    }
    let lhs = entropy_blocked(&sq, block, seed)?;
    extra.insert("prefactor".into(), json!(prefactor));
    extra.insert("form".into(), json!(form.name()));
    Ok(InequalityReport::new(name, &f.name, lhs, energy.estimate(seed).scale(prefactor), extra, rule))
}

/// Weighted inequality
/// `Ent(f^2) <= 2 E[(d_x f)^2 + (d_y f)^2 + C (1 + x^2 + y^2 + |z|)(d_z f)^2]`
/// on endpoints at `beta = 0`.
pub fn check_corollary(
    f: &NamedFunction,
    c: f64,
    endpoints: &[GroupPoint],
    seed: u64,
    rule: VerdictRule,
) -> Result<InequalityReport> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("corollary constant must be positive, got {c}")));
    }
    let form = Euclidean {
        weight: Weight::Gauge { c },
    };
    endpoint_report("corollary", f, endpoints, 1, &form, 2.0, seed, params([("c", json!(c))]), rule)
}

/// `C = 1/2 + 2 C_int`, where `C_int` bounds the integrated bridge moment
/// by `C_int (1 + N^2)`.
pub fn corollary_constant(fit: &BridgeFit) -> f64 {
    0.5 + 2.0 * fit.c_integrated
}

/// Cross term `x (d_y f)(d_z f) - y (d_x f)(d_z f)` of `(Xf)^2 + (Yf)^2`.
#[inline]
fn cross_term(h: GroupPoint, [fx, fy, fz]: [f64; 3]) -> f64 {
    h.x * fy * fz - h.y * fx * fz
}

/// Symmetrized weighted form of the inequality with the sub-Laplacian
/// energy, `Ent(f^2) <= C E[(d_x f)^2 + (d_y f)^2 + r^2/4 (d_z f)^2]`.
///
/// The endpoints are paired with their central reflections `-h`. Averaging
/// the energy of `f` and of `f(-.)` over the paired bank cancels the cross
/// terms pair by pair; their sum is reported as `cross_term_sum` and is
/// exactly zero.
pub fn check_li_symmetrized(
    f: &NamedFunction,
    c_lsi: f64,
    endpoints: &[GroupPoint],
    seed: u64,
    rule: VerdictRule,
) -> Result<InequalityReport> {
    if !(c_lsi > 0.0 && c_lsi.is_finite()) {
        return Err(Error::invalid(format!("C_LSI must be positive, got {c_lsi}")));
    }
    require_integrable(&f.func)?;
    let paired: Vec<GroupPoint> = endpoints.iter().flat_map(|h| [*h, h.inv()]).collect();
    let jet = f.func.jet();
    let mut pows = Vec::new();
    let mut cross = Sum::default();
    let mut gamma = Moments::default();
    for pair in paired.chunks(2) {
        let (h, m) = (pair[0], pair[1]);
        let [_, ax, ay, az] = jet_grad(&jet, h, &mut pows)?;
        let [_, bx, by, bz] = jet_grad(&jet, m, &mut pows)?;
        let ch = cross_term(h, [ax, ay, az]);
        let cm = cross_term(m, [bx, by, bz]);
        // f contributes c(h) and c(-h); f(-.) contributes -c(-h) and -c(h)
        cross.add((ch - cm) + (cm - ch));
        gamma.push(crate::estimators::Gamma { beta: 0.0 }.density(h, [ax, ay, az]));
        gamma.push(crate::estimators::Gamma { beta: 0.0 }.density(m, [bx, by, bz]));
    }
    let form = Euclidean {
        weight: Weight::Planar { nu: 0.0 },
    };
    let extra = params([
        ("c_lsi", json!(c_lsi)),
        ("c_lsi_assumed", json!(true)),
        ("cross_term_sum", json!(cross.value())),
        ("unsymmetrized_rhs", json!(c_lsi * gamma.mean())),
        ("paired", json!(true)),
    ]);
    endpoint_report("li_sym", f, &paired, 2, &form, c_lsi, seed, extra, rule)
}

/// `2 nu (e^{1/nu} - 1)`.
pub fn bg_prefactor(nu: f64) -> f64 {
    2.0 * nu * (1.0 / nu).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BgVariant {
    /// energy `(Xf)^2 + (Yf)^2 + nu (Zf)^2`
    SubLaplacian,
    /// energy `(d_x f)^2 + (d_y f)^2 + (nu + r^2/4)(d_z f)^2`
    Weighted,
}

pub fn check_bg(
    f: &NamedFunction,
    nu: f64,
    variant: BgVariant,
    endpoints: &[GroupPoint],
    seed: u64,
    rule: VerdictRule,
) -> Result<InequalityReport> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::invalid(format!("nu must be positive, got {nu}")));
    }
    let pre = bg_prefactor(nu);
    let extra = params([("nu", json!(nu))]);
    match variant {
        BgVariant::SubLaplacian => {
            let form = Weighted {
                beta: 0.0,
                weight: Weight::Constant { c: nu },
            };
            endpoint_report("bg_nu", f, endpoints, 1, &form, pre, seed, extra, rule)
        }
        BgVariant::Weighted => {
            let form = Euclidean {
                weight: Weight::Planar { nu },
            };
            endpoint_report("bg_w", f, endpoints, 1, &form, pre, seed, extra, rule)
        }
    }
}

// ---------------------------------------------------------------- finite n

/// `(X_{n,i}, Y_{n,i})` for `i = 1..n`: minus the sum of later increments
/// plus the sum of earlier ones, over `sqrt(n)`.
pub fn companion_coordinates(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let s = (n as f64).sqrt();
    let total: f64 = xs.iter().sum();
    let mut before = 0.0;
    let mut out = Vec::with_capacity(n);
    for x in xs {
        let after = total - before - x;
        out.push(-(after - before) / s);
        before += x;
    }
    out
}

/// `h(x, y, z, x', y')` evaluated from the derivatives of `f` at `(x, y, z)`.
#[inline]
pub fn finite_n_h([fx, fy, fz]: [f64; 3], xp: f64, yp: f64, beta: f64) -> f64 {
    let a = fx - 0.5 * yp * fz;
    let b = fy + 0.5 * xp * fz;
    a * a + b * b + beta * beta * (fz * fz)
}

/// Entropy inequality for the law of the random walk `S_n` against
/// `(2/n) sum_i E h(S_{n,i})`, for every function in `funcs`.
pub fn check_finite_n_suite(
    funcs: &[NamedFunction],
    n: usize,
    beta: f64,
    count: usize,
    plan: SeedPlan,
    rule: VerdictRule,
) -> Result<Vec<InequalityReport>> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::invalid(format!("beta must be nonnegative, got {beta}")));
    }
    for f in funcs {
        require_integrable(&f.func)?;
    }
    let jets: Vec<_> = funcs.iter().map(|f| f.func.jet()).collect();
    let chunks = plan.map_chunks(count, |c, r| -> Result<Vec<Acc>> {
        let mut planar = plan.stream(Purpose::FiniteN, c);
        let mut vertical = plan.stream(Purpose::FiniteNVertical, c);
        let mut acc = vec![Acc::default(); funcs.len()];
        let mut pows = Vec::new();
        for _ in r {
            let inc = draw_increments(n, beta, &mut planar, &mut vertical);
            let s = walk_from_increments(&inc);
            let xi = companion_coordinates(&inc.x);
            let yi = companion_coordinates(&inc.y);
            for (fi, jet) in jets.iter().enumerate() {
                let [v, fx, fy, fz] = jet_grad(jet, s, &mut pows)?;
                let mut hs = Sum::default();
                for i in 0..n {
                    hs.add(finite_n_h([fx, fy, fz], xi[i], yi[i], beta));
                }
                acc[fi].values.push(v);
                acc[fi].rhs.push(hs.value() / n as f64);
            }
        }
        Ok(acc)
    });
    let total = merge_chunks(chunks, funcs.len())?;
    total
        .into_iter()
        .zip(funcs)
        .map(|(a, f)| {
            let sq: Vec<f64> = a.values.iter().map(|v| v * v).collect();
            let lhs = entropy(&sq, plan.master_seed)?;
            let rhs = a.rhs.estimate(plan.master_seed).scale(2.0);
            let p = params([("n", json!(n)), ("beta", json!(beta))]);
            Ok(InequalityReport::new("finite_n", &f.name, lhs, rhs, p, rule))
        })
        .collect()
}

pub fn check_finite_n(
    f: &NamedFunction,
    n: usize,
    beta: f64,
    mc_samples: usize,
    seed: u64,
    rule: VerdictRule,
) -> Result<InequalityReport> {
    Ok(check_finite_n_suite(std::slice::from_ref(f), n, beta, mc_samples, SeedPlan::new(seed), rule)?.remove(0))
}

// ---------------------------------------------------------------- Carnot groups

/// Where Carnot paths come from.
#[derive(Debug, Clone, Copy)]
pub enum CarnotSource<'a> {
    Simulate {
        k: usize,
        substeps: usize,
        count: usize,
        plan: SeedPlan,
    },
    Bank {
        paths: &'a [CarnotPath],
        plan: SeedPlan,
    },
}

/// Mean over nodes of
/// `sum_p (d_p f - 1/2 sum_l sum_q b^(l)_pq (X_1^q - 2 X_s^q) d_{d+l} f)^2`,
/// with `z` the group-law coordinate (`Z = -2 z` for the area-sum
/// convention `Z^l = sum_{p<q} b_pq A^{pq}`, in which the factor is `+1`).
fn carnot_path_mean(spec: &CarnotSpec, grad: &[f64], x1: &[f64], p: &CarnotPath, idx: &[usize]) -> f64 {
    let (d, m) = (spec.d(), spec.m());
    let mut s = Sum::default();
    for &k in idx {
        let xs = p.x_at(k);
        let mut total = 0.0;
        for pp in 0..d {
            let mut term = grad[pp];
            for l in 0..m {
                let row = &spec.block(l)[pp * d..(pp + 1) * d];
                let mut acc = 0.0;
                for (q, &b) in row.iter().enumerate() {
                    if b != 0.0 {
                        acc += b * (x1[q] - 2.0 * xs[q]);
                    }
                }
                term -= (0.5 * acc) * grad[d + l];
            }
            total += term * term;
        }
        s.add(total);
    }
    s.value() / idx.len() as f64
}

/// Entropy inequality on a rank-two Carnot group (no vertical noise):
/// `Ent(f^2) <= 2 sum_p int_0^1 E(...)^2 ds`, for every function in `funcs`
/// (over `R^{d+m}`). Reports are named `carnot_theorem`.
pub fn check_carnot_suite(
    spec: &CarnotSpec,
    funcs: &[NamedFunction],
    paths: &CarnotSource,
    rule: Midpoint,
    verdict: VerdictRule,
) -> Result<Vec<InequalityReport>> {
    let (d, m) = (spec.d(), spec.m());
    let rates = spec.vertical_tail_rates();
    for f in funcs {
        if f.func.nvars() != d + m {
            return Err(Error::Shape {
                expected: d + m,
                got: f.func.nvars(),
            });
        }
        if !f.func.is_integrable(d..d + m, &rates) {
            return Err(Error::NotIntegrable(f.name.clone()));
        }
    }
    let jets: Vec<_> = funcs.iter().map(|f| f.func.jet()).collect();
    let work = |chunk: &[CarnotPath], idx: &[usize], idx2: Option<&[usize]>| -> Result<Vec<Acc>> {
        let mut acc = vec![Acc::default(); funcs.len()];
        let mut pows = Vec::new();
        let mut out = vec![0.0; d + m + 1];
        for p in chunk {
            let end = p.endpoint();
            let coords = end.coords();
            for (fi, jet) in jets.iter().enumerate() {
                jet.eval_into(&coords, &mut pows, &mut out)?;
                let a = &mut acc[fi];
                a.values.push(out[0]);
                a.rhs.push(carnot_path_mean(spec, &out[1..], &end.x, p, idx));
                if let Some(i2) = idx2 {
                    a.rhs2.push(carnot_path_mean(spec, &out[1..], &end.x, p, i2));
                }
            }
        }
        Ok(acc)
    };
    let (cells, plan) = match paths {
        CarnotSource::Simulate { k, plan, .. } => (*k, *plan),
        CarnotSource::Bank { paths, plan } => (
            paths
                .first()
                .map(|p| p.cells())
                .ok_or_else(|| Error::InsufficientSamples("empty Carnot bank".into()))?,
            *plan,
        ),
    };
    let idx = rule.indices(cells)?;
    let doubled = doubled_rule(rule, cells);
    let i2 = doubled.as_ref().map(|(_, i)| i.as_slice());
    let chunks = match paths {
        CarnotSource::Simulate {
            k,
            substeps,
            count,
            plan,
        } => map_carnot_chunks(spec, *k, *substeps, *count, *plan, |c| work(c, &idx, i2))?,
        CarnotSource::Bank { paths, plan } => plan
            .chunks(paths.len())
            .into_par_iter()
            .map(|r| work(&paths[r], &idx, i2))
            .collect(),
    };
    let total = merge_chunks(chunks, funcs.len())?;
    let seed = plan.master_seed;
    total
        .into_iter()
        .zip(funcs)
        .map(|(a, f)| {
            let stats = Theorem1Stats {
                function: f.name.clone(),
                beta: 0.0,
                nodes: rule.nodes,
                energy: a.rhs.estimate(seed),
                energy_doubled: doubled.as_ref().map(|_| a.rhs2.estimate(seed)),
                values: a.values,
                seed,
            };
            let mut r = stats.theorem1_report(verdict)?;
            r.name = "carnot_theorem".into();
            r.params.insert("d".into(), json!(d));
            r.params.insert("m".into(), json!(m));
            Ok(r)
        })
        .collect()
}

pub fn check_carnot_theorem(
    spec: &CarnotSpec,
    f: &NamedFunction,
    paths: &CarnotSource,
    rule: Midpoint,
    verdict: VerdictRule,
) -> Result<InequalityReport> {
    Ok(check_carnot_suite(spec, std::slice::from_ref(f), paths, rule, verdict)?.remove(0))
}

// ---------------------------------------------------------------- registry

/// Salt separating the bridge-fit bank from the main path bank.
pub const BRIDGE_SALT: u64 = 0xb1d6e;

/// Where the constant of the weighted corollary comes from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CorollaryConstant {
    Fixed(f64),
    Fit(BridgeDesign),
}

/// Everything a named check may need. Expensive intermediate results are
/// computed on first use and shared between checks.
pub struct CheckContext<'a> {
    pub functions: Vec<NamedFunction>,
    pub betas: Vec<f64>,
    pub paths: PathSource<'a>,
    pub rule: Midpoint,
    pub verdict: VerdictRule,
    pub nus: Vec<f64>,
    pub corollary_c: CorollaryConstant,
    pub c_lsi: f64,
    pub finite_ns: Vec<usize>,
    pub finite_n_samples: usize,
    stats: OnceLock<Vec<Theorem1Stats>>,
    endpoints: OnceLock<Vec<GroupPoint>>,
    fitted_c: OnceLock<f64>,
}

impl<'a> CheckContext<'a> {
    pub fn new(functions: Vec<NamedFunction>, paths: PathSource<'a>) -> Self {
        CheckContext {
            functions,
            betas: vec![0.0],
            paths,
            rule: Midpoint { nodes: 16 },
            verdict: VerdictRule::default(),
            nus: vec![0.5, 1.0, 2.0],
            corollary_c: CorollaryConstant::Fit(BridgeDesign::default()),
            c_lsi: 4.0,
            finite_ns: vec![1, 2, 4, 8],
            finite_n_samples: 100_000,
            stats: OnceLock::new(),
            endpoints: OnceLock::new(),
            fitted_c: OnceLock::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.paths.seed()
    }

    pub fn theorem1_stats(&self) -> Result<&[Theorem1Stats]> {
        if self.stats.get().is_none() {
            let s = theorem1_stats(&self.functions, &self.betas, &self.paths, self.rule)?;
            let _ = self.stats.set(s);
        }
        Ok(self.stats.get().expect("set above"))
    }

    pub fn endpoints(&self) -> Result<&[GroupPoint]> {
        if self.endpoints.get().is_none() {
            let e = self.paths.planar_endpoints()?;
            let _ = self.endpoints.set(e);
        }
        Ok(self.endpoints.get().expect("set above"))
    }

    pub fn corollary_constant(&self) -> Result<f64> {
        match &self.corollary_c {
            CorollaryConstant::Fixed(c) => Ok(*c),
            CorollaryConstant::Fit(design) => {
                if self.fitted_c.get().is_none() {
                    let plan = SeedPlan::new(self.seed()).derive(BRIDGE_SALT);
                    let fit = design.fit(plan)?;
                    let _ = self.fitted_c.set(corollary_constant(&fit));
                }
                Ok(*self.fitted_c.get().expect("set above"))
            }
        }
    }
}

/// A named inequality that can be checked over a context's suite.
pub trait InequalityCheck: Send + Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn run(&self, ctx: &CheckContext) -> Result<Vec<InequalityReport>>;
}

struct Theorem1Check;
struct PoincareCheck;
struct CorollaryCheck;
struct LiSymCheck;
struct BgCheck(BgVariant);
struct FiniteNCheck;
struct BestConstantCheck;

impl InequalityCheck for Theorem1Check {
    fn name(&self) -> &'static str {
        "theorem1"
    }
    fn describe(&self) -> &'static str {
        "Ent(f^2) <= 2 int_0^1 E g(H_1, H_t) dt"
    }
    fn run(&self, ctx: &CheckContext) -> Result<Vec<InequalityReport>> {
        ctx.theorem1_stats()?.iter().map(|s| s.theorem1_report(ctx.verdict)).collect()
    }
}

impl InequalityCheck for PoincareCheck {
    fn name(&self) -> &'static str {
        "poincare"
    }
    fn describe(&self) -> &'static str {
        "Var(f) <= int_0^1 E g(H_1, H_t) dt"
    }
    fn run(&self, ctx: &CheckContext) -> Result<Vec<InequalityReport>> {
        ctx.theorem1_stats()?.iter().map(|s| s.poincare_report(ctx.verdict)).collect()
    }
}

impl InequalityCheck for CorollaryCheck {
    fn name(&self) -> &'static str {
        "corollary"
    }
    fn describe(&self) -> &'static str {
        "Ent(f^2) <= 2 E[f_x^2 + f_y^2 + C (1 + r^2 + |z|) f_z^2], beta = 0"
    }
    fn run(&self, ctx: &CheckContext) -> Result<Vec<InequalityReport>> {
        let c = ctx.corollary_constant()?;
        let pts = ctx.endpoints()?;
        ctx.functions
            .iter()
            .map(|f| check_corollary(f, c, pts, ctx.seed(), ctx.verdict))
            .collect()
    }
}

impl InequalityCheck for LiSymCheck {
    fn name(&self) -> &'static str {
        "li_sym"
    }
    fn describe(&self) -> &'static str {
        "Ent(f^2) <= C_LSI E[f_x^2 + f_y^2 + r^2/4 f_z^2] on a reflection-paired bank"
    }
    fn run(&self, ctx: &CheckContext) -> Result<Vec<InequalityReport>> {
        let pts = ctx.endpoints()?;
        ctx.functions
            .iter()
            .map(|f| check_li_symmetrized(f, ctx.c_lsi, pts, ctx.seed(), ctx.verdict))
            .collect()
    }
}

impl InequalityCheck for BgCheck {
    fn name(&self) -> &'static str {
        match self.0 {
            BgVariant::SubLaplacian => "bg_nu",
            BgVariant::Weighted => "bg_w",
        }
    }
    fn describe(&self) -> &'static str {
        match self.0 {
            BgVariant::SubLaplacian => "Ent(f^2) <= 2 nu (e^{1/nu} - 1) E[(Xf)^2 + (Yf)^2 + nu (Zf)^2]",
            BgVariant::Weighted => "Ent(f^2) <= 2 nu (e^{1/nu} - 1) E[f_x^2 + f_y^2 + (nu + r^2/4) f_z^2]",
        }
    }
    fn run(&self, ctx: &CheckContext) -> Result<Vec<InequalityReport>> {
        let pts = ctx.endpoints()?;
        let mut out = Vec::new();
        for f in &ctx.functions {
            for &nu in &ctx.nus {
                out.push(check_bg(f, nu, self.0, pts, ctx.seed(), ctx.verdict)?);
            }
        }
        Ok(out)
    }
}

impl InequalityCheck for FiniteNCheck {
    fn name(&self) -> &'static str {
        "finite_n"
    }
    fn describe(&self) -> &'static str {
        "Ent_{S_n}(f^2) <= (2/n) sum_i E h(S_{n,i})"
    }
    fn run(&self, ctx: &CheckContext) -> Result<Vec<InequalityReport>> {
        let mut out = Vec::new();
        for &beta in &ctx.betas {
            for &n in &ctx.finite_ns {
                let plan = SeedPlan::new(ctx.seed());
                out.extend(check_finite_n_suite(
                    &ctx.functions,
                    n,
                    beta,
                    ctx.finite_n_samples,
                    plan,
                    ctx.verdict,
                )?);
            }
        }
        Ok(out)
    }
}

impl InequalityCheck for BestConstantCheck {
    fn name(&self) -> &'static str {
        "best_constant"
    }
    fn describe(&self) -> &'static str {
        "max over horizontal members of Ent(f^2) / int E g <= 2"
    }
    fn run(&self, ctx: &CheckContext) -> Result<Vec<InequalityReport>> {
        let horizontal: Vec<&str> = ctx
            .functions
            .iter()
            .filter(|f| f.is_horizontal())
            .map(|f| f.name.as_str())
            .collect();
        let mut out = Vec::new();
        for (i, &beta) in ctx.betas.iter().enumerate() {
            let reports = ctx
                .theorem1_stats()?
                .iter()
                .skip(i)
                .step_by(ctx.betas.len())
                .filter(|s| horizontal.contains(&s.function.as_str()))
                .map(|s| s.theorem1_report(ctx.verdict))
                .collect::<Result<Vec<_>>>()?;
            let mut r = estimate_best_constant(&reports)?.report(ctx.verdict);
            r.params.insert("beta".into(), json!(beta));
            out.push(r);
        }
        Ok(out)
    }
}

/// All registered checks, in report order.
pub fn registry() -> Vec<Box<dyn InequalityCheck>> {
    vec![
        Box::new(Theorem1Check),
        Box::new(PoincareCheck),
        Box::new(CorollaryCheck),
        Box::new(LiSymCheck),
        Box::new(BgCheck(BgVariant::SubLaplacian)),
        Box::new(BgCheck(BgVariant::Weighted)),
        Box::new(FiniteNCheck),
        Box::new(BestConstantCheck),
    ]
}

pub fn find_check(name: &str) -> Result<Box<dyn InequalityCheck>> {
    registry().into_iter().find(|c| c.name() == name).ok_or_else(|| {
        let known: Vec<_> = registry().iter().map(|c| c.name()).collect();
        Error::UnknownName(format!("{name} (known checks: {})", known.join(", ")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::path_bank;
    use crate::testfn::lookup;

    fn small_source(plan: SeedPlan) -> PathSource<'static> {
        PathSource::Simulate {
            cfg: PathConfig::new(64, 2, 0.0).unwrap(),
            count: 3000,
            plan,
        }
    }

    #[test]
    fn verdict_thresholds() {
        let r = VerdictRule::default();
        assert_eq!(r.classify(0.0, 0.0), Verdict::Holds);
        assert_eq!(r.classify(-1.0, 1.0), Verdict::Holds);
        assert_eq!(r.classify(-2.0, 1.0), Verdict::Inconclusive);
        assert_eq!(r.classify(-3.5, 1.0), Verdict::Violated);
    }

    #[test]
    fn constant_function_has_zero_lhs() {
        let f = lookup("const").unwrap();
        let src = small_source(SeedPlan::new(3));
        let r = check_theorem1(&f, 0.0, &src, Midpoint { nodes: 16 }, VerdictRule::default()).unwrap();
        assert_eq!(r.lhs.value, 0.0);
        assert_eq!(r.rhs.value, 0.0);
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn f_equals_x_has_unit_energy() {
        // g is identically 1 for f = x
        let f = lookup("x").unwrap();
        let src = small_source(SeedPlan::new(5));
        let r = check_poincare(&f, 1.0, &src, Midpoint { nodes: 16 }, VerdictRule::default()).unwrap();
        assert_eq!(r.rhs.value, 1.0);
        assert_eq!(r.rhs.ci_half_width, 0.0);
        assert!((r.lhs.value - 1.0).abs() < 4.0 * r.lhs.ci_half_width);
    }

    #[test]
    fn bank_and_stream_agree() {
        let plan = SeedPlan::with_chunk_size(9, 500).unwrap();
        let cfg = PathConfig::new(32, 2, 0.0).unwrap();
        let bank = path_bank(&cfg, 1200, plan).unwrap();
        let f = [lookup("z_gauss").unwrap(), lookup("x").unwrap()];
        let rule = Midpoint { nodes: 16 };
        let a = theorem1_stats(&f, &[0.0, 1.0], &PathSource::Bank { paths: &bank, plan }, rule).unwrap();
        let b = theorem1_stats(&f, &[0.0, 1.0], &PathSource::Simulate { cfg, count: 1200, plan }, rule).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.values, y.values);
            assert_eq!(x.energy, y.energy);
        }
        assert_eq!(a[1].beta, 1.0);
        assert_eq!(a[2].function, "x");
    }

    #[test]
    fn li_cross_terms_cancel_exactly() {
        let plan = SeedPlan::new(1);
        let pts = small_source(plan).planar_endpoints().unwrap();
        for name in ["xz_gauss", "yz_gauss", "xy_plus_z", "z_gauss"] {
            let r = check_li_symmetrized(&lookup(name).unwrap(), 4.0, &pts, 1, VerdictRule::default()).unwrap();
            assert_eq!(r.params["cross_term_sum"], json!(0.0));
        }
    }

    #[test]
    fn bg_prefactor_values() {
        assert!((bg_prefactor(1.0) - 3.436_563_656_918_09).abs() < 1e-10);
        assert!(bg_prefactor(1e6) > 2.0 && bg_prefactor(1e6) - 2.0 < 1e-5);
        let mut last = f64::INFINITY;
        for nu in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let p = bg_prefactor(nu);
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn companion_coordinates_match_definition() {
        let xs = [0.3, -1.2, 0.7, 2.0];
        let got = companion_coordinates(&xs);
        let n = xs.len();
        for i in 0..n {
            let mut s = 0.0;
            for (j, x) in xs.iter().enumerate() {
                let eps = if j > i { 1.0 } else if j < i { -1.0 } else { 0.0 };
                s += eps * x;
            }
            assert!((got[i] + s / (n as f64).sqrt()).abs() < 1e-14);
        }
        assert_eq!(companion_coordinates(&[1.7]), vec![0.0]);
    }

    #[test]
    fn registry_names_are_unique() {
        let names: Vec<_> = registry().iter().map(|c| c.name()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        assert!(find_check("theorem1").is_ok());
        assert!(matches!(find_check("nope"), Err(Error::UnknownName(_))));
    }

    #[test]
    fn report_json_roundtrip() {
        let r = InequalityReport::new(
            "x",
            "f",
            McEstimate::exact(1.0, 2, 3),
            McEstimate::exact(2.0, 2, 3),
            params([("beta", json!(0.0))]),
            VerdictRule::default(),
        );
        let text = reports_json(&[r.clone()]).unwrap();
        assert!(text.contains("\"schema\": 1"));
        assert_eq!(parse_reports(&text).unwrap(), vec![r]);
    }
}
