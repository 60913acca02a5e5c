//! Entropy, variance and energy estimators, conditional bridge moments and
//! a kernel-density shape check of the time-one heat kernel.
//!
//! Distances to a target point use the gauge `r^2 + |z|` in place of the
//! Carnot-Caratheodory distance; fitted constants absorb the equivalence
//! constants between the two and should be read with that caveat.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::carnot::GroupPoint;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Purpose};
use crate::sampler::PathSample;
use crate::stats::{mean_estimate, ols_slope, quantile_sorted, sum, McEstimate, Moments, Z95};
use crate::testfn::{Jet, TestFunction};

pub const BOOTSTRAP_RESAMPLES: usize = 200;

fn check_nonempty(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InsufficientSamples(format!("{what}: no samples")));
    }
    Ok(())
}

#[inline]
fn phi(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u * u.ln()
    }
}

/// Plug-in entropy `mean(v log v) - m log m` of nonnegative values.
///
/// Written as the mean of the pointwise Bregman terms
/// `v log(v/m) - v + m >= 0`, so the result is never negative and is zero
/// for constant input.
fn entropy_value(values: &[f64]) -> f64 {
    let m = sum(values.iter().copied()) / values.len() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let terms = values.iter().map(|&v| {
        let t = if v == 0.0 { m } else { v * (v / m).ln() - v + m };
        t.max(0.0)
    });
    sum(terms) / values.len() as f64
}

/// Entropy of `values` with a 95% percentile bootstrap interval
/// (200 resamples).
pub fn entropy(values: &[f64], seed: u64) -> Result<McEstimate> {
    entropy_blocked(values, 1, seed)
}

/// As `entropy`, resampling consecutive blocks of `block` values together
/// (for banks of dependent pairs).
pub fn entropy_blocked(values: &[f64], block: usize, seed: u64) -> Result<McEstimate> {
    check_nonempty(values, "entropy")?;
    if block == 0 || values.len() % block != 0 {
        return Err(Error::invalid("block size must divide the sample count"));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::invalid(format!("entropy needs finite nonnegative values, got {v}")));
    }
    let value = entropy_value(values);
    let phis: Vec<f64> = values.iter().map(|v| phi(*v)).collect();
    let nb = values.len() / block;
    let mut rng = stream_rng(seed, Purpose::Bootstrap, 0);
    let mut reps = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut s_phi = 0.0;
        let mut s_v = 0.0;
        for _ in 0..nb {
            let b = rng.random_range(0..nb) * block;
            for i in b..b + block {
                s_phi += phis[i];
                s_v += values[i];
            }
        }
        let n = values.len() as f64;
        let m = s_v / n;
        reps.push(s_phi / n - phi(m));
    }
    reps.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&reps, 0.025);
    let hi = quantile_sorted(&reps, 0.975);
    Ok(McEstimate {
        value,
        ci_half_width: 0.5 * (hi - lo),
        n_samples: values.len(),
        seed,
    })
}

/// Plug-in variance with a delta-method interval
/// `se^2 = (m4 - var^2) / n`.
pub fn variance(values: &[f64], seed: u64) -> Result<McEstimate> {
    check_nonempty(values, "variance")?;
    let n = values.len() as f64;
    let m = sum(values.iter().copied()) / n;
    let var = sum(values.iter().map(|v| (v - m) * (v - m))) / n;
    let m4 = sum(values.iter().map(|v| (v - m).powi(4))) / n;
    Ok(McEstimate {
        value: var,
        ci_half_width: Z95 * ((m4 - var * var).max(0.0) / n).sqrt(),
        n_samples: values.len(),
        seed,
    })
}

// ---------------------------------------------------------------- energies

/// Weight `a(h)` multiplying `(d_z f)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    Constant { c: f64 },
    /// `c (1 + x^2 + y^2 + |z|)`
    Gauge { c: f64 },
    /// `nu + (x^2 + y^2) / 4`
    Planar { nu: f64 },
}

impl Weight {
    #[inline]
    pub fn at(&self, h: GroupPoint) -> f64 {
        match *self {
            Weight::Constant { c } => c,
            Weight::Gauge { c } => c * (1.0 + h.norm_sq()),
            Weight::Planar { nu } => nu + 0.25 * (h.x * h.x + h.y * h.y),
        }
    }
}

/// A pointwise quadratic form in the first derivatives of `f`.
pub trait EnergyForm: Send + Sync {
    fn name(&self) -> String;
    /// Value at `h` given `(d_x f, d_y f, d_z f)` at `h`.
    fn density(&self, h: GroupPoint, grad: [f64; 3]) -> f64;
}

#[inline]
fn xy_fields(h: GroupPoint, [fx, fy, fz]: [f64; 3]) -> (f64, f64) {
    (fx - 0.5 * h.y * fz, fy + 0.5 * h.x * fz)
}

/// `(Xf)^2 + (Yf)^2 + beta^2 (Zf)^2`.
#[derive(Debug, Clone, Copy)]
pub struct Gamma {
    pub beta: f64,
}

impl EnergyForm for Gamma {
    fn name(&self) -> String {
        format!("gamma:beta={}", self.beta)
    }
    fn density(&self, h: GroupPoint, g: [f64; 3]) -> f64 {
        let (xf, yf) = xy_fields(h, g);
        xf * xf + yf * yf + self.beta * self.beta * g[2] * g[2]
    }
}

/// `(Zf)^2`.
#[derive(Debug, Clone, Copy)]
pub struct Vertical;

impl EnergyForm for Vertical {
    fn name(&self) -> String {
        "vertical".into()
    }
    fn density(&self, _h: GroupPoint, g: [f64; 3]) -> f64 {
        g[2] * g[2]
    }
}

/// `T_a = Gamma + a (Zf)^2`.
#[derive(Debug, Clone, Copy)]
pub struct Weighted {
    pub beta: f64,
    pub weight: Weight,
}

impl EnergyForm for Weighted {
    fn name(&self) -> String {
        format!("t_a:beta={},a={:?}", self.beta, self.weight)
    }
    fn density(&self, h: GroupPoint, g: [f64; 3]) -> f64 {
        Gamma { beta: self.beta }.density(h, g) + self.weight.at(h) * g[2] * g[2]
    }
}

/// `(d_x f)^2 + (d_y f)^2 + a (d_z f)^2`; with `a = 0` the flat planar
/// energy.
#[derive(Debug, Clone, Copy)]
pub struct Euclidean {
    pub weight: Weight,
}

impl Euclidean {
    pub fn planar() -> Self {
        Euclidean {
            weight: Weight::Constant { c: 0.0 },
        }
    }
}

impl EnergyForm for Euclidean {
    fn name(&self) -> String {
        format!("euclidean:a={:?}", self.weight)
    }
    fn density(&self, h: GroupPoint, [fx, fy, fz]: [f64; 3]) -> f64 {
        fx * fx + fy * fy + self.weight.at(h) * fz * fz
    }
}

/// `g(h, h') = (d_x f + (y - 2y')/2 d_z f)^2 + (d_y f - (x - 2x')/2 d_z f)^2
/// + beta^2 (d_z f)^2` at `h = (x, y, z)`, needing only the planar part
/// `(x', y')` of the companion point.
///
/// This is the `n -> infinity` limit of the chain-rule energy of the random
/// walk (`finite_n_h` with `X_{n,i} -> 2 X_t - X_1`). At `h' = h` it is
/// `(Xf)^2 + (Yf)^2 + beta^2 (Zf)^2`; at `h' = e` the same with the
/// right-invariant fields.
#[inline]
pub fn theorem1_g(grad: [f64; 3], h: GroupPoint, xp: f64, yp: f64, beta: f64) -> f64 {
    let [fx, fy, fz] = grad;
    let a = fx + (0.5 * (h.y - 2.0 * yp)) * fz;
    let b = fy - (0.5 * (h.x - 2.0 * xp)) * fz;
    a * a + b * b + beta * beta * (fz * fz)
}

pub(crate) fn jet_grad(jet: &Jet, h: GroupPoint, pows: &mut Vec<f64>) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    jet.eval_into(&h.to_array(), pows, &mut out)?;
    Ok(out)
}

pub(crate) fn require_integrable(f: &TestFunction) -> Result<()> {
    if f.nvars() != 3 {
        return Err(Error::Shape {
            expected: 3,
            got: f.nvars(),
        });
    }
    if !f.is_integrable_heisenberg() {
        return Err(Error::NotIntegrable("envelope grows faster than the heat kernel decays".into()));
    }
    Ok(())
}

/// Sample mean of `form` applied to `f` over `samples`.
pub fn energy(f: &TestFunction, form: &dyn EnergyForm, samples: &[GroupPoint], seed: u64) -> Result<McEstimate> {
    require_integrable(f)?;
    if samples.is_empty() {
        return Err(Error::InsufficientSamples("energy: no samples".into()));
    }
    let jet = f.jet();
    let mut pows = Vec::new();
    let mut acc = Moments::default();
    for &h in samples {
        let [_, fx, fy, fz] = jet_grad(&jet, h, &mut pows)?;
        acc.push(form.density(h, [fx, fy, fz]));
    }
    Ok(acc.estimate(seed))
}

/// Midpoint rule on `[0, 1]` with nodes read off a uniform path grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Midpoint {
    pub nodes: usize,
}

impl Midpoint {
    pub fn times(&self) -> Vec<f64> {
        (0..self.nodes)
            .map(|j| (j as f64 + 0.5) / self.nodes as f64)
            .collect()
    }

    /// Grid indices of the nodes on a uniform `k`-cell grid.
    pub fn indices(&self, k: usize) -> Result<Vec<usize>> {
        if self.nodes == 0 || k % (2 * self.nodes) != 0 {
            return Err(Error::invalid(format!(
                "grid of {k} cells does not contain the {}-node midpoints",
                self.nodes
            )));
        }
        Ok((0..self.nodes).map(|j| (2 * j + 1) * k / (2 * self.nodes)).collect())
    }
}

/// `int_0^1 E g(H_1, H_t) dt` by the midpoint rule, one term per path.
pub fn theorem1_energy(f: &TestFunction, paths: &[PathSample], rule: Midpoint, seed: u64) -> Result<McEstimate> {
    require_integrable(f)?;
    let first = paths
        .first()
        .ok_or_else(|| Error::InsufficientSamples("theorem1 energy: no paths".into()))?;
    let idx = rule.indices(first.cells())?;
    let jet = f.jet();
    let mut pows = Vec::new();
    let mut acc = Moments::default();
    for p in paths {
        let h = p.endpoint();
        let [_, fx, fy, fz] = jet_grad(&jet, h, &mut pows)?;
        acc.push(theorem1_path_mean([fx, fy, fz], h, p, &idx, p.beta));
    }
    Ok(acc.estimate(seed))
}

/// Mean over quadrature nodes of `g(H_1, H_t)` along one path.
#[inline]
pub(crate) fn theorem1_path_mean(grad: [f64; 3], h: GroupPoint, p: &PathSample, idx: &[usize], beta: f64) -> f64 {
    let mut s = crate::stats::Sum::default();
    for &k in idx {
        s.add(theorem1_g(grad, h, p.bx[k], p.by[k], beta));
    }
    s.value() / idx.len() as f64
}

// ---------------------------------------------------------------- bridges

/// What the nearest-neighbour regression conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Conditioning {
    /// The full endpoint `H_1`, neighbours under the gauge of `h^{-1} H_1`.
    Full,
    /// Only the planar endpoint `(X_1, Y_1)`, Euclidean distance.
    Planar,
}

/// `max(30, n^0.6 / 10)`.
pub fn default_k(n: usize) -> usize {
    ((n as f64).powf(0.6) / 10.0).floor().max(30.0) as usize
}

fn nearest(paths: &[PathSample], target: GroupPoint, k: usize, mode: Conditioning) -> Result<Vec<usize>> {
    if k < 30 {
        return Err(Error::invalid("bridge regression needs k >= 30"));
    }
    if k > paths.len() {
        return Err(Error::InsufficientSamples(format!("k = {k} exceeds {} paths", paths.len())));
    }
    let inv = target.inv();
    let mut d: Vec<(f64, usize)> = paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let e = p.endpoint();
            let dist = match mode {
                Conditioning::Full => inv.mul(e).norm_sq(),
                Conditioning::Planar => (e.x - target.x).powi(2) + (e.y - target.y).powi(2),
            };
            (dist, i)
        })
        .collect();
    d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut idx: Vec<usize> = d[..k].iter().map(|x| x.1).collect();
    idx.sort_unstable();
    Ok(idx)
}

/// `E(X_t^2 + Y_t^2 | H_1 = target)` for each grid time in `ts`, by
/// averaging over the `k` paths whose endpoints are nearest to `target`.
pub fn bridge_moments(
    ts: &[f64],
    target: GroupPoint,
    paths: &[PathSample],
    k: usize,
    mode: Conditioning,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    let first = paths
        .first()
        .ok_or_else(|| Error::InsufficientSamples("bridge: no paths".into()))?;
    let cols = ts
        .iter()
        .map(|&t| {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::invalid(format!("bridge time {t} outside [0, 1]")));
            }
            first
                .index_of(t)
                .ok_or_else(|| Error::invalid(format!("bridge time {t} is not a grid time")))
        })
        .collect::<Result<Vec<_>>>()?;
    let idx = nearest(paths, target, k, mode)?;
    Ok(cols
        .iter()
        .map(|&c| {
            let vals: Vec<f64> = idx
                .iter()
                .map(|&i| paths[i].bx[c].powi(2) + paths[i].by[c].powi(2))
                .collect();
            mean_estimate(&vals, seed)
        })
        .collect())
}

pub fn bridge_moment(
    t: f64,
    target: GroupPoint,
    paths: &[PathSample],
    k: usize,
    mode: Conditioning,
    seed: u64,
) -> Result<McEstimate> {
    Ok(bridge_moments(&[t], target, paths, k, mode, seed)?.remove(0))
}

/// `E(|B_t|^2 | B_1) = t^2 |B_1|^2 + 2 t (1 - t)` for planar Brownian motion.
pub fn euclidean_bridge_moment(t: f64, r: f64) -> f64 {
    t * t * r * r + 2.0 * t * (1.0 - t)
}

/// Planar-conditioned bridge moment next to its closed form.
#[derive(Debug, Clone, Serialize)]
pub struct OracleCell {
    pub t: f64,
    pub r: f64,
    pub moment: McEstimate,
    pub oracle: f64,
    /// `|moment - oracle| / se`
    pub sigmas: f64,
}

/// Compares planar-conditioned bridge moments at targets `(r, 0, 0)` with
/// `t^2 r^2 + 2 t (1 - t)`.
pub fn euclidean_oracle_cells(
    paths: &[PathSample],
    ts: &[f64],
    radii: &[f64],
    k: usize,
    seed: u64,
) -> Result<Vec<OracleCell>> {
    let mut out = Vec::with_capacity(ts.len() * radii.len());
    for &r in radii {
        let m = bridge_moments(ts, GroupPoint::new(r, 0.0, 0.0), paths, k, Conditioning::Planar, seed)?;
        for (&t, moment) in ts.iter().zip(m) {
            let oracle = euclidean_bridge_moment(t, r);
            out.push(OracleCell {
                t,
                r,
                sigmas: (moment.value - oracle).abs() / moment.se().max(f64::MIN_POSITIVE),
                moment,
                oracle,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct BridgeCell {
    pub t: f64,
    pub target: GroupPoint,
    pub moment: McEstimate,
    /// `moment / (t^2 N^2 + t)`
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BridgeTarget {
    pub target: GroupPoint,
    /// Trapezoid integral of the moment over the full path grid.
    pub integral: f64,
    /// `integral / (1 + N^2)`
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BridgeFit {
    /// Smallest `C` with `moment <= C (t^2 N^2 + t)` on the grid.
    pub c_pointwise: f64,
    /// Smallest `C` with `int_0^1 moment dt <= C (1 + N^2)` over targets.
    pub c_integrated: f64,
    pub k: usize,
    pub n_paths: usize,
    pub cells: Vec<BridgeCell>,
    pub targets: Vec<BridgeTarget>,
}

impl BridgeFit {
    /// Does the integrated bound hold at every target with the pointwise
    /// constant?
    pub fn integrated_bound_holds(&self) -> bool {
        self.targets.iter().all(|t| t.ratio <= self.c_pointwise)
    }
}

/// Fits the bridge-control constants under full conditioning.
/// `ts` must be interior grid times; the integral uses every grid time.
pub fn bridge_lemma_fit(
    paths: &[PathSample],
    ts: &[f64],
    targets: &[GroupPoint],
    k: usize,
    seed: u64,
) -> Result<BridgeFit> {
    if ts.is_empty() || targets.is_empty() {
        return Err(Error::invalid("bridge fit needs nonempty t and target grids"));
    }
    if ts.iter().any(|t| *t <= 0.0) {
        return Err(Error::invalid("bridge fit times must be positive"));
    }
    let first = paths
        .first()
        .ok_or_else(|| Error::InsufficientSamples("bridge fit: no paths".into()))?;
    let grid = first.grid.clone();
    let per_target: Vec<Result<(Vec<BridgeCell>, BridgeTarget)>> = targets
        .par_iter()
        .map(|&h| {
            let all = bridge_moments(&grid, h, paths, k, Conditioning::Full, seed)?;
            let n2 = h.norm_sq();
            let mut cells = Vec::new();
            for &t in ts {
                let c = first.index_of(t).ok_or_else(|| Error::invalid(format!("{t} not on grid")))?;
                let m = all[c];
                cells.push(BridgeCell {
                    t,
                    target: h,
                    moment: m,
                    ratio: m.value / (t * t * n2 + t),
                });
            }
            let integral = sum((0..grid.len() - 1).map(|i| {
                0.5 * (grid[i + 1] - grid[i]) * (all[i].value + all[i + 1].value)
            }));
            Ok((
                cells,
                BridgeTarget {
                    target: h,
                    integral,
                    ratio: integral / (1.0 + n2),
                },
            ))
        })
        .collect();
    let mut cells = Vec::new();
    let mut tgts = Vec::new();
    for r in per_target {
        let (c, t) = r?;
        cells.extend(c);
        tgts.push(t);
    }
    let c_pointwise = cells.iter().map(|c| c.ratio).fold(0.0, f64::max);
    let c_integrated = tgts.iter().map(|t| t.ratio).fold(0.0, f64::max);
    Ok(BridgeFit {
        c_pointwise,
        c_integrated,
        k,
        n_paths: paths.len(),
        cells,
        targets: tgts,
    })
}

/// Simulation and grids for a bridge-control fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeDesign {
    pub n_paths: usize,
    pub cells: usize,
    pub substeps: usize,
    pub ts: Vec<f64>,
    pub targets: Vec<GroupPoint>,
    /// Neighbour count; `default_k(n_paths)` when absent.
    pub k: Option<usize>,
}

impl Default for BridgeDesign {
    fn default() -> Self {
        let mut targets = Vec::new();
        for r in [0.0, 0.5, 1.0, 1.5, 2.0] {
            for z in [0.0, 0.25, 0.5, 1.0] {
                targets.push(GroupPoint::new(r, 0.0, z));
            }
        }
        BridgeDesign {
            n_paths: 200_000,
            cells: 10,
            substeps: 100,
            ts: (1..10).map(|i| i as f64 / 10.0).collect(),
            targets,
            k: None,
        }
    }
}

impl BridgeDesign {
    pub fn fit(&self, plan: crate::rng::SeedPlan) -> Result<BridgeFit> {
        let cfg = crate::sampler::PathConfig::new(self.cells, self.substeps, 0.0)?;
        let paths = crate::sampler::path_bank(&cfg, self.n_paths, plan)?;
        let k = self.k.unwrap_or_else(|| default_k(self.n_paths));
        bridge_lemma_fit(&paths, &self.ts, &self.targets, k, plan.master_seed)
    }
}

// ---------------------------------------------------------------- heat kernel shape

/// Product Gaussian kernel density estimate in three dimensions with
/// Scott's bandwidth.
#[derive(Debug, Clone)]
pub struct Kde {
    points: Vec<[f64; 3]>,
    bw: [f64; 3],
}

impl Kde {
    pub fn new(samples: &[GroupPoint]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientSamples("density estimate needs samples".into()));
        }
        let n = samples.len() as f64;
        let factor = n.powf(-1.0 / 7.0);
        let mut bw = [0.0; 3];
        for (a, b) in bw.iter_mut().enumerate() {
            let col: Vec<f64> = samples.iter().map(|g| g.to_array()[a]).collect();
            let m = mean_estimate(&col, 0);
            let sd = m.ci_half_width / Z95 * n.sqrt();
            *b = sd * factor;
        }
        Ok(Kde {
            points: samples.iter().map(|g| g.to_array()).collect(),
            bw,
        })
    }

    pub fn bandwidth(&self) -> [f64; 3] {
        self.bw
    }

    pub fn density(&self, at: GroupPoint) -> f64 {
        let a = at.to_array();
        let norm = (2.0 * std::f64::consts::PI).powf(1.5) * self.bw[0] * self.bw[1] * self.bw[2];
        let s = sum(self.points.iter().map(|p| {
            let mut e = 0.0;
            for i in 0..3 {
                let u = (a[i] - p[i]) / self.bw[i];
                e += u * u;
            }
            if e > 80.0 {
                0.0
            } else {
                (-0.5 * e).exp()
            }
        }));
        s / (self.points.len() as f64 * norm)
    }

    /// Exact mass of the estimate in the cube `[-r, r]^3`.
    pub fn box_mass(&self, r: f64) -> f64 {
        let cdf = |u: f64| 0.5 * (1.0 + libm::erf(u / std::f64::consts::SQRT_2));
        let s = sum(self.points.iter().map(|p| {
            (0..3)
                .map(|i| cdf((r - p[i]) / self.bw[i]) - cdf((-r - p[i]) / self.bw[i]))
                .product::<f64>()
        }));
        s / self.points.len() as f64
    }
}

/// Fitted constants of the two-sided Gaussian-type bound on `p_1(e, g)`.
#[derive(Debug, Clone, Serialize)]
pub struct HeatBoundFit {
    pub c1_hat: f64,
    pub c2_hat: f64,
    /// Window radius in the gauge `sqrt(r^2 + |z|)`.
    pub region: f64,
    pub t: f64,
    /// Fraction of held-out evaluation points inside the fitted band.
    pub holdout_coverage: f64,
    /// Least-squares slope of `log p_hat` against `N^2`.
    pub log_slope: f64,
    pub density_at_identity: f64,
    pub max_density_elsewhere: f64,
    /// KDE mass of the cubes `[-r, r]^3` for `r = 1, 2, 4, 8`.
    pub box_masses: Vec<(f64, f64)>,
    pub n_samples: usize,
    pub n_eval: usize,
}

/// Shape of the right-hand side: `exp(-N^2 / 4) / sqrt(1 + r N)` at `t = 1`.
pub fn heat_bound_shape(g: GroupPoint) -> f64 {
    let n2 = g.norm_sq();
    let r = (g.x * g.x + g.y * g.y).sqrt();
    (-n2 / 4.0).exp() / (1.0 + r * n2.sqrt()).sqrt()
}

/// KDE of the endpoints on the window `N(g) <= region`, fit of `C1, C2` on
/// half of a lattice of evaluation points and coverage on the other half.
pub fn heat_shape_check(endpoints: &[GroupPoint], region: f64) -> Result<HeatBoundFit> {
    let inside = endpoints.iter().filter(|g| g.norm_sq() <= region * region).count();
    if inside < 1000 {
        return Err(Error::InsufficientSamples(format!(
            "only {inside} samples inside the window"
        )));
    }
    let kde = Kde::new(endpoints)?;
    // lattice in (x, y, z) restricted to the window; x, y step region/6,
    // z step region^2/8
    let mut lattice = Vec::new();
    let hs = region / 6.0;
    let zs = region * region / 8.0;
    for i in -6i32..=6 {
        for j in -6i32..=6 {
            for l in -8i32..=8 {
                let g = GroupPoint::new(i as f64 * hs, j as f64 * hs, l as f64 * zs);
                if g.norm_sq() <= region * region && !(i == 0 && j == 0 && l == 0) {
                    lattice.push(g);
                }
            }
        }
    }
    let dens: Vec<f64> = lattice.par_iter().map(|g| kde.density(*g)).collect();
    let p0 = kde.density(GroupPoint::IDENTITY);
    let ratios: Vec<f64> = lattice.iter().zip(&dens).map(|(g, d)| d / heat_bound_shape(*g)).collect();
    let fit: Vec<f64> = ratios.iter().step_by(2).copied().collect();
    let hold: Vec<f64> = ratios.iter().skip(1).step_by(2).copied().collect();
    let c1 = fit.iter().copied().fold(f64::INFINITY, f64::min);
    let c2 = fit.iter().copied().fold(0.0, f64::max);
    let covered = hold.iter().filter(|r| **r >= c1 && **r <= c2).count();
    let xs: Vec<f64> = lattice.iter().map(|g| g.norm_sq()).collect();
    let ys: Vec<f64> = dens.iter().map(|d| d.max(1e-300).ln()).collect();
    Ok(HeatBoundFit {
        c1_hat: c1,
        c2_hat: c2,
        region,
        t: 1.0,
        holdout_coverage: covered as f64 / hold.len() as f64,
        log_slope: ols_slope(&xs, &ys),
        density_at_identity: p0,
        max_density_elsewhere: dens.iter().copied().fold(0.0, f64::max),
        box_masses: [1.0, 2.0, 4.0, 8.0].iter().map(|&r| (r, kde.box_mass(r))).collect(),
        n_samples: endpoints.len(),
        n_eval: lattice.len(),
    })
}

// ---------------------------------------------------------------- CSV

/// One row of the estimate CSV: `estimator,params,value,ci,n,seed`.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow {
    pub estimator: String,
    pub params: String,
    pub value: f64,
    pub ci: f64,
    pub n: usize,
    pub seed: u64,
}

impl EstimateRow {
    pub fn new(estimator: impl Into<String>, params: impl Into<String>, e: &McEstimate) -> Self {
        EstimateRow {
            estimator: estimator.into(),
            params: params.into(),
            value: e.value,
            ci: e.ci_half_width,
            n: e.n_samples,
            seed: e.seed,
        }
    }
}

pub fn estimates_csv(rows: &[EstimateRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Evaluation(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Evaluation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::lookup;

    #[test]
    fn entropy_of_constants_is_zero() {
        let e = entropy(&[2.5; 100], 1).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(entropy(&[0.7, 0.7], 1).unwrap().value, 0.0);
        assert!(entropy(&[], 1).is_err());
        assert!(entropy(&[-1.0], 1).is_err());
    }

    #[test]
    fn entropy_is_homogeneous() {
        let v: Vec<f64> = (1..200).map(|i| (i as f64 * 0.37).sin().abs() + 0.01).collect();
        let c = 3.7;
        let cv: Vec<f64> = v.iter().map(|x| c * x).collect();
        let a = entropy(&v, 1).unwrap().value;
        let b = entropy(&cv, 1).unwrap().value;
        assert!((b - c * a).abs() <= 1e-12 * b.abs());
    }

    #[test]
    fn variance_examples() {
        assert_eq!(variance(&[3.0; 10], 0).unwrap().value, 0.0);
        let v = [1.0, 2.0, 4.0];
        let s: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
        let a = variance(&v, 0).unwrap().value;
        assert!((variance(&s, 0).unwrap().value - 4.0 * a).abs() < 1e-14);
    }

    #[test]
    fn energy_forms_pointwise() {
        let h = GroupPoint::new(0.6, -1.3, 0.2);
        // f = z: d = (0, 0, 1)
        let v = Gamma { beta: 0.0 }.density(h, [0.0, 0.0, 1.0]);
        assert!((v - (h.x * h.x + h.y * h.y) / 4.0).abs() < 1e-15);
        let g = [0.3, -0.8, 1.1];
        let at_h = theorem1_g(g, h, h.x, h.y, 0.7);
        let expect = Gamma { beta: 0.0 }.density(h, g) + 0.49 * 1.1 * 1.1;
        assert!((at_h - expect).abs() < 1e-14);
        let at_e = theorem1_g(g, h, 0.0, 0.0, 0.0);
        let (xh, yh) = (g[0] + 0.5 * h.y * g[2], g[1] - 0.5 * h.x * g[2]);
        assert!((at_e - (xh * xh + yh * yh)).abs() < 1e-14);
        let flat = theorem1_g([0.3, -0.8, 0.0], h, 5.0, -2.0, 0.0);
        assert_eq!(flat, 0.3 * 0.3 + 0.8 * 0.8);
    }

    #[test]
    fn energy_flags_non_integrable() {
        let f = lookup("exp_cz:c=0.125").unwrap().func;
        let grow = f.product(&f).product(&f).product(&f).product(&f).product(&f).product(&f);
        let r = energy(&grow, &Vertical, &[GroupPoint::IDENTITY], 0);
        assert!(matches!(r, Err(Error::NotIntegrable(_))));
    }

    #[test]
    fn midpoint_indices() {
        let q = Midpoint { nodes: 4 };
        assert_eq!(q.indices(8).unwrap(), vec![1, 3, 5, 7]);
        assert_eq!(q.indices(16).unwrap(), vec![2, 6, 10, 14]);
        assert!(q.indices(12).is_err());
        assert_eq!(q.times(), vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn default_k_rule() {
        assert_eq!(default_k(1000), 30);
        assert_eq!(default_k(1_000_000), 398);
    }

    #[test]
    fn csv_schema() {
        let e = McEstimate::exact(1.5, 10, 7);
        let s = estimates_csv(&[EstimateRow::new("variance", "f=x", &e)]).unwrap();
        assert_eq!(s, "estimator,params,value,ci,n,seed\nvariance,f=x,1.5,0.0,10,7\n");
    }
}
