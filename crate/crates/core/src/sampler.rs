//! Random walks, Brownian paths with Levy area, and their Carnot analogues.
//!
//! Paths are built by exact group products of fine Gaussian increments. The
//! planar stream of a path draws `(dx, dy)` per fine step in time order; the
//! vertical Brownian motion `W` is drawn once per grid cell from a separate
//! stream, so the planar part never depends on `beta`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::carnot::{carnot_mul_into, CarnotPoint, CarnotSpec, GroupPoint};
use crate::error::{Error, Result};
use crate::rng::{Purpose, SeedPlan};

#[inline]
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("beta must be finite and nonnegative, got {beta}")))
    }
}

// ---------------------------------------------------------------- walks

/// Raw increments of one walk: `x_i, y_i ~ N(0,1)`, `z_i ~ N(0, beta^2)`.
#[derive(Debug, Clone)]
pub struct WalkIncrements {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

pub(crate) fn draw_increments(
    n: usize,
    beta: f64,
    planar: &mut ChaCha8Rng,
    vertical: &mut ChaCha8Rng,
) -> WalkIncrements {
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        x.push(normal(planar));
        y.push(normal(planar));
    }
    let z = if beta > 0.0 {
        (0..n).map(|_| beta * normal(vertical)).collect()
    } else {
        vec![0.0; n]
    };
    WalkIncrements { x, y, z }
}

/// `S_n` as the ordered product of `(x_i, y_i, z_i) / sqrt(n)`.
pub fn walk_from_increments(inc: &WalkIncrements) -> GroupPoint {
    let n = inc.x.len();
    let s = (n as f64).sqrt();
    let mut g = GroupPoint::IDENTITY;
    for i in 0..n {
        g = g.mul(GroupPoint::new(inc.x[i] / s, inc.y[i] / s, inc.z[i] / s));
    }
    g
}

/// One walk `S_n`; the first walk of the bank with master seed `seed`.
pub fn walk_sample(n: usize, beta: f64, seed: u64) -> Result<GroupPoint> {
    Ok(walk_bank(n, beta, 1, SeedPlan::new(seed))?[0])
}

pub fn walk_bank(n: usize, beta: f64, count: usize, plan: SeedPlan) -> Result<Vec<GroupPoint>> {
    if n == 0 {
        return Err(Error::invalid("walk length must be at least 1"));
    }
    check_beta(beta)?;
    let parts = plan.map_chunks(count, |c, r| {
        let mut planar = plan.stream(Purpose::WalkPlanar, c);
        let mut vertical = plan.stream(Purpose::WalkVertical, c);
        r.map(|_| walk_from_increments(&draw_increments(n, beta, &mut planar, &mut vertical)))
            .collect::<Vec<_>>()
    });
    Ok(parts.concat())
}

/// `A_n = (1/2n) sum_{i,j} x_i eps_ij y_j` with `eps_ij = 1{j>i} - 1{j<i}`,
/// in linear time.
pub fn area_formula(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Shape {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    let n = xs.len();
    if n == 0 {
        return Err(Error::invalid("area_formula needs at least one increment"));
    }
    let total: f64 = ys.iter().sum();
    let mut before = 0.0;
    let mut acc = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let after = total - before - y;
        acc += x * (after - before);
        before += y;
    }
    Ok(acc / (2.0 * n as f64))
}

// ---------------------------------------------------------------- paths

/// Time discretisation of a path: `k` grid cells, each split into
/// `substeps` fine steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub k: usize,
    pub substeps: usize,
    pub beta: f64,
}

impl PathConfig {
    pub fn new(k: usize, substeps: usize, beta: f64) -> Result<Self> {
        let cfg = PathConfig { k, substeps, beta };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("grid size K must be at least 1"));
        }
        if self.substeps == 0 {
            return Err(Error::invalid("substeps must be at least 1"));
        }
        check_beta(self.beta)
    }

    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(self.k)
    }

    /// Same total fine resolution on a different grid (rounded up).
    pub fn regrid(&self, k: usize) -> Result<PathConfig> {
        let fine = self.k * self.substeps;
        PathConfig::new(k, fine.div_ceil(k).max(1), self.beta)
    }
}

pub fn uniform_grid(k: usize) -> Vec<f64> {
    (0..=k).map(|i| i as f64 / k as f64).collect()
}

/// One trajectory sampled on a grid `0 = t_0 < .. < t_K = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub grid: Vec<f64>,
    pub bx: Vec<f64>,
    pub by: Vec<f64>,
    pub area: Vec<f64>,
    pub w: Vec<f64>,
    pub beta: f64,
}

impl PathSample {
    /// Number of grid cells.
    pub fn cells(&self) -> usize {
        self.grid.len() - 1
    }

    #[inline]
    pub fn z(&self, k: usize) -> f64 {
        self.area[k] + self.beta * self.w[k]
    }

    #[inline]
    pub fn point(&self, k: usize) -> GroupPoint {
        GroupPoint::new(self.bx[k], self.by[k], self.z(k))
    }

    #[inline]
    pub fn endpoint(&self) -> GroupPoint {
        self.point(self.cells())
    }

    /// Grid index of time `t`, if `t` is a grid time.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.grid.iter().position(|s| (s - t).abs() <= 1e-12)
    }

    /// The path `s -> H_1^{-1} H_{1-s}`, which has the same law and ends at
    /// `H_1^{-1}`. Requires a grid symmetric about `1/2`.
    pub fn group_inverse(&self) -> PathSample {
        let kk = self.cells();
        let (xk, yk, ak, wk) = (self.bx[kk], self.by[kk], self.area[kk], self.w[kk]);
        let mut out = PathSample {
            grid: self.grid.clone(),
            bx: Vec::with_capacity(kk + 1),
            by: Vec::with_capacity(kk + 1),
            area: Vec::with_capacity(kk + 1),
            w: Vec::with_capacity(kk + 1),
            beta: self.beta,
        };
        for k in 0..=kk {
            let j = kk - k;
            let (xj, yj) = (self.bx[j], self.by[j]);
            out.bx.push(xj - xk);
            out.by.push(yj - yk);
            out.area.push(self.area[j] - ak + 0.5 * (yk * xj - xk * yj));
            out.w.push(self.w[j] - wk);
        }
        out
    }
}

fn simulate_path(
    grid: &[f64],
    substeps: usize,
    beta: f64,
    planar: &mut ChaCha8Rng,
    vertical: &mut ChaCha8Rng,
) -> PathSample {
    let kk = grid.len() - 1;
    let mut p = PathSample {
        grid: grid.to_vec(),
        bx: Vec::with_capacity(kk + 1),
        by: Vec::with_capacity(kk + 1),
        area: Vec::with_capacity(kk + 1),
        w: Vec::with_capacity(kk + 1),
        beta,
    };
    let mut g = GroupPoint::IDENTITY;
    let mut w = 0.0;
    p.bx.push(0.0);
    p.by.push(0.0);
    p.area.push(0.0);
    p.w.push(0.0);
    for k in 0..kk {
        let span = grid[k + 1] - grid[k];
        let sdt = (span / substeps as f64).sqrt();
        for _ in 0..substeps {
            let dx = sdt * normal(planar);
            let dy = sdt * normal(planar);
            g = g.mul(GroupPoint::new(dx, dy, 0.0));
        }
        w += span.sqrt() * normal(vertical);
        p.bx.push(g.x);
        p.by.push(g.y);
        p.area.push(g.z);
        p.w.push(w);
    }
    p
}

/// Endpoint only, consuming the streams exactly as `simulate_path` does.
fn simulate_endpoint(
    cfg: &PathConfig,
    planar: &mut ChaCha8Rng,
    vertical: &mut ChaCha8Rng,
) -> GroupPoint {
    let span = 1.0 / cfg.k as f64;
    let sdt = (span / cfg.substeps as f64).sqrt();
    let mut g = GroupPoint::IDENTITY;
    let mut w = 0.0;
    for _ in 0..cfg.k {
        for _ in 0..cfg.substeps {
            let dx = sdt * normal(planar);
            let dy = sdt * normal(planar);
            g = g.mul(GroupPoint::new(dx, dy, 0.0));
        }
        w += span.sqrt() * normal(vertical);
    }
    GroupPoint::new(g.x, g.y, g.z + cfg.beta * w)
}

/// The first path of the bank with master seed `seed`.
pub fn path_sample(k: usize, substeps: usize, beta: f64, seed: u64) -> Result<PathSample> {
    let cfg = PathConfig::new(k, substeps, beta)?;
    Ok(path_bank(&cfg, 1, SeedPlan::new(seed))?.remove(0))
}

/// Applies `f` to the paths of each chunk as they are generated, so large
/// banks never need to be held in memory. Results come back in chunk order.
pub fn map_path_chunks<T, F>(cfg: &PathConfig, count: usize, plan: SeedPlan, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[PathSample]) -> T + Sync + Send,
{
    cfg.validate()?;
    let grid = cfg.grid();
    Ok(plan.map_chunks(count, |c, r| {
        let mut planar = plan.stream(Purpose::PathPlanar, c);
        let mut vertical = plan.stream(Purpose::PathVertical, c);
        let paths: Vec<PathSample> = r
            .map(|_| simulate_path(&grid, cfg.substeps, cfg.beta, &mut planar, &mut vertical))
            .collect();
        f(&paths)
    }))
}

pub fn path_bank(cfg: &PathConfig, count: usize, plan: SeedPlan) -> Result<Vec<PathSample>> {
    Ok(map_path_chunks(cfg, count, plan, |p| p.to_vec())?.concat())
}

/// Endpoints `H_1` of the same paths `path_bank` would produce.
pub fn endpoint_bank(cfg: &PathConfig, count: usize, plan: SeedPlan) -> Result<Vec<GroupPoint>> {
    cfg.validate()?;
    Ok(plan
        .map_chunks(count, |c, r| {
            let mut planar = plan.stream(Purpose::PathPlanar, c);
            let mut vertical = plan.stream(Purpose::PathVertical, c);
            r.map(|_| simulate_endpoint(cfg, &mut planar, &mut vertical))
                .collect::<Vec<_>>()
        })
        .concat())
}

/// Endpoints built with the increments composed in reversed order,
/// `delta_N ... delta_1`, from streams independent of `endpoint_bank`.
pub fn right_endpoint_bank(cfg: &PathConfig, count: usize, plan: SeedPlan) -> Result<Vec<GroupPoint>> {
    cfg.validate()?;
    let n = cfg.k * cfg.substeps;
    let sdt = (1.0 / n as f64).sqrt();
    Ok(plan
        .map_chunks(count, |c, r| {
            let mut planar = plan.stream(Purpose::RightPath, c);
            let mut vertical = plan.stream(Purpose::RightVertical, c);
            r.map(|_| {
                let mut g = GroupPoint::IDENTITY;
                for _ in 0..n {
                    let dx = sdt * normal(&mut planar);
                    let dy = sdt * normal(&mut planar);
                    g = GroupPoint::new(dx, dy, 0.0).mul(g);
                }
                let w = normal(&mut vertical);
                GroupPoint::new(g.x, g.y, g.z + cfg.beta * w)
            })
            .collect::<Vec<_>>()
        })
        .concat())
}

/// Joint sample `(H_1, [H_t for t in ts])` read off one path. The path grid
/// is the union of a uniform 64-cell grid and `ts`, with 16 fine steps per
/// cell.
pub fn joint_sample(ts: &[f64], beta: f64, seed: u64) -> Result<(GroupPoint, Vec<GroupPoint>)> {
    check_beta(beta)?;
    let grid = merged_grid(ts, 64)?;
    let plan = SeedPlan::new(seed);
    let mut planar = plan.stream(Purpose::PathPlanar, 0);
    let mut vertical = plan.stream(Purpose::PathVertical, 0);
    let p = simulate_path(&grid, 16, beta, &mut planar, &mut vertical);
    let pts = ts
        .iter()
        .map(|&t| p.point(p.index_of(t).expect("t is on the merged grid")))
        .collect();
    Ok((p.endpoint(), pts))
}

fn merged_grid(ts: &[f64], k: usize) -> Result<Vec<f64>> {
    if ts.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("times must be sorted"));
    }
    if let Some(t) = ts.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(Error::invalid(format!("time {t} outside (0, 1]")));
    }
    let mut g = uniform_grid(k);
    g.extend_from_slice(ts);
    g.sort_by(f64::total_cmp);
    g.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    Ok(g)
}

// ---------------------------------------------------------------- Carnot

/// A rank-two Carnot path on a uniform grid; `x` and `z` are row-major
/// `(K+1) x d` and `(K+1) x m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CarnotPath {
    pub d: usize,
    pub m: usize,
    pub grid: Vec<f64>,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

impl CarnotPath {
    pub fn cells(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn x_at(&self, k: usize) -> &[f64] {
        &self.x[k * self.d..(k + 1) * self.d]
    }

    pub fn z_at(&self, k: usize) -> &[f64] {
        &self.z[k * self.m..(k + 1) * self.m]
    }

    pub fn point(&self, k: usize) -> CarnotPoint {
        CarnotPoint::new(self.x_at(k).to_vec(), self.z_at(k).to_vec())
    }

    pub fn endpoint(&self) -> CarnotPoint {
        self.point(self.cells())
    }
}

fn simulate_carnot(spec: &CarnotSpec, k: usize, substeps: usize, planar: &mut ChaCha8Rng) -> CarnotPath {
    let (d, m) = (spec.d(), spec.m());
    let grid = uniform_grid(k);
    let mut g = spec.identity();
    let mut p = CarnotPath {
        d,
        m,
        grid: grid.clone(),
        x: Vec::with_capacity((k + 1) * d),
        z: Vec::with_capacity((k + 1) * m),
    };
    p.x.extend_from_slice(&g.x);
    p.z.extend_from_slice(&g.z);
    let zero = vec![0.0; m];
    let mut dx = vec![0.0; d];
    for c in 0..k {
        let span = grid[c + 1] - grid[c];
        let sdt = (span / substeps as f64).sqrt();
        for _ in 0..substeps {
            for v in dx.iter_mut() {
                *v = sdt * normal(planar);
            }
            carnot_mul_into(spec, &mut g, &dx, &zero);
        }
        p.x.extend_from_slice(&g.x);
        p.z.extend_from_slice(&g.z);
    }
    p
}

pub fn map_carnot_chunks<T, F>(
    spec: &CarnotSpec,
    k: usize,
    substeps: usize,
    count: usize,
    plan: SeedPlan,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[CarnotPath]) -> T + Sync + Send,
{
    PathConfig::new(k, substeps, 0.0)?;
    Ok(plan.map_chunks(count, |c, r| {
        let mut planar = plan.stream(Purpose::PathPlanar, c);
        let paths: Vec<CarnotPath> = r.map(|_| simulate_carnot(spec, k, substeps, &mut planar)).collect();
        f(&paths)
    }))
}

/// The first Carnot path of the bank with master seed `seed`. Under the
/// Heisenberg spec it reproduces `path_sample(k, substeps, 0, seed)`.
pub fn carnot_path_sample(spec: &CarnotSpec, k: usize, substeps: usize, seed: u64) -> Result<CarnotPath> {
    Ok(carnot_path_bank(spec, k, substeps, 1, SeedPlan::new(seed))?.remove(0))
}

pub fn carnot_path_bank(
    spec: &CarnotSpec,
    k: usize,
    substeps: usize,
    count: usize,
    plan: SeedPlan,
) -> Result<Vec<CarnotPath>> {
    Ok(map_carnot_chunks(spec, k, substeps, count, plan, |p| p.to_vec())?.concat())
}

// ---------------------------------------------------------------- bank files

const BANK_MAGIC: &[u8; 8] = b"HLBANK\0\0";
pub const BANK_VERSION: u32 = 1;

/// Header of a sample-bank file. Records follow as little-endian f64:
/// `bx[0..=K], by[0..=K], area[0..=K], w[0..=K]` per path, on the uniform
/// grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankHeader {
    pub version: u32,
    pub plan: SeedPlan,
    pub config: PathConfig,
    pub count: u64,
}

pub fn write_bank(path: impl AsRef<Path>, plan: SeedPlan, cfg: &PathConfig, paths: &[PathSample]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(BANK_MAGIC)?;
    w.write_all(&BANK_VERSION.to_le_bytes())?;
    w.write_all(&plan.master_seed.to_le_bytes())?;
    w.write_all(&(plan.chunk_size as u64).to_le_bytes())?;
    w.write_all(&(cfg.k as u64).to_le_bytes())?;
    w.write_all(&(cfg.substeps as u64).to_le_bytes())?;
    w.write_all(&cfg.beta.to_le_bytes())?;
    w.write_all(&(paths.len() as u64).to_le_bytes())?;
    for p in paths {
        if p.cells() != cfg.k || p.beta != cfg.beta {
            return Err(Error::invalid("path does not match bank configuration"));
        }
        for col in [&p.bx, &p.by, &p.area, &p.w] {
            for v in col.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

pub fn read_bank(path: impl AsRef<Path>) -> Result<(BankHeader, Vec<PathSample>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BANK_MAGIC {
        return Err(Error::invalid("not a sample-bank file"));
    }
    let mut vb = [0u8; 4];
    r.read_exact(&mut vb)?;
    let version = u32::from_le_bytes(vb);
    if version != BANK_VERSION {
        return Err(Error::invalid(format!("unsupported bank version {version}")));
    }
    let master_seed = read_u64(&mut r)?;
    let chunk_size = read_u64(&mut r)? as usize;
    let k = read_u64(&mut r)? as usize;
    let substeps = read_u64(&mut r)? as usize;
    let beta = read_f64(&mut r)?;
    let count = read_u64(&mut r)?;
    let header = BankHeader {
        version,
        plan: SeedPlan::with_chunk_size(master_seed, chunk_size)?,
        config: PathConfig::new(k, substeps, beta)?,
        count,
    };
    let grid = uniform_grid(k);
    let mut paths = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut cols: [Vec<f64>; 4] = Default::default();
        for col in cols.iter_mut() {
            for _ in 0..=k {
                col.push(read_f64(&mut r)?);
            }
        }
        let [bx, by, area, w] = cols;
        paths.push(PathSample {
            grid: grid.clone(),
            bx,
            by,
            area,
            w,
            beta,
        });
    }
    Ok((header, paths))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn area_quadratic(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let eps = if j > i {
                    1.0
                } else if j < i {
                    -1.0
                } else {
                    0.0
                };
                acc += xs[i] * eps * ys[j];
            }
        }
        acc / (2.0 * n as f64)
    }

    #[test]
    fn area_examples() {
        let (x, y) = ([0.3, -1.2], [0.7, 2.0]);
        let a = area_formula(&x, &y).unwrap();
        assert!((a - (x[0] * y[1] - x[1] * y[0]) / 4.0).abs() < 1e-15);
        assert_eq!(area_formula(&x, &x).unwrap(), 0.0);
        let xs = [0.5, -0.25, 1.5, 2.0];
        let ys: Vec<f64> = xs.iter().map(|v| -3.0 * v).collect();
        assert!(area_formula(&xs, &ys).unwrap().abs() < 1e-15);
        assert!(area_formula(&xs, &ys[..2]).is_err());
    }

    #[test]
    fn area_linear_matches_quadratic() {
        let mut rng = SeedPlan::new(3).stream(Purpose::Points, 0);
        for n in [1, 2, 5, 17] {
            let xs: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
            let ys: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
            let a = area_formula(&xs, &ys).unwrap();
            assert!((a - area_quadratic(&xs, &ys)).abs() < 1e-13);
            assert!((a + area_formula(&ys, &xs).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn walk_matches_formula() {
        let plan = SeedPlan::new(5);
        let mut p = plan.stream(Purpose::WalkPlanar, 0);
        let mut v = plan.stream(Purpose::WalkVertical, 0);
        let inc = draw_increments(2, 0.7, &mut p, &mut v);
        let s = walk_from_increments(&inc);
        let expect = (inc.x[0] * inc.y[1] - inc.x[1] * inc.y[0]) / 4.0 + (inc.z[0] + inc.z[1]) / 2f64.sqrt();
        assert!((s.z - expect).abs() < 1e-14);
        let one = walk_sample(1, 0.0, 9).unwrap();
        assert_eq!(one.z, 0.0);
    }

    #[test]
    fn path_columns_follow_group_products() {
        let p = path_sample(4, 8, 0.5, 12).unwrap();
        assert_eq!((p.bx[0], p.by[0], p.area[0], p.w[0]), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(p.endpoint(), endpoint_bank(&PathConfig::new(4, 8, 0.5).unwrap(), 1, SeedPlan::new(12)).unwrap()[0]);
        let inv = p.group_inverse();
        let e = inv.endpoint();
        let h = p.endpoint();
        assert!((e.x + h.x).abs() < 1e-14 && (e.y + h.y).abs() < 1e-14 && (e.z + h.z).abs() < 1e-14);
        // inverse of inverse is the original path
        let back = inv.group_inverse();
        for k in 0..=4 {
            assert!((back.area[k] - p.area[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn joint_sample_reads_one_path() {
        let (h1, hs) = joint_sample(&[0.3, 1.0], 0.0, 4).unwrap();
        assert_eq!(hs[1], h1);
        assert!(joint_sample(&[0.0], 0.0, 1).is_err());
        assert!(joint_sample(&[0.5, 0.2], 0.0, 1).is_err());
    }

    #[test]
    fn heisenberg_carnot_paths_coincide() {
        let spec = CarnotSpec::heisenberg();
        let c = carnot_path_sample(&spec, 8, 4, 21).unwrap();
        let h = path_sample(8, 4, 0.0, 21).unwrap();
        for k in 0..=8 {
            assert_eq!(c.x_at(k), &[h.bx[k], h.by[k]]);
            assert_eq!(c.z_at(k)[0].to_bits(), h.area[k].to_bits());
        }
    }

    #[test]
    fn bank_roundtrip() {
        let cfg = PathConfig::new(3, 2, 1.0).unwrap();
        let plan = SeedPlan::with_chunk_size(8, 2).unwrap();
        let paths = path_bank(&cfg, 5, plan).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("bank.bin");
        write_bank(&f, plan, &cfg, &paths).unwrap();
        let (hdr, back) = read_bank(&f).unwrap();
        assert_eq!(hdr.count, 5);
        assert_eq!(hdr.plan, plan);
        assert_eq!(hdr.config, cfg);
        assert_eq!(back, paths);
    }
}
