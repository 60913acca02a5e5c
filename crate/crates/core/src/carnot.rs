//! Group arithmetic for the Heisenberg group and homogeneous step-two Carnot
//! groups, in exponential coordinates.
//!
//! The Heisenberg product is
//!
//! ```text
//! (x, y, z) . (x', y', z') = (x + x', y + y', z + z' + (x y' - y x') / 2)
//! ```
//!
//! and a rank-two Carnot group on `R^d x R^m` twists the vertical part by
//! `m` skew-symmetric forms, `z_l + z'_l + <B_l x, x'> / 2`.
//!
//! Matrix coordinates `M(a, b, c)` are not used anywhere in this crate; they
//! relate to exponential coordinates through `a = x`, `b = y`, `c = z + x y / 2`.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the Heisenberg group in exponential coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl GroupPoint {
    pub const IDENTITY: GroupPoint = GroupPoint {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        GroupPoint { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    fn check(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!("non-finite group point {self}")))
        }
    }

    /// Unchecked product; callers on hot paths that already hold finite
    /// coordinates use this directly.
    #[inline]
    pub fn mul(self, h: GroupPoint) -> GroupPoint {
        GroupPoint {
            x: self.x + h.x,
            y: self.y + h.y,
            z: self.z + h.z + 0.5 * (self.x * h.y - self.y * h.x),
        }
    }

    #[inline]
    pub fn inv(self) -> GroupPoint {
        GroupPoint {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// `r^2 + |z|`, a homogeneous gauge equivalent to the squared
    /// Carnot-Caratheodory distance from the identity.
    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y + self.z.abs()
    }
}

impl From<[f64; 3]> for GroupPoint {
    fn from(v: [f64; 3]) -> Self {
        GroupPoint::new(v[0], v[1], v[2])
    }
}

impl fmt::Display for GroupPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

pub fn multiply(g: GroupPoint, h: GroupPoint) -> Result<GroupPoint> {
    g.check()?;
    h.check()?;
    Ok(g.mul(h))
}

pub fn inverse(g: GroupPoint) -> Result<GroupPoint> {
    g.check()?;
    Ok(g.inv())
}

/// Anisotropic dilation `(x, y, z) -> (l x, l y, l^2 z)`.
pub fn dilate(lambda: f64, g: GroupPoint) -> Result<GroupPoint> {
    check_lambda(lambda)?;
    g.check()?;
    Ok(GroupPoint::new(lambda * g.x, lambda * g.y, lambda * lambda * g.z))
}

pub fn pseudo_norm_sq(g: GroupPoint) -> Result<f64> {
    g.check()?;
    Ok(g.norm_sq())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "dilation factor must be positive, got {lambda}"
        )))
    }
}

/// Validation thresholds for [`CarnotSpec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecTolerances {
    /// Max entry of `|B + B^T|`.
    pub skew: f64,
    /// Lower bound on the smallest singular value of the `m x d^2` stacking.
    pub independence: f64,
}

impl Default for SpecTolerances {
    fn default() -> Self {
        SpecTolerances {
            skew: 1e-12,
            independence: 1e-10,
        }
    }
}

/// A homogeneous step-two Carnot group: dimensions and the skew-symmetric
/// matrices `B_1..B_m` of the vertical twist.
#[derive(Debug, Clone, PartialEq)]
pub struct CarnotSpec {
    d: usize,
    m: usize,
    /// Row-major `d x d` blocks.
    b: Vec<Vec<f64>>,
    /// Nonzero strictly upper-triangular entries `(p, q, b_pq)` per block.
    upper: Vec<Vec<(usize, usize, f64)>>,
}

impl CarnotSpec {
    pub fn new(d: usize, m: usize, b: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_tolerances(d, m, b, SpecTolerances::default())
    }

    pub fn with_tolerances(
        d: usize,
        m: usize,
        b: Vec<Vec<f64>>,
        tol: SpecTolerances,
    ) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::InvalidSpec("d and m must be positive".into()));
        }
        if b.len() != m {
            return Err(Error::InvalidSpec(format!(
                "expected {m} matrices, got {}",
                b.len()
            )));
        }
        for (l, block) in b.iter().enumerate() {
            if block.len() != d * d {
                return Err(Error::InvalidSpec(format!(
                    "B{} has {} entries, expected {}",
                    l + 1,
                    block.len(),
                    d * d
                )));
            }
            if block.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(format!("B{} has non-finite entries", l + 1)));
            }
            for p in 0..d {
                for q in 0..d {
                    let s = (block[p * d + q] + block[q * d + p]).abs();
                    if s > tol.skew {
                        return Err(Error::InvalidSpec(format!(
                            "B{} is not skew-symmetric at ({}, {}): |b_pq + b_qp| = {s:e}",
                            l + 1,
                            p + 1,
                            q + 1
                        )));
                    }
                }
            }
        }
        let stacked = DMatrix::from_fn(m, d * d, |l, k| b[l][k]);
        let sv = stacked.singular_values();
        let smallest = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(smallest > tol.independence) || m > d * d {
            return Err(Error::InvalidSpec(format!(
                "matrices are not linearly independent (smallest singular value {smallest:e})"
            )));
        }
        let upper = b
            .iter()
            .map(|block| {
                let mut entries = Vec::new();
                for p in 0..d {
                    for q in (p + 1)..d {
                        let v = block[p * d + q];
                        if v != 0.0 {
                            entries.push((p, q, v));
                        }
                    }
                }
                entries
            })
            .collect();
        Ok(CarnotSpec { d, m, b, upper })
    }

    /// `H_1` as `d = 2, m = 1, B = [[0, -1], [1, 0]]`.
    pub fn heisenberg() -> Self {
        Self::new(2, 1, vec![vec![0.0, -1.0, 1.0, 0.0]]).expect("heisenberg spec is valid")
    }

    /// Free step-two group on `d` generators: one block `E_pq - E_qp` per
    /// pair `p < q`, so `m = d (d - 1) / 2`.
    pub fn free_rank_two(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidSpec("free group needs d >= 2".into()));
        }
        let mut blocks = Vec::new();
        for p in 0..d {
            for q in (p + 1)..d {
                let mut block = vec![0.0; d * d];
                block[p * d + q] = 1.0;
                block[q * d + p] = -1.0;
                blocks.push(block);
            }
        }
        let m = blocks.len();
        Self::new(d, m, blocks)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.d + self.m
    }

    /// Entry `b^(l)_{pq}` (zero-based indices).
    pub fn b(&self, l: usize, p: usize, q: usize) -> f64 {
        self.b[l][p * self.d + q]
    }

    pub fn block(&self, l: usize) -> &[f64] {
        &self.b[l]
    }

    /// `<B_l x, x'>` summed over the stored upper-triangular entries.
    #[inline]
    pub(crate) fn twist(&self, l: usize, x: &[f64], xp: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &(p, q, v) in &self.upper[l] {
            acc += v * (x[q] * xp[p] - x[p] * xp[q]);
        }
        acc
    }

    /// Exponential tail rate of each vertical coordinate of the heat kernel
    /// at time one: `E exp(s Z_l)` is finite for `|s| < pi / |B_l|_2`.
    pub fn vertical_tail_rates(&self) -> Vec<f64> {
        (0..self.m)
            .map(|l| {
                let mat = DMatrix::from_row_slice(self.d, self.d, &self.b[l]);
                let top = mat.singular_values().iter().cloned().fold(0.0, f64::max);
                std::f64::consts::PI / top
            })
            .collect()
    }

    pub fn identity(&self) -> CarnotPoint {
        CarnotPoint {
            x: vec![0.0; self.d],
            z: vec![0.0; self.m],
        }
    }

    fn conform(&self, g: &CarnotPoint) -> Result<()> {
        if g.x.len() != self.d {
            return Err(Error::Shape {
                expected: self.d,
                got: g.x.len(),
            });
        }
        if g.z.len() != self.m {
            return Err(Error::Shape {
                expected: self.m,
                got: g.z.len(),
            });
        }
        if g.x.iter().chain(g.z.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite Carnot point"));
        }
        Ok(())
    }

    /// Parse the line-oriented spec format:
    ///
    /// ```text
    /// # Heisenberg group
    /// d = 2
    /// m = 1
    /// B1 =
    ///   0 -1
    ///   1  0
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_tolerances(text, SpecTolerances::default())
    }

    pub fn parse_with_tolerances(text: &str, tol: SpecTolerances) -> Result<Self> {
        let mut d: Option<usize> = None;
        let mut m: Option<usize> = None;
        let mut blocks: Vec<(usize, usize, Vec<f64>)> = Vec::new(); // (index, header line, entries)
        let mut current: Option<usize> = None; // position in `blocks`
        let mut last_line = 0;

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            last_line = line_no;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                let key = key.trim();
                let value = value.trim();
                if let Some(pos) = current {
                    let (idx, header, ref entries) = blocks[pos];
                    let need = d.unwrap_or(0) * d.unwrap_or(0);
                    if entries.len() != need {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!(
                                "block B{idx} (line {header}) ended after {} of {need} entries",
                                entries.len()
                            ),
                        });
                    }
                    current = None;
                }
                match key {
                    "d" | "m" => {
                        let v: usize = value.parse().map_err(|_| Error::Parse {
                            line: line_no,
                            message: format!("{key} must be a positive integer, got '{value}'"),
                        })?;
                        if v == 0 {
                            return Err(Error::Parse {
                                line: line_no,
                                message: format!("{key} must be positive"),
                            });
                        }
                        let slot = if key == "d" { &mut d } else { &mut m };
                        if slot.is_some() {
                            return Err(Error::Parse {
                                line: line_no,
                                message: format!("duplicate key {key}"),
                            });
                        }
                        *slot = Some(v);
                    }
                    k if k.starts_with('B') => {
                        let idx: usize = k[1..].parse().map_err(|_| Error::Parse {
                            line: line_no,
                            message: format!("bad block name '{k}', expected B1..Bm"),
                        })?;
                        let (dd, mm) = match (d, m) {
                            (Some(dd), Some(mm)) => (dd, mm),
                            _ => {
                                return Err(Error::Parse {
                                    line: line_no,
                                    message: "d and m must be declared before matrix blocks"
                                        .into(),
                                })
                            }
                        };
                        if idx == 0 || idx > mm {
                            return Err(Error::Parse {
                                line: line_no,
                                message: format!("block index {idx} outside 1..={mm}"),
                            });
                        }
                        if blocks.iter().any(|b| b.0 == idx) {
                            return Err(Error::Parse {
                                line: line_no,
                                message: format!("duplicate block B{idx}"),
                            });
                        }
                        let mut entries = Vec::with_capacity(dd * dd);
                        if !value.is_empty() {
                            parse_row(value, line_no, &mut entries)?;
                        }
                        blocks.push((idx, line_no, entries));
                        current = Some(blocks.len() - 1);
                    }
                    other => {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("unknown key '{other}'"),
                        })
                    }
                }
                continue;
            }
            let Some(pos) = current else {
                return Err(Error::Parse {
                    line: line_no,
                    message: "matrix row outside of a B block".into(),
                });
            };
            let dd = d.unwrap_or(0);
            let before = blocks[pos].2.len();
            parse_row(line, line_no, &mut blocks[pos].2)?;
            let added = blocks[pos].2.len() - before;
            if added != dd {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("row has {added} entries, expected {dd}"),
                });
            }
            if blocks[pos].2.len() > dd * dd {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("block B{} has more than {dd} rows", blocks[pos].0),
                });
            }
            if blocks[pos].2.len() == dd * dd {
                current = None;
            }
        }

        let d = d.ok_or(Error::Parse {
            line: last_line.max(1),
            message: "missing key d".into(),
        })?;
        let m = m.ok_or(Error::Parse {
            line: last_line.max(1),
            message: "missing key m".into(),
        })?;
        for (idx, header, entries) in &blocks {
            if entries.len() != d * d {
                return Err(Error::Parse {
                    line: *header,
                    message: format!("block B{idx} has {} of {} entries", entries.len(), d * d),
                });
            }
        }
        if blocks.len() != m {
            return Err(Error::Parse {
                line: last_line.max(1),
                message: format!("expected {m} blocks, found {}", blocks.len()),
            });
        }
        blocks.sort_by_key(|b| b.0);
        let header_of = |l: usize| blocks[l].1;
        let mats: Vec<Vec<f64>> = blocks.iter().map(|b| b.2.clone()).collect();
        CarnotSpec::with_tolerances(d, m, mats, tol).map_err(|e| {
            // point at the offending block when the message names one
            let msg = e.to_string();
            let line = (0..m)
                .find(|&l| msg.contains(&format!("B{} ", l + 1)))
                .map(header_of)
                .unwrap_or(header_of(0));
            Error::Parse { line, message: msg }
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("d = {}\nm = {}\n", self.d, self.m);
        for (l, block) in self.b.iter().enumerate() {
            out.push_str(&format!("B{} =\n", l + 1));
            for row in block.chunks(self.d) {
                let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
                out.push_str("  ");
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
        }
        out
    }
}

fn parse_row(text: &str, line: usize, out: &mut Vec<f64>) -> Result<()> {
    for tok in text.split(|c: char| c.is_whitespace() || c == ',') {
        if tok.is_empty() {
            continue;
        }
        let v: f64 = tok.parse().map_err(|_| Error::Parse {
            line,
            message: format!("'{tok}' is not a number"),
        })?;
        out.push(v);
    }
    Ok(())
}

/// A point `(x, z)` of a rank-two Carnot group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarnotPoint {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

impl CarnotPoint {
    pub fn new(x: Vec<f64>, z: Vec<f64>) -> Self {
        CarnotPoint { x, z }
    }

    /// Concatenated coordinates `(x_1..x_d, z_1..z_m)`.
    pub fn coords(&self) -> Vec<f64> {
        self.x.iter().chain(self.z.iter()).copied().collect()
    }

    pub fn norm_sq(&self) -> f64 {
        let r2: f64 = self.x.iter().map(|v| v * v).sum();
        let z2: f64 = self.z.iter().map(|v| v * v).sum();
        r2 + z2.sqrt()
    }

    pub fn from_heisenberg(g: GroupPoint) -> Self {
        CarnotPoint {
            x: vec![g.x, g.y],
            z: vec![g.z],
        }
    }
}

pub fn carnot_multiply(spec: &CarnotSpec, g: &CarnotPoint, h: &CarnotPoint) -> Result<CarnotPoint> {
    spec.conform(g)?;
    spec.conform(h)?;
    let mut out = g.clone();
    carnot_mul_into(spec, &mut out, &h.x, &h.z);
    Ok(out)
}

/// In-place `g <- g . (hx, hz)`.
#[inline]
pub(crate) fn carnot_mul_into(spec: &CarnotSpec, g: &mut CarnotPoint, hx: &[f64], hz: &[f64]) {
    for l in 0..spec.m {
        let t = spec.twist(l, &g.x, hx);
        g.z[l] = g.z[l] + hz[l] + 0.5 * t;
    }
    for (a, b) in g.x.iter_mut().zip(hx) {
        *a += b;
    }
}

pub fn carnot_inverse(spec: &CarnotSpec, g: &CarnotPoint) -> Result<CarnotPoint> {
    spec.conform(g)?;
    Ok(CarnotPoint {
        x: g.x.iter().map(|v| -v).collect(),
        z: g.z.iter().map(|v| -v).collect(),
    })
}

pub fn carnot_dilate(spec: &CarnotSpec, lambda: f64, g: &CarnotPoint) -> Result<CarnotPoint> {
    check_lambda(lambda)?;
    spec.conform(g)?;
    Ok(CarnotPoint {
        x: g.x.iter().map(|v| lambda * v).collect(),
        z: g.z.iter().map(|v| lambda * lambda * v).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64, z: f64) -> GroupPoint {
        GroupPoint::new(x, y, z)
    }

    #[test]
    fn product_examples() {
        assert_eq!(multiply(p(1.0, 0.0, 0.0), p(0.0, 1.0, 0.0)).unwrap(), p(1.0, 1.0, 0.5));
        let g = p(0.3, -1.2, 2.5);
        assert_eq!(multiply(g, GroupPoint::IDENTITY).unwrap(), g);
        assert_eq!(multiply(g, p(-0.3, 1.2, -2.5)).unwrap(), GroupPoint::IDENTITY);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(inverse(p(1.0, 2.0, 3.0)).unwrap(), p(-1.0, -2.0, -3.0));
        assert_eq!(inverse(GroupPoint::IDENTITY).unwrap(), GroupPoint::IDENTITY);
        let g = p(0.7, 0.1, -4.0);
        assert_eq!(inverse(inverse(g).unwrap()).unwrap(), g);
    }

    #[test]
    fn dilation_examples() {
        assert_eq!(dilate(2.0, p(1.0, 1.0, 1.0)).unwrap(), p(2.0, 2.0, 4.0));
        let g = p(0.7, 0.1, -4.0);
        assert_eq!(dilate(1.0, g).unwrap(), g);
        assert!(matches!(dilate(0.0, g), Err(Error::Domain(_))));
        assert!(matches!(dilate(-1.0, g), Err(Error::Domain(_))));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(multiply(p(f64::NAN, 0.0, 0.0), GroupPoint::IDENTITY).is_err());
        assert!(inverse(p(0.0, f64::INFINITY, 0.0)).is_err());
        assert!(pseudo_norm_sq(p(0.0, 0.0, f64::NAN)).is_err());
    }

    #[test]
    fn pseudo_norm_examples() {
        assert_eq!(pseudo_norm_sq(p(3.0, 4.0, 0.0)).unwrap(), 25.0);
        assert_eq!(pseudo_norm_sq(p(0.0, 0.0, -2.0)).unwrap(), 2.0);
        assert_eq!(pseudo_norm_sq(GroupPoint::IDENTITY).unwrap(), 0.0);
    }

    #[test]
    fn heisenberg_spec_matches_group_law() {
        let spec = CarnotSpec::heisenberg();
        let g = CarnotPoint::new(vec![1.0, 0.0], vec![0.0]);
        let h = CarnotPoint::new(vec![0.0, 1.0], vec![0.0]);
        let gh = carnot_multiply(&spec, &g, &h).unwrap();
        assert_eq!(gh, CarnotPoint::new(vec![1.0, 1.0], vec![0.5]));
    }

    #[test]
    fn carnot_square_has_no_twist() {
        let spec = CarnotSpec::free_rank_two(3).unwrap();
        let g = CarnotPoint::new(vec![0.4, -1.0, 2.0], vec![0.1, 0.2, 0.3]);
        let gg = carnot_multiply(&spec, &g, &g).unwrap();
        assert_eq!(gg.x, vec![0.8, -2.0, 4.0]);
        assert_eq!(gg.z, vec![0.2, 0.4, 0.6]);
        let e = spec.identity();
        assert_eq!(carnot_multiply(&spec, &g, &e).unwrap(), g);
        assert_eq!(carnot_multiply(&spec, &e, &g).unwrap(), g);
    }

    #[test]
    fn carnot_dilate_examples() {
        let spec = CarnotSpec::free_rank_two(3).unwrap();
        let g = CarnotPoint::new(vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 1.0]);
        let d2 = carnot_dilate(&spec, 2.0, &g).unwrap();
        assert_eq!(d2.x, vec![2.0; 3]);
        assert_eq!(d2.z, vec![4.0; 3]);
        assert_eq!(carnot_dilate(&spec, 1.0, &g).unwrap(), g);
        assert!(carnot_dilate(&spec, -0.5, &g).is_err());
    }

    #[test]
    fn carnot_shape_errors() {
        let spec = CarnotSpec::heisenberg();
        let bad = CarnotPoint::new(vec![1.0], vec![0.0]);
        assert!(matches!(
            carnot_multiply(&spec, &bad, &spec.identity()),
            Err(Error::Shape { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(CarnotSpec::new(2, 1, vec![vec![0.0, 1.0, 1.0, 0.0]]).is_err());
        assert!(CarnotSpec::new(2, 2, vec![vec![0.0, 1.0, -1.0, 0.0], vec![0.0, 2.0, -2.0, 0.0]])
            .is_err());
        assert!(CarnotSpec::new(2, 1, vec![vec![0.0, 1.0, -1.0]]).is_err());
        let spec = CarnotSpec::free_rank_two(3).unwrap();
        assert_eq!((spec.d(), spec.m()), (3, 3));
        let rates = CarnotSpec::heisenberg().vertical_tail_rates();
        assert!((rates[0] - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn spec_file_roundtrip() {
        let spec = CarnotSpec::free_rank_two(3).unwrap();
        let back = CarnotSpec::parse(&spec.to_text()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn spec_file_errors_carry_lines() {
        let text = "d = 2\nm = 1\nB1 =\n 0 -1\n 1 1\n";
        match CarnotSpec::parse(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = "d = 2\nm = 1\nB1 =\n 0 -1 4\n";
        match CarnotSpec::parse(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let text = "d = 2\nq = 1\n";
        match CarnotSpec::parse(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let text = "d = 2\nm = 1\nB1 =\n 0 x\n";
        match CarnotSpec::parse(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("'x'"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
