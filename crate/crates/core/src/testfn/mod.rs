//! Test functions of the form `P(v) * exp(v^T Q v + l . v + c)`.
//!
//! The family is closed under partial derivatives, under multiplication by
//! polynomials and under products (envelopes add), so every operator used by
//! the curvature and energy computations acts on it exactly. Sums are only
//! defined between members sharing an envelope, which is always the case
//! for derivatives of a single function.
//!
//! Numerical checks over this family are evidence for an inequality on the
//! members tried, nothing more.

mod poly;
pub mod suite;

use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::carnot::GroupPoint;
use crate::error::{Error, Result};

pub use poly::Polynomial;
pub(crate) use poly::CompiledPoly;
pub use suite::{carnot_suite, lookup, standard_suite, FunctionTag, NamedFunction};

/// Heisenberg coordinate axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl From<Axis> for usize {
    fn from(a: Axis) -> usize {
        match a {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Exponent `v^T Q v + l . v + c` of the envelope. `Q` is stored symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    nvars: usize,
    quad: Vec<f64>,
    linear: Vec<f64>,
    constant: f64,
}

impl Envelope {
    pub fn zero(nvars: usize) -> Self {
        Envelope {
            nvars,
            quad: vec![0.0; nvars * nvars],
            linear: vec![0.0; nvars],
            constant: 0.0,
        }
    }

    /// Builds an envelope from a row-major quadratic form (symmetrized).
    pub fn new(nvars: usize, quad: &[f64], linear: &[f64], constant: f64) -> Result<Self> {
        if quad.len() != nvars * nvars {
            return Err(Error::Shape {
                expected: nvars * nvars,
                got: quad.len(),
            });
        }
        if linear.len() != nvars {
            return Err(Error::Shape {
                expected: nvars,
                got: linear.len(),
            });
        }
        let mut q = vec![0.0; nvars * nvars];
        for i in 0..nvars {
            for j in 0..nvars {
                q[i * nvars + j] = 0.5 * (quad[i * nvars + j] + quad[j * nvars + i]);
            }
        }
        Ok(Envelope {
            nvars,
            quad: q,
            linear: linear.to_vec(),
            constant,
        })
    }

    /// `-s * sum_{i in vars} v_i^2`.
    pub fn isotropic(nvars: usize, vars: Range<usize>, s: f64) -> Self {
        let mut e = Self::zero(nvars);
        for i in vars {
            e.quad[i * nvars + i] = -s;
        }
        e
    }

    pub fn with_linear(mut self, i: usize, v: f64) -> Self {
        self.linear[i] = v;
        self
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant = c;
        self
    }

    pub fn is_trivial(&self) -> bool {
        self.constant == 0.0
            && self.linear.iter().all(|v| *v == 0.0)
            && self.quad.iter().all(|v| *v == 0.0)
    }

    pub fn eval(&self, at: &[f64]) -> f64 {
        let n = self.nvars;
        let mut acc = self.constant;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.quad[i * n + j] * at[j];
            }
            acc += at[i] * row + self.linear[i] * at[i];
        }
        acc
    }

    /// `d E / d v_i` as a polynomial of degree at most one.
    fn gradient(&self, i: usize) -> Polynomial {
        let n = self.nvars;
        let mut p = Polynomial::constant(n, self.linear[i]);
        for j in 0..n {
            let q = self.quad[i * n + j];
            if q != 0.0 {
                p = &p + &Polynomial::monomial(n, 2.0 * q, &[(j, 1)]);
            }
        }
        p
    }

    fn sum(&self, other: &Envelope) -> Envelope {
        Envelope {
            nvars: self.nvars,
            quad: self.quad.iter().zip(&other.quad).map(|(a, b)| a + b).collect(),
            linear: self.linear.iter().zip(&other.linear).map(|(a, b)| a + b).collect(),
            constant: self.constant + other.constant,
        }
    }

    fn eigenvalues(&self) -> Vec<f64> {
        let m = DMatrix::from_row_slice(self.nvars, self.nvars, &self.quad);
        SymmetricEigen::new(m).eigenvalues.iter().copied().collect()
    }
}

/// One member `P * exp(E)` of the family.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    poly: Polynomial,
    env: Envelope,
}

impl TestFunction {
    pub fn new(poly: Polynomial, env: Envelope) -> Result<Self> {
        if poly.nvars() != env.nvars {
            return Err(Error::Shape {
                expected: env.nvars,
                got: poly.nvars(),
            });
        }
        Ok(TestFunction { poly, env })
    }

    pub fn polynomial(poly: Polynomial) -> Self {
        let n = poly.nvars();
        TestFunction {
            poly,
            env: Envelope::zero(n),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::polynomial(Polynomial::constant(nvars, c))
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        Self::polynomial(Polynomial::var(nvars, i))
    }

    pub fn nvars(&self) -> usize {
        self.poly.nvars()
    }

    pub fn poly(&self) -> &Polynomial {
        &self.poly
    }

    pub fn envelope(&self) -> &Envelope {
        &self.env
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    /// True when the polynomial part is constant and there is no envelope.
    pub fn is_constant(&self) -> bool {
        self.env.is_trivial()
            && self.poly.terms().all(|(e, _)| e.iter().all(|k| *k == 0))
    }

    /// True when the function does not depend on coordinate `i`.
    pub fn independent_of(&self, i: usize) -> bool {
        let n = self.nvars();
        self.poly.degree_in(i) == 0
            && self.env.linear[i] == 0.0
            && (0..n).all(|j| self.env.quad[i * n + j] == 0.0)
    }

    pub fn evaluate(&self, at: &[f64]) -> Result<f64> {
        if at.len() != self.nvars() {
            return Err(Error::Shape {
                expected: self.nvars(),
                got: at.len(),
            });
        }
        let v = self.poly.eval(at) * self.env.eval(at).exp();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(format!("non-finite value at {at:?}")))
        }
    }

    pub fn evaluate_at(&self, p: GroupPoint) -> Result<f64> {
        self.evaluate(&p.to_array())
    }

    /// Exact partial derivative along coordinate `i`.
    pub fn partial(&self, i: impl Into<usize>) -> TestFunction {
        let i = i.into();
        let dp = self.poly.derivative(i);
        let de = &self.poly * &self.env.gradient(i);
        TestFunction {
            poly: &dp + &de,
            env: self.env.clone(),
        }
    }

    pub fn scale(&self, s: f64) -> TestFunction {
        TestFunction {
            poly: self.poly.scale(s),
            env: self.env.clone(),
        }
    }

    pub fn mul_poly(&self, p: &Polynomial) -> TestFunction {
        TestFunction {
            poly: &self.poly * p,
            env: self.env.clone(),
        }
    }

    pub fn product(&self, other: &TestFunction) -> TestFunction {
        TestFunction {
            poly: &self.poly * &other.poly,
            env: self.env.sum(&other.env),
        }
    }

    pub fn try_add(&self, other: &TestFunction) -> Result<TestFunction> {
        if self.env != other.env {
            // zero members carry no envelope information
            if self.is_zero() {
                return Ok(other.clone());
            }
            if other.is_zero() {
                return Ok(self.clone());
            }
            return Err(Error::EnvelopeMismatch);
        }
        Ok(TestFunction {
            poly: &self.poly + &other.poly,
            env: self.env.clone(),
        })
    }

    pub fn try_sub(&self, other: &TestFunction) -> Result<TestFunction> {
        self.try_add(&other.scale(-1.0))
    }

    /// Sufficient condition for `f^2 (1 + |g|)^k` to be integrable against the
    /// time-one heat kernel for every `k`: the quadratic form is negative
    /// semidefinite and the linear exponent on each vertical coordinate stays
    /// within that coordinate's exponential tail rate (after Holder splitting
    /// across the nonzero linear coordinates).
    ///
    /// `vertical` lists the vertical coordinates, `rates[j]` the tail rate
    /// of `vertical.start + j`.
    pub fn is_integrable(&self, vertical: Range<usize>, rates: &[f64]) -> bool {
        if self.env.eigenvalues().iter().any(|&l| l > 1e-12) {
            return false;
        }
        if self.env.eigenvalues().iter().all(|&l| l < -1e-12) {
            return true;
        }
        let active = self.env.linear.iter().filter(|v| **v != 0.0).count().max(1) as f64;
        vertical
            .clone()
            .zip(rates)
            .all(|(i, rate)| 4.0 * active * self.env.linear[i].abs() < *rate)
    }

    pub fn is_integrable_heisenberg(&self) -> bool {
        self.is_integrable(2..3, &[std::f64::consts::PI])
    }

    /// Compiled evaluator for the value and all first partials.
    pub fn jet(&self) -> Jet {
        Jet::new(self)
    }

    /// Max `|f - g|` over `points`, scaled by `max(1, |f|)`.
    pub fn max_rel_diff_on(&self, other: &TestFunction, points: &[Vec<f64>]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for p in points {
            let a = self.evaluate(p)?;
            let b = other.evaluate(p)?;
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
        Ok(worst)
    }
}

/// A left- or right-invariant vector field `sum_k c_k(v) d/dv_k` with
/// polynomial coefficients.
#[derive(Debug, Clone)]
pub struct VectorField {
    components: Vec<(usize, Polynomial)>,
}

impl VectorField {
    pub fn new(components: Vec<(usize, Polynomial)>) -> Self {
        VectorField { components }
    }

    pub fn apply(&self, f: &TestFunction) -> TestFunction {
        let mut out = f.scale(0.0);
        out.poly = Polynomial::zero(f.nvars());
        for (axis, coef) in &self.components {
            let term = f.partial(*axis).mul_poly(coef);
            out = out.try_add(&term).expect("derivatives share the envelope");
        }
        out
    }
}

/// The Heisenberg fields: left-invariant `X, Y, Z` and right-invariant
/// `Xhat, Yhat`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    X,
    Y,
    Z,
    XHat,
    YHat,
}

impl Field {
    pub fn vector_field(self) -> VectorField {
        let half = |i: usize, s: f64| Polynomial::monomial(3, 0.5 * s, &[(i, 1)]);
        let one = Polynomial::constant(3, 1.0);
        match self {
            // d_x - (y/2) d_z
            Field::X => VectorField::new(vec![(0, one), (2, half(1, -1.0))]),
            // d_y + (x/2) d_z
            Field::Y => VectorField::new(vec![(1, one), (2, half(0, 1.0))]),
            Field::Z => VectorField::new(vec![(2, one)]),
            // d_x + (y/2) d_z
            Field::XHat => VectorField::new(vec![(0, one), (2, half(1, 1.0))]),
            // d_y - (x/2) d_z
            Field::YHat => VectorField::new(vec![(1, one), (2, half(0, -1.0))]),
        }
    }
}

pub fn apply_field(f: &TestFunction, field: Field) -> TestFunction {
    assert_eq!(f.nvars(), 3, "Heisenberg fields act on functions of (x, y, z)");
    field.vector_field().apply(f)
}

pub fn partial(f: &TestFunction, axis: Axis) -> TestFunction {
    f.partial(axis)
}

pub fn evaluate(f: &TestFunction, p: GroupPoint) -> Result<f64> {
    f.evaluate_at(p)
}

/// Compiled value-and-gradient evaluator. All members share one envelope, so
/// the exponential is computed once per point.
#[derive(Debug, Clone)]
pub struct Jet {
    nvars: usize,
    env: Envelope,
    polys: Vec<CompiledPoly>, // value, then d/dv_0 .. d/dv_{n-1}
    stride: usize,
}

impl Jet {
    fn new(f: &TestFunction) -> Self {
        let n = f.nvars();
        let mut polys = vec![CompiledPoly::new(&f.poly)];
        for i in 0..n {
            polys.push(CompiledPoly::new(&f.partial(i).poly));
        }
        let stride = polys.iter().map(|p| p.max_deg()).max().unwrap_or(0) + 1;
        Jet {
            nvars: n,
            env: f.env.clone(),
            polys,
            stride,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Writes `f, d_0 f, .., d_{n-1} f` into `out` (length `n + 1`).
    pub fn eval_into(&self, at: &[f64], pows: &mut Vec<f64>, out: &mut [f64]) -> Result<()> {
        let n = self.nvars;
        let s = self.stride;
        pows.clear();
        pows.resize(n * s, 1.0);
        for i in 0..n {
            for k in 1..s {
                pows[i * s + k] = pows[i * s + k - 1] * at[i];
            }
        }
        let scale = self.env.eval(at).exp();
        for (slot, p) in out.iter_mut().zip(&self.polys) {
            *slot = p.eval_with(pows, s) * scale;
        }
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Evaluation(format!("non-finite derivative at {at:?}")))
        }
    }

    pub fn eval(&self, at: &[f64]) -> Result<Vec<f64>> {
        let mut pows = Vec::new();
        let mut out = vec![0.0; self.nvars + 1];
        self.eval_into(at, &mut pows, &mut out)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> TestFunction {
        TestFunction::var(3, 0)
    }
    fn y() -> TestFunction {
        TestFunction::var(3, 1)
    }
    fn z() -> TestFunction {
        TestFunction::var(3, 2)
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(x().evaluate_at(GroupPoint::new(2.0, 0.0, 0.0)).unwrap(), 2.0);
        let g = TestFunction::polynomial(Polynomial::constant(3, 1.0))
            .product(&TestFunction::new(Polynomial::constant(3, 1.0), Envelope::isotropic(3, 0..2, 1.0)).unwrap());
        assert_eq!(g.evaluate_at(GroupPoint::IDENTITY).unwrap(), 1.0);
        assert_eq!(z().evaluate_at(GroupPoint::new(1.0, 1.0, 0.5)).unwrap(), 0.5);
    }

    #[test]
    fn overflow_is_reported() {
        let f = TestFunction::new(
            Polynomial::constant(3, 1.0),
            Envelope::zero(3).with_linear(0, 1.0),
        )
        .unwrap();
        assert!(matches!(f.evaluate(&[1000.0, 0.0, 0.0]), Err(Error::Evaluation(_))));
    }

    #[test]
    fn partial_examples() {
        let xy = x().mul_poly(&Polynomial::var(3, 1));
        assert_eq!(xy.partial(Axis::X), y());
        // d/dx exp(-x^2) = -2x exp(-x^2)
        let env = Envelope::isotropic(3, 0..1, 1.0);
        let g = TestFunction::new(Polynomial::constant(3, 1.0), env.clone()).unwrap();
        let expect = TestFunction::new(Polynomial::monomial(3, -2.0, &[(0, 1)]), env).unwrap();
        assert_eq!(g.partial(Axis::X), expect);
    }

    #[test]
    fn field_examples() {
        let xz = apply_field(&z(), Field::X);
        assert_eq!(xz, TestFunction::polynomial(Polynomial::monomial(3, -0.5, &[(1, 1)])));
        let yz = apply_field(&z(), Field::Y);
        assert_eq!(yz, TestFunction::polynomial(Polynomial::monomial(3, 0.5, &[(0, 1)])));
        // horizontal reduction: X f = d_x f for z-free f
        let f = x().mul_poly(&Polynomial::var(3, 1)).mul_poly(&Polynomial::var(3, 0));
        assert_eq!(apply_field(&f, Field::X), f.partial(Axis::X));
    }

    #[test]
    fn sums_need_shared_envelope() {
        let a = TestFunction::new(Polynomial::constant(3, 1.0), Envelope::isotropic(3, 0..3, 0.25)).unwrap();
        assert!(matches!(a.try_add(&x()), Err(Error::EnvelopeMismatch)));
        assert!(a.try_add(&a).is_ok());
    }

    #[test]
    fn jet_matches_partials() {
        let env = Envelope::isotropic(3, 0..3, 0.25).with_linear(0, 0.3);
        let f = TestFunction::new(
            &Polynomial::monomial(3, 1.0, &[(2, 2)]) + &Polynomial::monomial(3, -0.7, &[(0, 1), (1, 1)]),
            env,
        )
        .unwrap();
        let at = [0.4, -1.1, 0.9];
        let jet = f.jet().eval(&at).unwrap();
        assert!((jet[0] - f.evaluate(&at).unwrap()).abs() < 1e-14);
        for i in 0..3 {
            assert!((jet[i + 1] - f.partial(i).evaluate(&at).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn integrability_rules() {
        let gauss = TestFunction::new(Polynomial::constant(3, 1.0), Envelope::isotropic(3, 0..3, 0.25)).unwrap();
        assert!(gauss.is_integrable_heisenberg());
        let grow = TestFunction::new(Polynomial::constant(3, 1.0), Envelope::isotropic(3, 0..1, -0.1)).unwrap();
        assert!(!grow.is_integrable_heisenberg());
        let steep_z = TestFunction::new(
            Polynomial::constant(3, 1.0),
            Envelope::zero(3).with_linear(2, 1.0),
        )
        .unwrap();
        assert!(!steep_z.is_integrable_heisenberg());
        let mild_z = TestFunction::new(
            Polynomial::constant(3, 1.0),
            Envelope::zero(3).with_linear(2, 0.125),
        )
        .unwrap();
        assert!(mild_z.is_integrable_heisenberg());
    }
}
