use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// Sparse multivariate polynomial with real coefficients.
///
/// Monomials are keyed by their exponent vector, so two polynomials built in
/// different orders compare equal term by term.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        Self::monomial(nvars, 1.0, &[(i, 1)])
    }

    /// `coef * prod x_i^k` for `(i, k)` in `powers`.
    pub fn monomial(nvars: usize, coef: f64, powers: &[(usize, u32)]) -> Self {
        let mut exps = vec![0; nvars];
        for &(i, k) in powers {
            exps[i] += k;
        }
        let mut p = Self::zero(nvars);
        p.add_term(exps, coef);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|e| e[i]).max().unwrap_or(0)
    }

    fn add_term(&mut self, exps: Vec<u32>, coef: f64) {
        if coef == 0.0 {
            return;
        }
        let entry = self.terms.entry(exps).or_insert(0.0);
        *entry += coef;
        if *entry == 0.0 {
            // drop exact cancellations so identities compare structurally
            self.terms.retain(|_, c| *c != 0.0);
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut de = e.clone();
            de[i] -= 1;
            out.add_term(de, c * e[i] as f64);
        }
        out
    }

    pub fn eval(&self, at: &[f64]) -> f64 {
        debug_assert_eq!(at.len(), self.nvars);
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut m = *c;
            for (v, &k) in at.iter().zip(e) {
                if k > 0 {
                    m *= v.powi(k as i32);
                }
            }
            acc += m;
        }
        acc
    }

    /// Largest absolute coefficient, used for relative comparisons.
    pub fn max_abs_coef(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

/// Flattened polynomial for repeated evaluation on hot paths.
#[derive(Debug, Clone)]
pub(crate) struct CompiledPoly {
    nvars: usize,
    max_deg: usize,
    coefs: Vec<f64>,
    exps: Vec<u32>,
}

impl CompiledPoly {
    pub(crate) fn new(p: &Polynomial) -> Self {
        let mut coefs = Vec::new();
        let mut exps = Vec::new();
        let mut max_deg = 0;
        for (e, c) in p.terms() {
            coefs.push(c);
            exps.extend_from_slice(e);
            max_deg = max_deg.max(e.iter().copied().max().unwrap_or(0) as usize);
        }
        CompiledPoly {
            nvars: p.nvars(),
            max_deg,
            coefs,
            exps,
        }
    }

    pub(crate) fn max_deg(&self) -> usize {
        self.max_deg
    }

    /// Evaluate with precomputed power tables `pows[i * (max_deg + 1) + k] = x_i^k`.
    #[inline]
    pub(crate) fn eval_with(&self, pows: &[f64], stride: usize) -> f64 {
        let mut acc = 0.0;
        for (t, c) in self.coefs.iter().enumerate() {
            let e = &self.exps[t * self.nvars..(t + 1) * self.nvars];
            let mut m = *c;
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    m *= pows[i * stride + k as usize];
                }
            }
            acc += m;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_product() {
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        let xy = &x * &y;
        assert_eq!(xy.derivative(0), y);
        assert_eq!(xy.derivative(1), x);
        assert!(Polynomial::constant(2, 3.0).derivative(0).is_zero());
    }

    #[test]
    fn cancellation_is_structural() {
        let x = Polynomial::var(3, 0);
        assert!((&x - &x).is_zero());
    }

    #[test]
    fn eval_matches_compiled() {
        let x = Polynomial::var(3, 0);
        let z = Polynomial::var(3, 2);
        let p = &(&(&x * &x) * &z) + &Polynomial::constant(3, -2.5);
        let at = [1.5, -0.3, 2.0];
        let c = CompiledPoly::new(&p);
        let stride = c.max_deg() + 1;
        let mut pows = vec![1.0; 3 * stride];
        for i in 0..3 {
            for k in 1..stride {
                pows[i * stride + k] = pows[i * stride + k - 1] * at[i];
            }
        }
        assert!((c.eval_with(&pows, stride) - p.eval(&at)).abs() < 1e-14);
        assert!((p.eval(&at) - (1.5 * 1.5 * 2.0 - 2.5)).abs() < 1e-14);
    }
}
