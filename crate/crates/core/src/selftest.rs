//! Exact identities checked on random inputs: group axioms, vector-field
//! commutators and the two routes to `Gamma2`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::carnot::{carnot_dilate, carnot_inverse, carnot_multiply, CarnotPoint, CarnotSpec, GroupPoint};
use crate::curvature::{commutation_residual, cd_sweep, random_points};
use crate::error::Result;
use crate::rng::{stream_rng, Purpose};
use crate::testfn::{standard_suite, NamedFunction};

pub const GROUP_TOLERANCE: f64 = 1e-12;
pub const FIELD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub pass: bool,
}

impl IdentityCheck {
    fn new(name: impl Into<String>, max_error: f64, tolerance: f64, samples: usize) -> Self {
        IdentityCheck {
            name: name.into(),
            max_error,
            tolerance,
            samples,
            pass: max_error <= tolerance,
        }
    }
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Largest relative coordinate error of associativity, two-sided inverses
/// and the dilation homomorphism over `count` random triples, with
/// `lambda` uniform in `[0.1, 3]`.
pub fn group_axiom_error(spec: &CarnotSpec, count: usize, seed: u64) -> Result<f64> {
    let mut rng = stream_rng(seed, Purpose::Points, 1);
    let (d, m) = (spec.d(), spec.m());
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
        let x = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let z = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        CarnotPoint::new(x, z)
    };
    let e = spec.identity().coords();
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let (g, h, k) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let lambda = rng.random_range(0.1..3.0);
        let gh = carnot_multiply(spec, &g, &h)?;
        let left = carnot_multiply(spec, &gh, &k)?;
        let right = carnot_multiply(spec, &g, &carnot_multiply(spec, &h, &k)?)?;
        worst = worst.max(rel(&left.coords(), &right.coords()));
        let gi = carnot_inverse(spec, &g)?;
        worst = worst.max(rel(&carnot_multiply(spec, &g, &gi)?.coords(), &e));
        worst = worst.max(rel(&carnot_multiply(spec, &gi, &g)?.coords(), &e));
        let dg = carnot_dilate(spec, lambda, &g)?;
        let dh = carnot_dilate(spec, lambda, &h)?;
        let a = carnot_dilate(spec, lambda, &gh)?;
        let b = carnot_multiply(spec, &dg, &dh)?;
        worst = worst.max(rel(&a.coords(), &b.coords()));
    }
    Ok(worst)
}

/// The same identities through the dedicated three-dimensional routines.
pub fn heisenberg_axiom_error(count: usize, seed: u64) -> f64 {
    let mut rng = stream_rng(seed, Purpose::Points, 2);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut c = || rng.sample::<f64, _>(StandardNormal);
        GroupPoint::new(c(), c(), c())
    };
    let dil = |l: f64, g: GroupPoint| GroupPoint::new(l * g.x, l * g.y, l * l * g.z);
    let e = GroupPoint::IDENTITY.to_array();
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let (g, h, k) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let lambda = rng.random_range(0.1..3.0);
        worst = worst.max(rel(&g.mul(h).mul(k).to_array(), &g.mul(h.mul(k)).to_array()));
        worst = worst.max(rel(&g.mul(g.inv()).to_array(), &e));
        worst = worst.max(rel(&g.inv().mul(g).to_array(), &e));
        worst = worst.max(rel(&dil(lambda, g.mul(h)).to_array(), &dil(lambda, g).mul(dil(lambda, h)).to_array()));
    }
    worst
}

/// A rank-two group that is neither Heisenberg nor free: `d = 4, m = 2`
/// with two symplectic-type forms.
pub fn mixed_spec() -> CarnotSpec {
    let b1 = vec![
        0.0, -1.0, 0.0, 0.0, //
        1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, -1.0, //
        0.0, 0.0, 1.0, 0.0,
    ];
    let b2 = vec![
        0.0, 0.0, -0.5, 0.0, //
        0.0, 0.0, 0.0, 2.0, //
        0.5, 0.0, 0.0, 0.0, //
        0.0, -2.0, 0.0, 0.0,
    ];
    CarnotSpec::new(4, 2, vec![b1, b2]).expect("valid forms")
}

/// Every exact identity, `count` random inputs each.
pub fn run_all(funcs: &[NamedFunction], count: usize, seed: u64) -> Result<Vec<IdentityCheck>> {
    let mut out = vec![IdentityCheck::new(
        "heisenberg_group_axioms",
        heisenberg_axiom_error(count, seed),
        GROUP_TOLERANCE,
        count,
    )];
    for (name, spec) in [
        ("carnot_heisenberg_spec_axioms", CarnotSpec::heisenberg()),
        ("carnot_free_d3_axioms", CarnotSpec::free_rank_two(3)?),
        ("carnot_d4_m2_axioms", mixed_spec()),
    ] {
        out.push(IdentityCheck::new(name, group_axiom_error(&spec, count, seed)?, GROUP_TOLERANCE, count));
    }
    let n_pts = (count / 10).max(1);
    let pts = random_points(n_pts, 1.5, seed);
    out.push(IdentityCheck::new(
        "field_commutators",
        commutation_residual(funcs, &pts)?,
        FIELD_TOLERANCE,
        n_pts * funcs.len(),
    ));
    let sweep = cd_sweep(funcs, &pts, &[1.0])?;
    out.push(IdentityCheck::new(
        "gamma2_dual_route",
        sweep.max_dual_route_diff,
        FIELD_TOLERANCE,
        n_pts * funcs.len(),
    ));
    Ok(out)
}

pub fn default_checks(seed: u64) -> Result<Vec<IdentityCheck>> {
    run_all(&standard_suite(), 10_000, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_identities_hold() {
        for c in run_all(&standard_suite(), 500, 3).unwrap() {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn error_measure_sees_noncommutativity() {
        let g = GroupPoint::new(1.0, 2.0, 0.0);
        let h = GroupPoint::new(-0.5, 1.0, 0.0);
        assert!(rel(&g.mul(h).to_array(), &h.mul(g).to_array()) > 0.5);
    }
}
