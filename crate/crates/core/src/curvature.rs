//! Carre du champ forms of the Heisenberg sub-Laplacian and the pointwise
//! curvature inequality `Gamma2_mix(f) >= -(1/nu) Gamma_elli(f)`.
//!
//! Generator convention: `L = X^2 + Y^2`, twice the horizontal part of the
//! diffusion generator `(X^2 + Y^2 + beta^2 Z^2) / 2` used by the samplers.
//! With this `L`, `Gamma(f) = (Xf)^2 + (Yf)^2` carries no factor 1/2.
//!
//! All forms are built symbolically on `TestFunction`s and evaluated
//! exactly; nothing here uses finite differences.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::carnot::GroupPoint;
use crate::error::{Error, Result};
use crate::estimators::EstimateRow;
use crate::rng::{stream_rng, Purpose, SeedPlan};
use crate::sampler::{endpoint_bank, right_endpoint_bank, PathConfig};
use crate::stats::{mean_estimate, McEstimate};
use crate::testfn::{apply_field, Field, NamedFunction, TestFunction};

/// Tolerance for signed pointwise checks evaluated in floating point.
pub const CD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormValue {
    pub point: GroupPoint,
    pub nu: f64,
    pub gamma_hori: f64,
    pub gamma_vert: f64,
    pub gamma_elli: f64,
    pub gamma2_hori: f64,
    pub gamma2_vert: f64,
    pub gamma2_mix: f64,
}

impl FormValue {
    /// `Gamma2_mix + Gamma_elli / nu`.
    pub fn cd_margin(&self) -> f64 {
        self.gamma2_mix + self.gamma_elli / self.nu
    }
}

fn field(f: &TestFunction, a: Field) -> TestFunction {
    apply_field(f, a)
}

fn add(a: &TestFunction, b: &TestFunction) -> TestFunction {
    a.try_add(b).expect("terms of one form share an envelope")
}

/// `A(Bf) - B(Af)`.
pub fn commutator(f: &TestFunction, a: Field, b: Field) -> TestFunction {
    field(&field(f, b), a)
        .try_sub(&field(&field(f, a), b))
        .expect("second derivatives share the envelope")
}

/// Symbolic first and second derivatives of one function.
#[derive(Debug, Clone)]
pub struct Forms {
    xf: TestFunction,
    yf: TestFunction,
    zf: TestFunction,
    xx: TestFunction,
    yy: TestFunction,
    xy: TestFunction,
    yx: TestFunction,
    xz: TestFunction,
    yz: TestFunction,
}

impl Forms {
    pub fn new(f: &TestFunction) -> Result<Self> {
        if f.nvars() != 3 {
            return Err(Error::Shape {
                expected: 3,
                got: f.nvars(),
            });
        }
        let xf = field(f, Field::X);
        let yf = field(f, Field::Y);
        let zf = field(f, Field::Z);
        Ok(Forms {
            xx: field(&xf, Field::X),
            yy: field(&yf, Field::Y),
            xy: field(&yf, Field::X),
            yx: field(&xf, Field::Y),
            xz: field(&zf, Field::X),
            yz: field(&zf, Field::Y),
            xf,
            yf,
            zf,
        })
    }

    pub fn at(&self, p: GroupPoint, nu: f64) -> Result<FormValue> {
        let e = |g: &TestFunction| g.evaluate_at(p);
        let (xf, yf, zf) = (e(&self.xf)?, e(&self.yf)?, e(&self.zf)?);
        let (xx, yy, xy, yx) = (e(&self.xx)?, e(&self.yy)?, e(&self.xy)?, e(&self.yx)?);
        let (xz, yz) = (e(&self.xz)?, e(&self.yz)?);
        let gamma_hori = xf * xf + yf * yf;
        let gamma_vert = zf * zf;
        let gamma2_hori = xx * xx + yy * yy + xy * xy + yx * yx - 2.0 * xf * yz + 2.0 * yf * xz;
        let gamma2_vert = xz * xz + yz * yz;
        Ok(FormValue {
            point: p,
            nu,
            gamma_hori,
            gamma_vert,
            gamma_elli: gamma_hori + nu * gamma_vert,
            gamma2_hori,
            gamma2_vert,
            gamma2_mix: gamma2_hori + nu * gamma2_vert,
        })
    }
}

pub fn gamma_forms(f: &TestFunction, p: GroupPoint, nu: f64) -> Result<FormValue> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::invalid(format!("nu must be positive, got {nu}")));
    }
    Forms::new(f)?.at(p, nu)
}

/// `Gamma2_hori` from its definition `(L Gamma(f) - 2 Gamma(f, Lf)) / 2`,
/// built as one symbolic function.
pub fn gamma2_hori_by_definition(f: &TestFunction) -> Result<TestFunction> {
    if f.nvars() != 3 {
        return Err(Error::Shape {
            expected: 3,
            got: f.nvars(),
        });
    }
    let xf = field(f, Field::X);
    let yf = field(f, Field::Y);
    let lap = |g: &TestFunction| add(&field(&field(g, Field::X), Field::X), &field(&field(g, Field::Y), Field::Y));
    let gamma = add(&xf.product(&xf), &yf.product(&yf));
    let lf = lap(f);
    let gamma_f_lf = add(&xf.product(&field(&lf, Field::X)), &yf.product(&field(&lf, Field::Y)));
    Ok(lap(&gamma).scale(0.5).try_sub(&gamma_f_lf).expect("shared envelope"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdCheck {
    pub margin: f64,
    pub holds: bool,
}

pub fn check_cd(f: &TestFunction, p: GroupPoint, nu: f64) -> Result<CdCheck> {
    let v = gamma_forms(f, p, nu)?;
    let margin = v.cd_margin();
    Ok(CdCheck {
        margin,
        holds: margin >= -CD_TOLERANCE,
    })
}

/// Points with independent `N(0, scale^2)` coordinates.
pub fn random_points(count: usize, scale: f64, seed: u64) -> Vec<GroupPoint> {
    let mut rng = stream_rng(seed, Purpose::Points, 0);
    (0..count)
        .map(|_| {
            let mut c = || scale * rng.sample::<f64, _>(StandardNormal);
            GroupPoint::new(c(), c(), c())
        })
        .collect()
}

/// One row of the curvature CSV.
#[derive(Debug, Clone, Serialize)]
pub struct CdRow {
    pub f_name: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub nu: f64,
    pub gamma2_mix: f64,
    pub gamma_elli: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CdSweep {
    pub rows: Vec<CdRow>,
    pub min_margin: f64,
    pub violations: usize,
    /// Largest `|direct - definition| / max(1, |direct|)` for `Gamma2_hori`.
    pub max_dual_route_diff: f64,
}

/// Evaluates every form for every function, point and `nu`.
pub fn cd_sweep(funcs: &[NamedFunction], points: &[GroupPoint], nus: &[f64]) -> Result<CdSweep> {
    if let Some(nu) = nus.iter().find(|nu| !(**nu > 0.0 && nu.is_finite())) {
        return Err(Error::invalid(format!("nu must be positive, got {nu}")));
    }
    let per_f: Vec<Result<(Vec<CdRow>, f64)>> = funcs
        .par_iter()
        .map(|nf| {
            let forms = Forms::new(&nf.func)?;
            let dual = gamma2_hori_by_definition(&nf.func)?;
            let mut rows = Vec::with_capacity(points.len() * nus.len());
            let mut worst: f64 = 0.0;
            for &p in points {
                let direct = forms.at(p, 1.0)?.gamma2_hori;
                let other = dual.evaluate_at(p)?;
                worst = worst.max((direct - other).abs() / direct.abs().max(1.0));
                for &nu in nus {
                    let v = forms.at(p, nu)?;
                    rows.push(CdRow {
                        f_name: nf.name.clone(),
                        x: p.x,
                        y: p.y,
                        z: p.z,
                        nu,
                        gamma2_mix: v.gamma2_mix,
                        gamma_elli: v.gamma_elli,
                        margin: v.cd_margin(),
                    });
                }
            }
            Ok((rows, worst))
        })
        .collect();
    let mut rows = Vec::new();
    let mut max_dual: f64 = 0.0;
    for r in per_f {
        let (r, w) = r?;
        rows.extend(r);
        max_dual = max_dual.max(w);
    }
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let violations = rows.iter().filter(|r| r.margin < -CD_TOLERANCE).count();
    Ok(CdSweep {
        rows,
        min_margin,
        violations,
        max_dual_route_diff: max_dual,
    })
}

pub fn cd_csv(rows: &[CdRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Evaluation(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Evaluation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Largest deviation of `[X,Y] = Z`, `[X,Z] = [Y,Z] = 0` and
/// `[Xhat, Yhat] = -Z` over `funcs` and `points`.
pub fn commutation_residual(funcs: &[NamedFunction], points: &[GroupPoint]) -> Result<f64> {
    let pts: Vec<Vec<f64>> = points.iter().map(|p| p.to_array().to_vec()).collect();
    let mut worst: f64 = 0.0;
    for nf in funcs {
        let f = &nf.func;
        let zf = field(f, Field::Z);
        let zero = zf.scale(0.0);
        let checks = [
            (commutator(f, Field::X, Field::Y), zf.clone()),
            (commutator(f, Field::X, Field::Z), zero.clone()),
            (commutator(f, Field::Y, Field::Z), zero),
            (commutator(f, Field::XHat, Field::YHat), zf.scale(-1.0)),
        ];
        for (a, b) in &checks {
            worst = worst.max(a.max_rel_diff_on(b, &pts)?);
        }
    }
    Ok(worst)
}

/// `E f(H_1)` under the left construction (increments multiplied on the
/// right) and under the right construction (multiplied on the left), from
/// independent streams, at `beta = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct BiInvariance {
    pub left: McEstimate,
    pub right: McEstimate,
}

impl BiInvariance {
    pub fn agree(&self, sigmas: f64) -> bool {
        let se = (self.left.se().powi(2) + self.right.se().powi(2)).sqrt();
        (self.left.value - self.right.value).abs() <= sigmas * se
    }

    pub fn rows(&self, name: &str) -> Vec<EstimateRow> {
        vec![
            EstimateRow::new("bi_invariance_left", name, &self.left),
            EstimateRow::new("bi_invariance_right", name, &self.right),
        ]
    }
}

pub fn bi_invariance_check(f: &TestFunction, cfg: &PathConfig, count: usize, plan: SeedPlan) -> Result<BiInvariance> {
    let nf = NamedFunction {
        name: String::new(),
        tag: crate::testfn::FunctionTag::Horizontal,
        func: f.clone(),
    };
    Ok(bi_invariance_suite(std::slice::from_ref(&nf), cfg, count, plan)?.remove(0))
}

/// `bi_invariance_check` for several functions on one pair of banks.
pub fn bi_invariance_suite(
    funcs: &[NamedFunction],
    cfg: &PathConfig,
    count: usize,
    plan: SeedPlan,
) -> Result<Vec<BiInvariance>> {
    if cfg.beta != 0.0 {
        return Err(Error::invalid("bi-invariance is compared at beta = 0"));
    }
    let left = endpoint_bank(cfg, count, plan)?;
    let right = right_endpoint_bank(cfg, count, plan)?;
    let eval = |f: &TestFunction, pts: &[GroupPoint]| -> Result<McEstimate> {
        let vals = pts.iter().map(|p| f.evaluate_at(*p)).collect::<Result<Vec<_>>>()?;
        Ok(mean_estimate(&vals, plan.master_seed))
    };
    funcs
        .iter()
        .map(|nf| {
            Ok(BiInvariance {
                left: eval(&nf.func, &left)?,
                right: eval(&nf.func, &right)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::{lookup, standard_suite};

    #[test]
    fn forms_of_z() {
        let f = lookup("z").unwrap().func;
        for p in random_points(20, 2.0, 4) {
            let v = gamma_forms(&f, p, 0.5).unwrap();
            assert_eq!(v.gamma2_hori, 0.5);
            assert_eq!(v.gamma2_vert, 0.0);
            assert!((v.gamma_hori - (p.x * p.x + p.y * p.y) / 4.0).abs() < 1e-14);
            let expect = 0.5 + ((p.x * p.x + p.y * p.y) / 4.0 + 0.5) / 0.5;
            assert!((v.cd_margin() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn z_free_functions_have_flat_hessian() {
        let f = lookup("saddle").unwrap().func;
        let v = gamma_forms(&f, GroupPoint::new(0.3, -0.2, 5.0), 1.0).unwrap();
        assert_eq!(v.gamma2_vert, 0.0);
        // Hessian of x^2 - y^2 is diag(2, -2)
        assert!((v.gamma2_hori - 8.0).abs() < 1e-12);
    }

    #[test]
    fn constant_has_zero_margin() {
        let f = lookup("const").unwrap().func;
        let c = check_cd(&f, GroupPoint::new(1.0, 2.0, 3.0), 1.0).unwrap();
        assert_eq!(c.margin, 0.0);
        assert!(c.holds);
    }

    #[test]
    fn sweep_and_dual_route() {
        let pts = random_points(50, 1.5, 2);
        let s = cd_sweep(&standard_suite(), &pts, &[0.25, 1.0, 4.0]).unwrap();
        assert_eq!(s.violations, 0);
        assert!(s.max_dual_route_diff <= 1e-10, "{}", s.max_dual_route_diff);
        assert_eq!(s.rows.len(), 20 * 50 * 3);
        let csv = cd_csv(&s.rows[..1]).unwrap();
        assert!(csv.starts_with("f_name,x,y,z,nu,gamma2_mix,gamma_elli,margin\n"));
    }

    #[test]
    fn commutators_vanish_as_stated() {
        let pts = random_points(100, 1.5, 3);
        assert!(commutation_residual(&standard_suite(), &pts).unwrap() <= 1e-10);
    }

    #[test]
    fn bad_nu_rejected() {
        let f = lookup("x").unwrap().func;
        assert!(gamma_forms(&f, GroupPoint::IDENTITY, 0.0).is_err());
    }
}
