//! Named test functions.
//!
//! Members are addressable by strings such as `exp_ax_half:a=0.5` or
//! `radial_gauss:s=0.25`. Parameterless members take no suffix.

use std::fmt;

use super::{Envelope, Polynomial, TestFunction};
use crate::error::{Error, Result};

/// Whether a member depends on the vertical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionTag {
    Horizontal,
    Full,
}

impl fmt::Display for FunctionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionTag::Horizontal => f.write_str("horizontal"),
            FunctionTag::Full => f.write_str("full"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NamedFunction {
    pub name: String,
    pub tag: FunctionTag,
    pub func: TestFunction,
}

impl NamedFunction {
    fn new(name: impl Into<String>, tag: FunctionTag, func: TestFunction) -> Self {
        NamedFunction {
            name: name.into(),
            tag,
            func,
        }
    }

    pub fn is_horizontal(&self) -> bool {
        self.tag == FunctionTag::Horizontal
    }
}

struct Entry {
    base: &'static str,
    param: Option<&'static str>,
    tag: FunctionTag,
    build: fn(f64) -> TestFunction,
}

const N: usize = 3;

fn p_const(c: f64) -> Polynomial {
    Polynomial::constant(N, c)
}

fn mono(c: f64, powers: &[(usize, u32)]) -> Polynomial {
    Polynomial::monomial(N, c, powers)
}

fn with_env(p: Polynomial, env: Envelope) -> TestFunction {
    TestFunction::new(p, env).expect("suite members are three-variable")
}

/// `exp(-(x^2 + y^2 + z^2) / 4)`
fn full_gauss() -> Envelope {
    Envelope::isotropic(N, 0..3, 0.25)
}

const ENTRIES: &[Entry] = &[
    Entry {
        base: "const",
        param: None,
        tag: FunctionTag::Horizontal,
        build: |_| TestFunction::constant(N, 1.0),
    },
    Entry {
        base: "x",
        param: None,
        tag: FunctionTag::Horizontal,
        build: |_| TestFunction::var(N, 0),
    },
    Entry {
        base: "y",
        param: None,
        tag: FunctionTag::Horizontal,
        build: |_| TestFunction::var(N, 1),
    },
    Entry {
        base: "z",
        param: None,
        tag: FunctionTag::Full,
        build: |_| TestFunction::var(N, 2),
    },
    Entry {
        base: "exp_ax_half",
        param: Some("a"),
        tag: FunctionTag::Horizontal,
        build: |a| with_env(p_const(1.0), Envelope::zero(N).with_linear(0, 0.5 * a)),
    },
    Entry {
        base: "exp_by_half",
        param: Some("b"),
        tag: FunctionTag::Horizontal,
        build: |b| with_env(p_const(1.0), Envelope::zero(N).with_linear(1, 0.5 * b)),
    },
    Entry {
        base: "radial_gauss",
        param: Some("s"),
        tag: FunctionTag::Horizontal,
        build: |s| with_env(p_const(1.0), Envelope::isotropic(N, 0..2, s)),
    },
    Entry {
        base: "xy",
        param: None,
        tag: FunctionTag::Horizontal,
        build: |_| TestFunction::polynomial(mono(1.0, &[(0, 1), (1, 1)])),
    },
    Entry {
        base: "saddle",
        param: None,
        tag: FunctionTag::Horizontal,
        build: |_| TestFunction::polynomial(&mono(1.0, &[(0, 2)]) - &mono(1.0, &[(1, 2)])),
    },
    // exp(-((x - 1)^2 + y^2) / 2)
    Entry {
        base: "shifted_gauss",
        param: None,
        tag: FunctionTag::Horizontal,
        build: |_| {
            with_env(
                p_const(1.0),
                Envelope::isotropic(N, 0..2, 0.5)
                    .with_linear(0, 1.0)
                    .with_constant(-0.5),
            )
        },
    },
    Entry {
        base: "z_gauss",
        param: None,
        tag: FunctionTag::Full,
        build: |_| with_env(mono(1.0, &[(2, 1)]), full_gauss()),
    },
    Entry {
        base: "one_plus_z2_gauss",
        param: None,
        tag: FunctionTag::Full,
        build: |_| with_env(&p_const(1.0) + &mono(1.0, &[(2, 2)]), full_gauss()),
    },
    Entry {
        base: "xz_gauss",
        param: None,
        tag: FunctionTag::Full,
        build: |_| with_env(mono(1.0, &[(0, 1), (2, 1)]), full_gauss()),
    },
    // (y + z) exp(-(x^2 + y^2 + z^2) / 8)
    Entry {
        base: "yz_gauss",
        param: None,
        tag: FunctionTag::Full,
        build: |_| {
            with_env(
                &mono(1.0, &[(1, 1)]) + &mono(1.0, &[(2, 1)]),
                Envelope::isotropic(N, 0..3, 0.125),
            )
        },
    },
    Entry {
        base: "affine_z",
        param: None,
        tag: FunctionTag::Full,
        build: |_| TestFunction::polynomial(&p_const(1.0) + &mono(0.5, &[(2, 1)])),
    },
    Entry {
        base: "xy_plus_z",
        param: None,
        tag: FunctionTag::Full,
        build: |_| TestFunction::polynomial(&mono(1.0, &[(0, 1), (1, 1)]) + &mono(1.0, &[(2, 1)])),
    },
    Entry {
        base: "exp_cz",
        param: Some("c"),
        tag: FunctionTag::Full,
        build: |c| with_env(p_const(1.0), Envelope::zero(N).with_linear(2, c)),
    },
];

const STANDARD: &[&str] = &[
    "const",
    "x",
    "y",
    "z",
    "exp_ax_half:a=0.25",
    "exp_ax_half:a=0.5",
    "exp_ax_half:a=1",
    "exp_by_half:b=0.5",
    "radial_gauss:s=0.25",
    "radial_gauss:s=0.5",
    "xy",
    "saddle",
    "shifted_gauss",
    "z_gauss",
    "one_plus_z2_gauss",
    "xz_gauss",
    "yz_gauss",
    "affine_z",
    "xy_plus_z",
    "exp_cz:c=0.125",
];

/// Resolves a Heisenberg suite name, including parameter values outside the
/// standard list (`exp_ax_half:a=0.7`).
pub fn lookup(name: &str) -> Result<NamedFunction> {
    let (base, param) = match name.split_once(':') {
        Some((b, rest)) => (b.trim(), Some(rest.trim())),
        None => (name.trim(), None),
    };
    let entry = ENTRIES
        .iter()
        .find(|e| e.base == base)
        .ok_or_else(|| Error::UnknownName(name.to_string()))?;
    let value = match (entry.param, param) {
        (None, None) => 0.0,
        (Some(key), Some(spec)) => {
            let (k, v) = spec
                .split_once('=')
                .ok_or_else(|| Error::UnknownName(format!("{name}: expected {key}=<value>")))?;
            if k.trim() != key {
                return Err(Error::UnknownName(format!("{name}: unknown parameter {}", k.trim())));
            }
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::UnknownName(format!("{name}: bad number {}", v.trim())))?;
            if !v.is_finite() {
                return Err(Error::UnknownName(format!("{name}: non-finite parameter")));
            }
            v
        }
        (Some(key), None) => {
            return Err(Error::UnknownName(format!("{name}: missing parameter {key}")))
        }
        (None, Some(_)) => {
            return Err(Error::UnknownName(format!("{name}: takes no parameters")))
        }
    };
    let func = (entry.build)(value);
    if !func.is_integrable_heisenberg() {
        return Err(Error::NotIntegrable(name.to_string()));
    }
    Ok(NamedFunction::new(name, entry.tag, func))
}

/// The default twenty-member Heisenberg suite, in a fixed order.
pub fn standard_suite() -> Vec<NamedFunction> {
    STANDARD
        .iter()
        .map(|n| lookup(n).expect("standard names resolve"))
        .collect()
}

/// A suite over `R^d x R^m` (variables `x_1..x_d, z_1..z_m`).
///
/// For `d = 2, m = 1` this is the Heisenberg standard suite, so results can
/// be compared member by member.
pub fn carnot_suite(d: usize, m: usize) -> Vec<NamedFunction> {
    if d == 2 && m == 1 {
        return standard_suite();
    }
    let n = d + m;
    let mono = |c: f64, p: &[(usize, u32)]| Polynomial::monomial(n, c, p);
    let one = Polynomial::constant(n, 1.0);
    let gauss = Envelope::isotropic(n, 0..n, 0.25);
    let mk = |p: Polynomial, e: Envelope| TestFunction::new(p, e).expect("matching dimensions");
    let z1 = d;
    let zl = d + m - 1;
    let mut zsum = Polynomial::zero(n);
    for l in 0..m {
        zsum = &zsum + &mono(1.0, &[(d + l, 1)]);
    }

    let mut out = vec![
        NamedFunction::new("const", FunctionTag::Horizontal, TestFunction::constant(n, 1.0)),
        NamedFunction::new("x1", FunctionTag::Horizontal, TestFunction::var(n, 0)),
        NamedFunction::new(
            "exp_ax_half:a=0.5",
            FunctionTag::Horizontal,
            mk(one.clone(), Envelope::zero(n).with_linear(0, 0.25)),
        ),
        NamedFunction::new(
            "radial_gauss:s=0.25",
            FunctionTag::Horizontal,
            mk(one.clone(), Envelope::isotropic(n, 0..d, 0.25)),
        ),
    ];
    if d >= 2 {
        out.push(NamedFunction::new(
            "x1x2",
            FunctionTag::Horizontal,
            TestFunction::polynomial(mono(1.0, &[(0, 1), (1, 1)])),
        ));
    }
    out.extend([
        NamedFunction::new("z1", FunctionTag::Full, TestFunction::var(n, z1)),
        NamedFunction::new("z1_gauss", FunctionTag::Full, mk(mono(1.0, &[(z1, 1)]), gauss.clone())),
        NamedFunction::new(
            "one_plus_z1sq_gauss",
            FunctionTag::Full,
            mk(&one + &mono(1.0, &[(z1, 2)]), gauss.clone()),
        ),
        NamedFunction::new(
            "x1_zlast_gauss",
            FunctionTag::Full,
            mk(mono(1.0, &[(0, 1), (zl, 1)]), gauss.clone()),
        ),
        NamedFunction::new("zsum_gauss", FunctionTag::Full, mk(zsum.clone(), gauss)),
        NamedFunction::new(
            "affine_zsum",
            FunctionTag::Full,
            TestFunction::polynomial(&one + &zsum.scale(0.5)),
        ),
    ]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_suite_shape() {
        let s = standard_suite();
        assert!(s.len() >= 10);
        assert_eq!(s.len(), 20);
        for f in &s {
            assert_eq!(f.tag == FunctionTag::Horizontal, f.func.independent_of(2), "{}", f.name);
            assert!(f.func.is_integrable_heisenberg());
        }
    }

    #[test]
    fn lookup_parses_parameters() {
        let f = lookup("exp_ax_half:a=0.7").unwrap();
        let v = f.func.evaluate(&[2.0, 0.0, 0.0]).unwrap();
        assert!((v - 0.7f64.exp()).abs() < 1e-14);
        assert!(lookup("exp_ax_half").is_err());
        assert!(lookup("exp_ax_half:b=1").is_err());
        assert!(lookup("x:a=1").is_err());
        assert!(lookup("nope").is_err());
        assert!(matches!(lookup("exp_cz:c=2"), Err(Error::NotIntegrable(_))));
    }

    #[test]
    fn carnot_suite_dimensions() {
        for (d, m) in [(3, 3), (4, 2), (2, 1)] {
            for f in carnot_suite(d, m) {
                assert_eq!(f.func.nvars(), d + m);
                let horizontal = (d..d + m).all(|i| f.func.independent_of(i));
                assert_eq!(horizontal, f.is_horizontal(), "{}", f.name);
            }
        }
    }
}
