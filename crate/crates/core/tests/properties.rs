use proptest::prelude::*;

use heislab::curvature::gamma_forms;
use heislab::estimators::{entropy, theorem1_g};
use heislab::inequalities::{InequalityReport, Verdict, VerdictRule};
use heislab::stats::McEstimate;
use heislab::testfn::{apply_field, standard_suite, Field};
use heislab::GroupPoint;

fn point() -> impl Strategy<Value = GroupPoint> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| GroupPoint::new(x, y, z))
}

fn close(a: GroupPoint, b: GroupPoint) -> bool {
    a.to_array()
        .iter()
        .zip(b.to_array())
        .all(|(u, v)| (u - v).abs() <= 1e-12 * u.abs().max(v.abs()).max(1.0))
}

fn dil(l: f64, g: GroupPoint) -> GroupPoint {
    GroupPoint::new(l * g.x, l * g.y, l * l * g.z)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn group_axioms(g in point(), h in point(), k in point(), l in 0.05..4.0f64) {
        prop_assert!(close(g.mul(h).mul(k), g.mul(h.mul(k))));
        prop_assert!(close(g.mul(g.inv()), GroupPoint::IDENTITY));
        prop_assert!(close(g.inv().mul(g), GroupPoint::IDENTITY));
        prop_assert!(close(dil(l, g.mul(h)), dil(l, g).mul(dil(l, h))));
    }

    /// With the companion point equal to the endpoint the integrand is the
    /// squared left-invariant gradient plus the vertical noise term, so it
    /// dominates the horizontal carre du champ.
    #[test]
    fn theorem1_integrand_dominates_horizontal_gamma(
        idx in 0usize..20,
        h in point(),
        beta in 0.0..2.0f64,
    ) {
        let f = &standard_suite()[idx].func;
        let xf = apply_field(f, Field::X).evaluate_at(h).unwrap();
        let yf = apply_field(f, Field::Y).evaluate_at(h).unwrap();
        let grad = [
            f.partial(0usize).evaluate_at(h).unwrap(),
            f.partial(1usize).evaluate_at(h).unwrap(),
            f.partial(2usize).evaluate_at(h).unwrap(),
        ];
        let g = theorem1_g(grad, h, h.x, h.y, beta);
        let hori = xf * xf + yf * yf;
        prop_assert!(g >= hori - 1e-9 * hori.max(1.0), "g {} < Gamma {}", g, hori);
    }

    #[test]
    fn curvature_margin_is_nonnegative(idx in 0usize..20, p in point(), nu in 0.05..8.0f64) {
        let f = &standard_suite()[idx].func;
        let v = gamma_forms(f, p, nu).unwrap();
        let scale = v.gamma2_mix.abs().max(v.gamma_elli / nu).max(1.0);
        prop_assert!(v.cd_margin() >= -1e-10 * scale, "margin {}", v.cd_margin());
    }

    #[test]
    fn entropy_is_nonnegative_and_homogeneous(
        v in prop::collection::vec(0.0..50.0f64, 1..200),
        c in 0.01..100.0f64,
    ) {
        let e = entropy(&v, 1).unwrap().value;
        prop_assert!(e >= 0.0);
        let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
        let es = entropy(&scaled, 1).unwrap().value;
        prop_assert!((es - c * e).abs() <= 1e-9 * (c * e).max(1e-12) + 1e-12);
    }

    #[test]
    fn deficit_bookkeeping(
        l in -10.0..10.0f64, r in -10.0..10.0f64,
        cl in 0.0..1.0f64, cr in 0.0..1.0f64,
    ) {
        let est = |value, ci| McEstimate { value, ci_half_width: ci, n_samples: 10, seed: 0 };
        let rep = InequalityReport::new("t", "f", est(l, cl), est(r, cr), Default::default(), VerdictRule::default());
        let exact = r - l;
        prop_assert!((rep.deficit - exact).abs() <= f64::EPSILON * exact.abs().max(l.abs()).max(r.abs()));
        prop_assert_eq!(rep.combined_ci(), cl + cr);
        let expect = if exact >= -(cl + cr) {
            Verdict::Holds
        } else if exact < -3.0 * (cl + cr) {
            Verdict::Violated
        } else {
            Verdict::Inconclusive
        };
        prop_assert_eq!(rep.verdict, expect);
    }
}
