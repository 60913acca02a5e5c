//! Batch experiments driven by an `ExperimentConfig`. Each runner returns
//! its output files as strings plus a short text summary; writing them to
//! disk is left to the caller. Outputs depend on the configuration only.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

use crate::carnot::CarnotSpec;
use crate::clt::{area_variance_study, errors_decrease, moment_panel};
use crate::config::ExperimentConfig;
use crate::curvature::{bi_invariance_suite, cd_csv, cd_sweep, commutation_residual, random_points};
use crate::error::{Error, Result};
use crate::estimators::{default_k, estimates_csv, euclidean_oracle_cells, EstimateRow, Midpoint};
use crate::inequalities::{
    any_violated, check_carnot_suite, find_check, parse_reports, registry, render_table, reports_json,
    CarnotSource, CheckContext, BRIDGE_SALT, CorollaryConstant, InequalityReport, PathSource,
};
use crate::rng::SeedPlan;
use crate::sampler::{path_bank, PathConfig, PathSample};
use crate::selftest::run_all;
use crate::testfn::carnot_suite;

/// Salt separating the bi-invariance banks from the main path bank.
const CURVATURE_SALT: u64 = 0xc0de;

/// One output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: String,
    /// Whether any verdict came out as violated (exit status 1).
    pub violated: bool,
}

fn artifact(file: impl Into<String>, contents: String) -> Artifact {
    Artifact {
        file: file.into(),
        contents,
    }
}

fn pretty<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

pub fn selftest(cfg: &ExperimentConfig) -> Result<Outcome> {
    let checks = run_all(&cfg.functions()?, 10_000, cfg.seed)?;
    let mut summary = String::new();
    for c in &checks {
        let _ = writeln!(
            summary,
            "{:<32} max error {:.3e} (tolerance {:.0e}, {} samples)  {}",
            c.name,
            c.max_error,
            c.tolerance,
            c.samples,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(Outcome {
        violated: checks.iter().any(|c| !c.pass),
        artifacts: vec![artifact("selftest.json", pretty(&checks)?)],
        summary,
    })
}

pub fn clt(cfg: &ExperimentConfig) -> Result<Outcome> {
    let c = &cfg.clt;
    let plan = SeedPlan::new(cfg.seed);
    let mut rows: Vec<EstimateRow> = Vec::new();
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "{:>6} {:>5} {:>22} {:>22} {:>22} {:>22} {:>10} {:>10}",
        "n", "beta", "var X", "var Y", "var Z", "cov XZ", "sig(lim)", "sig(n)"
    );
    for &beta in &c.betas {
        for &n in &c.ns {
            let p = moment_panel(n, beta, c.n_walks, plan)?;
            let cells: Vec<String> = p
                .estimates()
                .iter()
                .map(|e| format!("{:.5} +/- {:.5}", e.value, e.ci_half_width))
                .collect();
            let _ = writeln!(
                summary,
                "{:>6} {:>5} {:>22} {:>22} {:>22} {:>22} {:>10.2} {:>10.2}",
                n,
                beta,
                cells[0],
                cells[1],
                cells[2],
                cells[3],
                p.max_sigma(p.limit()),
                p.max_sigma(p.exact())
            );
            rows.extend(p.rows());
        }
    }
    let study = area_variance_study(&c.area_substeps, c.area_paths, plan)?;
    let _ = writeln!(summary, "\nVar(A_1) under substep refinement (target 1/4):");
    for s in &study {
        let _ = writeln!(
            summary,
            "  substeps {:>5}: {}  |error| {:.2e} (exact bias {:.2e})",
            s.substeps, s.variance, s.error, s.expected_error
        );
        rows.push(EstimateRow::new("var_area", format!("substeps={}", s.substeps), &s.variance));
    }
    let _ = writeln!(summary, "  errors decrease: {}", errors_decrease(&study));
    Ok(Outcome {
        artifacts: vec![artifact("clt.csv", estimates_csv(&rows)?)],
        summary,
        violated: false,
    })
}

/// Sample bank for `lsi`: simulate from the configuration, or reuse one.
pub enum Bank<'a> {
    Simulate,
    Paths { paths: &'a [PathSample], plan: SeedPlan },
}

/// Builds the path bank `lsi` would simulate, for writing to disk.
pub fn lsi_bank(cfg: &ExperimentConfig) -> Result<(SeedPlan, PathConfig, Vec<PathSample>)> {
    let plan = SeedPlan::new(cfg.seed);
    let pc = cfg.path_config(0.0)?;
    Ok((plan, pc, path_bank(&pc, cfg.paths.n_paths, plan)?))
}

pub fn check_context<'a>(cfg: &ExperimentConfig, bank: &Bank<'a>) -> Result<CheckContext<'a>> {
    let paths = match bank {
        Bank::Simulate => PathSource::Simulate {
            cfg: cfg.path_config(0.0)?,
            count: cfg.paths.n_paths,
            plan: SeedPlan::new(cfg.seed),
        },
        Bank::Paths { paths, plan } => PathSource::Bank { paths, plan: *plan },
    };
    let l = &cfg.lsi;
    let mut ctx = CheckContext::new(cfg.functions()?, paths);
    ctx.betas = l.betas.clone();
    ctx.rule = Midpoint {
        nodes: l.quadrature_nodes,
    };
    ctx.verdict = cfg.verdict;
    ctx.nus = l.nus.clone();
    ctx.corollary_c = match l.corollary_c {
        Some(c) => CorollaryConstant::Fixed(c),
        None => CorollaryConstant::Fit(cfg.bridge_design()),
    };
    ctx.c_lsi = l.c_lsi;
    ctx.finite_ns = l.finite_ns.clone();
    ctx.finite_n_samples = l.finite_n_samples;
    Ok(ctx)
}

/// Runs the named checks (all registered checks when `names` is empty),
/// one JSON file per check.
pub fn lsi(cfg: &ExperimentConfig, names: &[String], bank: Bank) -> Result<Outcome> {
    let checks = if names.is_empty() {
        registry()
    } else {
        names.iter().map(|n| find_check(n)).collect::<Result<Vec<_>>>()?
    };
    let ctx = check_context(cfg, &bank)?;
    let mut artifacts = Vec::new();
    let mut all = Vec::new();
    for c in &checks {
        let reports = c.run(&ctx)?;
        artifacts.push(artifact(format!("lsi_{}.json", c.name()), reports_json(&reports)?));
        all.extend(reports);
    }
    Ok(Outcome {
        violated: any_violated(&all),
        summary: render_table(&all),
        artifacts,
    })
}

pub fn bridge(cfg: &ExperimentConfig) -> Result<Outcome> {
    let design = cfg.bridge_design();
    let plan = SeedPlan::new(cfg.seed).derive(BRIDGE_SALT);
    let pc = PathConfig::new(design.cells, design.substeps, 0.0)?;
    let paths = path_bank(&pc, design.n_paths, plan)?;
    let k = design.k.unwrap_or_else(|| default_k(design.n_paths));
    let fit = crate::estimators::bridge_lemma_fit(&paths, &design.ts, &design.targets, k, plan.master_seed)?;
    let oracle = euclidean_oracle_cells(&paths, &design.ts, &cfg.bridge.radii, k, plan.master_seed)?;
    let worst = oracle.iter().map(|c| c.sigmas).fold(0.0, f64::max);
    let mut rows: Vec<EstimateRow> = fit
        .cells
        .iter()
        .map(|c| {
            EstimateRow::new(
                "bridge_full",
                format!("t={};x={};y={};z={}", c.t, c.target.x, c.target.y, c.target.z),
                &c.moment,
            )
        })
        .collect();
    rows.extend(
        oracle
            .iter()
            .map(|c| EstimateRow::new("bridge_planar", format!("t={};r={}", c.t, c.r), &c.moment)),
    );
    let mut summary = String::new();
    let _ = writeln!(summary, "paths {}  k {}  seed {}", fit.n_paths, fit.k, plan.master_seed);
    let _ = writeln!(summary, "pointwise C  {:.4}", fit.c_pointwise);
    let _ = writeln!(summary, "integrated C {:.4}", fit.c_integrated);
    let _ = writeln!(summary, "integrated bound holds with pointwise C: {}", fit.integrated_bound_holds());
    let _ = writeln!(
        summary,
        "planar oracle: largest deviation {:.2} sigma over {} cells",
        worst,
        oracle.len()
    );
    let json = pretty(&json!({
        "schema": crate::inequalities::SCHEMA,
        "seed": plan.master_seed,
        "fit": fit,
        "planar_oracle": oracle,
    }))?;
    Ok(Outcome {
        artifacts: vec![artifact("bridge.json", json), artifact("bridge.csv", estimates_csv(&rows)?)],
        summary,
        violated: false,
    })
}

pub fn curvature(cfg: &ExperimentConfig) -> Result<Outcome> {
    let c = &cfg.curvature;
    let funcs = cfg.functions()?;
    let pts = random_points(c.points, c.point_scale, cfg.seed);
    let sweep = cd_sweep(&funcs, &pts, &c.nus)?;
    let comm = commutation_residual(&funcs, &pts)?;
    let plan = SeedPlan::new(cfg.seed).derive(CURVATURE_SALT);
    let bi = bi_invariance_suite(&funcs, &cfg.path_config(0.0)?, c.bi_invariance_paths, plan)?;
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "{} functions x {} points x {} nu values",
        funcs.len(),
        pts.len(),
        c.nus.len()
    );
    let _ = writeln!(summary, "min margin          {:.6e}", sweep.min_margin);
    let _ = writeln!(summary, "violations          {}", sweep.violations);
    let _ = writeln!(summary, "dual-route max diff {:.3e}", sweep.max_dual_route_diff);
    let _ = writeln!(summary, "commutator residual {:.3e}", comm);
    let mut rows = Vec::new();
    let mut disagree = 0;
    for (f, b) in funcs.iter().zip(&bi) {
        rows.extend(b.rows(&f.name));
        if !b.agree(3.0) {
            disagree += 1;
        }
    }
    let _ = writeln!(
        summary,
        "left/right endpoint means disagree beyond 3 sigma for {disagree} of {} functions",
        funcs.len()
    );
    Ok(Outcome {
        artifacts: vec![
            artifact("curvature.csv", cd_csv(&sweep.rows)?),
            artifact("bi_invariance.csv", estimates_csv(&rows)?),
        ],
        summary,
        violated: sweep.violations > 0,
    })
}

pub fn carnot(cfg: &ExperimentConfig, spec: &CarnotSpec) -> Result<Outcome> {
    let c = &cfg.carnot;
    let funcs = match &cfg.functions {
        Some(_) if spec.d() == 2 && spec.m() == 1 => cfg.functions()?,
        Some(_) => {
            return Err(Error::Config(
                "function names select Heisenberg functions; leave `functions` unset for other groups".into(),
            ))
        }
        None => carnot_suite(spec.d(), spec.m()),
    };
    let source = CarnotSource::Simulate {
        k: c.grid,
        substeps: c.substeps,
        count: c.n_paths,
        plan: SeedPlan::new(cfg.seed),
    };
    let rule = Midpoint {
        nodes: cfg.lsi.quadrature_nodes,
    };
    let reports = check_carnot_suite(spec, &funcs, &source, rule, cfg.verdict)?;
    Ok(Outcome {
        violated: any_violated(&reports),
        summary: render_table(&reports),
        artifacts: vec![artifact("carnot.json", reports_json(&reports)?)],
    })
}

/// Merges report files into one table and one JSON array.
pub fn report(texts: &[(String, String)]) -> Result<Outcome> {
    let mut all: Vec<InequalityReport> = Vec::new();
    for (name, text) in texts {
        all.extend(parse_reports(text).map_err(|e| Error::Config(format!("{name}: {e}")))?);
    }
    Ok(Outcome {
        violated: any_violated(&all),
        summary: render_table(&all),
        artifacts: vec![artifact("report.json", reports_json(&all)?)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::parse(
            r#"
            functions = ["x", "z_gauss"]
            [paths]
            n_paths = 2000
            grid = 32
            substeps = 4
            [lsi]
            betas = [0.0]
            corollary_c = 2.0
            finite_ns = [2]
            finite_n_samples = 2000
            "#,
        )
        .unwrap();
        c.curvature.points = 20;
        c.curvature.bi_invariance_paths = 2000;
        c
    }

    #[test]
    fn lsi_is_deterministic_and_bank_equivalent() {
        let cfg = small();
        let names = vec!["theorem1".to_string()];
        let a = lsi(&cfg, &names, Bank::Simulate).unwrap();
        let b = lsi(&cfg, &names, Bank::Simulate).unwrap();
        assert_eq!(a, b);
        let (plan, _, paths) = lsi_bank(&cfg).unwrap();
        let c = lsi(&cfg, &names, Bank::Paths { paths: &paths, plan }).unwrap();
        assert_eq!(a.artifacts, c.artifacts);
        let reports = parse_reports(&a.artifacts[0].contents).unwrap();
        assert_eq!(reports.len(), 2);
    }

    #[test]
    fn report_merges() {
        let cfg = small();
        let a = lsi(&cfg, &["poincare".into()], Bank::Simulate).unwrap();
        let text = a.artifacts[0].contents.clone();
        let m = report(&[("a".into(), text.clone()), ("b".into(), text)]).unwrap();
        assert_eq!(parse_reports(&m.artifacts[0].contents).unwrap().len(), 4);
        assert!(report(&[("bad".into(), "{}".into())]).is_err());
    }

    #[test]
    fn curvature_outputs() {
        let o = curvature(&small()).unwrap();
        assert!(!o.violated);
        assert_eq!(o.artifacts[0].contents.lines().count(), 1 + 2 * 20 * 5);
    }

    #[test]
    fn unknown_check_is_an_error() {
        assert!(lsi(&small(), &["nope".into()], Bank::Simulate).is_err());
    }
}
