use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use roughlab::domains::{in_b, in_o, in_u};
use roughlab::experiments::{
    convergence_study, cross_bound_study, estimate_measure, overlap_study, ConvergenceConfig, ConvergenceQuantity,
    OverlapConfig,
};
use roughlab::io::{read_path_file, DomainBlock};
use roughlab::wpi::{gaussian_convex_check, verify_product_wpi, FiniteProductSpace};
use roughlab::{
    cp_norm, cross, dyadic_domination_constant, dyadic_norm, level1_norm, level2_norm, lift, max_qvar, pvar_norm, qvar,
    qvar_naive, sample_brownian, DiscretePath, RngStream, TableComponent, TwoParamTable, VarParams,
};
use serde_json::json;

use crate::args::{Command, NormComponent, VarArgs};
use crate::cells;
use crate::output::{Csv, Sink, Summary};

/// Stream phase for random reference paths drawn by the CLI itself.
const PHASE_CLI_REFERENCE: u16 = 30;
const PHASE_PROPERTY: u16 = 31;

pub struct Globals {
    pub seed: u64,
    pub force: bool,
}

fn params(v: &VarArgs) -> Result<VarParams> {
    Ok(VarParams::new(v.p, v.kappa)?)
}

fn read_path(path: &Path) -> Result<DiscretePath> {
    read_path_file(path).with_context(|| format!("reading path CSV {}", path.display()))
}

/// `zero`, `line` or a CSV file.
fn reference_path(spec: &str, dim: usize, level: u32) -> Result<DiscretePath> {
    let path = match spec {
        "zero" => DiscretePath::zeros(dim, level),
        "line" => DiscretePath::from_fn(dim, level, |t| vec![t; dim])?,
        file => read_path(Path::new(file))?,
    };
    if path.level() != level {
        bail!("reference path has level {}, expected {level}", path.level());
    }
    Ok(path)
}

fn parse_levels(s: &str) -> Result<Vec<u32>> {
    let bad = || anyhow!("--n expects `lo..hi` or a comma list, got `{s}`");
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

fn parse_floats(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| anyhow!("{what}: cannot parse `{x}` as a number")))
        .collect()
}

fn parse_quantities(s: &str) -> Result<Vec<ConvergenceQuantity>> {
    s.split(',')
        .map(|q| {
            let q = q.trim().replace('-', "_");
            ConvergenceQuantity::ALL
                .into_iter()
                .find(|c| c.name() == q)
                .ok_or_else(|| anyhow!("unknown quantity `{q}` (rough-distance, second-level, cross)"))
        })
        .collect()
}

/// Runs one subcommand; `Ok(false)` means an in-run assertion failed.
pub fn run(command: Command, g: &Globals) -> Result<bool> {
    match command {
        Command::Lift { path, var, table, out } => {
            let sink = Sink::new(out.out, g.force);
            sink.preflight(table)?;
            let w = read_path(&path)?;
            let l = lift(&w);
            let p = var.p;
            let last = w.num_points() - 1;
            let mut s = Summary::new("lift", None, json!({ "path": path, "p": p, "table": table }));
            s.results = json!({
                "dim": w.dim(),
                "level": w.level(),
                "level1_norm": level1_norm(&l, p)?,
                "level2_norm": level2_norm(&l, p)?,
                "cp_norm": cp_norm(&l, p)?,
                "level1_total": l.level1(0, last)?,
                "level2_total": l.level2(0, last)?,
            });
            let csv = if table {
                let mut buf = Vec::new();
                l.write_table_csv(&mut buf)?;
                Some(Csv::from_text(String::from_utf8(buf)?))
            } else {
                None
            };
            sink.emit(&s, csv.as_ref())?;
            Ok(true)
        }
        Command::Pvar { path, var, component } => {
            params(&var)?;
            let w = read_path(&path)?;
            let l = lift(&w);
            let v = match component {
                NormComponent::Level1 => level1_norm(&l, var.p)?,
                NormComponent::Level2 => level2_norm(&l, var.p)?,
                NormComponent::Cp => cp_norm(&l, var.p)?,
            };
            println!("{v:?}");
            Ok(true)
        }
        Command::DyadicNorm { path, var } => {
            let w = read_path(&path)?;
            println!("{:?}", dyadic_norm(&w, params(&var)?));
            Ok(true)
        }
        Command::Membership { domain, path } => {
            let spec = load_domain(&domain)?;
            let w = read_path(&path)?;
            println!("{}", spec.contains(&w)?);
            Ok(true)
        }
        Command::EstimateMeasure { domain, kind, a, b, z, prefix, level, dim, trials, var, assert_positive, out } => {
            let sink = Sink::new(out.out, g.force);
            sink.preflight(true)?;
            let spec = match &domain {
                Some(file) => load_domain(file)?,
                None => {
                    let block = DomainBlock {
                        kind: kind.clone(),
                        a,
                        b,
                        p: var.p,
                        kappa: var.kappa,
                        level: Some(level),
                        dim: (kind == "U").then_some(dim),
                        reference: z.clone(),
                        reference_dim: matches!(kind.as_str(), "B" | "O").then_some(dim),
                        prefix: prefix.clone(),
                    };
                    block.resolve(Path::new("."))?
                }
            };
            let config = json!({
                "domain_file": domain, "kind": kind, "a": a, "b": b, "z": z, "prefix": prefix,
                "N": level, "dim": dim, "trials": trials, "p": var.p, "kappa": var.kappa,
                "assert_positive": assert_positive,
            });
            let report = estimate_measure(&spec, trials, RngStream::new(g.seed, 0))?;
            let e = report.estimate;
            let mut s = Summary::new("estimate-measure", Some(g.seed), config);
            s.check(
                "interval_contains_estimate",
                e.ci_low <= e.estimate && e.estimate <= e.ci_high,
                format!("[{}, {}] around {}", e.ci_low, e.ci_high, e.estimate),
            );
            if assert_positive {
                s.check("ci_low_positive", e.ci_low > 0.0, format!("ci_low = {}", e.ci_low));
            }
            s.results = serde_json::to_value(&report)?;
            let mut csv = Csv::new(&["trials", "hits", "estimate", "ci_low", "ci_high"]);
            csv.row(&cells![e.trials, e.hits, e.estimate, e.ci_low, e.ci_high]);
            sink.emit(&s, Some(&csv))?;
            Ok(s.passed)
        }
        Command::Convergence { level, ns, trials, dim, quantities, monotone_from, max_slope, var, out } => {
            let sink = Sink::new(out.out, g.force);
            sink.preflight(true)?;
            let mut cfg = ConvergenceConfig::new(level, parse_levels(&ns)?, trials, dim, params(&var)?);
            cfg.quantities = parse_quantities(&quantities)?;
            let table = convergence_study(&cfg, RngStream::new(g.seed, 0))?;
            let config = json!({
                "N": level, "n": cfg.ns, "trials": trials, "dim": dim, "p": var.p, "kappa": var.kappa,
                "quantities": cfg.quantities, "monotone_from": monotone_from, "max_slope": max_slope,
            });
            let mut s = Summary::new("convergence", Some(g.seed), config);
            let mut csv = Csv::new(&["quantity", "n", "mean", "std", "trials"]);
            for series in &table.series {
                let name = series.quantity.name();
                for r in &series.rows {
                    csv.row(&cells![name, r.n, r.mean, r.std, r.trials]);
                }
                s.check(
                    format!("{name}_non_increasing_from_{monotone_from}"),
                    series.non_increasing_from(monotone_from),
                    series.rows.iter().map(|r| format!("{}", r.mean)).collect::<Vec<_>>().join(" "),
                );
                let ok = series.slope.is_some_and(|sl| sl <= max_slope);
                s.check(format!("{name}_slope"), ok, format!("slope {:?} vs bound {max_slope}", series.slope));
            }
            s.results = serde_json::to_value(&table.series)?;
            sink.emit(&s, Some(&csv))?;
            Ok(s.passed)
        }
        Command::CrossBound { z, corpus, scales, level, trials, dim, max_spread, var, out } => {
            let sink = Sink::new(out.out, g.force);
            sink.preflight(true)?;
            let prm = params(&var)?;
            let scales = parse_floats(&scales, "--scales")?;
            let mut refs = vec![(z.clone(), reference_path(&z, 1, level)?)];
            let root = RngStream::new(g.seed, 0);
            for k in 0..corpus {
                refs.push((format!("random_{k}"), sample_brownian(1, level, &root.substream(PHASE_CLI_REFERENCE, k))?));
            }
            let config = json!({
                "z": z, "corpus": corpus, "scales": scales, "N": level, "trials": trials, "dim": dim,
                "p": var.p, "kappa": var.kappa, "max_spread": max_spread,
            });
            let mut s = Summary::new("cross-bound", Some(g.seed), config);
            let mut csv = Csv::new(&["reference", "scale", "dyadic_norm", "mean_power", "std_error", "ratio"]);
            let mut reports = Vec::new();
            for (name, zp) in &refs {
                let rep = cross_bound_study(zp, &scales, trials, dim, prm, root)?;
                for r in &rep.rows {
                    csv.row(&cells![name, r.scale, r.dyadic_norm, r.mean_power, r.std_error, r.ratio]);
                }
                s.check(
                    format!("{name}_ratio_stable"),
                    rep.relative_spread <= max_spread && rep.rows.iter().all(|r| r.ratio.is_finite()),
                    format!("relative spread {}", rep.relative_spread),
                );
                reports.push(json!({ "reference": name, "report": rep }));
            }
            let sup = reports
                .iter()
                .flat_map(|r| r["report"]["rows"].as_array().cloned().unwrap_or_default())
                .filter_map(|row| row["ratio"].as_f64())
                .fold(0.0f64, f64::max);
            s.results = json!({ "references": reports, "max_ratio": sup });
            sink.emit(&s, Some(&csv))?;
            Ok(s.passed)
        }
        Command::Overlap {
            z,
            z_dim,
            level,
            prefix_dim,
            a,
            epsilon,
            r,
            conditional_trials,
            prefix_trials,
            tail_trials,
            candidates,
            overlap_samples,
            acceptance_floor,
            var,
            out,
        } => {
            let sink = Sink::new(out.out, g.force);
            sink.preflight(true)?;
            let zp = reference_path(&z, z_dim, level)?;
            let mut cfg = OverlapConfig::new(level, prefix_dim, a, epsilon, r, params(&var)?);
            cfg.conditional_trials = conditional_trials;
            cfg.prefix_trials = prefix_trials;
            cfg.tail_trials = tail_trials;
            cfg.candidates = candidates;
            cfg.overlap_samples = overlap_samples;
            cfg.acceptance_floor = acceptance_floor;
            let rep = overlap_study(&zp, &cfg, RngStream::new(g.seed, 0))?;
            let mut s = Summary::new("overlap", Some(g.seed), json!({ "z": z, "z_dim": z_dim, "study": cfg }));
            match rep.overlap_holds {
                Some(ok) => s.check(
                    "min_overlap_vs_third_of_alpha_bar",
                    ok,
                    format!("min overlap {:?} vs {} - 3 * {:?}", rep.min_overlap, rep.benchmark, rep.combined_se),
                ),
                None => {
                    s.check("min_overlap_vs_third_of_alpha_bar", true, "fewer than two prefixes in V; not evaluated")
                }
            }
            let mut csv = Csv::new(&["draw", "conditional_section", "in_v", "section"]);
            for p in &rep.prefixes {
                csv.row(&cells![p.draw, p.conditional_section, p.in_v, p.section]);
            }
            s.results = serde_json::to_value(&rep)?;
            sink.emit(&s, Some(&csv))?;
            Ok(s.passed)
        }
        Command::WpiToy { space, triples, functions, out } => {
            let sink = Sink::new(out.out, g.force);
            sink.preflight(true)?;
            let fps = match &space {
                Some(f) => FiniteProductSpace::from_json(
                    &std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?,
                )?,
                None => two_rectangles()?,
            };
            let triples: Vec<Vec<f64>> =
                triples.split(';').map(|t| parse_floats(t, "--triples")).collect::<Result<_>>()?;
            if triples.iter().any(|t| t.len() != 3) {
                bail!("--triples expects `eps,eps_prime,delta` groups separated by `;`");
            }
            let config = json!({ "space": space, "triples": triples, "functions": functions });
            let mut s = Summary::new("wpi-toy", Some(g.seed), config);
            let mut csv = Csv::new(&[
                "eps",
                "eps_prime",
                "delta",
                "xi",
                "overlap_floor",
                "energy_constant",
                "sup_constant",
                "functions",
                "violations",
                "max_violation",
            ]);
            let mut certs = Vec::new();
            for t in &triples {
                let c = verify_product_wpi(&fps, t[0], t[1], t[2], functions, RngStream::new(g.seed, 0))?;
                csv.row(&cells![
                    c.eps,
                    c.eps_prime,
                    c.delta,
                    c.xi,
                    c.overlap_floor,
                    c.energy_constant,
                    c.sup_constant,
                    c.functions,
                    c.violations,
                    c.max_violation
                ]);
                s.check(
                    format!("no_violations_at_{}_{}_{}", t[0], t[1], t[2]),
                    c.verdict,
                    format!("{} violations, max gap {}", c.violations, c.max_violation),
                );
                certs.push(c);
            }
            s.results = serde_json::to_value(&certs)?;
            sink.emit(&s, Some(&csv))?;
            Ok(s.passed)
        }
        Command::GaussianGap { lower, upper, cells: n, functions, min_gap, expect_gap, gap_tol, out } => {
            let sink = Sink::new(out.out, g.force);
            sink.preflight(true)?;
            let rep = gaussian_convex_check(lower, upper, n, functions, RngStream::new(g.seed, 0))?;
            let config = json!({
                "lower": lower, "upper": upper, "cells": n, "functions": functions,
                "min_gap": min_gap, "expect_gap": expect_gap, "gap_tol": gap_tol,
            });
            let mut s = Summary::new("gaussian-gap", Some(g.seed), config);
            s.check("gap_lower_bound", rep.lambda1 >= min_gap, format!("lambda1 = {} vs {min_gap}", rep.lambda1));
            if let Some(e) = expect_gap {
                s.check(
                    "gap_matches_expected",
                    (rep.lambda1 - e).abs() <= gap_tol,
                    format!("lambda1 = {} vs {e} +- {gap_tol}", rep.lambda1),
                );
            }
            s.check(
                "log_sobolev",
                rep.lsi_violations == 0,
                format!("{} violations, max gap {}", rep.lsi_violations, rep.lsi_max_gap),
            );
            let mut csv = Csv::new(&["lower", "upper", "cells", "mass", "lambda1", "pi_constant", "lsi_max_gap"]);
            csv.row(&cells![rep.lower, rep.upper, rep.cells, rep.mass, rep.lambda1, rep.pi_constant, rep.lsi_max_gap]);
            s.results = serde_json::to_value(&rep)?;
            sink.emit(&s, Some(&csv))?;
            Ok(s.passed)
        }
        Command::PropertySuite { cases, level, var, out } => {
            let sink = Sink::new(out.out, g.force);
            sink.preflight(true)?;
            let prm = params(&var)?;
            let config = json!({ "cases": cases, "N": level, "p": var.p, "kappa": var.kappa });
            let mut s = Summary::new("property-suite", Some(g.seed), config);
            let root = RngStream::new(g.seed, 0);
            let per_case: Vec<Vec<(f64, bool)>> = (0..cases)
                .into_par_iter()
                .map(|k| property_case(level, prm, &root.substream(PHASE_PROPERTY, k)))
                .collect::<Result<_>>()?;
            let mut csv = Csv::new(&["property", "cases", "violations", "max_residual"]);
            let mut rows = Vec::new();
            for (i, name) in PROPERTIES.iter().enumerate() {
                let violations = per_case.iter().filter(|c| !c[i].1).count();
                let worst = per_case.iter().map(|c| c[i].0).fold(f64::NEG_INFINITY, f64::max);
                csv.row(&cells![name, cases, violations, worst]);
                s.check(*name, violations == 0, format!("{violations} violations, max residual {worst}"));
                rows.push(json!({ "property": name, "violations": violations, "max_residual": worst }));
            }
            s.results = json!(rows);
            sink.emit(&s, Some(&csv))?;
            Ok(s.passed)
        }
    }
}

fn load_domain(file: &PathBuf) -> Result<roughlab::domains::DomainSpec> {
    let text = std::fs::read_to_string(file).with_context(|| format!("reading domain file {}", file.display()))?;
    let base = file.parent().unwrap_or(Path::new("."));
    Ok(DomainBlock::parse(&text)?.resolve(base)?)
}

fn two_rectangles() -> Result<FiniteProductSpace> {
    Ok(FiniteProductSpace::grid_union(10, 10, &[(0, 5, 0, 5), (3, 9, 3, 9)])?)
}

const PROPERTIES: [&str; 7] = [
    "chen_identity",
    "pruned_dp_equals_naive",
    "cross_bound_cm",
    "cross_bound_mixed",
    "outer_product_bound",
    "dyadic_domination",
    "ball_inclusion",
];

/// `(a(t_j) - a(t_i)) (b(t_j) - b(t_i))` for every coordinate pair, in
/// Chen form.
fn outer_table(w: &DiscretePath, z: &DiscretePath) -> Result<TwoParamTable> {
    let mut comps = Vec::new();
    for a in 0..w.dim() {
        let wa = w.coordinate_values(a);
        for b in 0..z.dim() {
            let zb = z.coordinate_values(b);
            let end: Vec<f64> = wa.iter().zip(&zb).map(|(x, y)| x * y).collect();
            let start = end.iter().map(|x| -x).collect();
            comps.push(TableComponent::new(end, start, vec![(wa.clone(), zb.clone()), (zb, wa.clone())])?);
        }
    }
    Ok(TwoParamTable::new(w.level(), comps)?)
}

/// One random case of every property: `(residual, holds)` in
/// [`PROPERTIES`] order. Residuals are signed gaps where an inequality is
/// checked (non-positive when it holds).
fn property_case(level: u32, prm: VarParams, stream: &RngStream) -> Result<Vec<(f64, bool)>> {
    let slack = 1e-9;
    let scale = |k: u64| 10f64.powi((k % 4) as i32 - 2);
    let w = sample_brownian(2, level, &stream.substream(0, 0))?.scale(scale(stream.index));
    let h = sample_brownian(2, level, &stream.substream(0, 1))?.scale(scale(stream.index / 4));
    let p = prm.p();
    let half = prm.half_p();

    let l = lift(&w);
    let n = w.num_points();
    let mut chen = 0.0f64;
    for s in (0..n).step_by(3) {
        for t in (s..n).step_by(5) {
            for u in (t..n).step_by(7) {
                let (su, st, tu) = (l.level2(s, u)?, l.level2(s, t)?, l.level2(t, u)?);
                let (x, y) = (l.level1(s, t)?, l.level1(t, u)?);
                for i in 0..2 {
                    for j in 0..2 {
                        chen = chen.max((su[i * 2 + j] - st[i * 2 + j] - tu[i * 2 + j] - x[i] * y[j]).abs());
                    }
                }
            }
        }
    }

    let table = l.level2_table();
    let mut dp_gap = 0.0f64;
    for c in 0..table.num_components() {
        dp_gap = dp_gap.max((qvar(&table, c, half)? - qvar_naive(&table, c, half)?).abs());
    }

    let c = cross(&w, &h)?.norm(half)?;
    let (pw, ph) = (pvar_norm(&w, p)?, pvar_norm(&h, p)?);
    let cm_gap = c - pw * h.cm_norm();
    let mixed_gap = c - (w.cm_norm() + pw) * ph;
    let outer_gap = max_qvar(&outer_table(&w, &h)?, half)? - pw * ph;
    let dyadic_gap = dyadic_norm(&h, prm) - dyadic_domination_constant(prm) * h.cm_norm() * (1.0 + 1e-12);

    let eps = 0.1 + 2.0 * (stream.index % 10) as f64 / 10.0;
    let noisy = h.add(&w.scale(1e-2))?;
    let radius = eps / (3.0 + ph);
    let inclusion = !in_b(&noisy, &h, radius, prm)? || in_o(&noisy, &h, eps, prm)?;
    let translation = in_b(&noisy, &h, radius, prm)? == in_u(&noisy.sub(&h)?, &h, radius, prm)?;

    Ok(vec![
        (chen, chen < 1e-10),
        (dp_gap, dp_gap == 0.0),
        (cm_gap, cm_gap <= slack),
        (mixed_gap, mixed_gap <= slack),
        (outer_gap, outer_gap <= slack),
        (dyadic_gap, dyadic_gap <= 0.0),
        (if inclusion && translation { 0.0 } else { 1.0 }, inclusion && translation),
    ])
}
