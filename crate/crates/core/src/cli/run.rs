use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use super::{Command, ExperimentConfig};
use crate::densities::{f_of_t, hcr_bound, hcr_toy_check, j_of_t, jensen_lower_bound, DensityKind};
use crate::ensemble::{
    area_law_scan_2d, map_realizations, projection_decay_scan, run_estimators, shift_decay_scan,
    splitting_scan, variance_scan, EnsembleStats, Estimator, Realization,
};
use crate::entropy::Side;
use crate::error::{Error, Result};
use crate::resolvent::{
    decoupled_resolvent_check, fractional_moment_decay, fractional_moment_scan,
    fractional_moment_shift_scan, rank_one_shift_identity_check, weyl_factorization_residual,
    weyl_solutions,
};

/// What a command produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub outputs: Vec<PathBuf>,
    pub summary: Value,
    pub failures: usize,
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// Writes `path` through a temporary file in the same directory.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_csv(dir: &Path, name: &str, header: &str, rows: &[Vec<String>]) -> Result<PathBuf> {
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let path = dir.join(name);
    write_atomic(&path, &text)?;
    Ok(path)
}

fn stats_json(s: &EnsembleStats) -> Value {
    json!({
        "n": s.n,
        "mean": s.mean,
        "variance": s.variance,
        "stderr_mean": s.stderr_mean,
        "mean_ci": [s.mean_ci.0, s.mean_ci.1],
        "variance_ci": [s.variance_ci.0, s.variance_ci.1],
        "samples_digest": s.samples_digest,
    })
}

fn has_density(cfg: &ExperimentConfig) -> bool {
    !matches!(cfg.ensemble.density.kind, DensityKind::PointMass { .. })
}

pub fn execute(cfg: &ExperimentConfig) -> Result<RunReport> {
    fs::create_dir_all(&cfg.output_dir)?;
    let n = cfg.ensemble.realizations;
    let report = |outputs, summary, survived: usize| RunReport {
        outputs,
        summary,
        failures: n.saturating_sub(survived),
    };
    let dir = cfg.output_dir.as_path();
    match cfg.command {
        Command::VarianceScan => {
            let scan = variance_scan(&cfg.ensemble, &cfg.m_list)?;
            let mut bound = Value::Null;
            let mut a_bound = f64::NAN;
            if has_density(cfg) && !cfg.t_list.is_empty() {
                let shift = shift_decay_scan(&cfg.ensemble, &cfg.t_list)?;
                let b = hcr_bound(
                    scan.s_minus.mean,
                    &cfg.ensemble.density,
                    &cfg.t_list,
                    Some(&shift.eps),
                )?;
                a_bound = b.a;
                bound = json!({ "t0": b.t0, "F": b.f_value, "A": b.a, "eps": shift.eps });
            }
            let two_var = scan.two_var_s_minus();
            let rows: Vec<Vec<String>> = scan
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.m.to_string(),
                        r.l.to_string(),
                        r.stats.n.to_string(),
                        num(r.stats.mean),
                        num(r.stats.variance),
                        num(r.stats.variance_ci.0),
                        num(r.stats.variance_ci.1),
                        num(two_var),
                        num(a_bound),
                    ]
                })
                .collect();
            let path = write_csv(
                dir,
                "variance_scan.csv",
                "M,L,n,mean_S,var_S,var_S_ci_lo,var_S_ci_hi,two_var_Sminus,A_bound",
                &rows,
            )?;
            let ci = scan.two_var_s_minus_ci();
            let summary = json!({
                "s_minus": stats_json(&scan.s_minus),
                "s_plus": stats_json(&scan.s_plus),
                "two_var_s_minus_ci": [ci.0, ci.1],
                "plateau_onset_m": scan.plateau_onset(),
                "hcr_bound": bound,
            });
            Ok(report(vec![path], summary, scan.s_minus.n))
        }
        Command::ShiftDecay => {
            let scan = shift_decay_scan(&cfg.ensemble, &cfg.t_list)?;
            let rows: Vec<Vec<String>> = scan
                .t_list
                .iter()
                .zip(&scan.rows)
                .zip(&scan.eps)
                .map(|((t, r), e)| {
                    vec![
                        num(*t),
                        r.n.to_string(),
                        num(r.mean),
                        num(r.mean_ci.0),
                        num(r.mean_ci.1),
                        num(*e),
                    ]
                })
                .collect();
            let path = write_csv(
                dir,
                "shift_decay.csv",
                "t,n,mean_St,ci_lo,ci_hi,eps_t",
                &rows,
            )?;
            let survived = scan.rows.iter().map(|r| r.n).min().unwrap_or(n);
            let summary = json!({
                "baseline": stats_json(&scan.baseline),
                "loglog_slope": scan.fit.slope,
                "loglog_r_squared": scan.fit.r_squared,
            });
            Ok(report(vec![path], summary, survived))
        }
        Command::HcrBound => {
            let (mean, grid, eps, survived) = match cfg.mean_s_minus {
                Some(m) => (m, cfg.t_grid.clone(), None, n),
                None => {
                    let scan = shift_decay_scan(&cfg.ensemble, &cfg.t_list)?;
                    let survived = scan.rows.iter().map(|r| r.n).min().unwrap_or(n);
                    (
                        scan.baseline.mean,
                        cfg.t_list.clone(),
                        Some(scan.eps),
                        survived,
                    )
                }
            };
            let b = hcr_bound(mean, &cfg.ensemble.density, &grid, eps.as_deref())?;
            let rows: Vec<Vec<String>> = b
                .curve
                .iter()
                .map(|p| {
                    vec![
                        num(p.t),
                        num(p.f_value.unwrap_or(f64::NAN)),
                        num(p.eps),
                        num(p.a.unwrap_or(f64::NAN)),
                    ]
                })
                .collect();
            let path = write_csv(dir, "hcr_bound.csv", "t,F,eps,A", &rows)?;
            let summary = json!({
                "mean_s_minus": mean,
                "t0": b.t0,
                "F_t0": b.f_value,
                "A": b.a,
                "degenerate": b.degenerate,
                "eps_measured": eps.is_some(),
            });
            Ok(report(vec![path], summary, survived))
        }
        Command::Splitting => {
            let scan = splitting_scan(&cfg.ensemble, &cfg.m_list)?;
            let rows: Vec<Vec<String>> = scan
                .iter()
                .map(|r| {
                    vec![
                        r.m.to_string(),
                        r.stats.n.to_string(),
                        num(r.median_abs),
                        num(r.stats.mean),
                        num(r.stats.mean_ci.0),
                        num(r.stats.mean_ci.1),
                    ]
                })
                .collect();
            let path = write_csv(
                dir,
                "splitting.csv",
                "M,n,median_abs_residual,mean_residual,ci_lo,ci_hi",
                &rows,
            )?;
            let survived = scan.first().map_or(n, |r| r.stats.n);
            Ok(report(vec![path], json!({}), survived))
        }
        Command::ProjectionDecay => {
            let scan = projection_decay_scan(&cfg.ensemble, cfg.r_max)?;
            let rows: Vec<Vec<String>> = scan
                .rows
                .iter()
                .map(|(r, s)| {
                    vec![
                        r.to_string(),
                        s.n.to_string(),
                        num(s.mean),
                        num(s.mean_ci.0),
                        num(s.mean_ci.1),
                    ]
                })
                .collect();
            let path = write_csv(
                dir,
                "projection_decay.csv",
                "r,n,mean_abs_P,ci_lo,ci_hi",
                &rows,
            )?;
            let mut summary = json!({
                "gamma": scan.fit.rate,
                "r_squared": scan.fit.r_squared,
            });
            if cfg.ensemble.geometry.dimension() == 1 {
                let extra = run_estimators(
                    &cfg.ensemble,
                    &[
                        Estimator::EntropyBoundRhs { alpha: cfg.alpha },
                        Estimator::CutEntropy {
                            position: 0,
                            side: Side::Right,
                        },
                    ],
                )?;
                summary["entropy_bound_rhs"] = stats_json(&extra[0]);
                summary["s_minus"] = stats_json(&extra[1]);
            }
            let survived = scan.rows.first().map_or(n, |(_, s)| s.n);
            Ok(report(vec![path], summary, survived))
        }
        Command::ResolventCheck => resolvent_check(cfg),
        Command::FractionalMoments => {
            let t = cfg.ensemble.shift_t;
            let base = cfg.ensemble.with_shift(0.0);
            let stats = fractional_moment_scan(&base, cfg.s, cfg.z, &cfg.pairs, t)?;
            let rows: Vec<Vec<String>> = cfg
                .pairs
                .iter()
                .zip(&stats)
                .map(|((x, y), s)| {
                    vec![
                        x.to_string(),
                        y.to_string(),
                        s.n.to_string(),
                        num(s.mean),
                        num(s.mean_ci.0),
                        num(s.mean_ci.1),
                    ]
                })
                .collect();
            let mut outputs = vec![write_csv(
                dir,
                "fractional_moments.csv",
                "x,y,n,mean,ci_lo,ci_hi",
                &rows,
            )?];
            let decay = fractional_moment_decay(&stats, &cfg.pairs, cfg.s).ok();
            let mut summary = json!({
                "decay_gamma": decay.map(|d| d.rate),
                "decay_r_squared": decay.map(|d| d.r_squared),
            });
            let shifts: Vec<f64> = cfg
                .t_list
                .iter()
                .copied()
                .filter(|&t| t > cfg.ensemble.fermi_energy)
                .collect();
            if shifts.len() >= 2 {
                let scan = fractional_moment_shift_scan(&base, cfg.s, cfg.z, &shifts)?;
                let rows: Vec<Vec<String>> = scan
                    .t_list
                    .iter()
                    .zip(&scan.rows)
                    .map(|(t, s)| {
                        vec![
                            num(*t),
                            s.n.to_string(),
                            num(s.mean),
                            num(s.mean_ci.0),
                            num(s.mean_ci.1),
                        ]
                    })
                    .collect();
                outputs.push(write_csv(
                    dir,
                    "fractional_shift.csv",
                    "t,n,mean,ci_lo,ci_hi",
                    &rows,
                )?);
                summary["shift_loglog_slope"] = json!(scan.fit.slope);
                summary["shift_loglog_r_squared"] = json!(scan.fit.r_squared);
            }
            let survived = stats.first().map_or(n, |s| s.n);
            Ok(report(outputs, summary, survived))
        }
        Command::AreaLaw2d => {
            let scan = area_law_scan_2d(&cfg.ensemble, &cfg.m_list)?;
            let rows: Vec<Vec<String>> = scan
                .iter()
                .map(|r| {
                    vec![
                        r.m.to_string(),
                        r.l.to_string(),
                        r.stats.n.to_string(),
                        num(r.stats.mean),
                        num(r.stats.mean_ci.0),
                        num(r.stats.mean_ci.1),
                        num(r.stats.variance),
                        num(r.stats.variance_ci.0),
                        num(r.stats.variance_ci.1),
                    ]
                })
                .collect();
            let path = write_csv(
                dir,
                "area_law_2d.csv",
                "M,L,n,mean_S_per_L,ci_lo,ci_hi,var_S_per_L,var_ci_lo,var_ci_hi",
                &rows,
            )?;
            let survived = scan.first().map_or(n, |r| r.stats.n);
            Ok(report(vec![path], json!({}), survived))
        }
        Command::DensityCheck => density_check(cfg),
    }
}

fn resolvent_check(cfg: &ExperimentConfig) -> Result<RunReport> {
    let g = cfg.ensemble.geometry;
    if g.dimension() != 1 {
        return Err(Error::Config("resolvent-check needs dimension 1".into()));
    }
    let half = g.half_width() as i64;
    if half < 4 {
        return Err(Error::Config(
            "resolvent-check needs half_width >= 4".into(),
        ));
    }
    let quarter = half / 4;
    let xs: Vec<i64> = {
        let mut v = vec![0, 1, 2, (quarter / 2).max(1), quarter];
        v.sort_unstable();
        v.dedup();
        v
    };
    let z = cfg.z;
    let t = cfg.rank_one_t;
    let run = map_realizations(&cfg.ensemble, |ens, index| {
        let r = Realization::build(ens, index, false)?;
        let h = &r.hamiltonian;
        let mut rank_one = 0.0f64;
        for &x in &xs {
            let sx = g.axis_site(x).unwrap();
            let sy = g.axis_site(-x).unwrap();
            rank_one = rank_one.max(rank_one_shift_identity_check(h, t, z, sx, sy)?.relative_gap());
        }
        let weyl = weyl_solutions(h, z)?;
        let mut weyl_res = 0.0f64;
        for &x in &xs {
            for &y in &xs {
                weyl_res = weyl_res.max(weyl_factorization_residual(h, &weyl, x, -y)?);
            }
        }
        let recurrence = weyl.recurrence_residual(h);
        let mut plus = 0.0f64;
        let mut minus = 0.0f64;
        for &x in xs.iter().filter(|&&x| x >= 1) {
            let d = decoupled_resolvent_check(h, z, x, -x)?;
            plus = plus.max(d.via_plus);
            minus = minus.max(d.via_minus);
        }
        Ok([rank_one, weyl_res, recurrence, plus, minus])
    })?;
    let rows: Vec<Vec<String>> = run
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut row = vec![i.to_string()];
            row.extend(v.iter().map(|x| num(*x)));
            row
        })
        .collect();
    let path = write_csv(
        &cfg.output_dir,
        "resolvent_check.csv",
        "realization,rank_one_rel_gap,weyl_residual,weyl_recurrence,decoupling_plus,decoupling_minus",
        &rows,
    )?;
    let worst = |k: usize| run.values.iter().map(|v| v[k]).fold(0.0, f64::max);
    let summary = json!({
        "max_rank_one_rel_gap": worst(0),
        "max_weyl_residual": worst(1),
        "max_weyl_recurrence": worst(2),
        "max_decoupling_plus": worst(3),
        "max_decoupling_minus": worst(4),
    });
    Ok(RunReport {
        outputs: vec![path],
        summary,
        failures: run.failures,
    })
}

fn density_check(cfg: &ExperimentConfig) -> Result<RunReport> {
    let model = &cfg.ensemble.density;
    if !has_density(cfg) {
        return Err(Error::Config(
            "density-check needs a density, not a point mass".into(),
        ));
    }
    let mut rows = Vec::with_capacity(cfg.t_grid.len());
    for (k, &t) in cfg.t_grid.iter().enumerate() {
        let f = f_of_t(model, t)?;
        let j = j_of_t(model, t)?;
        let jensen = jensen_lower_bound(model, t).unwrap_or(f64::INFINITY);
        let seed = crate::ensemble::stats::derive_seed(cfg.ensemble.master_seed, 0xD5 + k as u64);
        let toy = hcr_toy_check(model, t, cfg.hcr_samples, seed)?;
        rows.push(vec![
            num(t),
            num(f),
            num(j),
            num(jensen),
            num(toy.lhs_variance),
            num(toy.rhs_bound),
            num(toy.stderr),
            (toy.holds as u8).to_string(),
        ]);
    }
    let path = write_csv(
        &cfg.output_dir,
        "density_check.csv",
        "t,F,J,jensen_bound,toy_lhs,toy_rhs,toy_stderr,toy_holds",
        &rows,
    )?;
    let summary = json!({
        "density": model.name(),
        "normalization": model.normalization()?,
        "kappa": model.kappa,
        "kappa_moment": model.kappa_moment()?,
    });
    Ok(RunReport {
        outputs: vec![path],
        summary,
        failures: 0,
    })
}

fn unix_seconds(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Writes `<command>.manifest.json` next to the CSV files.
pub fn write_manifest(
    cfg: &ExperimentConfig,
    report: &RunReport,
    started: SystemTime,
) -> Result<PathBuf> {
    let manifest = json!({
        "artifact": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.name(),
        "config": cfg.values,
        "master_seed": cfg.ensemble.master_seed,
        "started_unix": unix_seconds(started),
        "finished_unix": unix_seconds(SystemTime::now()),
        "outputs": report
            .outputs
            .iter()
            .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect::<Vec<_>>(),
        "failures": report.failures,
        "summary": report.summary,
    });
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Numerical(format!("cannot encode manifest: {e}")))?;
    let _ = writeln!(text);
    let path = cfg
        .output_dir
        .join(format!("{}.manifest.json", cfg.command.name()));
    write_atomic(&path, &text)?;
    Ok(path)
}
