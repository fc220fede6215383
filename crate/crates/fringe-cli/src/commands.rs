use anyhow::{anyhow, bail, Result};

use fringe::circuit::{Interferometer, NoiseConfig, Probe};
use fringe::estimate::{run_trial, GridSpec, TrialConfig};
use fringe::experiment::{
    self, fringe_study, hom_study, lookup, noise_study, DesignOpts, FringeStudyConfig,
    HomStudyConfig, NoiseStudyConfig, REFERENCE_THETA, REGISTRY,
};
use fringe::fisher;
use fringe::fock::Response;

use crate::config::Config;
use crate::output::{num, nums, OutCtx};

/// A run unit that completed with an error; the command carries on and
/// reports these at the end.
#[derive(Debug)]
pub struct Failure {
    pub unit: String,
    pub message: String,
}

fn fail(list: &mut Vec<Failure>, unit: impl Into<String>, err: impl std::fmt::Display) {
    list.push(Failure {
        unit: unit.into(),
        message: err.to_string(),
    });
}

fn triplet_phases(name: &str) -> Result<[f64; 3]> {
    lookup(name).map(|p| p.phases).ok_or_else(|| {
        let known: Vec<&str> = REGISTRY.iter().map(|p| p.name).collect();
        anyhow!("unknown probe point {name:?}; known: {}", known.join(", "))
    })
}

fn noise_from(cfg: &Config) -> Result<NoiseConfig> {
    let noise = NoiseConfig {
        visibility: cfg.f64("noise", "visibility", 1.0)?,
        phase_drift: cfg.f64("noise", "drift", 0.0)?,
    };
    noise.validate()?;
    Ok(noise)
}

fn probe_from(cfg: &Config, default_kind: &str) -> Result<Probe> {
    let kind = cfg.get("probe", "kind").unwrap_or(default_kind).to_string();
    let probe = match kind.as_str() {
        "single" => Probe::Single {
            input: cfg.usize("probe", "input", 0)?,
        },
        "pair" => Probe::Pair {
            inputs: [0, 1],
            overlap: cfg.f64("probe", "overlap", 1.0)?,
        },
        other => bail!("unknown probe kind {other:?} (single or pair)"),
    };
    probe.validate(4)?;
    Ok(probe)
}

fn probe_label(probe: Probe) -> &'static str {
    match probe {
        Probe::Single { .. } => "single",
        Probe::Pair { .. } => "pair",
    }
}

fn design_opts_from(cfg: &Config, defaults: DesignOpts) -> Result<DesignOpts> {
    let audit = cfg.bool("optimizer", "audit", defaults.audit_shots > 0.0)?;
    let audit_shots = if audit {
        cfg.f64(
            "optimizer",
            "audit_shots",
            if defaults.audit_shots > 0.0 {
                defaults.audit_shots
            } else {
                500.0
            },
        )?
    } else {
        0.0
    };
    Ok(DesignOpts {
        max_fev: cfg.usize("optimizer", "max_fev", defaults.max_fev)?,
        restarts: cfg.usize("optimizer", "restarts", defaults.restarts)?,
        audit_shots,
        grid_points: cfg.usize("grid", "points", defaults.grid_points)?,
        halfwidth: cfg.f64("grid", "halfwidth", defaults.halfwidth)?,
    })
}

/// `fisher`: information content of the registry settings, analytic and
/// (unless suppressed) estimated from finite counts.
pub fn run_fisher(cfg: &Config, ctx: &OutCtx, analytic: bool) -> Result<Vec<Failure>> {
    let names: Vec<String> = cfg.list("fisher", "triplets").unwrap_or_else(|| {
        REGISTRY
            .iter()
            .filter(|p| p.name.starts_with('s'))
            .map(|p| p.name.to_string())
            .collect()
    });
    let overlap = cfg.f64("probe", "overlap", 1.0)?;
    let shots = cfg.u64("sampling", "shots", 5_000)?;
    let reps = cfg.usize("sampling", "reps", 10)?;
    let noise = noise_from(cfg)?;
    let dev = Interferometer::four_mode();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (ui, name) in names.iter().enumerate() {
        let phases = match triplet_phases(name) {
            Ok(p) => p,
            Err(e) => {
                fail(&mut failures, name.clone(), e);
                continue;
            }
        };
        let probes = [
            Probe::Single { input: 0 },
            Probe::Pair {
                inputs: [0, 1],
                overlap,
            },
        ];
        for (pi, &probe) in probes.iter().enumerate() {
            let unit = format!("{name}/{}", probe_label(probe));
            if let Err(e) = probe.validate(4) {
                fail(&mut failures, unit, e);
                continue;
            }
            let resp = Response::new(&dev, probe, noise);
            let rule = experiment::rule_for(probe);
            let model = |x: &[f64]| resp.probs(x, &[0.0; 3]);
            let f = fisher::fim(&model, &phases, &rule);
            let Some(trinv) = fisher::trace_inverse(&f) else {
                fail(&mut failures, unit, "singular information matrix");
                continue;
            };
            let ev = fisher::sym_eigenvalues(&f);

            let (mean_s, std_s, ok_reps) = if analytic {
                (String::new(), String::new(), String::new())
            } else {
                let base = (ui * probes.len() + pi) as u64 * 1_000_000;
                let samples: Vec<f64> = (0..reps)
                    .filter_map(|r| {
                        let fs = fisher::fim_sampled(
                            &model,
                            &phases,
                            &rule,
                            shots,
                            ctx.seed,
                            base + (r as u64) * 100,
                        );
                        fisher::trace_inverse(&fs)
                    })
                    .collect();
                if samples.is_empty() {
                    fail(
                        &mut failures,
                        unit,
                        "all sampled information matrices were singular",
                    );
                    continue;
                }
                let n = samples.len() as f64;
                let mean = samples.iter().sum::<f64>() / n;
                let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                (num(mean), num(var.sqrt()), samples.len().to_string())
            };

            rows.push(vec![
                name.clone(),
                probe_label(probe).to_string(),
                num(overlap),
                num(trinv),
                num(ev[0]),
                num(ev[1]),
                num(ev[2]),
                mean_s,
                std_s,
                ok_reps,
            ]);
        }
    }

    ctx.csv(
        "fisher.csv",
        &[
            "triplet",
            "probe",
            "overlap",
            "trinv",
            "eig_min",
            "eig_mid",
            "eig_max",
            "trinv_sampled_mean",
            "trinv_sampled_std",
            "sampled_reps",
        ],
        &rows,
    )?;
    Ok(failures)
}

/// `optimize`: search for the measurement setting minimizing
/// `Tr[F^-1]` at one probe point and report every candidate.
pub fn run_optimize(cfg: &Config, ctx: &OutCtx) -> Result<Vec<Failure>> {
    let name = cfg.get("optimize", "triplet").unwrap_or("a1").to_string();
    let mut failures = Vec::new();
    let phases = match triplet_phases(&name) {
        Ok(p) => p,
        Err(e) => {
            fail(&mut failures, name.clone(), e);
            return Ok(failures);
        }
    };
    let probe = probe_from(cfg, "single")?;
    let noise = noise_from(cfg)?;
    let opts = design_opts_from(
        cfg,
        DesignOpts {
            audit_shots: cfg.u64("sampling", "shots", 500)? as f64,
            ..DesignOpts::default()
        },
    )?;
    let dev = Interferometer::four_mode();
    let resp = Response::new(&dev, probe, noise);
    let rule = experiment::rule_for(probe);

    match experiment::optimize_design(&resp, &phases, &rule, &opts, ctx.seed, 0) {
        Err(e) => fail(&mut failures, name.clone(), e),
        Ok(out) => {
            let rows: Vec<Vec<String>> = out
                .candidates
                .iter()
                .enumerate()
                .map(|(rank, c)| {
                    let audit = match c.audit_pass {
                        None => String::new(),
                        Some(true) => "pass".to_string(),
                        Some(false) => "fail".to_string(),
                    };
                    let chosen = (c.theta == out.theta) && (c.cost == out.cost);
                    vec![
                        rank.to_string(),
                        num(c.cost),
                        audit,
                        chosen.to_string(),
                        num(c.theta[0]),
                        num(c.theta[1]),
                        num(c.theta[2]),
                    ]
                })
                .collect();
            ctx.csv(
                "optimize.csv",
                &[
                    "rank", "cost", "audit", "chosen", "theta_1", "theta_2", "theta_3",
                ],
                &rows,
            )?;
            ctx.json(
                "optimize.json",
                serde_json::json!({
                    "triplet": name,
                    "probe": probe_label(probe),
                    "theta": out.theta,
                    "cost": out.cost,
                    "audited": out.audited,
                }),
            )?;
        }
    }
    Ok(failures)
}

/// `estimate`: Bayesian estimation studies. `kind` selects a single
/// posterior trial, the calibration-drift sweep, or the two-mode
/// reference study.
pub fn run_estimate(cfg: &Config, ctx: &OutCtx) -> Result<Vec<Failure>> {
    match cfg.get("study", "kind").unwrap_or("trial") {
        "trial" => estimate_trial(cfg, ctx),
        "noise" => estimate_noise(cfg, ctx),
        "reference" => estimate_reference(cfg, ctx),
        other => bail!("unknown study kind {other:?} (trial, noise, or reference)"),
    }
}

fn estimate_trial(cfg: &Config, ctx: &OutCtx) -> Result<Vec<Failure>> {
    let names = cfg
        .list("study", "triplets")
        .unwrap_or_else(|| vec!["a1".to_string()]);
    let theta = cfg.f64_list("design", "theta", &REFERENCE_THETA)?;
    if theta.len() != 3 {
        bail!("[design] theta needs exactly 3 entries");
    }
    let shots = cfg.u64("sampling", "shots", 500)?;
    let batches = cfg.usize("sampling", "batches", 5)?;
    let points = cfg.usize("grid", "points", 120)?;
    let halfwidth = cfg.f64("grid", "halfwidth", 1.0)?;
    let noise = noise_from(cfg)?;
    let probe = probe_from(cfg, "single")?;
    let dev = Interferometer::four_mode();
    let data = Response::new(&dev, probe, noise);
    let model = Response::new(&dev, probe, NoiseConfig::default());

    let mut failures = Vec::new();
    for (ui, name) in names.iter().enumerate() {
        let truth = match triplet_phases(name) {
            Ok(p) => p.to_vec(),
            Err(e) => {
                fail(&mut failures, name.clone(), e);
                continue;
            }
        };
        let trial_cfg = TrialConfig {
            shots,
            batches,
            theta: theta.clone(),
            grid: GridSpec::windowed(points, &truth, halfwidth),
        };
        match run_trial(&data, &model, &truth, &trial_cfg, ctx.seed, ui as u64) {
            Err(e) => fail(&mut failures, name.clone(), e),
            Ok(res) => {
                let entropy_rows: Vec<Vec<String>> = res
                    .entropy
                    .iter()
                    .enumerate()
                    .map(|(b, &h)| vec![b.to_string(), num(h)])
                    .collect();
                ctx.csv(
                    &format!("entropy_{name}.csv"),
                    &["batch", "entropy"],
                    &entropy_rows,
                )?;
                ctx.json(
                    &format!("trial_{name}.json"),
                    serde_json::json!({
                        "triplet": name,
                        "probe": probe_label(probe),
                        "theta": theta,
                        "shots": shots,
                        "loss": res.loss,
                        "means": res.estimate.means,
                        "resultants": res.estimate.resultants,
                        "degenerate": res.estimate.degenerate,
                        "updated": res.updated,
                        "counts": res.counts,
                    }),
                )?;
            }
        }
    }
    Ok(failures)
}

fn estimate_noise(cfg: &Config, ctx: &OutCtx) -> Result<Vec<Failure>> {
    let mut study = NoiseStudyConfig::default();
    if let Some(name) = cfg.get("study", "triplet") {
        study.truth = triplet_phases(name)?;
    }
    study.drift_levels = cfg.f64_list("noise", "levels", &study.drift_levels)?;
    study.shots = cfg.u64("sampling", "shots", study.shots)?;
    study.reps = cfg.usize("sampling", "reps", study.reps)?;
    study.grid_points = cfg.usize("grid", "points", study.grid_points)?;
    study.halfwidth = cfg.f64("grid", "halfwidth", study.halfwidth)?;
    study.opt = design_opts_from(cfg, study.opt)?;
    // The audit should assume the study's own shot budget unless the
    // config pinned one explicitly.
    if study.opt.audit_shots > 0.0 && cfg.get("optimizer", "audit_shots").is_none() {
        study.opt.audit_shots = study.shots as f64;
    }

    let mut failures = Vec::new();
    match noise_study(&study, ctx.seed) {
        Err(e) => fail(&mut failures, "noise", e),
        Ok(out) => {
            let rows: Vec<Vec<String>> = out
                .rows
                .iter()
                .map(|r| {
                    nums(&[
                        r.drift,
                        r.peak_height,
                        r.offset_median,
                        r.null_loss,
                        r.var_loss,
                    ])
                })
                .collect();
            ctx.csv(
                "noise.csv",
                &[
                    "drift",
                    "peak_height",
                    "offset_median",
                    "null_loss",
                    "var_loss",
                ],
                &rows,
            )?;
            ctx.json(
                "noise.json",
                serde_json::json!({
                    "study": "noise",
                    "truth": study.truth,
                    "shots": study.shots,
                    "reps": study.reps,
                    "theta": out.theta,
                    "theta_cost": out.theta_cost,
                    "audited": out.audited,
                }),
            )?;
        }
    }
    Ok(failures)
}

fn estimate_reference(cfg: &Config, ctx: &OutCtx) -> Result<Vec<Failure>> {
    let mut study = FringeStudyConfig::default();
    study.visibilities = cfg.f64_list("noise", "visibilities", &study.visibilities)?;
    study.shots = cfg.u64("sampling", "shots", study.shots)?;
    study.reps = cfg.usize("sampling", "reps", study.reps)?;
    study.grid_points = cfg.usize("grid", "points", study.grid_points)?;
    study.halfwidth = cfg.f64("grid", "halfwidth", study.halfwidth)?;
    study.opt = design_opts_from(cfg, study.opt)?;

    let mut failures = Vec::new();
    match fringe_study(&study, ctx.seed) {
        Err(e) => fail(&mut failures, "reference", e),
        Ok(out) => {
            let rows: Vec<Vec<String>> = out
                .rows
                .iter()
                .map(|r| {
                    nums(&[
                        r.visibility,
                        r.phase,
                        r.theta,
                        r.cost,
                        r.null_loss,
                        r.opt_loss,
                    ])
                })
                .collect();
            ctx.csv(
                "reference.csv",
                &[
                    "visibility",
                    "phase",
                    "theta",
                    "cost",
                    "null_loss",
                    "opt_loss",
                ],
                &rows,
            )?;
            let summary: Vec<serde_json::Value> = out
                .summary
                .iter()
                .map(|s| {
                    serde_json::json!({
                        "visibility": s.visibility,
                        "mean_null": s.mean_null,
                        "mean_opt": s.mean_opt,
                    })
                })
                .collect();
            ctx.json(
                "reference.json",
                serde_json::json!({ "study": "reference", "summary": summary }),
            )?;
        }
    }
    Ok(failures)
}

/// `hom`: photon-distinguishability sweep on the pair probe.
pub fn run_hom(cfg: &Config, ctx: &OutCtx) -> Result<Vec<Failure>> {
    let mut study = HomStudyConfig::default();
    if let Some(name) = cfg.get("study", "triplet") {
        study.truth = triplet_phases(name)?;
    }
    study.overlaps = cfg.f64_list("probe", "overlaps", &study.overlaps)?;
    study.shots = cfg.u64("sampling", "shots", study.shots)?;
    study.reps = cfg.usize("sampling", "reps", study.reps)?;
    study.grid_points = cfg.usize("grid", "points", study.grid_points)?;
    study.halfwidth = cfg.f64("grid", "halfwidth", study.halfwidth)?;
    study.opt = design_opts_from(cfg, study.opt)?;
    if study.opt.audit_shots > 0.0 && cfg.get("optimizer", "audit_shots").is_none() {
        study.opt.audit_shots = study.shots as f64;
    }
    for &ov in &study.overlaps {
        if !(0.0..=1.0).contains(&ov) {
            bail!("overlap {ov} outside [0, 1]");
        }
    }

    let mut failures = Vec::new();
    match hom_study(&study, ctx.seed) {
        Err(e) => fail(&mut failures, "hom", e),
        Ok(out) => {
            let rows: Vec<Vec<String>> = out
                .rows
                .iter()
                .map(|r| {
                    let mut row = nums(&[r.overlap, r.bunching, r.null_loss, r.var_loss, r.cost]);
                    row.push(if r.audited { "true" } else { "false" }.to_string());
                    row.extend(nums(&r.theta));
                    row
                })
                .collect();
            ctx.csv(
                "hom.csv",
                &[
                    "overlap",
                    "bunching",
                    "null_loss",
                    "var_loss",
                    "cost",
                    "audited",
                    "theta_1",
                    "theta_2",
                    "theta_3",
                ],
                &rows,
            )?;
            let cc_rows: Vec<Vec<String>> = out
                .coincidence_reference
                .iter()
                .map(|&(ov, p)| nums(&[ov, p]))
                .collect();
            ctx.csv("hom_reference.csv", &["overlap", "coincidence"], &cc_rows)?;
            ctx.json(
                "hom.json",
                serde_json::json!({
                    "study": "hom",
                    "truth": study.truth,
                    "shots": study.shots,
                    "reps": study.reps,
                    "overlaps": study.overlaps,
                }),
            )?;
        }
    }
    Ok(failures)
}
