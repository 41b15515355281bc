//! Subcommand implementations. Each writes its outputs and the resolved
//! configuration (`effective_config.toml`) into the output directory.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use rand::Rng as _;

use hdmdc::ensemble::{combine_members, EnsembleOutcome};
use hdmdc::metrics::{jsd, shared_grid};
use hdmdc::stats::{derive_seed_str, quantile, rng_from_seed};
use hdmdc::sweep::best_index;
use hdmdc::timeseries::{extract_sequences, mean_encounter_period, resample};
use hdmdc::{
    bayesian_forecast, bootstrap_densities, evaluate_grid, frequentist_forecast, gen_duffing_run, gen_lti_run,
    load_model, load_run, nrmse, optimal_block_length, save_model, summarize_densities, BayesianConfig, ChannelSchema,
    DuffingSpec, LtiSystem, Matrix64, Model64, Run64, SplitManifest, SweepOptions, SweepResult, WaveSignal, WaveSpec,
};

use crate::config::{EnsembleMode, Extraction, JobConfig, Manifest, Role, RunEntry, SchemaEntry, SystemKind};

pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";

/// Runs loaded from a manifest, resampled and cut into sequences.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub schema: ChannelSchema,
    /// Mean encounter period.
    pub t_hat: f64,
    /// Step after resampling.
    pub dt: f64,
    pub training: Vec<Run64>,
    pub validation: Vec<Run64>,
    pub test: Vec<Run64>,
}

pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let manifest = Manifest::load(manifest_path)?;
    let schema = manifest.channel_schema()?;
    let ex = &manifest.extraction;
    let mut runs = HashMap::new();
    for entry in &manifest.runs {
        let run: Run64 = load_run(&entry.path, &schema).with_context(|| format!("loading run `{}`", entry.id))?;
        if runs.insert(entry.id.clone(), run.with_id(entry.id.clone())).is_some() {
            bail!("run id `{}` appears twice in {}", entry.id, manifest_path.display());
        }
    }
    let all: Vec<Run64> = manifest.runs.iter().map(|e| runs[&e.id].clone()).collect();
    let period_channel = ex.period_channel.clone().unwrap_or_else(|| schema.inputs[0].clone());
    let t_hat = mean_encounter_period(&all, &period_channel)?;
    let split = SplitManifest {
        training: manifest.ids(Role::Train),
        validation: manifest.ids(Role::Val),
        test: manifest.ids(Role::Test),
        sequence_length: ex.sequence_length.unwrap_or(ex.sequence_periods * t_hat),
        sequences_per_run: ex.sequences_per_run,
    };
    split.validate(runs.keys().map(String::as_str))?;
    let (resampled, dt): (HashMap<String, Run64>, f64) = if ex.resample {
        let runs = all
            .iter()
            .map(|r| Ok((r.id().to_owned(), resample(r, ex.steps_per_period, t_hat)?)))
            .collect::<Result<_>>()?;
        (runs, t_hat / ex.steps_per_period as f64)
    } else {
        let dt = all[0].dt();
        for r in &all {
            ensure!(
                ((r.dt() - dt) / dt).abs() <= 1e-9,
                "run `{}` has step {} but `{}` has {dt}; enable resampling",
                r.id(),
                r.dt(),
                all[0].id()
            );
        }
        (runs, dt)
    };
    let length = split.sequence_length;
    let cut = |ids: &[String]| -> Result<Vec<Run64>> {
        let mut out = Vec::new();
        for id in ids {
            out.extend(extract_sequences(&resampled[id], length, ex.sequences_per_run)?);
        }
        Ok(out)
    };
    Ok(Dataset {
        training: split.training.iter().map(|id| resampled[id].clone()).collect(),
        validation: cut(&split.validation)?,
        test: cut(&split.test)?,
        schema,
        t_hat,
        dt,
    })
}

fn write_echo(cfg: &JobConfig, out: &Path) -> Result<()> {
    let path = out.join(EFFECTIVE_CONFIG);
    fs::write(&path, cfg.to_toml()?).with_context(|| format!("writing {}", path.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

/// File-name-safe form of a run or sequence id.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes seeded synthetic runs and a manifest.
pub fn cmd_synth(cfg: &JobConfig) -> Result<()> {
    let out = cfg.out_dir()?;
    let s = &cfg.synth;
    ensure!(s.samples_per_period >= 8, "synth.samples_per_period must be at least 8");
    ensure!(s.train_runs > 0, "synth.train_runs must be positive");
    let dt = s.tm / s.samples_per_period as f64;
    let len = (s.run_periods * s.samples_per_period as f64).round() as usize;
    let roles = [
        (Role::Train, "train", s.train_runs),
        (Role::Val, "val", s.val_runs),
        (Role::Test, "test", s.test_runs),
    ];

    let (states, inputs) = match s.system {
        SystemKind::Duffing => (vec!["x".to_owned(), "v".to_owned()], vec!["u".to_owned()]),
        SystemKind::Lti => (vec!["x1".to_owned(), "x2".to_owned()], vec!["u1".to_owned()]),
    };
    let mut entries = Vec::new();
    for (role, prefix, count) in roles {
        for k in 0..count {
            let id = format!("{prefix}_{k:02}");
            let wave = WaveSignal::new(&WaveSpec {
                hs: s.hs,
                tm: s.tm,
                components: s.components,
                seed: derive_seed_str(cfg.seed, &format!("wave:{id}")),
            })?;
            let noise_seed = derive_seed_str(cfg.seed, &format!("noise:{id}"));
            let run = match s.system {
                SystemKind::Duffing => {
                    let spec = DuffingSpec {
                        stiffness: s.stiffness,
                        cubic: s.cubic,
                        damping: s.damping,
                        noise_std: s.noise_std,
                        ..DuffingSpec::default()
                    };
                    gen_duffing_run(&spec, |t| s.forcing_gain * wave.eval(t), len, dt, noise_seed)?
                }
                SystemKind::Lti => {
                    let sys = demo_lti(dt)?;
                    let forcing = Matrix64::from_vec(
                        len,
                        1,
                        wave.sample(len, dt).iter().map(|v| s.forcing_gain * v).collect(),
                    );
                    gen_lti_run(&sys, &forcing, len, dt, s.noise_std, noise_seed)?
                }
            };
            let file = format!("{id}.csv");
            run.write_csv(&out.join(&file))?;
            entries.push(RunEntry {
                id,
                path: PathBuf::from(file),
                role,
            });
        }
    }
    let manifest = Manifest {
        schema: SchemaEntry { states, inputs },
        extraction: Extraction {
            steps_per_period: s.steps_per_period,
            resample: s.resample,
            sequence_periods: s.sequence_periods,
            sequence_length: None,
            sequences_per_run: s.sequences_per_run,
            period_channel: None,
        },
        runs: entries,
    };
    fs::write(out.join("manifest.toml"), toml::to_string(&manifest)?)?;
    write_echo(cfg, out)
}

/// Lightly damped second-order system discretized with step `dt`.
fn demo_lti(dt: f64) -> Result<LtiSystem<f64>> {
    let (wn, zeta) = (3.74f64, 0.1f64);
    let a = Matrix64::from_rows(&[vec![1.0, dt], vec![-wn * wn * dt, 1.0 - 2.0 * zeta * wn * dt]]);
    let b = Matrix64::from_rows(&[vec![0.0], vec![dt]]);
    Ok(LtiSystem::full(a, b)?)
}

fn sweep_options(cfg: &JobConfig) -> Result<SweepOptions<f64>> {
    Ok(SweepOptions {
        metric: cfg.metric.nrmse()?,
        fit: cfg.model.fit_options(),
        warmup: None,
    })
}

/// Runs the grid and writes `sweep_result.csv`, `sweep_cells.csv` and `sweep_best.cfg`.
pub fn cmd_sweep(cfg: &JobConfig) -> Result<SweepResult<f64>> {
    let out = cfg.out_dir()?;
    let data = load_dataset(cfg.manifest_path()?)?;
    write_echo(cfg, out)?;
    ensure!(!data.validation.is_empty(), "the manifest lists no validation runs");
    ensure!(!data.training.is_empty(), "the manifest lists no training runs");
    let configs = hdmdc::enumerate(&cfg.sweep.grid(), data.t_hat)?;
    let result = evaluate_grid(
        &configs,
        &data.training,
        &data.validation,
        &data.schema,
        &sweep_options(cfg)?,
    )?;

    let mut w = csv_writer(&out.join("sweep_result.csv"))?;
    w.write_record([
        "l_tr_periods",
        "l_dx_periods",
        "l_du_periods",
        "lambda",
        "t_hat",
        "dt",
        "m",
        "s",
        "z",
        "mean_nrmse",
        "iqr_nrmse",
        "successes",
        "failures",
        "usable",
    ])?;
    for r in &result.records {
        let (a, b, c) = r.hyper.in_periods(data.t_hat);
        let disc = |f: fn(&hdmdc::regress::Discretization) -> usize| {
            r.disc.as_ref().map(f).map(|v| v.to_string()).unwrap_or_default()
        };
        w.write_record([
            a.to_string(),
            b.to_string(),
            c.to_string(),
            r.hyper.lambda.to_string(),
            data.t_hat.to_string(),
            data.dt.to_string(),
            disc(|d| d.m),
            disc(|d| d.s),
            disc(|d| d.z),
            r.mean.to_string(),
            r.iqr.to_string(),
            r.successes.to_string(),
            r.failures.to_string(),
            r.usable.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv_writer(&out.join("sweep_cells.csv"))?;
    w.write_record(["config", "training_id", "validation_id", "nrmse", "error"])?;
    for (c, r) in result.records.iter().enumerate() {
        for (t, tid) in result.training_ids.iter().enumerate() {
            for (v, vid) in result.validation_ids.iter().enumerate() {
                let (value, err) = match &r.cells[t * result.validation_ids.len() + v] {
                    Ok(x) => (x.to_string(), String::new()),
                    Err(e) => (String::new(), e.clone()),
                };
                w.write_record([c.to_string(), tid.clone(), vid.clone(), value, err])?;
            }
        }
    }
    w.flush()?;

    let failed: usize = result.records.iter().map(|r| r.failures).sum();
    if failed > 0 {
        log::warn!("{failed} sweep cells failed; see sweep_cells.csv");
    }
    let best = best_index(&result)?;
    let record = &result.records[best];
    let (l_tr, l_dx, l_du) = record.hyper.in_periods(data.t_hat);
    let mut best_cfg = cfg.clone();
    best_cfg.model.l_tr = l_tr;
    best_cfg.model.l_dx = l_dx;
    best_cfg.model.l_du = l_du;
    best_cfg.model.lambda = record.hyper.lambda;
    let disc = record.disc.context("best configuration has no discretization")?;
    let header = format!(
        "# best mean NRMSE {} (IQR {}); t_hat = {} s, dt = {} s, m = {}, s = {}, z = {}\n",
        record.mean, record.iqr, data.t_hat, data.dt, disc.m, disc.s, disc.z
    );
    fs::write(out.join("sweep_best.cfg"), header + &best_cfg.to_toml()?)?;
    Ok(result)
}

fn train_all(cfg: &JobConfig, data: &Dataset) -> Result<Vec<Model64>> {
    let hyper = cfg.model.hyper(data.t_hat)?;
    let opts = cfg.model.fit_options();
    data.training
        .iter()
        .map(|run| {
            Model64::train(run, &data.schema, &hyper, &opts).with_context(|| format!("training on `{}`", run.id()))
        })
        .collect()
}

/// Trains one model per training run and saves them.
pub fn cmd_fit(cfg: &JobConfig) -> Result<Vec<PathBuf>> {
    let out = cfg.out_dir()?;
    let data = load_dataset(cfg.manifest_path()?)?;
    write_echo(cfg, out)?;
    let models = train_all(cfg, &data)?;
    let mut w = csv_writer(&out.join("fit_report.csv"))?;
    w.write_record(["run_id", "file", "t_hat", "dt", "m", "s", "z", "lambda"])?;
    let mut paths = Vec::new();
    for m in &models {
        let file = format!("model_{}.hdmdc", file_stem(m.training_run_id()));
        let path = out.join(&file);
        save_model(m, &path)?;
        let d = m.dims();
        w.write_record([
            m.training_run_id().to_owned(),
            file,
            data.t_hat.to_string(),
            data.dt.to_string(),
            d.m.to_string(),
            d.s.to_string(),
            d.z.to_string(),
            m.hyper().lambda.to_string(),
        ])?;
        paths.push(path);
    }
    w.flush()?;
    Ok(paths)
}

/// Summary of one forecast sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRow {
    pub sequence_id: String,
    pub members: usize,
    pub failures: usize,
    pub nrmse: f64,
    pub member_nrmse: Vec<f64>,
}

/// Forecasts every test sequence in the configured mode.
pub fn cmd_forecast(cfg: &JobConfig) -> Result<Vec<ForecastRow>> {
    let out = cfg.out_dir()?;
    let data = load_dataset(cfg.manifest_path()?)?;
    write_echo(cfg, out)?;
    ensure!(!data.test.is_empty(), "the manifest lists no test runs");
    let metric = cfg.metric.nrmse()?;
    let ens = &cfg.ensemble;
    let band = ens.band_multiplier;

    let outcomes: Vec<EnsembleOutcome<f64>> = match ens.mode {
        EnsembleMode::Deterministic => {
            ensure!(!data.training.is_empty(), "the manifest lists no training runs");
            let pick = rng_from_seed(derive_seed_str(cfg.seed, "deterministic")).random_range(0..data.training.len());
            let model = Model64::train(
                &data.training[pick],
                &data.schema,
                &cfg.model.hyper(data.t_hat)?,
                &cfg.model.fit_options(),
            )?;
            data.test
                .iter()
                .map(|seq| {
                    let sf = model.forecast_sequence(seq, model.dims().warmup())?;
                    Ok(EnsembleOutcome {
                        forecast: combine_members(std::slice::from_ref(&sf.forecast), band)?,
                        members: vec![sf.forecast],
                        member_hyper: vec![*model.hyper()],
                        reference: sf.reference,
                        failures: Vec::new(),
                    })
                })
                .collect::<Result<_>>()?
        }
        EnsembleMode::Bayesian => {
            let prior = ens.prior.prior();
            data.test
                .iter()
                .map(|seq| {
                    let mut bc =
                        BayesianConfig::new(data.t_hat, derive_seed_str(cfg.seed, &format!("bayesian:{}", seq.id())));
                    bc.n_samples = ens.n_samples;
                    bc.random_offset = ens.random_offset;
                    bc.fit = cfg.model.fit_options();
                    bc.band_multiplier = band;
                    bayesian_forecast(&prior, &data.training, seq, &data.schema, &bc)
                        .with_context(|| format!("bayesian ensemble for `{}`", seq.id()))
                })
                .collect::<Result<_>>()?
        }
        EnsembleMode::Frequentist => {
            let models = if ens.model_files.is_empty() {
                train_all(cfg, &data)?
            } else {
                ens.model_files
                    .iter()
                    .map(|p| load_model(p).with_context(|| format!("loading model {}", p.display())))
                    .collect::<Result<_>>()?
            };
            data.test
                .iter()
                .map(|seq| {
                    frequentist_forecast(&models, seq, None, band)
                        .with_context(|| format!("frequentist ensemble for `{}`", seq.id()))
                })
                .collect::<Result<_>>()?
        }
    };

    let mode = match ens.mode {
        EnsembleMode::Deterministic => "deterministic",
        EnsembleMode::Bayesian => "bayesian",
        EnsembleMode::Frequentist => "frequentist",
    };
    let mut rows = Vec::new();
    let mut report = csv_writer(&out.join("forecast_report.csv"))?;
    report.write_record(["sequence_id", "mode", "members", "failures", "k", "nrmse"])?;
    let mut members_csv = csv_writer(&out.join("forecast_members.csv"))?;
    members_csv.write_record(["sequence_id", "member", "member_id", "nrmse"])?;
    for (seq, oc) in data.test.iter().zip(&outcomes) {
        oc.forecast
            .write_csv(&out.join(format!("forecast_{}.csv", file_stem(seq.id()))))?;
        let score = nrmse(&oc.forecast.mean, &oc.reference, &metric, None)?;
        let member_nrmse = oc
            .members
            .iter()
            .map(|m| nrmse(&m.values, &oc.reference, &metric, None))
            .collect::<hdmdc::Result<Vec<_>>>()?;
        report.write_record([
            seq.id().to_owned(),
            mode.to_owned(),
            oc.forecast.members.to_string(),
            oc.failures.len().to_string(),
            metric.k.to_string(),
            score.to_string(),
        ])?;
        for (i, (m, s)) in oc.members.iter().zip(&member_nrmse).enumerate() {
            members_csv.write_record([seq.id().to_owned(), i.to_string(), m.member_id.clone(), s.to_string()])?;
        }
        rows.push(ForecastRow {
            sequence_id: seq.id().to_owned(),
            members: oc.forecast.members,
            failures: oc.failures.len(),
            nrmse: score,
            member_nrmse,
        });
    }
    report.flush()?;
    members_csv.flush()?;
    Ok(rows)
}

/// Reads the named channels from a CSV, accepting `<ch>` or `<ch>_mean` columns.
pub fn read_channels(path: &Path, channels: &[String]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let idx = channels
        .iter()
        .map(|ch| {
            headers
                .iter()
                .position(|h| h == ch)
                .or_else(|| headers.iter().position(|h| h == format!("{ch}_mean")))
                .ok_or_else(|| anyhow!(hdmdc::Error::Schema(format!("{} has no column `{ch}`", path.display()))))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cols = vec![Vec::new(); channels.len()];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (c, &i) in idx.iter().enumerate() {
            let cell = rec.get(i).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| {
                anyhow!(
                    "{}: row {}, column `{}`: cannot parse `{cell}`",
                    path.display(),
                    row + 1,
                    channels[c]
                )
            })?;
            ensure!(
                v.is_finite(),
                hdmdc::Error::Data {
                    row: row + 1,
                    channel: channels[c].clone()
                }
            );
            cols[c].push(v);
        }
    }
    Ok(cols)
}

fn join_source(files: &[PathBuf], channels: &[String]) -> Result<Vec<Vec<f64>>> {
    let mut joined = vec![Vec::new(); channels.len()];
    for f in files {
        for (j, col) in joined.iter_mut().zip(read_channels(f, channels)?) {
            j.extend(col);
        }
    }
    Ok(joined)
}

/// JSD statistics for one channel (or the cross-channel average).
#[derive(Debug, Clone, PartialEq)]
pub struct JsdRow {
    pub channel: String,
    pub ev: f64,
    pub q025: f64,
    pub q975: f64,
    pub u: f64,
    pub replicates: Vec<f64>,
}

fn jsd_row(channel: String, replicates: Vec<f64>) -> JsdRow {
    let ev = replicates.iter().sum::<f64>() / replicates.len() as f64;
    let q025 = quantile(&replicates, 0.025);
    let q975 = quantile(&replicates, 0.975);
    JsdRow {
        channel,
        ev,
        q025,
        q975,
        u: q975 - q025,
        replicates,
    }
}

/// Bootstrap densities of two sources and their replicate-wise JSD.
pub fn cmd_pdf_compare(cfg: &JobConfig) -> Result<Vec<JsdRow>> {
    let out = cfg.out_dir()?;
    let pdf = &cfg.pdf;
    ensure!(!pdf.channels.is_empty(), "pdf.channels is empty");
    ensure!(
        !pdf.source_a.is_empty() && !pdf.source_b.is_empty(),
        "both pdf sources need at least one file"
    );
    write_echo(cfg, out)?;
    let a = join_source(&pdf.source_a, &pdf.channels).context("reading source A")?;
    let b = join_source(&pdf.source_b, &pdf.channels).context("reading source B")?;
    let bs = &cfg.bootstrap;

    let mut dens_a = Vec::new();
    let mut dens_b = Vec::new();
    for (c, ch) in pdf.channels.iter().enumerate() {
        let grid = shared_grid(&a[c], &b[c], bs.grid_points, bs.pad_bandwidths)?;
        // Both sources draw their replicates from the same stream, so
        // identical inputs give identical replicates.
        let seed = derive_seed_str(cfg.seed, &format!("pdf:{ch}"));
        let da = bootstrap_densities(&a[c], &optimal_block_length(&a[c])?, bs.replicates, &grid, seed)?;
        let db = bootstrap_densities(&b[c], &optimal_block_length(&b[c])?, bs.replicates, &grid, seed)?;
        let stem = file_stem(ch);
        summarize_densities(&da)?.write_csv(&out.join(format!("pdf_a_{stem}.csv")))?;
        summarize_densities(&db)?.write_csv(&out.join(format!("pdf_b_{stem}.csv")))?;
        dens_a.push(da);
        dens_b.push(db);
    }

    let mut rows = Vec::new();
    for (c, ch) in pdf.channels.iter().enumerate() {
        let reps = (0..bs.replicates)
            .map(|i| jsd(&[dens_a[c][i].clone()], &[dens_b[c][i].clone()]))
            .collect::<hdmdc::Result<Vec<_>>>()?;
        rows.push(jsd_row(ch.clone(), reps));
    }
    let avg = (0..bs.replicates)
        .map(|i| {
            let qa: Vec<_> = dens_a.iter().map(|d| d[i].clone()).collect();
            let qb: Vec<_> = dens_b.iter().map(|d| d[i].clone()).collect();
            jsd(&qa, &qb)
        })
        .collect::<hdmdc::Result<Vec<_>>>()?;
    rows.push(jsd_row("average".into(), avg));

    let mut w = csv_writer(&out.join("jsd_report.csv"))?;
    w.write_record(["channel", "ev", "q025", "q975", "u"])?;
    for r in &rows {
        w.write_record([
            r.channel.clone(),
            r.ev.to_string(),
            r.q025.to_string(),
            r.q975.to_string(),
            r.u.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv_writer(&out.join("jsd_replicates.csv"))?;
    let mut header = vec!["replicate".to_owned()];
    header.extend(rows.iter().map(|r| r.channel.clone()));
    w.write_record(&header)?;
    for i in 0..bs.replicates {
        let mut rec = vec![i.to_string()];
        rec.extend(rows.iter().map(|r| r.replicates[i].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(rows)
}
