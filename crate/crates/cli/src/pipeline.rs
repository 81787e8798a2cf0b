//! Command definitions and the pipeline behind each command.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use log::info;

use warpca_core::joint::{frechet_variance, optimize_c, JointPcaModel};
use warpca_core::synth::{gen_toy_joint_on, toy_amplitudes, toy_exponents};
use warpca_core::transforms::DEFAULT_DELTA;
use warpca_core::warping::compose;
use warpca_core::{
    fit_joint, select_m, AmplitudeSpec, Grid, GridFunction, JointDataset, ToyConfig, Transform,
};

use crate::error::{CliError, Result};
use crate::io::{
    create_dir, fmt_f64, ingest_joint, read_metadata, read_table, read_text, write_functions,
    write_records, write_table, write_text, JointInput,
};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "warpca",
    version,
    about = "Joint PCA of amplitude and phase variation"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Generate the power-warping toy dataset.
    GenToy(GenToyArgs),
    /// Transform warping functions to L2.
    Transform(TransformArgs),
    /// Fit the joint model and export summary, components and scores.
    FitJoint(FitArgs),
    /// Reconstruct every sample from a truncated joint expansion.
    Reconstruct(FitArgs),
    /// Print explained-variance percentages of a fitted model.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GenToyArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 201)]
    pub grid_size: usize,
    #[arg(long, default_value_t = 5.0)]
    pub shape: f64,
    #[arg(long, default_value_t = 5.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 0.2)]
    pub amplitude_sd: f64,
    /// Use identity warpings.
    #[arg(long)]
    pub no_phase: bool,
    #[arg(long, default_value_t = 0.0)]
    pub start: f64,
    #[arg(long, default_value_t = 1.0)]
    pub end: f64,
}

#[derive(Debug, Clone, Args)]
pub struct TransformOpts {
    /// srvf, clr, log-hazard or log-quantile.
    #[arg(long, default_value = "clr")]
    pub transform: String,
    /// Tail threshold of the log-hazard transform.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
}

impl TransformOpts {
    pub fn resolve(&self) -> Result<Transform> {
        match self.transform.parse::<Transform>()? {
            Transform::LogHazard { .. } => Ok(Transform::log_hazard(self.delta)?),
            t => Ok(t),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub warpings: PathBuf,
    #[command(flatten)]
    pub transform: TransformOpts,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Registered functions: grid column, then one column per sample.
    #[arg(long)]
    pub registered: PathBuf,
    /// Warping functions with the same layout.
    #[arg(long)]
    pub warpings: PathBuf,
    /// Observed curves; computed as w ∘ gamma when absent.
    #[arg(long)]
    pub observed: Option<PathBuf>,
    /// Extra per-sample columns copied into the score table.
    #[arg(long)]
    pub metadata: Option<PathBuf>,
    #[command(flatten)]
    pub transform: TransformOpts,
    #[arg(long, default_value_t = 0.95)]
    pub tau: f64,
    /// Number of components; chosen from tau when absent.
    #[arg(long)]
    pub m: Option<usize>,
    /// Fixed weight of the phase part.
    #[arg(long)]
    pub c: Option<f64>,
    /// Choose the weight by minimizing the reconstruction error.
    #[arg(long)]
    pub optimize_c: bool,
    #[arg(long, default_value_t = 1e-2)]
    pub c_min: f64,
    #[arg(long, default_value_t = 1e2)]
    pub c_max: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Output directory of fit-joint.
    #[arg(long)]
    pub model_dir: PathBuf,
    /// Also write the report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_pipeline(cfg: &RunConfig) -> Result<()> {
    match &cfg.command {
        Command::GenToy(args) => gen_toy(args),
        Command::Transform(args) => transform(args),
        Command::FitJoint(args) => fit(args).map(|_| ()),
        Command::Reconstruct(args) => reconstruct(args),
        Command::Report(args) => report(args).map(|text| print!("{text}")),
    }
}

fn sample_ids(n: usize) -> Vec<String> {
    let width = n.to_string().len().max(3);
    (1..=n).map(|i| format!("s{i:0width$}")).collect()
}

fn gen_toy(args: &GenToyArgs) -> Result<()> {
    let cfg = ToyConfig {
        n: args.n,
        shape: args.shape,
        rate: args.rate,
        grid_size: args.grid_size,
        seed: args.seed,
    };
    let spec = AmplitudeSpec {
        amplitude_sd: args.amplitude_sd,
        vary_phase: !args.no_phase,
    };
    cfg.validate()?;
    let grid = Arc::new(Grid::uniform(args.start, args.end, args.grid_size)?);
    let samples = gen_toy_joint_on(&cfg, &spec, &grid)?;
    let ks = if spec.vary_phase {
        toy_exponents(&cfg)?
    } else {
        vec![1.0; cfg.n]
    };
    let amps = toy_amplitudes(&cfg, &spec)?;

    create_dir(&args.out)?;
    let ids = sample_ids(cfg.n);
    let w: Vec<&GridFunction> = samples.iter().map(|s| s.w()).collect();
    let g: Vec<&GridFunction> = samples.iter().map(|s| s.gamma().inner()).collect();
    let x: Vec<&GridFunction> = samples.iter().map(|s| s.x()).collect();
    write_functions(&args.out.join("registered.csv"), "t", &ids, &w)?;
    write_functions(&args.out.join("warpings.csv"), "t", &ids, &g)?;
    write_functions(&args.out.join("observed.csv"), "t", &ids, &x)?;
    let rows: Vec<Vec<String>> = ids
        .iter()
        .zip(ks.iter().zip(&amps))
        .map(|(id, (k, a))| vec![id.clone(), fmt_f64(*k), fmt_f64(*a)])
        .collect();
    write_records(
        &args.out.join("metadata.csv"),
        &["id".into(), "k".into(), "amplitude".into()],
        &rows,
    )?;
    info!("wrote {} samples to {}", cfg.n, args.out.display());
    Ok(())
}

fn transform(args: &TransformArgs) -> Result<()> {
    let t = args.transform.resolve()?;
    let table = read_table(&args.warpings)?;
    let mut out = Vec::with_capacity(table.columns.len());
    for (c, col) in table.columns.iter().enumerate() {
        let column_error = |source| CliError::Column {
            path: args.warpings.clone(),
            column: c + 2,
            name: table.header[c + 1].clone(),
            source,
        };
        let gamma = warpca_core::validate_warping(col.clone()).map_err(column_error)?;
        out.push(t.forward(&gamma).map_err(column_error)?);
    }
    let grid_name = if matches!(t, Transform::LogQuantile) {
        "p"
    } else {
        "t"
    };
    let refs: Vec<&GridFunction> = out.iter().collect();
    write_functions(&args.out, grid_name, table.names(), &refs)
}

/// Everything decided while fitting: the data, the chosen weight and `M`.
pub struct FitOutcome {
    pub input: JointInput,
    pub data: JointDataset,
    pub model: JointPcaModel,
    pub c_optimized: bool,
    /// Number of components used while searching for `C`.
    pub search_m: Option<usize>,
    pub m_hat: usize,
    pub m: usize,
}

/// Loads the data and fits the model according to `args`.
pub fn fit_model(args: &FitArgs) -> Result<FitOutcome> {
    if !(args.tau > 0.0 && args.tau < 1.0) {
        return Err(CliError::Config(format!(
            "tau must lie in (0, 1), got {}",
            args.tau
        )));
    }
    match (args.c, args.optimize_c) {
        (Some(_), true) => {
            return Err(CliError::Config(
                "--c and --optimize-c are mutually exclusive".into(),
            ))
        }
        (None, false) => {
            return Err(CliError::Config(
                "one of --c or --optimize-c is required".into(),
            ))
        }
        _ => {}
    }
    let t = args.transform.resolve()?;
    let input = ingest_joint(&args.registered, &args.warpings, args.observed.as_deref())?;
    let data = JointDataset::new(input.samples.clone(), t)?;

    let (c, search_m) = match args.c {
        Some(c) => (c, None),
        None => {
            let m = match args.m {
                Some(m) => m,
                None => fit_joint(&data, 1.0)?.select_m(args.tau)?,
            };
            let c = optimize_c(&data, m, (args.c_min, args.c_max))?;
            info!("optimal weight C = {c} for M = {m}");
            (c, Some(m))
        }
    };
    let model = fit_joint(&data, c)?;
    let m_hat = select_m(&model.nus, args.tau)?;
    let m = args.m.unwrap_or(m_hat);
    if m > model.n_components() {
        return Err(warpca_core::Error::Truncation {
            requested: m,
            available: model.n_components(),
        }
        .into());
    }
    Ok(FitOutcome {
        input,
        data,
        model,
        c_optimized: args.optimize_c,
        search_m,
        m_hat,
        m,
    })
}

fn join(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| fmt_f64(*x))
        .collect::<Vec<_>>()
        .join(", ")
}

fn summary(fit: &FitOutcome, args: &FitArgs) -> Result<String> {
    let model = &fit.model;
    let grid = model.time_grid();
    // beyond N - 1 components the eigenvalues are zero up to rounding
    let shown = model.n_components().min(fit.data.len());
    let nus = &model.nus[..shown];
    let total = model.total_variance();
    let ratios: Vec<f64> = nus
        .iter()
        .map(|v| if total > 0.0 { v / total } else { 0.0 })
        .collect();
    let cumulative: Vec<f64> = ratios
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect();

    let mut s = String::new();
    let _ = writeln!(s, "transform: {}", model.transform.name());
    if let Transform::LogHazard { delta } = model.transform {
        let _ = writeln!(s, "delta: {}", fmt_f64(delta));
    }
    let _ = writeln!(s, "samples: {}", fit.data.len());
    let _ = writeln!(s, "grid_points: {}", grid.len());
    let _ = writeln!(s, "grid_start: {}", fmt_f64(grid.a()));
    let _ = writeln!(s, "grid_end: {}", fmt_f64(grid.b()));
    let _ = writeln!(s, "C: {}", fmt_f64(model.c));
    let _ = writeln!(
        s,
        "C_source: {}",
        if fit.c_optimized {
            "optimized"
        } else {
            "fixed"
        }
    );
    if let Some(m) = fit.search_m {
        let _ = writeln!(
            s,
            "C_search_range: {}, {}",
            fmt_f64(args.c_min),
            fmt_f64(args.c_max)
        );
        let _ = writeln!(s, "C_search_M: {m}");
    }
    let _ = writeln!(s, "tau: {}", fmt_f64(args.tau));
    let _ = writeln!(s, "M_hat: {}", fit.m_hat);
    let _ = writeln!(s, "M: {}", fit.m);
    let vd = model.variance_decomposition(fit.m)?;
    let _ = writeln!(s, "explained_variance_M: {}", fmt_f64(vd.explained));
    let _ = writeln!(s, "explained_ratio_M: {}", fmt_f64(vd.ratio));
    let _ = writeln!(s, "total_variance: {}", fmt_f64(total));
    let _ = writeln!(
        s,
        "frechet_variance: {}",
        fmt_f64(frechet_variance(&fit.data, model.c)?)
    );
    let _ = writeln!(s, "eigenvalues: {}", join(nus));
    let _ = writeln!(s, "explained_ratio: {}", join(&ratios));
    let _ = writeln!(s, "cumulative_ratio: {}", join(&cumulative));
    Ok(s)
}

/// `(w̄ ± a_w sd φ_w) ∘ Ψ^{-1}(v̄ ± a_v sd φ_v)` and the warping for the sign.
fn perturbation(
    model: &JointPcaModel,
    m: usize,
    alpha_w: f64,
    alpha_v: f64,
    sign: f64,
) -> Result<(GridFunction, GridFunction)> {
    let sd = model.nus[m].sqrt();
    let w = model.mean_w.axpy(sign * alpha_w * sd, &model.phi_w[m])?;
    let v = model.mean_v.axpy(sign * alpha_v * sd, &model.phi_v[m])?;
    let gamma = model.transform.inverse(&v, model.time_grid())?;
    let x = compose(&w, &gamma)?;
    Ok((x, gamma.inner().clone()))
}

fn write_components(fit: &FitOutcome, dir: &Path) -> Result<()> {
    let model = &fit.model;
    let t = model.time_grid().points();
    let s = model.mean_v.grid().points();

    let mean_gamma = model.transform.inverse(&model.mean_v, model.time_grid())?;
    let mean_x = compose(&model.mean_w, &mean_gamma)?;
    let header: Vec<String> = ["t", "mean_w", "v_grid", "mean_v", "mean_gamma", "mean_x"]
        .map(String::from)
        .to_vec();
    write_table(
        &dir.join("mean.csv"),
        &header,
        &[
            t,
            model.mean_w.values(),
            s,
            model.mean_v.values(),
            mean_gamma.values(),
            mean_x.values(),
        ],
    )?;

    let header: Vec<String> = [
        "t",
        "phi_w",
        "v_grid",
        "phi_v",
        "joint_plus",
        "joint_minus",
        "phase_plus",
        "phase_minus",
        "amplitude_plus",
        "amplitude_minus",
        "gamma_plus",
        "gamma_minus",
    ]
    .map(String::from)
    .to_vec();
    let width = fit.m.to_string().len().max(2);
    for m in 0..fit.m {
        let (jp, _) = perturbation(model, m, 1.0, 1.0, 1.0)?;
        let (jm, _) = perturbation(model, m, 1.0, 1.0, -1.0)?;
        let (pp, gp) = perturbation(model, m, 0.0, 1.0, 1.0)?;
        let (pm, gm) = perturbation(model, m, 0.0, 1.0, -1.0)?;
        let (ap, _) = perturbation(model, m, 1.0, 0.0, 1.0)?;
        let (am, _) = perturbation(model, m, 1.0, 0.0, -1.0)?;
        write_table(
            &dir.join(format!("component_{:0width$}.csv", m + 1)),
            &header,
            &[
                t,
                model.phi_w[m].values(),
                s,
                model.phi_v[m].values(),
                jp.values(),
                jm.values(),
                pp.values(),
                pm.values(),
                ap.values(),
                am.values(),
                gp.values(),
                gm.values(),
            ],
        )?;
    }
    Ok(())
}

fn write_scores(fit: &FitOutcome, args: &FitArgs, path: &Path) -> Result<()> {
    let mut header = vec!["id".to_string()];
    header.extend((1..=fit.m).map(|m| format!("rho_{m}")));
    let mut rows: Vec<Vec<String>> = fit
        .input
        .ids
        .iter()
        .zip(&fit.model.scores)
        .map(|(id, s)| {
            let mut row = vec![id.clone()];
            row.extend(s[..fit.m].iter().map(|x| fmt_f64(*x)));
            row
        })
        .collect();

    if let Some(meta_path) = &args.metadata {
        let meta = read_metadata(meta_path)?;
        let keyed = meta.header.first().is_some_and(|h| h == "id");
        let skip = usize::from(keyed);
        header.extend(meta.header[skip..].iter().cloned());
        if !keyed && meta.rows.len() != rows.len() {
            return Err(CliError::Config(format!(
                "{}: {} metadata rows for {} samples",
                meta_path.display(),
                meta.rows.len(),
                rows.len()
            )));
        }
        for (i, row) in rows.iter_mut().enumerate() {
            let extra = if keyed {
                meta.rows
                    .iter()
                    .find(|r| r.first() == Some(&row[0]))
                    .ok_or_else(|| {
                        CliError::Config(format!(
                            "{}: no metadata for sample '{}'",
                            meta_path.display(),
                            row[0]
                        ))
                    })?
            } else {
                &meta.rows[i]
            };
            row.extend(extra[skip..].iter().cloned());
        }
    }
    write_records(path, &header, &rows)
}

/// Runs `fit-joint` and returns the fit for callers that want to inspect it.
pub fn fit(args: &FitArgs) -> Result<FitOutcome> {
    let outcome = fit_model(args)?;
    create_dir(&args.out)?;
    write_text(&args.out.join("summary.txt"), &summary(&outcome, args)?)?;
    write_components(&outcome, &args.out)?;
    write_scores(&outcome, args, &args.out.join("scores.csv"))?;
    info!(
        "fitted {} samples, M = {}, C = {}",
        outcome.data.len(),
        outcome.m,
        outcome.model.c
    );
    Ok(outcome)
}

fn reconstruct(args: &FitArgs) -> Result<()> {
    let fit = fit_model(args)?;
    let n = fit.data.len();
    let mut w = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut mse = 0.0;
    for (sample, scores) in fit.data.samples().iter().zip(&fit.model.scores) {
        let r = fit.model.reconstruct_x(scores, fit.m)?;
        mse += r.x.sub(sample.x())?.norm_squared() / n as f64;
        w.push(r.w);
        g.push(r.gamma.inner().clone());
        x.push(r.x);
    }
    create_dir(&args.out)?;
    let ids = &fit.input.ids;
    write_functions(
        &args.out.join("reconstructed_registered.csv"),
        "t",
        ids,
        &w.iter().collect::<Vec<_>>(),
    )?;
    write_functions(
        &args.out.join("reconstructed_warpings.csv"),
        "t",
        ids,
        &g.iter().collect::<Vec<_>>(),
    )?;
    write_functions(
        &args.out.join("reconstructed_observed.csv"),
        "t",
        ids,
        &x.iter().collect::<Vec<_>>(),
    )?;
    let text = format!(
        "M: {}\nC: {}\nmean_squared_error: {}\n",
        fit.m,
        fmt_f64(fit.model.c),
        fmt_f64(mse)
    );
    write_text(&args.out.join("reconstruction.txt"), &text)
}

/// Parses `key: value` lines.
pub fn parse_summary(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once(':'))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

fn report(args: &ReportArgs) -> Result<String> {
    let path = args.model_dir.join("summary.txt");
    let entries = parse_summary(&read_text(&path)?);
    let get = |key: &str| {
        entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| CliError::Config(format!("{}: missing '{key}'", path.display())))
    };
    let numbers = |key: &str| -> Result<Vec<f64>> {
        get(key)?
            .split(',')
            .map(|x| {
                x.trim().parse::<f64>().map_err(|_| {
                    CliError::Config(format!("{}: bad number in '{key}'", path.display()))
                })
            })
            .collect()
    };
    let ratios = numbers("explained_ratio")?;
    let cumulative = numbers("cumulative_ratio")?;
    let m: usize = get("M")?
        .parse()
        .map_err(|_| CliError::Config(format!("{}: bad value for 'M'", path.display())))?;

    let mut s = String::new();
    let _ = writeln!(s, "transform: {}", get("transform")?);
    let _ = writeln!(s, "C: {} ({})", get("C")?, get("C_source")?);
    let _ = writeln!(s, "M_hat: {} (tau = {})", get("M_hat")?, get("tau")?);
    for (i, (r, c)) in ratios.iter().zip(&cumulative).enumerate().take(m.max(1)) {
        let _ = writeln!(
            s,
            "component {}: {:.1}% of Frechet variance (cumulative {:.1}%)",
            i + 1,
            100.0 * r,
            100.0 * c
        );
    }
    if let Some(out) = &args.out {
        write_text(out, &s)?;
    }
    Ok(s)
}
