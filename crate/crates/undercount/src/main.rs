//! Command-line front end for the Gamma-count regression toolkit.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical failure.

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use undercount::design::{build_design, CountDataset, DesignMatrix, STAGES};
use undercount::error::Error;
use undercount::gamma_count::GammaCountDist;
use undercount::glm::{fit_poisson, pearson_dispersion, quasi_f_test, GlmFit};
use undercount::inference;
use undercount::mle::{self, GammaCountFit};
use undercount::renewal::{rng_for_replicate, simulate_events, RenewalConfig};
use undercount::report::{
    gamma_count_report, poisson_report, sha256_hex, FitReport, ModelKind,
};

#[derive(Parser)]
#[command(name = "undercount", version, about = "Gamma-count regression toolkit for count data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompareFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimMode {
    /// consecutive windows of one long realization
    Windows,
    /// first window of many independent replicates
    Replicates,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model/predictor combination and emit a report
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        predictor: u8,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: OutputFormat,
    },
    /// Fit predictors 1..5 and tabulate nested-model comparisons
    Compare {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: CompareFormat,
    },
    /// Profile-likelihood trace and confidence interval for one parameter
    Profile {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "gammacount")]
        model: String,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        predictor: u8,
        #[arg(long)]
        param: String,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// write the CSV trace here (JSON summary always goes to stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prediction band for the expected count over a defoliation grid
    Predict {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        predictor: u8,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a Gamma renewal process and emit window counts
    Simulate {
        #[arg(long)]
        alpha: f64,
        #[arg(long = "mean-tau")]
        mean_tau: f64,
        #[arg(long, default_value_t = 1e4)]
        horizon: f64,
        #[arg(long, default_value_t = 1.0)]
        window: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "windows")]
        mode: SimMode,
        /// replicate count for --mode replicates
        #[arg(long, default_value_t = 10_000)]
        replicates: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the Gamma-count PMF at (alpha, eta) with beta = alpha·e^eta
    Pmf {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 30)]
        nmax: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Parse { .. } | Error::Domain(_) | Error::Io(_) | Error::UnknownParameter(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(3),
            }
        }
    }
}

fn emit(out: &Option<PathBuf>, payload: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, payload).map_err(Error::Io),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(payload.as_bytes()).map_err(Error::Io)?;
            Ok(())
        }
    }
}

fn load(data: &PathBuf) -> Result<(CountDataset, String), Error> {
    let bytes = std::fs::read(data)?;
    let checksum = sha256_hex(&bytes);
    let dataset = undercount::design::parse_csv(std::io::BufReader::new(bytes.as_slice()))?;
    if dataset.is_empty() {
        return Err(Error::Parse { line: 1, message: "no data rows".into() });
    }
    Ok((dataset, checksum))
}

fn parse_model(model: &str) -> Result<ModelKind, Error> {
    model.parse::<ModelKind>().map_err(Error::Domain)
}

fn render_report_table(report: &FitReport) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "model: {:?}  predictor: {}  n: {}\n",
        report.model, report.predictor, report.n
    ));
    s.push_str(&format!("{:<22} {:>12} {:>12} {:>10}\n", "parameter", "estimate", "se", "est/se"));
    for c in &report.coefficients {
        s.push_str(&format!(
            "{:<22} {:>12.6} {:>12.6} {:>10.4}\n",
            c.name, c.estimate, c.se, c.est_over_se
        ));
    }
    if let Some(d) = &report.dispersion {
        s.push_str(&format!("{:<22} {:>12.6}", d.name, d.estimate));
        if let Some(se) = d.se {
            s.push_str(&format!(" {:>12.6} {:>10.4}", se, d.estimate / se));
        }
        s.push('\n');
        if let (Some(stat), Some(p)) = (d.test_statistic, d.p_value) {
            s.push_str(&format!("dispersion test (alpha=1): stat {stat:.4}, p {p:.4e}\n"));
        }
    }
    if let Some(l) = report.loglik {
        s.push_str(&format!("loglik: {l:.6}\n"));
    }
    if let Some(dev) = report.deviance {
        s.push_str(&format!("deviance: {dev:.6}\n"));
    }
    if let Some(aic) = report.aic {
        s.push_str(&format!("AIC: {aic:.6}\n"));
    }
    s.push_str(&format!("converged: {}\n", report.convergence.converged));
    s
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Fit { data, model, predictor, out, format } => {
            let kind = parse_model(&model)?;
            let (dataset, checksum) = load(&data)?;
            let counts = dataset.counts();
            let design = build_design(&dataset, predictor)?;
            let report = match kind {
                ModelKind::Poisson => poisson_report(&fit_poisson(&design, &counts)?, false, &checksum),
                ModelKind::QuasiPoisson => {
                    poisson_report(&fit_poisson(&design, &counts)?, true, &checksum)
                }
                ModelKind::GammaCount => {
                    let fit = mle::fit_gamma_count(&design, &counts, None)?;
                    gamma_count_report(&fit, &design, &counts, &checksum)
                }
            };
            let payload = match format {
                OutputFormat::Json => {
                    let mut s = serde_json::to_string_pretty(&report)
                        .map_err(|e| Error::Evaluation(e.to_string()))?;
                    s.push('\n');
                    s
                }
                OutputFormat::Table => render_report_table(&report),
            };
            emit(&out, &payload)?;
            if report.convergence.converged {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(3))
            }
        }
        Command::Compare { data, model, out, format } => {
            let kind = parse_model(&model)?;
            let (dataset, _checksum) = load(&data)?;
            let rows = compare_rows(&dataset, kind)?;
            let payload = match format {
                CompareFormat::Json => {
                    let mut s = serde_json::to_string_pretty(&rows)
                        .map_err(|e| Error::Evaluation(e.to_string()))?;
                    s.push('\n');
                    s
                }
                CompareFormat::Csv => compare_csv(&rows),
            };
            emit(&out, &payload)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Profile { data, model, predictor, param, level, out } => {
            let kind = parse_model(&model)?;
            if kind != ModelKind::GammaCount {
                return Err(Error::Domain("profile is only available for gammacount".into()));
            }
            let (dataset, _checksum) = load(&data)?;
            let counts = dataset.counts();
            let design = build_design(&dataset, predictor)?;
            let fit = mle::fit_gamma_count(&design, &counts, None)?;
            if !fit.converged {
                return Err(Error::IterationLimit { iterations: fit.iterations, loglik: fit.loglik });
            }
            let (trace, ci) = inference::profile(&design, &counts, &fit, &param, level)?;
            if let Some(path) = &out {
                let mut csv = String::from("value,profile_loglik\n");
                for (v, l) in trace.grid.iter().zip(trace.profile_loglik.iter()) {
                    csv.push_str(&format!("{v},{l}\n"));
                }
                std::fs::write(path, csv)?;
            }
            #[derive(Serialize)]
            struct ProfileSummary<'a> {
                param: &'a str,
                level: f64,
                mle: f64,
                loglik: f64,
                ci: inference::ProfileCi,
                wald_ci: (f64, f64),
            }
            let idx = inference::param_index(&fit, &param)?;
            let wald = inference::wald_ci(&fit, idx, level)?;
            let summary = ProfileSummary {
                param: &param,
                level,
                mle: trace.mle_value,
                loglik: trace.mle_loglik,
                ci,
                wald_ci: wald,
            };
            let mut s = serde_json::to_string_pretty(&summary)
                .map_err(|e| Error::Evaluation(e.to_string()))?;
            s.push('\n');
            print!("{s}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict { data, model, predictor, level, step, out } => {
            let kind = parse_model(&model)?;
            if step <= 0.0 || step > 1.0 {
                return Err(Error::Domain(format!("step must be in (0,1], got {step}")));
            }
            let (dataset, _checksum) = load(&data)?;
            let counts = dataset.counts();
            let design = build_design(&dataset, predictor)?;
            let mut grid = Vec::new();
            for &stage in STAGES.iter() {
                let mut def = 0.0f64;
                while def <= 1.0 + 1e-12 {
                    grid.push((stage, def.min(1.0)));
                    def += step;
                }
            }
            let band = match kind {
                ModelKind::GammaCount => {
                    let fit = mle::fit_gamma_count(&design, &counts, None)?;
                    if !fit.converged {
                        return Err(Error::IterationLimit {
                            iterations: fit.iterations,
                            loglik: fit.loglik,
                        });
                    }
                    inference::predict_gamma_count(&fit, &grid, level)?
                }
                ModelKind::Poisson => {
                    inference::predict_poisson(&fit_poisson(&design, &counts)?, &grid, level, false)?
                }
                ModelKind::QuasiPoisson => {
                    inference::predict_poisson(&fit_poisson(&design, &counts)?, &grid, level, true)?
                }
            };
            let mut csv = String::from("stage,def,eta_hat,se_eta,mean_count,lower,upper\n");
            for r in &band.rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.stage, r.def, r.eta_hat, r.se_eta, r.mean_count, r.lower, r.upper
                ));
            }
            emit(&out, &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { alpha, mean_tau, horizon, window, seed, mode, replicates, out } => {
            let cfg = RenewalConfig {
                alpha,
                mean_interarrival: mean_tau,
                horizon,
                window_width: window,
                seed,
            };
            cfg.validate()?;
            let dist = GammaCountDist::with_horizon(alpha, cfg.beta(), window)?;
            let counts: Vec<u64> = match mode {
                SimMode::Windows => {
                    let mut rng = rng_for_replicate(seed, 0);
                    simulate_events(&cfg, &mut rng)?.window_counts
                }
                SimMode::Replicates => {
                    undercount::renewal::replicate_counts(alpha, cfg.beta(), window, replicates, seed)
                }
            };
            let mut csv = String::from("count,analytic_pmf\n");
            for &c in &counts {
                csv.push_str(&format!("{},{}\n", c, dist.pmf(c)));
            }
            emit(&out, &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Pmf { alpha, eta, nmax, out } => {
            let dist = GammaCountDist::new(alpha, alpha * eta.exp())?;
            let table = dist.pmf_table(nmax);
            let mut csv = String::from("n,probability\n");
            for (n, p) in table.probs.iter().enumerate() {
                csv.push_str(&format!("{n},{p}\n"));
            }
            csv.push_str(&format!("tail,{}\n", table.tail_mass));
            emit(&out, &csv)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct CompareRow {
    model: ModelKind,
    predictor: u8,
    np: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    loglik: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deviance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    aic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diff_np: Option<usize>,
    /// LRT statistic (Poisson / Gamma-count) or F statistic (quasi-Poisson)
    #[serde(skip_serializing_if = "Option::is_none")]
    statistic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_value: Option<f64>,
    /// α̂ for Gamma-count, φ̂ for quasi-Poisson
    #[serde(skip_serializing_if = "Option::is_none")]
    dispersion: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dispersion_test_p: Option<f64>,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

enum PredictorFit {
    Poisson(GlmFit),
    GammaCount { gc: GammaCountFit, pois: GlmFit },
    Failed(String),
}

fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var("UNDERCOUNT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

fn compare_rows(dataset: &CountDataset, kind: ModelKind) -> Result<Vec<CompareRow>, Error> {
    let counts = dataset.counts();
    let designs: Vec<DesignMatrix> = (1..=5u8)
        .map(|id| build_design(dataset, id))
        .collect::<Result<_, _>>()?;

    use rayon::prelude::*;
    let fits: Vec<PredictorFit> = thread_pool().install(|| {
        designs
            .par_iter()
            .map(|design| match kind {
                ModelKind::Poisson | ModelKind::QuasiPoisson => {
                    match fit_poisson(design, &counts) {
                        Ok(fit) => PredictorFit::Poisson(fit),
                        Err(e) => PredictorFit::Failed(e.to_string()),
                    }
                }
                ModelKind::GammaCount => match fit_poisson(design, &counts) {
                    Ok(pois) => match mle::fit_gamma_count(design, &counts, None) {
                        Ok(gc) => PredictorFit::GammaCount { gc, pois },
                        Err(e) => PredictorFit::Failed(e.to_string()),
                    },
                    Err(e) => PredictorFit::Failed(e.to_string()),
                },
            })
            .collect()
    });

    let mut rows = Vec::with_capacity(5);
    for (i, fit) in fits.iter().enumerate() {
        let predictor = (i + 1) as u8;
        let row = match fit {
            PredictorFit::Failed(msg) => CompareRow {
                model: kind,
                predictor,
                np: 0,
                loglik: None,
                deviance: None,
                aic: None,
                diff_np: None,
                statistic: None,
                p_value: None,
                dispersion: None,
                dispersion_test_p: None,
                converged: false,
                error: Some(msg.clone()),
            },
            PredictorFit::Poisson(fit) => {
                let quasi = kind == ModelKind::QuasiPoisson;
                let prev = if i > 0 {
                    match &fits[i - 1] {
                        PredictorFit::Poisson(p) => Some(p),
                        _ => None,
                    }
                } else {
                    None
                };
                let (diff_np, statistic, p_value) = match prev {
                    Some(prev_fit) if quasi => match quasi_f_test(prev_fit, fit) {
                        Ok((f, df1, _df2, p)) => (Some(df1), Some(f), Some(p)),
                        Err(_) => (None, None, None),
                    },
                    Some(prev_fit) => {
                        let stat = (2.0 * (fit.loglik - prev_fit.loglik)).max(0.0);
                        let df = fit.p - prev_fit.p;
                        let p = undercount::special::chi2_sf(stat, df as f64)?;
                        (Some(df), Some(stat), Some(p))
                    }
                    None => (None, None, None),
                };
                let dispersion = if quasi { Some(pearson_dispersion(fit)?) } else { None };
                CompareRow {
                    model: kind,
                    predictor,
                    np: fit.p,
                    loglik: if quasi { None } else { Some(fit.loglik) },
                    deviance: Some(fit.deviance),
                    aic: if quasi { None } else { Some(fit.aic()) },
                    diff_np,
                    statistic,
                    p_value,
                    dispersion,
                    dispersion_test_p: None,
                    converged: true,
                    error: None,
                }
            }
            PredictorFit::GammaCount { gc, pois } => {
                let prev = if i > 0 {
                    match &fits[i - 1] {
                        PredictorFit::GammaCount { gc: p, .. } => Some(p),
                        _ => None,
                    }
                } else {
                    None
                };
                let (diff_np, statistic, p_value) = match prev {
                    Some(prev_fit) => {
                        let (stat, df, p) = mle::lrt(prev_fit, gc)?;
                        (Some(df), Some(stat), Some(p))
                    }
                    None => (None, None, None),
                };
                let (_, disp_p) = mle::test_alpha_one(gc, pois)?;
                CompareRow {
                    model: kind,
                    predictor,
                    np: gc.n_params(),
                    loglik: Some(gc.loglik),
                    deviance: None,
                    aic: Some(gc.aic()),
                    diff_np,
                    statistic,
                    p_value,
                    dispersion: Some(gc.alpha),
                    dispersion_test_p: Some(disp_p),
                    converged: gc.converged,
                    error: None,
                }
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

fn compare_csv(rows: &[CompareRow]) -> String {
    let mut s = String::from(
        "model,predictor,np,loglik,deviance,aic,diff_np,statistic,p_value,dispersion,dispersion_test_p,converged,error\n",
    );
    let opt = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        s.push_str(&format!(
            "{:?},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.model,
            r.predictor,
            r.np,
            opt(&r.loglik),
            opt(&r.deviance),
            opt(&r.aic),
            r.diff_np.map(|x| x.to_string()).unwrap_or_default(),
            opt(&r.statistic),
            opt(&r.p_value),
            opt(&r.dispersion),
            opt(&r.dispersion_test_p),
            r.converged,
            r.error.clone().unwrap_or_default(),
        ));
    }
    s
}
