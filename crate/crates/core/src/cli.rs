//! The `vprior` command line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::aggregation::{combine, AggregatePrior};
use crate::calibration::{calibrate_m, CalibrationOptions, CalibrationReport};
use crate::elicitation::{predictive_cdf_on_sample, prior_beta_sample, ExpertSpec, JointPrior, WeibullPrior};
use crate::equitability::{calibrate_m_e, log_marginal_likelihood_weibull, EquitabilityOptions, EquitabilityResult, ExponentialPrior};
use crate::error::Error;
use crate::numerics::{RandomStream, DEFAULT_SEED};
use crate::posterior::{
    fit_mle, gibbs_joint, predictive_moment, prior_weight, CensoredSample, MleFit, MomentOutcome, SamplerInfo,
};

/// Posterior draws when `--samples` is not given.
pub const DEFAULT_SAMPLES: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "vprior", version, about = "Calibrated virtual-sample priors for Weibull lifetimes")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Seed of every random stream used by the run.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Monte Carlo size of the main computation of the command.
    #[arg(long, global = true)]
    pub mc_size: Option<usize>,
    /// Upper end of the virtual-size search range.
    #[arg(long, global = true)]
    pub m_max: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Calibrate the virtual size and shape hyperparameter of one expert.
    Calibrate {
        #[arg(long)]
        expert: PathBuf,
        /// Lower truncation of the shape prior, overriding the file.
        #[arg(long)]
        beta0: Option<f64>,
    },
    /// Pool several calibrated priors.
    Aggregate {
        #[arg(long = "prior", required = true, num_args = 1..)]
        priors: Vec<PathBuf>,
    },
    /// Calibrate an exponential prior equitable with a Weibull prior.
    Equitable {
        #[arg(long)]
        prior: PathBuf,
        /// Data used to report the Bayes factor between the two models.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Joint posterior draws as CSV (eta, beta, mttf, predictive).
    Posterior {
        #[arg(long)]
        prior: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long)]
        beta0: Option<f64>,
    },
    /// Posterior predictive summaries and moments.
    Predict {
        #[arg(long)]
        prior: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        /// Order of the predictive moment to report.
        #[arg(long)]
        moment: Option<f64>,
        #[arg(long)]
        beta0: Option<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.5, 0.95])]
        levels: Vec<f64>,
    },
    /// Censored-data maximum likelihood fit.
    Mle {
        #[arg(long)]
        data: PathBuf,
    },
    /// Two-column curves from a report.
    Plotdata {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum)]
        curve: Curve,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    /// Err(m) from a calibration report.
    Err,
    /// β̃*(m) from a calibration report.
    Beta,
    /// KL(m_E) from an equitability report.
    Kl,
    /// Prior predictive CDF from a calibration report.
    Predictive,
}

/// Every JSON output: the replayable config, rounded highlights and the full result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Output<T> {
    pub config: RunConfig,
    pub summary: BTreeMap<String, String>,
    pub result: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquitableOutput {
    pub equitability: EquitabilityResult,
    pub exponential_prior: ExponentialPrior,
    pub bayes_factor: Option<BayesFactor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesFactor {
    pub ln_marginal_weibull: f64,
    pub ln_marginal_exponential: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictOutput {
    pub draws: usize,
    pub beta0: f64,
    /// Set when β₀ was raised to k/r so the requested moment exists.
    pub beta0_substituted: bool,
    pub prior_weight: Option<f64>,
    pub moment: Option<MomentReport>,
    pub predictive_quantiles: Vec<(f64, f64)>,
    pub mttf_quantiles: Vec<(f64, f64)>,
    pub sampler: SamplerInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub k: f64,
    pub outcome: MomentOutcome,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                Error::Parse(_) => "parse",
                Error::Domain { .. }
                | Error::DegenerateSupport(_)
                | Error::DegenerateBin { .. }
                | Error::Propriety(_)
                | Error::Incompatible(_)
                | Error::InvalidSpec(_) => "constraint",
                Error::Reanchor { .. } | Error::Solver(_) | Error::Inference(_) | Error::Fit { .. } => "solver",
            },
            CliError::Io { .. } => "io",
            CliError::Input { .. } => "parse",
            CliError::Usage(_) => "usage",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "usage" => 2,
            "parse" => 3,
            "constraint" => 4,
            "solver" => 5,
            _ => 6,
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "exit_code": self.exit_code(),
                "message": self.to_string(),
            }
        })
        .to_string()
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Calibrated priors in any of the shapes the commands write.
#[derive(Deserialize)]
#[serde(untagged)]
enum PriorFile {
    Report(Output<CalibrationReport>),
    Aggregated(Output<AggregatePrior>),
    BareReport(CalibrationReport),
    Weibull(WeibullPrior),
    Aggregate(AggregatePrior),
}

impl PriorFile {
    fn into_prior(self) -> AggregatePrior {
        match self {
            PriorFile::Report(o) => o.result.prior.into(),
            PriorFile::BareReport(r) => r.prior.into(),
            PriorFile::Weibull(p) => p.into(),
            PriorFile::Aggregated(o) => o.result,
            PriorFile::Aggregate(a) => a,
        }
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn read_prior(path: &Path) -> CliResult<AggregatePrior> {
    let p = read_json::<PriorFile>(path)
        .map_err(|e| match e {
            CliError::Input { path, .. } => CliError::Input {
                path,
                message: "not a calibration report, Weibull prior or aggregate prior".into(),
            },
            other => other,
        })?
        .into_prior();
    p.validate()?;
    Ok(p)
}

fn read_data(path: &Path) -> CliResult<CensoredSample> {
    Ok(CensoredSample::from_csv_reader(read_text(path)?.as_bytes())?)
}

fn with_beta0(mut prior: AggregatePrior, beta0: Option<f64>) -> CliResult<AggregatePrior> {
    if let Some(b) = beta0 {
        prior.beta0 = b;
        prior.validate()?;
    }
    Ok(prior)
}

/// Rounds to three significant digits for the human-readable summary.
fn sig3(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let decimals = (2 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

fn summary<const N: usize>(items: [(&str, f64); N]) -> BTreeMap<String, String> {
    items.into_iter().map(|(k, v)| (k.to_string(), sig3(v))).collect()
}

fn json_output<T: Serialize>(config: &RunConfig, summary: BTreeMap<String, String>, result: T) -> CliResult<String> {
    let out = Output {
        config: config.clone(),
        summary,
        result,
    };
    let mut s = serde_json::to_string_pretty(&out).map_err(|e| CliError::Usage(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn config_line(config: &RunConfig) -> String {
    format!("# config: {}\n", serde_json::to_string(config).expect("config serializes"))
}

/// Columns printed with 17 significant digits.
fn csv_rows(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut s = format!("{header}\n");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn quantile_of(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let (i, w) = (h.floor() as usize, h - h.floor());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - w) + sorted[i + 1] * w
    } else {
        sorted[i]
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Runs one command and returns the text written to the output.
pub fn execute(config: &RunConfig) -> CliResult<String> {
    let rng = RandomStream::from_seed(config.seed);
    match &config.command {
        Command::Calibrate { expert, beta0 } => {
            let mut spec: ExpertSpec = read_json(expert)?;
            if let Some(b) = beta0 {
                spec.beta0 = *b;
            }
            spec.validate()?;
            let mut opts = CalibrationOptions::default();
            if let Some(n) = config.mc_size {
                opts.mc_size = n;
            }
            if let Some(m) = config.m_max {
                opts.m_max = m;
            }
            let report = calibrate_m(&spec, &opts, &mut rng.clone())?;
            let s = summary([
                ("m_star", report.m_star),
                ("beta_tilde_star", report.beta_tilde_star),
                ("err_star", report.err_star),
                ("coverage_error", report.coverage_error),
            ]);
            json_output(config, s, report)
        }
        Command::Aggregate { priors } => {
            let parts = priors.iter().map(|p| read_prior(p)).collect::<CliResult<Vec<_>>>()?;
            let agg = combine(&parts)?;
            let s = summary([("m", agg.m), ("beta_tilde", agg.beta_tilde), ("k_sum", agg.k_sum())]);
            json_output(config, s, agg)
        }
        Command::Equitable { prior, data } => {
            let prior = read_prior(prior)?;
            let mts = prior
                .common_mts()
                .ok_or_else(|| Error::Incompatible("experts do not share one most trustworthy statement".into()))?;
            let mut opts = EquitabilityOptions::default();
            if let Some(n) = config.mc_size {
                opts.mc_size = n;
            }
            if let Some(m) = config.m_max {
                opts.m_max = m;
            }
            let eq = calibrate_m_e(&prior, &opts, &mut rng.substream(0))?;
            let exponential = ExponentialPrior::new(eq.m_e_star, mts)?;
            let bayes_factor = match data {
                Some(path) => {
                    let d = read_data(path)?;
                    let lw = log_marginal_likelihood_weibull(&prior, &d, opts.mc_size, &mut rng.substream(1))?;
                    let le = exponential.ln_marginal_likelihood(&d);
                    Some(BayesFactor {
                        ln_marginal_weibull: lw,
                        ln_marginal_exponential: le,
                        value: (lw - le).exp(),
                    })
                }
                None => None,
            };
            let mut s = summary([("m_e_star", eq.m_e_star), ("kl_star", eq.kl_star)]);
            if let Some(bf) = &bayes_factor {
                s.insert("bayes_factor".into(), sig3(bf.value));
            }
            json_output(
                config,
                s,
                EquitableOutput {
                    equitability: eq,
                    exponential_prior: exponential,
                    bayes_factor,
                },
            )
        }
        Command::Posterior {
            prior,
            data,
            samples,
            beta0,
        } => {
            let prior = with_beta0(read_prior(prior)?, *beta0)?;
            let d = read_data(data)?;
            let draws = gibbs_joint(&prior, &d, *samples, &mut rng.clone())?;
            let mut s = config_line(config);
            let _ = writeln!(s, "# sampler: {}", serde_json::to_string(&draws.sampler).expect("serializes"));
            s.push_str(&csv_rows(
                "eta,beta,mttf,predictive",
                (0..draws.len()).map(|i| vec![draws.eta[i], draws.beta[i], draws.mttf[i], draws.predictive[i]]),
            ));
            Ok(s)
        }
        Command::Predict {
            prior,
            data,
            samples,
            moment,
            beta0,
            levels,
        } => {
            if let Some(l) = levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
                return Err(CliError::Usage(format!("levels must lie in (0,1), got {l}")));
            }
            let d = match data {
                Some(p) => read_data(p)?,
                None => CensoredSample::empty(),
            };
            let mut prior = with_beta0(read_prior(prior)?, *beta0)?;
            let mut substituted = false;
            if let (Some(k), None) = (moment, beta0) {
                if prior.beta0 == 0.0 && d.r() > 0 {
                    prior.beta0 = k / d.r() as f64;
                    prior.validate()?;
                    substituted = true;
                }
            }
            let draws = gibbs_joint(&prior, &d, *samples, &mut rng.clone())?;
            let moment = match moment {
                Some(k) => Some(MomentReport {
                    k: *k,
                    outcome: predictive_moment(&prior, &d, *k, &draws)?,
                }),
                None => None,
            };
            let pred = sorted(&draws.predictive);
            let mttf = sorted(&draws.mttf);
            let pq: Vec<(f64, f64)> = levels.iter().map(|&l| (l, quantile_of(&pred, l))).collect();
            let mq: Vec<(f64, f64)> = levels.iter().map(|&l| (l, quantile_of(&mttf, l))).collect();
            let mut s = summary([("mttf_median", quantile_of(&mttf, 0.5)), ("beta0", prior.beta0)]);
            if let Some(MomentReport {
                outcome: MomentOutcome::Defined { value, .. },
                ..
            }) = moment
            {
                s.insert("moment".into(), sig3(value));
            }
            let out = PredictOutput {
                draws: draws.len(),
                beta0: prior.beta0,
                beta0_substituted: substituted,
                prior_weight: prior_weight(&prior, &d).ok(),
                moment,
                predictive_quantiles: pq,
                mttf_quantiles: mq,
                sampler: draws.sampler,
            };
            json_output(config, s, out)
        }
        Command::Mle { data } => {
            let fit: MleFit = fit_mle(&read_data(data)?)?;
            let s = summary([
                ("eta", fit.eta),
                ("beta", fit.beta),
                ("sd_eta", fit.sd_eta),
                ("sd_beta", fit.sd_beta),
            ]);
            json_output(config, s, fit)
        }
        Command::Plotdata { report, curve } => plotdata(config, report, *curve, &rng),
    }
}

fn plotdata(config: &RunConfig, report: &Path, curve: Curve, rng: &RandomStream) -> CliResult<String> {
    let mut s = config_line(config);
    match curve {
        Curve::Err | Curve::Beta => {
            let r = read_json::<Output<CalibrationReport>>(report)?.result;
            let (header, pts) = match curve {
                Curve::Err => ("m,err", r.err_curve),
                _ => ("m,beta_tilde", r.beta_curve),
            };
            s.push_str(&csv_rows(header, pts.into_iter().map(|(a, b)| vec![a, b])));
        }
        Curve::Kl => {
            let r = read_json::<Output<EquitableOutput>>(report)?.result;
            s.push_str(&csv_rows("m_e,kl", r.equitability.kl_curve.into_iter().map(|(a, b)| vec![a, b])));
        }
        Curve::Predictive => {
            let r = read_json::<Output<CalibrationReport>>(report)?.result;
            let prior = r.prior;
            let lo = r.spec.quantiles[0].t / 4.0;
            let hi = r.spec.quantiles[r.spec.quantiles.len() - 1].t * 4.0;
            let betas = prior_beta_sample(&prior, config.mc_size.unwrap_or(DEFAULT_SAMPLES), &mut rng.clone())?;
            let n = 200;
            let rows = (0..n).map(|i| {
                let t = (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp();
                vec![t, predictive_cdf_on_sample(t, &prior, &betas).value]
            });
            s.push_str(&csv_rows("t,cdf", rows));
        }
    }
    Ok(s)
}

/// Parses arguments, runs the command and writes its output; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let err = CliError::Usage(e.to_string().trim().to_string());
            eprintln!("{}", err.record());
            return err.exit_code();
        }
    };
    let result = execute(&config).and_then(|text| match &config.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.record());
            e.exit_code()
        }
    }
}
