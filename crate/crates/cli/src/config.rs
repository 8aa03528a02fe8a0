//! Command-line and TOML configuration.
//!
//! Flags override values from a `--config` file, which override the
//! per-experiment defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use corrwork_core::LogBase;
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    /// Mutual information and work against output temperature.
    Fig1,
    /// Work cost over the (δ, θ) plane.
    Fig2,
    /// Work fluctuations relative to average work against created information.
    Fig3,
    /// Work fluctuations against average work.
    Fig4,
    /// Change in energy spread relative to work against created information.
    Fig5,
    /// Qudit temperature targeting through Bell-subspace rotations.
    Qudit,
    /// Two-time measurement work distribution at one unitary.
    Dist,
    /// Parametric variance expression against the measured variance.
    Errata,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig1 => "fig1",
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::Fig5 => "fig5",
            Experiment::Qudit => "qudit",
            Experiment::Dist => "dist",
            Experiment::Errata => "errata",
        }
    }

    pub fn all() -> &'static [Experiment] {
        &[
            Experiment::Fig1,
            Experiment::Fig2,
            Experiment::Fig3,
            Experiment::Fig4,
            Experiment::Fig5,
            Experiment::Qudit,
            Experiment::Dist,
            Experiment::Errata,
        ]
    }

    fn default_beta_in(self) -> Vec<f64> {
        match self {
            Experiment::Fig3 | Experiment::Fig4 | Experiment::Fig5 => vec![100.0, 1.0, 0.1],
            Experiment::Fig2 => vec![4.0],
            _ => vec![1.0],
        }
    }

    fn default_grid(self) -> usize {
        match self {
            Experiment::Fig2 => 101,
            Experiment::Qudit => 25,
            Experiment::Errata => 9,
            Experiment::Dist => 2,
            _ => 201,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
pub enum LogBaseArg {
    #[value(name = "e")]
    #[serde(rename = "e")]
    E,
    #[value(name = "2")]
    #[serde(rename = "2")]
    Two,
}

impl From<LogBaseArg> for LogBase {
    fn from(b: LogBaseArg) -> Self {
        match b {
            LogBaseArg::E => LogBase::E,
            LogBaseArg::Two => LogBase::Two,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "corrwork", version, about = "Work cost and fluctuations of correlating thermal qubits and qudits")]
#[command(allow_negative_numbers = true)]
struct Cli {
    /// Experiment to run.
    experiment: Option<Experiment>,
    /// Comma-separated initial inverse temperatures.
    #[arg(long, value_delimiter = ',')]
    beta_in: Option<Vec<f64>>,
    /// Level spacing.
    #[arg(long)]
    omega: Option<f64>,
    /// Points per sweep axis.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, value_enum)]
    log_base: Option<LogBaseArg>,
    /// Rotation angle for `dist`.
    #[arg(long)]
    theta: Option<f64>,
    /// Phase angle for `dist`.
    #[arg(long)]
    delta: Option<f64>,
    /// Local dimension for `qudit` (all of 2, 3, 4 when omitted).
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=4))]
    d: Option<u8>,
    /// Single output temperature target for `qudit`.
    #[arg(long)]
    beta_out: Option<f64>,
    /// Merge tolerance for degenerate work values, in units of `omega`.
    #[arg(long)]
    merge_tol: Option<f64>,
    /// Target tolerance for the qudit phase search.
    #[arg(long)]
    optimizer_tol: Option<f64>,
    /// Output path, `-` for standard output.
    #[arg(long)]
    out: Option<String>,
    /// TOML file with any of the above settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    experiment: Option<Experiment>,
    beta_in: Option<Vec<f64>>,
    omega: Option<f64>,
    grid: Option<usize>,
    log_base: Option<LogBaseArg>,
    theta: Option<f64>,
    delta: Option<f64>,
    d: Option<u8>,
    beta_out: Option<f64>,
    merge_tol: Option<f64>,
    optimizer_tol: Option<f64>,
    out: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub omega: f64,
    pub beta_in_list: Vec<f64>,
    pub grid_resolution: usize,
    pub log_base: LogBase,
    pub output_path: String,
    pub merge_tol: f64,
    pub optimizer_tol: f64,
    pub theta: f64,
    pub delta: f64,
    pub d: Option<usize>,
    pub beta_out: Option<f64>,
}

impl ExperimentConfig {
    /// Defaults for `experiment`.
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            omega: 1.0,
            beta_in_list: experiment.default_beta_in(),
            grid_resolution: experiment.default_grid(),
            log_base: LogBase::E,
            output_path: "-".into(),
            merge_tol: corrwork_core::work::DEFAULT_MERGE_TOL,
            optimizer_tol: 1e-10,
            theta: std::f64::consts::FRAC_PI_4,
            delta: 0.0,
            d: None,
            beta_out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return usage(format!("--omega must be positive and finite, got {}", self.omega));
        }
        if self.beta_in_list.is_empty() {
            return usage("--beta-in needs at least one value".into());
        }
        if let Some(b) = self.beta_in_list.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return usage(format!("--beta-in values must be positive and finite, got {b}"));
        }
        if self.grid_resolution < 2 {
            return usage(format!("--grid must be at least 2, got {}", self.grid_resolution));
        }
        for (name, v) in [("merge-tol", self.merge_tol), ("optimizer-tol", self.optimizer_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return usage(format!("--{name} must be positive, got {v}"));
            }
        }
        if !(self.theta.is_finite() && self.delta.is_finite()) {
            return usage("--theta and --delta must be finite".into());
        }
        if let Some(d) = self.d {
            if !(2..=4).contains(&d) {
                return usage(format!("--d must be 2, 3 or 4, got {d}"));
            }
        }
        if let Some(b) = self.beta_out {
            if b.is_nan() {
                return usage("--beta-out must be a number".into());
            }
        }
        Ok(())
    }

    /// `key = value` lines echoed into the CSV header.
    pub fn echo(&self) -> Vec<String> {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let mut lines = vec![
            format!("experiment = {}", self.experiment),
            format!("omega = {}", self.omega),
            format!("beta_in = {}", list(&self.beta_in_list)),
            format!("grid = {}", self.grid_resolution),
            format!("log_base = {}", match self.log_base {
                LogBase::E => "e",
                LogBase::Two => "2",
            }),
        ];
        match self.experiment {
            Experiment::Dist => {
                lines.push(format!("theta = {}", self.theta));
                lines.push(format!("delta = {}", self.delta));
                lines.push(format!("merge_tol = {:e}", self.merge_tol));
            }
            Experiment::Qudit => {
                lines.push(format!("d = {}", self.d.map_or("2,3,4".to_string(), |d| d.to_string())));
                if let Some(b) = self.beta_out {
                    lines.push(format!("beta_out = {b}"));
                }
                lines.push(format!("optimizer_tol = {:e}", self.optimizer_tol));
            }
            _ => {}
        }
        lines
    }
}

fn read_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
}

/// Builds a configuration from command-line arguments (without the program
/// name) and an optional TOML file. A `--config` flag in `args` is used
/// when `file` is `None`.
pub fn parse_config<I, T>(args: I, file: Option<&Path>) -> Result<ExperimentConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("corrwork")).chain(args.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Info(e.to_string())
        }
        _ => CliError::Usage(e.to_string()),
    })?;
    let file_cfg = match file.map(Path::to_path_buf).or(cli.config.clone()) {
        Some(path) => read_file(&path)?,
        None => FileConfig::default(),
    };

    let experiment = cli.experiment.or(file_cfg.experiment).ok_or_else(|| {
        let names: Vec<_> = Experiment::all().iter().map(|e| e.name()).collect();
        CliError::Usage(format!("no experiment given; choose one of {}", names.join(", ")))
    })?;
    let mut cfg = ExperimentConfig::new(experiment);
    macro_rules! merge {
        ($field:ident => $target:expr) => {
            if let Some(v) = cli.$field.clone().or(file_cfg.$field.clone()) {
                $target = v.into();
            }
        };
    }
    merge!(beta_in => cfg.beta_in_list);
    merge!(omega => cfg.omega);
    merge!(grid => cfg.grid_resolution);
    merge!(log_base => cfg.log_base);
    merge!(theta => cfg.theta);
    merge!(delta => cfg.delta);
    merge!(merge_tol => cfg.merge_tol);
    merge!(optimizer_tol => cfg.optimizer_tol);
    merge!(out => cfg.output_path);
    cfg.d = cli.d.or(file_cfg.d).map(usize::from);
    cfg.beta_out = cli.beta_out.or(file_cfg.beta_out);
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_fig1() {
        let cfg = parse_config(["fig1", "--beta-in", "1"], None).unwrap();
        assert_eq!(cfg.experiment, Experiment::Fig1);
        assert_eq!(cfg.beta_in_list, vec![1.0]);
        assert_eq!(cfg.omega, 1.0);
        assert_eq!(cfg.grid_resolution, 201);
    }

    #[test]
    fn list_of_temperatures() {
        let cfg = parse_config(["fig3", "--beta-in", "100,1,0.1"], None).unwrap();
        assert_eq!(cfg.beta_in_list, vec![100.0, 1.0, 0.1]);
    }

    #[test]
    fn defaults_per_experiment() {
        let cfg = parse_config(["fig2"], None).unwrap();
        assert_eq!((cfg.beta_in_list.clone(), cfg.grid_resolution), (vec![4.0], 101));
        let cfg = parse_config(["fig4"], None).unwrap();
        assert_eq!(cfg.beta_in_list, vec![100.0, 1.0, 0.1]);
        let cfg = parse_config(["qudit", "--beta-out", "-0.5", "--d", "3"], None).unwrap();
        assert_eq!((cfg.d, cfg.beta_out), (Some(3), Some(-0.5)));
    }

    #[test]
    fn unknown_experiment_is_usage_error() {
        let err = parse_config(["bogus"], None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("fig1"));
    }

    #[test]
    fn malformed_numbers_are_usage_errors() {
        for args in [
            vec!["fig1", "--beta-in", "1,x"],
            vec!["fig1", "--omega", "-1"],
            vec!["fig1", "--grid", "1"],
            vec!["qudit", "--d", "5"],
            vec!["fig1", "--beta-in", "0"],
        ] {
            assert_eq!(parse_config(args.clone(), None).unwrap_err().exit_code(), 2, "{args:?}");
        }
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("corrwork-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        std::fs::write(&path, "experiment = \"fig4\"\nomega = 2.0\nbeta_in = [3.0]\nlog_base = \"2\"\n").unwrap();
        let cfg = parse_config(["--omega", "0.5"], Some(&path)).unwrap();
        assert_eq!(cfg.experiment, Experiment::Fig4);
        assert_eq!(cfg.omega, 0.5);
        assert_eq!(cfg.beta_in_list, vec![3.0]);
        assert_eq!(cfg.log_base, LogBase::Two);
        std::fs::write(&path, "experiment = \"fig4\"\nbogus = 1\n").unwrap();
        assert_eq!(parse_config(Vec::<String>::new(), Some(&path)).unwrap_err().exit_code(), 2);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
