//! Command-line options and the flat TOML config file.
//!
//! Every option can also be set in a TOML file passed with `--config`, using
//! the long flag name as key. Flags win over file values; defaults fill what
//! neither sets.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tweedie_boost::simgen::{FIXED_DESIGN_PHI, FIXED_DESIGN_RHO};
use tweedie_boost::{Baseline, BoostConfig, Tuning};

use crate::error::{CliError, CliResult};
use crate::ingest::IngestOptions;

#[derive(Parser, Debug)]
#[command(name = "twboost", version, about = "Gradient tree-boosted Tweedie regression")]
pub struct Cli {
    /// Flat TOML file of option values; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a model and save it as JSON.
    Fit(FitArgs),
    /// Score a dataset with a saved model.
    Predict(PredictArgs),
    /// Cross-validate the number of trees and the tree size.
    Tune(TuneArgs),
    /// Estimate the Tweedie index and dispersion by profile likelihood.
    Profile(ProfileArgs),
    /// Variable importance, optionally with shadow-feature adjustment.
    Importance(ImportanceArgs),
    /// Partial dependence on one or two features.
    Pdp(PdpArgs),
    /// Ordered Lorenz curves and Gini indices of competing premiums.
    Lorenz(LorenzArgs),
    /// Generate a synthetic dataset.
    Simulate(SimulateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Predict(_) => "predict",
            Command::Tune(_) => "tune",
            Command::Profile(_) => "profile",
            Command::Importance(_) => "importance",
            Command::Pdp(_) => "pdp",
            Command::Lorenz(_) => "lorenz",
            Command::Simulate(_) => "simulate",
        }
    }
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case")]
pub struct InputArgs {
    /// Input CSV file with a header row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Response column [default: y].
    #[arg(long)]
    pub response: Option<String>,
    /// Weight column; unit weights when absent.
    #[arg(long)]
    pub weight: Option<String>,
    /// Columns to treat as categorical, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub categorical: Option<Vec<String>>,
    /// Columns to leave out, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ignore: Option<Vec<String>>,
    /// Column of true log-means to exclude from the features [default: true_f].
    #[arg(long)]
    pub truth: Option<String>,
}

impl InputArgs {
    fn resolve(&mut self) {
        self.response.get_or_insert_with(|| "y".into());
        self.categorical.get_or_insert_with(Vec::new);
        self.ignore.get_or_insert_with(Vec::new);
        self.truth.get_or_insert_with(|| "true_f".into());
    }

    pub fn path(&self) -> CliResult<&Path> {
        required(&self.data, "data").map(PathBuf::as_path)
    }

    pub fn options(&self, require_response: bool) -> IngestOptions {
        IngestOptions {
            response: self.response.clone(),
            require_response,
            weight: self.weight.clone(),
            categorical: self.categorical.clone().unwrap_or_default(),
            ignore: self.ignore.clone().unwrap_or_default(),
            truth: self.truth.clone(),
        }
    }
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case")]
pub struct BoostArgs {
    /// Boosting stages, or the ceiling when tuning [default: 1000].
    #[arg(long)]
    pub trees: Option<usize>,
    /// Terminal nodes per tree [default: 4].
    #[arg(long)]
    pub leaves: Option<usize>,
    /// Shrinkage in (0, 1] [default: 0.005].
    #[arg(long)]
    pub shrinkage: Option<f64>,
    /// Minimum observations per leaf [default: 10].
    #[arg(long)]
    pub min_node: Option<usize>,
    /// Tweedie index in (1, 2) [default: 1.5].
    #[arg(long)]
    pub rho: Option<f64>,
    /// Cross-validation folds [default: 5].
    #[arg(long)]
    pub folds: Option<usize>,
    /// Seed for fold assignment and shuffles [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
}

impl BoostArgs {
    fn resolve(&mut self) {
        let d = BoostConfig::default();
        self.trees.get_or_insert(d.n_trees);
        self.leaves.get_or_insert(d.n_leaves);
        self.shrinkage.get_or_insert(d.shrinkage);
        self.min_node.get_or_insert(d.min_node);
        self.rho.get_or_insert(d.rho);
        self.folds.get_or_insert(d.folds);
        self.seed.get_or_insert(d.seed);
    }

    pub fn config(&self) -> BoostConfig {
        let d = BoostConfig::default();
        BoostConfig {
            n_trees: self.trees.unwrap_or(d.n_trees),
            n_leaves: self.leaves.unwrap_or(d.n_leaves),
            shrinkage: self.shrinkage.unwrap_or(d.shrinkage),
            min_node: self.min_node.unwrap_or(d.min_node),
            rho: self.rho.unwrap_or(d.rho),
            folds: self.folds.unwrap_or(d.folds),
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}

const DEFAULT_LEAVES_GRID: [usize; 4] = [2, 3, 4, 5];

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case")]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub boost: BoostArgs,
    /// Choose trees and leaves by cross-validation first.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub tune: Option<bool>,
    /// Tree sizes tried when tuning, comma separated [default: 2,3,4,5].
    #[arg(long, value_delimiter = ',')]
    pub leaves_grid: Option<Vec<usize>>,
    /// Model JSON output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV of the training loss after each stage [default: <out>.trace.csv].
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case")]
pub struct PredictArgs {
    /// Saved model JSON.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// CSV of rows to score.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Prediction CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case")]
pub struct TuneArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub boost: BoostArgs,
    /// Tree sizes to try, comma separated [default: 2,3,4,5].
    #[arg(long, value_delimiter = ',')]
    pub leaves_grid: Option<Vec<usize>>,
    /// CSV of the cross-validated loss surface.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case")]
pub struct ProfileArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub boost: BoostArgs,
    /// Points on the rho grid [default: 50].
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Smallest rho on the grid [default: 1.01].
    #[arg(long)]
    pub rho_min: Option<f64>,
    /// Largest rho on the grid [default: 1.99].
    #[arg(long)]
    pub rho_max: Option<f64>,
    /// How trees and leaves are chosen: fixed, shared or per-point [default: shared].
    #[arg(long)]
    pub tuning: Option<String>,
    /// Index at which shared tuning cross-validates [default: 1.5].
    #[arg(long)]
    pub tune_rho: Option<f64>,
    /// Tree sizes tried when tuning, comma separated [default: 2,3,4,5].
    #[arg(long, value_delimiter = ',')]
    pub leaves_grid: Option<Vec<usize>>,
    /// CSV of the profile curve.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional path for the model fitted at the selected rho.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

impl ProfileArgs {
    pub fn tuning(&self) -> CliResult<Tuning> {
        let leaves = self.leaves_grid.clone().unwrap_or_else(|| DEFAULT_LEAVES_GRID.to_vec());
        let boost = self.boost.config();
        match self.tuning.as_deref().unwrap_or("shared") {
            "fixed" => Ok(Tuning::Fixed {
                n_trees: boost.n_trees,
                n_leaves: boost.n_leaves,
            }),
            "shared" => Ok(Tuning::Shared {
                rho: self.tune_rho.unwrap_or(1.5),
                leaves,
            }),
            "per-point" => Ok(Tuning::PerPoint { leaves }),
            other => Err(CliError::config(format!(
                "tuning must be fixed, shared or per-point, got {other:?}"
            ))),
        }
    }
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case")]
pub struct ImportanceArgs {
    /// Saved model JSON.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Training data, needed for the adjusted refits.
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Compare against shadow features over repeated refits.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub adjusted: Option<bool>,
    /// Shadow repetitions [default: 10].
    #[arg(long)]
    pub reps: Option<usize>,
    /// Shadow baseline: mean, max or a quantile level in [0, 1] [default: mean].
    #[arg(long)]
    pub baseline: Option<String>,
    /// Seed for the shadow permutations [default: the model's seed].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Importance CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ImportanceArgs {
    pub fn baseline(&self) -> CliResult<Baseline> {
        match self.baseline.as_deref().unwrap_or("mean") {
            "mean" => Ok(Baseline::Mean),
            "max" => Ok(Baseline::Quantile(1.0)),
            q => match q.parse::<f64>() {
                Ok(q) if (0.0..=1.0).contains(&q) => Ok(Baseline::Quantile(q)),
                _ => Err(CliError::config(format!(
                    "baseline must be mean, max or a quantile level in [0, 1], got {q:?}"
                ))),
            },
        }
    }
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case")]
pub struct PdpArgs {
    /// Saved model JSON.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// One or two features, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    /// Grid points per numeric feature [default: 100].
    #[arg(long)]
    pub points: Option<usize>,
    /// Lower end of numeric grids as a data quantile [default: 0.01].
    #[arg(long)]
    pub lower_quantile: Option<f64>,
    /// Upper end of numeric grids as a data quantile [default: 0.99].
    #[arg(long)]
    pub upper_quantile: Option<f64>,
    /// Partial dependence CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case")]
pub struct LorenzArgs {
    /// CSV holding losses and one premium column per model.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Loss column [default: y].
    #[arg(long)]
    pub losses: Option<String>,
    /// Premium columns to compare, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub scores: Option<Vec<String>>,
    /// Column identifying replications; results are averaged over them.
    #[arg(long)]
    pub replicate: Option<String>,
    /// Base and competing premium columns of a curve to export.
    #[arg(long, value_delimiter = ',')]
    pub curve: Option<Vec<String>>,
    /// CSV output path for the exported curve.
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
    /// Gini matrix CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// model1, model2 or rfg [default: rfg].
    #[arg(long)]
    pub design: Option<String>,
    /// Training rows [default: 2000].
    #[arg(long)]
    pub n: Option<usize>,
    /// Rows of an independent test set drawn from the same function [default: 0].
    #[arg(long)]
    pub test_n: Option<usize>,
    /// Features of the random function [default: 10].
    #[arg(long)]
    pub p: Option<usize>,
    /// Terms of the random function [default: 20].
    #[arg(long)]
    pub terms: Option<usize>,
    /// Dispersion [default: 1 for rfg, fixed for model1 and model2].
    #[arg(long)]
    pub phi: Option<f64>,
    /// Tweedie index [default: 1.5].
    #[arg(long)]
    pub rho: Option<f64>,
    /// Seed of the training draw [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seed of the test draw [default: seed + 1].
    #[arg(long)]
    pub test_seed: Option<u64>,
    /// Training CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Test CSV output path.
    #[arg(long)]
    pub test_out: Option<PathBuf>,
}

pub fn required<'a, T>(value: &'a Option<T>, key: &str) -> CliResult<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| CliError::config(format!("missing required option --{key}")))
}

/// Fills unset options with their defaults so the echoed configuration
/// shows every value in effect.
pub trait Resolve {
    fn resolve(&mut self);
}

impl Resolve for FitArgs {
    fn resolve(&mut self) {
        self.input.resolve();
        self.boost.resolve();
        self.tune.get_or_insert(false);
        self.leaves_grid.get_or_insert_with(|| DEFAULT_LEAVES_GRID.to_vec());
        if let (None, Some(out)) = (&self.trace, &self.out) {
            let mut path = out.as_os_str().to_owned();
            path.push(".trace.csv");
            self.trace = Some(path.into());
        }
    }
}

impl Resolve for PredictArgs {
    fn resolve(&mut self) {}
}

impl Resolve for TuneArgs {
    fn resolve(&mut self) {
        self.input.resolve();
        self.boost.resolve();
        self.leaves_grid.get_or_insert_with(|| DEFAULT_LEAVES_GRID.to_vec());
    }
}

impl Resolve for ProfileArgs {
    fn resolve(&mut self) {
        self.input.resolve();
        self.boost.resolve();
        self.grid_points.get_or_insert(50);
        self.rho_min.get_or_insert(1.01);
        self.rho_max.get_or_insert(1.99);
        self.tuning.get_or_insert_with(|| "shared".into());
        self.tune_rho.get_or_insert(1.5);
        self.leaves_grid.get_or_insert_with(|| DEFAULT_LEAVES_GRID.to_vec());
    }
}

impl Resolve for ImportanceArgs {
    fn resolve(&mut self) {
        self.input.resolve();
        self.adjusted.get_or_insert(false);
        self.reps.get_or_insert(10);
        self.baseline.get_or_insert_with(|| "mean".into());
    }
}

impl Resolve for PdpArgs {
    fn resolve(&mut self) {
        self.input.resolve();
        self.points.get_or_insert(100);
        self.lower_quantile.get_or_insert(0.01);
        self.upper_quantile.get_or_insert(0.99);
    }
}

impl Resolve for LorenzArgs {
    fn resolve(&mut self) {
        self.losses.get_or_insert_with(|| "y".into());
    }
}

impl Resolve for SimulateArgs {
    fn resolve(&mut self) {
        let design = self.design.get_or_insert_with(|| "rfg".into());
        let fixed = matches!(design.as_str(), "model1" | "model2");
        self.n.get_or_insert(2000);
        self.test_n.get_or_insert(0);
        self.p.get_or_insert(10);
        self.terms.get_or_insert(20);
        self.rho.get_or_insert(if fixed { FIXED_DESIGN_RHO } else { 1.5 });
        self.phi.get_or_insert(if fixed { FIXED_DESIGN_PHI } else { 1.0 });
        let seed = *self.seed.get_or_insert(0);
        self.test_seed.get_or_insert(seed.wrapping_add(1));
    }
}

/// Long option names of a subcommand, which double as config file keys.
fn option_keys(cmd: &clap::Command) -> BTreeSet<String> {
    cmd.get_arguments()
        .filter_map(|a| a.get_long())
        .filter(|l| !matches!(*l, "config" | "help" | "version"))
        .map(str::to_string)
        .collect()
}

/// Reads a config file, rejecting keys that no subcommand accepts.
pub fn load_file(path: &Path) -> CliResult<toml::Table> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let table: toml::Table =
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let cli = Cli::command();
    let known: BTreeSet<String> = cli.get_subcommands().flat_map(option_keys).collect();
    if let Some(key) = table.keys().find(|k| !known.contains(*k)) {
        return Err(CliError::config(format!("{}: unknown key {key:?}", path.display())));
    }
    Ok(table)
}

/// Overlays the flags of subcommand `name` on the file values it accepts,
/// then fills defaults.
pub fn merge<T>(name: &str, flags: &T, file: Option<&toml::Table>) -> CliResult<T>
where
    T: Serialize + DeserializeOwned + Resolve,
{
    let cli = Cli::command();
    let sub = cli
        .find_subcommand(name)
        .ok_or_else(|| CliError::config(format!("unknown command {name}")))?;
    let keys = option_keys(sub);
    let mut table: toml::Table = file
        .map(|f| f.iter().filter(|(k, _)| keys.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect())
        .unwrap_or_default();
    let given = toml::Table::try_from(flags).map_err(|e| CliError::config(e.to_string()))?;
    table.extend(given);
    let mut merged: T = table.try_into().map_err(|e: toml::de::Error| CliError::config(e.message().to_string()))?;
    merged.resolve();
    Ok(merged)
}

/// The resolved options as a flat TOML document, usable as `--config`.
pub fn render<T: Serialize>(command: &str, args: &T) -> CliResult<String> {
    let body = toml::to_string(args).map_err(|e| CliError::config(e.to_string()))?;
    Ok(format!("# twboost {command}\n{body}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> toml::Table {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_file_and_defaults_fill_the_rest() {
        let flags = FitArgs {
            boost: BoostArgs {
                trees: Some(50),
                ..BoostArgs::default()
            },
            ..FitArgs::default()
        };
        let file = table("trees = 10\nleaves = 3\ndata = \"a.csv\"\npoints = 7\n");
        let got = merge("fit", &flags, Some(&file)).unwrap();
        assert_eq!(got.boost.trees, Some(50));
        assert_eq!(got.boost.leaves, Some(3));
        assert_eq!(got.input.data, Some(PathBuf::from("a.csv")));
        assert_eq!(got.boost.shrinkage, Some(0.005));
        assert_eq!(got.input.response.as_deref(), Some("y"));
        assert_eq!(got.tune, Some(false));
    }

    #[test]
    fn unknown_and_mistyped_keys_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "tress = 10\n").unwrap();
        assert!(matches!(load_file(&path), Err(CliError::Config(_))));
        let file = table("trees = \"many\"\n");
        assert!(matches!(merge("fit", &FitArgs::default(), Some(&file)), Err(CliError::Config(_))));
    }

    #[test]
    fn rendered_config_round_trips() {
        let mut args = ProfileArgs::default();
        args.input.data = Some("d.csv".into());
        args.resolve();
        let text = render("profile", &args).unwrap();
        let again = merge("profile", &ProfileArgs::default(), Some(&table(&text))).unwrap();
        assert_eq!(render("profile", &again).unwrap(), text);
    }

    #[test]
    fn baseline_and_tuning_parse() {
        let mut a = ImportanceArgs::default();
        assert_eq!(a.baseline().unwrap(), Baseline::Mean);
        a.baseline = Some("max".into());
        assert_eq!(a.baseline().unwrap(), Baseline::Quantile(1.0));
        a.baseline = Some("0.9".into());
        assert_eq!(a.baseline().unwrap(), Baseline::Quantile(0.9));
        a.baseline = Some("1.5".into());
        assert!(a.baseline().is_err());
        let mut p = ProfileArgs::default();
        p.tuning = Some("per-point".into());
        assert_eq!(p.tuning().unwrap(), Tuning::PerPoint { leaves: vec![2, 3, 4, 5] });
        p.tuning = Some("adaptive".into());
        assert!(p.tuning().is_err());
    }
}
