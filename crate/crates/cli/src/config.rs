//! `key = value` config files and the fully resolved run configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use smf_core::{LandmarkStrategy, ProximityConfig, SmfConfig};

use crate::{CliError, OrderArg, PartitionArg, RunArgs, StrategyArg};

const CONFIG_COMMANDS: [&str; 2] = ["embed", "eval-reconstruct"];

/// Reads `key = value` lines. Keys containing '.' are informational (run
/// manifests carry timings that way) and are skipped.
pub fn read_config(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "{}:{}: expected 'key = value'",
                path.display(),
                i + 1
            )));
        };
        let key = key.trim().replace('_', "-");
        if key.contains('.') {
            continue;
        }
        pairs.push((key, value.trim().to_string()));
    }
    Ok(pairs)
}

/// Splices the `--config` file's entries in as flags right after the
/// subcommand, so explicit flags later on the line override them.
pub fn inject_config(raw: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(sub) = raw.iter().position(|a| CONFIG_COMMANDS.contains(&a.as_str())) else {
        return Ok(raw);
    };
    let mut path = None;
    let mut it = raw[sub + 1..].iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = it.next().cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(raw) };
    let injected = read_config(Path::new(&path))?
        .into_iter()
        .map(|(k, v)| format!("--{k}={v}"));
    let mut out: Vec<String> = raw[..=sub].to_vec();
    out.extend(injected);
    out.extend_from_slice(&raw[sub + 1..]);
    Ok(out)
}

/// Every run setting with defaults filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub directed: bool,
    pub smf: SmfConfig,
    pub partition: PartitionArg,
    pub sets: Option<usize>,
    pub max_set_size: usize,
    pub partition_file: Option<PathBuf>,
    pub requested: Option<PathBuf>,
    pub landmarks: LandmarkStrategy,
    pub landmarks_in: Option<PathBuf>,
    pub landmarks_out: Option<PathBuf>,
    pub workers: usize,
    pub seed: u64,
    pub best_effort: bool,
}

impl RunConfig {
    pub fn resolve(a: &RunArgs) -> Result<Self, CliError> {
        let input = a
            .input
            .clone()
            .ok_or_else(|| CliError::Usage("--input is required".into()))?;
        let defaults = SmfConfig::default();
        let proximity = match a.order.unwrap_or(OrderArg::Second) {
            OrderArg::First => ProximityConfig::first(),
            OrderArg::Second => ProximityConfig::second(),
        };
        let k = a.k.unwrap_or(defaults.k);
        let smf = SmfConfig {
            d: a.d.unwrap_or(defaults.d),
            k,
            lambda: a.lambda.unwrap_or(defaults.lambda),
            eta: a.eta.unwrap_or(defaults.eta),
            iters: a.iters.unwrap_or(defaults.iters),
            tol: a.tol.unwrap_or(defaults.tol),
            proximity,
        };
        let partition = a.partition.unwrap_or(PartitionArg::Louvain);
        match partition {
            PartitionArg::Io if a.requested.is_none() => {
                return Err(CliError::Usage("--partition io needs --requested".into()))
            }
            PartitionArg::External if a.partition_file.is_none() => {
                return Err(CliError::Usage("--partition external needs --partition-file".into()))
            }
            _ => {}
        }
        if a.requested.is_some() && partition != PartitionArg::Io {
            return Err(CliError::Usage("--requested only applies to --partition io".into()));
        }
        let landmarks = match (a.landmarks, &a.landmarks_in) {
            (Some(StrategyArg::External) | None, Some(_)) => LandmarkStrategy::External,
            (Some(StrategyArg::External), None) => {
                return Err(CliError::Usage("--landmarks external needs --landmarks-in".into()))
            }
            (Some(_), Some(_)) => {
                return Err(CliError::Usage("--landmarks-in conflicts with a landmark strategy".into()))
            }
            (Some(StrategyArg::Dd) | None, None) => LandmarkStrategy::Dd,
            (Some(StrategyArg::Dp), None) => LandmarkStrategy::Dp,
            (Some(StrategyArg::Uf), None) => LandmarkStrategy::Uf,
            (Some(StrategyArg::Gds), None) => LandmarkStrategy::Gds,
        };
        Ok(RunConfig {
            input,
            directed: a.directed.unwrap_or(false),
            smf,
            partition,
            sets: a.sets,
            max_set_size: a.max_set_size.unwrap_or(10 * k),
            partition_file: a.partition_file.clone(),
            requested: a.requested.clone(),
            landmarks,
            landmarks_in: a.landmarks_in.clone(),
            landmarks_out: a.landmarks_out.clone(),
            workers: a.workers.unwrap_or(0),
            seed: a.seed.unwrap_or(0),
            best_effort: a.best_effort.unwrap_or(false),
        })
    }

    /// Settings as config lines; reading them back reproduces `self`.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("input", self.input.display().to_string());
        put("directed", self.directed.to_string());
        let order = match self.smf.proximity.order {
            smf_core::ProximityOrder::First => "first",
            smf_core::ProximityOrder::Second => "second",
        };
        put("order", order.into());
        put("k", self.smf.k.to_string());
        put("d", self.smf.d.to_string());
        put("lambda", self.smf.lambda.to_string());
        put("eta", self.smf.eta.to_string());
        put("iters", self.smf.iters.to_string());
        put("tol", self.smf.tol.to_string());
        let partition = match self.partition {
            PartitionArg::Louvain => "louvain",
            PartitionArg::Random => "random",
            PartitionArg::Io => "io",
            PartitionArg::External => "external",
        };
        put("partition", partition.into());
        if let Some(s) = self.sets {
            put("sets", s.to_string());
        }
        put("max_set_size", self.max_set_size.to_string());
        if let Some(p) = &self.partition_file {
            put("partition_file", p.display().to_string());
        }
        if let Some(p) = &self.requested {
            put("requested", p.display().to_string());
        }
        put("landmarks", self.landmarks.to_string().to_ascii_lowercase());
        if let Some(p) = &self.landmarks_in {
            put("landmarks_in", p.display().to_string());
        }
        if let Some(p) = &self.landmarks_out {
            put("landmarks_out", p.display().to_string());
        }
        put("workers", self.workers.to_string());
        put("seed", self.seed.to_string());
        put("best_effort", self.best_effort.to_string());
        s
    }
}
