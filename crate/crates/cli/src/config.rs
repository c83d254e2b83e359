//! Effective experiment configuration: CLI flags over config-file entries
//! over defaults, echoed into every output.

use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;

use weldedtrees::classical::TreeStrategy;
use weldedtrees::distsim::Backend;
use weldedtrees::report::CsvDocument;
use weldedtrees::runner::default_threads;
use weldedtrees::walk::LogBase;

/// Shared flags; every value is optional and falls back to the config file,
/// then to the built-in default.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct CommonArgs {
    /// Tree height of the instance.
    #[arg(long)]
    pub n: Option<u32>,
    /// Inclusive height range `A..B`; overrides --n.
    #[arg(long, value_name = "A..B")]
    pub n_range: Option<String>,
    /// Game parameter (tree edges / exploration budget).
    #[arg(long)]
    pub t: Option<usize>,
    /// Payload size in bits (qubits).
    #[arg(long)]
    pub b: Option<u64>,
    /// Failure budget of the routing schedule.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Monte Carlo trials (or seeds, for sweeps).
    #[arg(long)]
    pub trials: Option<u64>,
    /// Root seed; every derived seed is recorded in the output.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Walk backend: fast | register.
    #[arg(long)]
    pub backend: Option<String>,
    /// Log base in the step-range bound: 2 | e.
    #[arg(long, value_name = "{2,e}")]
    pub log_base_range: Option<String>,
    /// Log base in the retry bound: 2 | e.
    #[arg(long, value_name = "{2,e}")]
    pub log_base_eps: Option<String>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (wall time only; never affects results).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Tree-building strategy: paths | balanced | stars-then-paths.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Lower-bound experiment: game3 | middle | improper | extremity.
    #[arg(long)]
    pub experiment: Option<String>,
    /// Flat key=value config file (flags win over file entries).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Game3,
    Middle,
    Improper,
    Extremity,
}

impl Experiment {
    pub fn label(self) -> &'static str {
        match self {
            Experiment::Game3 => "game3",
            Experiment::Middle => "middle",
            Experiment::Improper => "improper",
            Experiment::Extremity => "extremity",
        }
    }
}

/// Fully resolved configuration.
#[derive(Clone, Debug)]
pub struct Effective {
    pub n_list: Vec<u32>,
    pub n_label: String,
    pub t: usize,
    pub b: u64,
    pub epsilon: f64,
    pub trials: u64,
    pub seed: u64,
    pub backend: Backend,
    pub log_base_range: LogBase,
    pub log_base_eps: LogBase,
    pub threads: usize,
    pub strategy: TreeStrategy,
    pub experiment: Experiment,
    pub out: Option<PathBuf>,
}

impl Effective {
    pub fn resolve(args: &CommonArgs) -> Result<Self, String> {
        let file = match &args.config {
            Some(path) => parse_config_file(path)?,
            None => HashMap::new(),
        };
        let n = pick(args.n, &file, "n", 4u32)?;
        let n_range = args
            .n_range
            .clone()
            .or_else(|| file.get("n-range").cloned());
        let (n_list, n_label) = match n_range {
            Some(range) => (parse_n_range(&range)?, range),
            None => (vec![n], n.to_string()),
        };
        if n_list.contains(&0) {
            return Err("usage: --n must be at least 1".into());
        }
        let epsilon = pick(args.epsilon, &file, "epsilon", 0.1f64)?;
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err("usage: --epsilon must lie strictly between 0 and 1".into());
        }
        let backend = match pick_str(&args.backend, &file, "backend", "fast")?.as_str() {
            "fast" => Backend::Fast,
            "register" => Backend::Register,
            other => return Err(format!("usage: unknown backend `{other}`")),
        };
        let log_base_range = parse_log_base(&pick_str(
            &args.log_base_range,
            &file,
            "log-base-range",
            "2",
        )?)?;
        let log_base_eps =
            parse_log_base(&pick_str(&args.log_base_eps, &file, "log-base-eps", "e")?)?;
        let strategy_name = pick_str(&args.strategy, &file, "strategy", "paths")?;
        let strategy = TreeStrategy::from_name(&strategy_name)
            .ok_or_else(|| format!("usage: unknown strategy `{strategy_name}`"))?;
        let experiment = match pick_str(&args.experiment, &file, "experiment", "game3")?.as_str() {
            "game3" => Experiment::Game3,
            "middle" => Experiment::Middle,
            "improper" => Experiment::Improper,
            "extremity" => Experiment::Extremity,
            other => return Err(format!("usage: unknown experiment `{other}`")),
        };
        let out = args.out.clone().or_else(|| {
            file.get("out").map(PathBuf::from)
        });
        Ok(Effective {
            n_list,
            n_label,
            t: pick(args.t, &file, "t", 8usize)?,
            b: pick(args.b, &file, "b", 16u64)?,
            epsilon,
            trials: pick(args.trials, &file, "trials", 10_000u64)?,
            seed: pick(args.seed, &file, "seed", 1u64)?,
            backend,
            log_base_range,
            log_base_eps,
            threads: pick(args.threads, &file, "threads", default_threads())?,
            strategy,
            experiment,
            out,
        })
    }

    /// Echo the science-relevant fields (runtime knobs like threads and the
    /// output path never change results and stay out of the body).
    pub fn echo_into(&self, command: &str, doc: &mut CsvDocument) {
        doc.echo("command", command)
            .echo("n", &self.n_label)
            .echo("t", self.t)
            .echo("b", self.b)
            .echo("epsilon", self.epsilon)
            .echo("trials", self.trials)
            .echo("seed", self.seed)
            .echo("backend", self.backend.label())
            .echo("log-base-range", self.log_base_range.label())
            .echo("log-base-eps", self.log_base_eps.label())
            .echo("strategy", self.strategy.name())
            .echo("experiment", self.experiment.label());
    }
}

fn pick<T: FromStr + Copy>(
    cli: Option<T>,
    file: &HashMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, String> {
    if let Some(v) = cli {
        return Ok(v);
    }
    match file.get(key) {
        Some(raw) => raw
            .parse()
            .map_err(|_| format!("config: bad value `{raw}` for `{key}`")),
        None => Ok(default),
    }
}

fn pick_str(
    cli: &Option<String>,
    file: &HashMap<String, String>,
    key: &str,
    default: &str,
) -> Result<String, String> {
    Ok(cli
        .clone()
        .or_else(|| file.get(key).cloned())
        .unwrap_or_else(|| default.to_string()))
}

fn parse_log_base(raw: &str) -> Result<LogBase, String> {
    match raw {
        "2" => Ok(LogBase::Two),
        "e" => Ok(LogBase::Natural),
        other => Err(format!("usage: log base must be 2 or e, got `{other}`")),
    }
}

/// Inclusive `A..B`; empty when `A > B`.
pub fn parse_n_range(raw: &str) -> Result<Vec<u32>, String> {
    let (lo, hi) = raw
        .split_once("..")
        .ok_or_else(|| format!("usage: expected A..B, got `{raw}`"))?;
    let lo: u32 = lo
        .trim()
        .parse()
        .map_err(|_| format!("usage: bad range start `{lo}`"))?;
    let hi: u32 = hi
        .trim()
        .parse()
        .map_err(|_| format!("usage: bad range end `{hi}`"))?;
    Ok((lo..=hi).collect())
}

fn parse_config_file(path: &PathBuf) -> Result<HashMap<String, String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("config {}: {e}", path.display()))?;
    let mut map = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config {} line {}: expected key=value", path.display(), idx + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}
