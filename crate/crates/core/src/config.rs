//! Run configuration: defaults, key=value config files, and overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Memory-bank construction strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Identity,
    Random,
    Greedy,
    GreedyProjected,
    Correspondence,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Identity => "identity",
            Strategy::Random => "random",
            Strategy::Greedy => "greedy",
            Strategy::GreedyProjected => "greedy-proj",
            Strategy::Correspondence => "correspondence",
        }
    }

    pub fn parse(s: &str) -> Result<Strategy> {
        match s {
            "identity" => Ok(Strategy::Identity),
            "random" => Ok(Strategy::Random),
            "greedy" => Ok(Strategy::Greedy),
            "greedy-proj" | "greedy_proj" | "greedy-projected" => Ok(Strategy::GreedyProjected),
            "correspondence" => Ok(Strategy::Correspondence),
            other => Err(Error::Config(format!(
                "unknown strategy {other:?} (expected identity|random|greedy|greedy-proj|correspondence)"
            ))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pipeline ablation stage.
///
/// - `M6`: normal bank only (anomalous bank empty; scoring degenerates to
///   the normal-distance term).
/// - `M7`: adds an anomalous bank built from the seen training anomalies.
/// - `M8`: additionally pools simulated anomalies into the anomalous bank.
/// - `M9`: full pipeline; the configured strategy (default correspondence
///   subsampling) builds the dual banks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    M6,
    M7,
    M8,
    M9,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::M6 => "M6",
            Stage::M7 => "M7",
            Stage::M8 => "M8",
            Stage::M9 => "M9",
        }
    }

    pub fn parse(s: &str) -> Result<Stage> {
        match s {
            "M6" | "m6" => Ok(Stage::M6),
            "M7" | "m7" => Ok(Stage::M7),
            "M8" | "m8" => Ok(Stage::M8),
            "M9" | "m9" => Ok(Stage::M9),
            other => Err(Error::Config(format!(
                "unknown stage {other:?} (expected M6|M7|M8|M9)"
            ))),
        }
    }

    pub fn all() -> [Stage; 4] {
        [Stage::M6, Stage::M7, Stage::M8, Stage::M9]
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full pipeline configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Target memory-bank cardinality per distribution.
    pub bank_n: usize,
    /// Neighborhood size for the reweighted distance operator.
    pub k_reweight: usize,
    /// Influence of the anomalous distribution on the local score.
    pub gamma: f64,
    /// Multi-scale neighbor counts for the point descriptors.
    pub scales: Vec<usize>,
    /// Points averaged around each center during aggregation.
    pub aggregation_m: usize,
    /// Number of sampled feature centers per cloud (clamped to cloud size).
    pub centers_g: usize,
    /// Neighborhood size for normal estimation.
    pub normal_k: usize,
    /// Bank construction strategy.
    pub strategy: Strategy,
    /// Ablation stage.
    pub stage: Stage,
    /// Pool simulated anomalies into the anomalous bank (stages M8/M9).
    pub use_simulated: bool,
    /// Master seed; all randomness derives from it.
    pub seed: u64,
    /// Projection dimension for the approximate greedy strategy.
    pub proj_dim: usize,
    /// Peak displacement of simulated defects, in multiples of the median
    /// nearest-neighbor spacing.
    pub sim_magnitude: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            bank_n: 1000,
            k_reweight: 3,
            gamma: 0.3,
            scales: vec![40, 80, 120],
            aggregation_m: 128,
            centers_g: 1024,
            normal_k: 20,
            strategy: Strategy::Correspondence,
            stage: Stage::M9,
            use_simulated: true,
            seed: 7,
            proj_dim: 16,
            sim_magnitude: 2.0,
        }
    }
}

impl RunConfig {
    /// Feature dimension implied by the scale list.
    pub fn feature_dim(&self) -> usize {
        33 * self.scales.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bank_n == 0 {
            return Err(Error::Config("N must be >= 1".into()));
        }
        if self.k_reweight == 0 {
            return Err(Error::Config("K must be >= 1".into()));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::Config(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if self.scales.is_empty() {
            return Err(Error::Config("scales must be non-empty".into()));
        }
        if self.scales.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "scales must be strictly ascending, got {:?}",
                self.scales
            )));
        }
        if self.scales[0] == 0 {
            return Err(Error::Config("scales must be positive".into()));
        }
        if self.aggregation_m == 0 {
            return Err(Error::Config("aggregation_m must be >= 1".into()));
        }
        if self.centers_g == 0 {
            return Err(Error::Config("centers_G must be >= 1".into()));
        }
        if self.normal_k < 3 {
            return Err(Error::Config("normal_k must be >= 3".into()));
        }
        if self.proj_dim == 0 {
            return Err(Error::Config("proj_dim must be >= 1".into()));
        }
        if !(self.sim_magnitude > 0.0) {
            return Err(Error::Config(format!(
                "sim_magnitude must be > 0, got {}",
                self.sim_magnitude
            )));
        }
        Ok(())
    }

    /// Apply one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("bad value {value:?} for {what}"));
        match key {
            "N" | "n" | "bank_n" => self.bank_n = value.parse().map_err(|_| bad("N"))?,
            "K" | "k" | "k_reweight" => self.k_reweight = value.parse().map_err(|_| bad("K"))?,
            "gamma" => self.gamma = value.parse().map_err(|_| bad("gamma"))?,
            "scales" => {
                let parsed: std::result::Result<Vec<usize>, _> = value
                    .split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect();
                self.scales = parsed.map_err(|_| bad("scales"))?;
            }
            "m" | "aggregation_m" => {
                self.aggregation_m = value.parse().map_err(|_| bad("aggregation_m"))?
            }
            "G" | "g" | "centers_G" | "centers_g" => {
                self.centers_g = value.parse().map_err(|_| bad("centers_G"))?
            }
            "normal_k" => self.normal_k = value.parse().map_err(|_| bad("normal_k"))?,
            "strategy" => self.strategy = Strategy::parse(value)?,
            "stage" => self.stage = Stage::parse(value)?,
            "use_simulated" => {
                self.use_simulated = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(bad("use_simulated")),
                }
            }
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "proj_dim" => self.proj_dim = value.parse().map_err(|_| bad("proj_dim"))?,
            "sim_magnitude" => {
                self.sim_magnitude = value.parse().map_err(|_| bad("sim_magnitude"))?
            }
            other => {
                return Err(Error::Config(format!("unknown config key {other:?}")));
            }
        }
        Ok(())
    }

    /// Parse a flat `key=value` config file ('#' starts a comment).
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected key=value", path.display(), i + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), i + 1)))?;
        }
        Ok(())
    }

    /// Canonical key=value snapshot, stable ordering.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("N".into(), self.bank_n.to_string());
        m.insert("K".into(), self.k_reweight.to_string());
        m.insert("gamma".into(), format!("{}", self.gamma));
        m.insert(
            "scales".into(),
            self.scales
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        m.insert("m".into(), self.aggregation_m.to_string());
        m.insert("G".into(), self.centers_g.to_string());
        m.insert("normal_k".into(), self.normal_k.to_string());
        m.insert("strategy".into(), self.strategy.to_string());
        m.insert("stage".into(), self.stage.to_string());
        m.insert("use_simulated".into(), self.use_simulated.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("proj_dim".into(), self.proj_dim.to_string());
        m.insert("sim_magnitude".into(), format!("{}", self.sim_magnitude));
        m
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.snapshot() {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}
