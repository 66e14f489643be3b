//! Run configuration: command-line flags over a flat `key = value` file,
//! with `DBN_SEED` as the seed fallback.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use cryptodbn::backtest::{parse_groups, BacktestConfig, FeatureGroup, DEFAULT_TRAIN_FRACTION};
use cryptodbn::baselines::{ArimaGrid, KernelKind, SvrGrid};
use cryptodbn::bn::SearchConfig;
use cryptodbn::dbn::{LearnConfig, DEFAULT_T_SLICES};
use cryptodbn::indicators::IndicatorConfig;

use crate::CliError;

pub const SEED_ENV: &str = "DBN_SEED";

#[derive(Args, Clone, Debug, Default)]
pub struct DataArgs {
    /// Flat key = value file; flags override its entries
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Coin name used in reports (default: OHLCV file stem)
    #[arg(long)]
    pub coin: Option<String>,
    /// OHLCV CSV: date,open,high,low,close,volume
    #[arg(long)]
    pub ohlcv: Option<PathBuf>,
    /// Macro asset CSV: date,<asset>; repeatable
    #[arg(long = "macro", value_name = "PATH")]
    pub macros: Vec<PathBuf>,
    /// Tweet count CSV: date,tweet_count
    #[arg(long)]
    pub tweets: Option<PathBuf>,
    /// Feature groups, comma separated (1-4)
    #[arg(long)]
    pub groups: Option<String>,
    /// Search seed (fallback: DBN_SEED, then 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Slices per window
    #[arg(long)]
    pub t_slices: Option<usize>,
    /// Fraction of rows used for training
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Parent limit per node
    #[arg(long)]
    pub max_parents: Option<usize>,
    /// Laplace pseudo-count for CPTs
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Hill-climbing restarts
    #[arg(long)]
    pub restarts: Option<usize>,
}

#[derive(Args, Clone, Debug, Default)]
pub struct BaselineArgs {
    /// ARIMA grid, e.g. "p=0,1,2;d=0,1;q=0,1"
    #[arg(long)]
    pub arima_grid: Option<String>,
    /// SVR grid, e.g. "c=1,10;epsilon=0.1;gamma=0.1,1;kernel=rbf"
    #[arg(long)]
    pub svr_grid: Option<String>,
    /// Skip the ARIMA and SVR baselines
    #[arg(long)]
    pub no_baselines: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub coin: String,
    pub ohlcv: PathBuf,
    pub macros: Vec<PathBuf>,
    pub tweets: Option<PathBuf>,
    pub groups: Vec<FeatureGroup>,
    pub seed: u64,
    pub out: PathBuf,
    pub t_slices: usize,
    pub train_fraction: f64,
    pub max_parents: usize,
    pub alpha: f64,
    pub restarts: usize,
    pub arima_grid: ArimaGrid,
    pub svr_grid: SvrGrid,
    pub run_baselines: bool,
}

const KEYS: [&str; 16] = [
    "coin",
    "ohlcv",
    "macro",
    "tweets",
    "groups",
    "seed",
    "out",
    "t_slices",
    "train_fraction",
    "max_parents",
    "alpha",
    "restarts",
    "arima_grid",
    "svr_grid",
    "baselines",
    "data_dir",
];

/// Parses `key = value` lines. `#` starts a comment; keys may use `-` or `_`.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("config line {}: unknown key `{key}`", i + 1)));
        }
        let value = value.trim().to_string();
        if key == "macro" {
            map.entry(key)
                .and_modify(|v: &mut String| {
                    v.push(',');
                    v.push_str(&value);
                })
                .or_insert(value);
        } else {
            map.insert(key, value);
        }
    }
    Ok(map)
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| CliError::Usage(format!("{key}: cannot parse `{s}`")))
        })
        .collect()
}

fn grid_entries(spec: &str) -> Result<Vec<(String, String)>, CliError> {
    spec.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|part| {
            part.split_once('=')
                .map(|(k, v)| (k.trim().to_ascii_lowercase(), v.trim().to_string()))
                .ok_or_else(|| CliError::Usage(format!("grid entry `{part}` is not key=values")))
        })
        .collect()
}

pub fn parse_arima_grid(spec: &str) -> Result<ArimaGrid, CliError> {
    let mut grid = ArimaGrid::default();
    for (key, values) in grid_entries(spec)? {
        let list = parse_list::<usize>(&key, &values)?;
        match key.as_str() {
            "p" => grid.p = list,
            "d" => grid.d = list,
            "q" => grid.q = list,
            other => return Err(CliError::Usage(format!("unknown ARIMA grid key `{other}`"))),
        }
    }
    Ok(grid)
}

pub fn parse_svr_grid(spec: &str) -> Result<SvrGrid, CliError> {
    let mut grid = SvrGrid::default();
    for (key, values) in grid_entries(spec)? {
        match key.as_str() {
            "c" => grid.c = parse_list(&key, &values)?,
            "epsilon" => grid.epsilon = parse_list(&key, &values)?,
            "gamma" => grid.gamma = parse_list(&key, &values)?,
            "kernel" => grid.kernels = parse_list::<KernelKind>(&key, &values)?,
            other => return Err(CliError::Usage(format!("unknown SVR grid key `{other}`"))),
        }
    }
    Ok(grid)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{key}: cannot parse `{value}`")))
}

impl RunConfig {
    /// Flags, then the config file, then `env_seed` (seed only), then defaults.
    pub fn resolve(
        data: &DataArgs,
        baselines: &BaselineArgs,
        env_seed: Option<String>,
    ) -> Result<Self, CliError> {
        let (file, base_dir) = match &data.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (parse_config_file(&text)?, dir)
            }
            None => (BTreeMap::new(), PathBuf::new()),
        };
        // Relative paths in a config file are taken relative to the file.
        let data_dir = file.get("data_dir").map_or(base_dir.clone(), |d| base_dir.join(d));
        let file_path = |key: &str| file.get(key).map(|v| data_dir.join(v));
        let get = |key: &str| file.get(key).map(String::as_str);

        let ohlcv = data
            .ohlcv
            .clone()
            .or_else(|| file_path("ohlcv"))
            .ok_or_else(|| CliError::Usage("an OHLCV CSV is required (--ohlcv)".into()))?;
        let macros = if !data.macros.is_empty() {
            data.macros.clone()
        } else {
            get("macro")
                .map(|v| {
                    v.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| data_dir.join(s))
                        .collect()
                })
                .unwrap_or_default()
        };
        let tweets = data.tweets.clone().or_else(|| file_path("tweets"));
        let coin = data
            .coin
            .clone()
            .or_else(|| get("coin").map(str::to_string))
            .unwrap_or_else(|| {
                ohlcv
                    .file_stem()
                    .map_or("coin".into(), |s| s.to_string_lossy().into_owned())
            });

        let groups = match data.groups.as_deref().or(get("groups")) {
            Some(spec) => parse_groups(spec).map_err(|e| CliError::Usage(e.to_string()))?,
            None => FeatureGroup::ALL.to_vec(),
        };
        let seed = match (data.seed, get("seed"), env_seed) {
            (Some(s), _, _) => s,
            (None, Some(v), _) => parse_value("seed", v)?,
            (None, None, Some(v)) => parse_value(SEED_ENV, &v)?,
            (None, None, None) => 0,
        };
        let out = data
            .out
            .clone()
            .or_else(|| get("out").map(|v| base_dir.join(v)))
            .unwrap_or_else(|| PathBuf::from("out"));

        let pick = |flag: Option<String>, key: &str| flag.or_else(|| get(key).map(str::to_string));
        let t_slices = match pick(data.t_slices.map(|v| v.to_string()), "t_slices") {
            Some(v) => parse_value("t_slices", &v)?,
            None => DEFAULT_T_SLICES,
        };
        let train_fraction = match pick(data.train_fraction.map(|v| v.to_string()), "train_fraction") {
            Some(v) => parse_value("train_fraction", &v)?,
            None => DEFAULT_TRAIN_FRACTION,
        };
        let search = SearchConfig::default();
        let max_parents = match pick(data.max_parents.map(|v| v.to_string()), "max_parents") {
            Some(v) => parse_value("max_parents", &v)?,
            None => search.max_parents,
        };
        let alpha = match pick(data.alpha.map(|v| v.to_string()), "alpha") {
            Some(v) => parse_value("alpha", &v)?,
            None => search.alpha,
        };
        let restarts = match pick(data.restarts.map(|v| v.to_string()), "restarts") {
            Some(v) => parse_value("restarts", &v)?,
            None => search.restarts,
        };
        let arima_grid = match baselines.arima_grid.as_deref().or(get("arima_grid")) {
            Some(spec) => parse_arima_grid(spec)?,
            None => ArimaGrid::default(),
        };
        let svr_grid = match baselines.svr_grid.as_deref().or(get("svr_grid")) {
            Some(spec) => parse_svr_grid(spec)?,
            None => SvrGrid::default(),
        };
        let run_baselines = !baselines.no_baselines
            && match get("baselines") {
                Some(v) => parse_value::<bool>("baselines", v)?,
                None => true,
            };

        let config = Self {
            coin,
            ohlcv,
            macros,
            tweets,
            groups,
            seed,
            out,
            t_slices,
            train_fraction,
            max_parents,
            alpha,
            restarts,
            arima_grid,
            svr_grid,
            run_baselines,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.t_slices < 2 {
            return Err(CliError::Usage(format!("T must be at least 2, got {}", self.t_slices)));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(CliError::Usage(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if !(self.alpha > 0.0) {
            return Err(CliError::Usage(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.max_parents == 0 || self.restarts == 0 {
            return Err(CliError::Usage("max_parents and restarts must be at least 1".into()));
        }
        let paths = std::iter::once(&self.ohlcv)
            .chain(&self.macros)
            .chain(self.tweets.as_ref());
        for p in paths {
            if !p.is_file() {
                return Err(CliError::Data(format!("input file not found: {}", p.display())));
            }
        }
        Ok(())
    }

    pub fn backtest_config(&self) -> BacktestConfig {
        BacktestConfig {
            groups: self.groups.clone(),
            train_fraction: self.train_fraction,
            learn: LearnConfig {
                search: SearchConfig {
                    max_parents: self.max_parents,
                    restarts: self.restarts,
                    seed: self.seed,
                    alpha: self.alpha,
                },
                t_slices: self.t_slices,
                ..LearnConfig::default()
            },
            indicators: IndicatorConfig::default(),
            arima_grid: self.arima_grid.clone(),
            svr_grid: self.svr_grid.clone(),
            run_baselines: self.run_baselines,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing() {
        let map = parse_config_file("# demo\ncoin = eth\nmacro = a.csv\nmacro=b.csv\nt-slices = 4 # comment\n").unwrap();
        assert_eq!(map["coin"], "eth");
        assert_eq!(map["macro"], "a.csv,b.csv");
        assert_eq!(map["t_slices"], "4");
        assert!(parse_config_file("colour = red").is_err());
        assert!(parse_config_file("just words").is_err());
    }

    #[test]
    fn grid_overrides() {
        let g = parse_arima_grid("p=0,1; q=0").unwrap();
        assert_eq!((g.p, g.d, g.q), (vec![0, 1], vec![0, 1, 2], vec![0]));
        let s = parse_svr_grid("c=1,10;kernel=linear,rbf").unwrap();
        assert_eq!(s.c, vec![1.0, 10.0]);
        assert_eq!(s.kernels, vec![KernelKind::Linear, KernelKind::Rbf]);
        assert!(parse_svr_grid("c=abc").is_err());
        assert!(parse_arima_grid("r=1").is_err());
    }
}
