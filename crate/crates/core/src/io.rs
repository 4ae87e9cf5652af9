//! Run configuration (TOML) and CSV / summary export.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frac_calc::GridFunction;
use crate::gp_sim::{CovarianceModel, PathBatch};
use crate::grid::TimeGrid;
use crate::replicate::{BlockRecord, HolderTarget, TargetDistribution, XiSpec};

/// Covariance model as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `alpha` defaults to `hurst`; set it to test an fBm against another class exponent.
    Fbm {
        hurst: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    StationaryExp {
        alpha: f64,
    },
    /// Stationary autocovariance tabulated in a `lag,value` CSV file.
    Tabulated {
        file: PathBuf,
        alpha: f64,
    },
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Fbm { hurst: 0.75, alpha: None }
    }
}

impl ModelSpec {
    /// Relative file paths resolve against `base`.
    pub fn build(&self, horizon: f64, base: Option<&Path>) -> Result<CovarianceModel> {
        match self {
            ModelSpec::Fbm { hurst, alpha: None } => CovarianceModel::fbm(*hurst, horizon),
            ModelSpec::Fbm { hurst, alpha: Some(a) } => CovarianceModel::fbm(*hurst, horizon)?.with_alpha(*a),
            ModelSpec::StationaryExp { alpha } => CovarianceModel::stationary_exp(*alpha, horizon),
            ModelSpec::Tabulated { file, alpha } => {
                let p = match base {
                    Some(b) if file.is_relative() => b.join(file),
                    _ => file.clone(),
                };
                let (lags, values) = load_tabulated_kernel(&p)?;
                CovarianceModel::tabulated(lags, values, *alpha, horizon)
            }
        }
    }
}

/// Parameter overrides; unset fields fall back to the module defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub kappa: Option<f64>,
    pub a: Option<f64>,
    pub theta: Option<f64>,
    pub v: Option<f64>,
    pub strike: Option<f64>,
    pub level: Option<f64>,
    pub n_max: Option<usize>,
    pub delta: Option<f64>,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub u: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub replication: Option<f64>,
    pub ks: Option<f64>,
    pub ito: Option<f64>,
    pub success_rate: Option<f64>,
}

/// One run of a pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand the config is meant for; checked when present.
    pub command: Option<String>,
    pub seed: u64,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Grid cells; each pipeline has its own default.
    pub cells: Option<usize>,
    /// Paths or samples; each pipeline has its own default.
    pub paths: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: Overrides,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub distribution: Option<TargetDistribution>,
    pub xi: Option<XiSpec>,
    pub holder_target: Option<HolderTarget>,
    pub radii: Option<Vec<f64>>,
    pub lags: Option<Vec<f64>>,
}

fn default_horizon() -> f64 {
    1.0
}

impl RunConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            command: None,
            seed,
            model: ModelSpec::default(),
            horizon: default_horizon(),
            cells: None,
            paths: None,
            out: None,
            params: Overrides::default(),
            tolerances: Tolerances::default(),
            distribution: None,
            xi: None,
            holder_target: None,
            radii: None,
            lags: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file, returning it with its raw text.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = fs::read_to_string(path)?;
        Ok((Self::from_toml(&text)?, text))
    }

    /// Uniform grid on `[0, horizon]`, `default_cells` unless set.
    pub fn grid(&self, default_cells: usize) -> Result<Arc<TimeGrid>> {
        Ok(TimeGrid::uniform(self.horizon, self.cells.unwrap_or(default_cells))?.shared())
    }
}

/// `time,path_0,path_1,…` with one row per grid point.
pub fn write_paths_csv<W: Write>(batch: &PathBatch, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["time".to_string()];
    header.extend((0..batch.len()).map(|i| format!("path_{i}")));
    w.write_record(&header)?;
    for (k, t) in batch.grid.points().iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(batch.iter().map(|p| p.values[k].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `time,value`.
pub fn write_grid_function_csv<W: Write>(f: &GridFunction, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "value"])?;
    for (t, v) in f.grid().points().iter().zip(f.values()) {
        w.write_record([t.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn read_pairs<R: Read>(input: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_reader(input);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for rec in r.deserialize() {
        let (x, y): (f64, f64) = rec?;
        a.push(x);
        b.push(y);
    }
    Ok((a, b))
}

/// Reads a `time,value` CSV written by [`write_grid_function_csv`].
pub fn read_grid_function_csv<R: Read>(input: R) -> Result<GridFunction> {
    let (t, v) = read_pairs(input)?;
    GridFunction::new(TimeGrid::from_points(t)?.shared(), v)
}

/// Autocovariance table: a `lag,value` CSV with increasing lags from 0.
pub fn load_tabulated_kernel(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    read_pairs(fs::File::open(path)?)
}

pub fn write_records_csv<W: Write>(records: &[BlockRecord], out: W) -> Result<()> {
    write_rows_csv(records, out)
}

/// One CSV row per item, header from the field names.
pub fn write_rows_csv<S: Serialize, W: Write>(rows: &[S], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Summary file: the result table followed by the run config exactly as given.
pub fn write_summary<S: Serialize>(path: &Path, summary: &S, config_text: &str) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a, S> {
        summary: &'a S,
        config: &'a str,
    }
    let text = toml::to_string(&Doc { summary, config: config_text }).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

/// Reads back the config text echoed by [`write_summary`].
pub fn summary_config(path: &Path) -> Result<String> {
    let v: toml::Table = toml::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Config(e.to_string()))?;
    v.get("config")
        .and_then(|c| c.as_str())
        .map(str::to_owned)
        .ok_or_else(|| Error::Config("summary has no config entry".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_defaults() {
        let text = r#"
seed = 7
cells = 1024
[model]
kind = "stationary_exp"
alpha = 0.75
[params]
gamma = 1.1
[distribution]
kind = "normal"
mean = 0.0
sd = 1.0
"#;
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!((c.cells, c.paths), (Some(1024), None));
        assert_eq!(c.params.gamma, Some(1.1));
        assert_eq!(c.model, ModelSpec::StationaryExp { alpha: 0.75 });
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn seed_is_mandatory_and_unknown_keys_rejected() {
        assert!(RunConfig::from_toml("cells = 4").is_err());
        assert!(RunConfig::from_toml("seed = 1\nbogus = 2").is_err());
    }

    #[test]
    fn grid_function_csv_round_trip() {
        let g = TimeGrid::uniform(1.0, 8).unwrap().shared();
        let f = GridFunction::from_fn(g, |t| t * t - 0.1).unwrap();
        let mut buf = Vec::new();
        write_grid_function_csv(&f, &mut buf).unwrap();
        let back = read_grid_function_csv(&buf[..]).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(back.grid().points(), f.grid().points());
    }

    #[test]
    fn summary_echoes_config_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("summary.toml");
        let raw = "seed = 3 # keep this comment\n[model]\nkind = \"fbm\"\nhurst = 0.75\n";
        write_summary(&p, &std::collections::BTreeMap::from([("d", 0.1)]), raw).unwrap();
        assert_eq!(summary_config(&p).unwrap(), raw);
    }
}
