use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use pathrep::io::{write_rows_csv, write_summary, ModelSpec, RunConfig};
use pathrep::CovarianceModel;
use serde::Serialize;

use crate::{Command, Flags, ModelKind};

/// A validated run: merged config, its text for the summary, the model and
/// the output directory.
pub struct Run {
    pub cfg: RunConfig,
    pub config_text: String,
    pub model: CovarianceModel,
    pub out: PathBuf,
    started: Instant,
}

fn set<T: Copy>(dst: &mut Option<T>, src: Option<T>) {
    if src.is_some() {
        *dst = src;
    }
}

impl Run {
    pub fn prepare(cmd: Command, flags: &Flags) -> Result<Self> {
        let (mut cfg, file_text, base) = match (&flags.config, flags.seed) {
            (Some(p), _) => {
                let (c, text) = RunConfig::load(p).with_context(|| format!("reading {}", p.display()))?;
                (c, Some(text), p.parent().map(Path::to_path_buf))
            }
            (None, Some(s)) => (RunConfig::new(s), None, None),
            (None, None) => bail!("a seed is required: pass --seed or a config with `seed`"),
        };
        if let Some(c) = &cfg.command {
            if c != cmd.name() {
                bail!("config is for `{c}`, not `{}`", cmd.name());
            }
        }
        if let Some(s) = flags.seed {
            cfg.seed = s;
        }
        set(&mut cfg.paths, flags.paths);
        set(&mut cfg.cells, flags.grid);
        if flags.out.is_some() {
            cfg.out = flags.out.clone();
        }
        match (flags.model, &mut cfg.model) {
            (Some(ModelKind::Fbm), m) if !matches!(m, ModelSpec::Fbm { .. }) => {
                *m = ModelSpec::Fbm { hurst: 0.75, alpha: None }
            }
            (Some(ModelKind::StationaryExp), m) if !matches!(m, ModelSpec::StationaryExp { .. }) => {
                *m = ModelSpec::StationaryExp { alpha: 0.75 }
            }
            _ => {}
        }
        match &mut cfg.model {
            ModelSpec::Fbm { hurst, alpha } => {
                if let Some(h) = flags.hurst {
                    *hurst = h;
                }
                set(alpha, flags.alpha);
            }
            ModelSpec::StationaryExp { alpha } | ModelSpec::Tabulated { alpha, .. } => {
                if let Some(a) = flags.alpha {
                    *alpha = a;
                }
            }
        }
        let p = &mut cfg.params;
        set(&mut p.alpha, flags.alpha);
        set(&mut p.gamma, flags.gamma);
        set(&mut p.eta, flags.eta);
        set(&mut p.beta, flags.beta);
        set(&mut p.kappa, flags.kappa);
        set(&mut p.a, flags.a);
        set(&mut p.theta, flags.theta);
        set(&mut p.v, flags.v);
        set(&mut p.strike, flags.strike);
        set(&mut p.level, flags.level);
        set(&mut p.n_max, flags.n_max);
        set(&mut p.delta, flags.delta);
        set(&mut p.s, flags.s);
        set(&mut p.t, flags.t);
        set(&mut p.u, flags.u);
        set(&mut cfg.tolerances.replication, flags.tolerance);
        if cfg.paths == Some(0) || cfg.cells == Some(0) {
            bail!("path and cell counts must be positive");
        }
        let model = cfg.model.build(cfg.horizon, base.as_deref())?;
        let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out").join(cmd.name()));
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        let config_text = match file_text {
            Some(t) => t,
            None => cfg.to_toml()?,
        };
        Ok(Self { cfg, config_text, model, out, started: Instant::now() })
    }

    pub fn alpha(&self) -> f64 {
        self.cfg.params.alpha.unwrap_or(self.model.alpha())
    }

    pub fn csv<S: Serialize>(&self, name: &str, rows: &[S]) -> Result<()> {
        let p = self.out.join(name);
        write_rows_csv(rows, fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?)?;
        Ok(())
    }

    pub fn file(&self, name: &str) -> Result<fs::File> {
        let p = self.out.join(name);
        fs::File::create(&p).with_context(|| format!("creating {}", p.display()))
    }

    /// Writes `summary.toml` with the seed and wall time prepended.
    pub fn summary<S: Serialize>(&self, summary: &S) -> Result<()> {
        #[derive(Serialize)]
        struct Stamped<'a, S> {
            seed: u64,
            runtime_seconds: f64,
            #[serde(flatten)]
            inner: &'a S,
        }
        let stamped =
            Stamped { seed: self.cfg.seed, runtime_seconds: self.started.elapsed().as_secs_f64(), inner: summary };
        write_summary(&self.out.join("summary.toml"), &stamped, &self.config_text)?;
        Ok(())
    }
}

/// 2 for a parameter outside its window, 3 for a numerical failure, 1 otherwise.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<pathrep::Error>() {
        Some(pathrep::Error::Window(_)) => 2,
        Some(pathrep::Error::Numerical(_) | pathrep::Error::Factorization { .. }) => 3,
        _ => 1,
    }
}
