//! Run configuration: defaults, then a flat JSON file, then flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use hexcross::density::{BcMode, PhaseThresholds, StripGeometry};
use hexcross::exact::DEFAULT_CAP;
use hexcross::sampler::{Dynamics, Schedule};
use hexcross::ModelParams;
use serde::{Deserialize, Serialize};

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    /// One JSON document.
    #[default]
    Json,
    /// Flat rows, plus the JSON document when writing to a directory.
    Csv,
}

/// Which strip density to compute.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    FreeHorizontal,
    WiredVerticalComplement,
    /// Both curves and the inequality between them.
    Both,
}

/// Which push probe to run.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PushSelection {
    Primal,
    Dual,
    PrimalStrip,
    DualStrip,
    /// Primal and dual on boxes, with the disjunction between them.
    Pair,
}

/// Every knob of a run. Output location, format and thread count do not
/// change results, so they are read but never written back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub domain: String,
    pub n: f64,
    pub x: f64,
    pub h: f64,
    pub h_prime: f64,
    pub bc: String,
    pub events: Vec<String>,
    pub check: String,
    /// Inner domain of the spatial Markov check.
    pub inner: String,
    pub burn_in: u64,
    pub sweeps: u64,
    pub thin: u64,
    pub chains: usize,
    pub seed: u64,
    pub dynamics: Dynamics,
    pub cap: usize,
    pub sizes: Vec<u32>,
    pub rho: Vec<u32>,
    pub scale: u32,
    pub stretch: u32,
    pub lambda: u32,
    pub height: Option<u32>,
    pub mode: DensityMode,
    pub renorm: bool,
    pub push: PushSelection,
    pub side: u32,
    pub delta: u32,
    pub shift: u32,
    pub cells: usize,
    pub spin: i8,
    pub epsilon: f64,
    pub p_value: f64,
    pub r_squared: f64,
    pub per_sample: bool,
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub format: Format,
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let schedule = Schedule::default();
        let geometry = StripGeometry::default();
        let thresholds = PhaseThresholds::default();
        Self {
            command: String::new(),
            domain: "hexagon:1".into(),
            n: 1.0,
            x: 0.5,
            h: 0.0,
            h_prime: 0.0,
            bc: "free".into(),
            events: vec!["horizontal".into()],
            check: "fkg".into(),
            inner: "hexagon:1".into(),
            burn_in: schedule.burn_in,
            sweeps: schedule.sweeps,
            thin: schedule.thin,
            chains: schedule.chains,
            seed: schedule.seed,
            dynamics: schedule.dynamics,
            cap: DEFAULT_CAP,
            sizes: vec![6, 9, 12, 18],
            rho: vec![2, 4, 8],
            scale: geometry.n,
            stretch: geometry.stretch,
            lambda: geometry.lambda,
            height: geometry.height_override,
            mode: DensityMode::FreeHorizontal,
            renorm: false,
            push: PushSelection::Pair,
            side: 2,
            delta: 2,
            shift: 1,
            cells: 1,
            spin: 1,
            epsilon: thresholds.epsilon,
            p_value: thresholds.p_value,
            r_squared: thresholds.r_squared,
            per_sample: false,
            output_dir: None,
            format: Format::Json,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("malformed config {}", path.display()))
    }

    pub fn params(&self) -> hexcross::Result<ModelParams> {
        ModelParams::new(self.n, self.x, self.h, self.h_prime)
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            burn_in: self.burn_in,
            sweeps: self.sweeps,
            thin: self.thin,
            chains: self.chains,
            seed: self.seed,
            dynamics: self.dynamics,
        }
    }

    pub fn geometry(&self) -> StripGeometry {
        StripGeometry {
            n: self.scale,
            stretch: self.stretch,
            lambda: self.lambda,
            height_override: self.height,
        }
    }

    pub fn thresholds(&self) -> PhaseThresholds {
        PhaseThresholds {
            epsilon: self.epsilon,
            p_value: self.p_value,
            r_squared: self.r_squared,
        }
    }

    pub fn bc_modes(&self) -> Vec<BcMode> {
        match self.mode {
            DensityMode::FreeHorizontal => vec![BcMode::FreeHorizontal],
            DensityMode::WiredVerticalComplement => vec![BcMode::WiredVerticalComplement],
            DensityMode::Both => vec![BcMode::FreeHorizontal, BcMode::WiredVerticalComplement],
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.spin != 1 && self.spin != -1 {
            bail!("spin must be 1 or -1, got {}", self.spin);
        }
        if self.chains == 0 || self.sweeps == 0 || self.thin == 0 {
            bail!("chains, sweeps and thin must be positive");
        }
        if self.events.is_empty() {
            bail!("at least one event is required");
        }
        if self.threads == Some(0) {
            bail!("thread count must be positive");
        }
        Ok(())
    }
}

/// Command-line overrides, one per config field.
#[derive(Args, Debug, Default)]
pub struct Overrides {
    /// Flat JSON config file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Domain such as hexagon:2, box:4x3, strip:2x10 or annulus:2,2.
    #[arg(long, global = true)]
    pub domain: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub n: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub h: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub h_prime: Option<f64>,
    /// free, wired, push-primal, push-dual, mixed:left+,bottom- or dobrushin:0,0.5.
    #[arg(long, global = true)]
    pub bc: Option<String>,
    /// horizontal, vertical, vertical-minus, blocking, all-plus or face:<index>.
    #[arg(long = "event", global = true, value_delimiter = ',')]
    pub events: Vec<String>,
    /// fkg, cbc, cbc-factor, smp, complementarity, normalization or union-bound.
    #[arg(long, global = true)]
    pub check: Option<String>,
    #[arg(long, global = true)]
    pub inner: Option<String>,
    #[arg(long, global = true)]
    pub burn_in: Option<u64>,
    #[arg(long, global = true)]
    pub sweeps: Option<u64>,
    #[arg(long, global = true)]
    pub thin: Option<u64>,
    #[arg(long, global = true)]
    pub chains: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// heat_bath or wolff.
    #[arg(long, global = true)]
    pub dynamics: Option<String>,
    /// Largest domain solved by enumeration.
    #[arg(long, global = true)]
    pub cap: Option<usize>,
    #[arg(long = "size", global = true, value_delimiter = ',')]
    pub sizes: Vec<u32>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub rho: Vec<u32>,
    /// Base scale of strip geometries.
    #[arg(long, global = true)]
    pub scale: Option<u32>,
    #[arg(long, global = true)]
    pub stretch: Option<u32>,
    #[arg(long, global = true)]
    pub lambda: Option<u32>,
    /// Strip height, replacing lambda times stretch.
    #[arg(long, global = true)]
    pub height: Option<u32>,
    /// free_horizontal, wired_vertical_complement or both.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    #[arg(long, global = true)]
    pub renorm: bool,
    /// primal, dual, primal_strip, dual_strip or pair.
    #[arg(long, global = true)]
    pub push: Option<String>,
    #[arg(long, global = true)]
    pub side: Option<u32>,
    #[arg(long, global = true)]
    pub delta: Option<u32>,
    #[arg(long, global = true)]
    pub shift: Option<u32>,
    #[arg(long, global = true)]
    pub cells: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub spin: Option<i8>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub p_value: Option<f64>,
    #[arg(long, global = true)]
    pub r_squared: Option<f64>,
    /// Also write every recorded sample as CSV.
    #[arg(long, global = true)]
    pub per_sample: bool,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; overrides HEXCROSS_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

fn parse_name<T: for<'de> Deserialize<'de>>(what: &str, s: &str) -> anyhow::Result<T> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).with_context(|| format!("unknown {what} {s:?}"))
}

macro_rules! overlay {
    ($cfg:ident, $o:ident; $($field:ident),*) => {
        $(if let Some(v) = $o.$field.clone() { $cfg.$field = v; })*
    };
}

impl Overrides {
    /// Defaults, then the config file, then the environment, then flags.
    pub fn resolve(&self, command: &str, env_threads: Option<&str>) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(t) = env_threads {
            cfg.threads = Some(t.trim().parse().with_context(|| format!("HEXCROSS_THREADS={t:?} is not a count"))?);
        }
        overlay!(cfg, self; domain, n, x, h, h_prime, bc, check, inner, burn_in, sweeps, thin, chains, seed, cap,
            scale, stretch, lambda, side, delta, shift, cells, spin, epsilon, p_value, r_squared, format);
        if self.height.is_some() {
            cfg.height = self.height;
        }
        if self.output_dir.is_some() {
            cfg.output_dir = self.output_dir.clone();
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        if !self.events.is_empty() {
            cfg.events = self.events.clone();
        }
        if !self.sizes.is_empty() {
            cfg.sizes = self.sizes.clone();
        }
        if !self.rho.is_empty() {
            cfg.rho = self.rho.clone();
        }
        if let Some(d) = &self.dynamics {
            cfg.dynamics = parse_name("dynamics", d)?;
        }
        if let Some(m) = &self.mode {
            cfg.mode = parse_name("density mode", m)?;
        }
        if let Some(p) = &self.push {
            cfg.push = parse_name("push probe", p)?;
        }
        cfg.renorm |= self.renorm;
        cfg.per_sample |= self.per_sample;
        cfg.command = command.to_string();
        cfg.validate()?;
        Ok(cfg)
    }
}
