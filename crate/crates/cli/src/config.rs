//! Run configuration: defaults, TOML files and command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use clap::{Args, ValueEnum};
use fab_core::keyswitch::Datapath;
use fab_core::lr::LrConfig;
use fab_core::SchemeParams;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// N = 2^16, 54-bit limbs (the deployment parameters).
    Fpga,
    /// N = 2^14, 30-bit limbs; fast enough for a laptop, not secure.
    Desk,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub log_n: u32,
    /// Bits per RNS limb.
    pub log_q: u32,
    pub levels: usize,
    pub dnum: usize,
    pub fft_iter: usize,
    /// Δ = 2^scale_bits.
    pub scale_bits: u32,
    pub lambda: u32,
    pub seed: u64,
    pub slots: usize,
    pub datapath: Datapath,
    pub devices: usize,
    pub out_dir: PathBuf,
    pub compressed_keys: bool,
    pub lr: LrConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::preset(Preset::Fpga)
    }
}

impl RunConfig {
    pub fn preset(p: Preset) -> Self {
        let params = match p {
            Preset::Fpga => SchemeParams::fpga(),
            Preset::Desk => SchemeParams::desk(),
        };
        Self {
            log_n: params.log_n,
            log_q: params.limb_bits,
            levels: params.levels,
            dnum: params.dnum,
            fft_iter: params.fft_iter,
            scale_bits: params.scale.log2().round() as u32,
            lambda: params.lambda,
            seed: 1,
            slots: match p {
                Preset::Fpga => params.n() / 2,
                Preset::Desk => 64,
            },
            datapath: Datapath::Modified,
            devices: 1,
            out_dir: PathBuf::from("."),
            compressed_keys: false,
            lr: LrConfig::default(),
        }
    }

    pub fn params(&self) -> SchemeParams {
        SchemeParams {
            log_n: self.log_n,
            limb_bits: self.log_q,
            levels: self.levels,
            dnum: self.dnum,
            fft_iter: self.fft_iter,
            scale: 2f64.powi(self.scale_bits as i32),
            lambda: self.lambda,
            ..SchemeParams::fpga()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.params();
        p.validate()?;
        if !self.slots.is_power_of_two() || self.slots > p.n() / 2 {
            bail!("slots = {} must be a power of two ≤ N/2 = {}", self.slots, p.n() / 2);
        }
        if self.devices == 0 {
            bail!("devices must be at least 1");
        }
        self.lr.validate()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Options shared by every subcommand; each overrides the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Starting point before the config file and flags are applied.
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, global = true, env = "FAB_SEED")]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub log_n: Option<u32>,
    #[arg(long, global = true)]
    pub log_q: Option<u32>,
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    #[arg(long, global = true)]
    pub dnum: Option<usize>,
    #[arg(long, global = true)]
    pub fft_iter: Option<usize>,
    #[arg(long, global = true)]
    pub scale_bits: Option<u32>,
    #[arg(long, global = true)]
    pub lambda: Option<u32>,
    #[arg(long, global = true)]
    pub slots: Option<usize>,
    #[arg(long, global = true, value_parser = parse_datapath)]
    pub datapath: Option<Datapath>,
    #[arg(long, global = true)]
    pub devices: Option<usize>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub compressed_keys: Option<bool>,
}

fn parse_datapath(s: &str) -> Result<Datapath, String> {
    match s {
        "modified" => Ok(Datapath::Modified),
        "reference" => Ok(Datapath::Reference),
        other => Err(format!("unknown datapath {other:?} (modified | reference)")),
    }
}

impl CommonArgs {
    /// Preset, then file, then flags (the seed flag also reads `FAB_SEED`).
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let mut c = RunConfig::load(path)?;
                if let Some(p) = self.preset {
                    let text = std::fs::read_to_string(path)?;
                    c = overlay_preset(p, &text)?;
                }
                c
            }
            None => RunConfig::preset(self.preset.unwrap_or(Preset::Fpga)),
        };
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = self.$f.clone() { cfg.$f = v; })*};
        }
        set!(seed, log_n, log_q, levels, dnum, fft_iter, scale_bits, lambda, slots, datapath, devices, out_dir, compressed_keys);
        cfg.lr.seed = cfg.seed;
        cfg.lr.devices = cfg.devices;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Config file values laid over a preset instead of the default one.
fn overlay_preset(p: Preset, text: &str) -> Result<RunConfig> {
    let base = toml::Value::try_from(RunConfig::preset(p))?;
    let file: toml::Value = toml::from_str(text)?;
    let mut merged = base;
    merge(&mut merged, file);
    Ok(merged.try_into()?)
}

fn merge(into: &mut toml::Value, from: toml::Value) {
    match (into, from) {
        (toml::Value::Table(a), toml::Value::Table(b)) => {
            for (k, v) in b {
                match a.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        a.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
