//! TOML experiment configuration.

use serde::Deserialize;

use super::apps::LocalGate;
use super::scenario::{Hardware, ScenarioKind, ScenarioSpec, SweepParam};
use super::ExperimentError;
use crate::compiler::parse_pipeline;
use crate::network::{LinkParams, LAB_P_SUCC};
use crate::quantum::NoiseModel;
use crate::timing::TimingParams;

#[derive(Clone, Debug, Deserialize)]
#[serde(default)]
pub struct HardwareSection {
    #[serde(flatten)]
    pub timing: TimingParams,
    #[serde(flatten)]
    pub noise: NoiseModel,
    pub local_iterations: usize,
    pub local_gates: usize,
    pub local_gate: LocalGate,
    pub pad_min: f64,
    pub pad_max: f64,
}

impl Default for HardwareSection {
    fn default() -> Self {
        let hw = Hardware::default();
        Self {
            timing: hw.timing,
            noise: hw.noise,
            local_iterations: hw.local_iterations,
            local_gates: hw.local_gates,
            local_gate: hw.local_gate,
            pad_min: hw.pad_range.0,
            pad_max: hw.pad_range.1,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default)]
pub struct LinkSection {
    #[serde(flatten)]
    pub params: LinkParams,
    /// Zero-distance success probability the link is scaled to; `0`
    /// keeps `p_scale` as given.
    pub p_succ_zero: f64,
    pub hops: u32,
    pub latency_ns: Option<u64>,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self { params: LinkParams::default(), p_succ_zero: LAB_P_SUCC, hops: 0, latency_ns: None }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default)]
pub struct ScheduleSection {
    pub bin_multiple: f64,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self { bin_multiple: 1.0 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default)]
pub struct ScenarioSection {
    pub kind: Option<ScenarioKind>,
    pub n: usize,
    pub c: usize,
    pub treatment: bool,
    pub sweep: Option<SweepParam>,
    pub values: Option<Vec<f64>>,
    pub runs_per_seed: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub server: Option<String>,
    pub c1: Option<String>,
    pub local: Option<String>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            kind: None,
            n: 3,
            c: 2,
            treatment: false,
            sweep: None,
            values: None,
            runs_per_seed: None,
            seeds: None,
            server: None,
            c1: None,
            local: None,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default)]
pub struct Config {
    pub hardware: HardwareSection,
    pub link: LinkSection,
    pub schedule: ScheduleSection,
    pub scenario: ScenarioSection,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ExperimentError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn hardware(&self) -> Result<Hardware, ExperimentError> {
        let h = &self.hardware;
        h.timing.validate().map_err(ExperimentError::Config)?;
        h.noise.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        let link = if self.link.p_succ_zero > 0.0 {
            self.link.params.calibrated(self.link.p_succ_zero)
        } else {
            self.link.params
        };
        link.validate()?;
        if !(self.schedule.bin_multiple > 0.0) || !(0.0 < h.pad_min && h.pad_min <= h.pad_max) {
            return Err(ExperimentError::Config("bin multiple and padding range must be positive".into()));
        }
        Ok(Hardware {
            timing: h.timing,
            noise: h.noise,
            link,
            hops: self.link.hops,
            latency_ns: self.link.latency_ns,
            bin_multiple: self.schedule.bin_multiple,
            local_iterations: h.local_iterations,
            local_gates: h.local_gates,
            local_gate: h.local_gate,
            pad_range: (h.pad_min, h.pad_max),
            ..Hardware::default()
        })
    }

    /// The scenario described by the file, starting from the published
    /// configuration of its kind.
    pub fn scenario(&self) -> Result<ScenarioSpec, ExperimentError> {
        let s = &self.scenario;
        let kind = s.kind.ok_or_else(|| ExperimentError::Config("scenario.kind is required".into()))?;
        let mut spec = ScenarioSpec::paper(kind, s.n, s.c, s.treatment);
        spec.hw = self.hardware()?;
        if kind == ScenarioKind::BlockScen2 {
            spec.hw.noise.f1 = 1.0;
        }
        if let Some(p) = s.sweep {
            spec.sweep = p;
        }
        if let Some(v) = &s.values {
            spec.values = v.clone();
        }
        if let Some(r) = s.runs_per_seed {
            spec.runs_per_seed = r;
        }
        if let Some(seeds) = &s.seeds {
            spec.seeds = seeds.clone();
        }
        if let Some(p) = &s.server {
            spec.pipelines.server = parse_pipeline(p)?;
        }
        if let Some(p) = &s.c1 {
            spec.pipelines.c1 = Some(parse_pipeline(p)?);
        }
        if let Some(p) = &s.local {
            spec.pipelines.local = parse_pipeline(p)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}
