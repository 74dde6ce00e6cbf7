//! Experiment configuration: a sectioned `key = value` text format.
//!
//! Every key has a default, so an empty file is a valid configuration. The
//! rendered form (`ExperimentConfig::to_ini`) lists every key with its
//! resolved value and is what gets hashed and stored beside run outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::agent::{AgentConfig, EpisodeSeeding};
use crate::baselines::{GaParams, QpsoParams};
use crate::channel::{RadioConfig, RisLinks};
use crate::env::{SplitSolver, SystemConfig};
use crate::latency::ComputeParams;
use crate::scenario::{Position, ScenarioConfig, ScenarioError};
use crate::semantic::{SemanticParams, SemanticTable, SyntheticShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    None,
    Power,
    Vehicles,
    RisElements,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::None => "none",
            SweepAxis::Power => "power",
            SweepAxis::Vehicles => "vehicles",
            SweepAxis::RisElements => "ris_elements",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Ppo,
    Ga,
    Qpso,
    /// Co-phasing heuristic with rate-optimal symbol counts.
    Cophase,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ppo, Method::Ga, Method::Qpso, Method::Cophase];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ppo => "ppo",
            Method::Ga => "ga",
            Method::Qpso => "qpso",
            Method::Cophase => "cophase",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn is_search(self) -> bool {
        matches!(self, Method::Ga | Method::Qpso)
    }
}

/// Where the similarity table comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TableSource {
    Synthetic,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticSection {
    pub params: SemanticParams,
    pub nu_max: u32,
    pub table: TableSource,
    pub shape: SyntheticShape,
}

impl Default for SemanticSection {
    fn default() -> Self {
        Self {
            params: SemanticParams::default(),
            nu_max: 20,
            table: TableSource::Synthetic,
            shape: SyntheticShape::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSection {
    /// Fitness evaluations per slot, shared by every method in a comparison.
    pub budget: usize,
    pub ga: GaParams,
    pub qpso: QpsoParams,
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self {
            budget: 2000,
            ga: GaParams::default(),
            qpso: QpsoParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSection {
    pub sweep: SweepAxis,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub out_dir: PathBuf,
    /// Concurrent sweep cells; 0 uses every core.
    pub workers: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            sweep: SweepAxis::None,
            values: Vec::new(),
            seeds: vec![0],
            methods: vec![Method::Ppo, Method::Ga, Method::Qpso],
            out_dir: PathBuf::from("runs/default"),
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub radio: RadioConfig,
    pub semantic: SemanticSection,
    pub compute: ComputeParams,
    pub solver: SplitSolver,
    pub agent: AgentConfig,
    pub baseline: BaselineSection,
    pub experiment: ExperimentSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            radio: RadioConfig::default(),
            semantic: SemanticSection::default(),
            compute: ComputeParams::default(),
            solver: SplitSolver::InteriorPoint,
            agent: AgentConfig::default(),
            baseline: BaselineSection::default(),
            experiment: ExperimentSection::default(),
        }
    }
}

/// A config value that can be read from and written to its text form.
trait Field {
    fn parse_from(&mut self, text: &str) -> Result<(), String>;
    fn render(&self) -> String;
}

macro_rules! scalar_field {
    ($($t:ty),*) => {$(
        impl Field for $t {
            fn parse_from(&mut self, text: &str) -> Result<(), String> {
                *self = text.parse().map_err(|_| format!("expected {}, got `{text}`", stringify!($t)))?;
                Ok(())
            }
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
scalar_field!(f64, usize, u32, u64, bool);

impl Field for PathBuf {
    fn parse_from(&mut self, text: &str) -> Result<(), String> {
        if text.is_empty() {
            return Err("expected a path".into());
        }
        *self = PathBuf::from(text);
        Ok(())
    }
    fn render(&self) -> String {
        self.display().to_string()
    }
}

/// `auto` stands for `None`.
impl<T: Field + Default> Field for Option<T> {
    fn parse_from(&mut self, text: &str) -> Result<(), String> {
        if text == "auto" {
            *self = None;
        } else {
            let mut v = T::default();
            v.parse_from(text)?;
            *self = Some(v);
        }
        Ok(())
    }
    fn render(&self) -> String {
        self.as_ref().map_or_else(|| "auto".to_string(), Field::render)
    }
}

/// Comma-separated list.
impl<T: Field + Default> Field for Vec<T> {
    fn parse_from(&mut self, text: &str) -> Result<(), String> {
        *self = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                let mut v = T::default();
                v.parse_from(s).map(|_| v)
            })
            .collect::<Result<_, _>>()?;
        Ok(())
    }
    fn render(&self) -> String {
        self.iter().map(Field::render).collect::<Vec<_>>().join(", ")
    }
}

impl Field for Position {
    fn parse_from(&mut self, text: &str) -> Result<(), String> {
        let mut v: Vec<f64> = Vec::new();
        v.parse_from(text)?;
        match v[..] {
            [x, y, z] => {
                *self = Position::new(x, y, z);
                Ok(())
            }
            _ => Err(format!("expected `x, y, z`, got `{text}`")),
        }
    }
    fn render(&self) -> String {
        vec![self.x, self.y, self.z].render()
    }
}

impl Field for TableSource {
    fn parse_from(&mut self, text: &str) -> Result<(), String> {
        *self = match text {
            "" => return Err("expected `synthetic` or a path".into()),
            "synthetic" => TableSource::Synthetic,
            path => TableSource::File(PathBuf::from(path)),
        };
        Ok(())
    }
    fn render(&self) -> String {
        match self {
            TableSource::Synthetic => "synthetic".into(),
            TableSource::File(p) => p.display().to_string(),
        }
    }
}

macro_rules! enum_field {
    ($t:ty { $($name:literal => $variant:expr),* $(,)? }) => {
        impl Field for $t {
            fn parse_from(&mut self, text: &str) -> Result<(), String> {
                *self = match text {
                    $($name => $variant,)*
                    _ => return Err(format!("expected one of {}, got `{text}`", [$($name),*].join(" | "))),
                };
                Ok(())
            }
            fn render(&self) -> String {
                $(if *self == $variant { return $name.to_string(); })*
                unreachable!()
            }
        }
    };
}
enum_field!(SweepAxis { "none" => SweepAxis::None, "power" => SweepAxis::Power, "vehicles" => SweepAxis::Vehicles, "ris_elements" => SweepAxis::RisElements });
enum_field!(RisLinks { "all" => RisLinks::All, "v2i_only" => RisLinks::V2iOnly, "v2v_only" => RisLinks::V2vOnly });
enum_field!(SplitSolver { "interior_point" => SplitSolver::InteriorPoint, "closed_form" => SplitSolver::ClosedForm });
enum_field!(EpisodeSeeding { "fixed" => EpisodeSeeding::Fixed, "varying" => EpisodeSeeding::Varying });
enum_field!(Method { "ppo" => Method::Ppo, "ga" => Method::Ga, "qpso" => Method::Qpso, "cophase" => Method::Cophase });

/// Visits every configurable field as (section, key, value).
fn visit(cfg: &mut ExperimentConfig, f: &mut dyn FnMut(&'static str, &'static str, &mut dyn Field)) {
    let s = &mut cfg.scenario;
    f("scenario", "num_vehicles", &mut s.num_vehicles);
    f("scenario", "num_service_vehicles", &mut s.num_service_vehicles);
    f("scenario", "num_rbs", &mut s.num_rbs);
    f("scenario", "slot_duration", &mut s.slot_duration);
    f("scenario", "speed", &mut s.speed);
    f("scenario", "road_length", &mut s.road_length);
    f("scenario", "lane_offsets", &mut s.lane_offsets);
    f("scenario", "rsu_pos", &mut s.rsu_pos);
    f("scenario", "ris_pos", &mut s.ris_pos);
    f("scenario", "task_unit_bits", &mut s.task_unit_bits);
    f("scenario", "arrival_mean", &mut s.arrival_mean);
    f("scenario", "max_served", &mut s.max_served);

    let r = &mut cfg.radio;
    f("radio", "ref_loss", &mut r.ref_loss);
    f("radio", "path_exp_direct", &mut r.path_exp_direct);
    f("radio", "path_exp_ris_edge", &mut r.path_exp_ris_edge);
    f("radio", "path_exp_user_ris", &mut r.path_exp_user_ris);
    f("radio", "rician_factor", &mut r.rician_factor);
    f("radio", "carrier_frequency", &mut r.carrier_frequency);
    f("radio", "element_spacing", &mut r.element_spacing);
    f("radio", "ris_elements", &mut r.ris_elements);
    f("radio", "phase_bits", &mut r.phase_bits);
    f("radio", "tx_power", &mut r.tx_power);
    f("radio", "noise_power", &mut r.noise_power);
    f("radio", "bandwidth", &mut r.bandwidth);
    f("radio", "nlos", &mut r.nlos);
    f("radio", "ris_links", &mut r.ris_links);

    let m = &mut cfg.semantic;
    f("semantic", "units_per_sentence", &mut m.params.units_per_sentence);
    f("semantic", "words_per_sentence", &mut m.params.words_per_sentence);
    f("semantic", "bits_per_sentence", &mut m.params.bits_per_sentence);
    f("semantic", "threshold", &mut m.params.threshold);
    f("semantic", "nu_max", &mut m.nu_max);
    f("semantic", "table", &mut m.table);
    f("semantic", "synthetic_nu_rate", &mut m.shape.nu_rate);
    f("semantic", "synthetic_slope", &mut m.shape.slope);
    f("semantic", "synthetic_midpoint_db", &mut m.shape.midpoint_db);

    let c = &mut cfg.compute;
    f("compute", "cycles_per_bit", &mut c.cycles_per_bit);
    f("compute", "local_freq", &mut c.local_freq);
    f("compute", "rsu_freq", &mut c.rsu_freq);
    f("compute", "sv_freq", &mut c.sv_freq);
    f("compute", "max_delay", &mut c.max_delay);
    f("compute", "solver", &mut cfg.solver);

    let a = &mut cfg.agent;
    f("agent", "hidden", &mut a.hidden);
    f("agent", "log_std_init", &mut a.log_std_init);
    f("agent", "episodes", &mut a.episodes);
    f("agent", "episode_len", &mut a.episode_len);
    f("agent", "episode_seeding", &mut a.episode_seeding);
    f("agent", "eval_rounds", &mut a.eval_rounds);
    f("agent", "eval_len", &mut a.eval_len);
    f("agent", "gamma", &mut a.ppo.gamma);
    f("agent", "clip", &mut a.ppo.clip);
    f("agent", "value_coef", &mut a.ppo.value_coef);
    f("agent", "entropy_coef", &mut a.ppo.entropy_coef);
    f("agent", "lr_actor", &mut a.ppo.lr_actor);
    f("agent", "lr_critic", &mut a.ppo.lr_critic);
    f("agent", "update_steps", &mut a.ppo.update_steps);
    f("agent", "epochs", &mut a.ppo.epochs);
    f("agent", "minibatch", &mut a.ppo.minibatch);

    let b = &mut cfg.baseline;
    f("baseline", "budget", &mut b.budget);
    f("baseline", "ga_population", &mut b.ga.population);
    f("baseline", "ga_tournament", &mut b.ga.tournament);
    f("baseline", "ga_crossover_rate", &mut b.ga.crossover_rate);
    f("baseline", "ga_mutation_rate", &mut b.ga.mutation_rate);
    f("baseline", "ga_elites", &mut b.ga.elites);
    f("baseline", "qpso_population", &mut b.qpso.population);
    f("baseline", "qpso_beta_start", &mut b.qpso.beta_start);
    f("baseline", "qpso_beta_end", &mut b.qpso.beta_end);

    let e = &mut cfg.experiment;
    f("experiment", "sweep", &mut e.sweep);
    f("experiment", "values", &mut e.values);
    f("experiment", "seeds", &mut e.seeds);
    f("experiment", "methods", &mut e.methods);
    f("experiment", "out_dir", &mut e.out_dir);
    f("experiment", "workers", &mut e.workers);
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

fn parse_lines(text: &str) -> Result<BTreeMap<(String, String), Entry>, HarnessError> {
    let mut section: Option<String> = None;
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split(['#', ';']).next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .ok_or_else(|| HarnessError::Parse {
                    line,
                    message: format!("malformed section header `{content}`"),
                })?;
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| HarnessError::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(HarnessError::Parse {
                line,
                message: "empty key".into(),
            });
        }
        let sec = section.clone().ok_or_else(|| HarnessError::Parse {
            line,
            message: format!("key `{key}` appears before any section header"),
        })?;
        let entry = Entry {
            value: value.trim().to_string(),
            line,
            used: false,
        };
        if let Some(prev) = entries.insert((sec.clone(), key.to_string()), entry) {
            return Err(HarnessError::Parse {
                line,
                message: format!("duplicate key `{sec}.{key}` (first set on line {})", prev.line),
            });
        }
    }
    Ok(entries)
}

impl ExperimentConfig {
    /// Parses configuration text on top of the defaults and validates it.
    pub fn from_ini(text: &str) -> Result<Self, HarnessError> {
        let mut entries = parse_lines(text)?;
        let mut cfg = Self::default();
        let mut error = None;
        visit(&mut cfg, &mut |section, key, field| {
            if let Some(e) = entries.get_mut(&(section.to_string(), key.to_string())) {
                e.used = true;
                if let Err(message) = field.parse_from(&e.value) {
                    error.get_or_insert(HarnessError::Parse {
                        line: e.line,
                        message: format!("`{section}.{key}`: {message}"),
                    });
                }
            }
        });
        if let Some(((section, key), e)) = entries.iter().filter(|(_, e)| !e.used).min_by_key(|(_, e)| e.line) {
            return Err(HarnessError::UnknownKey {
                line: e.line,
                key: format!("{section}.{key}"),
            });
        }
        if let Some(e) = error {
            return Err(e);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every key with its resolved value, in a fixed order.
    pub fn to_ini(&self) -> String {
        let mut cfg = self.clone();
        let mut out = String::new();
        let mut current = "";
        visit(&mut cfg, &mut |section, key, field| {
            if section != current {
                if !current.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{section}]");
                current = section;
            }
            let _ = writeln!(out, "{key} = {}", field.render());
        });
        out
    }

    /// SHA-256 of the rendered configuration.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_ini().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |field: &str, message: String| HarnessError::Invalid {
            field: field.to_string(),
            message,
        };
        self.scenario.validate().map_err(|e| match e {
            ScenarioError::Invalid { field, .. } => invalid(&format!("scenario.{field}"), e.to_string()),
            ScenarioError::Empty(what) => {
                let field = match what {
                    "vehicle" => "num_vehicles",
                    "service vehicle" => "num_service_vehicles",
                    "resource block" => "num_rbs",
                    _ => "lane_offsets",
                };
                invalid(&format!("scenario.{field}"), e.to_string())
            }
        })?;
        self.radio.validate().map_err(|e| match &e {
            crate::channel::ChannelError::Invalid { field, .. } => invalid(&format!("radio.{field}"), e.to_string()),
            _ => invalid("radio", e.to_string()),
        })?;

        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(field, format!("must be positive and finite, got {v}")))
            }
        };
        let sem = &self.semantic;
        positive("semantic.units_per_sentence", sem.params.units_per_sentence)?;
        positive("semantic.words_per_sentence", sem.params.words_per_sentence)?;
        positive("semantic.bits_per_sentence", sem.params.bits_per_sentence)?;
        if !(0.0..=1.0).contains(&sem.params.threshold) {
            return Err(invalid("semantic.threshold", format!("must lie in [0, 1], got {}", sem.params.threshold)));
        }
        if sem.nu_max == 0 {
            return Err(invalid("semantic.nu_max", "must be at least 1".into()));
        }
        positive("semantic.synthetic_nu_rate", sem.shape.nu_rate)?;
        positive("semantic.synthetic_slope", sem.shape.slope)?;

        let c = &self.compute;
        positive("compute.cycles_per_bit", c.cycles_per_bit)?;
        positive("compute.local_freq", c.local_freq)?;
        positive("compute.rsu_freq", c.rsu_freq)?;
        positive("compute.sv_freq", c.sv_freq)?;
        positive("compute.max_delay", c.max_delay)?;

        let a = &self.agent;
        if a.hidden.is_empty() || a.hidden.contains(&0) {
            return Err(invalid("agent.hidden", "needs at least one non-zero layer width".into()));
        }
        for (field, v) in [
            ("agent.episodes", a.episodes),
            ("agent.episode_len", a.episode_len),
            ("agent.eval_rounds", a.eval_rounds),
            ("agent.eval_len", a.eval_len),
            ("agent.update_steps", a.ppo.update_steps),
            ("agent.epochs", a.ppo.epochs),
            ("agent.minibatch", a.ppo.minibatch),
        ] {
            if v == 0 {
                return Err(invalid(field, "must be at least 1".into()));
            }
        }
        if !(0.0..=1.0).contains(&a.ppo.gamma) {
            return Err(invalid("agent.gamma", format!("must lie in [0, 1], got {}", a.ppo.gamma)));
        }
        positive("agent.clip", a.ppo.clip)?;
        positive("agent.lr_actor", a.ppo.lr_actor)?;
        positive("agent.lr_critic", a.ppo.lr_critic)?;
        for (field, v) in [("agent.value_coef", a.ppo.value_coef), ("agent.entropy_coef", a.ppo.entropy_coef)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(field, format!("must be non-negative, got {v}")));
            }
        }
        if !a.log_std_init.is_finite() {
            return Err(invalid("agent.log_std_init", "must be finite".into()));
        }

        let b = &self.baseline;
        if b.ga.population == 0 {
            return Err(invalid("baseline.ga_population", "must be at least 1".into()));
        }
        if b.qpso.population == 0 {
            return Err(invalid("baseline.qpso_population", "must be at least 1".into()));
        }
        if b.ga.tournament == 0 {
            return Err(invalid("baseline.ga_tournament", "must be at least 1".into()));
        }
        if b.ga.elites >= b.ga.population {
            return Err(invalid("baseline.ga_elites", "must be smaller than the population".into()));
        }
        if !(0.0..=1.0).contains(&b.ga.crossover_rate) {
            return Err(invalid("baseline.ga_crossover_rate", "must lie in [0, 1]".into()));
        }
        if let Some(rate) = b.ga.mutation_rate {
            if !(0.0..=1.0).contains(&rate) {
                return Err(invalid("baseline.ga_mutation_rate", "must lie in [0, 1]".into()));
            }
        }
        for (field, v) in [("baseline.qpso_beta_start", b.qpso.beta_start), ("baseline.qpso_beta_end", b.qpso.beta_end)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(field, format!("must be non-negative, got {v}")));
            }
        }
        let needs_search = self.experiment.methods.iter().any(|m| m.is_search());
        let min_budget = b.ga.population.max(b.qpso.population);
        if needs_search && b.budget < min_budget {
            return Err(invalid(
                "baseline.budget",
                format!("must be at least the population size {min_budget}, got {}", b.budget),
            ));
        }

        let e = &self.experiment;
        if e.seeds.is_empty() {
            return Err(invalid("experiment.seeds", "needs at least one seed".into()));
        }
        if e.methods.is_empty() {
            return Err(invalid("experiment.methods", "needs at least one method".into()));
        }
        match e.sweep {
            SweepAxis::None => {
                if !e.values.is_empty() {
                    return Err(invalid("experiment.values", "must be empty when sweep = none".into()));
                }
            }
            axis => {
                if e.values.is_empty() {
                    return Err(invalid("experiment.values", format!("a {} sweep needs values", axis.name())));
                }
                for &v in &e.values {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(invalid("experiment.values", format!("sweep values must be positive, got {v}")));
                    }
                    if axis != SweepAxis::Power && v.fract() != 0.0 {
                        return Err(invalid("experiment.values", format!("{} values must be integers, got {v}", axis.name())));
                    }
                }
            }
        }
        Ok(())
    }

    /// The configuration with one sweep value applied.
    pub fn with_sweep_value(&self, value: Option<f64>) -> Self {
        let mut cfg = self.clone();
        if let Some(v) = value {
            match self.experiment.sweep {
                SweepAxis::None => {}
                SweepAxis::Power => cfg.radio.tx_power = v,
                SweepAxis::Vehicles => cfg.scenario.num_vehicles = v as usize,
                SweepAxis::RisElements => cfg.radio.ris_elements = v as usize,
            }
        }
        cfg
    }

    /// Builds the simulator configuration, loading the similarity table.
    pub fn system(&self) -> Result<SystemConfig, HarnessError> {
        let table = match &self.semantic.table {
            TableSource::Synthetic => SemanticTable::synthetic_with(self.semantic.nu_max, self.semantic.shape),
            TableSource::File(path) => SemanticTable::load(path).map_err(|e| HarnessError::Invalid {
                field: "semantic.table".into(),
                message: format!("{}: {e}", path.display()),
            })?,
        };
        Ok(SystemConfig {
            scenario: self.scenario.clone(),
            radio: self.radio.clone(),
            semantic: self.semantic.params.clone(),
            compute: self.compute.clone(),
            table: Arc::new(table),
            solver: self.solver,
        })
    }
}

/// Reads a configuration file. A run manifest is accepted as well, in which
/// case the configuration it recorded is used. A relative table path is
/// resolved against the directory of the file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = if path.extension().is_some_and(|e| e == "json") {
        ExperimentConfig::from_ini(&super::manifest::Manifest::from_json(&text)?.config)?
    } else {
        ExperimentConfig::from_ini(&text)?
    };
    if let TableSource::File(table) = &cfg.semantic.table {
        if table.is_relative() {
            let dir = path.parent().unwrap_or(Path::new(""));
            cfg.semantic.table = TableSource::File(dir.join(table));
        }
    }
    Ok(cfg)
}
