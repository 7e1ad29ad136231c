//! Experiment configuration: a TOML document with one section per scenario.
//!
//! ```toml
//! scenario = "mer_sweep"
//! seed = 1
//! trials = 200
//!
//! [ccsm]
//! users = 5
//! L = 64
//! l = 12
//! q = 2
//! frame_lengths = [512, 768]
//!
//! [mer]
//! snr_db = [0.0, 5.0, 10.0]
//! ```
//!
//! Missing keys take their defaults; unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::cwc::CwcParams;
use crate::error::{Error, Result};
use crate::signaling::SignatureAlphabet;
use crate::solvers::{LambdaSchedule, SolverSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    MerSweep,
    MminSearch,
    SolverStudy,
    MacCompare,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::MerSweep,
        ScenarioKind::MminSearch,
        ScenarioKind::SolverStudy,
        ScenarioKind::MacCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::MerSweep => "mer_sweep",
            ScenarioKind::MminSearch => "mmin_search",
            ScenarioKind::SolverStudy => "solver_study",
            ScenarioKind::MacCompare => "mac_compare",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionaryMode {
    /// New dictionaries every trial.
    #[default]
    PerTrial,
    /// One set of dictionaries for the whole run.
    Fixed,
}

/// Network and codec parameters shared by the CCSM scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CcsmSection {
    /// `N + 1`
    pub users: usize,
    #[serde(rename = "L")]
    pub span: usize,
    #[serde(rename = "l")]
    pub weight: usize,
    pub q: usize,
    /// Frame lengths `M` for the MER sweep.
    pub frame_lengths: Vec<usize>,
    pub taps: usize,
    pub decay: f64,
    pub dictionaries: DictionaryMode,
    pub alphabet: SignatureAlphabet,
}

impl Default for CcsmSection {
    fn default() -> Self {
        Self {
            users: 5,
            span: 64,
            weight: 12,
            q: 2,
            frame_lengths: vec![512, 768],
            taps: 32,
            decay: 8.0,
            dictionaries: DictionaryMode::PerTrial,
            alphabet: SignatureAlphabet::Antipodal,
        }
    }
}

impl CcsmSection {
    pub fn params(&self) -> Result<CwcParams> {
        CwcParams::new(self.span, self.weight, self.q).map_err(|e| match e {
            Error::InvalidParameter { field, reason } => {
                Error::config(format!("ccsm.{field}"), reason)
            }
            other => other,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MerSection {
    /// SNR grid in dB; `inf` means noiseless.
    pub snr_db: Vec<f64>,
}

impl Default for MerSection {
    fn default() -> Self {
        Self {
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MminSection {
    /// Network sizes `N + 1` to search.
    pub users: Vec<usize>,
    /// Ascending grid of frame length per user; `M = ceil(users * x)`.
    pub m_per_user: Vec<f64>,
    pub snr_db: f64,
    /// Trials evaluated between checks for an error.
    pub chunk: usize,
}

impl Default for MminSection {
    fn default() -> Self {
        Self {
            users: vec![5, 10, 20],
            m_per_user: (30..=60).step_by(2).map(f64::from).collect(),
            snr_db: f64::INFINITY,
            chunk: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverStudySection {
    pub groups: usize,
    pub span: usize,
    pub weight: usize,
    /// Measurement counts; every matrix is `rows x groups * span`.
    pub rows: Vec<usize>,
    /// Per-measurement SNR grid in dB; `inf` means noiseless.
    pub snr_db: Vec<f64>,
    pub solvers: Vec<SolverSettings>,
}

impl Default for SolverStudySection {
    fn default() -> Self {
        Self {
            groups: 10,
            span: 32,
            weight: 4,
            rows: vec![100, 130, 160],
            snr_db: vec![10.0, 20.0, 30.0, f64::INFINITY],
            solvers: vec![
                SolverSettings::default(),
                SolverSettings::Lasso(Default::default()),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacSection {
    pub users: Vec<usize>,
    pub guard_overhead: f64,
    pub cw_min: u64,
    pub cw_max: u64,
    pub csma_trials: usize,
    pub interval_budget: u64,
    /// Also run the CCSM `M_min` search (uses `[mmin]` grid and the global trial count).
    pub ccsm: bool,
}

impl Default for MacSection {
    fn default() -> Self {
        Self {
            users: vec![2, 5, 10, 15, 20],
            guard_overhead: 0.2,
            cw_min: 16,
            cw_max: 1024,
            csma_trials: 10_000,
            interval_budget: 10_000_000,
            ccsm: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub ccsm: CcsmSection,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub mer: MerSection,
    #[serde(default)]
    pub mmin: MminSection,
    #[serde(default)]
    pub solver_study: SolverStudySection,
    #[serde(default)]
    pub mac: MacSection,
}

fn default_trials() -> usize {
    200
}

impl ExperimentConfig {
    /// Defaults for `scenario`.
    pub fn new(scenario: ScenarioKind) -> Self {
        Self {
            scenario,
            seed: 0,
            trials: default_trials(),
            ccsm: CcsmSection::default(),
            solver: SolverSettings::default(),
            mer: MerSection::default(),
            mmin: MminSection::default(),
            solver_study: SolverStudySection::default(),
            mac: MacSection::default(),
        }
    }

    /// Parses a TOML document, applies `key=value` overrides and validates.
    pub fn from_toml_str(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
        for (key, value) in overrides {
            set_path(&mut doc, key, parse_value(value))?;
        }
        let config: Self = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// The fully resolved configuration, defaults included.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("experiment config is always representable in TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "need at least one trial"));
        }
        let params = self.ccsm.params()?;
        let c = &self.ccsm;
        if c.users == 0 {
            return Err(Error::config("ccsm.users", "need at least one user"));
        }
        if c.taps == 0 {
            return Err(Error::config("ccsm.taps", "need at least one tap"));
        }
        if !(c.decay > 0.0) || !c.decay.is_finite() {
            return Err(Error::config(
                "ccsm.decay",
                format!("must be positive, got {}", c.decay),
            ));
        }
        if c.frame_lengths.is_empty() {
            return Err(Error::config("ccsm.frame_lengths", "grid is empty"));
        }
        if let Some(m) = c.frame_lengths.iter().find(|&&m| m < params.span()) {
            return Err(Error::config(
                "ccsm.frame_lengths",
                format!("M = {m} is below L = {}", params.span()),
            ));
        }
        validate_solver(&self.solver, "solver")?;
        validate_snr_grid(&self.mer.snr_db, "mer.snr_db")?;

        let m = &self.mmin;
        if m.users.is_empty() || m.users.contains(&0) {
            return Err(Error::config(
                "mmin.users",
                "need a non-empty list of positive user counts",
            ));
        }
        if m.m_per_user.is_empty() {
            return Err(Error::config("mmin.m_per_user", "grid is empty"));
        }
        if m.m_per_user.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(Error::config(
                "mmin.m_per_user",
                "entries must be positive and finite",
            ));
        }
        if m.m_per_user.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(
                "mmin.m_per_user",
                "grid must be strictly ascending",
            ));
        }
        validate_snr_grid(&[m.snr_db], "mmin.snr_db")?;
        if m.chunk == 0 {
            return Err(Error::config("mmin.chunk", "must be positive"));
        }

        let s = &self.solver_study;
        if s.groups == 0 || s.weight == 0 || s.weight > s.span {
            return Err(Error::config(
                "solver_study.weight",
                format!(
                    "need groups >= 1 and 1 <= weight <= span, got {} of {}",
                    s.weight, s.span
                ),
            ));
        }
        if s.rows.is_empty() || s.rows.contains(&0) {
            return Err(Error::config(
                "solver_study.rows",
                "need a non-empty list of positive row counts",
            ));
        }
        validate_snr_grid(&s.snr_db, "solver_study.snr_db")?;
        if s.solvers.is_empty() {
            return Err(Error::config("solver_study.solvers", "no solver selected"));
        }
        for (i, solver) in s.solvers.iter().enumerate() {
            validate_solver(solver, &format!("solver_study.solvers[{i}]"))?;
        }

        let mac = &self.mac;
        if mac.users.is_empty() || mac.users.contains(&0) {
            return Err(Error::config(
                "mac.users",
                "need a non-empty list of positive user counts",
            ));
        }
        if !(0.0..1.0).contains(&mac.guard_overhead) {
            return Err(Error::config("mac.guard_overhead", "must lie in [0, 1)"));
        }
        if !mac.cw_min.is_power_of_two() || !mac.cw_max.is_power_of_two() || mac.cw_min > mac.cw_max
        {
            return Err(Error::config(
                "mac.cw_min",
                "need powers of two with cw_min <= cw_max",
            ));
        }
        if mac.csma_trials == 0 {
            return Err(Error::config("mac.csma_trials", "need at least one trial"));
        }
        Ok(())
    }
}

fn validate_snr_grid(grid: &[f64], field: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::config(field, "grid is empty"));
    }
    if grid.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
        return Err(Error::config(field, "SNR values must be numbers or inf"));
    }
    Ok(())
}

fn validate_solver(settings: &SolverSettings, field: &str) -> Result<()> {
    match settings {
        SolverSettings::Gsp(g) => {
            if g.max_iterations == 0 {
                return Err(Error::config(
                    format!("{field}.max_iterations"),
                    "must be at least 1",
                ));
            }
            if !(g.residual_tolerance >= 0.0) {
                return Err(Error::config(
                    format!("{field}.residual_tolerance"),
                    "must be >= 0",
                ));
            }
        }
        SolverSettings::Lasso(l) => {
            if l.max_iterations == 0 {
                return Err(Error::config(
                    format!("{field}.max_iterations"),
                    "must be at least 1",
                ));
            }
            let positive = match l.lambda {
                LambdaSchedule::Fixed { fraction } => fraction > 0.0,
                LambdaSchedule::Continuation { start, end } => end > 0.0 && start >= end,
            };
            if !positive {
                return Err(Error::config(
                    format!("{field}.lambda"),
                    "need a positive regularization schedule",
                ));
            }
        }
    }
    Ok(())
}

/// `10^(-snr/10)`, with `inf` dB mapping to zero noise.
pub fn noise_variance_for_snr(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

/// Interprets an override value as a TOML value, falling back to a bare string.
fn parse_value(text: &str) -> toml::Value {
    format!("v = {text}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

/// Sets a dotted key, creating intermediate tables as needed.
fn set_path(doc: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(key, "malformed override key"));
    }
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut table = doc;
    for part in parents {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(key, format!("`{part}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}
