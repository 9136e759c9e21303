//! Line-oriented `key = value` scenario configuration.
//!
//! `#` starts a comment. Unknown and duplicate keys are rejected. Gain/loss
//! values (`gamma`, `gamma_f`) are given as ratios to the middle tunneling
//! `J12`; for trap-based scenarios times are in `t_l` and energies in `E_l`.

use std::path::PathBuf;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Embedded `ψ+` at constant `Γ`.
    Stationary,
    /// Embedded superposition of `ψ+` and `ψ−` at constant `Γ`.
    Oscillatory,
    /// Hermitian ground state of the trap model, cosine ramp of `Γ`.
    Adiabatic,
    /// Adiabatic run plus the trap depths and displacements per sample.
    Physical,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Stationary => "stationary",
            Self::Oscillatory => "oscillatory",
            Self::Adiabatic => "adiabatic",
            Self::Physical => "physical",
        }
    }

    pub fn uses_trap(self) -> bool {
        matches!(self, Self::Adiabatic | Self::Physical)
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "stationary" => Ok(Self::Stationary),
            "oscillatory" => Ok(Self::Oscillatory),
            "adiabatic" => Ok(Self::Adiabatic),
            "physical" => Ok(Self::Physical),
            _ => Err(format!(
                "unknown scenario `{s}` (expected stationary, oscillatory, adiabatic or physical)"
            )),
        }
    }
}

/// A value that is either given or derived by the run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Auto {
    Auto,
    Value(f64),
}

impl Auto {
    pub fn value(self) -> Option<f64> {
        match self {
            Auto::Auto => None,
            Auto::Value(v) => Some(v),
        }
    }
}

/// Trap block, in units of `l` and `E_l` except where noted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrapConfig {
    /// Middle-well distance in metres.
    pub l: f64,
    pub widths: [f64; 3],
    pub depths: [f64; 4],
    pub particles: f64,
    /// In Bohr radii.
    pub scattering_length: f64,
    /// In atomic mass units.
    pub mass: f64,
}

impl Default for TrapConfig {
    fn default() -> Self {
        Self {
            l: 2e-6,
            widths: [4.0, 4.0, 0.5],
            depths: [-122.0, -80.0, -80.0, -122.0],
            particles: 1e5,
            scattering_length: 10.9,
            mass: crate::physical_map::RB87_MASS_U,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Step-halving agreement of the integrator.
    pub integrator: f64,
    /// Largest `|r1|`, `|r2|` along the run.
    pub residual: f64,
    /// Largest `|r1|`, `|r2|` accepted at `t = 0`.
    pub initial_residual: f64,
    /// Drift of the total population.
    pub norm: f64,
    /// Middle wells against the two-mode oracle; `None` only reports.
    pub equivalence: Option<f64>,
    /// Middle wells of the perturbed run against the unperturbed one.
    pub robustness: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            integrator: 1e-10,
            residual: 1e-8,
            initial_residual: 1e-10,
            norm: 1e-10,
            equivalence: None,
            robustness: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    /// `Γ/J12` (constant) or `Γf/J12` (ramp).
    pub gamma: f64,
    /// Ramp duration.
    pub t_f: f64,
    pub j12: f64,
    /// Interaction strength; `Auto` takes it from the trap.
    pub c: Auto,
    pub d: Auto,
    pub n0: Option<f64>,
    pub n3: Option<f64>,
    /// Oscillatory middle state `ψ+ + w e^{iα} ψ−`.
    pub weight: f64,
    pub weight_phase: f64,
    pub t_end: f64,
    pub dt: f64,
    pub output: Option<PathBuf>,
    pub tol: Tolerances,
    pub perturbation: Option<f64>,
    pub seed: u64,
    pub reservoir_floor: f64,
    pub trap: TrapConfig,
}

/// Keys accepted in a config file.
pub const KEYS: &[&str] = &[
    "scenario",
    "gamma",
    "gamma_f",
    "t_f",
    "j12",
    "c",
    "d",
    "n0",
    "n3",
    "weight",
    "weight_phase",
    "t_end",
    "dt",
    "output",
    "tolerance",
    "residual_tol",
    "initial_residual_tol",
    "norm_tol",
    "equivalence_tol",
    "robustness_tol",
    "perturbation",
    "seed",
    "reservoir_floor",
    "l",
    "wx",
    "wy",
    "wz",
    "v0",
    "v1",
    "v2",
    "v3",
    "particles",
    "scattering_length",
    "mass",
];

/// One `key = value` line.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits the text into entries, checking syntax, key names and duplicates.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(Error::Config {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let (key, value) = (k.trim(), v.trim());
        if !KEYS.contains(&key) {
            return Err(Error::Config {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(Error::Config {
                line,
                message: format!("missing value for `{key}`"),
            });
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(Error::Config {
                line,
                message: format!("duplicate key `{key}` (first set on line {})", prev.line),
            });
        }
        out.push(Entry {
            line,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(out)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    from_entries(&parse_entries(text)?)
}

/// Replaces (or appends) one entry, as used by parameter sweeps.
pub fn with_override(entries: &[Entry], key: &str, value: &str) -> Result<Vec<Entry>> {
    if !KEYS.contains(&key) {
        return Err(Error::Config {
            line: 0,
            message: format!("unknown key `{key}`"),
        });
    }
    let mut out = entries.to_vec();
    match out.iter_mut().find(|e| e.key == key) {
        Some(e) => e.value = value.to_string(),
        None => out.push(Entry {
            line: 0,
            key: key.to_string(),
            value: value.to_string(),
        }),
    }
    Ok(out)
}

const POSITIVE_KEYS: [&str; 20] = [
    "t_f",
    "j12",
    "n0",
    "n3",
    "t_end",
    "dt",
    "tolerance",
    "residual_tol",
    "initial_residual_tol",
    "norm_tol",
    "equivalence_tol",
    "robustness_tol",
    "perturbation",
    "reservoir_floor",
    "l",
    "wx",
    "wy",
    "wz",
    "scattering_length",
    "mass",
];

struct Lookup<'a>(&'a [Entry]);

impl Lookup<'_> {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.0.iter().find(|e| e.key == key)
    }

    fn number(&self, key: &str) -> Result<Option<(f64, usize)>> {
        let Some(e) = self.get(key) else { return Ok(None) };
        let v: f64 = e.value.parse().map_err(|_| Error::Config {
            line: e.line,
            message: format!("`{key}` expects a number, got `{}`", e.value),
        })?;
        if !v.is_finite() {
            return Err(Error::Config {
                line: e.line,
                message: format!("`{key}` must be finite"),
            });
        }
        Ok(Some((v, e.line)))
    }

    fn checked(&self, key: &str, default: f64, ok: fn(f64) -> bool, what: &str) -> Result<f64> {
        match self.number(key)? {
            None => Ok(default),
            Some((v, _)) if ok(v) => Ok(v),
            Some((v, line)) => Err(Error::Config {
                line,
                message: format!("`{key}` must be {what}, got {v}"),
            }),
        }
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        self.checked(key, default, |v| v > 0.0, "positive")
    }

    fn negative(&self, key: &str, default: f64) -> Result<f64> {
        self.checked(key, default, |v| v < 0.0, "negative")
    }

    fn optional_positive(&self, key: &str) -> Result<Option<f64>> {
        match self.number(key)? {
            None => Ok(None),
            Some((v, _)) if v > 0.0 => Ok(Some(v)),
            Some((v, line)) => Err(Error::Config {
                line,
                message: format!("`{key}` must be positive, got {v}"),
            }),
        }
    }

    fn auto(&self, key: &str, default: Auto, positive: bool) -> Result<Auto> {
        let Some(e) = self.get(key) else { return Ok(default) };
        if e.value == "auto" || e.value == "trap" {
            return Ok(Auto::Auto);
        }
        let (v, line) = self.number(key)?.expect("present");
        if positive && !(v > 0.0) {
            return Err(Error::Config {
                line,
                message: format!("`{key}` must be positive or `auto`, got {v}"),
            });
        }
        Ok(Auto::Value(v))
    }

    fn reject(&self, key: &str, scenario: ScenarioKind) -> Result<()> {
        match self.get(key) {
            Some(e) => Err(Error::Config {
                line: e.line,
                message: format!("`{key}` does not apply to the {} scenario", scenario.name()),
            }),
            None => Ok(()),
        }
    }
}

pub fn from_entries(entries: &[Entry]) -> Result<ScenarioConfig> {
    let l = Lookup(entries);
    // value errors first, so `dt = -1` is reported as such even when the
    // scenario is missing
    for key in POSITIVE_KEYS {
        l.positive(key, 1.0)?;
    }
    let scenario_entry = l.get("scenario").ok_or_else(|| Error::MissingKey("scenario".into()))?;
    let scenario: ScenarioKind = scenario_entry.value.parse().map_err(|message| Error::Config {
        line: scenario_entry.line,
        message,
    })?;

    let (gamma_key, gamma, t_f) = if scenario.uses_trap() {
        l.reject("gamma", scenario)?;
        l.reject("j12", scenario)?;
        let (g, _) = l.number("gamma_f")?.ok_or_else(|| Error::MissingKey("gamma_f".into()))?;
        let t_f = l.positive("t_f", f64::NAN)?;
        if t_f.is_nan() {
            return Err(Error::MissingKey("t_f".into()));
        }
        ("gamma_f", g, t_f)
    } else {
        l.reject("gamma_f", scenario)?;
        l.reject("t_f", scenario)?;
        let (g, _) = l.number("gamma")?.ok_or_else(|| Error::MissingKey("gamma".into()))?;
        ("gamma", g, 0.0)
    };
    if !(gamma.abs() < 1.0) {
        let line = l.get(gamma_key).map_or(0, |e| e.line);
        return Err(Error::Config {
            line,
            message: format!("`{gamma_key}` is Γ/J12 and must lie in (-1, 1), got {gamma}"),
        });
    }
    if scenario != ScenarioKind::Oscillatory {
        l.reject("weight", scenario)?;
        l.reject("weight_phase", scenario)?;
    }
    if scenario.uses_trap() {
        for k in ["n0", "n3"] {
            l.reject(k, scenario)?;
        }
    } else {
        for k in ["l", "wx", "wy", "wz", "v0", "v1", "v2", "v3", "particles", "scattering_length", "mass"] {
            l.reject(k, scenario)?;
        }
    }

    let default_trap = TrapConfig::default();
    let trap = TrapConfig {
        l: l.positive("l", default_trap.l)?,
        widths: [
            l.positive("wx", default_trap.widths[0])?,
            l.positive("wy", default_trap.widths[1])?,
            l.positive("wz", default_trap.widths[2])?,
        ],
        depths: [
            l.negative("v0", default_trap.depths[0])?,
            l.negative("v1", default_trap.depths[1])?,
            l.negative("v2", default_trap.depths[2])?,
            l.negative("v3", default_trap.depths[3])?,
        ],
        particles: l.checked("particles", default_trap.particles, |v| v >= 0.0, "non-negative")?,
        scattering_length: l.positive("scattering_length", default_trap.scattering_length)?,
        mass: l.positive("mass", default_trap.mass)?,
    };
    if trap.depths[1] != trap.depths[2] {
        let line = l.get("v2").or(l.get("v1")).map_or(0, |e| e.line);
        return Err(Error::Config {
            line,
            message: "the middle wells must be equally deep (v1 = v2)".into(),
        });
    }

    let default_end = if scenario.uses_trap() { t_f + 10.0 } else { 10.0 };
    let c_default = if scenario.uses_trap() { Auto::Auto } else { Auto::Value(0.0) };
    let c = l.auto("c", c_default, false)?;
    if c == Auto::Auto && !scenario.uses_trap() {
        let line = l.get("c").map_or(0, |e| e.line);
        return Err(Error::Config {
            line,
            message: "`c = trap` needs a trap-based scenario".into(),
        });
    }

    let tol = Tolerances {
        integrator: l.positive("tolerance", 1e-10)?,
        residual: l.positive("residual_tol", 1e-8)?,
        initial_residual: l.positive("initial_residual_tol", 1e-10)?,
        norm: l.positive("norm_tol", 1e-10)?,
        equivalence: l.optional_positive("equivalence_tol")?,
        robustness: l.positive("robustness_tol", 0.05)?,
    };

    let seed = match l.get("seed") {
        None => 1,
        Some(e) => e.value.parse().map_err(|_| Error::Config {
            line: e.line,
            message: format!("`seed` expects a non-negative integer, got `{}`", e.value),
        })?,
    };

    Ok(ScenarioConfig {
        scenario,
        gamma,
        t_f,
        j12: l.positive("j12", 1.0)?,
        c,
        d: l.auto("d", Auto::Auto, true)?,
        n0: l.optional_positive("n0")?,
        n3: l.optional_positive("n3")?,
        weight: l.checked("weight", 0.5, |v| v >= 0.0, "non-negative")?,
        weight_phase: l.number("weight_phase")?.map_or(0.0, |(v, _)| v),
        t_end: l.positive("t_end", default_end)?,
        dt: l.positive("dt", 0.01)?,
        output: l.get("output").map(|e| PathBuf::from(&e.value)),
        tol,
        perturbation: l.optional_positive("perturbation")?,
        seed,
        reservoir_floor: l.positive("reservoir_floor", 1e-3)?,
        trap,
    })
}
