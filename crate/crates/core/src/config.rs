//! Experiment configuration: a small INI dialect (`[section]`, `key = value`,
//! comma-separated arrays, `#`/`;` comments) parsed into a fully validated
//! object, with line-numbered diagnostics and rejection of unknown keys.
//!
//! The parsed object also owns the determinism contract: its canonical string
//! lists every *effective* setting (defaults materialized, seed overrides
//! applied) in a fixed order, and the SHA-256 of that string is stamped into
//! every CSV. Thread count and output location never enter the hash — they
//! must not change results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hamiltonian::PotentialSet;
use crate::hartree::Stepper;
use crate::propagator::Method;
use crate::space::LatticeGrid;

/// Lattice and particle numbers. `n_pairs` zips the `N1` and `N2` lists: one
/// sweep cell per pair, in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSection {
    pub m: usize,
    pub n_pairs: Vec<(usize, usize)>,
    pub spacing: f64,
}

/// Named potential presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Free mixture.
    Zero,
    /// On-site inter-species contact of height 1.
    DeltaV12,
}

/// Potentials: a preset or explicit arrays (absent arrays default to zero).
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialsSection {
    pub preset: Option<Preset>,
    pub u1: Option<Vec<f64>>,
    pub u2: Option<Vec<f64>>,
    pub v1: Option<Vec<f64>>,
    pub v2: Option<Vec<f64>>,
    pub v12: Option<Vec<f64>>,
}

impl PotentialsSection {
    /// Resolves to a concrete [`PotentialSet`] on the given grid.
    pub fn build(&self, grid: &LatticeGrid) -> Result<PotentialSet> {
        match self.preset {
            Some(Preset::Zero) => Ok(PotentialSet::zero(grid)),
            Some(Preset::DeltaV12) => Ok(PotentialSet::delta_v12(grid)),
            None => {
                let m = grid.sites();
                let or_zero = |v: &Option<Vec<f64>>| v.clone().unwrap_or_else(|| vec![0.0; m]);
                PotentialSet::new(
                    grid,
                    or_zero(&self.u1),
                    or_zero(&self.u2),
                    or_zero(&self.v1),
                    or_zero(&self.v2),
                    or_zero(&self.v12),
                )
            }
        }
    }
}

/// Observable slot layout: the symmetric `n, m` form or the general
/// quadruple.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayoutSection {
    Symmetric { n: usize, m: usize },
    General { n1: usize, n2: usize, m1: usize, m2: usize },
}

impl LayoutSection {
    pub fn to_lr_layout(self) -> crate::bounds::LrLayout {
        match self {
            LayoutSection::Symmetric { n, m } => crate::bounds::LrLayout::symmetric(n, m),
            LayoutSection::General { n1, n2, m1, m2 } => {
                crate::bounds::LrLayout { n1, n2, m1, m2 }
            }
        }
    }
}

/// Sweep controls: sample times, witness ensemble, propagation engine, and
/// the Hartree stepper settings.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSection {
    pub times: Vec<f64>,
    pub witness_count: usize,
    pub seed: u64,
    pub method: Method,
    pub dense_threshold: usize,
    pub krylov_dim: usize,
    pub tol: f64,
    pub substep: Option<f64>,
    pub hermitian: bool,
    pub dt: f64,
    pub stepper: Stepper,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSection {
    pub path: Option<String>,
    pub precision: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    pub potentials: PotentialsSection,
    pub layout: Option<LayoutSection>,
    pub run: RunSection,
    pub output: OutputSection,
}

fn config_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { path: String::new(), line, msg: msg.into() }
}

/// Raw `key = value` entries of one file, consumed key by key so that
/// anything left over is an unknown key with a known line number.
struct RawConfig {
    entries: BTreeMap<(String, String), (usize, String)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find(['#', ';']) {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| config_err(line_no, "unterminated section header"))?
                    .trim()
                    .to_ascii_lowercase();
                if !["system", "potentials", "layout", "run", "output"].contains(&name.as_str()) {
                    return Err(config_err(line_no, format!("unknown section [{name}]")));
                }
                section = Some(name);
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_err(line_no, format!("expected `key = value`, got `{line}`")));
            };
            let Some(section) = section.clone() else {
                return Err(config_err(line_no, "key before any [section] header"));
            };
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(config_err(line_no, "empty key"));
            }
            let slot = (section, key);
            if let Some((first_line, _)) = entries.get(&slot) {
                return Err(config_err(
                    line_no,
                    format!("duplicate key `{}` (first set on line {first_line})", slot.1),
                ));
            }
            entries.insert(slot, (line_no, value.trim().to_string()));
        }
        Ok(RawConfig { entries })
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        self.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn finish(self) -> Result<()> {
        if let Some(((section, key), (line, _))) = self.entries.into_iter().next() {
            return Err(config_err(line, format!("unknown key `{key}` in section [{section}]")));
        }
        Ok(())
    }
}

fn parse_scalar<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| config_err(line, format!("cannot parse `{value}` as {key}")))
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|piece| parse_scalar::<T>(line, key, piece.trim()))
        .collect()
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.display().to_string(),
            line: 0,
            msg: format!("cannot read file: {e}"),
        })?;
        Self::from_str(&text).map_err(|e| match e {
            Error::Config { line, msg, .. } => {
                Error::Config { path: path.display().to_string(), line, msg }
            }
            other => other,
        })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self> {
        let mut raw = RawConfig::parse(text)?;

        // [system]
        let (m_line, m_str) = raw
            .take("system", "m")
            .ok_or_else(|| config_err(0, "missing required key M in [system]"))?;
        let m: usize = parse_scalar(m_line, "M", &m_str)?;
        let (n1_line, n1_str) = raw
            .take("system", "n1")
            .ok_or_else(|| config_err(0, "missing required key N1 in [system]"))?;
        let n1_list: Vec<usize> = parse_list(n1_line, "N1", &n1_str)?;
        let (n2_line, n2_str) = raw
            .take("system", "n2")
            .ok_or_else(|| config_err(0, "missing required key N2 in [system]"))?;
        let n2_list: Vec<usize> = parse_list(n2_line, "N2", &n2_str)?;
        if n1_list.len() != n2_list.len() {
            return Err(config_err(
                n2_line,
                format!(
                    "N1 has {} entries but N2 has {}; the lists are zipped into sweep cells",
                    n1_list.len(),
                    n2_list.len()
                ),
            ));
        }
        if n1_list.is_empty() {
            return Err(config_err(n1_line, "N1 list is empty"));
        }
        let spacing = match raw.take("system", "spacing") {
            Some((line, v)) => parse_scalar::<f64>(line, "spacing", &v)?,
            None => 1.0,
        };
        let system = SystemSection {
            m,
            n_pairs: n1_list.into_iter().zip(n2_list).collect(),
            spacing,
        };

        // [potentials]
        let preset = match raw.take("potentials", "preset") {
            Some((line, v)) => Some(match v.to_ascii_lowercase().as_str() {
                "zero" => Preset::Zero,
                "delta_v12" => Preset::DeltaV12,
                other => {
                    return Err(config_err(
                        line,
                        format!("unknown preset `{other}` (expected zero or delta_v12)"),
                    ))
                }
            }),
            None => None,
        };
        let mut array = |key: &str| -> Result<Option<(usize, Vec<f64>)>> {
            match raw.take("potentials", key) {
                Some((line, v)) => Ok(Some((line, parse_list::<f64>(line, key, &v)?))),
                None => Ok(None),
            }
        };
        let arrays = [array("u1")?, array("u2")?, array("v1")?, array("v2")?, array("v12")?];
        if preset.is_some() {
            if let Some(Some((line, _))) = arrays.iter().find(|a| a.is_some()) {
                return Err(config_err(
                    *line,
                    "a potentials preset and explicit arrays cannot be combined",
                ));
            }
        }
        for (line, arr) in arrays.iter().flatten() {
            if arr.len() != m {
                return Err(config_err(
                    *line,
                    format!("potential array has {} entries, lattice has {m} sites", arr.len()),
                ));
            }
        }
        let mut arrays = arrays.into_iter().map(|a| a.map(|(_, v)| v));
        let potentials = PotentialsSection {
            preset,
            u1: arrays.next().unwrap(),
            u2: arrays.next().unwrap(),
            v1: arrays.next().unwrap(),
            v2: arrays.next().unwrap(),
            v12: arrays.next().unwrap(),
        };

        // [layout]
        let sym: Vec<Option<(usize, usize)>> = ["n", "m"]
            .iter()
            .map(|key| {
                raw.take("layout", key)
                    .map(|(line, v)| parse_scalar::<usize>(line, key, &v).map(|x| (line, x)))
                    .transpose()
            })
            .collect::<Result<_>>()?;
        let quad: Vec<Option<(usize, usize)>> = ["n1", "n2", "m1", "m2"]
            .iter()
            .map(|key| {
                raw.take("layout", key)
                    .map(|(line, v)| parse_scalar::<usize>(line, key, &v).map(|x| (line, x)))
                    .transpose()
            })
            .collect::<Result<_>>()?;
        let layout = match (sym.iter().any(Option::is_some), quad.iter().any(Option::is_some)) {
            (false, false) => None,
            (true, true) => {
                let line = sym.iter().chain(&quad).flatten().map(|(l, _)| *l).max().unwrap();
                return Err(config_err(
                    line,
                    "layout takes either n, m or n1, n2, m1, m2 — not a mix",
                ));
            }
            (true, false) => {
                let missing = |i: usize, name: &str| {
                    sym[i].map(|(_, x)| x).ok_or_else(|| config_err(0, format!("layout needs {name}")))
                };
                Some(LayoutSection::Symmetric { n: missing(0, "n")?, m: missing(1, "m")? })
            }
            (false, true) => {
                let missing = |i: usize, name: &str| {
                    quad[i]
                        .map(|(_, x)| x)
                        .ok_or_else(|| config_err(0, format!("layout needs {name}")))
                };
                Some(LayoutSection::General {
                    n1: missing(0, "n1")?,
                    n2: missing(1, "n2")?,
                    m1: missing(2, "m1")?,
                    m2: missing(3, "m2")?,
                })
            }
        };

        // [run]
        let (times_line, times_str) = raw
            .take("run", "times")
            .ok_or_else(|| config_err(0, "missing required key times in [run]"))?;
        let times: Vec<f64> = parse_list(times_line, "times", &times_str)?;
        if times.is_empty() {
            return Err(config_err(times_line, "times list is empty"));
        }
        if let Some(bad) = times.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(config_err(times_line, format!("times must be finite and >= 0, got {bad}")));
        }
        let mut scalar_or = |key: &str, default: f64| -> Result<f64> {
            match raw.take("run", key) {
                Some((line, v)) => parse_scalar::<f64>(line, key, &v),
                None => Ok(default),
            }
        };
        let tol = scalar_or("tol", 1e-10)?;
        let dt = scalar_or("dt", 1e-3)?;
        let epsilon = scalar_or("epsilon", 0.5)?;
        let substep = match raw.take("run", "substep") {
            Some((line, v)) => Some(parse_scalar::<f64>(line, "substep", &v)?),
            None => None,
        };
        let witness_count = match raw.take("run", "witness_count") {
            Some((line, v)) => parse_scalar::<usize>(line, "witness_count", &v)?,
            None => 8,
        };
        let seed = match raw.take("run", "seed") {
            Some((line, v)) => parse_scalar::<u64>(line, "seed", &v)?,
            None => 1,
        };
        let dense_threshold = match raw.take("run", "dense_threshold") {
            Some((line, v)) => parse_scalar::<usize>(line, "dense_threshold", &v)?,
            None => 4096,
        };
        let krylov_dim = match raw.take("run", "krylov_dim") {
            Some((line, v)) => parse_scalar::<usize>(line, "krylov_dim", &v)?,
            None => 30,
        };
        let method = match raw.take("run", "method") {
            Some((line, v)) => match v.to_ascii_lowercase().as_str() {
                "auto" => Method::Auto,
                "dense" => Method::Dense,
                "krylov" => Method::Krylov,
                other => {
                    return Err(config_err(
                        line,
                        format!("unknown method `{other}` (expected auto, dense or krylov)"),
                    ))
                }
            },
            None => Method::Auto,
        };
        let stepper = match raw.take("run", "stepper") {
            Some((line, v)) => match v.to_ascii_lowercase().as_str() {
                "rk4" => Stepper::Rk4,
                "strang" => Stepper::Strang,
                other => {
                    return Err(config_err(
                        line,
                        format!("unknown stepper `{other}` (expected rk4 or strang)"),
                    ))
                }
            },
            None => Stepper::Rk4,
        };
        let hermitian = match raw.take("run", "hermitian") {
            Some((line, v)) => match v.to_ascii_lowercase().as_str() {
                "true" | "1" | "yes" => true,
                "false" | "0" | "no" => false,
                other => {
                    return Err(config_err(line, format!("cannot parse `{other}` as a boolean")))
                }
            },
            None => false,
        };
        let run = RunSection {
            times,
            witness_count,
            seed,
            method,
            dense_threshold,
            krylov_dim,
            tol,
            substep,
            hermitian,
            dt,
            stepper,
            epsilon,
        };

        // [output]
        let path = raw.take("output", "path").map(|(_, v)| v);
        let precision = match raw.take("output", "precision") {
            Some((line, v)) => {
                let p: usize = parse_scalar(line, "precision", &v)?;
                if !(1..=17).contains(&p) {
                    return Err(config_err(line, format!("precision must be 1..=17, got {p}")));
                }
                p
            }
            None => 17,
        };
        let output = OutputSection { path, precision };

        raw.finish()?;
        let cfg = ExperimentConfig { system, potentials, layout, run, output };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(config_err(0, msg))
            }
        };
        check(self.system.m >= 2, "M must be at least 2")?;
        check(
            self.system.spacing.is_finite() && self.system.spacing > 0.0,
            "spacing must be positive and finite",
        )?;
        for &(n1, n2) in &self.system.n_pairs {
            check(n1 >= 1 && n2 >= 1, "particle numbers must be at least 1")?;
        }
        check(self.run.witness_count >= 1, "witness_count must be at least 1")?;
        check(self.run.krylov_dim >= 2, "krylov_dim must be at least 2")?;
        check(self.run.dense_threshold >= 1, "dense_threshold must be at least 1")?;
        check(self.run.tol.is_finite() && self.run.tol > 0.0, "tol must be positive")?;
        check(self.run.dt.is_finite() && self.run.dt > 0.0, "dt must be positive")?;
        check(
            self.run.epsilon > 0.0 && self.run.epsilon < 1.0,
            "epsilon must lie strictly between 0 and 1",
        )?;
        if let Some(s) = self.run.substep {
            check(s.is_finite() && s > 0.0, "substep must be positive")?;
        }
        Ok(())
    }

    /// Grid shared by every sweep cell.
    pub fn grid(&self) -> Result<LatticeGrid> {
        LatticeGrid::new(self.system.m, self.system.spacing)
    }

    /// Replaces the seed (the `--seed` command-line override). Affects the
    /// canonical string and therefore the config hash.
    pub fn override_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = seed {
            self.run.seed = s;
        }
    }

    /// Canonical listing of every effective setting. Fixed key order, floats
    /// in full-precision scientific notation; excludes the output path and
    /// anything about threading.
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        let f = |x: f64| format!("{x:.16e}");
        let list_f = |xs: &[f64]| xs.iter().map(|&x| f(x)).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "system.m={}", self.system.m);
        let pairs = self
            .system
            .n_pairs
            .iter()
            .map(|(a, b)| format!("{a}:{b}"))
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(s, "system.n_pairs={pairs}");
        let _ = writeln!(s, "system.spacing={}", f(self.system.spacing));
        let _ = writeln!(
            s,
            "potentials.preset={}",
            match self.potentials.preset {
                None => "none",
                Some(Preset::Zero) => "zero",
                Some(Preset::DeltaV12) => "delta_v12",
            }
        );
        for (name, arr) in [
            ("u1", &self.potentials.u1),
            ("u2", &self.potentials.u2),
            ("v1", &self.potentials.v1),
            ("v2", &self.potentials.v2),
            ("v12", &self.potentials.v12),
        ] {
            let _ = writeln!(
                s,
                "potentials.{name}={}",
                arr.as_ref().map_or_else(|| "none".to_string(), |a| list_f(a))
            );
        }
        let _ = writeln!(
            s,
            "layout={}",
            match self.layout {
                None => "none".to_string(),
                Some(LayoutSection::Symmetric { n, m }) => format!("symmetric:{n}:{m}"),
                Some(LayoutSection::General { n1, n2, m1, m2 }) =>
                    format!("general:{n1}:{n2}:{m1}:{m2}"),
            }
        );
        let _ = writeln!(s, "run.times={}", list_f(&self.run.times));
        let _ = writeln!(s, "run.witness_count={}", self.run.witness_count);
        let _ = writeln!(s, "run.seed={}", self.run.seed);
        let _ = writeln!(
            s,
            "run.method={}",
            match self.run.method {
                Method::Auto => "auto",
                Method::Dense => "dense",
                Method::Krylov => "krylov",
            }
        );
        let _ = writeln!(s, "run.dense_threshold={}", self.run.dense_threshold);
        let _ = writeln!(s, "run.krylov_dim={}", self.run.krylov_dim);
        let _ = writeln!(s, "run.tol={}", f(self.run.tol));
        let _ = writeln!(
            s,
            "run.substep={}",
            self.run.substep.map_or_else(|| "none".to_string(), f)
        );
        let _ = writeln!(s, "run.hermitian={}", self.run.hermitian);
        let _ = writeln!(s, "run.dt={}", f(self.run.dt));
        let _ = writeln!(
            s,
            "run.stepper={}",
            match self.run.stepper {
                Stepper::Rk4 => "rk4",
                Stepper::Strang => "strang",
            }
        );
        let _ = writeln!(s, "run.epsilon={}", f(self.run.epsilon));
        let _ = writeln!(s, "output.precision={}", self.output.precision);
        s
    }

    /// Hex SHA-256 of [`Self::canonical_string`].
    pub fn sha256_hex(&self) -> String {
        let digest = Sha256::digest(self.canonical_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
