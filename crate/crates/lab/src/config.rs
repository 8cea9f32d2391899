//! Line-based `key = value` run configuration.
//!
//! Parsing is fail-closed: unknown keys, duplicates, malformed or
//! out-of-range values and missing required keys are errors carrying the line
//! they refer to. [`RunConfig::echo`] renders every effective value in a form
//! that parses back to the same configuration.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use sqg_core::bump::TestFunction;
use sqg_core::convergence::StudyConfig;
use sqg_core::eigenbasis::EigenBasis;
use sqg_core::galerkin::{InitialData, Integrator, SolverSettings};
use thiserror::Error;

/// File name of the effective-configuration echo in the output directory.
pub const ECHO_FILE: &str = "config.echo";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    Duplicate { line: usize, key: String, first: usize },
    #[error("line {line}: cannot parse `{key} = {value}`: {reason}")]
    Invalid {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("line {line}: `{key} = {value}` out of range: {range}")]
    OutOfRange {
        line: usize,
        key: String,
        value: String,
        range: String,
    },
    #[error("line {line}: missing required key `{key}`")]
    Missing { line: usize, key: String },
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
}

impl ConfigError {
    /// Line the error refers to (0 for I/O errors).
    pub fn line(&self) -> usize {
        match self {
            Self::Syntax { line }
            | Self::UnknownKey { line, .. }
            | Self::Duplicate { line, .. }
            | Self::Invalid { line, .. }
            | Self::OutOfRange { line, .. }
            | Self::Missing { line, .. } => *line,
            Self::Io { .. } => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    Random,
    Mode,
    Bump,
}

impl InitialKind {
    pub const NAMES: [&'static str; 3] = ["random", "mode", "bump"];

    pub fn name(self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::Mode => "mode",
            Self::Bump => "bump",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        match s {
            "random" => Some(Self::Random),
            "mode" => Some(Self::Mode),
            "bump" => Some(Self::Bump),
            _ => None,
        }
    }
}

/// Every recognised key, in echo order. Only `m`, `T` and `dt` are required.
pub const KEYS: &[&str] = &[
    "domain",
    "m",
    "oversampling",
    "T",
    "dt",
    "stride",
    "integrator",
    "solver_tol",
    "max_iterations",
    "seed",
    "initial",
    "beta",
    "mode_p",
    "mode_q",
    "rho",
    "center_x",
    "center_y",
    "chi_p",
    "s",
    "p",
    "rungs",
    "seeds",
    "ladder",
    "reference",
    "epsilon",
    "decay_ladder",
    "envelope_modes",
    "kernel_times",
    "rk4_dts",
    "out",
];

const REQUIRED: [&str; 3] = ["m", "T", "dt"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Galerkin truncation.
    pub m: usize,
    /// Oversampling basis size `M`; defaults to `4m`.
    pub oversampling: usize,
    pub horizon: f64,
    pub dt: f64,
    /// Steps between stored snapshots.
    pub stride: usize,
    pub integrator: Integrator,
    pub solver: SolverSettings,
    pub seed: u64,
    pub initial: InitialKind,
    /// Spectral slope of random initial data.
    pub beta: f64,
    pub mode: (u32, u32),
    pub rho: f64,
    pub center: [f64; 2],
    /// Integrability exponent of the `W^{2,p}` norm of `χ`.
    pub chi_p: f64,
    pub s: f64,
    /// Integrability exponent of the distance-ladder study; may be `inf`.
    pub p: f64,
    pub rungs: usize,
    pub seeds: usize,
    pub ladder: Vec<usize>,
    pub reference: usize,
    pub epsilon: f64,
    pub decay_ladder: Vec<usize>,
    pub envelope_modes: usize,
    pub kernel_times: Vec<f64>,
    pub rk4_dts: Vec<f64>,
    pub out: PathBuf,
}

impl RunConfig {
    /// Defaults for every optional key around the required triple.
    pub fn with_required(m: usize, horizon: f64, dt: f64) -> Self {
        Self {
            m,
            oversampling: 4 * m,
            horizon,
            dt,
            stride: 10,
            integrator: Integrator::ImplicitMidpoint,
            solver: SolverSettings::default(),
            seed: 42,
            initial: InitialKind::Random,
            beta: 1.0,
            mode: (1, 1),
            rho: PI / 3.0,
            center: [PI / 2.0, PI / 2.0],
            chi_p: 4.0,
            s: 1.0,
            p: f64::INFINITY,
            rungs: 5,
            seeds: 10,
            ladder: vec![8, 16, 32, 64],
            reference: 128,
            epsilon: 1.0,
            decay_ladder: vec![16, 64, 256],
            envelope_modes: 32768,
            kernel_times: vec![0.01, 0.1, 1.0],
            rk4_dts: vec![4e-3, 2e-3, 1e-3],
            out: PathBuf::from("out"),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        text.parse()
    }

    pub fn test_function(&self) -> TestFunction {
        TestFunction::new(self.center, self.rho)
    }

    pub fn initial_data(&self) -> InitialData {
        match self.initial {
            InitialKind::Random => InitialData::Random {
                seed: self.seed,
                beta: self.beta,
            },
            InitialKind::Mode => InitialData::Mode {
                p: self.mode.0,
                q: self.mode.1,
            },
            InitialKind::Bump => InitialData::Bump(self.test_function()),
        }
    }

    pub fn study(&self) -> StudyConfig {
        StudyConfig {
            ladder: self.ladder.clone(),
            seed: self.seed,
            beta: self.beta,
            horizon: self.horizon,
            dt: self.dt,
            stride: self.stride,
            integrator: self.integrator,
            solver: self.solver,
            reference: self.reference,
        }
    }

    /// Every effective value as `key = value` lines, in [`KEYS`] order.
    pub fn echo(&self) -> String {
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let flist = |v: &[f64]| v.iter().map(|&x| float(x)).collect::<Vec<_>>().join(", ");
        let values: Vec<(&str, String)> = vec![
            ("domain", "square".into()),
            ("m", self.m.to_string()),
            ("oversampling", self.oversampling.to_string()),
            ("T", float(self.horizon)),
            ("dt", float(self.dt)),
            ("stride", self.stride.to_string()),
            ("integrator", self.integrator.name().into()),
            ("solver_tol", float(self.solver.tol)),
            ("max_iterations", self.solver.max_iterations.to_string()),
            ("seed", self.seed.to_string()),
            ("initial", self.initial.name().into()),
            ("beta", float(self.beta)),
            ("mode_p", self.mode.0.to_string()),
            ("mode_q", self.mode.1.to_string()),
            ("rho", float(self.rho)),
            ("center_x", float(self.center[0])),
            ("center_y", float(self.center[1])),
            ("chi_p", float(self.chi_p)),
            ("s", float(self.s)),
            ("p", float(self.p)),
            ("rungs", self.rungs.to_string()),
            ("seeds", self.seeds.to_string()),
            ("ladder", list(&self.ladder)),
            ("reference", self.reference.to_string()),
            ("epsilon", float(self.epsilon)),
            ("decay_ladder", list(&self.decay_ladder)),
            ("envelope_modes", self.envelope_modes.to_string()),
            ("kernel_times", flist(&self.kernel_times)),
            ("rk4_dts", flist(&self.rk4_dts)),
            ("out", self.out.display().to_string()),
        ];
        debug_assert_eq!(values.len(), KEYS.len());
        let mut text = String::from("# effective configuration\n");
        for (k, v) in values {
            text.push_str(&format!("{k} = {v}\n"));
        }
        text
    }

    pub fn write_echo(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join(ECHO_FILE);
        std::fs::write(&path, self.echo())?;
        Ok(path)
    }
}

/// Shortest round-tripping decimal form, `inf` for infinity.
pub fn float(x: f64) -> String {
    format!("{x:?}")
}

struct Entry {
    line: usize,
    value: String,
}

struct Entries {
    map: HashMap<&'static str, Entry>,
    end: usize,
}

impl Entries {
    fn line_of(&self, key: &str) -> usize {
        self.map.get(key).map_or(self.end, |e| e.line)
    }

    fn out_of_range(&self, key: &str, value: impl Display, range: &str) -> ConfigError {
        ConfigError::OutOfRange {
            line: self.line_of(key),
            key: key.into(),
            value: value.to_string(),
            range: range.into(),
        }
    }

    fn raw(&self, key: &str) -> Option<&Entry> {
        self.map.get(key)
    }

    fn parse<T: FromStr>(&self, key: &str, text: &str) -> Result<T, ConfigError>
    where
        T::Err: Display,
    {
        text.parse::<T>().map_err(|e| ConfigError::Invalid {
            line: self.line_of(key),
            key: key.into(),
            value: text.into(),
            reason: e.to_string(),
        })
    }

    fn value<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            Some(e) => self.parse(key, &e.value),
            None => Ok(default),
        }
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            Some(e) => self.parse(key, &e.value),
            None => Err(ConfigError::Missing {
                line: self.end,
                key: key.into(),
            }),
        }
    }

    fn list<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>, ConfigError>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            Some(e) => e.value.split(',').map(|item| self.parse(key, item.trim())).collect(),
            None => Ok(default),
        }
    }

    /// Finite float, or `inf` when `allow_inf`.
    fn float(&self, key: &str, default: f64, allow_inf: bool) -> Result<f64, ConfigError> {
        let v: f64 = self.value(key, default)?;
        if v.is_nan() || (v.is_infinite() && !(allow_inf && v > 0.0)) {
            return Err(self.out_of_range(key, v, "finite number"));
        }
        Ok(v)
    }

    fn check<T: Display + Copy>(&self, key: &str, v: T, ok: bool, range: &str) -> Result<T, ConfigError> {
        if ok {
            Ok(v)
        } else {
            Err(self.out_of_range(key, v, range))
        }
    }

    fn check_list<T: Display>(&self, key: &str, v: &[T], ok: bool, range: &str) -> Result<(), ConfigError> {
        if ok {
            Ok(())
        } else {
            let shown = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
            Err(self.out_of_range(key, shown, range))
        }
    }
}

fn split_lines(text: &str) -> Result<Entries, ConfigError> {
    let mut map: HashMap<&'static str, Entry> = HashMap::new();
    let mut end = 1;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        end = line + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax { line });
        }
        let known = KEYS.iter().find(|&&k| k == key).ok_or_else(|| ConfigError::UnknownKey {
            line,
            key: key.into(),
        })?;
        if let Some(prev) = map.get(known) {
            return Err(ConfigError::Duplicate {
                line,
                key: key.into(),
                first: prev.line,
            });
        }
        map.insert(known, Entry { line, value: value.into() });
    }
    Ok(Entries { map, end })
}

fn strictly_increasing(v: &[usize]) -> bool {
    v.len() >= 2 && v[0] >= 1 && v.windows(2).all(|w| w[1] > w[0])
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let e = split_lines(text)?;
        for key in REQUIRED {
            if e.raw(key).is_none() {
                return Err(ConfigError::Missing {
                    line: e.end,
                    key: key.into(),
                });
            }
        }

        let domain: String = e.value("domain", "square".to_string())?;
        if domain != "square" {
            return Err(e.out_of_range("domain", &domain, "only `square` ((0, π)², Dirichlet) is supported"));
        }

        let m: usize = e.required("m")?;
        e.check("m", m, (1..=1024).contains(&m), "1 ..= 1024")?;
        let horizon = e.float("T", 0.0, false)?;
        e.check("T", horizon, horizon > 0.0 && horizon <= 1e4, "0 < T ≤ 1e4")?;
        let dt = e.float("dt", 0.0, false)?;
        e.check("dt", dt, dt > 0.0 && dt <= horizon, "0 < dt ≤ T")?;
        let mut c = RunConfig::with_required(m, horizon, dt);

        c.oversampling = e.value("oversampling", 4 * m)?;
        e.check("oversampling", c.oversampling, c.oversampling >= m && c.oversampling <= 8192, "m ..= 8192")?;
        c.stride = e.value("stride", c.stride)?;
        e.check("stride", c.stride, c.stride >= 1, "≥ 1")?;

        let name: String = e.value("integrator", c.integrator.name().to_string())?;
        c.integrator = Integrator::from_name(&name).ok_or_else(|| {
            e.out_of_range("integrator", &name, &format!("one of {}", Integrator::NAMES.join(", ")))
        })?;
        c.solver.tol = e.float("solver_tol", c.solver.tol, false)?;
        e.check("solver_tol", c.solver.tol, c.solver.tol > 0.0 && c.solver.tol <= 1e-3, "0 < tol ≤ 1e-3")?;
        c.solver.max_iterations = e.value("max_iterations", c.solver.max_iterations)?;
        let it = c.solver.max_iterations;
        e.check("max_iterations", it, (1..=100_000).contains(&it), "1 ..= 100000")?;

        c.seed = e.value("seed", c.seed)?;
        let name: String = e.value("initial", c.initial.name().to_string())?;
        c.initial = InitialKind::from_name(&name)
            .ok_or_else(|| e.out_of_range("initial", &name, &format!("one of {}", InitialKind::NAMES.join(", "))))?;
        c.beta = e.float("beta", c.beta, false)?;
        e.check("beta", c.beta, (0.0..=10.0).contains(&c.beta), "0 ..= 10")?;
        let p: u32 = e.value("mode_p", c.mode.0)?;
        e.check("mode_p", p, p >= 1, "≥ 1")?;
        let q: u32 = e.value("mode_q", c.mode.1)?;
        e.check("mode_q", q, q >= 1, "≥ 1")?;
        c.mode = (p, q);
        if c.initial == InitialKind::Mode {
            let basis = EigenBasis::new(m);
            if basis.position(p, q).is_none() {
                let key = if e.raw("mode_q").is_some() { "mode_q" } else { "mode_p" };
                return Err(e.out_of_range(key, format!("({p}, {q})"), "initial mode must lie in the first m modes"));
            }
        }

        c.rho = e.float("rho", c.rho, false)?;
        e.check("rho", c.rho, c.rho > 0.0 && c.rho < PI / 2.0, "0 < ρ < π/2")?;
        c.center[0] = e.float("center_x", c.center[0], false)?;
        c.center[1] = e.float("center_y", c.center[1], false)?;
        if c.test_function().support_margin() <= 0.0 {
            let key = ["center_y", "center_x", "rho"]
                .into_iter()
                .find(|k| e.raw(k).is_some())
                .unwrap_or("rho");
            let v = e.raw(key).map_or_else(|| float(c.rho), |x| x.value.clone());
            return Err(e.out_of_range(key, v, "test-function support must lie inside (0, π)²"));
        }
        c.chi_p = e.float("chi_p", c.chi_p, false)?;
        e.check("chi_p", c.chi_p, c.chi_p > 2.0, "> 2")?;

        c.s = e.float("s", c.s, false)?;
        e.check("s", c.s, c.s > 0.0 && c.s < 2.0, "0 < s < 2")?;
        c.p = e.float("p", c.p, true)?;
        e.check("p", c.p, c.p > 1.0, "1 < p ≤ inf")?;
        c.rungs = e.value("rungs", c.rungs)?;
        e.check("rungs", c.rungs, (1..=12).contains(&c.rungs), "1 ..= 12")?;
        c.seeds = e.value("seeds", c.seeds)?;
        e.check("seeds", c.seeds, (1..=1000).contains(&c.seeds), "1 ..= 1000")?;

        c.ladder = e.list("ladder", c.ladder)?;
        e.check_list("ladder", &c.ladder, strictly_increasing(&c.ladder) && c.ladder.len() >= 3, "at least three strictly increasing sizes ≥ 1")?;
        let top = *c.ladder.last().expect("checked");
        c.reference = e.value("reference", c.reference.max(top))?;
        e.check("reference", c.reference, c.reference >= top && c.reference <= 16384, "largest ladder size ..= 16384")?;
        c.epsilon = e.float("epsilon", c.epsilon, false)?;
        e.check("epsilon", c.epsilon, c.epsilon > 0.0 && c.epsilon <= 1.0, "0 < ε ≤ 1")?;

        c.decay_ladder = e.list("decay_ladder", c.decay_ladder)?;
        e.check_list("decay_ladder", &c.decay_ladder, strictly_increasing(&c.decay_ladder), "at least two strictly increasing sizes ≥ 1")?;
        let top = *c.decay_ladder.last().expect("checked");
        c.envelope_modes = e.value("envelope_modes", c.envelope_modes.max(top))?;
        let n = c.envelope_modes;
        e.check("envelope_modes", n, n >= top && n >= 64 && n <= 131_072, "max(64, largest decay size) ..= 131072")?;

        c.kernel_times = e.list("kernel_times", c.kernel_times)?;
        let ok = !c.kernel_times.is_empty() && c.kernel_times.iter().all(|&t| t.is_finite() && t > 0.0 && t <= 100.0);
        e.check_list("kernel_times", &c.kernel_times, ok, "nonempty, each 0 < t ≤ 100")?;
        c.rk4_dts = e.list("rk4_dts", c.rk4_dts)?;
        let ok = c.rk4_dts.len() >= 2
            && c.rk4_dts.iter().all(|&d| d.is_finite() && d > 0.0 && d <= horizon)
            && c.rk4_dts.windows(2).all(|w| w[1] < w[0]);
        e.check_list("rk4_dts", &c.rk4_dts, ok, "at least two strictly decreasing steps in (0, T]")?;

        c.out = PathBuf::from(e.value("out", "out".to_string())?);
        Ok(c)
    }
}

/// Shared basis of `len` modes.
pub fn basis(len: usize) -> Arc<EigenBasis> {
    Arc::new(EigenBasis::new(len))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "m = 16\nT = 1\ndt = 0.01\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let c: RunConfig = MINIMAL.parse().unwrap();
        assert_eq!(c, RunConfig::with_required(16, 1.0, 0.01));
        assert_eq!(c.oversampling, 64);
        let echo = c.echo();
        for key in KEYS {
            assert!(echo.lines().any(|l| l.starts_with(&format!("{key} = "))), "{key} missing from echo");
        }
    }

    #[test]
    fn echo_round_trips() {
        let text = "m = 12 # comment\nT = 2.5\ndt = 1e-3\nintegrator = rk4\np = inf\nrho = 0.7\ncenter_x = 1.1\nkernel_times = 0.02, 0.5\nseed = 7\n";
        let c: RunConfig = text.parse().unwrap();
        let again: RunConfig = c.echo().parse().unwrap();
        assert_eq!(c, again);
        assert_eq!(again.echo(), c.echo());
    }

    #[test]
    fn bad_integrator_names_valid_set() {
        let err = format!("{MINIMAL}integrator = rk5\n").parse::<RunConfig>().unwrap_err();
        assert_eq!(err.line(), 4);
        let msg = err.to_string();
        assert!(msg.contains("rk4") && msg.contains("implicit_midpoint"), "{msg}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = format!("# header\n{MINIMAL}\nviscosity = 1\n").parse::<RunConfig>().unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                line: 6,
                key: "viscosity".into()
            }
        );
    }

    #[test]
    fn missing_required_key_reports_end_line() {
        let err = "m = 8\nT = 1\n".parse::<RunConfig>().unwrap_err();
        assert_eq!(err, ConfigError::Missing { line: 3, key: "dt".into() });
    }

    #[test]
    fn out_of_range_values_rejected() {
        for (extra, line) in [("dt = 2\n", 3), ("s = 2\n", 4), ("rho = 1.6\n", 4), ("ladder = 8, 8, 16\n", 4)] {
            let text = if extra.starts_with("dt") {
                format!("m = 8\nT = 1\n{extra}")
            } else {
                format!("{MINIMAL}{extra}")
            };
            let err = text.parse::<RunConfig>().unwrap_err();
            assert!(matches!(err, ConfigError::OutOfRange { .. }), "{extra}: {err}");
            assert_eq!(err.line(), line, "{extra}: {err}");
        }
    }

    #[test]
    fn duplicates_and_syntax_rejected() {
        let err = format!("{MINIMAL}m = 4\n").parse::<RunConfig>().unwrap_err();
        assert_eq!(
            err,
            ConfigError::Duplicate {
                line: 4,
                key: "m".into(),
                first: 1
            }
        );
        assert_eq!("m 16\n".parse::<RunConfig>().unwrap_err(), ConfigError::Syntax { line: 1 });
        assert!(matches!(
            format!("{MINIMAL}seed = -1\n").parse::<RunConfig>().unwrap_err(),
            ConfigError::Invalid { line: 4, .. }
        ));
    }

    #[test]
    fn mode_outside_truncation_rejected() {
        let err = "m = 2\nT = 1\ndt = 0.1\ninitial = mode\nmode_p = 3\nmode_q = 3\n".parse::<RunConfig>().unwrap_err();
        assert_eq!(err.line(), 6);
    }
}
