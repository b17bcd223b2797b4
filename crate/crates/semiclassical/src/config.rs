//! JSON run configuration.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use semiclassical_core::phase::PhaseOptions;
use semiclassical_core::transport::ObservableSpec;
use semiclassical_core::wick::{MultiIndex, WickSymbol};
use semiclassical_core::Complex64;

use crate::error::RunError;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `[re, im]` or a bare real number.
#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ComplexValue {
    Pair([f64; 2]),
    Real(f64),
}

impl ComplexValue {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexValue::Pair([re, im]) => Complex64::new(re, im),
            ComplexValue::Real(re) => Complex64::new(re, 0.0),
        }
    }
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        ComplexValue::Pair([z.re, z.im])
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    Harmonic {
        #[serde(default = "one")]
        omega: f64,
    },
    Kerr {
        #[serde(default = "one")]
        omega: f64,
        mu: f64,
    },
    CrossKerr {
        #[serde(default = "one")]
        omega1: f64,
        #[serde(default = "one")]
        omega2: f64,
        mu12: f64,
    },
    BeamSplitter {
        #[serde(default = "one")]
        omega1: f64,
        #[serde(default = "one")]
        omega2: f64,
        g: f64,
    },
}

/// One monomial `c · z*^lstar z^s`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub lstar: Vec<u32>,
    pub s: Vec<u32>,
    pub coefficient: ComplexValue,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InlineSymbol {
    pub modes: usize,
    pub terms: Vec<TermSpec>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SymbolSpec {
    Preset(Preset),
    Inline(InlineSymbol),
}

impl SymbolSpec {
    pub fn build(&self) -> Result<WickSymbol, RunError> {
        let finite = |field: &str, v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(RunError::validation(field, "must be finite"))
            }
        };
        match self {
            SymbolSpec::Preset(p) => Ok(match *p {
                Preset::Harmonic { omega } => WickSymbol::harmonic(finite("symbol.omega", omega)?),
                Preset::Kerr { omega, mu } => {
                    WickSymbol::kerr(finite("symbol.omega", omega)?, finite("symbol.mu", mu)?)
                }
                Preset::CrossKerr { omega1, omega2, mu12 } => WickSymbol::cross_kerr(
                    finite("symbol.omega1", omega1)?,
                    finite("symbol.omega2", omega2)?,
                    finite("symbol.mu12", mu12)?,
                ),
                Preset::BeamSplitter { omega1, omega2, g } => WickSymbol::beam_splitter(
                    finite("symbol.omega1", omega1)?,
                    finite("symbol.omega2", omega2)?,
                    finite("symbol.g", g)?,
                ),
            }),
            SymbolSpec::Inline(inline) => {
                if inline.modes == 0 {
                    return Err(RunError::validation("symbol.modes", "must be at least 1"));
                }
                let mut terms = Vec::with_capacity(inline.terms.len());
                for (j, t) in inline.terms.iter().enumerate() {
                    if t.lstar.len() != inline.modes || t.s.len() != inline.modes {
                        return Err(RunError::validation(
                            &format!("symbol.terms[{j}]"),
                            "exponent lengths must equal symbol.modes",
                        ));
                    }
                    let c = t.coefficient.value();
                    if !(c.re.is_finite() && c.im.is_finite()) {
                        return Err(RunError::validation(&format!("symbol.terms[{j}].coefficient"), "must be finite"));
                    }
                    terms.push((MultiIndex::new(t.lstar.clone()), MultiIndex::new(t.s.clone()), c));
                }
                WickSymbol::new(inline.modes, terms).map_err(|e| RunError::validation("symbol.terms", &e.to_string()))
            }
        }
    }

    pub fn kerr_params(&self) -> Option<(f64, f64)> {
        match self {
            SymbolSpec::Preset(Preset::Kerr { omega, mu }) => Some((*omega, *mu)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    #[serde(default)]
    pub m: Option<Vec<u32>>,
    #[serde(default)]
    pub q: Option<Vec<u32>>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum TimeGrid {
    List(Vec<f64>),
    Uniform { t_max: f64, steps: usize },
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid::List(vec![0.0, 0.25, 0.5, 1.0])
    }
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        match self {
            TimeGrid::List(v) => v.clone(),
            TimeGrid::Uniform { t_max, steps } => {
                let n = (*steps).max(1);
                (0..=n).map(|j| t_max * j as f64 / n as f64).collect()
            }
        }
    }
}

/// Evaluation points.
///
/// `central` is `g^t α0`; `ring` and `grid` place offsets around it (offset
/// `d` enters mode `k` as `d·i^k`); `list` gives absolute points used at
/// every time.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    #[default]
    Central,
    Ring {
        radius: f64,
        points: usize,
        #[serde(default)]
        include_center: bool,
    },
    Grid {
        half_width: f64,
        points: usize,
    },
    List(Vec<Vec<ComplexValue>>),
}

impl TargetSpec {
    /// Scalar offsets around the centre; `None` for explicit lists.
    pub fn offsets(&self) -> Option<Vec<Complex64>> {
        match *self {
            TargetSpec::Central => Some(vec![Complex64::new(0.0, 0.0)]),
            TargetSpec::Ring {
                radius,
                points,
                include_center,
            } => {
                let mut out = Vec::with_capacity(points + 1);
                if include_center {
                    out.push(Complex64::new(0.0, 0.0));
                }
                out.extend((0..points).map(|j| Complex64::from_polar(radius, TAU * j as f64 / points as f64)));
                Some(out)
            }
            TargetSpec::Grid { half_width, points } => {
                let coord = |j: usize| {
                    if points == 1 {
                        0.0
                    } else {
                        -half_width + 2.0 * half_width * j as f64 / (points - 1) as f64
                    }
                };
                let mut out = Vec::with_capacity(points * points);
                for jx in 0..points {
                    for jy in 0..points {
                        out.push(Complex64::new(coord(jx), coord(jy)));
                    }
                }
                Some(out)
            }
            TargetSpec::List(_) => None,
        }
    }

    /// Points at a centre `center` (per mode).
    pub fn around(&self, center: &[Complex64]) -> Vec<Vec<Complex64>> {
        match self.offsets() {
            Some(offs) => offs.iter().map(|d| shift(center, *d)).collect(),
            None => self.list_points(),
        }
    }

    pub fn list_points(&self) -> Vec<Vec<Complex64>> {
        match self {
            TargetSpec::List(v) => v.iter().map(|p| p.iter().map(|z| z.value()).collect()).collect(),
            _ => Vec::new(),
        }
    }
}

/// `center + d·i^k` in mode `k`.
pub fn shift(center: &[Complex64], d: Complex64) -> Vec<Complex64> {
    center.iter().enumerate().map(|(k, c)| c + d * I.powu(k as u32)).collect()
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub ode: f64,
    pub newton: f64,
    pub quad: f64,
    /// Target tail for the Fock cutoff search.
    pub tail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ode: 1e-12,
            newton: 1e-12,
            quad: 1e-6,
            tail: 1e-12,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct KerrAuditConfig {
    pub threshold: f64,
}

impl Default for KerrAuditConfig {
    fn default() -> Self {
        KerrAuditConfig { threshold: 1e-8 }
    }
}

/// Settings for the `invariants` subcommand; unset fields keep the suite
/// defaults.
#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct InvariantsConfig {
    pub ode_tol: Option<f64>,
    pub radius: Option<f64>,
    pub t_max: Option<f64>,
    pub time_samples: Option<usize>,
}

fn default_hbars() -> Vec<f64> {
    vec![0.05]
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub symbol: SymbolSpec,
    pub alpha0: Vec<ComplexValue>,
    #[serde(default)]
    pub observable: ObservableConfig,
    #[serde(default)]
    pub times: TimeGrid,
    #[serde(default)]
    pub targets: TargetSpec,
    #[serde(default = "default_hbars")]
    pub hbars: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub cutoffs: Option<Vec<usize>>,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub kerr: KerrAuditConfig,
    #[serde(default)]
    pub invariants: InvariantsConfig,
}

/// A configuration that passed validation, with derived objects built.
#[derive(Clone, Debug)]
pub struct Validated {
    pub config: RunConfig,
    pub symbol: WickSymbol,
    pub alpha0: Vec<Complex64>,
    pub observable: ObservableSpec,
    pub times: Vec<f64>,
}

impl Validated {
    pub fn modes(&self) -> usize {
        self.alpha0.len()
    }

    pub fn phase_options(&self) -> PhaseOptions {
        PhaseOptions {
            ode_tol: self.config.tolerances.ode,
            newton_tol: self.config.tolerances.newton,
            ..PhaseOptions::default()
        }
    }
}

fn positive(field: &str, v: f64) -> Result<(), RunError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(RunError::validation(field, "must be positive and finite"))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::validation("config", &e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::validation("config", &format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks every field before any computation.
    pub fn validate(self) -> Result<Validated, RunError> {
        let symbol = self.symbol.build()?;
        let n = symbol.modes();
        if self.alpha0.len() != n {
            return Err(RunError::validation(
                "alpha0",
                &format!("has {} entries but the symbol has {n} modes", self.alpha0.len()),
            ));
        }
        let alpha0: Vec<Complex64> = self.alpha0.iter().map(|z| z.value()).collect();
        if alpha0.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(RunError::validation("alpha0", "must be finite"));
        }

        let m = self.observable.m.clone().unwrap_or_else(|| vec![0; n]);
        let q = self.observable.q.clone().unwrap_or_else(|| vec![0; n]);
        if m.len() != n || q.len() != n {
            return Err(RunError::validation("observable", "m and q must have one entry per mode"));
        }
        let observable = ObservableSpec::new(MultiIndex::new(m), MultiIndex::new(q), alpha0.clone())
            .map_err(|e| RunError::validation("observable", &e.to_string()))?;

        let times = self.times.times();
        if let TimeGrid::Uniform { t_max, steps } = self.times {
            positive("times.t_max", t_max)?;
            if steps == 0 {
                return Err(RunError::validation("times.steps", "must be at least 1"));
            }
        }
        if times.first() != Some(&0.0) {
            return Err(RunError::validation("times", "grid must start at 0"));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(RunError::validation("times", "must be finite and strictly increasing"));
        }

        match &self.targets {
            TargetSpec::Central => {}
            TargetSpec::Ring { radius, points, .. } => {
                positive("targets.ring.radius", *radius)?;
                if *points == 0 {
                    return Err(RunError::validation("targets.ring.points", "must be at least 1"));
                }
            }
            TargetSpec::Grid { half_width, points } => {
                positive("targets.grid.half_width", *half_width)?;
                if *points == 0 {
                    return Err(RunError::validation("targets.grid.points", "must be at least 1"));
                }
            }
            TargetSpec::List(points) => {
                if points.is_empty() {
                    return Err(RunError::validation("targets.list", "must not be empty"));
                }
                for (j, p) in points.iter().enumerate() {
                    if p.len() != n {
                        return Err(RunError::validation(&format!("targets.list[{j}]"), "needs one entry per mode"));
                    }
                }
            }
        }

        if self.hbars.is_empty() {
            return Err(RunError::validation("hbars", "must not be empty"));
        }
        for (j, h) in self.hbars.iter().enumerate() {
            positive(&format!("hbars[{j}]"), *h)?;
        }
        let tol = &self.tolerances;
        positive("tolerances.ode", tol.ode)?;
        positive("tolerances.newton", tol.newton)?;
        positive("tolerances.quad", tol.quad)?;
        positive("tolerances.tail", tol.tail)?;
        if let Some(c) = &self.cutoffs {
            if c.len() != n || c.iter().any(|d| *d == 0) {
                return Err(RunError::validation("cutoffs", "need one positive cutoff per mode"));
            }
        }
        if self.threads == Some(0) {
            return Err(RunError::validation("threads", "must be at least 1"));
        }
        positive("kerr.threshold", self.kerr.threshold)?;
        let inv = &self.invariants;
        for (field, v) in [
            ("invariants.ode_tol", inv.ode_tol),
            ("invariants.radius", inv.radius),
            ("invariants.t_max", inv.t_max),
        ] {
            if let Some(v) = v {
                positive(field, v)?;
            }
        }

        Ok(Validated {
            symbol,
            alpha0,
            observable,
            times,
            config: self,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kerr_config() -> &'static str {
        r#"{"symbol": {"preset": "kerr", "mu": 0.5}, "alpha0": [[1.0, 0.0]]}"#
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let v = RunConfig::from_json(kerr_config()).unwrap().validate().unwrap();
        assert_eq!(v.times, vec![0.0, 0.25, 0.5, 1.0]);
        assert_eq!(v.config.hbars, vec![0.05]);
        assert_eq!(v.config.targets, TargetSpec::Central);
        assert_eq!(v.symbol, WickSymbol::kerr(1.0, 0.5));
        assert_eq!(v.config.symbol.kerr_params(), Some((1.0, 0.5)));
    }

    #[test]
    fn inline_symbol_matches_preset() {
        let text = r#"{
            "symbol": {"modes": 1, "terms": [
                {"lstar": [1], "s": [1], "coefficient": 1.0},
                {"lstar": [2], "s": [2], "coefficient": [0.5, 0.0]}
            ]},
            "alpha0": [1.0]
        }"#;
        let v = RunConfig::from_json(text).unwrap().validate().unwrap();
        assert_eq!(v.symbol, WickSymbol::kerr(1.0, 0.5));
    }

    #[test]
    fn validation_names_the_field() {
        let cases = [
            (r#"{"symbol": {"preset": "harmonic"}, "alpha0": [1.0], "hbars": [0.0]}"#, "hbars[0]"),
            (r#"{"symbol": {"preset": "harmonic"}, "alpha0": [1.0, 2.0]}"#, "alpha0"),
            (r#"{"symbol": {"preset": "harmonic"}, "alpha0": [1.0], "times": [0.5, 1.0]}"#, "times"),
            (r#"{"symbol": {"preset": "harmonic"}, "alpha0": [1.0], "tolerances": {"ode": -1}}"#, "tolerances.ode"),
            (r#"{"symbol": {"preset": "harmonic"}, "alpha0": [1.0], "targets": {"ring": {"radius": 0.1, "points": 0}}}"#, "targets.ring.points"),
            (r#"{"symbol": {"modes": 1, "terms": [{"lstar": [1, 0], "s": [1], "coefficient": 1}]}, "alpha0": [1.0]}"#, "symbol.terms[0]"),
        ];
        for (text, field) in cases {
            let err = RunConfig::from_json(text).unwrap().validate().unwrap_err();
            assert_eq!(err.exit_code(), 2);
            assert!(err.to_string().contains(field), "{err} should cite {field}");
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = RunConfig::from_json(r#"{"symbol": {"preset": "harmonic"}, "alpha0": [1.0], "hbar": 0.1}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn target_offsets() {
        let ring = TargetSpec::Ring { radius: 0.1, points: 4, include_center: true };
        let offs = ring.offsets().unwrap();
        assert_eq!(offs.len(), 5);
        assert!((offs[2] - Complex64::new(0.0, 0.1)).norm() < 1e-15);
        let grid = TargetSpec::Grid { half_width: 0.2, points: 3 };
        assert_eq!(grid.offsets().unwrap().len(), 9);
        let pts = ring.around(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        assert!((pts[1][1] - Complex64::new(0.0, 0.1)).norm() < 1e-15);
        let uniform = TimeGrid::Uniform { t_max: 1.0, steps: 4 };
        assert_eq!(uniform.times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
