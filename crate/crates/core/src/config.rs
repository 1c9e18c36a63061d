//! Run configuration: `key = value` text with `[section]` headers.
//!
//! ```toml
//! [geometry]
//! r_omega = 2.0
//! r_sigma = 1.0
//! n_theta = 32
//! n_r_in = 16
//! n_r_out = 20
//! epsilon = 0.9
//!
//! [material]
//! rho_minus = 1.0
//! rho_plus = 1.0
//! eta_minus = 1.0
//! eta_plus = 0.5
//! d = 0.2
//! d_gamma = 0.1
//! s_ref = 0.5
//! eos = { kind = "szyszkowski", sigma0 = 1.0, e = 0.3, s_inf = 2.0 }
//! isotherm = { kind = "langmuir", s_inf = 2.0, k = 1.5 }
//!
//! [initial]
//! preset = "ellipse"
//! c_bulk = 0.4
//! amplitude = 0.05
//!
//! [stepping]
//! dt = 0.05
//! t_end = 40.0
//!
//! [output]
//! snapshot_every = 100
//! diagnostics_every = 1
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constitutive::{EquationOfState, Isotherm, MaterialModel};
use crate::discrete::Scheme;
use crate::error::{FlowError, Result};
use crate::field::Location;
use crate::geometry::ReferenceGeometry;
use crate::hanzawa::HeightFunction;
use crate::nonlinear::Controls;
use crate::state::FlowState;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub r_omega: f64,
    pub r_sigma: f64,
    pub n_theta: usize,
    pub n_r_in: usize,
    pub n_r_out: usize,
    pub epsilon: f64,
    #[serde(default = "default_fd_order")]
    pub fd_order: usize,
}

fn default_fd_order() -> usize {
    2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EosConfig {
    Linear { sigma0: f64, beta: f64 },
    Szyszkowski { sigma0: f64, e: f64, s_inf: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum IsothermConfig {
    Henry { k: f64 },
    Langmuir { s_inf: f64, k: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub eta_minus: f64,
    pub eta_plus: f64,
    pub d: f64,
    pub d_gamma: f64,
    pub s_ref: f64,
    pub eos: EosConfig,
    pub isotherm: IsothermConfig,
}

impl MaterialConfig {
    pub fn model(&self) -> MaterialModel<f64> {
        MaterialModel {
            rho_minus: self.rho_minus,
            rho_plus: self.rho_plus,
            eta_minus: self.eta_minus,
            eta_plus: self.eta_plus,
            d: self.d,
            d_gamma: self.d_gamma,
            eos: match self.eos {
                EosConfig::Linear { sigma0, beta } => EquationOfState::Linear { sigma0, beta },
                EosConfig::Szyszkowski { sigma0, e, s_inf } => EquationOfState::Szyszkowski { sigma0, e, s_inf },
            },
            isotherm: match self.isotherm {
                IsothermConfig::Henry { k } => Isotherm::Henry { k },
                IsothermConfig::Langmuir { s_inf, k } => Isotherm::Langmuir { s_inf, k },
            },
            s_ref: self.s_ref,
        }
    }
}

/// Named initial states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Rest on the reference circle, uniform concentrations.
    Equilibrium { c_bulk: f64 },
    /// Interface `γ = amplitude · R_σ · cos(mode θ)` at rest.
    Ellipse {
        c_bulk: f64,
        amplitude: f64,
        #[serde(default = "default_mode")]
        mode: usize,
    },
    /// Gaussian bump of bulk surfactant in the middle of the exterior
    /// annulus, centred at `θ = 0`.
    Spike { c_bulk: f64, magnitude: f64, width: f64 },
    FromSnapshot { path: PathBuf },
}

fn default_mode() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteppingConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

fn default_tol() -> f64 {
    1e-9
}

fn default_k_max() -> usize {
    25
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Steps between snapshots; 0 writes only the final state.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default = "default_one")]
    pub diagnostics_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { snapshot_every: 0, diagnostics_every: 1 }
    }
}

fn default_one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub material: MaterialConfig,
    pub initial: InitialConfig,
    pub stepping: SteppingConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| FlowError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a file; relative snapshot paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| FlowError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let InitialConfig::FromSnapshot { path: p } = &mut cfg.initial {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
            if !p.exists() {
                return Err(FlowError::Config(format!("initial snapshot {} does not exist", p.display())));
            }
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        let cfg = |m: String| FlowError::Config(m);
        self.reference_geometry().map_err(|e| cfg(e.to_string()))?;
        if g.fd_order != 2 && g.fd_order != 4 {
            return Err(cfg(format!("fd_order must be 2 or 4, got {}", g.fd_order)));
        }
        self.material.model().validate().map_err(|e| cfg(e.to_string()))?;
        let s = &self.stepping;
        if !(s.dt > 0.0) || !(s.t_end >= 0.0) {
            return Err(cfg(format!("need dt > 0 and t_end ≥ 0, got dt = {}, t_end = {}", s.dt, s.t_end)));
        }
        if !(s.tol > 0.0) || s.k_max == 0 {
            return Err(cfg("need tol > 0 and k_max ≥ 1".into()));
        }
        match &self.initial {
            InitialConfig::Equilibrium { c_bulk } | InitialConfig::Ellipse { c_bulk, .. } | InitialConfig::Spike { c_bulk, .. }
                if !(*c_bulk > 0.0) =>
            {
                Err(cfg(format!("c_bulk must be positive, got {c_bulk}")))
            }
            InitialConfig::Ellipse { amplitude, mode, .. } if !amplitude.is_finite() || *mode == 0 => {
                Err(cfg("ellipse needs a finite amplitude and mode ≥ 1".into()))
            }
            InitialConfig::Spike { magnitude, width, .. } if !(*magnitude >= 0.0) || !(*width > 0.0) => {
                Err(cfg("spike needs magnitude ≥ 0 and width > 0".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn reference_geometry(&self) -> Result<ReferenceGeometry<f64>> {
        let g = &self.geometry;
        ReferenceGeometry::new(g.r_omega, g.r_sigma, g.n_theta, g.n_r_in, g.n_r_out, g.epsilon)
    }

    pub fn scheme(&self) -> Result<Scheme<f64>> {
        let grid = self.reference_geometry()?.grid(self.geometry.fd_order);
        Scheme::new(grid, self.material.model(), self.stepping.dt)
    }

    pub fn controls(&self) -> Controls<f64> {
        Controls { tol: self.stepping.tol, k_max: self.stepping.k_max, ..Controls::default() }
    }

    /// Initial state of a preset. Snapshots are read by the caller.
    pub fn preset_state(&self, scheme: &Scheme<f64>) -> Result<FlowState<f64>> {
        let grid = &scheme.grid;
        let model = &scheme.model;
        let rs = grid.geom.r_sigma;
        match self.initial {
            InitialConfig::Equilibrium { c_bulk } => FlowState::equilibrium(grid, model, c_bulk),
            InitialConfig::Ellipse { c_bulk, amplitude, mode } => {
                let mut z = FlowState::equilibrium(grid, model, c_bulk)?;
                let m = mode as f64;
                z.gamma = HeightFunction::from_fn(&grid.theta, |t| amplitude * rs * (m * t).cos());
                scheme.frame(&z.gamma)?;
                Ok(z)
            }
            InitialConfig::Spike { c_bulk, magnitude, width } => {
                let mut z = FlowState::equilibrium(grid, model, c_bulk)?;
                let ro = grid.geom.r_omega;
                let (_, radii) = crate::field::BulkField::radii(grid, Location::Nodes);
                let nt = grid.n_theta();
                for (j, &r) in radii.iter().enumerate() {
                    // vanishes with zero slope at Σ and at the wall
                    let s = (std::f64::consts::PI * (r - rs) / (ro - rs)).sin();
                    for a in 0..nt {
                        let t = grid.theta[a];
                        let dt = t.sin().atan2(t.cos());
                        z.c.outer[0][j * nt + a] = c_bulk + magnitude * s * s * (-(dt / width).powi(2)).exp();
                    }
                }
                Ok(z)
            }
            InitialConfig::FromSnapshot { .. } => Err(FlowError::Config("snapshot presets are loaded from file".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const SAMPLE: &str = r#"
[geometry]
r_omega = 2.0
r_sigma = 1.0
n_theta = 32
n_r_in = 16
n_r_out = 20
epsilon = 0.9

[material]
rho_minus = 1.0
rho_plus = 1.0
eta_minus = 1.0
eta_plus = 0.5
d = 0.2
d_gamma = 0.1
s_ref = 0.5
eos = { kind = "szyszkowski", sigma0 = 1.0, e = 0.3, s_inf = 2.0 }
isotherm = { kind = "langmuir", s_inf = 2.0, k = 1.5 }

[initial]
preset = "ellipse"
c_bulk = 0.4
amplitude = 0.05

[stepping]
dt = 0.05
t_end = 1.0
"#;

    #[test]
    fn sample_round_trips() {
        let cfg = RunConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.stepping.k_max, 25);
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
        let s = cfg.scheme().unwrap();
        let z = cfg.preset_state(&s).unwrap();
        assert!((z.gamma.sup_norm() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn invalid_radii_name_the_violation() {
        let bad = SAMPLE.replace("r_sigma = 1.0", "r_sigma = 3.0");
        let e = RunConfig::parse(&bad).unwrap_err();
        assert!(matches!(e, FlowError::Config(_)));
        assert!(e.to_string().contains("R_sigma"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse(&SAMPLE.replace("dt = 0.05", "dt = 0.05\nbogus = 1")).is_err());
    }
}
