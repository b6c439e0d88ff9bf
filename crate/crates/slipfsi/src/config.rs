//! Run configuration: JSON with unknown keys rejected, defaults filled in,
//! and a normalized form that parses back to itself.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{make_reference_geometry, DomainConfig, RigidBody, Surface};
use crate::nonnewtonian::{ViscosityKind, ViscosityModel};
use crate::picard::{FixedPointOptions, TimeGrid};

pub const CONFIG_SCHEMA: &str = "slipfsi-config v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "config_schema")]
    pub schema: String,
    /// `builtin:shell(r,R,n)` or the path of a mesh file.
    #[serde(default = "default_geometry")]
    pub geometry: String,
    #[serde(default)]
    pub body: BodyConfig,
    #[serde(default)]
    pub viscosity: ViscosityConfig,
    #[serde(default)]
    pub slip: SlipConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub picard: PicardConfig,
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Recorded with the run. Builtin meshes and every solver path are
    /// deterministic, so no result depends on it yet.
    #[serde(default)]
    pub seed: u64,
}

fn config_schema() -> String {
    CONFIG_SCHEMA.into()
}

fn default_geometry() -> String {
    "builtin:shell(1,4,0)".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BodyConfig {
    pub density: f64,
}

impl Default for BodyConfig {
    fn default() -> Self {
        Self { density: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViscosityConfig {
    pub kind: ViscosityKind,
    pub mu0: f64,
    #[serde(default = "two")]
    pub d: f64,
}

fn two() -> f64 {
    2.0
}

impl Default for ViscosityConfig {
    fn default() -> Self {
        Self {
            kind: ViscosityKind::Newtonian,
            mu0: 1.0,
            d: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlipLaw {
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlipConfig {
    pub law: SlipLaw,
    /// Constant friction coefficient on the solid boundary.
    pub alpha: f64,
}

impl Default for SlipConfig {
    fn default() -> Self {
        Self {
            law: SlipLaw::Linear,
            alpha: 1.0,
        }
    }
}

/// Initial fluid velocity: the steady lifting of `(l0, omega0)`, or nodal
/// values read from a field file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FluidInitial {
    Lifting,
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub l0: [f64; 3],
    pub omega0: [f64; 3],
    #[serde(default = "lifting")]
    pub u0: FluidInitial,
}

fn lifting() -> FluidInitial {
    FluidInitial::Lifting
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            l0: [0.0; 3],
            omega0: [0.0; 3],
            u0: FluidInitial::Lifting,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub horizon: f64,
    pub dt: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { horizon: 0.2, dt: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardConfig {
    pub gamma: f64,
    pub eta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub gate: bool,
    pub contact_check: bool,
    pub blowup: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        let d = FixedPointOptions::default();
        Self {
            gamma: d.gamma,
            eta: d.eta,
            tol: d.tol,
            max_iter: d.max_iter,
            gate: d.gate,
            contact_check: d.contact_check,
            blowup: d.blowup,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    pub count: usize,
    /// Modes per axis of the right half-plane grid for the resolvent bound.
    pub grid_modes: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self { count: 6, grid_modes: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// VTK snapshot interval in steps, used when `dump_state` is set.
    pub snapshot_every: usize,
    pub dump_state: bool,
    pub dump_flowmap: bool,
    pub dump_operators: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("slipfsi-out"),
            snapshot_every: 1,
            dump_state: true,
            dump_flowmap: false,
            dump_operators: false,
        }
    }
}

/// Parsed `builtin:shell(r,R,n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellSpec {
    pub solid_radius: f64,
    pub fluid_radius: f64,
    pub refinement: usize,
}

pub fn parse_shell(spec: &str) -> Option<ShellSpec> {
    let args = spec.strip_prefix("builtin:shell(")?.strip_suffix(')')?;
    let parts: Vec<&str> = args.split(',').map(str::trim).collect();
    let [r, big_r, n] = parts.as_slice() else {
        return None;
    };
    Some(ShellSpec {
        solid_radius: r.parse().ok()?,
        fluid_radius: big_r.parse().ok()?,
        refinement: n.parse().ok()?,
    })
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: config_schema(),
            geometry: default_geometry(),
            body: BodyConfig::default(),
            viscosity: ViscosityConfig::default(),
            slip: SlipConfig::default(),
            initial: InitialConfig::default(),
            time: TimeConfig::default(),
            picard: PicardConfig::default(),
            spectral: SpectralConfig::default(),
            output: OutputConfig::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Parses and validates; errors carry the offending key path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { "(root)".into() } else { path }, e.inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        let mut cfg = Self::from_json(&text)?;
        // relative file references are taken from the config's directory
        if let Some(dir) = path.as_ref().parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if parse_shell(&self.geometry).is_none() && Path::new(&self.geometry).is_relative() {
            self.geometry = dir.join(&self.geometry).display().to_string();
        }
        if let FluidInitial::File { path } = &mut self.initial.u0 {
            fix(path);
        }
    }

    /// Pretty JSON with every default written out.
    pub fn normalized(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |path: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(path, format!("must be positive and finite, got {v}")))
            }
        };
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::config("schema", format!("expected \"{CONFIG_SCHEMA}\", got \"{}\"", self.schema)));
        }
        if self.geometry.starts_with("builtin:") {
            let s = parse_shell(&self.geometry)
                .ok_or_else(|| Error::config("geometry", format!("cannot parse \"{}\", expected builtin:shell(r,R,n)", self.geometry)))?;
            if !(s.solid_radius > 0.0 && s.fluid_radius > s.solid_radius) {
                return Err(Error::config("geometry", "need 0 < r < R"));
            }
        }
        positive("body.density", self.body.density)?;
        positive("viscosity.mu0", self.viscosity.mu0)?;
        if !(self.viscosity.d > 1.0 && self.viscosity.d.is_finite()) {
            return Err(Error::config("viscosity.d", format!("must lie in (1, inf), got {}", self.viscosity.d)));
        }
        if self.viscosity.kind == ViscosityKind::Newtonian && self.viscosity.d != 2.0 {
            return Err(Error::config("viscosity.d", "must be 2 for a newtonian fluid"));
        }
        positive("slip.alpha", self.slip.alpha)?;
        for (k, v) in self.initial.l0.iter().chain(&self.initial.omega0).enumerate() {
            if !v.is_finite() {
                let key = if k < 3 { "l0" } else { "omega0" };
                return Err(Error::config(format!("initial.{key}[{}]", k % 3), "must be finite"));
            }
        }
        positive("time.horizon", self.time.horizon)?;
        positive("time.dt", self.time.dt)?;
        if self.time.dt > self.time.horizon {
            return Err(Error::config("time.dt", "must not exceed time.horizon"));
        }
        positive("picard.gamma", self.picard.gamma)?;
        positive("picard.eta", self.picard.eta)?;
        positive("picard.tol", self.picard.tol)?;
        positive("picard.blowup", self.picard.blowup)?;
        if self.picard.max_iter == 0 {
            return Err(Error::config("picard.max_iter", "must be at least 1"));
        }
        if self.output.dump_state && self.output.snapshot_every == 0 {
            return Err(Error::config("output.snapshot_every", "must be at least 1 when dump_state is set"));
        }
        if self.spectral.count == 0 {
            return Err(Error::config("spectral.count", "must be at least 1"));
        }
        Ok(())
    }

    /// Mesh and boundary data with the configured friction.
    pub fn domain(&self) -> Result<DomainConfig> {
        let d = match parse_shell(&self.geometry) {
            Some(s) => make_reference_geometry(s.solid_radius, s.fluid_radius, s.refinement)?,
            None => DomainConfig::from_mesh(crate::geometry::io::load_mesh(&self.geometry)?)?,
        };
        let alpha = self.slip.alpha;
        d.with_alpha(|_| alpha)
    }

    pub fn body(&self, domain: &DomainConfig) -> Result<RigidBody> {
        let shape: &Surface = &domain.solid_boundary_initial;
        RigidBody::uniform(self.body.density, shape)
    }

    pub fn model(&self) -> ViscosityModel {
        ViscosityModel {
            kind: self.viscosity.kind,
            mu0: self.viscosity.mu0,
            d: self.viscosity.d,
        }
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.time.horizon, self.time.dt)
    }

    pub fn rigid_initial(&self) -> [f64; 6] {
        let (l, w) = (self.initial.l0, self.initial.omega0);
        [l[0], l[1], l[2], w[0], w[1], w[2]]
    }

    pub fn fixed_point_options(&self) -> FixedPointOptions {
        let p = &self.picard;
        FixedPointOptions {
            tol: p.tol,
            max_iter: p.max_iter,
            gamma: p.gamma,
            eta: p.eta,
            gate: p.gate,
            nonlinear_slip: self.slip.law == SlipLaw::Nonlinear,
            contact_check: p.contact_check,
            blowup: p.blowup,
        }
    }
}
