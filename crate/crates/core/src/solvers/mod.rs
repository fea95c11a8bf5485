//! Ground-truth solutions of the benchmark systems and measurement noise.

pub mod fd;
pub mod model;
pub mod spectral;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, GridSpec};
use crate::terms::{BasisTerm, DerivPattern};

pub use model::PdeModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Heat1d,
    Heat2d,
    Burgers,
    Kdv,
    Ks,
    Wave1d,
}

impl SystemKind {
    pub const ALL: [SystemKind; 6] = [
        SystemKind::Heat1d,
        SystemKind::Heat2d,
        SystemKind::Burgers,
        SystemKind::Kdv,
        SystemKind::Ks,
        SystemKind::Wave1d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Heat1d => "heat1d",
            SystemKind::Heat2d => "heat2d",
            SystemKind::Burgers => "burgers",
            SystemKind::Kdv => "kdv",
            SystemKind::Ks => "ks",
            SystemKind::Wave1d => "wave1d",
        }
    }

    /// Coefficient names and their default values.
    pub fn default_coefficients(self) -> &'static [(&'static str, f64)] {
        match self {
            SystemKind::Heat1d => &[("alpha", 2.0)],
            SystemKind::Heat2d => &[("alpha1", 1.0), ("alpha2", 1.0)],
            SystemKind::Burgers => &[("nu", 0.1)],
            SystemKind::Kdv => &[("nonlinear", 6.0), ("dispersion", 1.0)],
            SystemKind::Ks => &[("advection", 1.0), ("antidiffusion", 1.0), ("hyperdiffusion", 1.0)],
            SystemKind::Wave1d => &[("alpha", 1.0)],
        }
    }

    pub fn boundary(self) -> Boundary {
        match self {
            SystemKind::Heat1d | SystemKind::Heat2d | SystemKind::Wave1d => Boundary::DirichletZero,
            SystemKind::Burgers | SystemKind::Kdv | SystemKind::Ks => Boundary::Periodic,
        }
    }

    pub fn time_order(self) -> u8 {
        match self {
            SystemKind::Wave1d => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SystemKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown system `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    DirichletZero,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Soliton {
    /// Propagation speed `c`; amplitude is `c / 2`.
    pub speed: f64,
    pub position: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum InitialCondition {
    /// `sin(mode * pi * x)`
    SinPi {
        #[serde(default = "one")]
        mode: f64,
    },
    /// `sum_k amplitudes[k] * sin((k + 1) * pi * x)`
    SineSeries { amplitudes: Vec<f64> },
    /// `amplitude * exp(-((x - center) / width)^2)`
    Gaussian {
        center: f64,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `exp(-a x^2 - a y^2)`
    Gaussian2d { a: f64 },
    /// Superposed KdV solitons `(c/2) sech^2(sqrt(c) (x - x0) / 2)`.
    Solitons { pulses: Vec<Soliton> },
    /// `cos(x / scale) (1 + sin(x / scale))`
    CosSin { scale: f64 },
    /// Explicit first snapshot in row-major `(x[, y])` order.
    Values { values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl InitialCondition {
    pub fn evaluate(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        let n = grid.spatial_len();
        let mut out = Vec::with_capacity(n);
        if let InitialCondition::Values { values } = self {
            if values.len() != n {
                return Err(Error::InvalidSystem(format!(
                    "initial condition has {} values, grid needs {n}",
                    values.len()
                )));
            }
            return Ok(values.clone());
        }
        for i in 0..grid.nx {
            for j in 0..grid.ny_or_one() {
                let (x, y) = (grid.x(i), grid.y(j));
                out.push(match self {
                    InitialCondition::SinPi { mode } => (mode * PI * x).sin(),
                    InitialCondition::SineSeries { amplitudes } => amplitudes
                        .iter()
                        .enumerate()
                        .map(|(k, a)| a * ((k + 1) as f64 * PI * x).sin())
                        .sum(),
                    InitialCondition::Gaussian {
                        center,
                        width,
                        amplitude,
                    } => amplitude * (-((x - center) / width).powi(2)).exp(),
                    InitialCondition::Gaussian2d { a } => (-a * x * x - a * y * y).exp(),
                    InitialCondition::Solitons { pulses } => pulses
                        .iter()
                        .map(|p| {
                            let s = 1.0 / (0.5 * p.speed.sqrt() * (x - p.position)).cosh();
                            0.5 * p.speed * s * s
                        })
                        .sum(),
                    InitialCondition::CosSin { scale } => (x / scale).cos() * (1.0 + (x / scale).sin()),
                    InitialCondition::Values { .. } => unreachable!(),
                });
            }
        }
        Ok(out)
    }
}

/// A benchmark system together with its discretisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: SystemKind,
    #[serde(default)]
    pub coefficients: BTreeMap<String, f64>,
    pub grid: GridSpec,
    pub initial_condition: InitialCondition,
    pub boundary: Boundary,
    /// Internal solver steps per stored snapshot.
    #[serde(default = "one_step")]
    pub substeps: usize,
}

fn one_step() -> usize {
    1
}

fn steps_in(range: f64, dt: f64) -> usize {
    (range / dt + 1e-9).floor() as usize + 1
}

impl SystemSpec {
    /// Grids, domains and initial conditions of the benchmark experiments.
    pub fn preset(kind: SystemKind) -> SystemSpec {
        let coefficients = kind
            .default_coefficients()
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        let (grid, ic, substeps) = match kind {
            SystemKind::Heat1d => {
                let dt = 6.6e-6;
                (
                    GridSpec::new_1d(44, 1.0 / 43.0, 0.0, steps_in(0.2, dt), dt, 0.0),
                    InitialCondition::SinPi { mode: 1.0 },
                    1,
                )
            }
            SystemKind::Heat2d => {
                let h = 1.0 / 63.0;
                (
                    GridSpec::new_2d(64, h, 0.0, 64, h, 0.0, steps_in(2.0, 1e-3), 1e-3, 0.0),
                    InitialCondition::Gaussian2d { a: 5.0 },
                    12,
                )
            }
            SystemKind::Burgers => (
                GridSpec::new_1d(256, 16.0 / 256.0, -8.0, steps_in(10.0, 0.09), 0.09, 0.0),
                InitialCondition::Gaussian {
                    center: -2.0,
                    width: 1.0,
                    amplitude: 1.0,
                },
                10,
            ),
            SystemKind::Kdv => (
                GridSpec::new_1d(512, 60.0 / 512.0, -30.0, steps_in(20.0, 0.09), 0.09, 0.0),
                InitialCondition::Solitons {
                    pulses: vec![
                        Soliton {
                            speed: 16.0,
                            position: -20.0,
                        },
                        Soliton {
                            speed: 4.0,
                            position: 0.0,
                        },
                    ],
                },
                90,
            ),
            SystemKind::Ks => (
                GridSpec::new_1d(1024, 32.0 * PI / 1024.0, 0.0, steps_in(100.0, 0.4), 0.4, 0.0),
                InitialCondition::CosSin { scale: 16.0 },
                40,
            ),
            SystemKind::Wave1d => (
                GridSpec::new_1d(100, 1.0 / 99.0, 0.0, steps_in(3.0, 3e-3), 3e-3, 0.0),
                InitialCondition::SinPi { mode: 1.0 },
                1,
            ),
        };
        SystemSpec {
            kind,
            coefficients,
            grid,
            initial_condition: ic,
            boundary: kind.boundary(),
            substeps,
        }
    }

    fn coef(&self, name: &str) -> Result<f64> {
        self.coefficients
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidSystem(format!("{} needs coefficient `{name}`", self.kind)))
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        for (name, _) in self.kind.default_coefficients() {
            let v = self.coef(name)?;
            if !v.is_finite() {
                return Err(Error::InvalidSystem(format!("coefficient `{name}` is not finite")));
            }
        }
        if self.boundary != self.kind.boundary() {
            return Err(Error::UnsupportedCombination(format!(
                "{:?} boundary for {}",
                self.boundary, self.kind
            )));
        }
        if (self.kind == SystemKind::Heat2d) != self.grid.is_2d() {
            return Err(Error::UnsupportedCombination(format!(
                "{} on a {}D grid",
                self.kind,
                if self.grid.is_2d() { 2 } else { 1 }
            )));
        }
        if self.substeps == 0 {
            return Err(Error::InvalidSystem("substeps must be at least 1".into()));
        }
        Ok(())
    }

    /// The governing equation as a combination of basis terms.
    pub fn true_model(&self) -> Result<PdeModel> {
        let x = |d| BasisTerm::new(DerivPattern::x(d), 0);
        let y = |d| BasisTerm::new(DerivPattern::y(d), 0);
        let uux = BasisTerm::new(DerivPattern::x(1), 1);
        let terms = match self.kind {
            SystemKind::Heat1d => vec![(x(2), self.coef("alpha")?)],
            SystemKind::Heat2d => vec![
                (x(2), self.coef("alpha1")?.powi(2)),
                (y(2), self.coef("alpha2")?.powi(2)),
            ],
            SystemKind::Burgers => vec![(uux, -1.0), (x(2), self.coef("nu")?)],
            SystemKind::Kdv => vec![(uux, -self.coef("nonlinear")?), (x(3), -self.coef("dispersion")?)],
            SystemKind::Ks => vec![
                (uux, -self.coef("advection")?),
                (x(2), -self.coef("antidiffusion")?),
                (x(4), -self.coef("hyperdiffusion")?),
            ],
            SystemKind::Wave1d => vec![(x(2), self.coef("alpha")?.powi(2))],
        };
        PdeModel::new(self.kind.time_order(), terms)
    }
}

/// Solves `spec` on its grid; snapshot 0 is the initial condition.
pub fn simulate(spec: &SystemSpec) -> Result<Field> {
    spec.validate()?;
    let model = spec.true_model()?;
    simulate_model(&model, spec)
}

/// Solves an arbitrary model with the discretisation, initial condition and
/// boundary of `spec`.
pub fn simulate_model(model: &PdeModel, spec: &SystemSpec) -> Result<Field> {
    spec.grid.validate()?;
    let u0 = spec.initial_condition.evaluate(&spec.grid)?;
    match spec.boundary {
        Boundary::DirichletZero => fd::integrate(model, &spec.grid, &u0, spec.substeps),
        Boundary::Periodic => spectral::integrate(model, &spec.grid, &u0, spec.substeps),
    }
}

/// Additive Gaussian measurement noise, as a fraction of the field's standard
/// deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub level: f64,
    pub seed: u64,
}

pub fn add_noise(field: &Field, noise: &NoiseSpec) -> Result<Field> {
    if !(noise.level >= 0.0 && noise.level.is_finite()) {
        return Err(Error::Config(format!("noise level {} must be >= 0", noise.level)));
    }
    if noise.level == 0.0 {
        return Ok(field.clone());
    }
    let sigma = noise.level * field.std();
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let values = field
        .values()
        .iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + sigma * z
        })
        .collect();
    Ok(field.with_values(values))
}
