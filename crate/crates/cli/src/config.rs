//! Run configuration: command-line flags layered over an optional TOML file.

use crate::CliError;
use clap::{Args, ValueEnum};
use convex_scatter::dynamics::Family;
use convex_scatter::geometry::Shape;
use convex_scatter::ReferenceParticle;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Physical,
    Almost,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Physical => Family::Physical,
            FamilyArg::Almost => Family::AlmostPhysical,
        }
    }
}

/// A particle file: the shape table plus a density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleFile {
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(default = "unit")]
    pub density: f64,
}

fn unit() -> f64 {
    1.0
}

impl ParticleFile {
    /// Reads `disk:R`, `ellipse:A,B`, `fourier:C0,C1,...` or a TOML file.
    pub fn resolve(spec: &str) -> Result<Self, CliError> {
        if let Some((kind, rest)) = spec.split_once(':') {
            if !Path::new(spec).exists() {
                let nums = parse_list(rest)?;
                let shape = match (kind, nums.as_slice()) {
                    ("disk", [r]) => Shape::Disk { radius: *r },
                    ("ellipse", [a, b]) => Shape::Ellipse { a: *a, b: *b },
                    ("fourier", c) if !c.is_empty() => Shape::Fourier { coefficients: c.to_vec() },
                    _ => return Err(CliError::Config(format!("cannot read particle spec '{spec}'"))),
                };
                return Ok(Self { shape, density: 1.0 });
            }
        }
        let text = std::fs::read_to_string(spec).map_err(|e| CliError::Config(format!("particle file {spec}: {e}")))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("particle file {spec}: {e}")))
    }

    pub fn build(&self) -> Result<ReferenceParticle, CliError> {
        Ok(ReferenceParticle::new(self.shape.clone(), self.density)?)
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| CliError::Config(format!("'{t}': {e}")))).collect()
}

/// The particle, given either inline or as a reference to a file/spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParticleSource {
    Spec(String),
    Table(ParticleFile),
}

/// Every option any subcommand reads. Unset fields fall back to the config
/// file, then to the subcommand's default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Particle: TOML file, or `disk:R`, `ellipse:A,B`, `fourier:C0,C1,..`.
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true, value_parser = |s: &str| Ok::<_, String>(ParticleSource::Spec(s.to_string())))]
    pub particle: Option<ParticleSource>,
    /// Collision configuration `θ,θ̄,ψ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Option<Vec<f64>>,
    /// Velocity `v₁,v₂,v̄₁,v̄₂,ω,ω̄`.
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub velocity: Option<Vec<f64>>,
    /// Initial positions and orientations `x₁,x₂,θ,x̄₁,x̄₂,θ̄`.
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub state: Option<Vec<f64>>,
    /// Orientation pair `θ,θ̄` for orbit runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub orient: Option<Vec<f64>>,
    /// Time horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true)]
    pub time: Option<f64>,
    /// Interval between recorded samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true)]
    pub sample_dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true, value_enum)]
    pub family: Option<FamilyArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true)]
    pub word_length: Option<usize>,
    /// Bin resolution `k`; the sphere is cut into `4k³` cells.
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    /// Highest total degree of the invariant basis monomials.
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true)]
    pub degree: Option<u32>,
    /// Number of Fourier modes in ϑ for the invariant basis.
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true)]
    pub modes: Option<u32>,
    /// Grid size for span-rank scans.
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Separate events file for `simulate`.
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true)]
    pub events: Option<PathBuf>,
    /// Use all cores. The default is a single worker.
    #[serde(skip_serializing_if = "Option::is_none")]
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub parallel: Option<bool>,
}

macro_rules! overlay {
    ($top:expr, $base:expr; $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    /// Fields of `self` win over `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        overlay!(self, base; particle, beta, velocity, state, orient, time, sample_dt, seed, samples, tol, family,
            word_length, bins, degree, modes, grid, format, out, events, parallel)
    }

    /// Resolves the particle and stores it inline so the echo is self-contained.
    pub fn particle(&mut self) -> Result<ReferenceParticle, CliError> {
        let file = match self.particle.take() {
            None => return Err(CliError::Config("--particle is required".into())),
            Some(ParticleSource::Spec(s)) => ParticleFile::resolve(&s)?,
            Some(ParticleSource::Table(t)) => t,
        };
        let p = file.build()?;
        self.particle = Some(ParticleSource::Table(file));
        Ok(p)
    }

    pub fn format(&mut self) -> Format {
        *self.format.get_or_insert(Format::Jsonl)
    }

    pub fn execution(&mut self) -> convex_scatter::Execution {
        if *self.parallel.get_or_insert(false) {
            convex_scatter::Execution::Parallel
        } else {
            convex_scatter::Execution::Sequential
        }
    }

    pub fn tol(&mut self, default: f64) -> Result<f64, CliError> {
        let t = *self.tol.get_or_insert(default);
        if t > 0.0 {
            Ok(t)
        } else {
            Err(CliError::Config(format!("--tol must be positive, got {t}")))
        }
    }
}

/// Checks that an optional vector has the expected length, or fills the default.
pub fn fixed<const N: usize>(v: &mut Option<Vec<f64>>, name: &str, default: Option<[f64; N]>) -> Result<[f64; N], CliError> {
    if v.is_none() {
        *v = default.map(|d| d.to_vec());
    }
    let Some(v) = v else {
        return Err(CliError::Config(format!("--{name} is required")));
    };
    v.as_slice().try_into().map_err(|_| CliError::Config(format!("--{name} needs {N} values, got {}", v.len())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_particles() {
        assert_eq!(ParticleFile::resolve("disk:1.5").unwrap().shape, Shape::Disk { radius: 1.5 });
        assert_eq!(ParticleFile::resolve("ellipse:2,1").unwrap().shape, Shape::Ellipse { a: 2.0, b: 1.0 });
        assert!(ParticleFile::resolve("ellipse:2").is_err());
    }

    #[test]
    fn particle_table_parses() {
        let f: ParticleFile = toml::from_str("kind = \"ellipse\"\na = 2.0\nb = 1.0\ndensity = 3.0\n").unwrap();
        assert_eq!(f, ParticleFile { shape: Shape::Ellipse { a: 2.0, b: 1.0 }, density: 3.0 });
    }

    #[test]
    fn flags_override_file() {
        let file: RunConfig = toml::from_str("seed = 3\ntime = 2.0\nparticle = \"disk:1\"\n").unwrap();
        let flags = RunConfig { seed: Some(9), ..RunConfig::default() };
        let c = flags.over(file);
        assert_eq!((c.seed, c.time), (Some(9), Some(2.0)));
        assert_eq!(c.particle, Some(ParticleSource::Spec("disk:1".into())));
    }

    #[test]
    fn inline_particle_table_in_config() {
        let c: RunConfig = toml::from_str("[particle]\nkind = \"disk\"\nradius = 0.5\n").unwrap();
        assert!(matches!(c.particle, Some(ParticleSource::Table(_))));
    }
}
