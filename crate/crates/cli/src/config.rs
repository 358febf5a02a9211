use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use quenchspec::bath::{BathConfig, NoiseModel, SpectralModel};
use quenchspec::control::{Segment, SequenceConfig};
use quenchspec::dynamics::{time_grid, ExternalField, ScheduleShape};
use quenchspec::estimation::{ReconstructionOptions, WindowOptions};
use quenchspec::exactbath::{build_boson, FiniteBath};
use quenchspec::quad::QuadOptions;
use quenchspec::{Error, Result};
use serde::de::value::{MapAccessDeserializer, SeqAccessDeserializer};
use serde::de::{DeserializeOwned, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Serialize};

/// Parse JSON with the failing key path and line/column in the message.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Config(format!("{origin}: key `{path}`: {inner}"))
    })
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_json(&text, &path.display().to_string())
}

/// A single JSON object or an array of them.
#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for OneOrMany<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V<T>(PhantomData<T>);
        impl<'de, T: Deserialize<'de>> Visitor<'de> for V<T> {
            type Value = OneOrMany<T>;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an object or an array of objects")
            }
            fn visit_map<A: MapAccess<'de>>(self, m: A) -> std::result::Result<Self::Value, A::Error> {
                T::deserialize(MapAccessDeserializer::new(m)).map(OneOrMany::One)
            }
            fn visit_seq<A: SeqAccess<'de>>(self, s: A) -> std::result::Result<Self::Value, A::Error> {
                Vec::<T>::deserialize(SeqAccessDeserializer::new(s)).map(OneOrMany::Many)
            }
        }
        d.deserialize_any(V(PhantomData))
    }
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    #[default]
    Log,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_f_min: f64,
    pub t_f_max: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl GridConfig {
    pub fn points(&self) -> Result<Vec<f64>> {
        time_grid(self.t_f_min, self.t_f_max, self.points, self.spacing == Spacing::Log)
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    None,
    #[default]
    Step,
    Fractional,
}

/// Quench block; segment bounds are fractions of t_f.
#[derive(Clone, Debug, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default)]
    pub kind: ScheduleKind,
    #[serde(default)]
    pub segments: Option<Vec<Segment>>,
    #[serde(default)]
    pub beta_v: Option<f64>,
}

impl ScheduleConfig {
    pub fn shape(&self) -> Result<ScheduleShape> {
        match (self.kind, &self.segments) {
            (ScheduleKind::None, None) => Ok(ScheduleShape::None),
            (ScheduleKind::Step, None) => Ok(ScheduleShape::Step),
            (ScheduleKind::Fractional, Some(s)) => Ok(ScheduleShape::Fractional { segments: s.clone() }),
            (ScheduleKind::Fractional, None) => Err(Error::Config("fractional schedule needs `segments`".into())),
            _ => Err(Error::Config("`segments` only applies to kind `fractional`".into())),
        }
    }

    pub fn beta_v(&self) -> f64 {
        self.beta_v.unwrap_or(0.5)
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BosonConfig {
    pub omega: f64,
    pub g: f64,
    #[serde(rename = "kT")]
    pub kt: f64,
    pub n_max: usize,
}

/// Finite bath for the exact oracle: a JSON matrix file or a built-in boson mode.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteBathConfig {
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub boson: Option<BosonConfig>,
    /// Fixed (up, down) level pair; defaults to the labels `up`/`down`.
    #[serde(default)]
    pub subspace: Option<[String; 2]>,
}

impl FiniteBathConfig {
    pub fn build(&self, base: &Path) -> Result<FiniteBath> {
        match (&self.file, &self.boson) {
            (Some(f), None) => {
                let p = if f.is_absolute() { f.clone() } else { base.join(f) };
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                FiniteBath::from_json(&text)
            }
            (None, Some(b)) => build_boson(b.omega, b.g, b.kt, b.n_max),
            _ => Err(Error::Config("finite_bath needs exactly one of `file`, `boson`".into())),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct QuadConfig {
    #[serde(default)]
    pub abs_tol: Option<f64>,
    #[serde(default)]
    pub rel_tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    #[serde(default)]
    pub slope_tol: Option<f64>,
    #[serde(default)]
    pub plateau_tol: Option<f64>,
    #[serde(default)]
    pub min_points: Option<usize>,
}

impl WindowConfig {
    pub fn options(&self) -> WindowOptions {
        let d = WindowOptions::default();
        WindowOptions {
            slope_tol: self.slope_tol.unwrap_or(d.slope_tol),
            plateau_tol: self.plateau_tol.unwrap_or(d.plateau_tol),
            min_points: self.min_points.unwrap_or(d.min_points),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub bath: Option<OneOrMany<BathConfig>>,
    pub sequence: SequenceConfig,
    #[serde(default)]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default)]
    pub field: Option<ExternalField>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub quadrature: Option<QuadConfig>,
    #[serde(default)]
    pub window: Option<WindowConfig>,
    #[serde(default)]
    pub finite_bath: Option<FiniteBathConfig>,
}

/// A single bath resolved into models.
pub struct ResolvedBath {
    pub spectral: Option<SpectralModel>,
    pub noise: Option<NoiseModel>,
}

impl ScenarioConfig {
    /// Checks everything that can be checked without running a computation.
    pub fn validate(&self) -> Result<()> {
        self.sequence.validate()?;
        if self.sequence.nv_plan.is_some() && self.schedule.is_some() {
            return Err(Error::Config(
                "`schedule` cannot be combined with `sequence.nv_plan` (the plan fixes η)".into(),
            ));
        }
        if let Some(s) = &self.schedule {
            s.shape()?;
        }
        for b in self.baths() {
            b.spectral()?;
            b.noise()?;
        }
        if let Some(g) = &self.grid {
            g.points()?;
        }
        Ok(())
    }

    pub fn baths(&self) -> Vec<BathConfig> {
        self.bath.as_ref().map(|b| b.to_vec()).unwrap_or_default()
    }

    pub fn resolved_baths(&self) -> Result<Vec<ResolvedBath>> {
        self.baths()
            .iter()
            .map(|b| {
                Ok(ResolvedBath {
                    spectral: b.spectral()?,
                    noise: b.noise()?,
                })
            })
            .collect()
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::Config("missing `grid` block".into()))?
            .points()
    }

    pub fn quad(&self, tol: Option<f64>) -> QuadOptions {
        let mut q = QuadOptions::default();
        if let Some(c) = self.quadrature {
            if let Some(a) = c.abs_tol {
                q.abs_tol = a;
            }
            if let Some(r) = c.rel_tol {
                q.rel_tol = r;
            }
        }
        if let Some(r) = tol {
            q.rel_tol = r;
        }
        q
    }

    pub fn window(&self) -> WindowOptions {
        self.window.unwrap_or_default().options()
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PlanEntry {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "T")]
    pub t: f64,
    /// Measured Φ_q; synthesized from `bath` when absent.
    #[serde(default)]
    pub phi_q: Option<f64>,
    /// Harmonics ℓ for this plan; overrides the manifest-level choice.
    #[serde(default)]
    pub harmonics: Option<Vec<u32>>,
}

/// Reconstruction manifest.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructManifest {
    pub plans: Vec<PlanEntry>,
    #[serde(default)]
    pub harmonics: Option<Vec<u32>>,
    /// Use every odd harmonic with ℓω₀ ≤ omega_max.
    #[serde(default)]
    pub omega_max: Option<f64>,
    #[serde(default)]
    pub ridge: Option<f64>,
    #[serde(default)]
    pub rank_tol: Option<f64>,
    /// Ground-truth bath (forward synthesis and the J_true column).
    #[serde(default)]
    pub bath: Option<OneOrMany<BathConfig>>,
    #[serde(default)]
    pub quadrature: Option<QuadConfig>,
}

impl ReconstructManifest {
    pub fn options(&self) -> ReconstructionOptions {
        let d = ReconstructionOptions::default();
        ReconstructionOptions {
            ridge: self.ridge.unwrap_or(d.ridge),
            rank_tol: self.rank_tol.unwrap_or(d.rank_tol),
            ..d
        }
    }
}
