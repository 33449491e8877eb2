//! Experiment recipes.
//!
//! A recipe is a TOML document: the command, a `[spec]` table and the block
//! named after the command.
//!
//! ```toml
//! command = "berry"
//!
//! [spec]
//! sites = 8
//! flavors = 3
//! interaction = 3.0
//!
//! [berry]
//! deltas = [-0.3, 0.3]
//! grid = { steps = 20 }
//! selector = { mode = "band", tag = "lower_trion" }
//! ```
//!
//! Every optional field has a fixed default listed in [`DEFAULTS`]; the
//! resolved recipe (all defaults written out) is echoed in every output.

use serde::{Deserialize, Serialize};
use sshh::berry::{SubsetSelector, TwistGrid};
use sshh::ensemble::{DisorderConfig, PhaseAverage};
use sshh::{FlavorOccupancy, Injection, LatticeSpec, PropagatorConfig};

use crate::error::CliError;

/// Version of the recipe schema and of the defaults table.
pub const RECIPE_VERSION: u32 = 1;

/// Defaults of schema version 1, as `(field, value)`.
pub const DEFAULTS: &[(&str, &str)] = &[
    ("format", "csv"),
    ("seed", "0"),
    ("spec.hopping", "1.0"),
    ("spec.dimerization", "0.0"),
    ("spec.interaction", "0.0"),
    ("spec.chemical_potential", "0.0"),
    ("spec.boundary", "periodic"),
    ("occupancy", "one particle per flavor"),
    ("walk.propagator.method", "krylov"),
    ("walk.propagator.dt", "0.05"),
    ("walk.propagator.krylov_dim", "30"),
    ("walk.propagator.tolerance", "1e-10"),
    ("walk.propagator.dense_cap", "20000"),
    ("walk.cell_origin", "mean injection cell"),
    ("spectrum.eigenvectors", "false"),
    ("sweep.average", "circular"),
    ("deltas", "[spec.dimerization]"),
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Spectrum,
    Walk,
    Berry,
    Effcmp,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Walk => "walk",
            Command::Berry => "berry",
            Command::Effcmp => "effcmp",
            Command::Sweep => "sweep",
        }
    }
}

fn default_version() -> u32 {
    RECIPE_VERSION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recipe {
    #[serde(default = "default_version")]
    pub version: u32,
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: Format,
    pub spec: LatticeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walk: Option<WalkBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub berry: Option<BerryBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effcmp: Option<EffcmpBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    /// Particles per flavor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupancy: Option<Vec<usize>>,
    #[serde(default)]
    pub eigenvectors: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkBlock {
    pub injection: Injection,
    pub propagator: PropagatorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_origin: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deltas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BerryBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupancy: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deltas: Vec<f64>,
    pub grid: TwistGrid,
    pub selector: SubsetSelector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffcmpBlock {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deltas: Vec<f64>,
    /// Values of `U`; the spec's own when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interactions: Vec<f64>,
}

/// What a sweep averages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "observable", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepTarget {
    Berry {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        occupancy: Option<Vec<usize>>,
        grid: TwistGrid,
        selector: SubsetSelector,
        #[serde(default)]
        average: PhaseAverage,
    },
    Polarization {
        injection: Injection,
        propagator: PropagatorConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cell_origin: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub target: SweepTarget,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deltas: Vec<f64>,
    /// Disorder amplitudes; the disorder block's own when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub amplitudes: Vec<f64>,
    /// The seed is taken from the recipe.
    pub disorder: DisorderConfig,
}

impl Recipe {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let mut recipe: Recipe = toml::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        recipe.check()?;
        recipe.resolve();
        Ok(recipe)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let mut recipe: Recipe = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        recipe.check()?;
        recipe.resolve();
        Ok(recipe)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("recipes always serialize")
    }

    /// One-line JSON used in output headers.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("recipes always serialize")
    }

    /// Structural checks: schema version, presence of the command block and
    /// the physical validity of the spec.
    pub fn check(&self) -> Result<(), CliError> {
        if self.version != RECIPE_VERSION {
            return Err(CliError::Schema(format!(
                "unsupported recipe version {} (expected {RECIPE_VERSION})",
                self.version
            )));
        }
        let present = [
            (Command::Spectrum, self.spectrum.is_some()),
            (Command::Walk, self.walk.is_some()),
            (Command::Berry, self.berry.is_some()),
            (Command::Effcmp, self.effcmp.is_some()),
            (Command::Sweep, self.sweep.is_some()),
        ];
        for (cmd, has) in present {
            if cmd == self.command && !has && cmd != Command::Effcmp && cmd != Command::Spectrum {
                return Err(CliError::Schema(format!("command `{}` needs a [{}] table", cmd.name(), cmd.name())));
            }
            if cmd != self.command && has {
                return Err(CliError::Schema(format!(
                    "table [{}] does not belong to command `{}`",
                    cmd.name(),
                    self.command.name()
                )));
            }
        }
        self.spec.validate_chain().map_err(|e| CliError::Schema(e.to_string()))?;
        if let Some(w) = &self.walk {
            w.propagator.validate().map_err(|e| CliError::Schema(e.to_string()))?;
        }
        if let Some(s) = &self.sweep {
            s.disorder.validate().map_err(|e| CliError::Schema(e.to_string()))?;
            if let SweepTarget::Polarization { propagator, .. } = &s.target {
                propagator.validate().map_err(|e| CliError::Schema(e.to_string()))?;
            }
        }
        for (name, list) in self.delta_lists() {
            if let Some(d) = list.iter().find(|d| !(d.abs() < 1.0)) {
                return Err(CliError::Schema(format!("{name}.deltas: |delta| must be < 1, got {d}")));
            }
        }
        Ok(())
    }

    fn delta_lists(&self) -> Vec<(&'static str, &Vec<f64>)> {
        let mut out = Vec::new();
        if let Some(b) = &self.walk {
            out.push(("walk", &b.deltas));
        }
        if let Some(b) = &self.berry {
            out.push(("berry", &b.deltas));
        }
        if let Some(b) = &self.effcmp {
            out.push(("effcmp", &b.deltas));
        }
        if let Some(b) = &self.sweep {
            out.push(("sweep", &b.deltas));
        }
        out
    }

    /// Write every default out explicitly so the recipe alone fixes the run.
    pub fn resolve(&mut self) {
        let flavors = self.spec.flavors;
        let delta = self.spec.dimerization;
        let fill = |v: &mut Vec<f64>| {
            if v.is_empty() {
                v.push(delta);
            }
        };
        let occ = |o: &mut Option<Vec<usize>>| {
            if o.is_none() {
                *o = Some(vec![1; flavors]);
            }
        };
        if self.command == Command::Spectrum && self.spectrum.is_none() {
            self.spectrum = Some(SpectrumBlock {
                occupancy: None,
                eigenvectors: false,
            });
        }
        if self.command == Command::Effcmp && self.effcmp.is_none() {
            self.effcmp = Some(EffcmpBlock {
                deltas: Vec::new(),
                interactions: Vec::new(),
            });
        }
        if let Some(b) = &mut self.spectrum {
            occ(&mut b.occupancy);
        }
        if let Some(b) = &mut self.walk {
            fill(&mut b.deltas);
        }
        if let Some(b) = &mut self.berry {
            occ(&mut b.occupancy);
            fill(&mut b.deltas);
        }
        if let Some(b) = &mut self.effcmp {
            fill(&mut b.deltas);
            if b.interactions.is_empty() {
                b.interactions.push(self.spec.interaction);
            }
        }
        let seed = self.seed;
        if let Some(b) = &mut self.sweep {
            fill(&mut b.deltas);
            if b.amplitudes.is_empty() {
                b.amplitudes.push(b.disorder.amplitude);
            }
            b.disorder.seed = seed;
            if let SweepTarget::Berry { occupancy, .. } = &mut b.target {
                occ(occupancy);
            }
        }
    }

    /// Change the seed after parsing (command-line override).
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.resolve();
    }
}

pub fn occupancy(o: &Option<Vec<usize>>, flavors: usize) -> FlavorOccupancy {
    FlavorOccupancy(o.clone().unwrap_or_else(|| vec![1; flavors]))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BERRY: &str = r#"
command = "berry"

[spec]
sites = 8
flavors = 3
interaction = 3.0

[berry]
deltas = [-0.3, 0.3]
grid = { steps = 20 }
selector = { mode = "band", tag = "lower_trion" }
"#;

    #[test]
    fn parses_and_resolves() {
        let r = Recipe::from_toml(BERRY).unwrap();
        assert_eq!(r.command, Command::Berry);
        assert_eq!(r.berry.as_ref().unwrap().occupancy, Some(vec![1, 1, 1]));
        assert_eq!(r.format, Format::Csv);
        let again = Recipe::from_toml(&r.to_toml()).unwrap();
        assert_eq!(again, r);
        assert_eq!(Recipe::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn schema_violations_are_reported() {
        let bad = [
            BERRY.replace("sites = 8", "sites = 7"),
            BERRY.replace("[berry]", "[walk]"),
            BERRY.replace("grid =", "grd ="),
            BERRY.replace("command = \"berry\"", "command = \"plot\""),
            BERRY.replace("deltas = [-0.3, 0.3]", "deltas = [1.5]"),
            format!("version = 7\n{BERRY}"),
        ];
        for text in bad {
            assert!(matches!(Recipe::from_toml(&text), Err(CliError::Schema(_))), "{text}");
        }
    }

    #[test]
    fn seed_reaches_the_disorder() {
        let text = r#"
command = "sweep"
seed = 5

[spec]
sites = 6
flavors = 3
interaction = 3.0

[sweep]
deltas = [0.3]
disorder = { amplitude = 0.2, kind = "hopping", realizations = 3 }
target = { observable = "berry", grid = { steps = 4 }, selector = { mode = "band", tag = "lower_trion" } }
"#;
        let mut r = Recipe::from_toml(text).unwrap();
        assert_eq!(r.sweep.as_ref().unwrap().disorder.seed, 5);
        assert_eq!(r.sweep.as_ref().unwrap().amplitudes, vec![0.2]);
        r.set_seed(9);
        assert_eq!(r.sweep.as_ref().unwrap().disorder.seed, 9);
    }
}
