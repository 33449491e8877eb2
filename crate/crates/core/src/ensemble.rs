//! Disorder realizations and sweeps over dimerization and disorder strength.
//!
//! Every random number is addressed by `(seed, realization, kind, site)`:
//! the realization index selects a ChaCha8 stream and each kind starts at a
//! fixed word offset, so any realization can be rebuilt on its own.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{FlavorOccupancy, FockBasis};
use crate::berry::{berry_phase_with, wrap_phase, BerryOptions, SubsetSelector, TwistGrid};
use crate::error::{invalid, Result};
use crate::lattice::LatticeSpec;
use crate::walk::{run_walk, WalkSetup};

/// Which terms are disordered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderKind {
    Hopping,
    Onsite,
    Both,
}

impl DisorderKind {
    fn hopping(self) -> bool {
        matches!(self, DisorderKind::Hopping | DisorderKind::Both)
    }

    fn onsite(self) -> bool {
        matches!(self, DisorderKind::Onsite | DisorderKind::Both)
    }
}

/// Name of the generator behind [`sample_disorder`].
pub const RNG_NAME: &str = "chacha8-stream-per-realization";

/// Words reserved per kind inside a stream.
const KIND_STRIDE: u128 = 1 << 32;

/// Uniform disorder of amplitude `W`: entries in `[-W/2, W/2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderConfig {
    /// `W`.
    pub amplitude: f64,
    pub kind: DisorderKind,
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
}

impl DisorderConfig {
    pub fn new(amplitude: f64, kind: DisorderKind, realizations: usize, seed: u64) -> Self {
        DisorderConfig {
            amplitude,
            kind,
            realizations,
            seed,
        }
    }

    /// No disorder, a single realization.
    pub fn clean() -> Self {
        DisorderConfig::new(0.0, DisorderKind::Hopping, 1, 0)
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        DisorderConfig {
            amplitude,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return invalid(format!("disorder amplitude must be finite and >= 0, got {}", self.amplitude));
        }
        if self.realizations == 0 {
            return invalid("at least one realization is required");
        }
        Ok(())
    }

    /// `spec` with the disorder of `realization` applied.
    pub fn realize(&self, spec: &LatticeSpec, realization: usize) -> Result<LatticeSpec> {
        let (hop, onsite) = sample_disorder(self, realization, spec.sites)?;
        Ok(spec.clone().with_disorder(hop, onsite))
    }
}

/// Bond offsets `δJ_x` and on-site offsets `δμ_x` of one realization.
pub fn sample_disorder(cfg: &DisorderConfig, realization: usize, sites: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    if realization >= cfg.realizations {
        return invalid(format!(
            "realization {realization} out of range (0..{})",
            cfg.realizations
        ));
    }
    let draw = |slot: u128, enabled: bool| -> Vec<f64> {
        if !enabled {
            return vec![0.0; sites];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(realization as u64);
        rng.set_word_pos(slot * KIND_STRIDE);
        (0..sites).map(|_| cfg.amplitude * (rng.gen::<f64>() - 0.5)).collect()
    };
    Ok((draw(0, cfg.kind.hopping()), draw(1, cfg.kind.onsite())))
}

/// How phases are averaged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseAverage {
    /// `arg Σ e^{iγ}`.
    #[default]
    Circular,
    /// Arithmetic mean of the values folded to `(-π, π]`.
    Folded,
}

/// Quantity aggregated at a sweep point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    BerryPhase,
    /// Cumulative average of `P_1` at the last recorded time.
    P1Cumulative,
    /// Cumulative average of `P_N` at the last recorded time.
    PnCumulative,
}

/// Aggregate over the realizations at one `(δ, W)` point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub amplitude: f64,
    pub statistic: Statistic,
    pub mean: f64,
    pub std_error: f64,
    /// Mean resultant length for phases.
    pub concentration: Option<f64>,
    /// Successful realizations.
    pub count: usize,
    /// `(realization, reason)` of every failure.
    pub failures: Vec<(usize, String)>,
    /// At least 80% of the realizations succeeded.
    pub valid: bool,
}

/// Points in `(δ, W, statistic)` order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn get(&self, delta: f64, amplitude: f64, statistic: Statistic) -> Option<&SweepPoint> {
        self.points
            .iter()
            .find(|p| p.delta == delta && p.amplitude == amplitude && p.statistic == statistic)
    }
}

/// Required success fraction of a sweep point.
pub const MIN_SUCCESS_FRACTION: f64 = 0.8;

fn is_valid(count: usize, total: usize) -> bool {
    count > 0 && count as f64 >= MIN_SUCCESS_FRACTION * total as f64
}

/// Circular mean, concentration `R` and the circular standard error
/// `sqrt(-2 ln R / n)`.
pub fn circular_stats(phases: &[f64]) -> (f64, f64, f64) {
    let n = phases.len() as f64;
    let (s, c) = phases
        .iter()
        .fold((0.0, 0.0), |(s, c), g| (s + g.sin(), c + g.cos()));
    let r = (s.hypot(c) / n).min(1.0);
    let std_error = if r > 0.0 { (-2.0 * r.ln() / n).sqrt() } else { f64::INFINITY };
    (s.atan2(c), r, std_error)
}

/// Mean and standard error of the mean.
pub fn linear_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn grid_points(deltas: &[f64], amplitudes: &[f64]) -> Vec<(f64, f64)> {
    deltas
        .iter()
        .flat_map(|&d| amplitudes.iter().map(move |&w| (d, w)))
        .collect()
}

/// Disorder-averaged many-body Berry phase over a `(δ, W)` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerrySweep {
    pub spec: LatticeSpec,
    pub occupancy: FlavorOccupancy,
    pub deltas: Vec<f64>,
    /// Disorder amplitudes; the config's own amplitude when empty.
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    pub grid: TwistGrid,
    pub selector: SubsetSelector,
    pub disorder: DisorderConfig,
    #[serde(default)]
    pub average: PhaseAverage,
}

impl BerrySweep {
    fn amplitudes(&self) -> Vec<f64> {
        if self.amplitudes.is_empty() {
            vec![self.disorder.amplitude]
        } else {
            self.amplitudes.clone()
        }
    }

    pub fn run(&self) -> Result<SweepResult> {
        self.run_with(&BerryOptions::default())
    }

    pub fn run_with(&self, opts: &BerryOptions) -> Result<SweepResult> {
        self.disorder.validate()?;
        let basis = FockBasis::new(&self.spec, &self.occupancy)?;
        let points = grid_points(&self.deltas, &self.amplitudes());
        let n = self.disorder.realizations;
        let tasks: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..n).map(move |r| (p, r))).collect();
        let outcomes: Vec<std::result::Result<f64, String>> = tasks
            .par_iter()
            .map(|&(p, r)| {
                let (delta, w) = points[p];
                let cfg = self.disorder.with_amplitude(w);
                let spec = cfg
                    .realize(&self.spec.clone().with_dimerization(delta), r)
                    .map_err(|e| e.to_string())?;
                berry_phase_with(&spec, &basis, &self.grid, &self.selector, opts)
                    .map(|res| res.gamma)
                    .map_err(|e| e.to_string())
            })
            .collect();
        let points = points
            .iter()
            .enumerate()
            .map(|(p, &(delta, amplitude))| {
                let (ok, failures) = split(&outcomes[p * n..(p + 1) * n]);
                let (mean, concentration, std_error) = if ok.is_empty() {
                    (f64::NAN, None, f64::NAN)
                } else {
                    match self.average {
                        PhaseAverage::Circular => {
                            let (m, r, se) = circular_stats(&ok);
                            (m, Some(r), se)
                        }
                        PhaseAverage::Folded => {
                            let folded: Vec<f64> = ok.iter().map(|&g| wrap_phase(g)).collect();
                            let (m, se) = linear_stats(&folded);
                            (m, Some(circular_stats(&ok).1), se)
                        }
                    }
                };
                SweepPoint {
                    delta,
                    amplitude,
                    statistic: Statistic::BerryPhase,
                    mean,
                    std_error,
                    concentration,
                    count: ok.len(),
                    valid: is_valid(ok.len(), n),
                    failures,
                }
            })
            .collect();
        Ok(SweepResult { points })
    }
}

fn split(outcomes: &[std::result::Result<f64, String>]) -> (Vec<f64>, Vec<(usize, String)>) {
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (r, o) in outcomes.iter().enumerate() {
        match o {
            Ok(v) => ok.push(*v),
            Err(e) => failures.push((r, e.clone())),
        }
    }
    (ok, failures)
}

/// Disorder-averaged late-time cumulative polarizations of a walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizationSweep {
    /// Walk template; its dimerization is overridden by `deltas`.
    pub walk: WalkSetup,
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    pub disorder: DisorderConfig,
}

impl PolarizationSweep {
    pub fn run(&self) -> Result<SweepResult> {
        self.disorder.validate()?;
        let amplitudes = if self.amplitudes.is_empty() {
            vec![self.disorder.amplitude]
        } else {
            self.amplitudes.clone()
        };
        let points = grid_points(&self.deltas, &amplitudes);
        let n = self.disorder.realizations;
        let tasks: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..n).map(move |r| (p, r))).collect();
        let outcomes: Vec<std::result::Result<(f64, f64), String>> = tasks
            .par_iter()
            .map(|&(p, r)| {
                let (delta, w) = points[p];
                let mut setup = self.walk.clone();
                setup.spec = self
                    .disorder
                    .with_amplitude(w)
                    .realize(&setup.spec.clone().with_dimerization(delta), r)
                    .map_err(|e| e.to_string())?;
                let rec = run_walk(&setup).map_err(|e| e.to_string())?;
                let p1 = rec.p1_series().map_err(|e| e.to_string())?.final_cumulative();
                let pn = rec.pn_series().map_err(|e| e.to_string())?.final_cumulative();
                Ok((p1, pn))
            })
            .collect();
        let mut out = Vec::new();
        for (p, &(delta, amplitude)) in points.iter().enumerate() {
            let chunk = &outcomes[p * n..(p + 1) * n];
            for (statistic, pick) in [
                (Statistic::P1Cumulative, 0usize),
                (Statistic::PnCumulative, 1usize),
            ] {
                let values: Vec<std::result::Result<f64, String>> = chunk
                    .iter()
                    .map(|o| o.clone().map(|v| if pick == 0 { v.0 } else { v.1 }))
                    .collect();
                let (ok, failures) = split(&values);
                let (mean, std_error) = if ok.is_empty() {
                    (f64::NAN, f64::NAN)
                } else {
                    linear_stats(&ok)
                };
                out.push(SweepPoint {
                    delta,
                    amplitude,
                    statistic,
                    mean,
                    std_error,
                    concentration: None,
                    count: ok.len(),
                    valid: is_valid(ok.len(), n),
                    failures,
                });
            }
        }
        Ok(SweepResult { points: out })
    }
}
