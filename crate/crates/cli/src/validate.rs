//! Preflight checks that do not run the experiment.

use serde::Serialize;
use sshh::basis::DEFAULT_DIMENSION_CAP;
use sshh::berry::{berry_phase, SubsetSelector, TwistGrid, BERRY_DENSE_CAP};
use sshh::effective::{nion_params, BAND_COMPARE_CAP};
use sshh::{boundary_time, Error, FlavorOccupancy, FockBasis, Injection, LatticeSpec, PropagatorConfig};

use crate::recipe::{occupancy, Command, Recipe, SweepTarget};

/// Memory above which a run is flagged.
pub const MEMORY_BUDGET: u128 = 4 << 30;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub dimension: u128,
    pub memory_bytes: u128,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningCode {
    Capacity,
    Reflection,
    SubsetGap,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Warning {
    pub code: WarningCode,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub estimate: Estimate,
    pub warnings: Vec<Warning>,
}

const AMPLITUDE_BYTES: u128 = 16;

fn dense_estimate(dim: u128) -> u128 {
    // Matrix plus LAPACK workspace of the same order.
    2 * dim * dim * AMPLITUDE_BYTES
}

fn sparse_estimate(dim: u128, particles: usize, krylov_dim: usize) -> u128 {
    let nnz = dim * (2 * particles as u128 + 1);
    nnz * (AMPLITUDE_BYTES + 4) + dim * AMPLITUDE_BYTES * (krylov_dim as u128 + 4)
}

/// Front velocity: the N-ion velocity for injected N-ions, capped by the
/// free-particle `2J(1 - |δ|)`.
fn front_velocity(spec: &LatticeSpec, injection: &Injection) -> f64 {
    let free = 2.0 * spec.hopping.abs() * (1.0 - spec.dimerization.abs());
    let bound = matches!(injection, Injection::Nion { .. } | Injection::Nions { .. }) && spec.flavors >= 2;
    if bound && spec.interaction > 0.0 {
        if let Ok(p) = nion_params(spec.flavors, spec.hopping, spec.interaction, spec.dimerization) {
            return p.max_velocity().min(free);
        }
    }
    free
}

fn walk_checks(
    spec: &LatticeSpec,
    deltas: &[f64],
    injection: &Injection,
    propagator: &PropagatorConfig,
    warnings: &mut Vec<Warning>,
) -> Estimate {
    let occ = injection.occupancy(spec.flavors);
    let dim = occ.dimension(spec.sites).unwrap_or(u128::MAX);
    let memory = sparse_estimate(dim, occ.total(), propagator.krylov_dim);
    capacity_checks(dim, memory, DEFAULT_DIMENSION_CAP as u128, &occ, warnings);
    if spec.boundary.is_open() {
        for &d in deltas {
            let s = spec.clone().with_dimerization(d);
            let t = boundary_time(&s, injection.mean_site(spec.flavors), front_velocity(&s, injection));
            if propagator.t_max > t {
                warnings.push(Warning {
                    code: WarningCode::Reflection,
                    message: format!(
                        "delta {d}: t_max {} exceeds the front's arrival at the boundary (t = {t:.3})",
                        propagator.t_max
                    ),
                });
            }
        }
    }
    Estimate {
        dimension: dim,
        memory_bytes: memory,
    }
}

fn capacity_checks(dim: u128, memory: u128, cap: u128, occ: &FlavorOccupancy, warnings: &mut Vec<Warning>) {
    if dim > cap || memory > MEMORY_BUDGET {
        warnings.push(Warning {
            code: WarningCode::Capacity,
            message: format!(
                "sector {:?} has dimension {dim} (cap {cap}); estimated memory {:.1} GiB (budget {:.1} GiB)",
                occ.0,
                memory as f64 / (1u64 << 30) as f64,
                MEMORY_BUDGET as f64 / (1u64 << 30) as f64
            ),
        });
    }
}

fn berry_checks(
    spec: &LatticeSpec,
    occ: &FlavorOccupancy,
    deltas: &[f64],
    grid: &TwistGrid,
    selector: &SubsetSelector,
    warnings: &mut Vec<Warning>,
) -> Estimate {
    let dim = occ.dimension(spec.sites).unwrap_or(u128::MAX);
    let memory = dense_estimate(dim);
    capacity_checks(dim, memory, BERRY_DENSE_CAP as u128, occ, warnings);
    if dim <= BERRY_DENSE_CAP as u128 {
        if let Ok(basis) = FockBasis::new(spec, occ) {
            let at_zero = TwistGrid {
                steps: 1,
                flavor_mask: grid.flavor_mask.clone(),
            };
            for &d in deltas {
                let s = spec.clone().with_dimerization(d);
                match berry_phase(&s, &basis, &at_zero, selector) {
                    Err(e @ (Error::GapClosure { .. } | Error::BandIdentification(_) | Error::InvalidArgument(_))) => {
                        warnings.push(Warning {
                            code: WarningCode::SubsetGap,
                            message: format!("delta {d}: {e}"),
                        })
                    }
                    Ok(r) if !r.trusted => warnings.push(Warning {
                        code: WarningCode::SubsetGap,
                        message: format!("delta {d}: gap {:.3e} at theta = 0 is close to the floor", r.min_gap),
                    }),
                    _ => {}
                }
            }
        }
    }
    Estimate {
        dimension: dim,
        memory_bytes: memory,
    }
}

pub fn validate(recipe: &Recipe) -> Diagnostics {
    let spec = &recipe.spec;
    let mut warnings = Vec::new();
    let estimate = match recipe.command {
        Command::Spectrum => {
            let b = recipe.spectrum.as_ref().expect("resolved recipe");
            let occ = occupancy(&b.occupancy, spec.flavors);
            let dim = occ.dimension(spec.sites).unwrap_or(u128::MAX);
            let memory = dense_estimate(dim);
            capacity_checks(dim, memory, BERRY_DENSE_CAP as u128, &occ, &mut warnings);
            Estimate {
                dimension: dim,
                memory_bytes: memory,
            }
        }
        Command::Walk => {
            let b = recipe.walk.as_ref().expect("resolved recipe");
            walk_checks(spec, &b.deltas, &b.injection, &b.propagator, &mut warnings)
        }
        Command::Berry => {
            let b = recipe.berry.as_ref().expect("resolved recipe");
            let occ = occupancy(&b.occupancy, spec.flavors);
            berry_checks(spec, &occ, &b.deltas, &b.grid, &b.selector, &mut warnings)
        }
        Command::Effcmp => {
            let occ = FlavorOccupancy::one_per_flavor(spec.flavors);
            let dim = occ.dimension(spec.sites).unwrap_or(u128::MAX);
            let memory = dense_estimate(dim);
            capacity_checks(dim, memory, BAND_COMPARE_CAP as u128, &occ, &mut warnings);
            Estimate {
                dimension: dim,
                memory_bytes: memory,
            }
        }
        Command::Sweep => {
            let b = recipe.sweep.as_ref().expect("resolved recipe");
            match &b.target {
                SweepTarget::Berry {
                    occupancy: o,
                    grid,
                    selector,
                    ..
                } => berry_checks(spec, &occupancy(o, spec.flavors), &b.deltas, grid, selector, &mut warnings),
                SweepTarget::Polarization {
                    injection, propagator, ..
                } => walk_checks(spec, &b.deltas, injection, propagator, &mut warnings),
            }
        }
    };
    Diagnostics { estimate, warnings }
}
