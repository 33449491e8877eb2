//! Quantum-walk runs: inject particles, propagate, record observables.

use serde::{Deserialize, Serialize};

use crate::basis::{FlavorOccupancy, FockBasis, Particle, StateVector, DEFAULT_DIMENSION_CAP};
use crate::dynamics::{evolve_observed, EvolutionStats, PropagatorConfig};
use crate::error::{invalid, Result};
use crate::hamiltonian::{build_hamiltonian, single_particle_hamiltonian};
use crate::lattice::LatticeSpec;
use crate::observables::{
    chiral_displacement, density_profile, front_velocity, nion_density, nion_polarization_from_density, PolarizationSeries,
    UnitCellConvention, DEFAULT_NION_FLOOR,
};

/// Initial state of a walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Injection {
    /// One particle of every flavor on `site`.
    Nion { site: usize },
    /// An N-ion on each listed site.
    Nions { sites: Vec<usize> },
    /// Arbitrary `(site, flavor)` list.
    Particles { particles: Vec<Particle> },
}

impl Injection {
    pub fn particles(&self, flavors: usize) -> Vec<Particle> {
        let nion = |site: usize| (0..flavors).map(move |flavor| Particle { site, flavor });
        match self {
            Injection::Nion { site } => nion(*site).collect(),
            Injection::Nions { sites } => sites.iter().flat_map(|&s| nion(s)).collect(),
            Injection::Particles { particles } => particles.clone(),
        }
    }

    /// Occupancy implied by the injected particles.
    pub fn occupancy(&self, flavors: usize) -> FlavorOccupancy {
        let mut n = vec![0; flavors];
        for p in self.particles(flavors) {
            if p.flavor < flavors {
                n[p.flavor] += 1;
            }
        }
        FlavorOccupancy(n)
    }

    /// Mean unit cell of the injected particles.
    pub fn mean_cell(&self, flavors: usize) -> f64 {
        let ps = self.particles(flavors);
        ps.iter().map(|p| (p.site / 2) as f64).sum::<f64>() / ps.len().max(1) as f64
    }

    /// Mean injection site.
    pub fn mean_site(&self, flavors: usize) -> f64 {
        let ps = self.particles(flavors);
        ps.iter().map(|p| p.site as f64).sum::<f64>() / ps.len().max(1) as f64
    }
}

/// Everything needed to run one walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkSetup {
    pub spec: LatticeSpec,
    pub injection: Injection,
    pub propagator: PropagatorConfig,
    /// Cell at coordinate 0; defaults to the mean injection cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_origin: Option<f64>,
}

impl WalkSetup {
    pub fn new(spec: LatticeSpec, injection: Injection, propagator: PropagatorConfig) -> Self {
        WalkSetup {
            spec,
            injection,
            propagator,
            cell_origin: None,
        }
    }

    pub fn convention(&self) -> UnitCellConvention {
        UnitCellConvention::at_cell(
            self.cell_origin
                .unwrap_or_else(|| self.injection.mean_cell(self.spec.flavors)),
        )
    }
}

/// Recorded observables of a walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkRecord {
    pub times: Vec<f64>,
    /// `⟨n_x⟩` per snapshot.
    pub density: Vec<Vec<f64>>,
    /// N-ion density per snapshot.
    pub nion_density: Vec<Vec<f64>>,
    pub p1: Vec<f64>,
    pub pn: Vec<f64>,
    /// `⟨n_N⟩`.
    pub nn: Vec<f64>,
    pub pn_reliable: Vec<bool>,
    pub convention: UnitCellConvention,
    pub injection_site: f64,
    pub max_norm_drift: f64,
    pub substeps: usize,
}

/// Which profile the front is measured on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Total,
    Nion,
}

impl WalkRecord {
    pub fn p1_series(&self) -> Result<PolarizationSeries> {
        PolarizationSeries::new(self.times.clone(), self.p1.clone())
    }

    pub fn pn_series(&self) -> Result<PolarizationSeries> {
        PolarizationSeries::new(self.times.clone(), self.pn.clone())
    }

    pub fn front_velocity(&self, profile: Profile, threshold: f64, discard: f64) -> Result<f64> {
        let profiles = match profile {
            Profile::Total => &self.density,
            Profile::Nion => &self.nion_density,
        };
        front_velocity(&self.times, profiles, self.injection_site, threshold, discard)
    }
}

/// Build the sector, inject, propagate and record.
pub fn run_walk(setup: &WalkSetup) -> Result<WalkRecord> {
    run_walk_with_cap(setup, DEFAULT_DIMENSION_CAP)
}

pub fn run_walk_with_cap(setup: &WalkSetup, cap: usize) -> Result<WalkRecord> {
    let spec = &setup.spec;
    spec.validate_chain()?;
    let flavors = spec.flavors;
    let particles = setup.injection.particles(flavors);
    if particles.is_empty() {
        return invalid("walk needs at least one injected particle");
    }
    if let Some(p) = particles.iter().find(|p| p.flavor >= flavors || p.site >= spec.sites) {
        return invalid(format!("particle {p:?} outside the lattice"));
    }
    let conv = setup.convention();
    let mut rec = WalkRecord {
        times: Vec::new(),
        density: Vec::new(),
        nion_density: Vec::new(),
        p1: Vec::new(),
        pn: Vec::new(),
        nn: Vec::new(),
        pn_reliable: Vec::new(),
        convention: conv,
        injection_site: setup.injection.mean_site(flavors),
        max_norm_drift: 0.0,
        substeps: 0,
    };

    // One particle: work in site space, which has no 64-site limit.
    let stats: EvolutionStats = if let [p] = particles[..] {
        let h = single_particle_hamiltonian(spec, p.flavor)?;
        let psi0 = StateVector::basis_state(spec.sites, p.site);
        evolve_observed(&h, &psi0, &setup.propagator, |t, psi| {
            let density: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
            let nd = if flavors == 1 { density.clone() } else { vec![0.0; spec.sites] };
            rec.push(t, density, nd, 1.0);
            Ok(())
        })?
    } else {
        spec.validate()?;
        let basis = FockBasis::with_cap(spec, &setup.injection.occupancy(flavors), cap)?;
        let h = build_hamiltonian(spec, &basis)?;
        let psi0: StateVector = basis.inject(&particles)?;
        let total = basis.occupancy().total() as f64;
        evolve_observed(&h, &psi0, &setup.propagator, |t, psi| {
            rec.push(t, density_profile(&basis, psi), nion_density(&basis, psi), total);
            Ok(())
        })?
    };
    rec.max_norm_drift = stats.max_norm_drift;
    rec.substeps = stats.substeps;
    Ok(rec)
}

impl WalkRecord {
    fn push(&mut self, t: f64, density: Vec<f64>, nd: Vec<f64>, particles: f64) {
        let pn = nion_polarization_from_density(&nd, &self.convention, DEFAULT_NION_FLOOR);
        self.times.push(t);
        self.p1.push(chiral_displacement(&density, &self.convention, particles));
        self.pn.push(pn.value);
        self.nn.push(pn.weight);
        self.pn_reliable.push(pn.reliable);
        self.density.push(density);
        self.nion_density.push(nd);
    }
}
