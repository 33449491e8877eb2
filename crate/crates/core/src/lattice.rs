//! Physical configuration of an SU(N) SSH-Hubbard chain.
//!
//! Sites are labelled `0..L` internally. The hopping on bond `(x, x+1)` is
//! `J[1 - δ(-1)^x] + δJ_x`, so bond `(0, 1)` is the weak bond for `δ > 0`
//! and the boundary bond `(L-1, 0)` is a strong one. Together with unit
//! cells `(2m, 2m+1)` this places the topological phase at `δ > 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Boundary condition of the chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Open,
    /// Periodic chain whose boundary bond carries `e^{iθ}` for the flavors in
    /// `flavor_mask` (0-based flavor indices).
    Twisted { theta: f64, flavor_mask: Vec<usize> },
}

impl Boundary {
    /// Twist on every flavor of an `n_flavors` chain.
    pub fn twisted_all(theta: f64, n_flavors: usize) -> Self {
        Boundary::Twisted {
            theta,
            flavor_mask: (0..n_flavors).collect(),
        }
    }

    pub fn is_open(&self) -> bool {
        matches!(self, Boundary::Open)
    }

    /// Phase factor on the boundary bond for `flavor`.
    pub fn boundary_phase(&self, flavor: usize) -> Complex64 {
        match self {
            Boundary::Twisted { theta, flavor_mask } if flavor_mask.contains(&flavor) => {
                Complex64::from_polar(1.0, *theta)
            }
            _ => Complex64::new(1.0, 0.0),
        }
    }
}

fn default_hopping() -> f64 {
    1.0
}

fn default_boundary() -> Boundary {
    Boundary::Periodic
}

/// Full physical configuration of a chain.
///
/// Empty disorder arrays mean a clean chain; otherwise they must hold exactly
/// `sites` entries. `hopping_disorder[x]` is the offset on bond `(x, x+1)`;
/// the last entry is ignored for open chains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub sites: usize,
    #[serde(default = "default_hopping")]
    pub hopping: f64,
    #[serde(default)]
    pub dimerization: f64,
    #[serde(default)]
    pub interaction: f64,
    #[serde(default)]
    pub chemical_potential: f64,
    pub flavors: usize,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hopping_disorder: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub onsite_disorder: Vec<f64>,
}

/// One hopping term `amplitude · c†_to c_from + h.c.`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bond {
    pub from: usize,
    pub to: usize,
    pub amplitude: Complex64,
}

impl LatticeSpec {
    /// Clean periodic chain with `J = 1` and every other parameter zero.
    pub fn new(sites: usize, flavors: usize) -> Self {
        LatticeSpec {
            sites,
            hopping: 1.0,
            dimerization: 0.0,
            interaction: 0.0,
            chemical_potential: 0.0,
            flavors,
            boundary: Boundary::Periodic,
            hopping_disorder: Vec::new(),
            onsite_disorder: Vec::new(),
        }
    }

    pub fn with_dimerization(mut self, delta: f64) -> Self {
        self.dimerization = delta;
        self
    }

    pub fn with_interaction(mut self, u: f64) -> Self {
        self.interaction = u;
        self
    }

    pub fn with_hopping(mut self, j: f64) -> Self {
        self.hopping = j;
        self
    }

    pub fn with_chemical_potential(mut self, mu: f64) -> Self {
        self.chemical_potential = mu;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_disorder(mut self, hopping: Vec<f64>, onsite: Vec<f64>) -> Self {
        self.hopping_disorder = hopping;
        self.onsite_disorder = onsite;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_chain()?;
        if self.sites > 64 {
            return invalid(format!("at most 64 sites are supported, got {}", self.sites));
        }
        Ok(())
    }

    /// Checks that do not depend on the many-body encoding; chains used only
    /// as single-particle models may be longer than 64 sites.
    pub fn validate_chain(&self) -> Result<()> {
        let l = self.sites;
        if l < 2 || l % 2 != 0 {
            return invalid(format!("site count must be even and >= 2, got {l}"));
        }
        if self.flavors == 0 {
            return invalid("at least one flavor is required");
        }
        if !(self.dimerization.abs() < 1.0) {
            return invalid(format!("|delta| must be < 1, got {}", self.dimerization));
        }
        for (name, v) in [
            ("hopping", self.hopping),
            ("interaction", self.interaction),
            ("chemical_potential", self.chemical_potential),
        ] {
            if !v.is_finite() {
                return invalid(format!("{name} must be finite"));
            }
        }
        for (name, arr) in [
            ("hopping_disorder", &self.hopping_disorder),
            ("onsite_disorder", &self.onsite_disorder),
        ] {
            if !arr.is_empty() && arr.len() != l {
                return invalid(format!("{name} must have {l} entries, got {}", arr.len()));
            }
            if arr.iter().any(|v| !v.is_finite()) {
                return invalid(format!("{name} contains non-finite values"));
            }
        }
        if let Boundary::Twisted { theta, flavor_mask } = &self.boundary {
            if !theta.is_finite() {
                return invalid("twist angle must be finite");
            }
            if let Some(&f) = flavor_mask.iter().find(|&&f| f >= self.flavors) {
                return invalid(format!("flavor {f} in twist mask exceeds flavor count"));
            }
        }
        Ok(())
    }

    /// Offset of bond `(x, x+1)` from the clean value.
    pub fn hopping_offset(&self, x: usize) -> f64 {
        self.hopping_disorder.get(x).copied().unwrap_or(0.0)
    }

    pub fn onsite_offset(&self, x: usize) -> f64 {
        self.onsite_disorder.get(x).copied().unwrap_or(0.0)
    }

    /// Clean dimerized amplitude of bond `(x, x+1)`: `J[1 - δ(-1)^x]`.
    pub fn clean_bond(&self, x: usize) -> f64 {
        let parity = if x % 2 == 0 { 1.0 } else { -1.0 };
        self.hopping * (1.0 - self.dimerization * parity)
    }

    /// Real amplitude of bond `(x, x+1 mod L)` including disorder, zero for
    /// the missing bond of an open chain.
    pub fn bond_amplitude(&self, x: usize) -> f64 {
        if self.boundary.is_open() && x + 1 == self.sites {
            return 0.0;
        }
        self.clean_bond(x) + self.hopping_offset(x)
    }

    /// Hopping table seen by `flavor`.
    pub fn bond_table(&self, flavor: usize) -> Vec<Bond> {
        let l = self.sites;
        let n_bonds = if self.boundary.is_open() { l - 1 } else { l };
        (0..n_bonds)
            .map(|x| {
                let mut amplitude = Complex64::new(self.bond_amplitude(x), 0.0);
                if x + 1 == l {
                    amplitude *= self.boundary.boundary_phase(flavor);
                }
                Bond {
                    from: x,
                    to: (x + 1) % l,
                    amplitude,
                }
            })
            .collect()
    }

    pub fn is_clean(&self) -> bool {
        self.hopping_disorder.iter().all(|&v| v == 0.0) && self.onsite_disorder.iter().all(|&v| v == 0.0)
    }

    pub fn twist_angle(&self) -> f64 {
        match &self.boundary {
            Boundary::Twisted { theta, .. } => *theta,
            _ => 0.0,
        }
    }

    /// Number of unit cells `(2m, 2m+1)`.
    pub fn cells(&self) -> usize {
        self.sites / 2
    }

    /// Chemical potential that makes the chain chiral symmetric, `(N-1)U/2`.
    pub fn chiral_chemical_potential(&self) -> f64 {
        (self.flavors as f64 - 1.0) * self.interaction / 2.0
    }

    /// Copy with a different boundary condition.
    pub fn rebound(&self, boundary: Boundary) -> Self {
        let mut s = self.clone();
        s.boundary = boundary;
        s
    }
}
