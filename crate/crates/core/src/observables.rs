//! Densities, chiral polarizations and related walk diagnostics.
//!
//! Sites `2m` and `2m+1` form unit cell `m` with sublattices A and B. The
//! chiral displacement weights the sublattice imbalance of each cell by the
//! cell coordinate `x_m = m − origin`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::FockBasis;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sublattice {
    A,
    B,
}

/// Maps sites to unit cells and cells to coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitCellConvention {
    /// Cell index that sits at coordinate 0 (may be fractional).
    pub origin: f64,
}

impl UnitCellConvention {
    /// Coordinate 0 at cell `origin`.
    pub fn at_cell(origin: f64) -> Self {
        UnitCellConvention { origin }
    }

    /// Coordinates symmetric about the chain center, `x_m = m − (L−2)/4`.
    pub fn centered(sites: usize) -> Self {
        UnitCellConvention {
            origin: (sites as f64 - 2.0) / 4.0,
        }
    }

    pub fn cell_of_site(&self, site: usize) -> (usize, Sublattice) {
        let sub = if site % 2 == 0 { Sublattice::A } else { Sublattice::B };
        (site / 2, sub)
    }

    pub fn cell_coordinate(&self, cell: usize) -> f64 {
        cell as f64 - self.origin
    }

    /// `x_{m(x)}·(±1)` with `+` on A sites: the chiral displacement weight.
    pub fn chiral_weight(&self, site: usize) -> f64 {
        let (m, sub) = self.cell_of_site(site);
        let sign = if sub == Sublattice::A { 1.0 } else { -1.0 };
        sign * self.cell_coordinate(m)
    }
}

/// `⟨n_x⟩` summed over flavors.
pub fn density_profile(basis: &FockBasis, psi: &[Complex64]) -> Vec<f64> {
    let l = basis.sites();
    let mut out = vec![0.0; l];
    for (i, a) in psi.iter().enumerate() {
        let w = a.norm_sqr();
        if w == 0.0 {
            continue;
        }
        for f in 0..basis.flavors() {
            let mut p = basis.pattern(i, f);
            while p != 0 {
                out[p.trailing_zeros() as usize] += w;
                p &= p - 1;
            }
        }
    }
    out
}

/// `⟨∏_α n_{x,α}⟩` at each site: the N-ion density.
pub fn nion_density(basis: &FockBasis, psi: &[Complex64]) -> Vec<f64> {
    let mut out = vec![0.0; basis.sites()];
    for (i, a) in psi.iter().enumerate() {
        let w = a.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let mut p = (0..basis.flavors()).fold(u64::MAX, |acc, f| acc & basis.pattern(i, f));
        while p != 0 {
            out[p.trailing_zeros() as usize] += w;
            p &= p - 1;
        }
    }
    out
}

/// Expected number of N-ions, `Σ_x ⟨∏_α n_{x,α}⟩`.
pub fn nion_number(basis: &FockBasis, psi: &[Complex64]) -> f64 {
    nion_density(basis, psi).iter().sum()
}

/// Chiral displacement of a density profile, divided by `norm`.
pub fn chiral_displacement(profile: &[f64], conv: &UnitCellConvention, norm: f64) -> f64 {
    profile
        .iter()
        .enumerate()
        .map(|(x, n)| conv.chiral_weight(x) * n)
        .sum::<f64>()
        / norm
}

/// `P_1 = Σ_m x_m Σ_α (⟨n_{(m,A),α}⟩ − ⟨n_{(m,B),α}⟩)` per particle.
pub fn chiral_polarization_1(basis: &FockBasis, psi: &[Complex64], conv: &UnitCellConvention) -> f64 {
    let particles = basis.occupancy().total().max(1) as f64;
    chiral_displacement(&density_profile(basis, psi), conv, particles)
}

/// Diagonal of the chiral displacement operator in the Fock basis.
pub fn chiral_displacement_operator(basis: &FockBasis, conv: &UnitCellConvention) -> Vec<f64> {
    let weights: Vec<f64> = (0..basis.sites()).map(|x| conv.chiral_weight(x)).collect();
    (0..basis.dim())
        .map(|i| {
            (0..basis.flavors())
                .map(|f| {
                    let p = basis.pattern(i, f);
                    (0..basis.sites()).filter(|&x| p & (1 << x) != 0).map(|x| weights[x]).sum::<f64>()
                })
                .sum()
        })
        .collect()
}

/// Same quantity as [`chiral_polarization_1`], evaluated as `⟨ψ|Γ̂X̂|ψ⟩`.
pub fn chiral_polarization_1_operator(basis: &FockBasis, psi: &[Complex64], conv: &UnitCellConvention) -> f64 {
    let particles = basis.occupancy().total().max(1) as f64;
    chiral_displacement_operator(basis, conv)
        .iter()
        .zip(psi)
        .map(|(d, a)| d * a.norm_sqr())
        .sum::<f64>()
        / particles
}

/// N-ion chiral polarization with its normalization weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NionPolarization {
    pub value: f64,
    /// `⟨n_N⟩`.
    pub weight: f64,
    /// False when `weight` fell below the floor.
    pub reliable: bool,
}

pub const DEFAULT_NION_FLOOR: f64 = 1e-6;

/// `P_N = ⟨n_N⟩⁻¹ Σ_m x_m (⟨Φ†_{m,A}Φ_{m,A}⟩ − ⟨Φ†_{m,B}Φ_{m,B}⟩)`.
pub fn chiral_polarization_n(basis: &FockBasis, psi: &[Complex64], conv: &UnitCellConvention, floor: f64) -> NionPolarization {
    nion_polarization_from_density(&nion_density(basis, psi), conv, floor)
}

pub fn nion_polarization_from_density(density: &[f64], conv: &UnitCellConvention, floor: f64) -> NionPolarization {
    let weight: f64 = density.iter().sum();
    let reliable = weight > floor;
    let value = if weight > 0.0 {
        chiral_displacement(density, conv, weight)
    } else {
        0.0
    };
    NionPolarization {
        value,
        weight,
        reliable,
    }
}

/// A polarization time series and its running time average.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizationSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl PolarizationSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let cumulative = cumulative_average(&times, &values)?;
        Ok(PolarizationSeries {
            times,
            values,
            cumulative,
        })
    }

    /// `P^c(t_max)`.
    pub fn final_cumulative(&self) -> f64 {
        *self.cumulative.last().expect("series has at least two samples")
    }
}

/// `P^c(t) = (1/t) ∫_0^t P dt'` by the trapezoidal rule; `P^c(0) = P(0)`.
pub fn cumulative_average(times: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    if times.len() != values.len() {
        return invalid("times and values differ in length");
    }
    if times.len() < 2 {
        return invalid("cumulative average needs at least two samples");
    }
    let mut out = Vec::with_capacity(times.len());
    out.push(values[0]);
    let mut integral = 0.0;
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        if !(dt > 0.0) {
            return invalid("times must be strictly increasing");
        }
        integral += 0.5 * dt * (values[k] + values[k - 1]);
        let span = times[k] - times[0];
        out.push(integral / span);
    }
    Ok(out)
}

/// Winding number of the clean single-particle chain: 1 for `δ > 0`, else 0.
pub fn winding_number(delta: f64) -> i32 {
    if delta > 0.0 {
        1
    } else {
        0
    }
}

/// Zak phase `πν`.
pub fn zak_phase(delta: f64) -> f64 {
    PI * winding_number(delta) as f64
}

/// `P_1(t) = ν/2 − ∫ dk/(4π) cos(2E_k t)(n_k × ∂_k n_k)_z` for a particle
/// injected at cell coordinate 0 of an infinite clean chain.
///
/// The Bloch vector is `d_k = (v + w cos k, w sin k)` with intracell hopping
/// `v = J(1−δ)` and intercell hopping `w = J(1+δ)`; the k integral uses a
/// uniform midpoint grid with `k_grid` points.
pub fn analytic_p1(delta: f64, j: f64, t: f64, k_grid: usize) -> Result<f64> {
    if !(delta.abs() < 1.0) {
        return invalid(format!("|delta| must be < 1, got {delta}"));
    }
    if k_grid < 64 {
        return invalid(format!("k_grid must be at least 64, got {k_grid}"));
    }
    let v = j * (1.0 - delta);
    let w = j * (1.0 + delta);
    let dk = 2.0 * PI / k_grid as f64;
    let mut winding = 0.0;
    let mut oscillating = 0.0;
    for q in 0..k_grid {
        let k = -PI + (q as f64 + 0.5) * dk;
        let (s, c) = k.sin_cos();
        let dx = v + w * c;
        let dy = w * s;
        let e2 = dx * dx + dy * dy;
        let curvature = (w * w + v * w * c) / e2;
        winding += curvature * dk;
        oscillating += (2.0 * e2.sqrt() * t).cos() * curvature * dk;
    }
    let nu = (winding / (2.0 * PI)).round();
    Ok(nu / 2.0 - oscillating / (4.0 * PI))
}

/// Light-cone speed from a sequence of density profiles.
///
/// For every snapshot the front is the furthest site from `origin` whose
/// density exceeds `threshold` times the overall peak density. The velocity
/// is the least-squares slope of front position against time after dropping
/// the first `discard` fraction of the samples.
pub fn front_velocity(times: &[f64], profiles: &[Vec<f64>], origin: f64, threshold: f64, discard: f64) -> Result<f64> {
    if times.len() != profiles.len() {
        return invalid("times and profiles differ in length");
    }
    if times.len() < 10 {
        return invalid("front extraction needs at least 10 snapshots");
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return invalid(format!("threshold must lie in (0, 1), got {threshold}"));
    }
    if !(0.0..1.0).contains(&discard) {
        return invalid("discard fraction must lie in [0, 1)");
    }
    let peak = profiles.iter().flatten().cloned().fold(0.0, f64::max);
    let level = threshold * peak;
    let start = (discard * times.len() as f64).floor() as usize;
    let mut pts = Vec::new();
    for (t, prof) in times.iter().zip(profiles).skip(start) {
        let front = prof
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > level)
            .map(|(x, _)| (x as f64 - origin).abs())
            .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))));
        if let Some(d) = front {
            pts.push((*t, d));
        }
    }
    if pts.len() < 2 || level == 0.0 {
        return Err(Error::NoFront { threshold });
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let md = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - md)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::NoFront { threshold });
    }
    Ok(sxy / sxx)
}
