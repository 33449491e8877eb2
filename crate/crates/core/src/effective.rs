//! Strong-coupling N-ion chains.
//!
//! For large `U` an N-ion (one particle of every flavor on a single site)
//! moves as one particle on an SSH chain. Virtual hops of a single member
//! shift its energy at second order; the whole composite moves at order `N`:
//!
//! ```text
//! ε_x  = U N(N-1)/2 + Σ_f Σ_{b ∋ x} |J_{f,b}|² / ((N-1) U)
//! t_b  = N Π_f J_{f,b} / ((N-1)! U^{N-1})
//! ```
//!
//! Sites at the end of an open chain have one bond, so their on-site term is
//! smaller than in the bulk.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{FlavorOccupancy, FockBasis};
use crate::error::{invalid, Error, Result};
use crate::hamiltonian::build_hamiltonian;
use crate::lattice::{Boundary, LatticeSpec};
use crate::linalg::{self, DenseMatrix};

/// Parameters of the N-ion SSH chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    /// Flavor count `N`.
    pub flavors: usize,
    pub hopping: f64,
    pub interaction: f64,
    pub dimerization: f64,
    /// Bulk on-site energy `E_N`.
    pub energy: f64,
    /// `J_N` in `J_N[1 ± δ_N]`.
    pub effective_hopping: f64,
    /// `δ_N`.
    pub effective_dimerization: f64,
    /// Per-site energies once placed on a lattice; empty for bulk parameters.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub onsite_profile: Vec<f64>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn check_coupling(u: f64) -> Result<()> {
    if u == 0.0 {
        return Err(Error::ZeroCoupling(u));
    }
    if !(u > 0.0) || !u.is_finite() {
        return invalid(format!("effective model needs finite U > 0, got {u}"));
    }
    Ok(())
}

/// N-ion chain for `N ≥ 2` flavors.
pub fn nion_params(n: usize, j: f64, u: f64, delta: f64) -> Result<EffectiveParams> {
    if n < 2 {
        return invalid(format!("N-ion needs at least two flavors, got {n}"));
    }
    check_coupling(u)?;
    let nf = n as f64;
    let prefactor = nf * j.powi(n as i32) / (factorial(n - 1) * u.powi(n as i32 - 1));
    // (1+δ)^N = A + B and (1-δ)^N = A - B.
    let plus = (1.0 + delta).powi(n as i32);
    let minus = (1.0 - delta).powi(n as i32);
    let (a, b) = ((plus + minus) / 2.0, (plus - minus) / 2.0);
    Ok(EffectiveParams {
        flavors: n,
        hopping: j,
        interaction: u,
        dimerization: delta,
        energy: u * nf * (nf - 1.0) / 2.0 + 2.0 * nf / (nf - 1.0) * j * j * (1.0 + delta * delta) / u,
        effective_hopping: prefactor * a,
        effective_dimerization: if a == 0.0 { 0.0 } else { b / a },
        onsite_profile: Vec::new(),
    })
}

pub fn doublon_params(j: f64, u: f64, delta: f64) -> Result<EffectiveParams> {
    nion_params(2, j, u, delta)
}

pub fn trion_params(j: f64, u: f64, delta: f64) -> Result<EffectiveParams> {
    nion_params(3, j, u, delta)
}

impl EffectiveParams {
    /// Bulk parameters of the N-ion chain of `spec`.
    pub fn of(spec: &LatticeSpec) -> Result<Self> {
        nion_params(spec.flavors, spec.hopping, spec.interaction, spec.dimerization)
    }

    /// Hopping of the clean chain on bond `(x, x+1)`.
    pub fn bond_hopping(&self, x: usize) -> f64 {
        let sign = if x % 2 == 0 { -1.0 } else { 1.0 };
        self.effective_hopping * (1.0 + sign * self.effective_dimerization)
    }

    /// Maximal group velocity in sites per unit time, `2 min(t_weak, t_strong)`.
    pub fn max_velocity(&self) -> f64 {
        2.0 * self.bond_hopping(0).abs().min(self.bond_hopping(1).abs())
    }

    fn spec(&self, sites: usize, boundary: Boundary) -> LatticeSpec {
        LatticeSpec::new(sites, self.flavors)
            .with_hopping(self.hopping)
            .with_interaction(self.interaction)
            .with_dimerization(self.dimerization)
            .with_boundary(boundary)
    }
}

/// Dense `L × L` N-ion Hamiltonian of `spec`, including disorder, twists,
/// chemical potential and open-boundary edge terms.
pub fn effective_hamiltonian(spec: &LatticeSpec) -> Result<(DenseMatrix, Vec<f64>)> {
    spec.validate_chain()?;
    let n = spec.flavors;
    if n < 2 {
        return invalid(format!("N-ion needs at least two flavors, got {n}"));
    }
    let u = spec.interaction;
    check_coupling(u)?;
    let l = spec.sites;
    let nf = n as f64;
    let tables: Vec<_> = (0..n).map(|f| spec.bond_table(f)).collect();
    let mut onsite: Vec<f64> = (0..l)
        .map(|x| u * nf * (nf - 1.0) / 2.0 + nf * (spec.onsite_offset(x) - spec.chemical_potential))
        .collect();
    let mut m = DenseMatrix::zeros(l);
    let scale = nf / (factorial(n - 1) * u.powi(n as i32 - 1));
    for b in 0..tables[0].len() {
        let (from, to) = (tables[0][b].from, tables[0][b].to);
        let mut product = Complex64::new(scale, 0.0);
        for table in &tables {
            let a = table[b].amplitude;
            product *= a;
            let virtual_hop = a.norm_sqr() / ((nf - 1.0) * u);
            onsite[from] += virtual_hop;
            onsite[to] += virtual_hop;
        }
        m.add(to, from, product);
        m.add(from, to, product.conj());
    }
    for (x, e) in onsite.iter().enumerate() {
        m.add(x, x, Complex64::new(*e, 0.0));
    }
    Ok((m, onsite))
}

/// Effective chain of `params` on `sites` sites. The returned parameters carry
/// the on-site profile with edge terms.
pub fn build_effective_ssh(params: &EffectiveParams, sites: usize, boundary: Boundary) -> Result<(DenseMatrix, EffectiveParams)> {
    let (m, profile) = effective_hamiltonian(&params.spec(sites, boundary))?;
    let mut placed = params.clone();
    placed.onsite_profile = profile;
    Ok((m, placed))
}

/// Energies and inverse participation ratios of an effective chain.
pub fn effective_spectrum(spec: &LatticeSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let (m, _) = effective_hamiltonian(spec)?;
    let eig = linalg::eigh(&m)?;
    let ipr = (0..eig.count())
        .map(|k| eig.vector(k).iter().map(|z| z.norm_sqr().powi(2)).sum())
        .collect();
    Ok((eig.values, ipr))
}

/// Eigenstate of the effective chain localized at an edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeState {
    /// Position in the sorted band.
    pub index: usize,
    pub effective_energy: f64,
    pub full_energy: f64,
    pub ipr: f64,
}

/// Top band of the full model next to the effective chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandComparison {
    pub params: EffectiveParams,
    /// Sorted top-`L` energies of the full model.
    pub full: Vec<f64>,
    /// Sorted effective-chain energies.
    pub effective: Vec<f64>,
    pub max_abs_error: f64,
    /// Distance from the top band down to the rest of the spectrum.
    pub band_gap: f64,
    /// Edge states; only searched for on open chains.
    pub edge_states: Vec<EdgeState>,
    /// Weight of each effective eigenstate on the outer sites of an open
    /// chain; empty for closed chains.
    pub edge_weight: Vec<f64>,
}

impl BandComparison {
    /// Among the states next to the dimerization gap (the middle half of the
    /// band), the one with the most weight on the chain ends.
    ///
    /// For doublons these states are not localized but hug the subband edge
    /// closest to the gap: above it for `δ < 0`, below it for `δ > 0`.
    pub fn inner_edge_index(&self) -> Option<usize> {
        let l = self.edge_weight.len();
        (l / 4..l - l / 4).max_by(|&a, &b| self.edge_weight[a].total_cmp(&self.edge_weight[b]))
    }
}

/// States with IPR above this multiple of the extended-state value `1/L`
/// and at least half their weight on the outer tenth of the chain.
const EDGE_IPR_FACTOR: f64 = 4.0;

/// Compare the N-ion band of the one-per-flavor sector with its effective
/// chain.
pub fn band_compare(spec: &LatticeSpec) -> Result<BandComparison> {
    band_compare_with_cap(spec, BAND_COMPARE_CAP)
}

/// Largest sector diagonalized densely by [`band_compare`].
pub const BAND_COMPARE_CAP: usize = 6000;

pub fn band_compare_with_cap(spec: &LatticeSpec, cap: usize) -> Result<BandComparison> {
    let params = EffectiveParams::of(spec)?;
    let l = spec.sites;
    let basis = FockBasis::with_cap(spec, &FlavorOccupancy::one_per_flavor(spec.flavors), usize::MAX)?;
    let d = basis.dim();
    if d > cap {
        return Err(Error::Capacity {
            what: "band comparison dense dimension",
            required: d as u128,
            cap: cap as u128,
        });
    }
    let h = build_hamiltonian(spec, &basis)?.to_dense(cap)?;
    let top = linalg::eigvalsh_range(&h, d - l - 1, d)?;
    let band_gap = top[1] - top[0];
    let full = top[1..].to_vec();
    let widest = full.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if band_gap <= widest {
        return Err(Error::BandIdentification(format!(
            "top {l} states are not separated from the rest (gap {band_gap:.3e}, in-band spacing {widest:.3e})"
        )));
    }

    let (m, profile) = effective_hamiltonian(spec)?;
    let eig = linalg::eigh(&m)?;
    let effective = eig.values.clone();
    let max_abs_error = full.iter().zip(&effective).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let mut edge_states = Vec::new();
    let mut edge_weight = Vec::new();
    if spec.boundary.is_open() {
        let rim = (l / 10).max(2);
        for k in 0..l {
            let v = eig.vector(k);
            let ipr: f64 = v.iter().map(|z| z.norm_sqr().powi(2)).sum();
            let w: f64 = (0..l).filter(|&x| x < rim || x >= l - rim).map(|x| v[x].norm_sqr()).sum();
            edge_weight.push(w);
            if ipr > EDGE_IPR_FACTOR / l as f64 && w > 0.5 {
                edge_states.push(EdgeState {
                    index: k,
                    effective_energy: effective[k],
                    full_energy: full[k],
                    ipr,
                });
            }
        }
    }
    let mut placed = params;
    placed.onsite_profile = profile;
    Ok(BandComparison {
        params: placed,
        full,
        effective,
        max_abs_error,
        band_gap,
        edge_states,
        edge_weight,
    })
}

/// `band_compare` over a dimerization grid, in grid order.
pub fn band_compare_sweep(spec: &LatticeSpec, deltas: &[f64]) -> Result<Vec<(f64, BandComparison)>> {
    deltas
        .par_iter()
        .map(|&d| band_compare(&spec.clone().with_dimerization(d)).map(|r| (d, r)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn doublon_values() {
        let p = doublon_params(1.0, 8.0, 0.0).unwrap();
        assert!(close(p.energy, 8.5, 1e-14));
        assert!(close(p.bond_hopping(0), 0.25, 1e-14) && close(p.bond_hopping(1), 0.25, 1e-14));
        assert_eq!(p.effective_dimerization, 0.0);
        let p = doublon_params(1.0, 8.0, 0.5).unwrap();
        assert!(close(p.bond_hopping(1), 0.5625, 1e-14));
        assert!(close(p.bond_hopping(0), 0.0625, 1e-14));
        assert!(close(p.effective_hopping, 0.25 * 1.25, 1e-14));
        assert!(close(p.effective_dimerization, 1.0 / 1.25, 1e-14));
    }

    #[test]
    fn trion_values() {
        let p = trion_params(1.0, 3.0, 0.0).unwrap();
        assert!(close(p.energy, 10.0, 1e-12));
        assert!(close(p.effective_hopping, 1.0 / 6.0, 1e-14));
        assert_eq!(p.effective_dimerization, 0.0);
        let p = trion_params(1.0, 8.0, 0.2).unwrap();
        assert!(close(p.effective_dimerization, 3.04 * 0.2 / 1.12, 1e-12));
        assert!(close(p.effective_hopping, 0.02625, 1e-14));
        let near_one = trion_params(1.0, 8.0, 0.99).unwrap();
        assert!(near_one.effective_dimerization < 1.0 && near_one.effective_dimerization > 0.999);
    }

    #[test]
    fn four_flavor_values() {
        let p = nion_params(4, 1.0, 10.0, 0.0).unwrap();
        assert!(close(p.energy, 60.0 + 8.0 / 30.0, 1e-12));
        assert!(close(p.effective_hopping, 4.0 / 6000.0, 1e-15));
    }

    #[test]
    fn zero_coupling_is_refused() {
        assert!(matches!(doublon_params(1.0, 0.0, 0.1), Err(Error::ZeroCoupling(_))));
        assert!(matches!(nion_params(1, 1.0, 3.0, 0.1), Err(Error::InvalidArgument(_))));
        let spec = LatticeSpec::new(4, 2);
        assert!(matches!(effective_hamiltonian(&spec), Err(Error::ZeroCoupling(_))));
    }

    #[test]
    fn periodic_uniform_chain_is_circulant() {
        let p = trion_params(1.0, 3.0, 0.0).unwrap();
        let l = 12;
        let (m, placed) = build_effective_ssh(&p, l, Boundary::Periodic).unwrap();
        assert!(placed.onsite_profile.iter().all(|&e| close(e, p.energy, 1e-12)));
        let mut expected: Vec<f64> = (0..l)
            .map(|k| p.energy + 2.0 * p.effective_hopping * (2.0 * std::f64::consts::PI * k as f64 / l as f64).cos())
            .collect();
        expected.sort_by(f64::total_cmp);
        let got = linalg::eigvalsh(&m).unwrap();
        for (a, b) in got.iter().zip(&expected) {
            assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn open_chain_edges_lose_one_bond() {
        let p = doublon_params(1.0, 8.0, 0.3).unwrap();
        let (_, placed) = build_effective_ssh(&p, 10, Boundary::Open).unwrap();
        let prof = &placed.onsite_profile;
        // Site 0 only keeps bond (0,1) of strength 1 - δ.
        assert!(close(prof[0], 8.0 + 2.0 * 0.7f64.powi(2) / 8.0, 1e-12));
        assert!(close(prof[9], prof[0], 1e-12));
        assert!(close(prof[4], p.energy, 1e-12));
    }

    #[test]
    fn dimerized_bands_split() {
        let p = doublon_params(1.0, 8.0, 0.4).unwrap();
        let (m, _) = build_effective_ssh(&p, 40, Boundary::Periodic).unwrap();
        let e = linalg::eigvalsh(&m).unwrap();
        let gap = e[20] - e[19];
        let (t0, t1) = (p.bond_hopping(0), p.bond_hopping(1));
        assert!(close(gap, 2.0 * (t1 - t0).abs(), 1e-10));
    }

    #[test]
    fn nion_reduces_to_doublon_and_trion() {
        for &u in &[2.0, 5.0, 11.0] {
            for &d in &[-0.7, -0.2, 0.0, 0.35, 0.9] {
                let a = nion_params(2, 1.3, u, d).unwrap();
                let b = doublon_params(1.3, u, d).unwrap();
                assert_eq!(a, b);
                let c = nion_params(3, 1.3, u, d).unwrap();
                let t = trion_params(1.3, u, d).unwrap();
                assert_eq!(c.effective_hopping, t.effective_hopping);
                assert_eq!(c.effective_dimerization, t.effective_dimerization);
                let closed_j3 = 3.0 * 1.3f64.powi(3) * (1.0 + 3.0 * d * d) / (2.0 * u * u);
                assert!(close(t.effective_hopping, closed_j3, 1e-12));
                let closed_e3 = 3.0 * u + 3.0 * 1.69 * (1.0 + d * d) / u;
                assert!(close(t.energy, closed_e3, 1e-12));
            }
        }
    }

    #[test]
    fn doublon_band_follows_two_body_bound_state() {
        // Exact bound pair on a clean ring: E(K) = sqrt(U² + 16J² cos²(K/2)).
        let (l, u) = (20, 6.0);
        let spec = LatticeSpec::new(l, 2).with_interaction(u);
        let r = band_compare(&spec).unwrap();
        let mut exact: Vec<f64> = (0..l)
            .map(|n| {
                let k = 2.0 * std::f64::consts::PI * n as f64 / l as f64;
                (u * u + 16.0 * (k / 2.0).cos().powi(2)).sqrt()
            })
            .collect();
        exact.sort_by(f64::total_cmp);
        for (a, b) in r.full.iter().zip(&exact) {
            assert!(close(*a, *b, 1e-8), "{a} vs {b}");
        }
        // The second-order chain gives U + 8J²/U at K = 0 and misses the
        // -32J⁴/U³ term, which is the largest deviation.
        assert!(close(r.max_abs_error, u + 8.0 / u - (u * u + 16.0).sqrt(), 1e-8));
    }

    #[test]
    fn errors_fall_as_inverse_cube() {
        let err = |u: f64| {
            band_compare(&LatticeSpec::new(8, 2).with_interaction(u).with_dimerization(0.3))
                .unwrap()
                .max_abs_error
        };
        let slope = (err(40.0) / err(20.0)).log2();
        assert!((-3.3..-2.7).contains(&slope), "{slope}");
    }

    #[test]
    fn band_velocity_matches_closed_forms() {
        let l = 200;
        let cells = l / 2;
        for (n, u) in [(2usize, 8.0), (3, 3.0)] {
            for delta in [-0.4, 0.1, 0.3] {
                let p = nion_params(n, 1.0, u, delta).unwrap();
                let (m, _) = build_effective_ssh(&p, l, Boundary::Periodic).unwrap();
                let e = linalg::eigvalsh(&m).unwrap();
                // Lower band: k = 0, ±dk, ±2dk, ... sorted by energy; keep one of each pair.
                let band: Vec<f64> = e[..cells].iter().step_by(2).copied().collect();
                let dk = 2.0 * std::f64::consts::PI / cells as f64;
                let v = band.windows(2).map(|w| (w[1] - w[0]) / dk).fold(0.0, f64::max) * 2.0;
                let closed = match n {
                    2 => 4.0 * (1.0 - delta.abs()).powi(2) / u,
                    _ => 3.0 * (1.0 - delta.abs()).powi(3) / (u * u),
                };
                assert!(close(p.max_velocity(), closed, 1e-12));
                assert!((v - closed).abs() < 0.02 * closed, "N {n} delta {delta}: {v} vs {closed}");
            }
        }
    }

    #[test]
    fn doublon_end_weight_switches_subband_at_zero_dimerization() {
        let l = 20;
        for delta in [-0.3, -0.1, 0.1, 0.3] {
            let spec = LatticeSpec::new(l, 2)
                .with_interaction(8.0)
                .with_dimerization(delta)
                .with_boundary(Boundary::Open);
            let r = band_compare(&spec).unwrap();
            assert!(r.edge_states.is_empty());
            let k = r.inner_edge_index().unwrap();
            assert_eq!(k >= l / 2, delta < 0.0, "delta {delta}: state {k}");
        }
    }

    #[test]
    fn trion_edge_states_sit_below_the_band() {
        let spec = LatticeSpec::new(10, 3)
            .with_interaction(8.0)
            .with_dimerization(0.3)
            .with_boundary(Boundary::Open);
        let r = band_compare(&spec).unwrap();
        assert_eq!(r.edge_states.len(), 2);
        for e in &r.edge_states {
            assert!(e.index < 2);
            assert!(close(e.effective_energy, e.full_energy, 5e-3));
        }
        assert!(r.max_abs_error < 0.02);
    }

    #[test]
    fn weak_coupling_band_is_not_identified() {
        let spec = LatticeSpec::new(8, 3).with_interaction(0.5);
        assert!(matches!(band_compare(&spec), Err(Error::BandIdentification(_))));
    }
}
