//! Fixed-particle-number Fock bases with one bit pattern per flavor.
//!
//! A basis state is a tuple `(p_0, …, p_{N-1})` of `L`-bit occupation
//! patterns, one per flavor. States are ordered lexicographically on that
//! tuple with each pattern compared as an integer, so the index of a state is
//! a mixed-radix number whose digits are the per-flavor pattern ranks. The
//! rank of a pattern among all patterns with the same popcount is given by the
//! combinatorial number system, so no hash map is needed for `index_of`.
//!
//! Within one flavor the state `|p⟩` is `c†_{s_1} c†_{s_2} … c†_{s_n}|0⟩` with
//! `s_1 < s_2 < …`. Operators of different flavors are taken to commute; every
//! operator built by this crate is flavor diagonal, so the strings that would
//! restore full anticommutation always cancel.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::LatticeSpec;

/// Default dimension cap, sized so a two-trion `L = 12` run fits comfortably.
pub const DEFAULT_DIMENSION_CAP: usize = 1 << 27;

/// Particle count per flavor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlavorOccupancy(pub Vec<usize>);

impl FlavorOccupancy {
    pub fn one_per_flavor(flavors: usize) -> Self {
        FlavorOccupancy(vec![1; flavors])
    }

    pub fn uniform(flavors: usize, per_flavor: usize) -> Self {
        FlavorOccupancy(vec![per_flavor; flavors])
    }

    pub fn flavors(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn is_one_per_flavor(&self) -> bool {
        self.0.iter().all(|&n| n == 1)
    }

    /// Particle-hole image `(L - n_α)`.
    pub fn complement(&self, sites: usize) -> Self {
        FlavorOccupancy(self.0.iter().map(|&n| sites - n).collect())
    }

    /// Exact basis dimension `∏ C(L, n_α)`, or `None` on overflow.
    pub fn dimension(&self, sites: usize) -> Option<u128> {
        self.0
            .iter()
            .try_fold(1u128, |acc, &n| acc.checked_mul(binomial(sites, n) as u128))
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Creation or annihilation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FermionOp {
    Create,
    Annihilate,
}

/// Apply `c†_site` or `c_site` to a single-flavor occupation pattern.
///
/// Returns `None` when the operator is Pauli blocked, otherwise the new
/// pattern and the sign `(-1)^{#occupied sites below site}`.
pub fn fermion_apply(pattern: u64, op: FermionOp, site: usize, sites: usize) -> Result<Option<(u64, f64)>> {
    if site >= sites || site >= 64 {
        return invalid(format!("site {site} out of range for {sites} sites"));
    }
    let bit = 1u64 << site;
    let occupied = pattern & bit != 0;
    let result = match (op, occupied) {
        (FermionOp::Create, true) | (FermionOp::Annihilate, false) => None,
        _ => Some((pattern ^ bit, jw_sign(pattern, site))),
    };
    Ok(result)
}

/// `(-1)^{popcount of pattern below site}`.
#[inline]
pub(crate) fn jw_sign(pattern: u64, site: usize) -> f64 {
    let below = pattern & ((1u64 << site) - 1);
    if below.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A single particle of a given flavor at a given site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Particle {
    pub site: usize,
    pub flavor: usize,
}

/// Enumerated many-body basis for a fixed occupancy.
#[derive(Clone, Debug)]
pub struct FockBasis {
    sites: usize,
    occupancy: FlavorOccupancy,
    patterns: Vec<Vec<u64>>,
    strides: Vec<usize>,
    dim: usize,
    binom: Vec<Vec<u64>>,
}

impl FockBasis {
    /// Enumerate the basis with the default dimension cap.
    pub fn new(spec: &LatticeSpec, occupancy: &FlavorOccupancy) -> Result<Self> {
        Self::with_cap(spec, occupancy, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(spec: &LatticeSpec, occupancy: &FlavorOccupancy, cap: usize) -> Result<Self> {
        spec.validate()?;
        let l = spec.sites;
        if occupancy.flavors() != spec.flavors {
            return invalid(format!(
                "occupancy lists {} flavors, spec has {}",
                occupancy.flavors(),
                spec.flavors
            ));
        }
        if let Some(&n) = occupancy.0.iter().find(|&&n| n > l) {
            return invalid(format!("{n} particles do not fit on {l} sites"));
        }
        let required = occupancy.dimension(l).unwrap_or(u128::MAX);
        if required > cap as u128 {
            return Err(Error::Capacity {
                what: "basis dimension",
                required,
                cap: cap as u128,
            });
        }
        let patterns: Vec<Vec<u64>> = occupancy.0.iter().map(|&n| patterns_with_popcount(l, n)).collect();
        let mut strides = vec![1usize; patterns.len()];
        for a in (0..patterns.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * patterns[a + 1].len();
        }
        let binom = (0..=l).map(|n| (0..=l).map(|k| binomial(n, k)).collect()).collect();
        Ok(FockBasis {
            sites: l,
            occupancy: occupancy.clone(),
            patterns,
            strides,
            dim: required as usize,
            binom,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn flavors(&self) -> usize {
        self.patterns.len()
    }

    pub fn occupancy(&self) -> &FlavorOccupancy {
        &self.occupancy
    }

    /// Sorted patterns of one flavor.
    pub fn flavor_patterns(&self, flavor: usize) -> &[u64] {
        &self.patterns[flavor]
    }

    pub(crate) fn stride(&self, flavor: usize) -> usize {
        self.strides[flavor]
    }

    /// Rank of state `index` within the pattern list of `flavor`.
    #[inline]
    pub(crate) fn digit(&self, index: usize, flavor: usize) -> usize {
        (index / self.strides[flavor]) % self.patterns[flavor].len()
    }

    #[inline]
    pub fn pattern(&self, index: usize, flavor: usize) -> u64 {
        self.patterns[flavor][self.digit(index, flavor)]
    }

    /// All flavor patterns of state `index`.
    pub fn state(&self, index: usize) -> Vec<u64> {
        (0..self.flavors()).map(|a| self.pattern(index, a)).collect()
    }

    /// Rank of `pattern` among patterns with the same popcount.
    pub(crate) fn pattern_rank(&self, pattern: u64) -> usize {
        let mut rank = 0u64;
        let mut p = pattern;
        let mut i = 0;
        while p != 0 {
            let pos = p.trailing_zeros() as usize;
            rank += self.binom[pos][i + 1];
            p &= p - 1;
            i += 1;
        }
        rank as usize
    }

    /// Inverse of [`FockBasis::state`]; `None` if the patterns are not in the sector.
    pub fn index_of(&self, state: &[u64]) -> Option<usize> {
        if state.len() != self.flavors() {
            return None;
        }
        let mut index = 0;
        for (a, &p) in state.iter().enumerate() {
            if p.checked_shr(self.sites as u32).unwrap_or(0) != 0 || p.count_ones() as usize != self.occupancy.0[a] {
                return None;
            }
            index += self.pattern_rank(p) * self.strides[a];
        }
        Some(index)
    }

    /// Basis state with the given particles, amplitude `+1`.
    pub fn inject(&self, particles: &[Particle]) -> Result<StateVector> {
        let mut state = vec![0u64; self.flavors()];
        for p in particles {
            if p.flavor >= self.flavors() {
                return invalid(format!("flavor {} out of range", p.flavor));
            }
            match fermion_apply(state[p.flavor], FermionOp::Create, p.site, self.sites)? {
                Some((next, _)) => state[p.flavor] = next,
                None => {
                    return invalid(format!(
                        "site {} already holds a flavor-{} particle",
                        p.site, p.flavor
                    ))
                }
            }
        }
        let index = self.index_of(&state).ok_or_else(|| {
            Error::InvalidArgument("injected particles do not match the basis occupancy".into())
        })?;
        Ok(StateVector::basis_state(self.dim, index))
    }

    /// One particle of every flavor at `site` (an N-ion).
    pub fn inject_nion(&self, site: usize) -> Result<StateVector> {
        let particles: Vec<Particle> = (0..self.flavors()).map(|flavor| Particle { site, flavor }).collect();
        self.inject(&particles)
    }

    /// `N` copies of an N-ion, one at each of `sites`.
    pub fn inject_nions(&self, sites: &[usize]) -> Result<StateVector> {
        let particles: Vec<Particle> = sites
            .iter()
            .flat_map(|&site| (0..self.flavors()).map(move |flavor| Particle { site, flavor }))
            .collect();
        self.inject(&particles)
    }
}

fn patterns_with_popcount(sites: usize, n: usize) -> Vec<u64> {
    if n == 0 {
        return vec![0];
    }
    let mut out = Vec::with_capacity(binomial(sites, n) as usize);
    let mut p: u64 = (1u64 << n) - 1;
    let limit: u64 = if sites == 64 { u64::MAX } else { 1u64 << sites };
    while p < limit {
        out.push(p);
        // Gosper's hack: next integer with the same popcount.
        let c = p & p.wrapping_neg();
        let r = p.wrapping_add(c);
        if r == 0 {
            break;
        }
        p = (((r ^ p) >> 2) / c) | r;
    }
    out
}

/// Amplitudes of a many-body state in a [`FockBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        StateVector {
            amplitudes: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut s = Self::zeros(dim);
        s.amplitudes[index] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Self {
        StateVector { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= n);
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}
