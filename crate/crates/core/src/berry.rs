//! Many-body Berry phase of a gap-separated block of eigenstates.
//!
//! The boundary bond carries `e^{iθ_n}`, `θ_n = 2πn/M`, and
//!
//! `γ_B = −Im ln ∏_n det S^{(n,n+1)}`,
//! `S^{(n,n+1)}_{jj'} = ⟨Ψ_j^{(n)}| e^{2πiX/(ML)} |Ψ_{j'}^{(n+1)}⟩`,
//!
//! with `X = Σ_{x,α} x̃ n_{x,α}`, `x̃ = x − L/2 + 1/2`, summed over the twisted
//! flavors. Step `M−1` closes onto the states at `θ_0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::FockBasis;
use crate::error::{invalid, Error, Result};
use crate::hamiltonian::build_hamiltonian;
use crate::lattice::{Boundary, LatticeSpec};
use crate::linalg::{self, DenseMatrix};

/// Default smallest accepted gap between the block and the rest.
pub const DEFAULT_GAP_FLOOR: f64 = 1e-8;

/// Largest sector diagonalized densely by the Berry routines.
pub const BERRY_DENSE_CAP: usize = 8192;

/// Twist discretization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistGrid {
    /// Number of twist steps `M ≥ 1`.
    pub steps: usize,
    /// Twisted flavors; `None` twists all of them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flavor_mask: Option<Vec<usize>>,
}

impl TwistGrid {
    pub fn new(steps: usize) -> Self {
        TwistGrid {
            steps,
            flavor_mask: None,
        }
    }

    pub fn single_flavor(steps: usize, flavor: usize) -> Self {
        TwistGrid {
            steps,
            flavor_mask: Some(vec![flavor]),
        }
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.steps).map(|n| 2.0 * PI * n as f64 / self.steps as f64).collect()
    }

    fn mask(&self, flavors: usize) -> Vec<usize> {
        self.flavor_mask.clone().unwrap_or_else(|| (0..flavors).collect())
    }
}

/// Named blocks of the interaction-resolved spectrum.
///
/// Fock states are grouped by their Hubbard energy `U·Σ_x Σ_{α<β} n n`. The
/// highest group is the N-ion band (trions for SU(3)), split in two halves by
/// the dimerization gap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandTag {
    /// Lower half of the highest band.
    LowerTrion,
    /// The whole highest band.
    FullTrion,
    /// Everything below the dimerization gap of the highest band.
    AllBelowGap,
    /// The non-interacting group (no two particles on a site).
    ScatteringOnly,
    /// States with exactly one doubly occupied site.
    DoublonBand,
}

/// Which eigenstates (sorted by energy) form the block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SubsetSelector {
    /// Half-open index range `start..end`.
    IndexRange { start: usize, end: usize },
    Band { tag: BandTag },
}

impl SubsetSelector {
    pub fn range(start: usize, end: usize) -> Self {
        SubsetSelector::IndexRange { start, end }
    }

    pub fn band(tag: BandTag) -> Self {
        SubsetSelector::Band { tag }
    }

    /// Index range for `basis` given the interaction sign of `spec`.
    pub fn resolve(&self, spec: &LatticeSpec, basis: &FockBasis) -> Result<(usize, usize)> {
        let d = basis.dim();
        let (start, end) = match *self {
            SubsetSelector::IndexRange { start, end } => (start, end),
            SubsetSelector::Band { tag } => {
                if !(spec.interaction > 0.0) {
                    return Err(Error::BandIdentification(format!(
                        "band tags need U > 0, got U = {}",
                        spec.interaction
                    )));
                }
                let levels = interaction_levels(basis);
                let top = *levels.last().expect("non-empty basis");
                let bottom = levels[0];
                match tag {
                    BandTag::FullTrion | BandTag::LowerTrion | BandTag::AllBelowGap => {
                        if levels.len() < 2 {
                            return Err(Error::BandIdentification("sector has a single interaction level".into()));
                        }
                        if top.1 % 2 != 0 {
                            return Err(Error::BandIdentification(format!(
                                "highest band has an odd number of states ({})",
                                top.1
                            )));
                        }
                        match tag {
                            BandTag::FullTrion => (d - top.1, d),
                            BandTag::LowerTrion => (d - top.1, d - top.1 / 2),
                            _ => (0, d - top.1 / 2),
                        }
                    }
                    BandTag::ScatteringOnly => {
                        if bottom.0 != 0 {
                            return Err(Error::BandIdentification("sector has no scattering states".into()));
                        }
                        (0, bottom.1)
                    }
                    BandTag::DoublonBand => {
                        let below: usize = levels.iter().filter(|l| l.0 < 1).map(|l| l.1).sum();
                        match levels.iter().find(|l| l.0 == 1) {
                            Some(l) => (below, below + l.1),
                            None => {
                                return Err(Error::BandIdentification("sector has no doublon states".into()));
                            }
                        }
                    }
                }
            }
        };
        if start >= end || end > d {
            return invalid(format!("subset {start}..{end} invalid for dimension {d}"));
        }
        Ok((start, end))
    }
}

/// `(pair count, number of Fock states)` sorted by pair count.
pub fn interaction_levels(basis: &FockBasis) -> Vec<(usize, usize)> {
    let mut counts = std::collections::BTreeMap::new();
    for i in 0..basis.dim() {
        let s = basis.state(i);
        let mut pairs = 0;
        for a in 0..s.len() {
            for b in a + 1..s.len() {
                pairs += (s[a] & s[b]).count_ones() as usize;
            }
        }
        *counts.entry(pairs).or_insert(0usize) += 1;
    }
    counts.into_iter().collect()
}

/// Outcome of a Berry-phase run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerryPhaseResult {
    /// `γ_B ∈ (−π, π]`.
    pub gamma: f64,
    /// `−arg det S^{(n,n+1)}` for each step.
    pub per_step_phases: Vec<f64>,
    /// Smallest gap between the block and the rest over the grid.
    pub min_gap: f64,
    pub min_gap_theta: f64,
    pub subset: (usize, usize),
    pub steps: usize,
    /// False when `min_gap < 10 · gap_floor`.
    pub trusted: bool,
}

impl BerryPhaseResult {
    pub fn subset_size(&self) -> usize {
        self.subset.1 - self.subset.0
    }

    /// Distance of `γ_B` to the nearest of `{0, π}` on the circle.
    pub fn quantization_error(&self) -> f64 {
        circular_distance(self.gamma, 0.0).min(circular_distance(self.gamma, PI))
    }
}

/// Reduce an angle to `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Distance between two angles on the circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// Tuning knobs that are not part of the physical setup.
#[derive(Clone, Debug, PartialEq)]
pub struct BerryOptions {
    pub gap_floor: f64,
    pub dense_cap: usize,
    /// Multiply every eigenvector by a pseudo-random phase derived from this
    /// seed before forming overlaps. The result must not change.
    pub gauge_seed: Option<u64>,
}

impl Default for BerryOptions {
    fn default() -> Self {
        BerryOptions {
            gap_floor: DEFAULT_GAP_FLOOR,
            dense_cap: BERRY_DENSE_CAP,
            gauge_seed: None,
        }
    }
}

/// Eigenvectors of the block at one twist angle.
struct Block {
    /// Column-major, `dim × size`.
    vectors: Vec<Complex64>,
    values: Vec<f64>,
    gap: f64,
}

fn twisted(spec: &LatticeSpec, theta: f64, mask: &[usize]) -> Result<LatticeSpec> {
    match spec.boundary {
        Boundary::Open => invalid("twisted boundaries need a periodic chain"),
        _ => Ok(spec.rebound(Boundary::Twisted {
            theta,
            flavor_mask: mask.to_vec(),
        })),
    }
}

fn block_at(spec: &LatticeSpec, basis: &FockBasis, range: (usize, usize), opts: &BerryOptions) -> Result<Block> {
    let h = build_hamiltonian(spec, basis)?;
    let dense: DenseMatrix = h.to_dense(opts.dense_cap)?;
    let d = basis.dim();
    let lo = range.0.saturating_sub(1);
    let hi = (range.1 + 1).min(d);
    let eig = linalg::eigh_range(&dense, lo, hi)?;
    let off = range.0 - lo;
    let size = range.1 - range.0;
    let mut gap = f64::INFINITY;
    if range.0 > 0 {
        gap = gap.min(eig.values[off] - eig.values[off - 1]);
    }
    if range.1 < d {
        gap = gap.min(eig.values[off + size] - eig.values[off + size - 1]);
    }
    let vectors = eig.vectors[off * d..(off + size) * d].to_vec();
    let values = eig.values[off..off + size].to_vec();
    Ok(Block { vectors, values, gap })
}

fn position_diagonal(basis: &FockBasis, mask: &[usize]) -> Vec<f64> {
    let l = basis.sites();
    let coord: Vec<f64> = (0..l).map(|x| x as f64 - l as f64 / 2.0 + 0.5).collect();
    (0..basis.dim())
        .map(|i| {
            mask.iter()
                .map(|&a| {
                    let p = basis.pattern(i, a);
                    (0..l).filter(|&x| p & (1 << x) != 0).map(|x| coord[x]).sum::<f64>()
                })
                .sum()
        })
        .collect()
}

fn gauge_phase(seed: u64, step: usize, state: usize) -> Complex64 {
    // splitmix64 of (seed, step, state)
    let mut z = seed ^ (step as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (state as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    Complex64::from_polar(1.0, 2.0 * PI * (z as f64 / u64::MAX as f64))
}

/// Block eigenvectors on every grid angle, plus the position phases.
struct Loop {
    blocks: Vec<Block>,
    phase: Vec<Complex64>,
    dim: usize,
    size: usize,
    range: (usize, usize),
    angles: Vec<f64>,
}

fn compute_loop(
    spec: &LatticeSpec,
    basis: &FockBasis,
    grid: &TwistGrid,
    sel: &SubsetSelector,
    opts: &BerryOptions,
) -> Result<Loop> {
    spec.validate()?;
    if grid.steps == 0 {
        return invalid("twist grid needs at least one step");
    }
    if basis.sites() != spec.sites || basis.flavors() != spec.flavors {
        return invalid("basis does not match the lattice");
    }
    let mask = grid.mask(spec.flavors);
    if let Some(&f) = mask.iter().find(|&&f| f >= spec.flavors) {
        return invalid(format!("flavor {f} in twist mask exceeds flavor count"));
    }
    let range = sel.resolve(spec, basis)?;
    let angles = grid.angles();
    let mut blocks = angles
        .par_iter()
        .map(|&theta| block_at(&twisted(spec, theta, &mask)?, basis, range, opts))
        .collect::<Result<Vec<Block>>>()?;
    let dim = basis.dim();
    let size = range.1 - range.0;
    if let Some(seed) = opts.gauge_seed {
        for (n, b) in blocks.iter_mut().enumerate() {
            for j in 0..size {
                let g = gauge_phase(seed, n, j);
                b.vectors[j * dim..(j + 1) * dim].iter_mut().for_each(|v| *v *= g);
            }
        }
    }
    let m = grid.steps as f64;
    let l = spec.sites as f64;
    let phase = position_diagonal(basis, &mask)
        .into_iter()
        .map(|x| Complex64::from_polar(1.0, 2.0 * PI * x / (m * l)))
        .collect();
    Ok(Loop {
        blocks,
        phase,
        dim,
        size,
        range,
        angles,
    })
}

impl Loop {
    fn gap_summary(&self, opts: &BerryOptions) -> Result<(f64, f64)> {
        let (mut min_gap, mut at) = (f64::INFINITY, 0.0);
        for (b, &theta) in self.blocks.iter().zip(&self.angles) {
            if b.gap < min_gap {
                min_gap = b.gap;
                at = theta;
            }
        }
        if min_gap < opts.gap_floor {
            return Err(Error::GapClosure { theta: at, gap: min_gap });
        }
        Ok((min_gap, at))
    }

    /// `S^{(n,n+1)}`.
    fn overlap(&self, n: usize) -> DenseMatrix {
        let next = (n + 1) % self.blocks.len();
        let (a, b) = (&self.blocks[n].vectors, &self.blocks[next].vectors);
        let d = self.dim;
        // Apply the phase once to every ket column.
        let kets: Vec<Complex64> = (0..self.size)
            .flat_map(|j| b[j * d..(j + 1) * d].iter().zip(&self.phase).map(|(v, p)| v * p))
            .collect();
        let mut s = DenseMatrix::zeros(self.size);
        for j in 0..self.size {
            let bra = &a[j * d..(j + 1) * d];
            for k in 0..self.size {
                let ket = &kets[k * d..(k + 1) * d];
                s.set(j, k, bra.iter().zip(ket).map(|(x, y)| x.conj() * y).sum());
            }
        }
        s
    }
}

/// Berry phase by the overlap-determinant formula.
pub fn berry_phase(spec: &LatticeSpec, basis: &FockBasis, grid: &TwistGrid, sel: &SubsetSelector) -> Result<BerryPhaseResult> {
    berry_phase_with(spec, basis, grid, sel, &BerryOptions::default())
}

pub fn berry_phase_with(
    spec: &LatticeSpec,
    basis: &FockBasis,
    grid: &TwistGrid,
    sel: &SubsetSelector,
    opts: &BerryOptions,
) -> Result<BerryPhaseResult> {
    let lp = compute_loop(spec, basis, grid, sel, opts)?;
    let (min_gap, min_gap_theta) = lp.gap_summary(opts)?;
    let per_step_phases = (0..grid.steps)
        .into_par_iter()
        .map(|n| linalg::det_phase(&lp.overlap(n)).map(|(phase, _)| -phase))
        .collect::<Result<Vec<f64>>>()?;
    let gamma = wrap_phase(per_step_phases.iter().sum());
    Ok(BerryPhaseResult {
        gamma,
        per_step_phases,
        min_gap,
        min_gap_theta,
        subset: lp.range,
        steps: grid.steps,
        trusted: min_gap >= 10.0 * opts.gap_floor,
    })
}

/// Per-state phases `−Σ_n arg ⟨Ψ_j^{(n)}|e^{2πiX/(ML)}|Ψ_j^{(n+1)}⟩`.
///
/// States are followed from one twist angle to the next by largest overlap
/// rather than by energy rank, and degenerate eigenvectors are rotated to
/// line up with their predecessors. When the twist permutes states of the
/// block, a state's phase is accumulated along the path it actually follows.
/// The sum over states approaches the determinant formula as `M` grows.
pub fn berry_phase_per_state(spec: &LatticeSpec, basis: &FockBasis, grid: &TwistGrid, sel: &SubsetSelector) -> Result<Vec<f64>> {
    let opts = BerryOptions::default();
    let mut lp = compute_loop(spec, basis, grid, sel, &opts)?;
    lp.gap_summary(&opts)?;
    let (d, size, m) = (lp.dim, lp.size, grid.steps);
    // Line the degenerate clusters at θ_0 up with θ_1 first.
    if m > 1 {
        let reference = lp.blocks[1].vectors.clone();
        align_clusters(&mut lp, 0, &reference, false)?;
    }
    let mut tracked = lp.blocks[0].vectors.clone();
    let mut acc = vec![0.0; size];
    // Block-0 index currently carried by each tracked state.
    let mut origin: Vec<usize> = (0..size).collect();
    for n in 0..m {
        let next = (n + 1) % m;
        if next != 0 {
            align_clusters(&mut lp, next, &tracked, true)?;
        }
        let s = cross_overlap(&tracked, &lp.blocks[next].vectors, &lp.phase, d, size);
        let succ = greedy_assignment(&s, size);
        for j in 0..size {
            acc[origin[j]] -= s.get(j, succ[j]).arg();
        }
        let v = &lp.blocks[next].vectors;
        let mut order = vec![0; size];
        for j in 0..size {
            order[succ[j]] = j;
        }
        tracked = order.iter().flat_map(|&j| v[succ[j] * d..(succ[j] + 1) * d].iter().copied()).collect();
        origin = order.iter().map(|&j| origin[j]).collect();
    }
    // After one winding, state `origin[k]` has become block-0 state `k`.
    // A cycle of length c picks up the sign of the permutation, π(c − 1),
    // shared evenly by its members.
    let mut closes_on = vec![0; size];
    for (k, &o) in origin.iter().enumerate() {
        closes_on[o] = k;
    }
    let mut seen = vec![false; size];
    for start in 0..size {
        if seen[start] {
            continue;
        }
        let mut cycle = vec![start];
        seen[start] = true;
        let mut j = closes_on[start];
        while j != start {
            seen[j] = true;
            cycle.push(j);
            j = closes_on[j];
        }
        let c = cycle.len() as f64;
        for &j in &cycle {
            acc[j] += PI * (c - 1.0) / c;
        }
    }
    Ok(acc.into_iter().map(wrap_phase).collect())
}

/// `A_{jk} = ⟨a_j|e^{iφX}|b_k⟩`.
fn cross_overlap(a: &[Complex64], b: &[Complex64], phase: &[Complex64], d: usize, size: usize) -> DenseMatrix {
    let mut s = DenseMatrix::zeros(size);
    for k in 0..size {
        let ket: Vec<Complex64> = b[k * d..(k + 1) * d].iter().zip(phase).map(|(v, p)| v * p).collect();
        for j in 0..size {
            s.set(j, k, a[j * d..(j + 1) * d].iter().zip(&ket).map(|(x, y)| x.conj() * y).sum());
        }
    }
    s
}

/// Successor of every row by descending overlap magnitude.
fn greedy_assignment(s: &DenseMatrix, size: usize) -> Vec<usize> {
    let mut pairs: Vec<(f64, usize, usize)> = (0..size)
        .flat_map(|j| (0..size).map(move |k| (j, k)))
        .map(|(j, k)| (s.get(j, k).norm(), j, k))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut succ = vec![usize::MAX; size];
    let mut taken = vec![false; size];
    for (_, j, k) in pairs {
        if succ[j] == usize::MAX && !taken[k] {
            succ[j] = k;
            taken[k] = true;
        }
    }
    succ
}

/// Rotate each cluster of degenerate eigenvectors in block `n` so that its
/// overlap with the best-matching `reference` states is positive definite.
/// `reference_is_bra` selects whether the reference precedes block `n` on
/// the loop.
fn align_clusters(lp: &mut Loop, n: usize, reference: &[Complex64], reference_is_bra: bool) -> Result<()> {
    let (d, size) = (lp.dim, lp.size);
    let values = lp.blocks[n].values.clone();
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut start = 0;
    while start < size {
        let mut end = start + 1;
        while end < size && values[end] - values[end - 1] < 1e-9 * scale {
            end += 1;
        }
        let g = end - start;
        if g > 1 {
            let block = &lp.blocks[n].vectors;
            // ov[r][c] = overlap between reference r and cluster member c.
            let ov: Vec<Vec<Complex64>> = (0..size)
                .map(|r| {
                    let refv = &reference[r * d..(r + 1) * d];
                    (start..end)
                        .map(|c| {
                            let w = &block[c * d..(c + 1) * d];
                            if reference_is_bra {
                                refv.iter().zip(w).zip(&lp.phase).map(|((x, y), p)| x.conj() * p * y).sum()
                            } else {
                                w.iter().zip(refv).zip(&lp.phase).map(|((x, y), p)| x.conj() * p * y).sum::<Complex64>().conj()
                            }
                        })
                        .collect()
                })
                .collect();
            let mut rows: Vec<usize> = (0..size).collect();
            rows.sort_by(|&a, &b| {
                let na: f64 = ov[a].iter().map(|z| z.norm_sqr()).sum();
                let nb: f64 = ov[b].iter().map(|z| z.norm_sqr()).sum();
                nb.total_cmp(&na)
            });
            rows.truncate(g);
            rows.sort_unstable();
            let mut a = DenseMatrix::zeros(g);
            for (i, &r) in rows.iter().enumerate() {
                for c in 0..g {
                    a.set(i, c, ov[r][c]);
                }
            }
            // With A = P Σ Qᴴ, rotating by R = Q Pᴴ makes A R = P Σ Pᴴ.
            let polar = linalg::polar_unitary(&a)?;
            let old: Vec<Complex64> = block[start * d..end * d].to_vec();
            let target = &mut lp.blocks[n].vectors[start * d..end * d];
            for c in 0..g {
                let col = &mut target[c * d..(c + 1) * d];
                col.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
                for k in 0..g {
                    let r = polar.get(c, k).conj();
                    for (x, y) in col.iter_mut().zip(&old[k * d..(k + 1) * d]) {
                        *x += r * y;
                    }
                }
            }
        }
        start = end;
    }
    Ok(())
}

/// Largest off-diagonal overlap magnitude over the loop; small values mean
/// the per-state formula is meaningful.
pub fn max_offdiagonal_overlap(spec: &LatticeSpec, basis: &FockBasis, grid: &TwistGrid, sel: &SubsetSelector) -> Result<f64> {
    let opts = BerryOptions::default();
    let lp = compute_loop(spec, basis, grid, sel, &opts)?;
    let mut worst: f64 = 0.0;
    for n in 0..grid.steps {
        let s = lp.overlap(n);
        for j in 0..lp.size {
            for k in 0..lp.size {
                if j != k {
                    worst = worst.max(s.get(j, k).norm());
                }
            }
        }
    }
    Ok(worst)
}

/// `M = 1`: `γ_B = −Im ln det ⟨Ψ_j|e^{2πiX/L}|Ψ_j'⟩` at zero twist.
pub fn single_point_berry(spec: &LatticeSpec, basis: &FockBasis, sel: &SubsetSelector) -> Result<BerryPhaseResult> {
    berry_phase(spec, basis, &TwistGrid::new(1), sel)
}

/// Twist only `flavor` (0-based).
pub fn flavor_twist_berry(
    spec: &LatticeSpec,
    basis: &FockBasis,
    steps: usize,
    sel: &SubsetSelector,
    flavor: usize,
) -> Result<BerryPhaseResult> {
    berry_phase(spec, basis, &TwistGrid::single_flavor(steps, flavor), sel)
}
