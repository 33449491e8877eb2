//! Sparse many-body Hamiltonian of the SU(N) SSH-Hubbard chain.
//!
//! `H = Σ_α Σ_b (t_b c†_{to,α} c_{from,α} + h.c.)
//!      + U Σ_x Σ_{α<β} n_{x,α} n_{x,β} + Σ_x δμ_x n_x − μ N_particles`
//!
//! with the bond amplitudes `t_b` from [`LatticeSpec::bond_table`].

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::{jw_sign, FlavorOccupancy, FockBasis, StateVector};
use crate::error::{invalid, Error, Result};
use crate::lattice::{Boundary, LatticeSpec};
use crate::linalg::{self, DenseMatrix};

/// Largest sector the symmetry checks diagonalize densely.
pub const SYMMETRY_CHECK_CAP: usize = 4096;

/// Hermitian operator in compressed sparse row form, both triangles stored.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<Complex64>,
    hermitian: bool,
}

/// Per-flavor single-pattern transitions: for each pattern rank, the ranks
/// reachable by one hop and the amplitude `⟨p'|h|p⟩`.
type Transitions = Vec<Vec<(usize, Complex64)>>;

fn flavor_transitions(spec: &LatticeSpec, basis: &FockBasis, flavor: usize) -> Transitions {
    let bonds = spec.bond_table(flavor);
    basis
        .flavor_patterns(flavor)
        .iter()
        .map(|&p| {
            let mut out: Vec<(usize, Complex64)> = Vec::new();
            let mut push = |from: usize, to: usize, amp: Complex64| {
                if amp == Complex64::new(0.0, 0.0) || p & (1 << from) == 0 {
                    return;
                }
                let s1 = jw_sign(p, from);
                let q = p ^ (1 << from);
                if q & (1 << to) != 0 {
                    return;
                }
                let s2 = jw_sign(q, to);
                let r = basis.pattern_rank(q | (1 << to));
                match out.iter_mut().find(|(rank, _)| *rank == r) {
                    Some(entry) => entry.1 += amp * (s1 * s2),
                    None => out.push((r, amp * (s1 * s2))),
                }
            };
            for b in &bonds {
                push(b.from, b.to, b.amplitude);
                push(b.to, b.from, b.amplitude.conj());
            }
            out.retain(|(_, v)| *v != Complex64::new(0.0, 0.0));
            out.sort_by_key(|(r, _)| *r);
            out
        })
        .collect()
}

fn diagonal_energy(spec: &LatticeSpec, state: &[u64], onsite: &[Vec<f64>], digits: &[usize]) -> f64 {
    let mut pairs = 0u32;
    for a in 0..state.len() {
        for b in a + 1..state.len() {
            pairs += (state[a] & state[b]).count_ones();
        }
    }
    let particles: u32 = state.iter().map(|p| p.count_ones()).sum();
    let disorder: f64 = digits.iter().enumerate().map(|(a, &d)| onsite[a][d]).sum();
    spec.interaction * pairs as f64 + disorder - spec.chemical_potential * particles as f64
}

/// Assemble `H` for `spec` on `basis`.
pub fn build_hamiltonian(spec: &LatticeSpec, basis: &FockBasis) -> Result<SparseOperator> {
    spec.validate()?;
    if spec.sites != basis.sites() || spec.flavors != basis.flavors() {
        return invalid(format!(
            "basis has L={}, N={}; spec has L={}, N={}",
            basis.sites(),
            basis.flavors(),
            spec.sites,
            spec.flavors
        ));
    }
    let dim = basis.dim();
    if dim > u32::MAX as usize {
        return Err(Error::Capacity {
            what: "sparse column index",
            required: dim as u128,
            cap: u32::MAX as u128,
        });
    }
    let n = basis.flavors();
    let transitions: Vec<Transitions> = (0..n).map(|a| flavor_transitions(spec, basis, a)).collect();
    // On-site disorder energy of each pattern, per flavor.
    let onsite: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            basis
                .flavor_patterns(a)
                .iter()
                .map(|&p| (0..spec.sites).filter(|&x| p & (1 << x) != 0).map(|x| spec.onsite_offset(x)).sum())
                .collect()
        })
        .collect();

    let rows: Vec<Vec<(u32, Complex64)>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let digits: Vec<usize> = (0..n).map(|a| basis.digit(i, a)).collect();
            let state: Vec<u64> = (0..n).map(|a| basis.flavor_patterns(a)[digits[a]]).collect();
            let mut row: Vec<(u32, Complex64)> = Vec::with_capacity(1 + 4 * n);
            let diag = diagonal_energy(spec, &state, &onsite, &digits);
            row.push((i as u32, Complex64::new(diag, 0.0)));
            for a in 0..n {
                let stride = basis.stride(a);
                let r = digits[a];
                for &(r2, amp) in &transitions[a][r] {
                    // H|i⟩ has amp on |j⟩, so H_{ij} = conj(amp).
                    let j = i - r * stride + r2 * stride;
                    row.push((j as u32, amp.conj()));
                }
            }
            row.sort_by_key(|(c, _)| *c);
            let mut merged: Vec<(u32, Complex64)> = Vec::with_capacity(row.len());
            for (c, v) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            merged
        })
        .collect();

    let nnz: usize = rows.iter().map(Vec::len).sum();
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    row_ptr.push(0);
    for row in rows {
        for (c, v) in row {
            cols.push(c);
            values.push(v);
        }
        row_ptr.push(cols.len());
    }
    let mut op = SparseOperator {
        dim,
        row_ptr,
        cols,
        values,
        hermitian: false,
    };
    op.hermitian = op.hermiticity_error() < 1e-12;
    Ok(op)
}

/// `L × L` Hamiltonian of one particle of `flavor`, indexed by site.
///
/// Equal to [`build_hamiltonian`] on the one-particle sector but not limited
/// to 64 sites.
pub fn single_particle_hamiltonian(spec: &LatticeSpec, flavor: usize) -> Result<SparseOperator> {
    spec.validate_chain()?;
    if flavor >= spec.flavors {
        return invalid(format!("flavor {flavor} out of range for {} flavors", spec.flavors));
    }
    let mut entries: Vec<(usize, usize, Complex64)> = (0..spec.sites)
        .map(|x| (x, x, Complex64::new(spec.onsite_offset(x) - spec.chemical_potential, 0.0)))
        .collect();
    for b in spec.bond_table(flavor) {
        entries.push((b.to, b.from, b.amplitude));
        entries.push((b.from, b.to, b.amplitude.conj()));
    }
    SparseOperator::from_triplets(spec.sites, entries)
}

impl SparseOperator {
    /// Build from coordinate triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, mut entries: Vec<(usize, usize, Complex64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = entries.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return invalid(format!("entry ({r}, {c}) outside dimension {dim}"));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols: Vec<u32> = Vec::with_capacity(entries.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            cols.push(c as u32);
            values.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut op = SparseOperator {
            dim,
            row_ptr,
            cols,
            values,
            hermitian: false,
        };
        op.hermitian = op.hermiticity_error() < 1e-12;
        Ok(op)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Set when `max |H_ij − conj(H_ji)| < 1e-12`.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .zip(&self.values[range])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.values[range.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    /// Largest `|H_ij − conj(H_ji)|` over stored entries.
    pub fn hermiticity_error(&self) -> f64 {
        (0..self.dim)
            .into_par_iter()
            .map(|i| {
                self.row(i)
                    .map(|(j, v)| (v - self.get(j, i).conj()).norm())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// `y = H x`. Each row is summed in stored column order.
    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim, "matvec input has wrong dimension");
        assert_eq!(y.len(), self.dim, "matvec output has wrong dimension");
        let body = |(i, out): (usize, &mut Complex64)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.cols[k] as usize];
            }
            *out = acc;
        };
        if self.dim >= 4096 {
            y.par_iter_mut().enumerate().with_min_len(1024).for_each(body);
        } else {
            y.iter_mut().enumerate().for_each(body);
        }
    }

    pub fn matvec(&self, v: &StateVector) -> Result<StateVector> {
        if v.dim() != self.dim {
            return invalid(format!("vector has dimension {}, operator {}", v.dim(), self.dim));
        }
        let mut out = StateVector::zeros(self.dim);
        self.matvec_into(&v.amplitudes, &mut out.amplitudes);
        Ok(out)
    }

    /// `⟨v|H|v⟩`.
    pub fn expectation(&self, v: &[Complex64]) -> Complex64 {
        let mut hv = vec![Complex64::new(0.0, 0.0); self.dim];
        self.matvec_into(v, &mut hv);
        v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum()
    }

    /// Upper bound on the spectral radius (max absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Dense copy, refused above `cap` rows.
    pub fn to_dense(&self, cap: usize) -> Result<DenseMatrix> {
        if self.dim > cap {
            return Err(Error::Capacity {
                what: "dense matrix dimension",
                required: self.dim as u128,
                cap: cap as u128,
            });
        }
        let mut m = DenseMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    /// Write `row col re im` lines, one per stored entry.
    pub fn write_coo<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# dim {} nnz {}", self.dim, self.nnz())?;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                writeln!(out, "{i} {j} {:.17e} {:.17e}", v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// Outcome of [`check_chiral_symmetry`].
#[derive(Clone, Debug, PartialEq)]
pub struct ChiralReport {
    pub mu_required: f64,
    /// `None` when the sectors were too large to diagonalize.
    pub is_symmetric: Option<bool>,
    pub max_deviation: Option<f64>,
}

/// Compare the one-particle-per-flavor sector with its particle-hole image at
/// `μ = (N−1)U/2`.
pub fn check_chiral_symmetry(spec: &LatticeSpec) -> Result<ChiralReport> {
    check_chiral_symmetry_sector(spec, &FlavorOccupancy::one_per_flavor(spec.flavors), SYMMETRY_CHECK_CAP)
}

pub fn check_chiral_symmetry_sector(
    spec: &LatticeSpec,
    occupancy: &FlavorOccupancy,
    cap: usize,
) -> Result<ChiralReport> {
    spec.validate()?;
    if matches!(spec.boundary, Boundary::Twisted { .. }) {
        return invalid("chiral symmetry check requires an untwisted chain");
    }
    if spec.onsite_disorder.iter().any(|&v| v != 0.0) {
        return invalid("chiral symmetry check requires zero on-site disorder");
    }
    let mu_required = spec.chiral_chemical_potential();
    let image = occupancy.complement(spec.sites);
    let too_big = |occ: &FlavorOccupancy| occ.dimension(spec.sites).map_or(true, |d| d > cap as u128);
    if too_big(occupancy) || too_big(&image) {
        return Ok(ChiralReport {
            mu_required,
            is_symmetric: None,
            max_deviation: None,
        });
    }
    let tuned = spec.clone().with_chemical_potential(mu_required);
    let spectrum = |occ: &FlavorOccupancy| -> Result<Vec<f64>> {
        let basis = FockBasis::new(&tuned, occ)?;
        let h = build_hamiltonian(&tuned, &basis)?;
        linalg::eigvalsh(&h.to_dense(cap)?)
    };
    let a = spectrum(occupancy)?;
    let b = spectrum(&image)?;
    let deviation = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(ChiralReport {
        mu_required,
        is_symmetric: Some(deviation < 1e-10),
        max_deviation: Some(deviation),
    })
}

/// `true` iff `H` commutes with the mirror `x → L−1−x` on `basis`.
pub fn check_inversion_symmetry_in(spec: &LatticeSpec, basis: &FockBasis) -> Result<bool> {
    let h = build_hamiltonian(spec, basis)?;
    let l = spec.sites;
    let mirror = |p: u64| -> u64 {
        let mut out = 0u64;
        for x in 0..l {
            if p & (1 << x) != 0 {
                out |= 1 << (l - 1 - x);
            }
        }
        out
    };
    let image: Vec<usize> = (0..basis.dim())
        .map(|i| {
            let s: Vec<u64> = basis.state(i).into_iter().map(mirror).collect();
            basis.index_of(&s).expect("mirror image stays in the sector")
        })
        .collect();
    // Reordering n_α creators gives the same sign (−1)^{n(n−1)/2} on every
    // state of the sector, so it cancels in I H I⁻¹.
    let ok = (0..basis.dim()).into_par_iter().all(|i| {
        h.row(i)
            .all(|(j, v)| (h.get(image[i], image[j]) - v).norm() < 1e-12)
            && h.row(image[i]).count() == h.row(i).count()
    });
    Ok(ok)
}

/// Inversion check on the one-particle-per-flavor sector, or on a single
/// particle of flavor 0 when that sector is too large.
pub fn check_inversion_symmetry(spec: &LatticeSpec) -> Result<bool> {
    let full = FlavorOccupancy::one_per_flavor(spec.flavors);
    let occ = if full.dimension(spec.sites).map_or(false, |d| d <= 1 << 16) {
        full
    } else {
        let mut v = vec![0; spec.flavors];
        v[0] = 1;
        FlavorOccupancy(v)
    };
    let basis = FockBasis::new(spec, &occ)?;
    check_inversion_symmetry_in(spec, &basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn hamiltonian(spec: &LatticeSpec, occ: &[usize]) -> (FockBasis, SparseOperator) {
        let basis = FockBasis::new(spec, &FlavorOccupancy(occ.to_vec())).unwrap();
        let h = build_hamiltonian(spec, &basis).unwrap();
        (basis, h)
    }

    #[test]
    fn two_site_dimer() {
        let spec = LatticeSpec::new(2, 1).with_boundary(Boundary::Open);
        let (_, h) = hamiltonian(&spec, &[1]);
        assert_eq!(h.get(0, 0), c(0.0));
        assert_eq!(h.get(0, 1), c(1.0));
        assert_eq!(h.get(1, 0), c(1.0));
        let vals = linalg::eigvalsh(&h.to_dense(10).unwrap()).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let v = StateVector::from_amplitudes(vec![c(1.0), c(-1.0)]);
        let hv = h.matvec(&v).unwrap();
        assert_eq!(hv.amplitudes, vec![c(-1.0), c(1.0)]);
        assert_eq!(h.matvec(&StateVector::zeros(2)).unwrap(), StateVector::zeros(2));
    }

    #[test]
    fn one_particle_operator_equals_sector() {
        let spec = LatticeSpec::new(8, 2)
            .with_dimerization(-0.3)
            .with_chemical_potential(0.4)
            .with_boundary(Boundary::Twisted {
                theta: 0.9,
                flavor_mask: vec![1],
            })
            .with_disorder(vec![0.1, 0.0, -0.2, 0.0, 0.05, 0.0, 0.0, 0.3], vec![0.2, -0.1, 0.0, 0.0, 0.4, 0.0, 0.0, 0.1]);
        let (_, sector) = hamiltonian(&spec, &[0, 1]);
        let direct = single_particle_hamiltonian(&spec, 1).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert!((sector.get(i, j) - direct.get(i, j)).norm() < 1e-15, "({i}, {j})");
            }
        }
        assert!(single_particle_hamiltonian(&LatticeSpec::new(200, 1), 0).unwrap().is_hermitian());
        assert!(single_particle_hamiltonian(&spec, 2).is_err());
    }

    #[test]
    fn doubly_occupied_diagonal_is_u() {
        let spec = LatticeSpec::new(4, 2).with_interaction(8.0);
        let (basis, h) = hamiltonian(&spec, &[1, 1]);
        for i in 0..basis.dim() {
            let s = basis.state(i);
            let expected = if s[0] == s[1] { 8.0 } else { 0.0 };
            assert_eq!(h.get(i, i).re, expected);
        }
    }

    #[test]
    fn trion_sector_has_three_bands() {
        let spec = LatticeSpec::new(6, 3).with_interaction(30.0).with_dimerization(0.2);
        let (_, h) = hamiltonian(&spec, &[1, 1, 1]);
        let vals = linalg::eigvalsh(&h.to_dense(1000).unwrap()).unwrap();
        let near = |e: f64| vals.iter().filter(|&&v| (v - e).abs() < 10.0).count();
        // 6·5·4 scattering states, 3·6·5 with one pair, 6 trions.
        assert_eq!(near(0.0), 120);
        assert_eq!(near(30.0), 90);
        assert_eq!(near(90.0), 6);
    }

    #[test]
    fn single_particle_matches_ssh_matrix() {
        let spec = LatticeSpec::new(8, 1).with_dimerization(0.35).with_hopping(1.2);
        let (_, h) = hamiltonian(&spec, &[1]);
        let mut m = DenseMatrix::zeros(8);
        for x in 0..8 {
            let t = 1.2 * (1.0 - 0.35 * if x % 2 == 0 { 1.0 } else { -1.0 });
            m.add(x, (x + 1) % 8, c(t));
            m.add((x + 1) % 8, x, c(t));
        }
        let a = linalg::eigvalsh(&h.to_dense(100).unwrap()).unwrap();
        let b = linalg::eigvalsh(&m).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn full_twist_of_two_pi_is_trivial() {
        let base = LatticeSpec::new(4, 2).with_interaction(2.0).with_dimerization(0.3);
        let twisted = base.rebound(Boundary::twisted_all(2.0 * std::f64::consts::PI, 2));
        let (_, h0) = hamiltonian(&base, &[1, 1]);
        let (_, h1) = hamiltonian(&twisted, &[1, 1]);
        let a = linalg::eigvalsh(&h0.to_dense(100).unwrap()).unwrap();
        let b = linalg::eigvalsh(&h1.to_dense(100).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn chiral_mu_and_sector_match() {
        let spec = LatticeSpec::new(4, 3).with_interaction(8.0);
        assert_eq!(spec.chiral_chemical_potential(), 8.0);

        let spec = LatticeSpec::new(4, 2).with_interaction(3.0).with_dimerization(0.2);
        let report = check_chiral_symmetry(&spec).unwrap();
        assert_eq!(report.mu_required, 1.5);
        assert_eq!(report.is_symmetric, Some(true), "{report:?}");

        let free = LatticeSpec::new(6, 2).with_dimerization(-0.4);
        assert_eq!(check_chiral_symmetry(&free).unwrap().is_symmetric, Some(true));

        let twisted = spec.rebound(Boundary::twisted_all(0.3, 2));
        assert!(check_chiral_symmetry(&twisted).is_err());
    }

    #[test]
    fn chiral_check_refuses_large_sectors() {
        let spec = LatticeSpec::new(20, 3).with_interaction(3.0);
        let report = check_chiral_symmetry(&spec).unwrap();
        assert_eq!(report.mu_required, 3.0);
        assert_eq!(report.is_symmetric, None);
    }

    #[test]
    fn inversion_symmetry_cases() {
        let clean = LatticeSpec::new(6, 2).with_interaction(3.0).with_dimerization(0.3);
        assert!(check_inversion_symmetry(&clean).unwrap());

        let mut onsite = vec![0.0; 6];
        onsite[1] = 0.2;
        let broken = clean.clone().with_disorder(vec![], onsite);
        assert!(!check_inversion_symmetry(&broken).unwrap());

        let mirrored = LatticeSpec::new(4, 2)
            .with_interaction(3.0)
            .with_disorder(vec![], vec![0.1, -0.3, -0.3, 0.1]);
        assert!(check_inversion_symmetry(&mirrored).unwrap());
    }

    #[test]
    fn hopping_preserves_sector_and_signs() {
        // Two particles of one flavor on three open sites: hopping the left
        // particle past nothing keeps sign +1.
        let spec = LatticeSpec::new(4, 1).with_boundary(Boundary::Open);
        let (basis, h) = hamiltonian(&spec, &[2]);
        let from = basis.index_of(&[0b0011]).unwrap();
        let to = basis.index_of(&[0b0101]).unwrap();
        assert_eq!(h.get(to, from), c(1.0));
        // Periodic wrap of a particle past another one picks up a sign.
        let spec = LatticeSpec::new(4, 1);
        let (basis, h) = hamiltonian(&spec, &[2]);
        let from = basis.index_of(&[0b1010]).unwrap();
        let to = basis.index_of(&[0b0011]).unwrap();
        assert_eq!(h.get(to, from), c(-1.0));
    }

    #[test]
    fn coo_dump_lists_every_entry() {
        let spec = LatticeSpec::new(2, 1).with_boundary(Boundary::Open);
        let (_, h) = hamiltonian(&spec, &[1]);
        let mut buf = Vec::new();
        h.write_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + h.nnz());
    }

    fn arb_spec() -> impl Strategy<Value = (LatticeSpec, Vec<usize>)> {
        (
            prop::sample::select(vec![2usize, 4, 6]),
            1usize..=3,
            -0.9f64..0.9,
            0.0f64..6.0,
            prop::option::of(0.0f64..6.3),
            prop::bool::ANY,
            prop::bool::ANY,
        )
            .prop_map(|(l, n, delta, u, theta, open, disorder)| {
                let mut spec = LatticeSpec::new(l, n).with_dimerization(delta).with_interaction(u);
                if open {
                    spec.boundary = Boundary::Open;
                } else if let Some(t) = theta {
                    spec.boundary = Boundary::twisted_all(t, n);
                }
                if disorder {
                    spec.hopping_disorder = (0..l).map(|x| 0.05 * x as f64 - 0.1).collect();
                    spec.onsite_disorder = (0..l).map(|x| 0.03 * (x * x) as f64 % 0.2).collect();
                }
                let occ = (0..n).map(|a| 1 + (a % 2).min(l - 1)).collect();
                (spec, occ)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn assembled_hamiltonians_are_hermitian((spec, occ) in arb_spec()) {
            let (_, h) = hamiltonian(&spec, &occ);
            prop_assert!(h.hermiticity_error() < 1e-12);
            prop_assert!(h.is_hermitian());
        }

        #[test]
        fn expectation_values_are_real((spec, occ) in arb_spec(), seed in 0u64..1000) {
            let (_, h) = hamiltonian(&spec, &occ);
            let v: Vec<Complex64> = (0..h.dim())
                .map(|i| {
                    let a = ((i as u64 * 2654435761 + seed) % 1000) as f64 / 1000.0 - 0.5;
                    let b = ((i as u64 * 40503 + 7 * seed) % 997) as f64 / 997.0 - 0.5;
                    Complex64::new(a, b)
                })
                .collect();
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let v: Vec<Complex64> = v.into_iter().map(|z| z / norm).collect();
            prop_assert!(h.expectation(&v).im.abs() < 1e-12);
        }
    }
}
