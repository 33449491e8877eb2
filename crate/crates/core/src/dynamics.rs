//! Time evolution `|ψ(t)⟩ = e^{−iHt}|ψ(0)⟩` (ħ = 1, times in units of 1/J).
//!
//! Two propagators are available. `FullSpectrum` diagonalizes `H` once and
//! applies exact phases; `Krylov` runs a short Lanczos recursion per step and
//! exponentiates the tridiagonal projection, shrinking the step until the
//! standard a-posteriori error estimate `β_m |e_mᵀ e^{−iTτ} e_1|` is below the
//! tolerance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::StateVector;
use crate::error::{invalid, Error, Result};
use crate::hamiltonian::SparseOperator;
use crate::lattice::LatticeSpec;
use crate::linalg;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FullSpectrum,
    Krylov,
}

fn default_method() -> Method {
    Method::Krylov
}
fn default_dt() -> f64 {
    0.05
}
fn default_krylov_dim() -> usize {
    30
}
fn default_tolerance() -> f64 {
    1e-10
}
fn default_dense_cap() -> usize {
    20_000
}

/// Propagation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    #[serde(default = "default_method")]
    pub method: Method,
    /// Recording grid spacing before striding.
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_max: f64,
    #[serde(default = "default_krylov_dim")]
    pub krylov_dim: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Steps of `dt` between recorded snapshots. `None` picks about 400
    /// snapshots over `[0, t_max]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
    /// Largest dimension the full-spectrum path will diagonalize.
    #[serde(default = "default_dense_cap")]
    pub dense_cap: usize,
}

impl PropagatorConfig {
    pub fn krylov(t_max: f64) -> Self {
        PropagatorConfig {
            method: Method::Krylov,
            dt: default_dt(),
            t_max,
            krylov_dim: default_krylov_dim(),
            tolerance: default_tolerance(),
            record_stride: None,
            dense_cap: default_dense_cap(),
        }
    }

    pub fn full_spectrum(t_max: f64) -> Self {
        PropagatorConfig {
            method: Method::FullSpectrum,
            ..Self::krylov(t_max)
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = Some(stride);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return invalid(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_max >= 0.0) || !self.t_max.is_finite() {
            return invalid(format!("t_max must be non-negative, got {}", self.t_max));
        }
        if self.krylov_dim < 2 {
            return invalid("krylov_dim must be at least 2");
        }
        if !(self.tolerance > 0.0) {
            return invalid("tolerance must be positive");
        }
        if self.record_stride == Some(0) {
            return invalid("record_stride must be at least 1");
        }
        Ok(())
    }

    pub fn stride(&self) -> usize {
        self.record_stride
            .unwrap_or_else(|| ((self.t_max / self.dt / 400.0).round() as usize).max(1))
    }

    /// Recording instants: multiples of `stride·dt` up to `t_max`, plus
    /// `t_max` itself when it is off the grid.
    pub fn record_times(&self) -> Vec<f64> {
        let h = self.stride() as f64 * self.dt;
        let n = (self.t_max / h + 1e-9).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
        if self.t_max - times[n] > 1e-9 * h {
            times.push(self.t_max);
        }
        times
    }
}

/// Recorded states of one run.
#[derive(Clone, Debug)]
pub struct WalkTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub stats: EvolutionStats,
}

/// Bookkeeping from a propagation run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvolutionStats {
    /// Krylov substeps taken (0 for the full-spectrum path).
    pub substeps: usize,
    /// Largest `|‖ψ(t)‖ − 1|` over the recorded snapshots.
    pub max_norm_drift: f64,
}

/// Propagate and keep every recorded state.
pub fn evolve(h: &SparseOperator, psi0: &StateVector, cfg: &PropagatorConfig) -> Result<WalkTrajectory> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let stats = evolve_observed(h, psi0, cfg, |t, psi| {
        times.push(t);
        states.push(StateVector::from_amplitudes(psi.to_vec()));
        Ok(())
    })?;
    Ok(WalkTrajectory { times, states, stats })
}

/// Propagate and hand each recorded state to `observe` instead of storing it.
pub fn evolve_observed<F>(h: &SparseOperator, psi0: &StateVector, cfg: &PropagatorConfig, mut observe: F) -> Result<EvolutionStats>
where
    F: FnMut(f64, &[Complex64]) -> Result<()>,
{
    cfg.validate()?;
    check_inputs(h, psi0)?;
    let times = cfg.record_times();
    let mut stats = EvolutionStats::default();
    let track = |stats: &mut EvolutionStats, psi: &[Complex64]| {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        stats.max_norm_drift = stats.max_norm_drift.max((norm - 1.0).abs());
    };
    match cfg.method {
        Method::FullSpectrum => {
            let spectral = Spectral::new(h, &psi0.amplitudes, cfg.dense_cap)?;
            for &t in &times {
                let psi = if t == 0.0 { psi0.amplitudes.clone() } else { spectral.at(t) };
                track(&mut stats, &psi);
                observe(t, &psi)?;
            }
        }
        Method::Krylov => {
            let mut krylov = Krylov::new(h, cfg.krylov_dim, cfg.tolerance);
            let mut psi = psi0.amplitudes.clone();
            let mut now = 0.0;
            for &t in &times {
                krylov.advance(&mut psi, t - now)?;
                now = t;
                track(&mut stats, &psi);
                observe(t, &psi)?;
            }
            stats.substeps = krylov.substeps;
        }
    }
    Ok(stats)
}

/// `e^{−iHt}ψ` for a single, possibly negative, time.
pub fn propagate(h: &SparseOperator, psi: &StateVector, t: f64, cfg: &PropagatorConfig) -> Result<StateVector> {
    check_inputs(h, psi)?;
    if !t.is_finite() {
        return invalid("propagation time must be finite");
    }
    let out = match cfg.method {
        Method::FullSpectrum => Spectral::new(h, &psi.amplitudes, cfg.dense_cap)?.at(t),
        Method::Krylov => {
            let mut k = Krylov::new(h, cfg.krylov_dim.max(2), cfg.tolerance);
            let mut v = psi.amplitudes.clone();
            k.advance(&mut v, t)?;
            v
        }
    };
    Ok(StateVector::from_amplitudes(out))
}

fn check_inputs(h: &SparseOperator, psi: &StateVector) -> Result<()> {
    if !h.is_hermitian() {
        return invalid("Hamiltonian is not Hermitian");
    }
    if psi.dim() != h.dim() {
        return invalid(format!("state has dimension {}, Hamiltonian {}", psi.dim(), h.dim()));
    }
    Ok(())
}

/// Time for a front moving at `velocity` from `injection_site` to reach the
/// nearer chain end.
pub fn boundary_time(spec: &LatticeSpec, injection_site: f64, velocity: f64) -> f64 {
    if !(velocity > 0.0) || velocity.is_infinite() {
        return 0.0;
    }
    let last = spec.sites as f64 - 1.0;
    injection_site.min(last - injection_site).max(0.0) / velocity
}

struct Spectral {
    eigen: linalg::Eigen,
    /// Components of ψ(0) in the eigenbasis.
    coefficients: Vec<Complex64>,
}

impl Spectral {
    fn new(h: &SparseOperator, psi0: &[Complex64], cap: usize) -> Result<Self> {
        if h.dim() > cap {
            return Err(Error::Capacity {
                what: "full-spectrum propagation dimension (use the krylov method)",
                required: h.dim() as u128,
                cap: cap as u128,
            });
        }
        let eigen = linalg::eigh(&h.to_dense(cap)?)?;
        let coefficients = (0..eigen.count())
            .map(|k| eigen.vector(k).iter().zip(psi0).map(|(v, p)| v.conj() * p).sum())
            .collect();
        Ok(Spectral { eigen, coefficients })
    }

    fn at(&self, t: f64) -> Vec<Complex64> {
        let n = self.eigen.n;
        let mut out = vec![ZERO; n];
        for k in 0..self.eigen.count() {
            let c = self.coefficients[k] * Complex64::from_polar(1.0, -self.eigen.values[k] * t);
            for (o, v) in out.iter_mut().zip(self.eigen.vector(k)) {
                *o += c * v;
            }
        }
        out
    }
}

/// Lanczos propagator with full reorthogonalization.
struct Krylov<'a> {
    h: &'a SparseOperator,
    m: usize,
    tolerance: f64,
    basis: Vec<Vec<Complex64>>,
    substeps: usize,
}

/// Tridiagonal projection of one Lanczos run.
struct Projection {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Residual norm after the last vector; zero on an invariant subspace.
    residual: f64,
    norm: f64,
}

impl<'a> Krylov<'a> {
    fn new(h: &'a SparseOperator, krylov_dim: usize, tolerance: f64) -> Self {
        let m = krylov_dim.min(h.dim()).max(1);
        Krylov {
            h,
            m,
            tolerance,
            basis: (0..m).map(|_| vec![ZERO; h.dim()]).collect(),
            substeps: 0,
        }
    }

    /// Lanczos run from `psi`. Stops early once the error bound of a step
    /// of length `tau` drops below the tolerance.
    fn lanczos(&mut self, psi: &[Complex64], tau: f64) -> Result<Projection> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut alpha = Vec::with_capacity(self.m);
        let mut beta = Vec::with_capacity(self.m);
        for (b, p) in self.basis[0].iter_mut().zip(psi) {
            *b = p / norm;
        }
        let mut w = vec![ZERO; self.h.dim()];
        let breakdown = 1e-13 * self.h.norm_bound().max(1.0);
        let mut residual = 0.0;
        for j in 0..self.m {
            self.h.matvec_into(&self.basis[j], &mut w);
            let a: Complex64 = self.basis[j].iter().zip(&w).map(|(v, x)| v.conj() * x).sum();
            alpha.push(a.re);
            // Two passes of classical Gram-Schmidt against the whole basis.
            for _ in 0..2 {
                for v in &self.basis[..=j] {
                    let c: Complex64 = v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                    for (x, y) in w.iter_mut().zip(v) {
                        *x -= c * y;
                    }
                }
            }
            let b = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if j + 1 == self.m || b < breakdown {
                residual = if b < breakdown { 0.0 } else { b };
                break;
            }
            if j >= 3 {
                let (vals, vecs) = linalg::eigh_tridiagonal(&alpha, &beta)?;
                if b * last_coefficient(&vals, &vecs, tau) <= 0.1 * self.tolerance {
                    residual = b;
                    break;
                }
            }
            beta.push(b);
            for (v, x) in self.basis[j + 1].iter_mut().zip(&w) {
                *v = x / b;
            }
        }
        Ok(Projection {
            alpha,
            beta,
            residual,
            norm,
        })
    }

    /// Replace `psi` by `e^{−iHτ}psi`.
    fn advance(&mut self, psi: &mut [Complex64], tau: f64) -> Result<()> {
        let mut remaining = tau;
        let mut step = tau;
        while remaining.abs() > 1e-14 * tau.abs().max(1.0) {
            step = if step.abs() > remaining.abs() { remaining } else { step.abs() * remaining.signum() };
            let proj = self.lanczos(psi, step)?;
            let k = proj.alpha.len();
            let (vals, vecs) = linalg::eigh_tridiagonal(&proj.alpha, &proj.beta)?;
            let mut c = krylov_coefficients(&vals, &vecs, step);
            let mut halvings = 0;
            while proj.residual * c[k - 1].norm() > self.tolerance {
                step *= 0.5;
                halvings += 1;
                if halvings > 60 {
                    return Err(Error::Numeric("krylov step size underflow".into()));
                }
                c = krylov_coefficients(&vals, &vecs, step);
            }
            for x in psi.iter_mut() {
                *x = ZERO;
            }
            for (j, cj) in c.iter().enumerate() {
                let f = cj * proj.norm;
                for (x, v) in psi.iter_mut().zip(&self.basis[j]) {
                    *x += f * v;
                }
            }
            remaining -= step;
            self.substeps += 1;
            if halvings == 0 {
                // The accepted step was the whole remainder or an earlier
                // reduced step; try growing again next time.
                step *= 2.0;
            }
        }
        Ok(())
    }
}

/// `c(τ) = S e^{−iΛτ} Sᵀ e_1` in the Krylov basis.
fn krylov_coefficients(vals: &[f64], vecs: &[f64], tau: f64) -> Vec<Complex64> {
    let k = vals.len();
    (0..k)
        .map(|r| {
            (0..k)
                .map(|q| Complex64::from_polar(vecs[q * k + r] * vecs[q * k], -vals[q] * tau))
                .sum()
        })
        .collect()
}

fn last_coefficient(vals: &[f64], vecs: &[f64], tau: f64) -> f64 {
    let k = vals.len();
    (0..k)
        .map(|q| Complex64::from_polar(vecs[q * k + k - 1] * vecs[q * k], -vals[q] * tau))
        .sum::<Complex64>()
        .norm()
}
