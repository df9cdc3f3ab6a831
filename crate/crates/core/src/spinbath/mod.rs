//! Exactly solvable qubit coupled to `N` bath spins through `σz ⊗ Σ g_k σz^(k)`.
//!
//! With the qubit starting in `|+>`, everything is determined by the bath
//! overlap `c_t = <B(-t)|B(t)> = Π_k (|α_k|² e^{+2i g_k t} + |β_k|² e^{-2i g_k t})`.

pub mod lorentz;
pub mod oracle;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::analytic::POSTSELECTION_EPS;
use crate::error::{ensure_finite, ensure_time, CpfError, Result};
use crate::protocol::{
    cpf_from_moments, cpf_probability_table, CpfProbabilityTable, MomentSet, Outcome,
};

pub use lorentz::LorentzCouplingSpec;
pub use oracle::{oracle_protocol, OracleOptions, PhaseConvention, PropagatorPath, SystemInit};

const NORM_TOLERANCE: f64 = 1e-12;

/// Couplings and initial single-spin amplitudes of the bath.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinBathSpec {
    couplings: Vec<f64>,
    alphas: Vec<Complex64>,
    betas: Vec<Complex64>,
}

impl SpinBathSpec {
    pub fn new(couplings: Vec<f64>, alphas: Vec<Complex64>, betas: Vec<Complex64>) -> Result<Self> {
        let n = couplings.len();
        if n == 0 {
            return Err(CpfError::InvalidParameter(
                "bath needs at least one spin".into(),
            ));
        }
        if alphas.len() != n || betas.len() != n {
            return Err(CpfError::InvalidParameter(format!(
                "length mismatch: {n} couplings, {} alphas, {} betas",
                alphas.len(),
                betas.len()
            )));
        }
        for (k, ((g, a), b)) in couplings.iter().zip(&alphas).zip(&betas).enumerate() {
            ensure_finite(*g, "coupling")?;
            if !(a.is_finite() && b.is_finite()) {
                return Err(CpfError::NonFinite("spin amplitude"));
            }
            let norm = a.norm_sqr() + b.norm_sqr();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(CpfError::InvalidParameter(format!(
                    "spin {k}: |alpha|^2 + |beta|^2 = {norm}"
                )));
            }
        }
        Ok(Self {
            couplings,
            alphas,
            betas,
        })
    }

    /// All spins share one coupling and one initial state.
    pub fn uniform(n_spins: usize, g: f64, alpha: Complex64, beta: Complex64) -> Result<Self> {
        Self::new(vec![g; n_spins], vec![alpha; n_spins], vec![beta; n_spins])
    }

    pub fn n_spins(&self) -> usize {
        self.couplings.len()
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn alphas(&self) -> &[Complex64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[Complex64] {
        &self.betas
    }

    pub fn tag(&self) -> String {
        format!("spin_bath(N={})", self.n_spins())
    }

    /// Product formula at any real `u`; negative `u` gives `conj(c_|u|)`.
    pub(crate) fn overlap(&self, u: f64) -> Complex64 {
        // |α|² e^{iφ} + |β|² e^{-iφ} = cos φ + i (|α|² - |β|²) sin φ
        let mut acc = Complex64::new(1.0, 0.0);
        for ((g, a), b) in self.couplings.iter().zip(&self.alphas).zip(&self.betas) {
            let (pa, pb) = (a.norm_sqr(), b.norm_sqr());
            let (s, c) = (2.0 * g * u).sin_cos();
            acc *= Complex64::new(c, (pa - pb) / (pa + pb) * s);
        }
        acc
    }

    /// Coherence `c_t` after the first measurement.
    pub fn coherence(&self, t: f64) -> Result<Complex64> {
        ensure_time(t, "t")?;
        Ok(self.overlap(t))
    }

    /// Coherence after the second measurement, conditioned on `yx`:
    /// `[c_τ + yx (c_{t+τ} + c*_{t-τ})/2] / [1 + yx Re c_t]`.
    pub fn conditional_coherence(&self, t: f64, tau: f64, yx: Outcome) -> Result<Complex64> {
        ensure_time(t, "t")?;
        ensure_time(tau, "tau")?;
        let s = yx.sign();
        let den = 1.0 + s * self.overlap(t).re;
        if den.abs() <= POSTSELECTION_EPS {
            return Err(CpfError::ZeroProbabilityPostselection);
        }
        let num =
            self.overlap(tau) + s * 0.5 * (self.overlap(t + tau) + self.overlap(t - tau).conj());
        Ok(num / den)
    }

    /// `f(t) = Re c_t`, `f(τ)`, and `[f(t+τ) + f(t-τ)]/2`.
    pub fn moments(&self, t: f64, tau: f64) -> Result<MomentSet> {
        ensure_time(t, "t")?;
        ensure_time(tau, "tau")?;
        MomentSet::new(
            self.overlap(t).re,
            self.overlap(tau).re,
            0.5 * (self.overlap(t + tau).re + self.overlap(t - tau).re),
        )
    }

    pub fn cpf(&self, t: f64, tau: f64) -> Result<f64> {
        cpf_from_moments(&self.moments(t, tau)?)
    }

    pub fn cpf_probability(&self, t: f64, tau: f64, y: Outcome) -> Result<CpfProbabilityTable> {
        cpf_probability_table(&self.moments(t, tau)?, y)
    }
}

/// Bath with couplings uniform in `[-coupling_scale, coupling_scale)` and
/// single-spin states uniform in polar angle and both phases.
pub fn random_spin_bath<R: Rng + ?Sized>(
    rng: &mut R,
    n_spins: usize,
    coupling_scale: f64,
) -> Result<SpinBathSpec> {
    if !(coupling_scale.is_finite() && coupling_scale > 0.0) {
        return Err(CpfError::InvalidParameter(format!(
            "coupling_scale = {coupling_scale} must be positive"
        )));
    }
    let mut g = Vec::with_capacity(n_spins);
    let mut a = Vec::with_capacity(n_spins);
    let mut b = Vec::with_capacity(n_spins);
    for _ in 0..n_spins {
        g.push(rng.random_range(-coupling_scale..coupling_scale));
        let theta: f64 = rng.random_range(0.0..PI);
        let (pa, pb): (f64, f64) = (
            rng.random_range(0.0..2.0 * PI),
            rng.random_range(0.0..2.0 * PI),
        );
        a.push(Complex64::from_polar((theta / 2.0).cos(), pa));
        b.push(Complex64::from_polar((theta / 2.0).sin(), pb));
    }
    SpinBathSpec::new(g, a, b)
}

/// Uniform bath with `g_N = g/√N` and `|α|² - |β|² = ω/(2g√N)`, whose
/// coherence tends to `exp[iωt - 2(gt)²]` for large `N`.
pub fn scaled_gaussian_bath(n_spins: usize, g: f64, omega: f64) -> Result<SpinBathSpec> {
    if n_spins == 0 {
        return Err(CpfError::InvalidParameter("n_spins must be >= 1".into()));
    }
    if !(g.is_finite() && g > 0.0) {
        return Err(CpfError::InvalidParameter(format!(
            "g = {g} must be positive"
        )));
    }
    ensure_finite(omega, "omega")?;
    let root_n = (n_spins as f64).sqrt();
    let polarization = omega / (2.0 * g * root_n);
    if polarization.abs() > 1.0 {
        return Err(CpfError::UnreachablePolarization(polarization.abs()));
    }
    let alpha = Complex64::new(((1.0 + polarization) / 2.0).sqrt(), 0.0);
    let beta = Complex64::new(((1.0 - polarization) / 2.0).sqrt(), 0.0);
    SpinBathSpec::uniform(n_spins, g / root_n, alpha, beta)
}
