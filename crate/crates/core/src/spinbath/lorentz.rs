//! Spin bath whose couplings are i.i.d. random, `g_k = g~_k / N`, with `g~`
//! Lorentzian of full width `γ` centred at `ω/2`.
//!
//! Ensemble averages are taken on the conditional probabilities first and the
//! correlation is formed afterwards. Averaging the per-realization correlation
//! instead is available as [`LorentzEnsemble::mean_realization_cpf`]; it does
//! not reproduce the closed form and serves as a negative control.

use num_complex::Complex64;

use crate::analytic::POSTSELECTION_EPS;
use crate::error::{ensure_finite, ensure_time, CpfError, Result};
use crate::montecarlo::{run_chunks, McConfig};
use crate::protocol::{Estimate, Outcome};
use crate::rng::{sample_cauchy, StreamDomain, StreamFamily};
use crate::stats::CoMoments;
use crate::stochastic::MomentSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzCouplingSpec {
    pub gamma: f64,
    pub omega: f64,
    pub n_spins: usize,
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl LorentzCouplingSpec {
    pub fn new(
        gamma: f64,
        omega: f64,
        n_spins: usize,
        alpha: Complex64,
        beta: Complex64,
    ) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(CpfError::InvalidParameter(format!(
                "gamma = {gamma} must be positive"
            )));
        }
        ensure_finite(omega, "omega")?;
        if n_spins == 0 {
            return Err(CpfError::InvalidParameter("n_spins must be >= 1".into()));
        }
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(CpfError::InvalidParameter(format!(
                "|alpha|^2 + |beta|^2 = {norm}"
            )));
        }
        Ok(Self {
            gamma,
            omega,
            n_spins,
            alpha,
            beta,
        })
    }

    /// Unpolarized spins, `|α|² = |β|² = 1/2`.
    pub fn unpolarized(gamma: f64, omega: f64, n_spins: usize) -> Result<Self> {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(gamma, omega, n_spins, h, h)
    }

    pub fn tag(&self) -> String {
        format!(
            "lorentz_coupling(gamma={},omega={},N={})",
            self.gamma, self.omega, self.n_spins
        )
    }

    fn polarization(&self) -> f64 {
        let (pa, pb) = (self.alpha.norm_sqr(), self.beta.norm_sqr());
        (pa - pb) / (pa + pb)
    }
}

/// Ensemble-averaged coherence `e^{-γ|t|} (|α|² e^{iωt/N} + |β|² e^{-iωt/N})^N`.
pub fn lorentz_coherence(spec: &LorentzCouplingSpec, t: f64) -> Result<Complex64> {
    ensure_time(t, "t")?;
    let n = spec.n_spins as f64;
    let (s, c) = (spec.omega * t / n).sin_cos();
    let factor = Complex64::new(c, spec.polarization() * s);
    Ok((-spec.gamma * t).exp() * factor.powi(spec.n_spins as i32))
}

/// Averaged conditional coherence for `ω = 0`:
/// `[e^{-γτ} + yx (e^{-γ(t+τ)} + e^{-γ|t-τ|})/2] / [1 + yx e^{-γt}]`.
pub fn lorentz_conditional_coherence(gamma: f64, t: f64, tau: f64, yx: Outcome) -> Result<f64> {
    ensure_time(t, "t")?;
    ensure_time(tau, "tau")?;
    let e = |s: f64| (-gamma * s.abs()).exp();
    let s = yx.sign();
    let den = 1.0 + s * e(t);
    if den.abs() <= POSTSELECTION_EPS {
        return Err(CpfError::ZeroProbabilityPostselection);
    }
    Ok((e(tau) + s * 0.5 * (e(t + tau) + e(t - tau))) / den)
}

/// `[e^{-γ|t+τ|} + e^{-γ|t-τ|}]/2 - e^{-γ(|t|+|τ|)}`.
pub fn lorentz_cpf(gamma: f64, t: f64, tau: f64) -> Result<f64> {
    ensure_time(t, "t")?;
    ensure_time(tau, "tau")?;
    let e = |s: f64| (-gamma * s.abs()).exp();
    Ok(0.5 * (e(t + tau) + e(t - tau)) - e(t.abs() + tau.abs()))
}

/// Per-realization overlap `Π_k (|α|² e^{2i g_k u} + |β|² e^{-2i g_k u})`.
fn realization_overlap(couplings: &[f64], polarization: f64, u: f64) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for g in couplings {
        let (s, c) = (2.0 * g * u).sin_cos();
        acc *= Complex64::new(c, polarization * s);
    }
    acc
}

/// Monte Carlo over coupling realizations at one `(t, τ)`.
#[derive(Debug, Clone, Copy)]
pub struct LorentzEnsemble {
    table_moments: MomentSample,
    realization_cpf: CoMoments<1>,
    coherence: CoMoments<2>,
}

impl LorentzEnsemble {
    /// Draws `cfg.n_trajectories` coupling sets and averages per-realization
    /// quantities: `Re c_t`, `Re c_τ`, `[Re c_{t+τ} + Re c_{t-τ}]/2`, the
    /// per-realization correlation and the complex coherence `c_t`.
    pub fn sample(spec: &LorentzCouplingSpec, t: f64, tau: f64, cfg: &McConfig) -> Result<Self> {
        ensure_time(t, "t")?;
        ensure_time(tau, "tau")?;
        let n = spec.n_spins;
        let (center, half_width) = (spec.omega / 2.0, spec.gamma / 2.0);
        let scale = 1.0 / n as f64;
        let pol = spec.polarization();
        let streams = StreamFamily::new(cfg.seed, StreamDomain::Couplings);
        let parts = run_chunks(
            cfg,
            || {
                (
                    CoMoments::<3>::new(),
                    CoMoments::<1>::new(),
                    CoMoments::<2>::new(),
                    Vec::with_capacity(n),
                )
            },
            |i, (tm, rc, coh, g)| {
                let mut rng = streams.stream(i);
                g.clear();
                g.extend((0..n).map(|_| scale * sample_cauchy(&mut rng, center, half_width)));
                let ct = realization_overlap(g, pol, t);
                let f_t = ct.re;
                let f_tau = realization_overlap(g, pol, tau).re;
                let joint = 0.5
                    * (realization_overlap(g, pol, t + tau).re
                        + realization_overlap(g, pol, t - tau).re);
                tm.push([f_t, f_tau, joint]);
                rc.push([joint - f_t * f_tau]);
                coh.push([ct.re, ct.im]);
            },
        )?;
        let (mut tm, mut rc, mut coh) = (CoMoments::new(), CoMoments::new(), CoMoments::new());
        for (a, b, c, _) in &parts {
            tm.merge(a);
            rc.merge(b);
            coh.merge(c);
        }
        Ok(Self {
            table_moments: MomentSample::from_stats(tm),
            realization_cpf: rc,
            coherence: coh,
        })
    }

    /// Averaged moments feeding the averaged probability table.
    pub fn moments(&self) -> &MomentSample {
        &self.table_moments
    }

    /// CPF of the ensemble-averaged probability table.
    pub fn table_cpf(&self) -> Result<Estimate> {
        self.table_moments.cpf()
    }

    /// Ensemble-averaged `P(z, x | y)` cell with its standard error.
    pub fn table_entry(&self, z: Outcome, x: Outcome, y: Outcome) -> Result<Estimate> {
        let s = self.table_moments.stats();
        let (xy, zy, zx) = (
            x.sign() * y.sign(),
            z.sign() * y.sign(),
            z.sign() * x.sign(),
        );
        let grad = [0.25 * xy, 0.25 * zy, 0.25 * zx];
        let value = 0.25 * (1.0 + xy * s.mean(0) + zy * s.mean(1) + zx * s.mean(2));
        Estimate::new(value, s.delta_std_error(grad), s.count())
    }

    /// Mean of the per-realization correlation (negative control).
    pub fn mean_realization_cpf(&self) -> Result<Estimate> {
        Estimate::new(
            self.realization_cpf.mean(0),
            self.realization_cpf.std_error(0),
            self.realization_cpf.count(),
        )
    }

    /// Real and imaginary parts of the averaged coherence `c_t`.
    pub fn coherence(&self) -> Result<(Estimate, Estimate)> {
        let c = &self.coherence;
        Ok((
            Estimate::new(c.mean(0), c.std_error(0), c.count())?,
            Estimate::new(c.mean(1), c.std_error(1), c.count())?,
        ))
    }

    pub fn conditional_coherence(&self, yx: Outcome) -> Result<Estimate> {
        self.table_moments.conditional_coherence(yx)
    }
}
