//! Trajectory-level simulation of a qubit dephased by classical noise.
//!
//! Each realization of the noise only enters through two integrated phases,
//! `θ1 = ∫_0^t ξ` and `θ2 = ∫_t^{t+τ} ξ`. They are sampled exactly from their
//! joint law, so no estimator below carries time-discretization error. The
//! discretized OU path integrator at the end of this module exists only to
//! check those joint laws independently.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::analytic::NoiseModel;
use crate::error::{ensure_time, CpfError, Result};
use crate::montecarlo::{run_chunks, McConfig};
use crate::protocol::{Estimate, Outcome, OutcomeTriple};
use crate::rng::{sample_cauchy, sample_standard_normal, StreamDomain, StreamFamily};
use crate::stats::CoMoments;

/// Number of bootstrap resamples behind the sampling estimator's error bar.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Integrated noise over the two intervals of one realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePair {
    pub theta1: f64,
    pub theta2: f64,
}

impl PhasePair {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        if !(theta1.is_finite() && theta2.is_finite()) {
            return Err(CpfError::NonFinite("phase"));
        }
        Ok(Self { theta1, theta2 })
    }

    /// `Re[c_st(t)] = cos 2θ1`.
    #[inline]
    pub fn coherence_first(&self) -> f64 {
        (2.0 * self.theta1).cos()
    }

    /// `Re[c_st(t, τ)] = cos 2θ2`.
    #[inline]
    pub fn coherence_second(&self) -> f64 {
        (2.0 * self.theta2).cos()
    }
}

/// Exact sampler of `(θ1, θ2)` for a model at fixed intervals.
#[derive(Debug, Clone, Copy)]
pub enum PhaseSampler {
    /// `θ1 = s1 z1`, `θ2 = c21 z1 + s2 z2` with independent standard normals.
    Gaussian { s1: f64, c21: f64, s2: f64 },
    /// `θ1 = ξ t`, `θ2 = ξ τ` with `ξ ~ N(0, g²)`.
    StaticGauss { g: f64, t: f64, tau: f64 },
    /// `θ1 = g~ t`, `θ2 = g~ τ` with `g~ ~ Cauchy(ω/2, γ/2)`.
    StaticLorentz {
        center: f64,
        half_width: f64,
        t: f64,
        tau: f64,
    },
}

/// Variances and covariance of the integrated OU phases.
pub fn ou_phase_covariance(g: f64, tau_c: f64, t: f64, tau: f64) -> (f64, f64, f64) {
    let shape = |x: f64| {
        if x < 1e-3 {
            x * x * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x / 120.0)))
        } else {
            x + (-x).exp_m1()
        }
    };
    let scale = (g * tau_c).powi(2);
    let var1 = 2.0 * scale * shape(t / tau_c);
    let var2 = 2.0 * scale * shape(tau / tau_c);
    let cov = scale * (-(-t / tau_c).exp_m1()) * (-(-tau / tau_c).exp_m1());
    (var1, var2, cov)
}

impl PhaseSampler {
    pub fn new(model: &NoiseModel, t: f64, tau: f64) -> Result<Self> {
        model.validate()?;
        ensure_time(t, "t")?;
        ensure_time(tau, "tau")?;
        Ok(match *model {
            NoiseModel::White { gamma_w } => PhaseSampler::Gaussian {
                s1: (gamma_w * t).sqrt(),
                c21: 0.0,
                s2: (gamma_w * tau).sqrt(),
            },
            NoiseModel::ExpCorrGauss { g, tau_c } => {
                let (var1, var2, cov) = ou_phase_covariance(g, tau_c, t, tau);
                let s1 = var1.sqrt();
                let c21 = if s1 > 0.0 { cov / s1 } else { 0.0 };
                let s2 = (var2 - c21 * c21).max(0.0).sqrt();
                PhaseSampler::Gaussian { s1, c21, s2 }
            }
            NoiseModel::StaticGauss { g } => PhaseSampler::StaticGauss { g, t, tau },
            NoiseModel::StaticLorentz { gamma, omega } => PhaseSampler::StaticLorentz {
                center: omega / 2.0,
                half_width: gamma / 2.0,
                t,
                tau,
            },
        })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PhasePair {
        let (theta1, theta2) = match *self {
            PhaseSampler::Gaussian { s1, c21, s2 } => {
                let z1 = sample_standard_normal(rng);
                let z2 = sample_standard_normal(rng);
                (s1 * z1, c21 * z1 + s2 * z2)
            }
            PhaseSampler::StaticGauss { g, t, tau } => {
                let xi = g * sample_standard_normal(rng);
                (xi * t, xi * tau)
            }
            PhaseSampler::StaticLorentz {
                center,
                half_width,
                t,
                tau,
            } => {
                let w = sample_cauchy(rng, center, half_width);
                (w * t, w * tau)
            }
        };
        PhasePair { theta1, theta2 }
    }
}

/// One draw of `(θ1, θ2)` from the model's joint law.
pub fn sample_phase_pair<R: Rng + ?Sized>(
    model: &NoiseModel,
    t: f64,
    tau: f64,
    rng: &mut R,
) -> Result<PhasePair> {
    Ok(PhaseSampler::new(model, t, tau)?.sample(rng))
}

/// Measurement probabilities within a single noise realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryProbabilities {
    // [y][x]
    p_y_given_x: [[f64; 2]; 2],
    // [z][y][x]
    p_z_given_yx: [[[f64; 2]; 2]; 2],
}

impl TrajectoryProbabilities {
    /// `P_st(y | x)`.
    pub fn p_y_given_x(&self, y: Outcome, x: Outcome) -> f64 {
        self.p_y_given_x[y.index()][x.index()]
    }

    /// `P_st(z | y, x)`.
    pub fn p_z_given_yx(&self, z: Outcome, y: Outcome, x: Outcome) -> f64 {
        self.p_z_given_yx[z.index()][y.index()][x.index()]
    }

    /// The first outcome is unbiased for the `|+>` initial state.
    pub fn p_x(&self, _x: Outcome) -> f64 {
        0.5
    }
}

/// `P(y|x) = (1 + yx cos 2θ1)/2`, `P(z|y,x) = (1 + zy cos 2θ2)/2`.
pub fn trajectory_probabilities(pp: &PhasePair) -> TrajectoryProbabilities {
    let c1 = pp.coherence_first();
    let c2 = pp.coherence_second();
    let mut p_y_given_x = [[0.0; 2]; 2];
    let mut p_z_given_yx = [[[0.0; 2]; 2]; 2];
    for x in Outcome::BOTH {
        for y in Outcome::BOTH {
            p_y_given_x[y.index()][x.index()] = 0.5 * (1.0 + y.sign() * x.sign() * c1);
            for z in Outcome::BOTH {
                p_z_given_yx[z.index()][y.index()][x.index()] =
                    0.5 * (1.0 + z.sign() * y.sign() * c2);
            }
        }
    }
    TrajectoryProbabilities {
        p_y_given_x,
        p_z_given_yx,
    }
}

/// Draws `x`, then `y | x`, then `z | y, x` within one realization.
pub fn sample_outcome_triple<R: Rng + ?Sized>(pp: &PhasePair, rng: &mut R) -> OutcomeTriple {
    let x = if rng.random::<bool>() {
        Outcome::Plus
    } else {
        Outcome::Minus
    };
    let keep_y = 0.5 * (1.0 + pp.coherence_first());
    let y = if rng.random::<f64>() < keep_y {
        x
    } else {
        x.flip()
    };
    let keep_z = 0.5 * (1.0 + pp.coherence_second());
    let z = if rng.random::<f64>() < keep_z {
        y
    } else {
        y.flip()
    };
    OutcomeTriple { x, y, z }
}

/// Joint sample statistics of `(cos 2θ1, cos 2θ2, cos 2θ1 cos 2θ2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSample {
    stats: CoMoments<3>,
}

impl MomentSample {
    pub fn from_stats(stats: CoMoments<3>) -> Self {
        Self { stats }
    }

    pub fn stats(&self) -> &CoMoments<3> {
        &self.stats
    }

    fn estimate(&self, value: f64, se: f64) -> Result<Estimate> {
        Estimate::new(value, se, self.stats.count())
    }

    /// `(f(t), f'(τ), f(t, τ))` with standard errors.
    pub fn moments(&self) -> Result<(Estimate, Estimate, Estimate)> {
        let s = &self.stats;
        Ok((
            self.estimate(s.mean(0), s.std_error(0))?,
            self.estimate(s.mean(1), s.std_error(1))?,
            self.estimate(s.mean(2), s.std_error(2))?,
        ))
    }

    /// Plug-in `f(t, τ) - f(t) f'(τ)` with a delta-method error.
    pub fn cpf(&self) -> Result<Estimate> {
        let s = &self.stats;
        let (a, b, c) = (s.mean(0), s.mean(1), s.mean(2));
        self.estimate(c - a * b, s.delta_std_error([-b, -a, 1.0]))
    }

    /// `mean[cos 2θ2 (1 + yx cos 2θ1)] / (1 + yx mean[cos 2θ1])`.
    pub fn conditional_coherence(&self, yx: Outcome) -> Result<Estimate> {
        let s = &self.stats;
        let k = yx.sign();
        let (a, b, c) = (s.mean(0), s.mean(1), s.mean(2));
        let den = 1.0 + k * a;
        if den.abs() <= 1e-9 {
            return Err(CpfError::ZeroProbabilityPostselection);
        }
        let num = b + k * c;
        let ratio = num / den;
        // d ratio / d(a, b, c)
        let grad = [-k * num / (den * den), 1.0 / den, k / den];
        self.estimate(ratio, s.delta_std_error(grad))
    }
}

/// Samples `n_trajectories` phase pairs and accumulates their moments.
pub fn sample_moments(
    model: &NoiseModel,
    t: f64,
    tau: f64,
    cfg: &McConfig,
) -> Result<MomentSample> {
    let sampler = PhaseSampler::new(model, t, tau)?;
    let streams = StreamFamily::new(cfg.seed, StreamDomain::Trajectory);
    let parts = run_chunks(cfg, CoMoments::<3>::new, |i, acc| {
        let mut rng = streams.stream(i);
        let pp = sampler.sample(&mut rng);
        let (a, b) = (pp.coherence_first(), pp.coherence_second());
        acc.push([a, b, a * b]);
    })?;
    let mut stats = CoMoments::new();
    parts.iter().for_each(|p| stats.merge(p));
    Ok(MomentSample { stats })
}

/// Monte Carlo estimates of `f(t)`, `f'(τ)` and `f(t, τ)`.
pub fn mc_moments(
    model: &NoiseModel,
    t: f64,
    tau: f64,
    cfg: &McConfig,
) -> Result<(Estimate, Estimate, Estimate)> {
    sample_moments(model, t, tau, cfg)?.moments()
}

/// CPF from unconditional trajectory averages of the moments.
pub fn mc_cpf_semianalytic(
    model: &NoiseModel,
    t: f64,
    tau: f64,
    cfg: &McConfig,
) -> Result<Estimate> {
    sample_moments(model, t, tau, cfg)?.cpf()
}

/// Monte Carlo conditional coherence after the second measurement.
pub fn mc_conditional_coherence(
    model: &NoiseModel,
    t: f64,
    tau: f64,
    yx: Outcome,
    cfg: &McConfig,
) -> Result<Estimate> {
    sample_moments(model, t, tau, cfg)?.conditional_coherence(yx)
}

/// Counts of kept `(z, x)` pairs after postselection on `y`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PostselectedCounts {
    // [z][x]
    counts: [[u64; 2]; 2],
    generated: u64,
}

impl PostselectedCounts {
    pub fn kept(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn generated(&self) -> u64 {
        self.generated
    }

    pub fn count(&self, z: Outcome, x: Outcome) -> u64 {
        self.counts[z.index()][x.index()]
    }

    fn merge(&mut self, other: &Self) {
        for z in 0..2 {
            for x in 0..2 {
                self.counts[z][x] += other.counts[z][x];
            }
        }
        self.generated += other.generated;
    }

    fn correlation_of(counts: &[[u64; 2]; 2]) -> f64 {
        let n = counts.iter().flatten().sum::<u64>() as f64;
        let [[pp, pm], [mp, mm]] = counts.map(|r| r.map(|c| c as f64));
        let zx = (pp + mm - pm - mp) / n;
        let z = (pp + pm - mp - mm) / n;
        let x = (pp + mp - pm - mm) / n;
        zx - z * x
    }

    /// Empirical `<zx> - <z><x>` over the kept triples.
    pub fn correlation(&self) -> Result<f64> {
        if self.kept() == 0 {
            return Err(CpfError::EmptyPostselection);
        }
        Ok(Self::correlation_of(&self.counts))
    }

    /// Bootstrap standard error of [`Self::correlation`]. Resampling the kept
    /// triples with replacement is a multinomial draw over the four `(z, x)`
    /// cells, which is what is sampled here.
    pub fn bootstrap_std_error(&self, resamples: usize, seed: u64) -> Result<f64> {
        let n = self.kept();
        if n == 0 {
            return Err(CpfError::EmptyPostselection);
        }
        let cells: Vec<u64> = self.counts.iter().flatten().copied().collect();
        let mut rng = StreamFamily::new(seed, StreamDomain::Bootstrap).stream(0);
        let mut values = Vec::with_capacity(resamples);
        for _ in 0..resamples {
            let mut remaining_n = n;
            let mut remaining_mass = n;
            let mut draw = [0u64; 4];
            for (k, &c) in cells.iter().enumerate() {
                if k == 3 || remaining_n == 0 {
                    draw[k] = remaining_n;
                    remaining_n = 0;
                    continue;
                }
                let p = if remaining_mass == 0 {
                    0.0
                } else {
                    (c as f64 / remaining_mass as f64).min(1.0)
                };
                let d = Binomial::new(remaining_n, p)
                    .map_err(|e| CpfError::InvalidParameter(e.to_string()))?
                    .sample(&mut rng);
                draw[k] = d;
                remaining_n -= d;
                remaining_mass -= c;
            }
            values.push(Self::correlation_of(&[
                [draw[0], draw[1]],
                [draw[2], draw[3]],
            ]));
        }
        let m = values.iter().sum::<f64>() / values.len() as f64;
        let var =
            values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len().max(2) - 1) as f64;
        Ok(var.sqrt())
    }
}

/// Generates outcome triples and keeps those whose middle outcome is `y_select`.
pub fn sample_postselected(
    model: &NoiseModel,
    t: f64,
    tau: f64,
    y_select: Outcome,
    cfg: &McConfig,
) -> Result<PostselectedCounts> {
    let sampler = PhaseSampler::new(model, t, tau)?;
    let streams = StreamFamily::new(cfg.seed, StreamDomain::Trajectory);
    let parts = run_chunks(cfg, PostselectedCounts::default, |i, acc| {
        let mut rng = streams.stream(i);
        let pp = sampler.sample(&mut rng);
        let tr = sample_outcome_triple(&pp, &mut rng);
        acc.generated += 1;
        if tr.y == y_select {
            acc.counts[tr.z.index()][tr.x.index()] += 1;
        }
    })?;
    let mut total = PostselectedCounts::default();
    parts.iter().for_each(|p| total.merge(p));
    Ok(total)
}

/// CPF by literal postselection on sampled outcome triples, with a bootstrap
/// standard error.
pub fn mc_cpf_sampling(
    model: &NoiseModel,
    t: f64,
    tau: f64,
    y_select: Outcome,
    cfg: &McConfig,
) -> Result<Estimate> {
    let counts = sample_postselected(model, t, tau, y_select, cfg)?;
    let value = counts.correlation()?;
    let se = counts.bootstrap_std_error(BOOTSTRAP_RESAMPLES, cfg.seed)?;
    Estimate::new(value, se, counts.kept())
}

/// Moments estimated from exactly discretized OU paths with trapezoid phase
/// integration. Independent of [`PhaseSampler`]'s covariance formulas.
pub fn ou_path_reference(
    model: &NoiseModel,
    t: f64,
    tau: f64,
    cfg: &McConfig,
) -> Result<(Estimate, Estimate, Estimate)> {
    let (g, tau_c) = match *model {
        NoiseModel::ExpCorrGauss { g, tau_c } => (g, tau_c),
        _ => {
            return Err(CpfError::InvalidParameter(
                "path reference requires exp_corr_gauss noise".into(),
            ))
        }
    };
    model.validate()?;
    ensure_time(t, "t")?;
    ensure_time(tau, "tau")?;
    let dt = cfg.path_dt.unwrap_or(tau_c.min(1.0 / g) / 50.0);
    if dt > tau_c / 10.0 {
        return Err(CpfError::StepTooCoarse {
            dt,
            limit: tau_c / 10.0,
        });
    }
    let steps = |len: f64| -> (u64, f64) {
        if len == 0.0 {
            (0, 0.0)
        } else {
            let n = (len / dt).ceil().max(1.0) as u64;
            (n, len / n as f64)
        }
    };
    let (n1, h1) = steps(t);
    let (n2, h2) = steps(tau);
    let decay = |h: f64| {
        (
            (-h / tau_c).exp(),
            g * (-(-2.0 * h / tau_c).exp_m1()).sqrt(),
        )
    };
    let (d1, k1) = decay(h1);
    let (d2, k2) = decay(h2);

    let streams = StreamFamily::new(cfg.seed, StreamDomain::Path);
    let parts = run_chunks(cfg, CoMoments::<3>::new, |i, acc| {
        let mut rng = streams.stream(i);
        let mut x = g * sample_standard_normal(&mut rng);
        let mut integrate = |n: u64, h: f64, d: f64, k: f64| {
            let mut theta = 0.0;
            for _ in 0..n {
                let next = x * d + k * sample_standard_normal(&mut rng);
                theta += 0.5 * h * (x + next);
                x = next;
            }
            theta
        };
        let theta1 = integrate(n1, h1, d1, k1);
        let theta2 = integrate(n2, h2, d2, k2);
        let (a, b) = ((2.0 * theta1).cos(), (2.0 * theta2).cos());
        acc.push([a, b, a * b]);
    })?;
    let mut stats = CoMoments::new();
    parts.iter().for_each(|p| stats.merge(p));
    MomentSample::from_stats(stats).moments()
}
