//! Turns a validated config into evaluated rows.

use cpf_core::analytic::NoiseModel;
use cpf_core::spinbath::lorentz::{
    lorentz_coherence, lorentz_conditional_coherence, lorentz_cpf, LorentzEnsemble,
};
use cpf_core::spinbath::oracle::{oracle_coherence, oracle_conditional_coherence, oracle_protocol};
use cpf_core::stochastic::{
    mc_conditional_coherence, mc_cpf_sampling, mc_cpf_semianalytic, mc_moments, sample_postselected,
};
use cpf_core::{
    cpf_from_table, cpf_probability_table, random_spin_bath, scaled_gaussian_bath,
    CpfProbabilityTable, Estimate, LorentzCouplingSpec, McConfig, MomentSet, Outcome, SpinBathSpec,
    SystemInit,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Amplitude, ExperimentConfig, Method, ModelConfig, Quantity};
use crate::error::CliError;

/// One CSV line. `tau` is absent for single-time quantities; `std_error` and
/// `n_samples` are absent for deterministic methods.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub t: f64,
    pub tau: Option<f64>,
    pub value: f64,
    pub std_error: Option<f64>,
    pub n_samples: Option<u64>,
    pub quantity: String,
}

#[derive(Debug, Clone)]
pub enum Engine {
    Noise(NoiseModel),
    Bath(SpinBathSpec),
    Lorentz(LorentzCouplingSpec),
}

/// Everything needed to evaluate a config, checked up front.
#[derive(Debug, Clone)]
pub struct Plan {
    pub engine: Engine,
    pub model_tag: String,
    pub quantity: Quantity,
    pub method: Method,
    pub points: Vec<(f64, Option<f64>)>,
    pub yx: Outcome,
    pub y_select: Outcome,
    pub mc: Option<McConfig>,
    pub init: SystemInit,
}

fn amplitude(a: Amplitude) -> Complex64 {
    Complex64::new(a[0], a[1])
}

fn build_engine(model: &ModelConfig) -> cpf_core::Result<Engine> {
    Ok(match model {
        ModelConfig::White { gamma_w } => Engine::Noise(NoiseModel::white(*gamma_w)?),
        ModelConfig::ExpCorrGauss { g, tau_c } => {
            Engine::Noise(NoiseModel::exp_corr_gauss(*g, *tau_c)?)
        }
        ModelConfig::StaticGauss { g } => Engine::Noise(NoiseModel::static_gauss(*g)?),
        ModelConfig::StaticLorentz { gamma, omega } => {
            Engine::Noise(NoiseModel::static_lorentz(*gamma, *omega)?)
        }
        ModelConfig::SpinBath {
            couplings,
            alphas,
            betas,
        } => Engine::Bath(SpinBathSpec::new(
            couplings.clone(),
            alphas.iter().copied().map(amplitude).collect(),
            betas.iter().copied().map(amplitude).collect(),
        )?),
        ModelConfig::ScaledGaussianBath { n_spins, g, omega } => {
            Engine::Bath(scaled_gaussian_bath(*n_spins, *g, *omega)?)
        }
        ModelConfig::RandomSpinBath {
            n_spins,
            coupling_scale,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Engine::Bath(random_spin_bath(&mut rng, *n_spins, *coupling_scale)?)
        }
        ModelConfig::LorentzCoupling {
            gamma,
            omega,
            n_spins,
            alpha,
            beta,
        } => {
            let spec = match (alpha, beta) {
                (None, None) => LorentzCouplingSpec::unpolarized(*gamma, *omega, *n_spins)?,
                (Some(a), Some(b)) => LorentzCouplingSpec::new(
                    *gamma,
                    *omega,
                    *n_spins,
                    amplitude(*a),
                    amplitude(*b),
                )?,
                _ => {
                    return Err(cpf_core::CpfError::InvalidParameter(
                        "give both alpha and beta or neither".into(),
                    ))
                }
            };
            Engine::Lorentz(spec)
        }
    })
}

fn supported(engine: &Engine, method: Method, q: Quantity) -> Result<(), String> {
    use Quantity::*;
    let ok = match (engine, method) {
        (Engine::Noise(_), Method::Analytic) => true,
        (Engine::Noise(_), Method::Montecarlo) => matches!(
            q,
            Coherence | ConditionalCoherence | Cpf | CpfSurface | Moments
        ),
        (Engine::Noise(_), Method::Sampling) => matches!(q, Cpf | CpfSurface | ProbabilityTable),
        (Engine::Bath(_), Method::Analytic | Method::Oracle) => q != Rate,
        (Engine::Lorentz(spec), Method::Analytic) => {
            if q == Rate {
                false
            } else if q != Coherence && spec.omega != 0.0 {
                return Err("lorentz_coupling closed forms beyond the coherence need omega = 0; use montecarlo".into());
            } else {
                true
            }
        }
        (Engine::Lorentz(_), Method::Montecarlo) => q != Rate,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(format!(
            "method {} does not support quantity {} for this model",
            method.name(),
            q.name()
        ))
    }
}

fn model_tag(engine: &Engine, model: &ModelConfig) -> String {
    match (engine, model) {
        (_, ModelConfig::ScaledGaussianBath { n_spins, g, omega }) => {
            format!("scaled_gaussian_bath(N={n_spins},g={g},omega={omega})")
        }
        (
            _,
            ModelConfig::RandomSpinBath {
                n_spins,
                coupling_scale,
                seed,
            },
        ) => {
            format!("random_spin_bath(N={n_spins},scale={coupling_scale},seed={seed})")
        }
        (Engine::Noise(m), _) => m.tag(),
        (Engine::Bath(s), _) => s.tag(),
        (Engine::Lorentz(s), _) => s.tag(),
    }
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Plan, CliError> {
    cfg.validate()?;
    let engine = build_engine(&cfg.model).map_err(|e| CliError::config("model", e.to_string()))?;
    supported(&engine, cfg.method, cfg.quantity).map_err(|m| CliError::config("method", m))?;
    let init = match &cfg.system_init {
        Some(s) => SystemInit::new(amplitude(s.a), amplitude(s.b))
            .map_err(|e| CliError::config("system_init", e.to_string()))?,
        None => SystemInit::plus(),
    };
    let ts = cfg.t_grid.points();
    let points: Vec<(f64, Option<f64>)> = match (cfg.quantity, &cfg.tau_grid) {
        (q, _) if q.single_time() => ts.iter().map(|&t| (t, None)).collect(),
        (Quantity::Cpf, None) => ts.iter().map(|&t| (t, Some(t))).collect(),
        (Quantity::Cpf, Some(g)) => ts
            .iter()
            .zip(g.points())
            .map(|(&t, tau)| (t, Some(tau)))
            .collect(),
        (_, Some(g)) => {
            let taus = g.points();
            ts.iter()
                .flat_map(|&t| taus.iter().map(move |&tau| (t, Some(tau))))
                .collect()
        }
        (_, None) => unreachable!("validated"),
    };
    Ok(Plan {
        model_tag: model_tag(&engine, &cfg.model),
        engine,
        quantity: cfg.quantity,
        method: cfg.method,
        points,
        yx: cfg.yx.unwrap_or(Outcome::Plus),
        y_select: cfg.y_select,
        mc: cfg.mc.map(|m| m.to_core()),
        init,
    })
}

/// Seed of the `k`-th grid point; point 0 uses the configured seed itself.
pub fn point_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn exact(t: f64, tau: Option<f64>, value: f64, quantity: impl Into<String>) -> Row {
    Row {
        t,
        tau,
        value,
        std_error: None,
        n_samples: None,
        quantity: quantity.into(),
    }
}

fn estimated(t: f64, tau: Option<f64>, e: Estimate, quantity: impl Into<String>) -> Row {
    Row {
        t,
        tau,
        value: e.value,
        std_error: Some(e.std_error),
        n_samples: Some(e.n_samples),
        quantity: quantity.into(),
    }
}

fn table_label(z: Outcome, x: Outcome, y: Outcome) -> String {
    format!("p(z={z},x={x}|y={y})")
}

fn table_rows(t: f64, tau: f64, tbl: &CpfProbabilityTable) -> Vec<Row> {
    let mut rows = Vec::with_capacity(4);
    for z in [Outcome::Plus, Outcome::Minus] {
        for x in [Outcome::Plus, Outcome::Minus] {
            rows.push(exact(
                t,
                Some(tau),
                tbl.entry(z, x),
                table_label(z, x, tbl.y()),
            ));
        }
    }
    rows
}

fn moment_rows(t: f64, tau: f64, m: &MomentSet) -> Vec<Row> {
    vec![
        exact(t, Some(tau), m.f_t, "f_t"),
        exact(t, Some(tau), m.f_tau, "f_tau"),
        exact(t, Some(tau), m.f_joint, "f_joint"),
    ]
}

fn estimated_moment_rows(t: f64, tau: f64, m: (Estimate, Estimate, Estimate)) -> Vec<Row> {
    vec![
        estimated(t, Some(tau), m.0, "f_t"),
        estimated(t, Some(tau), m.1, "f_tau"),
        estimated(t, Some(tau), m.2, "f_joint"),
    ]
}

/// Moments read back from a probability table: `Σ x y P`, `Σ z y P`, `Σ z x P`.
fn table_moments(tbl: &CpfProbabilityTable) -> cpf_core::Result<MomentSet> {
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    let y = tbl.y().sign();
    for z in [Outcome::Plus, Outcome::Minus] {
        for x in [Outcome::Plus, Outcome::Minus] {
            let p = tbl.entry(z, x);
            a += x.sign() * y * p;
            b += z.sign() * y * p;
            c += z.sign() * x.sign() * p;
        }
    }
    MomentSet::new(a, b, c)
}

impl Plan {
    fn mc_at(&self, k: usize) -> McConfig {
        let mut cfg = self.mc.expect("validated");
        cfg.seed = point_seed(cfg.seed, k);
        cfg
    }

    fn eval_point(&self, k: usize, t: f64, tau_opt: Option<f64>) -> cpf_core::Result<Vec<Row>> {
        use Quantity::*;
        let q = self.quantity;
        let tau = tau_opt.unwrap_or(0.0);
        let name = q.name();
        let (yx, y) = (self.yx, self.y_select);
        let one = |v: f64| Ok(vec![exact(t, tau_opt, v, name)]);
        let one_est = |e: Estimate| Ok(vec![estimated(t, tau_opt, e, name)]);
        match (&self.engine, self.method) {
            (Engine::Noise(m), Method::Analytic) => match q {
                Coherence => one(m.first_moment(t)?),
                Rate => one(m.dephasing_rate(t)?),
                ConditionalCoherence => one(m.conditional_coherence(t, tau, yx)?),
                Cpf | CpfSurface => one(m.cpf(t, tau)?),
                Moments => Ok(moment_rows(t, tau, &m.moments(t, tau)?)),
                ProbabilityTable => Ok(table_rows(
                    t,
                    tau,
                    &cpf_probability_table(&m.moments(t, tau)?, y)?,
                )),
            },
            (Engine::Noise(m), Method::Montecarlo) => {
                let cfg = self.mc_at(k);
                match q {
                    Coherence => one_est(mc_moments(m, t, 0.0, &cfg)?.0),
                    ConditionalCoherence => one_est(mc_conditional_coherence(m, t, tau, yx, &cfg)?),
                    Cpf | CpfSurface => one_est(mc_cpf_semianalytic(m, t, tau, &cfg)?),
                    Moments => Ok(estimated_moment_rows(t, tau, mc_moments(m, t, tau, &cfg)?)),
                    _ => unreachable!("checked in prepare"),
                }
            }
            (Engine::Noise(m), Method::Sampling) => {
                let cfg = self.mc_at(k);
                match q {
                    Cpf | CpfSurface => one_est(mc_cpf_sampling(m, t, tau, y, &cfg)?),
                    ProbabilityTable => {
                        let counts = sample_postselected(m, t, tau, y, &cfg)?;
                        let kept = counts.kept();
                        if kept == 0 {
                            return Err(cpf_core::CpfError::EmptyPostselection);
                        }
                        let mut rows = Vec::with_capacity(4);
                        for z in [Outcome::Plus, Outcome::Minus] {
                            for x in [Outcome::Plus, Outcome::Minus] {
                                let p = counts.count(z, x) as f64 / kept as f64;
                                let se = (p * (1.0 - p) / kept as f64).sqrt();
                                rows.push(estimated(
                                    t,
                                    tau_opt,
                                    Estimate::new(p, se, kept)?,
                                    table_label(z, x, y),
                                ));
                            }
                        }
                        Ok(rows)
                    }
                    _ => unreachable!("checked in prepare"),
                }
            }
            (Engine::Bath(s), Method::Analytic) => match q {
                Coherence => one(s.coherence(t)?.re),
                ConditionalCoherence => one(s.conditional_coherence(t, tau, yx)?.re),
                Cpf | CpfSurface => one(s.cpf(t, tau)?),
                Moments => Ok(moment_rows(t, tau, &s.moments(t, tau)?)),
                ProbabilityTable => Ok(table_rows(t, tau, &s.cpf_probability(t, tau, y)?)),
                Rate => unreachable!("checked in prepare"),
            },
            (Engine::Bath(s), Method::Oracle) => match q {
                Coherence => one(oracle_coherence(s, &self.init, t, Outcome::Plus)?.re),
                ConditionalCoherence => {
                    one(oracle_conditional_coherence(s, &self.init, t, tau, Outcome::Plus, yx)?.re)
                }
                Cpf | CpfSurface => {
                    one(cpf_from_table(&oracle_protocol(s, &self.init, t, tau, y)?))
                }
                Moments => Ok(moment_rows(
                    t,
                    tau,
                    &table_moments(&oracle_protocol(s, &self.init, t, tau, y)?)?,
                )),
                ProbabilityTable => Ok(table_rows(
                    t,
                    tau,
                    &oracle_protocol(s, &self.init, t, tau, y)?,
                )),
                Rate => unreachable!("checked in prepare"),
            },
            (Engine::Lorentz(s), Method::Analytic) => {
                // With omega = 0 the ensemble averages coincide with static Lorentz noise.
                let noise = || NoiseModel::static_lorentz(s.gamma, 0.0);
                match q {
                    Coherence => one(lorentz_coherence(s, t)?.re),
                    ConditionalCoherence => {
                        one(lorentz_conditional_coherence(s.gamma, t, tau, yx)?)
                    }
                    Cpf | CpfSurface => one(lorentz_cpf(s.gamma, t, tau)?),
                    Moments => Ok(moment_rows(t, tau, &noise()?.moments(t, tau)?)),
                    ProbabilityTable => Ok(table_rows(
                        t,
                        tau,
                        &cpf_probability_table(&noise()?.moments(t, tau)?, y)?,
                    )),
                    Rate => unreachable!("checked in prepare"),
                }
            }
            (Engine::Lorentz(s), Method::Montecarlo) => {
                let ens = LorentzEnsemble::sample(s, t, tau, &self.mc_at(k))?;
                match q {
                    Coherence => one_est(ens.coherence()?.0),
                    ConditionalCoherence => one_est(ens.conditional_coherence(yx)?),
                    Cpf | CpfSurface => one_est(ens.table_cpf()?),
                    Moments => Ok(estimated_moment_rows(t, tau, ens.moments().moments()?)),
                    ProbabilityTable => {
                        let mut rows = Vec::with_capacity(4);
                        for z in [Outcome::Plus, Outcome::Minus] {
                            for x in [Outcome::Plus, Outcome::Minus] {
                                rows.push(estimated(
                                    t,
                                    tau_opt,
                                    ens.table_entry(z, x, y)?,
                                    table_label(z, x, y),
                                ));
                            }
                        }
                        Ok(rows)
                    }
                    Rate => unreachable!("checked in prepare"),
                }
            }
            _ => unreachable!("checked in prepare"),
        }
    }

    /// Evaluates every grid point; points run in parallel, rows come back
    /// in grid order.
    pub fn evaluate(&self) -> Result<Vec<Row>, CliError> {
        let parts: Vec<Vec<Row>> = self
            .points
            .par_iter()
            .enumerate()
            .map(|(k, &(t, tau))| self.eval_point(k, t, tau))
            .collect::<cpf_core::Result<_>>()?;
        Ok(parts.into_iter().flatten().collect())
    }
}
