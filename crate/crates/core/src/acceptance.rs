//! Cross-validation checks shared by the `acceptance` test target and the
//! `selftest` CLI subcommand. Every tolerance here is fixed; nothing is tuned
//! at run time.

use std::fmt;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::{printed, NoiseModel};
use crate::error::Result;
use crate::montecarlo::McConfig;
use crate::protocol::{cpf_from_table, CpfProbabilityTable, Outcome};
use crate::spinbath::lorentz::{
    lorentz_coherence, lorentz_conditional_coherence, lorentz_cpf, LorentzEnsemble,
};
use crate::spinbath::oracle::{oracle_protocol, SystemInit};
use crate::spinbath::{random_spin_bath, scaled_gaussian_bath, LorentzCouplingSpec, SpinBathSpec};
use crate::stochastic::{mc_cpf_sampling, sample_moments};

/// Trajectories per Monte Carlo point.
pub const MC_TRAJECTORIES: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2}. {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64()
        )?;
        for d in &self.details {
            write!(f, "\n       {d}")?;
        }
        Ok(())
    }
}

/// Collects sub-checks of one criterion.
struct Checks {
    passed: bool,
    details: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            passed: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, msg: impl Into<String>) {
        let msg = msg.into();
        self.passed &= ok;
        self.details
            .push(format!("{} {msg}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, msg: impl Into<String>) {
        self.details.push(format!("note {}", msg.into()));
    }
}

fn run(
    id: u32,
    name: &'static str,
    body: impl FnOnce(&mut Checks) -> Result<()>,
) -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    if let Err(e) = body(&mut c) {
        c.check(false, format!("error: {e}"));
    }
    CriterionResult {
        id,
        name,
        passed: c.passed,
        details: c.details,
        elapsed: start.elapsed(),
    }
}

fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    (0..count)
        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
        .collect()
}

fn mc(seed: u64) -> McConfig {
    McConfig::new(MC_TRAJECTORIES, seed)
}

fn max_table_diff(a: &CpfProbabilityTable, b: &CpfProbabilityTable) -> f64 {
    let mut d: f64 = 0.0;
    for z in Outcome::BOTH {
        for x in Outcome::BOTH {
            d = d.max((a.entry(z, x) - b.entry(z, x)).abs());
        }
    }
    d
}

fn random_spec(rng: &mut ChaCha8Rng, n: usize) -> Result<SpinBathSpec> {
    random_spin_bath(rng, n, 1.5)
}

/// White noise gives no past-future correlation.
pub fn markovian_nullity() -> CriterionResult {
    run(1, "Markovian nullity", |c| {
        let start = Instant::now();
        let white = NoiseModel::white(1.0)?;
        let grid = linspace(0.0, 5.0, 50);
        let mut max_abs: f64 = 0.0;
        for &t in &grid {
            for &tau in &grid {
                max_abs = max_abs.max(white.cpf(t, tau)?.abs());
            }
        }
        c.check(
            max_abs == 0.0,
            format!("analytic white C_pf on 50x50 grid: max |C| = {max_abs:e} (must be exactly 0)"),
        );
        let e = mc_cpf_sampling(&white, 0.25, 0.25, Outcome::Plus, &mc(101))?;
        c.check(
            e.within_sigma(0.0, 4.0),
            format!(
                "sampling C_pf(0.25, 0.25) = {e}, z = {:.2} (<= 4)",
                e.z_score(0.0)
            ),
        );
        let secs = start.elapsed().as_secs_f64();
        c.check(secs < 60.0, format!("runtime {secs:.1}s (< 60s)"));
        Ok(())
    })
}

/// Static Gaussian noise saturates at C(t, t) = 1/2.
pub fn gaussian_plateau() -> CriterionResult {
    run(2, "Gaussian plateau", |c| {
        let sg = NoiseModel::static_gauss(1.0)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in linspace(2.0, 10.0, 81) {
            let v = sg.cpf(t, t)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        c.check(
            lo >= 0.499 && hi <= 0.5,
            format!("C(t,t) for gt in [2,10]: range [{lo:.9}, {hi:.9}] within [0.499, 0.5]"),
        );
        let exact = sg.cpf(2.0, 2.0)?;
        let e = sample_moments(&sg, 2.0, 2.0, &mc(202))?.cpf()?;
        c.check(
            e.within_sigma(exact, 3.0),
            format!(
                "MC C(2,2) = {e} vs {exact:.9}, z = {:.2} (<= 3)",
                e.z_score(exact)
            ),
        );
        Ok(())
    })
}

/// A large scaled spin bath reproduces the Gaussian forms.
pub fn spin_bath_gaussian_fit() -> CriterionResult {
    run(3, "Spin-bath Gaussian fit (N = 50)", |c| {
        let start = Instant::now();
        let spec = scaled_gaussian_bath(50, 1.0, 0.0)?;
        let mut max_c: f64 = 0.0;
        for t in linspace(0.0, 2.0, 201) {
            let ct = spec.coherence(t)?;
            max_c = max_c.max((ct - Complex64::new((-2.0 * t * t).exp(), 0.0)).norm());
        }
        c.check(
            max_c <= 0.01,
            format!("max |c_t - exp(-2(gt)^2)| = {max_c:.5} (<= 0.01)"),
        );
        let gauss = NoiseModel::static_gauss(1.0)?;
        let grid = linspace(0.0, 2.0, 41);
        let mut max_cpf: f64 = 0.0;
        for &t in &grid {
            for &tau in &grid {
                max_cpf = max_cpf.max((spec.cpf(t, tau)? - gauss.cpf(t, tau)?).abs());
            }
        }
        c.check(
            max_cpf <= 0.02,
            format!("max |C_pf - Gaussian form| on 41x41 grid = {max_cpf:.5} (<= 0.02)"),
        );
        let secs = start.elapsed().as_secs_f64();
        c.check(secs < 10.0, format!("runtime {secs:.2}s"));
        Ok(())
    })
}

/// Dense statevector replay equals the product-formula tables.
pub fn oracle_equivalence() -> CriterionResult {
    run(4, "Oracle equivalence", |c| {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        let mut worst: f64 = 0.0;
        for i in 0..25 {
            let n = 1 + i % 10;
            let spec = random_spec(&mut rng, n)?;
            let (t, tau) = (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0));
            for y in Outcome::BOTH {
                let o = oracle_protocol(&spec, &SystemInit::plus(), t, tau, y)?;
                let p = spec.cpf_probability(t, tau, y)?;
                worst = worst.max(max_table_diff(&o, &p));
            }
        }
        c.check(
            worst <= 1e-10,
            format!("25 random baths (N = 1..10): max elementwise |diff| = {worst:e} (<= 1e-10)"),
        );
        let secs = start.elapsed().as_secs_f64();
        c.check(secs < 30.0, format!("runtime {secs:.2}s (< 30s)"));
        Ok(())
    })
}

/// Lorentzian couplings: exponential coherence but non-zero correlation.
pub fn lorentz_non_markovianity() -> CriterionResult {
    run(5, "Lorentz/Lindblad non-Markovianity", |c| {
        let gamma = 1.0;
        let spec = LorentzCouplingSpec::unpolarized(gamma, 0.0, 50)?;
        let mut exact = true;
        for t in linspace(0.0, 5.0, 51) {
            let v = lorentz_coherence(&spec, t)?;
            exact &= v.re == (-gamma * t).exp() && v.im == 0.0;
        }
        c.check(
            exact,
            "lorentz_coherence(omega = 0) == exp(-gamma t) bit-for-bit on 51 points",
        );

        let ens = LorentzEnsemble::sample(&spec, 1.0, 1.0, &mc(505))?;
        let (re, _) = ens.coherence()?;
        let target = (-1.0f64).exp();
        c.check(
            re.within_sigma(target, 3.0),
            format!(
                "Cauchy MC c_1 = {re} vs {target:.6}, z = {:.2}",
                re.z_score(target)
            ),
        );
        let ens2 = LorentzEnsemble::sample(&spec, 2.0, 0.0, &mc(506))?;
        let (re2, _) = ens2.coherence()?;
        let target2 = (-2.0f64).exp();
        c.check(
            re2.within_sigma(target2, 3.0),
            format!(
                "Cauchy MC c_2 = {re2} vs {target2:.6}, z = {:.2}",
                re2.z_score(target2)
            ),
        );

        let closed = lorentz_cpf(gamma, 1.0, 1.0)?;
        let e = ens.table_cpf()?;
        c.check(
            e.within_sigma(closed, 3.0),
            format!(
                "C_pf(1,1): closed {closed:.6}, MC {e}, z = {:.2}",
                e.z_score(closed)
            ),
        );
        c.check(
            (closed - 0.43233).abs() < 5e-6,
            format!("closed form (1 - e^-2)/2 = {closed:.6} ~ 0.43233"),
        );

        let cc = lorentz_conditional_coherence(gamma, 1.0, 1.0, Outcome::Plus)?;
        let ecc = ens.conditional_coherence(Outcome::Plus)?;
        c.check(
            ecc.within_sigma(cc, 3.0),
            format!(
                "c^(+)(1,1): closed {cc:.6}, MC {ecc}, z = {:.2}",
                ecc.z_score(cc)
            ),
        );

        let grid = linspace(0.1, 5.0, 50);
        let mut max_corr: f64 = 0.0;
        let mut max_printed: f64 = 0.0;
        for &t in &grid {
            for &tau in &grid {
                for yx in Outcome::BOTH {
                    max_corr =
                        max_corr.max(lorentz_conditional_coherence(gamma, t, tau, yx)?.abs());
                    max_printed = max_printed.max(
                        printed::lorentz_conditional_coherence_unhalved(gamma, t, tau, yx.sign())
                            .abs(),
                    );
                }
            }
        }
        c.check(
            max_corr <= 1.0,
            format!("corrected |c^yx| <= 1 on 50x50 grid (max {max_corr:.6})"),
        );
        c.check(
            max_printed > 1.0,
            format!("expected-fail: un-halved printed form exceeds 1 (max {max_printed:.4})"),
        );
        Ok(())
    })
}

/// Random-frequency noise and the random-coupling bath give identical forms.
pub fn random_frequency_equivalence() -> CriterionResult {
    run(6, "Random-frequency / spin-bath equivalence", |c| {
        let gamma = 0.8;
        let noise = NoiseModel::static_lorentz(gamma, 0.0)?;
        let bath = LorentzCouplingSpec::unpolarized(gamma, 0.0, 50)?;
        let grid = linspace(0.0, 5.0, 26);
        let (mut dm, mut dc, mut dp): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for &t in &grid {
            dm = dm.max((noise.first_moment(t)? - lorentz_coherence(&bath, t)?.re).abs());
            for &tau in &grid {
                dp = dp.max((noise.cpf(t, tau)? - lorentz_cpf(gamma, t, tau)?).abs());
                for yx in Outcome::BOTH {
                    match (
                        noise.conditional_coherence(t, tau, yx),
                        lorentz_conditional_coherence(gamma, t, tau, yx),
                    ) {
                        (Ok(a), Ok(b)) => dc = dc.max((a - b).abs()),
                        (Err(a), Err(b)) if a == b => {}
                        _ => dc = f64::INFINITY,
                    }
                }
            }
        }
        c.check(dm <= 1e-12, format!("moments: max diff {dm:e}"));
        c.check(
            dc <= 1e-12,
            format!("conditional coherences: max diff {dc:e}"),
        );
        c.check(dp <= 1e-12, format!("C_pf: max diff {dp:e}"));
        Ok(())
    })
}

/// OU noise interpolates between white and static Gaussian noise.
pub fn ou_limits() -> CriterionResult {
    run(7, "OU limits and Monte Carlo", |c| {
        let mut white_gap: f64 = 0.0;
        let mut static_gap: f64 = 0.0;
        for t in [0.5, 1.0, 2.0] {
            let gamma_w: f64 = 1.0;
            let tau_c = 1e-4 * t;
            let ou = NoiseModel::exp_corr_gauss((gamma_w / (2.0 * tau_c)).sqrt(), tau_c)?;
            white_gap = white_gap.max((ou.first_moment(t)? - (-2.0 * gamma_w * t).exp()).abs());
            let ou = NoiseModel::exp_corr_gauss(1.0, 1e4 * t)?;
            let sg = NoiseModel::static_gauss(1.0)?;
            static_gap = static_gap.max((ou.first_moment(t)? - sg.first_moment(t)?).abs());
            for tau in [0.25, 0.5, 1.0, 2.0] {
                static_gap =
                    static_gap.max((ou.joint_moment(t, tau)? - sg.joint_moment(t, tau)?).abs());
            }
        }
        c.check(
            white_gap < 1e-3,
            format!(
                "tau_c/t = 1e-4, gamma_w = 2 g^2 tau_c fixed: max |f - white| = {white_gap:.2e}"
            ),
        );
        c.check(
            static_gap < 1e-3,
            format!("tau_c/t = 1e4: max |f, f(t,tau) - static| = {static_gap:.2e}"),
        );

        let points = [(0.25, 0.25), (0.5, 1.0), (1.0, 0.5), (1.0, 1.0), (2.0, 2.0)];
        let grid = linspace(0.0, 3.0, 31);
        let mut peaks = Vec::new();
        for (k, tau_c) in [0.2, 1.0, 5.0, 100.0].into_iter().enumerate() {
            let model = NoiseModel::exp_corr_gauss(1.0, tau_c)?;
            let mut worst: f64 = 0.0;
            for (j, &(t, tau)) in points.iter().enumerate() {
                let m = model.moments(t, tau)?;
                let s = sample_moments(&model, t, tau, &mc(700 + 10 * k as u64 + j as u64))?;
                let (ef, eft, ej) = s.moments()?;
                let ec = s.cpf()?;
                for (e, v) in [
                    (ef, m.f_t),
                    (eft, m.f_tau),
                    (ej, m.f_joint),
                    (ec, model.cpf(t, tau)?),
                ] {
                    worst = worst.max(e.z_score(v));
                }
            }
            c.check(worst <= 3.0, format!("tau_c = {tau_c}: MC vs analytic (f, f', f(t,tau), C) at 5 points, max z = {worst:.2}"));
            let mut peak: f64 = 0.0;
            for &t in &grid {
                for &tau in &grid {
                    peak = peak.max(model.cpf(t, tau)?);
                }
            }
            peaks.push(peak);
        }
        let increasing = peaks.windows(2).all(|w| w[1] > w[0]);
        c.check(
            increasing,
            format!("C_pf peak over [0,3]^2 increases with tau_c: {peaks:.4?}"),
        );
        Ok(())
    })
}

/// Closed-form rates against finite differences of `-ln f`.
pub fn rate_formulas() -> CriterionResult {
    run(8, "Dephasing-rate formulas", |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(808);
        let h = 1e-6;
        let models = [
            ("2 gamma_w", NoiseModel::white(1.3)?),
            ("4 g^2 t", NoiseModel::static_gauss(0.9)?),
            (
                "4 g^2 tau_c (1 - e^-t/tau_c)",
                NoiseModel::exp_corr_gauss(1.1, 0.7)?,
            ),
        ];
        for (label, m) in models {
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let t: f64 = rng.random_range(0.1..3.0);
                let fd = -(m.first_moment(t + h)?.ln() - m.first_moment(t - h)?.ln()) / (2.0 * h);
                let r = m.dephasing_rate(t)?;
                worst = worst.max(((fd - r) / r).abs());
            }
            c.check(
                worst <= 1e-5,
                format!("{label}: max relative error {worst:.2e} at 20 points (<= 1e-5)"),
            );
        }
        Ok(())
    })
}

/// Literal postselection agrees with the unconditional-average estimator.
pub fn estimator_cross_validation() -> CriterionResult {
    run(9, "Estimator cross-validation", |c| {
        let start = Instant::now();
        let models = [
            NoiseModel::white(1.0)?,
            NoiseModel::exp_corr_gauss(1.0, 1.0)?,
            NoiseModel::static_gauss(1.0)?,
            NoiseModel::static_lorentz(1.0, 0.0)?,
        ];
        let points = [(0.25, 0.25), (0.5, 1.0), (1.0, 0.5), (1.0, 1.0), (1.5, 2.0)];
        for (k, model) in models.iter().enumerate() {
            let mut worst: f64 = 0.0;
            for (j, &(t, tau)) in points.iter().enumerate() {
                let cfg = mc(900 + 10 * k as u64 + j as u64);
                let a = mc_cpf_sampling(model, t, tau, Outcome::Plus, &cfg)?;
                let b = sample_moments(model, t, tau, &cfg)?.cpf()?;
                worst = worst.max(a.combined_z(&b));
            }
            c.check(
                worst <= 3.0,
                format!("{}: max combined z over 5 points = {worst:.2}", model.tag()),
            );
        }
        let secs = start.elapsed().as_secs_f64();
        c.check(secs < 600.0, format!("runtime {secs:.1}s (< 600s)"));
        Ok(())
    })
}

/// Structural invariants across all engines.
pub fn property_suites() -> CriterionResult {
    run(10, "Property suites", |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(1010);
        let noise = [
            NoiseModel::white(0.7)?,
            NoiseModel::exp_corr_gauss(1.0, 2.0)?,
            NoiseModel::static_gauss(1.2)?,
            NoiseModel::static_lorentz(0.9, 0.0)?,
            NoiseModel::static_lorentz(0.9, 1.7)?,
        ];
        let baths: Vec<SpinBathSpec> = (1..=6)
            .map(|n| random_spec(&mut rng, n))
            .collect::<Result<_>>()?;

        let mut norm_ok = true;
        let mut relabel_ok = true;
        let mut y_indep_ok = true;
        let mut boundary_ok = true;
        let mut coherence_ok = true;
        for _ in 0..200 {
            let (t, tau) = (rng.random_range(0.0..4.0), rng.random_range(0.0..4.0));
            let mut tables = Vec::new();
            for m in &noise {
                let ms = m.moments(t, tau)?;
                for y in Outcome::BOTH {
                    tables.push(crate::protocol::cpf_probability_table(&ms, y)?);
                }
                boundary_ok &= m.cpf(t, 0.0)?.abs() < 1e-14 && m.cpf(0.0, tau)?.abs() < 1e-14;
                for yx in Outcome::BOTH {
                    if let Ok(v) = m.conditional_coherence(t, tau, yx) {
                        coherence_ok &= v.abs() <= 1.0 + 1e-12;
                    }
                }
            }
            for b in &baths {
                for y in Outcome::BOTH {
                    tables.push(b.cpf_probability(t, tau, y)?);
                }
                boundary_ok &= b.cpf(t, 0.0)?.abs() < 1e-14 && b.cpf(0.0, tau)?.abs() < 1e-14;
                coherence_ok &= b.coherence(t)?.norm() <= 1.0 + 1e-12;
                for yx in Outcome::BOTH {
                    if let Ok(v) = b.conditional_coherence(t, tau, yx) {
                        coherence_ok &= v.norm() <= 1.0 + 1e-9;
                    }
                }
            }
            boundary_ok &= lorentz_cpf(1.0, t, 0.0)? == 0.0 && lorentz_cpf(1.0, 0.0, tau)? == 0.0;
            for pair in tables.chunks(2) {
                let (p, m) = (&pair[0], &pair[1]);
                for tbl in [p, m] {
                    norm_ok &= (tbl.total() - 1.0).abs() <= 1e-12;
                    for z in Outcome::BOTH {
                        for x in Outcome::BOTH {
                            norm_ok &= (-1e-12..=1.0 + 1e-12).contains(&tbl.entry(z, x));
                        }
                    }
                }
                relabel_ok &= max_table_diff(&p.relabeled(), m) <= 1e-15;
                y_indep_ok &= (cpf_from_table(p) - cpf_from_table(m)).abs() <= 1e-12;
            }
        }
        c.check(
            norm_ok,
            "probability tables normalized with entries in [0, 1] (200 random points, all engines)",
        );
        c.check(coherence_ok, "|coherence| <= 1 for all engines");
        c.check(boundary_ok, "C_pf(t, 0) = C_pf(0, tau) = 0 for all engines");
        c.check(
            relabel_ok,
            "table(y = -1) = table(y = +1) with x -> -x, z -> -z",
        );
        c.check(y_indep_ok, "C_pf independent of the postselected y");

        let mut n1: f64 = 0.0;
        for _ in 0..100 {
            let b = random_spec(&mut rng, 1)?;
            n1 = n1.max(
                b.cpf(rng.random_range(0.0..6.0), rng.random_range(0.0..6.0))?
                    .abs(),
            );
        }
        c.check(
            n1 < 1e-14,
            format!("single-spin bath C_pf = 0 (max {n1:e})"),
        );

        let model = NoiseModel::exp_corr_gauss(1.0, 1.0)?;
        let cfg = McConfig::new(200_000, 77).with_chunk_size(1000);
        let run_with = |threads: usize| -> Result<(f64, f64, f64)> {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("thread pool");
            pool.install(|| {
                let s = sample_moments(&model, 1.0, 0.7, &cfg)?.cpf()?;
                let p = mc_cpf_sampling(&model, 1.0, 0.7, Outcome::Plus, &cfg)?;
                Ok((s.value, s.std_error, p.value))
            })
        };
        let runs: Vec<(f64, f64, f64)> = [1, 2, 4, 7]
            .into_iter()
            .map(run_with)
            .collect::<Result<_>>()?;
        let identical = runs.windows(2).all(|w| {
            w[0].0.to_bits() == w[1].0.to_bits()
                && w[0].1.to_bits() == w[1].1.to_bits()
                && w[0].2.to_bits() == w[1].2.to_bits()
        });
        c.check(
            identical,
            "Monte Carlo estimates bit-identical with 1, 2, 4 and 7 worker threads",
        );
        if !identical {
            c.note(format!("{runs:?}"));
        }
        Ok(())
    })
}

/// Runs every criterion in order.
pub fn run_all() -> Vec<CriterionResult> {
    vec![
        markovian_nullity(),
        gaussian_plateau(),
        spin_bath_gaussian_fit(),
        oracle_equivalence(),
        lorentz_non_markovianity(),
        random_frequency_equivalence(),
        ou_limits(),
        rate_formulas(),
        estimator_cross_validation(),
        property_suites(),
    ]
}
