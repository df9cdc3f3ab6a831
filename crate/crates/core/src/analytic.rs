//! Closed-form dephasing moments, coherences, past-future correlations and
//! dephasing rates for stationary classical noise models.
//!
//! The qubit picks up the random phase `exp(-2i ∫ ξ)`; every quantity below
//! is an average of cosines of that phase over the noise ensemble.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_time, CpfError, Result};
use crate::protocol::{cpf_from_moments, MomentSet, Outcome};

/// Denominators below this make the conditioning outcome pair impossible.
pub const POSTSELECTION_EPS: f64 = 1e-12;

/// Stationary dephasing drives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    /// Delta-correlated Gaussian noise with weight `gamma_w` (rate).
    White { gamma_w: f64 },
    /// Ornstein-Uhlenbeck noise, correlation `g^2 exp(-|dt|/tau_c)`.
    ExpCorrGauss { g: f64, tau_c: f64 },
    /// Gaussian noise frozen over each realization, correlation `g^2`.
    StaticGauss { g: f64 },
    /// Time-constant frequency drawn from a Cauchy density of full width
    /// `gamma` centred at `omega / 2`.
    StaticLorentz { gamma: f64, omega: f64 },
}

fn positive(v: f64, name: &str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CpfError::InvalidParameter(format!(
            "{name} = {v} must be positive and finite"
        )))
    }
}

/// `x - (1 - e^{-x})`, accurate for small `x`.
fn ou_variance_shape(x: f64) -> f64 {
    if x < 1e-3 {
        // x^2/2 - x^3/6 + x^4/24 - x^5/120
        x * x * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x / 120.0)))
    } else {
        x + (-x).exp_m1()
    }
}

/// `ln cosh(x)` without overflow.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl NoiseModel {
    pub fn white(gamma_w: f64) -> Result<Self> {
        let m = NoiseModel::White { gamma_w };
        m.validate()?;
        Ok(m)
    }

    pub fn exp_corr_gauss(g: f64, tau_c: f64) -> Result<Self> {
        let m = NoiseModel::ExpCorrGauss { g, tau_c };
        m.validate()?;
        Ok(m)
    }

    pub fn static_gauss(g: f64) -> Result<Self> {
        let m = NoiseModel::StaticGauss { g };
        m.validate()?;
        Ok(m)
    }

    pub fn static_lorentz(gamma: f64, omega: f64) -> Result<Self> {
        let m = NoiseModel::StaticLorentz { gamma, omega };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::White { gamma_w } => positive(gamma_w, "gamma_w"),
            NoiseModel::ExpCorrGauss { g, tau_c } => {
                positive(g, "g")?;
                positive(tau_c, "tau_c")
            }
            NoiseModel::StaticGauss { g } => positive(g, "g"),
            NoiseModel::StaticLorentz { gamma, omega } => {
                positive(gamma, "gamma")?;
                ensure_finite(omega, "omega").map(|_| ())
            }
        }
    }

    /// Short identifier used in CSV output.
    pub fn tag(&self) -> String {
        match *self {
            NoiseModel::White { gamma_w } => format!("white(gamma_w={gamma_w})"),
            NoiseModel::ExpCorrGauss { g, tau_c } => format!("exp_corr_gauss(g={g},tau_c={tau_c})"),
            NoiseModel::StaticGauss { g } => format!("static_gauss(g={g})"),
            NoiseModel::StaticLorentz { gamma, omega } => {
                format!("static_lorentz(gamma={gamma},omega={omega})")
            }
        }
    }

    /// Noise correlation `chi(dt)`.
    pub fn correlation_function(&self, dt: f64) -> Result<f64> {
        ensure_time(dt, "dt")?;
        match *self {
            NoiseModel::White { .. } if dt == 0.0 => Err(CpfError::DeltaSingular),
            NoiseModel::White { .. } => Ok(0.0),
            NoiseModel::ExpCorrGauss { g, tau_c } => Ok(g * g * (-dt / tau_c).exp()),
            NoiseModel::StaticGauss { g } => Ok(g * g),
            NoiseModel::StaticLorentz { .. } => {
                Err(CpfError::Undefined("Cauchy frequencies (no second moment)"))
            }
        }
    }

    /// `ln f(s)` for the Gaussian families; `None` for the Lorentz model.
    fn ln_first_moment(&self, s: f64) -> Option<f64> {
        match *self {
            NoiseModel::White { gamma_w } => Some(-2.0 * gamma_w * s),
            NoiseModel::StaticGauss { g } => Some(-2.0 * (g * s).powi(2)),
            NoiseModel::ExpCorrGauss { g, tau_c } => {
                Some(-4.0 * (tau_c * g).powi(2) * ou_variance_shape(s / tau_c))
            }
            NoiseModel::StaticLorentz { .. } => None,
        }
    }

    /// Lorentz average `E cos(2 g~ s)` for signed `s`.
    fn lorentz_cos(gamma: f64, omega: f64, s: f64) -> f64 {
        (-gamma * s.abs()).exp() * (omega * s).cos()
    }

    /// Dephasing factor `f(s) = E cos(2 ∫_0^s ξ)`.
    pub fn first_moment(&self, s: f64) -> Result<f64> {
        ensure_time(s, "s")?;
        Ok(match *self {
            NoiseModel::StaticLorentz { gamma, omega } => Self::lorentz_cos(gamma, omega, s),
            _ => self.ln_first_moment(s).map(f64::exp).unwrap_or(f64::NAN),
        })
    }

    /// Cross moment `f(t, tau) = E[cos(2θ1) cos(2θ2)]`.
    pub fn joint_moment(&self, t: f64, tau: f64) -> Result<f64> {
        ensure_time(t, "t")?;
        ensure_time(tau, "tau")?;
        Ok(match *self {
            NoiseModel::White { .. } => self.first_moment(t)? * self.first_moment(tau)?,
            NoiseModel::StaticGauss { g } => {
                let f = |s: f64| (-2.0 * (g * s).powi(2)).exp();
                0.5 * (f(t + tau) + f(t - tau))
            }
            NoiseModel::ExpCorrGauss { g, tau_c } => {
                let phi = 4.0
                    * (tau_c * g).powi(2)
                    * (-(-t / tau_c).exp_m1())
                    * (-(-tau / tau_c).exp_m1());
                let ln = self.ln_first_moment(t).unwrap_or(f64::NAN)
                    + self.ln_first_moment(tau).unwrap_or(f64::NAN)
                    + ln_cosh(phi);
                ln.exp()
            }
            NoiseModel::StaticLorentz { gamma, omega } => {
                0.5 * (Self::lorentz_cos(gamma, omega, t + tau)
                    + Self::lorentz_cos(gamma, omega, t - tau))
            }
        })
    }

    /// All three moments at `(t, tau)`; stationarity gives `f'(tau) = f(tau)`.
    pub fn moments(&self, t: f64, tau: f64) -> Result<MomentSet> {
        MomentSet::new(
            self.first_moment(t)?,
            self.first_moment(tau)?,
            self.joint_moment(t, tau)?,
        )
    }

    pub fn cpf(&self, t: f64, tau: f64) -> Result<f64> {
        cpf_from_moments(&self.moments(t, tau)?)
    }

    /// Coherence after the second measurement conditioned on the product `yx`:
    /// `[f(tau) + yx f(t, tau)] / [1 + yx f(t)]`.
    pub fn conditional_coherence(&self, t: f64, tau: f64, yx: Outcome) -> Result<f64> {
        let m = self.moments(t, tau)?;
        let s = yx.sign();
        let den = 1.0 + s * m.f_t;
        if den.abs() <= POSTSELECTION_EPS {
            return Err(CpfError::ZeroProbabilityPostselection);
        }
        Ok((m.f_tau + s * m.f_joint) / den)
    }

    /// Time-local dephasing rate `-d/dt ln f(t)`.
    pub fn dephasing_rate(&self, t: f64) -> Result<f64> {
        ensure_time(t, "t")?;
        Ok(match *self {
            NoiseModel::White { gamma_w } => 2.0 * gamma_w,
            NoiseModel::StaticGauss { g } => 4.0 * g * g * t,
            NoiseModel::ExpCorrGauss { g, tau_c } => 4.0 * g * g * tau_c * (-(-t / tau_c).exp_m1()),
            NoiseModel::StaticLorentz { gamma, omega } => gamma + omega * (omega * t).tan(),
        })
    }
}

/// Uncorrected variants of two closed forms, as they are commonly printed
/// without the factor 1/2 on the cross term. Kept only so regression tests can
/// show that they violate `|f| <= 1` and `|c| <= 1`.
pub mod printed {
    /// `f(t + tau) + f(t - tau)` for static Gaussian noise.
    pub fn static_gauss_joint_unhalved(g: f64, t: f64, tau: f64) -> f64 {
        let f = |s: f64| (-2.0 * (g * s).powi(2)).exp();
        f(t + tau) + f(t - tau)
    }

    /// Lorentz conditional coherence with the full (unhalved) cross term.
    pub fn lorentz_conditional_coherence_unhalved(gamma: f64, t: f64, tau: f64, yx: f64) -> f64 {
        let e = |s: f64| (-gamma * s.abs()).exp();
        (e(tau) + yx * (e(t + tau) + e(t - tau))) / (1.0 + yx * e(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_models() -> Vec<NoiseModel> {
        vec![
            NoiseModel::white(1.0).unwrap(),
            NoiseModel::exp_corr_gauss(1.0, 2.0).unwrap(),
            NoiseModel::static_gauss(1.0).unwrap(),
            NoiseModel::static_lorentz(1.0, 0.0).unwrap(),
        ]
    }

    #[test]
    fn constructors_validate() {
        assert!(NoiseModel::white(0.0).is_err());
        assert!(NoiseModel::exp_corr_gauss(1.0, -1.0).is_err());
        assert!(NoiseModel::static_gauss(f64::NAN).is_err());
        assert!(NoiseModel::static_lorentz(1.0, f64::INFINITY).is_err());
        assert!(NoiseModel::static_lorentz(1.0, -3.0).is_ok());
    }

    #[test]
    fn correlation_function_examples() {
        let ou = NoiseModel::exp_corr_gauss(1.0, 2.0).unwrap();
        assert_abs_diff_eq!(
            ou.correlation_function(2.0).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(ou.correlation_function(0.0).unwrap(), 1.0);
        assert_eq!(
            NoiseModel::static_gauss(3.0)
                .unwrap()
                .correlation_function(7.0)
                .unwrap(),
            9.0
        );
        let w = NoiseModel::white(1.0).unwrap();
        assert_eq!(w.correlation_function(0.0), Err(CpfError::DeltaSingular));
        assert_eq!(w.correlation_function(0.5).unwrap(), 0.0);
        assert!(matches!(
            NoiseModel::static_lorentz(1.0, 0.0)
                .unwrap()
                .correlation_function(1.0),
            Err(CpfError::Undefined(_))
        ));
    }

    #[test]
    fn first_moment_examples() {
        for m in all_models() {
            assert_eq!(m.first_moment(0.0).unwrap(), 1.0);
        }
        assert_abs_diff_eq!(
            NoiseModel::white(1.0).unwrap().first_moment(0.5).unwrap(),
            0.36788,
            epsilon = 1e-5
        );
        assert_abs_diff_eq!(
            NoiseModel::static_lorentz(1.0, 0.0)
                .unwrap()
                .first_moment(2.0)
                .unwrap(),
            0.13534,
            epsilon = 1e-5
        );
        assert!(NoiseModel::white(1.0).unwrap().first_moment(-1.0).is_err());
    }

    #[test]
    fn joint_moment_examples() {
        assert_abs_diff_eq!(
            NoiseModel::white(1.0)
                .unwrap()
                .joint_moment(0.3, 0.2)
                .unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-15
        );
        let sg = NoiseModel::static_gauss(1.0).unwrap();
        assert_abs_diff_eq!(
            sg.joint_moment(0.5, 0.5).unwrap(),
            ((-2.0f64).exp() + 1.0) / 2.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(sg.joint_moment(0.5, 0.5).unwrap(), 0.56767, epsilon = 1e-5);
        for m in all_models() {
            for t in [0.0, 0.3, 1.7] {
                assert_abs_diff_eq!(
                    m.joint_moment(t, 0.0).unwrap(),
                    m.first_moment(t).unwrap(),
                    epsilon = 1e-14
                );
                assert_abs_diff_eq!(
                    m.joint_moment(0.0, t).unwrap(),
                    m.first_moment(t).unwrap(),
                    epsilon = 1e-14
                );
            }
        }
    }

    /// Brute-force Gaussian average of cos(2ξt)cos(2ξτ), independent of the
    /// closed form; this also settles the factor 1/2 on the joint moment.
    #[test]
    fn static_gauss_joint_by_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 2_000_000;
        let (t, tau) = (0.5, 0.5);
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let xi: f64 = rng.sample(rand_distr::StandardNormal);
            let v = (2.0 * xi * t).cos() * (2.0 * xi * tau).cos();
            sum += v;
            sum2 += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
        let exact = NoiseModel::static_gauss(1.0)
            .unwrap()
            .joint_moment(t, tau)
            .unwrap();
        assert!(
            (mean - exact).abs() < 4.0 * se,
            "{mean} vs {exact} (se {se})"
        );
        let unhalved = printed::static_gauss_joint_unhalved(1.0, t, tau);
        assert!((mean - unhalved).abs() > 100.0 * se);
        assert!(unhalved > 1.0);
    }

    #[test]
    fn cpf_examples() {
        let w = NoiseModel::white(0.7).unwrap();
        for t in [0.0, 0.1, 1.0, 5.0] {
            for tau in [0.0, 0.4, 3.0] {
                assert_eq!(w.cpf(t, tau).unwrap(), 0.0);
            }
        }
        let l = NoiseModel::static_lorentz(1.0, 0.0).unwrap();
        assert_abs_diff_eq!(
            l.cpf(1.0, 1.0).unwrap(),
            (1.0 - (-2.0f64).exp()) / 2.0,
            epsilon = 1e-15
        );
        let sg = NoiseModel::static_gauss(1.0).unwrap();
        assert_abs_diff_eq!(sg.cpf(10.0, 10.0).unwrap(), 0.5, epsilon = 1e-12);
        for m in all_models() {
            assert_abs_diff_eq!(m.cpf(1.3, 0.0).unwrap(), 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(m.cpf(0.0, 1.3).unwrap(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn conditional_coherence_examples() {
        let w = NoiseModel::white(1.0).unwrap();
        for yx in Outcome::BOTH {
            assert_abs_diff_eq!(
                w.conditional_coherence(5.0, 0.5, yx).unwrap(),
                (-1.0f64).exp(),
                epsilon = 1e-15
            );
        }
        for m in all_models() {
            assert_abs_diff_eq!(
                m.conditional_coherence(0.7, 0.0, Outcome::Plus).unwrap(),
                1.0,
                epsilon = 1e-15
            );
        }
        let l = NoiseModel::static_lorentz(1.0, 0.0).unwrap();
        let c = l.conditional_coherence(1.0, 1.0, Outcome::Plus).unwrap();
        let e1 = (-1.0f64).exp();
        assert_abs_diff_eq!(
            c,
            (e1 + ((-2.0f64).exp() + 1.0) / 2.0) / (1.0 + e1),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(c, 0.68394, epsilon = 1e-5);
        assert_eq!(
            l.conditional_coherence(0.0, 1.0, Outcome::Minus),
            Err(CpfError::ZeroProbabilityPostselection)
        );
    }

    #[test]
    fn rate_examples() {
        assert_eq!(
            NoiseModel::white(1.5).unwrap().dephasing_rate(3.3).unwrap(),
            3.0
        );
        assert_eq!(
            NoiseModel::static_gauss(1.0)
                .unwrap()
                .dephasing_rate(0.0)
                .unwrap(),
            0.0
        );
        let ou = NoiseModel::exp_corr_gauss(1.0, 1.0).unwrap();
        let r = ou.dephasing_rate(1.0).unwrap();
        assert_abs_diff_eq!(r, 4.0 * (1.0 - (-1.0f64).exp()), epsilon = 1e-15);
        assert_abs_diff_eq!(r, 2.5285, epsilon = 1e-4);
        let h = 1e-6;
        let fd = -((ou.first_moment(1.0 + h).unwrap()).ln()
            - (ou.first_moment(1.0 - h).unwrap()).ln())
            / (2.0 * h);
        assert_relative_eq!(fd, r, max_relative = 1e-6);
    }

    #[test]
    fn rate_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-6;
        let models = [
            NoiseModel::white(0.8).unwrap(),
            NoiseModel::static_gauss(1.2).unwrap(),
            NoiseModel::exp_corr_gauss(0.9, 0.6).unwrap(),
            NoiseModel::static_lorentz(0.5, 0.0).unwrap(),
        ];
        for m in models {
            for _ in 0..20 {
                let t: f64 = rng.random_range(0.05..2.0);
                let fd = -(m.first_moment(t + h).unwrap().ln()
                    - m.first_moment(t - h).unwrap().ln())
                    / (2.0 * h);
                assert_relative_eq!(fd, m.dephasing_rate(t).unwrap(), max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn ou_limits() {
        for t in [0.5, 1.0, 2.0] {
            let gamma_w: f64 = 1.0;
            let tau_c = 1e-4 * t;
            let g = (gamma_w / (2.0 * tau_c)).sqrt();
            let ou = NoiseModel::exp_corr_gauss(g, tau_c).unwrap();
            let diff = (ou.first_moment(t).unwrap() - (-2.0 * gamma_w * t).exp()).abs();
            assert!(diff < 1e-3, "white limit t={t}: {diff}");

            let ou = NoiseModel::exp_corr_gauss(1.0, 1e4 * t).unwrap();
            let sg = NoiseModel::static_gauss(1.0).unwrap();
            assert!((ou.first_moment(t).unwrap() - sg.first_moment(t).unwrap()).abs() < 1e-3);
            for tau in [0.25, t, 1.5] {
                let d = (ou.joint_moment(t, tau).unwrap() - sg.joint_moment(t, tau).unwrap()).abs();
                assert!(d < 1e-3, "static limit t={t} tau={tau}: {d}");
            }
        }
    }

    #[test]
    fn ou_cpf_nonnegative_and_bounded() {
        for tau_c in [0.2, 1.0, 5.0, 100.0] {
            let m = NoiseModel::exp_corr_gauss(1.0, tau_c).unwrap();
            for i in 0..30 {
                for j in 0..30 {
                    let (t, tau) = (i as f64 * 0.1, j as f64 * 0.1);
                    let ms = m.moments(t, tau).unwrap();
                    assert!(ms.f_joint >= ms.f_t * ms.f_tau);
                    assert!(ms.f_joint.abs() <= 1.0);
                    assert!(m.cpf(t, tau).unwrap() >= 0.0);
                }
            }
        }
    }

    #[test]
    fn first_moment_strictly_decreasing() {
        for m in all_models() {
            let mut prev = m.first_moment(0.0).unwrap();
            for i in 1..200 {
                let f = m.first_moment(i as f64 * 0.02).unwrap();
                assert!(f < prev, "{m:?} at step {i}");
                prev = f;
            }
        }
    }

    #[test]
    fn printed_lorentz_coherence_exceeds_one() {
        let c = printed::lorentz_conditional_coherence_unhalved(1.0, 1.0, 1.0, 1.0);
        assert!(c > 1.0);
    }
}
