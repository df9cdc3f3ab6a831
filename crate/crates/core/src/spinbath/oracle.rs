//! Dense statevector replay of the three-measurement protocol.
//!
//! Basis index bit 0 is the qubit (`0 = |+>`, `1 = |->`, the σz eigenstates);
//! bit `k + 1` is bath spin `k` (`0 = ↑`, `1 = ↓`). Evolution is the diagonal
//! unitary giving phase `e^{+i g_k s_k t}` to qubit branch `+` and spin
//! orientation `s_k = ±1`, and the conjugate phase to branch `-`, so that the
//! branch overlap is `c_t = Π_k (|α_k|² e^{+2i g_k t} + |β_k|² e^{-2i g_k t})`.

use num_complex::Complex64;

use super::SpinBathSpec;
use crate::error::{ensure_time, CpfError, Result};
use crate::protocol::{CpfProbabilityTable, Outcome};

/// Largest bath the oracle accepts (state dimension `2^(N+1)`).
pub const MAX_ORACLE_SPINS: usize = 14;

const ZERO_PROBABILITY: f64 = 1e-12;

/// Initial qubit amplitudes on `|+>` and `|->`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemInit {
    pub a: Complex64,
    pub b: Complex64,
}

impl SystemInit {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        let norm = a.norm_sqr() + b.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(CpfError::InvalidParameter(format!(
                "|a|^2 + |b|^2 = {norm}"
            )));
        }
        Ok(Self { a, b })
    }

    /// The qubit starts in `|+>`.
    pub fn plus() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
        }
    }
}

/// Sign of the propagator phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseConvention {
    /// Branch `+` with spin up picks up `e^{+i g t}`.
    #[default]
    Standard,
    /// Every phase conjugated.
    Conjugate,
}

/// How the diagonal propagator is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PropagatorPath {
    /// One phase per basis state from the total energy.
    #[default]
    Diagonal,
    /// One two-body phase gate per bath spin.
    PerSpin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OracleOptions {
    pub convention: PhaseConvention,
    pub path: PropagatorPath,
}

struct DenseState {
    n_spins: usize,
    amps: Vec<Complex64>,
}

#[inline]
fn qubit_sign(idx: usize) -> f64 {
    if idx & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
fn spin_sign(idx: usize, k: usize) -> f64 {
    if (idx >> (k + 1)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl DenseState {
    fn product(spec: &SpinBathSpec, init: &SystemInit) -> Self {
        let n = spec.n_spins();
        let dim = 1usize << (n + 1);
        let mut amps = Vec::with_capacity(dim);
        for idx in 0..dim {
            let mut amp = if idx & 1 == 0 { init.a } else { init.b };
            for k in 0..n {
                amp *= if spin_sign(idx, k) > 0.0 {
                    spec.alphas()[k]
                } else {
                    spec.betas()[k]
                };
            }
            amps.push(amp);
        }
        Self { n_spins: n, amps }
    }

    fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn normalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        self.amps.iter_mut().for_each(|a| *a /= norm);
    }

    /// Applies `Π_{x=o}` to the qubit and returns the squared norm left.
    fn project(&mut self, o: Outcome) -> f64 {
        let s = o.sign();
        for pair in self.amps.chunks_exact_mut(2) {
            let p = 0.5 * (pair[0] + s * pair[1]);
            pair[0] = p;
            pair[1] = s * p;
        }
        self.norm_sqr()
    }

    fn evolve(&mut self, spec: &SpinBathSpec, dt: f64, opts: &OracleOptions) {
        let sign = match opts.convention {
            PhaseConvention::Standard => 1.0,
            PhaseConvention::Conjugate => -1.0,
        };
        let g = spec.couplings();
        match opts.path {
            PropagatorPath::Diagonal => {
                for (idx, amp) in self.amps.iter_mut().enumerate() {
                    let energy: f64 = (0..self.n_spins).map(|k| g[k] * spin_sign(idx, k)).sum();
                    *amp *= Complex64::from_polar(1.0, sign * qubit_sign(idx) * energy * dt);
                }
            }
            PropagatorPath::PerSpin => {
                for (k, &gk) in g.iter().enumerate() {
                    let gate = Complex64::from_polar(1.0, sign * gk * dt);
                    let gate_conj = gate.conj();
                    for (idx, amp) in self.amps.iter_mut().enumerate() {
                        *amp *= if qubit_sign(idx) * spin_sign(idx, k) > 0.0 {
                            gate
                        } else {
                            gate_conj
                        };
                    }
                }
            }
        }
    }

    /// `<+|ρ_S|->` after tracing out the bath.
    fn qubit_coherence(&self) -> Complex64 {
        self.amps.chunks_exact(2).map(|p| p[0] * p[1].conj()).sum()
    }
}

fn check(spec: &SpinBathSpec, t: f64, tau: f64) -> Result<()> {
    if spec.n_spins() > MAX_ORACLE_SPINS {
        return Err(CpfError::BathTooLarge {
            n: spec.n_spins(),
            max: MAX_ORACLE_SPINS,
        });
    }
    ensure_time(t, "t")?;
    ensure_time(tau, "tau")?;
    Ok(())
}

/// Exact `P(z, x | y)` by direct simulation of measure-evolve-measure-evolve-measure.
pub fn oracle_protocol(
    spec: &SpinBathSpec,
    init: &SystemInit,
    t: f64,
    tau: f64,
    y: Outcome,
) -> Result<CpfProbabilityTable> {
    oracle_protocol_with(spec, init, t, tau, y, &OracleOptions::default())
}

pub fn oracle_protocol_with(
    spec: &SpinBathSpec,
    init: &SystemInit,
    t: f64,
    tau: f64,
    y: Outcome,
    opts: &OracleOptions,
) -> Result<CpfProbabilityTable> {
    check(spec, t, tau)?;
    let initial = DenseState::product(spec, init);
    // joint[z][x] = P(x) P(y|x) P(z|y,x)
    let mut joint = [[0.0; 2]; 2];
    for x in Outcome::BOTH {
        let mut psi = DenseState {
            n_spins: initial.n_spins,
            amps: initial.amps.clone(),
        };
        let p_x = psi.project(x);
        if p_x <= ZERO_PROBABILITY {
            continue;
        }
        psi.normalize();
        psi.evolve(spec, t, opts);
        let p_y_given_x = psi.project(y);
        if p_y_given_x <= ZERO_PROBABILITY {
            continue;
        }
        psi.normalize();
        psi.evolve(spec, tau, opts);
        for z in Outcome::BOTH {
            let mut branch = DenseState {
                n_spins: psi.n_spins,
                amps: psi.amps.clone(),
            };
            let p_z = branch.project(z);
            joint[z.index()][x.index()] = p_x * p_y_given_x * p_z;
        }
    }
    let p_y: f64 = joint.iter().flatten().sum();
    if p_y <= ZERO_PROBABILITY {
        return Err(CpfError::ZeroProbabilityPostselection);
    }
    CpfProbabilityTable::from_entries(y, joint.map(|row| row.map(|p| p / p_y)))
}

/// Qubit coherence after the first measurement (outcome `x`) and time `t`,
/// normalized to its value right after the measurement.
pub fn oracle_coherence(
    spec: &SpinBathSpec,
    init: &SystemInit,
    t: f64,
    x: Outcome,
) -> Result<Complex64> {
    check(spec, t, 0.0)?;
    let mut psi = DenseState::product(spec, init);
    if psi.project(x) <= ZERO_PROBABILITY {
        return Err(CpfError::ZeroProbabilityPostselection);
    }
    psi.normalize();
    let start = psi.qubit_coherence();
    psi.evolve(spec, t, &OracleOptions::default());
    Ok(psi.qubit_coherence() / start)
}

/// Qubit coherence a time `tau` after the second measurement, given outcomes
/// `x` then `y`, normalized to its value right after the second measurement.
pub fn oracle_conditional_coherence(
    spec: &SpinBathSpec,
    init: &SystemInit,
    t: f64,
    tau: f64,
    x: Outcome,
    y: Outcome,
) -> Result<Complex64> {
    check(spec, t, tau)?;
    let opts = OracleOptions::default();
    let mut psi = DenseState::product(spec, init);
    if psi.project(x) <= ZERO_PROBABILITY {
        return Err(CpfError::ZeroProbabilityPostselection);
    }
    psi.normalize();
    psi.evolve(spec, t, &opts);
    if psi.project(y) <= ZERO_PROBABILITY {
        return Err(CpfError::ZeroProbabilityPostselection);
    }
    psi.normalize();
    let start = psi.qubit_coherence();
    psi.evolve(spec, tau, &opts);
    Ok(psi.qubit_coherence() / start)
}
