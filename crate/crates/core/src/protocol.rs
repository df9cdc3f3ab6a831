//! Protocol-level types for the three-measurement sequence x -> y -> z and the
//! model-independent algebra that turns dephasing moments into conditional
//! probabilities and the past-future correlation.
//!
//! All three measurements project onto the eigenstates of the qubit's x-axis
//! and the observables are the outcomes themselves, so `O_x = x`, `O_z = z`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_time, CpfError, Result};

/// Tolerance used to reject probabilities outside `[0, 1]`.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// Result of a projective measurement along x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    #[inline]
    pub fn value(self) -> i64 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    #[inline]
    pub fn flip(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    /// Product of two outcomes, itself an outcome.
    #[inline]
    pub fn times(self, other: Outcome) -> Outcome {
        if self == other {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    #[inline]
    pub(crate) fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }
}

impl TryFrom<i64> for Outcome {
    type Error = CpfError;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(CpfError::InvalidOutcome(other)),
        }
    }
}

impl From<Outcome> for i64 {
    fn from(o: Outcome) -> i64 {
        o.value()
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Plus => f.write_str("+1"),
            Outcome::Minus => f.write_str("-1"),
        }
    }
}

/// Outcomes of the three measurements, in time order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OutcomeTriple {
    pub x: Outcome,
    pub y: Outcome,
    pub z: Outcome,
}

/// The two inter-measurement intervals: `t` between x and y, `tau` between y and z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimePair {
    t: f64,
    tau: f64,
}

impl TimePair {
    pub fn new(t: f64, tau: f64) -> Result<Self> {
        Ok(Self {
            t: ensure_time(t, "t")?,
            tau: ensure_time(tau, "tau")?,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Dephasing moments of a model at a pair of intervals.
///
/// `f_t` is the first-interval factor f(t), `f_tau` the second-interval factor
/// f'(tau) and `f_joint` the cross moment f(t, tau).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub f_t: f64,
    pub f_tau: f64,
    pub f_joint: f64,
}

impl MomentSet {
    pub fn new(f_t: f64, f_tau: f64, f_joint: f64) -> Result<Self> {
        let m = Self {
            f_t,
            f_tau,
            f_joint,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.f_t, "f_t"),
            (self.f_tau, "f_tau"),
            (self.f_joint, "f_joint"),
        ] {
            ensure_finite(v, name)?;
            if v.abs() > 1.0 + PROBABILITY_TOLERANCE {
                return Err(CpfError::InvalidMomentSet(format!(
                    "{name} = {v} outside [-1, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Conditional probabilities `P(z, x | y)` for a fixed middle outcome `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpfProbabilityTable {
    y: Outcome,
    // entries[z.index()][x.index()]
    entries: [[f64; 2]; 2],
}

impl CpfProbabilityTable {
    /// Builds a table from raw entries indexed `[z][x]` (Plus = 0, Minus = 1).
    pub fn from_entries(y: Outcome, entries: [[f64; 2]; 2]) -> Result<Self> {
        let mut total = 0.0;
        for row in &entries {
            for &p in row {
                ensure_finite(p, "probability")?;
                if !(-PROBABILITY_TOLERANCE..=1.0 + PROBABILITY_TOLERANCE).contains(&p) {
                    return Err(CpfError::InvalidMomentSet(format!(
                        "probability {p} outside [0, 1]"
                    )));
                }
                total += p;
            }
        }
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(CpfError::InvalidMomentSet(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { y, entries })
    }

    pub fn y(&self) -> Outcome {
        self.y
    }

    /// `P(z, x | y)`.
    pub fn entry(&self, z: Outcome, x: Outcome) -> f64 {
        self.entries[z.index()][x.index()]
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.entries
    }

    /// Retrodicted `P(x | y)`.
    pub fn marginal_x(&self, x: Outcome) -> f64 {
        self.entries[0][x.index()] + self.entries[1][x.index()]
    }

    /// Predicted `P(z | y)`.
    pub fn marginal_z(&self, z: Outcome) -> f64 {
        self.entries[z.index()][0] + self.entries[z.index()][1]
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().flatten().sum()
    }

    /// Same probabilities expressed for the opposite middle outcome with
    /// `x -> -x` and `z -> -z`.
    pub fn relabeled(&self) -> Self {
        let e = self.entries;
        Self {
            y: self.y.flip(),
            entries: [[e[1][1], e[1][0]], [e[0][1], e[0][0]]],
        }
    }
}

/// `f(t, tau) - f(t) f'(tau)`.
pub fn cpf_from_moments(m: &MomentSet) -> Result<f64> {
    ensure_finite(m.f_t, "f_t")?;
    ensure_finite(m.f_tau, "f_tau")?;
    ensure_finite(m.f_joint, "f_joint")?;
    Ok(m.f_joint - m.f_t * m.f_tau)
}

/// `P(z, x | y) = [1 + xy f(t) + zy f'(tau) + zx f(t, tau)] / 4`.
pub fn cpf_probability_table(m: &MomentSet, y: Outcome) -> Result<CpfProbabilityTable> {
    m.validate()?;
    let ys = y.sign();
    let mut entries = [[0.0; 2]; 2];
    for z in Outcome::BOTH {
        for x in Outcome::BOTH {
            // Grouped as (1 + s f_t) + r (f_tau + s f_joint) with s = xy,
            // r = zy, so entries that vanish at t = 0 or tau = 0 cancel exactly.
            let (s, r) = (x.sign() * ys, z.sign() * ys);
            entries[z.index()][x.index()] =
                0.25 * ((1.0 + s * m.f_t) + r * (m.f_tau + s * m.f_joint));
        }
    }
    CpfProbabilityTable::from_entries(y, entries)
}

/// `sum_{z,x} [P(z,x|y) - P(z|y) P(x|y)] z x`.
pub fn cpf_from_table(tbl: &CpfProbabilityTable) -> f64 {
    let mut acc = 0.0;
    for z in Outcome::BOTH {
        for x in Outcome::BOTH {
            acc += (tbl.entry(z, x) - tbl.marginal_z(z) * tbl.marginal_x(x)) * z.sign() * x.sign();
        }
    }
    acc
}

/// A Monte Carlo value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64, n_samples: u64) -> Result<Self> {
        ensure_finite(value, "estimate value")?;
        if std_error.is_nan() || std_error < 0.0 {
            return Err(CpfError::InvalidParameter(format!(
                "std_error = {std_error}"
            )));
        }
        if n_samples == 0 {
            return Err(CpfError::InvalidParameter("n_samples must be >= 1".into()));
        }
        Ok(Self {
            value,
            std_error,
            n_samples,
        })
    }

    /// Distance to `expected` in units of the standard error. Zero-error
    /// estimates give 0 on exact agreement and infinity otherwise.
    pub fn z_score(&self, expected: f64) -> f64 {
        let d = (self.value - expected).abs();
        if d == 0.0 {
            0.0
        } else if self.std_error == 0.0 {
            f64::INFINITY
        } else {
            d / self.std_error
        }
    }

    pub fn within_sigma(&self, expected: f64, k: f64) -> bool {
        self.z_score(expected) <= k
    }

    /// Normalized difference of two independent-error estimates.
    pub fn combined_z(&self, other: &Estimate) -> f64 {
        let d = (self.value - other.value).abs();
        let s = self.std_error.hypot(other.std_error);
        if d == 0.0 {
            0.0
        } else if s == 0.0 {
            f64::INFINITY
        } else {
            d / s
        }
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.6} ± {:.2e} (n={})",
            self.value, self.std_error, self.n_samples
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodTag {
    Analytic,
    MonteCarlo,
    Oracle,
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodTag::Analytic => "analytic",
            MethodTag::MonteCarlo => "montecarlo",
            MethodTag::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceValues {
    Exact(Vec<f64>),
    Estimated(Vec<Estimate>),
}

/// CPF values tabulated on a `(t, tau)` grid, row-major in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpfSurface {
    t_grid: Vec<f64>,
    tau_grid: Vec<f64>,
    values: SurfaceValues,
    pub model_tag: String,
    pub method_tag: MethodTag,
}

fn check_grid(grid: &[f64], name: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(CpfError::InvalidParameter(format!("{name} grid is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(CpfError::InvalidParameter(format!(
            "{name} grid has non-finite entries"
        )));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CpfError::InvalidParameter(format!(
            "{name} grid not strictly increasing"
        )));
    }
    Ok(())
}

impl CpfSurface {
    pub fn new(
        t_grid: Vec<f64>,
        tau_grid: Vec<f64>,
        values: SurfaceValues,
        model_tag: impl Into<String>,
        method_tag: MethodTag,
    ) -> Result<Self> {
        check_grid(&t_grid, "t")?;
        check_grid(&tau_grid, "tau")?;
        let len = match &values {
            SurfaceValues::Exact(v) => v.len(),
            SurfaceValues::Estimated(v) => v.len(),
        };
        if len != t_grid.len() * tau_grid.len() {
            return Err(CpfError::GridMismatch(format!(
                "{len} values for a {}x{} grid",
                t_grid.len(),
                tau_grid.len()
            )));
        }
        Ok(Self {
            t_grid,
            tau_grid,
            values,
            model_tag: model_tag.into(),
            method_tag,
        })
    }

    /// Evaluates a deterministic function on every grid point.
    pub fn tabulate<F>(
        t_grid: Vec<f64>,
        tau_grid: Vec<f64>,
        model_tag: impl Into<String>,
        method_tag: MethodTag,
        mut f: F,
    ) -> Result<Self>
    where
        F: FnMut(f64, f64) -> Result<f64>,
    {
        let mut values = Vec::with_capacity(t_grid.len() * tau_grid.len());
        for &t in &t_grid {
            for &tau in &tau_grid {
                values.push(f(t, tau)?);
            }
        }
        Self::new(
            t_grid,
            tau_grid,
            SurfaceValues::Exact(values),
            model_tag,
            method_tag,
        )
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn tau_grid(&self) -> &[f64] {
        &self.tau_grid
    }

    pub fn values(&self) -> &SurfaceValues {
        &self.values
    }

    /// Point value at grid indices `(i, j)`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        let k = i * self.tau_grid.len() + j;
        match &self.values {
            SurfaceValues::Exact(v) => v[k],
            SurfaceValues::Estimated(v) => v[k].value,
        }
    }
}
