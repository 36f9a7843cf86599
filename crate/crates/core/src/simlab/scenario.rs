//! The four simulation settings: few strong signals, distributed weak
//! signals, screening with external data, and conservative nulls.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimators::PValueBatch;
use crate::numerics::RandomStream;

use super::mixture::{shifted_pvalue, NullDist};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioId {
    A,
    B,
    C,
    D,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 4] = [ScenarioId::A, ScenarioId::B, ScenarioId::C, ScenarioId::D];
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScenarioId::A => "a",
            ScenarioId::B => "b",
            ScenarioId::C => "c",
            ScenarioId::D => "d",
        };
        f.write_str(s)
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(ScenarioId::A),
            "b" => Ok(ScenarioId::B),
            "c" => Ok(ScenarioId::C),
            "d" => Ok(ScenarioId::D),
            other => Err(Error::InvalidInput(format!("unknown scenario `{other}` (expected a, b, c or d)"))),
        }
    }
}

/// How non-null p-values are generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Signal {
    /// Every non-null has shift μ.
    Constant(f64),
    /// Non-null i (1-based) has shift max·i/n₁.
    Ramp { max: f64 },
    /// Two independent batches; hypotheses whose first-batch p-value is at
    /// most `cutoff` are kept and reported with their second-batch p-value.
    Screened { first: f64, second: f64, cutoff: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    /// Hypotheses generated (before screening).
    pub n: usize,
    /// True nulls among them; nulls come first.
    pub n0: usize,
    pub null: NullDist,
    pub signal: Signal,
}

impl ScenarioSpec {
    pub fn standard(id: ScenarioId) -> Self {
        match id {
            ScenarioId::A => Self { id, n: 500, n0: 450, null: NullDist::Uniform, signal: Signal::Constant(2.0) },
            ScenarioId::B => Self { id, n: 500, n0: 100, null: NullDist::Uniform, signal: Signal::Ramp { max: 1.5 } },
            ScenarioId::C => Self {
                id,
                n: 10_000,
                n0: 9_000,
                null: NullDist::Uniform,
                signal: Signal::Screened { first: 1.5, second: 1.0, cutoff: 0.05 },
            },
            ScenarioId::D => {
                Self { id, n: 500, n0: 250, null: NullDist::Beta { a: 3, b: 1 }, signal: Signal::Constant(2.0) }
            }
        }
    }

    /// The standard setting resized to n hypotheses, keeping the null fraction.
    pub fn scaled(id: ScenarioId, n: usize) -> Result<Self> {
        let base = Self::standard(id);
        if n == 0 {
            return Err(Error::InvalidInput("scenario size must be positive".into()));
        }
        let n0 = ((base.n0 as f64 / base.n as f64) * n as f64).round() as usize;
        let spec = Self { n, n0, ..base };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n0 > self.n {
            return Err(Error::InvalidInput(format!("need 0 ≤ n₀ ≤ n and n > 0, got n={}, n₀={}", self.n, self.n0)));
        }
        let finite = match self.signal {
            Signal::Constant(mu) => mu.is_finite(),
            Signal::Ramp { max } => max.is_finite(),
            Signal::Screened { first, second, cutoff } => {
                first.is_finite() && second.is_finite() && cutoff > 0.0 && cutoff <= 1.0
            }
        };
        if !finite {
            return Err(Error::InvalidInput(format!("bad signal parameters {:?}", self.signal)));
        }
        Ok(())
    }

    pub fn n1(&self) -> usize {
        self.n - self.n0
    }
}

/// Draws one labeled batch (labels mark true nulls).
pub fn sample_scenario(spec: &ScenarioSpec, stream: &mut RandomStream) -> Result<PValueBatch> {
    spec.validate()?;
    let n1 = spec.n1();
    let mut labels: Vec<bool> = (0..spec.n).map(|i| i < spec.n0).collect();
    let pvalues: Vec<f64> = match spec.signal {
        Signal::Constant(mu) => (0..spec.n)
            .map(|i| if i < spec.n0 { spec.null.sample(stream) } else { shifted_pvalue(stream.standard_normal(), mu) })
            .collect(),
        Signal::Ramp { max } => (0..spec.n)
            .map(|i| {
                if i < spec.n0 {
                    spec.null.sample(stream)
                } else {
                    let rank = i - spec.n0 + 1;
                    shifted_pvalue(stream.standard_normal(), max * rank as f64 / n1 as f64)
                }
            })
            .collect(),
        Signal::Screened { first, second, cutoff } => {
            let draw = |stream: &mut RandomStream, shift: f64| -> Vec<f64> {
                (0..spec.n)
                    .map(|i| if i < spec.n0 { spec.null.sample(stream) } else { shifted_pvalue(stream.standard_normal(), shift) })
                    .collect()
            };
            let screen = draw(stream, first);
            let report = draw(stream, second);
            let keep: Vec<usize> = (0..spec.n).filter(|&i| screen[i] <= cutoff).collect();
            if keep.is_empty() {
                return Err(Error::Degenerate("no hypothesis passed the screening step".into()));
            }
            labels = keep.iter().map(|&i| labels[i]).collect();
            keep.iter().map(|&i| report[i]).collect()
        }
    };
    PValueBatch::with_labels(pvalues, labels)
}
