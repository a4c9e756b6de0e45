//! Machine-readable verification records.

use serde::{Deserialize, Serialize};

use crate::dyadic::StepFunction;
use crate::scalar::{Scalar, ScalarMode};

/// Relative tolerance for identities checked in floating point.
pub const FLOAT_IDENTITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Exact,
    Bound,
    ReportOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Info,
}

/// One verified statement.
///
/// For bounds, `slack = (bound - measured) / bound`, so a passing check has
/// slack in `[0, 1]` and a violation has negative slack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub kind: CheckKind,
    pub status: CheckStatus,
    pub measured: f64,
    pub bound: Option<f64>,
    pub slack: Option<f64>,
    pub citation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRecord {
    pub fn bound(name: impl Into<String>, measured: f64, bound: f64, citation: &str) -> Self {
        Self::bound_with_tol(name, measured, bound, 0.0, citation)
    }

    /// Passes when `measured ≤ bound (1 + rel_tol)`.
    pub fn bound_with_tol(
        name: impl Into<String>,
        measured: f64,
        bound: f64,
        rel_tol: f64,
        citation: &str,
    ) -> Self {
        let ok = measured.is_finite() && measured <= bound * (1.0 + rel_tol);
        CheckRecord {
            name: name.into(),
            kind: CheckKind::Bound,
            status: if ok {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            measured,
            bound: Some(bound),
            slack: Some(if bound != 0.0 {
                (bound - measured) / bound
            } else {
                -measured
            }),
            citation: citation.to_string(),
            detail: None,
        }
    }

    pub fn report(name: impl Into<String>, measured: f64, citation: &str) -> Self {
        CheckRecord {
            name: name.into(),
            kind: CheckKind::ReportOnly,
            status: CheckStatus::Info,
            measured,
            bound: None,
            slack: None,
            citation: citation.to_string(),
            detail: None,
        }
    }

    /// A predicate that either holds or not; `measured` carries a residual.
    pub fn exact(name: impl Into<String>, holds: bool, measured: f64, citation: &str) -> Self {
        CheckRecord {
            name: name.into(),
            kind: CheckKind::Exact,
            status: if holds {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            measured,
            bound: None,
            slack: None,
            citation: citation.to_string(),
            detail: None,
        }
    }

    /// Compares two step functions cellwise. In rational mode the check
    /// passes only on exact equality; in float mode the largest difference
    /// must stay below `FLOAT_IDENTITY_TOL` relative to the larger side.
    pub fn identity<S: Scalar>(
        name: impl Into<String>,
        lhs: &StepFunction<S>,
        rhs: &StepFunction<S>,
        citation: &str,
    ) -> Self {
        let mut worst = S::zero();
        let mut scale = S::zero();
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            worst = worst.max_of((a.clone() - b).abs());
            scale = scale.max_of(a.abs()).max_of(b.abs());
        }
        let residual = worst.to_f64();
        let holds = lhs.model() == rhs.model()
            && match S::MODE {
                ScalarMode::Rational => worst.is_zero(),
                ScalarMode::Float => residual <= FLOAT_IDENTITY_TOL * scale.to_f64().max(1.0),
            };
        Self::exact(name, holds, residual, citation)
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub seed: Option<u64>,
    pub mode: ScalarMode,
    pub checks: Vec<CheckRecord>,
    pub environment: Environment,
}

impl VerificationReport {
    pub fn new(suite: impl Into<String>, mode: ScalarMode) -> Self {
        VerificationReport {
            suite: suite.into(),
            seed: None,
            mode,
            checks: Vec::new(),
            environment: Environment::current(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckRecord::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn count(&self, status: CheckStatus) -> usize {
        self.checks.iter().filter(|c| c.status == status).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::DyadicModel;
    use crate::scalar::Exact;

    #[test]
    fn bound_slack_and_status() {
        let ok = CheckRecord::bound("x", 1.0, 4.0, "t");
        assert_eq!(ok.status, CheckStatus::Pass);
        assert_eq!(ok.slack, Some(0.75));
        let bad = CheckRecord::bound("x", 5.0, 4.0, "t");
        assert_eq!(bad.status, CheckStatus::Fail);
        assert!(CheckRecord::bound("x", f64::NAN, 4.0, "t").status == CheckStatus::Fail);
    }

    #[test]
    fn identity_is_exact_in_rational_mode() {
        let m = DyadicModel::new(1, 2).unwrap();
        let a = StepFunction::constant(m, Exact::from_ratio(1, 3));
        let b = StepFunction::constant(m, Exact::from_ratio(1, 3) + Exact::pow2(-200));
        assert!(CheckRecord::identity("eq", &a, &a, "t").passed());
        assert!(!CheckRecord::identity("neq", &a, &b, "t").passed());
        let fa = StepFunction::constant(m, 1.0);
        let fb = StepFunction::constant(m, 1.0 + 1e-13);
        assert!(CheckRecord::identity("close", &fa, &fb, "t").passed());
    }

    #[test]
    fn report_serializes_kinds() {
        let mut r = VerificationReport::new("s", ScalarMode::Rational);
        r.push(CheckRecord::report("r", 2.0, "t"));
        let j = serde_json::to_string(&r).unwrap();
        assert!(j.contains("\"report-only\"") && j.contains("\"rational\""));
        assert!(r.passed());
    }
}
