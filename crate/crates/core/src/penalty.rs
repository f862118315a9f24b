//! Scalar non-convex penalties and their proximal operators, plus the
//! row-wise lifting used for structured residuals.
//!
//! Each penalty `φ_σ` is even and non-decreasing in `|x|` with `φ_σ(0) = 0`.
//! The proximal operator is `argmin_x ½(x − v)² + φ_σ(x)`, given in closed
//! form. For MCP and SCAD the closed form is the exact global minimizer. For
//! ETP it is a firm-threshold rule that only approximates the minimizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Margin kept from the open lower bound of `tau` (MCP: 1, SCAD: 2).
const TAU_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    Mcp,
    Scad,
    Etp,
}

impl std::str::FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mcp" => Ok(PenaltyKind::Mcp),
            "scad" => Ok(PenaltyKind::Scad),
            "etp" => Ok(PenaltyKind::Etp),
            other => Err(Error::param(
                "penalty",
                format!("unknown penalty `{other}` (expected mcp, scad or etp)"),
            )),
        }
    }
}

/// A validated penalty with its shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    kind: PenaltyKind,
    /// Concavity for MCP (> 1) and SCAD (> 2). Unused by ETP.
    tau: f64,
    /// Exponential decay for ETP (> 0). Unused by MCP and SCAD.
    gamma: f64,
    /// Scale of the penalty and its threshold.
    sigma: f64,
}

impl PenaltySpec {
    pub fn mcp(sigma: f64, tau: f64) -> Result<Self> {
        Self::new(PenaltyKind::Mcp, sigma, tau, 1.0)
    }

    pub fn scad(sigma: f64, tau: f64) -> Result<Self> {
        Self::new(PenaltyKind::Scad, sigma, tau, 1.0)
    }

    pub fn etp(sigma: f64, gamma: f64) -> Result<Self> {
        Self::new(PenaltyKind::Etp, sigma, 3.0, gamma)
    }

    /// Builds a spec, rejecting parameters outside the admissible ranges.
    pub fn new(kind: PenaltyKind, sigma: f64, tau: f64, gamma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::param("sigma", format!("must be > 0, got {sigma}")));
        }
        match kind {
            PenaltyKind::Mcp if !(tau.is_finite() && tau > 1.0 + TAU_MARGIN) => {
                return Err(Error::param("tau", format!("MCP needs tau > 1, got {tau}")));
            }
            PenaltyKind::Scad if !(tau.is_finite() && tau > 2.0 + TAU_MARGIN) => {
                return Err(Error::param("tau", format!("SCAD needs tau > 2, got {tau}")));
            }
            PenaltyKind::Etp if !(gamma.is_finite() && gamma > 0.0) => {
                return Err(Error::param("gamma", format!("ETP needs gamma > 0, got {gamma}")));
            }
            _ => {}
        }
        Ok(PenaltySpec {
            kind,
            tau,
            gamma,
            sigma,
        })
    }

    /// The default shape for each family: MCP τ = 3, SCAD τ = 3.7, ETP γ = 2.
    pub fn default_for(kind: PenaltyKind, sigma: f64) -> Result<Self> {
        match kind {
            PenaltyKind::Mcp => Self::mcp(sigma, 3.0),
            PenaltyKind::Scad => Self::scad(sigma, 3.7),
            PenaltyKind::Etp => Self::etp(sigma, 2.0),
        }
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Same shape with a different scale.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.kind, sigma, self.tau, self.gamma)
    }

    /// `φ_σ(x)`.
    pub fn value(&self, x: f64) -> f64 {
        let (s, t, a) = (self.sigma, self.tau, x.abs());
        match self.kind {
            PenaltyKind::Mcp => {
                if a <= s * t {
                    s * a - a * a / (2.0 * t)
                } else {
                    s * s * t / 2.0
                }
            }
            PenaltyKind::Scad => {
                if a <= s {
                    s * a
                } else if a <= s * t {
                    (s * t * a - 0.5 * (a * a + s * s)) / (t - 1.0)
                } else {
                    s * s * (t + 1.0) / 2.0
                }
            }
            PenaltyKind::Etp => {
                let g = self.gamma;
                s * (-(-g * a).exp_m1()) / (-(-g).exp_m1())
            }
        }
    }

    /// Closed-form proximal map evaluated at `v`.
    pub fn prox(&self, v: f64) -> ProxResult {
        let (s, t, a) = (self.sigma, self.tau, v.abs());
        let magnitude = match self.kind {
            PenaltyKind::Mcp => {
                if a <= s {
                    0.0
                } else if a <= s * t {
                    t * (a - s) / (t - 1.0)
                } else {
                    a
                }
            }
            PenaltyKind::Scad => {
                if a <= s {
                    0.0
                } else if a <= 2.0 * s {
                    a - s
                } else if a <= s * t {
                    ((t - 1.0) * a - s * t) / (t - 2.0)
                } else {
                    a
                }
            }
            PenaltyKind::Etp => {
                let g = self.gamma;
                if a <= s {
                    0.0
                } else if a <= s * (1.0 + 1.0 / g) {
                    // Clamped so that gamma < 1 cannot flip the sign.
                    (a - s / g).max(0.0)
                } else {
                    a
                }
            }
        };
        let value = if v < 0.0 { -magnitude } else { magnitude };
        ProxResult {
            value,
            objective: 0.5 * (value - v) * (value - v) + self.value(value),
        }
    }

    /// Row-wise prox: scales `v` so its norm becomes `prox(‖v‖₂)`.
    pub fn prox_row(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        self.prox_row_in_place(&mut out);
        out
    }

    pub(crate) fn prox_row_in_place(&self, v: &mut [f64]) {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return;
        }
        let scale = self.prox(norm).value / norm;
        v.iter_mut().for_each(|x| *x *= scale);
    }
}

/// Free-function form of [`PenaltySpec::value`].
pub fn phi_value(spec: &PenaltySpec, x: f64) -> f64 {
    spec.value(x)
}

/// Free-function form of [`PenaltySpec::prox`].
pub fn prox_scalar(spec: &PenaltySpec, v: f64) -> ProxResult {
    spec.prox(v)
}

/// Free-function form of [`PenaltySpec::prox_row`].
pub fn prox_row(spec: &PenaltySpec, v: &[f64]) -> Vec<f64> {
    spec.prox_row(v)
}

/// Minimizer returned by a proximal map with its objective value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxResult {
    pub value: f64,
    /// `½(value − v)² + φ_σ(value)`.
    pub objective: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn phi_examples() {
        let mcp = PenaltySpec::mcp(1.0, 2.0).unwrap();
        assert_eq!(mcp.value(0.0), 0.0);
        assert!(close(mcp.value(3.0), 1.0));
        let scad = PenaltySpec::scad(1.0, 3.0).unwrap();
        assert!(close(scad.value(5.0), 2.0));
    }

    #[test]
    fn phi_is_even_and_continuous_at_breakpoints() {
        for spec in [
            PenaltySpec::mcp(0.7, 2.5).unwrap(),
            PenaltySpec::scad(0.7, 3.7).unwrap(),
            PenaltySpec::etp(0.7, 2.0).unwrap(),
        ] {
            for x in [0.1, 0.7, 1.4, 1.75, 2.59, 10.0] {
                assert_eq!(spec.value(x), spec.value(-x));
                assert!(spec.value(x) >= 0.0);
            }
            let s = spec.sigma();
            let t = spec.tau();
            for b in [s, s * t] {
                assert!((spec.value(b - 1e-9) - spec.value(b + 1e-9)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn prox_examples() {
        let mcp = PenaltySpec::mcp(1.0, 2.0).unwrap();
        assert_eq!(mcp.prox(0.5).value, 0.0);
        assert!(close(mcp.prox(1.5).value, 1.0));
        assert_eq!(mcp.prox(3.0).value, 3.0);
        let scad = PenaltySpec::scad(1.0, 3.0).unwrap();
        assert!(close(scad.prox(2.5).value, 2.0));
        let etp = PenaltySpec::etp(1.0, 2.0).unwrap();
        assert_eq!(etp.prox(0.8).value, 0.0);
        assert!(close(etp.prox(1.2).value, 0.7));
    }

    #[test]
    fn lower_branch_wins_at_threshold() {
        let mcp = PenaltySpec::mcp(1.0, 2.0).unwrap();
        assert_eq!(mcp.prox(1.0).value, 0.0);
        let etp = PenaltySpec::etp(1.0, 2.0).unwrap();
        assert_eq!(etp.prox(1.0).value, 0.0);
        assert!(close(etp.prox(1.5).value, 1.0));
    }

    #[test]
    fn rejects_tau_near_open_bound() {
        assert!(PenaltySpec::mcp(1.0, 1.0 + 1e-7).is_err());
        assert!(PenaltySpec::scad(1.0, 2.0 + 1e-7).is_err());
        assert!(PenaltySpec::scad(1.0, 2.5).is_ok());
        assert!(PenaltySpec::etp(1.0, 0.0).is_err());
        assert!(PenaltySpec::mcp(0.0, 3.0).is_err());
    }

    #[test]
    fn prox_row_examples() {
        let mcp = PenaltySpec::mcp(1.0, 2.0).unwrap();
        assert_eq!(mcp.prox_row(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(mcp.prox_row(&[0.3, 0.4]), vec![0.0, 0.0]);
        let out = mcp.prox_row(&[0.9, 1.2]);
        assert!(close(out[0], 0.6) && close(out[1], 0.8));
    }

    #[test]
    fn parses_kind_names() {
        assert_eq!("SCAD".parse::<PenaltyKind>().unwrap(), PenaltyKind::Scad);
        assert!("l1".parse::<PenaltyKind>().is_err());
    }

    fn spec_strategy() -> impl Strategy<Value = PenaltySpec> {
        (0usize..3, 0.1..5.0f64, 0.01..4.0f64).prop_map(|(k, s, shape)| match k {
            0 => PenaltySpec::mcp(s, 1.01 + shape).unwrap(),
            1 => PenaltySpec::scad(s, 2.01 + shape).unwrap(),
            _ => PenaltySpec::etp(s, 0.1 + shape).unwrap(),
        })
    }

    proptest! {
        #[test]
        fn sign_equivariant(spec in spec_strategy(), v in -50.0..50.0f64) {
            prop_assert_eq!(spec.prox(-v).value, -spec.prox(v).value);
        }

        #[test]
        fn shrinks(spec in spec_strategy(), v in -50.0..50.0f64) {
            prop_assert!(spec.prox(v).value.abs() <= v.abs());
        }

        #[test]
        fn dead_zone(spec in spec_strategy(), frac in 0.0..=1.0f64) {
            let v = frac * spec.sigma();
            prop_assert_eq!(spec.prox(v).value, 0.0);
            prop_assert_eq!(spec.prox(-v).value, 0.0);
        }

        #[test]
        fn mcp_scad_never_worse_than_zero(spec in spec_strategy(), v in -50.0..50.0f64) {
            prop_assume!(spec.kind() != PenaltyKind::Etp);
            prop_assert!(spec.prox(v).objective <= 0.5 * v * v + 1e-12);
        }

        #[test]
        fn row_prox_preserves_direction(
            spec in spec_strategy(),
            v in proptest::collection::vec(-10.0..10.0f64, 1..6),
        ) {
            let out = spec.prox_row(&v);
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assume!(norm > 0.0);
            let scale = spec.prox(norm).value / norm;
            prop_assert!(scale >= 0.0);
            for (o, x) in out.iter().zip(&v) {
                prop_assert!((o - scale * x).abs() <= 1e-12 * (1.0 + x.abs()));
            }
            let out_norm: f64 = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((out_norm - spec.prox(norm).value).abs() <= 1e-9 * (1.0 + norm));
        }
    }
}
