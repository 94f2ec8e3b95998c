//! Closed-form proximal operators and projections.
//!
//! The nonsmooth parts used by this crate are drawn from a closed set of
//! shapes ([`Nonsmooth`]); the combined prox of `g2 + z·f2` needed by the
//! Lagrangian subsolver is a registry over pairs of those shapes
//! ([`CombinedProx`]) and fails loudly for anything unregistered.

use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{all_finite, norm1, norm2};
use crate::{Error, Result};

/// Slack for indicator membership after a projection: projections are exact
/// up to rounding, so indicator values are finite within this band.
const MEMBERSHIP_SLACK: f64 = 1e-9;

/// Componentwise shrinkage: the prox of `t‖·‖₁`.
pub fn soft_threshold(y: &[f64], t: f64) -> Result<Vec<f64>> {
    if !all_finite(y) {
        return Err(Error::Domain(format!("soft_threshold: non-finite input")));
    }
    if !(t > 0.0) {
        return Err(Error::Config(format!("soft_threshold: t = {t} must be > 0")));
    }
    Ok(y.iter()
        .map(|&v| v.signum() * (v.abs() - t).max(0.0))
        .collect())
}

/// Projection onto the nonnegative orthant.
pub fn project_nonneg(y: &[f64]) -> Result<Vec<f64>> {
    if !all_finite(y) {
        return Err(Error::Domain(format!("project_nonneg: non-finite input")));
    }
    Ok(y.iter().map(|&v| v.max(0.0)).collect())
}

/// Projection onto the Euclidean ball of radius `r`.
pub fn project_l2_ball(y: &[f64], r: f64) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(Error::Config(format!("project_l2_ball: r = {r} must be > 0")));
    }
    if !all_finite(y) {
        return Err(Error::Domain(format!("project_l2_ball: non-finite input")));
    }
    let n = norm2(y);
    if n <= r {
        return Ok(y.to_vec());
    }
    let s = r / n;
    Ok(y.iter().map(|&v| v * s).collect())
}

/// Euclidean projection onto the ℓ₁ ball of radius `r`.
///
/// Uses the exact finite algorithm: sort `|y|` descending and pick the unique
/// threshold θ with `Σ max(|y_i|−θ, 0) = r`. No iterative root finding.
pub fn project_l1_ball(y: &[f64], r: f64) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(Error::Config(format!("project_l1_ball: r = {r} must be > 0")));
    }
    if !all_finite(y) {
        return Err(Error::Domain(format!("project_l1_ball: non-finite input")));
    }
    if norm1(y) <= r {
        return Ok(y.to_vec());
    }
    let mut mags: Vec<f64> = y.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite magnitudes"));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cum += m;
        let cand = (cum - r) / (k + 1) as f64;
        if cand >= m {
            break;
        }
        theta = cand;
    }
    Ok(y.iter()
        .map(|&v| v.signum() * (v.abs() - theta).max(0.0))
        .collect())
}

/// Euclidean projection onto `{‖x‖₁ ≤ r1} ∩ {‖x‖₂ ≤ r2}`.
///
/// Realized as a bisection on the ℓ₁ multiplier θ: each trial point is
/// `soft(y, θ)` radially rescaled into the ℓ₂ ball, and θ is driven until the
/// ℓ₁ constraint residual vanishes. Bracket `[0, max|y_i|]`, residual
/// tolerance 1e-12 — the projection sits inside inner solver loops and must
/// be more accurate than the solver's own stationarity targets.
pub fn project_l1_l2_intersection(y: &[f64], r1: f64, r2: f64) -> Result<Vec<f64>> {
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::Config(format!(
            "project_l1_l2_intersection: radii ({r1}, {r2}) must be > 0"
        )));
    }
    if !all_finite(y) {
        return Err(Error::Domain(format!(
            "project_l1_l2_intersection: non-finite input"
        )));
    }
    let scaled_into_l2 = |x: Vec<f64>| -> Vec<f64> {
        let n = norm2(&x);
        if n <= r2 {
            x
        } else {
            let s = r2 / n;
            x.into_iter().map(|v| v * s).collect()
        }
    };
    // θ = 0: only the ℓ₂ constraint (possibly) active.
    let base = scaled_into_l2(y.to_vec());
    if norm1(&base) <= r1 + 1e-12 {
        return Ok(base);
    }
    let residual = |theta: f64| -> Result<(f64, Vec<f64>)> {
        let x = scaled_into_l2(soft_threshold(y, theta)?);
        Ok((norm1(&x) - r1, x))
    };
    let mut lo = 0.0;
    let mut hi = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // At θ = max|y_i| the soft threshold is identically zero, so the residual
    // is −r1 < 0; at θ = 0 it is > 0 from the check above. The root is
    // bracketed for every valid input.
    let (hi_res, _) = residual(hi)?;
    if !(hi_res < 0.0) {
        return Err(Error::Numerical(format!(
            "project_l1_l2_intersection: bracket failed (residual {hi_res} at upper multiplier)"
        )));
    }
    let mut best = base;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (res, x) = residual(mid)?;
        best = x;
        if res.abs() <= 1e-12 {
            return Ok(best);
        }
        if res > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    // Multiplier interval collapsed: the residual at the final midpoint is as
    // small as f64 permits for this input.
    Ok(best)
}

/// The closed set of prox-friendly nonsmooth shapes handled by this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Nonsmooth {
    /// Identically zero.
    Zero,
    /// `weight·‖x‖₁`.
    L1Norm { weight: f64 },
    /// Indicator of the nonnegative orthant.
    NonnegOrthant,
    /// Indicator of `{‖x‖₁ ≤ radius}`.
    L1Ball { radius: f64 },
    /// Indicator of `{‖x‖₂ ≤ radius}`.
    L2Ball { radius: f64 },
}

impl Nonsmooth {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Nonsmooth::Zero => "zero",
            Nonsmooth::L1Norm { .. } => "l1-norm",
            Nonsmooth::NonnegOrthant => "nonneg-orthant",
            Nonsmooth::L1Ball { .. } => "l1-ball",
            Nonsmooth::L2Ball { .. } => "l2-ball",
        }
    }

    /// Extended-real value; indicators are `+∞` outside a small membership
    /// band around their set.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Nonsmooth::Zero => 0.0,
            Nonsmooth::L1Norm { weight } => weight * norm1(x),
            Nonsmooth::NonnegOrthant => {
                let slack = MEMBERSHIP_SLACK;
                if x.iter().all(|&v| v >= -slack) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Nonsmooth::L1Ball { radius } => {
                if norm1(x) <= radius + MEMBERSHIP_SLACK * (1.0 + radius) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Nonsmooth::L2Ball { radius } => {
                if norm2(x) <= radius + MEMBERSHIP_SLACK * (1.0 + radius) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Prox of `t·ψ` at `y`.
    pub fn prox(&self, y: &[f64], t: f64) -> Result<Vec<f64>> {
        if !(t > 0.0) {
            return Err(Error::Config(format!("prox: step t = {t} must be > 0")));
        }
        match self {
            Nonsmooth::Zero => {
                if !all_finite(y) {
                    return Err(Error::Domain(format!("prox: non-finite input")));
                }
                Ok(y.to_vec())
            }
            Nonsmooth::L1Norm { weight } => soft_threshold(y, t * weight),
            Nonsmooth::NonnegOrthant => project_nonneg(y),
            Nonsmooth::L1Ball { radius } => project_l1_ball(y, *radius),
            Nonsmooth::L2Ball { radius } => project_l2_ball(y, *radius),
        }
    }

    /// Lipschitz constant of the part on its own domain (used as `l_{f2}`).
    /// Indicators are constant on their domain; the ℓ₁ norm is `w·√n`.
    pub fn lipschitz(&self, n: usize) -> f64 {
        match self {
            Nonsmooth::L1Norm { weight } => weight * (n as f64).sqrt(),
            _ => 0.0,
        }
    }
}

/// Prox-capable nonsmooth part, the `φ₂` side of a composite problem.
pub trait ProxFn {
    fn value(&self, x: &[f64]) -> f64;
    fn prox(&self, y: &[f64], t: f64) -> Result<Vec<f64>>;
}

impl ProxFn for Nonsmooth {
    fn value(&self, x: &[f64]) -> f64 {
        Nonsmooth::value(self, x)
    }
    fn prox(&self, y: &[f64], t: f64) -> Result<Vec<f64>> {
        Nonsmooth::prox(self, y, t)
    }
}

/// The combined nonsmooth part `g2 + z·f2` of the Lagrangian, with its prox
/// dispatched over the registered pairs:
///
/// * `(anything, zero)` — reduces to the prox of `g2`;
/// * `(zero, w·‖·‖₁)` — soft threshold with step `t·z·w`;
/// * `(ℓ₁ ball, ℓ₂ ball)` — projection onto the intersection (for `z > 0`).
///
/// At `z = 0` the combination always reduces to the prox of `g2` alone.
#[derive(Debug, Clone)]
pub struct CombinedProx<'a> {
    pub lower: &'a Nonsmooth,
    pub upper: &'a Nonsmooth,
    pub z: f64,
}

impl<'a> CombinedProx<'a> {
    pub fn new(lower: &'a Nonsmooth, upper: &'a Nonsmooth, z: f64) -> Result<Self> {
        if !(z >= 0.0) {
            return Err(Error::Config(format!("combined prox: z = {z} must be >= 0")));
        }
        validate_pair(lower, upper)?;
        Ok(CombinedProx { lower, upper, z })
    }
}

/// Checks that the pair has a registered combined prox rule.
pub fn validate_pair(lower: &Nonsmooth, upper: &Nonsmooth) -> Result<()> {
    match (lower, upper) {
        (_, Nonsmooth::Zero) => Ok(()),
        (Nonsmooth::Zero, Nonsmooth::L1Norm { .. }) => Ok(()),
        (Nonsmooth::L1Ball { .. }, Nonsmooth::L2Ball { .. }) => Ok(()),
        _ => Err(Error::UnsupportedProxPair {
            lower: lower.kind_name(),
            upper: upper.kind_name(),
        }),
    }
}

impl ProxFn for CombinedProx<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let g2 = self.lower.value(x);
        if self.z == 0.0 {
            // z·f2 vanishes even when x sits outside dom(f2).
            g2
        } else {
            g2 + self.z * self.upper.value(x)
        }
    }

    fn prox(&self, y: &[f64], t: f64) -> Result<Vec<f64>> {
        if self.z == 0.0 {
            return self.lower.prox(y, t);
        }
        match (self.lower, self.upper) {
            (lower, Nonsmooth::Zero) => lower.prox(y, t),
            (Nonsmooth::Zero, Nonsmooth::L1Norm { weight }) => {
                soft_threshold(y, t * self.z * weight)
            }
            (Nonsmooth::L1Ball { radius: r1 }, Nonsmooth::L2Ball { radius: r2 }) => {
                project_l1_l2_intersection(y, *r1, *r2)
            }
            (lower, upper) => Err(Error::UnsupportedProxPair {
                lower: lower.kind_name(),
                upper: upper.kind_name(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn soft_threshold_componentwise() {
        let out = soft_threshold(&[3.0, -0.5, 0.0], 1.0).unwrap();
        assert_eq!(out, vec![2.0, 0.0, 0.0]);
        let out = soft_threshold(&[0.0, 0.0], 5.0).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn soft_threshold_rejects_non_finite() {
        assert!(matches!(
            soft_threshold(&[f64::NAN, 0.0], 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn nonneg_projection() {
        assert_eq!(project_nonneg(&[-1.0, 2.0]).unwrap(), vec![0.0, 2.0]);
        assert_eq!(project_nonneg(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn l2_ball_projection() {
        assert_eq!(project_l2_ball(&[3.0, 4.0], 5.0).unwrap(), vec![3.0, 4.0]);
        let p = project_l2_ball(&[6.0, 8.0], 5.0).unwrap();
        assert!((p[0] - 3.0).abs() < 1e-14 && (p[1] - 4.0).abs() < 1e-14);
        assert_eq!(project_l2_ball(&[0.0, 0.0], 1.0).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(
            project_l2_ball(&[1.0], 0.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn l1_ball_trivial_cases() {
        assert_eq!(
            project_l1_ball(&[0.5, 0.2], 1.0).unwrap(),
            vec![0.5, 0.2]
        );
        let p = project_l1_ball(&[2.0, 0.0], 1.0).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-14 && p[1] == 0.0);
    }

    #[test]
    fn l1_l2_intersection_single_constraint_cases() {
        // Inside both balls: unchanged.
        let p = project_l1_l2_intersection(&[0.1, -0.2], 1.0, 1.0).unwrap();
        assert_eq!(p, vec![0.1, -0.2]);
        // ℓ₁ inactive: reduces to the ℓ₂ projection.
        let p = project_l1_l2_intersection(&[6.0, 8.0], 100.0, 5.0).unwrap();
        assert!((p[0] - 3.0).abs() < 1e-9 && (p[1] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn combined_prox_registered_pairs() {
        let nonneg = Nonsmooth::NonnegOrthant;
        let zero = Nonsmooth::Zero;
        let l1 = Nonsmooth::L1Norm { weight: 1.0 };
        // (nonneg, zero): projection for every z and t.
        for &z in &[0.0, 0.7, 3.0] {
            let cp = CombinedProx::new(&nonneg, &zero, z).unwrap();
            let p = cp.prox(&[-1.0, 2.0], 0.3).unwrap();
            assert_eq!(p, vec![0.0, 2.0]);
        }
        // (zero, ℓ₁): scaled soft threshold.
        let cp = CombinedProx::new(&zero, &l1, 2.0).unwrap();
        let p = cp.prox(&[3.0, -0.5], 0.25).unwrap();
        assert_eq!(p, soft_threshold(&[3.0, -0.5], 0.5).unwrap());
        // z = 0 always reduces to the lower prox.
        let l1ball = Nonsmooth::L1Ball { radius: 1.0 };
        let l2ball = Nonsmooth::L2Ball { radius: 0.8 };
        let cp = CombinedProx::new(&l1ball, &l2ball, 0.0).unwrap();
        let y = [2.0, -0.5];
        assert_eq!(cp.prox(&y, 1.0).unwrap(), project_l1_ball(&y, 1.0).unwrap());
    }

    #[test]
    fn combined_prox_rejects_unregistered_pair() {
        let l1ball = Nonsmooth::L1Ball { radius: 1.0 };
        let l1 = Nonsmooth::L1Norm { weight: 1.0 };
        let err = CombinedProx::new(&l1ball, &l1, 1.0).unwrap_err();
        assert!(matches!(err, Error::UnsupportedProxPair { .. }));
    }
}
