//! Composite convex objectives: a smooth part with value/gradient oracles and
//! a prox-friendly nonsmooth part, plus oracle-query accounting.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{self, dot, Matrix};
use crate::prox::{validate_pair, Nonsmooth};
use crate::{Error, Result};

/// Smooth convex function with a gradient oracle and an optional Lipschitz
/// constant for the gradient.
pub trait SmoothFn {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn lipschitz_hint(&self) -> Option<f64>;
}

/// The smooth shapes used by the generators and tests.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothOracle {
    /// Identically zero.
    Zero { n: usize },
    /// `½‖Ax − b‖²` with the Gram matrix precomputed for cheap gradients.
    LeastSquares {
        a: Matrix,
        b: Vec<f64>,
        gram: Matrix,
        atb: Vec<f64>,
        lip: f64,
    },
    /// `xᵀQx` for symmetric PSD `Q`.
    QuadraticForm { q: Matrix, lip: f64 },
    /// `⟨coeff, x⟩`.
    Linear { coeff: Vec<f64> },
    /// `½ Σ dᵢ (xᵢ − cᵢ)²` — diagonal quadratic, handy for small fixtures.
    DiagQuadratic { diag: Vec<f64>, center: Vec<f64> },
}

impl SmoothOracle {
    pub fn dim(&self) -> usize {
        match self {
            SmoothOracle::Zero { n } => *n,
            SmoothOracle::LeastSquares { a, .. } => a.cols(),
            SmoothOracle::QuadraticForm { q, .. } => q.cols(),
            SmoothOracle::Linear { coeff } => coeff.len(),
            SmoothOracle::DiagQuadratic { diag, .. } => diag.len(),
        }
    }
}

impl SmoothFn for SmoothOracle {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            SmoothOracle::Zero { .. } => 0.0,
            SmoothOracle::LeastSquares { a, b, .. } => {
                // Direct residual evaluation keeps accuracy near the optimum.
                let r = a.matvec(x);
                let mut s = 0.0;
                for i in 0..r.len() {
                    let d = r[i] - b[i];
                    s += d * d;
                }
                0.5 * s
            }
            SmoothOracle::QuadraticForm { q, .. } => dot(x, &q.matvec(x)),
            SmoothOracle::Linear { coeff } => dot(coeff, x),
            SmoothOracle::DiagQuadratic { diag, center } => {
                let mut s = 0.0;
                for i in 0..x.len() {
                    let d = x[i] - center[i];
                    s += diag[i] * d * d;
                }
                0.5 * s
            }
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SmoothOracle::Zero { n } => vec![0.0; *n],
            SmoothOracle::LeastSquares { gram, atb, .. } => {
                let mut g = gram.matvec(x);
                for i in 0..g.len() {
                    g[i] -= atb[i];
                }
                g
            }
            SmoothOracle::QuadraticForm { q, .. } => {
                let mut g = q.matvec(x);
                for v in g.iter_mut() {
                    *v *= 2.0;
                }
                g
            }
            SmoothOracle::Linear { coeff } => coeff.clone(),
            SmoothOracle::DiagQuadratic { diag, center } => (0..x.len())
                .map(|i| diag[i] * (x[i] - center[i]))
                .collect(),
        }
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        match self {
            SmoothOracle::Zero { .. } => Some(0.0),
            SmoothOracle::LeastSquares { lip, .. } => Some(*lip),
            SmoothOracle::QuadraticForm { lip, .. } => Some(*lip),
            SmoothOracle::Linear { .. } => Some(0.0),
            SmoothOracle::DiagQuadratic { diag, .. } => {
                Some(diag.iter().fold(0.0f64, |m, v| m.max(*v)))
            }
        }
    }
}

/// `½‖Ax − b‖²` with `lipschitz_hint = λ_max(AᵀA)` from power iteration.
pub fn make_least_squares(a: Matrix, b: Vec<f64>) -> Result<SmoothOracle> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::Config(format!(
            "least squares: matrix must have at least one row and column"
        )));
    }
    if b.len() != a.rows() {
        return Err(Error::Config(format!(
            "least squares: b has length {} but A has {} rows",
            b.len(),
            a.rows()
        )));
    }
    if !a.is_finite() || !linalg::all_finite(&b) {
        return Err(Error::Config(format!("least squares: non-finite data")));
    }
    let gram = a.gram();
    let lip = linalg::power_iteration_sym(&gram, 200);
    let atb = a.tr_matvec(&b);
    Ok(SmoothOracle::LeastSquares { a, b, gram, atb, lip })
}

/// `xᵀQx` for symmetric PSD `Q`, with `lipschitz_hint = 2λ_max(Q)`.
pub fn make_quadratic_form(q: Matrix) -> Result<SmoothOracle> {
    if q.rows() != q.cols() {
        return Err(Error::Config(format!(
            "quadratic form: Q is {}x{}, not square",
            q.rows(),
            q.cols()
        )));
    }
    if !q.is_finite() {
        return Err(Error::Config(format!("quadratic form: non-finite data")));
    }
    let scale = q.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if q.asymmetry() > 1e-10 * scale.max(1.0) {
        return Err(Error::Config(format!(
            "quadratic form: Q is not symmetric (asymmetry {})",
            q.asymmetry()
        )));
    }
    let min_eig = linalg::min_eigenvalue_sym(&q, 200);
    if min_eig < -1e-8 * scale.max(1.0) {
        return Err(Error::Config(format!(
            "quadratic form: Q is not PSD (min eigenvalue {min_eig})"
        )));
    }
    let lip = 2.0 * linalg::power_iteration_sym(&q, 200);
    Ok(SmoothOracle::QuadraticForm { q, lip })
}

/// Oracle-query counters; one increment per smooth value, gradient or prox
/// evaluation, the cost unit of all complexity accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryCounter {
    pub value_evals: u64,
    pub gradient_evals: u64,
    pub prox_evals: u64,
}

impl QueryCounter {
    pub fn new() -> Self {
        QueryCounter::default()
    }

    pub fn total(&self) -> u64 {
        self.value_evals + self.gradient_evals + self.prox_evals
    }

    pub fn absorb(&mut self, other: &QueryCounter) {
        self.value_evals += other.value_evals;
        self.gradient_evals += other.gradient_evals;
        self.prox_evals += other.prox_evals;
    }
}

/// A convex function split as smooth + prox-friendly parts.
#[derive(Debug, Clone)]
pub struct CompositeObjective {
    pub smooth: SmoothOracle,
    pub nonsmooth: Nonsmooth,
    /// Lipschitz constant of the nonsmooth part on its domain (`l_{f2}`).
    /// Defaults to the shape's own constant when not supplied.
    pub nonsmooth_lipschitz: Option<f64>,
}

impl CompositeObjective {
    pub fn new(smooth: SmoothOracle, nonsmooth: Nonsmooth) -> Self {
        CompositeObjective {
            smooth,
            nonsmooth,
            nonsmooth_lipschitz: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn nonsmooth_lipschitz(&self) -> f64 {
        self.nonsmooth_lipschitz
            .unwrap_or_else(|| self.nonsmooth.lipschitz(self.dim()))
    }

    /// Total value `smooth(x) + nonsmooth(x)` as an extended real; points
    /// outside the nonsmooth domain evaluate to `+∞`, never an error.
    pub fn eval(&self, x: &[f64], counter: &mut QueryCounter) -> f64 {
        counter.value_evals += 2;
        self.smooth.value(x) + self.nonsmooth.value(x)
    }

    pub fn gradient_smooth(&self, x: &[f64], counter: &mut QueryCounter) -> Vec<f64> {
        counter.gradient_evals += 1;
        self.smooth.gradient(x)
    }
}

/// An upper/lower pair of composite objectives sharing one variable space,
/// with a registered combined-prox rule for `g2 + z·f2`.
#[derive(Debug, Clone)]
pub struct BilevelInstance {
    pub upper: CompositeObjective,
    pub lower: CompositeObjective,
    n: usize,
}

impl BilevelInstance {
    pub fn new(upper: CompositeObjective, lower: CompositeObjective) -> Result<Self> {
        let n = upper.dim();
        if lower.dim() != n {
            return Err(Error::Config(format!(
                "bilevel instance: upper dimension {} != lower dimension {}",
                n,
                lower.dim()
            )));
        }
        validate_pair(&lower.nonsmooth, &upper.nonsmooth)?;
        Ok(BilevelInstance { upper, lower, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;

    #[test]
    fn least_squares_identity() {
        let a = Matrix::identity(2);
        let ls = make_least_squares(a, vec![0.0, 0.0]).unwrap();
        assert!((ls.value(&[1.0, 0.0]) - 0.5).abs() < 1e-15);
        assert_eq!(ls.gradient(&[1.0, 0.0]), vec![1.0, 0.0]);
        assert!((ls.lipschitz_hint().unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn least_squares_zero_matrix() {
        let a = Matrix::zeros(3, 2);
        let ls = make_least_squares(a, vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(ls.gradient(&[5.0, -2.0]), vec![0.0, 0.0]);
        assert_eq!(ls.lipschitz_hint(), Some(0.0));
    }

    #[test]
    fn least_squares_dimension_mismatch() {
        let a = Matrix::zeros(3, 2);
        assert!(matches!(
            make_least_squares(a, vec![0.0; 2]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn quadratic_form_identity() {
        let q = Matrix::identity(2);
        let qf = make_quadratic_form(q).unwrap();
        assert!((qf.value(&[1.0, 2.0]) - 5.0).abs() < 1e-15);
        assert_eq!(qf.gradient(&[1.0, 2.0]), vec![2.0, 4.0]);
    }

    #[test]
    fn quadratic_form_zero() {
        let q = Matrix::zeros(3, 3);
        let qf = make_quadratic_form(q).unwrap();
        assert_eq!(qf.value(&[1.0, 1.0, 1.0]), 0.0);
        assert_eq!(qf.lipschitz_hint(), Some(0.0));
    }

    #[test]
    fn quadratic_form_rejects_asymmetry() {
        let q = Matrix::from_row_major(2, 2, vec![1.0, 0.5, 0.0, 1.0]).unwrap();
        assert!(matches!(make_quadratic_form(q), Err(Error::Config(_))));
    }

    #[test]
    fn eval_combines_parts_and_counts() {
        // ½‖Ax−b‖² + ‖x‖₁ at small random data, against direct arithmetic.
        let a = Matrix::from_row_major(2, 3, vec![1.0, -1.0, 0.5, 0.2, 0.0, 2.0]).unwrap();
        let b = vec![0.3, -0.7];
        let obj = CompositeObjective::new(
            make_least_squares(a.clone(), b.clone()).unwrap(),
            Nonsmooth::L1Norm { weight: 1.0 },
        );
        let x = [0.4, -1.1, 0.2];
        let mut counter = QueryCounter::new();
        let v = obj.eval(&x, &mut counter);
        let r = linalg::sub(&a.matvec(&x), &b);
        let direct = 0.5 * norm2(&r) * norm2(&r) + linalg::norm1(&x);
        assert!((v - direct).abs() < 1e-14);
        assert_eq!(counter.value_evals, 2);
    }

    #[test]
    fn eval_returns_infinity_outside_domain() {
        let obj = CompositeObjective::new(
            SmoothOracle::Zero { n: 2 },
            Nonsmooth::NonnegOrthant,
        );
        let mut counter = QueryCounter::new();
        assert!(obj.eval(&[-1.0, 0.0], &mut counter).is_infinite());
    }

    #[test]
    fn bilevel_instance_checks_dimensions_and_pair() {
        let upper = CompositeObjective::new(SmoothOracle::Zero { n: 2 }, Nonsmooth::Zero);
        let lower = CompositeObjective::new(SmoothOracle::Zero { n: 3 }, Nonsmooth::Zero);
        assert!(BilevelInstance::new(upper, lower).is_err());

        let upper = CompositeObjective::new(
            SmoothOracle::Zero { n: 2 },
            Nonsmooth::L1Norm { weight: 1.0 },
        );
        let lower = CompositeObjective::new(
            SmoothOracle::Zero { n: 2 },
            Nonsmooth::NonnegOrthant,
        );
        assert!(matches!(
            BilevelInstance::new(upper, lower),
            Err(Error::UnsupportedProxPair { .. })
        ));
    }
}
