//! Outer bisection on the upper-level value.
//!
//! The driver brackets the bilevel optimum `p*` between a lower bound from
//! the unconstrained upper problem and an upper bound from the unconstrained
//! lower problem, then repeatedly solves the level subproblem at the midpoint
//! `c` and classifies it: if the subproblem's lower value sits clearly above
//! the unconstrained lower optimum (`condition14`), `c` is a lower bound for
//! `p*`; otherwise the achieved upper value becomes the new upper bound. A
//! safeguard exits early when the midpoint sinks into the `Δ₁` margin above
//! the initial lower bound, where the anchor's strict feasibility can no
//! longer be trusted.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::apg::{apg_convex, ApgConvexConfig};
use crate::composite::{BilevelInstance, QueryCounter};
use crate::dual::{
    dual_bisection, interval_search, DualParams, InnerStep, MultiplierInterval, Subproblem,
    ToleranceSchedule,
};
use crate::{Error, Result};

/// All tolerances and line-search knobs of one solve.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Base tolerance ε; the targets are `eps_f = 4ε` and `eps_g = 3ε`.
    pub eps: f64,
    /// Margin Δ₁ of the anchor's strict feasibility (a modeling input).
    /// `None` selects `1e-3·max(1, |u0 − l0|)` once the initial bounds exist.
    pub delta1: Option<f64>,
    /// Calibration constant D dividing every subproblem tolerance.
    pub d: f64,
    /// Floor for the running Lipschitz estimate `B_f` (min 1).
    pub b_f_floor: f64,
    /// Initial multiplier interval size σ.
    pub b_init: f64,
    /// Outer iteration cap; `None` selects `10 + ⌈log₂((u0−l0)/eps_f)⌉`.
    pub max_outer_iters: Option<usize>,
    /// Strongly convex APG line-search knobs.
    pub l_min: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// FISTA knobs for the two initial unconstrained solves.
    pub l0: f64,
    pub eta: f64,
    pub apg_max_iters: usize,
    /// Record per-multiplier inner steps in the report.
    pub record_inner: bool,
}

impl SolverConfig {
    pub fn new(eps: f64) -> Self {
        SolverConfig {
            eps,
            delta1: None,
            d: 1.0,
            b_f_floor: 1.0,
            b_init: 1.0,
            max_outer_iters: None,
            l_min: 1e-6,
            gamma1: 2.0,
            gamma2: 2.0,
            l0: 1.0,
            eta: 2.0,
            apg_max_iters: 1_000_000,
            record_inner: false,
        }
    }

    /// Upper-level target `eps_f = 4ε` (fixed ratio by construction).
    pub fn eps_f(&self) -> f64 {
        4.0 * self.eps
    }

    /// Lower-level target `eps_g = 3ε` (fixed ratio by construction).
    pub fn eps_g(&self) -> f64 {
        3.0 * self.eps
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.d > 0.0 && self.b_init > 0.0) {
            return Err(Error::Config(format!(
                "solver config: eps, d, b_init must be > 0"
            )));
        }
        if let Some(d1) = self.delta1 {
            if !(d1 > 0.0) {
                return Err(Error::Config(format!("solver config: delta1 must be > 0")));
            }
        }
        Ok(())
    }
}

/// How an outer iteration moved the bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    LowerBound,
    UpperBound,
    Safeguard,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Branch::LowerBound => "LowerBound",
            Branch::UpperBound => "UpperBound",
            Branch::Safeguard => "Safeguard",
        };
        f.write_str(s)
    }
}

/// Why the solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Converged,
    SafeguardTriggered,
    IterationCap,
}

impl fmt::Display for ExitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExitKind::Converged => "Converged",
            ExitKind::SafeguardTriggered => "SafeguardTriggered",
            ExitKind::IterationCap => "IterationCap",
        };
        f.write_str(s)
    }
}

/// One outer iteration of the trace.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub iteration: usize,
    pub c: f64,
    pub l: f64,
    pub u: f64,
    pub branch: Branch,
    pub f_val: f64,
    pub g_val: f64,
    /// Cumulative oracle queries at the end of the iteration.
    pub queries: u64,
}

/// Full outcome of a solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x_final: Vec<f64>,
    pub f_final: f64,
    pub g_final: f64,
    /// `f_final − p*` and `g_final − g*` when reference values are supplied.
    pub f_gap: Option<f64>,
    pub g_gap: Option<f64>,
    pub l0: f64,
    pub u0: f64,
    pub outer_iterations: usize,
    pub exit_kind: ExitKind,
    pub total_queries: QueryCounter,
    pub trace: Vec<TraceRow>,
    pub inner_trace: Vec<(usize, InnerStep)>,
    /// Near-minimizers of the unconstrained upper/lower problems.
    pub x_upper_ref: Vec<f64>,
    pub x_lower_ref: Vec<f64>,
    /// Constants the solve actually used.
    pub delta1_used: f64,
    pub d_z: f64,
}

impl SolveReport {
    /// Attaches reference optima, filling the gap fields.
    pub fn with_reference(mut self, p_star: f64, g_star: f64) -> Self {
        self.f_gap = Some(self.f_final - p_star);
        self.g_gap = Some(self.g_final - g_star);
        self
    }
}

/// Initial bracket data.
#[derive(Debug, Clone)]
pub struct InitialBounds {
    pub l0: f64,
    pub u0: f64,
    pub x_tilde_f: Vec<f64>,
    pub x_tilde_g: Vec<f64>,
}

/// Runs the two unconstrained FISTA solves and forms the initial bracket:
/// `x̃_f` to accuracy `eps_f/4` on `f`, `x̃_g` to `eps_g/3` on `g`, with
/// `l0 = f(x̃_f) − eps_f/4` and `u0 = f(x̃_g)`.
pub fn initial_bounds(
    instance: &BilevelInstance,
    cfg: &SolverConfig,
    x0_f: &[f64],
    x0_g: &[f64],
    counter: &mut QueryCounter,
) -> Result<InitialBounds> {
    let fista = |eps_obj: f64| ApgConvexConfig {
        l0: cfg.l0,
        eta: cfg.eta,
        eps_obj,
        r_bound: None,
        max_iters: cfg.apg_max_iters,
    };
    let sol_f = apg_convex(
        &instance.upper.smooth,
        &instance.upper.nonsmooth,
        &fista(cfg.eps_f() / 4.0),
        x0_f,
        counter,
    )?;
    if !sol_f.converged {
        return Err(Error::NotConverged(format!(
            "initial bounds: upper-level FISTA hit the iteration cap"
        )));
    }
    let sol_g = apg_convex(
        &instance.lower.smooth,
        &instance.lower.nonsmooth,
        &fista(cfg.eps_g() / 3.0),
        x0_g,
        counter,
    )?;
    if !sol_g.converged {
        return Err(Error::NotConverged(format!(
            "initial bounds: lower-level FISTA hit the iteration cap"
        )));
    }
    let l0 = instance.upper.eval(&sol_f.point, counter) - cfg.eps_f() / 4.0;
    let u0 = instance.upper.eval(&sol_g.point, counter);
    Ok(InitialBounds {
        l0,
        u0,
        x_tilde_f: sol_f.point,
        x_tilde_g: sol_g.point,
    })
}

/// The verifiable lower-bound test: `g(x_c) > g(x̃_g) + eps_g/3`.
///
/// `true` classifies the current level as a lower bound of `p*`; `false`
/// means `x_c` is within `eps_g` of the unconstrained lower optimum and its
/// upper value is a valid upper bound. Ties take the `false` branch.
pub fn condition14(
    instance: &BilevelInstance,
    x_c: &[f64],
    x_tilde_g: &[f64],
    eps_g: f64,
    counter: &mut QueryCounter,
) -> bool {
    let g_c = instance.lower.eval(x_c, counter);
    let g_ref = instance.lower.eval(x_tilde_g, counter);
    g_c > g_ref + eps_g / 3.0
}

/// Full solve: initial bounds, outer bisection with the dual subsolver, and
/// the `Δ₁` safeguard.
pub fn solve(
    instance: &BilevelInstance,
    cfg: &SolverConfig,
    x0_f: &[f64],
    x0_g: &[f64],
) -> Result<SolveReport> {
    cfg.validate()?;
    let mut counter = QueryCounter::new();
    let ib = initial_bounds(instance, cfg, x0_f, x0_g, &mut counter)?;
    let (l0, u0) = (ib.l0, ib.u0);

    let delta1 = cfg
        .delta1
        .unwrap_or_else(|| 1e-3 * (u0 - l0).abs().max(1.0));
    // Computable multiplier bound (g(x⁰) − g(x̃_g) + 1)/Δ₁ with x⁰ = x̃_f.
    let g_at_anchor = instance.lower.eval(&ib.x_tilde_f, &mut counter);
    let g_at_ref = instance.lower.eval(&ib.x_tilde_g, &mut counter);
    let d_z = (g_at_anchor - g_at_ref + 1.0) / delta1;
    if !(d_z > 0.0) {
        return Err(Error::Config(format!(
            "multiplier bound d_z = {d_z} is not positive; the anchor should not \
             beat the lower-level reference"
        )));
    }
    let mut sched = ToleranceSchedule::new(cfg.eps, cfg.d, cfg.b_f_floor, d_z)?;
    let params = DualParams {
        l_min: cfg.l_min,
        gamma1: cfg.gamma1,
        gamma2: cfg.gamma2,
        apg_max_iters: cfg.apg_max_iters,
    };
    let mu = cfg.eps; // perturbation weight μ = ε

    let eps_f = cfg.eps_f();
    let eps_g = cfg.eps_g();
    let max_outer = cfg.max_outer_iters.unwrap_or_else(|| {
        let ratio = ((u0 - l0) / eps_f).max(1.0);
        10 + ratio.log2().ceil() as usize
    });

    let mut l = l0;
    let mut u = u0;
    let mut x_hat = ib.x_tilde_f.clone();
    // The point whose upper value is the current u; starts at x̃_g.
    let mut x_u = ib.x_tilde_g.clone();
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut inner_trace: Vec<(usize, InnerStep)> = Vec::new();

    // Initial multiplier interval at the first midpoint.
    let mut c = 0.5 * (l + u);
    let mut sub = Subproblem::new(instance, c, mu, ib.x_tilde_f.clone())?;
    let search = interval_search(
        &sub,
        &mut sched,
        &params,
        &x_hat,
        cfg.b_init,
        &mut counter,
        cfg.record_inner,
    )?;
    let mut interval: MultiplierInterval = search.interval;
    for s in search.inner_steps {
        inner_trace.push((0, s));
    }

    let mut iter = 0usize;
    let exit_kind = loop {
        if u - l <= 0.75 * eps_f {
            break ExitKind::Converged;
        }
        if iter >= max_outer {
            break ExitKind::IterationCap;
        }
        iter += 1;
        c = 0.5 * (l + u);

        if c - l0 < delta1 {
            // The midpoint entered the margin where the anchor's strict
            // feasibility is no longer guaranteed: fall back to the current
            // upper point.
            let fv = instance.upper.eval(&x_u, &mut counter);
            let gv = instance.lower.eval(&x_u, &mut counter);
            trace.push(TraceRow {
                iteration: iter,
                c: u,
                l,
                u,
                branch: Branch::Safeguard,
                f_val: fv,
                g_val: gv,
                queries: counter.total(),
            });
            break ExitKind::SafeguardTriggered;
        }

        sub = Subproblem::new(instance, c, mu, ib.x_tilde_f.clone())?;
        let sol = dual_bisection(
            &sub,
            &interval,
            &mut sched,
            &params,
            &mut counter,
            cfg.record_inner,
        )
        .map_err(|e| match e {
            Error::NotConverged(msg) => {
                Error::NotConverged(format!("outer iteration {iter} at c = {c}: {msg}"))
            }
            other => other,
        })?;
        for s in sol.inner_steps {
            inner_trace.push((iter, s));
        }
        x_hat = sol.point;

        let branch;
        if condition14(instance, &x_hat, &ib.x_tilde_g, eps_g, &mut counter) {
            l = c;
            // The next midpoint is larger, so the optimal multiplier can only
            // shrink: reuse [0, max Z].
            interval = interval.relax_to_zero();
            branch = Branch::LowerBound;
        } else {
            u = instance.upper.eval(&x_hat, &mut counter);
            x_u = x_hat.clone();
            let search = interval_search(
                &sub,
                &mut sched,
                &params,
                &x_hat,
                cfg.b_init,
                &mut counter,
                cfg.record_inner,
            )?;
            interval = search.interval;
            for s in search.inner_steps {
                inner_trace.push((iter, s));
            }
            branch = Branch::UpperBound;
        }

        let fv = instance.upper.eval(&x_hat, &mut counter);
        let gv = instance.lower.eval(&x_hat, &mut counter);
        trace.push(TraceRow {
            iteration: iter,
            c,
            l,
            u,
            branch,
            f_val: fv,
            g_val: gv,
            queries: counter.total(),
        });

        debug_assert!(l <= u + 1e-12 * (1.0 + u.abs()), "bracket inverted: l = {l}, u = {u}");
    };

    let f_final = instance.upper.eval(&x_u, &mut counter);
    let g_final = instance.lower.eval(&x_u, &mut counter);
    Ok(SolveReport {
        x_final: x_u,
        f_final,
        g_final,
        f_gap: None,
        g_gap: None,
        l0,
        u0,
        outer_iterations: iter,
        exit_kind,
        total_queries: counter,
        trace,
        inner_trace,
        x_upper_ref: ib.x_tilde_f,
        x_lower_ref: ib.x_tilde_g,
        delta1_used: delta1,
        d_z,
    })
}

/// Bit-exact trace header shared with the CLI.
pub const TRACE_HEADER: &str = "iter,queries,c,l,u,branch,f_val,g_val,f_gap,g_gap";

/// Renders the outer trace as CSV. Gap columns stay empty unless reference
/// optima `(p*, g*)` are supplied.
pub fn render_trace_csv(report: &SolveReport, reference: Option<(f64, f64)>) -> String {
    let mut out = String::new();
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for row in &report.trace {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.iteration, row.queries, row.c, row.l, row.u, row.branch, row.f_val, row.g_val
        );
        match reference {
            Some((p_star, g_star)) => {
                let _ = write!(out, ",{},{}", row.f_val - p_star, row.g_val - g_star);
            }
            None => out.push_str(",,"),
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::{CompositeObjective, SmoothOracle};
    use crate::prox::Nonsmooth;
    use alloc::vec;

    /// f = g = ½‖x − a‖²: the bracket starts degenerate and the loop exits
    /// immediately with the lower-level reference point.
    #[test]
    fn degenerate_identical_objectives_exit_immediately() {
        let a = vec![0.3, -0.8];
        let obj = || {
            CompositeObjective::new(
                SmoothOracle::DiagQuadratic {
                    diag: vec![1.0, 1.0],
                    center: a.clone(),
                },
                Nonsmooth::Zero,
            )
        };
        let inst = BilevelInstance::new(obj(), obj()).unwrap();
        let cfg = SolverConfig::new(1e-5);
        let report = solve(&inst, &cfg, &[2.0, 2.0], &[-1.0, 1.0]).unwrap();
        assert_eq!(report.exit_kind, ExitKind::Converged);
        assert_eq!(report.outer_iterations, 0);
        assert!(report.u0 - report.l0 <= cfg.eps_f() / 4.0 + cfg.eps_g() / 3.0 + 1e-12);
        assert!(report.f_final <= cfg.eps_f());
    }

    #[test]
    fn condition14_tie_breaking() {
        let obj = CompositeObjective::new(
            SmoothOracle::DiagQuadratic {
                diag: vec![1.0],
                center: vec![0.0],
            },
            Nonsmooth::Zero,
        );
        let inst = BilevelInstance::new(obj.clone(), obj).unwrap();
        let mut counter = QueryCounter::new();
        // g(x_c) = g(x̃_g): the ≤ branch (false).
        assert!(!condition14(&inst, &[0.5], &[0.5], 0.3, &mut counter));
        // g(x_c) = g(x̃_g) + eps_g with eps_g/3 threshold: true.
        // g(x) = ½x², pick x_c with ½x_c² = ½·0.5² + 0.3.
        let x_c = (0.25f64 + 0.6).sqrt();
        assert!(condition14(&inst, &[x_c], &[0.5], 0.3, &mut counter));
    }

    #[test]
    fn trace_csv_shape_and_determinism() {
        let a = vec![1.0, 0.0];
        let lower = CompositeObjective::new(
            SmoothOracle::DiagQuadratic {
                diag: vec![1.0, 0.2],
                center: a.clone(),
            },
            Nonsmooth::Zero,
        );
        let upper = CompositeObjective::new(
            SmoothOracle::DiagQuadratic {
                diag: vec![1.0, 1.0],
                center: vec![-0.5, 0.4],
            },
            Nonsmooth::Zero,
        );
        let inst = BilevelInstance::new(upper, lower).unwrap();
        let mut cfg = SolverConfig::new(1e-4);
        cfg.d = 10.0;
        cfg.delta1 = Some(0.05);
        let r1 = solve(&inst, &cfg, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        let r2 = solve(&inst, &cfg, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        let csv1 = render_trace_csv(&r1, None);
        let csv2 = render_trace_csv(&r2, None);
        assert_eq!(csv1, csv2);
        assert!(csv1.starts_with(TRACE_HEADER));
        for line in csv1.lines().skip(1) {
            assert_eq!(line.matches(',').count(), 9);
            assert!(line.ends_with(",,"));
        }
    }
}
