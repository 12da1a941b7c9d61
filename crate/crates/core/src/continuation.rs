//! Pseudo-arclength continuation of the nontrivial branch from the
//! bifurcation point, with per-point diagnostics and a classified
//! termination reason, plus the regularization homotopy of the
//! bifurcation point itself.

use crate::diagnostics;
use crate::dispersion::{self, DispersionPoint};
use crate::error::{Error, MarginInequality, Result};
use crate::laminar::{self, LaminarFlow};
use crate::numerics::bordered_solve;
use crate::operator::{self, Grid2D, WaveState};
use crate::vorticity::VorticitySpec;

/// Knobs of the predictor-corrector loop.
#[derive(Debug, Clone)]
pub struct ContinuationConfig {
    /// amplitude of the first point on the branch.
    pub s0: f64,
    /// initial arclength step.
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    /// Newton stop on the residual infinity norm.
    pub newton_tol: f64,
    pub max_newton: usize,
    pub max_steps: usize,
    /// admissible-set margin.
    pub delta: f64,
    /// stop once lambda exceeds this (unbounded wave speed).
    pub lambda_max: f64,
    /// stop once max h_p exceeds this (approach to horizontal stagnation).
    pub hp_max: f64,
    /// regularization schedule, decreasing to the target (default just 0).
    pub epsilon_schedule: Vec<f64>,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            s0: 1e-3,
            ds: 1e-2,
            ds_min: 1e-4,
            ds_max: 0.5,
            newton_tol: 1e-10,
            max_newton: 20,
            max_steps: 200,
            delta: 1e-4,
            lambda_max: 1e3,
            hp_max: 1e3,
            epsilon_schedule: vec![0.0],
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("s0", self.s0),
            ("ds", self.ds),
            ("ds_min", self.ds_min),
            ("ds_max", self.ds_max),
            ("newton_tol", self.newton_tol),
            ("delta", self.delta),
            ("lambda_max", self.lambda_max),
            ("hp_max", self.hp_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.ds_min > self.ds_max {
            return Err(Error::Config("ds_min exceeds ds_max".into()));
        }
        if self.max_newton == 0 || self.max_steps == 0 {
            return Err(Error::Config("max_newton and max_steps must be nonzero".into()));
        }
        if self.epsilon_schedule.is_empty() {
            return Err(Error::Config("epsilon schedule is empty".into()));
        }
        if self.epsilon_schedule.iter().any(|&e| e < 0.0) {
            return Err(Error::Config("epsilon schedule entries must be >= 0".into()));
        }
        Ok(())
    }

    /// The epsilon the branch itself runs at (the schedule target).
    pub fn target_epsilon(&self) -> f64 {
        *self.epsilon_schedule.last().unwrap_or(&0.0)
    }
}

/// Why the branch loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    /// lambda crossed lambda_max: wave speed grows without bound.
    SpeedUnbounded,
    /// max h_p crossed hp_max: approach to horizontal stagnation.
    StagnationApproach,
    /// the corrector could not stay inside the admissible set.
    MarginHit(MarginInequality),
    /// Newton failed even at the smallest step.
    NewtonFailure,
    MaxSteps,
}

impl std::fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TerminationReason::SpeedUnbounded => write!(f, "SpeedUnbounded"),
            TerminationReason::StagnationApproach => write!(f, "StagnationApproach"),
            TerminationReason::MarginHit(ineq) => write!(f, "MarginHit({})", ineq.id()),
            TerminationReason::NewtonFailure => write!(f, "NewtonFailure"),
            TerminationReason::MaxSteps => write!(f, "MaxSteps"),
        }
    }
}

/// One accepted branch point with its diagnostics.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub step: usize,
    /// accumulated arclength from the bifurcation point.
    pub s: f64,
    pub lambda: f64,
    pub c: f64,
    /// crest-trough surface height difference w(0,0) - w(pi,0).
    pub amplitude: f64,
    pub max_hp: f64,
    pub surface_residual: f64,
    pub interface_residual: f64,
    pub nodal_ok: bool,
    /// fitted decay rate; NaN when the fit window is degenerate.
    pub tau_fit: f64,
    pub mean_drift: f64,
    pub newton_iters: usize,
    /// the converged state itself (not serialized into the CSV).
    pub state: WaveState,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub reason: TerminationReason,
}

/// Linear constraint t_w . (w - w_ref) + t_lambda (lambda - lambda_ref) = 0
/// closing the bordered Newton system.
pub struct Constraint {
    pub t_w: Vec<f64>,
    pub t_lambda: f64,
    pub w_ref: Vec<f64>,
    pub lambda_ref: f64,
}

impl Constraint {
    fn value(&self, state: &WaveState) -> f64 {
        let mut v = self.t_lambda * (state.lambda - self.lambda_ref);
        for i in 0..self.t_w.len() {
            v += self.t_w[i] * (state.w[i] - self.w_ref[i]);
        }
        v
    }
}

/// First-point ansatz: w = s0 Psi(p) cos q at the bifurcation lambda, with
/// the eigenfunction normalized to Psi(0) = 1.
pub fn initial_guess(point: &DispersionPoint, grid: &Grid2D, s0: f64) -> WaveState {
    let psi0 = *point.psi.last().unwrap();
    let mut state = WaveState {
        lambda: point.lambda,
        epsilon: point.epsilon,
        w: vec![0.0; grid.n_unknowns()],
    };
    for ip in 1..=grid.np() {
        for iq in 0..=grid.nq() {
            state.w[grid.idx(iq, ip)] =
                s0 * point.psi[ip] / psi0 * grid.q_nodes()[iq].cos();
        }
    }
    state
}

/// Newton iteration on the bordered system [J, dF/dlambda; constraint row];
/// returns the corrected state and the iteration count.
pub fn newton_correct(
    spec: &VorticitySpec,
    grid: &Grid2D,
    start: &WaveState,
    constraint: &Constraint,
    g: f64,
    cfg: &ContinuationConfig,
) -> Result<(WaveState, usize)> {
    let mut state = start.clone();
    let mut res_norm = f64::INFINITY;
    for iter in 0..cfg.max_newton {
        let r = operator::residual(spec, grid, &state, g, cfg.delta)?;
        res_norm = r.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        let cons = constraint.value(&state);
        if res_norm <= cfg.newton_tol && cons.abs() <= cfg.newton_tol.max(1e-14) {
            return Ok((state, iter));
        }
        let (j, dlam) = operator::jacobian(spec, grid, &state, g, cfg.delta)?;
        let neg_r: Vec<f64> = r.iter().map(|&x| -x).collect();
        let (dw, dl) = bordered_solve(
            j,
            &dlam,
            &constraint.t_w,
            constraint.t_lambda,
            &neg_r,
            -cons,
        )?;
        for i in 0..state.w.len() {
            state.w[i] += dw[i];
        }
        state.lambda += dl;
        if !state.lambda.is_finite() {
            return Err(Error::NumericalFailure("lambda diverged in Newton".into()));
        }
    }
    // accept a final iterate that meets the tolerance after the last update
    let r = operator::residual(spec, grid, &state, g, cfg.delta)?;
    let final_norm = r.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    if final_norm <= cfg.newton_tol && constraint.value(&state).abs() <= cfg.newton_tol.max(1e-14)
    {
        return Ok((state, cfg.max_newton));
    }
    Err(Error::NewtonFailure {
        iterations: cfg.max_newton,
        residual: final_norm.min(res_norm),
    })
}

fn max_hp(spec: &VorticitySpec, grid: &Grid2D, state: &WaveState, g: f64) -> Result<f64> {
    let flow = LaminarFlow::new(spec, state.lambda, g, grid.p_nodes())?;
    let d = operator::node_derivatives(spec, grid, state)?;
    let nq1 = grid.nq() + 1;
    let mut m = f64::NEG_INFINITY;
    for ip in 0..=grid.np() {
        for iq in 0..nq1 {
            m = m.max(flow.height_p[ip] + d.wp[ip * nq1 + iq]);
        }
    }
    Ok(m)
}

fn make_point(
    spec: &VorticitySpec,
    grid: &Grid2D,
    state: &WaveState,
    g: f64,
    cfg: &ContinuationConfig,
    step: usize,
    s: f64,
    iters: usize,
) -> Result<BranchPoint> {
    let audit = diagnostics::audit_state(spec, grid, state, g, cfg.delta)?;
    let nodal = diagnostics::check_nodal(grid, state);
    let tau_fit = diagnostics::fit_decay(grid, state)
        .map(|f| f.tau)
        .unwrap_or(f64::NAN);
    let np = grid.np();
    let amplitude = state.w[grid.idx(0, np)] - state.w[grid.idx(grid.nq(), np)];
    if amplitude <= 0.0 {
        return Err(Error::NumericalFailure(format!(
            "branch point {step} lost profile orientation: amplitude {amplitude:.3e}"
        )));
    }
    Ok(BranchPoint {
        step,
        s,
        lambda: state.lambda,
        c: laminar::wave_speed(state.lambda, spec.gamma_limit())?,
        amplitude,
        max_hp: max_hp(spec, grid, state, g)?,
        surface_residual: audit.surface_residual,
        interface_residual: audit.interface_residual,
        nodal_ok: nodal.pass(),
        tau_fit,
        mean_drift: audit.mean_drift,
        newton_iters: iters,
        state: state.clone(),
    })
}

/// Tangent scale: sup norm over w against |dlambda|, so a unit tangent moves
/// the crest height (not a node-count average) by one arclength unit.
fn tangent_norm(dw: &[f64], dl: f64) -> f64 {
    dw.iter().fold(dl.abs(), |m, &x| m.max(x.abs()))
}

/// Traces the nontrivial branch from the bifurcation point by bordered
/// pseudo-arclength Newton steps; always returns a classified termination.
pub fn run_branch(
    spec: &VorticitySpec,
    grid: &Grid2D,
    g: f64,
    cfg: &ContinuationConfig,
) -> Result<Branch> {
    cfg.validate()?;
    let report = spec.check_admissible(g)?;
    if !report.pass() {
        return Err(Error::Admissibility(format!(
            "margin {:.6} not positive",
            report.margin
        )));
    }
    let epsilon = cfg.target_epsilon();
    let point = dispersion::find_bifurcation(spec, epsilon, g, &grid.p_grid(), 1.0)?;

    // step 0: correct the eigenmode ansatz with lambda free and the
    // amplitude pinned along the eigen-direction
    let guess = initial_guess(&point, grid, cfg.s0);
    let dir: Vec<f64> = guess.w.iter().map(|&x| x / cfg.s0).collect();
    let dirn = tangent_norm(&dir, 0.0);
    let constraint = Constraint {
        t_w: dir.iter().map(|&x| x / dirn).collect(),
        t_lambda: 0.0,
        w_ref: guess.w.clone(),
        lambda_ref: guess.lambda,
    };
    let (state0, iters0) = newton_correct(spec, grid, &guess, &constraint, g, cfg)?;
    let mut points = vec![make_point(spec, grid, &state0, g, cfg, 0, cfg.s0, iters0)?];

    let mut prev: Option<WaveState> = None;
    let mut current = state0;
    let mut ds = cfg.ds;
    let mut s = cfg.s0;

    loop {
        let last = points.last().unwrap();
        if last.lambda > cfg.lambda_max {
            return Ok(Branch { points, reason: TerminationReason::SpeedUnbounded });
        }
        if last.max_hp > cfg.hp_max {
            return Ok(Branch { points, reason: TerminationReason::StagnationApproach });
        }
        if points.len() > cfg.max_steps {
            return Ok(Branch { points, reason: TerminationReason::MaxSteps });
        }

        // tangent: secant through the last two states, eigen-direction first
        let (mut t_w, mut t_l): (Vec<f64>, f64) = match &prev {
            Some(p) => (
                current.w.iter().zip(&p.w).map(|(a, b)| a - b).collect(),
                current.lambda - p.lambda,
            ),
            None => (
                initial_guess(&point, grid, 1.0).w,
                0.0,
            ),
        };
        let norm = tangent_norm(&t_w, t_l);
        for v in &mut t_w {
            *v /= norm;
        }
        t_l /= norm;

        let mut accepted: Option<(WaveState, usize, f64)> = None;
        let mut failure: Option<Error> = None;
        for _ in 0..=5 {
            let pred = WaveState {
                lambda: current.lambda + ds * t_l,
                epsilon,
                w: current
                    .w
                    .iter()
                    .zip(&t_w)
                    .map(|(a, b)| a + ds * b)
                    .collect(),
            };
            let constraint = Constraint {
                t_w: t_w.clone(),
                t_lambda: t_l,
                w_ref: pred.w.clone(),
                lambda_ref: pred.lambda,
            };
            match newton_correct(spec, grid, &pred, &constraint, g, cfg) {
                Ok((state, iters)) => {
                    accepted = Some((state, iters, ds));
                    break;
                }
                Err(e @ (Error::NewtonFailure { .. } | Error::LeavesAdmissibleSet { .. })) => {
                    failure = Some(e);
                    if ds / 2.0 < cfg.ds_min {
                        break;
                    }
                    ds /= 2.0;
                }
                Err(e) => return Err(e),
            }
        }
        match accepted {
            Some((state, iters, used)) => {
                s += used;
                let bp = make_point(spec, grid, &state, g, cfg, points.len(), s, iters)?;
                points.push(bp);
                prev = Some(std::mem::replace(&mut current, state));
                if iters <= 3 {
                    ds = (ds * 1.3).min(cfg.ds_max);
                }
            }
            None => {
                let reason = match failure {
                    Some(Error::LeavesAdmissibleSet { inequality, .. }) => {
                        TerminationReason::MarginHit(inequality)
                    }
                    _ => TerminationReason::NewtonFailure,
                };
                return Ok(Branch { points, reason });
            }
        }
    }
}

/// One homotopy row: the bifurcation point at a given regularization, or the
/// failure that prevented computing it.
#[derive(Debug)]
pub struct HomotopyRow {
    pub epsilon: f64,
    pub lambda_star: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug)]
pub struct HomotopyTable {
    pub rows: Vec<HomotopyRow>,
    /// empirical order of |lambda*(eps) - lambda*(0)| in eps, when at least
    /// two positive entries and the baseline succeeded.
    pub order: Option<f64>,
}

/// Tracks the bifurcation point along a decreasing regularization schedule
/// and reports the empirical convergence order toward the unregularized one.
pub fn epsilon_homotopy(
    spec: &VorticitySpec,
    g: f64,
    grid: &crate::dispersion::Grid1D,
    schedule: &[f64],
) -> Result<HomotopyTable> {
    if schedule.is_empty() {
        return Err(Error::Config("epsilon schedule is empty".into()));
    }
    for pair in schedule.windows(2) {
        if pair[1] >= pair[0] {
            return Err(Error::Config(format!(
                "epsilon schedule must be strictly decreasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    let mut rows = Vec::with_capacity(schedule.len() + 1);
    let with_eps = |eps: f64| -> HomotopyRow {
        match dispersion::find_bifurcation(spec, eps, g, grid, 1.0) {
            Ok(point) => HomotopyRow { epsilon: eps, lambda_star: Some(point.lambda), failure: None },
            Err(e) => HomotopyRow { epsilon: eps, lambda_star: None, failure: Some(e.to_string()) },
        }
    };
    for &eps in schedule {
        rows.push(with_eps(eps));
    }
    if schedule.last() != Some(&0.0) {
        rows.push(with_eps(0.0));
    }
    let base = rows.last().and_then(|r| r.lambda_star);
    let order = base.map(|lam0| {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.epsilon > 0.0)
            .filter_map(|r| {
                r.lambda_star
                    .map(|l| (r.epsilon.ln(), (l - lam0).abs().max(1e-300).ln()))
            })
            .collect();
        if pts.len() < 2 {
            return f64::NAN;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        sxy / sxx
    });
    Ok(HomotopyTable { rows, order })
}
