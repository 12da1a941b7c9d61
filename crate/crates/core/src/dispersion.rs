//! The dispersion relation of the linearized problem: a singular
//! Sturm–Liouville pencil on (-P_max, 0], its principal eigenvalue
//! mu(lambda), the bifurcation point mu(lambda*) = -k^2, and the
//! monotonicity / transversality certificates.

use crate::error::{Error, Result};
use crate::numerics::{self, fd_weights};
use crate::vorticity::VorticitySpec;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Minimum node count per smooth vorticity region.
const MIN_NODES_PER_REGION: usize = 16;

/// Truncated p-grid from -P_max to 0, interface-aligned.
#[derive(Debug, Clone)]
pub struct Grid1D {
    nodes: Vec<f64>,
}

impl Grid1D {
    /// Uniform grid of `n` cells on [-p_max, 0] with every vorticity
    /// breakpoint inserted as a node.
    pub fn new(spec: &VorticitySpec, p_max: f64, n: usize) -> Result<Self> {
        if !(p_max > 0.0) || n < 2 {
            return Err(Error::Config(format!(
                "grid needs p_max > 0 and n >= 2, got p_max = {p_max}, n = {n}"
            )));
        }
        let mut nodes: Vec<f64> = (0..=n).map(|i| -p_max + p_max * i as f64 / n as f64).collect();
        *nodes.last_mut().unwrap() = 0.0;
        nodes[0] = -p_max;
        for b in spec.breakpoints_p() {
            if b <= -p_max {
                return Err(Error::Config(format!(
                    "vorticity breakpoint p = {b} lies outside the truncated domain (-{p_max}, 0)"
                )));
            }
            if !nodes.iter().any(|&x| (x - b).abs() < 1e-13 * p_max) {
                nodes.push(b);
            }
        }
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // drop near-duplicates created by the insertion
        nodes.dedup_by(|a, b| (*a - *b).abs() < 1e-13 * p_max);

        let mut cuts = vec![-p_max];
        cuts.extend(spec.breakpoints_p().into_iter().filter(|&b| b > -p_max));
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.push(0.0);
        for w in cuts.windows(2) {
            let count = nodes.iter().filter(|&&x| x >= w[0] - 1e-13 && x <= w[1] + 1e-13).count();
            if count < MIN_NODES_PER_REGION {
                return Err(Error::Config(format!(
                    "region [{}, {}] has {count} nodes, need at least {MIN_NODES_PER_REGION}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Grid1D { nodes })
    }

    /// Wraps an existing strictly increasing node set ending at 0.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2
            || nodes.windows(2).any(|w| w[0] >= w[1])
            || *nodes.last().unwrap() != 0.0
        {
            return Err(Error::Config("p-nodes must be strictly increasing and end at 0".into()));
        }
        Ok(Grid1D { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn p_max(&self) -> f64 {
        -self.nodes[0]
    }
}

/// Symmetric tridiagonal pencil (A, B) of the quadratic forms
/// A(Psi) = -g Psi(0)^2 + sum a^3 (Psi')^2 + eps sum Psi^2 + bottom closure,
/// B(Psi) = sum a Psi^2.
///
/// The bottom row carries a decay-matched flux closure a^3 tau Psi(-P)^2 with
/// tau the exact tail decay rate at mu = -k^2; for a vorticity function that
/// is constant below its last breakpoint this removes the domain-truncation
/// error at the bifurcation point entirely.
#[derive(Debug, Clone)]
pub struct SLPencil {
    pub lambda: f64,
    pub epsilon: f64,
    diag: Vec<f64>,
    off: Vec<f64>,
    b_diag: Vec<f64>,
    nodes: Vec<f64>,
    /// d(bottom closure coefficient)/d(lambda), used by mu_derivative.
    bottom_dlambda: f64,
}

/// Decay-matched bottom coefficient sqrt(a^3 (eps + k^2 a)) and its
/// lambda-derivative, for the tail value a_b = a(lambda, -P_max).
fn bottom_closure(a_b: f64, epsilon: f64, k: f64) -> (f64, f64) {
    let coef = (a_b.powi(3) * (epsilon + k * k * a_b)).sqrt();
    let dcoef = (3.0 * epsilon * a_b + 4.0 * k * k * a_b * a_b) / (4.0 * coef);
    (coef, dcoef)
}

/// Flux-form discretization of the pencil on `grid`; mode `k` enters only
/// through the bottom closure.
pub fn assemble_pencil(
    spec: &VorticitySpec,
    lambda: f64,
    epsilon: f64,
    grid: &Grid1D,
    g: f64,
) -> Result<SLPencil> {
    assemble_pencil_mode(spec, lambda, epsilon, grid, g, 1.0)
}

pub fn assemble_pencil_mode(
    spec: &VorticitySpec,
    lambda: f64,
    epsilon: f64,
    grid: &Grid1D,
    g: f64,
    k: f64,
) -> Result<SLPencil> {
    if epsilon < 0.0 {
        return Err(Error::ParameterOutOfRange(format!("epsilon = {epsilon} < 0")));
    }
    let p = grid.nodes();
    let n = p.len();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    let mut b_diag = vec![0.0; n];

    for i in 0..n - 1 {
        let h = p[i + 1] - p[i];
        let a_mid = spec.coefficient_a(lambda, 0.5 * (p[i] + p[i + 1]))?;
        let flux = a_mid.powi(3) / h;
        diag[i] += flux;
        diag[i + 1] += flux;
        off[i] = -flux;
    }
    for i in 0..n {
        let h_lo = if i > 0 { p[i] - p[i - 1] } else { 0.0 };
        let h_hi = if i + 1 < n { p[i + 1] - p[i] } else { 0.0 };
        let w = 0.5 * (h_lo + h_hi);
        let a = spec.coefficient_a(lambda, p[i])?;
        diag[i] += epsilon * w;
        b_diag[i] = w * a;
    }
    diag[n - 1] -= g;
    let a_b = spec.coefficient_a(lambda, p[0])?;
    let (coef, dcoef) = bottom_closure(a_b, epsilon, k);
    diag[0] += coef;

    Ok(SLPencil {
        lambda,
        epsilon,
        diag,
        off,
        b_diag,
        nodes: p.to_vec(),
        bottom_dlambda: dcoef,
    })
}

impl SLPencil {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// phi' A phi for the assembled quadratic form.
    pub fn a_form(&self, phi: &[f64]) -> f64 {
        let n = self.diag.len();
        let mut v = 0.0;
        for i in 0..n {
            v += self.diag[i] * phi[i] * phi[i];
        }
        for i in 0..n - 1 {
            v += 2.0 * self.off[i] * phi[i] * phi[i + 1];
        }
        v
    }

    /// phi' B phi.
    pub fn b_form(&self, phi: &[f64]) -> f64 {
        self.b_diag.iter().zip(phi).map(|(b, x)| b * x * x).sum()
    }
}

/// Principal eigenpair of the pencil, B-normalized and sign-fixed so the
/// surface value Psi(0) is positive.
pub fn principal_eigenpair(pencil: &SLPencil) -> Result<(f64, Vec<f64>)> {
    let (mu, mut psi) = numerics::tridiag_eig_smallest(&pencil.diag, &pencil.off, &pencil.b_diag)?;
    if psi[psi.len() - 1] < 0.0 {
        for x in psi.iter_mut() {
            *x = -*x;
        }
    }
    Ok((mu, psi))
}

/// Rayleigh quotient of the assembled pencil at trial samples `phi`;
/// shares the quadratic forms with `principal_eigenpair` exactly.
pub fn rayleigh_quotient(
    spec: &VorticitySpec,
    lambda: f64,
    epsilon: f64,
    grid: &Grid1D,
    phi: &[f64],
    g: f64,
) -> Result<f64> {
    assert_eq!(phi.len(), grid.len());
    let pencil = assemble_pencil(spec, lambda, epsilon, grid, g)?;
    let den = pencil.b_form(phi);
    if den <= 0.0 {
        return Err(Error::Domain("Rayleigh quotient of a null trial function".into()));
    }
    Ok(pencil.a_form(phi) / den)
}

/// Principal eigenvalue and eigenfunction at a fixed parameter point.
#[derive(Debug, Clone)]
pub struct DispersionPoint {
    pub lambda: f64,
    pub epsilon: f64,
    pub mu: f64,
    pub psi: Vec<f64>,
    pub grid: Grid1D,
}

/// mu(lambda) scan over a list of lambda values; evaluated in parallel when
/// the `parallel` feature is on, with results kept in input order.
pub fn mu_scan(
    spec: &VorticitySpec,
    epsilon: f64,
    grid: &Grid1D,
    g: f64,
    lambdas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let eval = |&lambda: &f64| -> Result<(f64, f64)> {
        let pencil = assemble_pencil(spec, lambda, epsilon, grid, g)?;
        let (mu, _) = principal_eigenpair(&pencil)?;
        Ok((lambda, mu))
    };
    #[cfg(feature = "parallel")]
    {
        lambdas.par_iter().map(eval).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        lambdas.iter().map(eval).collect()
    }
}

/// Locates lambda* with mu(lambda*) = -k^2 by bisection on the bracket
/// (-2 Gamma_inf + eta, g - 2 Gamma_inf] followed by a secant polish.
pub fn find_bifurcation(
    spec: &VorticitySpec,
    epsilon: f64,
    g: f64,
    grid: &Grid1D,
    mode_k: f64,
) -> Result<DispersionPoint> {
    find_bifurcation_in(spec, epsilon, g, grid, mode_k, None)
}

/// As [`find_bifurcation`] but with an explicit lambda bracket override.
pub fn find_bifurcation_in(
    spec: &VorticitySpec,
    epsilon: f64,
    g: f64,
    grid: &Grid1D,
    mode_k: f64,
    bracket: Option<(f64, f64)>,
) -> Result<DispersionPoint> {
    let report = spec.check_admissible(g)?;
    if !report.pass() {
        return Err(Error::Admissibility(format!(
            "decay_ok = {}, margin = {:.6e}",
            report.decay_ok, report.margin
        )));
    }
    let target = -mode_k * mode_k;
    let eta = 1e-8 * (1.0 + spec.gamma_inf().abs());
    let (mut lo, mut hi) = bracket.unwrap_or((
        -2.0 * spec.gamma_inf() + eta,
        g - 2.0 * spec.gamma_inf(),
    ));
    if lo <= -2.0 * spec.gamma_inf() {
        return Err(Error::ParameterOutOfRange(format!(
            "bracket lower bound {lo} leaves the admissible lambda range"
        )));
    }
    let f = |lambda: f64| -> Result<f64> {
        let pencil = assemble_pencil_mode(spec, lambda, epsilon, grid, g, mode_k)?;
        let (mu, _) = principal_eigenpair(&pencil)?;
        Ok(mu - target)
    };
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoBifurcation(format!(
            "mu + k^2 has no sign change on ({lo:.6}, {hi:.6}): {f_lo:.3e} vs {f_hi:.3e}"
        )));
    }
    let mut f_hi = f_hi;
    for _ in 0..90 {
        if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    // secant polish inside the bracket
    let mut x0 = lo;
    let mut x1 = hi;
    let (mut y0, mut y1) = (f_lo, f_hi);
    for _ in 0..4 {
        if (y1 - y0).abs() < 1e-300 {
            break;
        }
        let x2 = x1 - y1 * (x1 - x0) / (y1 - y0);
        if !(x2 > lo && x2 < hi) {
            break;
        }
        let y2 = f(x2)?;
        x0 = x1;
        y0 = y1;
        x1 = x2;
        y1 = y2;
    }
    let lambda_star = if y1.abs() <= y0.abs() { x1 } else { x0 };
    let pencil = assemble_pencil_mode(spec, lambda_star, epsilon, grid, g, mode_k)?;
    let (mu, psi) = principal_eigenpair(&pencil)?;
    Ok(DispersionPoint {
        lambda: lambda_star,
        epsilon,
        mu,
        psi,
        grid: grid.clone(),
    })
}

/// d(mu)/d(lambda) from first-order perturbation of the discrete pencil:
/// ((3/2) int a Psi_p^2 - (1/2) mu int a^{-1} Psi^2) / int a Psi^2,
/// positive wherever mu < 0.
pub fn mu_derivative(point: &DispersionPoint, spec: &VorticitySpec, g: f64) -> Result<f64> {
    let pencil = assemble_pencil(spec, point.lambda, point.epsilon, &point.grid, g)?;
    let p = point.grid.nodes();
    let psi = &point.psi;
    let n = p.len();
    let mut num = pencil.bottom_dlambda * psi[0] * psi[0];
    for i in 0..n - 1 {
        let h = p[i + 1] - p[i];
        let a_mid = spec.coefficient_a(point.lambda, 0.5 * (p[i] + p[i + 1]))?;
        let slope = (psi[i + 1] - psi[i]) / h;
        num += 1.5 * a_mid * slope * slope * h;
    }
    let mut den = 0.0;
    for i in 0..n {
        let h_lo = if i > 0 { p[i] - p[i - 1] } else { 0.0 };
        let h_hi = if i + 1 < n { p[i + 1] - p[i] } else { 0.0 };
        let w = 0.5 * (h_lo + h_hi);
        let a = spec.coefficient_a(point.lambda, p[i])?;
        num -= 0.5 * point.mu * w * psi[i] * psi[i] / a;
        den += w * a * psi[i] * psi[i];
    }
    Ok(num / den)
}

/// Transversality pairing at a bifurcation point.
///
/// `lhs` assembles the pairing of the eigenfunction with the
/// lambda-derivative terms of the linearized operator (interior terms
/// a^{-1}Psi^2 - 3 a_p Psi' Psi + (3/2) eps a^{-2} Psi^2, surface term
/// -(3/2) sqrt(lambda) Psi'(0) Psi(0), q-integral factored to pi).
/// `rhs` is the closed form -pi int (3a/2)(Psi')^2 + (1/(2a)) Psi^2 dp.
/// Both are negative and agree up to quadrature error.
pub fn transversality(
    point: &DispersionPoint,
    spec: &VorticitySpec,
    _g: f64,
) -> Result<(f64, f64)> {
    let p = point.grid.nodes();
    let psi = &point.psi;
    let n = p.len();
    let lambda = point.lambda;
    let eps = point.epsilon;

    let mut interior = 0.0;
    let mut rhs_int = 0.0;
    for i in 0..n - 1 {
        let h = p[i + 1] - p[i];
        let mid = 0.5 * (p[i] + p[i + 1]);
        let a = spec.coefficient_a(lambda, mid)?;
        let a_p = spec.gamma_eval(-mid)? / a;
        let slope = (psi[i + 1] - psi[i]) / h;
        let avg = 0.5 * (psi[i] + psi[i + 1]);
        interior += h
            * (avg * avg / a - 3.0 * a_p * slope * avg + 1.5 * eps * avg * avg / (a * a));
        rhs_int += h * (1.5 * a * slope * slope + 0.5 * avg * avg / a);
    }
    // one-sided Psi'(0) inside the top smooth region
    let width = 5.min(n);
    let w = fd_weights(0.0, &p[n - width..], 1);
    let dpsi0: f64 = w.iter().zip(&psi[n - width..]).map(|(a, b)| a * b).sum();
    let surface = -1.5 * lambda.sqrt() * dpsi0 * psi[n - 1];

    let pi = std::f64::consts::PI;
    Ok((pi * (interior + surface), -pi * rhs_int))
}
