//! Maps hodograph-plane states back to physical variables: surface profile,
//! velocity field, pressure, streamlines, and the stagnation margin.

use crate::error::{Error, Result};
use crate::laminar::{self, LaminarFlow};
use crate::operator::{node_derivatives, Grid2D, WaveState};
use crate::vorticity::VorticitySpec;

/// Physical fields sampled on the image of the grid, node-major index
/// ip * (nq + 1) + iq with ip = 0 the deepest row.
#[derive(Debug, Clone)]
pub struct PhysicalWave {
    /// horizontal positions x = q on the half period [0, pi].
    pub x: Vec<f64>,
    /// free surface eta(x), the p = 0 row of y.
    pub surface: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub pressure: Vec<f64>,
    /// stream function value per p-row (constant along streamlines).
    pub psi: Vec<f64>,
    pub c: f64,
    /// min over the grid of c - u = 1 / max h_p.
    pub stagnation_margin: f64,
    nq: usize,
}

impl PhysicalWave {
    pub fn node(&self, iq: usize, ip: usize) -> usize {
        ip * (self.nq + 1) + iq
    }

    pub fn nq(&self) -> usize {
        self.nq
    }
}

/// Reconstructs the physical wave from a height-function state. The head is
/// normalized so the pressure on the free surface equals `p_atm`:
/// P = p_atm - (1/2)((u-c)^2 + v^2) - g y + Gamma(p).
pub fn reconstruct(
    spec: &VorticitySpec,
    grid: &Grid2D,
    state: &WaveState,
    g: f64,
    p_atm: f64,
) -> Result<PhysicalWave> {
    let flow = LaminarFlow::new(spec, state.lambda, g, grid.p_nodes())?;
    let c = laminar::wave_speed(state.lambda, spec.gamma_limit())?;
    let d = node_derivatives(spec, grid, state)?;
    let np = grid.np();
    let nq = grid.nq();
    let p = grid.p_nodes();
    let n = (np + 1) * (nq + 1);
    let mut y = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut pressure = vec![0.0; n];
    let mut max_hp = 0.0f64;
    for ip in 0..=np {
        let big_gamma = spec.big_gamma(p[ip])?;
        for iq in 0..=nq {
            let k = ip * (nq + 1) + iq;
            let h_p = flow.height_p[ip] + d.wp[k];
            if h_p <= 0.0 {
                return Err(Error::Stagnation {
                    q: grid.q_nodes()[iq],
                    p: p[ip],
                    height_p: h_p,
                });
            }
            max_hp = max_hp.max(h_p);
            let h_q = d.wq[k];
            y[k] = flow.height[ip] + d.w[k];
            u[k] = c - 1.0 / h_p;
            v[k] = -h_q / h_p;
            let grad_sq = (1.0 + h_q * h_q) / (h_p * h_p);
            pressure[k] = p_atm - 0.5 * grad_sq - g * y[k] + big_gamma;
        }
    }
    let surface = y[np * (nq + 1)..].to_vec();
    Ok(PhysicalWave {
        x: grid.q_nodes().to_vec(),
        surface,
        y,
        u,
        v,
        pressure,
        psi: p.iter().map(|&pv| -pv).collect(),
        c,
        stagnation_margin: 1.0 / max_hp,
        nq,
    })
}

/// Distance from horizontal stagnation: 1 / (max over the grid of h_p).
pub fn stagnation_margin(
    spec: &VorticitySpec,
    grid: &Grid2D,
    state: &WaveState,
    g: f64,
) -> Result<f64> {
    let flow = LaminarFlow::new(spec, state.lambda, g, grid.p_nodes())?;
    let d = node_derivatives(spec, grid, state)?;
    let mut max_hp = f64::NEG_INFINITY;
    for ip in 0..=grid.np() {
        for iq in 0..=grid.nq() {
            max_hp = max_hp.max(flow.height_p[ip] + d.wp[ip * (grid.nq() + 1) + iq]);
        }
    }
    Ok(1.0 / max_hp)
}

/// Streamline curves {(q, h(q, p_level))}; level 0 is the free surface.
/// Heights between grid rows are linearly interpolated in p.
pub fn streamlines(
    spec: &VorticitySpec,
    grid: &Grid2D,
    state: &WaveState,
    g: f64,
    levels: &[f64],
) -> Result<Vec<Vec<(f64, f64)>>> {
    let p = grid.p_nodes();
    let p_max = -p[0];
    let nq = grid.nq();
    let mut out = Vec::with_capacity(levels.len());
    for &level in levels {
        if level <= -p_max || level > 0.0 {
            return Err(Error::Domain(format!(
                "streamline level p = {level} outside ({}, 0]",
                -p_max
            )));
        }
        let ip = match p.binary_search_by(|x| x.partial_cmp(&level).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
        .min(grid.np() - 1);
        let frac = (level - p[ip]) / (p[ip + 1] - p[ip]);
        let h_lam = laminar::laminar_height(spec, state.lambda, level, g)?;
        let wat = |iq: usize, j: usize| {
            if j == 0 {
                0.0
            } else {
                state.w[grid.idx(iq, j)]
            }
        };
        let curve: Vec<(f64, f64)> = (0..=nq)
            .map(|iq| {
                let w = (1.0 - frac) * wat(iq, ip) + frac * wat(iq, ip + 1);
                (grid.q_nodes()[iq], h_lam + w)
            })
            .collect();
        out.push(curve);
    }
    Ok(out)
}
