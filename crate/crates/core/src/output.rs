//! Deterministic artifact writing: atomic file creation, 17-significant-digit
//! CSV formatting, and a manifest of every output with its content hash.

use crate::continuation::{Branch, HomotopyTable};
use crate::error::Result;
use crate::physical::PhysicalWave;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Full-precision decimal rendering so reruns compare byte for byte.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

/// Writes via a temp file in the same directory plus rename, so a crash
/// never leaves a partial artifact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Collects written artifacts and their hashes; serialized as the final
/// manifest.json of a run.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_path: String,
    /// flag overrides that shadowed config-file values, as "flag=value".
    pub overrides: Vec<String>,
    pub outputs: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
}

impl Manifest {
    pub fn new(command: &str, config_path: &str, overrides: Vec<String>) -> Self {
        Manifest {
            command: command.into(),
            config_path: config_path.into(),
            overrides,
            outputs: Vec::new(),
        }
    }

    /// Atomically writes one artifact and records its hash.
    pub fn write(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = dir.join(name);
        atomic_write(&path, bytes)?;
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        self.outputs.push(ManifestEntry {
            path: name.into(),
            sha256: format!("{:x}", hasher.finalize()),
        });
        Ok(path)
    }

    pub fn finish(&self, dir: &Path) -> Result<()> {
        let body = serde_json::to_vec_pretty(self)?;
        atomic_write(&dir.join("manifest.json"), &body)
    }
}

pub fn branch_csv(branch: &Branch) -> String {
    let mut out = String::from(
        "step,s,lambda,c,amplitude,max_hp,surface_residual,interface_residual,nodal_ok,tau_fit,mean_drift,newton_iters\n",
    );
    for p in &branch.points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            p.step,
            fmt_f64(p.s),
            fmt_f64(p.lambda),
            fmt_f64(p.c),
            fmt_f64(p.amplitude),
            fmt_f64(p.max_hp),
            fmt_f64(p.surface_residual),
            fmt_f64(p.interface_residual),
            p.nodal_ok,
            fmt_f64(p.tau_fit),
            fmt_f64(p.mean_drift),
            p.newton_iters,
        ));
    }
    out.push_str(&format!("# termination: {}\n", branch.reason));
    out
}

pub fn homotopy_csv(table: &HomotopyTable) -> String {
    let mut out = String::from("epsilon,lambda_star,failure\n");
    for row in &table.rows {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(row.epsilon),
            row.lambda_star.map(fmt_f64).unwrap_or_default(),
            row.failure.clone().unwrap_or_default(),
        ));
    }
    if let Some(order) = table.order {
        out.push_str(&format!("# empirical order: {}\n", fmt_f64(order)));
    }
    out
}

pub fn scan_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("lambda,mu\n");
    for (lambda, mu) in rows {
        out.push_str(&format!("{},{}\n", fmt_f64(*lambda), fmt_f64(*mu)));
    }
    out
}

pub fn laminar_csv(p: &[f64], height: &[f64], height_p: &[f64]) -> String {
    let mut out = String::from("p,height,height_p\n");
    for i in 0..p.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(p[i]),
            fmt_f64(height[i]),
            fmt_f64(height_p[i]),
        ));
    }
    out
}

pub fn profile_csv(wave: &PhysicalWave) -> String {
    let mut out = String::from("x,eta\n");
    for (x, eta) in wave.x.iter().zip(&wave.surface) {
        out.push_str(&format!("{},{}\n", fmt_f64(*x), fmt_f64(*eta)));
    }
    out
}

pub fn field_csv(wave: &PhysicalWave) -> String {
    let mut out = String::from("x,y,u,v,pressure,psi\n");
    let nq1 = wave.nq() + 1;
    for ip in 0..wave.psi.len() {
        for iq in 0..nq1 {
            let k = ip * nq1 + iq;
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_f64(wave.x[iq]),
                fmt_f64(wave.y[k]),
                fmt_f64(wave.u[k]),
                fmt_f64(wave.v[k]),
                fmt_f64(wave.pressure[k]),
                fmt_f64(wave.psi[ip]),
            ));
        }
    }
    out
}
