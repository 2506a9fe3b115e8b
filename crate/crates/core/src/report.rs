//! Serializable reports and CSV tables emitted by the command line.

use crate::anisotropy::{easy_axis, AnisotropyTensor, Formula};
use crate::cell_solver::{CellMesh, CellSolution, ExchangeTensor, MeshParams};
use crate::config::RulesConfig;
use crate::error::{Error, Result};
use crate::gamma_validator::EpsSweep;
use crate::linalg::Mat3;
use serde::Serialize;
use serde_json::Value;
use std::io::Write;

pub type Matrix3 = [[f64; 3]; 3];

#[derive(Debug, Clone, Serialize)]
pub struct AhomReport {
    pub formula_used: Formula,
    /// Self terms of f1 and f2, cross term, in-plane thickness term.
    pub terms: Vec<Matrix3>,
    pub total: Matrix3,
    pub sym: Matrix3,
    pub easy_axis: [f64; 3],
    pub easy_value: f64,
    pub spectrum: [f64; 3],
    pub degenerate: bool,
    pub rule_parameters: RulesConfig,
}

impl AhomReport {
    pub fn new(a: &AnisotropyTensor<f64>, rules: &RulesConfig) -> Self {
        let e = easy_axis(a);
        Self {
            formula_used: a.formula,
            terms: a.terms.iter().map(Mat3::to_f64).collect(),
            total: a.total.to_f64(),
            sym: a.sym.to_f64(),
            easy_axis: e.axis,
            easy_value: e.value,
            spectrum: e.spectrum,
            degenerate: e.degenerate,
            rule_parameters: *rules,
        }
    }

    /// One row per matrix: name, then the nine entries row-major.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["matrix".to_string()];
        for i in 1..=3 {
            for j in 1..=3 {
                header.push(format!("a{i}{j}"));
            }
        }
        out.write_record(&header).map_err(csv_err)?;
        let names = ["term1", "term2", "term3", "term4"];
        let mut rows: Vec<(&str, &Matrix3)> = names.iter().copied().zip(self.terms.iter()).collect();
        rows.push(("total", &self.total));
        rows.push(("sym", &self.sym));
        for (name, m) in rows {
            let mut rec = vec![name.to_string()];
            rec.extend(m.iter().flatten().map(|v| v.to_string()));
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct XiReport {
    pub xi: [[f64; 2]; 3],
    pub energy: f64,
    pub reconstructed: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
#[allow(non_snake_case)]
pub struct GhomReport {
    pub G: [[f64; 2]; 2],
    pub basis_energies: [f64; 3],
    pub residuals: [f64; 3],
    pub volume: f64,
    pub mesh: MeshParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<XiReport>,
}

impl GhomReport {
    pub fn new(g: &ExchangeTensor<f64>, mesh: &MeshParams, xi: Option<&CellSolution<f64>>) -> Self {
        Self {
            G: g.g,
            basis_energies: g.basis_energies,
            residuals: g.residuals,
            volume: g.volume,
            mesh: *mesh,
            xi: xi.map(|s| XiReport {
                xi: s.xi,
                energy: s.energy,
                reconstructed: g.energy(&s.xi),
                residual: s.residual,
                iterations: s.iterations,
            }),
        }
    }
}

/// Corrector per mesh node: grid indices, physical position, the three components.
pub fn write_corrector_csv(mesh: &CellMesh<f64>, sol: &CellSolution<f64>, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["node", "i", "j", "k", "y1", "y2", "y3", "phi1", "phi2", "phi3"]).map_err(csv_err)?;
    for (a, phi) in sol.phi.iter().enumerate() {
        let (i, j, k) = mesh.node_indices(a);
        let y = mesh.node_position(a);
        let mut rec = vec![a.to_string(), i.to_string(), j.to_string(), k.to_string()];
        rec.extend(y.iter().chain(phi.iter()).map(|v| v.to_string()));
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct EasyAxisReport {
    pub formula_used: Formula,
    pub m: [f64; 3],
    /// `|ω|` times the smallest eigenvalue.
    pub energy: f64,
    pub spectrum: [f64; 3],
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub formula_used: Formula,
    #[serde(flatten)]
    pub sweep: EpsSweep,
}

impl SweepReport {
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["eps", "I_eps", "target", "abs_error", "rel_error"]).map_err(csv_err)?;
        for r in &self.sweep.records {
            out.write_record([r.eps, r.i_eps, r.target, r.abs_error, r.rel_error].map(|v| v.to_string()))
                .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyOutput {
    pub exchange_term: f64,
    pub anisotropy_term: f64,
    pub total: f64,
    /// Energy of the best constant field, a lower bound for `total`.
    pub constant_minimum: f64,
    pub grid: [usize; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst measured deviation for the check.
    pub measured: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn all_finite(v: &Value) -> bool {
    match v {
        Value::Null => false,
        Value::Number(n) => n.as_f64().is_some_and(f64::is_finite),
        Value::Array(a) => a.iter().all(all_finite),
        Value::Object(o) => o.values().all(all_finite),
        _ => true,
    }
}

/// Pretty JSON with a trailing newline; fails if any number is not finite.
pub fn render<R: Serialize>(r: &R) -> Result<String> {
    let v = serde_json::to_value(r).map_err(|e| Error::Config(e.to_string()))?;
    if !all_finite(&v) {
        return Err(Error::NonFinite("report"));
    }
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_rejects_non_finite() {
        #[derive(Serialize)]
        struct R {
            x: f64,
        }
        assert!(render(&R { x: 1.5 }).unwrap().contains("1.5"));
        assert!(matches!(render(&R { x: f64::NAN }), Err(Error::NonFinite(_))));
        assert!(render(&R { x: f64::INFINITY }).is_err());
    }

    #[test]
    fn ahom_csv_layout() {
        let a = AnisotropyTensor::from_total(Mat3::diag([0.0, 0.0, 1.0]), vec![Mat3::zeros(); 4], Formula::General);
        let r = AhomReport::new(&a, &RulesConfig::default());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 7);
        assert!(lines[0].starts_with("matrix,a11,a12"));
        assert_eq!(lines[5], "total,0,0,0,0,0,0,0,0,1");
    }
}
