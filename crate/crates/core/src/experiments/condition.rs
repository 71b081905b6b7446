use serde::{Deserialize, Serialize};

use super::{csv_row, fmt_f64, par_map, ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};
use crate::pencil::{build_pencil, dense_condition, lanczos_condition, ConditionResult, LanczosOptions, PencilKind, PencilSpec, DENSE_LIMIT};
use crate::study::StudyDiscretization;

/// One pencil at one resolution. Failures are kept as messages so the rest
/// of the table still gets computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCell {
    pub pencil: PencilKind,
    pub n: usize,
    pub s: Option<f64>,
    pub dofs: usize,
    pub result: std::result::Result<ConditionResult, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionTable {
    pub dimension: usize,
    pub resolutions: Vec<usize>,
    pub pencils: Vec<PencilKind>,
    /// Row-major over pencils, then resolutions.
    pub cells: Vec<ConditionCell>,
}

impl ConditionTable {
    pub fn cell(&self, pencil: PencilKind, n: usize) -> Option<&ConditionCell> {
        self.cells.iter().find(|c| c.pencil == pencil && c.n == n)
    }

    /// `κ` per resolution for one pencil; `None` where the cell failed.
    pub fn row(&self, pencil: PencilKind) -> Vec<Option<f64>> {
        self.resolutions
            .iter()
            .map(|&n| self.cell(pencil, n).and_then(|c| c.result.as_ref().ok()).map(|r| r.kappa))
            .collect()
    }

    /// Pencils as rows, `1/h` as columns; failed cells read `error`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["pencil".to_string(), "dimension".into(), "s".into()];
        header.extend(self.resolutions.iter().map(|n| format!("1/h={n}")));
        csv_row(&mut w, header)?;
        for &p in &self.pencils {
            let s = self.cells.iter().find(|c| c.pencil == p).and_then(|c| c.s);
            let mut row = vec![p.label().to_string(), self.dimension.to_string(), s.map(fmt_f64).unwrap_or_default()];
            row.extend(self.row(p).into_iter().map(|k| k.map(fmt_f64).unwrap_or_else(|| "error".into())));
            csv_row(&mut w, row)?;
        }
        w.flush().map_err(|e| Error::io("csv output", e))?;
        Ok(())
    }

    /// One line per cell with both eigenvalue bounds and the method.
    pub fn write_cells_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        csv_row(&mut w, ["pencil", "dimension", "n", "s", "dofs", "kappa", "lambda_min_abs", "lambda_max_abs", "method", "error"])?;
        for c in &self.cells {
            let mut row = vec![
                c.pencil.label().to_string(),
                self.dimension.to_string(),
                c.n.to_string(),
                c.s.map(fmt_f64).unwrap_or_default(),
                c.dofs.to_string(),
            ];
            match &c.result {
                Ok(r) => {
                    let method = serde_json::to_value(r.method)?.as_str().unwrap_or_default().to_string();
                    row.extend([fmt_f64(r.kappa), fmt_f64(r.lambda_min_abs), fmt_f64(r.lambda_max_abs), method, String::new()]);
                }
                Err(e) => row.extend([String::new(), String::new(), String::new(), String::new(), e.clone()]),
            }
            csv_row(&mut w, row)?;
        }
        w.flush().map_err(|e| Error::io("csv output", e))?;
        Ok(())
    }
}

/// Condition numbers of the configured pencils over the configured
/// resolutions. The energy pencil uses the configured exponent.
pub fn run_condition_table(config: &ExperimentConfig) -> Result<ConditionTable> {
    config.validate(ExperimentKind::ConditionTable)?;
    let dim = config.dimension;
    let resolutions = config.resolutions();
    let per_n = par_map(&resolutions, |&n| -> Vec<ConditionCell> {
        let disc = StudyDiscretization::new(dim, n, config.radius);
        config
            .pencils
            .iter()
            .map(|&kind| {
                let spec = PencilSpec {
                    kind,
                    dimension: dim,
                    n,
                    s: (kind == PencilKind::Energy).then(|| config.exponent()),
                    radius: config.radius,
                };
                let mut dofs = 0;
                let result = disc
                    .as_ref()
                    .map_err(|e| e.to_string())
                    .and_then(|d| build_pencil(&spec, d).map_err(|e| e.to_string()))
                    .and_then(|p| {
                        dofs = p.dim();
                        if p.dim() <= DENSE_LIMIT {
                            dense_condition(&p)
                        } else if config.lanczos {
                            lanczos_condition(&p, &LanczosOptions::default())
                        } else {
                            Err(Error::Config(format!("{} unknowns need the Lanczos path, which is disabled", p.dim())))
                        }
                        .map_err(|e| e.to_string())
                    });
                ConditionCell {
                    pencil: kind,
                    n,
                    s: spec.s,
                    dofs,
                    result,
                }
            })
            .collect()
    });
    let mut cells = Vec::new();
    for &kind in &config.pencils {
        for row in &per_n {
            cells.extend(row.iter().filter(|c| c.pencil == kind).cloned());
        }
    }
    Ok(ConditionTable {
        dimension: dim,
        resolutions,
        pencils: config.pencils.clone(),
        cells,
    })
}
