use serde::{Deserialize, Serialize};

use super::{csv_row, fmt_f64};
use crate::error::{Error, Result};
use crate::precond::scalar_model_condition;

pub const PARAMETER_NAMES: [&str; 5] = ["alpha1", "alpha2", "beta1", "beta2", "gamma"];

/// Log-spaced grid `10^e` for `e` from `min_exponent` to `max_exponent` in
/// steps of `1 / points_per_decade`, used for all five parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalarGrid {
    pub min_exponent: i32,
    pub max_exponent: i32,
    pub points_per_decade: usize,
}

impl Default for ScalarGrid {
    fn default() -> Self {
        ScalarGrid {
            min_exponent: -8,
            max_exponent: 8,
            points_per_decade: 3,
        }
    }
}

impl ScalarGrid {
    pub fn validate(&self) -> Result<()> {
        if self.points_per_decade == 0 || self.max_exponent < self.min_exponent {
            return Err(Error::Config(format!("empty scalar grid {self:?}")));
        }
        if self.values().len().pow(5) > 1 << 32 {
            return Err(Error::Config("scalar grid has more than 2^32 points".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let steps = (self.max_exponent - self.min_exponent) as usize * self.points_per_decade;
        (0..=steps)
            .map(|i| 10f64.powf(self.min_exponent as f64 + i as f64 / self.points_per_decade as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarReport {
    pub grid: ScalarGrid,
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
    pub min_condition: f64,
    pub max_condition: f64,
    /// Parameters at the maximum, ordered as [`PARAMETER_NAMES`].
    pub argmax: [f64; 5],
    pub argmin: [f64; 5],
    /// For each parameter and grid value, the largest condition number over
    /// all other parameters.
    pub marginal_max: Vec<[f64; 5]>,
}

impl ScalarReport {
    pub fn ratio(&self) -> f64 {
        self.max_condition / self.min_condition
    }

    /// Header comment lines with the grid and extremes, then one row per grid
    /// value with the marginal maxima.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("csv output", e);
        writeln!(out, "# grid 10^{}..10^{}, {} points per decade, {} evaluations", self.grid.min_exponent, self.grid.max_exponent, self.grid.points_per_decade, self.points).map_err(io)?;
        writeln!(out, "# max cond {} at {:?}", fmt_f64(self.max_condition), self.argmax).map_err(io)?;
        writeln!(out, "# min cond {} at {:?}", fmt_f64(self.min_condition), self.argmin).map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["value".to_string()];
        header.extend(PARAMETER_NAMES.iter().map(|p| format!("max_cond_{p}")));
        csv_row(&mut w, header)?;
        for (v, row) in self.grid.values().iter().zip(&self.marginal_max) {
            let mut fields = vec![fmt_f64(*v)];
            fields.extend(row.iter().map(|c| fmt_f64(*c)));
            csv_row(&mut w, fields)?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }
}

/// `cond(B A)` of the 3×3 model over the full five-parameter grid.
pub fn run_scalar_model(grid: &ScalarGrid) -> Result<ScalarReport> {
    grid.validate()?;
    let vals = grid.values();
    let m = vals.len();
    let mut marginal = vec![[0.0f64; 5]; m];
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let (mut argmin, mut argmax) = ([0.0; 5], [0.0; 5]);
    let mut idx = [0usize; 5];
    for flat in 0..m.pow(5) {
        let mut r = flat;
        for slot in idx.iter_mut().rev() {
            *slot = r % m;
            r /= m;
        }
        let p = idx.map(|i| vals[i]);
        let c = scalar_model_condition(p[0], p[1], p[2], p[3], p[4])?;
        for (j, &i) in idx.iter().enumerate() {
            marginal[i][j] = marginal[i][j].max(c);
        }
        if c > hi {
            hi = c;
            argmax = p;
        }
        if c < lo {
            lo = c;
            argmin = p;
        }
    }
    Ok(ScalarReport {
        grid: *grid,
        lower: vals[0],
        upper: vals[m - 1],
        points: m.pow(5),
        min_condition: lo,
        max_condition: hi,
        argmax,
        argmin,
        marginal_max: marginal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_values() {
        let g = ScalarGrid {
            min_exponent: -2,
            max_exponent: 1,
            points_per_decade: 2,
        };
        let v = g.values();
        assert_eq!(v.len(), 7);
        assert!((v[0] - 0.01).abs() < 1e-15 && (v[6] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn single_point_grid() {
        let g = ScalarGrid {
            min_exponent: 0,
            max_exponent: 0,
            points_per_decade: 1,
        };
        let r = run_scalar_model(&g).unwrap();
        assert_eq!(r.points, 1);
        assert_eq!(r.argmax, [1.0; 5]);
        assert_eq!(r.max_condition, scalar_model_condition(1.0, 1.0, 1.0, 1.0, 1.0).unwrap());
    }
}
