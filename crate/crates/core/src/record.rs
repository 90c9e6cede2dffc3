//! Per-sample logs of a tracking run and their CSV/JSON forms.
//!
//! CSV columns, in order:
//!
//! ```text
//! k, t, x_0..x_{n-1}, xstar_0..xstar_{n-1}, err, fpr, cost
//!   [, pred_0..pred_{n-1}, pred_err]   prediction-correction runs
//!   [, lambda_0..lambda_{p-1}]         dual ascent runs
//! ```
//!
//! Missing values (no ground truth attached, no prediction at `k = 0`) are
//! written as empty fields. Floats use the shortest representation that
//! round-trips.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::running::EvalCounts;
use crate::{Error, Result, Vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub k: usize,
    pub t: f64,
    pub x: Vec<f64>,
    /// `x̃_{k|k-1}`, the prediction this row was corrected from.
    pub prediction: Option<Vec<f64>>,
    pub xstar: Option<Vec<f64>>,
    pub tracking_error: Option<f64>,
    pub prediction_error: Option<f64>,
    pub fixed_point_residual: f64,
    pub cost: f64,
    pub dual: Option<Vec<f64>>,
}

impl TrajectoryRow {
    pub fn x(&self) -> Vector {
        Vector::from_column_slice(&self.x)
    }

    pub fn dual(&self) -> Option<Vector> {
        self.dual.as_deref().map(Vector::from_column_slice)
    }

    pub fn prediction(&self) -> Option<Vector> {
        self.prediction.as_deref().map(Vector::from_column_slice)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub method: String,
    pub prediction_correction: bool,
    pub dimension: usize,
    pub step: f64,
    pub corrections: usize,
    /// Where `∇tx f` came from: `analytic` or `backward-difference`.
    pub drift_source: Option<String>,
    pub warnings: Vec<String>,
    pub counts: EvalCounts,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub meta: RecordMeta,
    rows: Vec<TrajectoryRow>,
}

impl TrajectoryRecord {
    pub fn new(meta: RecordMeta) -> Self {
        Self {
            meta,
            rows: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, row: TrajectoryRow) {
        debug_assert_eq!(row.k, self.rows.len());
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[TrajectoryRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn has_ground_truth(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.xstar.is_some())
    }

    /// Tracking errors `‖x_k − x*(t_k)‖`; empty without ground truth.
    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.tracking_error).collect()
    }

    /// Fills `xstar`, `tracking_error` and `prediction_error` from a series
    /// aligned on `k`.
    pub fn attach_ground_truth(&mut self, truth: &[Vector]) -> Result<()> {
        if truth.len() != self.rows.len() {
            return Err(Error::InvalidInput(format!(
                "ground truth has {} samples, record has {}",
                truth.len(),
                self.rows.len()
            )));
        }
        for (row, xs) in self.rows.iter_mut().zip(truth) {
            if xs.len() != row.x.len() {
                return Err(Error::InvalidInput(format!(
                    "ground truth at k = {} has dimension {}, expected {}",
                    row.k,
                    xs.len(),
                    row.x.len()
                )));
            }
            let x = Vector::from_column_slice(&row.x);
            row.tracking_error = Some((x - xs).norm());
            row.prediction_error = row
                .prediction
                .as_deref()
                .map(|p| (Vector::from_column_slice(p) - xs).norm());
            row.xstar = Some(xs.iter().copied().collect());
        }
        Ok(())
    }

    fn dual_dimension(&self) -> Option<usize> {
        self.rows.iter().find_map(|r| r.dual.as_ref().map(Vec::len))
    }

    pub fn csv_header(&self) -> Vec<String> {
        let n = self.meta.dimension;
        let mut header = vec!["k".to_string(), "t".to_string()];
        header.extend((0..n).map(|i| format!("x_{i}")));
        header.extend((0..n).map(|i| format!("xstar_{i}")));
        header.extend(["err", "fpr", "cost"].map(String::from));
        if self.meta.prediction_correction {
            header.extend((0..n).map(|i| format!("pred_{i}")));
            header.push("pred_err".into());
        }
        if let Some(p) = self.dual_dimension() {
            header.extend((0..p).map(|i| format!("lambda_{i}")));
        }
        header
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let n = self.meta.dimension;
        let dual = self.dual_dimension();
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.csv_header())?;
        for row in &self.rows {
            let mut fields = vec![row.k.to_string(), num(row.t)];
            fields.extend(row.x.iter().map(|v| num(*v)));
            fields.extend(optional_vec(row.xstar.as_deref(), n));
            fields.push(row.tracking_error.map(num).unwrap_or_default());
            fields.push(num(row.fixed_point_residual));
            fields.push(num(row.cost));
            if self.meta.prediction_correction {
                fields.extend(optional_vec(row.prediction.as_deref(), n));
                fields.push(row.prediction_error.map(num).unwrap_or_default());
            }
            if let Some(p) = dual {
                fields.extend(optional_vec(row.dual.as_deref(), p));
            }
            w.write_record(&fields)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn optional_vec(v: Option<&[f64]>, n: usize) -> Vec<String> {
    match v {
        Some(v) => v.iter().map(|x| num(*x)).collect(),
        None => vec![String::new(); n],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(prediction: bool) -> TrajectoryRecord {
        let mut r = TrajectoryRecord::new(RecordMeta {
            method: "projected-gradient".into(),
            prediction_correction: prediction,
            dimension: 2,
            ..Default::default()
        });
        for k in 0..3 {
            r.push(TrajectoryRow {
                k,
                t: 0.1 * k as f64,
                x: vec![k as f64, 1.0],
                prediction: (prediction && k > 0).then(|| vec![k as f64, 0.5]),
                xstar: None,
                tracking_error: None,
                prediction_error: None,
                fixed_point_residual: 0.0,
                cost: 1.5,
                dual: None,
            });
        }
        r
    }

    #[test]
    fn ground_truth_fills_errors() {
        let mut r = record(true);
        let truth = vec![Vector::from_column_slice(&[0.0, 1.0]); 3];
        r.attach_ground_truth(&truth).unwrap();
        assert_eq!(r.errors(), vec![0.0, 1.0, 2.0]);
        assert_eq!(r.rows()[0].prediction_error, None);
        assert_eq!(r.rows()[1].prediction_error, Some((1.0f64 + 0.25).sqrt()));
        assert!(r.attach_ground_truth(&truth[..2]).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut r = record(true);
        r.attach_ground_truth(&vec![Vector::from_column_slice(&[0.0, 1.0]); 3])
            .unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "k,t,x_0,x_1,xstar_0,xstar_1,err,fpr,cost,pred_0,pred_1,pred_err"
        );
        assert_eq!(lines.next().unwrap(), "0,0.0,0.0,1.0,0.0,1.0,0.0,0.0,1.5,,,");
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn running_csv_has_no_prediction_columns() {
        let r = record(false);
        assert_eq!(r.csv_header().len(), 2 + 2 + 2 + 3);
    }

    #[test]
    fn json_round_trip() {
        let r = record(true);
        assert_eq!(TrajectoryRecord::from_json(&r.to_json().unwrap()).unwrap(), r);
    }
}
