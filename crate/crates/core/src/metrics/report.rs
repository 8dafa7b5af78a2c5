use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::{average_precision, pose_accuracy, ErrorKind, MetricGrids, PartMatchRecord};

/// Column names of the delimited report, after `category`.
pub const REPORT_COLUMNS: [&str; 12] = [
    "AP_1_10",
    "AP_5",
    "AP_10",
    "AP_1_10cm",
    "AP_5cm",
    "AP_10cm",
    "AP_05_07",
    "AP_05",
    "AP_07",
    "ACC_10",
    "ACC_10cm",
    "ACC_07",
];

/// One category (or the mean) of an evaluation; all values in percent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub category: String,
    pub parts: usize,
    #[serde(rename = "AP_1_10")]
    pub ap_rot_avg: f64,
    #[serde(rename = "AP_5")]
    pub ap_rot_5: f64,
    #[serde(rename = "AP_10")]
    pub ap_rot_10: f64,
    #[serde(rename = "AP_1_10cm")]
    pub ap_trans_avg: f64,
    #[serde(rename = "AP_5cm")]
    pub ap_trans_5: f64,
    #[serde(rename = "AP_10cm")]
    pub ap_trans_10: f64,
    #[serde(rename = "AP_05_07")]
    pub ap_iou_avg: f64,
    #[serde(rename = "AP_05")]
    pub ap_iou_05: f64,
    #[serde(rename = "AP_07")]
    pub ap_iou_07: f64,
    #[serde(rename = "ACC_10")]
    pub acc_rot_10: f64,
    #[serde(rename = "ACC_10cm")]
    pub acc_trans_10: f64,
    #[serde(rename = "ACC_07")]
    pub acc_iou_07: f64,
}

impl ReportRow {
    pub fn values(&self) -> [f64; 12] {
        [
            self.ap_rot_avg,
            self.ap_rot_5,
            self.ap_rot_10,
            self.ap_trans_avg,
            self.ap_trans_5,
            self.ap_trans_10,
            self.ap_iou_avg,
            self.ap_iou_05,
            self.ap_iou_07,
            self.acc_rot_10,
            self.acc_trans_10,
            self.acc_iou_07,
        ]
    }

    fn from_values(category: String, parts: usize, v: [f64; 12]) -> Self {
        Self {
            category,
            parts,
            ap_rot_avg: v[0],
            ap_rot_5: v[1],
            ap_rot_10: v[2],
            ap_trans_avg: v[3],
            ap_trans_5: v[4],
            ap_trans_10: v[5],
            ap_iou_avg: v[6],
            ap_iou_05: v[7],
            ap_iou_07: v[8],
            acc_rot_10: v[9],
            acc_trans_10: v[10],
            acc_iou_07: v[11],
        }
    }

    fn evaluate(category: String, records: &[PartMatchRecord], grids: &MetricGrids) -> Result<Self> {
        let rot = average_precision(records, ErrorKind::Rot, &grids.rot_deg)?;
        let trans = average_precision(records, ErrorKind::Trans, &grids.trans_m)?;
        let iou = average_precision(records, ErrorKind::Iou, &grids.iou)?;
        let at = |kind, tau| average_precision(records, kind, &[tau]).map(|c| c.averaged);
        let acc = pose_accuracy(records)?;
        Ok(Self::from_values(
            category,
            records.len(),
            [
                rot.averaged,
                at(ErrorKind::Rot, 5.0)?,
                at(ErrorKind::Rot, 10.0)?,
                trans.averaged,
                at(ErrorKind::Trans, 0.05)?,
                at(ErrorKind::Trans, 0.10)?,
                iou.averaged,
                at(ErrorKind::Iou, 0.5)?,
                at(ErrorKind::Iou, 0.7)?,
                acc.rot_10,
                acc.trans_10cm,
                acc.iou_07,
            ],
        ))
    }
}

/// Per-category rows, sorted by name, and their unweighted mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub mean: ReportRow,
}

impl EvalReport {
    pub fn from_records(records: &[PartMatchRecord], grids: &MetricGrids) -> Result<Self> {
        let mut by_cat: BTreeMap<&str, Vec<PartMatchRecord>> = BTreeMap::new();
        for r in records {
            by_cat.entry(r.category.as_str()).or_default().push(r.clone());
        }
        if by_cat.is_empty() {
            return Err(crate::Error::EmptyGroundTruth);
        }
        let rows = by_cat
            .into_iter()
            .map(|(cat, mut rs)| {
                super::sort_records(&mut rs);
                ReportRow::evaluate(cat.to_string(), &rs, grids)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut mean = [0.0; 12];
        for row in &rows {
            for (m, v) in mean.iter_mut().zip(row.values()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= rows.len() as f64);
        let parts = rows.iter().map(|r| r.parts).sum();
        Ok(Self {
            mean: ReportRow::from_values("mean".into(), parts, mean),
            rows,
        })
    }

    pub fn all_rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().chain(std::iter::once(&self.mean))
    }

    /// Comma-separated table: header, one row per category, then the mean.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("category,parts");
        for c in REPORT_COLUMNS {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for row in self.all_rows() {
            out.push_str(&format!("{},{}", row.category, row.parts));
            for v in row.values() {
                out.push_str(&format!(",{v:.2}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width rendering for terminals.
    pub fn to_table(&self) -> String {
        let width = self.all_rows().map(|r| r.category.len()).max().unwrap_or(8).max(8);
        let mut out = format!("{:<width$} {:>6}", "category", "parts");
        for c in REPORT_COLUMNS {
            out.push_str(&format!(" {c:>9}"));
        }
        out.push('\n');
        for row in self.all_rows() {
            out.push_str(&format!("{:<width$} {:>6}", row.category, row.parts));
            for v in row.values() {
                out.push_str(&format!(" {v:>9.2}"));
            }
            out.push('\n');
        }
        out
    }
}
