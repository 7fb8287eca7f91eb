//! Sampled trajectories and the tabular reports written by the CLI.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

/// Sampled trajectory. Raw values are in `hbar = 1` units: `times` in the
/// time unit, `charge` in energy units, `ec` in energy per time.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub charge: Vec<f64>,
    pub ec: Vec<f64>,
    /// Additional channels (fidelities, populations), same length as `times`.
    pub extra: BTreeMap<String, Vec<f64>>,
}

impl TimeSeries {
    pub fn with_capacity(n: usize) -> Self {
        TimeSeries {
            times: Vec::with_capacity(n),
            charge: Vec::with_capacity(n),
            ec: Vec::with_capacity(n),
            extra: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, charge: f64, ec: f64) {
        self.times.push(t);
        self.charge.push(charge);
        self.ec.push(ec);
    }

    pub fn push_extra(&mut self, label: &str, value: f64) {
        self.extra.entry(label.to_string()).or_default().push(value);
    }

    pub fn channel(&self, label: &str) -> Option<&[f64]> {
        match label {
            "times" => Some(&self.times),
            "charge" => Some(&self.charge),
            "ec" => Some(&self.ec),
            other => self.extra.get(other).map(Vec::as_slice),
        }
    }

    /// All channels share the length of `times`.
    pub fn is_consistent(&self) -> bool {
        let n = self.times.len();
        self.charge.len() == n && self.ec.len() == n && self.extra.values().all(|c| c.len() == n)
    }

    pub fn max_charge(&self) -> f64 {
        self.charge.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_ec(&self) -> f64 {
        self.ec.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Report table with unit-suffixed columns: `t_J` (time times `J`),
    /// `charge_over_E0` (charge over `E0 = 2 omega`) and `ec_hbar_omega_J`
    /// (current over `omega J`). Extra channels are appended under their own
    /// labels; those ending in `_hbar_omega_J` hold raw currents and are
    /// scaled like `ec`, the rest are written as stored.
    pub fn to_table(&self, omega: f64, j: f64) -> Table {
        let mut columns = vec![
            "t_J".to_string(),
            "charge_over_E0".to_string(),
            "ec_hbar_omega_J".to_string(),
        ];
        columns.extend(self.extra.keys().cloned());
        let e0 = 2.0 * omega;
        let rows = (0..self.len())
            .map(|k| {
                let mut row = vec![
                    Cell::Num(self.times[k] * j),
                    Cell::Num(self.charge[k] / e0),
                    Cell::Num(self.ec[k] / (omega * j)),
                ];
                row.extend(self.extra.iter().map(|(label, c)| {
                    if label.ends_with("_hbar_omega_J") {
                        Cell::Num(c[k] / (omega * j))
                    } else {
                        Cell::Num(c[k])
                    }
                }));
                row
            })
            .collect();
        Table { columns, rows }
    }
}

/// A single report cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    /// Empty in CSV, `null` in JSON.
    Missing,
}

/// Ordered table of cells with named columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// Fifteen significant digits in scientific notation, `.` decimal.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        // normalizes -0.0 as well
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    format!("{v:.14e}")
}

fn json_number(v: f64) -> serde_json::Value {
    // Same digits as the CSV, parsed back so JSON holds the identical value.
    let s = format_number(v);
    s.parse::<f64>()
        .ok()
        .and_then(serde_json::Number::from_f64)
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => format_number(*v),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(s) => s.clone(),
                    Cell::Bool(b) => b.to_string(),
                    Cell::Missing => String::new(),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// `{"columns": [...], "rows": [{col: value, ...}, ...]}` plus any
    /// top-level metadata.
    pub fn to_json(&self, meta: &BTreeMap<String, serde_json::Value>) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, serde_json::Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(name, c)| {
                        let v = match c {
                            Cell::Num(v) => json_number(*v),
                            Cell::Int(i) => serde_json::Value::from(*i),
                            Cell::Text(s) => serde_json::Value::from(s.clone()),
                            Cell::Bool(b) => serde_json::Value::from(*b),
                            Cell::Missing => serde_json::Value::Null,
                        };
                        (name.clone(), v)
                    })
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        let mut top = serde_json::Map::new();
        for (k, v) in meta {
            top.insert(k.clone(), v.clone());
        }
        top.insert(
            "columns".into(),
            serde_json::Value::from(self.columns.clone()),
        );
        top.insert("rows".into(), serde_json::Value::Array(rows));
        let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(top))
            .expect("json serialization of plain values");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_is_fixed_precision() {
        assert_eq!(format_number(0.5), "5.00000000000000e-1");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(std::f64::consts::PI), "3.14159265358979e0");
    }

    #[test]
    fn csv_layout() {
        let mut ts = TimeSeries::default();
        ts.push(0.0, 0.0, 0.0);
        ts.push(0.5, 1.0, -2.0);
        let csv = ts.to_table(1.0, 2.0).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t_J,charge_over_E0,ec_hbar_omega_J");
        assert_eq!(lines[2], "1.00000000000000e0,5.00000000000000e-1,-1.00000000000000e0");
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
    }

    #[test]
    fn json_mirrors_csv_numbers() {
        let mut t = Table::new(&["x_J", "label"]);
        t.push(vec![Cell::Num(1.0 / 3.0), Cell::Text("a".into())]);
        let j: serde_json::Value = serde_json::from_str(&t.to_json(&BTreeMap::new())).unwrap();
        let x = j["rows"][0]["x_J"].as_f64().unwrap();
        assert_eq!(format_number(x), format_number(1.0 / 3.0));
        assert_eq!(j["rows"][0]["label"], "a");
    }

    #[test]
    fn consistency_check() {
        let mut ts = TimeSeries::default();
        ts.push(0.0, 0.0, 0.0);
        assert!(ts.is_consistent());
        ts.push_extra("fidelity", 1.0);
        assert!(ts.is_consistent());
        ts.push_extra("fidelity", 1.0);
        assert!(!ts.is_consistent());
    }
}
