//! Mesh statistics and relative error norms per refinement level.

use std::io::{Read, Write};

use vnotch_core::mesh::MeshStats;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelRow {
    pub level: usize,
    pub elements: usize,
    pub dofs: usize,
    pub h_min: f64,
    pub h_max: f64,
}

impl LevelRow {
    pub fn new(level: usize, s: &MeshStats) -> Self {
        LevelRow {
            level,
            elements: s.n_elements,
            dofs: s.n_dofs_p2,
            h_min: s.h_min,
            h_max: s.h_max,
        }
    }
}

/// One row per level; one error column per model, with all Hooke models
/// sharing the `LIN` column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<LevelRow>,
    pub columns: Vec<(String, Vec<f64>)>,
}

const FIXED: [&str; 5] = ["level", "elements", "dofs", "h_min", "h_max"];

impl ConvergenceTable {
    pub fn new(rows: Vec<LevelRow>) -> Self {
        ConvergenceTable { rows, columns: Vec::new() }
    }

    /// Adds an error column unless one with the same label exists.
    pub fn add_column(&mut self, label: &str, errors: Vec<f64>) -> Result<()> {
        if errors.len() != self.rows.len() {
            return Err(CliError::Usage(format!(
                "column {label} has {} entries for {} levels",
                errors.len(),
                self.rows.len()
            )));
        }
        if !self.columns.iter().any(|(l, _)| l == label) {
            self.columns.push((label.to_string(), errors));
        }
        Ok(())
    }

    pub fn column(&self, label: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(l, _)| l == label).map(|(_, v)| v.as_slice())
    }

    /// Transposed text layout: quantities down, levels across.
    pub fn render_text(&self) -> String {
        let mut lines: Vec<(String, Vec<String>)> = vec![
            ("Refinement".into(), self.rows.iter().map(|r| r.level.to_string()).collect()),
            ("Elements".into(), self.rows.iter().map(|r| r.elements.to_string()).collect()),
            ("DOFs".into(), self.rows.iter().map(|r| r.dofs.to_string()).collect()),
            ("h_min".into(), self.rows.iter().map(|r| format!("{:.1e}", r.h_min)).collect()),
            ("h_max".into(), self.rows.iter().map(|r| format!("{:.1e}", r.h_max)).collect()),
        ];
        for (label, errs) in &self.columns {
            lines.push((format!("||A_{label}||rel"), errs.iter().map(|e| format!("{e:.2e}")).collect()));
        }
        let head = lines.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
        let width = lines.iter().flat_map(|(_, c)| c.iter().map(String::len)).max().unwrap_or(0);
        let mut out = String::new();
        for (label, cells) in &lines {
            out.push_str(&format!("{label:<head$}"));
            for c in cells {
                out.push_str(&format!("  {c:>width$}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = FIXED.iter().map(|s| s.to_string()).collect();
        header.extend(self.columns.iter().map(|(l, _)| format!("A_{l}")));
        w.write_record(&header)?;
        for (k, r) in self.rows.iter().enumerate() {
            let mut rec = vec![
                r.level.to_string(),
                r.elements.to_string(),
                r.dofs.to_string(),
                r.h_min.to_string(),
                r.h_max.to_string(),
            ];
            rec.extend(self.columns.iter().map(|(_, v)| v[k].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.len() < FIXED.len() || header.iter().zip(FIXED).any(|(a, b)| a != b) {
            return Err(CliError::Usage(format!("not a convergence table header: {header:?}")));
        }
        let labels: Vec<String> = header
            .iter()
            .skip(FIXED.len())
            .map(|h| h.strip_prefix("A_").unwrap_or(h).to_string())
            .collect();
        let mut table = ConvergenceTable::default();
        let mut cols = vec![Vec::new(); labels.len()];
        for rec in r.records() {
            let rec = rec?;
            let field = |i: usize| -> Result<&str> {
                rec.get(i).ok_or_else(|| CliError::Usage(format!("short row {:?}", rec.position())))
            };
            let num = |i: usize| -> Result<f64> {
                let s = field(i)?;
                s.parse().map_err(|_| CliError::Usage(format!("bad number `{s}` in convergence table")))
            };
            table.rows.push(LevelRow {
                level: num(0)? as usize,
                elements: num(1)? as usize,
                dofs: num(2)? as usize,
                h_min: num(3)?,
                h_max: num(4)?,
            });
            for (j, c) in cols.iter_mut().enumerate() {
                c.push(num(FIXED.len() + j)?);
            }
        }
        table.columns = labels.into_iter().zip(cols).collect();
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ConvergenceTable {
        let mut t = ConvergenceTable::new(vec![
            LevelRow { level: 0, elements: 2504, dofs: 5169, h_min: 2e-4, h_max: 0.04 },
            LevelRow { level: 1, elements: 6231, dofs: 12644, h_min: 2e-4, h_max: 0.04 },
        ]);
        t.add_column("LIN", vec![6e-4, 0.0]).unwrap();
        t.add_column("NLB2", vec![5e-4, 0.0]).unwrap();
        t.add_column("LIN", vec![1.0, 1.0]).unwrap();
        t
    }

    #[test]
    fn linear_column_is_shared() {
        let t = sample();
        assert_eq!(t.columns.len(), 2);
        assert_eq!(t.column("LIN").unwrap(), &[6e-4, 0.0]);
        assert!(t.clone().add_column("X", vec![1.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = sample();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("level,elements,dofs,h_min,h_max,A_LIN,A_NLB2\n"));
        assert_eq!(ConvergenceTable::read_csv(buf.as_slice()).unwrap(), t);
        assert!(ConvergenceTable::read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn text_layout_is_transposed() {
        let text = sample().render_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert!(lines[0].starts_with("Refinement"));
        assert!(lines[1].contains("2504") && lines[1].contains("6231"));
        assert!(lines[5].starts_with("||A_LIN||rel"));
        assert!(lines[6].contains("5.00e-4"));
    }
}
