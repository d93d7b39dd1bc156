use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CpRecord, ExperimentReport, Results, StrategyRecord, Timing};
use crate::error::Result;

/// Mean and standard error of a list of values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: Option<f64>,
    pub std_error: Option<f64>,
    pub count: usize,
}

impl Aggregate {
    /// Values are summed in the given order.
    pub fn of(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Aggregate {
                mean: None,
                std_error: None,
                count,
            };
        }
        let k = count as f64;
        let mean = values.iter().sum::<f64>() / k;
        let std_error = if count > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
            Some((var / k).sqrt())
        } else {
            None
        };
        Aggregate {
            mean: Some(mean),
            std_error,
            count,
        }
    }
}

#[derive(Debug, Serialize)]
struct CpCellRow<'a> {
    cell: &'a str,
    networks: usize,
    ba_error: Option<f64>,
    gmg_error: Option<f64>,
    gmg_excluded: usize,
    gmg_win_rate: f64,
}

#[derive(Debug, Serialize)]
struct StrategyCellRow<'a> {
    cell: &'a str,
    networks: usize,
    ba_cp: Option<f64>,
    gmg_cp: Option<f64>,
    gmg_win_rate: f64,
    identical_sets: usize,
}

trait Celled {
    fn cell(&self) -> &str;
}

impl Celled for CpRecord {
    fn cell(&self) -> &str {
        &self.cell
    }
}

impl Celled for StrategyRecord {
    fn cell(&self) -> &str {
        &self.cell
    }
}

/// Records grouped by cell, in order of first appearance.
fn group_by_cell<T: Celled>(records: &[T]) -> Vec<(&str, Vec<&T>)> {
    let mut groups: Vec<(&str, Vec<&T>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|(c, _)| *c == r.cell()) {
            Some((_, members)) => members.push(r),
            None => groups.push((r.cell(), vec![r])),
        }
    }
    groups
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

fn cp_cells(records: &[CpRecord]) -> Vec<CpCellRow<'_>> {
    group_by_cell(records)
        .into_iter()
        .map(|(cell, members)| {
            let ba: Vec<f64> = members.iter().map(|r| r.ba_error).collect();
            let gmg: Vec<f64> = members.iter().filter_map(|r| r.gmg_error).collect();
            let wins = members.iter().filter(|r| r.gmg_better).count();
            CpCellRow {
                cell,
                networks: members.len(),
                ba_error: Aggregate::of(&ba).mean,
                gmg_error: Aggregate::of(&gmg).mean,
                gmg_excluded: members.len() - gmg.len(),
                gmg_win_rate: wins as f64 / members.len() as f64,
            }
        })
        .collect()
}

fn strategy_cells(records: &[StrategyRecord]) -> Vec<StrategyCellRow<'_>> {
    group_by_cell(records)
        .into_iter()
        .map(|(cell, members)| {
            let ba: Vec<f64> = members.iter().map(|r| r.ba_cp).collect();
            let gmg: Vec<f64> = members.iter().map(|r| r.gmg_cp).collect();
            StrategyCellRow {
                cell,
                networks: members.len(),
                ba_cp: Aggregate::of(&ba).mean,
                gmg_cp: Aggregate::of(&gmg).mean,
                gmg_win_rate: members.iter().filter(|r| r.gmg_wins).count() as f64 / members.len() as f64,
                identical_sets: members.iter().filter(|r| r.identical_sets).count(),
            }
        })
        .collect()
}

/// Write `report.json`, CSV tables and `timing.json` into `dir`.
pub fn write_report(dir: &Path, report: &ExperimentReport, timing: Option<&Timing>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(dir.join("report.json"), json)?;
    match &report.results {
        Results::Pij { cells, .. } => write_csv(&dir.join("cells.csv"), cells)?,
        Results::Cp { alphas, networks, .. } => {
            write_csv(&dir.join("networks.csv"), networks)?;
            write_csv(&dir.join("cells.csv"), cp_cells(networks))?;
            write_csv(&dir.join("alphas.csv"), alphas)?;
        }
        Results::Strategy { alphas, networks, .. } => {
            write_csv(&dir.join("networks.csv"), networks)?;
            write_csv(&dir.join("cells.csv"), strategy_cells(networks))?;
            write_csv(&dir.join("alphas.csv"), alphas)?;
        }
    }
    if let Some(timing) = timing {
        fs::write(dir.join("timing.json"), serde_json::to_string_pretty(timing)? + "\n")?;
    }
    Ok(())
}

pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_statistics() {
        let a = Aggregate::of(&[1.0, 2.0, 3.0]);
        assert_eq!(a.mean, Some(2.0));
        assert!((a.std_error.unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Aggregate::of(&[]).mean, None);
        assert_eq!(Aggregate::of(&[4.0]).std_error, None);
    }
}
