use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::{is_numeric_key, run_task, ExperimentConfig, Task};
use crate::error::{KirchhoffError, Result};
use crate::evolution::{fmt_f64, Outcome};

/// One child run of a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub dir: PathBuf,
    pub outcome: Option<String>,
    pub t_star: Option<f64>,
    pub j0: Option<f64>,
    pub i0: Option<f64>,
    pub classification: Option<String>,
    pub exit_code: i32,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub axis: String,
    pub rows: Vec<SweepRow>,
    pub summary: PathBuf,
}

fn cell(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Run `template` once per value of `axis`, each into `out_dir/run_NNN`, and
/// write `out_dir/sweep_summary.csv`. Child failures are recorded per row.
pub fn run_sweep(
    template: &ExperimentConfig,
    axis: &str,
    values: &[f64],
    out_dir: &Path,
) -> Result<SweepReport> {
    if !is_numeric_key(axis) {
        return Err(KirchhoffError::Config(vec![format!(
            "sweep axis '{axis}' is not a numeric configuration key"
        )]));
    }
    template.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let rows: Vec<SweepRow> = values
        .par_iter()
        .enumerate()
        .map(|(k, &value)| {
            let dir = out_dir.join(format!("run_{k:03}"));
            let mut row = SweepRow {
                value,
                dir: dir.clone(),
                outcome: None,
                t_star: None,
                j0: None,
                i0: None,
                classification: None,
                exit_code: 0,
                error: None,
            };
            let mut cfg = template.clone();
            if let Err(e) = cfg.set(axis, &value.to_string()) {
                row.exit_code = 2;
                row.error = Some(e);
                return row;
            }
            cfg.output_dir = dir.clone();
            match run_task(&cfg, Task::Simulate, &dir) {
                Ok(rep) => {
                    if let Some(s) = &rep.simulation {
                        row.outcome = Some(s.outcome.label().to_string());
                        if let Outcome::BlowUp { t_star } = s.outcome {
                            row.t_star = Some(t_star);
                        }
                    }
                    if let Some(i) = &rep.initial {
                        row.j0 = Some(i.energy);
                        row.i0 = Some(i.nehari);
                        row.classification = Some(i.classification.to_string());
                    }
                    row.exit_code = rep.exit_code;
                }
                Err(e) => {
                    row.exit_code = e.exit_code();
                    row.error = Some(e.to_string().replace('\n', "; "));
                }
            }
            row
        })
        .collect();
    let summary = out_dir.join("sweep_summary.csv");
    let mut w = BufWriter::new(File::create(&summary)?);
    writeln!(
        w,
        "{axis},outcome,t_star,J0,I0,classification,exit_code,error"
    )?;
    for r in &rows {
        let error = r.error.as_deref().unwrap_or("").replace(',', ";");
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(r.value),
            r.outcome.as_deref().unwrap_or(""),
            cell(r.t_star),
            cell(r.j0),
            cell(r.i0),
            r.classification.as_deref().unwrap_or(""),
            r.exit_code,
            error
        )?;
    }
    w.flush()?;
    Ok(SweepReport {
        axis: axis.to_string(),
        rows,
        summary,
    })
}
