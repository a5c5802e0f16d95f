//! Parallel parameter scans with grid-ordered output.

use std::path::Path;

use rayon::prelude::*;

use super::{classified, run_simulation, sink, CmdResult, Failure};
use crate::config::{RunConfig, ScanAxis};
use crate::format::{num, opt_num, text, write_csv};

pub const SCAN_HEADER: &str =
    "index,axis,value,j_pq,a_n_max,exists,stabilities,locked,mean_impulse,circ_std,matched_branch,error";

/// Result of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub index: usize,
    pub axis: ScanAxis,
    pub value: f64,
    pub j_pq: Option<f64>,
    pub a_n_max: Option<f64>,
    pub exists: Option<bool>,
    pub stabilities: Vec<String>,
    pub locked: Option<bool>,
    pub mean_impulse: Option<f64>,
    pub circ_std: Option<f64>,
    pub matched_branch: Option<usize>,
    pub error: Option<String>,
}

impl ScanRow {
    fn cells(&self) -> Vec<String> {
        let flag = |b: Option<bool>| b.map(|b| b.to_string()).unwrap_or_default();
        vec![
            self.index.to_string(),
            self.axis.as_str().to_string(),
            num(self.value),
            opt_num(self.j_pq),
            opt_num(self.a_n_max),
            flag(self.exists),
            self.stabilities.join(";"),
            flag(self.locked),
            opt_num(self.mean_impulse),
            opt_num(self.circ_std),
            self.matched_branch
                .map(|b| b.to_string())
                .unwrap_or_default(),
            text(self.error.as_deref().unwrap_or("")),
        ]
    }
}

fn scan_point(
    base: &RunConfig,
    axis: ScanAxis,
    index: usize,
    value: f64,
    with_sim: bool,
) -> ScanRow {
    let mut row = ScanRow {
        index,
        axis,
        value,
        j_pq: None,
        a_n_max: None,
        exists: None,
        stabilities: Vec::new(),
        locked: None,
        mean_impulse: None,
        circ_std: None,
        matched_branch: None,
        error: None,
    };
    let cfg = base.with_axis(axis, value);
    if let Err(e) = cfg.validate() {
        row.error = Some(e.to_string());
        return row;
    }
    match super::field(&cfg) {
        Ok(f) => {
            row.j_pq = Some(f.rp.j_pq);
            let a = f.max_abs_a_n(&super::grid(&cfg));
            row.a_n_max = Some(a);
            row.exists = Some(f.is_coupled() && a < 1.0);
        }
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    }
    if row.exists != Some(true) {
        return row;
    }
    match classified(&cfg) {
        Ok((_, branches)) => {
            row.stabilities = branches
                .iter()
                .map(|c| {
                    c.branch
                        .stability
                        .map_or("unclassified", |s| s.as_str())
                        .to_string()
                })
                .collect();
        }
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    }
    if with_sim {
        match run_simulation(&cfg) {
            Ok(out) => {
                let r = out.record;
                row.locked = Some(r.locked);
                row.mean_impulse = r.mean_impulse;
                row.circ_std = r.circ_std;
                row.matched_branch = r.matched_branch;
                row.error = r.note;
            }
            Err(e) => row.error = Some(e.to_string()),
        }
    }
    row
}

/// Evaluates every grid point on up to `jobs` threads; rows come back in grid order.
pub fn scan_rows(cfg: &RunConfig, jobs: Option<usize>) -> CmdResult<Vec<ScanRow>> {
    let scan = cfg
        .scan
        .as_ref()
        .ok_or_else(|| Failure::Config("scan block missing".into()))?;
    let values = scan.grid()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    let rows = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(i, &v)| {
                log::debug!("scan point {i}: {} = {v}", scan.axis.as_str());
                scan_point(cfg, scan.axis, i, v, scan.simulate)
            })
            .collect()
    });
    Ok(rows)
}

pub fn cmd_scan(cfg: &RunConfig, out: Option<&Path>, jobs: Option<usize>) -> CmdResult {
    let rows: Vec<Vec<String>> = scan_rows(cfg, jobs)?.iter().map(ScanRow::cells).collect();
    write_csv(sink(out, "scan.csv")?, SCAN_HEADER, &rows)?;
    Ok(())
}
