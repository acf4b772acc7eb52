//! Output rendering. CSV and JSON never carry wall-clock fields, so equal
//! inputs give byte-identical output.

use std::io::Write;

use cachesel_core::{
    AccessCounts, CacheConfig, PerfBudget, SelectionReport, Strategy, TimingParams,
};
use serde::Serialize;

use crate::config::CliError;

#[derive(Serialize)]
pub struct CacheJson {
    pub sets: u32,
    pub assoc: u32,
    pub block_bytes: u32,
    pub capacity_bytes: u64,
}

impl From<CacheConfig> for CacheJson {
    fn from(c: CacheConfig) -> Self {
        Self {
            sets: c.sets(),
            assoc: c.assoc(),
            block_bytes: c.block_bytes(),
            capacity_bytes: c.capacity(),
        }
    }
}

#[derive(Serialize)]
pub struct PrivateLevelJson {
    pub configs: usize,
    pub excluded: usize,
    pub passes: u32,
}

#[derive(Serialize)]
pub struct SharedLevelJson {
    pub passes: u32,
    pub reused: u32,
    pub excluded_in_chosen_pass: usize,
}

#[derive(Serialize)]
pub struct StagesJson {
    pub spcs: &'static str,
    pub sscs: &'static str,
}

#[derive(Serialize)]
pub struct TraceJson {
    pub records: u64,
    pub processors: u32,
    pub sha256: String,
}

/// The `--format json` document for `select` and `reselect`.
#[derive(Serialize)]
pub struct SelectionJson {
    pub processors: u32,
    pub private: CacheJson,
    pub shared: CacheJson,
    pub capacity_bytes: u64,
    pub counts: AccessCounts,
    pub amt_ns: u64,
    pub wcdmot_ns: u64,
    pub slack_ns: u64,
    pub params: TimingParams,
    pub budget: PerfBudget,
    pub tam_prime: u64,
    pub strategy: Strategy,
    pub private_level: PrivateLevelJson,
    pub shared_level: SharedLevelJson,
    pub stages: StagesJson,
    pub trace: TraceJson,
}

pub fn stages(report: &SelectionReport) -> StagesJson {
    StagesJson {
        spcs: if report.work.private_passes == 0 { "cached" } else { "simulated" },
        sscs: if report.work.shared_passes == 0 { "cached" } else { "simulated" },
    }
}

pub fn selection_json(report: &SelectionReport) -> SelectionJson {
    let h = report.hierarchy;
    let pr = &report.private_result;
    SelectionJson {
        processors: h.processor_count(),
        private: h.private().into(),
        shared: h.shared().into(),
        capacity_bytes: h.capacity(),
        counts: report.counts,
        amt_ns: report.amt_ns,
        wcdmot_ns: report.deadline.ns(),
        slack_ns: report.deadline.ns() - report.amt_ns,
        params: report.params,
        budget: report.budget,
        tam_prime: report.tam_prime,
        strategy: report.options.strategy,
        private_level: PrivateLevelJson {
            configs: pr.configs.len(),
            excluded: pr.excluded_count(),
            passes: report.work.private_passes,
        },
        shared_level: SharedLevelJson {
            passes: report.work.shared_passes,
            reused: report.work.shared_reused,
            excluded_in_chosen_pass: report.chosen_shared_result().map_or(0, |r| r.excluded_count()),
        },
        stages: stages(report),
        trace: TraceJson {
            records: pr.records_read,
            processors: pr.processor_count,
            sha256: pr.trace_hash.clone(),
        },
    }
}

#[derive(Serialize)]
struct SelectionCsv {
    processors: u32,
    p_sets: u32,
    p_assoc: u32,
    s_sets: u32,
    s_assoc: u32,
    block: u32,
    capacity_bytes: u64,
    tap: u64,
    tas: u64,
    tam: u64,
    amt_ns: u64,
    wcdmot_ns: u64,
}

pub fn write_selection_csv(report: &SelectionReport, out: impl Write) -> Result<(), CliError> {
    let h = report.hierarchy;
    write_csv(
        out,
        [SelectionCsv {
            processors: h.processor_count(),
            p_sets: h.private().sets(),
            p_assoc: h.private().assoc(),
            s_sets: h.shared().sets(),
            s_assoc: h.shared().assoc(),
            block: h.private().block_bytes(),
            capacity_bytes: h.capacity(),
            tap: report.counts.tap,
            tas: report.counts.tas,
            tam: report.counts.tam,
            amt_ns: report.amt_ns,
            wcdmot_ns: report.deadline.ns(),
        }],
    )
}

pub fn write_selection_table(
    report: &SelectionReport,
    verbose: bool,
    mut out: impl Write,
) -> Result<(), CliError> {
    let h = report.hierarchy;
    let c = report.counts;
    let stages = stages(report);
    let mut text = format!(
        "private   {} x {}  {} B each\n\
         shared    {}  {} B\n\
         capacity  {} B\n\
         accesses  TAP {}  TAS {}  TAM {}\n\
         AMT       {} ns (deadline {} ns, slack {} ns)\n",
        h.processor_count(),
        h.private(),
        h.private().capacity(),
        h.shared(),
        h.shared().capacity(),
        h.capacity(),
        c.tap,
        c.tas,
        c.tam,
        report.amt_ns,
        report.deadline.ns(),
        report.deadline.ns() - report.amt_ns,
    );
    let pr = &report.private_result;
    text += &format!(
        "SPCS: {} ({} configs, {} excluded)\n",
        stages.spcs,
        pr.configs.len(),
        pr.excluded_count()
    );
    text += &match report.work.shared_passes {
        0 => format!("SSCS: cached ({} passes reused)\n", report.work.shared_reused),
        n => format!("SSCS: simulated ({n} passes, {} reused)\n", report.work.shared_reused),
    };
    if verbose {
        let b = report.budget;
        text += &format!(
            "budget    TAP {}  TAS <= {}  TAM <= {}\n\
             TAM' of chosen private level: {}\n\
             strategy  {:?}\n",
            b.tap_observed, b.tas_limit, b.tam_limit, report.tam_prime, report.options.strategy
        );
    }
    text += &format!("elapsed   {:.3} s\n", report.elapsed.as_secs_f64());
    out.write_all(text.as_bytes()).map_err(io_err)
}

pub fn write_json<T: Serialize>(value: &T, mut out: impl Write) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| CliError::input("Io", e.to_string()))?;
    out.write_all(b"\n").map_err(io_err)
}

pub fn write_csv<T: Serialize>(out: impl Write, rows: impl IntoIterator<Item = T>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| CliError::input("Io", e.to_string()))?;
    }
    w.flush().map_err(io_err)
}

/// Left-aligned columns separated by two spaces.
pub fn write_table(headers: &[&str], rows: &[Vec<String>], mut out: impl Write) -> Result<(), CliError> {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut s = cells
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        s.truncate(s.trim_end().len());
        s.push('\n');
        s
    };
    let mut text = line(&mut headers.iter().copied());
    for row in rows {
        text += &line(&mut row.iter().map(String::as_str));
    }
    out.write_all(text.as_bytes()).map_err(io_err)
}

pub fn io_err(e: std::io::Error) -> CliError {
    CliError::input("Io", e.to_string())
}
