mod args;
mod config;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use cachesel_core::oracle::{feasibility_matrix, select_from_matrix};
use cachesel_core::persist;
use cachesel_core::trace::render;
use cachesel_core::{
    emit_secondary_trace, generate_synthetic, reselect, run_selection, simulate_private,
    simulate_shared, CacheConfig, OracleOptions, SelectionOptions, SelectionReport,
    SyntheticTraceSpec,
};
use clap::Parser;
use serde::Serialize;

use args::{
    Cli, Command, Format, GenTraceArgs, OracleArgs, ReselectArgs, SelectArgs,
    SimulatePrivateArgs, SimulateSharedArgs,
};
use config::{CliError, Settings};
use report::{io_err, write_csv, write_json, write_table};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Settings::load(cli.config.as_deref()).and_then(|settings| {
        let stdout = io::stdout();
        let mut out = BufWriter::new(stdout.lock());
        run(cli.command, &settings, &mut out)?;
        out.flush().map_err(io_err)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit)
        }
    }
}

fn run(command: Command, settings: &Settings, out: &mut impl Write) -> Result<(), CliError> {
    match command {
        Command::Select(a) => cmd_select(a, settings, out),
        Command::Reselect(a) => cmd_reselect(a, settings, out),
        Command::Oracle(a) => cmd_oracle(a, settings, out),
        Command::SimulatePrivate(a) => cmd_simulate_private(a, settings, out),
        Command::SimulateShared(a) => cmd_simulate_shared(a, settings, out),
        Command::GenTrace(a) => cmd_gen_trace(a, settings, out),
    }
}

fn print_selection(
    report: &SelectionReport,
    format: Format,
    verbose: bool,
    out: &mut impl Write,
) -> Result<(), CliError> {
    match format {
        Format::Table => report::write_selection_table(report, verbose, out),
        Format::Csv => report::write_selection_csv(report, out),
        Format::Json => write_json(&report::selection_json(report), out),
    }
}

fn cache_err(e: persist::CacheFileError) -> CliError {
    CliError::input("CacheFile", e.to_string())
}

fn cmd_select(a: SelectArgs, settings: &Settings, out: &mut impl Write) -> Result<(), CliError> {
    let (private_space, shared_space) = settings.spaces(&a.space)?;
    let params = settings.params(&a.timing)?;
    let deadline = settings.deadline(&a.deadline)?;
    let trace = settings.trace(&a.trace)?;
    let options = SelectionOptions {
        strategy: settings.strategy(a.strategy),
    };
    let report = run_selection(&trace, &private_space, &shared_space, params, deadline, options)?;
    if let Some(path) = settings.cache(a.cache.as_ref()) {
        persist::save(&report, &path).map_err(cache_err)?;
    }
    print_selection(&report, settings.format(a.output.format, Format::Table), a.verbose, out)
}

fn cmd_reselect(a: ReselectArgs, settings: &Settings, out: &mut impl Write) -> Result<(), CliError> {
    let path = settings
        .cache(a.cache.as_ref())
        .ok_or_else(|| CliError::input("InvalidInput", "no cache file given: pass --cache"))?;
    let cached = persist::load(&path).map_err(cache_err)?;
    let deadline = settings.deadline(&a.deadline)?;
    let trace = settings.trace(&a.trace)?;
    let report = reselect(&cached, &trace, deadline)?;
    print_selection(&report, settings.format(a.output.format, Format::Table), a.verbose, out)
}

#[derive(Serialize)]
struct MatrixCsv {
    p_sets: u32,
    p_assoc: u32,
    s_sets: u32,
    s_assoc: u32,
    tap: u64,
    tas: u64,
    tam: u64,
    amt_ns: u64,
    feasible: bool,
}

fn cmd_oracle(a: OracleArgs, settings: &Settings, out: &mut impl Write) -> Result<(), CliError> {
    let (private_space, shared_space) = settings.spaces(&a.space)?;
    let params = settings.params(&a.timing)?;
    let deadline = settings.deadline(&a.deadline)?;
    let trace = settings.trace(&a.trace)?;
    let options = OracleOptions {
        back_invalidate: settings.back_invalidate(a.back_invalidate),
    };
    let rows = feasibility_matrix(&trace, &private_space, &shared_space, params, deadline, options);
    let records: Vec<MatrixCsv> = rows
        .iter()
        .map(|r| MatrixCsv {
            p_sets: r.private.sets(),
            p_assoc: r.private.assoc(),
            s_sets: r.shared.sets(),
            s_assoc: r.shared.assoc(),
            tap: r.counts.tap,
            tas: r.counts.tas,
            tam: r.counts.tam,
            amt_ns: r.amt_ns,
            feasible: r.feasible,
        })
        .collect();
    match settings.format(a.output.format, Format::Csv) {
        Format::Csv => write_csv(out, records),
        Format::Json => write_json(&records, out),
        Format::Table => {
            let cells: Vec<Vec<String>> = records
                .iter()
                .map(|r| {
                    vec![
                        CacheConfig::new(r.p_sets, r.p_assoc, private_space.block_bytes()).unwrap().to_string(),
                        CacheConfig::new(r.s_sets, r.s_assoc, shared_space.block_bytes()).unwrap().to_string(),
                        r.tap.to_string(),
                        r.tas.to_string(),
                        r.tam.to_string(),
                        r.amt_ns.to_string(),
                        if r.feasible { "yes" } else { "no" }.to_string(),
                    ]
                })
                .collect();
            write_table(&["private", "shared", "tap", "tas", "tam", "amt_ns", "feasible"], &cells, &mut *out)?;
            let best = match select_from_matrix(&rows, trace.processor_count()) {
                Some((h, _)) => format!("smallest feasible: {h} ({} B)\n", h.capacity()),
                None => "no feasible hierarchy\n".to_string(),
            };
            out.write_all(best.as_bytes()).map_err(io_err)
        }
    }
}

#[derive(Serialize)]
struct PrivateCsv {
    sets: u32,
    assoc: u32,
    proc: u32,
    misses: u64,
    excluded: bool,
}

fn cmd_simulate_private(
    a: SimulatePrivateArgs,
    settings: &Settings,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let (space, _) = settings.spaces(&a.space)?;
    let trace = settings.trace(&a.trace)?;
    let result = simulate_private(&trace, &space, trace.processor_count(), a.tas_limit)
        .map_err(|e| CliError::input("InvalidInput", e.to_string()))?;
    let rows: Vec<PrivateCsv> = result
        .configs
        .iter()
        .flat_map(|c| {
            c.misses_per_processor
                .iter()
                .enumerate()
                .map(move |(proc, &misses)| PrivateCsv {
                    sets: c.config.sets(),
                    assoc: c.config.assoc(),
                    proc: proc as u32,
                    misses,
                    excluded: c.excluded,
                })
        })
        .collect();
    match settings.format(a.output.format, Format::Csv) {
        Format::Csv => write_csv(out, rows),
        Format::Json => write_json(&rows, out),
        Format::Table => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.sets.to_string(),
                        r.assoc.to_string(),
                        r.proc.to_string(),
                        r.misses.to_string(),
                        if r.excluded { "yes" } else { "no" }.to_string(),
                    ]
                })
                .collect();
            write_table(&["sets", "assoc", "proc", "misses", "excluded"], &cells, &mut *out)?;
            let line = format!("TAP {}\n", result.tap_observed);
            out.write_all(line.as_bytes()).map_err(io_err)
        }
    }
}

#[derive(Serialize)]
struct SharedCsv {
    sets: u32,
    assoc: u32,
    misses: u64,
    excluded: bool,
}

fn cmd_simulate_shared(
    a: SimulateSharedArgs,
    settings: &Settings,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let (private_space, shared_space) = settings.spaces(&a.space)?;
    let private: CacheConfig = {
        let c: CacheConfig = a
            .private
            .parse()
            .map_err(|e| CliError::input("InvalidSpace", format!("--private: {e}")))?;
        // `SxA` carries no block size; take the configured one.
        CacheConfig::new(c.sets(), c.assoc(), private_space.block_bytes())
            .map_err(|e| CliError::input("InvalidSpace", format!("--private: {e}")))?
    };
    let trace = settings.trace(&a.trace)?;
    let secondary = emit_secondary_trace(&trace, private, trace.processor_count());
    let result = simulate_shared(&secondary, &shared_space, a.tam_limit)
        .map_err(|e| CliError::input("InvalidInput", e.to_string()))?;
    let rows: Vec<SharedCsv> = result
        .configs
        .iter()
        .map(|c| SharedCsv {
            sets: c.config.sets(),
            assoc: c.config.assoc(),
            misses: c.misses,
            excluded: c.excluded,
        })
        .collect();
    match settings.format(a.output.format, Format::Csv) {
        Format::Csv => write_csv(out, rows),
        Format::Json => write_json(&rows, out),
        Format::Table => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.sets.to_string(),
                        r.assoc.to_string(),
                        r.misses.to_string(),
                        if r.excluded { "yes" } else { "no" }.to_string(),
                    ]
                })
                .collect();
            write_table(&["sets", "assoc", "misses", "excluded"], &cells, &mut *out)?;
            let line = format!("{} shared accesses behind private {private}\n", secondary.len());
            out.write_all(line.as_bytes()).map_err(io_err)
        }
    }
}

fn cmd_gen_trace(a: GenTraceArgs, settings: &Settings, out: &mut impl Write) -> Result<(), CliError> {
    let spec = SyntheticTraceSpec {
        processor_count: a.processors,
        record_count: a.records,
        address_space_bytes: a.address_space,
        shared_fraction: a.shared_fraction,
        write_fraction: a.write_fraction,
        locality_hot_fraction: a.hot_fraction,
        seed: settings.seed(a.seed),
    };
    let trace = generate_synthetic(&spec).map_err(|e| CliError::input("InvalidInput", e.to_string()))?;
    match &a.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| {
                CliError::input("Io", format!("cannot create {}: {e}", path.display()))
            })?;
            let mut w = BufWriter::new(file);
            render(&trace, &mut w).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        None => render(&trace, out).map_err(io_err),
    }
}
