#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cli;
mod commands;
mod fetch;
mod output;
mod schemas;
mod sources;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use psilab_core::bohr_geometry::AverageParams;

use crate::cli::*;
use crate::commands::*;
use crate::output::emit;
use crate::sources::{exit_code, invalid};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion)
                || matches!(
                    e.kind(),
                    ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
                )
            {
                let _ = e.print();
                return ExitCode::from(
                    if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                        2
                    } else {
                        0
                    },
                );
            }
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("psilab: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = String::new();
            for cause in e.chain() {
                let part = cause.to_string();
                if !msg.contains(&part) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&part);
                }
            }
            let msg = msg.replace('\n', " ");
            eprintln!("psilab: error: {msg}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let seed = g.seed.unwrap_or(DEFAULT_SEED);
    let out = g.out.as_deref();
    let fmt = g.format;
    let cache = g.cache_dir.as_path();
    match &cli.command {
        Command::Zeros(z) => match z {
            ZerosCmd::Stats { table, t } => emit(&zeros_stats(&table.table, t)?, fmt, out),
            ZerosCmd::Paircorr { table, t, windows } => {
                emit(&zeros_paircorr(&table.table, *t, windows)?, fmt, out)
            }
            ZerosCmd::Partition { table, t, k, c } => {
                emit(&zeros_partition(&table.table, *t, *k, *c)?, fmt, out)
            }
        },
        Command::Psi(p) => match p {
            // `--out` names the cache file here; the report goes to stdout.
            PsiCmd::Build { limit } => emit(&psi_build(*limit, out, cache)?, fmt, None),
            PsiCmd::Scan {
                psi,
                lo,
                hi,
                eps,
                sep,
            } => emit(&psi_scan(psi, *lo, *hi, *eps, *sep, cache)?, fmt, out),
            PsiCmd::Moment { psi, x, k } => emit(&psi_moment(psi, x, *k, cache)?, fmt, out),
            PsiCmd::Logmeasure { psi, x, c } => {
                emit(&psi_logmeasure(psi, *x, *c, cache)?, fmt, out)
            }
            PsiCmd::Dist { psi, umax, bins } => {
                emit(&psi_dist(psi, *umax, *bins, cache)?, fmt, out)
            }
        },
        Command::Explicit(e) => match e {
            ExplicitCmd::Sum { table, x, t } => {
                emit(&explicit_sum(&table.table, *x, *t)?, fmt, out)
            }
            ExplicitCmd::Compare {
                table,
                psi,
                x,
                t_cut,
            } => emit(
                &explicit_compare(&table.table, psi, x, *t_cut, cache)?,
                fmt,
                out,
            ),
            ExplicitCmd::Tx {
                table,
                x,
                big_x,
                eps,
                alpha,
                beta,
                coeff,
            } => emit(
                &explicit_tx(&table.table, *x, *big_x, *eps, *alpha, *beta, *coeff)?,
                fmt,
                out,
            ),
            ExplicitCmd::Pigeonhole {
                table,
                x,
                big_x,
                eps,
                alpha,
                beta,
                coeff,
                grid,
            } => emit(
                &explicit_pigeonhole(&table.table, x, *big_x, *eps, *alpha, *beta, *coeff, *grid)?,
                fmt,
                out,
            ),
        },
        Command::Bohr(b) => match b {
            BohrCmd::Measure { spec } => emit(&bohr_measure(spec)?, fmt, out),
            BohrCmd::Count { spec, table } => emit(&bohr_count(spec, &table.table)?, fmt, out),
            BohrCmd::Extend {
                spec,
                table,
                eta,
                a_const,
            } => emit(&bohr_extend(spec, &table.table, *eta, *a_const)?, fmt, out),
            BohrCmd::Average {
                freqs,
                k,
                rho,
                eta,
                t,
                trials,
                beta_grid,
                r,
                max_order,
            } => {
                let params = AverageParams {
                    freq_pool: freqs.clone(),
                    k: *k,
                    radius: *rho,
                    eta: *eta,
                    t: *t,
                    trials: *trials,
                    beta_grid: *beta_grid,
                    seed,
                    r: *r,
                    max_order: *max_order,
                };
                emit(&bohr_average(params)?, fmt, out)
            }
        },
        Command::Majorant(m) => match m {
            MajorantCmd::Check {
                bump,
                m_max,
                points,
                tol,
            } => emit(
                &majorant_check(bump, *m_max, *points, *tol, seed)?,
                fmt,
                out,
            ),
            MajorantCmd::Dump { bump, order } => emit(&majorant_dump(bump, *order)?, fmt, out),
        },
        Command::Experiment(ExperimentCmd::Run(args)) => emit(
            &experiment_run(args, seed, g.seed.is_some(), cache)?,
            fmt,
            out,
        ),
        Command::Fetch(FetchCmd::Zeros {
            url,
            sha256,
            no_verify,
            name,
        }) => emit(
            &fetch::fetch_zeros(url, sha256.as_deref(), *no_verify, name, cache)?,
            fmt,
            out,
        ),
        Command::Schemas { dir } => {
            let n = schemas::write_all(dir)?;
            println!("wrote {n} schemas to {}", dir.display());
            Ok(())
        }
    }
}
