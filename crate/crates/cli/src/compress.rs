use std::path::PathBuf;

use clap::Args;

use stablerelu::compress::{run_leo, verify_equivalence, CompressionReport};
use stablerelu::netio::{load_network, Network};
use stablerelu::stability::IsaResult;

use crate::analyze::analyze;
use crate::{
    write_file, CliError, CliResult, InstanceArgs, ModeArg, EXIT_OK, EXIT_RESIDUAL,
    EXIT_UNCERTIFIED,
};

#[derive(Debug, Clone, Args)]
pub struct CompressArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Compressed network path.
    #[arg(long)]
    pub output: PathBuf,
    /// Compression report path; the report goes to stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// CSV of connections removed with stably inactive neurons.
    #[arg(long)]
    pub removed_csv: Option<PathBuf>,
    /// Largest output difference accepted between the two networks.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Random domain samples checked, in addition to box vertices.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Compress with sets that were not proved stable.
    #[arg(long)]
    pub uncertified_ok: bool,
    /// Skip the summary line on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug)]
pub struct CompressOutcome {
    pub exit_code: i32,
    pub isa: IsaResult,
    pub report: Option<CompressionReport>,
    pub network: Option<Network>,
}

pub fn cmd_compress(args: &CompressArgs) -> CliResult<CompressOutcome> {
    if args.tol.is_nan() || args.tol <= 0.0 {
        return Err(CliError::Usage(format!(
            "--tol must be positive, got {}",
            args.tol
        )));
    }
    if args.instance.mode == ModeArg::PreprocessOnly && !args.uncertified_ok {
        return Err(CliError::Usage(
            "--mode preprocess-only yields uncertified sets; pass --uncertified-ok to compress with them"
                .into(),
        ));
    }
    let inst = args.instance.load()?;
    let isa = analyze(&args.instance, &inst)?;
    if !isa.certified && !args.uncertified_ok {
        eprintln!("stable sets not certified within the time limit; nothing written");
        return Ok(CompressOutcome {
            exit_code: EXIT_UNCERTIFIED,
            isa,
            report: None,
            network: None,
        });
    }
    let domain = if args.instance.ignore_sum {
        inst.domain.box_only()
    } else {
        inst.domain.clone()
    };
    let (compressed, mut report) = run_leo(&inst.network, &domain, &isa, args.uncertified_ok)?;
    let check = verify_equivalence(
        &inst.network,
        &compressed,
        &domain,
        args.samples,
        args.instance.seed,
    )?;
    report.record_check(&check);
    let report_json = report.to_json();
    match &args.report {
        Some(p) => write_file(p, &report_json)?,
        None => println!("{report_json}"),
    }
    if let Some(p) = &args.removed_csv {
        write_file(p, report.removed_connections_csv())?;
    }

    let mut exit_code = if check.max_residual <= args.tol {
        EXIT_OK
    } else {
        EXIT_RESIDUAL
    };
    if exit_code == EXIT_OK {
        if report.is_identity() {
            write_file(&args.output, &inst.network_bytes)?;
        } else {
            compressed.save(&args.output)?;
        }
        if load_network(&args.output)? != compressed {
            eprintln!("written network differs from the compressed network after reload");
            exit_code = EXIT_RESIDUAL;
        }
    }
    if !args.quiet {
        eprintln!(
        "hidden neurons {} -> {} ({:.1}% removed), connections {} -> {} ({:.1}% removed), residual {:.3e} over {} points{}",
        report.original_neurons,
        report.compressed_neurons,
        report.neurons_removed_pct,
        report.original_connections,
        report.compressed_connections,
        report.connections_removed_pct,
        check.max_residual,
        check.points,
        if report.certified { "" } else { " (uncertified sets)" }
        );
    }
    if check.max_residual > args.tol {
        eprintln!(
            "residual exceeds tolerance {}; compressed network not written",
            args.tol
        );
    }
    Ok(CompressOutcome {
        exit_code,
        isa,
        report: Some(report),
        network: Some(compressed),
    })
}
