use std::path::PathBuf;

use clap::Args;

use stablerelu::stability::{run_isa, IsaResult, StabilityReport};

use crate::{write_file, CliResult, Instance, InstanceArgs, EXIT_OK, EXIT_UNCERTIFIED};

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Report path; the report goes to stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn analyze(args: &InstanceArgs, inst: &Instance) -> CliResult<IsaResult> {
    let cfg = args.isa_config()?;
    Ok(run_isa(&inst.network, &inst.domain, &inst.dataset, &cfg)?)
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> CliResult<i32> {
    let inst = args.instance.load()?;
    let result = analyze(&args.instance, &inst)?;
    let report = StabilityReport::from_result(&result);
    let json = report.to_json();
    match &args.output {
        Some(p) => write_file(p, json)?,
        None => println!("{json}"),
    }
    let stable = result.num_stable();
    eprintln!(
        "{} stable of {} hidden neurons, {} ({} solve calls, {} nodes, {:.1} ms)",
        stable,
        inst.network.num_hidden_neurons(),
        if result.certified {
            "certified"
        } else {
            "not certified"
        },
        result.solve_calls,
        result.nodes,
        report.wall_time_ms
    );
    Ok(if result.certified {
        EXIT_OK
    } else {
        EXIT_UNCERTIFIED
    })
}
