use clap::Args;
use serde::Serialize;

use stablerelu::bounds::StabilityLabels;
use stablerelu::stability::brute_force_oracle;

use crate::analyze::analyze;
use crate::{CliError, CliResult, InstanceArgs, ModeArg, EXIT_DISAGREE, EXIT_OK, EXIT_UNCERTIFIED};

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
}

#[derive(Debug, Serialize)]
struct OracleSummary {
    agree: bool,
    certified: bool,
    isa: StabilityLabels,
    oracle: StabilityLabels,
    feasible_patterns: usize,
    lp_checks: usize,
}

pub fn cmd_oracle(args: &OracleArgs) -> CliResult<i32> {
    if args.instance.mode == ModeArg::PreprocessOnly {
        return Err(CliError::Usage(
            "the oracle check needs a proving mode".into(),
        ));
    }
    let inst = args.instance.load()?;
    let isa = analyze(&args.instance, &inst)?;
    let domain = if args.instance.ignore_sum {
        inst.domain.box_only()
    } else {
        inst.domain.clone()
    };
    let oracle = brute_force_oracle(&inst.network, &domain)?;
    let isa_labels = isa.labels();
    let agree = isa.certified && isa_labels == oracle.labels;
    let summary = OracleSummary {
        agree,
        certified: isa.certified,
        isa: isa_labels,
        oracle: oracle.labels,
        feasible_patterns: oracle.feasible_patterns,
        lp_checks: oracle.lp_checks,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );
    Ok(if !isa.certified {
        eprintln!("ISA did not certify within the time limit");
        EXIT_UNCERTIFIED
    } else if agree {
        eprintln!("ISA agrees with exhaustive enumeration");
        EXIT_OK
    } else {
        eprintln!("ISA and exhaustive enumeration disagree");
        EXIT_DISAGREE
    })
}
