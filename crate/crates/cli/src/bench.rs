use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::Args;

use stablerelu::netio::{load_dataset, load_domain, load_network, Dataset, InputDomain, Network};
use stablerelu::stability::{run_baseline, run_isa, IsaConfig};

use crate::{CliError, CliResult, EXIT_DISAGREE, EXIT_OK};

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Directory of `<name>.net.json` / `<name>.domain.json` pairs.
    #[arg(long)]
    pub dir: PathBuf,
    /// Seconds allowed for each ISA run and each baseline MILP.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Preprocess ISA with `<name>.data.csv` when present.
    #[arg(long)]
    pub with_data: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub neurons: usize,
    pub stable: usize,
    pub isa_ms: f64,
    pub isa_nodes: u64,
    pub isa_calls: usize,
    pub baseline_ms: f64,
    pub baseline_nodes: u64,
    pub baseline_solves: usize,
    /// False when either side hit its limit.
    pub complete: bool,
    pub agree: bool,
}

impl BenchRow {
    pub fn time_ratio(&self) -> f64 {
        self.baseline_ms / self.isa_ms.max(1e-6)
    }
}

pub fn bench_instance(
    name: &str,
    net: &Network,
    domain: &InputDomain,
    dataset: &Dataset,
    limit: Option<Duration>,
) -> CliResult<BenchRow> {
    let cfg = IsaConfig {
        time_limit: limit,
        ..Default::default()
    };
    let isa = run_isa(net, domain, dataset, &cfg)?;
    let base = run_baseline(net, domain, limit)?;
    let base_complete = base
        .ranges
        .iter()
        .flatten()
        .all(|r| r.lo.is_some() && r.hi.is_some());
    let complete = isa.certified && base_complete;
    let isa_labels = isa.labels();
    Ok(BenchRow {
        instance: name.to_string(),
        neurons: net.num_hidden_neurons(),
        stable: isa.num_stable(),
        isa_ms: isa.wall_time.as_secs_f64() * 1e3,
        isa_nodes: isa.nodes,
        isa_calls: isa.solve_calls,
        baseline_ms: base.wall_time.as_secs_f64() * 1e3,
        baseline_nodes: base.nodes,
        baseline_solves: base.milp_solves,
        complete,
        agree: !complete || isa_labels == base.labels,
    })
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

fn instances(dir: &Path) -> CliResult<Vec<(String, PathBuf)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
    let mut found = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| CliError::Io(dir.to_path_buf(), e))?
            .path();
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        if let Some(stem) = name.strip_suffix(".net.json") {
            found.push((stem.to_string(), path.clone()));
        }
    }
    found.sort();
    Ok(found)
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult<i32> {
    let limit = match args.time_limit {
        None => None,
        Some(t) if t.is_finite() && t > 0.0 => Some(Duration::from_secs_f64(t)),
        Some(t) => {
            return Err(CliError::Usage(format!(
                "--time-limit must be positive, got {t}"
            )))
        }
    };
    let found = instances(&args.dir)?;
    if found.is_empty() {
        return Err(CliError::Usage(format!(
            "no *.net.json instances in {}",
            args.dir.display()
        )));
    }
    let mut rows = Vec::with_capacity(found.len());
    for (stem, net_path) in &found {
        let net = load_network(net_path)?;
        let domain = load_domain(args.dir.join(format!("{stem}.domain.json")))?;
        let data_path = args.dir.join(format!("{stem}.data.csv"));
        let dataset = if args.with_data && data_path.exists() {
            load_dataset(&data_path, &domain)?
        } else {
            Dataset::empty()
        };
        rows.push(bench_instance(stem, &net, &domain, &dataset, limit)?);
    }
    let mut ratios: Vec<f64> = rows.iter().map(BenchRow::time_ratio).collect();
    let med = median(&mut ratios).unwrap_or(f64::NAN);
    println!("instance,neurons,stable,isa_ms,isa_nodes,isa_calls,baseline_ms,baseline_nodes,baseline_solves,time_ratio,median_time_ratio,complete,agree");
    for r in &rows {
        println!(
            "{},{},{},{:.3},{},{},{:.3},{},{},{:.4},{:.4},{},{}",
            r.instance,
            r.neurons,
            r.stable,
            r.isa_ms,
            r.isa_nodes,
            r.isa_calls,
            r.baseline_ms,
            r.baseline_nodes,
            r.baseline_solves,
            r.time_ratio(),
            med,
            r.complete,
            r.agree
        );
    }
    let bad: Vec<&str> = rows
        .iter()
        .filter(|r| !r.agree)
        .map(|r| r.instance.as_str())
        .collect();
    eprintln!(
        "{} instances, median baseline/ISA time ratio {med:.3}",
        rows.len()
    );
    if !bad.is_empty() {
        eprintln!("ISA and baseline disagree on: {}", bad.join(", "));
        return Ok(EXIT_DISAGREE);
    }
    Ok(EXIT_OK)
}
