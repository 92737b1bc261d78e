use std::path::PathBuf;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use stablerelu::netio::{Dataset, InputDomain, Layer, Network};
use stablerelu::stability::ORACLE_MAX_NEURONS;

use crate::{write_file, CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 2)]
    pub input_dim: usize,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',', default_value = "4,4")]
    pub widths: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub output_dim: usize,
    /// Added to every hidden bias; negative values make neurons stably inactive.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub bias_shift: f64,
    /// Rows of uniform domain samples written as `<name>.data.csv`.
    #[arg(long, default_value_t = 0)]
    pub dataset_rows: usize,
    /// Refuse networks too large for the brute-force oracle.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub input_dim: usize,
    pub widths: Vec<usize>,
    pub output_dim: usize,
    pub bias_shift: f64,
}

impl GenSpec {
    pub fn validate(&self, oracle: bool) -> CliResult<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(CliError::Usage(
                "input and output dimensions must be positive".into(),
            ));
        }
        if self.widths.is_empty() || self.widths.contains(&0) {
            return Err(CliError::Usage(
                "need at least one hidden layer, all widths >= 1".into(),
            ));
        }
        if !self.bias_shift.is_finite() {
            return Err(CliError::Usage("bias shift must be finite".into()));
        }
        let n: usize = self.widths.iter().sum();
        if oracle && n > ORACLE_MAX_NEURONS {
            return Err(CliError::Usage(format!(
                "{n} hidden neurons exceed the oracle limit {ORACLE_MAX_NEURONS}"
            )));
        }
        Ok(())
    }
}

/// Weights are standard normal over `sqrt(fan_in)`; hidden biases get the
/// same distribution plus `bias_shift`. The domain is the unit box.
pub fn generate_network<R: Rng + ?Sized>(spec: &GenSpec, rng: &mut R) -> Network {
    let mut dims = vec![spec.input_dim];
    dims.extend(&spec.widths);
    dims.push(spec.output_dim);
    let last = dims.len() - 2;
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(l, pair)| {
            let (fan_in, width) = (pair[0], pair[1]);
            let scale = 1.0 / (fan_in as f64).sqrt();
            let normal = |r: &mut R| -> f64 { r.sample::<f64, _>(StandardNormal) * scale };
            let weights = (0..width)
                .map(|_| (0..fan_in).map(|_| normal(rng)).collect())
                .collect();
            let shift = if l < last { spec.bias_shift } else { 0.0 };
            let bias = (0..width).map(|_| normal(rng) + shift).collect();
            Layer::new(weights, bias)
        })
        .collect();
    Network::new(spec.input_dim, layers).expect("generated dimensions chain")
}

/// Instance `index` of the run seeded with `seed`; each index has its own stream.
pub fn generate_instance(
    spec: &GenSpec,
    seed: u64,
    index: u64,
    dataset_rows: usize,
) -> (Network, InputDomain, Dataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let net = generate_network(spec, &mut rng);
    let domain = InputDomain::unit_box(spec.input_dim);
    let rows = domain.sample(&mut rng, dataset_rows);
    let dataset = Dataset::new(rows, &domain).expect("samples lie in the domain");
    (net, domain, dataset)
}

/// Writes `inst_XXX.net.json`, `.domain.json` and optionally `.data.csv`;
/// returns the instance names.
pub fn cmd_gen(args: &GenArgs) -> CliResult<Vec<String>> {
    let spec = GenSpec {
        input_dim: args.input_dim,
        widths: args.widths.clone(),
        output_dim: args.output_dim,
        bias_shift: args.bias_shift,
    };
    spec.validate(args.oracle)?;
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::Io(args.out.clone(), e))?;
    let mut names = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let name = format!("inst_{i:03}");
        let (net, domain, data) = generate_instance(&spec, args.seed, i as u64, args.dataset_rows);
        write_file(&args.out.join(format!("{name}.net.json")), net.to_json())?;
        write_file(
            &args.out.join(format!("{name}.domain.json")),
            domain.to_json(),
        )?;
        if args.dataset_rows > 0 {
            write_file(&args.out.join(format!("{name}.data.csv")), data.to_csv())?;
        }
        names.push(name);
    }
    eprintln!("wrote {} instances to {}", names.len(), args.out.display());
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(widths: Vec<usize>) -> GenSpec {
        GenSpec {
            input_dim: 2,
            widths,
            output_dim: 1,
            bias_shift: 0.0,
        }
    }

    #[test]
    fn validation() {
        assert!(spec(vec![4, 4]).validate(true).is_ok());
        assert!(spec(vec![]).validate(false).is_err());
        assert!(spec(vec![3, 0]).validate(false).is_err());
        assert!(spec(vec![15, 15]).validate(true).is_err());
        assert!(spec(vec![15, 15]).validate(false).is_ok());
    }

    #[test]
    fn streams_differ_by_index() {
        let s = spec(vec![3]);
        let (a, _, _) = generate_instance(&s, 5, 0, 0);
        let (b, _, _) = generate_instance(&s, 5, 1, 0);
        let (c, _, _) = generate_instance(&s, 5, 0, 0);
        assert_ne!(a, b);
        assert_eq!(a, c);
        assert_eq!(a.hidden_widths(), vec![3]);
    }
}
