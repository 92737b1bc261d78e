//! Feedforward ReLU networks, input domains and datasets.
//!
//! A [`Network`] is a chain of affine [`Layer`]s. Every layer except the last
//! applies a ReLU; the last layer is the affine output layer. Neuron indices
//! are zero-based throughout the crate and hidden layers are numbered from 0.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Row `i` holds the incoming weights of neuron `i`.
    #[serde(deserialize_with = "de_matrix")]
    pub weights: Vec<Vec<f64>>,
    #[serde(deserialize_with = "de_vector")]
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Self {
        Layer { weights, bias }
    }

    pub fn width(&self) -> usize {
        self.bias.len()
    }

    /// Preactivation of every neuron for the given layer input.
    pub fn affine(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| dot(row, input) + b)
            .collect()
    }

    /// Number of nonzero weights.
    pub fn connections(&self) -> usize {
        self.weights.iter().flatten().filter(|w| **w != 0.0).count()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
}

#[derive(Deserialize)]
struct RawNetwork {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl Network {
    /// Validates shapes and finiteness.
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::DimensionChain {
                layer: 0,
                message: "input_dim must be positive".into(),
            });
        }
        if layers.is_empty() {
            return Err(Error::DimensionChain {
                layer: 0,
                message: "network has no layers".into(),
            });
        }
        let mut fan_in = input_dim;
        for (l, layer) in layers.iter().enumerate() {
            if layer.bias.is_empty() {
                return Err(Error::DimensionChain {
                    layer: l,
                    message: "layer has no neurons".into(),
                });
            }
            if layer.weights.len() != layer.bias.len() {
                return Err(Error::DimensionChain {
                    layer: l,
                    message: format!(
                        "{} weight rows but {} biases",
                        layer.weights.len(),
                        layer.bias.len()
                    ),
                });
            }
            for (i, row) in layer.weights.iter().enumerate() {
                if row.len() != fan_in {
                    return Err(Error::DimensionChain {
                        layer: l,
                        message: format!(
                            "row {i} has {} columns, previous width is {fan_in}",
                            row.len()
                        ),
                    });
                }
            }
            if layer.weights.iter().flatten().any(|w| !w.is_finite()) {
                return Err(Error::NonFinite(format!("weights of layer {l}")));
            }
            if layer.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::NonFinite(format!("bias of layer {l}")));
            }
            fan_in = layer.width();
        }
        Ok(Network { input_dim, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Layer::width)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    pub fn num_hidden(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn hidden_layers(&self) -> &[Layer] {
        &self.layers[..self.layers.len() - 1]
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.hidden_layers().iter().map(Layer::width).collect()
    }

    /// Total hidden neuron count.
    pub fn num_hidden_neurons(&self) -> usize {
        self.hidden_widths().iter().sum()
    }

    pub fn connections(&self) -> usize {
        self.layers.iter().map(Layer::connections).sum()
    }

    fn check_input(&self, x0: &[f64]) -> Result<()> {
        if x0.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: x0.len(),
            });
        }
        Ok(())
    }

    /// Full trace of a forward pass, one entry per layer including the output layer.
    pub fn forward(&self, x0: &[f64]) -> Result<Vec<LayerTrace>> {
        self.check_input(x0)?;
        let last = self.layers.len() - 1;
        let mut traces: Vec<LayerTrace> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let input = traces.last().map_or(x0, |t| t.post.as_slice());
            let pre = layer.affine(input);
            let active: Vec<bool> = pre.iter().map(|y| *y > 0.0).collect();
            let post = if l == last {
                pre.clone()
            } else {
                pre.iter().map(|y| relu(*y)).collect()
            };
            traces.push(LayerTrace { pre, post, active });
        }
        Ok(traces)
    }

    /// Network output for one input.
    pub fn eval(&self, x0: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x0)?;
        let last = self.layers.len() - 1;
        let mut current = x0.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            current = layer.affine(&current);
            if l != last {
                current.iter_mut().for_each(|v| *v = relu(*v));
            }
        }
        Ok(current)
    }

    /// Activation indicators of the hidden layers.
    pub fn activation_pattern(&self, x0: &[f64]) -> Result<Vec<Vec<bool>>> {
        let mut traces = self.forward(x0)?;
        traces.pop();
        Ok(traces.into_iter().map(|t| t.active).collect())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawNetwork = serde_json::from_str(text).map_err(|e| Error::parse("network", e))?;
        Network::new(raw.input_dim, raw.layers)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serialization cannot fail")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Network::from_json(&text)
}

/// Pre- and post-activation values of one layer at one input.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    pub pre: Vec<f64>,
    pub post: Vec<f64>,
    /// `pre > 0`; a preactivation of exactly zero counts as inactive.
    pub active: Vec<bool>,
}

/// Box bounds on every input plus an optional interval on the input sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    sum_bounds: Option<(f64, f64)>,
}

impl InputDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, sum_bounds: Option<(f64, f64)>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidDomain("domain has no coordinates".into()));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidDomain(format!("coordinate {i} is unbounded")));
            }
            if lo > hi {
                return Err(Error::InvalidDomain(format!(
                    "coordinate {i}: lower {lo} exceeds upper {hi}"
                )));
            }
        }
        if let Some((s_lo, s_hi)) = sum_bounds {
            if !s_lo.is_finite() || !s_hi.is_finite() || s_lo > s_hi {
                return Err(Error::InvalidDomain(format!(
                    "sum bounds [{s_lo}, {s_hi}] are not a finite interval"
                )));
            }
            let box_lo: f64 = lower.iter().sum();
            let box_hi: f64 = upper.iter().sum();
            if s_hi < box_lo || s_lo > box_hi {
                return Err(Error::InvalidDomain(format!(
                    "sum bounds [{s_lo}, {s_hi}] miss the box range [{box_lo}, {box_hi}]"
                )));
            }
        }
        Ok(InputDomain {
            lower,
            upper,
            sum_bounds,
        })
    }

    /// The unit box `[0, 1]^dim`.
    pub fn unit_box(dim: usize) -> Self {
        InputDomain {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
            sum_bounds: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn sum_bounds(&self) -> Option<(f64, f64)> {
        self.sum_bounds
    }

    pub fn with_sum_bounds(&self, sum_bounds: Option<(f64, f64)>) -> Result<Self> {
        InputDomain::new(self.lower.clone(), self.upper.clone(), sum_bounds)
    }

    /// Same box, sum constraint dropped.
    pub fn box_only(&self) -> Self {
        InputDomain {
            sum_bounds: None,
            ..self.clone()
        }
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    /// A point of the domain: the midpoint when it meets the sum interval,
    /// otherwise the point on the diagonal from the lower to the upper corner
    /// whose sum is closest to the midpoint's.
    pub fn anchor_point(&self) -> Vec<f64> {
        let mid = self.midpoint();
        let Some((s_lo, s_hi)) = self.sum_bounds else {
            return mid;
        };
        let box_lo: f64 = self.lower.iter().sum();
        let box_hi: f64 = self.upper.iter().sum();
        let target = mid
            .iter()
            .sum::<f64>()
            .clamp(s_lo.max(box_lo), s_hi.min(box_hi));
        let t = if box_hi > box_lo {
            ((target - box_lo) / (box_hi - box_lo)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo + t * (hi - lo))
            .collect()
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
            .collect()
    }

    pub fn satisfies_sum(&self, x: &[f64], tol: f64) -> bool {
        match self.sum_bounds {
            None => true,
            Some((lo, hi)) => {
                let s: f64 = x.iter().sum();
                s >= lo - tol && s <= hi + tol
            }
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= lo - tol && *v <= hi + tol)
            && self.satisfies_sum(x, tol)
    }

    /// Up to `n` points uniform in the box, rejection-sampled under the sum
    /// constraint. Gives up after `100 * n` draws, so thin sum slabs may
    /// yield fewer points.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        let mut draws = 0usize;
        while out.len() < n && draws < n.saturating_mul(100) {
            draws += 1;
            let x: Vec<f64> = self
                .lower
                .iter()
                .zip(&self.upper)
                .map(|(lo, hi)| {
                    if lo < hi {
                        rng.random_range(*lo..=*hi)
                    } else {
                        *lo
                    }
                })
                .collect();
            if self.satisfies_sum(&x, 0.0) {
                out.push(x);
            }
        }
        out
    }

    /// Box corners that satisfy the sum constraint, or `None` above `max_dim`.
    pub fn vertices(&self, max_dim: usize) -> Option<Vec<Vec<f64>>> {
        let d = self.dim();
        if d > max_dim {
            return None;
        }
        let corners = (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|j| {
                        if mask >> j & 1 == 1 {
                            self.upper[j]
                        } else {
                            self.lower[j]
                        }
                    })
                    .collect::<Vec<f64>>()
            })
            .filter(|x| self.satisfies_sum(x, 0.0))
            .collect();
        Some(corners)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawDomain = serde_json::from_str(text).map_err(|e| Error::parse("domain", e))?;
        let norm = raw.normalize.map(|n| (n.mean, n.std));
        build_domain(
            raw.lower,
            raw.upper,
            raw.sum_bounds.map(|[lo, hi]| (lo, hi)),
            norm.as_ref().map(|(m, s)| (m.as_slice(), s.as_slice())),
        )
    }

    pub fn to_json(&self) -> String {
        let raw = serde_json::json!({
            "lower": self.lower,
            "upper": self.upper,
            "sum_bounds": self.sum_bounds.map(|(lo, hi)| [lo, hi]),
            "normalize": null,
        });
        serde_json::to_string_pretty(&raw).expect("domain serialization cannot fail")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Deserialize)]
struct RawDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    #[serde(default)]
    sum_bounds: Option<[f64; 2]>,
    #[serde(default)]
    normalize: Option<RawNormalize>,
}

#[derive(Deserialize)]
struct RawNormalize {
    mean: Vec<f64>,
    std: Vec<f64>,
}

/// Builds an input domain, optionally mapping raw bounds through the
/// normalization `(v - mean) / std`.
///
/// The sum interval is taken as given and applies to the normalized
/// coordinates.
pub fn build_domain(
    lower: Vec<f64>,
    upper: Vec<f64>,
    sum_bounds: Option<(f64, f64)>,
    norm: Option<(&[f64], &[f64])>,
) -> Result<InputDomain> {
    if lower.len() != upper.len() {
        return Err(Error::DimensionMismatch {
            expected: lower.len(),
            actual: upper.len(),
        });
    }
    let (lower, upper) = match norm {
        None => (lower, upper),
        Some((mean, std)) => {
            for v in [mean.len(), std.len()] {
                if v != lower.len() {
                    return Err(Error::DimensionMismatch {
                        expected: lower.len(),
                        actual: v,
                    });
                }
            }
            if let Some(i) = std.iter().position(|s| s.is_nan() || *s <= 0.0) {
                return Err(Error::InvalidDomain(format!(
                    "normalization std[{i}] = {} is not positive",
                    std[i]
                )));
            }
            let map = |v: &[f64]| -> Vec<f64> {
                v.iter()
                    .zip(mean.iter().zip(std))
                    .map(|(x, (m, s))| (x - m) / s)
                    .collect()
            };
            (map(&lower), map(&upper))
        }
    };
    InputDomain::new(lower, upper, sum_bounds)
}

pub fn load_domain(path: impl AsRef<Path>) -> Result<InputDomain> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    InputDomain::from_json(&text)
}

/// Slack allowed when checking dataset rows against the domain; rows inside
/// the slack are clamped onto the domain.
pub const DATASET_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    rows: Vec<Vec<f64>>,
}

impl Dataset {
    /// Validates every row against `domain`.
    pub fn new(rows: Vec<Vec<f64>>, domain: &InputDomain) -> Result<Self> {
        let mut checked = Vec::with_capacity(rows.len());
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != domain.dim() {
                return Err(Error::DimensionMismatch {
                    expected: domain.dim(),
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("dataset row {r}")));
            }
            if !domain.contains(&row, DATASET_SLACK) {
                return Err(Error::OutsideDomain { row: r });
            }
            checked.push(domain.clamp(&row));
        }
        Ok(Dataset { rows: checked })
    }

    pub fn empty() -> Self {
        Dataset { rows: Vec::new() }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Parses headerless CSV, one input vector per line.
    pub fn from_csv(text: &str, domain: &InputDomain) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (r, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::parse("dataset", e))?;
            let row = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|e| {
                        Error::parse("dataset", format!("row {r}, value {field:?}: {e}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Dataset::new(rows, domain)
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
        for row in &self.rows {
            writer
                .write_record(row.iter().map(|v| v.to_string()))
                .expect("writing to memory cannot fail");
        }
        String::from_utf8(writer.into_inner().expect("flush to memory")).expect("utf8")
    }
}

pub fn load_dataset(path: impl AsRef<Path>, domain: &InputDomain) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Dataset::from_csv(&text, domain)
}

// Weights may be written as JSON numbers or as the strings "NaN", "inf",
// "-inf", "Infinity", "-Infinity"; the latter are accepted by the parser and
// rejected by validation as non-finite.
#[derive(Deserialize)]
#[serde(untagged)]
enum Scalar {
    Num(f64),
    Text(String),
}

impl Scalar {
    fn value<E: serde::de::Error>(self) -> Result<f64, E> {
        match self {
            Scalar::Num(v) => Ok(v),
            Scalar::Text(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| E::custom(format!("invalid number {s:?}"))),
        }
    }
}

fn de_vector<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    Vec::<Scalar>::deserialize(d)?
        .into_iter()
        .map(Scalar::value)
        .collect()
}

fn de_matrix<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
    Vec::<Vec<Scalar>>::deserialize(d)?
        .into_iter()
        .map(|row| row.into_iter().map(Scalar::value).collect())
        .collect()
}
