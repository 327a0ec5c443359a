//! One-hidden-layer MLP objective.
//!
//! A network is a flat vector laid out as `[W1, b1, W2, b2]`: `W1` is
//! `inputs x hidden` row-major by input, `b1` has `hidden` entries, `W2` is
//! `hidden x outputs` row-major by hidden node and `b2` has `outputs` entries.
//! Both layers use the logistic sigmoid.

use std::sync::Arc;

use crate::gso::Objective;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpTopology {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
}

impl MlpTopology {
    pub const DEFAULT_HIDDEN: usize = 6;

    pub fn new(inputs: usize, hidden: usize, outputs: usize) -> Result<Self> {
        if inputs == 0 || hidden == 0 || outputs == 0 {
            return Err(Error::InvalidParameter(format!(
                "topology {inputs}-{hidden}-{outputs} has an empty layer"
            )));
        }
        Ok(Self {
            inputs,
            hidden,
            outputs,
        })
    }

    /// Length of the flat weight vector.
    pub fn dimension(&self) -> usize {
        self.inputs * self.hidden + self.hidden + self.hidden * self.outputs + self.outputs
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.inputs * self.hidden;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.hidden * self.outputs;
        (b1, w2, b2)
    }

    fn check(&self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: flat.len(),
            });
        }
        Ok(())
    }
}

pub fn dimension(topology: &MlpTopology) -> usize {
    topology.dimension()
}

/// Structured view of a flat weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub topology: MlpTopology,
    /// `w1[i][h]`
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    /// `w2[h][c]`
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
}

impl Network {
    pub fn decode(topology: MlpTopology, flat: &[f64]) -> Result<Self> {
        topology.check(flat)?;
        let (o_b1, o_w2, o_b2) = topology.offsets();
        let w1 = flat[..o_b1].chunks(topology.hidden).map(<[f64]>::to_vec).collect();
        let w2 = flat[o_w2..o_b2]
            .chunks(topology.outputs)
            .map(<[f64]>::to_vec)
            .collect();
        Ok(Self {
            topology,
            w1,
            b1: flat[o_b1..o_w2].to_vec(),
            w2,
            b2: flat[o_b2..].to_vec(),
        })
    }

    pub fn encode(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.topology.dimension());
        self.w1.iter().for_each(|r| flat.extend_from_slice(r));
        flat.extend_from_slice(&self.b1);
        self.w2.iter().for_each(|r| flat.extend_from_slice(r));
        flat.extend_from_slice(&self.b2);
        flat
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Forward pass writing into caller buffers (`hidden`, `out`).
fn forward_into(t: &MlpTopology, flat: &[f64], x: &[f64], hidden: &mut [f64], out: &mut [f64]) {
    let (o_b1, o_w2, o_b2) = t.offsets();
    hidden.copy_from_slice(&flat[o_b1..o_w2]);
    for (i, &xi) in x.iter().enumerate() {
        let row = &flat[i * t.hidden..(i + 1) * t.hidden];
        for (h, w) in hidden.iter_mut().zip(row) {
            *h += w * xi;
        }
    }
    hidden.iter_mut().for_each(|h| *h = sigmoid(*h));

    out.copy_from_slice(&flat[o_b2..]);
    for (j, &hj) in hidden.iter().enumerate() {
        let row = &flat[o_w2 + j * t.outputs..o_w2 + (j + 1) * t.outputs];
        for (o, w) in out.iter_mut().zip(row) {
            *o += w * hj;
        }
    }
    out.iter_mut().for_each(|o| *o = sigmoid(*o));
}

pub fn forward(topology: &MlpTopology, flat: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    topology.check(flat)?;
    if x.len() != topology.inputs {
        return Err(Error::DimensionMismatch {
            expected: topology.inputs,
            actual: x.len(),
        });
    }
    let mut hidden = vec![0.0; topology.hidden];
    let mut out = vec![0.0; topology.outputs];
    forward_into(topology, flat, x, &mut hidden, &mut out);
    Ok(out)
}

/// A training pattern with a one-hot target.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    pub class: usize,
}

fn check_patterns(topology: &MlpTopology, patterns: &[Pattern]) -> Result<()> {
    if patterns.is_empty() {
        return Err(Error::EmptyPatterns);
    }
    for p in patterns {
        if p.input.len() != topology.inputs {
            return Err(Error::DimensionMismatch {
                expected: topology.inputs,
                actual: p.input.len(),
            });
        }
        if p.target.len() != topology.outputs {
            return Err(Error::DimensionMismatch {
                expected: topology.outputs,
                actual: p.target.len(),
            });
        }
    }
    Ok(())
}

fn mse_unchecked(topology: &MlpTopology, flat: &[f64], patterns: &[Pattern]) -> f64 {
    let mut hidden = vec![0.0; topology.hidden];
    let mut out = vec![0.0; topology.outputs];
    let mut total = 0.0;
    for p in patterns {
        forward_into(topology, flat, &p.input, &mut hidden, &mut out);
        total += p
            .target
            .iter()
            .zip(&out)
            .map(|(t, o)| (t - o) * (t - o))
            .sum::<f64>();
    }
    total / patterns.len() as f64
}

/// Mean over patterns of the summed squared output error.
pub fn mse_cost(topology: &MlpTopology, flat: &[f64], patterns: &[Pattern]) -> Result<f64> {
    topology.check(flat)?;
    check_patterns(topology, patterns)?;
    Ok(mse_unchecked(topology, flat, patterns))
}

/// Fraction of patterns whose arg-max output is the true class. Ties go to the
/// lowest class index.
pub fn accuracy(topology: &MlpTopology, flat: &[f64], patterns: &[Pattern]) -> Result<f64> {
    topology.check(flat)?;
    check_patterns(topology, patterns)?;
    let mut hidden = vec![0.0; topology.hidden];
    let mut out = vec![0.0; topology.outputs];
    let mut correct = 0usize;
    for p in patterns {
        forward_into(topology, flat, &p.input, &mut hidden, &mut out);
        let mut best = 0;
        for (k, &o) in out.iter().enumerate().skip(1) {
            if o > out[best] {
                best = k;
            }
        }
        correct += usize::from(best == p.class);
    }
    Ok(correct as f64 / patterns.len() as f64)
}

/// MSE over a fixed pattern set as an [`Objective`].
#[derive(Debug, Clone)]
pub struct MlpObjective {
    topology: MlpTopology,
    patterns: Arc<[Pattern]>,
}

impl MlpObjective {
    pub fn topology(&self) -> &MlpTopology {
        &self.topology
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }
}

impl Objective for MlpObjective {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.topology.check(x)?;
        Ok(mse_unchecked(&self.topology, x, &self.patterns))
    }
}

pub fn make_cost_fn(topology: MlpTopology, split: Vec<Pattern>) -> Result<MlpObjective> {
    check_patterns(&topology, &split)?;
    Ok(MlpObjective {
        topology,
        patterns: split.into(),
    })
}
