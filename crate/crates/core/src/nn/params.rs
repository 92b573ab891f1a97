//! Named parameter storage and multilayer perceptrons.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::tape::{Tape, Var};

/// Index of a parameter inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

/// Ordered collection of named parameter matrices.
///
/// Initial values depend only on the store seed and the parameter name, so
/// two models that declare the same names get identical weights regardless
/// of declaration order.
#[derive(Clone, Debug)]
pub struct ParamStore {
    seed: u64,
    names: Vec<String>,
    values: Vec<Matrix>,
    index: HashMap<String, usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    /// Uniform on `±sqrt(6 / (fan_in + fan_out))`.
    GlorotUniform,
    Zeros,
}

fn name_hash(name: &str) -> u64 {
    // FNV-1a
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

impl ParamStore {
    pub fn new(seed: u64) -> Self {
        Self { seed, names: Vec::new(), values: Vec::new(), index: HashMap::new() }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Declares a parameter, or returns the existing one with the same name.
    pub fn declare(&mut self, name: &str, rows: usize, cols: usize, init: Init) -> Result<ParamId> {
        if let Some(&i) = self.index.get(name) {
            if self.values[i].shape() != (rows, cols) {
                return Err(Error::ShapeMismatch(format!(
                    "parameter {name} redeclared as {rows}x{cols}, was {:?}",
                    self.values[i].shape()
                )));
            }
            return Ok(ParamId(i));
        }
        let value = match init {
            Init::Zeros => Matrix::zeros(rows, cols),
            Init::GlorotUniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ name_hash(name));
                let limit = (6.0 / (rows + cols).max(1) as f64).sqrt();
                let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
                Matrix::from_vec(rows, cols, data)?
            }
        };
        self.names.push(name.to_string());
        self.values.push(value);
        self.index.insert(name.to_string(), self.values.len() - 1);
        Ok(ParamId(self.values.len() - 1))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total scalar count.
    pub fn n_scalars(&self) -> usize {
        self.values.iter().map(|m| m.as_slice().len()).sum()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.values[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied().map(ParamId)
    }

    pub fn values(&self) -> &[Matrix] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Matrix] {
        &mut self.values
    }

    /// Places every parameter on the tape as a leaf.
    pub fn bind(&self, tape: &mut Tape) -> Bound {
        Bound { vars: self.values.iter().map(|m| tape.leaf(m.clone())).collect() }
    }
}

/// Tape handles for the parameters of one forward pass.
#[derive(Clone, Debug)]
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    pub fn var(&self, id: ParamId) -> Var {
        self.vars[id.0]
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

/// Affine map `X·W + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub d_in: usize,
    pub d_out: usize,
}

impl Linear {
    pub fn declare(store: &mut ParamStore, name: &str, d_in: usize, d_out: usize) -> Result<Self> {
        Ok(Self {
            weight: store.declare(&format!("{name}.w"), d_in, d_out, Init::GlorotUniform)?,
            bias: store.declare(&format!("{name}.b"), 1, d_out, Init::Zeros)?,
            d_in,
            d_out,
        })
    }

    pub fn apply(&self, tape: &mut Tape, bound: &Bound, x: Var) -> Result<Var> {
        let h = tape.matmul(x, bound.var(self.weight))?;
        tape.add_bias(h, bound.var(self.bias))
    }
}

/// Input block of an MLP whose first layer sees a column concatenation.
///
/// `Gathered(x, idx)` contributes rows `x[idx[k]]`; since
/// `gather(x)·W = gather(x·W)`, the product is taken before gathering.
#[derive(Clone, Debug)]
pub enum Part {
    Dense(Var),
    Gathered(Var, std::sync::Arc<[usize]>),
}

/// Multilayer perceptron: ReLU between layers, linear output.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<Linear>,
}

impl Mlp {
    /// `widths = [d_in, h1, ..., d_out]`.
    pub fn declare(store: &mut ParamStore, name: &str, widths: &[usize]) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidParameter(format!("MLP {name} needs at least two widths")));
        }
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::declare(store, &format!("{name}.l{i}"), w[0], w[1]))
            .collect::<Result<_>>()?;
        Ok(Self { layers })
    }

    pub fn d_in(&self) -> usize {
        self.layers[0].d_in
    }

    pub fn d_out(&self) -> usize {
        self.layers.last().unwrap().d_out
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    pub fn apply(&self, tape: &mut Tape, bound: &Bound, x: Var) -> Result<Var> {
        let (_, cols) = tape.shape(x);
        if cols != self.d_in() {
            return Err(Error::ShapeMismatch(format!("MLP expects width {}, got {cols}", self.d_in())));
        }
        let h = self.layers[0].apply(tape, bound, x)?;
        self.finish(tape, bound, h)
    }

    /// Applies the MLP to the column concatenation of `parts` without
    /// materialising it; `rows` is the output row count.
    pub fn apply_parts(&self, tape: &mut Tape, bound: &Bound, parts: &[Part], rows: usize) -> Result<Var> {
        let first = &self.layers[0];
        let w = bound.var(first.weight);
        let mut offset = 0;
        let mut acc: Option<Var> = None;
        for part in parts {
            let src = match part {
                Part::Dense(v) | Part::Gathered(v, _) => *v,
            };
            let width = tape.shape(src).1;
            if width == 0 {
                continue;
            }
            let w_rows = tape.row_slice(w, offset, offset + width)?;
            offset += width;
            let prod = tape.matmul(src, w_rows)?;
            let term = match part {
                Part::Dense(_) => prod,
                Part::Gathered(_, idx) => tape.gather(prod, idx.clone())?,
            };
            if tape.shape(term).0 != rows {
                return Err(Error::ShapeMismatch(format!(
                    "MLP input part has {} rows, expected {rows}",
                    tape.shape(term).0
                )));
            }
            acc = Some(match acc {
                None => term,
                Some(a) => tape.add(a, term)?,
            });
        }
        if offset != first.d_in {
            return Err(Error::ShapeMismatch(format!("MLP expects width {}, parts sum to {offset}", first.d_in)));
        }
        let acc = match acc {
            Some(a) => a,
            None => tape.leaf(Matrix::zeros(rows, first.d_out)),
        };
        let h = tape.add_bias(acc, bound.var(first.bias))?;
        self.finish(tape, bound, h)
    }

    fn finish(&self, tape: &mut Tape, bound: &Bound, mut h: Var) -> Result<Var> {
        for layer in &self.layers[1..] {
            h = tape.relu(h);
            h = layer.apply(tape, bound, h)?;
        }
        Ok(h)
    }
}
