//! The shared metric-space encoder: two valid 1-D convolutions with tanh,
//! separated by a max-pool of width 2, optionally followed by global max pooling.

use rand::Rng;

use crate::autodiff::{ModelParams, ParamId, Tape, Var};
use crate::embeddings::MIN_WINDOW;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const FILTERS: usize = 20;
pub const KERNEL: usize = 3;
pub const POOL: usize = 2;

/// Number of frames the sequence encoder emits for an input window of `width` frames.
pub fn encoded_len(width: usize) -> usize {
    (width - (KERNEL - 1)) / POOL - (KERNEL - 1)
}

/// Closed-form encoder parameter count for embedding dimension `dim`.
pub fn encoder_param_count(dim: usize) -> usize {
    KERNEL * dim * FILTERS + FILTERS + KERNEL * FILTERS * FILTERS + FILTERS
}

/// Glorot-uniform sample. The last axis counts outputs, the one before it
/// inputs, and any leading axes form the receptive field.
pub(crate) fn glorot_uniform(shape: &[usize], rng: &mut impl Rng) -> Tensor {
    let (outputs, inputs) = match shape {
        [.., i, o] => (*o, *i),
        [o] => (*o, 1),
        [] => (1, 1),
    };
    let receptive: usize = shape[..shape.len().saturating_sub(2)].iter().product();
    let bound = (6.0 / (receptive * (inputs + outputs)) as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
    Tensor::new(shape.to_vec(), data).expect("init shape")
}

/// Slots of the encoder weights inside a [`ModelParams`] store.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncoderParams {
    pub conv1_kernels: ParamId,
    pub conv1_bias: ParamId,
    pub conv2_kernels: ParamId,
    pub conv2_bias: ParamId,
    dim: usize,
}

impl EncoderParams {
    fn names(prefix: &str) -> [String; 4] {
        [
            format!("{prefix}.conv1.kernels"),
            format!("{prefix}.conv1.bias"),
            format!("{prefix}.conv2.kernels"),
            format!("{prefix}.conv2.bias"),
        ]
    }

    /// Registers freshly initialized encoder weights; biases start at zero.
    pub fn init(store: &mut ModelParams, prefix: &str, dim: usize, rng: &mut impl Rng) -> Self {
        let [k1, b1, k2, b2] = Self::names(prefix);
        EncoderParams {
            conv1_kernels: store.add(k1, glorot_uniform(&[KERNEL, dim, FILTERS], rng)),
            conv1_bias: store.add(b1, Tensor::zeros(&[FILTERS])),
            conv2_kernels: store.add(k2, glorot_uniform(&[KERNEL, FILTERS, FILTERS], rng)),
            conv2_bias: store.add(b2, Tensor::zeros(&[FILTERS])),
            dim,
        }
    }

    pub fn zeros(store: &mut ModelParams, prefix: &str, dim: usize) -> Self {
        let [k1, b1, k2, b2] = Self::names(prefix);
        EncoderParams {
            conv1_kernels: store.add(k1, Tensor::zeros(&[KERNEL, dim, FILTERS])),
            conv1_bias: store.add(b1, Tensor::zeros(&[FILTERS])),
            conv2_kernels: store.add(k2, Tensor::zeros(&[KERNEL, FILTERS, FILTERS])),
            conv2_bias: store.add(b2, Tensor::zeros(&[FILTERS])),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> [ParamId; 4] {
        [
            self.conv1_kernels,
            self.conv1_bias,
            self.conv2_kernels,
            self.conv2_bias,
        ]
    }

    fn check_window(&self, window: &Tensor) -> Result<()> {
        if window.rank() != 2 || window.cols() != self.dim {
            return Err(Error::shape(
                "encoder",
                format!("expected W x {} window, got {:?}", self.dim, window.shape()),
            ));
        }
        if window.rows() < MIN_WINDOW {
            return Err(Error::TooShort {
                op: "encoder",
                len: window.rows(),
                min: MIN_WINDOW,
            });
        }
        Ok(())
    }

    /// Records the sequence encoder on `tape`: `T' x FILTERS` output.
    pub fn encode_sequence_var(
        &self,
        tape: &mut Tape,
        store: &ModelParams,
        window: Var,
    ) -> Result<Var> {
        self.check_window(tape.value(window)?)?;
        let k1 = tape.param(store, self.conv1_kernels);
        let b1 = tape.param(store, self.conv1_bias);
        let k2 = tape.param(store, self.conv2_kernels);
        let b2 = tape.param(store, self.conv2_bias);
        let h = tape.conv1d(window, k1, b1)?;
        let h = tape.tanh(h)?;
        let h = tape.maxpool1d(h, POOL)?;
        let h = tape.conv1d(h, k2, b2)?;
        tape.tanh(h)
    }

    /// Records the vector encoder on `tape`: a `FILTERS`-long vector.
    pub fn encode_vector_var(
        &self,
        tape: &mut Tape,
        store: &ModelParams,
        window: Var,
    ) -> Result<Var> {
        let seq = self.encode_sequence_var(tape, store, window)?;
        tape.global_maxpool(seq)
    }

    pub fn encode_vector(&self, store: &ModelParams, window: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let w = tape.constant(window.clone());
        let v = self.encode_vector_var(&mut tape, store, w)?;
        Ok(tape.value(v)?.clone())
    }

    pub fn encode_sequence(&self, store: &ModelParams, window: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let w = tape.constant(window.clone());
        let v = self.encode_sequence_var(&mut tape, store, w)?;
        Ok(tape.value(v)?.clone())
    }
}
