use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand_core::{RngCore, SeedableRng};
use rand_pcg::Pcg64Mcg;

use super::alias::AliasTable;
use super::embedding::EmbeddingTable;
use super::kernels::{Kernel, Portable};
use super::node2vec::{Node2VecConfig, MAX_NEGATIVES};
use super::BaselineError;
use crate::rng::SeededRng;
use crate::EntityId;

/// Pairs of look-ahead for noise draws.
const AHEAD: usize = 3;

/// Stream reserved for skip-gram initialization and sampling.
const TRAIN_STREAM: u64 = 0x5347_4e53;

#[inline]
pub fn dot<F: Float>(a: &[F], b: &[F]) -> F {
    Portable.dot(a, b)
}

/// Logistic function, stable for large |x|.
#[inline]
pub fn sigmoid<F: Float>(x: F) -> F {
    let e = (-x.abs()).exp();
    if x >= F::zero() {
        F::one() / (F::one() + e)
    } else {
        e / (F::one() + e)
    }
}

/// `ln(1 + e^x)`, stable for large |x|.
#[inline]
pub fn softplus<F: Float>(x: F) -> F {
    x.max(F::zero()) + (-x.abs()).exp().ln_1p()
}

/// Tabulated logistic function on [-LIMIT, LIMIT] with linear
/// interpolation, clamped outside. Absolute error below 1e-6.
struct SigmoidTable {
    values: Vec<f32>,
}

impl SigmoidTable {
    const LIMIT: f32 = 8.0;
    const SIZE: usize = 4096;

    fn new() -> Self {
        let values = (0..=Self::SIZE)
            .map(|i| {
                let x = (i as f64 / Self::SIZE as f64 * 2.0 - 1.0) * Self::LIMIT as f64;
                sigmoid(x) as f32
            })
            .collect();
        Self { values }
    }

    #[inline(always)]
    fn eval(&self, x: f32) -> f32 {
        let pos = (x.clamp(-Self::LIMIT, Self::LIMIT) + Self::LIMIT) * (Self::SIZE as f32 / (2.0 * Self::LIMIT));
        let i = (pos as i32).min(Self::SIZE as i32 - 1) as usize;
        let t = pos - i as f32;
        let (a, b) = (self.values[i], self.values[i + 1]);
        a + (b - a) * t
    }
}

/// Negative-sampling loss of one (input, target) pair against noise rows:
/// `-ln σ(input·target) - Σ ln σ(-input·noise)`.
pub fn pair_loss<F: Float>(input: &[F], target: &[F], noise: &[&[F]]) -> F {
    let mut loss = softplus(-dot(input, target));
    for n in noise {
        loss = loss + softplus(dot(input, n));
    }
    loss
}

/// One SGD step on [`pair_loss`] with row-major `inputs` / `outputs`
/// matrices of width `dim`. Output rows are updated in place as they are
/// visited; the input row is updated once at the end from the accumulated
/// gradient. Noise rows equal to `target` are skipped. Returns the loss
/// before the step when `with_loss` is set, zero otherwise.
#[allow(clippy::too_many_arguments)]
#[inline(always)]
pub fn sgns_step<F: Float, K: Kernel<F>>(
    kernel: K,
    inputs: &mut [F],
    outputs: &mut [F],
    dim: usize,
    input: usize,
    target: usize,
    noise: &[usize],
    lr: F,
    scratch: &mut [F],
    with_loss: bool,
) -> F {
    step_with(kernel, sigmoid, inputs, outputs, dim, input, target, noise, lr, scratch, with_loss)
}

#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn step_with<F: Float, K: Kernel<F>>(
    kernel: K,
    logistic: impl Fn(F) -> F,
    inputs: &mut [F],
    outputs: &mut [F],
    dim: usize,
    input: usize,
    target: usize,
    noise: &[usize],
    lr: F,
    scratch: &mut [F],
    with_loss: bool,
) -> F {
    let inp = &mut inputs[input * dim..(input + 1) * dim];
    let mut loss = F::zero();
    let mut visit = |row: usize, positive: bool| {
        let out = &mut outputs[row * dim..(row + 1) * dim];
        let f = kernel.dot(inp, out);
        let label = if positive { F::one() } else { F::zero() };
        let g = label - logistic(f);
        if with_loss {
            loss = loss + softplus(if positive { -f } else { f });
        }
        if positive {
            kernel.fused_init(scratch, out, inp, g, lr * g);
        } else {
            kernel.fused_update(scratch, out, inp, g, lr * g);
        }
    };
    visit(target, true);
    for &n in noise {
        if n != target {
            visit(n, false);
        }
    }
    kernel.axpy(inp, lr, scratch);
    loss
}

/// Skip-gram with negative sampling over node walks. Returns one vector per
/// entry of `nodes` (walk tokens index into `nodes`) and the mean pair loss
/// of each epoch. Single-threaded and bit-reproducible for a fixed seed on a
/// given build and CPU.
pub fn train_skipgram_traced(
    walks: &[Vec<u32>],
    nodes: &[EntityId],
    cfg: &Node2VecConfig,
) -> Result<(EmbeddingTable, Vec<f64>), BaselineError> {
    train(walks, nodes, cfg, true)
}

pub fn train_skipgram(walks: &[Vec<u32>], nodes: &[EntityId], cfg: &Node2VecConfig) -> Result<EmbeddingTable, BaselineError> {
    train(walks, nodes, cfg, false).map(|(t, _)| t)
}

struct Trainer<'a> {
    walks: &'a [Vec<u32>],
    cfg: &'a Node2VecConfig,
    noise_table: AliasTable,
    inputs: Vec<f32>,
    outputs: Vec<f32>,
    tokens: u64,
    fast: Pcg64Mcg,
    with_loss: bool,
}

impl Trainer<'_> {
    /// Runs every epoch; returns the mean pair loss per epoch when tracing.
    #[inline(always)]
    fn run<K: Kernel<f32>>(&mut self, kernel: K) -> Vec<f64> {
        let cfg = self.cfg;
        let dim = cfg.dim;
        let window = cfg.window as u64;
        let mut scratch = vec![0f32; dim];
        let table = SigmoidTable::new();
        let k = cfg.negatives;
        // noise is drawn AHEAD pairs early so its rows can be prefetched
        let mut ring = vec![0usize; k * AHEAD];
        for slot in ring.iter_mut() {
            *slot = self.noise_table.sample_bits(self.fast.next_u64());
        }
        let mut head = 0usize;
        let total = (self.tokens * cfg.epochs as u64) as f64;
        let (lr_start, lr_end) = (cfg.lr_start, cfg.lr_end);
        let mut processed = 0u64;
        let mut epoch_losses = Vec::with_capacity(cfg.epochs);
        for _ in 0..cfg.epochs {
            let (mut loss_sum, mut pairs) = (0f64, 0u64);
            for walk in self.walks {
                for (i, &center) in walk.iter().enumerate() {
                    let lr = (lr_start - (lr_start - lr_end) * processed as f64 / total).max(lr_end) as f32;
                    processed += 1;
                    // reduced window, uniform in 1..=window
                    let reach = (window - (((self.fast.next_u64() >> 32) * window) >> 32)) as usize;
                    if let Some(&next) = walk.get(i + 1) {
                        let next = next as usize;
                        kernel.prefetch(&self.outputs[next * dim..(next + 1) * dim]);
                    }
                    let lo = i.saturating_sub(reach);
                    let hi = (i + reach).min(walk.len() - 1);
                    for j in lo..=hi {
                        if j == i {
                            continue;
                        }
                        let mut noise = [0usize; MAX_NEGATIVES];
                        let noise = &mut noise[..k];
                        let slots = &mut ring[head * k..(head + 1) * k];
                        noise.copy_from_slice(slots);
                        for slot in slots.iter_mut() {
                            *slot = self.noise_table.sample_bits(self.fast.next_u64());
                            kernel.prefetch(&self.outputs[*slot * dim..(*slot + 1) * dim]);
                        }
                        head = (head + 1) % AHEAD;
                        let l = step_with(
                            kernel,
                            |x| table.eval(x),
                            &mut self.inputs,
                            &mut self.outputs,
                            dim,
                            walk[j] as usize,
                            center as usize,
                            noise,
                            lr,
                            &mut scratch,
                            self.with_loss,
                        );
                        loss_sum += l as f64;
                        pairs += 1;
                    }
                }
            }
            if self.with_loss {
                epoch_losses.push(if pairs == 0 { 0.0 } else { loss_sum / pairs as f64 });
            }
        }
        epoch_losses
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx")]
    fn run_avx(&mut self) -> Vec<f64> {
        // SAFETY: only called after the CPU check.
        self.run(unsafe { super::kernels::Avx::new_unchecked() })
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx,fma")]
    fn run_avx_fma(&mut self) -> Vec<f64> {
        // SAFETY: only called after the CPU check.
        self.run(unsafe { super::kernels::AvxFma::new_unchecked() })
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx512f")]
    fn run_avx512(&mut self) -> Vec<f64> {
        // SAFETY: only called after the CPU check.
        self.run(unsafe { super::kernels::Avx512::new_unchecked() })
    }

    fn run_best(&mut self) -> Vec<f64> {
        #[cfg(target_arch = "x86_64")]
        {
            use super::kernels::{x86_level, X86Level};
            match x86_level() {
                // SAFETY: the level reports what the CPU supports.
                X86Level::Avx512 => unsafe { self.run_avx512() },
                X86Level::AvxFma => unsafe { self.run_avx_fma() },
                X86Level::Avx => unsafe { self.run_avx() },
                X86Level::Sse => self.run(super::kernels::Sse),
            }
        }
        #[cfg(not(target_arch = "x86_64"))]
        {
            self.run(Portable)
        }
    }
}

fn train(
    walks: &[Vec<u32>],
    nodes: &[EntityId],
    cfg: &Node2VecConfig,
    with_loss: bool,
) -> Result<(EmbeddingTable, Vec<f64>), BaselineError> {
    cfg.validate()?;
    let vocab = nodes.len();
    let dim = cfg.dim;
    let mut counts = vec![0u64; vocab];
    for w in walks {
        for &t in w {
            *counts.get_mut(t as usize).ok_or(BaselineError::InvalidWalk(t))? += 1;
        }
    }
    let tokens: u64 = counts.iter().sum();
    if tokens == 0 {
        return Err(BaselineError::EmptyCorpus);
    }
    let noise_weights: Vec<f64> = counts.iter().map(|&c| Float::powf(c as f64, 0.75)).collect();

    let mut rng = SeededRng::with_stream(cfg.seed, TRAIN_STREAM);
    let inputs: Vec<f32> = (0..vocab * dim).map(|_| ((rng.unit_f64() - 0.5) / dim as f64) as f32).collect();
    // the hot loop draws from a cheaper generator keyed off the seeded stream
    let fast_state = ((rng.next_u64() as u128) << 64) | rng.next_u64() as u128;
    let mut trainer = Trainer {
        walks,
        cfg,
        noise_table: AliasTable::new(&noise_weights),
        inputs,
        outputs: vec![0f32; vocab * dim],
        tokens,
        fast: Pcg64Mcg::from_seed(fast_state.to_le_bytes()),
        with_loss,
    };
    let epoch_losses = trainer.run_best();

    let mut table = EmbeddingTable::new(dim, format!("node2vec-sgns/v1 dim={dim}"))?;
    for (i, id) in nodes.iter().enumerate() {
        let row = trainer.inputs[i * dim..(i + 1) * dim].iter().map(|&x| x as f64).collect();
        table.insert(id.clone(), row)?;
    }
    Ok((table, epoch_losses))
}
