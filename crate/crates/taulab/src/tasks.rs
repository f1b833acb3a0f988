//! Input and target generation for the two binary memory tasks.
//!
//! `parity` asks for the XOR of the last N digits; `dms` asks whether the
//! current digit matches the one presented N-1 digits earlier. Digits are
//! i.i.d. fair bits; each digit is held on the input for `k` consecutive
//! time steps, and sequence lengths (in digits) are drawn uniformly from
//! `len_range`.

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Parity,
    Dms,
}

/// One task instance: kind, memory depth, input hold factor, and the
/// digit-count range sequences are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    /// Memory depth N.
    pub n: usize,
    /// Time steps each digit is held on the input.
    pub k: usize,
    /// Inclusive digit-count interval for sampled sequences.
    pub len_range: (usize, usize),
}

impl TaskSpec {
    /// Spec with the default length range `[n + 2, 4n]`.
    pub fn new(kind: TaskKind, n: usize, k: usize) -> Self {
        Self {
            kind,
            n,
            k,
            len_range: (n + 2, 4 * n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("task n must be >= 2, got {}", self.n)));
        }
        if self.k < 1 {
            return Err(Error::InvalidConfig("hold factor k must be >= 1".into()));
        }
        if self.len_range.0 > self.len_range.1 || self.len_range.0 == 0 {
            return Err(Error::EmptyLenRange);
        }
        Ok(())
    }
}

/// Digit-level target. `None` marks indices where fewer than N digits have
/// been presented; it is a value, not an error.
pub fn target_at(kind: TaskKind, digits: &[u8], index: usize, n: usize) -> Option<u8> {
    assert!(index < digits.len(), "target index out of range");
    if index + 1 < n {
        return None;
    }
    match kind {
        TaskKind::Parity => {
            let window = &digits[index + 1 - n..=index];
            Some(window.iter().fold(0, |acc, &d| acc ^ d))
        }
        TaskKind::Dms => Some(u8::from(digits[index] == digits[index + 1 - n])),
    }
}

/// A batch of sequences expanded to time steps. `inputs`, `targets`, and
/// `valid_mask` are B x T with T the longest sequence in steps; entries past
/// a sequence's own end are invalid. The underlying digit strings are kept
/// so targets can be re-derived for any other memory depth (multi-head
/// training scores several N on the same inputs).
#[derive(Debug, Clone)]
pub struct Batch {
    pub spec: TaskSpec,
    /// Raw digit strings, one per sequence.
    pub digits: Vec<Vec<u8>>,
    /// B x T input bits, constant within each k-step hold window.
    pub inputs: Array2<u8>,
    /// B x T targets for `spec.n`; meaningful only where `valid_mask` holds.
    pub targets: Array2<u8>,
    /// B x T validity. False exactly where fewer than N digits have been
    /// presented or past the sequence end.
    pub valid_mask: Array2<bool>,
}

impl Batch {
    pub fn batch_size(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn steps(&self) -> usize {
        self.inputs.ncols()
    }

    /// Targets and validity for an arbitrary memory depth on this batch's
    /// digit strings. A time step maps to digit index `t / k`; targets are
    /// constant within a hold window, and a digit counts as presented from
    /// its first hold step.
    pub fn targets_for(&self, kind: TaskKind, n: usize) -> (Array2<u8>, Array2<bool>) {
        let (b, t_max) = (self.batch_size(), self.steps());
        let k = self.spec.k;
        let mut targets = Array2::zeros((b, t_max));
        let mut valid = Array2::from_elem((b, t_max), false);
        for (s, digits) in self.digits.iter().enumerate() {
            let steps = digits.len() * k;
            for t in 0..steps {
                let d = t / k;
                if let Some(y) = target_at(kind, digits, d, n) {
                    targets[(s, t)] = y;
                    valid[(s, t)] = true;
                }
            }
        }
        (targets, valid)
    }

    /// Debug export: one row per (sequence, step) with input, target, and
    /// validity.
    pub fn to_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "sequence,step,input,target,valid")?;
        for s in 0..self.batch_size() {
            let steps = self.digits[s].len() * self.spec.k;
            for t in 0..steps {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    s,
                    t,
                    self.inputs[(s, t)],
                    self.targets[(s, t)],
                    self.valid_mask[(s, t)]
                )?;
            }
        }
        Ok(())
    }
}

/// Sample a batch: digit counts uniform over `spec.len_range`, digits
/// i.i.d. Bernoulli(0.5), targets per [`target_at`].
pub fn sample_batch(spec: &TaskSpec, batch_size: usize, rng: &mut ChaCha8Rng) -> Result<Batch> {
    spec.validate()?;
    assert!(batch_size >= 1, "batch_size must be >= 1");
    let mut digits = Vec::with_capacity(batch_size);
    for _ in 0..batch_size {
        let len = rng::uniform_range(rng, spec.len_range.0 as u64, spec.len_range.1 as u64) as usize;
        let seq: Vec<u8> = (0..len).map(|_| rng::bit(rng)).collect();
        digits.push(seq);
    }
    Ok(batch_from_digits(spec, digits))
}

/// Build the expanded batch arrays from explicit digit strings.
pub fn batch_from_digits(spec: &TaskSpec, digits: Vec<Vec<u8>>) -> Batch {
    let k = spec.k;
    let t_max = digits.iter().map(|d| d.len() * k).max().unwrap_or(0);
    let b = digits.len();
    let mut inputs = Array2::zeros((b, t_max));
    for (s, seq) in digits.iter().enumerate() {
        for (d, &bit) in seq.iter().enumerate() {
            for t in d * k..(d + 1) * k {
                inputs[(s, t)] = bit;
            }
        }
    }
    let mut batch = Batch {
        spec: *spec,
        digits,
        inputs,
        targets: Array2::zeros((b, t_max)),
        valid_mask: Array2::from_elem((b, t_max), false),
    };
    let (targets, valid) = batch.targets_for(spec.kind, spec.n);
    batch.targets = targets;
    batch.valid_mask = valid;
    batch
}
