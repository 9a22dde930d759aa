//! Fixed-capacity replay memories.
//!
//! Both the normal-data memory and the train-data memory are reservoir
//! buffers: each offered item is retained with probability capacity/seen, so
//! the buffer is always an unbiased uniform sample of everything offered.
//! The train-data memory stores rows together with the pseudo-label they had
//! at insertion time; labels are never recomputed on replay.
//!
//! `ReplayMemory` exists so alternative retention policies can slot in
//! behind the same interface; reservoir sampling is the one shipped here.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bounded memory over a stream of items.
pub trait ReplayMemory<T> {
    /// Offer one item from the stream; the policy decides retention.
    fn offer(&mut self, item: T);
    /// Items currently retained.
    fn items(&self) -> &[T];
    /// Number of items offered so far.
    fn seen(&self) -> u64;
    fn capacity(&self) -> usize;

    fn offer_all<I: IntoIterator<Item = T>>(&mut self, items: I)
    where
        Self: Sized,
    {
        for item in items {
            self.offer(item);
        }
    }
}

/// One train-memory record: a feature row plus the pseudo-label assigned
/// when it was inserted. `label` is `None` when the run is configured to
/// store rows only (labels then come from the current task's pseudo-labeler
/// at replay time).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainItem {
    pub row: Vec<f64>,
    pub label: Option<u8>,
}

/// Uniform reservoir sample over an unbounded stream.
#[derive(Clone, Debug)]
pub struct ReservoirBuffer<T> {
    capacity: usize,
    seen: u64,
    items: Vec<T>,
    seed: u64,
    rng: ChaCha8Rng,
}

impl<T> ReservoirBuffer<T> {
    pub fn new(capacity: usize, seed: u64) -> Self {
        ReservoirBuffer {
            capacity,
            seen: 0,
            items: Vec::with_capacity(capacity.min(4096)),
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Buffer contents followed by the batch, leaving the buffer untouched.
    pub fn merge_with(&self, batch: &[T]) -> Vec<T>
    where
        T: Clone,
    {
        let mut out = Vec::with_capacity(self.items.len() + batch.len());
        out.extend(self.items.iter().cloned());
        out.extend(batch.iter().cloned());
        out
    }
}

impl<T> ReplayMemory<T> for ReservoirBuffer<T> {
    fn offer(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            // j uniform over [0, seen]; seen+1 equally likely slots keep
            // every offered item retained with probability capacity/seen
            let j = self.rng.random_range(0..=self.seen);
            if (j as usize) < self.capacity {
                self.items[j as usize] = item;
            }
        }
        self.seen += 1;
    }

    fn items(&self) -> &[T] {
        &self.items
    }

    fn seen(&self) -> u64 {
        self.seen
    }

    fn capacity(&self) -> usize {
        self.capacity
    }
}

/// Serialized form: rows + seen + rng position, enough to checkpoint and
/// resume a scenario mid-stream.
#[derive(Serialize, Deserialize)]
struct ReservoirState<T> {
    capacity: usize,
    seen: u64,
    items: Vec<T>,
    seed: u64,
    word_pos: u128,
}

impl<T: Serialize + Clone> Serialize for ReservoirBuffer<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ReservoirState {
            capacity: self.capacity,
            seen: self.seen,
            items: self.items.clone(),
            seed: self.seed,
            word_pos: self.rng.get_word_pos(),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for ReservoirBuffer<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let state = ReservoirState::<T>::deserialize(deserializer)?;
        let mut rng = ChaCha8Rng::seed_from_u64(state.seed);
        rng.set_word_pos(state.word_pos);
        Ok(ReservoirBuffer {
            capacity: state.capacity,
            seen: state.seen,
            items: state.items,
            seed: state.seed,
            rng,
        })
    }
}

impl<T: Serialize + Clone> ReservoirBuffer<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reservoir serializes")
    }
}

impl<T: for<'de> Deserialize<'de>> ReservoirBuffer<T> {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::data(format!("bad reservoir checkpoint: {e}")))
    }
}
