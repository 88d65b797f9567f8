//! Samples, datasets, event-stream slicing and batching.

mod events;
mod teacher;

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use events::{slice_events, Event, EventStream, FrameNormalization};
pub use teacher::{synthetic_teacher, TeacherConfig, TeacherDataset};

use crate::error::{Error, Result};
use crate::lif::Frames;

/// One encoded input with its class label.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub frames: Frames,
    pub label: usize,
}

impl Sample {
    /// Desired output spikes: one-hot over `classes`.
    pub fn target(&self, classes: usize) -> Vec<f64> {
        (0..classes)
            .map(|j| if j == self.label { 1.0 } else { 0.0 })
            .collect()
    }
}

/// Labelled samples of a single task.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Self {
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// First `n` samples and the rest.
    pub fn split_at(mut self, n: usize) -> (Dataset, Dataset) {
        let rest = self.samples.split_off(n.min(self.samples.len()));
        (self, Dataset { samples: rest })
    }

    pub fn class_counts(&self, classes: usize) -> Vec<usize> {
        let mut counts = alloc::vec![0; classes];
        for s in &self.samples {
            if s.label < classes {
                counts[s.label] += 1;
            }
        }
        counts
    }

    /// Batches in an order fixed by `seed` (`None` keeps storage order).
    pub fn batches(&self, batch_size: usize, seed: Option<u64>) -> Result<Batches<'_>> {
        batch_iter(self, batch_size, seed)
    }
}

/// Deterministic batch sequence over a dataset; the last batch may be short.
#[derive(Clone, Debug)]
pub struct Batches<'a> {
    data: &'a Dataset,
    order: Vec<usize>,
    batch_size: usize,
    next: usize,
}

impl<'a> Iterator for Batches<'a> {
    type Item = Vec<&'a Sample>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.order.len() {
            return None;
        }
        let end = (self.next + self.batch_size).min(self.order.len());
        let batch = self.order[self.next..end]
            .iter()
            .map(|&i| &self.data.samples[i])
            .collect();
        self.next = end;
        Some(batch)
    }
}

pub fn batch_order(len: usize, seed: Option<u64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    if let Some(seed) = seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    order
}

pub fn batch_iter(data: &Dataset, batch_size: usize, seed: Option<u64>) -> Result<Batches<'_>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if batch_size == 0 {
        return Err(Error::Parameter("batch size must be positive".into()));
    }
    Ok(Batches {
        data,
        order: batch_order(data.len(), seed),
        batch_size,
        next: 0,
    })
}
