use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// One sensor event. Polarity is 0 (off) or 1 (on).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub t: i64,
    pub x: usize,
    pub y: usize,
    pub polarity: u8,
}

/// Time-ordered events from a `height × width` sensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventStream {
    height: usize,
    width: usize,
    events: Vec<Event>,
}

impl EventStream {
    /// Validates ordering, bounds and polarity.
    pub fn new(height: usize, width: usize, events: Vec<Event>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Ingestion(format!("sensor size {height}x{width}")));
        }
        for (i, e) in events.iter().enumerate() {
            if e.x >= width || e.y >= height {
                return Err(Error::Ingestion(format!(
                    "event {i} at ({}, {}) outside {height}x{width}",
                    e.x, e.y
                )));
            }
            if e.polarity > 1 {
                return Err(Error::Ingestion(format!(
                    "event {i} has polarity {}",
                    e.polarity
                )));
            }
            if i > 0 && e.t < events[i - 1].t {
                return Err(Error::Ingestion(format!("event {i} goes back in time")));
            }
        }
        Ok(Self {
            height,
            width,
            events,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Scaling applied to the pseudo-frame histograms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum FrameNormalization {
    /// Divide every count by the largest count over all slices of the sample.
    #[default]
    PerSampleMax,
    /// Raw event counts.
    None,
}

/// Splits the stream into `steps` runs of equally many consecutive events
/// (the remainder joins the last run) and histograms each run per pixel and
/// polarity into a `2 × H × W` frame.
pub fn slice_events(
    stream: &EventStream,
    steps: usize,
    norm: FrameNormalization,
) -> Result<Vec<Tensor>> {
    if steps == 0 {
        return Err(Error::Ingestion(
            "time-step count must be at least 1".into(),
        ));
    }
    let n = stream.len();
    if n < steps {
        return Err(Error::Ingestion(format!(
            "{n} events cannot fill {steps} slices"
        )));
    }
    let (h, w) = (stream.height, stream.width);
    let per = n / steps;
    let mut frames: Vec<Tensor> = (0..steps).map(|_| Tensor::zeros(&[2, h, w])).collect();
    for (i, e) in stream.events.iter().enumerate() {
        let slice = (i / per).min(steps - 1);
        frames[slice].data_mut()[(e.polarity as usize * h + e.y) * w + e.x] += 1.0;
    }
    if norm == FrameNormalization::PerSampleMax {
        let max = frames
            .iter()
            .flat_map(|f| f.data().iter().copied())
            .fold(0.0, f64::max);
        for f in &mut frames {
            f.data_mut().iter_mut().for_each(|v| *v /= max);
        }
    }
    Ok(frames)
}
