//! Window assignment: slicing a frame stream into states.
//!
//! Four window forms: count tumbling (the default form queries use),
//! count sliding, aligned time windows (bucket `⌊t/duration⌋`), and a
//! one-shot absolute window over a closed `[t_m, t_n]` range. Windows
//! never emit empty states. At end of stream, time and absolute windows
//! flush their partial content as a final state; count windows discard
//! partials — a count window's contract is exactly-n frames per state.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::graph::FrameGraph;

/// A window form and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowSpec {
    CountTumbling { n: u32 },
    CountSliding { n: u32, slide: u32 },
    Time { duration_ms: i64 },
    Absolute { t_m: i64, t_n: i64 },
}

impl WindowSpec {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            WindowSpec::CountTumbling { n } if n < 1 => {
                Err("count window needs n ≥ 1".to_string())
            }
            WindowSpec::CountSliding { n, slide } if n < 1 || slide < 1 => {
                Err("sliding window needs n ≥ 1 and slide ≥ 1".to_string())
            }
            WindowSpec::Time { duration_ms } if duration_ms <= 0 => {
                Err("time window needs a positive duration".to_string())
            }
            WindowSpec::Absolute { t_m, t_n } if t_m >= t_n => {
                Err(format!("absolute window needs t_m < t_n, got [{t_m}, {t_n}]"))
            }
            _ => Ok(()),
        }
    }
}

/// One live window over one publisher's frames for one query.
#[derive(Debug, Clone)]
pub struct WindowInstance {
    spec: WindowSpec,
    buffer: Vec<Arc<FrameGraph>>,
    /// Frames still to skip before buffering resumes (sliding windows with
    /// slide > n).
    skip: u32,
    /// The time bucket currently being filled.
    bucket: Option<i64>,
    /// Set once an absolute window has emitted.
    done: bool,
}

impl WindowInstance {
    pub fn new(spec: WindowSpec) -> Self {
        WindowInstance {
            spec,
            buffer: Vec::new(),
            skip: 0,
            bucket: None,
            done: false,
        }
    }

    pub fn spec(&self) -> &WindowSpec {
        &self.spec
    }

    /// Offers one frame; returns the states this frame completed (at most
    /// one for every form except pathological time gaps, which still
    /// produce at most one because empty buckets emit nothing).
    pub fn offer(&mut self, frame: &Arc<FrameGraph>) -> Vec<Vec<Arc<FrameGraph>>> {
        let mut out = Vec::new();
        match self.spec {
            WindowSpec::CountTumbling { n } => {
                self.buffer.push(Arc::clone(frame));
                if self.buffer.len() == n as usize {
                    out.push(std::mem::take(&mut self.buffer));
                }
            }
            WindowSpec::CountSliding { n, slide } => {
                if self.skip > 0 {
                    self.skip -= 1;
                    return out;
                }
                self.buffer.push(Arc::clone(frame));
                if self.buffer.len() == n as usize {
                    out.push(self.buffer.clone());
                    if slide >= n {
                        self.buffer.clear();
                        self.skip = slide - n;
                    } else {
                        self.buffer.drain(0..slide as usize);
                    }
                }
            }
            WindowSpec::Time { duration_ms } => {
                let bucket = frame.timestamp_ms.div_euclid(duration_ms);
                match self.bucket {
                    Some(current) if bucket != current => {
                        if !self.buffer.is_empty() {
                            out.push(std::mem::take(&mut self.buffer));
                        }
                        self.bucket = Some(bucket);
                    }
                    None => self.bucket = Some(bucket),
                    _ => {}
                }
                self.buffer.push(Arc::clone(frame));
            }
            WindowSpec::Absolute { t_m, t_n } => {
                if self.done {
                    return out;
                }
                let t = frame.timestamp_ms;
                if t > t_n {
                    if !self.buffer.is_empty() {
                        out.push(std::mem::take(&mut self.buffer));
                    }
                    self.done = true;
                } else if t >= t_m {
                    self.buffer.push(Arc::clone(frame));
                }
            }
        }
        out
    }

    /// Emits the partial state at end of stream, for the window forms whose
    /// contract allows it.
    pub fn flush(&mut self) -> Option<Vec<Arc<FrameGraph>>> {
        match self.spec {
            // A count state is exactly n frames; partials are discarded.
            WindowSpec::CountTumbling { .. } | WindowSpec::CountSliding { .. } => {
                self.buffer.clear();
                None
            }
            WindowSpec::Time { .. } => {
                self.bucket = None;
                if self.buffer.is_empty() {
                    None
                } else {
                    Some(std::mem::take(&mut self.buffer))
                }
            }
            WindowSpec::Absolute { .. } => {
                if self.done || self.buffer.is_empty() {
                    None
                } else {
                    self.done = true;
                    Some(std::mem::take(&mut self.buffer))
                }
            }
        }
    }
}
