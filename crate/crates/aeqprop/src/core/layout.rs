//! Flat vectors with named, shaped segments.
//!
//! Parameters, states and control knobs are all stored as contiguous
//! `f64` buffers; a [`Layout`] names the segments (`"w1"`, `"b1"`, ...)
//! so traces, configs and per-segment coupling strengths can refer to
//! them without caring how a model packs its variables.

use std::sync::Arc;

/// One named slice of a flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Segment table for a flat vector. Offsets are contiguous by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    segments: Vec<Segment>,
    total: usize,
}

impl Layout {
    pub fn new(parts: impl IntoIterator<Item = (String, Vec<usize>)>) -> Arc<Self> {
        let mut segments = Vec::new();
        let mut offset = 0;
        for (name, shape) in parts {
            let len: usize = shape.iter().product();
            segments.push(Segment {
                name,
                shape,
                offset,
            });
            offset += len;
        }
        Arc::new(Layout {
            segments,
            total: offset,
        })
    }

    pub fn scalar(name: &str) -> Arc<Self> {
        Layout::new([(name.to_string(), vec![1])])
    }

    pub fn total_len(&self) -> usize {
        self.total
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn segment(&self, idx: usize) -> &Segment {
        &self.segments[idx]
    }

    pub fn by_name(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    /// Index of the segment containing flat position `pos`.
    pub fn segment_of(&self, pos: usize) -> usize {
        debug_assert!(pos < self.total);
        match self
            .segments
            .binary_search_by(|s| s.offset.cmp(&pos))
        {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }
}
