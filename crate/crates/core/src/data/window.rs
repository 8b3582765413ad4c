use std::ops::Range;

use crate::domain::{Matrix, WindowSample};

/// Number of `(l, h)` windows that fit entirely inside a range of `len` steps.
pub fn window_count(len: usize, context: usize, horizon: usize) -> usize {
    (len + 1).saturating_sub(context + horizon)
}

/// Sliding windows over `values[range]`, stride one. No window leaves the range.
pub struct Windows<'a> {
    values: &'a Matrix,
    context: usize,
    horizon: usize,
    next: usize,
    last: usize,
}

impl<'a> Iterator for Windows<'a> {
    type Item = WindowSample;

    fn next(&mut self) -> Option<WindowSample> {
        if self.next >= self.last {
            return None;
        }
        let start = self.next;
        self.next += 1;
        let split = start + self.context;
        Some(WindowSample {
            context: self.values.slice_rows(start, split),
            target: self.values.slice_rows(split, split + self.horizon),
            anchor: split - 1,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.last.saturating_sub(self.next);
        (n, Some(n))
    }
}

impl ExactSizeIterator for Windows<'_> {}

/// Iterates `(context, target)` windows inside `range`. A range shorter than
/// `context + horizon` yields nothing and logs a warning.
pub fn window_iter(values: &Matrix, range: Range<usize>, context: usize, horizon: usize) -> Windows<'_> {
    let count = window_count(range.len(), context, horizon);
    if count == 0 {
        log::warn!(
            "range {}..{} ({} steps) holds no window of context {context} + horizon {horizon}",
            range.start,
            range.end,
            range.len()
        );
    }
    Windows {
        values,
        context,
        horizon,
        next: range.start,
        last: range.start + count,
    }
}
