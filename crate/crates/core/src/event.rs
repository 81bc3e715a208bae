//! Events and event streams.
//!
//! An [`EventStream`] owns its events together with the sensor geometry and
//! the time window they were recorded over. Streams produced by this crate
//! are always in canonical order: ascending by `(t, y, x, p)`. Parallel
//! producers merge through [`canonical_sort`] so their output does not depend
//! on thread scheduling.

use std::cmp::Ordering;
use std::fmt;

use rayon::slice::ParallelSliceMut;

/// A single brightness-change record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// Seconds.
    pub t: f64,
    pub x: u16,
    pub y: u16,
    /// +1 (ON) or -1 (OFF).
    pub p: i8,
}

impl Event {
    pub fn new(t: f64, x: u16, y: u16, p: i8) -> Self {
        Self { t, x, y, p }
    }

    pub fn is_on(&self) -> bool {
        self.p > 0
    }

    /// Total order used for canonical streams.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.t
            .total_cmp(&other.t)
            .then(self.y.cmp(&other.y))
            .then(self.x.cmp(&other.x))
            .then(self.p.cmp(&other.p))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub events: Vec<Event>,
    pub width: usize,
    pub height: usize,
    pub t_start: f64,
    pub t_end: f64,
}

impl EventStream {
    pub fn new(width: usize, height: usize, t_start: f64, t_end: f64, events: Vec<Event>) -> Self {
        Self {
            events,
            width,
            height,
            t_start,
            t_end,
        }
    }

    pub fn empty(width: usize, height: usize, t_start: f64, t_end: f64) -> Self {
        Self::new(width, height, t_start, t_end, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn pixel_index(&self, e: &Event) -> usize {
        e.y as usize * self.width + e.x as usize
    }

    /// Copy of this stream's metadata holding `events` instead.
    pub fn with_events(&self, events: Vec<Event>) -> Self {
        Self {
            events,
            width: self.width,
            height: self.height,
            t_start: self.t_start,
            t_end: self.t_end,
        }
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Event> {
        self.events.iter()
    }

    /// Merges two canonical streams over the same geometry into one canonical
    /// stream. The window of the result covers both inputs.
    pub fn merge(&self, other: &EventStream) -> EventStream {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut a, mut b) = (self.events.iter().peekable(), other.events.iter().peekable());
        loop {
            let next = match (a.peek(), b.peek()) {
                (Some(ea), Some(eb)) => {
                    if ea.canonical_cmp(eb) != Ordering::Greater {
                        a.next()
                    } else {
                        b.next()
                    }
                }
                (Some(_), None) => a.next(),
                (None, Some(_)) => b.next(),
                (None, None) => break,
            };
            out.extend(next.copied());
        }
        EventStream {
            events: out,
            width: self.width,
            height: self.height,
            t_start: self.t_start.min(other.t_start),
            t_end: self.t_end.max(other.t_end),
        }
    }
}

impl<'a> IntoIterator for &'a EventStream {
    type Item = &'a Event;
    type IntoIter = std::slice::Iter<'a, Event>;

    fn into_iter(self) -> Self::IntoIter {
        self.events.iter()
    }
}

/// Sorts events by `(t, y, x, p)`.
pub fn canonical_sort(mut stream: EventStream) -> EventStream {
    sort_events(&mut stream.events);
    stream
}

pub(crate) fn sort_events(events: &mut [Event]) {
    // Equal keys are equal events, so an unstable sort is still deterministic.
    events.par_sort_unstable_by(Event::canonical_cmp);
}

/// First invariant a stream violates.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFiniteTime { index: usize },
    Unsorted { index: usize },
    OutOfBounds { index: usize, x: u16, y: u16 },
    BadPolarity { index: usize, p: i8 },
    OutsideWindow { index: usize, t: f64 },
    BadWindow { t_start: f64, t_end: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFiniteTime { index } => write!(f, "event {index}: non-finite timestamp"),
            Violation::Unsorted { index } => {
                write!(f, "event {index}: out of canonical (t, y, x, p) order")
            }
            Violation::OutOfBounds { index, x, y } => {
                write!(f, "event {index}: coordinate ({x}, {y}) outside sensor")
            }
            Violation::BadPolarity { index, p } => {
                write!(f, "event {index}: polarity {p} is not -1 or +1")
            }
            Violation::OutsideWindow { index, t } => {
                write!(f, "event {index}: t = {t} outside stream window")
            }
            Violation::BadWindow { t_start, t_end } => {
                write!(f, "invalid window [{t_start}, {t_end}]")
            }
        }
    }
}

impl std::error::Error for Violation {}

/// Checks every stream invariant, reporting the first violation found.
///
/// Per event, checks run in the order timestamp finiteness, polarity, bounds,
/// window, ordering.
pub fn validate(stream: &EventStream) -> Result<(), Violation> {
    if !(stream.t_start.is_finite() && stream.t_end.is_finite() && stream.t_start <= stream.t_end)
    {
        return Err(Violation::BadWindow {
            t_start: stream.t_start,
            t_end: stream.t_end,
        });
    }
    let mut prev: Option<&Event> = None;
    for (index, e) in stream.events.iter().enumerate() {
        if !e.t.is_finite() {
            return Err(Violation::NonFiniteTime { index });
        }
        if e.p != 1 && e.p != -1 {
            return Err(Violation::BadPolarity { index, p: e.p });
        }
        if e.x as usize >= stream.width || e.y as usize >= stream.height {
            return Err(Violation::OutOfBounds {
                index,
                x: e.x,
                y: e.y,
            });
        }
        if e.t < stream.t_start || e.t > stream.t_end {
            return Err(Violation::OutsideWindow { index, t: e.t });
        }
        if let Some(p) = prev {
            if p.canonical_cmp(e) == Ordering::Greater {
                return Err(Violation::Unsorted { index });
            }
        }
        prev = Some(e);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stream(events: Vec<Event>) -> EventStream {
        EventStream::new(8, 8, 0.0, 1.0, events)
    }

    #[test]
    fn sorted_stream_is_unchanged() {
        let s = stream(vec![
            Event::new(0.1, 1, 1, 1),
            Event::new(0.2, 0, 0, -1),
            Event::new(0.2, 0, 0, 1),
        ]);
        assert_eq!(canonical_sort(s.clone()), s);
    }

    #[test]
    fn ties_break_on_row_first() {
        let s = stream(vec![Event::new(0.5, 0, 3, 1), Event::new(0.5, 7, 1, 1)]);
        let sorted = canonical_sort(s);
        assert_eq!(sorted.events[0].y, 1);
        assert_eq!(sorted.events[1].y, 3);
    }

    #[test]
    fn validate_empty_is_ok() {
        assert_eq!(validate(&stream(vec![])), Ok(()));
    }

    #[test]
    fn validate_zero_polarity() {
        let s = stream(vec![Event::new(0.1, 0, 0, 0)]);
        assert!(matches!(validate(&s), Err(Violation::BadPolarity { index: 0, p: 0 })));
    }

    #[test]
    fn validate_x_at_width() {
        let s = stream(vec![Event::new(0.1, 8, 0, 1)]);
        assert!(matches!(validate(&s), Err(Violation::OutOfBounds { index: 0, .. })));
    }

    #[test]
    fn validate_unsorted_and_window() {
        let s = stream(vec![Event::new(0.2, 0, 0, 1), Event::new(0.1, 0, 0, 1)]);
        assert_eq!(validate(&s), Err(Violation::Unsorted { index: 1 }));
        let s = stream(vec![Event::new(1.5, 0, 0, 1)]);
        assert!(matches!(validate(&s), Err(Violation::OutsideWindow { .. })));
    }

    #[test]
    fn merge_keeps_canonical_order() {
        let a = stream(vec![Event::new(0.1, 0, 0, 1), Event::new(0.3, 0, 0, 1)]);
        let b = stream(vec![Event::new(0.2, 0, 0, 1), Event::new(0.3, 0, 0, -1)]);
        let m = a.merge(&b);
        assert_eq!(m.len(), 4);
        assert_eq!(validate(&m), Ok(()));
        assert_eq!(m.events[2], Event::new(0.3, 0, 0, -1));
    }

    fn arb_events() -> impl Strategy<Value = Vec<Event>> {
        prop::collection::vec(
            (0u32..50, 0u16..8, 0u16..8, prop::bool::ANY)
                .prop_map(|(t, x, y, on)| Event::new(t as f64 / 50.0, x, y, if on { 1 } else { -1 })),
            0..60,
        )
    }

    proptest! {
        #[test]
        fn permutation_sorts_to_same_stream(events in arb_events(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = events.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            // Oracle: plain comparison sort on (t, y, x, p) tuples.
            let mut oracle: Vec<(u64, u16, u16, i8)> =
                events.iter().map(|e| (e.t.to_bits(), e.y, e.x, e.p)).collect();
            oracle.sort();
            let got = canonical_sort(stream(shuffled));
            let got_keys: Vec<_> = got.events.iter().map(|e| (e.t.to_bits(), e.y, e.x, e.p)).collect();
            prop_assert_eq!(got_keys, oracle);
            prop_assert_eq!(&got, &canonical_sort(stream(events)));
        }

        #[test]
        fn sort_is_idempotent_and_valid(events in arb_events()) {
            let once = canonical_sort(stream(events.clone()));
            prop_assert_eq!(&canonical_sort(once.clone()), &once);
            prop_assert_eq!(validate(&once), Ok(()));

            let mut doubled = events.clone();
            doubled.extend(events);
            let d = canonical_sort(stream(doubled));
            prop_assert_eq!(validate(&d), Ok(()));
            prop_assert_eq!(d.len(), 2 * once.len());
        }
    }
}
