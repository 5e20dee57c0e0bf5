use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::pbft::SimTime;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event<K> {
    pub fire_time: SimTime,
    /// Scheduling order, breaks ties between simultaneous events.
    pub sequence: u64,
    pub kind: K,
}

struct Entry<K>(Event<K>);

impl<K> PartialEq for Entry<K> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<K> Eq for Entry<K> {}

impl<K> Entry<K> {
    fn key(&self) -> (SimTime, u64) {
        (self.0.fire_time, self.0.sequence)
    }
}

impl<K> PartialOrd for Entry<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K> Ord for Entry<K> {
    // Reversed: BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key().cmp(&self.key())
    }
}

/// Pending events, popped in `(fire_time, sequence)` order.
pub struct EventQueue<K> {
    heap: BinaryHeap<Entry<K>>,
    next_sequence: u64,
    now: SimTime,
}

impl<K> Default for EventQueue<K> {
    fn default() -> Self {
        EventQueue { heap: BinaryHeap::new(), next_sequence: 0, now: 0 }
    }
}

impl<K> EventQueue<K> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Time of the most recently popped event.
    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, at: SimTime, kind: K) -> Result<()> {
        if at < self.now {
            return Err(Error::SchedulingInPast { at, now: self.now });
        }
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.heap.push(Entry(Event { fire_time: at, sequence, kind }));
        Ok(())
    }

    /// `None` once the queue is drained, which ends a run.
    pub fn pop(&mut self) -> Option<Event<K>> {
        let Entry(event) = self.heap.pop()?;
        self.now = event.fire_time;
        Some(event)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn earlier_time_first() {
        let mut q = EventQueue::new();
        q.schedule(5, "late").unwrap();
        q.schedule(3, "early").unwrap();
        assert_eq!(q.pop().unwrap().kind, "early");
        assert_eq!(q.pop().unwrap().kind, "late");
    }

    #[test]
    fn ties_pop_in_scheduling_order() {
        let mut q = EventQueue::new();
        q.schedule(3, 'a').unwrap();
        q.schedule(3, 'b').unwrap();
        assert_eq!(q.pop().unwrap().kind, 'a');
        assert_eq!(q.pop().unwrap().kind, 'b');
    }

    #[test]
    fn empty_queue_ends_the_run() {
        let mut q: EventQueue<()> = EventQueue::new();
        assert!(q.pop().is_none());
    }

    #[test]
    fn rejects_the_past() {
        let mut q = EventQueue::new();
        q.schedule(10, ()).unwrap();
        q.pop();
        assert!(matches!(q.schedule(9, ()), Err(Error::SchedulingInPast { at: 9, now: 10 })));
        assert!(q.schedule(10, ()).is_ok());
    }

    proptest! {
        #[test]
        fn pops_are_lexicographically_sorted(times in proptest::collection::vec(0u64..50, 0..200)) {
            let mut q = EventQueue::new();
            for (i, &t) in times.iter().enumerate() {
                q.schedule(t, i).unwrap();
            }
            let mut last = None;
            let mut count = 0;
            while let Some(e) = q.pop() {
                let key = (e.fire_time, e.sequence);
                prop_assert!(last.is_none_or(|l| l < key));
                prop_assert_eq!(times[e.kind], e.fire_time);
                last = Some(key);
                count += 1;
            }
            prop_assert_eq!(count, times.len());
        }
    }
}
