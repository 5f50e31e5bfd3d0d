use rand::Rng;

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Transition<T> {
    pub s: Vec<T>,
    pub a: usize,
    pub r: T,
    pub s_next: Vec<T>,
    pub terminal: bool,
}

/// FIFO ring buffer with uniform sampling (with replacement).
#[derive(Clone, Debug)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    storage: Vec<Transition<T>>,
    head: usize,
}

impl<T: Scalar> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            storage: Vec::new(),
            head: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn push(&mut self, t: Transition<T>) {
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    pub fn sample<'a, R: Rng + ?Sized>(&'a self, rng: &mut R, n: usize, out: &mut Vec<&'a Transition<T>>) {
        if self.storage.is_empty() {
            return;
        }
        for _ in 0..n {
            out.push(&self.storage[rng.gen_range(0..self.storage.len())]);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition<T>> {
        self.storage.iter()
    }
}

/// Two buffers: ordinary experience and episodes that ended in a crash the
/// learner should over-sample. Every transition goes to exactly one of them.
#[derive(Clone, Debug)]
pub struct DualReplay<T> {
    pub normal: ReplayBuffer<T>,
    pub at_fault_crash: ReplayBuffer<T>,
    pub mix_fraction: f64,
}

/// Failure codes 2..=7 mark crashes the AV is responsible for.
pub fn is_priority_code(failure_code: Option<u8>) -> bool {
    matches!(failure_code, Some(2..=7))
}

impl<T: Scalar> DualReplay<T> {
    pub fn new(normal_capacity: usize, crash_capacity: usize, mix_fraction: f64) -> Self {
        assert!((0.0..=1.0).contains(&mix_fraction), "mix_fraction must be in [0,1]");
        Self {
            normal: ReplayBuffer::new(normal_capacity),
            at_fault_crash: ReplayBuffer::new(crash_capacity),
            mix_fraction,
        }
    }

    /// Routes a whole episode by its final failure code.
    pub fn push_episode(&mut self, transitions: Vec<Transition<T>>, failure_code: Option<u8>) {
        let buf = if is_priority_code(failure_code) {
            &mut self.at_fault_crash
        } else {
            &mut self.normal
        };
        for t in transitions {
            buf.push(t);
        }
    }

    /// Number of batch slots drawn from the crash buffer.
    pub fn crash_share(&self, batch: usize) -> usize {
        if self.at_fault_crash.is_empty() {
            0
        } else {
            ((self.mix_fraction * batch as f64).round() as usize).min(batch)
        }
    }

    pub fn sample_batch<'a, R: Rng + ?Sized>(&'a self, rng: &mut R, batch: usize) -> Vec<&'a Transition<T>> {
        let k = self.crash_share(batch);
        let mut out = Vec::with_capacity(batch);
        self.at_fault_crash.sample(rng, k, &mut out);
        self.normal.sample(rng, batch - k, &mut out);
        out
    }
}
