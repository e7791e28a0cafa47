//! Growable binary indexed tree over per-node degree masses.

#[derive(Debug, Clone)]
pub struct DegreeIndex {
    // 1-based; tree[0] unused.
    tree: Vec<u64>,
    values: Vec<u64>,
    total: u64,
}

#[inline]
fn lsb(i: usize) -> usize {
    i & i.wrapping_neg()
}

impl Default for DegreeIndex {
    fn default() -> Self {
        Self::new()
    }
}

impl DegreeIndex {
    pub fn new() -> Self {
        Self {
            tree: vec![0],
            values: Vec::new(),
            total: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, index: usize) -> u64 {
        self.values[index]
    }

    /// Append a new slot holding `value`.
    pub fn push(&mut self, value: u64) {
        let i = self.values.len() + 1;
        // tree[i] covers (i - lsb(i), i]; the slots before i are already in place.
        let covered = self.prefix(i - 1) - self.prefix(i - lsb(i));
        self.tree.push(value + covered);
        self.values.push(value);
        self.total += value;
    }

    pub fn add(&mut self, index: usize, delta: u64) {
        self.values[index] += delta;
        self.total += delta;
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += lsb(i);
        }
    }

    /// Sum of the first `count` slots.
    pub fn prefix(&self, count: usize) -> u64 {
        let mut sum = 0;
        let mut i = count;
        while i > 0 {
            sum += self.tree[i];
            i -= lsb(i);
        }
        sum
    }

    /// Index of the slot whose cumulative interval contains `target`,
    /// i.e. the smallest `k` with `prefix(k + 1) > target`.
    pub fn find(&self, mut target: u64) -> Option<usize> {
        if target >= self.total {
            return None;
        }
        let n = self.values.len();
        let mut pos = 0;
        let mut step = if n == 0 { 0 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                target -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        Some(pos)
    }
}
