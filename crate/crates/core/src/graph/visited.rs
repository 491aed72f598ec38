use std::cell::RefCell;

/// Epoch-stamped visited marks; clearing is O(1) except on epoch wrap.
#[derive(Clone, Debug, Default)]
pub struct VisitedSet {
    marks: Vec<u32>,
    epoch: u32,
}

impl VisitedSet {
    pub fn new(n: usize) -> Self {
        let mut v = Self::default();
        v.reset(n);
        v
    }

    /// Clears all marks and makes room for `n` nodes.
    pub fn reset(&mut self, n: usize) {
        if self.marks.len() < n {
            self.marks.resize(n, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.marks.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
    }

    /// Marks `i`; returns false if it was already marked.
    #[inline]
    pub fn insert(&mut self, i: u32) -> bool {
        let slot = &mut self.marks[i as usize];
        if *slot == self.epoch {
            false
        } else {
            *slot = self.epoch;
            true
        }
    }

    #[inline]
    pub fn contains(&self, i: u32) -> bool {
        self.marks[i as usize] == self.epoch
    }
}

thread_local! {
    static POOL: RefCell<Vec<VisitedSet>> = const { RefCell::new(Vec::new()) };
}

/// Runs `f` with a cleared thread-local visited set sized for `n` nodes.
/// Re-entrant: nested calls take distinct sets.
pub fn with_visited<T>(n: usize, f: impl FnOnce(&mut VisitedSet) -> T) -> T {
    let mut set = POOL.with(|p| p.borrow_mut().pop()).unwrap_or_default();
    set.reset(n);
    let out = f(&mut set);
    POOL.with(|p| p.borrow_mut().push(set));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_clears_marks() {
        let mut v = VisitedSet::new(4);
        assert!(v.insert(2));
        assert!(!v.insert(2));
        v.reset(4);
        assert!(!v.contains(2));
        assert!(v.insert(2));
    }

    #[test]
    fn nested_sets_are_independent() {
        with_visited(3, |a| {
            a.insert(1);
            with_visited(3, |b| assert!(!b.contains(1)));
            assert!(a.contains(1));
        });
    }
}
