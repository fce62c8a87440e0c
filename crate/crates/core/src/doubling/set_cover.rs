//! Minimum set cover over a universe of at most 64 elements.
//!
//! Sets are `u64` bitmasks. [`greedy_cover`] gives the classic ln(n)-approximate
//! incumbent; [`exact_cover`] runs branch-and-bound seeded with it.

pub const MAX_UNIVERSE: usize = 64;

fn full_mask(universe: usize) -> u64 {
    if universe == 64 {
        u64::MAX
    } else {
        (1u64 << universe) - 1
    }
}

/// Drops empty and duplicate sets, and any set contained in another.
fn prune_dominated(sets: &[u64]) -> Vec<u64> {
    let mut sorted: Vec<u64> = sets.iter().copied().filter(|&s| s != 0).collect();
    sorted.sort_unstable_by_key(|s| std::cmp::Reverse(s.count_ones()));
    sorted.dedup();
    let mut kept: Vec<u64> = Vec::with_capacity(sorted.len());
    for s in sorted {
        if !kept.iter().any(|&k| s & !k == 0) {
            kept.push(s);
        }
    }
    kept
}

/// Size of a greedy cover, or `None` if the sets do not cover the universe.
pub fn greedy_cover(universe: usize, sets: &[u64]) -> Option<usize> {
    assert!(universe <= MAX_UNIVERSE);
    let mut uncovered = full_mask(universe);
    let mut used = 0;
    while uncovered != 0 {
        let best = sets
            .iter()
            .copied()
            .max_by_key(|&s| (s & uncovered).count_ones())?;
        if best & uncovered == 0 {
            return None;
        }
        uncovered &= !best;
        used += 1;
    }
    Some(used)
}

struct Search<'a> {
    sets: &'a [u64],
    largest: u32,
    best: usize,
}

impl Search<'_> {
    fn run(&mut self, uncovered: u64, used: usize) {
        if uncovered == 0 {
            self.best = self.best.min(used);
            return;
        }
        let remaining = uncovered.count_ones();
        let lower = used + remaining.div_ceil(self.largest) as usize;
        if lower >= self.best {
            return;
        }
        // Branch on the uncovered element with the fewest covering sets.
        let mut pivot_bit = 0u64;
        let mut pivot_count = usize::MAX;
        let mut rest = uncovered;
        while rest != 0 {
            let bit = rest & rest.wrapping_neg();
            rest &= rest - 1;
            let count = self.sets.iter().filter(|&&s| s & bit != 0).count();
            if count < pivot_count {
                pivot_count = count;
                pivot_bit = bit;
                if count <= 1 {
                    break;
                }
            }
        }
        let mut candidates: Vec<u64> = self
            .sets
            .iter()
            .copied()
            .filter(|&s| s & pivot_bit != 0)
            .collect();
        candidates.sort_unstable_by_key(|&s| std::cmp::Reverse((s & uncovered).count_ones()));
        for s in candidates {
            self.run(uncovered & !s, used + 1);
        }
    }
}

/// Minimum number of sets covering `0..universe`, or `None` if no cover exists.
pub fn exact_cover(universe: usize, sets: &[u64]) -> Option<usize> {
    assert!(universe <= MAX_UNIVERSE);
    let full = full_mask(universe);
    let sets: Vec<u64> = sets.iter().map(|&s| s & full).collect();
    let sets = prune_dominated(&sets);
    let incumbent = greedy_cover(universe, &sets)?;
    let largest = sets.iter().map(|s| s.count_ones()).max().unwrap_or(1).max(1);
    let mut search = Search {
        sets: &sets,
        largest,
        best: incumbent,
    };
    search.run(full, 0);
    Some(search.best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Tries every subset of sets.
    fn brute_force(universe: usize, sets: &[u64]) -> Option<usize> {
        let full = full_mask(universe);
        let n = sets.len();
        let mut best: Option<usize> = None;
        for choice in 0u32..(1 << n) {
            let cover = (0..n)
                .filter(|i| choice >> i & 1 == 1)
                .fold(0u64, |acc, i| acc | sets[i]);
            if cover & full == full {
                let size = choice.count_ones() as usize;
                best = Some(best.map_or(size, |b| b.min(size)));
            }
        }
        best
    }

    #[test]
    fn singletons_need_every_set() {
        let sets: Vec<u64> = (0..5).map(|i| 1 << i).collect();
        assert_eq!(exact_cover(5, &sets), Some(5));
        assert_eq!(greedy_cover(5, &sets), Some(5));
    }

    #[test]
    fn greedy_can_be_suboptimal() {
        // The four-element middle set lures greedy into a three-set cover.
        let sets = [0b000111, 0b111000, 0b011011];
        assert_eq!(greedy_cover(6, &sets), Some(3));
        assert_eq!(exact_cover(6, &sets), Some(2));
    }

    #[test]
    fn uncoverable_universe() {
        assert_eq!(exact_cover(3, &[0b011]), None);
        assert_eq!(greedy_cover(3, &[0b011]), None);
    }

    proptest! {
        #[test]
        fn matches_brute_force(universe in 1usize..9, raw in proptest::collection::vec(any::<u64>(), 1..10)) {
            let full = full_mask(universe);
            let sets: Vec<u64> = raw.iter().map(|s| s & full).collect();
            let exact = exact_cover(universe, &sets);
            prop_assert_eq!(exact, brute_force(universe, &sets));
            if let (Some(e), Some(g)) = (exact, greedy_cover(universe, &sets)) {
                prop_assert!(g >= e);
            }
        }
    }
}
