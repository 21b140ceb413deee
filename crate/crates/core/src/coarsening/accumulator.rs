use std::sync::Mutex;

use crate::graph::Weight;
use crate::hashcache::{CacheAwareMap, TabularHasher};
use crate::util::mix64;

/// Lock-striped insert-or-add map shared by contraction workers.
///
/// Any interleaving of `add` calls yields the same contents as performing
/// them sequentially, since the merge is commutative.
pub struct ConcurrentAccumulator {
    stripes: Vec<Mutex<CacheAwareMap<Weight>>>,
    stripe_mask: u64,
}

impl ConcurrentAccumulator {
    pub fn new(workers: usize, key_bits: u32, capacity_hint: usize, seed: u64) -> Self {
        let count = (4 * workers.max(1)).next_power_of_two();
        let per_stripe = capacity_hint / count;
        let hasher = TabularHasher::for_key_bits(key_bits, seed);
        ConcurrentAccumulator {
            stripes: (0..count)
                .map(|_| Mutex::new(CacheAwareMap::with_capacity(hasher.clone(), per_stripe)))
                .collect(),
            stripe_mask: count as u64 - 1,
        }
    }

    #[inline]
    fn stripe_of(&self, key: u64) -> usize {
        (mix64(key) & self.stripe_mask) as usize
    }

    pub fn add(&self, key: u64, weight: Weight) {
        self.stripes[self.stripe_of(key)]
            .lock()
            .unwrap()
            .upsert(key, weight, |a, b| a + b);
    }

    /// Merges a batch, taking each stripe lock once.
    pub fn add_batch(&self, entries: impl IntoIterator<Item = (u64, Weight)>) {
        let mut by_stripe: Vec<Vec<(u64, Weight)>> = vec![Vec::new(); self.stripes.len()];
        for (key, w) in entries {
            by_stripe[self.stripe_of(key)].push((key, w));
        }
        for (s, batch) in by_stripe.into_iter().enumerate() {
            if batch.is_empty() {
                continue;
            }
            let mut map = self.stripes[s].lock().unwrap();
            for (key, w) in batch {
                map.upsert(key, w, |a, b| a + b);
            }
        }
    }

    pub fn into_entries(self) -> Vec<(u64, Weight)> {
        self.stripes
            .into_iter()
            .flat_map(|m| m.into_inner().unwrap().iter().collect::<Vec<_>>())
            .collect()
    }
}
