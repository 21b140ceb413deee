//! Cache-aware open-addressing hash table.
//!
//! Keys are hashed with tabulation hashing where the lowest `low_bits` of the
//! key bypass the tables and are XORed into the result directly. Keys that
//! differ only in those bits therefore land in the same `2^low_bits`-aligned
//! window of the hash space, so runs of consecutive vertex IDs share cache
//! lines the way an array would, while the table stays sized by the number
//! of stored entries.

use rand::Rng;

use crate::util::rng;

pub const DEFAULT_CHUNK_BITS: u32 = 10;
pub const DEFAULT_LOW_BITS: u32 = 5;
pub const DEFAULT_CHUNKS: u32 = 3;

/// Reserved key marking an empty slot.
pub const EMPTY_KEY: u64 = u64::MAX;

const MIN_CAPACITY: usize = 64;

#[derive(Clone, Debug)]
pub struct TabularHasher {
    chunk_bits: u32,
    low_bits: u32,
    tables: Vec<Vec<u32>>,
    seed: u64,
}

impl TabularHasher {
    /// `chunks` counts the pass-through low chunk, so `chunks = 3` uses two
    /// random tables and covers `2 * chunk_bits + low_bits` key bits.
    pub fn new(chunk_bits: u32, low_bits: u32, chunks: u32, seed: u64) -> TabularHasher {
        assert!((1..=16).contains(&chunk_bits), "chunk_bits in 1..=16");
        assert!(low_bits < 32, "low_bits below the 32-bit output width");
        assert!(chunks >= 2, "need at least one table chunk");
        let mut r = rng(seed);
        let tables = (1..chunks)
            .map(|_| (0..1usize << chunk_bits).map(|_| r.random::<u32>()).collect())
            .collect();
        TabularHasher {
            chunk_bits,
            low_bits,
            tables,
            seed,
        }
    }

    /// Default constants, widened with extra table chunks until keys below
    /// `2^key_bits` are covered without truncation.
    pub fn for_key_bits(key_bits: u32, seed: u64) -> TabularHasher {
        let key_bits = key_bits.clamp(1, 64);
        let covered = |chunks: u32| (chunks - 1) * DEFAULT_CHUNK_BITS + DEFAULT_LOW_BITS;
        let mut chunks = DEFAULT_CHUNKS;
        while covered(chunks) < key_bits {
            chunks += 1;
        }
        TabularHasher::new(DEFAULT_CHUNK_BITS, DEFAULT_LOW_BITS, chunks, seed)
    }

    pub fn with_defaults(seed: u64) -> TabularHasher {
        TabularHasher::new(DEFAULT_CHUNK_BITS, DEFAULT_LOW_BITS, DEFAULT_CHUNKS, seed)
    }

    pub fn chunk_bits(&self) -> u32 {
        self.chunk_bits
    }

    pub fn low_bits(&self) -> u32 {
        self.low_bits
    }

    /// Number of chunks including the pass-through one.
    pub fn chunks(&self) -> u32 {
        self.tables.len() as u32 + 1
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of key bits hashed without folding.
    pub fn key_bits(&self) -> u32 {
        self.tables.len() as u32 * self.chunk_bits + self.low_bits
    }

    #[inline]
    pub fn table_entry(&self, table: usize, index: usize) -> u32 {
        self.tables[table][index]
    }

    #[inline]
    pub fn hash(&self, key: u64) -> u32 {
        let low_mask = (1u64 << self.low_bits) - 1;
        let chunk_mask = (1u64 << self.chunk_bits) - 1;
        let mut h = (key & low_mask) as u32;
        let mut rest = key >> self.low_bits;
        for (i, table) in self.tables.iter().enumerate() {
            let last = i + 1 == self.tables.len();
            // the last table also absorbs any bits beyond the covered width
            let idx = if last {
                fold(rest, self.chunk_bits)
            } else {
                rest & chunk_mask
            };
            h ^= table[idx as usize];
            rest >>= self.chunk_bits;
        }
        h
    }
}

#[inline]
fn fold(mut x: u64, bits: u32) -> u64 {
    let mask = (1u64 << bits) - 1;
    let mut acc = 0;
    while x != 0 {
        acc ^= x & mask;
        x >>= bits;
    }
    acc
}

/// Linear-probing map from `u64` keys to `Copy` values.
///
/// Load factor stays at or below one half. There is no per-key deletion; a
/// journal of occupied slots makes [`CacheAwareMap::clear`] cost
/// proportional to the number of stored entries.
#[derive(Clone, Debug)]
pub struct CacheAwareMap<V: Copy> {
    keys: Vec<u64>,
    values: Vec<V>,
    occupied: Vec<usize>,
    hasher: TabularHasher,
    mask: usize,
}

impl<V: Copy + Default> CacheAwareMap<V> {
    pub fn new(hasher: TabularHasher) -> Self {
        Self::with_capacity(hasher, 0)
    }

    /// Capacity is rounded up so that `expected` entries fit at load 0.5.
    pub fn with_capacity(hasher: TabularHasher, expected: usize) -> Self {
        let cap = (expected.saturating_mul(2)).max(MIN_CAPACITY).next_power_of_two();
        CacheAwareMap {
            keys: vec![EMPTY_KEY; cap],
            values: vec![V::default(); cap],
            occupied: Vec::new(),
            hasher,
            mask: cap - 1,
        }
    }

    /// Map sized for keys below `max_key` with the default hash constants.
    pub fn for_keys_below(max_key: u64, expected: usize, seed: u64) -> Self {
        let bits = 64 - max_key.leading_zeros();
        Self::with_capacity(TabularHasher::for_key_bits(bits, seed), expected)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.keys.len()
    }

    pub fn hasher(&self) -> &TabularHasher {
        &self.hasher
    }

    #[inline]
    fn slot_of(&self, key: u64) -> usize {
        self.hasher.hash(key) as usize & self.mask
    }

    #[inline]
    fn find_slot(&self, key: u64) -> (usize, bool) {
        let mut i = self.slot_of(key);
        loop {
            let k = self.keys[i];
            if k == key {
                return (i, true);
            }
            if k == EMPTY_KEY {
                return (i, false);
            }
            i = (i + 1) & self.mask;
        }
    }

    #[inline]
    pub fn get(&self, key: u64) -> Option<V> {
        let (i, found) = self.find_slot(key);
        found.then(|| self.values[i])
    }

    #[inline]
    pub fn contains_key(&self, key: u64) -> bool {
        self.find_slot(key).1
    }

    /// Stores `value`, replacing any previous value.
    #[inline]
    pub fn insert(&mut self, key: u64, value: V) {
        self.upsert(key, value, |_, new| new);
    }

    /// Stores `value` if `key` is absent, else `combine(old, value)`.
    #[inline]
    pub fn upsert(&mut self, key: u64, value: V, combine: impl FnOnce(V, V) -> V) {
        assert_ne!(key, EMPTY_KEY, "the all-ones key is reserved");
        let (i, found) = self.find_slot(key);
        if found {
            self.values[i] = combine(self.values[i], value);
            return;
        }
        self.keys[i] = key;
        self.values[i] = value;
        self.occupied.push(i);
        if self.occupied.len() * 2 > self.keys.len() {
            self.grow();
        }
    }

    fn grow(&mut self) {
        let cap = self
            .keys
            .len()
            .checked_mul(2)
            .expect("hash table capacity overflow");
        let old_keys = std::mem::replace(&mut self.keys, vec![EMPTY_KEY; cap]);
        let old_values = std::mem::replace(&mut self.values, vec![V::default(); cap]);
        let old_occupied = std::mem::take(&mut self.occupied);
        self.mask = cap - 1;
        for i in old_occupied {
            let (slot, _) = self.find_slot(old_keys[i]);
            self.keys[slot] = old_keys[i];
            self.values[slot] = old_values[i];
            self.occupied.push(slot);
        }
    }

    pub fn clear(&mut self) {
        for &i in &self.occupied {
            self.keys[i] = EMPTY_KEY;
        }
        self.occupied.clear();
    }

    /// Entries in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, V)> + '_ {
        self.occupied.iter().map(|&i| (self.keys[i], self.values[i]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::rng;
    use std::collections::HashMap;

    #[test]
    fn zero_key_hashes_to_table_xor() {
        let h = TabularHasher::with_defaults(11);
        assert_eq!(h.hash(0), h.table_entry(0, 0) ^ h.table_entry(1, 0));
    }

    #[test]
    fn low_bits_pass_through() {
        let h = TabularHasher::with_defaults(3);
        assert_eq!(h.hash(64) ^ h.hash(65), 1);
        assert_eq!(h.hash(64) >> 5, h.hash(65) >> 5);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = TabularHasher::with_defaults(5);
        let b = TabularHasher::with_defaults(5);
        let c = TabularHasher::with_defaults(6);
        assert!((0..1000u64).all(|x| a.hash(x) == b.hash(x)));
        assert!((0..1000u64).any(|x| a.hash(x) != c.hash(x)));
    }

    #[test]
    fn widens_for_large_keys() {
        assert_eq!(TabularHasher::for_key_bits(20, 0).chunks(), 3);
        assert_eq!(TabularHasher::for_key_bits(25, 0).chunks(), 3);
        assert_eq!(TabularHasher::for_key_bits(26, 0).chunks(), 4);
        let h = TabularHasher::for_key_bits(64, 0);
        assert!(h.key_bits() >= 64);
        // keys differing above bit 25 must not collide systematically
        let hits = (0..256u64).filter(|&i| h.hash(i << 30) == h.hash(0)).count();
        assert_eq!(hits, 1);
    }

    #[test]
    fn upsert_merges() {
        let mut m = CacheAwareMap::<i64>::for_keys_below(1 << 20, 0, 1);
        assert_eq!(m.get(5), None);
        m.upsert(5, 3, |a, b| a + b);
        m.upsert(5, 4, |a, b| a + b);
        assert_eq!(m.get(5), Some(7));
        m.insert(9, 1);
        assert_eq!(m.get(9), Some(1));
        m.clear();
        assert_eq!(m.get(5), None);
        assert!(m.is_empty());
    }

    #[test]
    fn thousand_keys_survive_growth() {
        let mut m = CacheAwareMap::<u32>::for_keys_below(1 << 20, 0, 9);
        for x in 0..1000u64 {
            m.insert(x * 7919 % 1_000_003, x as u32);
        }
        assert_eq!(m.len(), 1000);
        assert!(m.len() * 2 <= m.capacity());
        for x in 0..1000u64 {
            assert_eq!(m.get(x * 7919 % 1_000_003), Some(x as u32));
        }
    }

    #[test]
    fn matches_reference_map() {
        let mut r = rng(42);
        let mut m = CacheAwareMap::<u64>::for_keys_below(1 << 40, 0, 2);
        let mut reference = HashMap::new();
        for _ in 0..100_000 {
            let key = if r.random_bool(0.5) {
                r.random_range(0..5000u64)
            } else {
                r.random_range(0..(1u64 << 40))
            };
            match r.random_range(0..100) {
                0 => {
                    m.clear();
                    reference.clear();
                }
                1..=55 => {
                    let v = r.random_range(0..100u64);
                    m.upsert(key, v, |a, b| a.wrapping_add(b));
                    *reference.entry(key).or_insert(0u64) += v;
                }
                _ => assert_eq!(m.get(key), reference.get(&key).copied()),
            }
        }
        assert_eq!(m.len(), reference.len());
    }
}
