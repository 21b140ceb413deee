use std::collections::BTreeMap;

use crate::graph::{NodeId, Weight};

const ABSENT: u32 = u32::MAX;

/// Max-priority bucket queue over vertex IDs with arbitrary integer gains.
///
/// Buckets live in an ordered map so sparse, wide gain ranges (coarse edge
/// weights) cost nothing extra. Within a bucket the most recently inserted
/// vertex is served first.
#[derive(Clone, Debug)]
pub struct BucketQueue {
    buckets: BTreeMap<Weight, Vec<NodeId>>,
    key: Vec<Weight>,
    pos: Vec<u32>,
    len: usize,
}

impl BucketQueue {
    pub fn new(n: usize) -> Self {
        BucketQueue {
            buckets: BTreeMap::new(),
            key: vec![0; n],
            pos: vec![ABSENT; n],
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.pos[v as usize] != ABSENT
    }

    pub fn key(&self, v: NodeId) -> Option<Weight> {
        self.contains(v).then(|| self.key[v as usize])
    }

    pub fn insert(&mut self, v: NodeId, gain: Weight) {
        debug_assert!(!self.contains(v));
        let bucket = self.buckets.entry(gain).or_default();
        self.pos[v as usize] = bucket.len() as u32;
        self.key[v as usize] = gain;
        bucket.push(v);
        self.len += 1;
    }

    pub fn remove(&mut self, v: NodeId) {
        let p = self.pos[v as usize];
        if p == ABSENT {
            return;
        }
        let gain = self.key[v as usize];
        let bucket = self.buckets.get_mut(&gain).expect("bucket exists");
        bucket.swap_remove(p as usize);
        if let Some(&moved) = bucket.get(p as usize) {
            self.pos[moved as usize] = p;
        }
        if bucket.is_empty() {
            self.buckets.remove(&gain);
        }
        self.pos[v as usize] = ABSENT;
        self.len -= 1;
    }

    pub fn update(&mut self, v: NodeId, gain: Weight) {
        if self.key(v) == Some(gain) {
            return;
        }
        self.remove(v);
        self.insert(v, gain);
    }

    pub fn peek_max(&self) -> Option<(NodeId, Weight)> {
        self.buckets
            .iter()
            .next_back()
            .map(|(&g, b)| (*b.last().unwrap(), g))
    }

    pub fn clear(&mut self) {
        for b in self.buckets.values() {
            for &v in b {
                self.pos[v as usize] = ABSENT;
            }
        }
        self.buckets.clear();
        self.len = 0;
    }
}
