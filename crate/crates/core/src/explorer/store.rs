use fnv::FnvHashMap;
use smallvec::SmallVec;

use super::state::{digest_bytes, SystemState};

/// Arena of canonical state encodings indexed by digest. Digest hits are
/// confirmed by comparing the full encoding.
#[derive(Default)]
pub(crate) struct StateStore {
    bytes: Vec<u8>,
    offsets: Vec<usize>,
    index: FnvHashMap<u64, SmallVec<[u32; 1]>>,
    scratch: Vec<u8>,
}

impl StateStore {
    pub(crate) fn new() -> Self {
        Self { offsets: vec![0], ..Self::default() }
    }

    pub(crate) fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    fn encoding(&self, idx: u32) -> &[u8] {
        let i = idx as usize;
        &self.bytes[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Returns the index of `state` and whether it was newly inserted.
    pub(crate) fn insert(&mut self, state: &SystemState) -> (u32, bool) {
        let mut enc = std::mem::take(&mut self.scratch);
        state.encode_into(&mut enc);
        let digest = digest_bytes(&enc).0;
        if let Some(bucket) = self.index.get(&digest) {
            if let Some(&hit) = bucket.iter().find(|&&i| self.encoding(i) == enc.as_slice()) {
                self.scratch = enc;
                return (hit, false);
            }
        }
        let idx = self.len() as u32;
        self.bytes.extend_from_slice(&enc);
        self.offsets.push(self.bytes.len());
        self.index.entry(digest).or_default().push(idx);
        self.scratch = enc;
        (idx, true)
    }
}
