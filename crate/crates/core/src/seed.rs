//! One root seed, many independent streams.
//!
//! Every random choice in the pipeline (embedding initialisation, negative
//! samples, parameter initialisation, dropout, shuffling, data splits) draws
//! from a stream derived from the root seed and a stable path name, so adding
//! a consumer never perturbs the others.
//!
//! ```
//! use irloc::seed::SeedTree;
//! use rand::Rng;
//!
//! let tree = SeedTree::new(7);
//! let a: u64 = tree.rng("train/shuffle").gen();
//! assert_eq!(a, SeedTree::new(7).rng("train/shuffle").gen::<u64>());
//! assert_ne!(tree.derive("train/shuffle"), tree.derive("train/dropout"));
//! assert_eq!(tree.child("train").derive("shuffle"), tree.derive("train/shuffle"));
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedTree {
    root: u64,
    prefix: String,
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        SeedTree { root, prefix: String::new() }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// The subtree under `name`; `child("a").derive("b") == derive("a/b")`.
    pub fn child(&self, name: &str) -> SeedTree {
        SeedTree { root: self.root, prefix: self.path(name) }
    }

    fn path(&self, name: &str) -> String {
        if self.prefix.is_empty() {
            name.to_string()
        } else {
            format!("{}/{name}", self.prefix)
        }
    }

    /// The seed of stream `name`: the first eight bytes of
    /// SHA-256(root, little-endian ‖ path).
    pub fn derive(&self, name: &str) -> u64 {
        let mut h = Sha256::new();
        h.update(self.root.to_le_bytes());
        h.update(self.path(name).as_bytes());
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
    }

    pub fn rng(&self, name: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.derive(name))
    }
}
