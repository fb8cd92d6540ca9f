//! Text encoding, hashing, relevance scoring and memory-capsule assembly.

mod encode;
mod hash;

pub use encode::{cosine, encode, encode_dim, fnv1a, is_stop_token, tokenize, DIM};
pub use hash::{cell_of, condition_hash, normalize_condition, spatial_hash, spatial_hash_sized, zone_label, CELL_SIZE};
mod capsule;

pub use capsule::{
    constraint_key, full_scan_topk, recall_topk, render_entry, render_summary, score, select_memory_block, Candidate,
    CapsuleItem, MemoryCapsule, RecallConfig, RecallContext,
};
