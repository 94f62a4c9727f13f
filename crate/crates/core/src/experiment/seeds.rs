use sha2::{Digest, Sha256};

/// Seed for one replication of one dataset instance, a pure function of its
/// arguments so replications can run in any order.
pub fn child_seed(master: u64, key: &str, replication: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(b"cevib/child-seed");
    h.update(master.to_le_bytes());
    h.update((key.len() as u64).to_le_bytes());
    h.update(key.as_bytes());
    h.update((replication as u64).to_le_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Fresh seed for a second attempt after a diverged run.
pub fn retry_seed(seed: u64) -> u64 {
    child_seed(seed, "retry", 1)
}

/// Lowercase hex SHA-256 prefix of `bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes)[..8].iter().map(|b| format!("{b:02x}")).collect()
}
