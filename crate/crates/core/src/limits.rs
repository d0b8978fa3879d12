use core::sync::atomic::{AtomicUsize, Ordering};

/// Largest qubit count handled by dense 2ⁿ×2ⁿ routes unless overridden.
pub const DEFAULT_DENSE_LIMIT: usize = 12;

static DENSE_LIMIT: AtomicUsize = AtomicUsize::new(DEFAULT_DENSE_LIMIT);

/// Current cap on the qubit count for dense matrix routes.
pub fn dense_limit() -> usize {
    DENSE_LIMIT.load(Ordering::Relaxed)
}

/// Override the dense cap process-wide. Values above 30 are clamped.
pub fn set_dense_limit(n: usize) {
    DENSE_LIMIT.store(n.min(30), Ordering::Relaxed);
}

pub(crate) fn check_dense(n: usize) -> crate::Result<()> {
    let limit = dense_limit();
    if n > limit {
        Err(crate::Error::DenseLimit { n, limit })
    } else {
        Ok(())
    }
}
