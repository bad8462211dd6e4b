use std::sync::atomic::{AtomicU64, Ordering};

/// Comparison tolerance used for every membership and feasibility verdict.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

static TOLERANCE_BITS: AtomicU64 = AtomicU64::new(0x3E11_2E0B_E826_D695); // 1e-9

/// Current process-wide tolerance τ.
pub fn tolerance() -> f64 {
    f64::from_bits(TOLERANCE_BITS.load(Ordering::Relaxed))
}

/// Overrides τ for the whole process. Intended for binaries, which set it once
/// at startup; libraries should leave it alone.
///
/// Non-finite or non-positive values are ignored.
pub fn set_tolerance(tau: f64) {
    if tau.is_finite() && tau > 0.0 {
        TOLERANCE_BITS.store(tau.to_bits(), Ordering::Relaxed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_bits_encode_default_tolerance() {
        assert_eq!(f64::from_bits(0x3E11_2E0B_E826_D695), DEFAULT_TOLERANCE);
    }
}
