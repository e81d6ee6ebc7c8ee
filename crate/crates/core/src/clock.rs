//! Time source. Mock-mode runs use [`ManualClock`] so persisted timestamps
//! and measured durations are reproducible.

use std::sync::atomic::{AtomicU64, Ordering};

use chrono::{DateTime, SecondsFormat, Utc};

pub trait Clock: Send + Sync + std::fmt::Debug {
    /// Milliseconds since the Unix epoch.
    fn now_ms(&self) -> u64;

    /// Accounts for simulated work. A no-op for wall clocks.
    fn advance(&self, _ms: u64) {}

    fn timestamp(&self) -> String {
        format_ms(self.now_ms())
    }
}

pub fn format_ms(ms: u64) -> String {
    DateTime::<Utc>::from_timestamp_millis(ms as i64)
        .unwrap_or_default()
        .to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        Utc::now().timestamp_millis().max(0) as u64
    }
}

/// Virtual time: starts at a fixed instant, moves only by `advance` and by a
/// fixed tick on every read (so successive timestamps are distinct).
#[derive(Debug)]
pub struct ManualClock {
    now: AtomicU64,
    tick_ms: u64,
}

/// 2025-01-01T00:00:00Z
pub const MANUAL_EPOCH_MS: u64 = 1_735_689_600_000;

impl Default for ManualClock {
    fn default() -> Self {
        Self::new(MANUAL_EPOCH_MS, 1)
    }
}

impl ManualClock {
    pub fn new(start_ms: u64, tick_ms: u64) -> Self {
        Self { now: AtomicU64::new(start_ms), tick_ms }
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.now.fetch_add(self.tick_ms, Ordering::SeqCst)
    }

    fn advance(&self, ms: u64) {
        self.now.fetch_add(ms, Ordering::SeqCst);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manual_clock_is_reproducible() {
        let a = ManualClock::default();
        let b = ManualClock::default();
        assert_eq!(a.timestamp(), "2025-01-01T00:00:00.000Z");
        a.advance(1500);
        b.timestamp();
        b.advance(1500);
        assert_eq!(a.now_ms(), b.now_ms());
        assert_eq!(a.now_ms(), MANUAL_EPOCH_MS + 1 + 1500 + 1);
    }
}
