//! Evenly-spaced request rate limiting shared by all outbound clients.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

/// Serializes callers so that consecutive grants are at least
/// `1 / requests_per_second` apart. Callers queue on an internal mutex that
/// is held across the wait, so the grant times themselves carry the spacing
/// guarantee: no one-second window ever contains more than the budgeted
/// number of grants, regardless of thread scheduling jitter.
#[derive(Debug)]
pub struct RateLimiter {
    min_interval: Duration,
    last_grant: Mutex<Option<Instant>>,
}

impl RateLimiter {
    /// `requests_per_second` must be positive.
    pub fn new(requests_per_second: f64) -> Self {
        assert!(
            requests_per_second > 0.0,
            "requests_per_second must be positive"
        );
        RateLimiter {
            min_interval: Duration::from_secs_f64(1.0 / requests_per_second),
            last_grant: Mutex::new(None),
        }
    }

    /// Block until a request slot is available and return the grant time.
    pub fn acquire(&self) -> Instant {
        let mut last = self.last_grant.lock().expect("rate limiter poisoned");
        let now = Instant::now();
        let target = match *last {
            Some(prev) => (prev + self.min_interval).max(now),
            None => now,
        };
        if target > now {
            std::thread::sleep(target - now);
        }
        let granted = Instant::now().max(target);
        *last = Some(granted);
        granted
    }

    /// Process-wide limiter for a given budget: clients configured with the
    /// same rate share one limiter, so concurrent workers cannot multiply
    /// the outbound request rate.
    pub fn shared(requests_per_second: f64) -> Arc<RateLimiter> {
        static SHARED: OnceLock<Mutex<BTreeMap<u64, Arc<RateLimiter>>>> = OnceLock::new();
        let key = (requests_per_second * 1000.0).round() as u64;
        let map = SHARED.get_or_init(|| Mutex::new(BTreeMap::new()));
        let mut map = map.lock().expect("rate limiter registry poisoned");
        map.entry(key)
            .or_insert_with(|| Arc::new(RateLimiter::new(requests_per_second)))
            .clone()
    }
}
