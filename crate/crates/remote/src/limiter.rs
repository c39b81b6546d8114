//! Counting semaphore bounding the number of in-flight HTTP requests.

use std::sync::{Arc, Condvar, Mutex};

pub const DEFAULT_MAX_CONCURRENCY: usize = 4;

#[derive(Debug)]
struct State {
    in_flight: usize,
    peak: usize,
}

/// Shared by every client built from one configuration, so concurrent
/// searches together never exceed the limit.
#[derive(Debug, Clone)]
pub struct ConcurrencyLimiter {
    inner: Arc<(Mutex<State>, Condvar)>,
    limit: usize,
}

pub struct Permit {
    limiter: ConcurrencyLimiter,
}

impl ConcurrencyLimiter {
    pub fn new(limit: usize) -> Self {
        Self {
            inner: Arc::new((Mutex::new(State { in_flight: 0, peak: 0 }), Condvar::new())),
            limit: limit.max(1),
        }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    /// Block until a slot is free.
    pub fn acquire(&self) -> Permit {
        let (lock, cvar) = &*self.inner;
        let mut state = lock.lock().unwrap_or_else(|e| e.into_inner());
        while state.in_flight >= self.limit {
            state = cvar.wait(state).unwrap_or_else(|e| e.into_inner());
        }
        state.in_flight += 1;
        state.peak = state.peak.max(state.in_flight);
        Permit {
            limiter: self.clone(),
        }
    }

    /// Highest number of simultaneously held permits so far.
    pub fn peak(&self) -> usize {
        self.inner.0.lock().unwrap_or_else(|e| e.into_inner()).peak
    }
}

impl Default for ConcurrencyLimiter {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_CONCURRENCY)
    }
}

impl Drop for Permit {
    fn drop(&mut self) {
        let (lock, cvar) = &*self.limiter.inner;
        lock.lock().unwrap_or_else(|e| e.into_inner()).in_flight -= 1;
        cvar.notify_one();
    }
}
