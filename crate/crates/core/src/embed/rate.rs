use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

/// Time source for rate limiting and backoff, so both can run on a simulated clock.
pub trait Clock: Send + Sync {
    /// Time elapsed since an arbitrary fixed origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Simulated clock; `sleep` advances time instantly and is recorded.
#[derive(Debug, Default)]
pub struct ManualClock {
    now: Mutex<Duration>,
    sleeps: Mutex<Vec<Duration>>,
}

impl ManualClock {
    pub fn advance(&self, d: Duration) {
        *self.now.lock().expect("poisoned") += d;
    }

    pub fn sleeps(&self) -> Vec<Duration> {
        self.sleeps.lock().expect("poisoned").clone()
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        *self.now.lock().expect("poisoned")
    }

    fn sleep(&self, d: Duration) {
        self.sleeps.lock().expect("poisoned").push(d);
        self.advance(d);
    }
}

/// Sliding-window limiter: at most `max_requests` dispatches in any window of
/// length `window`. A dispatch at `t` stops counting at `t + window`.
pub struct RateLimiter {
    max_requests: usize,
    window: Duration,
    clock: Arc<dyn Clock>,
    sent: Mutex<VecDeque<Duration>>,
}

impl RateLimiter {
    pub fn per_minute(max_requests: usize, clock: Arc<dyn Clock>) -> Self {
        Self::new(max_requests, Duration::from_secs(60), clock)
    }

    pub fn new(max_requests: usize, window: Duration, clock: Arc<dyn Clock>) -> Self {
        assert!(max_requests > 0, "rate budget must be positive");
        RateLimiter {
            max_requests,
            window,
            clock,
            sent: Mutex::new(VecDeque::new()),
        }
    }

    /// Blocks until a dispatch is allowed, records it and returns its time.
    pub fn acquire(&self) -> Duration {
        loop {
            let wait = {
                let mut sent = self.sent.lock().expect("poisoned");
                let now = self.clock.now();
                while sent.front().is_some_and(|&t| t + self.window <= now) {
                    sent.pop_front();
                }
                if sent.len() < self.max_requests {
                    sent.push_back(now);
                    return now;
                }
                *sent.front().expect("window is full") + self.window - now
            };
            self.clock.sleep(wait);
        }
    }
}
