use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Token bucket shared by all callers of a gateway.
pub struct RateLimiter {
    state: Mutex<Bucket>,
    capacity: f64,
    per_sec: f64,
}

struct Bucket {
    tokens: f64,
    updated: Instant,
}

impl RateLimiter {
    /// `per_minute` steady rate with bursts of up to `burst` requests.
    pub fn per_minute(per_minute: u32, burst: u32) -> Self {
        let capacity = f64::from(burst.max(1));
        RateLimiter {
            state: Mutex::new(Bucket { tokens: capacity, updated: Instant::now() }),
            capacity,
            per_sec: f64::from(per_minute.max(1)) / 60.0,
        }
    }

    /// Blocks (through `sleep`) until a token is available, then takes it.
    pub fn acquire(&self, sleep: &dyn Fn(Duration)) {
        loop {
            let wait = {
                let mut b = self.state.lock().unwrap_or_else(|e| e.into_inner());
                let now = Instant::now();
                let refill = now.duration_since(b.updated).as_secs_f64() * self.per_sec;
                b.tokens = (b.tokens + refill).min(self.capacity);
                b.updated = now;
                if b.tokens >= 1.0 {
                    b.tokens -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - b.tokens) / self.per_sec)
            };
            sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burst_then_paced() {
        // 1200/min = one token every 50 ms
        let limiter = RateLimiter::per_minute(1200, 2);
        let start = Instant::now();
        for _ in 0..5 {
            limiter.acquire(&std::thread::sleep);
        }
        let elapsed = start.elapsed();
        // two free tokens, three paced ones
        assert!(elapsed >= Duration::from_millis(140), "{elapsed:?}");
        assert!(elapsed < Duration::from_secs(2), "{elapsed:?}");
    }

    #[test]
    fn shared_across_threads() {
        let limiter = RateLimiter::per_minute(1200, 1);
        let start = Instant::now();
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| limiter.acquire(&std::thread::sleep));
            }
        });
        assert!(start.elapsed() >= Duration::from_millis(140));
    }
}
