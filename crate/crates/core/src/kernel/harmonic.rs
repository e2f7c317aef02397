//! Numerics for the shift kernel generated by
//! `a_n = sqrt(1/H_n - 1/H_{n+1}) = 1 / sqrt((n+1) H_n H_{n+1})`.
//!
//! `sum_{k>M} a_k^2 = 1/H_{M+1}` telescopes, which gives closed forms for
//! every tail the kernel needs.

use std::sync::{Arc, Mutex};

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Number of terms summed explicitly before the tail estimate takes over.
pub(crate) const HEAD_TERMS: usize = 1 << 21;

/// `H_n = sum_{k=1}^n 1/k`, with `H_0 = 0`.
pub fn harmonic_number(n: u64) -> f64 {
    if n < 64 {
        return (1..=n).rev().map(|k| 1.0 / k as f64).sum();
    }
    let x = n as f64;
    let x2 = x * x;
    let x4 = x2 * x2;
    x.ln() + EULER_GAMMA + 1.0 / (2.0 * x) - 1.0 / (12.0 * x2) + 1.0 / (120.0 * x4)
        - 1.0 / (252.0 * x4 * x2)
}

/// `a_n` for `n >= 1` (one-based).
pub fn coefficient(n: u64) -> f64 {
    debug_assert!(n >= 1);
    let h = harmonic_number(n);
    let h1 = harmonic_number(n + 1);
    1.0 / (((n + 1) as f64) * h * h1).sqrt()
}

/// `sum_{k=1}^n a_k^2 = 1 - 1/H_{n+1}`.
pub fn partial_square_sum(n: u64) -> f64 {
    1.0 - 1.0 / harmonic_number(n + 1)
}

/// `sum_{k>n} a_k^2 = 1/H_{n+1}`.
pub fn square_tail(n: u64) -> f64 {
    1.0 / harmonic_number(n + 1)
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Autocorrelations `c(d) = sum_{k>=1} a_{k+d} a_k` for `d < count`, with a
/// per-lag error bound.
///
/// The first [`HEAD_TERMS`] products are summed exactly. Since
/// `a_k a_{k+d} <= (a_k^2 + a_{k+d}^2) / 2`, the remaining tail is at most
/// `(1/H_{M+1} + 1/H_{M+d+1}) / 2`; the AM-GM gap is
/// `sum (a_k - a_{k+d})^2 / 2 <= d^2 / (2 (M+1)^2 H_{M+1})` because
/// `|a'(t)| <= a(t)/t` for `t >= 4`. The returned value is the upper end, so
/// it never undershoots the true sum by more than the stated bound.
pub fn autocorrelations(count: usize) -> (Vec<f64>, Vec<f64>) {
    let m = HEAD_TERMS;
    let a: Vec<f64> = (1..=(m + count) as u64).map(coefficient).collect();
    let h_m1 = harmonic_number(m as u64 + 1);
    let lag = |d: usize| -> (f64, f64) {
        if d == 0 {
            return (1.0, 0.0);
        }
        let mut head = CompensatedSum::default();
        for k in 0..m {
            head.add(a[k] * a[k + d]);
        }
        let upper_tail = 0.5 * (1.0 / h_m1 + 1.0 / harmonic_number((m + d) as u64 + 1));
        let df = d as f64;
        let gap = df * df / (2.0 * (m as f64 + 1.0).powi(2) * h_m1);
        (head.value() + upper_tail, gap + 4.0 * f64::EPSILON)
    };
    // lags are independent; each worker owns a strided subset so the result
    // does not depend on scheduling
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(count.max(1));
    let mut out = vec![(0.0, 0.0); count];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let lag = &lag;
                scope.spawn(move || (w..count).step_by(workers).map(|d| (d, lag(d))).collect::<Vec<_>>())
            })
            .collect();
        for h in handles {
            for (d, v) in h.join().expect("autocorrelation worker panicked") {
                out[d] = v;
            }
        }
    });
    out.into_iter().unzip()
}

/// Cached autocorrelation table shared by every harmonic kernel.
#[derive(Debug)]
pub(crate) struct LagTable {
    pub(crate) values: Vec<f64>,
    pub(crate) bounds: Vec<f64>,
}

/// `c(d)` with its error bound, from the shared table.
pub fn autocorrelation(d: usize) -> (f64, f64) {
    let t = lag_table(d + 1);
    (t.values[d], t.bounds[d])
}

static LAGS: Mutex<Option<Arc<LagTable>>> = Mutex::new(None);

/// A table covering at least lags `0..count`. Growth at least doubles, so
/// repeated window enlargements stay cheap.
pub(crate) fn lag_table(count: usize) -> Arc<LagTable> {
    let mut guard = LAGS.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(t) = guard.as_ref() {
        if t.values.len() >= count {
            return Arc::clone(t);
        }
    }
    let have = guard.as_ref().map_or(0, |t| t.values.len());
    let want = count.max(2 * have).max(64);
    let (values, bounds) = autocorrelations(want);
    let table = Arc::new(LagTable { values, bounds });
    *guard = Some(Arc::clone(&table));
    table
}
