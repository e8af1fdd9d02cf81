//! Poisson probabilities used throughout the kernels and the solver.

use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::gamma_ur;

/// Mass left out when a one-period demand distribution is truncated.
pub const TRUNCATION_TAIL: f64 = 1e-12;

/// P{N = n} for N ~ Poisson(mu), evaluated in log space.
pub fn pmf(n: usize, mu: f64) -> f64 {
    if mu <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (n as f64 * mu.ln() - mu - ln_factorial(n as u64)).exp()
}

/// P{N <= n} for N ~ Poisson(mu).
pub fn cdf(n: usize, mu: f64) -> f64 {
    if mu <= 0.0 {
        return 1.0;
    }
    gamma_ur(n as f64 + 1.0, mu)
}

/// P{N <= n}, with the convention P{N <= -1} = 0.
pub fn cdf_signed(n: i64, mu: f64) -> f64 {
    if n < 0 {
        0.0
    } else {
        cdf(n as usize, mu)
    }
}

/// E[(x - N)^+] = x P{N <= x-1} - mu P{N <= x-2}.
pub fn expected_positive_part(x: usize, mu: f64) -> f64 {
    if x == 0 {
        return 0.0;
    }
    let x_i = x as i64;
    x as f64 * cdf_signed(x_i - 1, mu) - mu * cdf_signed(x_i - 2, mu)
}

/// Probabilities 0..=n_max, truncated once the cumulative mass reaches
/// `1 - TRUNCATION_TAIL`. Built by the forward recurrence from
/// the mode so moderate means never underflow at n = 0.
pub fn truncated_pmf(mu: f64) -> Vec<f64> {
    if mu <= 0.0 {
        return vec![1.0];
    }
    let mode = mu.floor() as usize;
    let p_mode = pmf(mode, mu);
    // Walk down from the mode.
    let mut lower = vec![p_mode];
    let mut p = p_mode;
    for n in (1..=mode).rev() {
        p *= n as f64 / mu;
        lower.push(p);
    }
    lower.reverse();
    let mut out = lower;
    let mut cum: f64 = out.iter().sum();
    let mut p = p_mode;
    let mut n = mode;
    while cum < 1.0 - TRUNCATION_TAIL && p > 0.0 {
        n += 1;
        p *= mu / n as f64;
        out.push(p);
        cum += p;
    }
    out
}

/// Upper tails P{N > i} for i = 0..=n_max, accumulated from the far tail so
/// no value is formed by cancellation. Entries beyond the point where the
/// tail underflows are exact zeros.
pub fn upper_tails(mu: f64, n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if mu <= 0.0 {
        return out;
    }
    // Mass beyond `stop` is below 1e-300 relative to anything we use.
    let stop = (n_max + 1).max((mu + 40.0 * mu.sqrt() + 60.0).ceil() as usize);
    let mut tail = 0.0;
    for j in (1..=stop).rev() {
        tail += pmf(j, mu);
        if j - 1 <= n_max {
            out[j - 1] = tail;
        }
    }
    out
}
