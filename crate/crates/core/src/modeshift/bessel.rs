//! Integer-order Bessel functions of the first and second kind for real
//! positive arguments.
//!
//! J_m uses the trapezoid rule on the periodic Bessel integral, which is
//! exponentially accurate once the node count exceeds m + x. Y_0 and Y_1 come
//! from Neumann series over J_k, higher orders from the (stable) upward
//! recurrence.

use std::f64::consts::PI;

/// J_m(x) = (1/2π)∫₀^{2π} cos(mτ − x sin τ) dτ.
pub fn jn(m: u32, x: f64) -> f64 {
    let n = 2 * ((m as f64 + x.abs()) as usize + 40);
    let sum: f64 = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            (m as f64 * t - x * t.sin()).cos()
        })
        .sum();
    sum / n as f64
}

/// J_0 … J_K(x) by Miller's downward recurrence normalized with
/// J_0 + 2ΣJ_2k = 1.
fn miller(x: f64) -> Vec<f64> {
    let top = 2 * ((x + 30.0 + (20.0 * x).sqrt()) as usize / 2 + 1);
    let mut j = vec![0.0; top + 2];
    j[top] = 1e-300;
    for k in (1..=top).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            j.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    j.iter_mut().for_each(|v| *v /= norm);
    j
}

/// Y_0 from the Neumann series
/// Y_0 = (2/π)(ln(x/2) + γ)J_0 − (4/π)Σ_{k≥1} (−1)^k J_2k / k,
/// and Y_1 = −Y_0' from its term-by-term derivative.
fn y01(x: f64) -> (f64, f64) {
    const EULER: f64 = 0.577_215_664_901_532_9;
    let j = miller(x);
    let lg = (0.5 * x).ln() + EULER;
    let mut s = 0.0;
    let mut ds = 0.0;
    let mut k = 1;
    while 2 * k + 1 < j.len() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * j[2 * k] / k as f64;
        ds += sign * 0.5 * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = 2.0 / PI * lg * j[0] - 4.0 / PI * s;
    let dy0 = 2.0 / PI * (j[0] / x - lg * j[1]) - 4.0 / PI * ds;
    (y0, -dy0)
}

/// Y_0 … Y_{m+1} at x > 0.
pub fn yn_sequence(m: u32, x: f64) -> Vec<f64> {
    let (y0, y1) = y01(x);
    let mut v = vec![y0, y1];
    for k in 1..=m as usize {
        let next = 2.0 * k as f64 / x * v[k] - v[k - 1];
        v.push(next);
    }
    v
}

pub fn yn(m: u32, x: f64) -> f64 {
    yn_sequence(m, x)[m as usize]
}

/// (Z_m, Z_m') for Z = J.
pub fn jn_with_derivative(m: u32, x: f64) -> (f64, f64) {
    let lo = if m == 0 { -jn(1, x) } else { jn(m - 1, x) };
    (jn(m, x), 0.5 * (lo - jn(m + 1, x)))
}

/// (Z_m, Z_m') for Z = Y.
pub fn yn_with_derivative(m: u32, x: f64) -> (f64, f64) {
    let s = yn_sequence(m, x);
    let m = m as usize;
    let lo = if m == 0 { -s[1] } else { s[m - 1] };
    (s[m], 0.5 * (lo - s[m + 1]))
}
