//! Poisson point probabilities and the regularized incomplete gamma function.
//!
//! The point mass uses Loader's saddle-point form, which keeps full relative
//! accuracy for large counts where `k ln ρ − ρ − ln k!` would cancel badly.

use std::f64::consts::PI;

const MAX_SERIES_TERMS: usize = 1_000_000;

/// `ln k! − (k + ½) ln k + k − ½ ln 2π` for k = 0..=15.
#[allow(clippy::excessive_precision)]
const STIRLING_ERR: [f64; 16] = [
    0.0,
    0.08106146679532725821967,
    0.04134069595540929409382,
    0.02767792568499833914879,
    0.02079067210376509311152,
    0.01664469118982119216319,
    0.01387612882307074799875,
    0.01189670994589177009506,
    0.01041126526197209649748,
    0.009255462182712732917729,
    0.008330563433362871256469,
    0.007573675487951840794972,
    0.006942840107209529865664,
    0.00640899418800420706844,
    0.005951370112758847735624,
    0.005554733551962801371039,
];

fn stirling_err(k: u64) -> f64 {
    if k < 16 {
        return STIRLING_ERR[k as usize];
    }
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let n = k as f64;
    let nn = n * n;
    if k > 500 {
        (S0 - S1 / nn) / n
    } else if k > 80 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if k > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/np) + np − x`, accurate when `x ≈ np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let vv = v * v;
        for j in 1..1000 {
            ej *= vv;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `Prob{Poisson(lambda) = k}`.
pub fn poisson_pmf(k: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if k == 0 {
        return (-lambda).exp();
    }
    let x = k as f64;
    (-stirling_err(k) - bd0(x, lambda)).exp() / (2.0 * PI * x).sqrt()
}

/// Regularized lower incomplete gamma `P(a, x)` for integer `a ≥ 1`, which
/// equals `Prob{Poisson(x) ≥ a}`.
pub fn gamma_p_int(a: u64, x: f64) -> f64 {
    debug_assert!(a >= 1);
    if x <= 0.0 {
        return 0.0;
    }
    let af = a as f64;
    if x < af + 1.0 {
        lower_series(a, x)
    } else {
        1.0 - upper_continued_fraction(a, x)
    }
}

// P(a, x) = p(a; x) · Σ_{n≥0} xⁿ / ((a+1)⋯(a+n)).
fn lower_series(a: u64, x: f64) -> f64 {
    let lead = poisson_pmf(a, x);
    if lead == 0.0 {
        return 0.0;
    }
    let mut denom = a as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for _ in 0..MAX_SERIES_TERMS {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    lead * sum
}

// Q(a, x) = a·p(a; x) · CF, modified Lentz evaluation.
fn upper_continued_fraction(a: u64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let af = a as f64;
    let lead = af * poisson_pmf(a, x);
    if lead == 0.0 {
        return 0.0;
    }
    let mut b = x + 1.0 - af;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_SERIES_TERMS {
        let an = -(i as f64) * (i as f64 - af);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    lead * h
}
