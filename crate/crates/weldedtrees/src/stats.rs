//! Small statistics toolbox: chi-square goodness of fit, Wilson score
//! intervals, and least-squares polynomial fits.

const EPS: f64 = 1e-15;
const MAX_ITER: usize = 500;

/// Natural log of the gamma function (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    #[allow(clippy::excessive_precision)]
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma P(a, x).
pub fn reg_gamma_lower(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "reg_gamma_lower domain: a={a}, x={x}");
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cf(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
pub fn reg_gamma_upper(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "reg_gamma_upper domain: a={a}, x={x}");
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cf(a, x)
    }
}

/// Series expansion of P(a, x), valid for x < a + 1.
fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut term = sum;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Continued fraction for Q(a, x) (modified Lentz), valid for x >= a + 1.
fn gamma_cf(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
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
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Survival function of the chi-square distribution with `dof` degrees of
/// freedom: the p-value of an observed statistic `x`.
pub fn chi2_sf(x: f64, dof: usize) -> f64 {
    assert!(dof > 0, "chi2_sf needs dof > 0");
    if x <= 0.0 {
        return 1.0;
    }
    reg_gamma_upper(dof as f64 / 2.0, x / 2.0)
}

/// Chi-square goodness-of-fit statistic and p-value for observed counts
/// against a uniform distribution over the categories.
pub fn chi2_uniform(counts: &[u64]) -> (f64, usize, f64) {
    let k = counts.len();
    assert!(k >= 2, "need at least two categories");
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / k as f64;
    let stat: f64 = counts
        .iter()
        .map(|&o| {
            let diff = o as f64 - expected;
            diff * diff / expected
        })
        .sum();
    let dof = k - 1;
    (stat, dof, chi2_sf(stat, dof))
}

/// Wilson score interval for a binomial proportion at `z` standard normal
/// quantiles.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0, "wilson_interval needs trials > 0");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Half-width of the z = 1 Wilson interval; the standard error we attach to
/// Monte Carlo rates (stays positive at observed rates of 0 or 1).
pub fn wilson_stderr(successes: u64, trials: u64) -> f64 {
    let (lo, hi) = wilson_interval(successes, trials, 1.0);
    (hi - lo) / 2.0
}

/// Standard deviation of a binomial proportion estimate.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Least-squares polynomial fit of the given degree; returns coefficients in
/// ascending power order.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Vec<f64> {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() > degree, "underdetermined fit");
    let m = degree + 1;
    // Normal equations: (V^T V) c = V^T y with Vandermonde V.
    let mut ata = vec![vec![0.0; m]; m];
    let mut aty = vec![0.0; m];
    for (&x, &y) in xs.iter().zip(ys) {
        let mut powers = vec![1.0; 2 * m - 1];
        for i in 1..2 * m - 1 {
            powers[i] = powers[i - 1] * x;
        }
        for i in 0..m {
            for (j, row) in ata.iter_mut().enumerate().take(m) {
                row[i] += powers[i + j];
            }
            aty[i] += y * powers[i];
        }
    }
    solve_linear(&mut ata, &mut aty);
    aty
}

/// Evaluate a polynomial (ascending coefficients) at `x`.
pub fn polyval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Slope and intercept of the least-squares line through the points.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let c = polyfit(xs, ys, 1);
    (c[1], c[0])
}

/// In-place Gaussian elimination with partial pivoting; solution left in `b`.
fn solve_linear(a: &mut [Vec<f64>], b: &mut [f64]) {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        assert!(a[col][col].abs() > 1e-300, "singular system");
        let (pivot_part, rest) = a.split_at_mut(col + 1);
        let pivot_row = &pivot_part[col];
        for (offset, row) in rest.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            for (x, p) in row[col..n].iter_mut().zip(&pivot_row[col..n]) {
                *x -= f * p;
            }
            b[col + 1 + offset] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        for row in 0..col {
            let f = a[row][col] / a[col][col];
            b[row] -= f * b[col];
        }
        b[col] /= a[col][col];
    }
}
