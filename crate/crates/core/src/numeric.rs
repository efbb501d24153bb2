//! Numerical kernels: compensated summation, big-integer helpers, and the
//! log-tail of the record-rank law evaluated in O(1).

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};

/// Neumaier's compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// `C(n, k)` as a big integer.
pub fn binomial_big(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// All of `C(n, 0..=n)`, built by the multiplicative recursion.
pub fn binomial_row(n: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for k in 0..n {
        c = c * (n - k) / (k + 1);
        row.push(c.clone());
    }
    row
}

/// `num / den` rounded to `f64`, valid far beyond the `f64` exponent range
/// of either operand.
pub fn big_ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if den.is_zero() {
        return f64::NAN;
    }
    let negative = (num.sign() == Sign::Minus) != (den.sign() == Sign::Minus);
    let value = big_unsigned_ratio_to_f64(num.magnitude(), den.magnitude());
    if negative {
        -value
    } else {
        value
    }
}

pub fn big_unsigned_ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    // Scale so the integer quotient carries 64 significant bits.
    let shift = num.bits() as i64 - den.bits() as i64 - 64;
    let quotient = if shift >= 0 {
        num / (den << shift as u64)
    } else {
        (num << (-shift) as u64) / den
    };
    let digits = quotient.to_u64_digits();
    let mut mantissa = 0.0f64;
    for &d in digits.iter().rev() {
        mantissa = mantissa * 18_446_744_073_709_551_616.0 + d as f64;
    }
    scale_by_power_of_two(mantissa, shift)
}

fn scale_by_power_of_two(value: f64, exponent: i64) -> f64 {
    let mut v = value;
    let mut e = exponent;
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
        if v == 0.0 {
            return 0.0;
        }
    }
    v * 2f64.powi(e as i32)
}

/// `ln C(n, k)` via log-gamma.
pub fn ln_binomial(n: f64, k: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

// Terms this close to the pole at j = a are summed directly.
const DIRECT_NEAR_POLE: f64 = 64.0;
// Ranges with at most this many terms are summed directly.
const DIRECT_RANGE: f64 = 64.0;

/// `sum artanh(j / a)` over `j = p, p + 1, ..., q`, with `0 <= p`, `a > 0`
/// and `q - p` integral.
///
/// Returns `+inf` when the range reaches the pole `j = a`. Long ranges use
/// Euler-Maclaurin with three correction terms; the last terms before the
/// pole and short ranges are summed directly.
pub fn artanh_sum(p: f64, q: f64, a: f64) -> f64 {
    if q < p {
        return 0.0;
    }
    if q >= a {
        return f64::INFINITY;
    }
    if q - p < DIRECT_RANGE {
        return artanh_sum_direct(p, q, a);
    }
    // Stay on the grid p, p + 1, ... even when p is not an integer.
    let em_end = q.min(p + (a - DIRECT_NEAR_POLE - p).floor());
    if em_end - p < DIRECT_RANGE {
        return artanh_sum_direct(p, q, a);
    }
    let head = artanh_sum_euler_maclaurin(p, em_end, a);
    let tail = artanh_sum_direct(em_end + 1.0, q, a);
    head + tail
}

pub fn artanh_sum_direct(p: f64, q: f64, a: f64) -> f64 {
    if q < p {
        return 0.0;
    }
    if q >= a {
        return f64::INFINITY;
    }
    // Count terms rather than step j: past 2^53, j + 1 == j.
    let terms = (q - p).floor() as u64 + 1;
    (0..terms).map(|n| artanh_ratio(p + n as f64, a)).collect::<CompensatedSum>().value()
}

// artanh(j / a), through the exact differences a -+ j once j / a nears 1.
fn artanh_ratio(j: f64, a: f64) -> f64 {
    if 2.0 * j < a {
        (j / a).atanh()
    } else {
        0.5 * ((a + j) / (a - j)).ln()
    }
}

// ln(1 + t) - t for t >= 0, without cancellation near 0.
fn ln1p_minus_identity(t: f64) -> f64 {
    if t >= 0.1 {
        return t.ln_1p() - t;
    }
    let mut acc = 0.0;
    let mut power = t;
    for k in 2..40 {
        power *= -t;
        acc += power / k as f64;
        if power.abs() < 1e-18 * acc.abs() {
            break;
        }
    }
    acc
}

// Integral of artanh(j / a) over [p, q] as half the difference of
// H(s) = s ln s - s taken between a - q, a - p, a + p and a + q. Each
// difference H(x + d) - H(x) = d ln(x + d) + x (ln1p(d / x) - d / x), so no
// O(1) terms cancel near the origin or near the pole.
fn artanh_integral(p: f64, q: f64, a: f64) -> f64 {
    let d = q - p;
    let main = d * ((q + p) / (a - p)).ln_1p();
    let plus = (a + p) * ln1p_minus_identity(d / (a + p));
    let minus = (a - q) * ln1p_minus_identity(d / (a - q));
    0.5 * (main + plus - minus)
}

fn artanh_sum_euler_maclaurin(p: f64, q: f64, a: f64) -> f64 {
    let f = |j: f64| artanh_ratio(j, a);
    // Derivatives in j: d^n/dj^n artanh(j/a) = (n-1)!/2 [(a-j)^-n - (-1)^n (a+j)^-n].
    let d1 = |j: f64| 0.5 * (1.0 / (a - j) + 1.0 / (a + j));
    let d3 = |j: f64| (a - j).powi(-3) + (a + j).powi(-3);
    let d5 = |j: f64| 12.0 * ((a - j).powi(-5) + (a + j).powi(-5));
    let integral = artanh_integral(p, q, a);
    let mut acc = CompensatedSum::new();
    acc.add(integral);
    acc.add(0.5 * (f(p) + f(q)));
    acc.add((d1(q) - d1(p)) / 12.0);
    acc.add(-(d3(q) - d3(p)) / 720.0);
    acc.add((d5(q) - d5(p)) / 30240.0);
    acc.value()
}

/// `ln P(R_{i+1} >= r + x | R_i = r, A_i = a)`, i.e.
/// `ln prod_{j=r+1}^{r+x-1} (a - j)/(a + j)`, for `x >= 1`.
///
/// `-inf` beyond the support `x > a - r`.
pub fn ln_record_tail(r: f64, a: f64, x: f64) -> f64 {
    if x <= 1.0 {
        return 0.0;
    }
    if x > a - r {
        return f64::NEG_INFINITY;
    }
    -2.0 * artanh_sum(r + 1.0, r + x - 1.0, a)
}

/// The same log-tail by the sequential ratio recursion
/// `tail(x+1) = tail(x) (a-r-x)/(a+r+x)`, summed in log space. O(x); the
/// reference the O(1) evaluation is checked against.
pub fn ln_record_tail_sequential(r: f64, a: f64, x: f64) -> f64 {
    if x <= 1.0 {
        return 0.0;
    }
    if x > a - r {
        return f64::NEG_INFINITY;
    }
    let mut acc = CompensatedSum::new();
    let mut k = 1.0;
    while k < x {
        let drop = (2.0 * r + 2.0 * k) / (a + r + k);
        acc.add(if drop < 0.5 { (-drop).ln_1p() } else { ((a - r - k) / (a + r + k)).ln() });
        k += 1.0;
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::ToBigInt;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for _ in 0..1000 {
            acc.add(1e-17);
        }
        assert!((acc.value() - (1.0 + 1e-14)).abs() < 1e-18);
    }

    #[test]
    fn binomial_row_matches_pointwise() {
        let row = binomial_row(30);
        for (k, c) in row.iter().enumerate() {
            assert_eq!(*c, binomial_big(30, k as u64));
        }
        assert_eq!(binomial_big(6, 3), BigUint::from(20u32));
        assert_eq!(binomial_big(3, 6), BigUint::zero());
    }

    #[test]
    fn big_ratio_conversion() {
        let one = 1.to_bigint().unwrap();
        let three = 3.to_bigint().unwrap();
        assert_eq!(big_ratio_to_f64(&one, &three), 1.0 / 3.0);
        assert_eq!(big_ratio_to_f64(&-one.clone(), &three), -1.0 / 3.0);
        // Operands far outside f64 range.
        let huge = BigInt::from(7u32) << 5000u32;
        let huger = BigInt::from(3u32) << 5002u32;
        let v = big_ratio_to_f64(&huge, &huger);
        assert!((v - 7.0 / 12.0).abs() < 1e-16);
        assert_eq!(big_ratio_to_f64(&BigInt::zero(), &three), 0.0);
    }

    #[test]
    fn ln_binomial_small() {
        assert!((ln_binomial(6.0, 3.0) - 20f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn record_tail_small_cases() {
        // (r=1, a=3): tail(2) = 1/5.
        assert!((ln_record_tail(1.0, 3.0, 2.0).exp() - 0.2).abs() < 1e-15);
        assert_eq!(ln_record_tail(1.0, 3.0, 1.0), 0.0);
        assert_eq!(ln_record_tail(1.0, 3.0, 3.0), f64::NEG_INFINITY);
    }

    #[test]
    fn fast_tail_matches_sequential_recursion() {
        let mut worst = 0.0f64;
        for &a in &[200.0, 1e3, 1e4, 1e5, 1e6] {
            let sq = f64::sqrt(a);
            for &r in &[0.0, 1.0, (0.5 * sq).floor(), sq.floor(), (3.0 * sq).floor(), (a / 2.0).floor(), a - 70.0, a - 2.0] {
                if r >= a {
                    continue;
                }
                for &x in &[2.0, 65.0, 66.0, 100.0, sq.floor(), (2.0 * sq).floor(), (5.0 * sq).floor(), a - r - 64.0, a - r - 1.0, a - r] {
                    if x < 1.0 || x > a - r {
                        continue;
                    }
                    let fast = ln_record_tail(r, a, x);
                    let slow = ln_record_tail_sequential(r, a, x);
                    let err = (fast - slow).abs() / slow.abs().max(1.0);
                    worst = worst.max(err);
                    assert!(err < 1e-12, "a={a} r={r} x={x}: {fast} vs {slow}");
                }
            }
        }
        assert!(worst < 1e-12);
    }
}
