//! Exact-rational parsing, formatting and bit-level helpers.
//!
//! Probabilities are `num::BigRational` throughout the crate. Instance files
//! carry them as `"num/den"` or terminating-decimal strings; both forms parse
//! losslessly. Binary floating point never enters any certified code path.

use num::{BigInt, BigRational, Integer, One, Signed, Zero};

use crate::error::{Error, Result};

/// Parses an exact rational from `"3/4"`, `"0.25"`, `"1"` or `"-2"` forms.
///
/// Decimal strings are read digit-for-digit (`0.25` becomes `25/100`), so the
/// value is exactly the number written. Anything else — including exponent
/// notation, which invites accidental rounding upstream — is rejected.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty rational literal".into()));
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(n, d));
    }
    // Decimal form: [sign] digits [ "." digits ]
    let (sign, digits) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::Parse(format!("bad rational literal {s:?}")));
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(Error::Parse(format!("bad rational literal {s:?}")));
    }
    let mut num: BigInt = if int_part.is_empty() {
        BigInt::zero()
    } else {
        int_part
            .parse()
            .map_err(|_| Error::Parse(format!("bad rational literal {s:?}")))?
    };
    let mut den = BigInt::one();
    for c in frac_part.chars() {
        num = num * 10 + (c as u8 - b'0');
        den *= 10;
    }
    Ok(BigRational::new(num * sign, den))
}

/// Renders a rational as `"num/den"` (or a bare integer when den == 1).
pub fn ratio_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Deterministic decimal rendering with `sig` significant digits.
///
/// The mantissa is truncated toward zero, never rounded, so two runs of the
/// same computation print byte-identical output. Values far from unit scale
/// switch to exponent notation.
pub fn decimal_string(r: &BigRational, sig: usize) -> String {
    assert!(sig >= 1);
    if r.is_zero() {
        return "0".to_string();
    }
    let neg = r.is_negative();
    let x = r.abs();
    // Decimal exponent e10: the unique integer with 10^e10 <= x < 10^(e10+1).
    let mut e10: i64 = {
        let nd = x.numer().to_string().len() as i64;
        let dd = x.denom().to_string().len() as i64;
        nd - dd
    };
    let pow10 = |k: u32| -> BigInt { BigInt::from(10u32).pow(k) };
    let value_ge_pow10 = |e: i64| -> bool {
        // x >= 10^e  <=>  numer * 10^max(0,-e) >= denom * 10^max(0,e)
        let lhs = if e < 0 { x.numer() * pow10((-e) as u32) } else { x.numer().clone() };
        let rhs = if e > 0 { x.denom() * pow10(e as u32) } else { x.denom().clone() };
        lhs >= rhs
    };
    if value_ge_pow10(e10 + 1) {
        e10 += 1;
    } else if !value_ge_pow10(e10) {
        e10 -= 1;
    }
    debug_assert!(value_ge_pow10(e10) && !value_ge_pow10(e10 + 1));

    // Integer mantissa with `sig` digits: floor(x * 10^(sig-1-e10)).
    let shift = sig as i64 - 1 - e10;
    let mantissa: BigInt = if shift >= 0 {
        (x.numer() * pow10(shift as u32)).div_floor(x.denom())
    } else {
        x.numer().div_floor(&(x.denom() * pow10((-shift) as u32)))
    };
    let mut digits = mantissa.to_string();
    debug_assert_eq!(digits.len(), sig);
    while digits.len() > 1 && digits.ends_with('0') {
        digits.pop();
    }

    let body = if (-4..15).contains(&e10) {
        if e10 >= 0 {
            let ip_len = (e10 as usize + 1).min(digits.len());
            let (ip, fp) = digits.split_at(ip_len);
            let pad = "0".repeat(e10 as usize + 1 - ip_len);
            if fp.is_empty() {
                format!("{ip}{pad}")
            } else {
                format!("{ip}{pad}.{fp}")
            }
        } else {
            format!("0.{}{}", "0".repeat((-e10 - 1) as usize), digits)
        }
    } else {
        let (first, rest) = digits.split_at(1);
        if rest.is_empty() {
            format!("{first}e{e10}")
        } else {
            format!("{first}.{rest}e{e10}")
        }
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Rounds `r >= 0` down to a multiple of `2^-bits`.
pub fn truncate_dyadic(r: &BigRational, bits: u64) -> BigRational {
    debug_assert!(!r.is_negative());
    let scaled = (r.numer() << bits).div_floor(r.denom());
    BigRational::new(scaled, BigInt::one() << bits)
}

/// Least `t >= 0` with `2^t >= x`, for `x >= 1` (the exact `ceil(log2 x)`).
pub fn ceil_log2(x: &BigRational) -> u64 {
    assert!(*x >= BigRational::one(), "ceil_log2 needs x >= 1");
    // x <= num/den < 2^(bits(num) - bits(den) + 1), so start just above.
    let hint = (x.numer().bits() as i64 - x.denom().bits() as i64 + 1).max(0) as u64;
    let ge = |t: u64| -> bool { (x.denom() << t) >= *x.numer() };
    let mut t = hint;
    while !ge(t) {
        t += 1;
    }
    while t > 0 && ge(t - 1) {
        t -= 1;
    }
    t
}

/// Least `s >= 0` with `q^s >= target`, for `q > 1` and `target >= 1`.
///
/// This is the exact `ceil(log_q target)`; comparisons are cross-multiplied
/// integer tests so no logarithm is ever evaluated.
pub fn ceil_log_q(q: &BigRational, target: &BigRational) -> u64 {
    assert!(*q > BigRational::one());
    assert!(*target >= BigRational::one());
    let (u, v) = (q.numer(), q.denom());
    // q^s >= target  <=>  u^s * t_den >= t_num * v^s
    let ge = |s: u64| -> bool {
        let s = u32::try_from(s).expect("grid depth out of range");
        u.pow(s) * target.denom() >= target.numer() * v.pow(s)
    };
    if ge(0) {
        return 0;
    }
    let mut hi = 1u64;
    while !ge(hi) {
        hi *= 2;
    }
    let mut lo = hi / 2; // ge(lo) is false
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ge(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Writes `p` as `n / 2^bits`, requiring that the reduced denominator divide
/// `2^bits` (true for every truncated-oracle answer).
pub fn dyadic_numerator(p: &BigRational, bits: u64) -> BigInt {
    let (q, r) = (p.numer() << bits).div_rem(p.denom());
    debug_assert!(r.is_zero(), "value is not on the 2^-{bits} grid");
    q
}

/// Exact `2^-bits` as a rational.
pub fn pow2_inv(bits: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::FromPrimitive;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn parses_fraction_and_decimal_forms() {
        assert_eq!(parse_rational("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("1").unwrap(), rat(1, 1));
        assert_eq!(parse_rational("-2.5").unwrap(), rat(-5, 2));
        assert_eq!(parse_rational(" 7 / 12 ").unwrap(), rat(7, 12));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
    }

    #[test]
    fn rejects_malformed_literals() {
        for bad in ["", "1/0", "abc", "0.1.2", "1e-3", "2/", "--1", "."] {
            assert!(parse_rational(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal_string(&rat(3, 4), 12), "0.75");
        assert_eq!(decimal_string(&rat(7, 12), 12), "0.583333333333");
        assert_eq!(decimal_string(&rat(1, 1), 12), "1");
        assert_eq!(decimal_string(&rat(0, 1), 12), "0");
        assert_eq!(decimal_string(&rat(1, 1 << 20), 12), "9.53674316406e-7");
        assert_eq!(decimal_string(&rat(-3, 2), 12), "-1.5");
        assert_eq!(decimal_string(&rat(123456, 1), 4), "123400");
    }

    #[test]
    fn decimal_rendering_matches_f64_on_random_ratios() {
        for n in 1..200i64 {
            for d in [3i64, 7, 16, 97] {
                let r = rat(n, d);
                let rendered = decimal_string(&r, 15);
                let back: f64 = rendered.parse().unwrap();
                let want = BigRational::from_f64(n as f64 / d as f64).unwrap();
                let got = BigRational::from_f64(back).unwrap();
                let diff = (want - got).abs();
                assert!(diff < rat(1, 1_000_000_000), "{n}/{d} rendered {rendered}");
            }
        }
    }

    #[test]
    fn dyadic_truncation() {
        assert_eq!(truncate_dyadic(&rat(5, 8), 2), rat(1, 2));
        assert_eq!(truncate_dyadic(&rat(5, 8), 3), rat(5, 8));
        assert_eq!(truncate_dyadic(&rat(1, 1), 4), rat(1, 1));
        assert_eq!(truncate_dyadic(&rat(1, 3), 2), rat(1, 4));
        assert_eq!(truncate_dyadic(&rat(0, 1), 5), rat(0, 1));
    }

    #[test]
    fn ceil_log2_spots() {
        assert_eq!(ceil_log2(&rat(1, 1)), 0);
        assert_eq!(ceil_log2(&rat(2, 1)), 1);
        assert_eq!(ceil_log2(&rat(3, 1)), 2);
        assert_eq!(ceil_log2(&rat(1024, 1)), 10);
        assert_eq!(ceil_log2(&rat(1025, 1)), 11);
        assert_eq!(ceil_log2(&rat(3, 2)), 1);
    }

    #[test]
    fn ceil_log_q_spots() {
        let q = rat(2, 1);
        assert_eq!(ceil_log_q(&q, &rat(1, 1)), 0);
        assert_eq!(ceil_log_q(&q, &rat(4, 1)), 2);
        assert_eq!(ceil_log_q(&q, &rat(5, 1)), 3);
        // Q = 11/10: least s with 1.1^s >= 2 is 8 (1.1^7 = 1.9487, 1.1^8 = 2.1436).
        assert_eq!(ceil_log_q(&rat(11, 10), &rat(2, 1)), 8);
    }

    #[test]
    fn dyadic_numerator_spots() {
        assert_eq!(dyadic_numerator(&rat(5, 8), 3), BigInt::from(5));
        assert_eq!(dyadic_numerator(&rat(5, 8), 5), BigInt::from(20));
        assert_eq!(dyadic_numerator(&rat(1, 1), 2), BigInt::from(4));
    }
}
