//! Directed-rounding magnitude arithmetic.
//!
//! The recursion criterion compares sums of huge nonnegative integers (tens
//! of thousands of bits at deep discretization grids). Doing every comparison
//! in full precision would dominate the runtime, so comparisons first run on
//! 64-bit mantissa/exponent *bounds*: every operation rounds its lower bound
//! down and its upper bound up, so the true value provably stays inside the
//! interval. A comparison is answered only when the intervals separate;
//! otherwise the caller falls back to exact integer arithmetic.
//!
//! Everything here is integer-only and therefore bit-identical across
//! platforms.

use num::bigint::BigUint;

/// A nonnegative magnitude `m * 2^(e - 63)` with `m` normalized into
/// `[2^63, 2^64)`, or exact zero (`m == 0`).
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub(crate) struct Mag {
    m: u64,
    e: i64,
}

impl Mag {
    pub const ZERO: Mag = Mag { m: 0, e: 0 };

    pub fn is_zero(self) -> bool {
        self.m == 0
    }

    pub fn from_u64(x: u64) -> Mag {
        if x == 0 {
            return Mag::ZERO;
        }
        let shift = x.leading_zeros();
        Mag {
            m: x << shift,
            e: 63 - shift as i64,
        }
    }

    /// Smallest representable magnitude strictly above `self`.
    fn next_up(self) -> Mag {
        debug_assert!(self.m != 0);
        match self.m.checked_add(1) {
            Some(m) => Mag { m, e: self.e },
            None => Mag {
                m: 1 << 63,
                e: self.e + 1,
            },
        }
    }

    fn ge(self, other: Mag) -> bool {
        if other.m == 0 {
            return true;
        }
        if self.m == 0 {
            return false;
        }
        (self.e, self.m) >= (other.e, other.m)
    }
}

/// A certified enclosure `lo <= value <= hi`.
#[derive(Copy, Clone, Debug)]
pub(crate) struct Bounds {
    pub lo: Mag,
    pub hi: Mag,
}

impl Bounds {
    pub const ZERO: Bounds = Bounds {
        lo: Mag::ZERO,
        hi: Mag::ZERO,
    };

    pub fn exact_u64(x: u64) -> Bounds {
        let m = Mag::from_u64(x);
        Bounds { lo: m, hi: m }
    }

    pub fn from_biguint(x: &BigUint) -> Bounds {
        let bits = x.bits();
        if bits == 0 {
            return Bounds::ZERO;
        }
        if bits <= 64 {
            return Bounds::exact_u64(u64::try_from(x).unwrap());
        }
        // Keep the top 64 bits; anything dropped widens the upper bound by
        // one unit in the last place.
        let digits: Vec<u64> = x.iter_u64_digits().collect();
        let top = digits[digits.len() - 1];
        let top_bits = 64 - top.leading_zeros() as u64; // in 1..=64
        let next = digits[digits.len() - 2];
        let (m, dropped_in_next) = if top_bits == 64 {
            (top, next != 0)
        } else {
            (
                (top << (64 - top_bits)) | (next >> top_bits),
                next << (64 - top_bits) != 0,
            )
        };
        let exact = !dropped_in_next && digits[..digits.len() - 2].iter().all(|&d| d == 0);
        let lo = Mag {
            m,
            e: bits as i64 - 1,
        };
        let hi = if exact { lo } else { lo.next_up() };
        Bounds { lo, hi }
    }

    pub fn mul(&self, other: &Bounds) -> Bounds {
        Bounds {
            lo: mul_down(self.lo, other.lo),
            hi: mul_up(self.hi, other.hi),
        }
    }

    pub fn add(&self, other: &Bounds) -> Bounds {
        Bounds {
            lo: add_down(self.lo, other.lo),
            hi: add_up(self.hi, other.hi),
        }
    }

    /// Division by another enclosure (both strictly positive).
    pub fn div(&self, divisor: &Bounds) -> Bounds {
        debug_assert!(!divisor.lo.is_zero());
        Bounds {
            lo: div_down(self.lo, divisor.hi),
            hi: div_up(self.hi, divisor.lo),
        }
    }
}

/// Certified `lhs >= rhs`, or `None` when the enclosures overlap.
pub(crate) fn certified_ge(lhs: &Bounds, rhs: &Bounds) -> Option<bool> {
    if lhs.lo.ge(rhs.hi) {
        return Some(true);
    }
    // lhs.hi < rhs.lo means even the largest possible lhs falls short.
    if !lhs.hi.ge(rhs.lo) {
        return Some(false);
    }
    None
}

fn normalize_u128(p: u128, e_base: i64, round_up: bool) -> Mag {
    debug_assert!(p != 0);
    let bits = 128 - p.leading_zeros() as i64; // in 1..=128
    let shift = (bits - 64).max(0) as u32;
    let dropped = shift > 0 && p & ((1u128 << shift) - 1) != 0;
    let m = Mag {
        m: (p >> shift) as u64,
        e: e_base + bits - 1,
    };
    // bits < 64 cannot happen for normalized operands; keep the math total.
    let m = if m.m.leading_zeros() > 0 {
        let s = m.m.leading_zeros();
        Mag {
            m: m.m << s,
            e: m.e, // e encodes the leading-bit position, unchanged by the shift
        }
    } else {
        m
    };
    if round_up && dropped {
        m.next_up()
    } else {
        m
    }
}

fn mul_down(a: Mag, b: Mag) -> Mag {
    if a.is_zero() || b.is_zero() {
        return Mag::ZERO;
    }
    // a*b = (ma*mb) * 2^(ea+eb-126)
    normalize_u128(a.m as u128 * b.m as u128, a.e + b.e - 126, false)
}

fn mul_up(a: Mag, b: Mag) -> Mag {
    if a.is_zero() || b.is_zero() {
        return Mag::ZERO;
    }
    normalize_u128(a.m as u128 * b.m as u128, a.e + b.e - 126, true)
}

fn add_directed(a: Mag, b: Mag, round_up: bool) -> Mag {
    if a.is_zero() {
        return b;
    }
    if b.is_zero() {
        return a;
    }
    let (big, small) = if a.ge(b) { (a, b) } else { (b, a) };
    let d = big.e - small.e;
    if d >= 64 {
        // The small addend is below one ulp of the large one.
        return if round_up { big.next_up() } else { big };
    }
    let sum = ((big.m as u128) << d) + small.m as u128;
    // sum * 2^(small.e - 63); reuse the normalizer with that base exponent.
    normalize_u128(sum, small.e - 63, round_up)
}

fn add_down(a: Mag, b: Mag) -> Mag {
    add_directed(a, b, false)
}

fn add_up(a: Mag, b: Mag) -> Mag {
    add_directed(a, b, true)
}

fn div_directed(a: Mag, d: Mag, round_up: bool) -> Mag {
    debug_assert!(!d.is_zero());
    if a.is_zero() {
        return Mag::ZERO;
    }
    // a/d = (ma * 2^64 / md) * 2^(ea - ed - 64)
    let num = (a.m as u128) << 64;
    let q = num / d.m as u128;
    let rem = num % d.m as u128 != 0;
    let m = normalize_u128(q, a.e - d.e - 64, round_up);
    if round_up && rem {
        // The normalizer only saw the floor quotient; a nonzero remainder
        // still needs one more ulp.
        m.next_up()
    } else {
        m
    }
}

fn div_down(a: Mag, d: Mag) -> Mag {
    div_directed(a, d, false)
}

fn div_up(a: Mag, d: Mag) -> Mag {
    div_directed(a, d, true)
}
