//! Baillie–PSW probable-prime test: trial division by primes below 1000, a
//! strong base-2 Fermat test, then a strong Lucas test with Selfridge's
//! parameters. No composite passing the combination is known, and below
//! 2^64 the result is deterministic (the base-2 strong pseudoprimes up to
//! there have been checked exhaustively against the Lucas stage).
//!
//! Reference: R. Baillie, S. S. Wagstaff, "Lucas pseudoprimes",
//! Math. Comp. 35 (1980).

use std::sync::OnceLock;

use num_bigint::BigUint;
use num_integer::{Integer, Roots};
use num_traits::{One, ToPrimitive, Zero};

use crate::numtheory::{small_primes, Limbs};

fn trial_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| small_primes(1000))
}

/// Largest value fully decided by trial division against primes < 1000
/// (1009^2; any smaller composite has a factor below 1000).
const TRIAL_COMPLETE_BELOW: u64 = 1009 * 1009;

/// BPSW probable-prime test. `false` is definitive; `true` is definitive
/// below 2^64 and a probable prime above.
pub fn is_probable_prime(n: &BigUint) -> bool {
    if let Some(v) = n.to_u64() {
        if v < 2 {
            return false;
        }
    }
    let limbs = Limbs::new(n);
    for &p in trial_primes() {
        if limbs.rem_u64(p) == 0 {
            return n.to_u64() == Some(p);
        }
    }
    if let Some(v) = n.to_u64() {
        if v < TRIAL_COMPLETE_BELOW {
            return true;
        }
    }
    if !strong_base2(n) {
        return false;
    }
    // A perfect square has no D with (D/n) = -1; rule it out before the
    // Selfridge search so the search terminates.
    if is_perfect_square(n) {
        return false;
    }
    strong_lucas_selfridge(n, &limbs)
}

/// Convenience wrapper for machine-word integers.
pub fn is_probable_prime_u64(n: u64) -> bool {
    is_probable_prime(&BigUint::from(n))
}

fn is_perfect_square(n: &BigUint) -> bool {
    // quick filter on the low word: squares mod 64 hit only 12 residues
    let low = (Limbs::new(n).rem_u64(64)) as u32;
    const SQUARES_MOD_64: u64 = {
        let mut mask = 0u64;
        let mut i = 0u64;
        while i < 64 {
            mask |= 1 << ((i * i) % 64);
            i += 1;
        }
        mask
    };
    if SQUARES_MOD_64 & (1 << low) == 0 {
        return false;
    }
    let r = n.sqrt();
    &r * &r == *n
}

/// Strong Fermat test to base 2 for odd `n >= 3`.
fn strong_base2(n: &BigUint) -> bool {
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().expect("n odd => n-1 even");
    let d = &n_minus_1 >> s;
    let mut x = BigUint::from(2u32).modpow(&d, n);
    if x == one || x == n_minus_1 {
        return true;
    }
    for _ in 1..s {
        x = &x * &x % n;
        if x == n_minus_1 {
            return true;
        }
        if x == one {
            return false;
        }
    }
    false
}

/// Jacobi symbol (a/m) for odd m > 0.
fn jacobi_u64(mut a: u64, mut m: u64) -> i32 {
    debug_assert!(m % 2 == 1);
    let mut t = 1i32;
    a %= m;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(m % 8, 3 | 5) {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut m);
        if a % 4 == 3 && m % 4 == 3 {
            t = -t;
        }
        a %= m;
    }
    if m == 1 {
        t
    } else {
        0
    }
}

/// Jacobi symbol (d/n) for a small odd |d| (possibly negative) and odd big n.
fn jacobi_small(d: i64, n_limbs: &Limbs) -> i32 {
    let a = d.unsigned_abs();
    debug_assert!(a % 2 == 1);
    let n_mod4 = n_limbs.rem_u64(4);
    let mut sign = 1i32;
    if d < 0 && n_mod4 == 3 {
        sign = -sign;
    }
    // reciprocity, both arguments odd
    if a % 4 == 3 && n_mod4 == 3 {
        sign = -sign;
    }
    sign * jacobi_u64(n_limbs.rem_u64(a.max(1)), a.max(1))
}

fn add_reduce(x: BigUint, n: &BigUint) -> BigUint {
    if &x >= n {
        x - n
    } else {
        x
    }
}

fn sub_mod(a: BigUint, b: &BigUint, n: &BigUint) -> BigUint {
    if a >= *b {
        a - b
    } else {
        a + n - b
    }
}

fn half_mod(x: BigUint, n: &BigUint) -> BigUint {
    if x.is_even() {
        x >> 1
    } else {
        (x + n) >> 1
    }
}

/// Strong Lucas probable-prime test with Selfridge's "method A" parameters:
/// D = 5, -7, 9, -11, ... until (D/n) = -1, then P = 1, Q = (1-D)/4.
/// Requires odd `n` with no factor below 1000 and not a perfect square.
fn strong_lucas_selfridge(n: &BigUint, n_limbs: &Limbs) -> bool {
    let mut d_abs: u64 = 5;
    let mut d_neg = false;
    loop {
        let d_signed = if d_neg { -(d_abs as i64) } else { d_abs as i64 };
        match jacobi_small(d_signed, n_limbs) {
            -1 => break,
            0 => return false, // gcd(|D|, n) > 1 and n > |D|
            _ => {}
        }
        d_neg = !d_neg;
        d_abs += 2;
        assert!(
            d_abs < 1 << 20,
            "Selfridge search ran away on a non-square input"
        );
    }
    let (q_abs, q_neg) = if d_neg {
        ((d_abs + 1) / 4, false)
    } else {
        ((d_abs - 1) / 4, true)
    };
    let to_residue = |abs: u64, neg: bool| -> BigUint {
        let a = BigUint::from(abs) % n;
        if neg && !a.is_zero() {
            n - a
        } else {
            a
        }
    };
    let d_res = to_residue(d_abs, d_neg);
    let q_res = to_residue(q_abs, q_neg);

    // n + 1 = d * 2^s, d odd
    let np1 = n + 1u32;
    let s = np1.trailing_zeros().expect("n odd => n+1 even");
    let d = &np1 >> s;

    // Walk the bits of d computing (U_k, V_k, Q^k); P = 1 keeps the
    // increment step to one multiply by D.
    let mut u = BigUint::one();
    let mut v = BigUint::one();
    let mut qk = q_res.clone();
    let bits = d.bits();
    for i in (0..bits - 1).rev() {
        // k -> 2k: U = U*V, V = V^2 - 2Q^k
        u = &u * &v % n;
        let vv = &v * &v % n;
        let two_qk = (&qk << 1) % n;
        v = sub_mod(vv, &two_qk, n);
        qk = &qk * &qk % n;
        if d.bit(i) {
            // k -> k+1: U' = (U + V)/2, V' = (D*U + V)/2
            let t1 = add_reduce(&u + &v, n);
            let du = &d_res * &u % n;
            let t2 = add_reduce(du + &v, n);
            u = half_mod(t1, n);
            v = half_mod(t2, n);
            qk = &qk * &q_res % n;
        }
    }

    // U_d = 0, or V_{d*2^r} = 0 for some 0 <= r < s
    if u.is_zero() || v.is_zero() {
        return true;
    }
    for _ in 1..s {
        let vv = &v * &v % n;
        let two_qk = (&qk << 1) % n;
        v = sub_mod(vv, &two_qk, n);
        if v.is_zero() {
            return true;
        }
        qk = &qk * &qk % n;
    }
    false
}

#[cfg(test)]
pub(crate) fn strong_lucas_for_tests(n: u64) -> bool {
    let big = BigUint::from(n);
    strong_lucas_selfridge(&big, &Limbs::new(&big))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Deterministic Miller-Rabin for n < 3,215,031,751 (bases 2, 3, 5, 7).
    fn miller_rabin_small(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        for p in [2u64, 3, 5, 7] {
            if n % p == 0 {
                return n == p;
            }
        }
        let d = (n - 1) >> (n - 1).trailing_zeros();
        'base: for a in [2u64, 3, 5, 7] {
            let mut x = 1u64;
            let mut base = a % n;
            let mut e = d;
            while e > 0 {
                if e & 1 == 1 {
                    x = ((x as u128 * base as u128) % n as u128) as u64;
                }
                base = ((base as u128 * base as u128) % n as u128) as u64;
                e >>= 1;
            }
            if x == 1 || x == n - 1 {
                continue;
            }
            let mut r = d;
            while r != n - 1 {
                x = ((x as u128 * x as u128) % n as u128) as u64;
                r <<= 1;
                if x == n - 1 {
                    continue 'base;
                }
            }
            return false;
        }
        true
    }

    #[test]
    fn tiny_values() {
        assert!(!is_probable_prime_u64(0));
        assert!(!is_probable_prime_u64(1));
        assert!(is_probable_prime_u64(2));
        assert!(is_probable_prime_u64(3));
        assert!(!is_probable_prime_u64(4));
        assert!(is_probable_prime_u64(997));
        assert!(!is_probable_prime_u64(999));
    }

    #[test]
    fn gap_of_96_after_360653() {
        assert!(is_probable_prime_u64(360_653));
        assert!(is_probable_prime_u64(360_749));
        for n in 360_654..360_749 {
            assert!(!is_probable_prime_u64(n), "{n} is composite");
        }
    }

    #[test]
    fn base2_pseudoprimes_fail_the_lucas_stage() {
        // 2047 = 23*89 and friends pass Miller-Rabin base 2 but not BPSW.
        for n in [2047u64, 3277, 4033, 4681, 8321, 15841, 29341, 42799, 49141] {
            assert!(strong_base2(&BigUint::from(n)), "{n} is a 2-SPSP");
            assert!(!is_probable_prime_u64(n), "{n} is composite");
        }
    }

    #[test]
    fn lucas_pseudoprimes_fail_the_base2_stage() {
        // Strong Lucas pseudoprimes under Selfridge's method.
        for n in [5459u64, 5777, 10877, 16109, 18971, 22499, 24569, 25199] {
            assert!(
                strong_lucas_for_tests(n),
                "{n} should pass the Lucas stage alone"
            );
            assert!(!is_probable_prime_u64(n), "{n} is composite");
        }
    }

    #[test]
    fn perfect_squares_are_composite() {
        for base in [1_000_003u64, 360_653, 104_729] {
            assert!(!is_probable_prime(&(BigUint::from(base) * base)));
        }
    }

    #[test]
    fn agrees_with_deterministic_miller_rabin_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100_000 {
            let n = rng.gen_range(2u64..3_000_000_000);
            assert_eq!(
                is_probable_prime_u64(n),
                miller_rabin_small(n),
                "disagreement at {n}"
            );
        }
    }

    #[test]
    fn large_known_prime_and_composite() {
        // 2^89 - 1 is a Mersenne prime; 2^87 - 1 = 3 * ... is composite.
        let m89 = (BigUint::one() << 89) - 1u32;
        assert!(is_probable_prime(&m89));
        let m87 = (BigUint::one() << 87) - 1u32;
        assert!(!is_probable_prime(&m87));
    }

    #[test]
    fn jacobi_matches_euler_criterion_for_prime_modulus() {
        // For odd prime m: (a/m) = a^((m-1)/2) mod m.
        for m in [3u64, 7, 11, 101, 997] {
            for a in 0..m {
                let mut pow = 1u64;
                let mut b = a;
                let mut e = (m - 1) / 2;
                while e > 0 {
                    if e & 1 == 1 {
                        pow = pow * b % m;
                    }
                    b = b * b % m;
                    e >>= 1;
                }
                let want = match pow {
                    0 => 0,
                    1 => 1,
                    _ => -1,
                };
                assert_eq!(jacobi_u64(a, m), want, "a={a} m={m}");
            }
        }
    }
}
