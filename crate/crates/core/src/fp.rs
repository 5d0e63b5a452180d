//! Scalar arithmetic in F_p. The primes here are tiny (2, 3, 5) so plain
//! modular arithmetic with Fermat inversion is all we need.

pub fn norm(p: u32, a: i64) -> u32 {
    a.rem_euclid(p as i64) as u32
}

pub fn add(p: u32, a: u32, b: u32) -> u32 {
    (a + b) % p
}

pub fn sub(p: u32, a: u32, b: u32) -> u32 {
    (a + p - (b % p)) % p
}

pub fn mul(p: u32, a: u32, b: u32) -> u32 {
    (a as u64 * b as u64 % p as u64) as u32
}

pub fn neg(p: u32, a: u32) -> u32 {
    (p - a % p) % p
}

pub fn pow(p: u32, a: u32, mut e: u32) -> u32 {
    let mut base = a % p;
    let mut acc = 1u32;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(p, acc, base);
        }
        base = mul(p, base, base);
        e >>= 1;
    }
    acc
}

/// Multiplicative inverse of a nonzero residue.
pub fn inv(p: u32, a: u32) -> u32 {
    debug_assert!(a % p != 0);
    pow(p, a, p - 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_over_small_primes() {
        for p in [2u32, 3, 5, 7] {
            for a in 1..p {
                assert_eq!(mul(p, a, inv(p, a)), 1, "p={p} a={a}");
            }
        }
    }

    #[test]
    fn norm_handles_negatives() {
        assert_eq!(norm(3, -1), 2);
        assert_eq!(norm(2, -7), 1);
        assert_eq!(norm(5, 10), 0);
    }
}
