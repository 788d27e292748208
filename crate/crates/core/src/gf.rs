//! Finite-field arithmetic and ranks of 0/1 matrices.
//!
//! [`GaloisField`] covers the prime fields GF(p) and the binary extension
//! fields GF(2^m) in polynomial basis. Fields of order up to 2^16 keep
//! log/antilog tables, so multiplication and inversion are table lookups.

use std::fmt;

use crate::bitset::BitSet;
use crate::error::{Error, Result};

/// Primitive polynomials over GF(2), indexed by degree (bit i = coefficient of x^i).
const DEFAULT_MODULI: [u32; 17] = [
    0,
    0b11,
    0b111,
    0b1011,
    0b1_0011,
    0b10_0101,
    0b100_0011,
    0b1000_1001,
    0b1_0001_1101,
    0b10_0001_0001,
    0b100_0000_1001,
    0b1000_0000_0101,
    0b1_0000_0101_0011,
    0b10_0000_0001_1011,
    0b100_0100_0100_0011,
    0b1000_0000_0000_0011,
    0b1_0001_0000_0000_1011,
];

/// An element of a finite field together with the identity of its field.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u32,
    order: u32,
    modulus: u32,
}

impl FieldElement {
    /// Polynomial-basis bits (binary fields) or residue (prime fields).
    pub fn value(&self) -> u32 {
        self.value
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@GF({})", self.value, self.order)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Kind {
    Prime,
    Binary { degree: u32 },
}

/// GF(p) or GF(2^m), with log/antilog tables.
#[derive(Clone, Debug)]
pub struct GaloisField {
    order: u32,
    characteristic: u32,
    /// Reduction polynomial for binary fields, `p` for prime fields.
    modulus: u32,
    kind: Kind,
    generator: u32,
    log: Vec<u32>,
    exp: Vec<u32>,
}

impl PartialEq for GaloisField {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.modulus == other.modulus
    }
}

impl Eq for GaloisField {}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn poly_degree(p: u64) -> i32 {
    63 - p.leading_zeros() as i32
}

fn poly_mod(mut a: u64, m: u64) -> u64 {
    let dm = poly_degree(m);
    while a != 0 && poly_degree(a) >= dm {
        a ^= m << (poly_degree(a) - dm);
    }
    a
}

/// Irreducibility over GF(2) by trial division.
pub fn is_irreducible_gf2(poly: u32) -> bool {
    let p = poly as u64;
    let d = poly_degree(p);
    if d < 1 {
        return false;
    }
    for divisor in 2u64..(1u64 << (d / 2 + 1)) {
        if poly_degree(divisor) >= 1 && poly_degree(divisor) <= d / 2 && poly_mod(p, divisor) == 0 {
            return false;
        }
    }
    true
}

fn binary_mul_slow(mut a: u32, mut b: u32, modulus: u32, degree: u32) -> u32 {
    let mut acc = 0u32;
    let top = 1u32 << degree;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & top != 0 {
            a ^= modulus;
        }
    }
    acc
}

impl GaloisField {
    /// GF(2^m) with the default primitive modulus (x^4 + x + 1 for m = 4).
    pub fn binary(degree: u32) -> Result<Self> {
        if !(1..=16).contains(&degree) {
            return Err(Error::Parameter(format!("GF(2^{degree}) not supported; need 1 <= m <= 16")));
        }
        Self::binary_with_modulus(degree, DEFAULT_MODULI[degree as usize])
    }

    /// GF(2^m) reduced by an explicit irreducible polynomial of degree `m`.
    pub fn binary_with_modulus(degree: u32, modulus: u32) -> Result<Self> {
        if !(1..=16).contains(&degree) {
            return Err(Error::Parameter(format!("GF(2^{degree}) not supported; need 1 <= m <= 16")));
        }
        if poly_degree(modulus as u64) != degree as i32 || !is_irreducible_gf2(modulus) {
            return Err(Error::Parameter(format!(
                "modulus {modulus:#b} is not an irreducible polynomial of degree {degree}"
            )));
        }
        let order = 1u32 << degree;
        let mul = |a, b| binary_mul_slow(a, b, modulus, degree);
        let generator = if order == 2 {
            1
        } else {
            (2..order).find(|&g| Self::element_order(g, order, &mul) == order - 1).unwrap_or(1)
        };
        let (log, exp) = Self::tables(generator, order, &mul);
        Ok(GaloisField { order, characteristic: 2, modulus, kind: Kind::Binary { degree }, generator, log, exp })
    }

    pub fn prime(p: u32) -> Result<Self> {
        if !is_prime(p) || p > 65_521 {
            return Err(Error::Parameter(format!("{p} is not a supported prime")));
        }
        let mul = |a: u32, b: u32| ((a as u64 * b as u64) % p as u64) as u32;
        let generator = (1..p).find(|&g| Self::element_order(g, p, &mul) == p - 1).unwrap_or(1);
        let (log, exp) = Self::tables(generator, p, &mul);
        Ok(GaloisField { order: p, characteristic: p, modulus: p, kind: Kind::Prime, generator, log, exp })
    }

    /// Field of order `q`, where `q` is prime or a power of two.
    pub fn of_order(q: u32) -> Result<Self> {
        if q >= 2 && q.is_power_of_two() {
            Self::binary(q.trailing_zeros())
        } else if is_prime(q) {
            Self::prime(q)
        } else {
            Err(Error::Parameter(format!("no field context available for order {q}")))
        }
    }

    fn element_order(g: u32, order: u32, mul: &impl Fn(u32, u32) -> u32) -> u32 {
        let mut x = g;
        let mut n = 1;
        while x != 1 {
            x = mul(x, g);
            n += 1;
            if n > order {
                return 0;
            }
        }
        n
    }

    fn tables(generator: u32, order: u32, mul: &impl Fn(u32, u32) -> u32) -> (Vec<u32>, Vec<u32>) {
        let n = (order - 1) as usize;
        let mut exp = vec![0u32; 2 * n.max(1)];
        let mut log = vec![0u32; order as usize];
        let mut x = 1u32;
        for i in 0..n {
            exp[i] = x;
            exp[i + n] = x;
            log[x as usize] = i as u32;
            x = mul(x, generator);
        }
        if n == 0 {
            exp[0] = 1;
        }
        (log, exp)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn characteristic(&self) -> u32 {
        self.characteristic
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// Extension degree over the prime field.
    pub fn degree(&self) -> u32 {
        match self.kind {
            Kind::Prime => 1,
            Kind::Binary { degree } => degree,
        }
    }

    /// A generator of the multiplicative group.
    pub fn primitive(&self) -> FieldElement {
        self.wrap(self.generator)
    }

    /// The element `x` of the polynomial basis; for GF(p), the primitive root.
    pub fn alpha(&self) -> FieldElement {
        match self.kind {
            Kind::Binary { degree } if degree > 1 => self.wrap(2),
            _ => self.primitive(),
        }
    }

    pub fn element(&self, value: u32) -> Result<FieldElement> {
        if value >= self.order {
            return Err(Error::Parameter(format!("{value} is not an element of GF({})", self.order)));
        }
        Ok(self.wrap(value))
    }

    pub fn zero(&self) -> FieldElement {
        self.wrap(0)
    }

    pub fn one(&self) -> FieldElement {
        self.wrap(1)
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.order).map(|v| self.wrap(v))
    }

    fn wrap(&self, value: u32) -> FieldElement {
        FieldElement { value, order: self.order, modulus: self.modulus }
    }

    fn check(&self, a: &FieldElement) -> Result<()> {
        if a.order != self.order || a.modulus != self.modulus {
            return Err(Error::Context(format!(
                "element of GF({}) (modulus {:#b}) used in GF({}) (modulus {:#b})",
                a.order, a.modulus, self.order, self.modulus
            )));
        }
        Ok(())
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        self.check(&a)?;
        self.check(&b)?;
        Ok(self.wrap(self.add_raw(a.value, b.value)))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        self.check(&a)?;
        self.check(&b)?;
        Ok(self.wrap(self.mul_raw(a.value, b.value)))
    }

    pub fn inverse(&self, a: FieldElement) -> Result<FieldElement> {
        self.check(&a)?;
        if a.value == 0 {
            return Err(Error::DivisionByZero(self.order));
        }
        Ok(self.wrap(self.inv_raw(a.value)))
    }

    pub fn pow(&self, a: FieldElement, e: u64) -> Result<FieldElement> {
        self.check(&a)?;
        Ok(self.wrap(self.pow_raw(a.value, e)))
    }

    /// Multiplicative order of a nonzero element.
    pub fn multiplicative_order(&self, a: FieldElement) -> Result<u32> {
        self.check(&a)?;
        if a.value == 0 {
            return Err(Error::DivisionByZero(self.order));
        }
        let n = self.order - 1;
        let l = self.log[a.value as usize];
        Ok(n / gcd(n, l))
    }

    // Unchecked arithmetic on raw values, used by the geometry code.

    #[inline]
    pub fn add_raw(&self, a: u32, b: u32) -> u32 {
        match self.kind {
            Kind::Binary { .. } => a ^ b,
            Kind::Prime => (a + b) % self.order,
        }
    }

    #[inline]
    pub fn neg_raw(&self, a: u32) -> u32 {
        match self.kind {
            Kind::Binary { .. } => a,
            Kind::Prime => (self.order - a) % self.order,
        }
    }

    #[inline]
    pub fn sub_raw(&self, a: u32, b: u32) -> u32 {
        self.add_raw(a, self.neg_raw(b))
    }

    #[inline]
    pub fn mul_raw(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
    }

    /// Inverse of a nonzero raw value.
    #[inline]
    pub fn inv_raw(&self, a: u32) -> u32 {
        let n = self.order - 1;
        self.exp[((n - self.log[a as usize]) % n.max(1)) as usize]
    }

    pub fn pow_raw(&self, a: u32, e: u64) -> u32 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let n = (self.order - 1) as u64;
        self.exp[((self.log[a as usize] as u64 * (e % n)) % n) as usize]
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A dense 0/1 matrix stored as bit-packed rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BitSet>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BinaryMatrix { rows, cols, data: vec![BitSet::new(cols); rows] }
    }

    pub fn from_rows(cols: usize, rows: Vec<BitSet>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.capacity() != cols) {
            return Err(Error::Structural(format!("row of width {} in a {cols}-column matrix", bad.capacity())));
        }
        Ok(BinaryMatrix { rows: rows.len(), cols, data: rows })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r].contains(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        if value {
            self.data[r].insert(c);
        } else {
            self.data[r].remove(c);
        }
    }

    pub fn row(&self, r: usize) -> &BitSet {
        &self.data[r]
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.data.iter().map(BitSet::count).collect()
    }

    pub fn col_sums(&self) -> Vec<usize> {
        let mut sums = vec![0; self.cols];
        for row in &self.data {
            for c in row {
                sums[c] += 1;
            }
        }
        sums
    }

    pub fn transpose(&self) -> BinaryMatrix {
        let mut t = BinaryMatrix::zeros(self.cols, self.rows);
        for (r, row) in self.data.iter().enumerate() {
            for c in row {
                t.data[c].insert(r);
            }
        }
        t
    }

    /// Rank over GF(p).
    pub fn p_rank(&self, p: u32) -> Result<usize> {
        p_rank(self, p)
    }
}

/// Rank of a 0/1 matrix over GF(p).
///
/// p = 2 runs word-level XOR elimination on the packed rows; other primes
/// use scalar elimination mod p.
pub fn p_rank(m: &BinaryMatrix, p: u32) -> Result<usize> {
    if !is_prime(p) {
        return Err(Error::Parameter(format!("{p} is not prime")));
    }
    if p == 2 {
        Ok(rank_gf2(m.data.clone(), m.cols))
    } else {
        let rows: Vec<Vec<u32>> = m.data.iter().map(|r| (0..m.cols).map(|c| r.contains(c) as u32).collect()).collect();
        Ok(rank_mod_p(rows, m.cols, p))
    }
}

fn rank_gf2(mut rows: Vec<BitSet>, cols: usize) -> usize {
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r].contains(col)) else {
            continue;
        };
        rows.swap(rank, pivot);
        let (head, tail) = rows.split_at_mut(rank + 1);
        let pivot_row = &head[rank];
        let w = col >> 6;
        let bit = 1u64 << (col & 63);
        for row in tail.iter_mut() {
            if row.words()[w] & bit != 0 {
                row.xor_with_from(pivot_row, w);
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

fn rank_mod_p(mut rows: Vec<Vec<u32>>, cols: usize, p: u32) -> usize {
    let field_inv = |a: u32| -> u32 {
        // Fermat inverse; p is prime.
        let mut result = 1u64;
        let mut base = a as u64 % p as u64;
        let mut e = p as u64 - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = result * base % p as u64;
            }
            base = base * base % p as u64;
            e >>= 1;
        }
        result as u32
    };
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_multiple_of(p)) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = field_inv(rows[rank][col]);
        for c in col..cols {
            rows[rank][c] = (rows[rank][c] as u64 * inv as u64 % p as u64) as u32;
        }
        for r in rank + 1..rows.len() {
            let f = rows[r][col] % p;
            if f != 0 {
                for c in col..cols {
                    let sub = f as u64 * rows[rank][c] as u64 % p as u64;
                    rows[r][c] = ((rows[r][c] as u64 + p as u64 - sub) % p as u64) as u32;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Carry-less multiply then reduce; independent of the log tables.
    fn clmul_reduce(a: u32, b: u32, modulus: u32) -> u32 {
        let mut prod = 0u64;
        for i in 0..32 {
            if b >> i & 1 == 1 {
                prod ^= (a as u64) << i;
            }
        }
        poly_mod(prod, modulus as u64) as u32
    }

    fn naive_rank_mod2(rows: &[Vec<u8>]) -> usize {
        let mut m: Vec<Vec<u8>> = rows.to_vec();
        let cols = m.first().map_or(0, Vec::len);
        let mut rank = 0;
        for c in 0..cols {
            if let Some(p) = (rank..m.len()).find(|&r| m[r][c] == 1) {
                m.swap(rank, p);
                for r in 0..m.len() {
                    if r != rank && m[r][c] == 1 {
                        for k in 0..cols {
                            m[r][k] ^= m[rank][k];
                        }
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    fn fano_rows() -> Vec<Vec<u8>> {
        let lines = [[0, 1, 3], [1, 2, 4], [2, 3, 5], [3, 4, 6], [4, 5, 0], [5, 6, 1], [6, 0, 2]];
        (0..7).map(|p| lines.iter().map(|l| l.contains(&p) as u8).collect()).collect()
    }

    fn to_matrix(rows: &[Vec<u8>]) -> BinaryMatrix {
        let cols = rows[0].len();
        BinaryMatrix::from_rows(
            cols,
            rows.iter()
                .map(|r| BitSet::from_indices(cols, r.iter().enumerate().filter(|(_, &x)| x == 1).map(|(i, _)| i)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn gf16_alpha_times_alpha14_is_one() {
        let f = GaloisField::binary(4).unwrap();
        assert_eq!(f.modulus(), 0b1_0011);
        // Oracle powers of x by repeated carry-less multiplication.
        let mut powers = vec![1u32];
        for _ in 1..16 {
            powers.push(clmul_reduce(*powers.last().unwrap(), 2, 0b1_0011));
        }
        assert_eq!(powers[15], 1);
        assert!(powers[1..15].iter().all(|&p| p != 1));
        let a = f.alpha();
        let a14 = f.element(powers[14]).unwrap();
        assert_eq!(f.mul(a, a14).unwrap(), f.one());
        assert_eq!(f.pow(a, 14).unwrap(), a14);
    }

    #[test]
    fn tables_match_carryless_multiplication() {
        for m in 1..=8 {
            let f = GaloisField::binary(m).unwrap();
            for a in 0..f.order() {
                for b in 0..f.order() {
                    assert_eq!(f.mul_raw(a, b), clmul_reduce(a, b, f.modulus()), "m={m} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn zero_absorbs_and_one_is_identity() {
        let f = GaloisField::binary(4).unwrap();
        for b in f.elements() {
            assert_eq!(f.mul(f.zero(), b).unwrap(), f.zero());
            assert_eq!(f.mul(f.one(), b).unwrap(), b);
        }
    }

    #[test]
    fn inverses() {
        let f = GaloisField::binary(4).unwrap();
        assert_eq!(f.inverse(f.one()).unwrap(), f.one());
        let a = f.alpha();
        let found: Vec<_> = f.elements().filter(|&x| f.mul(a, x).unwrap() == f.one()).collect();
        assert_eq!(found, vec![f.pow(a, 14).unwrap()]);
        assert_eq!(f.inverse(a).unwrap(), found[0]);

        let g4 = GaloisField::binary_with_modulus(2, 0b111).unwrap();
        // x(x+1) = x^2 + x = 1 mod x^2 + x + 1
        assert_eq!(g4.inverse(g4.alpha()).unwrap().value(), 0b11);
        assert!(matches!(f.inverse(f.zero()), Err(Error::DivisionByZero(16))));
    }

    #[test]
    fn mismatched_contexts_are_rejected() {
        let f16 = GaloisField::binary(4).unwrap();
        let other16 = GaloisField::binary_with_modulus(4, 0b1_1001).unwrap();
        let f8 = GaloisField::binary(3).unwrap();
        assert!(matches!(f16.mul(f16.one(), f8.one()), Err(Error::Context(_))));
        assert!(matches!(f16.mul(other16.alpha(), f16.one()), Err(Error::Context(_))));
        assert!(matches!(f16.inverse(f8.one()), Err(Error::Context(_))));
    }

    #[test]
    fn reducible_modulus_rejected() {
        // x^4 + x^2 + 1 = (x^2 + x + 1)^2
        assert!(GaloisField::binary_with_modulus(4, 0b1_0101).is_err());
        assert!(GaloisField::binary_with_modulus(4, 0b1011).is_err());
        assert!(GaloisField::of_order(9).is_err());
        assert!(GaloisField::of_order(6).is_err());
    }

    #[test]
    fn no_zero_divisors_small_fields() {
        for m in 1..=4 {
            let f = GaloisField::binary(m).unwrap();
            for a in 1..f.order() {
                for b in 1..f.order() {
                    assert_ne!(f.mul_raw(a, b), 0);
                }
            }
        }
    }

    #[test]
    fn gf16_multiplicative_group_is_cyclic_of_order_15() {
        let f = GaloisField::binary(4).unwrap();
        let orders: Vec<u32> = f.elements().skip(1).map(|x| f.multiplicative_order(x).unwrap()).collect();
        assert!(orders.contains(&15));
        assert!(orders.iter().all(|o| 15 % o == 0));
        assert_eq!(f.multiplicative_order(f.alpha()).unwrap(), 15);
    }

    #[test]
    fn prime_field_arithmetic() {
        let f = GaloisField::prime(7).unwrap();
        for a in 1..7 {
            assert_eq!(f.mul_raw(a, f.inv_raw(a)), 1);
            assert_eq!(f.add_raw(a, f.neg_raw(a)), 0);
        }
        assert_eq!(f.mul_raw(3, 5), 1);
    }

    #[test]
    fn rank_identity_and_fano() {
        let mut id = BinaryMatrix::zeros(3, 3);
        for i in 0..3 {
            id.set(i, i, true);
        }
        assert_eq!(p_rank(&id, 2).unwrap(), 3);
        assert_eq!(p_rank(&id, 3).unwrap(), 3);

        let rows = fano_rows();
        let oracle = naive_rank_mod2(&rows);
        assert_eq!(oracle, 4);
        let m = to_matrix(&rows);
        assert_eq!(m.p_rank(2).unwrap(), 4);
        assert_eq!(m.transpose().p_rank(2).unwrap(), 4);
        // Mod 3: every line sum is 3, so the all-ones vector is in the kernel,
        // while N N^T = 2I + J keeps rank >= 6.
        assert_eq!(m.p_rank(3).unwrap(), 6);
    }

    #[test]
    fn rank_rejects_non_prime() {
        let m = BinaryMatrix::zeros(2, 2);
        assert!(matches!(p_rank(&m, 4), Err(Error::Parameter(_))));
        assert!(matches!(p_rank(&m, 1), Err(Error::Parameter(_))));
    }

    proptest! {
        #[test]
        fn rank_matches_naive_and_is_permutation_invariant(
            rows in prop::collection::vec(prop::collection::vec(0u8..2, 70), 1..20),
            seed in any::<u64>(),
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let m = to_matrix(&rows);
            let r = m.p_rank(2).unwrap();
            prop_assert_eq!(r, naive_rank_mod2(&rows));
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let mut rp: Vec<usize> = (0..rows.len()).collect();
            rp.shuffle(&mut rng);
            let mut cp: Vec<usize> = (0..70).collect();
            cp.shuffle(&mut rng);
            let permuted: Vec<Vec<u8>> = rp.iter().map(|&i| cp.iter().map(|&j| rows[i][j]).collect()).collect();
            prop_assert_eq!(to_matrix(&permuted).p_rank(2).unwrap(), r);
            prop_assert_eq!(m.transpose().p_rank(2).unwrap(), r);
        }
    }
}
