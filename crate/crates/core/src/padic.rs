//! p-adic valuation, the last-nonzero-digit function `f_p`, and membership
//! certificates for the line classes `S^1_p` and `S^2_p`.

use std::fmt;

use crate::error::{Error, Result};

/// `nu_p(n)`; zero has infinite valuation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(u32),
    Infinite,
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(e) => write!(f, "{e}"),
            Valuation::Infinite => write!(f, "inf"),
        }
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn nu(p: u64, n: i64) -> Valuation {
    nu_wide(p, n as i128)
}

pub fn nu_wide(p: u64, mut n: i128) -> Valuation {
    if n == 0 {
        return Valuation::Infinite;
    }
    let p = p as i128;
    let mut e = 0;
    while n % p == 0 {
        n /= p;
        e += 1;
    }
    Valuation::Finite(e)
}

/// The final nonzero base-`p` digit of `n`, as a unit in `1..p`; `f_p(0) = 1`.
pub fn fp(p: u64, n: i64) -> u64 {
    fp_wide(p, n as i128)
}

pub fn fp_wide(p: u64, mut n: i128) -> u64 {
    if n == 0 {
        return 1;
    }
    let p = p as i128;
    while n % p == 0 {
        n /= p;
    }
    n.rem_euclid(p) as u64
}

/// Modular inverse of a unit mod `m` (both small).
pub fn inverse_mod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (r0 == 1).then(|| t0.rem_euclid(m as i128) as u64)
}

/// Board / class parameters: prime `p`, width `N = p^2`, class order `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PadicParams {
    p: u64,
    r: u32,
}

impl PadicParams {
    pub fn new(p: u64, r: u32) -> Result<Self> {
        if !is_prime(p) || p < 3 {
            return Err(Error::InvalidParams(format!("p = {p} must be a prime >= 3")));
        }
        if p > 255 {
            return Err(Error::InvalidParams(format!("p = {p} exceeds the cell range")));
        }
        if !(1..=2).contains(&r) {
            return Err(Error::InvalidParams(format!("class order r = {r} must be 1 or 2")));
        }
        Ok(PadicParams { p, r })
    }

    /// The `S^2_p` parameters used by the Sudoku.
    pub fn s2(p: u64) -> Result<Self> {
        Self::new(p, 2)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// `N = p^2`.
    pub fn width(&self) -> usize {
        (self.p * self.p) as usize
    }

    /// Modulus of the exempt coset: `p^r`.
    pub fn exempt_modulus(&self) -> u64 {
        self.p.pow(self.r)
    }

    pub fn is_unit(&self, v: u64) -> bool {
        (1..self.p).contains(&v)
    }
}

/// Membership certificate for a line function on `{1, ..., N}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Certificate {
    Constant(u8),
    /// `g(n) = h * f_p(n - t)` for every `n` off `t + p^r Z`; `t` is stored mod `p^2`.
    Affine { t: u64, h: u8 },
}

impl Certificate {
    /// Whether position `n` lies in the exempt coset.
    pub fn is_exempt(&self, params: &PadicParams, n: usize) -> bool {
        match *self {
            Certificate::Constant(_) => false,
            Certificate::Affine { t, .. } => {
                let m = params.exempt_modulus();
                (n as u64 % m) == t % m
            }
        }
    }

    /// Positions `1..=N` exempted from the defining equation.
    pub fn exceptional(&self, params: &PadicParams) -> Vec<usize> {
        (1..=params.width())
            .filter(|&n| self.is_exempt(params, n))
            .collect()
    }

    /// Value the certificate prescribes at `n`, `None` in the exempt coset.
    pub fn predict(&self, params: &PadicParams, n: usize) -> Option<u8> {
        match *self {
            Certificate::Constant(c) => Some(c),
            Certificate::Affine { t, h } => {
                if self.is_exempt(params, n) {
                    None
                } else {
                    let v = fp(params.p, n as i64 - t as i64);
                    Some(((h as u64 * v) % params.p) as u8)
                }
            }
        }
    }

    /// Re-checks the certificate against visible cells.
    pub fn verify(&self, params: &PadicParams, line: &[Option<u8>]) -> bool {
        line.iter().enumerate().all(|(k, v)| match v {
            None => true,
            Some(v) => match self.predict(params, k + 1) {
                None => true,
                Some(expected) => expected == *v,
            },
        })
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::Constant(c) => write!(f, "constant c={c}"),
            Certificate::Affine { t, h } => write!(f, "affine t={t} h={h}"),
        }
    }
}

/// Precomputed `f_p` on nonzero residues mod `p^2`, and `x mod p`
/// for the `r = 1` class.
#[derive(Clone, Debug)]
pub struct Classifier {
    params: PadicParams,
    /// `table[x] = f_p(x)` for `x` in `1..p^2`.
    table: Vec<u8>,
}

impl Classifier {
    pub fn new(params: PadicParams) -> Self {
        let n = params.width();
        let table = (0..n)
            .map(|x| if x == 0 { 0 } else { fp(params.p, x as i64) as u8 })
            .collect();
        Classifier { params, table }
    }

    pub fn params(&self) -> &PadicParams {
        &self.params
    }

    /// `f_p(n - t)` for `n` off `t + p^2 Z` (r = 2) or the unit `(n - t) mod p`
    /// for `n` off `t + pZ` (r = 1). `None` inside the exempt coset.
    #[inline]
    fn base_value(&self, n: usize, t: usize) -> Option<u8> {
        let w = self.params.width();
        let d = (n + w - t % w) % w;
        let v = match self.params.r {
            2 => self.table[d],
            _ => (d as u64 % self.params.p) as u8,
        };
        (v != 0).then_some(v)
    }

    /// Classifies a (possibly partially visible) line. Returns the
    /// lexicographically least certificate; constancy wins ties.
    pub fn classify_partial(&self, line: &[Option<u8>]) -> Option<Certificate> {
        let p = self.params.p;
        let mut visible = line.iter().enumerate().filter_map(|(k, v)| v.map(|v| (k + 1, v)));
        let Some((_, first)) = visible.clone().next() else {
            return Some(Certificate::Constant(1));
        };
        if visible.all(|(_, v)| v == first) {
            return Some(Certificate::Constant(first));
        }
        let w = self.params.width();
        't: for t in 0..w {
            let mut h: Option<u64> = None;
            for (k, v) in line.iter().enumerate() {
                let Some(v) = *v else { continue };
                let Some(base) = self.base_value(k + 1, t) else {
                    continue;
                };
                match h {
                    None => {
                        // h = v / base in (Z/p)^x
                        let inv = inverse_mod(base as u64, p).expect("unit");
                        h = Some((v as u64 * inv) % p);
                    }
                    Some(h) => {
                        if (h * base as u64) % p != v as u64 {
                            continue 't;
                        }
                    }
                }
            }
            return Some(Certificate::Affine {
                t: t as u64,
                h: h.unwrap_or(1) as u8,
            });
        }
        None
    }

    pub fn classify(&self, line: &[u8]) -> Option<Certificate> {
        let visible: Vec<Option<u8>> = line.iter().map(|&v| Some(v)).collect();
        self.classify_partial(&visible)
    }
}

/// Validated values of a line `g: {1..N} -> (Z/p)^x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineFunction {
    values: Vec<u8>,
}

impl LineFunction {
    pub fn new(params: &PadicParams, values: Vec<u8>) -> Result<Self> {
        if values.len() != params.width() {
            return Err(Error::InvalidParams(format!(
                "line has {} values, expected N = {}",
                values.len(),
                params.width()
            )));
        }
        if let Some(&v) = values.iter().find(|&&v| !params.is_unit(v as u64)) {
            return Err(Error::ValueOutOfRange {
                value: v as i64,
                max: params.p - 1,
            });
        }
        Ok(LineFunction { values })
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }
}

/// Classifies a full line; `None` means the line is not a member.
pub fn classify(params: &PadicParams, g: &LineFunction) -> Option<Certificate> {
    Classifier::new(*params).classify(g.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Repeated-division oracle kept separate from `fp`.
    fn fp_oracle(p: i64, n: i64) -> i64 {
        if n == 0 {
            return 1;
        }
        let mut m = n;
        loop {
            let q = m / p;
            if q * p != m {
                break;
            }
            m = q;
        }
        ((m % p) + p) % p
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(nu(5, 10), Valuation::Finite(1));
        assert_eq!(nu(5, 0), Valuation::Infinite);
        assert_eq!(nu(5, 50), Valuation::Finite(2));
        assert_eq!(nu(5, -125), Valuation::Finite(3));
        assert_eq!(nu(5, 7), Valuation::Finite(0));
    }

    #[test]
    fn fp_examples() {
        assert_eq!(fp(5, 0), 1);
        assert_eq!(fp(5, 10), 2);
        assert_eq!(fp(5, -1), 4);
        assert_eq!(fp(5, 50), 2);
        assert_eq!(fp(3, -9), 2);
    }

    #[test]
    fn functional_equations_near_origin() {
        for p in [2u64, 3, 5, 7] {
            for n in -5000i64..=5000 {
                assert_eq!(fp(p, n) as i64, fp_oracle(p as i64, n));
                if n % p as i64 != 0 {
                    assert_eq!(fp(p, n) as i64, n.rem_euclid(p as i64));
                }
                assert_eq!(fp(p, p as i64 * n), fp(p, n));
            }
        }
    }

    #[test]
    fn quasi_periodicity() {
        let p = 5i64;
        for j in 0..4u32 {
            let pj = p.pow(j);
            for n in -3000i64..=3000 {
                if n % pj != 0 {
                    assert_eq!(fp(5, n + pj), fp(5, n), "j={j} n={n}");
                }
            }
        }
    }

    #[test]
    fn inverse_mod_works() {
        assert_eq!(inverse_mod(2, 5), Some(3));
        assert_eq!(inverse_mod(3, 25), Some(17));
        assert_eq!(inverse_mod(5, 25), None);
    }

    #[test]
    fn params_validation() {
        assert!(PadicParams::new(4, 2).is_err());
        assert!(PadicParams::new(2, 2).is_err());
        assert!(PadicParams::new(5, 3).is_err());
        let pp = PadicParams::s2(5).unwrap();
        assert_eq!(pp.width(), 25);
        assert_eq!(pp.exempt_modulus(), 25);
    }

    #[test]
    fn classify_examples() {
        let params = PadicParams::s2(5).unwrap();
        let line = LineFunction::new(&params, vec![3; 25]).unwrap();
        assert_eq!(classify(&params, &line), Some(Certificate::Constant(3)));

        let fp_line: Vec<u8> = (1..=25).map(|n| fp(5, n) as u8).collect();
        let line = LineFunction::new(&params, fp_line).unwrap();
        assert_eq!(
            classify(&params, &line),
            Some(Certificate::Affine { t: 0, h: 1 })
        );

        // g(n) = 2 f_5(n - 7), with an arbitrary value on the exempt cell.
        let mut shifted: Vec<u8> = (1..=25).map(|n| ((2 * fp(5, n - 7)) % 5) as u8).collect();
        shifted[6] = 4;
        let line = LineFunction::new(&params, shifted).unwrap();
        let cert = classify(&params, &line).unwrap();
        assert_eq!(cert, Certificate::Affine { t: 7, h: 2 });
        assert_eq!(cert.exceptional(&params), vec![7]);
    }

    #[test]
    fn classify_rejects_non_member() {
        let params = PadicParams::s2(5).unwrap();
        let mut v: Vec<u8> = (1..=25).map(|n| fp(5, n) as u8).collect();
        v[1] = 1; // n = 2
        v[2] = 1; // n = 3
        let line = LineFunction::new(&params, v).unwrap();
        assert_eq!(classify(&params, &line), None);
    }

    #[test]
    fn line_function_validation() {
        let params = PadicParams::s2(3).unwrap();
        assert!(LineFunction::new(&params, vec![1; 8]).is_err());
        assert!(matches!(
            LineFunction::new(&params, vec![0; 9]),
            Err(Error::ValueOutOfRange { .. })
        ));
    }

    #[test]
    fn s1_class_is_weaker() {
        // Off n = 0 mod 3 this is affine, but the p^2 structure is broken.
        let params2 = PadicParams::new(3, 2).unwrap();
        let params1 = PadicParams::new(3, 1).unwrap();
        let v: Vec<u8> = (1..=9i64)
            .map(|n| if n % 3 == 0 { 1 } else { (n % 3) as u8 })
            .collect();
        // f_3 would put 2 at n = 6.
        assert_eq!(Classifier::new(params2).classify(&v), None);
        assert_eq!(
            Classifier::new(params1).classify(&v),
            Some(Certificate::Affine { t: 0, h: 1 })
        );
    }

    #[test]
    fn partial_lines() {
        let c = Classifier::new(PadicParams::s2(3).unwrap());
        let mut line = vec![None; 9];
        assert_eq!(c.classify_partial(&line), Some(Certificate::Constant(1)));
        line[0] = Some(2);
        line[4] = Some(2);
        assert_eq!(c.classify_partial(&line), Some(Certificate::Constant(2)));
        line[4] = Some(1);
        let cert = c.classify_partial(&line).unwrap();
        assert!(cert.verify(c.params(), &line));
    }

    proptest! {
        #[test]
        fn complete_multiplicativity(m in -1_000_000i64..1_000_000, n in -1_000_000i64..1_000_000) {
            prop_assume!(m != 0 && n != 0);
            let p = 7;
            prop_assert_eq!(fp(p, m * n), (fp(p, m) * fp(p, n)) % p);
        }

        #[test]
        fn dependence_locality(t in -200i64..200, h in 1u64..5, k in -20i64..20, n in 1i64..=25) {
            // h f_p(n - t) off the exempt coset depends only on (n - t) mod p^2.
            prop_assume!((n - t).rem_euclid(25) != 0);
            let shifted = n + 25 * k;
            prop_assert_eq!((h * fp(5, n - t)) % 5, (h * fp(5, shifted - t)) % 5);
        }

        #[test]
        fn returned_certificates_reverify(v in proptest::collection::vec(1u8..5, 25)) {
            let params = PadicParams::s2(5).unwrap();
            let c = Classifier::new(params);
            if let Some(cert) = c.classify(&v) {
                let line: Vec<Option<u8>> = v.iter().map(|&x| Some(x)).collect();
                prop_assert!(cert.verify(&params, &line));
            }
        }
    }
}
