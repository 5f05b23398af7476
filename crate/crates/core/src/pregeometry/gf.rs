//! Vectors over a prime field packed into a single `u64`, coordinate `i`
//! stored as the base-q digit of weight `q^i`. For q = 2 this is a bitmask.

pub(crate) const MAX_DIM: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Field {
    q: u32,
    dim: u32,
    pow: Vec<u64>,
    inv: Vec<u8>,
}

impl Field {
    pub(crate) fn new(q: u32, dim: u32) -> Self {
        let mut pow = Vec::with_capacity(dim as usize + 1);
        let mut acc = 1u64;
        for _ in 0..=dim {
            pow.push(acc);
            acc = acc.saturating_mul(q as u64);
        }
        let inv = (0..q)
            .map(|a| {
                if a == 0 {
                    0
                } else {
                    (1..q).find(|b| (a * b) % q == 1).expect("q prime") as u8
                }
            })
            .collect();
        Field { q, dim, pow, inv }
    }

    #[inline]
    pub(crate) fn dim(&self) -> u32 {
        self.dim
    }

    #[inline]
    pub(crate) fn pow(&self, i: u32) -> u64 {
        self.pow[i as usize]
    }

    #[inline]
    pub(crate) fn binary(&self) -> bool {
        self.q == 2
    }

    #[inline]
    pub(crate) fn digit(&self, v: u64, i: u32) -> u8 {
        if self.binary() {
            ((v >> i) & 1) as u8
        } else {
            ((v / self.pow[i as usize]) % self.q as u64) as u8
        }
    }

    pub(crate) fn digits(&self, v: u64) -> Vec<u8> {
        (0..self.dim).map(|i| self.digit(v, i)).collect()
    }

    pub(crate) fn encode(&self, d: &[u8]) -> u64 {
        d.iter()
            .enumerate()
            .map(|(i, &x)| x as u64 * self.pow[i])
            .sum()
    }

    /// `c * a + b`.
    #[inline]
    pub(crate) fn axpy(&self, c: u8, a: u64, b: u64) -> u64 {
        if c == 0 {
            return b;
        }
        if self.binary() {
            return a ^ b;
        }
        let q = self.q as u64;
        let c = c as u64;
        let (mut a, mut b) = (a, b);
        let mut out = 0u64;
        let mut w = 1u64;
        while a != 0 || b != 0 {
            let d = ((a % q) * c + b % q) % q;
            out += d * w;
            w *= q;
            a /= q;
            b /= q;
        }
        out
    }

    #[inline]
    pub(crate) fn add(&self, a: u64, b: u64) -> u64 {
        self.axpy(1, a, b)
    }

    #[inline]
    pub(crate) fn scale(&self, c: u8, a: u64) -> u64 {
        self.axpy(c, a, 0)
    }

    /// Highest coordinate with a nonzero digit.
    #[inline]
    pub(crate) fn pivot(&self, v: u64) -> Option<u32> {
        if v == 0 {
            return None;
        }
        if self.binary() {
            return Some(63 - v.leading_zeros());
        }
        (0..self.dim).rev().find(|&i| self.digit(v, i) != 0)
    }

    /// Lowest coordinate with a nonzero digit.
    #[inline]
    pub(crate) fn lead(&self, v: u64) -> Option<u32> {
        if v == 0 {
            return None;
        }
        if self.binary() {
            return Some(v.trailing_zeros());
        }
        (0..self.dim).find(|&i| self.digit(v, i) != 0)
    }

    /// Scales `v` so that its lowest nonzero digit is 1.
    pub(crate) fn normalize_lead(&self, v: u64) -> u64 {
        match self.lead(v) {
            None => 0,
            Some(i) => {
                let d = self.digit(v, i);
                if d == 1 {
                    v
                } else {
                    self.scale(self.inv[d as usize], v)
                }
            }
        }
    }

    /// Reduces `v` against a reduced echelon basis.
    #[inline]
    pub(crate) fn reduce(&self, basis: &[u64], mut v: u64) -> u64 {
        for &row in basis {
            let p = self.pivot(row).expect("nonzero row");
            let d = self.digit(v, p);
            if d != 0 {
                v = self.axpy((self.q as u8) - d, row, v);
            }
        }
        v
    }

    /// Inserts `v` into a reduced echelon basis (rows sorted by descending
    /// pivot, pivot digit 1, pivot columns cleared in all other rows).
    /// Returns false when `v` is already in the span.
    pub(crate) fn insert(&self, basis: &mut Vec<u64>, v: u64) -> bool {
        let v = self.reduce(basis, v);
        let Some(p) = self.pivot(v) else {
            return false;
        };
        let d = self.digit(v, p);
        let v = if d == 1 { v } else { self.scale(self.inv[d as usize], v) };
        for row in basis.iter_mut() {
            let e = self.digit(*row, p);
            if e != 0 {
                *row = self.axpy((self.q as u8) - e, v, *row);
            }
        }
        let at = basis
            .iter()
            .position(|&r| self.pivot(r).expect("nonzero row") < p)
            .unwrap_or(basis.len());
        basis.insert(at, v);
        true
    }

    /// Calls `f` on every vector of the span, starting with zero.
    pub(crate) fn for_each_in_span(&self, basis: &[u64], mut f: impl FnMut(u64)) {
        let k = basis.len();
        if self.binary() {
            // Gray code walk.
            let mut v = 0u64;
            f(v);
            for step in 1u64..(1u64 << k) {
                let bit = step.trailing_zeros() as usize;
                v ^= basis[bit];
                f(v);
            }
            return;
        }
        let q = self.q as u8;
        let mut coeff = vec![0u8; k];
        let mut v = 0u64;
        f(v);
        loop {
            let mut i = 0;
            loop {
                if i == k {
                    return;
                }
                v = self.add(basis[i], v);
                coeff[i] += 1;
                if coeff[i] == q {
                    coeff[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
            f(v);
        }
    }
}
