use crate::error::{Error, Result};

pub fn is_prime(q: u32) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= q as u64 {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Arithmetic in the prime field `F_q`; elements are `u32` values in `[0, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    q: u32,
}

impl PrimeField {
    pub fn new(q: u32) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::arg("q", format!("{q} is not prime")));
        }
        Ok(PrimeField { q })
    }

    pub fn order(self) -> u32 {
        self.q
    }

    pub fn reduce(self, a: u64) -> u32 {
        (a % self.q as u64) as u32
    }

    pub fn add(self, a: u32, b: u32) -> u32 {
        ((a as u64 + b as u64) % self.q as u64) as u32
    }

    pub fn sub(self, a: u32, b: u32) -> u32 {
        ((a as u64 + self.q as u64 - b as u64) % self.q as u64) as u32
    }

    pub fn neg(self, a: u32) -> u32 {
        self.sub(0, a)
    }

    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.q as u64) as u32
    }

    pub fn pow(self, mut a: u32, mut e: u64) -> u32 {
        let mut acc = 1 % self.q;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by Fermat's little theorem.
    pub fn inv(self, a: u32) -> Option<u32> {
        if a.is_multiple_of(self.q) {
            None
        } else {
            Some(self.pow(a % self.q, self.q as u64 - 2))
        }
    }

    pub fn dot(self, a: &[u32], b: &[u32]) -> u32 {
        let acc = a
            .iter()
            .zip(b)
            .fold(0u64, |acc, (&x, &y)| (acc + x as u64 * y as u64) % self.q as u64);
        acc as u32
    }

    pub fn add_vec(self, a: &[u32], b: &[u32]) -> Vec<u32> {
        a.iter().zip(b).map(|(&x, &y)| self.add(x, y)).collect()
    }

    pub fn scale_vec(self, c: u32, a: &[u32]) -> Vec<u32> {
        a.iter().map(|&x| self.mul(c, x)).collect()
    }

    /// Rank of a matrix given as rows.
    pub fn rank(self, rows: &[Vec<u32>]) -> usize {
        self.row_echelon(rows).1.len()
    }

    /// Reduced row echelon form; returns the reduced nonzero rows and their pivot columns.
    pub fn row_echelon(self, rows: &[Vec<u32>]) -> (Vec<Vec<u32>>, Vec<usize>) {
        let mut m: Vec<Vec<u32>> = rows.iter().map(|r| r.iter().map(|&x| x % self.q).collect()).collect();
        let cols = m.first().map_or(0, Vec::len);
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            let Some(p) = (r..m.len()).find(|&i| m[i][c] != 0) else {
                continue;
            };
            m.swap(r, p);
            let inv = self.inv(m[r][c]).expect("nonzero pivot");
            m[r] = self.scale_vec(inv, &m[r]);
            for i in 0..m.len() {
                if i != r && m[i][c] != 0 {
                    let f = m[i][c];
                    let pivot_row = m[r].clone();
                    for (x, &y) in m[i].iter_mut().zip(&pivot_row) {
                        *x = self.sub(*x, self.mul(f, y));
                    }
                }
            }
            pivots.push(c);
            r += 1;
            if r == m.len() {
                break;
            }
        }
        m.truncate(r);
        (m, pivots)
    }

    /// Little-endian base-`q` digits of `index`.
    pub fn digits(self, mut index: u64, len: usize) -> Vec<u32> {
        (0..len)
            .map(|_| {
                let d = (index % self.q as u64) as u32;
                index /= self.q as u64;
                d
            })
            .collect()
    }

    pub fn index_of(self, digits: &[u32]) -> u64 {
        digits
            .iter()
            .rev()
            .fold(0u64, |acc, &d| acc * self.q as u64 + d as u64)
    }
}
