use rand::Rng;

use super::{PrimeField, SymmetricDmc};
use crate::error::{Error, Result};
use crate::rng::{stream, tag};

/// Exhaustive ML decoding is limited to this many codewords.
pub const MAX_ML_CODEWORDS: u64 = 1 << 16;

const RANK_RETRIES: usize = 64;

/// A linear code `x = F w` with generator `F ∈ F_q^{n×k}` of full column rank.
#[derive(Debug, Clone)]
pub struct LinearCode {
    field: PrimeField,
    /// `n` rows of `k` entries.
    generator: Vec<Vec<u32>>,
    codebook: Option<Vec<u32>>,
}

impl LinearCode {
    pub fn new(field: PrimeField, generator: Vec<Vec<u32>>) -> Result<Self> {
        let n = generator.len();
        if n == 0 {
            return Err(Error::arg("generator", "blocklength must be positive"));
        }
        let k = generator[0].len();
        if generator.iter().any(|r| r.len() != k) {
            return Err(Error::arg("generator", "rows must all have length k"));
        }
        if k > n {
            return Err(Error::arg("generator", format!("dimension {k} exceeds blocklength {n}")));
        }
        let columns: Vec<Vec<u32>> = (0..k).map(|j| generator.iter().map(|r| r[j]).collect()).collect();
        if field.rank(&columns) != k {
            return Err(Error::arg("generator", "generator does not have full column rank"));
        }
        let mut code = LinearCode {
            field,
            generator,
            codebook: None,
        };
        if code.codeword_count() <= MAX_ML_CODEWORDS {
            let mut book = Vec::with_capacity(code.codeword_count() as usize * n);
            for m in 0..code.codeword_count() {
                book.extend(code.encode(&field.digits(m, k)));
            }
            code.codebook = Some(book);
        }
        Ok(code)
    }

    /// Uniformly random generator of full rank, drawn from the stream `(seed, code)`.
    pub fn random(n: usize, k: usize, q: u32, seed: u64) -> Result<Self> {
        let field = PrimeField::new(q)?;
        if k > n || n == 0 {
            return Err(Error::arg("k", format!("need 0 <= k <= n, got k={k}, n={n}")));
        }
        let mut rng = stream(seed, &[tag::CODE, n as u64, k as u64]);
        for _ in 0..RANK_RETRIES {
            let generator: Vec<Vec<u32>> = (0..n)
                .map(|_| (0..k).map(|_| rng.random_range(0..q)).collect())
                .collect();
            match Self::new(field, generator) {
                Ok(code) => return Ok(code),
                Err(Error::InvalidArgument { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::arg("generator", "no full-rank generator found after retries"))
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn blocklength(&self) -> usize {
        self.generator.len()
    }

    pub fn dimension(&self) -> usize {
        self.generator[0].len()
    }

    pub fn generator(&self) -> &[Vec<u32>] {
        &self.generator
    }

    pub fn codeword_count(&self) -> u64 {
        (self.field.order() as u64).saturating_pow(self.dimension() as u32)
    }

    /// Rate in bits per channel use, `(k/n) log2 q`.
    pub fn rate(&self) -> f64 {
        self.dimension() as f64 / self.blocklength() as f64 * (self.field.order() as f64).log2()
    }

    pub fn encode(&self, message: &[u32]) -> Vec<u32> {
        self.generator.iter().map(|row| self.field.dot(row, message)).collect()
    }

    /// Exhaustive maximum-likelihood decoding over all `q^k` messages.
    ///
    /// Ties go to the smallest message index (little-endian base-`q` digits).
    pub fn ml_decode(&self, received: &[usize], channel: &SymmetricDmc) -> Result<Vec<u32>> {
        Ok(self.field.digits(self.ml_decode_index(received, channel)?, self.dimension()))
    }

    pub fn ml_decode_index(&self, received: &[usize], channel: &SymmetricDmc) -> Result<u64> {
        let n = self.blocklength();
        if received.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: received.len(),
            });
        }
        if channel.input_size() != self.field.order() as usize {
            return Err(Error::arg("channel", "input size differs from field size"));
        }
        let book = self.codebook.as_ref().ok_or_else(|| {
            Error::guard(
                "codeword count for ML decoding",
                self.codeword_count() as f64,
                MAX_ML_CODEWORDS as f64,
            )
        })?;
        let q = self.field.order() as usize;
        // log-likelihood per (position, input symbol)
        let table: Vec<f64> = received
            .iter()
            .flat_map(|&y| (0..q).map(move |x| channel.prob(x, y).ln()))
            .collect();
        let mut best = (f64::NEG_INFINITY, 0u64);
        for (m, word) in book.chunks_exact(n).enumerate() {
            let ll: f64 = word
                .iter()
                .enumerate()
                .map(|(t, &x)| table[t * q + x as usize])
                .sum();
            if ll > best.0 {
                best = (ll, m as u64);
            }
        }
        Ok(best.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_code_has_full_rank_and_is_reproducible() {
        let a = LinearCode::random(10, 4, 3, 9).unwrap();
        let b = LinearCode::random(10, 4, 3, 9).unwrap();
        assert_eq!(a.generator(), b.generator());
        assert_eq!(a.codeword_count(), 81);
        assert!((a.rate() - 0.4 * 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn noiseless_channel_decodes_every_message() {
        let code = LinearCode::random(6, 3, 3, 1).unwrap();
        let ch = SymmetricDmc::identity(3).unwrap();
        let f = code.field();
        for m in 0..code.codeword_count() {
            let w = f.digits(m, 3);
            let y: Vec<usize> = code.encode(&w).iter().map(|&x| x as usize).collect();
            assert_eq!(code.ml_decode(&y, &ch).unwrap(), w);
        }
    }

    #[test]
    fn decoding_commutes_with_codeword_shift() {
        let code = LinearCode::random(12, 4, 2, 5).unwrap();
        let ch = SymmetricDmc::bsc(0.1).unwrap();
        let f = code.field();
        let mut rng = stream(11, &[0]);
        for _ in 0..50 {
            let w: Vec<u32> = (0..4).map(|_| rng.random_range(0..2)).collect();
            let shift: Vec<u32> = (0..4).map(|_| rng.random_range(0..2)).collect();
            let x = code.encode(&w);
            let y: Vec<usize> = x.iter().map(|&s| ch.sample(s as usize, &mut rng)).collect();
            let cw = code.encode(&shift);
            let y_shifted: Vec<usize> =
                y.iter().zip(&cw).map(|(&a, &c)| f.add(a as u32, c) as usize).collect();
            let direct = code.ml_decode(&y, &ch).unwrap();
            let shifted = code.ml_decode(&y_shifted, &ch).unwrap();
            // likelihoods of (w + s) given y + F s equal those of w given y; ties may differ
            let back: Vec<u32> = shifted.iter().zip(&shift).map(|(&a, &s)| f.sub(a, s)).collect();
            let ll = |m: &[u32], obs: &[usize]| -> f64 {
                code.encode(m).iter().zip(obs).map(|(&x, &o)| ch.prob(x as usize, o).ln()).sum()
            };
            assert!((ll(&back, &y) - ll(&direct, &y)).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_rank_deficient_and_oversized() {
        let f = PrimeField::new(2).unwrap();
        assert!(LinearCode::new(f, vec![vec![1, 1], vec![1, 1], vec![0, 0]]).is_err());
        let big = LinearCode::random(20, 17, 2, 0).unwrap();
        let ch = SymmetricDmc::bsc(0.1).unwrap();
        assert!(matches!(big.ml_decode(&[0; 20], &ch), Err(Error::Guard { .. })));
    }
}
