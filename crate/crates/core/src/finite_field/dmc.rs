use rand::Rng;

use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;
const ENTRY_TOL: f64 = 1e-12;

/// A symmetric discrete memoryless channel with input alphabet `F_q`.
///
/// Symmetry is certified by partitioning the outputs into groups whose
/// sub-matrices have every row a permutation of every other row and every
/// column a permutation of every other column. For such a channel the uniform
/// input achieves capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricDmc {
    rows: Vec<Vec<f64>>,
    partition: Vec<Vec<usize>>,
    cumulative: Vec<Vec<f64>>,
}

impl SymmetricDmc {
    /// Builds the channel from transition rows `p(y|x)`, rejecting matrices
    /// without a symmetry certificate.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let q = rows.len();
        if q < 2 {
            return Err(Error::arg("rows", "need at least two input symbols"));
        }
        let outputs = rows[0].len();
        if outputs == 0 || rows.iter().any(|r| r.len() != outputs) {
            return Err(Error::arg("rows", "rows must be nonempty and equally long"));
        }
        for (x, r) in rows.iter().enumerate() {
            if r.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return Err(Error::arg("rows", format!("row {x} has a negative entry")));
            }
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::arg("rows", format!("row {x} sums to {s}")));
            }
        }
        let partition = symmetry_certificate(&rows)?;
        let cumulative = rows
            .iter()
            .map(|r| {
                r.iter()
                    .scan(0.0, |acc, &p| {
                        *acc += p;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        Ok(SymmetricDmc {
            rows,
            partition,
            cumulative,
        })
    }

    /// `q`-ary symmetric channel with total error probability `eps`.
    pub fn qsc(q: usize, eps: f64) -> Result<Self> {
        if q < 2 {
            return Err(Error::arg("q", "need at least two symbols"));
        }
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::arg("eps", format!("{eps} is not a probability")));
        }
        let off = eps / (q - 1) as f64;
        let rows = (0..q)
            .map(|x| (0..q).map(|y| if x == y { 1.0 - eps } else { off }).collect())
            .collect();
        Self::from_rows(rows)
    }

    pub fn bsc(eps: f64) -> Result<Self> {
        Self::qsc(2, eps)
    }

    pub fn identity(q: usize) -> Result<Self> {
        Self::qsc(q, 0.0)
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    /// Output groups of the symmetry certificate.
    pub fn partition(&self) -> &[Vec<usize>] {
        &self.partition
    }

    /// Capacity in bits: `I(X;Y)` under the uniform input.
    pub fn capacity(&self) -> f64 {
        let q = self.input_size() as f64;
        let mut info = 0.0;
        for y in 0..self.output_size() {
            let py: f64 = self.rows.iter().map(|r| r[y]).sum::<f64>() / q;
            for r in &self.rows {
                let p = r[y];
                if p > 0.0 {
                    info += (p / q) * (p / py).log2();
                }
            }
        }
        info.max(0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let row = &self.rows[x];
        self.cumulative[x]
            .iter()
            .position(|&c| u < c)
            .filter(|&y| row[y] > 0.0)
            // rounding can leave the last cumulative entry just below 1
            .unwrap_or_else(|| row.iter().rposition(|&p| p > 0.0).expect("row has mass"))
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn same_multiset(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= ENTRY_TOL)
}

/// Groups outputs by the multiset of their column entries and checks that the
/// rows restricted to each group are permutations of each other.
///
/// Any valid partition refines this grouping (columns in one block must be
/// permutations of each other), and merging blocks with equal column profiles
/// keeps rows permutations of each other, so the grouping is canonical.
fn symmetry_certificate(rows: &[Vec<f64>]) -> Result<Vec<Vec<usize>>> {
    let outputs = rows[0].len();
    let mut groups: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    for y in 0..outputs {
        let profile = sorted(rows.iter().map(|r| r[y]).collect());
        match groups.iter_mut().find(|(p, _)| same_multiset(p, &profile)) {
            Some((_, cols)) => cols.push(y),
            None => groups.push((profile, vec![y])),
        }
    }
    for (_, cols) in &groups {
        let reference = sorted(cols.iter().map(|&y| rows[0][y]).collect());
        for (x, r) in rows.iter().enumerate().skip(1) {
            let sub = sorted(cols.iter().map(|&y| r[y]).collect());
            if !same_multiset(&reference, &sub) {
                return Err(Error::NotSymmetric(format!(
                    "row {x} restricted to outputs {cols:?} is not a permutation of row 0"
                )));
            }
        }
    }
    Ok(groups.into_iter().map(|(_, c)| c).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn binary_entropy(p: f64) -> f64 {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }

    #[test]
    fn bsc_capacity_matches_binary_entropy() {
        let ch = SymmetricDmc::bsc(0.11).unwrap();
        let expected = 1.0 - binary_entropy(0.11);
        assert!((ch.capacity() - expected).abs() < 1e-12);
        assert!((expected - 0.500_07).abs() < 1e-4);
    }

    #[test]
    fn identity_capacity_is_log_q() {
        for q in [2usize, 3, 5, 7] {
            let c = SymmetricDmc::identity(q).unwrap().capacity();
            assert!((c - (q as f64).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn fully_noisy_qsc_has_zero_capacity() {
        let q = 5;
        let c = SymmetricDmc::qsc(q, (q as f64 - 1.0) / q as f64).unwrap().capacity();
        assert!(c.abs() < 1e-12);
        let near = SymmetricDmc::qsc(q, 0.79).unwrap().capacity();
        assert!(near > 0.0 && near < 1e-3);
    }

    #[test]
    fn binary_erasure_channel_is_symmetric() {
        let e = 0.3;
        let ch = SymmetricDmc::from_rows(vec![vec![1.0 - e, e, 0.0], vec![0.0, e, 1.0 - e]]).unwrap();
        assert_eq!(ch.partition().len(), 2);
        assert!((ch.capacity() - (1.0 - e)).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_symmetric_and_malformed_rows() {
        // Z-channel
        let z = SymmetricDmc::from_rows(vec![vec![1.0, 0.0], vec![0.2, 0.8]]);
        assert!(matches!(z, Err(Error::NotSymmetric(_))));
        assert!(SymmetricDmc::from_rows(vec![vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
        assert!(SymmetricDmc::from_rows(vec![vec![1.0]]).is_err());
    }

    #[test]
    fn capacity_invariant_under_output_permutation() {
        let rows = vec![
            vec![0.6, 0.3, 0.1],
            vec![0.1, 0.6, 0.3],
            vec![0.3, 0.1, 0.6],
        ];
        let a = SymmetricDmc::from_rows(rows.clone()).unwrap().capacity();
        let perm = [2, 0, 1];
        let permuted = rows.iter().map(|r| perm.iter().map(|&j| r[j]).collect()).collect();
        let b = SymmetricDmc::from_rows(permuted).unwrap().capacity();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn sampling_follows_transition_row() {
        let ch = SymmetricDmc::bsc(0.25).unwrap();
        let mut rng = stream(3, &[0]);
        let flips = (0..40_000).filter(|_| ch.sample(0, &mut rng) == 1).count();
        let rate = flips as f64 / 40_000.0;
        assert!((rate - 0.25).abs() < 0.01, "{rate}");
        let noiseless = SymmetricDmc::identity(3).unwrap();
        assert!((0..1000).all(|_| noiseless.sample(2, &mut rng) == 2));
    }
}
