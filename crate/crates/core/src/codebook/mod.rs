//! Semantic quantized codebook.
//!
//! Latent vectors are mapped to their nearest codeword and the codeword index
//! is what travels over the link. During training a differentiable surrogate
//! stands in for the hard quantizer; the codebook itself follows an
//! exponential moving average of the surrogate outputs assigned to each entry.

mod file;
mod surrogate;
mod train;

pub use file::{read_codebook, write_codebook};
pub use surrogate::{
    andvq_forward, andvq_gradients, andvq_surrogate, baseline_forward, quantize, QuantizeResult, QuantizerConfig,
    Surrogate,
};
pub use train::{assign_epoch, hard_mse, train_epoch, EpochStats};

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};

pub const DEFAULT_DECAY: f64 = 0.9;
pub const DEFAULT_EPS: f64 = 1e-5;

/// K×N codeword matrix plus the EMA statistics that drive its updates.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    dim: usize,
    entries: Vec<f64>,
    ema_count: Vec<f64>,
    ema_sum: Vec<f64>,
    decay: f64,
    eps: f64,
}

/// A set of latent vectors together with their transmitted indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LatentBatch {
    pub vectors: Vec<Vec<f64>>,
    pub assigned_index: Vec<usize>,
}

impl LatentBatch {
    pub fn new(vectors: Vec<Vec<f64>>) -> Self {
        Self {
            vectors,
            assigned_index: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    /// Fills `assigned_index` with hard nearest-neighbour indices.
    pub fn assign(&mut self, cb: &Codebook) -> Result<()> {
        self.assigned_index = self
            .vectors
            .iter()
            .map(|z| cb.nearest(z).map(|(k, _)| k))
            .collect::<Result<_>>()?;
        Ok(())
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl Codebook {
    /// Builds a codebook whose EMA statistics start as one virtual
    /// observation of each entry.
    pub fn new(entries: Vec<Vec<f64>>, decay: f64, eps: f64) -> Result<Self> {
        let k = entries.len();
        let dim = entries.first().map_or(0, Vec::len);
        let flat: Vec<f64> = entries.into_iter().flatten().collect();
        let sum = flat.clone();
        Self::with_stats(k, dim, flat, vec![1.0; k], sum, decay, eps)
    }

    /// Builds a codebook from raw row-major parts.
    pub fn with_stats(
        k: usize,
        dim: usize,
        entries: Vec<f64>,
        ema_count: Vec<f64>,
        ema_sum: Vec<f64>,
        decay: f64,
        eps: f64,
    ) -> Result<Self> {
        if k == 0 || dim == 0 {
            return Err(Error::EmptyCodebook);
        }
        if entries.len() != k * dim || ema_sum.len() != k * dim || ema_count.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "codebook parts do not match K={k}, N={dim}"
            )));
        }
        if !(0.0..1.0).contains(&decay) {
            return Err(Error::InvalidArgument(format!("decay {decay} not in [0, 1)")));
        }
        if eps <= 0.0 {
            return Err(Error::InvalidArgument("eps must be positive".into()));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite codeword".into()));
        }
        if ema_count.iter().any(|&c| c < 0.0 || !c.is_finite()) {
            return Err(Error::InvalidArgument("negative EMA count".into()));
        }
        Ok(Self {
            dim,
            entries,
            ema_count,
            ema_sum,
            decay,
            eps,
        })
    }

    /// Draws `k` distinct rows of `batch` as the initial codewords.
    pub fn init_from_batch<R: Rng + ?Sized>(
        batch: &[Vec<f64>],
        k: usize,
        decay: f64,
        eps: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyCodebook);
        }
        if batch.len() < k {
            return Err(Error::InsufficientData(format!(
                "{} rows cannot seed {k} codewords",
                batch.len()
            )));
        }
        let rows = sample(rng, batch.len(), k)
            .into_iter()
            .map(|i| batch[i].clone())
            .collect();
        Self::new(rows, decay, eps)
    }

    pub fn len(&self) -> usize {
        self.ema_count.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ema_count.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn entry(&self, k: usize) -> &[f64] {
        &self.entries[k * self.dim..(k + 1) * self.dim]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn ema_count(&self) -> &[f64] {
        &self.ema_count
    }

    pub fn ema_sum(&self) -> &[f64] {
        &self.ema_sum
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks_exact(self.dim)
    }

    /// Number of bits needed to address every entry.
    pub fn bits_per_index(&self) -> usize {
        crate::ofdm::bits_per_index(self.len())
    }

    fn check_dim(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "vector has {} components, codebook has {}",
                z.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Hard nearest-neighbour quantization; ties go to the smallest index.
    pub fn nearest(&self, z: &[f64]) -> Result<(usize, &[f64])> {
        if self.is_empty() {
            return Err(Error::EmptyCodebook);
        }
        self.check_dim(z)?;
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, c) in self.rows().enumerate() {
            let d = sq_dist(z, c);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        Ok((best, self.entry(best)))
    }

    /// The `kc` closest codewords, ordered by distance then index.
    pub fn knn(&self, z: &[f64], kc: usize) -> Result<Vec<usize>> {
        if self.is_empty() {
            return Err(Error::EmptyCodebook);
        }
        self.check_dim(z)?;
        if kc == 0 || kc > self.len() {
            return Err(Error::InvalidArgument(format!(
                "K_c = {kc} must lie in [1, {}]",
                self.len()
            )));
        }
        let mut scored: Vec<(f64, usize)> =
            self.rows().map(|c| sq_dist(z, c)).zip(0..).collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(scored.into_iter().take(kc).map(|(_, k)| k).collect())
    }

    /// Mean offset `z − c` over the given neighbours.
    pub fn avg_offset(&self, z: &[f64], knn: &[usize]) -> Vec<f64> {
        assert!(!knn.is_empty(), "avg_offset needs at least one neighbour");
        let scale = 1.0 / knn.len() as f64;
        let mut d = vec![0.0; self.dim];
        for &k in knn {
            for ((di, zi), ci) in d.iter_mut().zip(z).zip(self.entry(k)) {
                *di += zi - ci;
            }
        }
        d.iter_mut().for_each(|x| *x *= scale);
        d
    }

    /// Mean Euclidean distance from `z` to the given neighbours.
    pub fn adaptive_sigma(&self, z: &[f64], knn: &[usize]) -> f64 {
        assert!(!knn.is_empty(), "adaptive_sigma needs at least one neighbour");
        knn.iter()
            .map(|&k| sq_dist(z, self.entry(k)).sqrt())
            .sum::<f64>()
            / knn.len() as f64
    }

    /// One EMA epoch update from hard assignments and their surrogate outputs.
    /// Entries with no assignment keep their decayed statistics.
    pub fn ema_update(&mut self, assignments: &[usize], surrogates: &[Vec<f64>]) -> Result<()> {
        if assignments.len() != surrogates.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} assignments for {} surrogates",
                assignments.len(),
                surrogates.len()
            )));
        }
        let k_total = self.len();
        let n = self.dim;
        let mut counts = vec![0.0; k_total];
        let mut sums = vec![0.0; k_total * n];
        for (&k, zq) in assignments.iter().zip(surrogates) {
            if k >= k_total {
                return Err(Error::InvalidArgument(format!(
                    "index {k} outside codebook of {k_total}"
                )));
            }
            self.check_dim(zq)?;
            counts[k] += 1.0;
            for (s, v) in sums[k * n..(k + 1) * n].iter_mut().zip(zq) {
                *s += v;
            }
        }
        let g = self.decay;
        for k in 0..k_total {
            self.ema_count[k] = g * self.ema_count[k] + (1.0 - g) * counts[k];
            let denom = self.ema_count[k] + self.eps;
            for j in k * n..(k + 1) * n {
                self.ema_sum[j] = g * self.ema_sum[j] + (1.0 - g) * sums[j];
                self.entries[j] = self.ema_sum[j] / denom;
            }
        }
        Ok(())
    }
}

/// Codebook utilization: distinct used indices over capacity.
pub fn cur(codebook_len: usize, assignments: &[usize]) -> f64 {
    if codebook_len == 0 {
        return 0.0;
    }
    let mut used = vec![false; codebook_len];
    for &k in assignments {
        if k < codebook_len {
            used[k] = true;
        }
    }
    used.iter().filter(|&&u| u).count() as f64 / codebook_len as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand_distr::{Distribution, StandardNormal};

    fn cb(rows: &[&[f64]]) -> Codebook {
        Codebook::new(rows.iter().map(|r| r.to_vec()).collect(), 0.9, 1e-5).unwrap()
    }

    fn random_rows(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect()
    }

    #[test]
    fn nearest_by_inspection() {
        let c = cb(&[&[0.0], &[1.0]]);
        assert_eq!(c.nearest(&[0.4]).unwrap().0, 0);
    }

    #[test]
    fn nearest_identity_case() {
        let rows = random_rows(6, 3, 1);
        let c = Codebook::new(rows.clone(), 0.9, 1e-5).unwrap();
        let (k, cw) = c.nearest(&rows[3]).unwrap();
        assert_eq!(k, 3);
        assert_eq!(sq_dist(cw, &rows[3]), 0.0);
    }

    #[test]
    fn nearest_ties_go_to_smallest_index() {
        let c = cb(&[&[-1.0], &[1.0]]);
        assert_eq!(c.nearest(&[0.0]).unwrap().0, 0);
    }

    #[test]
    fn nearest_matches_full_scan_oracle() {
        let c = Codebook::new(random_rows(64, 8, 2), 0.9, 1e-5).unwrap();
        for z in random_rows(200, 8, 3) {
            let oracle = (0..64)
                .map(|k| (sq_dist(&z, c.entry(k)), k))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .unwrap()
                .1;
            assert_eq!(c.nearest(&z).unwrap().0, oracle);
        }
    }

    #[test]
    fn empty_codebook_is_rejected() {
        let err = Codebook::new(vec![], 0.9, 1e-5).unwrap_err();
        assert_eq!(err.to_string(), "empty codebook");
    }

    #[test]
    fn knn_examples() {
        let c = cb(&[&[0.0], &[1.0], &[5.0]]);
        assert_eq!(c.knn(&[0.4], 2).unwrap(), vec![0, 1]);
        let mut all = c.knn(&[0.4], 3).unwrap();
        all.sort();
        assert_eq!(all, vec![0, 1, 2]);
        assert!(c.knn(&[0.4], 4).is_err());
    }

    #[test]
    fn knn_matches_sort_oracle() {
        let c = Codebook::new(random_rows(40, 16, 4), 0.9, 1e-5).unwrap();
        let z = &random_rows(1, 16, 5)[0];
        let mut all: Vec<(f64, usize)> = (0..40).map(|k| (sq_dist(z, c.entry(k)), k)).collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let oracle: Vec<usize> = all.iter().take(7).map(|p| p.1).collect();
        assert_eq!(c.knn(z, 7).unwrap(), oracle);
    }

    #[test]
    fn avg_offset_and_sigma_by_hand() {
        let c = cb(&[&[0.0], &[1.0]]);
        let d = c.avg_offset(&[0.4], &[0, 1]);
        assert!((d[0] + 0.1).abs() < 1e-15);
        assert!((c.adaptive_sigma(&[0.4], &[0, 1]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn avg_offset_degenerate_cases() {
        let c = cb(&[&[0.0, 0.0], &[2.0, 0.0], &[0.0, 3.0]]);
        let z = [0.3, 0.1];
        let single = c.avg_offset(&z, &[0]);
        assert_eq!(single, vec![0.3, 0.1]);
        let centroid = [2.0 / 3.0, 1.0];
        let d = c.avg_offset(&centroid, &[0, 1, 2]);
        assert!(norm(&d) < 1e-15);
        assert_eq!(c.adaptive_sigma(&[2.0, 0.0], &[1]), 0.0);
    }

    #[test]
    fn sigma_is_homogeneous() {
        let rows = random_rows(5, 4, 6);
        let z = random_rows(1, 4, 7).remove(0);
        let s = 2.5;
        let c = Codebook::new(rows.clone(), 0.9, 1e-5).unwrap();
        let scaled = Codebook::new(
            rows.iter().map(|r| r.iter().map(|x| x * s).collect()).collect(),
            0.9,
            1e-5,
        )
        .unwrap();
        let zs: Vec<f64> = z.iter().map(|x| x * s).collect();
        let knn = c.knn(&z, 3).unwrap();
        let a = c.adaptive_sigma(&z, &knn);
        let b = scaled.adaptive_sigma(&zs, &knn);
        assert!((b - s * a).abs() < 1e-12);
    }

    #[test]
    fn ema_count_by_hand() {
        let mut c = Codebook::with_stats(1, 1, vec![1.0], vec![10.0], vec![10.0], 0.9, 1e-5)
            .unwrap();
        let surrogates = vec![vec![1.0]; 20];
        c.ema_update(&vec![0; 20], &surrogates).unwrap();
        assert!((c.ema_count()[0] - 11.0).abs() < 1e-12);
    }

    #[test]
    fn ema_entries_match_stat_ratio_exactly() {
        let mut c = Codebook::new(random_rows(4, 3, 8), 0.9, 1e-5).unwrap();
        let zq = random_rows(10, 3, 9);
        let assign: Vec<usize> = (0..10).map(|i| i % 3).collect();
        c.ema_update(&assign, &zq).unwrap();
        for k in 0..4 {
            for j in 0..3 {
                let expect = c.ema_sum()[k * 3 + j] / (c.ema_count()[k] + c.eps());
                assert_eq!(c.entry(k)[j], expect);
            }
        }
    }

    #[test]
    fn zero_decay_is_kmeans_m_step() {
        let mut c =
            Codebook::with_stats(2, 1, vec![0.0, 0.0], vec![0.0; 2], vec![0.0; 2], 0.0, 1e-5)
                .unwrap();
        c.ema_update(&[0, 0, 1], &[vec![1.0], vec![3.0], vec![7.0]]).unwrap();
        assert!((c.entry(0)[0] - 2.0 * 2.0 / (2.0 + 1e-5)).abs() < 1e-15);
        assert!((c.entry(0)[0] - 2.0).abs() < 1e-4);
        assert!((c.entry(1)[0] - 7.0).abs() < 1e-4);
    }

    #[test]
    fn unused_entry_decays_geometrically() {
        // closed form: c_e = γ^e Φ0 / (γ^e φ0 + ε)
        let (g, eps) = (0.9, 1e-5);
        let mut c =
            Codebook::with_stats(2, 1, vec![3.0, 0.0], vec![1e-3, 1.0], vec![3e-3, 0.0], g, eps)
                .unwrap();
        for e in 1..=200 {
            c.ema_update(&[1], &[vec![0.5]]).unwrap();
            let ge = g.powi(e);
            let oracle = ge * 3e-3 / (ge * 1e-3 + eps);
            assert!((c.entry(0)[0] - oracle).abs() <= 1e-12 * oracle.max(1e-300));
        }
        assert!(c.entry(0)[0] < 1e-6);
    }

    #[test]
    fn ema_fixed_point_residual_bound() {
        let (g, eps) = (0.9, 1e-5);
        let mut c = Codebook::new(vec![vec![0.0, 0.0]], g, eps).unwrap();
        let target = vec![vec![1.0, -2.0], vec![3.0, 0.0]];
        let mean = [2.0, -1.0];
        let gap0 = norm(&[mean[0] - 0.0, mean[1] - 0.0]);
        for _ in 0..50 {
            c.ema_update(&[0, 0], &target).unwrap();
        }
        let resid = norm(&[c.entry(0)[0] - mean[0], c.entry(0)[1] - mean[1]]);
        assert!(resid < g.powi(50) / (1.0 - g) * gap0);
    }

    #[test]
    fn ema_rejects_bad_index() {
        let mut c = cb(&[&[0.0]]);
        assert!(c.ema_update(&[1], &[vec![0.0]]).is_err());
    }

    #[test]
    fn cur_examples() {
        assert_eq!(cur(4, &[0, 2, 2, 0]), 0.5);
        assert_eq!(cur(3, &[2, 1, 0]), 1.0);
        assert_eq!(cur(3, &[]), 0.0);
    }

    #[test]
    fn init_draws_distinct_rows() {
        let batch = random_rows(20, 2, 10);
        let mut rng = rng_from_seed(11);
        let c = Codebook::init_from_batch(&batch, 20, 0.9, 1e-5, &mut rng).unwrap();
        let mut seen: Vec<&[f64]> = c.rows().collect();
        seen.sort_by(|a, b| a[0].total_cmp(&b[0]));
        seen.dedup();
        assert_eq!(seen.len(), 20);
        assert!(Codebook::init_from_batch(&batch, 21, 0.9, 1e-5, &mut rng).is_err());
    }
}
