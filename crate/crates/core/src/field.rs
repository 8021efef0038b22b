//! Dense storage for fields sampled on the time × space and
//! time × cluster × space grids.

use crate::error::{check_len, GmfgError, Result};

/// Values `u(t_k, x_i)` stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    levels: usize,
    n: usize,
    data: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(levels: usize, n: usize) -> Self {
        SpaceTimeField {
            levels,
            n,
            data: vec![0.0; levels * n],
        }
    }

    pub fn constant(levels: usize, n: usize, value: f64) -> Self {
        SpaceTimeField {
            levels,
            n,
            data: vec![value; levels * n],
        }
    }

    pub fn from_vec(levels: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        check_len(levels * n, data.len())?;
        Ok(SpaceTimeField { levels, n, data })
    }

    /// Builds a field from one row per time level.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let levels = rows.len();
        if levels == 0 {
            return Err(GmfgError::InvalidInput("field needs at least one time level".into()));
        }
        let n = rows[0].len();
        let mut data = Vec::with_capacity(levels * n);
        for row in rows {
            check_len(n, row.len())?;
            data.extend(row);
        }
        Ok(SpaceTimeField { levels, n, data })
    }

    pub fn from_fn(levels: usize, n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(levels * n);
        for k in 0..levels {
            for i in 0..n {
                data.push(f(k, i));
            }
        }
        SpaceTimeField { levels, n, data }
    }

    #[inline]
    pub fn levels(&self) -> usize {
        self.levels
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.n..(k + 1) * self.n]
    }

    #[inline]
    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.n..(k + 1) * self.n]
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.data[k * self.n + i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sup norm over every sample.
    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Reverses the time axis: row `k` becomes row `levels - 1 - k`.
    pub fn time_reversed(&self) -> Self {
        let mut out = Vec::with_capacity(self.data.len());
        for k in (0..self.levels).rev() {
            out.extend_from_slice(self.row(k));
        }
        SpaceTimeField {
            levels: self.levels,
            n: self.n,
            data: out,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_len(self.data.len(), other.data.len())?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SpaceTimeField {
            levels: self.levels,
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }
}

/// Values `u(t_k, alpha_j, x_i)` stored time-major, then cluster, then space.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterField {
    levels: usize,
    clusters: usize,
    n: usize,
    data: Vec<f64>,
}

impl ClusterField {
    pub fn zeros(levels: usize, clusters: usize, n: usize) -> Self {
        ClusterField {
            levels,
            clusters,
            n,
            data: vec![0.0; levels * clusters * n],
        }
    }

    pub fn from_vec(levels: usize, clusters: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        check_len(levels * clusters * n, data.len())?;
        Ok(ClusterField {
            levels,
            clusters,
            n,
            data,
        })
    }

    pub fn from_fn(levels: usize, clusters: usize, n: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(levels * clusters * n);
        for k in 0..levels {
            for j in 0..clusters {
                for i in 0..n {
                    data.push(f(k, j, i));
                }
            }
        }
        ClusterField {
            levels,
            clusters,
            n,
            data,
        }
    }

    /// Assembles a field from one time × space slice per cluster.
    pub fn from_cluster_slices(slices: &[SpaceTimeField]) -> Result<Self> {
        let clusters = slices.len();
        if clusters == 0 {
            return Err(GmfgError::InvalidInput("no cluster slices".into()));
        }
        let levels = slices[0].levels();
        let n = slices[0].n();
        for s in slices {
            check_len(levels, s.levels())?;
            check_len(n, s.n())?;
        }
        let mut data = Vec::with_capacity(levels * clusters * n);
        for k in 0..levels {
            for s in slices {
                data.extend_from_slice(s.row(k));
            }
        }
        Ok(ClusterField {
            levels,
            clusters,
            n,
            data,
        })
    }

    #[inline]
    pub fn levels(&self) -> usize {
        self.levels
    }

    #[inline]
    pub fn clusters(&self) -> usize {
        self.clusters
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, k: usize, j: usize) -> usize {
        (k * self.clusters + j) * self.n
    }

    #[inline]
    pub fn slice(&self, k: usize, j: usize) -> &[f64] {
        let o = self.offset(k, j);
        &self.data[o..o + self.n]
    }

    #[inline]
    pub fn slice_mut(&mut self, k: usize, j: usize) -> &mut [f64] {
        let o = self.offset(k, j);
        &mut self.data[o..o + self.n]
    }

    #[inline]
    pub fn get(&self, k: usize, j: usize, i: usize) -> f64 {
        self.data[self.offset(k, j) + i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// The time × space trajectory of cluster `j`.
    pub fn cluster(&self, j: usize) -> SpaceTimeField {
        let mut data = Vec::with_capacity(self.levels * self.n);
        for k in 0..self.levels {
            data.extend_from_slice(self.slice(k, j));
        }
        SpaceTimeField {
            levels: self.levels,
            n: self.n,
            data,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        check_len(self.levels, other.levels)?;
        check_len(self.clusters, other.clusters)?;
        check_len(self.n, other.n)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Largest difference between any two clusters at equal `(t, x)`.
    pub fn alpha_variation(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.levels {
            for i in 0..self.n {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for j in 0..self.clusters {
                    let v = self.get(k, j, i);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                worst = worst.max(hi - lo);
            }
        }
        worst
    }

    /// Pointwise `(1 - lambda) * self + lambda * other`.
    pub fn blend(&self, other: &Self, lambda: f64) -> Result<Self> {
        self.same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
            .collect();
        Ok(ClusterField {
            levels: self.levels,
            clusters: self.clusters,
            n: self.n,
            data,
        })
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(ClusterField {
            levels: self.levels,
            clusters: self.clusters,
            n: self.n,
            data,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ClusterField {
            levels: self.levels,
            clusters: self.clusters,
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Reorders clusters: output cluster `j` is input cluster `perm[j]`.
    pub fn permute_clusters(&self, perm: &[usize]) -> Result<Self> {
        check_len(self.clusters, perm.len())?;
        Ok(ClusterField::from_fn(self.levels, self.clusters, self.n, |k, j, i| {
            self.get(k, perm[j], i)
        }))
    }
}
