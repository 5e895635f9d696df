//! Per-path process storage on the grid.

/// Scalar process values `Y[m][i]` for `i = 0..=N`, stored slice-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedGrid {
    paths: usize,
    slices: usize,
    values: Vec<f64>,
}

impl AdaptedGrid {
    pub fn zeros(paths: usize, slices: usize) -> Self {
        Self {
            paths,
            slices,
            values: vec![0.0; paths * slices],
        }
    }

    pub fn from_slices(paths: usize, slices: Vec<Vec<f64>>) -> Self {
        let n = slices.len();
        let mut values = Vec::with_capacity(paths * n);
        for s in slices {
            assert_eq!(s.len(), paths, "slice length mismatch");
            values.extend(s);
        }
        Self {
            paths,
            slices: n,
            values,
        }
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    /// Number of time slices (`N + 1`).
    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn slice(&self, i: usize) -> &[f64] {
        &self.values[i * self.paths..(i + 1) * self.paths]
    }

    pub fn slice_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.paths..(i + 1) * self.paths]
    }

    pub fn get(&self, m: usize, i: usize) -> f64 {
        self.values[i * self.paths + m]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable slices, one per time index.
    pub fn slices_mut(&mut self) -> std::slice::ChunksMut<'_, f64> {
        self.values.chunks_mut(self.paths)
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.slice(i).iter().sum::<f64>() / self.paths as f64
    }

    /// Unbiased sample variance of slice `i`.
    pub fn variance(&self, i: usize) -> f64 {
        if self.paths < 2 {
            return 0.0;
        }
        let mean = self.mean(i);
        self.slice(i).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (self.paths - 1) as f64
    }

    pub fn means(&self) -> Vec<f64> {
        (0..self.slices).map(|i| self.mean(i)).collect()
    }

    /// Elementwise `self - other`.
    pub fn difference(&self, other: &AdaptedGrid) -> AdaptedGrid {
        assert_eq!(self.values.len(), other.values.len(), "shape mismatch");
        AdaptedGrid {
            paths: self.paths,
            slices: self.slices,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> AdaptedGrid {
        AdaptedGrid {
            paths: self.paths,
            slices: self.slices,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Which half of the `(i, j)` square a [`Triangle`] covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    /// `0 <= i <= j <= N-1`, where the equation is posed.
    Upper,
    /// `0 <= j < i <= N`, filled by the martingale representation.
    Lower,
}

/// One half of a two-time field: a `paths * dim` block per index pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    half: Half,
    steps: usize,
    paths: usize,
    dim: usize,
    values: Vec<f64>,
}

impl Triangle {
    pub fn zeros(half: Half, steps: usize, paths: usize, dim: usize) -> Self {
        let pairs = steps * (steps + 1) / 2;
        Self {
            half,
            steps,
            paths,
            dim,
            values: vec![0.0; pairs * paths * dim],
        }
    }

    pub fn half(&self) -> Half {
        self.half
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        let n = self.steps;
        match self.half {
            Half::Upper => {
                assert!(i <= j && j < n, "({i}, {j}) is not in the upper half");
                // Row i starts at sum_{r<i} (N - r).
                i * n - i * i.saturating_sub(1) / 2 + (j - i)
            }
            Half::Lower => {
                assert!(j < i && i <= n, "({i}, {j}) is not in the lower half");
                i * (i - 1) / 2 + j
            }
        }
    }

    /// Block of `paths * dim` values for the pair `(i, j)`.
    pub fn block(&self, i: usize, j: usize) -> &[f64] {
        let w = self.paths * self.dim;
        let at = self.pair_index(i, j) * w;
        &self.values[at..at + w]
    }

    pub fn block_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let w = self.paths * self.dim;
        let at = self.pair_index(i, j) * w;
        &mut self.values[at..at + w]
    }

    pub fn at(&self, m: usize, i: usize, j: usize) -> &[f64] {
        let b = self.block(i, j);
        &b[m * self.dim..(m + 1) * self.dim]
    }

    /// Mutable storage split by row `i`: upper rows `0..N` hold pairs
    /// `(i, i..N)`, lower rows `0..=N` hold pairs `(i, 0..i)`.
    pub fn rows_mut(&mut self) -> Vec<&mut [f64]> {
        let w = self.paths * self.dim;
        let n = self.steps;
        let lens: Vec<usize> = match self.half {
            Half::Upper => (0..n).map(|i| (n - i) * w).collect(),
            Half::Lower => (0..=n).map(|i| i * w).collect(),
        };
        let mut rest: &mut [f64] = &mut self.values;
        let mut rows = Vec::with_capacity(lens.len());
        for len in lens {
            let (head, tail) = rest.split_at_mut(len);
            rows.push(head);
            rest = tail;
        }
        rows
    }

    /// Index pairs covered, row by row.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.steps;
        match self.half {
            Half::Upper => (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect(),
            Half::Lower => (1..=n).flat_map(|i| (0..i).map(move |j| (i, j))).collect(),
        }
    }
}

/// `Z(t_i, t_j)` over the full square: the upper half from the backward
/// equation, the lower half from the martingale representation.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoTimeField {
    upper: Triangle,
    lower: Triangle,
}

impl TwoTimeField {
    pub fn zeros(steps: usize, paths: usize, dim: usize) -> Self {
        Self {
            upper: Triangle::zeros(Half::Upper, steps, paths, dim),
            lower: Triangle::zeros(Half::Lower, steps, paths, dim),
        }
    }

    pub fn from_halves(upper: Triangle, lower: Triangle) -> Self {
        assert_eq!(upper.half, Half::Upper);
        assert_eq!(lower.half, Half::Lower);
        Self { upper, lower }
    }

    pub fn steps(&self) -> usize {
        self.upper.steps
    }

    pub fn paths(&self) -> usize {
        self.upper.paths
    }

    pub fn dim(&self) -> usize {
        self.upper.dim
    }

    pub fn upper(&self) -> &Triangle {
        &self.upper
    }

    pub fn lower(&self) -> &Triangle {
        &self.lower
    }

    pub fn into_halves(self) -> (Triangle, Triangle) {
        (self.upper, self.lower)
    }

    /// Block for `(i, j)` from whichever half holds it. The diagonal lives
    /// in the upper half.
    pub fn block(&self, i: usize, j: usize) -> &[f64] {
        if j >= i {
            self.upper.block(i, j)
        } else {
            self.lower.block(i, j)
        }
    }

    pub fn at(&self, m: usize, i: usize, j: usize) -> &[f64] {
        let d = self.dim();
        &self.block(i, j)[m * d..(m + 1) * d]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_indexing_is_dense_and_disjoint() {
        for half in [Half::Upper, Half::Lower] {
            let t = Triangle::zeros(half, 5, 1, 1);
            let idx: Vec<usize> = t.pairs().iter().map(|&(i, j)| t.pair_index(i, j)).collect();
            assert_eq!(idx, (0..15).collect::<Vec<_>>(), "{half:?}");
        }
    }

    #[test]
    fn field_routes_pairs_to_halves() {
        let mut upper = Triangle::zeros(Half::Upper, 3, 2, 1);
        let mut lower = Triangle::zeros(Half::Lower, 3, 2, 1);
        upper.block_mut(1, 1).copy_from_slice(&[1.0, 2.0]);
        lower.block_mut(3, 1).copy_from_slice(&[3.0, 4.0]);
        let f = TwoTimeField::from_halves(upper, lower);
        assert_eq!(f.at(1, 1, 1), &[2.0]);
        assert_eq!(f.at(0, 3, 1), &[3.0]);
        assert_eq!(f.block(0, 2), &[0.0, 0.0]);
    }

    #[test]
    fn adapted_grid_statistics() {
        let g = AdaptedGrid::from_slices(4, vec![vec![1.0, 1.0, 1.0, 1.0], vec![0.0, 1.0, 2.0, 3.0]]);
        assert_eq!(g.mean(0), 1.0);
        assert_eq!(g.variance(0), 0.0);
        assert_eq!(g.mean(1), 1.5);
        assert!((g.variance(1) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(g.get(2, 1), 2.0);
    }
}
