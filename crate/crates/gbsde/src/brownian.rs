//! Reproducible batches of d-dimensional Brownian increments.
//!
//! Randomness is counter-based: path `p` draws from the ChaCha stream
//! indexed by `stream_offset + p` under one master seed, so every path's
//! increments are a pure function of `(SeedSpec, grid, dims, path index)`.
//! Splitting the paths across any number of workers, or simulating a
//! sub-range of paths, reproduces the same bits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Seeding rule for a batch: a master seed plus the stream id assigned to
/// path 0. Path `p` always uses stream `stream_offset + p`, which keeps
/// increments independent of worker count and lets disjoint offsets carve
/// out independent batches from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_offset: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            stream_offset: 0,
        }
    }

    pub fn with_offset(master_seed: u64, stream_offset: u64) -> Self {
        Self {
            master_seed,
            stream_offset,
        }
    }

    fn rng_for_path(&self, path: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_offset.wrapping_add(path as u64));
        rng
    }
}

/// `paths × steps × dims` Brownian increments on a grid, each increment
/// drawn `N(0, dt_i)` per coordinate. Levels are derived on demand by
/// prefix-summing; `B_0 = 0`.
#[derive(Debug, Clone)]
pub struct BrownianBatch {
    grid: TimeGrid,
    dims: usize,
    paths: usize,
    seed: SeedSpec,
    /// Row-major `[path][step][dim]`.
    increments: Vec<f64>,
}

impl BrownianBatch {
    pub fn simulate(grid: TimeGrid, dims: usize, paths: usize, seed: SeedSpec) -> Result<Self> {
        Self::simulate_slice(grid, dims, 0, paths, seed)
    }

    /// Simulate paths `first_path .. first_path + paths` of the batch that
    /// `simulate` would produce with the same seed spec. Slices of a batch
    /// are bit-identical to the corresponding rows of the full batch, which
    /// allows large-`N` studies to run in bounded memory.
    pub fn simulate_slice(
        grid: TimeGrid,
        dims: usize,
        first_path: usize,
        paths: usize,
        seed: SeedSpec,
    ) -> Result<Self> {
        if dims == 0 {
            return Err(Error::invalid("dims must be at least 1"));
        }
        if paths == 0 {
            return Err(Error::invalid("paths must be at least 1"));
        }
        let n = grid.steps();
        let sqrt_dt: Vec<f64> = grid.dts().iter().map(|d| d.sqrt()).collect();
        let row = n * dims;
        let mut increments = vec![0.0_f64; paths * row];
        increments
            .par_chunks_mut(row)
            .enumerate()
            .for_each(|(p, out)| {
                let mut rng = seed.rng_for_path(first_path + p);
                let mut k = 0;
                for s in sqrt_dt.iter() {
                    for _ in 0..dims {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        out[k] = s * z;
                        k += 1;
                    }
                }
            });
        Ok(Self {
            grid,
            dims,
            paths,
            seed,
            increments,
        })
    }

    /// Wrap externally supplied increments (tests, replay).
    pub fn from_increments(
        grid: TimeGrid,
        dims: usize,
        paths: usize,
        increments: Vec<f64>,
        seed: SeedSpec,
    ) -> Result<Self> {
        if dims == 0 || paths == 0 {
            return Err(Error::invalid("dims and paths must be at least 1"));
        }
        let expected = paths * grid.steps() * dims;
        if increments.len() != expected {
            return Err(Error::invalid(format!(
                "increment buffer has length {} but paths*steps*dims = {expected}",
                increments.len()
            )));
        }
        if !increments.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("increments must be finite"));
        }
        Ok(Self {
            grid,
            dims,
            paths,
            seed,
            increments,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn seed(&self) -> SeedSpec {
        self.seed
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    #[inline]
    pub fn increment(&self, path: usize, step: usize, dim: usize) -> f64 {
        self.increments[(path * self.grid.steps() + step) * self.dims + dim]
    }

    #[inline]
    pub(crate) fn increment_row(&self, path: usize, step: usize) -> &[f64] {
        let start = (path * self.grid.steps() + step) * self.dims;
        &self.increments[start..start + self.dims]
    }

    /// Brownian levels of one path at every node, row-major `[node][dim]`,
    /// length `(N + 1) * dims`, starting at zero.
    pub fn path_values(&self, path: usize) -> Result<Vec<f64>> {
        if path >= self.paths {
            return Err(Error::invalid(format!(
                "path index {path} out of range (batch has {} paths)",
                self.paths
            )));
        }
        let n = self.grid.steps();
        let d = self.dims;
        let mut values = vec![0.0_f64; (n + 1) * d];
        for i in 0..n {
            let inc = self.increment_row(path, i);
            for j in 0..d {
                values[(i + 1) * d + j] = values[i * d + j] + inc[j];
            }
        }
        Ok(values)
    }

    /// Brownian levels for all paths, row-major `[path][node][dim]`.
    pub fn values_flat(&self) -> Vec<f64> {
        let n = self.grid.steps();
        let d = self.dims;
        let row = (n + 1) * d;
        let mut values = vec![0.0_f64; self.paths * row];
        values
            .par_chunks_mut(row)
            .enumerate()
            .for_each(|(p, out)| {
                for i in 0..n {
                    let inc = self.increment_row(p, i);
                    for j in 0..d {
                        out[(i + 1) * d + j] = out[i * d + j] + inc[j];
                    }
                }
            });
        values
    }

    /// Terminal level of one coordinate across all paths.
    pub fn terminal_component(&self, dim: usize) -> Vec<f64> {
        let n = self.grid.steps();
        (0..self.paths)
            .map(|p| (0..n).map(|i| self.increment(p, i, dim)).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduce::{det_mean_se, det_mean_var};

    fn small_grid() -> TimeGrid {
        TimeGrid::uniform(1.0, 8).unwrap()
    }

    #[test]
    fn identical_seeds_give_identical_bits() {
        let a = BrownianBatch::simulate(small_grid(), 2, 64, SeedSpec::new(7)).unwrap();
        let b = BrownianBatch::simulate(small_grid(), 2, 64, SeedSpec::new(7)).unwrap();
        assert_eq!(a.increments(), b.increments());
    }

    #[test]
    fn different_streams_differ() {
        let a = BrownianBatch::simulate(small_grid(), 1, 4, SeedSpec::new(7)).unwrap();
        let b = BrownianBatch::simulate(small_grid(), 1, 4, SeedSpec::with_offset(7, 1000)).unwrap();
        assert_ne!(a.increments(), b.increments());
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| BrownianBatch::simulate(small_grid(), 3, 512, SeedSpec::new(99)).unwrap())
        };
        assert_eq!(run(1).increments(), run(8).increments());
    }

    #[test]
    fn slice_matches_full_batch_rows() {
        let full = BrownianBatch::simulate(small_grid(), 2, 100, SeedSpec::new(5)).unwrap();
        let slice = BrownianBatch::simulate_slice(small_grid(), 2, 40, 10, SeedSpec::new(5)).unwrap();
        let row = small_grid().steps() * 2;
        assert_eq!(
            &full.increments()[40 * row..50 * row],
            slice.increments()
        );
    }

    #[test]
    fn path_values_are_prefix_sums() {
        let grid = TimeGrid::from_nodes(vec![0.0, 1.0, 2.0]).unwrap();
        let batch =
            BrownianBatch::from_increments(grid, 1, 1, vec![1.0, -1.0], SeedSpec::new(0)).unwrap();
        assert_eq!(batch.path_values(0).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn zero_increments_give_zero_values() {
        let grid = TimeGrid::uniform(1.0, 3).unwrap();
        let batch =
            BrownianBatch::from_increments(grid, 1, 2, vec![0.0; 6], SeedSpec::new(0)).unwrap();
        assert_eq!(batch.path_values(1).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn out_of_range_path_rejected() {
        let batch = BrownianBatch::simulate(small_grid(), 1, 4, SeedSpec::new(1)).unwrap();
        assert!(matches!(
            batch.path_values(4),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn increments_sum_to_terminal_value() {
        let batch = BrownianBatch::simulate(small_grid(), 1, 16, SeedSpec::new(11)).unwrap();
        for p in 0..16 {
            let values = batch.path_values(p).unwrap();
            let total: f64 = (0..8).map(|i| batch.increment(p, i, 0)).sum();
            assert_eq!(*values.last().unwrap(), total);
        }
    }

    #[test]
    fn terminal_mean_is_near_zero() {
        // CLT bound: |mean B_T| <= 3 sqrt(T / M) with overwhelming probability.
        let m = 100_000;
        let batch =
            BrownianBatch::simulate(TimeGrid::uniform(1.0, 4).unwrap(), 1, m, SeedSpec::new(2024))
                .unwrap();
        let terminal = batch.terminal_component(0);
        let (mean, _) = det_mean_se(&terminal);
        assert!(
            mean.abs() < 3.0 / (m as f64).sqrt(),
            "terminal mean {mean} outside CLT bound"
        );
    }

    #[test]
    fn increment_variance_matches_step_width() {
        // Sample variance of N(0, dt) over M paths lies within 5 standard
        // errors of dt, SE(s^2) = dt * sqrt(2 / (M - 1)).
        let m = 20_000;
        let grid = TimeGrid::uniform(2.0, 5).unwrap();
        let batch = BrownianBatch::simulate(grid.clone(), 1, m, SeedSpec::new(31)).unwrap();
        for step in 0..grid.steps() {
            let xs: Vec<f64> = (0..m).map(|p| batch.increment(p, step, 0)).collect();
            let (_, var) = det_mean_var(&xs);
            let dt = grid.dt(step);
            let se = dt * (2.0 / (m as f64 - 1.0)).sqrt();
            assert!(
                (var - dt).abs() < 5.0 * se,
                "step {step}: var {var} vs dt {dt} (se {se})"
            );
        }
    }

    #[test]
    fn disjoint_increments_are_uncorrelated() {
        let m = 20_000;
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let batch = BrownianBatch::simulate(grid, 2, m, SeedSpec::new(47)).unwrap();
        let pairs = [((0usize, 0usize), (1usize, 0usize)), ((0, 0), (0, 1)), ((2, 1), (3, 0))];
        for ((s1, d1), (s2, d2)) in pairs {
            let a: Vec<f64> = (0..m).map(|p| batch.increment(p, s1, d1)).collect();
            let b: Vec<f64> = (0..m).map(|p| batch.increment(p, s2, d2)).collect();
            let cov = crate::reduce::det_cov(&a, &b);
            let (_, va) = det_mean_var(&a);
            let (_, vb) = det_mean_var(&b);
            let corr = cov / (va * vb).sqrt();
            assert!(
                corr.abs() < 5.0 / (m as f64).sqrt(),
                "correlation {corr} between ({s1},{d1}) and ({s2},{d2})"
            );
        }
    }
}
