use crate::domain::TaskId;
use crate::error::{Error, Result};
use crate::simulators::toy_curve;
use crate::simulators::TOY_NOISE_STD;

/// Probability masses on a finite set of parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPosterior {
    pub task: TaskId,
    pub dim: usize,
    /// `n × dim`, row-major.
    pub points: Vec<f64>,
    pub masses: Vec<f64>,
}

impl GridPosterior {
    /// Normalizes unnormalized log weights. Fails if every weight is zero.
    pub fn from_log_weights(task: TaskId, dim: usize, points: Vec<f64>, log_w: &[f64]) -> Result<Self> {
        if points.len() != log_w.len() * dim {
            return Err(Error::Dimension {
                what: "grid points",
                found: points.len(),
                expected: log_w.len() * dim,
            });
        }
        let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::invalid("the observation has zero likelihood at every grid node"));
        }
        let mut masses: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = masses.iter().sum();
        masses.iter_mut().for_each(|m| *m /= z);
        Ok(GridPosterior { task, dim, points, masses })
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn expectation(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.len())
            .filter(|&i| self.masses[i] > 0.0)
            .map(|i| self.masses[i] * f(self.point(i)))
            .sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim).map(|d| self.expectation(|p| p[d])).collect()
    }

    /// Index of the largest mass (first on ties).
    pub fn map_index(&self) -> usize {
        let mut best = 0;
        for (i, &m) in self.masses.iter().enumerate() {
            if m > self.masses[best] {
                best = i;
            }
        }
        best
    }

    /// Interior strict local maxima of a 1D grid, ignoring masses below
    /// `floor` times the largest.
    pub fn local_maxima_1d(&self, floor: f64) -> Vec<usize> {
        let m = &self.masses;
        let top = m[self.map_index()];
        (1..m.len().saturating_sub(1))
            .filter(|&i| m[i] > m[i - 1] && m[i] >= m[i + 1] && m[i] > floor * top)
            .collect()
    }
}

/// Midpoint grid of `n` cells on `[lo, hi]`.
pub(crate) fn midpoints(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect()
}

pub const MIN_TOY_GRID: usize = 128;

/// `p(θ | x_o) ∝ N(x_o; 50 + 0.5 θ (5 − θ)^4, 10²)` on a midpoint grid over `[0, 5]`.
pub fn posterior_quadrature_toy(x_o: f64, grid_size: usize) -> Result<GridPosterior> {
    if grid_size < MIN_TOY_GRID {
        return Err(Error::invalid(format!("toy grid needs at least {MIN_TOY_GRID} points")));
    }
    if !x_o.is_finite() {
        return Err(Error::NonFinite(format!("observation {x_o}")));
    }
    let pts = midpoints(0.0, 5.0, grid_size);
    let log_w: Vec<f64> = pts
        .iter()
        .map(|&t| {
            let r = (x_o - toy_curve(t)) / TOY_NOISE_STD;
            -0.5 * r * r
        })
        .collect();
    GridPosterior::from_log_weights(TaskId::Toy, 1, pts, &log_w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_normalizes() {
        for x in [40.0, 114.0, 250.0, 600.0] {
            let p = posterior_quadrature_toy(x, 512).unwrap();
            assert!((p.masses.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.masses.iter().all(|&m| m >= 0.0));
        }
    }

    #[test]
    fn toy_bimodal_at_two_preimages() {
        // Scan the noise-free curve for the branches that reach 114.
        let pts = midpoints(0.0, 5.0, 100_000);
        let crossings: Vec<f64> = pts
            .windows(2)
            .filter(|w| (toy_curve(w[0]) - 114.0).signum() != (toy_curve(w[1]) - 114.0).signum())
            .map(|w| w[0])
            .collect();
        assert_eq!(crossings.len(), 2);
        let p = posterior_quadrature_toy(114.0, 2048).unwrap();
        let peaks = p.local_maxima_1d(1e-3);
        assert_eq!(peaks.len(), 2, "{peaks:?}");
        for (peak, c) in peaks.iter().zip(&crossings) {
            assert!((p.point(*peak)[0] - c).abs() < 0.15, "{} vs {c}", p.point(*peak)[0]);
        }
    }

    #[test]
    fn toy_mean_converges_with_grid() {
        for x in [60.0, 114.0, 200.0] {
            let a = posterior_quadrature_toy(x, 2048).unwrap().mean()[0];
            let b = posterior_quadrature_toy(x, 4096).unwrap().mean()[0];
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_small_grids_and_empty_likelihood() {
        assert!(posterior_quadrature_toy(100.0, 64).is_err());
        assert!(GridPosterior::from_log_weights(TaskId::Toy, 1, vec![0.0, 1.0], &[f64::NEG_INFINITY; 2]).is_err());
    }
}
