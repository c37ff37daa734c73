//! Finite-difference grids and channel-stacked states.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Uniform cell-centered grid on the box `[-L, L]^n` with homogeneous
/// Dirichlet walls half a cell outside the outermost points.
///
/// Points per axis sit at `x_i = -L + (i + 1/2) h` with `h = 2L/N`, which
/// keeps the grid symmetric about the origin. The discrete Dirichlet
/// Laplacian then has the exact eigenvectors `sin(kπ(x + L̃)/(2L̃))` with
/// `L̃ = L + h/2` (walls at `±L̃`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Self {
        assert!(dim == 1 || dim == 2, "only 1D and 2D grids are supported");
        assert!(points_per_axis % 2 == 0, "points_per_axis must be even");
        assert!(half_width > 0.0);
        Grid {
            dim,
            half_width,
            points_per_axis,
        }
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// Half-distance between the Dirichlet walls: `L + h/2`.
    #[inline]
    pub fn wall_half_width(&self) -> f64 {
        self.half_width + 0.5 * self.spacing()
    }

    #[inline]
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    pub fn axis_coords(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|i| self.axis_coord(i)).collect()
    }

    /// Total number of spatial points `N^n`.
    #[inline]
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cartesian coordinates of the point with flat index `p` (x fastest).
    pub fn point(&self, p: usize) -> Vec<f64> {
        match self.dim {
            1 => vec![self.axis_coord(p)],
            2 => {
                let n = self.points_per_axis;
                vec![self.axis_coord(p % n), self.axis_coord(p / n)]
            }
            _ => unreachable!(),
        }
    }

    /// Euclidean radius of point `p`.
    pub fn radius(&self, p: usize) -> f64 {
        match self.dim {
            1 => self.axis_coord(p).abs(),
            2 => {
                let n = self.points_per_axis;
                let x = self.axis_coord(p % n);
                let y = self.axis_coord(p / n);
                (x * x + y * y).sqrt()
            }
            _ => unreachable!(),
        }
    }

    /// Max-coordinate (box) radius of point `p`; used for the boundary shell.
    pub fn radius_linf(&self, p: usize) -> f64 {
        match self.dim {
            1 => self.axis_coord(p).abs(),
            2 => {
                let n = self.points_per_axis;
                let x = self.axis_coord(p % n).abs();
                let y = self.axis_coord(p / n).abs();
                x.max(y)
            }
            _ => unreachable!(),
        }
    }

    /// Evaluate a scalar function on every grid point.
    pub fn evaluate<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|p| f(&self.point(p))).collect()
    }
}

/// Complex state on the channel-stacked space `⊕_j L²(grid)`, blocked by
/// channel: entries `[j * len .. (j+1) * len)` hold channel `j`.
#[derive(Clone, Debug)]
pub struct DiscreteState {
    pub values: Vec<Complex64>,
    pub channels: usize,
    pub points: usize,
}

impl DiscreteState {
    pub fn zeros(channels: usize, points: usize) -> Self {
        DiscreteState {
            values: vec![Complex64::ZERO; channels * points],
            channels,
            points,
        }
    }

    pub fn from_real(channels: usize, re: &[f64]) -> Self {
        assert_eq!(re.len() % channels, 0);
        DiscreteState {
            values: re.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            channels,
            points: re.len() / channels,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn channel(&self, j: usize) -> &[Complex64] {
        &self.values[j * self.points..(j + 1) * self.points]
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for z in &mut self.values {
                *z /= n;
            }
        }
    }

    pub fn channel_norm_sq(&self, j: usize) -> f64 {
        self.channel(j).iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &DiscreteState) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Split into real and imaginary parts (channel-stacked flat vectors).
    pub fn split_re_im(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.values.iter().map(|z| z.re).collect(),
            self.values.iter().map(|z| z.im).collect(),
        )
    }

    pub fn from_re_im(channels: usize, re: &[f64], im: &[f64]) -> Self {
        assert_eq!(re.len(), im.len());
        DiscreteState {
            values: re
                .iter()
                .zip(im)
                .map(|(&r, &i)| Complex64::new(r, i))
                .collect(),
            channels,
            points: re.len() / channels,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_centered_and_consistent() {
        let g = Grid::new(1, 10.0, 256);
        assert!((g.spacing() * 256.0 - 20.0).abs() < 1e-14);
        let xs = g.axis_coords();
        for (a, b) in xs.iter().zip(xs.iter().rev()) {
            assert!((a + b).abs() < 1e-12, "grid not symmetric about 0");
        }
        assert_eq!(g.len(), 256);
        let g2 = Grid::new(2, 5.0, 16);
        assert_eq!(g2.len(), 256);
        let p = g2.point(17); // ix=1, iy=1
        assert!((p[0] - g2.axis_coord(1)).abs() < 1e-15);
        assert!((p[1] - g2.axis_coord(1)).abs() < 1e-15);
    }

    #[test]
    fn state_channel_blocks() {
        let mut s = DiscreteState::zeros(2, 4);
        s.values[0] = Complex64::new(3.0, 0.0);
        s.values[4] = Complex64::new(4.0, 0.0);
        assert!((s.channel_norm_sq(0) - 9.0).abs() < 1e-15);
        assert!((s.channel_norm_sq(1) - 16.0).abs() < 1e-15);
        assert!((s.norm() - 5.0).abs() < 1e-15);
        s.normalize();
        assert!((s.norm() - 1.0).abs() < 1e-15);
    }
}
