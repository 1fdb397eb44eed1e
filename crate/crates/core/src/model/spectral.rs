//! Fourier collocation on the periodic grid of active coordinates.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::fourier::FourierSeries;
use super::ActiveAxis;
use crate::error::{Error, Result};
use crate::exterior::MetricGram;

/// Wavenumber of FFT bin `bin` on a grid of `n` points over one `period`.
///
/// The Nyquist bin is assigned the one-sided wavenumber `+n/2`, so the only
/// function annihilated by the derivative is the constant.
pub fn wavenumber(bin: usize, n: usize, period: f64) -> f64 {
    let m = if bin <= n / 2 {
        bin as f64
    } else {
        bin as f64 - n as f64
    };
    TAU * m / period
}

/// Uniform periodic tensor grid; the first axis varies slowest.
#[derive(Clone, Debug)]
pub struct Grid {
    shape: Vec<usize>,
    periods: Vec<f64>,
    strides: Vec<usize>,
    points: usize,
}

impl Grid {
    pub fn new(axes: &[ActiveAxis]) -> Self {
        let shape: Vec<usize> = axes.iter().map(|a| a.grid).collect();
        let periods = axes.iter().map(|a| a.period).collect();
        let mut strides = vec![1; shape.len()];
        for a in (0..shape.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * shape[a + 1];
        }
        let points = shape.iter().product();
        Grid {
            shape,
            periods,
            strides,
            points,
        }
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn axes(&self) -> usize {
        self.shape.len()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Grid index along `axis` of the flat point `p`.
    pub fn index(&self, p: usize, axis: usize) -> usize {
        (p / self.strides[axis]) % self.shape[axis]
    }

    pub fn coordinates(&self, p: usize) -> Vec<f64> {
        (0..self.axes())
            .map(|a| self.index(p, a) as f64 * self.periods[a] / self.shape[a] as f64)
            .collect()
    }

    pub fn sample(&self, f: &FourierSeries) -> Vec<f64> {
        (0..self.points)
            .map(|p| f.eval(&self.coordinates(p), &self.periods))
            .collect()
    }

    /// Signed wavenumbers of the flat FFT bin `p` (same layout as points).
    pub fn wavevector(&self, p: usize) -> Vec<f64> {
        (0..self.axes())
            .map(|a| wavenumber(self.index(p, a), self.shape[a], self.periods[a]))
            .collect()
    }
}

fn fft_axis(data: &mut [Complex64], grid: &Grid, axis: usize, inverse: bool, planner: &mut FftPlanner<f64>) {
    let n = grid.shape[axis];
    let stride = grid.strides[axis];
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut line = vec![Complex64::default(); n];
    for base in 0..grid.points {
        if grid.index(base, axis) != 0 {
            continue;
        }
        for (i, v) in line.iter_mut().enumerate() {
            *v = data[base + i * stride];
        }
        fft.process(&mut line);
        for (i, v) in line.iter().enumerate() {
            data[base + i * stride] = *v;
        }
    }
}

/// Unnormalized multidimensional forward transform.
pub fn fft_forward(data: &mut [Complex64], grid: &Grid) {
    let mut planner = FftPlanner::new();
    for a in 0..grid.axes() {
        fft_axis(data, grid, a, false, &mut planner);
    }
}

/// Inverse of [`fft_forward`], including the `1/points` normalization.
pub fn fft_inverse(data: &mut [Complex64], grid: &Grid) {
    let mut planner = FftPlanner::new();
    for a in 0..grid.axes() {
        fft_axis(data, grid, a, true, &mut planner);
    }
    let scale = 1.0 / grid.points as f64;
    data.iter_mut().for_each(|v| *v *= scale);
}

/// Spectral derivative of periodic samples along one axis of the grid `shape`.
pub fn spectral_derivative(
    samples: &[Complex64],
    shape: &[usize],
    periods: &[f64],
    axis: usize,
) -> Result<Vec<Complex64>> {
    if axis >= shape.len() || periods.len() != shape.len() {
        return Err(Error::AxisNotActive(axis));
    }
    let axes: Vec<ActiveAxis> = shape
        .iter()
        .zip(periods)
        .enumerate()
        .map(|(c, (&grid, &period))| ActiveAxis {
            coframe: c,
            period,
            grid,
        })
        .collect();
    let grid = Grid::new(&axes);
    if samples.len() != grid.points {
        return Err(Error::ShapeMismatch {
            len: samples.len(),
            shape: shape.to_vec(),
        });
    }
    let mut data = samples.to_vec();
    let mut planner = FftPlanner::new();
    fft_axis(&mut data, &grid, axis, false, &mut planner);
    for (p, v) in data.iter_mut().enumerate() {
        let k = wavenumber(grid.index(p, axis), shape[axis], periods[axis]);
        *v *= Complex64::new(0.0, k);
    }
    fft_axis(&mut data, &grid, axis, true, &mut planner);
    let scale = 1.0 / shape[axis] as f64;
    data.iter_mut().for_each(|v| *v *= scale);
    Ok(data)
}

/// The `n × n` matrix of the one-dimensional spectral derivative.
pub fn derivative_matrix(n: usize, period: f64) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(n, n);
    let mut col = vec![Complex64::default(); n];
    for j in 0..n {
        col.iter_mut().for_each(|v| *v = Complex64::default());
        col[j] = Complex64::new(1.0, 0.0);
        let d = spectral_derivative(&col, &[n], &[period], 0).expect("single axis");
        m.set_column(j, &DVector::from_vec(d));
    }
    m
}

/// Result of a least-squares potential solve `dh ≈ ω`.
#[derive(Clone, Debug)]
pub struct Potential {
    /// Mean-zero potential sampled on the grid.
    pub h: Vec<Complex64>,
    /// `‖dh − ω‖` in the model L² norm.
    pub residual: f64,
    /// `‖ω‖` in the same norm.
    pub norm: f64,
}

impl Potential {
    /// Exactness as declared by the relative tolerance `1e-10`.
    pub fn exact(&self) -> bool {
        self.residual <= 1e-10 * self.norm
    }
}

/// Mode-by-mode least squares for `dh = ω`, with `ω` given by its `q` component
/// samples per grid point (point-major). Closedness is not checked here.
pub fn least_squares_potential(
    omega: &[Complex64],
    grid: &Grid,
    active: &[ActiveAxis],
    metric: &MetricGram,
) -> Potential {
    let q = metric.q();
    let points = grid.points();
    let cov = metric.covectors();
    let spectra: Vec<Vec<Complex64>> = (0..q)
        .map(|c| {
            let mut line: Vec<Complex64> = (0..points).map(|p| omega[p * q + c]).collect();
            fft_forward(&mut line, grid);
            line
        })
        .collect();
    let quad = |u: &[Complex64], v: &[Complex64]| -> Complex64 {
        let mut s = Complex64::default();
        for i in 0..q {
            for j in 0..q {
                s += u[i].conj() * cov[(i, j)] * v[j];
            }
        }
        s
    };
    let mut h_hat = vec![Complex64::default(); points];
    let (mut res2, mut norm2) = (0.0, 0.0);
    for p in 0..points {
        let w: Vec<Complex64> = (0..q).map(|c| spectra[c][p]).collect();
        let mut v = vec![Complex64::default(); q];
        for (a, k) in grid.wavevector(p).into_iter().enumerate() {
            v[active[a].coframe] = Complex64::new(0.0, k);
        }
        let vv = quad(&v, &v).re;
        let h = if vv > 0.0 {
            quad(&v, &w) / vv
        } else {
            Complex64::default()
        };
        h_hat[p] = h;
        let r: Vec<Complex64> = (0..q).map(|c| w[c] - v[c] * h).collect();
        res2 += quad(&r, &r).re;
        norm2 += quad(&w, &w).re;
    }
    fft_inverse(&mut h_hat, grid);
    let scale = metric.volume() / (points as f64 * points as f64);
    Potential {
        h: h_hat,
        residual: (res2 * scale).max(0.0).sqrt(),
        norm: (norm2 * scale).max(0.0).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn derivative_of_sine_is_exact() {
        let n = 64;
        let s: Vec<Complex64> = (0..n).map(|i| c((TAU * i as f64 / n as f64).sin())).collect();
        let d = spectral_derivative(&s, &[n], &[1.0], 0).unwrap();
        for (i, v) in d.iter().enumerate() {
            let expect = TAU * (TAU * i as f64 / n as f64).cos();
            assert!((v - c(expect)).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_constant_and_single_mode() {
        let n = 16;
        let d = spectral_derivative(&vec![c(3.0); n], &[n], &[1.0], 0).unwrap();
        assert!(d.iter().all(|v| v.norm() < 1e-13));
        let e: Vec<Complex64> = (0..n)
            .map(|i| Complex64::from_polar(1.0, TAU * 3.0 * i as f64 / n as f64))
            .collect();
        let d = spectral_derivative(&e, &[n], &[1.0], 0).unwrap();
        for (v, ei) in d.iter().zip(&e) {
            assert!((v - Complex64::new(0.0, 6.0 * std::f64::consts::PI) * ei).norm() < 1e-12);
        }
    }

    #[test]
    fn inactive_axis_is_an_error() {
        assert!(matches!(
            spectral_derivative(&[c(0.0); 8], &[8], &[1.0], 1),
            Err(Error::AxisNotActive(1))
        ));
    }

    #[test]
    fn nyquist_mode_is_not_annihilated() {
        let d = derivative_matrix(8, 1.0);
        let alt: Vec<Complex64> = (0..8).map(|i| c(if i % 2 == 0 { 1.0 } else { -1.0 })).collect();
        let out = &d * DVector::from_vec(alt.clone());
        for (o, a) in out.iter().zip(&alt) {
            assert!((o - Complex64::new(0.0, TAU * 4.0) * a).norm() < 1e-12);
        }
        // anti-Hermitian
        assert!((&d + d.adjoint()).camax() < 1e-12);
    }

    #[test]
    fn mixed_partials_commute() {
        let axes = [
            ActiveAxis {
                coframe: 0,
                period: 1.0,
                grid: 8,
            },
            ActiveAxis {
                coframe: 1,
                period: 2.0,
                grid: 10,
            },
        ];
        let grid = Grid::new(&axes);
        let f: Vec<Complex64> = (0..grid.points()).map(|p| c(((p * 37) % 11) as f64 - 5.0)).collect();
        let shape = grid.shape().to_vec();
        let periods = grid.periods().to_vec();
        let xy = spectral_derivative(
            &spectral_derivative(&f, &shape, &periods, 0).unwrap(),
            &shape,
            &periods,
            1,
        )
        .unwrap();
        let yx = spectral_derivative(
            &spectral_derivative(&f, &shape, &periods, 1).unwrap(),
            &shape,
            &periods,
            0,
        )
        .unwrap();
        let err = xy.iter().zip(&yx).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let scale = xy.iter().map(|a| a.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12 * scale.max(1.0));
    }

    fn circle(n: usize) -> (Grid, Vec<ActiveAxis>, MetricGram) {
        let axes = vec![ActiveAxis {
            coframe: 0,
            period: 1.0,
            grid: n,
        }];
        (Grid::new(&axes), axes, MetricGram::identity(1))
    }

    #[test]
    fn potential_of_exact_form() {
        let (grid, axes, metric) = circle(32);
        let omega: Vec<Complex64> = (0..32).map(|i| c(TAU * (TAU * i as f64 / 32.0).cos())).collect();
        let pot = least_squares_potential(&omega, &grid, &axes, &metric);
        assert!(pot.residual < 1e-12);
        assert!(pot.exact());
        for (i, h) in pot.h.iter().enumerate() {
            assert!((h - c((TAU * i as f64 / 32.0).sin())).norm() < 1e-12);
        }
    }

    #[test]
    fn potential_zero_mode_obstruction() {
        let (grid, axes, metric) = circle(16);
        let pot = least_squares_potential(&vec![c(0.7); 16], &grid, &axes, &metric);
        assert!((pot.residual - 0.7).abs() < 1e-14);
        assert!(!pot.exact());
        let zero = least_squares_potential(&vec![c(0.0); 16], &grid, &axes, &metric);
        assert_eq!(zero.residual, 0.0);
        assert!(zero.exact());
        assert!(zero.h.iter().all(|h| h.norm() == 0.0));
    }
}
