//! Structural similarity between images, used to order class pairs by
//! how visually close their class-mean images are.
//!
//! The index follows the windowed form: an 11x11 Gaussian window (sigma
//! 1.5, normalized to unit sum) slides over every position where it fits
//! entirely inside both images, local weighted moments feed the usual
//! luminance/contrast/structure ratio, and the final value is the mean
//! over window positions. No padding is applied.

use crate::data::ImageDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub k1: f64,
    pub k2: f64,
    /// Value range of the inputs; images scaled into `[0, 1]` use 1.
    pub dynamic_range: f64,
    pub window_side: usize,
    pub sigma: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
            window_side: 11,
            sigma: 1.5,
        }
    }
}

/// Gaussian weights for a `side x side` window, normalized to sum 1,
/// in row-major order.
pub fn gaussian_window(side: usize, sigma: f64) -> Vec<f64> {
    assert!(side >= 1 && side % 2 == 1, "window side must be odd");
    assert!(sigma > 0.0);
    let r = (side / 2) as isize;
    let mut w = Vec::with_capacity(side * side);
    for i in -r..=r {
        for j in -r..=r {
            let d2 = (i * i + j * j) as f64;
            w.push((-d2 / (2.0 * sigma * sigma)).exp());
        }
    }
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}

/// Structural similarity of two equally sized images. Both must be at
/// least as large as the window in each dimension.
pub fn ssim(x: &Matrix, y: &Matrix, params: &SsimParams) -> Result<f64> {
    if x.shape() != y.shape() {
        return Err(Error::invalid(format!(
            "ssim inputs differ in shape: {:?} vs {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let side = params.window_side;
    if x.rows() < side || x.cols() < side {
        return Err(Error::invalid(format!(
            "image {}x{} is smaller than the {side}x{side} ssim window",
            x.rows(),
            x.cols()
        )));
    }
    let w = gaussian_window(side, params.sigma);
    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);
    let mut sum = 0.0;
    let mut count = 0usize;
    for top in 0..=(x.rows() - side) {
        for left in 0..=(x.cols() - side) {
            let mut mx = 0.0;
            let mut my = 0.0;
            let mut mxx = 0.0;
            let mut myy = 0.0;
            let mut mxy = 0.0;
            for wi in 0..side {
                let xr = &x.row(top + wi)[left..left + side];
                let yr = &y.row(top + wi)[left..left + side];
                let wr = &w[wi * side..(wi + 1) * side];
                for wj in 0..side {
                    let weight = wr[wj];
                    let xv = xr[wj];
                    let yv = yr[wj];
                    mx += weight * xv;
                    my += weight * yv;
                    mxx += weight * xv * xv;
                    myy += weight * yv * yv;
                    mxy += weight * xv * yv;
                }
            }
            let vx = mxx - mx * mx;
            let vy = myy - my * my;
            let cov = mxy - mx * my;
            let value = ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            sum += value;
            count += 1;
        }
    }
    Ok(sum / count as f64)
}

/// Mean image of each class as a unit-scaled matrix, indexed by class id.
/// Errors if any of the ten classes has no examples.
pub fn class_mean_images(ds: &ImageDataset) -> Result<Vec<Matrix>> {
    let (rows, cols) = ds.image_shape();
    let mut sums = vec![vec![0.0f64; rows * cols]; 10];
    let mut counts = [0usize; 10];
    for (im, &label) in ds.images().iter().zip(ds.labels()) {
        let acc = &mut sums[label as usize];
        for (a, &p) in acc.iter_mut().zip(&im.pixels) {
            *a += p as f64 / 255.0;
        }
        counts[label as usize] += 1;
    }
    let mut out = Vec::with_capacity(10);
    for (class, (mut sum, count)) in sums.into_iter().zip(counts).enumerate() {
        if count == 0 {
            return Err(Error::EmptyClass { class: class as u8 });
        }
        for v in &mut sum {
            *v /= count as f64;
        }
        out.push(Matrix::from_vec(rows, cols, sum));
    }
    Ok(out)
}

/// Pairwise distance `1 - ssim` between the given images. Symmetric with
/// an exactly zero diagonal.
pub fn distance_matrix(images: &[Matrix], params: &SsimParams) -> Result<Matrix> {
    if images.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = images.len();
    let mut dist = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = 1.0 - ssim(&images[i], &images[j], params)?;
            dist.set(i, j, d);
            dist.set(j, i, d);
        }
    }
    Ok(dist)
}

/// Class-mean SSIM distances for a dataset: entry `(i, j)` is
/// `1 - ssim(mean image of class i, mean image of class j)`.
pub fn ssim_distance_matrix(ds: &ImageDataset, params: &SsimParams) -> Result<Matrix> {
    distance_matrix(&class_mean_images(ds)?, params)
}

/// Off-diagonal extremes of a symmetric distance matrix: the pair with
/// the smallest distance and the pair with the largest, ties resolved in
/// row-major order. Pairs are reported as `(i, j)` with `i < j`.
pub fn closest_and_farthest_pairs(dist: &Matrix) -> ((usize, usize), (usize, usize)) {
    assert_eq!(dist.rows(), dist.cols());
    assert!(dist.rows() >= 2);
    let mut closest = (0, 1);
    let mut farthest = (0, 1);
    for i in 0..dist.rows() {
        for j in (i + 1)..dist.cols() {
            if dist.get(i, j) < dist.get(closest.0, closest.1) {
                closest = (i, j);
            }
            if dist.get(i, j) > dist.get(farthest.0, farthest.1) {
                farthest = (i, j);
            }
        }
    }
    (closest, farthest)
}
