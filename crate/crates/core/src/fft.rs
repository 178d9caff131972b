//! Separable 3D complex FFTs over flat x-fastest buffers.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

fn transform(data: &mut [Complex64], dims: [usize; 3], direction: Direction) {
    assert_eq!(data.len(), dims[0] * dims[1] * dims[2]);
    let mut planner = FftPlanner::<f64>::new();
    let strides = [1, dims[0], dims[0] * dims[1]];
    for axis in 0..3 {
        let n = dims[axis];
        if n == 1 {
            continue;
        }
        let plan: Arc<dyn Fft<f64>> = match direction {
            Direction::Forward => planner.plan_fft_forward(n),
            Direction::Inverse => planner.plan_fft_inverse(n),
        };
        let stride = strides[axis];
        // Lane starting offsets: every index whose coordinate along `axis` is 0.
        let starts: Vec<usize> = (0..data.len())
            .filter(|&idx| (idx / stride) % n == 0)
            .collect();
        if axis == 0 {
            data.par_chunks_mut(n).for_each(|lane| plan.process(lane));
            continue;
        }
        let src: &[Complex64] = data;
        let lanes: Vec<Vec<Complex64>> = starts
            .par_iter()
            .map(|&s| {
                let mut lane: Vec<Complex64> = (0..n).map(|t| src[s + t * stride]).collect();
                plan.process(&mut lane);
                lane
            })
            .collect();
        for (s, lane) in starts.iter().zip(lanes) {
            for (t, v) in lane.into_iter().enumerate() {
                data[s + t * stride] = v;
            }
        }
    }
    if direction == Direction::Inverse {
        let scale = 1.0 / data.len() as f64;
        data.par_iter_mut().for_each(|v| *v *= scale);
    }
}

pub fn forward(data: &mut [Complex64], dims: [usize; 3]) {
    transform(data, dims, Direction::Forward);
}

/// Normalized inverse: `inverse(forward(x)) == x` up to round-off.
pub fn inverse(data: &mut [Complex64], dims: [usize; 3]) {
    transform(data, dims, Direction::Inverse);
}

pub fn forward_real(values: &[f64], dims: [usize; 3]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward(&mut data, dims);
    data
}

/// Signed frequency index of DFT bin `k` on an axis of `n` samples.
#[inline]
pub fn signed_frequency(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dims = [6, 5, 4];
        let values: Vec<f64> = (0..120).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let mut data = forward_real(&values, dims);
        inverse(&mut data, dims);
        for (a, b) in data.iter().zip(&values) {
            assert!((a.re - b).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_dft_on_small_grid() {
        let dims = [3, 4, 2];
        let n = 24;
        let values: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let fast = forward_real(&values, dims);
        let tau = std::f64::consts::TAU;
        for kz in 0..dims[2] {
            for ky in 0..dims[1] {
                for kx in 0..dims[0] {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for z in 0..dims[2] {
                        for y in 0..dims[1] {
                            for x in 0..dims[0] {
                                let phase = -tau
                                    * ((kx * x) as f64 / dims[0] as f64
                                        + (ky * y) as f64 / dims[1] as f64
                                        + (kz * z) as f64 / dims[2] as f64);
                                acc += values[x + dims[0] * (y + dims[1] * z)]
                                    * Complex64::from_polar(1.0, phase);
                            }
                        }
                    }
                    let got = fast[kx + dims[0] * (ky + dims[1] * kz)];
                    assert!((got - acc).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn signed_frequencies() {
        assert_eq!(signed_frequency(0, 8), 0.0);
        assert_eq!(signed_frequency(4, 8), 4.0);
        assert_eq!(signed_frequency(5, 8), -3.0);
        assert_eq!(signed_frequency(3, 5), -2.0);
    }
}
