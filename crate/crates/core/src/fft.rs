//! Radix-2 complex FFT on interleaved `re, im` buffers, and its
//! multidimensional extension on `m^d` cubes.

use alloc::vec;
use alloc::vec::Vec;

use crate::exec::{for_each_chunk, Executor};
use crate::math;

#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    /// `exp(-2πik/n)` for `k < n/2`, interleaved.
    twiddles: Vec<f64>,
    bitrev: Vec<usize>,
}

impl Fft {
    /// Panics unless `n` is a power of two.
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT length must be a power of two");
        let half = n / 2;
        let mut twiddles = Vec::with_capacity(2 * half);
        for k in 0..half {
            let a = -2.0 * math::PI * k as f64 / n as f64;
            twiddles.push(math::cos(a));
            twiddles.push(math::sin(a));
        }
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Fft { n, twiddles, bitrev }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place transform of `2n` interleaved values. The inverse is scaled
    /// by `1/n`.
    pub fn process(&self, buf: &mut [f64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(buf.len(), 2 * n);
        for i in 0..n {
            let j = self.bitrev[i];
            if j > i {
                buf.swap(2 * i, 2 * j);
                buf.swap(2 * i + 1, 2 * j + 1);
            }
        }
        let sign = if inverse { -1.0 } else { 1.0 };
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let wr = self.twiddles[2 * k * step];
                    let wi = sign * self.twiddles[2 * k * step + 1];
                    let a = 2 * (start + k);
                    let b = 2 * (start + k + half);
                    let (xr, xi) = (buf[b], buf[b + 1]);
                    let tr = wr * xr - wi * xi;
                    let ti = wr * xi + wi * xr;
                    buf[b] = buf[a] - tr;
                    buf[b + 1] = buf[a + 1] - ti;
                    buf[a] += tr;
                    buf[a + 1] += ti;
                }
            }
            len *= 2;
        }
        if inverse {
            let s = 1.0 / n as f64;
            for v in buf.iter_mut() {
                *v *= s;
            }
        }
    }
}

/// Lines gathered per chunk in a multidimensional pass.
const BATCH: usize = 16;

/// In-place `d`-dimensional transform of an `m^d` complex cube stored
/// row-major and interleaved. `scratch` is resized as needed.
///
/// Each pass transforms along the slowest axis and writes the result with
/// that axis moved to the fastest position, so `d` passes restore the
/// original layout.
pub fn fft_nd(
    data: &mut Vec<f64>,
    scratch: &mut Vec<f64>,
    dim: usize,
    m: usize,
    inverse: bool,
    exec: &dyn Executor,
) {
    let plan = Fft::new(m);
    let lines = m.pow(dim as u32 - 1);
    debug_assert_eq!(data.len(), 2 * m * lines);
    scratch.resize(data.len(), 0.0);
    for _ in 0..dim {
        {
            let src: &[f64] = data;
            for_each_chunk(exec, scratch, 2 * m * BATCH, &|c, out| {
                let first = c * BATCH;
                let count = out.len() / (2 * m);
                for k in 0..m {
                    let row = 2 * (k * lines + first);
                    for r in 0..count {
                        out[2 * (r * m + k)] = src[row + 2 * r];
                        out[2 * (r * m + k) + 1] = src[row + 2 * r + 1];
                    }
                }
                for line in out.chunks_mut(2 * m) {
                    plan.process(line, inverse);
                }
            });
        }
        core::mem::swap(data, scratch);
    }
}

/// Complex buffer of an `m^d` cube, zero-filled.
pub fn zeros(dim: usize, m: usize) -> Vec<f64> {
    vec![0.0; 2 * m.pow(dim as u32)]
}
