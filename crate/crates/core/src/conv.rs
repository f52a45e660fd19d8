//! Discrete convolution of node samples with kernels given on integer
//! offsets:
//!
//! `out[x] = Σ_t Σ_{x' in box} K_t(x − x') f_t(x')`.
//!
//! Two engines compute the same finite sum: direct summation over the
//! kernel stencil, and zero-padded FFT with the padding chosen so that no
//! wrap-around term survives.

use alloc::vec;
use alloc::vec::Vec;

use crate::exec::{for_each_chunk, Executor};
use crate::fft;
use crate::fields::Grid;

pub type LatticeKernel<'a> = dyn Fn([isize; 3]) -> f64 + Sync + 'a;

pub struct Term<'a> {
    /// Kernel at an integer offset; unused components are zero.
    pub kernel: &'a LatticeKernel<'a>,
    pub field: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumMethod {
    Direct,
    Fft,
    /// Picks whichever engine has the lower operation count.
    #[default]
    Auto,
}

/// Offsets of the box `[-r, r]^d`, first axis slowest.
pub fn offsets(dim: usize, r: usize) -> impl Iterator<Item = [isize; 3]> {
    let r = r as isize;
    let w = (2 * r + 1) as usize;
    let total = w.pow(dim as u32);
    (0..total).map(move |k| {
        let mut o = [0isize; 3];
        let mut rest = k;
        for a in (0..dim).rev() {
            o[a] = (rest % w) as isize - r;
            rest /= w;
        }
        o
    })
}

/// Padded FFT length for kernels supported in `[-r, r]^d`.
pub fn padded_len(n: usize, r: usize) -> usize {
    (n + r.min(n - 1)).next_power_of_two()
}

fn cost_direct(grid: &Grid, terms: usize, r: usize) -> f64 {
    let w = (2 * r + 1) as f64;
    terms as f64 * libm::pow(w, grid.dim() as f64) * grid.len() as f64
}

fn cost_fft(grid: &Grid, terms: usize, r: usize) -> f64 {
    let m = padded_len(grid.n(), r) as f64;
    let cube = libm::pow(m, grid.dim() as f64);
    (terms + 1) as f64 * cube * libm::log2(cube) * 3.0
}

/// Sum of all terms; `support` bounds the kernels' offsets in the max
/// norm (`None` means the whole box).
pub fn convolve(
    grid: &Grid,
    terms: &[Term<'_>],
    support: Option<usize>,
    method: SumMethod,
    exec: &dyn Executor,
) -> Vec<f64> {
    let r = support.unwrap_or(grid.n() - 1).min(grid.n() - 1);
    let use_fft = match method {
        SumMethod::Direct => false,
        SumMethod::Fft => true,
        SumMethod::Auto => cost_fft(grid, terms.len(), r) < cost_direct(grid, terms.len(), r),
    };
    if use_fft {
        convolve_fft(grid, terms, r, exec)
    } else {
        convolve_direct(grid, terms, r, exec)
    }
}

fn convolve_direct(grid: &Grid, terms: &[Term<'_>], r: usize, exec: &dyn Executor) -> Vec<f64> {
    let d = grid.dim();
    let n = grid.n() as isize;
    let stencils: Vec<Vec<([isize; 3], f64)>> = terms
        .iter()
        .map(|t| {
            offsets(d, r)
                .filter_map(|o| {
                    let v = (t.kernel)(o);
                    (v != 0.0).then_some((o, v))
                })
                .collect()
        })
        .collect();
    let slab = grid.len() / grid.n();
    let st = grid.strides();
    let mut out = vec![0.0; grid.len()];
    for_each_chunk(exec, &mut out, slab, &|i0, chunk| {
        let i0 = i0 as isize;
        for (t, stencil) in terms.iter().zip(&stencils) {
            let f = t.field;
            for &(o, v) in stencil {
                let j0 = i0 - o[0];
                if j0 < 0 || j0 >= n {
                    continue;
                }
                let src0 = j0 as usize * st[0];
                let lo1 = o[1].max(0);
                let hi1 = n.min(n + o[1]);
                if d == 2 {
                    for i1 in lo1..hi1 {
                        chunk[i1 as usize] += v * f[src0 + (i1 - o[1]) as usize];
                    }
                } else {
                    let lo2 = o[2].max(0) as usize;
                    let hi2 = n.min(n + o[2]) as usize;
                    let sh2 = o[2];
                    for i1 in lo1..hi1 {
                        let dst = i1 as usize * st[1];
                        let src = src0 + (i1 - o[1]) as usize * st[1];
                        let row_out = &mut chunk[dst + lo2..dst + hi2];
                        let start = (lo2 as isize - sh2) as usize;
                        let row_in = &f[src + start..src + start + (hi2 - lo2)];
                        for (a, b) in row_out.iter_mut().zip(row_in) {
                            *a += v * b;
                        }
                    }
                }
            }
        }
    });
    out
}

fn wrap(o: isize, m: usize) -> usize {
    o.rem_euclid(m as isize) as usize
}

fn convolve_fft(grid: &Grid, terms: &[Term<'_>], r: usize, exec: &dyn Executor) -> Vec<f64> {
    let d = grid.dim();
    let n = grid.n();
    let m = padded_len(n, r);
    let mut acc = fft::zeros(d, m);
    let mut kbuf = fft::zeros(d, m);
    let mut fbuf = fft::zeros(d, m);
    let mut scratch = Vec::new();
    let mstr: [usize; 3] = if d == 2 { [m, 1, 0] } else { [m * m, m, 1] };
    // Two real transforms per complex transform: term `a` in the real
    // part, term `b` in the imaginary part.
    for pair in terms.chunks(2) {
        kbuf.iter_mut().for_each(|v| *v = 0.0);
        fbuf.iter_mut().for_each(|v| *v = 0.0);
        for (part, t) in pair.iter().enumerate() {
            for o in offsets(d, r) {
                let v = (t.kernel)(o);
                if v != 0.0 {
                    let k = (0..d).map(|a| wrap(o[a], m) * mstr[a]).sum::<usize>();
                    kbuf[2 * k + part] = v;
                }
            }
            for l in 0..grid.len() {
                let idx = grid.multi_index(l);
                let k = (0..d).map(|a| idx[a] * mstr[a]).sum::<usize>();
                fbuf[2 * k + part] = t.field[l];
            }
        }
        fft::fft_nd(&mut kbuf, &mut scratch, d, m, false, exec);
        fft::fft_nd(&mut fbuf, &mut scratch, d, m, false, exec);
        let zk: &[f64] = &kbuf;
        let zf: &[f64] = &fbuf;
        for_each_chunk(exec, &mut acc, 2 * m, &|line, out| {
            for (q, slot) in out.chunks_mut(2).enumerate() {
                let k = line * m + q;
                let mut neg = 0;
                let mut rest = k;
                for a in (0..d).rev() {
                    let c = rest % m;
                    rest /= m;
                    neg += ((m - c) % m) * mstr[a];
                }
                let (ka, kb) = split(zk, k, neg);
                let (fa, fb) = split(zf, k, neg);
                slot[0] += ka.0 * fa.0 - ka.1 * fa.1 + kb.0 * fb.0 - kb.1 * fb.1;
                slot[1] += ka.0 * fa.1 + ka.1 * fa.0 + kb.0 * fb.1 + kb.1 * fb.0;
            }
        });
    }
    fft::fft_nd(&mut acc, &mut scratch, d, m, true, exec);
    (0..grid.len())
        .map(|l| {
            let idx = grid.multi_index(l);
            acc[2 * (0..d).map(|a| idx[a] * mstr[a]).sum::<usize>()]
        })
        .collect()
}

/// Spectra of the real and imaginary parts of a packed transform:
/// `A = (Z(k) + conj Z(−k)) / 2`, `B = (Z(k) − conj Z(−k)) / 2i`.
#[inline]
fn split(z: &[f64], k: usize, neg: usize) -> ((f64, f64), (f64, f64)) {
    let (zr, zi) = (z[2 * k], z[2 * k + 1]);
    let (nr, ni) = (z[2 * neg], -z[2 * neg + 1]);
    (
        (0.5 * (zr + nr), 0.5 * (zi + ni)),
        (0.5 * (zi - ni), -0.5 * (zr - nr)),
    )
}
