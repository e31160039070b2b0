//! Periodic tensor-product grid and the discrete Fourier machinery on it.
//!
//! Storage order for every field (spectral and physical) is row-major over
//! the axis indices `(i0, i1[, i2])`, last axis fastest. Along each axis the
//! storage index `i` carries the wave index `a = i` for `i <= n/2` and
//! `a = i - n` otherwise, so `a` ranges over `-n/2+1 ..= n/2`. The wavevector
//! is `k = 2*pi*a/L`.
//!
//! Spectral coefficients follow the Fourier-series convention
//! `u(x) = sum_k u_k exp(i k.x)`, i.e. the forward transform is the
//! unnormalized DFT divided by `n^d`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

const LINES_PER_TASK: usize = 32;

pub struct WaveGrid {
    dim: usize,
    n: usize,
    length: f64,
    dealias_cutoff: usize,
    wave_index: Vec<[i32; 3]>,
    mirror: Vec<usize>,
    kvec: Vec<[f64; 3]>,
    /// `kvec` with Nyquist modes zeroed, the symbol of the discrete gradient
    dk: Vec<[f64; 3]>,
    k2: Vec<f64>,
    a2: Vec<u32>,
    max_a2: u32,
    nyquist: Vec<bool>,
    retained: Vec<bool>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for WaveGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WaveGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("length", &self.length)
            .field("dealias_cutoff", &self.dealias_cutoff)
            .finish()
    }
}

impl PartialEq for WaveGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && self.length.to_bits() == other.length.to_bits()
            && self.dealias_cutoff == other.dealias_cutoff
    }
}

impl WaveGrid {
    /// Grid with the default 2/3-rule dealiasing.
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Arc<Self>> {
        Self::with_dealias_fraction(dim, n, length, DEFAULT_DEALIAS_FRACTION)
    }

    /// Retains wave indices strictly below `fraction * n / 2` on every axis.
    pub fn with_dealias_fraction(
        dim: usize,
        n: usize,
        length: f64,
        fraction: f64,
    ) -> Result<Arc<Self>> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "dealias fraction must lie in (0, 1], got {fraction}"
            )));
        }
        let cutoff = (fraction * n as f64 / 2.0 - 1e-9).ceil() as usize;
        Self::with_cutoff(dim, n, length, cutoff.saturating_sub(1))
    }

    pub fn with_cutoff(dim: usize, n: usize, length: f64, cutoff: usize) -> Result<Arc<Self>> {
        if dim != 2 && dim != 3 {
            return Err(Error::invalid(format!("dim must be 2 or 3, got {dim}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::invalid(format!("n must be even and >= 8, got {n}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::invalid(format!("period length must be positive, got {length}")));
        }
        if cutoff == 0 || cutoff > n / 2 {
            return Err(Error::invalid(format!(
                "dealias cutoff must lie in 1..={}, got {cutoff}",
                n / 2
            )));
        }
        let total = n.pow(dim as u32);
        let axis_a = |i: usize| -> i32 {
            if i <= n / 2 {
                i as i32
            } else {
                i as i32 - n as i32
            }
        };
        let mut wave_index = Vec::with_capacity(total);
        for slot in 0..total {
            let mut a = [0i32; 3];
            let mut rem = slot;
            for j in (0..dim).rev() {
                a[j] = axis_a(rem % n);
                rem /= n;
            }
            wave_index.push(a);
        }
        let mirror = (0..total)
            .map(|slot| {
                let mut rem = slot;
                let mut out = 0usize;
                let mut stride = 1usize;
                for _ in 0..dim {
                    let i = rem % n;
                    rem /= n;
                    out += ((n - i) % n) * stride;
                    stride *= n;
                }
                out
            })
            .collect();
        let unit = 2.0 * PI / length;
        let half = (n / 2) as i32;
        let c = cutoff as i32;
        let kvec: Vec<[f64; 3]> = wave_index
            .iter()
            .map(|a| [a[0] as f64 * unit, a[1] as f64 * unit, a[2] as f64 * unit])
            .collect();
        let nyquist: Vec<bool> = wave_index
            .iter()
            .map(|a| a[..dim].iter().any(|&x| x == half))
            .collect();
        let retained = wave_index
            .iter()
            .zip(&nyquist)
            .map(|(a, &ny)| !ny && a[..dim].iter().all(|&x| x.abs() <= c))
            .collect();
        let dk = kvec
            .iter()
            .zip(&nyquist)
            .map(|(k, &ny)| if ny { [0.0; 3] } else { *k })
            .collect();
        let a2: Vec<u32> = wave_index
            .iter()
            .map(|a| a.iter().map(|&x| (x * x) as u32).sum())
            .collect();
        let max_a2 = a2.iter().copied().max().unwrap_or(0);
        let k2 = a2.iter().map(|&v| v as f64 * unit * unit).collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(WaveGrid {
            dim,
            n,
            length,
            dealias_cutoff: cutoff,
            wave_index,
            mirror,
            kvec,
            dk,
            k2,
            a2,
            max_a2,
            nyquist,
            retained,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dealias_cutoff(&self) -> usize {
        self.dealias_cutoff
    }

    /// Number of storage slots, `n^d`.
    pub fn len(&self) -> usize {
        self.wave_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wave_index.is_empty()
    }

    /// `2*pi/L`, the length of the unit wave index.
    pub fn k_unit(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn wave_index(&self, slot: usize) -> [i32; 3] {
        self.wave_index[slot]
    }

    pub fn wavevector(&self, slot: usize) -> [f64; 3] {
        self.kvec[slot]
    }

    /// Wavevector with Nyquist modes zeroed.
    pub(crate) fn derivative_symbol(&self, slot: usize) -> [f64; 3] {
        self.dk[slot]
    }

    /// Squared integer index length `|a|^2`.
    pub fn a2(&self, slot: usize) -> i64 {
        self.a2[slot] as i64
    }

    /// Per-slot values of a radial function of `|k|^2`, evaluated once per
    /// distinct `|k|`.
    pub(crate) fn radial<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        let unit2 = self.k_unit() * self.k_unit();
        let mut table = vec![f64::NAN; self.max_a2 as usize + 1];
        let mut seen = vec![false; table.len()];
        for &v in &self.a2 {
            if !seen[v as usize] {
                seen[v as usize] = true;
                table[v as usize] = f(v as f64 * unit2);
            }
        }
        self.a2.iter().map(|&v| table[v as usize]).collect()
    }

    pub fn k2(&self, slot: usize) -> f64 {
        self.k2[slot]
    }

    pub fn k_mag(&self, slot: usize) -> f64 {
        self.k2[slot].sqrt()
    }

    /// Slot holding `-a`.
    pub fn mirror(&self, slot: usize) -> usize {
        self.mirror[slot]
    }

    pub fn is_nyquist(&self, slot: usize) -> bool {
        self.nyquist[slot]
    }

    /// True when the mode survives the dealias mask.
    pub fn is_retained(&self, slot: usize) -> bool {
        self.retained[slot]
    }

    /// Slot of wave index `a`, if it is representable on this grid.
    pub fn slot_of(&self, a: [i32; 3]) -> Option<usize> {
        let n = self.n as i32;
        let mut slot = 0usize;
        for (j, &aj) in a.iter().enumerate() {
            if j >= self.dim {
                if aj != 0 {
                    return None;
                }
                continue;
            }
            if aj <= -n / 2 || aj > n / 2 {
                return None;
            }
            slot = slot * self.n + aj.rem_euclid(n) as usize;
        }
        Some(slot)
    }

    /// Physical coordinates of grid point `slot`.
    pub fn point(&self, slot: usize) -> [f64; 3] {
        let h = self.spacing();
        let mut x = [0.0; 3];
        let mut rem = slot;
        for j in (0..self.dim).rev() {
            x[j] = (rem % self.n) as f64 * h;
            rem /= self.n;
        }
        x
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub(crate) fn fft_in_place(&self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inv } else { &self.fwd };
        let n = self.n;
        let scratch_len = plan.get_inplace_scratch_len();
        let zero = Complex64::new(0.0, 0.0);
        data.par_chunks_mut(n * LINES_PER_TASK).for_each_init(
            || vec![zero; scratch_len],
            |scratch, lines| plan.process_with_scratch(lines, scratch),
        );
        // Every other axis: view the array as [outer][n][stride], gather
        // groups of columns into contiguous lines, transform, scatter back.
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let width = n;
            let groups_per_block = stride / width;
            let ngroups = (data.len() / (n * stride)) * groups_per_block;
            let src: &[Complex64] = data;
            let lines: Vec<Vec<Complex64>> = (0..ngroups)
                .into_par_iter()
                .map_init(
                    || vec![zero; scratch_len],
                    |scratch, gi| {
                        let base = (gi / groups_per_block) * n * stride + (gi % groups_per_block) * width;
                        let mut buf = vec![zero; width * n];
                        for m in 0..n {
                            let row = &src[base + m * stride..base + m * stride + width];
                            for (c, v) in row.iter().enumerate() {
                                buf[c * n + m] = *v;
                            }
                        }
                        plan.process_with_scratch(&mut buf, scratch);
                        buf
                    },
                )
                .collect();
            for (gi, buf) in lines.iter().enumerate() {
                let base = (gi / groups_per_block) * n * stride + (gi % groups_per_block) * width;
                for m in 0..n {
                    let row = &mut data[base + m * stride..base + m * stride + width];
                    for (c, v) in row.iter_mut().enumerate() {
                        *v = buf[c * n + m];
                    }
                }
            }
        }
    }

    /// Evaluates Hermitian spectral arrays in physical space, two per FFT.
    pub(crate) fn inverse_real_many(&self, spectra: &[&[Complex64]]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(spectra.len());
        for pair in spectra.chunks(2) {
            let mut buf: Vec<Complex64> = match pair {
                [a, b] => a
                    .iter()
                    .zip(b.iter())
                    .map(|(x, y)| x + Complex64::i() * y)
                    .collect(),
                [a] => a.to_vec(),
                _ => unreachable!(),
            };
            self.fft_in_place(&mut buf, true);
            out.push(buf.iter().map(|c| c.re).collect());
            if pair.len() == 2 {
                out.push(buf.iter().map(|c| c.im).collect());
            }
        }
        out
    }

    /// Series coefficients of real arrays, two per FFT. The outputs are
    /// exactly Hermitian.
    pub(crate) fn forward_real_many(&self, reals: &[&[f64]]) -> Vec<Vec<Complex64>> {
        let scale = 1.0 / self.len() as f64;
        let mut out = Vec::with_capacity(reals.len());
        for pair in reals.chunks(2) {
            let mut buf: Vec<Complex64> = match pair {
                [a, b] => a
                    .iter()
                    .zip(b.iter())
                    .map(|(&x, &y)| Complex64::new(x, y))
                    .collect(),
                [a] => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
                _ => unreachable!(),
            };
            self.fft_in_place(&mut buf, false);
            let first: Vec<Complex64> = (0..buf.len())
                .into_par_iter()
                .map(|s| (buf[s] + buf[self.mirror[s]].conj()) * (0.5 * scale))
                .collect();
            out.push(first);
            if pair.len() == 2 {
                let second: Vec<Complex64> = (0..buf.len())
                    .into_par_iter()
                    .map(|s| {
                        (buf[s] - buf[self.mirror[s]].conj()) * Complex64::new(0.0, -0.5 * scale)
                    })
                    .collect();
                out.push(second);
            }
        }
        out
    }
}
