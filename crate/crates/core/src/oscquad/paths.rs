//! Summation kernels for the tensor midpoint rule.
//!
//! All three kernels compute the same discrete sum
//! `h^2 sum_{i,j} e^{i lambda S(x_i,y_j)} f(x_i) g(y_j) h(x_i+y_j) b(x_i) b(y_j)`
//! on the shared midpoint lattice; they differ only in how the sum is
//! reorganized:
//!
//! * `convolution_sum`: phases splitting as `A(x)+B(y)+C(x+y)` group by
//!   `i+j`, turning the double sum into one linear convolution (FFT).
//! * `linear_phase_sum`: phases linear in `y` make every row sum a sample
//!   of one band-limited function `G(t) = sum_j c_j e^{i t y_j}`, which is
//!   evaluated on a fine lattice by FFT and interpolated.
//! * `direct_sum`: the general kernel; per row the phase is a polynomial in
//!   `j`, so the complex exponentials satisfy a constant-length
//!   difference-table recurrence (no per-point sin/cos).

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// `sum` of a slice in a fixed pairwise tree order, independent of any
/// threading decisions upstream.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn fft_forward(data: &mut [Complex64]) {
    FftPlanner::new()
        .plan_fft_forward(data.len())
        .process(data);
}

fn fft_inverse(data: &mut [Complex64]) {
    FftPlanner::new()
        .plan_fft_inverse(data.len())
        .process(data);
}

/// Midpoint nodes `-w + (k + 1/2) h`, `k = 0..n`.
pub fn midpoint_nodes(w: f64, n: usize) -> (f64, Vec<f64>) {
    let h = 2.0 * w / n as f64;
    let nodes = (0..n).map(|k| -w + (k as f64 + 0.5) * h).collect();
    (h, nodes)
}

/// FFT linear convolution sum: `h^2 sum_k (F * G)[k] H[k]` where
/// `(F*G)[k] = sum_{i+j=k} F_i G_j` and `H[k]` is sampled on the sum
/// lattice `z_k = -2w + (k+1) h`.
pub fn convolution_sum(f: &[Complex64], g: &[Complex64], h_on_z: &[Complex64], h: f64) -> Complex64 {
    let n = f.len();
    assert_eq!(g.len(), n);
    assert_eq!(h_on_z.len(), 2 * n - 1);
    let l = (2 * n - 1).next_power_of_two();
    let mut fa = vec![Complex64::new(0.0, 0.0); l];
    let mut ga = vec![Complex64::new(0.0, 0.0); l];
    fa[..n].copy_from_slice(f);
    ga[..n].copy_from_slice(g);
    fft_forward(&mut fa);
    fft_forward(&mut ga);
    for (a, b) in fa.iter_mut().zip(ga.iter()) {
        *a *= b;
    }
    fft_inverse(&mut fa);
    let scale = 1.0 / l as f64;
    let terms: Vec<Complex64> = (0..2 * n - 1)
        .map(|k| fa[k] * scale * h_on_z[k])
        .collect();
    pairwise_sum(&terms) * (h * h)
}

/// Kaiser-windowed-sinc interpolation kernel, evaluated through a dense
/// table with Catmull-Rom interpolation.
struct SincKernel {
    half_width: usize,
    table: Vec<f64>,
    per_unit: f64,
}

impl SincKernel {
    fn new(half_width: usize, band_fraction: f64) -> SincKernel {
        let beta = PI * half_width as f64 * (1.0 - band_fraction) * 0.97;
        let per_unit = 8192.0;
        let len = (half_width as f64 * per_unit) as usize + 4;
        let i0b = bessel_i0(beta);
        let table: Vec<f64> = (0..len)
            .map(|k| {
                let t = k as f64 / per_unit; // in [0, half_width]
                let s = t / half_width as f64;
                if s >= 1.0 {
                    return 0.0;
                }
                let window = bessel_i0(beta * (1.0 - s * s).sqrt()) / i0b;
                let sinc = if t == 0.0 {
                    1.0
                } else {
                    (PI * t).sin() / (PI * t)
                };
                sinc * window
            })
            .collect();
        SincKernel {
            half_width,
            table,
            per_unit,
        }
    }

    #[inline]
    fn eval(&self, t: f64) -> f64 {
        let a = t.abs() * self.per_unit;
        let idx = a as usize;
        if idx + 2 >= self.table.len() {
            return 0.0;
        }
        let frac = a - idx as f64;
        // Catmull-Rom through the four neighbors; the kernel is even, so
        // index -1 mirrors to +1
        let pm1 = if idx == 0 {
            self.table[1]
        } else {
            self.table[idx - 1]
        };
        let p0 = self.table[idx];
        let p1 = self.table[idx + 1];
        let p2 = self.table[idx + 2];
        let a0 = -0.5 * pm1 + 1.5 * p0 - 1.5 * p1 + 0.5 * p2;
        let a1 = pm1 - 2.5 * p0 + 2.0 * p1 - 0.5 * p2;
        let a2 = -0.5 * pm1 + 0.5 * p1;
        ((a0 * frac + a1) * frac + a2) * frac + p0
    }
}

fn bessel_i0(x: f64) -> f64 {
    // power series; converges fast for the betas used here
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Row-sum oracle for phases linear in `y`:
/// computes `sum_i outer_i * G(t_i)` with `G(t) = sum_j c_j e^{i t y_j}`,
/// `y_j` the midpoint nodes of width `w` and `t_i` arbitrary reals.
///
/// `G` is band-limited to `|y| <= w`, so it is sampled on a lattice four
/// times denser than Nyquist by one FFT and interpolated with a windowed
/// sinc.
pub fn linear_phase_sum(
    outer: &[Complex64],
    t: &[f64],
    c: &[Complex64],
    w: f64,
    h: f64,
) -> Complex64 {
    let n = c.len();
    let needed = 4 * n.max(64);
    let l = needed.next_power_of_two();
    let mut grid = vec![Complex64::new(0.0, 0.0); l];
    grid[..n].copy_from_slice(c);
    // g~(tau_k) = sum_j c_j e^{i tau_k j}, tau_k = 2 pi k / L
    fft_inverse(&mut grid);
    // recenter the index band to [-n/2, n/2] for interpolation
    let shift = n as f64 / 2.0;
    for (k, v) in grid.iter_mut().enumerate() {
        let phase = -2.0 * PI * (k as f64) * shift / l as f64;
        *v *= Complex64::from_polar(1.0, phase);
    }
    let kernel = SincKernel::new(8, n as f64 / l as f64);
    let hw = kernel.half_width as isize;
    let offset = -w + 0.5 * h;

    let terms: Vec<Complex64> = outer
        .par_iter()
        .zip(t.par_iter())
        .with_min_len(4096)
        .map(|(&o, &ti)| {
            if o == Complex64::new(0.0, 0.0) {
                return o;
            }
            let tau = ti * h;
            let kappa = tau * l as f64 / (2.0 * PI);
            let base = kappa.floor() as isize;
            let mut acc = Complex64::new(0.0, 0.0);
            for k in (base - hw + 1)..=(base + hw) {
                let weight = kernel.eval(kappa - k as f64);
                let idx = (k.rem_euclid(l as isize)) as usize;
                acc += grid[idx] * weight;
            }
            // undo the recentering and add the midpoint offset phase
            let phase = ti * offset + tau * shift;
            o * acc * Complex64::from_polar(1.0, phase)
        })
        .collect();
    pairwise_sum(&terms) * (h * h)
}

/// Reseed interval of the linear-phase rotator: the phase drift grows
/// linearly in the block length, so this keeps it near 1e-11 radians.
const RESEED: usize = 65536;

fn theta_at(coeffs: &[f64], y: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * y + c;
    }
    acc
}

/// `sum_j weights[j] * h_on_z[i0 + j] * e^{i theta(y_j)}`.
///
/// Rows with (at most) linear phase advance a single rotator by one complex
/// multiplication per node; higher-degree rows evaluate the exponential
/// directly, because a difference-table recurrence of depth `d` drifts like
/// `block^d` ulps.
pub fn oscillatory_row_sum(
    coeffs: &[f64],
    ys: &[f64],
    weights: &[Complex64],
    h_on_z: &[Complex64],
    i0: usize,
) -> Complex64 {
    let n = ys.len();
    let deg = coeffs.len().saturating_sub(1);
    if deg == 0 {
        let rot = Complex64::from_polar(1.0, theta_at(coeffs, 0.0));
        let terms: Vec<Complex64> = (0..n).map(|j| weights[j] * h_on_z[i0 + j]).collect();
        return pairwise_sum(&terms) * rot;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    if deg == 1 {
        let step_size = if n >= 2 { ys[1] - ys[0] } else { 0.0 };
        let delta = Complex64::from_polar(1.0, coeffs[1] * step_size);
        let mut j = 0usize;
        while j < n {
            let block = RESEED.min(n - j);
            let mut rot = Complex64::from_polar(1.0, theta_at(coeffs, ys[0] + j as f64 * step_size));
            for step in 0..block {
                acc += weights[j + step] * h_on_z[i0 + j + step] * rot;
                rot *= delta;
            }
            j += block;
        }
        return acc;
    }
    for j in 0..n {
        acc += weights[j] * h_on_z[i0 + j] * Complex64::from_polar(1.0, theta_at(coeffs, ys[j]));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive() {
        let vals: Vec<Complex64> = (0..1037)
            .map(|k| Complex64::new((k as f64).sin(), (k as f64 * 0.7).cos()))
            .collect();
        let naive: Complex64 = vals.iter().sum();
        let pw = pairwise_sum(&vals);
        assert!((naive - pw).norm() < 1e-9);
    }

    #[test]
    fn row_recurrence_matches_direct_sincos() {
        let n = 5000;
        let (h, ys) = midpoint_nodes(0.5, n);
        let coeffs = [0.3, 40.0, -250.0, 90.0]; // cubic phase
        let weights: Vec<Complex64> = ys
            .iter()
            .map(|&y| Complex64::new(1.0 - y * y, 0.0))
            .collect();
        let h_on_z = vec![Complex64::new(1.0, 0.0); n];
        let got = oscillatory_row_sum(&coeffs, &ys, &weights, &h_on_z, 0);
        let want: Complex64 = (0..n)
            .map(|j| weights[j] * Complex64::from_polar(1.0, theta_at(&coeffs, ys[j])))
            .sum();
        assert!(
            (got - want).norm() < 1e-9 * (want.norm() + 1.0),
            "drift {} vs {}",
            got,
            want
        );
        let _ = h;
    }

    #[test]
    fn linear_phase_interpolation_matches_direct() {
        let n = 2048;
        let w = 0.5;
        let (h, ys) = midpoint_nodes(w, n);
        let c: Vec<Complex64> = ys
            .iter()
            .map(|&y| Complex64::new((3.0 * y).cos(), 0.2 * y))
            .collect();
        let ts: Vec<f64> = (0..500).map(|k| -900.0 + 3.7 * k as f64).collect();
        let outer: Vec<Complex64> = (0..500)
            .map(|k| Complex64::from_polar(1.0, 0.01 * k as f64))
            .collect();
        let got = linear_phase_sum(&outer, &ts, &c, w, h);
        // direct evaluation
        let mut want = Complex64::new(0.0, 0.0);
        for (k, &t) in ts.iter().enumerate() {
            let mut g = Complex64::new(0.0, 0.0);
            for (j, &y) in ys.iter().enumerate() {
                g += c[j] * Complex64::from_polar(1.0, t * y);
            }
            want += outer[k] * g;
        }
        want *= h * h;
        assert!(
            (got - want).norm() <= 1e-9 * want.norm().max(1.0),
            "interp error {:e}",
            (got - want).norm() / want.norm().max(1.0)
        );
    }
}
