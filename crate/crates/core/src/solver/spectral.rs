//! Sine-Galerkin machinery on `(0, L)`: synthesis on the grid `x_q = qL/P`
//! and exact Galerkin projection of grid products back onto sine modes.
//!
//! A product of two fields of degree `N` is a cosine polynomial of degree
//! at most `2N`. Its cosine coefficients are recovered exactly by a DCT-I on
//! `P + 1` points when `P ≥ 2N`, and
//! `(2/L)∫_0^L cos(pπx/L) sin(iπx/L) dx = (4i/π)/(i² - p²)` for odd `i + p`
//! (zero otherwise) maps them onto sine coefficients.

use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct SpectralGrid {
    n: usize,
    p: usize,
    length: f64,
    lambda: Vec<f64>,
    /// `sin(iπq/P)`, row-major `(P+1) × N`
    sin_tab: Vec<f64>,
    /// `(iπ/L) cos(iπq/P)`
    dcos_tab: Vec<f64>,
    /// grid values → sine coefficients of the Galerkin projection, `N × (P+1)`
    proj: Vec<f64>,
}

/// `sin(π m / P)` with exact zeros.
fn sin_frac(m: usize, p: usize) -> f64 {
    let r = m % (2 * p);
    if r % p == 0 {
        return 0.0;
    }
    (PI * r as f64 / p as f64).sin()
}

fn cos_frac(m: usize, p: usize) -> f64 {
    let r = m % (2 * p);
    if 2 * r == p || 2 * r == 3 * p {
        return 0.0;
    }
    (PI * r as f64 / p as f64).cos()
}

impl SpectralGrid {
    pub fn new(n: usize, p: usize, length: f64) -> Self {
        let lambda = (1..=n).map(|i| (i as f64 * PI / length).powi(2)).collect();
        let mut sin_tab = vec![0.0; (p + 1) * n];
        let mut dcos_tab = vec![0.0; (p + 1) * n];
        for q in 0..=p {
            for i in 1..=n {
                sin_tab[q * n + i - 1] = sin_frac(i * q, p);
                dcos_tab[q * n + i - 1] = (i as f64 * PI / length) * cos_frac(i * q, p);
            }
        }
        // DCT-I: c_p = (2/P) Σ_q w_q g_q cos(pπq/P), ends of both sums halved
        let mut dct = vec![0.0; (p + 1) * (p + 1)];
        for pp in 0..=p {
            let end_p = if pp == 0 || pp == p { 0.5 } else { 1.0 };
            for q in 0..=p {
                let end_q = if q == 0 || q == p { 0.5 } else { 1.0 };
                dct[pp * (p + 1) + q] = end_p * end_q * 2.0 / p as f64 * cos_frac(pp * q, p);
            }
        }
        let mut proj = vec![0.0; n * (p + 1)];
        for i in 1..=n {
            for pp in 0..=p {
                if (i + pp) % 2 == 0 {
                    continue;
                }
                let (fi, fp) = (i as f64, pp as f64);
                let s = 4.0 * fi / PI / (fi * fi - fp * fp);
                let row = &dct[pp * (p + 1)..(pp + 1) * (p + 1)];
                let out = &mut proj[(i - 1) * (p + 1)..i * (p + 1)];
                for (o, d) in out.iter_mut().zip(row) {
                    *o += s * d;
                }
            }
        }
        Self {
            n,
            p,
            length,
            lambda,
            sin_tab,
            dcos_tab,
            proj,
        }
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    /// Number of grid intervals `P`; there are `P + 1` grid points.
    pub fn intervals(&self) -> usize {
        self.p
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Dirichlet Laplacian eigenvalues `(iπ/L)²`, `i = 1..N`.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.p)
            .map(|q| q as f64 * self.length / self.p as f64)
            .collect()
    }

    fn synth(tab: &[f64], n: usize, u: &[f64], out: &mut [f64]) {
        for (q, o) in out.iter_mut().enumerate() {
            let row = &tab[q * n..(q + 1) * n];
            *o = row.iter().zip(u).map(|(s, c)| s * c).sum();
        }
    }

    /// `Σ_i u_i sin(iπx_q/L)`
    pub fn values(&self, u: &[f64], out: &mut [f64]) {
        Self::synth(&self.sin_tab, self.n, u, out);
    }

    /// `∂_x` of the sine series at the grid points.
    pub fn dx(&self, u: &[f64], out: &mut [f64]) {
        Self::synth(&self.dcos_tab, self.n, u, out);
    }

    /// `Δ` of the sine series at the grid points.
    pub fn laplacian(&self, u: &[f64], out: &mut [f64]) {
        let scaled: Vec<f64> = u.iter().zip(&self.lambda).map(|(c, l)| -c * l).collect();
        self.values(&scaled, out);
    }

    /// Sine coefficients of the `L²` projection of a cosine polynomial of
    /// degree `≤ P` given by its grid values.
    pub fn project(&self, g: &[f64], out: &mut [f64]) {
        let w = self.p + 1;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.proj[i * w..(i + 1) * w];
            *o = row.iter().zip(g).map(|(a, b)| a * b).sum();
        }
    }

    /// `‖u‖²_{L²} = (L/2) Σ u_i²`
    pub fn l2_sq(&self, u: &[f64]) -> f64 {
        0.5 * self.length * u.iter().map(|c| c * c).sum::<f64>()
    }

    /// `‖u_x‖²_{L²} = (L/2) Σ λ_i u_i²`
    pub fn grad_sq(&self, u: &[f64]) -> f64 {
        0.5 * self.length
            * u.iter()
                .zip(&self.lambda)
                .map(|(c, l)| l * c * c)
                .sum::<f64>()
    }

    /// `‖u‖²_{H^k}` as `(L/2) Σ (1 + λ_i)^k u_i²`.
    pub fn hk_sq(&self, u: &[f64], k: i32) -> f64 {
        0.5 * self.length
            * u.iter()
                .zip(&self.lambda)
                .map(|(c, l)| (1.0 + l).powi(k) * c * c)
                .sum::<f64>()
    }
}
