#![allow(dead_code)]

use icefill::channel::{complex_normal, seeded_rng, SimRng};
use icefill::kernels::{Kernel, KernelLabel};
use icefill::linalg::{real, CMat};
use rand::Rng;

/// Haar-like unitary from the QR factor of a complex Gaussian matrix.
pub fn random_unitary(m: usize, rng: &mut SimRng) -> CMat {
    let g = CMat::from_fn(m, m, |_, _| complex_normal(rng));
    let q = g.qr().q();
    let mut out = q.clone();
    for mut col in out.column_iter_mut() {
        let n = col.norm();
        col /= real(n);
    }
    out
}

/// `U diag(λ) U^H` with a random unitary `U`; `lams` is padded with zeros.
pub fn rotated_kernel(lams: &[f64], m: usize, rng: &mut SimRng) -> Kernel {
    let u = random_unitary(m, rng);
    let mut d = CMat::zeros(m, m);
    for (k, &l) in lams.iter().enumerate() {
        d[(k, k)] = real(l);
    }
    Kernel::new(&u * d * u.adjoint(), KernelLabel::Perfect).unwrap()
}

/// Descending spectrum of `k` values drawn from `U(lo, hi)`.
pub fn random_spectrum(k: usize, lo: f64, hi: f64, rng: &mut SimRng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| rng.gen_range(lo..hi)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Random unit-norm columns.
pub fn random_unit_columns(m: usize, q: usize, rng: &mut SimRng) -> CMat {
    let mut w = CMat::from_fn(m, q, |_, _| complex_normal(rng));
    for mut col in w.column_iter_mut() {
        let n = col.norm();
        col /= real(n);
    }
    w
}

pub fn rng(seed: u64) -> SimRng {
    seeded_rng(seed)
}
