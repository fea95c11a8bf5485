//! Fourier pseudo-spectral integration on a periodic 1D domain with
//! fourth-order exponential time differencing (ETDRK4).
//!
//! Pure-derivative terms and the linear `u` term form the diagonal linear
//! operator; every other term is treated as the nonlinear part and evaluated
//! in physical space. The phi-function coefficients are computed by contour
//! integrals around each eigenvalue, which avoids cancellation for small
//! `h * L`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{Field, GridSpec};
use crate::solvers::model::PdeModel;
use crate::terms::pow_u;

const CONTOUR_POINTS: usize = 64;

struct Spectral {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `(i k)^d` for each derivative order used by a nonlinear term
    deriv_symbols: BTreeMap<u8, Vec<Complex64>>,
    nonlinear: Vec<(u32, u8, f64)>,
    source: f64,
    buf: Vec<Complex64>,
    phys: Vec<f64>,
    derivs: BTreeMap<u8, Vec<f64>>,
}

fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            2.0 * PI * m / length
        })
        .collect()
}

fn symbol(k: &[f64], order: u8) -> Vec<Complex64> {
    let n = k.len();
    k.iter()
        .enumerate()
        .map(|(j, &kj)| {
            // the Nyquist mode has no well-defined odd derivative
            if order % 2 == 1 && n.is_multiple_of(2) && j == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, kj).powu(order as u32)
            }
        })
        .collect()
}

impl Spectral {
    fn nonlinear(&mut self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        let scale = 1.0 / n as f64;
        self.buf.copy_from_slice(v);
        self.inv.process(&mut self.buf);
        for (p, b) in self.phys.iter_mut().zip(&self.buf) {
            *p = b.re * scale;
        }
        for (order, sym) in &self.deriv_symbols {
            for ((b, vi), s) in self.buf.iter_mut().zip(v).zip(sym) {
                *b = vi * s;
            }
            self.inv.process(&mut self.buf);
            let d = self.derivs.get_mut(order).expect("allocated with symbol");
            for (di, b) in d.iter_mut().zip(&self.buf) {
                *di = b.re * scale;
            }
        }
        for (j, o) in out.iter_mut().enumerate().take(n) {
            let u = self.phys[j];
            let mut acc = self.source;
            for &(q, d, c) in &self.nonlinear {
                let base = pow_u(u, q);
                acc += if d == 0 {
                    c * base
                } else {
                    c * base * self.derivs[&d][j]
                };
            }
            *o = Complex64::new(acc, 0.0);
        }
        self.fwd.process(out);
    }
}

/// Integrates `model` on the periodic grid `grid` from `u0`.
pub fn integrate(model: &PdeModel, grid: &GridSpec, u0: &[f64], substeps: usize) -> Result<Field> {
    if model.time_order != 1 {
        return Err(Error::UnsupportedCombination(
            "spectral solver handles first-order-in-time models only".into(),
        ));
    }
    if grid.is_2d() || model.uses_y() {
        return Err(Error::UnsupportedCombination(
            "spectral solver is one-dimensional".into(),
        ));
    }
    let n = grid.nx;
    assert_eq!(u0.len(), n);
    let length = n as f64 * grid.dx;
    let k = wavenumbers(n, length);

    let mut lin = vec![Complex64::new(0.0, 0.0); n];
    let mut nonlinear = Vec::new();
    let mut source = 0.0;
    let mut deriv_symbols = BTreeMap::new();
    for (term, c) in &model.terms {
        let d = term.deriv.x;
        match (term.poly_power, d) {
            (0, 0) => source += c,
            (0, _) | (1, 0) => {
                let s = symbol(&k, d);
                for (l, sj) in lin.iter_mut().zip(&s) {
                    *l += *c * sj;
                }
            }
            (q, _) => {
                if d > 0 {
                    deriv_symbols.entry(d).or_insert_with(|| symbol(&k, d));
                }
                nonlinear.push((q, d, *c));
            }
        }
    }

    let substeps = substeps.max(1);
    let h = grid.dt / substeps as f64;
    let e: Vec<Complex64> = lin.iter().map(|l| (l * h).exp()).collect();
    let e2: Vec<Complex64> = lin.iter().map(|l| (l * h * 0.5).exp()).collect();
    let roots: Vec<Complex64> = (0..CONTOUR_POINTS)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64))
        .collect();
    let mut q = vec![Complex64::new(0.0, 0.0); n];
    let mut f1 = q.clone();
    let mut f2 = q.clone();
    let mut f3 = q.clone();
    for j in 0..n {
        let (mut sq, mut s1, mut s2, mut s3) = Default::default();
        for r in &roots {
            let z = lin[j] * h + r;
            let ez = z.exp();
            let z3 = z * z * z;
            sq += ((z * 0.5).exp() - 1.0) / z;
            s1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
            s2 += (2.0 + z + ez * (z - 2.0)) / z3;
            s3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
        }
        let m = CONTOUR_POINTS as f64;
        let fix = |s: Complex64| {
            let v = s * h / m;
            if lin[j].im == 0.0 {
                Complex64::new(v.re, 0.0)
            } else {
                v
            }
        };
        q[j] = fix(sq);
        f1[j] = fix(s1);
        f2[j] = fix(s2);
        f3[j] = fix(s3);
    }

    let mut planner = FftPlanner::new();
    let derivs = deriv_symbols.keys().map(|&d| (d, vec![0.0; n])).collect();
    let mut sp = Spectral {
        n,
        fwd: planner.plan_fft_forward(n),
        inv: planner.plan_fft_inverse(n),
        deriv_symbols,
        nonlinear,
        source,
        buf: vec![Complex64::new(0.0, 0.0); n],
        phys: vec![0.0; n],
        derivs,
    };

    let mut v: Vec<Complex64> = u0.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    sp.fwd.process(&mut v);
    let zero = Complex64::new(0.0, 0.0);
    let (mut nv, mut na, mut nb, mut nc) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    let (mut a, mut b, mut c) = (vec![zero; n], vec![zero; n], vec![zero; n]);

    let mut values = Vec::with_capacity(grid.len());
    values.extend_from_slice(u0);
    let blowup = 1e8 * u0.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let mut snapshot = vec![zero; n];
    for step in 1..grid.nt {
        for _ in 0..substeps {
            sp.nonlinear(&v, &mut nv);
            for j in 0..n {
                a[j] = e2[j] * v[j] + q[j] * nv[j];
            }
            sp.nonlinear(&a, &mut na);
            for j in 0..n {
                b[j] = e2[j] * v[j] + q[j] * na[j];
            }
            sp.nonlinear(&b, &mut nb);
            for j in 0..n {
                c[j] = e2[j] * a[j] + q[j] * (2.0 * nb[j] - nv[j]);
            }
            sp.nonlinear(&c, &mut nc);
            for j in 0..n {
                v[j] = e[j] * v[j] + nv[j] * f1[j] + 2.0 * (na[j] + nb[j]) * f2[j] + nc[j] * f3[j];
            }
        }
        snapshot.copy_from_slice(&v);
        sp.inv.process(&mut snapshot);
        let scale = 1.0 / n as f64;
        let start = values.len();
        values.extend(snapshot.iter().map(|z| z.re * scale));
        if values[start..].iter().any(|x| !x.is_finite() || x.abs() > blowup) {
            return Err(Error::NumericalBreakdown(format!(
                "solution blew up before snapshot {step}"
            )));
        }
    }
    Field::new(grid.clone(), values)
}
