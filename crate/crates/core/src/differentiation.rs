//! Partial derivatives of gridded data.
//!
//! Two estimators are provided. [`DerivMethod::CentralFd2`] uses second-order
//! accurate stencils: centred in the interior and one-sided with `order + 2`
//! points near the ends of an axis. [`DerivMethod::PolyInterp`] fits a
//! least-squares polynomial to a window of neighbours and differentiates the
//! fit, which is far less sensitive to measurement noise.
//!
//! Both are linear filters whose weights depend only on the position of a
//! point relative to the ends of its line, so they are precomputed once per
//! axis in a [`LineOperator`] and reused for every line and for point-wise
//! evaluation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Axis, Field, GridPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DerivMethod {
    CentralFd2,
    PolyInterp { degree: usize, window: usize },
}

impl DerivMethod {
    /// Default noisy-data estimator: quintic fit over 13 points.
    pub const DEFAULT_POLY: DerivMethod = DerivMethod::PolyInterp { degree: 5, window: 13 };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivSpec {
    pub axis: Axis,
    pub order: u8,
    #[serde(flatten)]
    pub method: DerivMethod,
}

impl DerivSpec {
    pub fn fd(axis: Axis, order: u8) -> Self {
        DerivSpec {
            axis,
            order,
            method: DerivMethod::CentralFd2,
        }
    }

    pub fn poly(axis: Axis, order: u8, degree: usize, window: usize) -> Self {
        DerivSpec {
            axis,
            order,
            method: DerivMethod::PolyInterp { degree, window },
        }
    }
}

/// Finite-difference weights for the `m`-th derivative at `z` from samples at
/// `x` (Fornberg's recursion).
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

#[derive(Debug, Clone)]
struct Stencil {
    start: usize,
    weights: Vec<f64>,
}

/// Derivative filter for every position along one axis of length `n`.
#[derive(Debug, Clone)]
pub struct LineOperator {
    n: usize,
    /// Positions `lo..hi` use the translated interior stencil.
    lo: usize,
    hi: usize,
    half: usize,
    interior: Vec<f64>,
    edges: Vec<Stencil>,
    shifted_margin: usize,
}

impl LineOperator {
    pub fn new(n: usize, order: u8, method: DerivMethod, h: f64) -> Result<Self> {
        match method {
            DerivMethod::CentralFd2 => Self::fd2(n, order, h),
            DerivMethod::PolyInterp { degree, window } => Self::poly(n, order, degree, window, h),
        }
    }

    pub fn fd2(n: usize, order: u8, h: f64) -> Result<Self> {
        let d = order as usize;
        if d == 0 {
            return Ok(LineOperator {
                n,
                lo: 0,
                hi: n,
                half: 0,
                interior: vec![1.0],
                edges: Vec::new(),
                shifted_margin: 0,
            });
        }
        let edge_len = d + 2;
        if n < edge_len {
            return Err(Error::GridTooSmall(format!(
                "order-{d} derivative needs at least {edge_len} points, axis has {n}"
            )));
        }
        let half = d.div_ceil(2);
        let scale = h.powi(d as i32);
        let offsets: Vec<f64> = (-(half as isize)..=half as isize).map(|o| o as f64).collect();
        let interior: Vec<f64> = fornberg_weights(0.0, &offsets, d)
            .into_iter()
            .map(|w| w / scale)
            .collect();
        let (lo, hi) = if n > 2 * half { (half, n - half) } else { (n, n) };
        let mut edges = Vec::new();
        for i in (0..lo).chain(hi.max(lo)..n) {
            let start = if i < half { 0 } else { n - edge_len };
            let xs: Vec<f64> = (start..start + edge_len).map(|j| j as f64).collect();
            let weights = fornberg_weights(i as f64, &xs, d)
                .into_iter()
                .map(|w| w / scale)
                .collect();
            edges.push(Stencil { start, weights });
        }
        Ok(LineOperator {
            n,
            lo,
            hi: hi.max(lo),
            half,
            interior,
            edges,
            shifted_margin: half,
        })
    }

    /// Least-squares polynomial derivative filter. `order = 0` gives the
    /// smoothed value itself.
    pub fn poly(n: usize, order: u8, degree: usize, window: usize, h: f64) -> Result<Self> {
        let d = order as usize;
        if window.is_multiple_of(2) {
            return Err(Error::Config(format!("polynomial window {window} must be odd")));
        }
        if degree < d {
            return Err(Error::Config(format!(
                "polynomial degree {degree} is below derivative order {d}"
            )));
        }
        if window > n {
            return Err(Error::WindowTooLarge { window, len: n });
        }
        if window <= degree {
            return Err(Error::DegenerateFit { degree, window });
        }
        let half = window / 2;
        let interior = poly_weights(window, half, degree, d, h)?;
        let lo = half;
        let hi = n - half;
        let mut edges = Vec::new();
        for i in (0..lo).chain(hi.max(lo)..n) {
            let start = if i < half { 0 } else { n - window };
            let weights = poly_weights(window, i - start, degree, d, h)?;
            edges.push(Stencil { start, weights });
        }
        Ok(LineOperator {
            n,
            lo,
            hi: hi.max(lo),
            half,
            interior,
            edges,
            shifted_margin: half,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Points closer than this to either end do not use the interior stencil.
    pub fn margin(&self) -> usize {
        self.shifted_margin
    }

    /// True when position `i` uses a shifted (off-centre) stencil.
    pub fn is_shifted(&self, i: usize) -> bool {
        i < self.lo || i >= self.hi
    }

    fn edge(&self, i: usize) -> &Stencil {
        if i < self.lo {
            &self.edges[i]
        } else {
            &self.edges[self.lo + (i - self.hi)]
        }
    }

    /// Derivative at position `i` of the line `data[offset + k * stride]`.
    #[inline]
    pub fn apply_at(&self, data: &[f64], offset: usize, stride: usize, i: usize) -> f64 {
        let (start, weights) = if i >= self.lo && i < self.hi {
            (i - self.half, self.interior.as_slice())
        } else {
            let s = self.edge(i);
            (s.start, s.weights.as_slice())
        };
        weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * data[offset + (start + k) * stride])
            .sum()
    }

    pub fn apply_line(&self, data: &[f64], offset: usize, stride: usize, out: &mut [f64]) {
        for i in 0..self.n {
            out[offset + i * stride] = self.apply_at(data, offset, stride, i);
        }
    }

    /// Applies the operator along dimension `axis` of a row-major array.
    pub fn apply_along(&self, data: &[f64], dims: &[usize], axis: usize, out: &mut [f64]) {
        debug_assert_eq!(dims[axis], self.n);
        let stride: usize = dims[axis + 1..].iter().product();
        let outer: usize = dims[..axis].iter().product();
        for o in 0..outer {
            for inner in 0..stride {
                self.apply_line(data, o * self.n * stride + inner, stride, out);
            }
        }
    }
}

fn poly_weights(window: usize, pos: usize, degree: usize, order: usize, h: f64) -> Result<Vec<f64>> {
    let half = (window - 1) as f64 / 2.0;
    let s: Vec<f64> = (0..window).map(|j| (j as f64 - half) / half).collect();
    let s0 = s[pos];
    let v = DMatrix::from_fn(window, degree + 1, |j, k| s[j].powi(k as i32));
    let gram = v.transpose() * &v;
    let chol = gram.cholesky().ok_or(Error::DegenerateFit { degree, window })?;
    // d^order/ds^order of s^k at s0
    let e = DVector::from_fn(degree + 1, |k, _| {
        if k < order {
            0.0
        } else {
            let falling: f64 = ((k - order + 1)..=k).map(|f| f as f64).product();
            falling * s0.powi((k - order) as i32)
        }
    });
    let z = chol.solve(&e);
    let w = v * z;
    let scale = (half * h).powi(order as i32);
    Ok(w.iter().map(|x| x / scale).collect())
}

fn axis_dim(axis: Axis) -> usize {
    match axis {
        Axis::T => 0,
        Axis::X => 1,
        Axis::Y => 2,
    }
}

fn operator_for(field: &Field, spec: &DerivSpec) -> Result<LineOperator> {
    if spec.order == 0 {
        return Err(Error::Config("derivative order must be at least 1".into()));
    }
    let grid = field.grid();
    let h = grid
        .spacing(spec.axis)
        .ok_or_else(|| Error::Config(format!("axis {} is absent from a 1D field", spec.axis.name())))?;
    LineOperator::new(grid.axis_len(spec.axis), spec.order, spec.method, h)
}

/// Finite-difference derivative of the whole field along one axis.
pub fn fd_derivative(field: &Field, spec: &DerivSpec) -> Result<Field> {
    if spec.method != DerivMethod::CentralFd2 {
        return Err(Error::Config("fd_derivative needs the central_fd2 method".into()));
    }
    let op = operator_for(field, spec)?;
    let mut out = vec![0.0; field.values().len()];
    op.apply_along(field.values(), &field.grid().shape(), axis_dim(spec.axis), &mut out);
    Ok(field.with_values(out))
}

/// Polynomial-interpolation derivative of the whole field along one axis,
/// with a mask flagging points whose fitting window had to be shifted.
pub fn poly_derivative(field: &Field, spec: &DerivSpec) -> Result<(Field, Vec<bool>)> {
    if !matches!(spec.method, DerivMethod::PolyInterp { .. }) {
        return Err(Error::Config("poly_derivative needs the poly_interp method".into()));
    }
    let op = operator_for(field, spec)?;
    let dims = field.grid().shape();
    let dim = axis_dim(spec.axis);
    let mut out = vec![0.0; field.values().len()];
    op.apply_along(field.values(), &dims, dim, &mut out);
    let stride: usize = dims[dim + 1..].iter().product();
    let mask = (0..out.len())
        .map(|flat| op.is_shifted((flat / stride) % dims[dim]))
        .collect();
    Ok((field.with_values(out), mask))
}

/// Dispatches on `spec.method`, discarding the boundary mask.
pub fn derivative(field: &Field, spec: &DerivSpec) -> Result<Field> {
    match spec.method {
        DerivMethod::CentralFd2 => fd_derivative(field, spec),
        DerivMethod::PolyInterp { .. } => poly_derivative(field, spec).map(|(f, _)| f),
    }
}

/// Point-wise derivative evaluation along one axis of a fixed field.
#[derive(Debug, Clone)]
pub struct PointDerivative {
    axis: Axis,
    op: LineOperator,
}

impl PointDerivative {
    pub fn new(field: &Field, axis: Axis, order: u8, method: DerivMethod) -> Result<Self> {
        let grid = field.grid();
        let h = grid
            .spacing(axis)
            .ok_or_else(|| Error::Config(format!("axis {} is absent from a 1D field", axis.name())))?;
        let op = LineOperator::new(grid.axis_len(axis), order, method, h)?;
        Ok(PointDerivative { axis, op })
    }

    pub fn margin(&self) -> usize {
        self.op.margin()
    }

    pub fn eval(&self, field: &Field, p: GridPoint) -> f64 {
        let g = field.grid();
        let stride = g.stride(self.axis);
        let (i, line_start) = match self.axis {
            Axis::T => (p.t, g.index(0, p.x, p.y)),
            Axis::X => (p.x, g.index(p.t, 0, p.y)),
            Axis::Y => (p.y, g.index(p.t, p.x, 0)),
        };
        self.op.apply_at(field.values(), line_start, stride, i)
    }
}
