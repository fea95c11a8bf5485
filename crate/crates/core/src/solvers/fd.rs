//! Method-of-lines integration with second-order central differences in space
//! and classical RK4 in time, on a domain with homogeneous Dirichlet edges.

use std::collections::BTreeMap;

use crate::differentiation::LineOperator;
use crate::error::{Error, Result};
use crate::field::{Field, GridSpec};
use crate::solvers::model::PdeModel;
use crate::terms::{pow_u, DerivPattern};

/// Stability bound of classical RK4 along the real and imaginary axes,
/// rounded down.
const RK4_STABILITY_RADIUS: f64 = 2.7;

struct Rhs<'a> {
    model: &'a PdeModel,
    dims: Vec<usize>,
    x_ops: BTreeMap<u8, LineOperator>,
    y_ops: BTreeMap<u8, LineOperator>,
    scratch: Vec<f64>,
    deriv: Vec<f64>,
}

impl<'a> Rhs<'a> {
    fn new(model: &'a PdeModel, grid: &GridSpec) -> Result<Self> {
        let dims = match grid.ny {
            Some(ny) => vec![grid.nx, ny],
            None => vec![grid.nx],
        };
        let mut x_ops = BTreeMap::new();
        let mut y_ops = BTreeMap::new();
        for (term, _) in &model.terms {
            let DerivPattern { x, y } = term.deriv;
            if x > 0 && !x_ops.contains_key(&x) {
                x_ops.insert(x, LineOperator::fd2(grid.nx, x, grid.dx)?);
            }
            if y > 0 && !y_ops.contains_key(&y) {
                let (ny, dy) = grid
                    .ny
                    .zip(grid.dy)
                    .ok_or_else(|| Error::UnsupportedCombination("y-derivative term on a 1D grid".into()))?;
                y_ops.insert(y, LineOperator::fd2(ny, y, dy)?);
            }
        }
        let n = grid.spatial_len();
        Ok(Rhs {
            model,
            dims,
            x_ops,
            y_ops,
            scratch: vec![0.0; n],
            deriv: vec![0.0; n],
        })
    }

    fn eval(&mut self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (term, c) in &self.model.terms {
            let DerivPattern { x, y } = term.deriv;
            let d: &[f64] = if term.deriv.is_none() {
                u
            } else {
                let mut src_is_u = true;
                if x > 0 {
                    self.x_ops[&x].apply_along(u, &self.dims, 0, &mut self.deriv);
                    src_is_u = false;
                }
                if y > 0 {
                    if src_is_u {
                        self.y_ops[&y].apply_along(u, &self.dims, 1, &mut self.deriv);
                    } else {
                        self.y_ops[&y].apply_along(&self.deriv, &self.dims, 1, &mut self.scratch);
                        std::mem::swap(&mut self.deriv, &mut self.scratch);
                    }
                }
                &self.deriv
            };
            for ((o, &ui), &di) in out.iter_mut().zip(u).zip(d) {
                *o += c * term.eval(ui, di);
            }
        }
        zero_boundary(out, &self.dims);
    }
}

fn zero_boundary(v: &mut [f64], dims: &[usize]) {
    match *dims {
        [nx] => {
            v[0] = 0.0;
            v[nx - 1] = 0.0;
        }
        [nx, ny] => {
            for i in 0..nx {
                for j in 0..ny {
                    if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                        v[i * ny + j] = 0.0;
                    }
                }
            }
        }
        _ => unreachable!("grids are 1D or 2D"),
    }
}

/// Largest explicit RK4 step that keeps the linearised operator stable.
pub fn stability_limit(model: &PdeModel, grid: &GridSpec, u0: &[f64]) -> f64 {
    let umax = u0.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let mut rho = 0.0;
    for (term, c) in &model.terms {
        let DerivPattern { x, y } = term.deriv;
        let mut sym = pow_u(umax, term.poly_power);
        if x > 0 {
            sym *= (2.0 / grid.dx).powi(x as i32);
        }
        if y > 0 {
            sym *= (2.0 / grid.dy.unwrap_or(grid.dx)).powi(y as i32);
        }
        rho += c.abs() * sym;
    }
    if rho == 0.0 {
        return f64::INFINITY;
    }
    match model.time_order {
        1 => RK4_STABILITY_RADIUS / rho,
        _ => RK4_STABILITY_RADIUS / rho.sqrt(),
    }
}

/// Integrates `model` from `u0` (zero initial velocity for second-order
/// models), returning `grid.nt` snapshots spaced `grid.dt` apart.
pub fn integrate(model: &PdeModel, grid: &GridSpec, u0: &[f64], substeps: usize) -> Result<Field> {
    let n = grid.spatial_len();
    assert_eq!(u0.len(), n);
    let substeps = substeps.max(1);
    let h = grid.dt / substeps as f64;
    let limit = stability_limit(model, grid, u0);
    if h > limit {
        return Err(Error::StabilityViolation {
            scheme: "rk4 with central differences",
            dt: h,
            limit,
        });
    }
    let mut rhs = Rhs::new(model, grid)?;
    let dims = rhs.dims.clone();
    let mut values = Vec::with_capacity(grid.len());
    let mut u = u0.to_vec();
    zero_boundary(&mut u, &dims);
    values.extend_from_slice(&u);
    let blowup = 1e8 * u.iter().fold(1.0_f64, |m, v| m.max(v.abs()));

    let second_order = model.time_order == 2;
    let mut v = vec![0.0; n];
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 8];
    let mut stage_u = vec![0.0; n];
    let mut stage_v = vec![0.0; n];

    for step in 1..grid.nt {
        for _ in 0..substeps {
            if second_order {
                // y = (u, v), y' = (v, f(u))
                let (ku, kv) = k.split_at_mut(4);
                ku[0].copy_from_slice(&v);
                rhs.eval(&u, &mut kv[0]);
                for s in 1..4 {
                    let a = if s == 3 { h } else { 0.5 * h };
                    for i in 0..n {
                        stage_u[i] = u[i] + a * ku[s - 1][i];
                        stage_v[i] = v[i] + a * kv[s - 1][i];
                    }
                    ku[s].copy_from_slice(&stage_v);
                    zero_boundary(&mut ku[s], &dims);
                    rhs.eval(&stage_u, &mut kv[s]);
                }
                for i in 0..n {
                    u[i] += h / 6.0 * (ku[0][i] + 2.0 * ku[1][i] + 2.0 * ku[2][i] + ku[3][i]);
                    v[i] += h / 6.0 * (kv[0][i] + 2.0 * kv[1][i] + 2.0 * kv[2][i] + kv[3][i]);
                }
            } else {
                rhs.eval(&u, &mut k[0]);
                for s in 1..4 {
                    let a = if s == 3 { h } else { 0.5 * h };
                    for i in 0..n {
                        stage_u[i] = u[i] + a * k[s - 1][i];
                    }
                    rhs.eval(&stage_u, &mut k[s]);
                }
                for i in 0..n {
                    u[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
                }
            }
            zero_boundary(&mut u, &dims);
        }
        if u.iter().any(|x| !x.is_finite() || x.abs() > blowup) {
            return Err(Error::NumericalBreakdown(format!(
                "solution blew up before snapshot {step}"
            )));
        }
        values.extend_from_slice(&u);
    }
    Field::new(grid.clone(), values)
}
