//! The discrete Euler-Lagrange operator on the 9-point stencil
//!
//! ```text
//!   1/12  1/6  1/12
//!   1/6   -1   1/6
//!   1/12  1/6  1/12
//! ```
//!
//! The stencil is the graph Laplacian of the 8-neighbourhood with edge
//! weights 1/6 (axial) and 1/12 (diagonal). The matching per-pixel gradient
//! magnitude is `‖∇w‖²(s) = ½ Σ_o c_o (w(s) − w(s+o))²`, so that
//! `½ Σ_s ‖∇w‖²(s)` has gradient `−∇²w` with exactly this stencil. Borders
//! use half-sample reflection, under which the neighbour relation stays
//! symmetric.

use crate::domain::{ensure_same_dims, DisparityField, ImageGrid, RegularizerForm};
use crate::error::Result;
use crate::imgproc::reflect;
use crate::robust::Penalty;
use crate::solver::cg::LinearOperator;
use crate::solver::LinearizedView;

const AXIAL: f64 = 1.0 / 6.0;
const DIAGONAL: f64 = 1.0 / 12.0;

/// Neighbour offsets `(dx, dy)` and their stencil coefficients.
pub const STENCIL_OFFSETS: [(isize, isize, f64); 8] = [
    (-1, 0, AXIAL),
    (1, 0, AXIAL),
    (0, -1, AXIAL),
    (0, 1, AXIAL),
    (-1, -1, DIAGONAL),
    (1, -1, DIAGONAL),
    (-1, 1, DIAGONAL),
    (1, 1, DIAGONAL),
];

/// Reflected neighbour indices of every pixel for one grid size.
#[derive(Debug, Clone)]
pub struct StencilGrid {
    width: usize,
    height: usize,
    neighbours: Vec<[u32; 8]>,
}

impl StencilGrid {
    pub fn new(width: usize, height: usize) -> Self {
        let mut neighbours = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let mut n = [0u32; 8];
                for (slot, &(dx, dy, _)) in n.iter_mut().zip(STENCIL_OFFSETS.iter()) {
                    let nx = reflect(x as isize + dx, width);
                    let ny = reflect(y as isize + dy, height);
                    *slot = (ny * width + nx) as u32;
                }
                neighbours.push(n);
            }
        }
        Self {
            width,
            height,
            neighbours,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.neighbours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbours.is_empty()
    }

    #[inline]
    pub fn neighbours(&self, i: usize) -> &[u32; 8] {
        &self.neighbours[i]
    }

    /// `(∇²x)_i` with the stencil applied literally.
    #[inline]
    fn laplacian_at(&self, x: &[f64], i: usize) -> f64 {
        let n = &self.neighbours[i];
        let mut acc = -x[i];
        for (o, &(_, _, c)) in STENCIL_OFFSETS.iter().enumerate() {
            acc += c * x[n[o] as usize];
        }
        acc
    }

    /// Diagonal entry of the stencil matrix at `i` (reflected self-hits add
    /// back onto the centre).
    fn laplacian_diag(&self, i: usize) -> f64 {
        let n = &self.neighbours[i];
        STENCIL_OFFSETS
            .iter()
            .enumerate()
            .filter(|(o, _)| n[*o] as usize == i)
            .map(|(_, &(_, _, c))| c)
            .sum::<f64>()
            - 1.0
    }

    pub fn laplacian(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len()).map(|i| self.laplacian_at(x, i)).collect()
    }

    /// `‖∇w‖` at every pixel, per the module-level definition.
    pub fn gradient_norms(&self, w: &[f64]) -> Vec<f64> {
        (0..w.len())
            .map(|i| {
                let n = &self.neighbours[i];
                let mut acc = 0.0;
                for (o, &(_, _, c)) in STENCIL_OFFSETS.iter().enumerate() {
                    let d = w[i] - w[n[o] as usize];
                    acc += c * d * d;
                }
                (0.5 * acc).sqrt()
            })
            .collect()
    }
}

/// Applies the stencil with reflected borders.
pub fn laplacian_apply(w: &DisparityField) -> ImageGrid {
    let (width, height) = w.dims();
    let grid = StencilGrid::new(width, height);
    ImageGrid::from_raw(width, height, grid.laplacian(w.values()))
}

/// IRLS weights at the current iterate: one data-weight field per view
/// (zero outside the view's mask) and the regularizer weight field.
pub fn assemble_weights(
    views: &[LinearizedView],
    w: &DisparityField,
    data: &Penalty,
    reg: &Penalty,
) -> Result<(Vec<ImageGrid>, ImageGrid)> {
    let (width, height) = w.dims();
    let grid = StencilGrid::new(width, height);
    assemble_weights_on(&grid, views, w, data, reg)
}

pub(crate) fn assemble_weights_on(
    grid: &StencilGrid,
    views: &[LinearizedView],
    w: &DisparityField,
    data: &Penalty,
    reg: &Penalty,
) -> Result<(Vec<ImageGrid>, ImageGrid)> {
    let (width, height) = w.dims();
    let wv = w.values();
    let mut data_weights = Vec::with_capacity(views.len());
    for view in views {
        ensure_same_dims(view.a.dims(), w.dims())?;
        let weights = view
            .mask
            .data()
            .iter()
            .enumerate()
            .map(|(i, &valid)| {
                if valid {
                    data.weight(view.residual_at(i, wv[i]))
                } else {
                    0.0
                }
            })
            .collect();
        data_weights.push(ImageGrid::from_raw(width, height, weights));
    }
    let reg_weights = grid
        .gradient_norms(wv)
        .into_iter()
        .map(|g| reg.weight(g))
        .collect();
    Ok((data_weights, ImageGrid::from_raw(width, height, reg_weights)))
}

/// `A w = (Σ_p W_d,p a_p²) w − α_eff² · R_W(w)`, where `R_W` is the
/// regularizer-weighted Laplacian in the chosen [`RegularizerForm`].
#[derive(Debug, Clone)]
pub struct ElOperator<'g> {
    grid: &'g StencilGrid,
    data_diag: Vec<f64>,
    reg_weights: Vec<f64>,
    alpha_sq: f64,
    form: RegularizerForm,
    /// `α²·c_o·½(W_i + W_j)` per pixel and offset (divergence form only).
    edges: Vec<[f64; 8]>,
}

impl<'g> ElOperator<'g> {
    pub fn new(
        grid: &'g StencilGrid,
        views: &[LinearizedView],
        data_weights: &[ImageGrid],
        reg_weights: &ImageGrid,
        alpha_eff: f64,
        form: RegularizerForm,
    ) -> Result<Self> {
        let n = grid.len();
        let mut data_diag = vec![0.0; n];
        for (view, wd) in views.iter().zip(data_weights) {
            ensure_same_dims(grid.dims(), view.a.dims())?;
            ensure_same_dims(grid.dims(), wd.dims())?;
            for ((d, &a), &wt) in data_diag.iter_mut().zip(view.a.data()).zip(wd.data()) {
                *d += wt * a * a;
            }
        }
        ensure_same_dims(grid.dims(), reg_weights.dims())?;
        let alpha_sq = alpha_eff * alpha_eff;
        let rw = reg_weights.data();
        let edges = if form == RegularizerForm::Divergence {
            (0..n)
                .map(|i| {
                    let nb = grid.neighbours(i);
                    let mut e = [0.0; 8];
                    for (o, &(_, _, c)) in STENCIL_OFFSETS.iter().enumerate() {
                        let j = nb[o] as usize;
                        if j != i {
                            e[o] = alpha_sq * c * 0.5 * (rw[i] + rw[j]);
                        }
                    }
                    e
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            grid,
            data_diag,
            reg_weights: rw.to_vec(),
            alpha_sq,
            form,
            edges,
        })
    }

    pub fn data_diagonal(&self) -> &[f64] {
        &self.data_diag
    }
}

impl LinearOperator for ElOperator<'_> {
    fn len(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let grid = self.grid;
        match self.form {
            RegularizerForm::Divergence => {
                for (i, o) in out.iter_mut().enumerate() {
                    let nb = grid.neighbours(i);
                    let e = &self.edges[i];
                    let xi = x[i];
                    let mut acc = self.data_diag[i] * xi;
                    for k in 0..8 {
                        acc += e[k] * (xi - x[nb[k] as usize]);
                    }
                    *o = acc;
                }
            }
            RegularizerForm::Literal => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = self.data_diag[i] * x[i]
                        - self.alpha_sq * self.reg_weights[i] * grid.laplacian_at(x, i);
                }
            }
            RegularizerForm::Symmetrized => {
                let wx: Vec<f64> = x.iter().zip(&self.reg_weights).map(|(a, b)| a * b).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    let r = 0.5 * (self.reg_weights[i] * grid.laplacian_at(x, i) + grid.laplacian_at(&wx, i));
                    *o = self.data_diag[i] * x[i] - self.alpha_sq * r;
                }
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        match self.form {
            RegularizerForm::Divergence => self
                .data_diag
                .iter()
                .zip(&self.edges)
                .map(|(d, e)| d + e.iter().sum::<f64>())
                .collect(),
            RegularizerForm::Literal | RegularizerForm::Symmetrized => (0..self.len())
                .map(|i| {
                    self.data_diag[i] - self.alpha_sq * self.reg_weights[i] * self.grid.laplacian_diag(i)
                })
                .collect(),
        }
    }
}

/// Applies the Euler-Lagrange operator to `w` once.
pub fn el_operator(
    w: &DisparityField,
    views: &[LinearizedView],
    data_weights: &[ImageGrid],
    reg_weights: &ImageGrid,
    alpha_eff: f64,
    form: RegularizerForm,
) -> Result<ImageGrid> {
    let (width, height) = w.dims();
    let grid = StencilGrid::new(width, height);
    let op = ElOperator::new(&grid, views, data_weights, reg_weights, alpha_eff, form)?;
    let mut out = vec![0.0; grid.len()];
    op.apply(w.values(), &mut out);
    ImageGrid::new(width, height, out)
}
