//! Uniform box grids, sampled fields and the finite-difference toolkit.
//!
//! A grid covers `[c - L, c + L)^d` with `N` nodes per axis (`N` even, so the
//! centre `c` is itself a node). Samples are stored row-major with the first
//! axis slowest. Whole-space integrals are Riemann sums over the nodes.
//!
//! Derivatives are second-order central differences, closed with
//! second-order one-sided formulas on the boundary nodes. Residual norms
//! skip the boundary ring.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Error, Result};
use crate::math::{self, GaussLegendre};

pub type Point = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    half_width: f64,
    origin: Point,
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            bail!(Parameter, "dimension must be 2 or 3, got {dim}");
        }
        if n < 4 || n % 2 != 0 {
            bail!(Parameter, "points per axis must be even and >= 4, got {n}");
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            bail!(Parameter, "half-width must be positive, got {half_width}");
        }
        Ok(Grid {
            dim,
            n,
            half_width,
            origin: [0.0; 3],
        })
    }

    /// Moves the box centre. The third coordinate is ignored in 2D.
    pub fn with_origin(mut self, origin: Point) -> Self {
        self.origin = origin;
        if self.dim == 2 {
            self.origin[2] = 0.0;
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    pub fn origin(&self) -> Point {
        self.origin
    }
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }
    pub fn cell_volume(&self) -> f64 {
        math::powi(self.spacing(), self.dim as i32)
    }
    /// Number of nodes, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn strides(&self) -> [usize; 3] {
        match self.dim {
            2 => [self.n, 1, 0],
            _ => [self.n * self.n, self.n, 1],
        }
    }

    pub fn index(&self, idx: [usize; 3]) -> usize {
        let s = self.strides();
        idx[0] * s[0] + idx[1] * s[1] + if self.dim == 3 { idx[2] } else { 0 }
    }

    pub fn multi_index(&self, lin: usize) -> [usize; 3] {
        let n = self.n;
        match self.dim {
            2 => [lin / n, lin % n, 0],
            _ => [lin / (n * n), (lin / n) % n, lin % n],
        }
    }

    /// Coordinate of node `k` along `axis`.
    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        self.origin[axis] - self.half_width + k as f64 * self.spacing()
    }

    pub fn point(&self, lin: usize) -> Point {
        let idx = self.multi_index(lin);
        let mut p = [0.0; 3];
        for (a, pa) in p.iter_mut().enumerate().take(self.dim) {
            *pa = self.coord(a, idx[a]);
        }
        p
    }

    /// True when every index is at least `ring` nodes away from the faces.
    pub fn is_interior(&self, idx: [usize; 3], ring: usize) -> bool {
        (0..self.dim).all(|a| idx[a] >= ring && idx[a] + ring < self.n)
    }

    /// Linear indices of the nodes at least `ring` away from the faces.
    pub fn interior(&self, ring: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&l| self.is_interior(self.multi_index(l), ring))
            .collect()
    }

    /// Fractional node coordinate of `x` along `axis`.
    pub fn fractional(&self, axis: usize, x: f64) -> f64 {
        (x - (self.origin[axis] - self.half_width)) / self.spacing()
    }

    /// True if the closed hull of the nodes contains the point.
    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim).all(|a| {
            let s = self.fractional(a, p[a]);
            s >= -1e-12 && s <= (self.n - 1) as f64 + 1e-12
        })
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidField(format!(
            "non-finite sample {} at node {k}",
            values[k]
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub time: f64,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, time: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            bail!(
                Structural,
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            );
        }
        check_finite(&values)?;
        Ok(ScalarField { grid, time, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            time: 0.0,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            time: 0.0,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, time: f64, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..grid.len()).map(|l| f(grid.point(l))).collect();
        ScalarField { grid, time, values }
    }

    pub fn at_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub(crate) fn raw(grid: Grid, time: f64, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, time, values }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.grid.len() {
            bail!(Structural, "sample count does not match the grid");
        }
        check_finite(&self.values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::raw(self.grid, self.time, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            bail!(Structural, "fields live on different grids");
        }
        Ok(Self::raw(
            self.grid,
            self.time,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Multilinear or cubic interpolation; `None` outside the node hull.
    pub fn sample(&self, p: &Point, order: Interp) -> Option<f64> {
        interpolate(&self.grid, &self.values, p, order)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub time: f64,
    pub components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Structural("vector field needs components".into()))?;
        let grid = first.grid;
        let time = first.time;
        if components.len() != grid.dim() {
            bail!(
                Structural,
                "{} components on a {}-dimensional grid",
                components.len(),
                grid.dim()
            );
        }
        for c in &components {
            if !c.grid.same_as(&grid) || c.time != time {
                bail!(Structural, "components disagree on grid or time");
            }
            c.validate()?;
        }
        Ok(VectorField {
            grid,
            time,
            components,
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            grid,
            time: 0.0,
            components: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn from_fn(grid: Grid, time: f64, f: impl Fn(Point) -> [f64; 3]) -> Self {
        let samples: Vec<[f64; 3]> = (0..grid.len()).map(|l| f(grid.point(l))).collect();
        let components = (0..grid.dim())
            .map(|a| ScalarField::raw(grid, time, samples.iter().map(|s| s[a]).collect()))
            .collect();
        VectorField {
            grid,
            time,
            components,
        }
    }

    pub(crate) fn raw(grid: Grid, time: f64, comps: Vec<Vec<f64>>) -> Self {
        VectorField {
            grid,
            time,
            components: comps
                .into_iter()
                .map(|v| ScalarField::raw(grid, time, v))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn at_time(mut self, time: f64) -> Self {
        self.time = time;
        for c in &mut self.components {
            c.time = time;
        }
        self
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Copy) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            bail!(Structural, "fields live on different grids");
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.zip_with(b, f))
            .collect::<Result<Vec<_>>>()?;
        Ok(VectorField {
            grid: self.grid,
            time: self.time,
            components,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        VectorField {
            grid: self.grid,
            time: self.time,
            components: self.components.iter().map(|c| c.scale(s)).collect(),
        }
    }

    /// Adds a spatially constant vector.
    pub fn offset(&self, c: &[f64; 3]) -> Self {
        VectorField {
            grid: self.grid,
            time: self.time,
            components: self
                .components
                .iter()
                .enumerate()
                .map(|(a, f)| f.map(|v| v + c[a]))
                .collect(),
        }
    }

    pub fn magnitude_at(&self, lin: usize) -> f64 {
        math::sqrt(
            self.components
                .iter()
                .map(|c| c.values[lin] * c.values[lin])
                .sum(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.grid.len()).fold(0.0, |m, l| m.max(self.magnitude_at(l)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub grid: Grid,
    pub time: f64,
    /// Row-major `d × d` components, `(i, j)` at `i * d + j`.
    pub components: Vec<ScalarField>,
    /// Asserts `F_ij = F_ji`; checked by [`TensorField::new`].
    pub symmetric: bool,
}

impl TensorField {
    pub fn new(components: Vec<ScalarField>, symmetric: bool) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Structural("tensor field needs components".into()))?;
        let grid = first.grid;
        let time = first.time;
        let d = grid.dim();
        if components.len() != d * d {
            bail!(Structural, "tensor needs {} components", d * d);
        }
        for c in &components {
            if !c.grid.same_as(&grid) || c.time != time {
                bail!(Structural, "components disagree on grid or time");
            }
            c.validate()?;
        }
        if symmetric {
            for i in 0..d {
                for j in 0..i {
                    if components[i * d + j].values != components[j * d + i].values {
                        bail!(Structural, "symmetry flag set but F_{i}{j} != F_{j}{i}");
                    }
                }
            }
        }
        Ok(TensorField {
            grid,
            time,
            components,
            symmetric,
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        let d = grid.dim();
        TensorField {
            grid,
            time: 0.0,
            components: (0..d * d).map(|_| ScalarField::zeros(grid)).collect(),
            symmetric: true,
        }
    }

    pub fn from_fn(grid: Grid, time: f64, f: impl Fn(Point) -> [[f64; 3]; 3]) -> Self {
        let d = grid.dim();
        let samples: Vec<[[f64; 3]; 3]> = (0..grid.len()).map(|l| f(grid.point(l))).collect();
        let mut components = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                components.push(ScalarField::raw(
                    grid,
                    time,
                    samples.iter().map(|s| s[i][j]).collect(),
                ));
            }
        }
        let symmetric = (0..d).all(|i| {
            (0..i).all(|j| components[i * d + j].values == components[j * d + i].values)
        });
        TensorField {
            grid,
            time,
            components,
            symmetric,
        }
    }

    /// `u ⊗ v`.
    pub fn outer(u: &VectorField, v: &VectorField) -> Result<Self> {
        if !u.grid.same_as(&v.grid) {
            bail!(Structural, "fields live on different grids");
        }
        let d = u.dim();
        let mut components = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                components.push(u.components[i].zip_with(&v.components[j], |a, b| a * b)?);
            }
        }
        let symmetric = core::ptr::eq(u, v);
        Ok(TensorField {
            grid: u.grid,
            time: u.time,
            components,
            symmetric,
        })
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarField {
        &self.components[i * self.dim() + j]
    }

    pub fn at_time(mut self, time: f64) -> Self {
        self.time = time;
        for c in &mut self.components {
            c.time = time;
        }
        self
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Copy) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            bail!(Structural, "fields live on different grids");
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.zip_with(b, f))
            .collect::<Result<Vec<_>>>()?;
        Ok(TensorField {
            grid: self.grid,
            time: self.time,
            components,
            symmetric: self.symmetric && other.symmetric,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        TensorField {
            grid: self.grid,
            time: self.time,
            components: self.components.iter().map(|c| c.scale(s)).collect(),
            symmetric: self.symmetric,
        }
    }
}

/// Anything carrying a grid and a time stamp.
pub trait Framed {
    fn grid(&self) -> &Grid;
    fn time(&self) -> f64;
}

macro_rules! framed {
    ($t:ty) => {
        impl Framed for $t {
            fn grid(&self) -> &Grid {
                &self.grid
            }
            fn time(&self) -> f64 {
                self.time
            }
        }
    };
}
framed!(ScalarField);
framed!(VectorField);
framed!(TensorField);

/// Frames at strictly increasing times on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    pub times: Vec<f64>,
    pub frames: Vec<T>,
}

impl<T: Framed> TimeSeries<T> {
    /// Frame times are taken from the frames.
    pub fn new(frames: Vec<T>) -> Result<Self> {
        if frames.is_empty() {
            bail!(Structural, "time series needs at least one frame");
        }
        let grid = *frames[0].grid();
        let times: Vec<f64> = frames.iter().map(|f| f.time()).collect();
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                bail!(Parameter, "frame times must increase strictly");
            }
        }
        if frames.iter().any(|f| !f.grid().same_as(&grid)) {
            bail!(Structural, "frames live on different grids");
        }
        Ok(TimeSeries { times, frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        self.frames[0].grid()
    }

    pub fn require_frames(&self, min: usize) -> Result<()> {
        if self.len() < min {
            bail!(Structural, "need at least {min} frames, got {}", self.len());
        }
        Ok(())
    }

    pub fn check_aligned<U: Framed>(&self, other: &TimeSeries<U>) -> Result<()> {
        if self.times != other.times {
            bail!(Structural, "time series are not aligned frame by frame");
        }
        if !self.grid().same_as(other.grid()) {
            bail!(Structural, "time series live on different grids");
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Finite differences.

fn line_offsets(grid: &Grid, axis: usize) -> (usize, usize) {
    (grid.strides()[axis], grid.n())
}

/// First derivative along `axis`.
pub fn d1(grid: &Grid, f: &[f64], axis: usize) -> Vec<f64> {
    let (s, n) = line_offsets(grid, axis);
    let h = grid.spacing();
    let mut out = vec![0.0; f.len()];
    for (l, o) in out.iter_mut().enumerate() {
        let k = grid.multi_index(l)[axis];
        *o = if k == 0 {
            (-3.0 * f[l] + 4.0 * f[l + s] - f[l + 2 * s]) / (2.0 * h)
        } else if k == n - 1 {
            (3.0 * f[l] - 4.0 * f[l - s] + f[l - 2 * s]) / (2.0 * h)
        } else {
            (f[l + s] - f[l - s]) / (2.0 * h)
        };
    }
    out
}

/// Compact second derivative along `axis`.
pub fn d2(grid: &Grid, f: &[f64], axis: usize) -> Vec<f64> {
    let (s, n) = line_offsets(grid, axis);
    let h2 = grid.spacing() * grid.spacing();
    let mut out = vec![0.0; f.len()];
    for (l, o) in out.iter_mut().enumerate() {
        let k = grid.multi_index(l)[axis];
        *o = if k == 0 {
            (2.0 * f[l] - 5.0 * f[l + s] + 4.0 * f[l + 2 * s] - f[l + 3 * s]) / h2
        } else if k == n - 1 {
            (2.0 * f[l] - 5.0 * f[l - s] + 4.0 * f[l - 2 * s] - f[l - 3 * s]) / h2
        } else {
            (f[l + s] - 2.0 * f[l] + f[l - s]) / h2
        };
    }
    out
}

/// `∂_i ∂_j f`: compact stencil on the diagonal, composed central
/// differences off it.
pub fn mixed(grid: &Grid, f: &[f64], i: usize, j: usize) -> Vec<f64> {
    if i == j {
        d2(grid, f, i)
    } else {
        d1(grid, &d1(grid, f, j), i)
    }
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let comps = (0..f.grid.dim())
        .map(|a| d1(&f.grid, &f.values, a))
        .collect();
    VectorField::raw(f.grid, f.time, comps)
}

pub fn divergence(v: &VectorField) -> Result<ScalarField> {
    check_components(v)?;
    let mut out = vec![0.0; v.grid.len()];
    for (a, c) in v.components.iter().enumerate() {
        for (o, x) in out.iter_mut().zip(d1(&v.grid, &c.values, a)) {
            *o += x;
        }
    }
    Ok(ScalarField::raw(v.grid, v.time, out))
}

/// Row divergence `(∇·T)_i = Σ_j ∂_j T_ij`.
pub fn divergence_tensor(t: &TensorField) -> VectorField {
    let d = t.dim();
    let comps = (0..d)
        .map(|i| {
            let mut acc = vec![0.0; t.grid.len()];
            for j in 0..d {
                for (o, x) in acc.iter_mut().zip(d1(&t.grid, &t.get(i, j).values, j)) {
                    *o += x;
                }
            }
            acc
        })
        .collect();
    VectorField::raw(t.grid, t.time, comps)
}

/// Compact `(2d+1)`-point Laplacian.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let mut out = vec![0.0; f.grid.len()];
    for a in 0..f.grid.dim() {
        for (o, x) in out.iter_mut().zip(d2(&f.grid, &f.values, a)) {
            *o += x;
        }
    }
    ScalarField::raw(f.grid, f.time, out)
}

pub fn vector_laplacian(v: &VectorField) -> VectorField {
    VectorField {
        grid: v.grid,
        time: v.time,
        components: v.components.iter().map(laplacian).collect(),
    }
}

/// `divergence ∘ gradient`: the Laplacian with the central stencil of width
/// `2h`.
pub fn laplacian_wide(f: &ScalarField) -> ScalarField {
    let mut out = vec![0.0; f.grid.len()];
    for a in 0..f.grid.dim() {
        let g = d1(&f.grid, &f.values, a);
        for (o, x) in out.iter_mut().zip(d1(&f.grid, &g, a)) {
            *o += x;
        }
    }
    ScalarField::raw(f.grid, f.time, out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Curl {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl Curl {
    pub fn interior_max(&self, ring: usize) -> f64 {
        match self {
            Curl::Scalar(s) => interior_max(&s.grid, &s.values, ring),
            Curl::Vector(v) => v
                .components
                .iter()
                .map(|c| interior_max(&c.grid, &c.values, ring))
                .fold(0.0, f64::max),
        }
    }

    pub fn interior_l2(&self, ring: usize) -> f64 {
        match self {
            Curl::Scalar(s) => interior_l2(&s.grid, &s.values, ring),
            Curl::Vector(v) => vector_interior_l2(v, ring),
        }
    }
}

pub fn curl(v: &VectorField) -> Result<Curl> {
    check_components(v)?;
    let g = &v.grid;
    let c = &v.components;
    if g.dim() == 2 {
        let a = d1(g, &c[1].values, 0);
        let b = d1(g, &c[0].values, 1);
        let out = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        return Ok(Curl::Scalar(ScalarField::raw(*g, v.time, out)));
    }
    let diff = |p: usize, q: usize, r: usize| -> Vec<f64> {
        // ∂_q v_r − ∂_r v_q, stored as component p
        let _ = p;
        let a = d1(g, &c[r].values, q);
        let b = d1(g, &c[q].values, r);
        a.iter().zip(&b).map(|(x, y)| x - y).collect()
    };
    let comps = vec![diff(0, 1, 2), diff(1, 2, 0), diff(2, 0, 1)];
    Ok(Curl::Vector(VectorField::raw(*g, v.time, comps)))
}

fn check_components(v: &VectorField) -> Result<()> {
    if v.components.len() != v.grid.dim() {
        bail!(Structural, "vector has {} components", v.components.len());
    }
    if v.components.iter().any(|c| !c.grid.same_as(&v.grid)) {
        bail!(Structural, "vector components live on different grids");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Norms.

/// Riemann-sum L² norm over nodes at least `ring` away from the faces.
pub fn interior_l2(grid: &Grid, f: &[f64], ring: usize) -> f64 {
    let mut s = 0.0;
    for l in 0..grid.len() {
        if grid.is_interior(grid.multi_index(l), ring) {
            s += f[l] * f[l];
        }
    }
    math::sqrt(s * grid.cell_volume())
}

pub fn vector_interior_l2(v: &VectorField, ring: usize) -> f64 {
    let s: f64 = v
        .components
        .iter()
        .map(|c| {
            let n = interior_l2(&v.grid, &c.values, ring);
            n * n
        })
        .sum();
    math::sqrt(s)
}

pub fn interior_max(grid: &Grid, f: &[f64], ring: usize) -> f64 {
    let mut m: f64 = 0.0;
    for l in 0..grid.len() {
        if grid.is_interior(grid.multi_index(l), ring) {
            m = m.max(f[l].abs());
        }
    }
    m
}

pub fn vector_interior_max(v: &VectorField, ring: usize) -> f64 {
    let mut m: f64 = 0.0;
    for l in 0..v.grid.len() {
        if v.grid.is_interior(v.grid.multi_index(l), ring) {
            m = m.max(v.magnitude_at(l));
        }
    }
    m
}

/// Pointwise magnitudes of a sampled field.
pub trait Magnitudes {
    fn grid_ref(&self) -> &Grid;
    fn magnitude(&self, lin: usize) -> f64;
    fn check(&self) -> Result<()>;
}

impl Magnitudes for ScalarField {
    fn grid_ref(&self) -> &Grid {
        &self.grid
    }
    fn magnitude(&self, lin: usize) -> f64 {
        self.values[lin].abs()
    }
    fn check(&self) -> Result<()> {
        self.validate()
    }
}

impl Magnitudes for VectorField {
    fn grid_ref(&self) -> &Grid {
        &self.grid
    }
    fn magnitude(&self, lin: usize) -> f64 {
        self.magnitude_at(lin)
    }
    fn check(&self) -> Result<()> {
        self.components.iter().try_for_each(|c| c.validate())
    }
}

/// `(1 + |x|)^(-γ)`.
#[inline]
pub fn weight(p: &Point, gamma: f64) -> f64 {
    math::powf(1.0 + math::hypot3(p), -gamma)
}

/// `(Σ |f|^p (1+|x|)^(-γ) h^d)^(1/p)` over every node of the box.
pub fn weighted_lp_norm<F: Magnitudes + ?Sized>(f: &F, p: f64, gamma: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        bail!(Parameter, "exponent p must lie in [1, inf), got {p}");
    }
    if !(gamma >= 0.0) {
        bail!(Parameter, "weight exponent must be >= 0, got {gamma}");
    }
    f.check()?;
    let g = f.grid_ref();
    let mut s = 0.0;
    for l in 0..g.len() {
        let m = f.magnitude(l);
        if m != 0.0 {
            s += math::powf(m, p) * weight(&g.point(l), gamma);
        }
    }
    Ok(math::powf(s * g.cell_volume(), 1.0 / p))
}

// ---------------------------------------------------------------------------
// Interpolation.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interp {
    #[default]
    Multilinear,
    /// Four-point Lagrange per axis, stencil shifted inward at the faces.
    Cubic,
}

fn axis_weights(s: f64, n: usize, order: Interp) -> ([usize; 4], [f64; 4], usize) {
    match order {
        Interp::Multilinear => {
            let i0 = (math::floor(s) as isize).clamp(0, n as isize - 2) as usize;
            let t = s - i0 as f64;
            ([i0, i0 + 1, 0, 0], [1.0 - t, t, 0.0, 0.0], 2)
        }
        Interp::Cubic => {
            let base = (math::floor(s) as isize - 1).clamp(0, n as isize - 4) as usize;
            let t = s - base as f64 - 1.0;
            let w = [
                -t * (t - 1.0) * (t - 2.0) / 6.0,
                (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                -(t + 1.0) * t * (t - 2.0) / 2.0,
                (t + 1.0) * t * (t - 1.0) / 6.0,
            ];
            ([base, base + 1, base + 2, base + 3], w, 4)
        }
    }
}

pub fn interpolate(grid: &Grid, f: &[f64], p: &Point, order: Interp) -> Option<f64> {
    if !grid.contains(p) {
        return None;
    }
    let n = grid.n();
    let d = grid.dim();
    let mut idx = [[0usize; 4]; 3];
    let mut w = [[0.0; 4]; 3];
    let mut m = [1usize; 3];
    for a in 0..d {
        let s = grid.fractional(a, p[a]).clamp(0.0, (n - 1) as f64);
        let (i, wt, k) = axis_weights(s, n, order);
        idx[a] = i;
        w[a] = wt;
        m[a] = k;
    }
    let st = grid.strides();
    let mut acc = 0.0;
    for a in 0..m[0] {
        for b in 0..m[1] {
            let base = idx[0][a] * st[0] + idx[1][b] * st[1];
            let wab = w[0][a] * w[1][b];
            if d == 2 {
                acc += wab * f[base];
            } else {
                for c in 0..m[2] {
                    acc += wab * w[2][c] * f[base + idx[2][c]];
                }
            }
        }
    }
    Some(acc)
}

// ---------------------------------------------------------------------------
// Poincaré potential.

/// Panels of the composite 4-point Gauss–Legendre rule in `λ`.
pub const POINCARE_PANELS: usize = 8;

/// `q(x) = ∫₀¹ x·X(λx) dλ`, the potential of a curl-free field whose
/// gradient reproduces `X` up to quadrature and interpolation error.
pub fn poincare_potential(x: &VectorField) -> Result<ScalarField> {
    check_components(x)?;
    let g = x.grid;
    if !g.contains(&[0.0; 3]) {
        bail!(Parameter, "grid must contain the origin");
    }
    let gl = GaussLegendre::new(4);
    let d = g.dim();
    let values = (0..g.len())
        .map(|l| {
            let p = g.point(l);
            let mut q = 0.0;
            for k in 0..POINCARE_PANELS {
                let a = k as f64 / POINCARE_PANELS as f64;
                let b = (k + 1) as f64 / POINCARE_PANELS as f64;
                q += gl.integrate(a, b, |lam| {
                    let y = [lam * p[0], lam * p[1], lam * p[2]];
                    (0..d)
                        .map(|c| {
                            p[c] * interpolate(&g, &x.components[c].values, &y, Interp::Multilinear)
                                .unwrap_or(0.0)
                        })
                        .sum()
                });
            }
            q
        })
        .collect();
    Ok(ScalarField::raw(g, x.time, values))
}

// ---------------------------------------------------------------------------
// Time differentiation.

/// Second-order derivative in time of per-frame sample vectors: three-point
/// central formula on interior frames, one-sided at both ends. Works on
/// non-uniform frame spacing.
pub fn time_derivative(times: &[f64], frames: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
    let m = frames.len();
    if m < 3 || times.len() != m {
        bail!(Structural, "time derivative needs at least 3 aligned frames");
    }
    let len = frames[0].len();
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let (i0, i1, i2) = if k == 0 {
            (0, 1, 2)
        } else if k == m - 1 {
            (m - 3, m - 2, m - 1)
        } else {
            (k - 1, k, k + 1)
        };
        let (t0, t1, t2) = (times[i0], times[i1], times[i2]);
        let t = times[k];
        // Derivative of the Lagrange quadratic through the three frames.
        let c0 = ((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2));
        let c1 = ((t - t0) + (t - t2)) / ((t1 - t0) * (t1 - t2));
        let c2 = ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1));
        out.push(
            (0..len)
                .map(|l| c0 * frames[i0][l] + c1 * frames[i1][l] + c2 * frames[i2][l])
                .collect(),
        );
    }
    Ok(out)
}

/// Time derivative of a vector-field series, frame by frame.
pub fn vector_time_derivative(series: &TimeSeries<VectorField>) -> Result<Vec<VectorField>> {
    let d = series.grid().dim();
    let grid = *series.grid();
    let mut per_comp = Vec::with_capacity(d);
    for a in 0..d {
        let frames: Vec<&[f64]> = series
            .frames
            .iter()
            .map(|f| f.components[a].values.as_slice())
            .collect();
        per_comp.push(time_derivative(&series.times, &frames)?);
    }
    Ok((0..series.len())
        .map(|k| {
            VectorField::raw(
                grid,
                series.times[k],
                per_comp.iter().map(|c| c[k].clone()).collect(),
            )
        })
        .collect())
}
