//! Minimal row-major matrix used by the trainable models. Training sticks
//! to 64-bit reals; shapes are small enough that plain loops over
//! contiguous rows are fast once optimized.

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// out += scale * v
#[inline]
pub fn axpy(out: &mut [f64], scale: f64, v: &[f64]) {
    debug_assert_eq!(out.len(), v.len());
    for (o, x) in out.iter_mut().zip(v) {
        *o += scale * x;
    }
}

/// out[c] += sum_r x[r] * m[r][c]   (vector-matrix product, m is rows x cols)
#[inline]
pub fn vec_mat_into(out: &mut [f64], x: &[f64], m: &Mat) {
    debug_assert_eq!(x.len(), m.rows);
    debug_assert_eq!(out.len(), m.cols);
    for (r, &xr) in x.iter().enumerate() {
        if xr != 0.0 {
            axpy(out, xr, m.row(r));
        }
    }
}

/// out[r] += sum_c m[r][c] * g[c]   (matrix-vector product with the rows)
#[inline]
pub fn mat_vec_into(out: &mut [f64], m: &Mat, g: &[f64]) {
    debug_assert_eq!(out.len(), m.rows);
    debug_assert_eq!(g.len(), m.cols);
    for (r, o) in out.iter_mut().enumerate() {
        *o += dot(m.row(r), g);
    }
}

/// grad[r][c] += x[r] * g[c]   (outer-product accumulation)
#[inline]
pub fn add_outer(grad: &mut Mat, x: &[f64], g: &[f64]) {
    debug_assert_eq!(x.len(), grad.rows);
    debug_assert_eq!(g.len(), grad.cols);
    for (r, &xr) in x.iter().enumerate() {
        if xr != 0.0 {
            axpy(grad.row_mut(r), xr, g);
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
