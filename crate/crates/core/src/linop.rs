//! Matrix-free linear operators.

/// A real linear map `A: R^cols -> R^rows` with its transpose.
pub trait LinearOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `y = A x`; `y` has length `rows()`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// `x = A' y`; `x` has length `cols()`.
    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]);
}

/// `[A; sqrt(lambda) I]`, turning Tikhonov-regularised least squares into a
/// plain least-squares problem with right-hand side `[b; 0]`.
pub struct Damped<'a, A: ?Sized> {
    inner: &'a A,
    scale: f64,
}

impl<'a, A: LinearOperator + ?Sized> Damped<'a, A> {
    pub fn new(inner: &'a A, lambda: f64) -> Self {
        Damped {
            inner,
            scale: lambda.max(0.0).sqrt(),
        }
    }
}

impl<A: LinearOperator + ?Sized> LinearOperator for Damped<'_, A> {
    fn rows(&self) -> usize {
        self.inner.rows() + self.inner.cols()
    }

    fn cols(&self) -> usize {
        self.inner.cols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (top, bottom) = y.split_at_mut(self.inner.rows());
        self.inner.apply(x, top);
        for (b, &xi) in bottom.iter_mut().zip(x) {
            *b = self.scale * xi;
        }
    }

    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]) {
        let (top, bottom) = y.split_at(self.inner.rows());
        self.inner.apply_adjoint(top, x);
        for (xi, &b) in x.iter_mut().zip(bottom) {
            *xi += self.scale * b;
        }
    }
}

/// Dense matrices, for small problems and cross-checks.
impl LinearOperator for nalgebra::DMatrix<f64> {
    fn rows(&self) -> usize {
        self.nrows()
    }

    fn cols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let xv = nalgebra::DVectorView::from_slice(x, x.len());
        let r = self * xv;
        y.copy_from_slice(r.as_slice());
    }

    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]) {
        let yv = nalgebra::DVectorView::from_slice(y, y.len());
        let r = self.tr_mul(&yv);
        x.copy_from_slice(r.as_slice());
    }
}
