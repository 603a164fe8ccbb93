use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::angular::HalfInt;

pub(crate) type CMatrix = DMatrix<Complex64>;

/// Angular momentum matrices in the `|F, m>` basis, `m = -F..F`.
#[derive(Debug, Clone)]
pub(crate) struct SpinOperators {
    pub f: HalfInt,
    /// `F_x, F_y, F_z`
    pub components: [CMatrix; 3],
    /// Symmetrized products `(F_i F_j + F_j F_i) / 2` in the order
    /// xx, yy, zz, xy, xz, yz.
    pub products: [CMatrix; 6],
}

pub(crate) const PRODUCT_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

impl SpinOperators {
    pub fn new(f: HalfInt) -> Self {
        let dim = f.multiplicity();
        let fv = f.value();
        let m = |i: usize| -fv + i as f64;
        let mut raise = CMatrix::zeros(dim, dim);
        for i in 0..dim.saturating_sub(1) {
            // <m+1| F+ |m>
            raise[(i + 1, i)] = Complex64::new((fv * (fv + 1.0) - m(i) * (m(i) + 1.0)).sqrt(), 0.0);
        }
        let lower = raise.adjoint();
        let fx = (&raise + &lower) * Complex64::new(0.5, 0.0);
        let fy = (&raise - &lower) * Complex64::new(0.0, -0.5);
        let fz = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            dim,
            (0..dim).map(|i| Complex64::new(m(i), 0.0)),
        ));
        let components = [fx, fy, fz];
        let products = PRODUCT_PAIRS.map(|(i, j)| {
            let a = &components[i] * &components[j];
            let b = &components[j] * &components[i];
            (a + b) * Complex64::new(0.5, 0.0)
        });
        SpinOperators { f, components, products }
    }

    pub fn dim(&self) -> usize {
        self.f.multiplicity()
    }
}

/// Orthonormal frame whose third vector is the quantization axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Frame {
    rows: [[f64; 3]; 3],
    identity: bool,
}

impl Frame {
    pub fn new(axis: [f64; 3]) -> Self {
        if axis == [0.0, 0.0, 1.0] {
            return Frame {
                rows: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                identity: true,
            };
        }
        let n = axis;
        let helper = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let d = helper[0] * n[0] + helper[1] * n[1] + helper[2] * n[2];
        let mut e1 = [helper[0] - d * n[0], helper[1] - d * n[1], helper[2] - d * n[2]];
        let norm = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
        e1 = e1.map(|c| c / norm);
        let e2 = [
            n[1] * e1[2] - n[2] * e1[1],
            n[2] * e1[0] - n[0] * e1[2],
            n[0] * e1[1] - n[1] * e1[0],
        ];
        Frame {
            rows: [e1, e2, n],
            identity: false,
        }
    }

    /// Components of a lab-frame vector in this frame.
    pub fn rotate(&self, e: [Complex64; 3]) -> [Complex64; 3] {
        if self.identity {
            return e;
        }
        self.rows.map(|r| e[0] * r[0] + e[1] * r[1] + e[2] * r[2])
    }
}

/// Real quadratic invariants of a field: `|E|^2`, `i (E- x E+)` and the
/// symmetric tensor `2 Re(E-_i E+_j)` in [`PRODUCT_PAIRS`] order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct FieldInvariants {
    pub intensity: f64,
    pub ellipticity: [f64; 3],
    pub tensor: [f64; 6],
}

impl FieldInvariants {
    pub fn of(e: &[Complex64; 3]) -> Self {
        let intensity = e.iter().map(|c| c.norm_sqr()).sum();
        let ellipticity = crate::polarizability::ellipticity_vector(e);
        let tensor = PRODUCT_PAIRS.map(|(i, j)| 2.0 * (e[i].conj() * e[j]).re);
        FieldInvariants {
            intensity,
            ellipticity,
            tensor,
        }
    }
}
