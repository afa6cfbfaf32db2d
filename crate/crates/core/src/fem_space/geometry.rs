use crate::mesh::{Mesh, Point};

/// Affine map from the reference triangle onto mesh triangle `K`:
/// `x = v0 + J [xi, eta]^T`.
#[derive(Debug, Clone, Copy)]
pub struct ElementMap {
    pub origin: Point,
    pub jacobian: [[f64; 2]; 2],
    /// `J^{-1}`.
    pub inverse: [[f64; 2]; 2],
    /// `det J`, twice the triangle area.
    pub det: f64,
    /// Triangle diameter `h_K`.
    pub h: f64,
}

impl ElementMap {
    pub fn new(mesh: &Mesh, k: usize) -> Self {
        let [a, b, c] = mesh.triangle_points(k);
        let jacobian = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
        let inverse = [
            [jacobian[1][1] / det, -jacobian[0][1] / det],
            [-jacobian[1][0] / det, jacobian[0][0] / det],
        ];
        ElementMap {
            origin: a,
            jacobian,
            inverse,
            det,
            h: mesh.diameter(k),
        }
    }

    pub fn to_physical(&self, p: [f64; 2]) -> Point {
        let j = &self.jacobian;
        [
            self.origin[0] + j[0][0] * p[0] + j[0][1] * p[1],
            self.origin[1] + j[1][0] * p[0] + j[1][1] * p[1],
        ]
    }

    pub fn to_reference(&self, x: Point) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        let m = &self.inverse;
        [m[0][0] * d[0] + m[0][1] * d[1], m[1][0] * d[0] + m[1][1] * d[1]]
    }

    /// Physical gradient `J^{-T} g`.
    pub fn gradient(&self, g: [f64; 2]) -> [f64; 2] {
        let m = &self.inverse;
        [m[0][0] * g[0] + m[1][0] * g[1], m[0][1] * g[0] + m[1][1] * g[1]]
    }

    /// Physical Hessian `J^{-T} H J^{-1}`.
    pub fn hessian(&self, h: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let m = &self.inverse;
        let mut out = [[0.0; 2]; 2];
        for (a, row) in out.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                for i in 0..2 {
                    for j in 0..2 {
                        *v += m[i][a] * h[i][j] * m[j][b];
                    }
                }
            }
        }
        out
    }
}
