//! Lagrange shape functions of order 1 and 2 on the reference triangle.
//!
//! Local node order: vertices `(0,0), (1,0), (0,1)`, then for order 2 the
//! midpoints of edges `(v0,v1), (v1,v2), (v2,v0)`.

/// Local vertex pairs whose midpoints carry the order-2 edge nodes.
pub const P2_EDGE_NODES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

pub fn local_count(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

/// Reference coordinates of the local nodes.
pub fn reference_nodes(order: usize) -> Vec<[f64; 2]> {
    let mut nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    if order == 2 {
        nodes.extend([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]);
    }
    nodes
}

const BARY_GRADS: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

fn barycentric(p: [f64; 2]) -> [f64; 3] {
    [1.0 - p[0] - p[1], p[0], p[1]]
}

/// Values and reference gradients of all shape functions at `p`.
pub fn eval_basis(order: usize, p: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
    let l = barycentric(p);
    let g = BARY_GRADS;
    match order {
        1 => (l.to_vec(), g.to_vec()),
        2 => {
            let mut values = Vec::with_capacity(6);
            let mut grads = Vec::with_capacity(6);
            for i in 0..3 {
                values.push(l[i] * (2.0 * l[i] - 1.0));
                let s = 4.0 * l[i] - 1.0;
                grads.push([s * g[i][0], s * g[i][1]]);
            }
            for [a, b] in P2_EDGE_NODES {
                values.push(4.0 * l[a] * l[b]);
                grads.push([
                    4.0 * (l[b] * g[a][0] + l[a] * g[b][0]),
                    4.0 * (l[b] * g[a][1] + l[a] * g[b][1]),
                ]);
            }
            (values, grads)
        }
        _ => panic!("unsupported order {order}"),
    }
}

/// Reference Hessians (constant per element); zero for order 1.
pub fn eval_hessians(order: usize) -> Vec<[[f64; 2]; 2]> {
    let g = BARY_GRADS;
    let outer = |a: [f64; 2], b: [f64; 2]| [[a[0] * b[0], a[0] * b[1]], [a[1] * b[0], a[1] * b[1]]];
    match order {
        1 => vec![[[0.0; 2]; 2]; 3],
        2 => {
            let mut h = Vec::with_capacity(6);
            for gi in g {
                let o = outer(gi, gi);
                h.push([[4.0 * o[0][0], 4.0 * o[0][1]], [4.0 * o[1][0], 4.0 * o[1][1]]]);
            }
            for [a, b] in P2_EDGE_NODES {
                let (o1, o2) = (outer(g[a], g[b]), outer(g[b], g[a]));
                h.push([
                    [4.0 * (o1[0][0] + o2[0][0]), 4.0 * (o1[0][1] + o2[0][1])],
                    [4.0 * (o1[1][0] + o2[1][0]), 4.0 * (o1[1][1] + o2[1][1])],
                ]);
            }
            h
        }
        _ => panic!("unsupported order {order}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kronecker_at_nodes() {
        for order in [1, 2] {
            for (j, node) in reference_nodes(order).iter().enumerate() {
                let (v, _) = eval_basis(order, *node);
                for (i, vi) in v.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((vi - expected).abs() < 1e-15);
                }
            }
        }
        let (v, _) = eval_basis(1, [0.0, 0.0]);
        assert_eq!(v, vec![1.0, 0.0, 0.0]);
        let (v, _) = eval_basis(2, [0.5, 0.0]);
        assert!(v[..3].iter().all(|x| x.abs() < 1e-15));
        assert!((v[3] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hessians_match_finite_differences_of_gradients() {
        let p = [0.23, 0.41];
        let step = 1e-6;
        let h = eval_hessians(2);
        for d in 0..2 {
            let mut pp = p;
            let mut pm = p;
            pp[d] += step;
            pm[d] -= step;
            let (_, gp) = eval_basis(2, pp);
            let (_, gm) = eval_basis(2, pm);
            for i in 0..6 {
                for c in 0..2 {
                    let fd = (gp[i][c] - gm[i][c]) / (2.0 * step);
                    assert!((fd - h[i][c][d]).abs() < 1e-7);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(x in 0.0f64..1.0, y in 0.0f64..1.0, order in 1usize..=2) {
            let p = if x + y > 1.0 { [1.0 - x, 1.0 - y] } else { [x, y] };
            let (v, g) = eval_basis(order, p);
            prop_assert_eq!(v.len(), local_count(order));
            prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            prop_assert!(g.iter().map(|g| g[0]).sum::<f64>().abs() < 1e-13);
            prop_assert!(g.iter().map(|g| g[1]).sum::<f64>().abs() < 1e-13);
        }

        #[test]
        fn gradients_match_finite_differences(x in 0.05f64..0.9, y in 0.05f64..0.9, order in 1usize..=2) {
            let p = if x + y > 0.95 { [0.95 - y, 0.95 - x] } else { [x, y] };
            let step = 1e-6;
            let (_, g) = eval_basis(order, p);
            let (vx1, _) = eval_basis(order, [p[0] + step, p[1]]);
            let (vx0, _) = eval_basis(order, [p[0] - step, p[1]]);
            let (vy1, _) = eval_basis(order, [p[0], p[1] + step]);
            let (vy0, _) = eval_basis(order, [p[0], p[1] - step]);
            for i in 0..g.len() {
                prop_assert!(((vx1[i] - vx0[i]) / (2.0 * step) - g[i][0]).abs() < 1e-8);
                prop_assert!(((vy1[i] - vy0[i]) / (2.0 * step) - g[i][1]).abs() < 1e-8);
            }
        }
    }
}
