//! Model spaces and operators used as fixtures and experiment targets.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::space::Space;
use crate::spectral::{KernelHandling, Operator};

fn graph_laplacian(space: Arc<Space>, edges: &[(usize, usize, f64)], locality: f64) -> Result<Operator> {
    let n = space.n();
    let mut kernel = DMatrix::zeros(n, n);
    for &(x, y, w) in edges {
        let (mx, my) = (space.weight(x), space.weight(y));
        kernel[(x, x)] += w / (mx * mx);
        kernel[(y, y)] += w / (my * my);
        kernel[(x, y)] -= w / (mx * my);
        kernel[(y, x)] -= w / (mx * my);
    }
    Operator::new(space, kernel, Some(locality))?.with_handling(KernelHandling::Deflate)
}

/// Cycle `C_n` with the hop metric, unit weights and the standard graph
/// Laplacian, constants deflated.
pub fn cycle_laplacian(n: usize) -> Result<(Arc<Space>, Operator)> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("a cycle needs at least 3 points, got {n}")));
    }
    let edges: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
    let coords = (0..n)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            vec![a.cos(), a.sin()]
        })
        .collect();
    let space = Arc::new(Space::from_edges(n, &edges, vec![1.0; n])?.with_coords(coords)?);
    let op = graph_laplacian(space.clone(), &edges, 1.0)?;
    Ok((space, op))
}

/// Path `P_n` with the hop metric, unit weights and the graph Laplacian,
/// constants deflated.
pub fn path_laplacian(n: usize) -> Result<(Arc<Space>, Operator)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("a path needs at least 2 points, got {n}")));
    }
    let edges: Vec<(usize, usize, f64)> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
    let coords = (0..n).map(|i| vec![i as f64, 0.0]).collect();
    let space = Arc::new(Space::from_edges(n, &edges, vec![1.0; n])?.with_coords(coords)?);
    let op = graph_laplacian(space.clone(), &edges, 1.0)?;
    Ok((space, op))
}

/// `-d²/dx² + V` on `n` interior nodes `x_i = i h` of a Dirichlet box, with
/// `μ = h` and the Euclidean metric. `h` defaults to `1/(n+1)`, the unit interval.
pub fn schrodinger_1d(n: usize, potential: &[f64], h: Option<f64>) -> Result<(Arc<Space>, Operator)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 nodes, got {n}")));
    }
    if potential.len() != n {
        return Err(Error::DimensionMismatch(format!("{} potential samples for {n} nodes", potential.len())));
    }
    if let Some((index, &value)) = potential.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativePotential { index, value });
    }
    let h = h.unwrap_or(1.0 / (n as f64 + 1.0));
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {h}")));
    }
    let xs: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
    let dist = DMatrix::from_fn(n, n, |i, j| (xs[i] - xs[j]).abs());
    let space = Arc::new(Space::new(dist, vec![h; n])?.with_coords(xs.iter().map(|&x| vec![x, 0.0]).collect())?);
    let inv_h2 = 1.0 / (h * h);
    let action = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 * inv_h2 + potential[i]
        } else if i.abs_diff(j) == 1 {
            -inv_h2
        } else {
            0.0
        }
    });
    let op = Operator::from_action(space.clone(), &action, Some(h))?;
    Ok((space, op))
}

/// Weighted graph Laplacian `(Lf)(x) = μ(x)^{-1} Σ_y w_xy (f(x) - f(y))` on
/// the shortest-path metric of the edge lengths, constants deflated.
///
/// Each edge is `(x, y, conductance, length)`.
pub fn weighted_graph(n: usize, edges: &[(usize, usize, f64, f64)], weights: Vec<f64>) -> Result<(Arc<Space>, Operator)> {
    if let Some(e) = edges.iter().find(|e| e.0 >= n || e.1 >= n || e.0 == e.1) {
        return Err(Error::InvalidArgument(format!("bad edge ({}, {})", e.0, e.1)));
    }
    if let Some(e) = edges.iter().find(|e| !(e.2 > 0.0 && e.3 > 0.0)) {
        return Err(Error::InvalidArgument(format!("edge ({}, {}) needs positive conductance and length", e.0, e.1)));
    }
    let lengths: Vec<(usize, usize, f64)> = edges.iter().map(|e| (e.0, e.1, e.3)).collect();
    let conductances: Vec<(usize, usize, f64)> = edges.iter().map(|e| (e.0, e.1, e.2)).collect();
    let locality = edges.iter().map(|e| e.3).fold(0.0, f64::max);
    let space = Arc::new(Space::from_edges(n, &lengths, weights)?);
    let op = graph_laplacian(space.clone(), &conductances, locality)?;
    Ok((space, op))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_spectrum() {
        let (_, op) = cycle_laplacian(8).unwrap();
        let dec = op.decompose().unwrap();
        let mut expect: Vec<f64> = (1..8).map(|k| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / 8.0).cos()).collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in dec.eigenvalues().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(dec.deflated_dim(), 1);
    }

    #[test]
    fn schrodinger_rejects_negative_potential() {
        let mut v = vec![0.0; 8];
        v[3] = -1.0;
        assert!(matches!(schrodinger_1d(8, &v, None), Err(Error::NegativePotential { index: 3, .. })));
    }

    #[test]
    fn weighted_graph_matches_unit_cycle() {
        let edges: Vec<_> = (0..6).map(|i| (i, (i + 1) % 6, 1.0, 1.0)).collect();
        let (_, op) = weighted_graph(6, &edges, vec![1.0; 6]).unwrap();
        let (_, cyc) = cycle_laplacian(6).unwrap();
        assert!((op.kernel() - cyc.kernel()).amax() < 1e-15);
    }
}
