#![allow(dead_code)]

use rand::Rng;
use tvopt::graph::Topology;
use tvopt::linalg::Matrix;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(m: &Matrix) -> Vec<f64> {
    let n = m.nrows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Random undirected unweighted graph with edge probability `p`.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> Option<Topology> {
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|_| rng.gen_bool(p))
        .collect();
    Topology::from_edges(n, &edges).ok()
}

/// Pairs neither adjacent nor sharing a neighbor, by brute force over all triples.
pub fn brute_force_uncovered(topo: &Topology) -> Vec<(usize, usize)> {
    let n = topo.n_agents();
    let adj = |i: usize, j: usize| topo.weight(i, j) > 0.0;
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if !adj(i, j) && !(0..n).any(|k| adj(i, k) && adj(k, j)) {
                out.push((i, j));
            }
        }
    }
    out
}
