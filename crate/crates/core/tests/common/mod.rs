#![allow(dead_code)]

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajrec_core::hda::{self, Activation, Gradients, MlpArchitecture, MlpParams};
use trajrec_core::rank::NeighborGraph;
use trajrec_core::Matrix;

pub const FD_STEP: f64 = 1e-5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gradient_network(seed: u64) -> MlpParams {
    let arch = MlpArchitecture {
        layer_sizes: vec![6, 4, 2, 4, 6],
        hidden_activation: Activation::Relu,
        output_activation: Activation::Linear,
    };
    let mut p = MlpParams::init(&arch, seed);
    // Non-zero biases so every term of the gradient is exercised.
    let mut r = rng(seed ^ 0xb1a5);
    for b in &mut p.biases {
        b.iter_mut().for_each(|v| *v = r.gen_range(-0.2..0.2));
    }
    p
}

pub fn loss_at(params: &MlpParams, input: &[f64], target: &[f64], omega: &[f64]) -> f64 {
    let out = hda::forward(params, input).unwrap();
    hda::masked_loss(target, out.output(), omega).unwrap()
}

/// Central differences of the masked loss for every weight and bias.
pub fn finite_difference(params: &MlpParams, input: &[f64], target: &[f64], omega: &[f64]) -> Gradients {
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for k in 0..params.weights.len() {
        let w = &params.weights[k];
        let gw = Matrix::from_fn(w.rows(), w.cols(), |r, c| {
            let mut plus = params.clone();
            plus.weights[k].as_mut_slice()[r * w.cols() + c] += FD_STEP;
            let mut minus = params.clone();
            minus.weights[k].as_mut_slice()[r * w.cols() + c] -= FD_STEP;
            (loss_at(&plus, input, target, omega) - loss_at(&minus, input, target, omega)) / (2.0 * FD_STEP)
        });
        weights.push(gw);
        let gb = (0..params.biases[k].len())
            .map(|j| {
                let mut plus = params.clone();
                plus.biases[k][j] += FD_STEP;
                let mut minus = params.clone();
                minus.biases[k][j] -= FD_STEP;
                (loss_at(&plus, input, target, omega) - loss_at(&minus, input, target, omega)) / (2.0 * FD_STEP)
            })
            .collect();
        biases.push(gb);
    }
    Gradients { weights, biases }
}

/// Largest `|a - b| / max(|a|, |b|, floor)` over all parameters.
pub fn max_relative_error(a: &Gradients, b: &Gradients, floor: f64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut visit = |x: f64, y: f64| {
        let scale = x.abs().max(y.abs()).max(floor);
        worst = worst.max((x - y).abs() / scale);
    };
    for (wa, wb) in a.weights.iter().zip(&b.weights) {
        wa.as_slice().iter().zip(wb.as_slice()).for_each(|(x, y)| visit(*x, *y));
    }
    for (ba, bb) in a.biases.iter().zip(&b.biases) {
        ba.iter().zip(bb).for_each(|(x, y)| visit(*x, *y));
    }
    worst
}

pub fn random_vector(r: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| r.gen_range(0.0..1.0)).collect()
}

pub fn random_mask(r: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| if r.gen_bool(0.6) { 1.0 } else { 0.0 }).collect()
}

/// Points as rows; returns `Y_c Y_c^T` with `Y_c` the column-centered points.
pub fn centered_gram(points: &[Vec<f64>]) -> Matrix {
    let n = points.len();
    let dim = points[0].len();
    let mean: Vec<f64> = (0..dim).map(|d| points.iter().map(|p| p[d]).sum::<f64>() / n as f64).collect();
    let centered: Vec<Vec<f64>> = points.iter().map(|p| p.iter().zip(&mean).map(|(v, m)| v - m).collect()).collect();
    Matrix::from_fn(n, n, |i, j| centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum())
}

/// All-pairs shortest path lengths by running Dijkstra from every node.
pub fn dijkstra_all_pairs(g: &NeighborGraph) -> Matrix {
    let n = g.node_count();
    let mut graph = UnGraph::<(), f64>::new_undirected();
    let nodes: Vec<NodeIndex> = (0..n).map(|_| graph.add_node(())).collect();
    for (a, edges) in g.adjacency.iter().enumerate() {
        for &(b, w) in edges {
            if a < b {
                graph.add_edge(nodes[a], nodes[b], w);
            }
        }
    }
    let mut out = Matrix::from_fn(n, n, |_, _| f64::INFINITY);
    for (s, &src) in nodes.iter().enumerate() {
        for (node, dist) in dijkstra(&graph, src, None, |e| *e.weight()) {
            out[(s, node.index())] = dist;
        }
    }
    out
}

/// Random weighted graph on `n` nodes: a random spanning tree plus extra edges.
pub fn random_connected_graph(r: &mut ChaCha8Rng, n: usize, extra: usize) -> NeighborGraph {
    let mut adjacency = vec![Vec::new(); n];
    let add = |adj: &mut Vec<Vec<(usize, f64)>>, a: usize, b: usize, w: f64| {
        if a != b && !adj[a].iter().any(|(x, _)| *x == b) {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
    };
    for v in 1..n {
        let parent = r.gen_range(0..v);
        let w = r.gen_range(0.1..5.0);
        add(&mut adjacency, v, parent, w);
    }
    for _ in 0..extra {
        let (a, b) = (r.gen_range(0..n), r.gen_range(0..n));
        let w = r.gen_range(0.1..5.0);
        add(&mut adjacency, a, b, w);
    }
    for list in &mut adjacency {
        list.sort_by_key(|&(j, _)| j);
    }
    NeighborGraph { alpha: 1, adjacency }
}
