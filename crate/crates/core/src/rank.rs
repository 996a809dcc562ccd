//! Linear and nonlinear rank estimates of a trajectory dataset.
//!
//! Both flavors double-center a squared distance matrix between
//! configurations and count the prominent singular values of the resulting
//! Gramian. The linear flavor uses straight-line distances; the nonlinear one
//! uses shortest-path distances on a k-nearest-neighbor graph, which follow
//! the curved manifold the configurations lie on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, Matrix};
use crate::trajectory::TrajectorySet;

pub const DEFAULT_ALPHA: usize = 10;
pub const DEFAULT_PROMINENCE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceFlavor {
    Euclidean,
    Geodesic,
}

/// Symmetric `T x T` matrix of squared distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub flavor: DistanceFlavor,
    pub squared: Matrix,
}

/// Double-centered Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GramianMatrix(pub Matrix);

/// Undirected weighted graph over the `T` configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    pub alpha: usize,
    /// Adjacency lists of `(neighbor, euclidean distance)`, sorted by neighbor.
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

impl NeighborGraph {
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search_by_key(&b, |&(j, _)| j).is_ok()
    }

    /// Connected components, each listing its nodes in ascending order.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.node_count();
        let mut label = vec![usize::MAX; n];
        let mut out = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut stack = vec![start];
            let mut members = Vec::new();
            label[start] = id;
            while let Some(u) = stack.pop() {
                members.push(u);
                for &(v, _) in &self.adjacency[u] {
                    if label[v] == usize::MAX {
                        label[v] = id;
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankFlavor {
    Linear,
    Nonlinear,
}

impl std::str::FromStr for RankFlavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(RankFlavor::Linear),
            "nonlinear" => Ok(RankFlavor::Nonlinear),
            other => Err(Error::invalid(format!("unknown rank flavor `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub flavor: RankFlavor,
    pub spectrum: Vec<f64>,
    pub percentages: Vec<f64>,
    pub estimated_rank: usize,
    pub prominence_threshold: f64,
}

impl RankReport {
    /// CSV with columns `index,sigma,percentage` (1-based index).
    pub fn to_csv(&self, comment: Option<&str>) -> String {
        let mut s = String::new();
        if let Some(c) = comment {
            s.push_str(&format!("# {c}\n"));
        }
        s.push_str("index,sigma,percentage\n");
        for (k, (sig, pct)) in self.spectrum.iter().zip(&self.percentages).enumerate() {
            s.push_str(&format!("{},{:.16e},{:.16e}\n", k + 1, sig, pct));
        }
        s
    }
}

fn pairwise_squared(x: &TrajectorySet) -> Matrix {
    let steps = x.step_count();
    let columns: Vec<Vec<f64>> = (0..steps).map(|t| x.configuration(t)).collect();
    let mut d = Matrix::zeros(steps, steps);
    for a in 0..steps {
        for b in (a + 1)..steps {
            let v: f64 = columns[a].iter().zip(&columns[b]).map(|(p, q)| (p - q).powi(2)).sum();
            d[(a, b)] = v;
            d[(b, a)] = v;
        }
    }
    d
}

pub fn squared_euclidean_matrix(x: &TrajectorySet) -> DistanceMatrix {
    DistanceMatrix { flavor: DistanceFlavor::Euclidean, squared: pairwise_squared(x) }
}

/// `s = -1/2 (d - row_mean - col_mean + grand_mean)`.
pub fn double_center(d: &DistanceMatrix) -> GramianMatrix {
    let m = &d.squared;
    let n = m.rows();
    let row_means: Vec<f64> = (0..n).map(|r| m.row(r).iter().sum::<f64>() / n as f64).collect();
    let col_means: Vec<f64> = (0..n).map(|c| (0..n).map(|r| m[(r, c)]).sum::<f64>() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    GramianMatrix(Matrix::from_fn(n, n, |r, c| -0.5 * (m[(r, c)] - row_means[r] - col_means[c] + grand)))
}

/// Connects every configuration to its `alpha` nearest others and symmetrizes
/// by union. Ties in distance go to the earlier time step.
pub fn knn_graph(x: &TrajectorySet, alpha: usize) -> Result<NeighborGraph> {
    let steps = x.step_count();
    if alpha < 1 || alpha > steps - 1 {
        return Err(Error::invalid(format!("alpha must lie in 1..={}, got {alpha}", steps - 1)));
    }
    let sq = pairwise_squared(x);
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); steps];
    for a in 0..steps {
        let mut others: Vec<usize> = (0..steps).filter(|&b| b != a).collect();
        others.sort_by(|&p, &q| sq[(a, p)].total_cmp(&sq[(a, q)]));
        for &b in &others[..alpha] {
            let w = sq[(a, b)].sqrt();
            if w == 0.0 {
                return Err(Error::Degenerate {
                    reason: format!("configurations at steps {} and {} coincide", a + 1, b + 1),
                });
            }
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
    }
    for list in &mut adjacency {
        list.sort_by_key(|&(j, _)| j);
        list.dedup_by_key(|&mut (j, _)| j);
    }
    let graph = NeighborGraph { alpha, adjacency };
    let components = graph.components();
    if components.len() > 1 {
        return Err(Error::Disconnected { components });
    }
    Ok(graph)
}

/// All-pairs shortest paths by Floyd-Warshall; returns plain (unsquared)
/// path lengths with `INFINITY` for unreachable pairs.
pub fn floyd_warshall(g: &NeighborGraph) -> Matrix {
    let n = g.node_count();
    let mut dist = Matrix::from_fn(n, n, |r, c| if r == c { 0.0 } else { f64::INFINITY });
    for (a, list) in g.adjacency.iter().enumerate() {
        for &(b, w) in list {
            if w < dist[(a, b)] {
                dist[(a, b)] = w;
            }
        }
    }
    let data = dist.as_mut_slice();
    for k in 0..n {
        let row_k: Vec<f64> = data[k * n..(k + 1) * n].to_vec();
        for i in 0..n {
            let dik = data[i * n + k];
            if dik == f64::INFINITY {
                continue;
            }
            let row_i = &mut data[i * n..(i + 1) * n];
            for (dij, &dkj) in row_i.iter_mut().zip(&row_k) {
                let via = dik + dkj;
                if via < *dij {
                    *dij = via;
                }
            }
        }
    }
    dist
}

/// Squared shortest-path distances over the graph.
pub fn geodesic_matrix(g: &NeighborGraph) -> Result<DistanceMatrix> {
    let dist = floyd_warshall(g);
    if dist.as_slice().iter().any(|v| v.is_infinite()) {
        return Err(Error::Disconnected { components: g.components() });
    }
    Ok(DistanceMatrix { flavor: DistanceFlavor::Geodesic, squared: dist.map(|v| v * v) })
}

/// Spectrum report of a Gramian: singular values (negligible ones clamped to
/// zero), their percentages, and the count at or above `threshold` percent.
pub fn spectrum_report(gram: &GramianMatrix, flavor: RankFlavor, threshold: f64) -> Result<RankReport> {
    if !(0.0..=100.0).contains(&threshold) {
        return Err(Error::invalid(format!("prominence threshold {threshold} outside [0, 100]")));
    }
    let spectrum = numerics::clamp_negligible(&numerics::singular_values(&gram.0)?);
    let percentages = numerics::sv_percentages(&spectrum)?;
    let estimated_rank = percentages.iter().filter(|&&p| p >= threshold).count();
    Ok(RankReport { flavor, spectrum, percentages, estimated_rank, prominence_threshold: threshold })
}

pub fn rank_report(x: &TrajectorySet, flavor: RankFlavor, alpha: usize, threshold: f64) -> Result<RankReport> {
    let distances = match flavor {
        RankFlavor::Linear => squared_euclidean_matrix(x),
        RankFlavor::Nonlinear => geodesic_matrix(&knn_graph(x, alpha)?)?,
    };
    spectrum_report(&double_center(&distances), flavor, threshold)
}
