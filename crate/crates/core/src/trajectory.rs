//! Trajectory data model: coordinate matrices, observation masks,
//! fragmentation, normalization, error metrics and the long CSV format.
//!
//! Agent `i` (0-based here) owns rows `2i` (x) and `2i + 1` (y); column `t`
//! is the configuration of the whole swarm at one time step.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Coordinates of `n` agents over `T` steps as a `2n x T` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    coords: Matrix,
}

impl TrajectorySet {
    pub fn new(coords: Matrix) -> Result<Self> {
        let (rows, cols) = coords.shape();
        if rows < 2 || rows % 2 != 0 {
            return Err(Error::dim(format!("trajectory matrix needs 2n >= 2 rows, got {rows}")));
        }
        if cols < 2 {
            return Err(Error::dim(format!("trajectory matrix needs T >= 2 columns, got {cols}")));
        }
        if coords.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("trajectory coordinates must be finite"));
        }
        Ok(TrajectorySet { coords })
    }

    pub fn agent_count(&self) -> usize {
        self.coords.rows() / 2
    }

    pub fn step_count(&self) -> usize {
        self.coords.cols()
    }

    pub fn coords(&self) -> &Matrix {
        &self.coords
    }

    pub fn into_coords(self) -> Matrix {
        self.coords
    }

    pub fn position(&self, agent: usize, t: usize) -> (f64, f64) {
        (self.coords[(2 * agent, t)], self.coords[(2 * agent + 1, t)])
    }

    /// Column `t`: every agent's (x, y) stacked.
    pub fn configuration(&self, t: usize) -> Vec<f64> {
        self.coords.column(t)
    }

    /// Population standard deviation over all `2nT` entries.
    pub fn entry_std(&self) -> f64 {
        let data = self.coords.as_slice();
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        (data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
    }
}

/// Observation indicator over (agent, step) cells. Both coordinate rows of an
/// agent share one cell, so the x/y pairing holds by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorMask {
    agents: usize,
    steps: usize,
    // agent-major
    observed: Vec<bool>,
}

impl IndicatorMask {
    pub fn all_observed(agents: usize, steps: usize) -> Self {
        IndicatorMask { agents, steps, observed: vec![true; agents * steps] }
    }

    pub fn none_observed(agents: usize, steps: usize) -> Self {
        IndicatorMask { agents, steps, observed: vec![false; agents * steps] }
    }

    pub fn for_set(x: &TrajectorySet) -> Self {
        Self::all_observed(x.agent_count(), x.step_count())
    }

    /// Parses a `2n x T` 0/1 matrix, rejecting any other value and any agent
    /// whose x and y rows disagree.
    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        let (rows, steps) = m.shape();
        if rows % 2 != 0 {
            return Err(Error::dim("mask needs an even row count"));
        }
        let agents = rows / 2;
        let mut observed = Vec::with_capacity(agents * steps);
        for i in 0..agents {
            for t in 0..steps {
                let (x, y) = (m[(2 * i, t)], m[(2 * i + 1, t)]);
                if !(x == 0.0 || x == 1.0) || !(y == 0.0 || y == 1.0) {
                    return Err(Error::invalid(format!("mask entry for agent {i}, step {t} is not 0/1")));
                }
                if x != y {
                    return Err(Error::invalid(format!(
                        "mask rows of agent {i} disagree at step {t}"
                    )));
                }
                observed.push(x == 1.0);
            }
        }
        Ok(IndicatorMask { agents, steps, observed })
    }

    pub fn agent_count(&self) -> usize {
        self.agents
    }

    pub fn step_count(&self) -> usize {
        self.steps
    }

    pub fn is_observed(&self, agent: usize, t: usize) -> bool {
        self.observed[agent * self.steps + t]
    }

    pub fn set(&mut self, agent: usize, t: usize, observed: bool) {
        self.observed[agent * self.steps + t] = observed;
    }

    /// Entry of the expanded `2n x T` matrix.
    pub fn entry(&self, row: usize, t: usize) -> f64 {
        if self.is_observed(row / 2, t) {
            1.0
        } else {
            0.0
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(2 * self.agents, self.steps, |r, t| self.entry(r, t))
    }

    /// Expanded indicator for configuration column `t`.
    pub fn column(&self, t: usize) -> Vec<f64> {
        (0..2 * self.agents).map(|r| self.entry(r, t)).collect()
    }

    pub fn observed_cells(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn missing_cells(&self) -> usize {
        self.observed.len() - self.observed_cells()
    }

    pub(crate) fn check_matches(&self, x: &TrajectorySet) -> Result<()> {
        if self.agents != x.agent_count() || self.steps != x.step_count() {
            return Err(Error::dim(format!(
                "mask covers {} agents x {} steps, trajectories have {} x {}",
                self.agents,
                self.steps,
                x.agent_count(),
                x.step_count()
            )));
        }
        Ok(())
    }
}

/// Deletes `round(p/100 * n * T)` distinct (agent, step) cells chosen uniformly
/// under `seed`. Deleted cells are zeroed in both coordinate rows.
pub fn fragment(x: &TrajectorySet, percent: f64, seed: u64) -> Result<(TrajectorySet, IndicatorMask)> {
    if !(0.0..=100.0).contains(&percent) {
        return Err(Error::invalid(format!("fragmentation percentage {percent} outside [0, 100]")));
    }
    let (n, steps) = (x.agent_count(), x.step_count());
    let cells = n * steps;
    let count = ((percent / 100.0) * cells as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = rand::seq::index::sample(&mut rng, cells, count.min(cells));

    let mut mask = IndicatorMask::all_observed(n, steps);
    let mut coords = x.coords().clone();
    for cell in chosen.iter() {
        let (agent, t) = (cell / steps, cell % steps);
        mask.set(agent, t, false);
        coords[(2 * agent, t)] = 0.0;
        coords[(2 * agent + 1, t)] = 0.0;
    }
    Ok((TrajectorySet { coords }, mask))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RmseMode {
    /// Per-entry RMSE over all `2nT` entries.
    All,
    /// Per-entry RMSE over masked-out entries only.
    MissingOnly,
    /// `sqrt(1/T * sum_t ||recon_t - truth_t||^2)`.
    PerStep,
}

pub fn rmse(
    truth: &TrajectorySet,
    recon: &TrajectorySet,
    mode: RmseMode,
    mask: Option<&IndicatorMask>,
) -> Result<f64> {
    truth.coords().check_same_shape(recon.coords())?;
    let a = truth.coords();
    let b = recon.coords();
    let sq = |r: usize, t: usize| (a[(r, t)] - b[(r, t)]).powi(2);
    let (rows, steps) = a.shape();
    match mode {
        RmseMode::All => {
            let total: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).powi(2)).sum();
            Ok((total / (rows * steps) as f64).sqrt())
        }
        RmseMode::PerStep => {
            let total: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).powi(2)).sum();
            Ok((total / steps as f64).sqrt())
        }
        RmseMode::MissingOnly => {
            let mask = mask.ok_or_else(|| Error::invalid("missing-only RMSE requires a mask"))?;
            mask.check_matches(truth)?;
            let mut total = 0.0;
            let mut count = 0usize;
            for r in 0..rows {
                for t in 0..steps {
                    if !mask.is_observed(r / 2, t) {
                        total += sq(r, t);
                        count += 1;
                    }
                }
            }
            if count == 0 {
                return Err(Error::EmptySelection("mask has no missing entries".into()));
            }
            Ok((total / count as f64).sqrt())
        }
    }
}

/// Per-row observed range used to map trajectories into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl NormalizationRecord {
    pub fn identity(rows: usize) -> Self {
        NormalizationRecord { mins: vec![0.0; rows], maxs: vec![1.0; rows] }
    }
}

/// Min-max scales each row over its observed entries. Constant rows map to
/// 0.5; unobserved entries are written as 0.
pub fn normalize(x: &TrajectorySet, mask: &IndicatorMask) -> Result<(TrajectorySet, NormalizationRecord)> {
    mask.check_matches(x)?;
    let src = x.coords();
    let (rows, steps) = src.shape();
    let mut out = Matrix::zeros(rows, steps);
    let mut mins = Vec::with_capacity(rows);
    let mut maxs = Vec::with_capacity(rows);
    for r in 0..rows {
        let observed = (0..steps).filter(|&t| mask.is_observed(r / 2, t)).map(|t| src[(r, t)]);
        let (lo, hi) = observed.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo > hi {
            return Err(Error::DegenerateRow { row: r });
        }
        for t in 0..steps {
            if mask.is_observed(r / 2, t) {
                out[(r, t)] = if hi > lo { (src[(r, t)] - lo) / (hi - lo) } else { 0.5 };
            }
        }
        mins.push(lo);
        maxs.push(hi);
    }
    Ok((TrajectorySet { coords: out }, NormalizationRecord { mins, maxs }))
}

pub fn denormalize(x: &TrajectorySet, rec: &NormalizationRecord) -> Result<TrajectorySet> {
    let rows = x.coords().rows();
    if rec.mins.len() != rows || rec.maxs.len() != rows {
        return Err(Error::dim(format!(
            "normalization record has {} rows, trajectories have {rows}",
            rec.mins.len()
        )));
    }
    let mut out = x.coords().clone();
    for r in 0..rows {
        let (lo, hi) = (rec.mins[r], rec.maxs[r]);
        for v in out.row_mut(r) {
            *v = if hi > lo { *v * (hi - lo) + lo } else { lo };
        }
    }
    TrajectorySet::new(out)
}

const TRAJECTORY_HEADER: [&str; 4] = ["agent", "t", "x", "y"];

/// Writes the long CSV format (`agent,t,x,y`, 1-based indices, empty x/y for
/// unobserved cells). Values carry 17 significant digits. `comment`, when
/// given, is emitted as a leading `# ...` line.
pub fn write_trajectories<W: Write>(
    mut w: W,
    x: &TrajectorySet,
    mask: &IndicatorMask,
    comment: Option<&str>,
) -> Result<()> {
    mask.check_matches(x)?;
    if let Some(c) = comment {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "{}", TRAJECTORY_HEADER.join(","))?;
    for i in 0..x.agent_count() {
        for t in 0..x.step_count() {
            if mask.is_observed(i, t) {
                let (px, py) = x.position(i, t);
                writeln!(w, "{},{},{:.16e},{:.16e}", i + 1, t + 1, px, py)?;
            } else {
                writeln!(w, "{},{},,", i + 1, t + 1)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_trajectories(path: impl AsRef<Path>, x: &TrajectorySet, mask: &IndicatorMask) -> Result<()> {
    save_trajectories_with_comment(path, x, mask, None)
}

pub fn save_trajectories_with_comment(
    path: impl AsRef<Path>,
    x: &TrajectorySet,
    mask: &IndicatorMask,
    comment: Option<&str>,
) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_trajectories(file, x, mask, comment)
}

fn parse_err(line: u64, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Reads the long CSV format. Lines starting with `#` are ignored.
pub fn read_trajectories<R: Read>(r: R) -> Result<(TrajectorySet, IndicatorMask)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(r);

    let header_line = reader.position().line();
    let headers = reader.headers().map_err(|e| parse_err(header_line, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != TRAJECTORY_HEADER {
        return Err(parse_err(
            reader.position().line().max(1),
            format!("expected header `agent,t,x,y`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }

    struct Cell {
        agent: usize,
        t: usize,
        xy: Option<(f64, f64)>,
        line: u64,
    }
    let mut cells = Vec::new();
    let mut last_line = 1;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        last_line = line;
        if record.len() != 4 {
            return Err(parse_err(line, format!("expected 4 fields, found {}", record.len())));
        }
        let index = |k: usize, name: &str| -> Result<usize> {
            let v: usize = record[k]
                .parse()
                .map_err(|_| parse_err(line, format!("{name} `{}` is not a positive integer", &record[k])))?;
            if v == 0 {
                return Err(parse_err(line, format!("{name} indices start at 1")));
            }
            Ok(v - 1)
        };
        let agent = index(0, "agent")?;
        let t = index(1, "t")?;
        let xy = match (record[2].is_empty(), record[3].is_empty()) {
            (true, true) => None,
            (false, false) => {
                let coord = |k: usize| -> Result<f64> {
                    let v: f64 = record[k]
                        .parse()
                        .map_err(|_| parse_err(line, format!("`{}` is not a number", &record[k])))?;
                    if !v.is_finite() {
                        return Err(parse_err(line, "coordinates must be finite"));
                    }
                    Ok(v)
                };
                Some((coord(2)?, coord(3)?))
            }
            _ => return Err(parse_err(line, "x and y must be both present or both empty")),
        };
        cells.push(Cell { agent, t, xy, line });
    }

    let n = cells.iter().map(|c| c.agent + 1).max().unwrap_or(0);
    let steps = cells.iter().map(|c| c.t + 1).max().unwrap_or(0);
    if n == 0 || steps < 2 {
        return Err(parse_err(last_line, format!("need at least one agent and two steps, found {n} x {steps}")));
    }
    let mut seen: Vec<Option<u64>> = vec![None; n * steps];
    let mut coords = Matrix::zeros(2 * n, steps);
    let mut mask = IndicatorMask::all_observed(n, steps);
    for c in &cells {
        let slot = &mut seen[c.agent * steps + c.t];
        if let Some(first) = slot {
            return Err(parse_err(
                c.line,
                format!("duplicate record for agent {}, t {} (first on line {first})", c.agent + 1, c.t + 1),
            ));
        }
        *slot = Some(c.line);
        match c.xy {
            Some((px, py)) => {
                coords[(2 * c.agent, c.t)] = px;
                coords[(2 * c.agent + 1, c.t)] = py;
            }
            None => mask.set(c.agent, c.t, false),
        }
    }
    if let Some(pos) = seen.iter().position(Option::is_none) {
        return Err(parse_err(
            last_line,
            format!(
                "inconsistent indexing: no record for agent {}, t {} ({} agents x {} steps expected)",
                pos / steps + 1,
                pos % steps + 1,
                n,
                steps
            ),
        ));
    }
    Ok((TrajectorySet::new(coords)?, mask))
}

pub fn load_trajectories(path: impl AsRef<Path>) -> Result<(TrajectorySet, IndicatorMask)> {
    read_trajectories(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Writes `agent,t,observed`.
pub fn write_mask<W: Write>(mut w: W, mask: &IndicatorMask, comment: Option<&str>) -> Result<()> {
    if let Some(c) = comment {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "agent,t,observed")?;
    for i in 0..mask.agent_count() {
        for t in 0..mask.step_count() {
            writeln!(w, "{},{},{}", i + 1, t + 1, u8::from(mask.is_observed(i, t)))?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_set(n: usize, steps: usize, seed: u64) -> TrajectorySet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TrajectorySet::new(Matrix::from_fn(2 * n, steps, |_, _| rng.gen_range(-5.0..5.0))).unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(TrajectorySet::new(Matrix::zeros(3, 4)).is_err());
        assert!(TrajectorySet::new(Matrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn fragment_extremes() {
        let x = random_set(3, 8, 1);
        let (out, mask) = fragment(&x, 0.0, 5).unwrap();
        assert_eq!(out, x);
        assert_eq!(mask, IndicatorMask::for_set(&x));

        let (out, mask) = fragment(&x, 100.0, 5).unwrap();
        assert!(out.coords().as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(mask.observed_cells(), 0);

        assert!(matches!(fragment(&x, 100.5, 5), Err(Error::Validation(_))));
        assert!(matches!(fragment(&x, -1.0, 5), Err(Error::Validation(_))));
    }

    #[test]
    fn fragment_half_counts_cells() {
        let x = random_set(2, 10, 9);
        let (_, mask) = fragment(&x, 50.0, 42).unwrap();
        let m = mask.to_matrix();
        let zero_entries = m.as_slice().iter().filter(|&&v| v == 0.0).count();
        let mut missing_cells = 0;
        for i in 0..2 {
            for t in 0..10 {
                if m[(2 * i, t)] == 0.0 {
                    missing_cells += 1;
                }
            }
        }
        assert_eq!(missing_cells, 10);
        assert_eq!(zero_entries, 20);
    }

    #[test]
    fn fragment_touches_only_masked_entries_and_is_reproducible() {
        let x = random_set(5, 30, 3);
        for (p, seed) in [(10.0, 1), (37.0, 2), (90.0, 3)] {
            let (out, mask) = fragment(&x, p, seed).unwrap();
            let (again, mask2) = fragment(&x, p, seed).unwrap();
            assert_eq!(out, again);
            assert_eq!(mask, mask2);
            IndicatorMask::from_matrix(&mask.to_matrix()).unwrap();
            for r in 0..10 {
                for t in 0..30 {
                    let changed = out.coords()[(r, t)] != x.coords()[(r, t)];
                    assert!(!changed || mask.entry(r, t) == 0.0);
                }
            }
        }
    }

    #[test]
    fn rmse_cases() {
        let x = random_set(2, 5, 4);
        assert_eq!(rmse(&x, &x, RmseMode::All, None).unwrap(), 0.0);
        let shifted = TrajectorySet::new(x.coords().map(|v| v - 0.75)).unwrap();
        assert!((rmse(&x, &shifted, RmseMode::All, None).unwrap() - 0.75).abs() < 1e-12);

        let truth = TrajectorySet::new(Matrix::zeros(2, 2)).unwrap();
        let recon = TrajectorySet::new(Matrix::from_rows(&[vec![3.0, 0.0], vec![4.0, 0.0]]).unwrap()).unwrap();
        // 25 over 4 entries
        assert!((rmse(&truth, &recon, RmseMode::All, None).unwrap() - (25.0f64 / 4.0).sqrt()).abs() < 1e-15);
        // ||(3,4)||^2 = 25 over T = 2
        assert!((rmse(&truth, &recon, RmseMode::PerStep, None).unwrap() - (12.5f64).sqrt()).abs() < 1e-15);

        let mut mask = IndicatorMask::all_observed(1, 2);
        assert!(matches!(
            rmse(&truth, &recon, RmseMode::MissingOnly, Some(&mask)),
            Err(Error::EmptySelection(_))
        ));
        assert!(rmse(&truth, &recon, RmseMode::MissingOnly, None).is_err());
        mask.set(0, 0, false);
        let v = rmse(&truth, &recon, RmseMode::MissingOnly, Some(&mask)).unwrap();
        assert!((v - (25.0f64 / 2.0).sqrt()).abs() < 1e-15);

        let other = random_set(3, 5, 4);
        assert!(matches!(rmse(&x, &other, RmseMode::All, None), Err(Error::Dimension(_))));
    }

    #[test]
    fn rmse_repeated_column_case() {
        // One agent at the origin against (3, 4) at both steps: sqrt(50 / 4).
        let truth = TrajectorySet::new(Matrix::zeros(2, 2)).unwrap();
        let recon = TrajectorySet::new(Matrix::from_rows(&[vec![3.0, 3.0], vec![4.0, 4.0]]).unwrap()).unwrap();
        let v = rmse(&truth, &recon, RmseMode::All, None).unwrap();
        assert!((v - 3.5355339059327378).abs() < 1e-15);
    }

    #[test]
    fn rmse_is_a_metric_on_random_triples() {
        for seed in 0..100 {
            let a = random_set(2, 6, seed * 3);
            let b = random_set(2, 6, seed * 3 + 1);
            let c = random_set(2, 6, seed * 3 + 2);
            let ab = rmse(&a, &b, RmseMode::All, None).unwrap();
            assert_eq!(ab, rmse(&b, &a, RmseMode::All, None).unwrap());
            let ac = rmse(&a, &c, RmseMode::All, None).unwrap();
            let bc = rmse(&b, &c, RmseMode::All, None).unwrap();
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn normalize_endpoints_and_constant_rows() {
        let coords = Matrix::from_rows(&[vec![-4.0, 4.0, 0.0], vec![2.0, 2.0, 2.0]]).unwrap();
        let x = TrajectorySet::new(coords).unwrap();
        let mask = IndicatorMask::for_set(&x);
        let (norm, rec) = normalize(&x, &mask).unwrap();
        assert_eq!(norm.coords().row(0), &[0.0, 1.0, 0.5]);
        assert_eq!(norm.coords().row(1), &[0.5, 0.5, 0.5]);
        let back = denormalize(&norm, &rec).unwrap();
        assert_eq!(back.coords().row(1), &[2.0, 2.0, 2.0]);
        assert_eq!(back, x);
    }

    #[test]
    fn normalize_zero_fills_and_rejects_empty_rows() {
        let x = random_set(2, 4, 8);
        let mut mask = IndicatorMask::for_set(&x);
        mask.set(1, 2, false);
        let (norm, _) = normalize(&x, &mask).unwrap();
        assert_eq!(norm.coords()[(2, 2)], 0.0);
        assert_eq!(norm.coords()[(3, 2)], 0.0);
        for t in 0..4 {
            mask.set(0, t, false);
        }
        assert!(matches!(normalize(&x, &mask), Err(Error::DegenerateRow { row: 0 })));
    }

    #[test]
    fn denormalize_identity_and_mismatch() {
        let x = random_set(2, 4, 10);
        assert_eq!(denormalize(&x, &NormalizationRecord::identity(4)).unwrap(), x);
        assert!(matches!(
            denormalize(&x, &NormalizationRecord::identity(3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn normalize_round_trip_on_observed_entries() {
        let x = random_set(10, 200, 77);
        let (frag, mask) = fragment(&x, 40.0, 1).unwrap();
        let (norm, rec) = normalize(&frag, &mask).unwrap();
        let back = denormalize(&norm, &rec).unwrap();
        let mut worst = 0.0f64;
        for r in 0..20 {
            for t in 0..200 {
                if mask.entry(r, t) == 1.0 {
                    worst = worst.max((back.coords()[(r, t)] - x.coords()[(r, t)]).abs());
                }
            }
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn csv_single_and_missing_records() {
        let text = "agent,t,x,y\n1,1,0.5,0.25\n1,2,1.0,2.0\n2,1,3,4\n2,2,,\n";
        let (x, mask) = read_trajectories(text.as_bytes()).unwrap();
        assert_eq!(x.agent_count(), 2);
        assert_eq!(x.coords()[(0, 0)], 0.5);
        assert_eq!(x.coords()[(1, 0)], 0.25);
        assert!(mask.is_observed(0, 0));
        assert!(!mask.is_observed(1, 1));
        assert_eq!(x.position(1, 1), (0.0, 0.0));
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let dup = "agent,t,x,y\n1,1,0,0\n1,2,0,0\n1,1,0,0\n";
        match read_trajectories(dup.as_bytes()) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("duplicate"));
            }
            other => panic!("{other:?}"),
        }
        let half = "agent,t,x,y\n1,1,0,\n1,2,0,0\n";
        assert!(matches!(read_trajectories(half.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let bad = "agent,t,x,y\n1,1,0,0\n1,2,zero,0\n";
        assert!(matches!(read_trajectories(bad.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let gap = "agent,t,x,y\n1,1,0,0\n1,2,0,0\n2,1,0,0\n";
        assert!(matches!(read_trajectories(gap.as_bytes()), Err(Error::Parse { .. })));
        let header = "a,b,c,d\n1,1,0,0\n";
        assert!(matches!(read_trajectories(header.as_bytes()), Err(Error::Parse { .. })));
        let zero = "agent,t,x,y\n0,1,0,0\n";
        assert!(matches!(read_trajectories(zero.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn csv_round_trip_is_bit_identical() {
        let x = random_set(10, 200, 123);
        let (frag, mask) = fragment(&x, 30.0, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        save_trajectories_with_comment(&path, &frag, &mask, Some("config_hash=abc")).unwrap();
        let (back, back_mask) = load_trajectories(&path).unwrap();
        assert_eq!(back_mask, mask);
        let same = back
            .coords()
            .as_slice()
            .iter()
            .zip(frag.coords().as_slice())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same);
    }

    #[test]
    fn mask_rejects_uncoupled_rows() {
        let m = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(IndicatorMask::from_matrix(&m).is_err());
        let m = Matrix::from_rows(&[vec![1.0, 0.5], vec![1.0, 0.5]]).unwrap();
        assert!(IndicatorMask::from_matrix(&m).is_err());
    }
}
