//! Finite labeled metric spaces and the labeled Gromov–Hausdorff distance.
//!
//! For a correspondence `R ⊂ X × Y` write `dis(R)` for its metric
//! distortion, `b = ½ max_{l,m} |d(α_l,α_m) − d(β_l,β_m)|` for the label
//! distortion and `c(R) = max_{(x,y)∈R, l} |d(x,α_l) − d(y,β_l)|`. Gluing `X`
//! and `Y` along `R` and the label pairs shows
//!
//! `d_GH^L = min_R max(½ dis(R) + b, c(R))`,
//!
//! which the exact search evaluates and every explicit correspondence bounds
//! from above.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{BoundaryGrid, GeometryError, ManifoldModel, Vec2};
use crate::par;

/// Spaces up to this many points are solved exactly.
pub const EXACT_LIMIT: usize = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricSpaceError {
    #[error("label sets differ: {0} vs {1} labels")]
    LabelMismatch(usize, usize),
    #[error("label {label} points at {point}, but the space has {n} points")]
    LabelOutOfRange { label: usize, point: usize, n: usize },
    #[error("distance matrix is not a metric: {0}")]
    NotMetric(String),
    #[error("space file: {0}")]
    Format(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `(X, d, α)` with `α: {0..L} → X`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledMetricSpace {
    pub dist: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl LabeledMetricSpace {
    pub fn new(dist: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self, MetricSpaceError> {
        let n = dist.len();
        if dist.iter().any(|r| r.len() != n) {
            return Err(MetricSpaceError::NotMetric("matrix is not square".into()));
        }
        for (label, &point) in labels.iter().enumerate() {
            if point >= n {
                return Err(MetricSpaceError::LabelOutOfRange { label, point, n });
            }
        }
        Ok(LabeledMetricSpace { dist, labels })
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().flatten().fold(0.0, |m: f64, &v| m.max(v))
    }

    /// Metric axioms up to `tol`.
    pub fn check_metric(&self, tol: f64) -> Result<(), MetricSpaceError> {
        let n = self.len();
        let d = &self.dist;
        for i in 0..n {
            if d[i][i].abs() > tol {
                return Err(MetricSpaceError::NotMetric(format!("d({i},{i}) = {}", d[i][i])));
            }
            for j in 0..n {
                if (d[i][j] - d[j][i]).abs() > tol || d[i][j] < -tol {
                    return Err(MetricSpaceError::NotMetric(format!("entry ({i},{j})")));
                }
                for k in 0..n {
                    if d[i][k] > d[i][j] + d[j][k] + tol {
                        return Err(MetricSpaceError::NotMetric(format!("triangle ({i},{j},{k})")));
                    }
                }
            }
        }
        Ok(())
    }

    /// The same space with only the labels in `keep`.
    pub fn restrict_labels(&self, keep: &[usize]) -> LabeledMetricSpace {
        LabeledMetricSpace {
            dist: self.dist.clone(),
            labels: keep.iter().map(|&l| self.labels[l]).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub label_id: usize,
    pub point_index: usize,
}

/// On-disk form: strict lower triangle, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub n: usize,
    pub dist: Vec<f64>,
    pub labels: Vec<LabelEntry>,
}

impl SpaceFile {
    pub fn from_space(space: &LabeledMetricSpace) -> SpaceFile {
        let n = space.len();
        let mut dist = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 1..n {
            dist.extend_from_slice(&space.dist[i][..i]);
        }
        SpaceFile {
            n,
            dist,
            labels: space
                .labels
                .iter()
                .enumerate()
                .map(|(label_id, &point_index)| LabelEntry { label_id, point_index })
                .collect(),
        }
    }

    pub fn to_space(&self) -> Result<LabeledMetricSpace, MetricSpaceError> {
        let n = self.n;
        if self.dist.len() != n * n.saturating_sub(1) / 2 {
            return Err(MetricSpaceError::Format(format!(
                "field `dist` has {} entries; a lower triangle of {n} points needs {}",
                self.dist.len(),
                n * n.saturating_sub(1) / 2
            )));
        }
        let mut dist = vec![vec![0.0; n]; n];
        let mut k = 0;
        for i in 1..n {
            for j in 0..i {
                dist[i][j] = self.dist[k];
                dist[j][i] = self.dist[k];
                k += 1;
            }
        }
        let count = self.labels.len();
        let mut labels = vec![usize::MAX; count];
        for e in &self.labels {
            if e.label_id >= count || labels[e.label_id] != usize::MAX {
                return Err(MetricSpaceError::Format(format!(
                    "field `labels`: label ids must be 0..{count} without repeats (saw {})",
                    e.label_id
                )));
            }
            labels[e.label_id] = e.point_index;
        }
        LabeledMetricSpace::new(dist, labels)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LghBounds {
    pub lower: f64,
    pub upper: f64,
    /// Lower and upper coincide by exhaustive search.
    pub exact: bool,
}

fn check_labels(x: &LabeledMetricSpace, y: &LabeledMetricSpace) -> Result<(), MetricSpaceError> {
    if x.labels.len() != y.labels.len() {
        return Err(MetricSpaceError::LabelMismatch(x.labels.len(), y.labels.len()));
    }
    Ok(())
}

/// `b = ½ max_{l,m} |d(α_l,α_m) − d(β_l,β_m)|`.
pub fn label_distortion(x: &LabeledMetricSpace, y: &LabeledMetricSpace) -> f64 {
    let (a, b) = (&x.labels, &y.labels);
    let rows = par::map_range(a.len(), |l| {
        (0..a.len()).fold(0.0f64, |m, k| m.max((x.dist[a[l]][a[k]] - y.dist[b[l]][b[k]]).abs()))
    });
    0.5 * rows.into_iter().fold(0.0, f64::max)
}

/// `κ(x,y) = max_l |d(x,α_l) − d(y,β_l)|` for every pair.
pub fn label_profile_gap(x: &LabeledMetricSpace, y: &LabeledMetricSpace) -> Vec<Vec<f64>> {
    let (a, b) = (&x.labels, &y.labels);
    par::map_range(x.len(), |i| {
        (0..y.len())
            .map(|j| a.iter().zip(b).fold(0.0f64, |m, (&p, &q)| m.max((x.dist[i][p] - y.dist[j][q]).abs())))
            .collect()
    })
}

/// `max(½ dis(R) + b, c(R))` for an explicit correspondence.
pub fn correspondence_cost(x: &LabeledMetricSpace, y: &LabeledMetricSpace, pairs: &[(usize, usize)], kappa: &[Vec<f64>], b: f64) -> f64 {
    let dis = par::map_range(pairs.len(), |k| {
        let (i, j) = pairs[k];
        pairs.iter().fold(0.0f64, |m, &(p, q)| m.max((x.dist[i][p] - y.dist[j][q]).abs()))
    })
    .into_iter()
    .fold(0.0, f64::max);
    let c = pairs.iter().fold(0.0f64, |m, &(i, j)| m.max(kappa[i][j]));
    (0.5 * dis + b).max(c)
}

fn argmin(row: impl Iterator<Item = f64>) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (k, v) in row.enumerate() {
        if v < best.0 {
            best = (v, k);
        }
    }
    best.1
}

/// Correspondence pairing every point with its best label-profile match.
pub fn greedy_correspondence(kappa: &[Vec<f64>], nx: usize, ny: usize) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..nx).map(|i| (i, argmin(kappa[i].iter().copied()))).collect();
    pairs.extend((0..ny).map(|j| (argmin((0..nx).map(|i| kappa[i][j])), j)));
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Does a correspondence inside `{κ ≤ t}` with `dis ≤ 2(t − b)` exist?
fn feasible(x: &LabeledMetricSpace, y: &LabeledMetricSpace, kappa: &[Vec<f64>], b: f64, t: f64) -> bool {
    let (nx, ny) = (x.len(), y.len());
    let slack = 2.0 * (t - b) + 1e-12 * (1.0 + t.abs());
    let allowed: Vec<Vec<usize>> = (0..nx).map(|i| (0..ny).filter(|&j| kappa[i][j] <= t).collect()).collect();
    let compatible = |chosen: &[(usize, usize)], i: usize, j: usize| chosen.iter().all(|&(p, q)| (x.dist[i][p] - y.dist[j][q]).abs() <= slack);

    fn cover_y(
        chosen: &mut Vec<(usize, usize)>,
        covered: &mut Vec<bool>,
        j: usize,
        ny: usize,
        nx: usize,
        kappa: &[Vec<f64>],
        t: f64,
        compatible: &dyn Fn(&[(usize, usize)], usize, usize) -> bool,
    ) -> bool {
        if j == ny {
            return true;
        }
        if covered[j] {
            return cover_y(chosen, covered, j + 1, ny, nx, kappa, t, compatible);
        }
        for i in 0..nx {
            if kappa[i][j] <= t && compatible(chosen, i, j) {
                chosen.push((i, j));
                covered[j] = true;
                if cover_y(chosen, covered, j + 1, ny, nx, kappa, t, compatible) {
                    return true;
                }
                covered[j] = false;
                chosen.pop();
            }
        }
        false
    }

    fn cover_x(
        chosen: &mut Vec<(usize, usize)>,
        i: usize,
        ctx: &(usize, usize, &[Vec<usize>], &[Vec<f64>], f64),
        compatible: &dyn Fn(&[(usize, usize)], usize, usize) -> bool,
    ) -> bool {
        let (nx, ny, allowed, kappa, t) = *ctx;
        if i == nx {
            let mut covered = vec![false; ny];
            for &(_, j) in chosen.iter() {
                covered[j] = true;
            }
            let mut extra = chosen.clone();
            return cover_y(&mut extra, &mut covered, 0, ny, nx, kappa, t, compatible);
        }
        for &j in &allowed[i] {
            if compatible(chosen, i, j) {
                chosen.push((i, j));
                if cover_x(chosen, i + 1, ctx, compatible) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }

    let ctx = (nx, ny, allowed.as_slice(), kappa, t);
    cover_x(&mut Vec::new(), 0, &ctx, &compatible)
}

/// Exact `d_GH^L` by search over correspondences and the finite set of
/// candidate values.
pub fn lgh_exact(x: &LabeledMetricSpace, y: &LabeledMetricSpace) -> Result<f64, MetricSpaceError> {
    check_labels(x, y)?;
    if x.is_empty() || y.is_empty() {
        return Err(MetricSpaceError::NotMetric("empty space".into()));
    }
    let b = label_distortion(x, y);
    let kappa = label_profile_gap(x, y);
    let mut candidates = vec![b];
    candidates.extend(kappa.iter().flatten().copied());
    for i in 0..x.len() {
        for p in 0..x.len() {
            for j in 0..y.len() {
                for q in 0..y.len() {
                    candidates.push(b + 0.5 * (x.dist[i][p] - y.dist[j][q]).abs());
                }
            }
        }
    }
    candidates.retain(|&t| t >= b);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    // The largest candidate is always feasible (the full product relation).
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(x, y, &kappa, b, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(candidates[lo])
}

/// Upper bound from explicit correspondences; exact on small spaces.
pub fn lgh_upper(x: &LabeledMetricSpace, y: &LabeledMetricSpace) -> Result<f64, MetricSpaceError> {
    check_labels(x, y)?;
    if x.len().max(y.len()) <= EXACT_LIMIT {
        return lgh_exact(x, y);
    }
    let b = label_distortion(x, y);
    let kappa = label_profile_gap(x, y);
    let pairs = greedy_correspondence(&kappa, x.len(), y.len());
    Ok(correspondence_cost(x, y, &pairs, &kappa, b))
}

/// Lower bound; exact on small spaces.
pub fn lgh_lower(x: &LabeledMetricSpace, y: &LabeledMetricSpace) -> Result<LghBounds, MetricSpaceError> {
    check_labels(x, y)?;
    if x.len().max(y.len()) <= EXACT_LIMIT {
        let v = lgh_exact(x, y)?;
        return Ok(LghBounds { lower: v, upper: v, exact: true });
    }
    let b = label_distortion(x, y);
    let kappa = label_profile_gap(x, y);
    let lower = lower_from_profiles(x, y, &kappa, b);
    let pairs = greedy_correspondence(&kappa, x.len(), y.len());
    let upper = correspondence_cost(x, y, &pairs, &kappa, b);
    Ok(LghBounds { lower, upper, exact: false })
}

fn lower_from_profiles(x: &LabeledMetricSpace, y: &LabeledMetricSpace, kappa: &[Vec<f64>], b: f64) -> f64 {
    let from_x = kappa.iter().map(|row| row.iter().copied().fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    let from_y = (0..y.len())
        .map(|j| kappa.iter().map(|row| row[j]).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let diam = 0.5 * (x.diameter() - y.diameter()).abs() + b;
    diam.max(from_x).max(from_y)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledLgh {
    pub lower: f64,
    pub upper: f64,
    /// Measured density of the sampled snapshot in `M`; the true distance
    /// to `(M, ι)` lies in `[lower − slack, upper + slack]`.
    pub slack: f64,
    pub sample_n: usize,
}

/// Chart-uniform points weighted to Riemannian area by rejection.
pub fn sample_manifold<R: Rng>(model: &ManifoldModel, n: usize, rng: &mut R) -> Vec<Vec2> {
    let r = model.radius();
    let mut peak = 0.0f64;
    for i in 0..=32 {
        for k in 0..32 {
            let p = Vec2::from_polar(r * i as f64 / 32.0, k as f64 * std::f64::consts::TAU / 32.0);
            peak = peak.max(model.volume_density(p));
        }
    }
    let peak = 1.25 * peak;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = Vec2::from_polar(r * rng.random::<f64>().sqrt(), rng.random::<f64>() * std::f64::consts::TAU);
        if rng.random::<f64>() * peak <= model.volume_density(p) {
            out.push(p);
        }
    }
    out
}

/// The labeled snapshot of `(M, ι)`: sampled interior points followed by the
/// boundary grid nodes, each node labeling itself.
pub fn manifold_snapshot(model: &ManifoldModel, grid: &BoundaryGrid, interior: &[Vec2]) -> Result<(LabeledMetricSpace, Vec<Vec2>), MetricSpaceError> {
    let mut points = interior.to_vec();
    points.extend(grid.positions(model));
    let n = points.len();
    let rows = par::try_map_range(n, |i| (0..n).map(|j| if i == j { Ok(0.0) } else { model.distance(points[i], points[j]) }).collect::<Result<Vec<f64>, _>>())?;
    let labels = (0..grid.n).map(|k| interior.len() + k).collect();
    Ok((LabeledMetricSpace::new(rows, labels)?, points))
}

/// Brackets `d_GH^L((P, α), (M, ι))` through a sampled snapshot of `M`.
pub fn sampled_lgh_vs_manifold<R: Rng>(
    reconstruction: &LabeledMetricSpace,
    model: &ManifoldModel,
    grid: &BoundaryGrid,
    sample_n: usize,
    rng: &mut R,
) -> Result<SampledLgh, MetricSpaceError> {
    let interior = sample_manifold(model, sample_n, rng);
    let (snapshot, points) = manifold_snapshot(model, grid, &interior)?;
    let bounds = lgh_lower(reconstruction, &snapshot)?;
    // Density of the snapshot, measured with fresh points.
    let probes = sample_manifold(model, 4 * sample_n.max(250), rng);
    let gaps = par::try_map_slice(&probes, |p| -> Result<f64, GeometryError> {
        let mut best = f64::INFINITY;
        for q in &points {
            best = best.min(model.distance(*p, *q)?);
        }
        Ok(best)
    })?;
    let slack = gaps.into_iter().fold(0.0, f64::max);
    Ok(SampledLgh {
        lower: bounds.lower,
        upper: bounds.upper,
        slack,
        sample_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two(d: f64, labels: Vec<usize>) -> LabeledMetricSpace {
        LabeledMetricSpace::new(vec![vec![0.0, d], vec![d, 0.0]], labels).unwrap()
    }

    /// Exact value from the definition: for every relation, a linear program
    /// over the cross distances of a pseudometric on `X ⊔ Y`.
    fn lp_oracle(x: &LabeledMetricSpace, y: &LabeledMetricSpace) -> f64 {
        use minilp::{ComparisonOp, OptimizationDirection, Problem};
        let (nx, ny) = (x.len(), y.len());
        let cells = nx * ny;
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << cells) {
            let inr = |i: usize, j: usize| mask & (1 << (i * ny + j)) != 0;
            if !(0..nx).all(|i| (0..ny).any(|j| inr(i, j))) || !(0..ny).all(|j| (0..nx).any(|i| inr(i, j))) {
                continue;
            }
            let mut p = Problem::new(OptimizationDirection::Minimize);
            let big = 1e3;
            let d: Vec<Vec<minilp::Variable>> = (0..nx).map(|_| (0..ny).map(|_| p.add_var(0.0, (0.0, big))).collect()).collect();
            let h = p.add_var(1.0, (0.0, big));
            let s = p.add_var(1.0, (0.0, big));
            for i in 0..nx {
                for j in 0..ny {
                    // Triangles through a second point of X or of Y.
                    for k in 0..nx {
                        if k != i {
                            p.add_constraint([(d[i][j], 1.0), (d[k][j], -1.0)], ComparisonOp::Le, x.dist[i][k]);
                        }
                    }
                    for k in 0..ny {
                        if k != j {
                            p.add_constraint([(d[i][j], 1.0), (d[i][k], -1.0)], ComparisonOp::Le, y.dist[j][k]);
                        }
                    }
                    if inr(i, j) {
                        p.add_constraint([(d[i][j], 1.0), (h, -1.0)], ComparisonOp::Le, 0.0);
                    }
                }
            }
            // Distances within X and Y must be respected by cross paths.
            for i in 0..nx {
                for k in 0..nx {
                    for j in 0..ny {
                        if i < k {
                            p.add_constraint([(d[i][j], 1.0), (d[k][j], 1.0)], ComparisonOp::Ge, x.dist[i][k]);
                        }
                    }
                }
            }
            for j in 0..ny {
                for k in 0..ny {
                    for i in 0..nx {
                        if j < k {
                            p.add_constraint([(d[i][j], 1.0), (d[i][k], 1.0)], ComparisonOp::Ge, y.dist[j][k]);
                        }
                    }
                }
            }
            for (&a, &b) in x.labels.iter().zip(&y.labels) {
                p.add_constraint([(d[a][b], 1.0), (s, -1.0)], ComparisonOp::Le, 0.0);
            }
            if let Ok(sol) = p.solve() {
                best = best.min(sol.objective());
            }
        }
        best
    }

    #[test]
    fn two_point_examples() {
        let (a, b) = (two(1.0, vec![]), two(2.0, vec![]));
        assert_eq!(lgh_exact(&a, &b).unwrap(), 0.5);
        assert_eq!(lgh_lower(&a, &b).unwrap().lower, 0.5);
        assert!(lgh_upper(&a, &b).unwrap() <= 0.5);
        assert_eq!(lgh_exact(&a, &a).unwrap(), 0.0);
        let l = two(1.0, vec![0, 1]);
        assert_eq!(lgh_exact(&l, &l).unwrap(), 0.0);
    }

    #[test]
    fn label_pinned_mismatch() {
        // Both labels on one point of X, split across Y: the label term forces ≥ ½.
        let x = two(1.0, vec![0, 0]);
        let y = two(1.0, vec![0, 1]);
        let v = lgh_lower(&x, &y).unwrap();
        assert_eq!((v.lower, v.exact), (1.0, true));
        assert!(v.lower >= 0.5);
        assert!((lp_oracle(&x, &y) - v.lower).abs() < 1e-9);
        // Swapped labels on the same geometry are an isometry image: distance 0.
        assert_eq!(lgh_exact(&two(1.0, vec![0, 1]), &two(1.0, vec![1, 0])).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_labels_rejected() {
        assert!(matches!(lgh_exact(&two(1.0, vec![0]), &two(1.0, vec![])), Err(MetricSpaceError::LabelMismatch(1, 0))));
    }

    #[test]
    fn dense_subset_bound() {
        // X: 40 points on a segment; Y: every fourth point, labels on Y.
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.025).collect();
        let ys: Vec<usize> = (0..40).step_by(4).collect();
        let dx: Vec<Vec<f64>> = xs.iter().map(|a| xs.iter().map(|b| (a - b).abs()).collect()).collect();
        let dy: Vec<Vec<f64>> = ys.iter().map(|&a| ys.iter().map(|&b| (xs[a] - xs[b]).abs()).collect()).collect();
        let x = LabeledMetricSpace::new(dx, ys.clone()).unwrap();
        let y = LabeledMetricSpace::new(dy, (0..ys.len()).collect()).unwrap();
        let eps1 = xs.iter().map(|a| ys.iter().map(|&b| (a - xs[b]).abs()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
        let ub = lgh_upper(&x, &y).unwrap();
        assert!(ub <= eps1 + 1e-12, "{ub}");
        let lb = lgh_lower(&x, &y).unwrap();
        assert!(lb.lower <= lb.upper);
    }

    #[test]
    fn space_file_roundtrip() {
        let s = LabeledMetricSpace::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.5], vec![2.0, 1.5, 0.0]], vec![2, 0]).unwrap();
        let f = SpaceFile::from_space(&s);
        assert_eq!(f.dist, vec![1.0, 2.0, 1.5]);
        assert_eq!(f.to_space().unwrap(), s);
        let bad = SpaceFile { dist: vec![1.0], ..f };
        assert!(matches!(bad.to_space(), Err(MetricSpaceError::Format(_))));
    }

    fn small_space(max_n: usize, labels: usize) -> impl Strategy<Value = LabeledMetricSpace> {
        (1..=max_n).prop_flat_map(move |n| {
            (proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), n), proptest::collection::vec(0..n, labels)).prop_map(|(pts, labels)| {
                let dist = pts
                    .iter()
                    .map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
                    .collect();
                LabeledMetricSpace::new(dist, labels).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn exact_matches_definition(x in small_space(3, 2), y in small_space(2, 2)) {
            let v = lgh_exact(&x, &y).unwrap();
            let oracle = lp_oracle(&x, &y);
            prop_assert!((v - oracle).abs() < 1e-7, "formula {v} vs LP {oracle}");
        }

        #[test]
        fn bracket_and_symmetry(x in small_space(6, 2), y in small_space(6, 2)) {
            let b = lgh_lower(&x, &y).unwrap();
            prop_assert!(b.exact && b.lower == b.upper);
            let r = lgh_exact(&y, &x).unwrap();
            prop_assert!((r - b.lower).abs() < 1e-12);
        }

        #[test]
        fn dropping_labels_never_increases(x in small_space(4, 3), y in small_space(4, 3)) {
            let full = lgh_exact(&x, &y).unwrap();
            let fewer = lgh_exact(&x.restrict_labels(&[0, 2]), &y.restrict_labels(&[0, 2])).unwrap();
            prop_assert!(fewer <= full + 1e-12);
        }

        #[test]
        fn triangle_inequality(x in small_space(3, 1), y in small_space(3, 1), z in small_space(3, 1)) {
            let xy = lgh_exact(&x, &y).unwrap();
            let yz = lgh_exact(&y, &z).unwrap();
            let xz = lgh_exact(&x, &z).unwrap();
            prop_assert!(xz <= 2.0 * (xy + yz) + 1e-12);
        }

        #[test]
        fn relaxed_bounds_bracket_exact(x in small_space(6, 2), y in small_space(6, 2)) {
            let exact = lgh_exact(&x, &y).unwrap();
            let b = label_distortion(&x, &y);
            let kappa = label_profile_gap(&x, &y);
            let lower = lower_from_profiles(&x, &y, &kappa, b);
            let upper = correspondence_cost(&x, &y, &greedy_correspondence(&kappa, x.len(), y.len()), &kappa, b);
            prop_assert!(lower <= exact + 1e-12 && exact <= upper + 1e-12);
        }
    }
}
