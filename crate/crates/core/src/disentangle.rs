//! Splitting an unlabeled arrival cloud into per-source arrival functions.
//!
//! The sweep walks the boundary grid once. Between consecutive nodes every
//! live track predicts its next value by quadratic extrapolation (its 2-jet),
//! and tracks are matched to the next node's samples by a minimum-cost
//! assignment. Distinct sources have distinct 2-jets wherever their graphs
//! meet, so the extrapolation error separates them at crossings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assign::hungarian;
use crate::geometry::BoundaryGrid;
use crate::par;
use crate::scene::ArrivalCloud;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DisentangleError {
    #[error("sample {index} at boundary parameter {param} is not on the {n}-node grid")]
    OffGrid { index: usize, param: f64, n: usize },
    #[error("label vector has {labels} entries for {samples} samples")]
    LabelMismatch { labels: usize, samples: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparateParams {
    /// Absolute ambiguity tolerance; derived from the local residuals when absent.
    pub jet_tol: Option<f64>,
    /// Multiple of the local residual scale used as the tolerance.
    pub jet_tol_factor: f64,
    /// Added to the Lipschitz gate when times carry noise.
    pub noise_allowance: f64,
}

impl Default for SeparateParams {
    fn default() -> Self {
        SeparateParams {
            jet_tol: None,
            jet_tol_factor: 5.0,
            noise_allowance: 0.0,
        }
    }
}

/// A recovered arrival function: one time per grid node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalFunction {
    pub tag: usize,
    pub values: Vec<f64>,
}

impl ArrivalFunction {
    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
    }
}

/// A connected piece of a graph that does not close around the boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialFunction {
    pub start_node: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    Complete(usize),
    Partial(usize),
    Unassigned,
}

/// Two continuations whose costs differ by less than the tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ambiguity {
    pub node: usize,
    pub first: Assignment,
    pub second: Assignment,
    pub gap: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Separation {
    pub grid: BoundaryGrid,
    /// Node at which the sweep started and closed.
    pub seam: usize,
    pub functions: Vec<ArrivalFunction>,
    pub partial: Vec<PartialFunction>,
    pub ambiguities: Vec<Ambiguity>,
    /// Output membership of every input sample.
    pub assignment: Vec<Assignment>,
}

impl Separation {
    pub fn is_ambiguous(&self) -> bool {
        !self.ambiguities.is_empty()
    }

    /// The competing partition for an ambiguity between two complete
    /// functions: their values are exchanged from the ambiguous node up to
    /// the seam.
    pub fn alternative(&self, k: usize) -> Option<Vec<ArrivalFunction>> {
        let amb = self.ambiguities.get(k)?;
        let (Assignment::Complete(a), Assignment::Complete(b)) = (amb.first, amb.second) else {
            return None;
        };
        let n = self.grid.n;
        let mut out = self.functions.clone();
        let from = (amb.node + n - self.seam) % n;
        for q in from..n {
            let node = (self.seam + q) % n;
            let va = self.functions[a].values[node];
            out[a].values[node] = self.functions[b].values[node];
            out[b].values[node] = va;
        }
        Some(out)
    }
}

struct Track {
    start: usize,
    values: Vec<f64>,
    samples: Vec<usize>,
}

impl Track {
    fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Quadratic extrapolation one node ahead.
    fn predict(&self) -> f64 {
        let v = &self.values;
        match v.len() {
            0 => unreachable!(),
            1 => v[0],
            2 => 2.0 * v[1] - v[0],
            k => 3.0 * v[k - 1] - 3.0 * v[k - 2] + v[k - 3],
        }
    }
}

struct Layer {
    /// Matched sample index (into `next`) per previous track.
    matched: Vec<Option<usize>>,
    /// `(prev_i, prev_j, gap, tolerance)`.
    ambiguous: Vec<(usize, usize, f64, f64)>,
}

struct Gate {
    width: f64,
    penalty: f64,
    jet_tol: Option<f64>,
    factor: f64,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

/// Matches previous tracks `(last, prediction)` to sorted `next` values.
fn match_layer(prev: &[(f64, f64)], next: &[f64], gate: &Gate) -> Layer {
    let (np, nn) = (prev.len(), next.len());
    let mut parent: Vec<usize> = (0..np + nn).collect();
    let mut ranges = Vec::with_capacity(np);
    for (i, &(last, _)) in prev.iter().enumerate() {
        let lo = next.partition_point(|&t| t < last - gate.width);
        let hi = next.partition_point(|&t| t <= last + gate.width);
        for j in lo..hi {
            union(&mut parent, i, np + j);
        }
        ranges.push((lo, hi));
    }
    let feasible = |i: usize, j: usize| j >= ranges[i].0 && j < ranges[i].1;
    let cost = |i: usize, j: usize| (next[j] - prev[i].1).abs();

    let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for i in 0..np {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().0.push(i);
    }
    for j in 0..nn {
        let r = find(&mut parent, np + j);
        groups.entry(r).or_default().1.push(j);
    }

    let mut matched = vec![None; np];
    let mut ambiguous = Vec::new();
    let floor = 64.0 * f64::EPSILON * next.iter().chain(prev.iter().map(|p| &p.0)).fold(1.0f64, |m, v| m.max(v.abs()));
    for (tracks, samples) in groups.values() {
        if tracks.is_empty() || samples.is_empty() {
            continue;
        }
        if tracks.len() == 1 && samples.len() == 1 {
            matched[tracks[0]] = Some(samples[0]);
            continue;
        }
        let (nt, ns) = (tracks.len(), samples.len());
        let size = nt + ns;
        let big = 1e6 * gate.penalty.max(1.0);
        let mut m = vec![vec![0.0; size]; size];
        for (a, &i) in tracks.iter().enumerate() {
            for (b, &j) in samples.iter().enumerate() {
                m[a][b] = if feasible(i, j) { cost(i, j) } else { big };
            }
            for c in ns..size {
                m[a][c] = gate.penalty;
            }
        }
        for row in m.iter_mut().skip(nt) {
            for c in row.iter_mut().take(ns) {
                *c = gate.penalty;
            }
        }
        let col = hungarian(&m);
        let mut chosen = Vec::new();
        for (a, &i) in tracks.iter().enumerate() {
            if col[a] < ns && feasible(i, samples[col[a]]) {
                matched[i] = Some(samples[col[a]]);
                chosen.push((i, samples[col[a]]));
            }
        }
        if chosen.len() < 2 {
            continue;
        }
        let rms = (chosen.iter().map(|&(i, j)| cost(i, j).powi(2)).sum::<f64>() / chosen.len() as f64).sqrt();
        let tol = gate.jet_tol.unwrap_or(gate.factor * rms.max(floor));
        for x in 0..chosen.len() {
            for y in (x + 1)..chosen.len() {
                let (i, j) = chosen[x];
                let (k, l) = chosen[y];
                // Equal values: swapping them leaves the partition unchanged.
                if feasible(i, l) && feasible(k, j) && (next[j] - next[l]).abs() > floor {
                    let gap = cost(i, l) + cost(k, j) - cost(i, j) - cost(k, l);
                    if gap < tol {
                        ambiguous.push((i, k, gap, tol));
                    }
                }
            }
        }
    }
    Layer { matched, ambiguous }
}

fn bucket(cloud: &ArrivalCloud) -> Result<Vec<Vec<(f64, usize)>>, DisentangleError> {
    let grid = cloud.header.grid();
    let mut buckets: Vec<Vec<(f64, usize)>> = vec![Vec::new(); grid.n];
    for (index, s) in cloud.samples.iter().enumerate() {
        let loc = grid.locate(s.boundary_param);
        if loc.offset.abs() > 1e-6 {
            return Err(DisentangleError::OffGrid {
                index,
                param: s.boundary_param,
                n: grid.n,
            });
        }
        buckets[loc.node].push((s.time, index));
    }
    for b in buckets.iter_mut() {
        b.sort_by(|x, y| x.0.total_cmp(&y.0));
    }
    Ok(buckets)
}

fn choose_seam(buckets: &[Vec<(f64, usize)>]) -> usize {
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (node, b) in buckets.iter().enumerate() {
        let gap = b.windows(2).map(|w| w[1].0 - w[0].0).fold(f64::INFINITY, f64::min);
        if gap > best.0 {
            best = (gap, node);
        }
    }
    best.1
}

/// Jet-tracking separation of a cloud into arrival functions.
pub fn separate(cloud: &ArrivalCloud, params: &SeparateParams) -> Result<Separation, DisentangleError> {
    let grid = cloud.header.grid();
    let n = grid.n;
    let buckets = bucket(cloud)?;
    let seam = choose_seam(&buckets);
    let h = grid.spacing();
    let gate = Gate {
        width: h * (1.0 + 1e-9) + 2.0 * params.noise_allowance + 1e-12,
        penalty: 4.0 * h + 4.0 * params.noise_allowance,
        jet_tol: params.jet_tol,
        factor: params.jet_tol_factor,
    };

    let mut tracks: Vec<Track> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut raw_amb: Vec<(usize, usize, usize, f64, f64)> = Vec::new();
    for q in 0..n {
        let node = (seam + q) % n;
        let here = &buckets[node];
        if q == 0 {
            for &(t, s) in here {
                active.push(tracks.len());
                tracks.push(Track { start: 0, values: vec![t], samples: vec![s] });
            }
            continue;
        }
        let prev: Vec<(f64, f64)> = active.iter().map(|&k| (tracks[k].last(), tracks[k].predict())).collect();
        let next: Vec<f64> = here.iter().map(|p| p.0).collect();
        let layer = match_layer(&prev, &next, &gate);
        for (i, k, gap, tol) in layer.ambiguous {
            raw_amb.push((node, active[i], active[k], gap, tol));
        }
        let mut taken = vec![false; here.len()];
        let mut still = Vec::with_capacity(here.len());
        for (i, m) in layer.matched.iter().enumerate() {
            if let Some(j) = *m {
                let k = active[i];
                tracks[k].values.push(here[j].0);
                tracks[k].samples.push(here[j].1);
                taken[j] = true;
                still.push(k);
            }
        }
        for (j, &(t, s)) in here.iter().enumerate() {
            if !taken[j] {
                still.push(tracks.len());
                tracks.push(Track { start: q, values: vec![t], samples: vec![s] });
            }
        }
        active = still;
    }

    // Close the circuit: tracks alive at the last node continue into the
    // tracks that started at the seam.
    let starters: Vec<usize> = (0..tracks.len()).filter(|&k| tracks[k].start == 0).collect();
    let mut starter_order = starters.clone();
    starter_order.sort_by(|&a, &b| tracks[a].values[0].total_cmp(&tracks[b].values[0]));
    let prev: Vec<(f64, f64)> = active.iter().map(|&k| (tracks[k].last(), tracks[k].predict())).collect();
    let next: Vec<f64> = starter_order.iter().map(|&k| tracks[k].values[0]).collect();
    let layer = match_layer(&prev, &next, &gate);
    for (i, k, gap, tol) in layer.ambiguous {
        raw_amb.push((seam, active[i], active[k], gap, tol));
    }
    let mut link: Vec<Option<usize>> = vec![None; tracks.len()];
    let mut linked_to = vec![false; tracks.len()];
    for (i, m) in layer.matched.iter().enumerate() {
        if let Some(j) = *m {
            link[active[i]] = Some(starter_order[j]);
            linked_to[starter_order[j]] = true;
        }
    }

    let mut complete: Vec<Vec<usize>> = Vec::new();
    let mut chains: Vec<Vec<usize>> = Vec::new();
    let mut visited = vec![false; tracks.len()];
    for k in 0..tracks.len() {
        if link[k] == Some(k) && tracks[k].start == 0 && tracks[k].values.len() == n {
            visited[k] = true;
            complete.push(vec![k]);
        }
    }
    let walk = |head: usize, visited: &mut Vec<bool>| {
        let mut chain = Vec::new();
        let mut cur = Some(head);
        while let Some(k) = cur {
            if visited[k] {
                break;
            }
            visited[k] = true;
            chain.push(k);
            cur = link[k];
        }
        chain
    };
    for k in 0..tracks.len() {
        if !visited[k] && !linked_to[k] {
            let c = walk(k, &mut visited);
            chains.push(c);
        }
    }
    for k in 0..tracks.len() {
        if !visited[k] {
            let c = walk(k, &mut visited);
            chains.push(c);
        }
    }

    // Assemble outputs in a rotation-invariant order.
    let mut functions: Vec<(Vec<f64>, usize)> = complete
        .iter()
        .map(|c| {
            let t = &tracks[c[0]];
            let mut values = vec![0.0; n];
            for (q, v) in t.values.iter().enumerate() {
                values[(seam + q) % n] = *v;
            }
            (values, c[0])
        })
        .collect();
    functions.sort_by(|a, b| {
        let ka = min_max(&a.0);
        let kb = min_max(&b.0);
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    let mut partial: Vec<(PartialFunction, Vec<usize>)> = chains
        .iter()
        .map(|c| {
            let start_node = (seam + tracks[c[0]].start) % n;
            let values = c.iter().flat_map(|&k| tracks[k].values.iter().copied()).collect();
            (PartialFunction { start_node, values }, c.clone())
        })
        .collect();
    partial.sort_by(|a, b| {
        a.0.start_node
            .cmp(&b.0.start_node)
            .then(a.0.values[0].total_cmp(&b.0.values[0]))
    });

    let mut owner = vec![Assignment::Unassigned; tracks.len()];
    for (tag, (_, k)) in functions.iter().enumerate() {
        owner[*k] = Assignment::Complete(tag);
    }
    for (idx, (_, members)) in partial.iter().enumerate() {
        for &k in members {
            owner[k] = Assignment::Partial(idx);
        }
    }
    let mut assignment = vec![Assignment::Unassigned; cloud.samples.len()];
    for (k, t) in tracks.iter().enumerate() {
        for &s in &t.samples {
            assignment[s] = owner[k];
        }
    }
    let ambiguities = raw_amb
        .into_iter()
        .map(|(node, a, b, gap, tolerance)| Ambiguity {
            node,
            first: owner[a],
            second: owner[b],
            gap,
            tolerance,
        })
        .collect();

    Ok(Separation {
        grid,
        seam,
        functions: functions
            .into_iter()
            .enumerate()
            .map(|(tag, (values, _))| ArrivalFunction { tag, values })
            .collect(),
        partial: partial.into_iter().map(|p| p.0).collect(),
        ambiguities,
        assignment,
    })
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

/// Oracle mode: groups samples by ground-truth label instead of tracking.
pub fn separate_with_labels(cloud: &ArrivalCloud, labels: &[usize]) -> Result<Separation, DisentangleError> {
    if labels.len() != cloud.samples.len() {
        return Err(DisentangleError::LabelMismatch {
            labels: labels.len(),
            samples: cloud.samples.len(),
        });
    }
    let grid = cloud.header.grid();
    let n = grid.n;
    let mut by_label: BTreeMap<usize, (Vec<Option<f64>>, Vec<usize>)> = BTreeMap::new();
    for (index, (s, &label)) in cloud.samples.iter().zip(labels).enumerate() {
        let loc = grid.locate(s.boundary_param);
        if loc.offset.abs() > 1e-6 {
            return Err(DisentangleError::OffGrid {
                index,
                param: s.boundary_param,
                n,
            });
        }
        let e = by_label.entry(label).or_insert_with(|| (vec![None; n], Vec::new()));
        e.0[loc.node] = Some(s.time);
        e.1.push(index);
    }
    let mut complete = Vec::new();
    let mut partial = Vec::new();
    for (values, members) in by_label.into_values() {
        if values.iter().all(|v| v.is_some()) && members.len() == n {
            complete.push((values.into_iter().map(|v| v.unwrap()).collect::<Vec<f64>>(), members));
        } else {
            let start_node = values.iter().position(|v| v.is_some()).unwrap_or(0);
            let vals = values.into_iter().flatten().collect();
            partial.push((PartialFunction { start_node, values: vals }, members));
        }
    }
    complete.sort_by(|a, b| {
        let ka = min_max(&a.0);
        let kb = min_max(&b.0);
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    let mut assignment = vec![Assignment::Unassigned; cloud.samples.len()];
    for (tag, (_, members)) in complete.iter().enumerate() {
        for &s in members {
            assignment[s] = Assignment::Complete(tag);
        }
    }
    for (idx, (_, members)) in partial.iter().enumerate() {
        for &s in members {
            assignment[s] = Assignment::Partial(idx);
        }
    }
    Ok(Separation {
        grid,
        seam: 0,
        functions: complete
            .into_iter()
            .enumerate()
            .map(|(tag, (values, _))| ArrivalFunction { tag, values })
            .collect(),
        partial: partial.into_iter().map(|p| p.0).collect(),
        ambiguities: Vec::new(),
        assignment,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssociationReport {
    pub accuracy: f64,
    pub recovered: usize,
    pub true_sources: usize,
    pub misassigned_samples: usize,
}

/// Fraction of samples placed in a complete function whose majority label
/// is their own label (each label credited to at most one function).
/// Samples with identical node and time are interchangeable.
pub fn association_accuracy(sep: &Separation, cloud: &ArrivalCloud, labels: &[usize]) -> AssociationReport {
    let node = |i: usize| sep.grid.locate(cloud.samples[i].boundary_param).node;
    let mut at: BTreeMap<usize, Vec<(f64, usize)>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        at.entry(node(i)).or_default().push((cloud.samples[i].time, l));
    }
    let same = |i: usize, l: usize| {
        let t = cloud.samples[i].time;
        at[&node(i)].iter().any(|&(u, m)| m == l && (u - t).abs() <= 1e-12 * (1.0 + t.abs()))
    };
    let mut counts: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); sep.functions.len()];
    for (a, &l) in sep.assignment.iter().zip(labels) {
        if let Assignment::Complete(t) = a {
            *counts[*t].entry(l).or_default() += 1;
        }
    }
    let mut majority = vec![None; sep.functions.len()];
    let mut credited = std::collections::BTreeSet::new();
    for (t, c) in counts.iter().enumerate() {
        if let Some((&label, _)) = c.iter().max_by_key(|(l, k)| (**k, std::cmp::Reverse(**l))) {
            if credited.insert(label) {
                majority[t] = Some(label);
            }
        }
    }
    let mut correct = 0usize;
    for (i, a) in sep.assignment.iter().enumerate() {
        if let Assignment::Complete(t) = a {
            if let Some(l) = majority[*t] {
                correct += same(i, l) as usize;
            }
        }
    }
    let true_sources = labels.iter().collect::<std::collections::BTreeSet<_>>().len();
    let total = labels.len().max(1);
    AssociationReport {
        accuracy: correct as f64 / total as f64,
        recovered: sep.functions.len(),
        true_sources,
        misassigned_samples: labels.len() - correct,
    }
}

/// A recovered function standing for several coincident spatial sources.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub representative: usize,
    pub member: usize,
    /// `a_member − a_representative`, i.e. the emission time offset.
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deduped {
    pub functions: Vec<ArrivalFunction>,
    pub merges: Vec<Merge>,
}

/// Merges functions whose difference is constant to within `const_tol`
/// (same spatial point, different emission times).
pub fn dedupe_spatial(functions: &[ArrivalFunction], const_tol: f64) -> Deduped {
    let n = functions.len();
    let osc = |a: &ArrivalFunction, b: &ArrivalFunction| {
        let (lo, hi) = a
            .values
            .iter()
            .zip(&b.values)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, y)| {
                let d = x - y;
                (lo.min(d), hi.max(d))
            });
        (hi - lo, 0.5 * (hi + lo))
    };
    let mut rep_of: Vec<Option<usize>> = vec![None; n];
    let mut merges = Vec::new();
    for i in 0..n {
        if rep_of[i].is_some() {
            continue;
        }
        for j in (i + 1)..n {
            if rep_of[j].is_some() {
                continue;
            }
            let (o, mid) = osc(&functions[j], &functions[i]);
            if o < const_tol {
                rep_of[j] = Some(i);
                merges.push(Merge {
                    representative: functions[i].tag,
                    member: functions[j].tag,
                    offset: mid,
                });
            }
        }
    }
    Deduped {
        functions: functions
            .iter()
            .zip(&rep_of)
            .filter(|(_, r)| r.is_none())
            .map(|(f, _)| f.clone())
            .collect(),
        merges,
    }
}

/// Separation margin at every place where the tracker could swap two
/// ground-truth graphs: the extra cost of the swapped continuation and the
/// tolerance the tracker would apply there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JetSeparation {
    pub node: usize,
    pub pair: (usize, usize),
    pub gap: f64,
    pub tolerance: f64,
}

pub fn jet_separations(functions: &[Vec<f64>], spacing: f64, params: &SeparateParams) -> Vec<JetSeparation> {
    if functions.is_empty() {
        return Vec::new();
    }
    let n = functions[0].len();
    let width = spacing * (1.0 + 1e-9) + 2.0 * params.noise_allowance + 1e-12;
    let per_node = par::map_range(n, |i| {
        let at = |f: &Vec<f64>, back: usize| f[(i + n - back) % n];
        let pred: Vec<f64> = functions.iter().map(|f| 3.0 * at(f, 1) - 3.0 * at(f, 2) + at(f, 3)).collect();
        let mut order: Vec<usize> = (0..functions.len()).collect();
        order.sort_by(|&a, &b| functions[a][i].total_cmp(&functions[b][i]));
        let floor = 64.0 * f64::EPSILON * functions.iter().fold(1.0f64, |m, f| m.max(f[i].abs()));
        let mut out = Vec::new();
        for x in 0..order.len() {
            for y in (x + 1)..order.len() {
                let (a, b) = (order[x], order[y]);
                if functions[b][i] - functions[a][i] > 2.0 * width {
                    break;
                }
                let (va, vb) = (functions[a][i], functions[b][i]);
                let (la, lb) = (at(&functions[a], 1), at(&functions[b], 1));
                if (vb - la).abs() > width || (va - lb).abs() > width {
                    continue;
                }
                let ca = (va - pred[a]).abs();
                let cb = (vb - pred[b]).abs();
                let gap = (vb - pred[a]).abs() + (va - pred[b]).abs() - ca - cb;
                let rms = (0.5 * (ca * ca + cb * cb)).sqrt();
                let tolerance = params.jet_tol.unwrap_or(params.jet_tol_factor * rms.max(floor));
                out.push(JetSeparation { node: i, pair: (a, b), gap, tolerance });
            }
        }
        out
    });
    per_node.into_iter().flatten().collect()
}
