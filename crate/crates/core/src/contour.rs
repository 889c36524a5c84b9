//! Zero sets of scalar fields on regular lattices: marching squares in 2D,
//! sign-change edges in any dimension, and a sub-grid probe for pockets
//! smaller than the lattice spacing.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::optimize::{nelder_mead, NelderMeadOptions};

/// Regular lattice with `counts[k]` nodes along axis `k`, endpoints included.
/// Axis 0 varies fastest in the flat node index.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Lattice {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>) -> Lattice {
        assert!(lower.len() == upper.len() && lower.len() == counts.len());
        assert!(counts.iter().all(|&c| c >= 2), "lattice needs at least 2 nodes per axis");
        Lattice { lower, upper, counts }
    }

    pub fn uniform(lower: Vec<f64>, upper: Vec<f64>, per_axis: usize) -> Lattice {
        let n = lower.len();
        Lattice::new(lower, upper, vec![per_axis; n])
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, k: usize) -> f64 {
        (self.upper[k] - self.lower[k]) / (self.counts[k] - 1) as f64
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim());
        for &c in &self.counts {
            out.push(idx % c);
            idx /= c;
        }
        out
    }

    pub fn flat_index(&self, mi: &[usize]) -> usize {
        let mut idx = 0;
        for k in (0..self.dim()).rev() {
            idx = idx * self.counts[k] + mi[k];
        }
        idx
    }

    pub fn coord(&self, k: usize, i: usize) -> f64 {
        if i + 1 == self.counts[k] {
            self.upper[k]
        } else {
            self.lower[k] + i as f64 * self.spacing(k)
        }
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.coord(k, i))
            .collect()
    }

    /// Field values at every node; failures become NaN.
    pub fn evaluate<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> Option<f64> + Sync,
    {
        (0..self.len())
            .into_par_iter()
            .map(|i| f(&self.node(i)).unwrap_or(f64::NAN))
            .collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .enumerate()
            .all(|(k, &x)| self.lower[k] <= x && x <= self.upper[k])
    }
}

fn positive(v: f64) -> bool {
    v > 0.0
}

/// Root of `f` on the segment `a → b`, where `fa` and `fb` have opposite
/// signs. Falls back to linear interpolation if `f` fails inside.
pub fn bisect_segment<F>(f: &F, a: &[f64], b: &[f64], fa: f64, fb: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let lerp = |s: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect() };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let pa = positive(fa);
    if fa == 0.0 {
        return a.to_vec();
    }
    if fb == 0.0 {
        return b.to_vec();
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match f(&lerp(mid)) {
            Some(v) if v == 0.0 => return lerp(mid),
            Some(v) if v.is_finite() => {
                if positive(v) == pa {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            _ => return lerp(fa / (fa - fb)),
        }
    }
    lerp(0.5 * (lo + hi))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

/// Marching squares for `f = 0` on a 2D lattice, with the crossing on each
/// sign-change edge refined by bisection. Saddle cells are resolved by the
/// mean of the four corner values.
pub fn marching_squares<F>(lat: &Lattice, values: &[f64], f: &F) -> Vec<Polyline>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    assert_eq!(lat.dim(), 2);
    let (nx, ny) = (lat.counts[0], lat.counts[1]);
    let id = |i: usize, j: usize| j * nx + i;

    // Sign-change edges, each keyed by its (smaller, larger) node pair.
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let a = id(i, j);
            if i + 1 < nx {
                edges.push((a, id(i + 1, j)));
            }
            if j + 1 < ny {
                edges.push((a, id(i, j + 1)));
            }
        }
    }
    let crossing = |&(a, b): &(usize, usize)| {
        let (va, vb) = (values[a], values[b]);
        va.is_finite() && vb.is_finite() && positive(va) != positive(vb)
    };
    let edges: Vec<(usize, usize)> = edges.into_iter().filter(|e| crossing(e)).collect();
    let points: Vec<[f64; 2]> = edges
        .par_iter()
        .map(|&(a, b)| {
            let p = bisect_segment(f, &lat.node(a), &lat.node(b), values[a], values[b]);
            [p[0], p[1]]
        })
        .collect();
    let point_of: HashMap<(usize, usize), usize> = edges.iter().enumerate().map(|(k, e)| (*e, k)).collect();

    let mut segments: Vec<(usize, usize)> = Vec::new();
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let c = [id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)];
            let v: Vec<f64> = c.iter().map(|&k| values[k]).collect();
            if v.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let cell_edges = [(c[0], c[1]), (c[1], c[2]), (c[3], c[2]), (c[0], c[3])];
            let hit: Vec<Option<usize>> = cell_edges.iter().map(|e| point_of.get(e).copied()).collect();
            let found: Vec<usize> = hit.iter().flatten().copied().collect();
            match found.len() {
                2 => segments.push((found[0], found[1])),
                4 => {
                    let centre = 0.25 * v.iter().sum::<f64>();
                    let p = |k: usize| hit[k].unwrap();
                    if positive(centre) == positive(v[0]) {
                        segments.push((p(0), p(1)));
                        segments.push((p(2), p(3)));
                    } else {
                        segments.push((p(3), p(0)));
                        segments.push((p(1), p(2)));
                    }
                }
                _ => {}
            }
        }
    }
    assemble(&points, &segments)
}

fn assemble(points: &[[f64; 2]], segments: &[(usize, usize)]) -> Vec<Polyline> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); points.len()];
    for &(a, b) in segments {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut used = vec![false; points.len()];
    let mut out = Vec::new();
    let walk = |start: usize, used: &mut Vec<bool>| -> Polyline {
        let mut chain = vec![start];
        used[start] = true;
        let mut cur = start;
        loop {
            let next = adj[cur].iter().copied().find(|&q| !used[q]);
            match next {
                Some(q) => {
                    used[q] = true;
                    chain.push(q);
                    cur = q;
                }
                None => break,
            }
        }
        let closed = chain.len() > 2 && adj[cur].contains(&start);
        Polyline {
            points: chain.iter().map(|&k| points[k]).collect(),
            closed,
        }
    };
    for s in 0..points.len() {
        if !used[s] && adj[s].len() == 1 {
            out.push(walk(s, &mut used));
        }
    }
    for s in 0..points.len() {
        if !used[s] && !adj[s].is_empty() {
            out.push(walk(s, &mut used));
        }
    }
    out
}

/// Lattice edges (along every axis) whose endpoint values differ in sign,
/// refined to points on `f = 0`. Also returns the flat indices of cells
/// (identified by their lowest corner) that contain a sign change.
pub fn sign_change_points<F>(lat: &Lattice, values: &[f64], f: &F) -> (Vec<Vec<f64>>, Vec<usize>)
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let d = lat.dim();
    let mut edges = Vec::new();
    for idx in 0..lat.len() {
        let mi = lat.multi_index(idx);
        for k in 0..d {
            if mi[k] + 1 < lat.counts[k] {
                let mut nb = mi.clone();
                nb[k] += 1;
                let j = lat.flat_index(&nb);
                let (va, vb) = (values[idx], values[j]);
                if va.is_finite() && vb.is_finite() && positive(va) != positive(vb) {
                    edges.push((idx, j));
                }
            }
        }
    }
    let points: Vec<Vec<f64>> = edges
        .par_iter()
        .map(|&(a, b)| bisect_segment(f, &lat.node(a), &lat.node(b), values[a], values[b]))
        .collect();

    let mut cells = Vec::new();
    for idx in 0..lat.len() {
        let mi = lat.multi_index(idx);
        if (0..d).any(|k| mi[k] + 1 >= lat.counts[k]) {
            continue;
        }
        let mut any_pos = false;
        let mut any_neg = false;
        for corner in 0..(1usize << d) {
            let mut c = mi.clone();
            for (k, ck) in c.iter_mut().enumerate() {
                *ck += (corner >> k) & 1;
            }
            let v = values[lat.flat_index(&c)];
            if !v.is_finite() {
                any_pos = false;
                any_neg = false;
                break;
            }
            if positive(v) {
                any_pos = true;
            } else {
                any_neg = true;
            }
        }
        if any_pos && any_neg {
            cells.push(idx);
        }
    }
    (points, cells)
}

/// True if the finite node values take both signs.
pub fn has_sign_change(values: &[f64]) -> bool {
    let mut pos = false;
    let mut neg = false;
    for &v in values.iter().filter(|v| v.is_finite()) {
        if positive(v) {
            pos = true;
        } else {
            neg = true;
        }
        if pos && neg {
            return true;
        }
    }
    false
}

/// Look for a point where `f` takes the sign opposite to the (uniform) sign
/// of the lattice values, by local minimisation of `s·f` from the lowest
/// discrete local minima of `s·values`. Catches pockets that fit between
/// lattice nodes.
pub fn probe_sign_flip<F>(lat: &Lattice, values: &[f64], f: &F, max_seeds: usize) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let first = values.iter().copied().find(|v| v.is_finite())?;
    let s = if positive(first) { 1.0 } else { -1.0 };
    let d = lat.dim();
    let mut minima: Vec<(f64, usize)> = (0..lat.len())
        .into_par_iter()
        .filter_map(|idx| {
            let v = s * values[idx];
            if !v.is_finite() {
                return None;
            }
            let mi = lat.multi_index(idx);
            for k in 0..d {
                for delta in [-1i64, 1] {
                    let j = mi[k] as i64 + delta;
                    if j < 0 || j >= lat.counts[k] as i64 {
                        continue;
                    }
                    let mut nb = mi.clone();
                    nb[k] = j as usize;
                    let w = s * values[lat.flat_index(&nb)];
                    if w.is_finite() && w < v {
                        return None;
                    }
                }
            }
            Some((v, idx))
        })
        .collect();
    minima.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    minima.truncate(max_seeds);

    let g = |x: &[f64]| -> f64 {
        if !lat.contains(x) {
            return f64::INFINITY;
        }
        match f(x) {
            Some(v) if v.is_finite() => s * v,
            _ => f64::INFINITY,
        }
    };
    let step: Vec<f64> = (0..d).map(|k| lat.spacing(k)).collect();
    let opts = NelderMeadOptions {
        max_evals: 600 * d,
        xatol: 1e-12 * step.iter().fold(1.0, |a: f64, b| a.max(*b)),
        fatol: 0.0,
        restarts: 1,
    };
    let hits: Vec<Option<Vec<f64>>> = minima
        .par_iter()
        .map(|&(_, idx)| {
            let m = nelder_mead(g, &lat.node(idx), &step, &opts);
            (m.f < 0.0).then_some(m.x)
        })
        .collect();
    hits.into_iter().flatten().next()
}

/// Outcome of [`locate`].
#[derive(Clone, Debug)]
pub enum Located {
    /// A lattice (the original or a zoomed patch) whose values change sign.
    SignChange { lattice: Lattice, values: Vec<f64>, zoom_level: usize },
    /// A sub-grid point of opposite sign that repeated zooming could not
    /// resolve into a sign-change cell.
    PointOnly(Vec<f64>),
    /// No sign change found; `values` are the original lattice values.
    Uniform { values: Vec<f64> },
}

/// Find where `f` changes sign: on the lattice itself, or else in a pocket
/// located by [`probe_sign_flip`] and resolved on successively finer patches.
pub fn locate<F>(lat: &Lattice, f: &F) -> Located
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let values = lat.evaluate(f);
    locate_from(lat, values, f)
}

pub fn locate_from<F>(lat: &Lattice, values: Vec<f64>, f: &F) -> Located
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    if has_sign_change(&values) {
        return Located::SignChange {
            lattice: lat.clone(),
            values,
            zoom_level: 0,
        };
    }
    let mut active = lat.clone();
    let mut current = values.clone();
    for level in 1..=4 {
        let Some(hit) = probe_sign_flip(&active, &current, f, 16) else {
            return Located::Uniform { values };
        };
        let half: Vec<f64> = (0..active.dim()).map(|k| 3.0 * active.spacing(k)).collect();
        let lower = hit.iter().zip(&half).map(|(c, h)| c - h).collect();
        let upper = hit.iter().zip(&half).map(|(c, h)| c + h).collect();
        active = Lattice::uniform(lower, upper, if active.dim() == 2 { 61 } else { 21 });
        current = active.evaluate(f);
        if has_sign_change(&current) {
            return Located::SignChange {
                lattice: active,
                values: current,
                zoom_level: level,
            };
        }
        if level == 4 {
            return Located::PointOnly(hit);
        }
    }
    unreachable!()
}

/// Even-odd rule.
pub fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_contour_is_closed_and_accurate() {
        let lat = Lattice::uniform(vec![-2.0, -2.0], vec![2.0, 2.0], 41);
        let f = |p: &[f64]| Some(p[0] * p[0] + p[1] * p[1] - 1.0);
        let vals = lat.evaluate(f);
        let lines = marching_squares(&lat, &vals, &f);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        for p in &lines[0].points {
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
        }
        assert!(point_in_polygon([0.0, 0.0], &lines[0].points));
        assert!(!point_in_polygon([1.5, 0.0], &lines[0].points));
    }

    #[test]
    fn open_line_across_lattice() {
        let lat = Lattice::uniform(vec![-1.0, -1.0], vec![1.0, 1.0], 11);
        let f = |p: &[f64]| Some(2.0 * p[0] + 0.3);
        let vals = lat.evaluate(f);
        let lines = marching_squares(&lat, &vals, &f);
        assert_eq!(lines.len(), 1);
        assert!(!lines[0].closed);
        assert_eq!(lines[0].points.len(), 11);
    }

    #[test]
    fn probe_finds_subgrid_pocket() {
        let lat = Lattice::uniform(vec![-1.0, -1.0], vec![1.0, 1.0], 11);
        let f = |p: &[f64]| Some((p[0] - 0.05).powi(2) + (p[1] - 0.05).powi(2) - 1e-4);
        let vals = lat.evaluate(f);
        assert!(!has_sign_change(&vals));
        let hit = probe_sign_flip(&lat, &vals, &f, 8).unwrap();
        assert!(f(&hit).unwrap() < 0.0);
        let g = |p: &[f64]| Some(p[0] * p[0] + p[1] * p[1] + 1e-3);
        let vals = lat.evaluate(g);
        assert!(probe_sign_flip(&lat, &vals, &g, 8).is_none());
    }

    #[test]
    fn sign_cells_in_3d() {
        let lat = Lattice::uniform(vec![-1.0; 3], vec![1.0; 3], 5);
        let f = |p: &[f64]| Some(p[0] + p[1] + p[2] - 0.1);
        let vals = lat.evaluate(f);
        let (pts, cells) = sign_change_points(&lat, &vals, &f);
        assert!(!pts.is_empty() && !cells.is_empty());
        for p in pts {
            assert!(f(&p).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn index_round_trip() {
        let lat = Lattice::new(vec![0.0; 3], vec![1.0; 3], vec![3, 4, 5]);
        for i in 0..lat.len() {
            assert_eq!(lat.flat_index(&lat.multi_index(i)), i);
        }
        assert_eq!(lat.node(lat.len() - 1), vec![1.0, 1.0, 1.0]);
    }
}
