//! Sampled fields on the meridian half-disk, CSV export and zero-level contours.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::format::sig17;

/// A field on the tensor grid `s_grid × r_grid`; `values[i][j]` sits at `(s_grid[i], r_grid[j])`
/// and is meaningful only where `mask[i][j]` is true.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub s_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub mask: Vec<Vec<bool>>,
}

impl Field2D {
    /// Samples `f` at every node with `s² + r² < 1` for which `keep` holds.
    pub fn sample(
        s_grid: Vec<f64>,
        r_grid: Vec<f64>,
        keep: impl Fn(f64, f64) -> bool + Sync,
        f: impl Fn(f64, f64) -> f64 + Sync,
    ) -> Self {
        use rayon::prelude::*;
        let rows: Vec<(Vec<f64>, Vec<bool>)> = s_grid
            .par_iter()
            .map(|&s| {
                let mut vals = Vec::with_capacity(r_grid.len());
                let mut mask = Vec::with_capacity(r_grid.len());
                for &r in &r_grid {
                    let inside = s * s + r * r < 1.0 && keep(s, r);
                    mask.push(inside);
                    vals.push(if inside { f(s, r) } else { f64::NAN });
                }
                (vals, mask)
            })
            .collect();
        let (values, mask) = rows.into_iter().unzip();
        Field2D {
            s_grid,
            r_grid,
            values,
            mask,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.s_grid.len(), self.r_grid.len())
    }

    /// Iterates `(s, r, value)` over unmasked nodes, row by row.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.s_grid.iter().enumerate().flat_map(move |(i, &s)| {
            self.r_grid
                .iter()
                .enumerate()
                .filter(move |&(j, _)| self.mask[i][j])
                .map(move |(j, &r)| (s, r, self.values[i][j]))
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for row in &mut out.values {
            for v in row.iter_mut() {
                *v *= factor;
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "s,r,value")?;
        for (s, r, v) in self.nodes() {
            writeln!(w, "{},{},{}", sig17(s), sig17(r), sig17(v))?;
        }
        Ok(())
    }

    /// Polylines of the level set `value = level`, by marching squares over cells whose four
    /// corners are all unmasked.
    pub fn contours(&self, level: f64) -> Vec<Vec<[f64; 2]>> {
        let segments = self.level_segments(level);
        join_segments(segments)
    }

    fn level_segments(&self, level: f64) -> Vec<(EdgeKey, EdgeKey, [f64; 2], [f64; 2])> {
        let (ns, nr) = self.shape();
        let mut segs = Vec::new();
        for i in 0..ns.saturating_sub(1) {
            for j in 0..nr.saturating_sub(1) {
                let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
                if corners.iter().any(|&(a, b)| !self.mask[a][b]) {
                    continue;
                }
                let v: Vec<f64> = corners
                    .iter()
                    .map(|&(a, b)| self.values[a][b] - level)
                    .collect();
                // Edges in cyclic order: bottom (0-1), right (1-2), top (2-3), left (3-0).
                let mut crossings: Vec<(EdgeKey, [f64; 2])> = Vec::with_capacity(4);
                for e in 0..4 {
                    let (p, q) = (e, (e + 1) % 4);
                    if (v[p] < 0.0) != (v[q] < 0.0) {
                        let t = v[p] / (v[p] - v[q]);
                        let (pa, pb) = corners[p];
                        let (qa, qb) = corners[q];
                        let s = self.s_grid[pa] + t * (self.s_grid[qa] - self.s_grid[pa]);
                        let r = self.r_grid[pb] + t * (self.r_grid[qb] - self.r_grid[pb]);
                        let key = EdgeKey::new(corners[p], corners[q]);
                        crossings.push((key, [s, r]));
                    }
                }
                match crossings.len() {
                    2 => segs.push((
                        crossings[0].0,
                        crossings[1].0,
                        crossings[0].1,
                        crossings[1].1,
                    )),
                    4 => {
                        // Saddle cell: resolve with the cell average.
                        let centre = v.iter().sum::<f64>() / 4.0;
                        let (a, b) = if (centre < 0.0) == (v[0] < 0.0) {
                            (1, 3)
                        } else {
                            (0, 2)
                        };
                        // Crossing k lies on edge k; corner c sits between edges c-1 and c.
                        let pair = |k: usize| (crossings[k], crossings[(k + 3) % 4]);
                        for k in [a, b] {
                            let (x, y) = pair(k);
                            segs.push((x.0, y.0, x.1, y.1));
                        }
                    }
                    _ => {}
                }
            }
        }
        segs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct EdgeKey((usize, usize), (usize, usize));

impl EdgeKey {
    fn new(a: (usize, usize), b: (usize, usize)) -> Self {
        if a <= b {
            EdgeKey(a, b)
        } else {
            EdgeKey(b, a)
        }
    }
}

fn join_segments(segs: Vec<(EdgeKey, EdgeKey, [f64; 2], [f64; 2])>) -> Vec<Vec<[f64; 2]>> {
    let mut at: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (k, s) in segs.iter().enumerate() {
        at.entry(s.0).or_default().push(k);
        at.entry(s.1).or_default().push(k);
    }
    let mut used = vec![false; segs.len()];
    let mut lines = Vec::new();
    let next_from = |key: EdgeKey, used: &Vec<bool>| {
        at.get(&key)
            .and_then(|v| v.iter().copied().find(|&k| !used[k]))
    };

    // Start from open ends first so each open polyline is emitted whole.
    let mut order: Vec<usize> = (0..segs.len())
        .filter(|&k| at[&segs[k].0].len() == 1 || at[&segs[k].1].len() == 1)
        .collect();
    order.extend(0..segs.len());
    for start in order {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b, pa, pb) = segs[start];
        let (mut head, mut line) = if at[&a].len() == 1 {
            (b, vec![pa, pb])
        } else {
            (a, vec![pb, pa])
        };
        while let Some(k) = next_from(head, &used) {
            used[k] = true;
            let (x, y, px, py) = segs[k];
            if x == head {
                line.push(py);
                head = y;
            } else {
                line.push(px);
                head = x;
            }
        }
        lines.push(line);
    }
    lines
}

/// JSON array of polylines, each a list of `[s, r]` pairs.
pub fn contours_to_json(lines: &[Vec<[f64; 2]>]) -> String {
    let mut out = String::from("[");
    for (k, line) in lines.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str("\n  [");
        for (m, p) in line.iter().enumerate() {
            if m > 0 {
                out.push(',');
            }
            out.push_str(&format!("[{},{}]", sig17(p[0]), sig17(p[1])));
        }
        out.push(']');
    }
    out.push_str("\n]\n");
    out
}

/// `n` equally spaced points on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}
