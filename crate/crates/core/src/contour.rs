//! Marching squares on cell-center samples.
//!
//! Contours are traced with the region above the level on their left, so every
//! crossing point is the end of exactly one segment and the start of exactly
//! one other; linking them yields closed, non-self-intersecting loops. The grid
//! is padded with one ring of below-level samples so that loops never leave it.
//! Saddle cells are resolved by the mean of the four corners.

use std::collections::HashMap;

use crate::fields::ScalarField;

/// Closed polyline; the closing edge from the last point back to the first is
/// implicit.
pub type Polyline = Vec<[f64; 2]>;

/// Crossings are keyed by the grid edge they lie on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    /// between padded samples (i, j) and (i + 1, j)
    H(isize, isize),
    /// between padded samples (i, j) and (i, j + 1)
    V(isize, isize),
}

struct Padded<'a> {
    f: &'a ScalarField,
    pad: f64,
}

impl Padded<'_> {
    #[inline]
    fn at(&self, i: isize, j: isize) -> f64 {
        if i < 0 || j < 0 || i >= self.f.nx() as isize || j >= self.f.ny() as isize {
            self.pad
        } else {
            self.f.get(i as usize, j as usize)
        }
    }

    #[inline]
    fn pos(&self, i: isize, j: isize) -> [f64; 2] {
        let o = self.f.origin();
        let h = self.f.spacing();
        [o[0] + i as f64 * h, o[1] + j as f64 * h]
    }

    fn crossing(&self, e: EdgeKey, level: f64) -> [f64; 2] {
        let (a, b) = match e {
            EdgeKey::H(i, j) => ((i, j), (i + 1, j)),
            EdgeKey::V(i, j) => ((i, j), (i, j + 1)),
        };
        let (va, vb) = (self.at(a.0, a.1), self.at(b.0, b.1));
        let t = ((level - va) / (vb - va)).clamp(0.0, 1.0);
        let (pa, pb) = (self.pos(a.0, a.1), self.pos(b.0, b.1));
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    }
}

/// Closed iso-contours of `f` at `level`; samples strictly above `level` are
/// inside.
pub fn marching_squares(f: &ScalarField, level: f64) -> Vec<Polyline> {
    let spread = (f.max() - level).abs().max((level - f.min()).abs()).max(1e-12);
    let grid = Padded { f, pad: level - spread };
    let inside = |i: isize, j: isize| grid.at(i, j) > level;

    // start edge -> end edge of the segment leaving it
    let mut next: HashMap<EdgeKey, EdgeKey> = HashMap::new();
    let mut order: Vec<EdgeKey> = Vec::new();

    let (nx, ny) = (f.nx() as isize, f.ny() as isize);
    for j in -1..ny {
        for i in -1..nx {
            // corners counter-clockwise: a=(i,j) b=(i+1,j) c=(i+1,j+1) d=(i,j+1)
            let ins = [inside(i, j), inside(i + 1, j), inside(i + 1, j + 1), inside(i, j + 1)];
            let n_in = ins.iter().filter(|&&b| b).count();
            if n_in == 0 || n_in == 4 {
                continue;
            }
            // edges walked counter-clockwise: bottom a->b, right b->c, top c->d, left d->a
            let edges = [EdgeKey::H(i, j), EdgeKey::V(i + 1, j), EdgeKey::H(i, j + 1), EdgeKey::V(i, j)];
            let mut leaving = Vec::with_capacity(2); // inside -> outside along the walk
            let mut entering = Vec::with_capacity(2);
            for k in 0..4 {
                let (s, t) = (ins[k], ins[(k + 1) % 4]);
                if s && !t {
                    leaving.push(k);
                } else if !s && t {
                    entering.push(k);
                }
            }
            let pairs: Vec<(usize, usize)> = if leaving.len() == 1 {
                vec![(leaving[0], entering[0])]
            } else {
                let center =
                    0.25 * (grid.at(i, j) + grid.at(i + 1, j) + grid.at(i + 1, j + 1) + grid.at(i, j + 1));
                let joined = center > level;
                leaving
                    .iter()
                    .map(|&l| {
                        // the walk alternates, so the other entering edge is two steps away
                        let fwd = (l + 1) % 4;
                        let back = (l + 3) % 4;
                        let e = if joined { fwd } else { back };
                        debug_assert!(entering.contains(&e));
                        (l, e)
                    })
                    .collect()
            };
            for (l, e) in pairs {
                next.insert(edges[l], edges[e]);
                order.push(edges[l]);
            }
        }
    }

    let mut loops = Vec::new();
    let mut seen: HashMap<EdgeKey, bool> = HashMap::with_capacity(next.len());
    for start in order {
        if seen.contains_key(&start) {
            continue;
        }
        let mut poly = Vec::new();
        let mut cur = start;
        loop {
            seen.insert(cur, true);
            poly.push(grid.crossing(cur, level));
            cur = match next.get(&cur) {
                Some(&n) => n,
                None => break,
            };
            if cur == start {
                break;
            }
        }
        if poly.len() >= 2 {
            loops.push(poly);
        }
    }
    loops
}

/// Length of a closed polyline.
pub fn closed_length(p: &[[f64; 2]]) -> f64 {
    if p.len() < 2 {
        return 0.0;
    }
    let mut l = 0.0;
    for k in 0..p.len() {
        let a = p[k];
        let b = p[(k + 1) % p.len()];
        l += (b[0] - a[0]).hypot(b[1] - a[1]);
    }
    l
}

/// Signed area (positive for counter-clockwise loops).
pub fn signed_area(p: &[[f64; 2]]) -> f64 {
    let mut a = 0.0;
    for k in 0..p.len() {
        let u = p[k];
        let v = p[(k + 1) % p.len()];
        a += u[0] * v[1] - v[0] * u[1];
    }
    0.5 * a
}

/// Straightens a contour traced on a {0,1} bitmap.
///
/// Raw marching squares on a bitmap produces a staircase of axis steps and
/// half-diagonal chamfers. Chamfers joining two perpendicular axis runs of at
/// least `CORNER_RUN` steps are real corners: they are replaced by the
/// intersection of the two runs and pinned. Every other vertex is then
/// relaxed by a few passes of `(p[k-1] + 2 p[k] + p[k+1]) / 4`, which leaves
/// straight runs in place and pulls staircases onto the underlying curve.
pub fn straighten_bitmap_contour(p: &[[f64; 2]], h: f64) -> Polyline {
    const CORNER_RUN: usize = 2;
    const PASSES: usize = 2;
    let n = p.len();
    if n < 8 {
        return p.to_vec();
    }
    let tol = 1e-6 * h;
    // direction class of segment k (p[k] -> p[k+1]): 0 = horizontal, 1 = vertical, 2 = other
    let class = |k: usize| {
        let a = p[k % n];
        let b = p[(k + 1) % n];
        if (a[1] - b[1]).abs() < tol {
            0
        } else if (a[0] - b[0]).abs() < tol {
            1
        } else {
            2
        }
    };
    let classes: Vec<u8> = (0..n).map(class).collect();
    let run_len = |k: usize, step: isize, c: u8| {
        let mut len = 0;
        let mut idx = k as isize;
        while len < n && classes[idx.rem_euclid(n as isize) as usize] == c {
            len += 1;
            idx += step;
        }
        len
    };

    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(n);
    let mut pinned: Vec<bool> = Vec::with_capacity(n);
    let mut skip_next_vertex = vec![false; n];
    let mut corner_at: Vec<Option<[f64; 2]>> = vec![None; n];
    for k in 0..n {
        if classes[k] != 2 {
            continue;
        }
        let before = classes[(k + n - 1) % n];
        let after = classes[(k + 1) % n];
        if before == 2 || after == 2 || before == after {
            continue;
        }
        if run_len((k + n - 1) % n, -1, before) < CORNER_RUN || run_len((k + 1) % n, 1, after) < CORNER_RUN {
            continue;
        }
        // segment k runs p[k] -> p[k+1]; the preceding run lies on a line through p[k]
        let a = p[k];
        let b = p[(k + 1) % n];
        let corner = if before == 0 { [b[0], a[1]] } else { [a[0], b[1]] };
        corner_at[k] = Some(corner);
        skip_next_vertex[(k + 1) % n] = true;
    }
    for k in 0..n {
        if skip_next_vertex[k] {
            continue;
        }
        if let Some(c) = corner_at[k] {
            pts.push(c);
            pinned.push(true);
        } else {
            pts.push(p[k]);
            pinned.push(false);
        }
    }
    let m = pts.len();
    for _ in 0..PASSES {
        let prev = pts.clone();
        for k in 0..m {
            if pinned[k] {
                continue;
            }
            let a = prev[(k + m - 1) % m];
            let b = prev[k];
            let c = prev[(k + 1) % m];
            pts[k] = [0.25 * (a[0] + 2.0 * b[0] + c[0]), 0.25 * (a[1] + 2.0 * b[1] + c[1])];
        }
    }
    pts
}
