use serde::{Deserialize, Serialize};

use crate::convex_core::linalg::Matrix;
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64_vec, to_vec, Scalar};

/// Serializable description of a compact convex domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// `{ x : normals[i] · x <= offsets[i] }`
    Polytope { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
}

impl DomainSpec {
    pub fn unit_box(n: usize) -> Self {
        DomainSpec::Box { lower: vec![0.0; n], upper: vec![1.0; n] }
    }
}

/// Compact convex set with non-empty interior.
#[derive(Clone, Debug)]
pub enum Domain<T> {
    Box { lower: Vec<T>, upper: Vec<T> },
    Ball { center: Vec<T>, radius: T },
    Polytope { normals: Vec<Vec<T>>, offsets: Vec<T>, vertices: Vec<Vec<T>>, lower: Vec<T>, upper: Vec<T> },
}

impl<T: Scalar> Domain<T> {
    pub fn new_box(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidArgument("box corners must have equal, positive length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidArgument("box must have non-empty interior".into()));
        }
        Ok(Domain::Box { lower, upper })
    }

    pub fn unit_box(n: usize) -> Self {
        Domain::Box { lower: vec![T::zero(); n], upper: vec![T::one(); n] }
    }

    pub fn interval(a: T, b: T) -> Result<Self> {
        Self::new_box(vec![a], vec![b])
    }

    pub fn new_ball(center: Vec<T>, radius: T) -> Result<Self> {
        if center.is_empty() || !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::InvalidArgument("ball needs a centre and a positive radius".into()));
        }
        Ok(Domain::Ball { center, radius })
    }

    pub fn new_polytope(normals: Vec<Vec<T>>, offsets: Vec<T>) -> Result<Self> {
        let n = normals.first().map(Vec::len).unwrap_or(0);
        if n == 0 || normals.len() != offsets.len() || normals.iter().any(|a| a.len() != n) {
            return Err(Error::InvalidArgument("polytope half-spaces are malformed".into()));
        }
        if n > 3 {
            return Err(Error::InvalidArgument("polytope domains are supported up to dimension 3".into()));
        }
        let vertices = enumerate_vertices(&normals, &offsets);
        if vertices.len() <= n {
            return Err(Error::InvalidArgument("polytope is empty or has no interior".into()));
        }
        if !positively_spanning(&normals) {
            return Err(Error::InvalidArgument("polytope is unbounded".into()));
        }
        let mut lower = vertices[0].clone();
        let mut upper = vertices[0].clone();
        for v in &vertices {
            for k in 0..n {
                lower[k] = lower[k].min(v[k]);
                upper[k] = upper[k].max(v[k]);
            }
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidArgument("polytope has empty interior".into()));
        }
        Ok(Domain::Polytope { normals, offsets, vertices, lower, upper })
    }

    pub fn from_spec(spec: &DomainSpec) -> Result<Self> {
        match spec {
            DomainSpec::Box { lower, upper } => Self::new_box(to_vec(lower), to_vec(upper)),
            DomainSpec::Ball { center, radius } => Self::new_ball(to_vec(center), lit(*radius)),
            DomainSpec::Polytope { normals, offsets } => {
                Self::new_polytope(normals.iter().map(|a| to_vec(a)).collect(), to_vec(offsets))
            }
        }
    }

    pub fn to_spec(&self) -> DomainSpec {
        match self {
            Domain::Box { lower, upper } => DomainSpec::Box { lower: to_f64_vec(lower), upper: to_f64_vec(upper) },
            Domain::Ball { center, radius } => {
                DomainSpec::Ball { center: to_f64_vec(center), radius: radius.to_f64().unwrap_or(f64::NAN) }
            }
            Domain::Polytope { normals, offsets, .. } => DomainSpec::Polytope {
                normals: normals.iter().map(|a| to_f64_vec(a)).collect(),
                offsets: to_f64_vec(offsets),
            },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lower, .. } => lower.len(),
            Domain::Ball { center, .. } => center.len(),
            Domain::Polytope { lower, .. } => lower.len(),
        }
    }

    pub fn is_box(&self) -> bool {
        matches!(self, Domain::Box { .. })
    }

    /// Closed-set membership with a relative slack of a few ulps.
    pub fn contains(&self, x: &[T]) -> bool {
        let eps = lit::<T>(1e-12);
        match self {
            Domain::Box { lower, upper } => x.iter().zip(lower.iter().zip(upper)).all(|(&xi, (&l, &u))| {
                let slack = eps * (u - l);
                xi >= l - slack && xi <= u + slack
            }),
            Domain::Ball { center, radius } => {
                let d2 = x.iter().zip(center).fold(T::zero(), |acc, (&a, &c)| acc + (a - c) * (a - c));
                d2 <= *radius * *radius * (T::one() + eps)
            }
            Domain::Polytope { normals, offsets, lower, upper, .. } => {
                let scale = lower.iter().zip(upper).fold(T::zero(), |m, (&l, &u)| m.max(u - l));
                normals.iter().zip(offsets).all(|(a, &b)| {
                    let ax = a.iter().zip(x).fold(T::zero(), |acc, (&ai, &xi)| acc + ai * xi);
                    let an = a.iter().fold(T::zero(), |acc, &ai| acc + ai * ai).sqrt();
                    ax <= b + eps * an * scale
                })
            }
        }
    }

    pub fn bounding_box(&self) -> (Vec<T>, Vec<T>) {
        match self {
            Domain::Box { lower, upper } => (lower.clone(), upper.clone()),
            Domain::Ball { center, radius } => (
                center.iter().map(|&c| c - *radius).collect(),
                center.iter().map(|&c| c + *radius).collect(),
            ),
            Domain::Polytope { lower, upper, .. } => (lower.clone(), upper.clone()),
        }
    }

    pub fn bounding_volume(&self) -> T {
        let (lo, hi) = self.bounding_box();
        lo.iter().zip(&hi).fold(T::one(), |acc, (&l, &u)| acc * (u - l))
    }

    pub fn volume(&self) -> T {
        match self {
            Domain::Box { .. } => self.bounding_volume(),
            Domain::Ball { center, radius } => unit_ball_volume::<T>(center.len()) * radius.powi(center.len() as i32),
            Domain::Polytope { vertices, lower, upper, .. } => match lower.len() {
                1 => upper[0] - lower[0],
                2 => polygon_area(&sorted_polygon(vertices)),
                _ => {
                    // Midpoint rule on the bounding box; polytopes are only
                    // approximated in dimension 3.
                    let k = 96usize;
                    let mut inside = 0usize;
                    let mut x = vec![T::zero(); 3];
                    for i in 0..k * k * k {
                        let idx = [i % k, (i / k) % k, i / (k * k)];
                        for d in 0..3 {
                            let t = (from_usize::<T>(idx[d]) + lit(0.5)) / from_usize::<T>(k);
                            x[d] = lower[d] + t * (upper[d] - lower[d]);
                        }
                        if self.contains(&x) {
                            inside += 1;
                        }
                    }
                    self.bounding_volume() * from_usize::<T>(inside) / from_usize::<T>(k * k * k)
                }
            },
        }
    }

    /// A point of the interior: box/ball centre, vertex average for polytopes.
    pub fn centroid(&self) -> Vec<T> {
        match self {
            Domain::Box { lower, upper } => {
                lower.iter().zip(upper).map(|(&l, &u)| (l + u) * lit(0.5)).collect()
            }
            Domain::Ball { center, .. } => center.clone(),
            Domain::Polytope { vertices, lower, .. } => {
                let n = lower.len();
                let k = from_usize::<T>(vertices.len());
                (0..n).map(|d| vertices.iter().fold(T::zero(), |acc, v| acc + v[d]) / k).collect()
            }
        }
    }

    /// Closed polygon approximating the boundary of a planar domain,
    /// counter-clockwise, with roughly `per_edge` points per edge (or
    /// `4 * per_edge` points on a circle).
    pub fn boundary_polygon(&self, per_edge: usize) -> Result<Vec<[T; 2]>> {
        if self.dim() != 2 {
            return Err(Error::InvalidArgument("boundary polygons exist only in dimension 2".into()));
        }
        let per_edge = per_edge.max(1);
        let corners: Vec<[T; 2]> = match self {
            Domain::Box { lower, upper } => vec![
                [lower[0], lower[1]],
                [upper[0], lower[1]],
                [upper[0], upper[1]],
                [lower[0], upper[1]],
            ],
            Domain::Ball { center, radius } => {
                let k = 4 * per_edge;
                return Ok((0..k)
                    .map(|i| {
                        let th = T::TAU() * from_usize::<T>(i) / from_usize::<T>(k);
                        [center[0] + *radius * th.cos(), center[1] + *radius * th.sin()]
                    })
                    .collect());
            }
            Domain::Polytope { vertices, .. } => sorted_polygon(vertices),
        };
        let mut out = Vec::with_capacity(corners.len() * per_edge);
        for i in 0..corners.len() {
            let a = corners[i];
            let b = corners[(i + 1) % corners.len()];
            for s in 0..per_edge {
                let t = from_usize::<T>(s) / from_usize::<T>(per_edge);
                out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        Ok(out)
    }

    /// Preimage of this domain under `x ↦ M x`.
    pub fn preimage(&self, m: &Matrix<T>) -> Result<Self> {
        let n = self.dim();
        if m.dim() != n {
            return Err(Error::InvalidArgument("transform dimension mismatch".into()));
        }
        if m.det() == T::zero() {
            return Err(Error::InvalidArgument("transform must be invertible".into()));
        }
        match self {
            Domain::Box { lower, upper } if m.is_diagonal() => {
                let (mut lo, mut hi) = (vec![T::zero(); n], vec![T::zero(); n]);
                for k in 0..n {
                    let s = m.get(k, k);
                    let (a, b) = (lower[k] / s, upper[k] / s);
                    lo[k] = a.min(b);
                    hi[k] = a.max(b);
                }
                Self::new_box(lo, hi)
            }
            Domain::Box { lower, upper } => {
                let mut normals = Vec::with_capacity(2 * n);
                let mut offsets = Vec::with_capacity(2 * n);
                for k in 0..n {
                    let row: Vec<T> = (0..n).map(|j| m.get(k, j)).collect();
                    normals.push(row.clone());
                    offsets.push(upper[k]);
                    normals.push(row.iter().map(|&v| -v).collect());
                    offsets.push(-lower[k]);
                }
                Self::new_polytope(normals, offsets)
            }
            Domain::Ball { center, radius } => {
                // Only similarity transforms keep balls round.
                let s = m.get(0, 0);
                let is_scalar = m.is_diagonal() && (0..n).all(|k| m.get(k, k) == s);
                if !is_scalar {
                    return Err(Error::InvalidArgument(
                        "ball domains only admit scalar transforms".into(),
                    ));
                }
                Self::new_ball(center.iter().map(|&c| c / s).collect(), *radius / s.abs())
            }
            Domain::Polytope { normals, offsets, .. } => {
                let mut out = Vec::with_capacity(normals.len());
                let mut buf = vec![T::zero(); n];
                for a in normals {
                    m.mul_vec_transposed(a, &mut buf);
                    out.push(buf.clone());
                }
                Self::new_polytope(out, offsets.clone())
            }
        }
    }
}

fn unit_ball_volume<T: Scalar>(n: usize) -> T {
    match n {
        0 => T::one(),
        1 => lit(2.0),
        _ => unit_ball_volume::<T>(n - 2) * T::TAU() / from_usize::<T>(n),
    }
}

fn enumerate_vertices<T: Scalar>(normals: &[Vec<T>], offsets: &[T]) -> Vec<Vec<T>> {
    let n = normals[0].len();
    let k = normals.len();
    let mut out: Vec<Vec<T>> = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    if k < n {
        return out;
    }
    loop {
        let rows: Vec<Vec<T>> = idx.iter().map(|&i| normals[i].clone()).collect();
        if let Ok(m) = Matrix::from_rows(&rows) {
            let rhs: Vec<T> = idx.iter().map(|&i| offsets[i]).collect();
            if m.det().abs() > lit(1e-12) {
                if let Ok(x) = m.solve(&rhs) {
                    let feasible = normals.iter().zip(offsets).all(|(a, &b)| {
                        let ax = a.iter().zip(&x).fold(T::zero(), |acc, (&ai, &xi)| acc + ai * xi);
                        ax <= b + lit::<T>(1e-9) * (T::one() + b.abs())
                    });
                    let dup = out.iter().any(|v| {
                        v.iter().zip(&x).all(|(&p, &q)| (p - q).abs() <= lit::<T>(1e-10) * (T::one() + p.abs()))
                    });
                    if feasible && !dup {
                        out.push(x);
                    }
                }
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < k - n + i {
                idx[i] += 1;
                for j in i + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Every probe direction must be blocked by some half-space.
fn positively_spanning<T: Scalar>(normals: &[Vec<T>]) -> bool {
    let n = normals[0].len();
    let total = 3usize.pow(n as u32);
    (0..total).all(|code| {
        let mut c = code;
        let d: Vec<T> = (0..n)
            .map(|_| {
                let digit = c % 3;
                c /= 3;
                lit::<T>(digit as f64 - 1.0)
            })
            .collect();
        if d.iter().all(|&v| v == T::zero()) {
            return true;
        }
        normals.iter().any(|a| a.iter().zip(&d).fold(T::zero(), |acc, (&x, &y)| acc + x * y) > T::zero())
    }) && normals.iter().all(|a| {
        let d: Vec<T> = a.iter().map(|&v| -v).collect();
        normals.iter().any(|b| b.iter().zip(&d).fold(T::zero(), |acc, (&x, &y)| acc + x * y) > T::zero())
    })
}

fn sorted_polygon<T: Scalar>(vertices: &[Vec<T>]) -> Vec<[T; 2]> {
    let k = from_usize::<T>(vertices.len());
    let cx = vertices.iter().fold(T::zero(), |acc, v| acc + v[0]) / k;
    let cy = vertices.iter().fold(T::zero(), |acc, v| acc + v[1]) / k;
    let mut pts: Vec<[T; 2]> = vertices.iter().map(|v| [v[0], v[1]]).collect();
    pts.sort_by(|a, b| {
        let ta = (a[1] - cy).atan2(a[0] - cx);
        let tb = (b[1] - cy).atan2(b[0] - cx);
        ta.partial_cmp(&tb).unwrap_or(std::cmp::Ordering::Equal)
    });
    pts
}

/// Shoelace formula; positive for counter-clockwise polygons.
pub fn polygon_area<T: Scalar>(pts: &[[T; 2]]) -> T {
    let k = pts.len();
    let twice = (0..k).fold(T::zero(), |acc, i| {
        let a = pts[i];
        let b = pts[(i + 1) % k];
        acc + a[0] * b[1] - b[0] * a[1]
    });
    twice * lit(0.5)
}
