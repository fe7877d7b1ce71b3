use serde::{Deserialize, Serialize};

use crate::convex_core::{Domain, QuadraticForm, SmoothConvexFunction, WeightFunction};
use crate::error::{Error, Result};
use crate::functionals::{mass_density, weighted_mass};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::quantizer::Region;
use crate::scalar::{from_usize, lit, Scalar};

/// One sub-region `D_i` with its anchor data.
#[derive(Clone, Debug)]
pub struct Piece<T> {
    /// Axis-aligned boxes whose union (clipped by the partition's domain)
    /// forms the piece.
    pub cells: Vec<(Vec<T>, Vec<T>)>,
    pub anchor: Vec<T>,
    /// `q_a(y) = yᵀ D²f(a) y`.
    pub form: QuadraticForm<T>,
    /// `ω(a, f(a))`.
    pub anchor_weight: T,
    pub volume: T,
}

#[derive(Clone, Debug)]
pub struct Partition<T> {
    pub pieces: Vec<Piece<T>>,
    /// Set for non-box domains; cells are intersected with it.
    pub clip: Option<Domain<T>>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> Partition<T> {
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn region(&self, i: usize) -> Result<Region<T>> {
        Region::from_cells(self.pieces[i].cells.clone(), self.clip.clone())
    }

    pub fn total_volume(&self) -> T {
        self.pieces.iter().fold(T::zero(), |a, p| a + p.volume)
    }
}

fn box_volume<T: Scalar>(lo: &[T], hi: &[T]) -> T {
    lo.iter().zip(hi).fold(T::one(), |a, (l, h)| a * (*h - *l))
}

/// Volume and centroid of `cell ∩ clip` from a midpoint lattice.
fn clipped_moments<T: Scalar>(lo: &[T], hi: &[T], clip: &Domain<T>) -> (T, Vec<T>) {
    let n = lo.len();
    let k: usize = match n {
        1 => 4096,
        2 => 96,
        _ => 24,
    };
    let total = k.pow(n as u32);
    let mut inside = 0usize;
    let mut sum = vec![T::zero(); n];
    let mut x = vec![T::zero(); n];
    for s in 0..total {
        let mut c = s;
        for d in (0..n).rev() {
            let idx = c % k;
            c /= k;
            x[d] = lo[d] + (hi[d] - lo[d]) * (from_usize::<T>(idx) + lit(0.5)) / from_usize::<T>(k);
        }
        if clip.contains(&x) {
            inside += 1;
            for d in 0..n {
                sum[d] = sum[d] + x[d];
            }
        }
    }
    if inside == 0 {
        return (T::zero(), vec![]);
    }
    let frac = from_usize::<T>(inside) / from_usize::<T>(total);
    (box_volume(lo, hi) * frac, sum.into_iter().map(|s| s / from_usize::<T>(inside)).collect())
}

pub(crate) fn anchor_data<T: Scalar>(
    f: &SmoothConvexFunction<T>,
    w: &WeightFunction<T>,
    anchor: &[T],
) -> Result<(QuadraticForm<T>, T)> {
    let form = QuadraticForm::new(f.hessian(anchor))
        .map_err(|e| Error::NotPositiveDefinite(format!("at anchor {anchor:?}: {e}")))?;
    let weight = w.eval(anchor, f.value(anchor));
    if !(weight > T::zero()) {
        return Err(Error::InvalidWeight(format!("ω = {weight} at anchor {anchor:?}")));
    }
    Ok((form, weight))
}

/// Axis-aligned grid with `l_pieces` cells along the longest axis and
/// proportionally fewer on the others; anchors at cell centroids.
pub fn partition_domain<T: Scalar>(
    f: &SmoothConvexFunction<T>,
    w: &WeightFunction<T>,
    l_pieces: usize,
) -> Result<Partition<T>> {
    if l_pieces == 0 {
        return Err(Error::InvalidArgument("l_pieces must be at least 1".into()));
    }
    let domain = f.domain();
    let n = domain.dim();
    let (lo, hi) = domain.bounding_box();
    let ext: Vec<T> = (0..n).map(|d| hi[d] - lo[d]).collect();
    let longest = ext.iter().fold(T::zero(), |a, &e| a.max(e));
    let counts: Vec<usize> = ext
        .iter()
        .map(|&e| (from_usize::<T>(l_pieces) * e / longest).round().to_usize().unwrap_or(1).max(1))
        .collect();
    let clip = (!domain.is_box()).then(|| domain.clone());
    let mut warnings = Vec::new();
    if clip.is_some() {
        warnings.push("non-box domain: grid cells are clipped to the domain".to_string());
    }
    let total: usize = counts.iter().product();
    let mut pieces = Vec::with_capacity(total);
    for s in 0..total {
        let mut c = s;
        let mut clo = vec![T::zero(); n];
        let mut chi = vec![T::zero(); n];
        for d in (0..n).rev() {
            let idx = c % counts[d];
            c /= counts[d];
            let h = ext[d] / from_usize::<T>(counts[d]);
            clo[d] = lo[d] + h * from_usize::<T>(idx);
            chi[d] = if idx + 1 == counts[d] { hi[d] } else { lo[d] + h * from_usize::<T>(idx + 1) };
        }
        let (volume, anchor) = match &clip {
            None => (box_volume(&clo, &chi), clo.iter().zip(&chi).map(|(&a, &b)| (a + b) * lit(0.5)).collect()),
            Some(dom) => {
                let (v, cen) = clipped_moments(&clo, &chi, dom);
                if v == T::zero() {
                    continue;
                }
                (v, cen)
            }
        };
        let (form, anchor_weight) = anchor_data(f, w, &anchor)?;
        pieces.push(Piece { cells: vec![(clo, chi)], anchor, form, anchor_weight, volume });
    }
    if pieces.is_empty() {
        return Err(Error::InvalidArgument("partition produced no cells inside the domain".into()));
    }
    Ok(Partition { pieces, clip, warnings })
}

/// Normalized masses `τ_i` and integer budgets `d_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Allocation<T> {
    pub masses: Vec<T>,
    /// `⌊τ_i m⌋` before the leftover is handed out.
    pub floors: Vec<usize>,
    pub budgets: Vec<usize>,
}

/// Floors of `τ_i m`, leftover to the largest fractional parts (ties to the
/// lower index); a positive-mass piece left at zero then takes one point
/// from the piece most above its share.
pub fn allocate_from_masses<T: Scalar>(masses: &[T], m: usize) -> Result<Allocation<T>> {
    if masses.iter().any(|v| *v < T::zero() || !v.is_finite()) {
        return Err(Error::InvalidArgument("masses must be finite and nonnegative".into()));
    }
    let total = masses.iter().fold(T::zero(), |a, &b| a + b);
    if !(total > T::zero()) {
        return Err(Error::InvalidArgument("all piece masses vanish".into()));
    }
    let positive = masses.iter().filter(|v| **v > T::zero()).count();
    if m < positive {
        return Err(Error::InvalidArgument(format!("budget {m} is below the {positive} positive-mass pieces")));
    }
    let mf = from_usize::<T>(m);
    let shares: Vec<T> = masses.iter().map(|&v| v * mf / total).collect();
    let floors: Vec<usize> = shares.iter().map(|s| s.floor().to_usize().unwrap_or(0)).collect();
    let used: usize = floors.iter().sum();
    assert!(used <= m, "floor allocation exceeds the budget");
    let mut budgets = floors.clone();
    let mut order: Vec<usize> = (0..masses.len()).collect();
    let frac = |i: usize| shares[i] - from_usize::<T>(floors[i]);
    order.sort_by(|&i, &j| frac(j).partial_cmp(&frac(i)).unwrap().then(i.cmp(&j)));
    for &i in order.iter().cycle().take(m - used) {
        budgets[i] += 1;
    }
    loop {
        let Some(starved) = (0..masses.len()).find(|&i| masses[i] > T::zero() && budgets[i] == 0) else {
            break;
        };
        let donor = (0..masses.len())
            .filter(|&i| budgets[i] >= 2)
            .max_by(|&i, &j| {
                let si = from_usize::<T>(budgets[i]) - shares[i];
                let sj = from_usize::<T>(budgets[j]) - shares[j];
                si.partial_cmp(&sj).unwrap().then(j.cmp(&i))
            })
            .expect("m ≥ positive pieces guarantees a donor");
        budgets[donor] -= 1;
        budgets[starved] += 1;
    }
    Ok(Allocation { masses: masses.iter().map(|&v| v / total).collect(), floors, budgets })
}

/// Unnormalized `∫_{D_i} (det D²f)^{p/(n+2p)} ω^{n/(n+2p)}` for every piece.
pub fn piece_masses<T: Scalar>(
    partition: &Partition<T>,
    f: &SmoothConvexFunction<T>,
    w: &WeightFunction<T>,
    p: T,
    quad: &QuadratureSpec,
) -> Result<Vec<T>> {
    partition
        .pieces
        .iter()
        .map(|piece| {
            piece.cells.iter().try_fold(T::zero(), |acc, (lo, hi)| {
                let cell = Domain::new_box(lo.clone(), hi.clone())?;
                let v = match &partition.clip {
                    None => weighted_mass(f, p, w, &cell, quad)?.value,
                    Some(dom) => {
                        integrate(&cell, quad, |x| if dom.contains(x) { mass_density(f, p, w, x) } else { Ok(T::zero()) })?
                            .value
                    }
                };
                Ok(acc + v)
            })
        })
        .collect()
}

pub fn allocate_budget<T: Scalar>(
    partition: &Partition<T>,
    f: &SmoothConvexFunction<T>,
    w: &WeightFunction<T>,
    p: T,
    m: usize,
    quad: &QuadratureSpec,
) -> Result<Allocation<T>> {
    let masses = piece_masses(partition, f, w, p, quad)?;
    allocate_from_masses(&masses, m)
}

fn boxes_adjacent<T: Scalar>(a: &(Vec<T>, Vec<T>), b: &(Vec<T>, Vec<T>)) -> bool {
    let n = a.0.len();
    let eps = lit::<T>(1e-12);
    let mut overlapping = 0;
    for d in 0..n {
        let lo = a.0[d].max(b.0[d]);
        let hi = a.1[d].min(b.1[d]);
        if hi < lo - eps {
            return false;
        }
        if hi > lo + eps {
            overlapping += 1;
        }
    }
    overlapping + 1 >= n
}

/// Merges pieces until at most `m` carry positive mass: the lightest piece
/// joins its lightest face-adjacent neighbour.
pub(crate) fn merge_to_budget<T: Scalar>(
    partition: &mut Partition<T>,
    masses: &mut Vec<T>,
    m: usize,
    f: &SmoothConvexFunction<T>,
    w: &WeightFunction<T>,
) -> Result<()> {
    while masses.iter().filter(|v| **v > T::zero()).count() > m.max(1) {
        let light = (0..masses.len())
            .filter(|&i| masses[i] > T::zero())
            .min_by(|&i, &j| masses[i].partial_cmp(&masses[j]).unwrap().then(i.cmp(&j)))
            .expect("positive pieces");
        let touches = |j: usize| {
            partition.pieces[light]
                .cells
                .iter()
                .any(|a| partition.pieces[j].cells.iter().any(|b| boxes_adjacent(a, b)))
        };
        let candidates: Vec<usize> = (0..masses.len()).filter(|&j| j != light && touches(j)).collect();
        let pool: Vec<usize> =
            if candidates.is_empty() { (0..masses.len()).filter(|&j| j != light).collect() } else { candidates };
        let other = *pool
            .iter()
            .min_by(|&&i, &&j| masses[i].partial_cmp(&masses[j]).unwrap().then(i.cmp(&j)))
            .expect("at least two pieces");
        let (keep, drop) = (light.min(other), light.max(other));
        let gone = partition.pieces.remove(drop);
        let gone_mass = masses.remove(drop);
        let piece = &mut partition.pieces[keep];
        let (va, vb) = (piece.volume, gone.volume);
        let merged_anchor: Vec<T> =
            piece.anchor.iter().zip(&gone.anchor).map(|(&a, &b)| (a * va + b * vb) / (va + vb)).collect();
        let heavier_anchor = if masses[keep] >= gone_mass { piece.anchor.clone() } else { gone.anchor.clone() };
        piece.cells.extend(gone.cells);
        piece.volume = va + vb;
        let region = Region::from_cells(piece.cells.clone(), partition.clip.clone())?;
        piece.anchor = if region.contains(&merged_anchor) { merged_anchor } else { heavier_anchor };
        let (form, weight) = anchor_data(f, w, &piece.anchor)?;
        piece.form = form;
        piece.anchor_weight = weight;
        masses[keep] = masses[keep] + gone_mass;
    }
    Ok(())
}
