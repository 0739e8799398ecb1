//! Convex geometry in halfspace representation: polytopes, affine
//! preimages/images, intersections, volumes and incidence counting.
//!
//! Conventions
//! - A halfspace is `normal . x <= offset`; normals need not be unit length.
//! - Tolerances are absolute (the whole artifact lives on O(1) boxes);
//!   the global default is [`GEOM_TOL`].
//! - Vertex enumeration and exact volume are restricted to dim <= 3;
//!   dim >= 4 uses halfspace-only operations plus seeded Monte Carlo.
//! - Axis-aligned boxes are tracked explicitly so interval arithmetic can
//!   replace LPs on the hot paths (cylinder refinement, Ulam assembly).

pub mod affine;
pub mod lp;
mod volume;

pub use affine::AffineMap;

use crate::error::{Error, Result};
use lp::{solve_lp, LpResult};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use std::sync::OnceLock;

/// Default absolute tolerance for emptiness, incidence and containment.
pub const GEOM_TOL: f64 = 1e-9;

/// Samples used by the Monte Carlo volume path (dim >= 4).
const MC_VOLUME_SAMPLES: usize = 1 << 17;
const MC_VOLUME_SEED: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Halfspace {
        Halfspace { normal, offset }
    }

    /// Signed slack `normal . x - offset` (<= 0 inside).
    pub fn slack(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - self.offset
    }
}

/// Closed 1D interval; degenerate (`lo >= hi`) counts as empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn to_polytope(&self) -> Polytope {
        Polytope::from_box(&[(self.lo, self.hi)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    /// Present on the Monte Carlo path (dim >= 4), `None` when exact.
    pub std_error: Option<f64>,
}

/// Bounded convex polytope in halfspace representation.
#[derive(Debug, Clone)]
pub struct Polytope {
    dim: usize,
    halfspaces: Vec<Halfspace>,
    /// Exact axis-box representation when known (fast paths).
    box_bounds: Option<Vec<(f64, f64)>>,
    /// Enclosing axis box; `None` means the feasible set is unbounded.
    bbox: Option<Vec<(f64, f64)>>,
    empty: bool,
    cheb: Option<(Vec<f64>, f64)>,
    vertices: OnceLock<Option<Vec<Vec<f64>>>>,
    volume: OnceLock<VolumeEstimate>,
}

impl Polytope {
    pub fn from_box(bounds: &[(f64, f64)]) -> Polytope {
        let dim = bounds.len();
        let mut hs = Vec::with_capacity(2 * dim);
        for (k, &(lo, hi)) in bounds.iter().enumerate() {
            let mut n = vec![0.0; dim];
            n[k] = 1.0;
            hs.push(Halfspace::new(n.clone(), hi));
            n[k] = -1.0;
            hs.push(Halfspace::new(n, -lo));
        }
        let empty = bounds.iter().any(|&(lo, hi)| hi - lo <= 0.0);
        let cheb = if empty {
            None
        } else {
            let center: Vec<f64> = bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
            let r = bounds
                .iter()
                .map(|&(lo, hi)| 0.5 * (hi - lo))
                .fold(f64::INFINITY, f64::min);
            Some((center, r))
        };
        Polytope {
            dim,
            halfspaces: hs,
            box_bounds: Some(bounds.to_vec()),
            bbox: Some(bounds.to_vec()),
            empty,
            cheb,
            vertices: OnceLock::new(),
            volume: OnceLock::new(),
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Polytope {
        Polytope::from_box(&[(lo, hi)])
    }

    pub fn empty(dim: usize) -> Polytope {
        Polytope {
            dim,
            halfspaces: Vec::new(),
            box_bounds: None,
            bbox: None,
            empty: true,
            cheb: None,
            vertices: OnceLock::new(),
            volume: OnceLock::new(),
        }
    }

    /// Build from an arbitrary halfspace list: dedupes, decides emptiness
    /// and boundedness, drops redundant halfspaces, detects boxes.
    pub fn from_halfspaces(dim: usize, halfspaces: Vec<Halfspace>) -> Result<Polytope> {
        for h in &halfspaces {
            if h.normal.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: h.normal.len(),
                    right: dim,
                });
            }
        }
        Ok(Self::analyze(dim, halfspaces, true))
    }

    fn analyze(dim: usize, halfspaces: Vec<Halfspace>, reduce: bool) -> Polytope {
        let mut hs: Vec<Halfspace> = Vec::with_capacity(halfspaces.len());
        for h in halfspaces {
            let norm = h.normal.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-12 {
                if h.offset < -GEOM_TOL {
                    return Polytope::empty(dim); // 0 <= negative: infeasible
                }
                continue; // trivially true
            }
            // keep the tighter of near-identical constraints
            let unit: Vec<f64> = h.normal.iter().map(|x| x / norm).collect();
            let uoff = h.offset / norm;
            let mut merged = false;
            for g in hs.iter_mut() {
                let gnorm = g.normal.iter().map(|x| x * x).sum::<f64>().sqrt();
                let same = g
                    .normal
                    .iter()
                    .zip(&unit)
                    .map(|(a, b)| (a / gnorm - b).abs())
                    .fold(0.0_f64, f64::max)
                    < 1e-12;
                if same {
                    if uoff < g.offset / gnorm {
                        *g = Halfspace::new(unit.clone(), uoff);
                    }
                    merged = true;
                    break;
                }
            }
            if !merged {
                hs.push(Halfspace::new(unit, uoff));
            }
        }

        // emptiness / degeneracy via Chebyshev LP over (x, r)
        let cheb_cons: Vec<(Vec<f64>, f64)> = hs
            .iter()
            .map(|h| {
                let mut v = h.normal.clone();
                v.push(1.0); // normals are unit length here
                (v, h.offset)
            })
            .collect();
        let mut obj = vec![0.0; dim + 1];
        obj[dim] = 1.0;
        let (cheb, radius) = match solve_lp(&obj, &cheb_cons) {
            LpResult::Optimal { x, value } => {
                let center = x[..dim].to_vec();
                (Some((center, value)), value)
            }
            LpResult::Unbounded => (None, f64::INFINITY),
            LpResult::Infeasible => (None, f64::NEG_INFINITY),
        };
        if radius < GEOM_TOL {
            let mut p = Polytope::empty(dim);
            p.halfspaces = hs;
            return p;
        }
        if radius.is_infinite() {
            // arbitrarily large balls fit: unbounded
            return Polytope {
                dim,
                halfspaces: hs,
                box_bounds: None,
                bbox: None,
                empty: false,
                cheb: None,
                vertices: OnceLock::new(),
                volume: OnceLock::new(),
            };
        }

        // bounding box via support LPs
        let mut bbox = Vec::with_capacity(dim);
        let cons: Vec<(Vec<f64>, f64)> =
            hs.iter().map(|h| (h.normal.clone(), h.offset)).collect();
        let mut unbounded = false;
        for k in 0..dim {
            let mut dir = vec![0.0; dim];
            dir[k] = 1.0;
            let hi = match solve_lp(&dir, &cons) {
                LpResult::Optimal { value, .. } => value,
                _ => {
                    unbounded = true;
                    break;
                }
            };
            dir[k] = -1.0;
            let lo = match solve_lp(&dir, &cons) {
                LpResult::Optimal { value, .. } => -value,
                _ => {
                    unbounded = true;
                    break;
                }
            };
            bbox.push((lo, hi));
        }
        let bbox = if unbounded { None } else { Some(bbox) };

        // redundancy pruning: a halfspace is dropped when maximizing its
        // normal over the others cannot exceed its offset
        if reduce && bbox.is_some() && hs.len() > 1 {
            let mut i = 0;
            while i < hs.len() && hs.len() > 1 {
                let others: Vec<(Vec<f64>, f64)> = hs
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, h)| (h.normal.clone(), h.offset))
                    .collect();
                let redundant = match solve_lp(&hs[i].normal, &others) {
                    LpResult::Optimal { value, .. } => value <= hs[i].offset + GEOM_TOL,
                    _ => false,
                };
                if redundant {
                    hs.remove(i);
                } else {
                    i += 1;
                }
            }
        }

        let box_bounds = bbox.as_ref().and_then(|bb| {
            let axis_aligned = hs.iter().all(|h| {
                h.normal
                    .iter()
                    .filter(|x| x.abs() > 1e-12)
                    .count()
                    == 1
            });
            if axis_aligned {
                Some(bb.clone())
            } else {
                None
            }
        });

        Polytope {
            dim,
            halfspaces: hs,
            box_bounds,
            bbox,
            empty: false,
            cheb,
            vertices: OnceLock::new(),
            volume: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn is_bounded(&self) -> bool {
        self.empty || self.bbox.is_some()
    }

    pub fn bounding_box(&self) -> Option<&[(f64, f64)]> {
        self.bbox.as_deref()
    }

    pub fn as_box(&self) -> Option<&[(f64, f64)]> {
        self.box_bounds.as_deref()
    }

    /// Chebyshev center and inradius (largest inscribed ball).
    pub fn chebyshev_center(&self) -> Option<(&[f64], f64)> {
        self.cheb.as_ref().map(|(c, r)| (c.as_slice(), *r))
    }

    /// Closure membership within `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if self.empty {
            return false;
        }
        if let Some(bb) = &self.bbox {
            for (k, &(lo, hi)) in bb.iter().enumerate() {
                if x[k] < lo - tol || x[k] > hi + tol {
                    return false;
                }
            }
        }
        self.halfspaces.iter().all(|h| h.slack(x) <= tol)
    }

    /// Vertex set (dim <= 3 only; `None` otherwise or when unbounded).
    pub fn vertices(&self) -> Option<&[Vec<f64>]> {
        if self.empty {
            return None;
        }
        self.vertices
            .get_or_init(|| {
                if self.dim > 3 || self.bbox.is_none() {
                    return None;
                }
                if let Some(b) = &self.box_bounds {
                    return Some(box_corners(b));
                }
                Some(volume::enumerate_vertices(self.dim, &self.halfspaces))
            })
            .as_deref()
    }

    pub fn volume_estimate(&self) -> Result<VolumeEstimate> {
        if self.empty {
            return Ok(VolumeEstimate { value: 0.0, std_error: None });
        }
        if self.bbox.is_none() {
            return Err(Error::Unbounded);
        }
        Ok(*self.volume.get_or_init(|| self.compute_volume()))
    }

    /// Lebesgue volume: exact for dim <= 3, seeded Monte Carlo above.
    pub fn volume(&self) -> Result<f64> {
        Ok(self.volume_estimate()?.value)
    }

    fn compute_volume(&self) -> VolumeEstimate {
        if let Some(b) = &self.box_bounds {
            let v = b.iter().map(|&(lo, hi)| (hi - lo).max(0.0)).product();
            return VolumeEstimate { value: v, std_error: None };
        }
        if self.dim <= 3 {
            let verts = self.vertices().unwrap_or(&[]);
            let value = match self.dim {
                1 => volume::volume_1d(verts),
                2 => volume::volume_2d(verts),
                3 => volume::volume_3d(&self.halfspaces, verts),
                _ => unreachable!(),
            };
            return VolumeEstimate { value, std_error: None };
        }
        // Monte Carlo over the bounding box; fixed seed for reproducibility
        let bb = self.bbox.as_ref().expect("bounded");
        let boxvol: f64 = bb.iter().map(|&(lo, hi)| hi - lo).product();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(MC_VOLUME_SEED);
        let mut x = vec![0.0; self.dim];
        let mut hits = 0usize;
        for _ in 0..MC_VOLUME_SAMPLES {
            for (k, &(lo, hi)) in bb.iter().enumerate() {
                x[k] = rng.gen_range(lo..hi);
            }
            if self.halfspaces.iter().all(|h| h.slack(&x) <= 0.0) {
                hits += 1;
            }
        }
        let p = hits as f64 / MC_VOLUME_SAMPLES as f64;
        VolumeEstimate {
            value: p * boxvol,
            std_error: Some(boxvol * (p * (1.0 - p) / MC_VOLUME_SAMPLES as f64).sqrt()),
        }
    }

    /// Uniform sample by rejection from the bounding box.
    pub fn sample<R: Rng>(&self, rng: &mut R, max_tries: usize) -> Option<Vec<f64>> {
        if self.empty {
            return None;
        }
        let bb = self.bbox.as_ref()?;
        if let Some(b) = &self.box_bounds {
            return Some(
                b.iter()
                    .map(|&(lo, hi)| rng.gen_range(lo..hi))
                    .collect(),
            );
        }
        let mut x = vec![0.0; self.dim];
        for _ in 0..max_tries {
            for (k, &(lo, hi)) in bb.iter().enumerate() {
                x[k] = rng.gen_range(lo..hi);
            }
            if self.halfspaces.iter().all(|h| h.slack(&x) <= 0.0) {
                return Some(x);
            }
        }
        None
    }
}

fn box_corners(bounds: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let dim = bounds.len();
    let mut out = Vec::with_capacity(1 << dim);
    for mask in 0..(1usize << dim) {
        out.push(
            (0..dim)
                .map(|k| if mask >> k & 1 == 1 { bounds[k].1 } else { bounds[k].0 })
                .collect(),
        );
    }
    out
}

/// Intersection with redundancy reduction; the empty flag is set when the
/// combined system is infeasible.
pub fn intersect(p: &Polytope, q: &Polytope) -> Result<Polytope> {
    if p.dim != q.dim {
        return Err(Error::DimensionMismatch { left: p.dim, right: q.dim });
    }
    if p.empty || q.empty {
        return Ok(Polytope::empty(p.dim));
    }
    if let (Some(a), Some(b)) = (&p.box_bounds, &q.box_bounds) {
        let meet: Vec<(f64, f64)> = a
            .iter()
            .zip(b)
            .map(|(&(alo, ahi), &(blo, bhi))| (alo.max(blo), ahi.min(bhi)))
            .collect();
        if meet.iter().any(|&(lo, hi)| hi - lo <= GEOM_TOL) {
            return Ok(Polytope::empty(p.dim));
        }
        return Ok(Polytope::from_box(&meet));
    }
    let mut hs = p.halfspaces.clone();
    hs.extend(q.halfspaces.iter().cloned());
    Ok(Polytope::analyze(p.dim, hs, true))
}

/// Preimage `{x : a x + b in p}` of a polytope under an invertible affine map.
/// Halfspace `(n, c)` pulls back to `(a^T n, c - n . b)`.
pub fn affine_preimage(p: &Polytope, map: &AffineMap) -> Result<Polytope> {
    if p.dim != map.dim() {
        return Err(Error::DimensionMismatch { left: p.dim, right: map.dim() });
    }
    let det = map.det();
    if det.abs() <= affine::DET_TOL {
        return Err(Error::SingularMatrix { det });
    }
    if p.empty {
        return Ok(Polytope::empty(p.dim));
    }
    // box through diagonal map stays a box
    if let Some(b) = &p.box_bounds {
        if map.is_diagonal() {
            let bounds: Vec<(f64, f64)> = b
                .iter()
                .enumerate()
                .map(|(k, &(lo, hi))| {
                    let a = map.matrix[(k, k)];
                    let off = map.offset[k];
                    let u = (lo - off) / a;
                    let v = (hi - off) / a;
                    (u.min(v), u.max(v))
                })
                .collect();
            return Ok(Polytope::from_box(&bounds));
        }
    }
    let hs: Vec<Halfspace> = p
        .halfspaces
        .iter()
        .map(|h| {
            let n = DVector::from_column_slice(&h.normal);
            let new_n = map.matrix.transpose() * &n;
            let shift: f64 = n.iter().zip(map.offset.iter()).map(|(a, b)| a * b).sum();
            Halfspace::new(new_n.iter().copied().collect(), h.offset - shift)
        })
        .collect();
    // an invertible affine image of an irredundant system stays irredundant
    Ok(Polytope::analyze(p.dim, hs, false))
}

/// Forward image of a polytope under an invertible affine map.
pub fn affine_image(p: &Polytope, map: &AffineMap) -> Result<Polytope> {
    affine_preimage(p, &map.inverse()?)
}

/// Number of regions whose closure contains `x` within `tol`.
pub fn incidence_count(regions: &[Polytope], x: &[f64], tol: f64) -> usize {
    regions.iter().filter(|r| r.contains(x, tol)).count()
}

/// Convenience used in a few places: build an affine map from raw parts.
pub fn affine_from_parts(matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<AffineMap> {
    let d = offset.len();
    let mut m = DMatrix::zeros(d, d);
    if matrix.len() != d {
        return Err(Error::DimensionMismatch { left: matrix.len(), right: d });
    }
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != d {
            return Err(Error::DimensionMismatch { left: row.len(), right: d });
        }
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    AffineMap::new(m, DVector::from_vec(offset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_square() -> Polytope {
        Polytope::from_box(&[(0.0, 1.0), (0.0, 1.0)])
    }

    #[test]
    fn box_intersection() {
        let p = unit_square();
        let q = Polytope::from_box(&[(0.5, 1.5), (0.5, 1.5)]);
        let r = intersect(&p, &q).unwrap();
        assert_relative_eq!(r.volume().unwrap(), 0.25, epsilon = 1e-12);
        assert_eq!(r.as_box().unwrap(), &[(0.5, 1.0), (0.5, 1.0)]);
    }

    #[test]
    fn self_intersection_is_identity_set() {
        let p = unit_square();
        let r = intersect(&p, &p).unwrap();
        assert_relative_eq!(r.volume().unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn disjoint_intervals_are_empty() {
        let p = Polytope::interval(0.0, 1.0);
        let q = Polytope::interval(2.0, 3.0);
        let r = intersect(&p, &q).unwrap();
        assert!(r.is_empty());
        assert_relative_eq!(r.volume().unwrap(), 0.0);
    }

    #[test]
    fn preimage_of_doubling_branch() {
        let p = Polytope::interval(0.0, 1.0);
        let m = affine_from_parts(vec![vec![2.0]], vec![0.0]).unwrap();
        let r = affine_preimage(&p, &m).unwrap();
        assert_eq!(r.as_box().unwrap(), &[(0.0, 0.5)]);
    }

    #[test]
    fn preimage_2d_scaling() {
        let p = unit_square();
        let m = affine_from_parts(vec![vec![2.0, 0.0], vec![0.0, 2.0]], vec![0.0, 0.0]).unwrap();
        let r = affine_preimage(&p, &m).unwrap();
        assert_eq!(r.as_box().unwrap(), &[(0.0, 0.5), (0.0, 0.5)]);
    }

    #[test]
    fn preimage_with_offset() {
        // 0 <= 3x - 1 <= 1  =>  x in [1/3, 2/3]
        let p = Polytope::interval(0.0, 1.0);
        let m = affine_from_parts(vec![vec![3.0]], vec![-1.0]).unwrap();
        let r = affine_preimage(&p, &m).unwrap();
        let b = r.as_box().unwrap();
        assert_relative_eq!(b[0].0, 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(b[0].1, 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(r.volume().unwrap(), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn singular_preimage_rejected() {
        let p = Polytope::interval(0.0, 1.0);
        let m = affine_from_parts(vec![vec![1e-13]], vec![0.0]).unwrap();
        assert!(affine_preimage(&p, &m).is_err());
    }

    #[test]
    fn cube_volume() {
        let p = Polytope::from_box(&[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)]);
        assert_relative_eq!(p.volume().unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn triangle_volume() {
        // x >= 0, y >= 0, x + y <= 1
        let hs = vec![
            Halfspace::new(vec![-1.0, 0.0], 0.0),
            Halfspace::new(vec![0.0, -1.0], 0.0),
            Halfspace::new(vec![1.0, 1.0], 1.0),
        ];
        let p = Polytope::from_halfspaces(2, hs).unwrap();
        assert_relative_eq!(p.volume().unwrap(), 0.5, epsilon = 1e-9);
        assert_eq!(p.vertices().unwrap().len(), 3);
    }

    #[test]
    fn tetrahedron_volume() {
        let hs = vec![
            Halfspace::new(vec![-1.0, 0.0, 0.0], 0.0),
            Halfspace::new(vec![0.0, -1.0, 0.0], 0.0),
            Halfspace::new(vec![0.0, 0.0, -1.0], 0.0),
            Halfspace::new(vec![1.0, 1.0, 1.0], 1.0),
        ];
        let p = Polytope::from_halfspaces(3, hs).unwrap();
        assert_relative_eq!(p.volume().unwrap(), 1.0 / 6.0, epsilon = 1e-9);
    }

    #[test]
    fn monte_carlo_simplex_4d() {
        // 4-simplex volume 1/24; MC must land within 4 sigma
        let mut hs: Vec<Halfspace> = (0..4)
            .map(|k| {
                let mut n = vec![0.0; 4];
                n[k] = -1.0;
                Halfspace::new(n, 0.0)
            })
            .collect();
        hs.push(Halfspace::new(vec![1.0; 4], 1.0));
        let p = Polytope::from_halfspaces(4, hs).unwrap();
        let est = p.volume_estimate().unwrap();
        let se = est.std_error.expect("mc path");
        assert!((est.value - 1.0 / 24.0).abs() < 4.0 * se, "{est:?}");
    }

    #[test]
    fn unbounded_flagged_and_rejected() {
        let hs = vec![Halfspace::new(vec![-1.0], 0.0)];
        let p = Polytope::from_halfspaces(1, hs).unwrap();
        assert!(!p.is_bounded());
        assert!(matches!(p.volume(), Err(Error::Unbounded)));
    }

    #[test]
    fn redundancy_is_pruned() {
        let hs = vec![
            Halfspace::new(vec![1.0], 1.0),
            Halfspace::new(vec![1.0], 2.0), // redundant
            Halfspace::new(vec![-1.0], 0.0),
            Halfspace::new(vec![0.5], 3.0), // redundant (same direction)
        ];
        let p = Polytope::from_halfspaces(1, hs).unwrap();
        assert_eq!(p.halfspaces().len(), 2);
        assert_relative_eq!(p.volume().unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn incidence_shared_endpoint() {
        let regions = vec![Polytope::interval(0.0, 0.5), Polytope::interval(0.5, 1.0)];
        assert_eq!(incidence_count(&regions, &[0.5], GEOM_TOL), 2);
        assert_eq!(incidence_count(&regions, &[0.25], GEOM_TOL), 1);
    }

    #[test]
    fn incidence_four_squares_corner() {
        let regions = vec![
            Polytope::from_box(&[(0.0, 1.0), (0.0, 1.0)]),
            Polytope::from_box(&[(1.0, 2.0), (0.0, 1.0)]),
            Polytope::from_box(&[(0.0, 1.0), (1.0, 2.0)]),
            Polytope::from_box(&[(1.0, 2.0), (1.0, 2.0)]),
        ];
        assert_eq!(incidence_count(&regions, &[1.0, 1.0], GEOM_TOL), 4);
    }

    #[test]
    fn incidence_monotone_in_tol() {
        let regions = vec![Polytope::interval(0.0, 0.5), Polytope::interval(0.5, 1.0)];
        let x = [0.5 + 1e-6];
        let small = incidence_count(&regions, &x, 1e-9);
        let large = incidence_count(&regions, &x, 1e-3);
        assert!(small <= large);
        assert_eq!(large, 2);
    }

    #[test]
    fn chebyshev_center_of_square() {
        let hs = vec![
            Halfspace::new(vec![1.0, 0.0], 1.0),
            Halfspace::new(vec![-1.0, 0.0], 0.0),
            Halfspace::new(vec![0.0, 1.0], 1.0),
            Halfspace::new(vec![0.0, -1.0], 0.0),
        ];
        let p = Polytope::from_halfspaces(2, hs).unwrap();
        let (c, r) = p.chebyshev_center().unwrap();
        assert_relative_eq!(c[0], 0.5, epsilon = 1e-9);
        assert_relative_eq!(c[1], 0.5, epsilon = 1e-9);
        assert_relative_eq!(r, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn preimage_then_image_recovers_vertices() {
        let p = unit_square();
        let m = affine_from_parts(vec![vec![2.0, 1.0], vec![0.0, 3.0]], vec![0.25, -0.5]).unwrap();
        let pre = affine_preimage(&p, &m).unwrap();
        let back = affine_image(&pre, &m).unwrap();
        for v in back.vertices().unwrap() {
            assert!(p.contains(v, 1e-9), "{v:?}");
        }
        assert_relative_eq!(back.volume().unwrap(), 1.0, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn intersection_volume_bounded_by_min(
            a0 in 0.0..0.5f64, a1 in 0.6..1.5f64,
            b0 in 0.0..0.5f64, b1 in 0.6..1.5f64,
        ) {
            let p = Polytope::from_box(&[(a0, a1), (a0, a1)]);
            let q = Polytope::from_box(&[(b0, b1), (b0, b1)]);
            let r = intersect(&p, &q).unwrap();
            let vr = r.volume().unwrap();
            prop_assert!(vr <= p.volume().unwrap().min(q.volume().unwrap()) + 1e-12);
        }

        #[test]
        fn preimage_volume_scaling(
            m00 in 1.1..3.0f64, m11 in 1.1..3.0f64, m01 in -0.5..0.5f64,
            b0 in -0.5..0.5f64, b1 in -0.5..0.5f64,
        ) {
            let p = Polytope::from_box(&[(0.0, 1.0), (0.0, 1.0)]);
            let m = affine_from_parts(vec![vec![m00, m01], vec![0.0, m11]], vec![b0, b1]).unwrap();
            let pre = affine_preimage(&p, &m).unwrap();
            let expected = p.volume().unwrap() / m.det().abs();
            prop_assert!((pre.volume().unwrap() - expected).abs() < 1e-9);
        }
    }
}
