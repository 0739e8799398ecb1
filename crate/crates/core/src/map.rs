//! Piecewise uniformly expanding maps: affine branches on polytope pieces
//! in any dimension, smooth expression-defined branches in 1D, weight
//! functions, and validation of the expansion hypotheses.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{
    affine_image, intersect, AffineMap, Interval, Polytope, GEOM_TOL,
};
use rand::Rng;

/// Grid size used to certify smooth-branch expansion and monotonicity.
const EXPANSION_GRID: usize = 1024;

const DISJOINT_TOL: f64 = 1e-9; // relative to ambient volume
const COVER_TOL: f64 = 1e-6; // relative
const IMAGE_TOL: f64 = 1e-6; // relative to image volume

#[derive(Debug, Clone)]
pub enum WeightKind {
    /// g = 1/|det DT|, the Perron-Frobenius weight.
    PerronFrobenius,
    /// One expression per branch, evaluated pointwise.
    Custom(Vec<Expr>),
}

#[derive(Debug, Clone)]
pub struct AffineBranch {
    pub domain: Polytope,
    pub map: AffineMap,
}

#[derive(Debug, Clone)]
pub struct SmoothBranch1D {
    pub domain: Interval,
    pub forward: Expr,
    pub derivative: Expr,
    /// Hoelder exponent of the derivative; 1.0 declares a Lipschitz derivative.
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub enum Branch {
    Affine(AffineBranch),
    Smooth1D(SmoothBranch1D),
}

impl Branch {
    pub fn domain_polytope(&self) -> Polytope {
        match self {
            Branch::Affine(b) => b.domain.clone(),
            Branch::Smooth1D(b) => b.domain.to_polytope(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Branch::Affine(b) => b.map.apply(x),
            Branch::Smooth1D(b) => vec![b.forward.eval1(x[0])],
        }
    }

    pub fn image(&self) -> Result<Polytope> {
        match self {
            Branch::Affine(b) => affine_image(&b.domain, &b.map),
            Branch::Smooth1D(b) => {
                let (a, c) = (b.forward.eval1(b.domain.lo), b.forward.eval1(b.domain.hi));
                Ok(Polytope::interval(a.min(c), a.max(c)))
            }
        }
    }

    pub fn det_at(&self, x: &[f64]) -> f64 {
        match self {
            Branch::Affine(b) => b.map.det(),
            Branch::Smooth1D(b) => b.derivative.eval1(x[0]),
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, Branch::Affine(_))
    }
}

/// Union of disjoint polytopes serving as the space X_0 (possibly
/// disconnected, as in the paper's polyhedral examples).
#[derive(Debug, Clone)]
pub struct Ambient {
    parts: Vec<Polytope>,
}

impl Ambient {
    pub fn new(parts: Vec<Polytope>) -> Result<Ambient> {
        if parts.is_empty() {
            return Err(Error::Invalid("ambient needs at least one part".into()));
        }
        let dim = parts[0].dim();
        for p in &parts {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { left: p.dim(), right: dim });
            }
            if !p.is_bounded() {
                return Err(Error::Unbounded);
            }
        }
        Ok(Ambient { parts })
    }

    pub fn from_box(bounds: &[(f64, f64)]) -> Ambient {
        Ambient { parts: vec![Polytope::from_box(bounds)] }
    }

    pub fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    pub fn parts(&self) -> &[Polytope] {
        &self.parts
    }

    pub fn volume(&self) -> Result<f64> {
        self.parts.iter().map(|p| p.volume()).sum()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.parts.iter().any(|p| p.contains(x, tol))
    }

    /// Axis box enclosing the whole union.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        let dim = self.dim();
        let mut out = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
        for p in &self.parts {
            let bb = p.bounding_box().expect("ambient parts are bounded");
            for k in 0..dim {
                out[k].0 = out[k].0.min(bb[k].0);
                out[k].1 = out[k].1.max(bb[k].1);
            }
        }
        out
    }

    /// Uniform sample over the union (parts weighted by volume).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let vols: Vec<f64> = self.parts.iter().map(|p| p.volume().unwrap_or(0.0)).collect();
        let total: f64 = vols.iter().sum();
        let mut u = rng.gen_range(0.0..total);
        for (p, v) in self.parts.iter().zip(&vols) {
            if u < *v {
                if let Some(x) = p.sample(rng, 10_000) {
                    return x;
                }
            }
            u -= v;
        }
        self.parts[0].sample(rng, 10_000).expect("nonempty ambient part")
    }
}

#[derive(Debug, Clone)]
pub struct BranchCheck {
    pub index: usize,
    /// Smallest singular value of the derivative (grid min |T'| in 1D smooth).
    pub lambda_singular: f64,
    /// Smallest eigenvalue modulus (affine branches only).
    pub lambda_eigen: Option<f64>,
    pub expanding: bool,
    pub monotone: Option<bool>,
    /// Fraction of the image volume escaping the ambient union.
    pub image_defect: f64,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub dim: usize,
    pub branches: Vec<BranchCheck>,
    pub disjointness_defect: f64,
    pub covering_defect: f64,
    /// Accepted through the commuting-matrices eigenvalue route rather than
    /// per-branch singular values.
    pub eventually_expanding: bool,
    pub accepted: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PiecewiseMap {
    dim: usize,
    branches: Vec<Branch>,
    ambient: Ambient,
    weight: WeightKind,
    validation: ValidationReport,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ApplyOutcome {
    Point(Vec<f64>),
    /// Within tolerance of a piece boundary; callers resample.
    Boundary,
}

impl PiecewiseMap {
    pub fn new(
        branches: Vec<Branch>,
        ambient: Ambient,
        weight: WeightKind,
    ) -> Result<PiecewiseMap> {
        let dim = ambient.dim();
        for b in &branches {
            let bd = match b {
                Branch::Affine(a) => a.domain.dim(),
                Branch::Smooth1D(_) => 1,
            };
            if bd != dim {
                return Err(Error::DimensionMismatch { left: bd, right: dim });
            }
            if let Branch::Smooth1D(s) = b {
                if !(0.0 < s.alpha && s.alpha <= 1.0) {
                    return Err(Error::Invalid(format!(
                        "hoelder alpha {} outside (0, 1]",
                        s.alpha
                    )));
                }
            }
        }
        if let WeightKind::Custom(ws) = &weight {
            if ws.len() != branches.len() {
                return Err(Error::Invalid(format!(
                    "custom weight count {} != branch count {}",
                    ws.len(),
                    branches.len()
                )));
            }
        }
        let validation = validate(dim, &branches, &ambient)?;
        Ok(PiecewiseMap { dim, branches, ambient, weight, validation })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn ambient(&self) -> &Ambient {
        &self.ambient
    }

    pub fn weight(&self) -> &WeightKind {
        &self.weight
    }

    pub fn validation(&self) -> &ValidationReport {
        &self.validation
    }

    pub fn is_accepted(&self) -> bool {
        self.validation.accepted
    }

    pub fn require_accepted(&self) -> Result<()> {
        if self.validation.accepted {
            Ok(())
        } else {
            Err(Error::MapRejected {
                reason: self.validation.failures.join("; "),
            })
        }
    }

    pub fn is_affine(&self) -> bool {
        self.branches.iter().all(Branch::is_affine)
    }

    /// Hoelder exponent available for Sobolev parameters: min over smooth
    /// branches, 1.0 when all branches are affine.
    pub fn min_alpha(&self) -> f64 {
        self.branches
            .iter()
            .filter_map(|b| match b {
                Branch::Smooth1D(s) => Some(s.alpha),
                Branch::Affine(_) => None,
            })
            .fold(1.0, f64::min)
    }

    /// True when every branch derivative is Lipschitz (alpha = 1 declared).
    pub fn lipschitz_derivative(&self) -> bool {
        self.min_alpha() >= 1.0
    }

    /// Apply T at x through the unique branch whose closure contains x.
    /// Points within `tol` of a piece boundary come back as `Boundary`.
    pub fn apply_tol(&self, x: &[f64], tol: f64) -> Result<ApplyOutcome> {
        let mut hit: Option<usize> = None;
        for (i, b) in self.branches.iter().enumerate() {
            let inside = match b {
                Branch::Affine(a) => a.domain.contains(x, tol),
                Branch::Smooth1D(s) => s.domain.contains(x[0], tol),
            };
            if inside {
                if hit.is_some() {
                    return Ok(ApplyOutcome::Boundary);
                }
                hit = Some(i);
            }
        }
        let i = match hit {
            Some(i) => i,
            None => return Err(Error::OutsideDomain(x.to_vec())),
        };
        // require an interior margin within the unique branch
        let interior = match &self.branches[i] {
            Branch::Affine(a) => a.domain.halfspaces().iter().all(|h| h.slack(x) <= -tol),
            Branch::Smooth1D(s) => x[0] >= s.domain.lo + tol && x[0] <= s.domain.hi - tol,
        };
        if !interior {
            return Ok(ApplyOutcome::Boundary);
        }
        Ok(ApplyOutcome::Point(self.branches[i].apply(x)))
    }

    pub fn apply(&self, x: &[f64]) -> Result<ApplyOutcome> {
        self.apply_tol(x, GEOM_TOL)
    }

    /// n-fold application; `Boundary` propagates.
    pub fn apply_n(&self, x: &[f64], n: usize) -> Result<ApplyOutcome> {
        let mut cur = x.to_vec();
        for _ in 0..n {
            match self.apply(&cur)? {
                ApplyOutcome::Point(y) => cur = y,
                ApplyOutcome::Boundary => return Ok(ApplyOutcome::Boundary),
            }
        }
        Ok(ApplyOutcome::Point(cur))
    }

    /// Branch index whose closure contains x (smallest index on ties).
    pub fn branch_containing(&self, x: &[f64], tol: f64) -> Option<usize> {
        self.branches.iter().position(|b| match b {
            Branch::Affine(a) => a.domain.contains(x, tol),
            Branch::Smooth1D(s) => s.domain.contains(x[0], tol),
        })
    }

    /// Weight g(x) on a branch: 1/|det DT| under Perron-Frobenius,
    /// the per-branch expression otherwise.
    pub fn branch_weight(&self, branch_id: usize, x: &[f64]) -> f64 {
        match &self.weight {
            WeightKind::PerronFrobenius => 1.0 / self.branches[branch_id].det_at(x).abs(),
            WeightKind::Custom(ws) => ws[branch_id].eval(x),
        }
    }
}

fn validate(dim: usize, branches: &[Branch], ambient: &Ambient) -> Result<ValidationReport> {
    let mut failures = Vec::new();
    let ambient_vol = ambient.volume()?;
    if branches.is_empty() {
        failures.push("map has no branches".to_string());
    }

    let mut checks = Vec::with_capacity(branches.len());
    for (i, b) in branches.iter().enumerate() {
        let (lambda_singular, lambda_eigen, monotone) = match b {
            Branch::Affine(a) => {
                if a.map.det().abs() <= 1e-12 {
                    failures.push(format!("branch {i}: singular matrix"));
                }
                (
                    a.map.smallest_singular_value(),
                    Some(a.map.min_eigenvalue_modulus()),
                    None,
                )
            }
            Branch::Smooth1D(s) => {
                if s.domain.is_empty() {
                    failures.push(format!("branch {i}: empty interval domain"));
                }
                let mut min_deriv = f64::INFINITY;
                let mut values = Vec::with_capacity(EXPANSION_GRID + 1);
                for k in 0..=EXPANSION_GRID {
                    let t = s.domain.lo
                        + (s.domain.hi - s.domain.lo) * k as f64 / EXPANSION_GRID as f64;
                    min_deriv = min_deriv.min(s.derivative.eval1(t).abs());
                    values.push(s.forward.eval1(t));
                }
                let increasing = values.windows(2).all(|w| w[1] > w[0]);
                let decreasing = values.windows(2).all(|w| w[1] < w[0]);
                (min_deriv, None, Some(increasing || decreasing))
            }
        };

        let image = b.image()?;
        let image_vol = image.volume()?;
        let mut covered = 0.0;
        for part in ambient.parts() {
            covered += intersect(&image, part)?.volume()?;
        }
        let image_defect = if image_vol > 0.0 {
            ((image_vol - covered) / image_vol).max(0.0)
        } else {
            0.0
        };

        checks.push(BranchCheck {
            index: i,
            lambda_singular,
            lambda_eigen,
            expanding: lambda_singular > 1.0,
            monotone,
            image_defect,
        });
    }

    // expansion: per-branch singular values, with the commuting-eigenvalue
    // fallback for affine families
    let mut eventually_expanding = false;
    if checks.iter().any(|c| !c.expanding) {
        let affine_maps: Vec<&AffineMap> = branches
            .iter()
            .filter_map(|b| match b {
                Branch::Affine(a) => Some(&a.map),
                _ => None,
            })
            .collect();
        let all_affine = affine_maps.len() == branches.len();
        let commute = all_affine && pairwise_commute(&affine_maps, 1e-9);
        let eigen_ok = checks
            .iter()
            .all(|c| c.lambda_eigen.map(|l| l > 1.0).unwrap_or(false));
        if all_affine && commute && eigen_ok {
            eventually_expanding = true;
        } else {
            for c in checks.iter().filter(|c| !c.expanding) {
                failures.push(format!(
                    "branch {}: expansion {} not > 1",
                    c.index, c.lambda_singular
                ));
            }
        }
    }

    for c in &checks {
        if let Some(false) = c.monotone {
            failures.push(format!("branch {}: not monotone on validation grid", c.index));
        }
        if c.image_defect > IMAGE_TOL {
            failures.push(format!(
                "branch {}: image escapes ambient (defect {:.3e})",
                c.index, c.image_defect
            ));
        }
    }

    // pairwise disjointness of branch domains
    let domains: Vec<Polytope> = branches.iter().map(Branch::domain_polytope).collect();
    let mut disjointness_defect = 0.0f64;
    for i in 0..domains.len() {
        for j in (i + 1)..domains.len() {
            if let (Some(a), Some(b)) = (domains[i].bounding_box(), domains[j].bounding_box()) {
                let meets = a
                    .iter()
                    .zip(b)
                    .all(|(&(alo, ahi), &(blo, bhi))| alo <= bhi + GEOM_TOL && blo <= ahi + GEOM_TOL);
                if !meets {
                    continue;
                }
            }
            let overlap = intersect(&domains[i], &domains[j])?.volume()?;
            disjointness_defect = disjointness_defect.max(overlap / ambient_vol);
        }
    }
    if disjointness_defect >= DISJOINT_TOL {
        failures.push(format!(
            "branch domains overlap (relative volume {disjointness_defect:.3e})"
        ));
    }

    // domains cover Lebesgue-almost all of the ambient union
    let domain_total: f64 = domains.iter().map(|d| d.volume().unwrap_or(0.0)).sum();
    let covering_defect = ((ambient_vol - domain_total) / ambient_vol).abs();
    if covering_defect > COVER_TOL {
        failures.push(format!(
            "branch domains cover {domain_total:.12} of ambient volume {ambient_vol:.12}"
        ));
    }

    Ok(ValidationReport {
        dim,
        branches: checks,
        disjointness_defect,
        covering_defect,
        eventually_expanding,
        accepted: failures.is_empty(),
        failures,
    })
}

pub fn pairwise_commute(maps: &[&AffineMap], tol: f64) -> bool {
    for i in 0..maps.len() {
        for j in (i + 1)..maps.len() {
            let ab = &maps[i].matrix * &maps[j].matrix;
            let ba = &maps[j].matrix * &maps[i].matrix;
            let defect = (&ab - &ba).abs().max();
            if defect > tol {
                return false;
            }
        }
    }
    true
}

/// Maximum commutator defect over pairs (0 for a single branch).
pub fn commutation_defect(maps: &[&AffineMap]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..maps.len() {
        for j in (i + 1)..maps.len() {
            let ab = &maps[i].matrix * &maps[j].matrix;
            let ba = &maps[j].matrix * &maps[i].matrix;
            worst = worst.max((&ab - &ba).abs().max());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_relative_eq;

    #[test]
    fn doubling_is_accepted_with_lambda_two() {
        let map = presets::doubling();
        assert!(map.is_accepted());
        for c in &map.validation().branches {
            assert_relative_eq!(c.lambda_singular, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn overlapping_branches_rejected() {
        let branches = vec![
            presets::affine_branch_1d(0.0, 0.6, 2.0, 0.0),
            presets::affine_branch_1d(0.5, 1.0, 2.0, -1.0),
        ];
        let map = PiecewiseMap::new(
            branches,
            Ambient::from_box(&[(0.0, 1.0)]),
            WeightKind::PerronFrobenius,
        )
        .unwrap();
        assert!(!map.is_accepted());
        assert_relative_eq!(map.validation().disjointness_defect, 0.1, epsilon = 1e-9);
    }

    #[test]
    fn identity_branch_rejected() {
        let branches = vec![presets::affine_branch_1d(0.0, 1.0, 1.0, 0.0)];
        let map = PiecewiseMap::new(
            branches,
            Ambient::from_box(&[(0.0, 1.0)]),
            WeightKind::PerronFrobenius,
        )
        .unwrap();
        assert!(!map.is_accepted());
        assert!(map
            .validation()
            .failures
            .iter()
            .any(|f| f.contains("expansion")));
    }

    #[test]
    fn apply_doubling() {
        let map = presets::doubling();
        match map.apply(&[0.3]).unwrap() {
            ApplyOutcome::Point(y) => assert_relative_eq!(y[0], 0.6, epsilon = 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!(map.apply(&[0.5]).unwrap(), ApplyOutcome::Boundary);
        assert!(map.apply(&[2.0]).is_err());
    }

    #[test]
    fn apply_quadrant() {
        let map = presets::quadrant();
        match map.apply(&[0.4, 0.3]).unwrap() {
            ApplyOutcome::Point(y) => {
                assert_relative_eq!(y[0], 0.8, epsilon = 1e-12);
                assert_relative_eq!(y[1], 0.6, epsilon = 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn weights() {
        let map = presets::doubling();
        assert_relative_eq!(map.branch_weight(0, &[0.2]), 0.5);
        let markov = presets::markov3();
        assert_relative_eq!(markov.branch_weight(2, &[0.9]), 0.25);
        // negative determinant takes absolute value
        let branches = vec![
            presets::affine_branch_1d(0.0, 0.25, -4.0, 1.0),
            presets::affine_branch_1d(0.25, 1.0, 4.0 / 3.0, -1.0 / 3.0),
        ];
        let map = PiecewiseMap::new(
            branches,
            Ambient::from_box(&[(0.0, 1.0)]),
            WeightKind::PerronFrobenius,
        )
        .unwrap();
        assert_relative_eq!(map.branch_weight(0, &[0.1]), 0.25);
    }

    #[test]
    fn smooth_branch_validation() {
        let map = presets::perturbed_doubling();
        assert!(map.is_accepted(), "{:?}", map.validation().failures);
        assert!(map.min_alpha() >= 1.0);
        let c = &map.validation().branches[0];
        assert!(c.lambda_singular > 1.3 && c.lambda_singular < 2.0);
        assert_eq!(c.monotone, Some(true));
    }

    #[test]
    fn contracting_smooth_branch_rejected() {
        let branches = vec![Branch::Smooth1D(SmoothBranch1D {
            domain: Interval::new(0.0, 1.0),
            forward: Expr::parse("0.5*x").unwrap(),
            derivative: Expr::parse("0.5").unwrap(),
            alpha: 1.0,
        })];
        let map = PiecewiseMap::new(
            branches,
            Ambient::from_box(&[(0.0, 1.0)]),
            WeightKind::PerronFrobenius,
        )
        .unwrap();
        assert!(!map.is_accepted());
    }

    #[test]
    fn boundary_flag_frequency_is_tiny() {
        use rand::SeedableRng;
        let map = presets::doubling();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut flagged = 0;
        let n = 20_000;
        for _ in 0..n {
            let x = map.ambient().sample(&mut rng);
            if map.apply(&x).unwrap() == ApplyOutcome::Boundary {
                flagged += 1;
            }
        }
        assert!((flagged as f64) < 1e-3 * n as f64);
    }

    #[test]
    fn image_escape_detected() {
        // branch [0, 0.5] -> [0, 1.5] escapes the ambient [0, 1]
        let branches = vec![
            presets::affine_branch_1d(0.0, 0.5, 3.0, 0.0),
            presets::affine_branch_1d(0.5, 1.0, 2.0, -1.0),
        ];
        let map = PiecewiseMap::new(
            branches,
            Ambient::from_box(&[(0.0, 1.0)]),
            WeightKind::PerronFrobenius,
        )
        .unwrap();
        assert!(!map.is_accepted());
        assert!(map.validation().branches[0].image_defect > 0.3);
    }
}
