//! Closed-form spectral bounds evaluated from a complexity report:
//! the Sobolev essential-radius bound, its Perron-Frobenius special case
//! (the physical-measure condition), the BV bound, the commuting-affine
//! bound, Saussol's oscillation-space bound and its iterated form, plus
//! the (p, t) parameter search.
//!
//! Convention for "lim over n": every bound is reported at the largest
//! computed n; growth tables carry the Fekete-monotone running estimates
//! separately. Quantities that mix singular values and eigenvalues follow
//! a fixed rule: Sobolev/BV/Saussol bounds use smallest singular values of
//! composed derivatives, the commuting-affine bound uses the smallest
//! eigenvalue modulus, as in its hypothesis.

use crate::complexity::{Certification, ComplexityReport, ComposedMap, Cylinder};
use crate::error::{Error, Result};
use crate::map::{commutation_defect, Branch, PiecewiseMap, WeightKind};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Inputs of the parameterized bounds, detached from any particular map so
/// synthetic scenarios can be evaluated too.
#[derive(Debug, Clone)]
pub struct BoundInputs {
    pub n: usize,
    pub d_begin: usize,
    pub d_end: usize,
    pub lambda_n: f64,
    /// sup over X_0 of g^(n) |det DT^n|^{1/p} lambda_n^{-t} for the bound
    /// being evaluated.
    pub sup_weight_term: f64,
    pub p: f64,
    pub t: f64,
    pub alpha: f64,
    pub dim: usize,
}

/// Validates 0 < t < 1/p < 1 and t < alpha, naming the violated inequality.
pub fn check_parameters(p: f64, t: f64, alpha: f64) -> Result<()> {
    if !(p > 1.0) {
        return Err(Error::ParameterDomain(format!("p > 1 violated (p = {p})")));
    }
    if !(t > 0.0) {
        return Err(Error::ParameterDomain(format!("t > 0 violated (t = {t})")));
    }
    if !(t < 1.0 / p) {
        return Err(Error::ParameterDomain(format!(
            "t < 1/p violated (t = {t}, 1/p = {})",
            1.0 / p
        )));
    }
    if !(t < alpha) {
        return Err(Error::ParameterDomain(format!(
            "t < alpha violated (t = {t}, alpha = {alpha})"
        )));
    }
    Ok(())
}

/// Evaluate the n-th root bound from prepared inputs:
/// [ D_b^{1/p} D_e^{1-1/p} sup_term ]^{1/n}.
pub fn nth_root_bound(inputs: &BoundInputs) -> f64 {
    let db = (inputs.d_begin as f64).powf(1.0 / inputs.p);
    let de = (inputs.d_end as f64).powf(1.0 - 1.0 / inputs.p);
    (db * de * inputs.sup_weight_term).powf(1.0 / inputs.n as f64)
}

/// Per-cylinder spectral data backing the L-infinity terms. For each
/// cylinder: (|det DT^n| lower, upper, smallest singular value). Affine
/// cylinders carry exact constants; 1D smooth ones grid-certified ranges.
#[derive(Debug, Clone)]
pub struct SpectraProfile {
    pub n: usize,
    pub d_begin: usize,
    pub d_end: usize,
    pub alpha: f64,
    pub sampled: bool,
    entries: Vec<(f64, f64, f64)>,
}

impl SpectraProfile {
    pub fn from_cylinders(map: &PiecewiseMap, cylinders: &[Cylinder], report: &ComplexityReport) -> SpectraProfile {
        let mut sampled = report.d_begin_cert != Certification::Exact
            || report.lambda_cert != Certification::Exact;
        let entries = cylinders
            .iter()
            .map(|c| {
                if matches!(c.composed, ComposedMap::Smooth1D { .. }) {
                    sampled = true;
                }
                let (lo, hi) = c.det_range();
                (lo, hi, c.min_expansion())
            })
            .collect();
        SpectraProfile {
            n: report.n,
            d_begin: report.d_begin,
            d_end: report.d_end,
            alpha: map.min_alpha(),
            sampled,
            entries,
        }
    }

    /// One pseudo-cylinder with the given data (for synthetic scenarios).
    pub fn synthetic(n: usize, d_begin: usize, d_end: usize, lambda_n: f64, det: f64) -> SpectraProfile {
        SpectraProfile {
            n,
            d_begin,
            d_end,
            alpha: 1.0,
            sampled: false,
            entries: vec![(det, det, lambda_n)],
        }
    }

    /// sup over cylinders of |det|^{1/p-1} sigma^{-t}, the Perron-Frobenius
    /// weight term of Corollary-style conditions. The exponent 1/p - 1 is
    /// negative, so the det lower bound maximizes the term.
    fn pf_sup_term(&self, p: f64, t: f64) -> f64 {
        self.entries
            .iter()
            .map(|&(det_lo, _, sigma)| det_lo.powf(1.0 / p - 1.0) * sigma.powf(-t))
            .fold(0.0, f64::max)
    }

    /// sup over cylinders of |det| sigma^{-1} with the PF weight folded in
    /// (g^(n)|det DT^n| = 1), i.e. sup sigma^{-1}.
    fn pf_bv_sup_term(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, _, sigma)| 1.0 / sigma)
            .fold(0.0, f64::max)
    }

    pub fn physical_value(&self, p: f64, t: f64) -> Result<f64> {
        check_parameters(p, t, self.alpha)?;
        let inputs = BoundInputs {
            n: self.n,
            d_begin: self.d_begin,
            d_end: self.d_end,
            lambda_n: self.entries.iter().map(|e| e.2).fold(f64::INFINITY, f64::min),
            sup_weight_term: self.pf_sup_term(p, t),
            p,
            t,
            alpha: self.alpha,
            dim: 0,
        };
        Ok(nth_root_bound(&inputs))
    }
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub value: f64,
    pub n: usize,
    pub d_begin: usize,
    pub d_end: usize,
    pub sup_weight_term: f64,
    /// Some part of the evaluation relied on grid sampling.
    pub sampled: bool,
}

fn custom_weight_sup_term(
    map: &PiecewiseMap,
    cylinders: &[Cylinder],
    det_pow: f64,
    t: f64,
    seed: u64,
) -> f64 {
    // g^(n), |det DT^n| and lambda_n evaluated along sampled orbits; the
    // per-cylinder sup of the pointwise product, then max over cylinders
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0B0D_CAFE);
    let mut best = 0.0f64;
    for c in cylinders {
        let sigma = c.min_expansion();
        let mut points: Vec<Vec<f64>> = Vec::with_capacity(33);
        if let Some((ctr, _)) = c.region.chebyshev_center() {
            points.push(ctr.to_vec());
        }
        for _ in 0..32 {
            if let Some(x) = c.region.sample(&mut rng, 64) {
                points.push(x);
            }
        }
        for x0 in points {
            let mut x = x0;
            let mut gprod = 1.0;
            let mut detprod = 1.0;
            for &i in &c.itinerary {
                gprod *= map.branch_weight(i, &x).abs();
                detprod *= map.branches()[i].det_at(&x).abs();
                x = map.branches()[i].apply(&x);
            }
            best = best.max(gprod * detprod.powf(det_pow) * sigma.powf(-t));
        }
    }
    best
}

/// Essential spectral radius bound on the Sobolev space H_p^t at the
/// report's n. The L-infinity term couples g^(n), |det DT^n|^{1/p} and
/// lambda_n^{-t} pointwise per cylinder before taking the sup (tighter
/// than the product of separate sups).
pub fn sobolev_radius_bound(
    map: &PiecewiseMap,
    cylinders: &[Cylinder],
    report: &ComplexityReport,
    p: f64,
    t: f64,
    seed: u64,
) -> Result<BoundReport> {
    check_parameters(p, t, map.min_alpha())?;
    let profile = SpectraProfile::from_cylinders(map, cylinders, report);
    let (sup, sampled) = match map.weight() {
        WeightKind::PerronFrobenius => (profile.pf_sup_term(p, t), profile.sampled),
        WeightKind::Custom(_) => (custom_weight_sup_term(map, cylinders, 1.0 / p, t, seed), true),
    };
    let inputs = BoundInputs {
        n: report.n,
        d_begin: report.d_begin,
        d_end: report.d_end,
        lambda_n: report.lambda_n,
        sup_weight_term: sup,
        p,
        t,
        alpha: map.min_alpha(),
        dim: map.dim(),
    };
    Ok(BoundReport {
        value: nth_root_bound(&inputs),
        n: report.n,
        d_begin: report.d_begin,
        d_end: report.d_end,
        sup_weight_term: sup,
        sampled,
    })
}

#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub bound: BoundReport,
    pub passes: bool,
}

/// The physical-measure condition: the Sobolev bound specialized to
/// g = 1/|det DT|; passes iff the value is < 1.
pub fn physical_condition(
    map: &PiecewiseMap,
    cylinders: &[Cylinder],
    report: &ComplexityReport,
    p: f64,
    t: f64,
) -> Result<ConditionReport> {
    check_parameters(p, t, map.min_alpha())?;
    let profile = SpectraProfile::from_cylinders(map, cylinders, report);
    let value = profile.physical_value(p, t)?;
    Ok(ConditionReport {
        bound: BoundReport {
            value,
            n: report.n,
            d_begin: report.d_begin,
            d_end: report.d_end,
            sup_weight_term: profile.pf_sup_term(p, t),
            sampled: profile.sampled,
        },
        passes: value < 1.0,
    })
}

/// BV essential-radius bound (D_n^b)^{1/n} || g^(n) |det DT^n| lambda_n^{-1} ||^{1/n};
/// requires every branch derivative to be Lipschitz (affine qualifies).
pub fn bv_radius_bound(
    map: &PiecewiseMap,
    cylinders: &[Cylinder],
    report: &ComplexityReport,
    seed: u64,
) -> Result<BoundReport> {
    if !map.lipschitz_derivative() {
        return Err(Error::ParameterDomain(
            "BV bound needs a Lipschitz derivative declaration (alpha = 1) on every branch".into(),
        ));
    }
    let profile = SpectraProfile::from_cylinders(map, cylinders, report);
    let (sup, sampled) = match map.weight() {
        WeightKind::PerronFrobenius => (profile.pf_bv_sup_term(), profile.sampled),
        WeightKind::Custom(_) => (custom_weight_sup_term(map, cylinders, 1.0, 1.0, seed), true),
    };
    let value = ((report.d_begin as f64) * sup).powf(1.0 / report.n as f64);
    Ok(BoundReport {
        value,
        n: report.n,
        d_begin: report.d_begin,
        d_end: report.d_end,
        sup_weight_term: sup,
        sampled,
    })
}

#[derive(Debug, Clone)]
pub struct CommutingReport {
    /// Smallest eigenvalue modulus over all branch matrices.
    pub lambda: f64,
    /// The essential-radius bound lambda^{-1}.
    pub bound: f64,
    /// Total number of polytope sides over the branch domains.
    pub k_sides: usize,
    /// Distinct matrix products at each word length 1..=n_max.
    pub distinct_products: Vec<usize>,
    /// J(n) = K * sum_{k<=n} distinct_products[k].
    pub j_table: Vec<usize>,
    /// Implied upper bound 2 J(n)^d on D_n^b.
    pub d_begin_upper: Vec<f64>,
}

/// Proposition-style bound for commuting affine families: lambda^{-1} with
/// lambda the smallest eigenvalue modulus, plus the polynomial J(n) count.
pub fn affine_commuting_bound(map: &PiecewiseMap, n_max: usize) -> Result<CommutingReport> {
    let mats: Vec<&crate::geometry::AffineMap> = map
        .branches()
        .iter()
        .filter_map(|b| match b {
            Branch::Affine(a) => Some(&a.map),
            Branch::Smooth1D(_) => None,
        })
        .collect();
    if mats.len() != map.branches().len() {
        return Err(Error::Invalid(
            "commuting-affine bound applies to fully affine maps".into(),
        ));
    }
    let defect = commutation_defect(&mats);
    if defect > 1e-9 {
        return Err(Error::NonCommuting { defect });
    }
    let lambda = mats
        .iter()
        .map(|m| m.min_eigenvalue_modulus())
        .fold(f64::INFINITY, f64::min);
    if lambda <= 1.0 {
        return Err(Error::ExpansionHypothesis(format!(
            "smallest eigenvalue modulus {lambda} is not > 1"
        )));
    }
    let k_sides: usize = map
        .branches()
        .iter()
        .map(|b| b.domain_polytope().halfspaces().len())
        .sum();

    // distinct matrices among the branches
    let mut distinct: Vec<DMatrix<f64>> = Vec::new();
    for m in &mats {
        if !distinct.iter().any(|d| matrices_close(d, &m.matrix)) {
            distinct.push(m.matrix.clone());
        }
    }
    // count distinct products per word length via exponent compositions
    // (commuting matrices: a product is determined by its factor multiset)
    let mut distinct_products = Vec::with_capacity(n_max);
    for k in 1..=n_max {
        let mut products: Vec<DMatrix<f64>> = Vec::new();
        for combo in compositions(k, distinct.len()) {
            let mut prod = DMatrix::identity(map.dim(), map.dim());
            for (idx, &count) in combo.iter().enumerate() {
                for _ in 0..count {
                    prod = &prod * &distinct[idx];
                }
            }
            if !products.iter().any(|p| matrices_close(p, &prod)) {
                products.push(prod);
            }
        }
        distinct_products.push(products.len());
    }
    let mut j_table = Vec::with_capacity(n_max);
    let mut acc = 0usize;
    for &c in &distinct_products {
        acc += c;
        j_table.push(k_sides * acc);
    }
    let d_begin_upper = j_table
        .iter()
        .map(|&j| 2.0 * (j as f64).powi(map.dim() as i32))
        .collect();
    Ok(CommutingReport {
        lambda,
        bound: 1.0 / lambda,
        k_sides,
        distinct_products,
        j_table,
        d_begin_upper,
    })
}

fn matrices_close(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    let scale = a.abs().max().max(b.abs().max()).max(1.0);
    (a - b).abs().max() <= 1e-9 * scale
}

/// All compositions of k into `parts` nonnegative integers.
fn compositions(k: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; parts];
    fn rec(k: usize, idx: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if idx + 1 == cur.len() {
            cur[idx] = k;
            out.push(cur.clone());
            return;
        }
        for v in 0..=k {
            cur[idx] = v;
            rec(k - v, idx + 1, cur, out);
        }
    }
    if parts > 0 {
        rec(k, 0, &mut cur, &mut out);
    }
    out
}

/// Unit-ball volume in R^d: gamma_0 = 1, gamma_1 = 2, gamma_d = 2 pi gamma_{d-2} / d.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI * unit_ball_volume(d - 2) / d as f64,
    }
}

/// Saussol's one-step oscillation-space bound
/// lambda^{-alpha} + 4 gamma_d D_1^b / ((lambda - 1) gamma_{d-1}).
pub fn saussol_bound(lambda_1: f64, d1b: usize, dim: usize, alpha: f64) -> Result<f64> {
    if lambda_1 <= 1.0 {
        return Err(Error::ExpansionHypothesis(format!(
            "saussol bound needs lambda_1 > 1 (got {lambda_1})"
        )));
    }
    if dim < 1 {
        return Err(Error::Invalid("dimension must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::ParameterDomain(format!("alpha {alpha} outside (0, 1]")));
    }
    Ok(lambda_1.powf(-alpha)
        + 4.0 * unit_ball_volume(dim) * d1b as f64
            / ((lambda_1 - 1.0) * unit_ball_volume(dim - 1)))
}

#[derive(Debug, Clone)]
pub struct SaussolIterated {
    pub value: f64,
    /// lambda_n^{-1/n} (D_n^b)^{1/n} at n_max.
    pub component_complexity: f64,
    /// lambda_n^{-alpha/n} at n_max.
    pub component_alpha: f64,
    /// (n, component_complexity, component_alpha) for every computed n.
    pub per_n: Vec<(usize, f64, f64)>,
}

/// Iterated Saussol estimate: sup of the two running-limit components,
/// reported at the largest computed n.
pub fn saussol_iterated_bound(reports: &[ComplexityReport], alpha: f64) -> Result<SaussolIterated> {
    if reports.is_empty() {
        return Err(Error::Invalid("need at least one complexity report".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::ParameterDomain(format!("alpha {alpha} outside (0, 1]")));
    }
    let mut per_n = Vec::with_capacity(reports.len());
    for r in reports {
        let n = r.n as f64;
        let c1 = (r.d_begin as f64).powf(1.0 / n) * r.lambda_n.powf(-1.0 / n);
        let c2 = r.lambda_n.powf(-alpha / n);
        per_n.push((r.n, c1, c2));
    }
    let &(_, c1, c2) = per_n.last().unwrap();
    Ok(SaussolIterated {
        value: c1.max(c2),
        component_complexity: c1,
        component_alpha: c2,
        per_n,
    })
}

pub const SEARCH_T_GRID: [f64; 19] = [
    0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75,
    0.80, 0.85, 0.90, 0.95,
];
pub const SEARCH_P_GRID: [f64; 15] = [
    1.05, 1.1, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 16.0,
];

#[derive(Debug, Clone, Copy)]
pub struct SearchHit {
    pub p: f64,
    pub t: f64,
    pub value: f64,
}

/// Grid search for (p, t) making the physical-measure condition pass;
/// returns the minimizing pair or None when the whole grid fails.
pub fn search_parameters(profile: &SpectraProfile) -> Option<SearchHit> {
    let mut best: Option<SearchHit> = None;
    for &p in &SEARCH_P_GRID {
        for &t in &SEARCH_T_GRID {
            if t >= 1.0 / p || t >= profile.alpha {
                continue;
            }
            let value = match profile.physical_value(p, t) {
                Ok(v) => v,
                Err(_) => continue,
            };
            if best.map(|b| value < b.value).unwrap_or(true) {
                best = Some(SearchHit { p, t, value });
            }
        }
    }
    best.filter(|b| b.value < 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexity::{refine, report, ComplexityOptions};
    use crate::presets;
    use approx::assert_relative_eq;

    fn doubling_at(n: usize) -> (crate::map::PiecewiseMap, Vec<Cylinder>, ComplexityReport) {
        let map = presets::doubling();
        let opts = ComplexityOptions::default();
        let cyls = refine(&map, n, &opts).unwrap();
        let rep = report(&map, &cyls, &opts).unwrap();
        (map, cyls, rep)
    }

    #[test]
    fn doubling_physical_condition_matches_hand_value() {
        let (map, cyls, rep) = doubling_at(8);
        let c = physical_condition(&map, &cyls, &rep, 2.0, 0.4).unwrap();
        // 2^{1/16 - 0.4}
        assert_relative_eq!(c.bound.value, (2.0f64).powf(1.0 / 16.0 - 0.4), epsilon = 1e-12);
        assert!(c.passes);
    }

    #[test]
    fn sobolev_equals_physical_for_pf_weight() {
        let (map, cyls, rep) = doubling_at(6);
        let s = sobolev_radius_bound(&map, &cyls, &rep, 2.0, 0.4, 0).unwrap();
        let c = physical_condition(&map, &cyls, &rep, 2.0, 0.4).unwrap();
        assert_relative_eq!(s.value, c.bound.value, epsilon = 1e-12);
    }

    #[test]
    fn parameter_domain_errors_name_inequality() {
        let (map, cyls, rep) = doubling_at(3);
        let err = physical_condition(&map, &cyls, &rep, 2.0, 0.6).unwrap_err();
        assert!(err.to_string().contains("t < 1/p"));
        let err = physical_condition(&map, &cyls, &rep, 0.9, 0.1).unwrap_err();
        assert!(err.to_string().contains("p > 1"));
    }

    #[test]
    fn bv_bound_doubling_n10() {
        let (map, cyls, rep) = doubling_at(10);
        let b = bv_radius_bound(&map, &cyls, &rep, 0).unwrap();
        assert_relative_eq!(b.value, (2.0f64).powf(0.1) / 2.0, epsilon = 1e-12);
        assert!(b.value > 0.53 && b.value < 0.54);
    }

    #[test]
    fn bv_is_p1_t1_limit_of_sobolev() {
        let (map, cyls, rep) = doubling_at(8);
        let bv = bv_radius_bound(&map, &cyls, &rep, 0).unwrap().value;
        let p = 1.0001;
        let t = 0.9999 / p;
        let profile = SpectraProfile::from_cylinders(&map, &cyls, &rep);
        let sob = profile.physical_value(p, t).unwrap();
        assert!((sob - bv).abs() / bv < 0.01, "sob {sob} bv {bv}");
    }

    #[test]
    fn sobolev_monotone_in_t() {
        let (map, cyls, rep) = doubling_at(6);
        let profile = SpectraProfile::from_cylinders(&map, &cyls, &rep);
        let mut prev = f64::INFINITY;
        for &t in &[0.1, 0.2, 0.3, 0.4, 0.45] {
            let v = profile.physical_value(2.0, t).unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn synthetic_slow_map_fails() {
        // lambda_n^{1/n} = 1.01, D_n^b = D_n^e = 2^n at n = 6
        let profile = SpectraProfile::synthetic(6, 64, 64, 1.01f64.powi(6), 1.01f64.powi(6));
        let v = profile.physical_value(2.0, 0.4).unwrap();
        assert!(v > 1.0);
        assert!(search_parameters(&profile).is_none());
    }

    #[test]
    fn trivial_complexity_bound() {
        // one bijective expanding pseudo-cylinder: bound = (lambda^{-t} |det|^{1/p-1})^{1/n}
        let profile = SpectraProfile::synthetic(4, 1, 1, 16.0, 16.0);
        let v = profile.physical_value(2.0, 0.4).unwrap();
        assert_relative_eq!(v, (16.0f64.powf(-0.4) * 16.0f64.powf(-0.5)).powf(0.25), epsilon = 1e-12);
    }

    #[test]
    fn search_finds_passing_pair_on_doubling() {
        let (map, cyls, rep) = doubling_at(6);
        let profile = SpectraProfile::from_cylinders(&map, &cyls, &rep);
        let hit = search_parameters(&profile).expect("doubling passes");
        assert!(hit.value < 0.8, "{hit:?}");
        assert!(hit.t < 1.0 / hit.p);
    }

    #[test]
    fn commuting_bound_quadrant() {
        let map = presets::quadrant();
        let rep = affine_commuting_bound(&map, 6).unwrap();
        assert_relative_eq!(rep.lambda, 2.0, epsilon = 1e-12);
        assert_relative_eq!(rep.bound, 0.5, epsilon = 1e-12);
        assert_eq!(rep.k_sides, 16);
        // single distinct matrix: one product per length, J(n) = 16 n
        assert!(rep.distinct_products.iter().all(|&c| c == 1));
        assert_eq!(rep.j_table, vec![16, 32, 48, 64, 80, 96]);
    }

    #[test]
    fn commuting_bound_two_matrices() {
        let map = presets::two_commuting();
        let rep = affine_commuting_bound(&map, 5).unwrap();
        assert_relative_eq!(rep.lambda, 2.0, epsilon = 1e-12);
        // diag(2,4)^a diag(4,2)^b distinct per (a, b): k+1 products at length k
        assert_eq!(rep.distinct_products, vec![2, 3, 4, 5, 6]);
        assert_eq!(rep.k_sides, 32);
    }

    #[test]
    fn commuting_bound_slopes_2_and_3() {
        let map = crate::map::PiecewiseMap::new(
            vec![
                presets::affine_branch_1d(0.0, 0.5, 2.0, 0.0),
                presets::affine_branch_1d(0.5, 5.0 / 6.0, 3.0, -1.5),
                presets::affine_branch_1d(5.0 / 6.0, 1.0, 3.0, -2.5),
            ],
            crate::map::Ambient::from_box(&[(0.0, 1.0)]),
            crate::map::WeightKind::PerronFrobenius,
        )
        .unwrap();
        let rep = affine_commuting_bound(&map, 4).unwrap();
        assert_relative_eq!(rep.lambda, 2.0);
        assert_relative_eq!(rep.bound, 0.5);
        // 2^a 3^b all distinct: k+1 per length
        assert_eq!(rep.distinct_products, vec![2, 3, 4, 5]);
    }

    #[test]
    fn non_commuting_rejected() {
        let rot = crate::geometry::affine_from_parts(
            vec![vec![0.0, -2.0], vec![2.0, 0.0]],
            vec![0.0, 0.0],
        )
        .unwrap();
        let shear = crate::geometry::affine_from_parts(
            vec![vec![2.0, 1.0], vec![0.0, 2.0]],
            vec![0.0, 0.0],
        )
        .unwrap();
        let branches = vec![
            Branch::Affine(crate::map::AffineBranch {
                domain: crate::geometry::Polytope::from_box(&[(0.0, 0.5), (0.0, 0.5)]),
                map: rot,
            }),
            Branch::Affine(crate::map::AffineBranch {
                domain: crate::geometry::Polytope::from_box(&[(0.5, 1.0), (0.0, 0.5)]),
                map: shear,
            }),
        ];
        let map = crate::map::PiecewiseMap::new(
            branches,
            crate::map::Ambient::from_box(&[(0.0, 1.0), (0.0, 1.0)]),
            crate::map::WeightKind::PerronFrobenius,
        )
        .unwrap();
        match affine_commuting_bound(&map, 3) {
            Err(Error::NonCommuting { .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn saussol_values() {
        assert_relative_eq!(saussol_bound(2.0, 2, 1, 1.0).unwrap(), 16.5, epsilon = 1e-12);
        let v = saussol_bound(10.0, 2, 2, 1.0).unwrap();
        assert_relative_eq!(v, 0.1 + 8.0 * std::f64::consts::PI / 18.0, epsilon = 1e-12);
        assert!(saussol_bound(1.0, 2, 1, 1.0).is_err());
        // lambda -> infinity: both terms vanish
        assert!(saussol_bound(1e9, 2, 1, 1.0).unwrap() < 1e-6);
    }

    #[test]
    fn unit_ball_volumes() {
        assert_relative_eq!(unit_ball_volume(2), std::f64::consts::PI, epsilon = 1e-12);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * std::f64::consts::PI / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn saussol_iterated_doubling() {
        let map = presets::doubling();
        let opts = ComplexityOptions::default();
        let mut reports = Vec::new();
        for cyls in crate::complexity::refine_levels(&map, 10, &opts).unwrap() {
            reports.push(report(&map, &cyls, &opts).unwrap());
        }
        let s = saussol_iterated_bound(&reports, 1.0).unwrap();
        assert_relative_eq!(s.value, 2.0f64.powf(0.1) / 2.0, epsilon = 1e-9);
        let s_half = saussol_iterated_bound(&reports, 0.5).unwrap();
        assert_relative_eq!(s_half.value, 2.0f64.powf(-0.5), epsilon = 1e-9);
        // the sup dominates both components at every n
        for &(_, c1, c2) in &s.per_n {
            assert!(s.per_n.last().unwrap().1.max(s.per_n.last().unwrap().2) >= 0.0);
            let sup = c1.max(c2);
            assert!(sup >= c1 && sup >= c2);
        }
    }

    #[test]
    fn all_bound_values_positive_and_flags_consistent() {
        let (map, cyls, rep) = doubling_at(5);
        for &(p, t) in &[(1.5, 0.3), (2.0, 0.45), (4.0, 0.2)] {
            let c = physical_condition(&map, &cyls, &rep, p, t).unwrap();
            assert!(c.bound.value > 0.0);
            assert_eq!(c.passes, c.bound.value < 1.0);
        }
    }
}
