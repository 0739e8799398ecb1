//! Bundled example maps. Each anchors at least one acceptance property:
//! doubling and tripling (interval benchmarks), a 3-branch Markov map with
//! a known piecewise-constant invariant density, the quadrant map and a
//! two-matrix commuting family (polynomial complexity), a disconnected
//! two-interval doubling (two ergodic components), a period-2 swap map
//! (peripheral eigenvalue -1), and a smooth perturbed doubling.

use crate::expr::Expr;
use crate::geometry::{affine_from_parts, Interval, Polytope};
use crate::map::{Ambient, Branch, PiecewiseMap, SmoothBranch1D, WeightKind};

pub fn affine_branch_1d(lo: f64, hi: f64, slope: f64, offset: f64) -> Branch {
    Branch::Affine(crate::map::AffineBranch {
        domain: Polytope::interval(lo, hi),
        map: affine_from_parts(vec![vec![slope]], vec![offset]).expect("1x1 affine"),
    })
}

pub fn affine_branch_2d(
    bounds: [(f64, f64); 2],
    diag: [f64; 2],
    offset: [f64; 2],
) -> Branch {
    Branch::Affine(crate::map::AffineBranch {
        domain: Polytope::from_box(&bounds),
        map: affine_from_parts(
            vec![vec![diag[0], 0.0], vec![0.0, diag[1]]],
            offset.to_vec(),
        )
        .expect("2x2 affine"),
    })
}

/// T(x) = 2x mod 1 on [0, 1].
pub fn doubling() -> PiecewiseMap {
    PiecewiseMap::new(
        vec![
            affine_branch_1d(0.0, 0.5, 2.0, 0.0),
            affine_branch_1d(0.5, 1.0, 2.0, -1.0),
        ],
        Ambient::from_box(&[(0.0, 1.0)]),
        WeightKind::PerronFrobenius,
    )
    .expect("doubling map")
}

/// T(x) = 3x mod 1 on [0, 1].
pub fn tripling() -> PiecewiseMap {
    PiecewiseMap::new(
        vec![
            affine_branch_1d(0.0, 1.0 / 3.0, 3.0, 0.0),
            affine_branch_1d(1.0 / 3.0, 2.0 / 3.0, 3.0, -1.0),
            affine_branch_1d(2.0 / 3.0, 1.0, 3.0, -2.0),
        ],
        Ambient::from_box(&[(0.0, 1.0)]),
        WeightKind::PerronFrobenius,
    )
    .expect("tripling map")
}

/// Markov map with branch images [0,1], [0,1/2], [0,1]; its invariant
/// density is 6/5 on [0,1/2] and 4/5 on [1/2,1].
pub fn markov3() -> PiecewiseMap {
    PiecewiseMap::new(
        vec![
            affine_branch_1d(0.0, 0.5, 2.0, 0.0),
            affine_branch_1d(0.5, 0.75, 2.0, -1.0),
            affine_branch_1d(0.75, 1.0, 4.0, -3.0),
        ],
        Ambient::from_box(&[(0.0, 1.0)]),
        WeightKind::PerronFrobenius,
    )
    .expect("markov3 map")
}

/// 2x mod 1 on the unit square: 2*Identity on the four quadrant squares.
pub fn quadrant() -> PiecewiseMap {
    PiecewiseMap::new(
        vec![
            affine_branch_2d([(0.0, 0.5), (0.0, 0.5)], [2.0, 2.0], [0.0, 0.0]),
            affine_branch_2d([(0.5, 1.0), (0.0, 0.5)], [2.0, 2.0], [-1.0, 0.0]),
            affine_branch_2d([(0.0, 0.5), (0.5, 1.0)], [2.0, 2.0], [0.0, -1.0]),
            affine_branch_2d([(0.5, 1.0), (0.5, 1.0)], [2.0, 2.0], [-1.0, -1.0]),
        ],
        Ambient::from_box(&[(0.0, 1.0), (0.0, 1.0)]),
        WeightKind::PerronFrobenius,
    )
    .expect("quadrant map")
}

/// Two commuting matrices diag(2,4) and diag(4,2) on an 8-piece partition
/// of the unit square; every branch image is the full square.
pub fn two_commuting() -> PiecewiseMap {
    let mut branches = Vec::new();
    for k in 0..4 {
        let y0 = k as f64 / 4.0;
        branches.push(affine_branch_2d(
            [(0.0, 0.5), (y0, y0 + 0.25)],
            [2.0, 4.0],
            [0.0, -(k as f64)],
        ));
    }
    for j in 0..2 {
        let x0 = 0.5 + j as f64 / 4.0;
        for r in 0..2 {
            let y0 = r as f64 / 2.0;
            branches.push(affine_branch_2d(
                [(x0, x0 + 0.25), (y0, y0 + 0.5)],
                [4.0, 2.0],
                [-(2.0 + j as f64), -(r as f64)],
            ));
        }
    }
    PiecewiseMap::new(
        branches,
        Ambient::from_box(&[(0.0, 1.0), (0.0, 1.0)]),
        WeightKind::PerronFrobenius,
    )
    .expect("two-commuting map")
}

/// Doubling on [0,1] and an independent copy on [2,3] (disconnected ambient).
pub fn disconnected_doubling() -> PiecewiseMap {
    PiecewiseMap::new(
        vec![
            affine_branch_1d(0.0, 0.5, 2.0, 0.0),
            affine_branch_1d(0.5, 1.0, 2.0, -1.0),
            affine_branch_1d(2.0, 2.5, 2.0, -2.0),
            affine_branch_1d(2.5, 3.0, 2.0, -3.0),
        ],
        Ambient::new(vec![
            Polytope::interval(0.0, 1.0),
            Polytope::interval(2.0, 3.0),
        ])
        .expect("two intervals"),
        WeightKind::PerronFrobenius,
    )
    .expect("disconnected doubling map")
}

/// Four slope-2 branches arranged so T([0,1/2]) = [1/2,1] and
/// T([1/2,1]) = [0,1/2]: the transfer operator has peripheral spectrum
/// {1, -1} and the physical measure splits into a 2-cycle.
pub fn swap_period2() -> PiecewiseMap {
    PiecewiseMap::new(
        vec![
            affine_branch_1d(0.0, 0.25, 2.0, 0.5),
            affine_branch_1d(0.25, 0.5, 2.0, 0.0),
            affine_branch_1d(0.5, 0.75, 2.0, -1.0),
            affine_branch_1d(0.75, 1.0, 2.0, -1.5),
        ],
        Ambient::from_box(&[(0.0, 1.0)]),
        WeightKind::PerronFrobenius,
    )
    .expect("period-2 swap map")
}

/// Smooth non-affine doubling variant T(x) = 2x + 0.1 sin(2 pi x) mod 1,
/// uniformly expanding with derivative in [2 - 0.2 pi, 2 + 0.2 pi].
pub fn perturbed_doubling() -> PiecewiseMap {
    let deriv = "2 + 0.2*pi*cos(2*pi*x)";
    PiecewiseMap::new(
        vec![
            Branch::Smooth1D(SmoothBranch1D {
                domain: Interval::new(0.0, 0.5),
                forward: Expr::parse("2*x + 0.1*sin(2*pi*x)").unwrap(),
                derivative: Expr::parse(deriv).unwrap(),
                alpha: 1.0,
            }),
            Branch::Smooth1D(SmoothBranch1D {
                domain: Interval::new(0.5, 1.0),
                forward: Expr::parse("2*x - 1 + 0.1*sin(2*pi*x)").unwrap(),
                derivative: Expr::parse(deriv).unwrap(),
                alpha: 1.0,
            }),
        ],
        Ambient::from_box(&[(0.0, 1.0)]),
        WeightKind::PerronFrobenius,
    )
    .expect("perturbed doubling map")
}

/// All bundled maps with their names, in a fixed order.
pub fn all() -> Vec<(&'static str, PiecewiseMap)> {
    vec![
        ("doubling", doubling()),
        ("tripling", tripling()),
        ("markov3", markov3()),
        ("quadrant", quadrant()),
        ("two_commuting", two_commuting()),
        ("disconnected_doubling", disconnected_doubling()),
        ("swap_period2", swap_period2()),
        ("perturbed_doubling", perturbed_doubling()),
    ]
}
