//! Ulam discretization of the transfer operator L_g and its spectrum.
//!
//! Matrix convention: densities are column vectors and M acts on densities;
//! entry M[j, i] is the g |det DT|-weighted fraction of cell i mapping into
//! cell j, so for g = 1/|det DT| the columns of fully-covered source cells
//! sum to 1 (the discrete form of mass conservation under the duality
//! <u, f o T> = <L u, f>).
//!
//! Assembly is exact for affine maps (cell intersection volumes via
//! polytope arithmetic) and seeded Monte Carlo otherwise. The spectrum is
//! solved densely up to 2048 cells and by Arnoldi iteration above.

use crate::error::{Error, Result};
use crate::geometry::{affine_image, intersect, Polytope};
use crate::grid::{Grid, GridFunction};
use crate::map::{ApplyOutcome, Branch, PiecewiseMap, WeightKind};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Largest cell count solved with a dense eigendecomposition.
pub const DENSE_EIG_LIMIT: usize = 2048;
/// Peripheral eigenvalues: modulus above 1 - this tolerance.
pub const PERIPHERAL_TOL: f64 = 1e-6;
/// Root-of-unity search cap for the peripheral group.
pub const ROOT_ORDER_CAP: usize = 64;

#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    rows: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    fn from_columns(n: usize, cols: Vec<Vec<(u32, f64)>>) -> SparseMatrix {
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        col_ptr.push(0);
        for mut col in cols {
            col.sort_by_key(|e| e.0);
            let mut merged: Vec<(u32, f64)> = Vec::with_capacity(col.len());
            for (r, v) in col {
                match merged.last_mut() {
                    Some(last) if last.0 == r => last.1 += v,
                    _ => merged.push((r, v)),
                }
            }
            for (r, v) in merged {
                if v != 0.0 {
                    rows.push(r);
                    vals.push(v);
                }
            }
            col_ptr.push(rows.len());
        }
        SparseMatrix { n, col_ptr, rows, vals }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.rows[k] as usize] += self.vals[k] * xj;
            }
        }
        y
    }

    pub fn matvec_complex(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.n];
        for j in 0..self.n {
            let xj = x[j];
            if xj.norm_sqr() == 0.0 {
                continue;
            }
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.rows[k] as usize] += self.vals[k] * xj;
            }
        }
        y
    }

    pub fn col_sum(&self, j: usize) -> f64 {
        (self.col_ptr[j]..self.col_ptr[j + 1])
            .map(|k| self.vals[k])
            .sum()
    }

    /// l1-induced operator norm (max column sum of absolute values); an
    /// upper bound for the spectral radius.
    pub fn norm_l1(&self) -> f64 {
        (0..self.n)
            .map(|j| {
                (self.col_ptr[j]..self.col_ptr[j + 1])
                    .map(|k| self.vals[k].abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.vals.iter().copied().fold(0.0, f64::min)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                m[(self.rows[k] as usize, j)] = self.vals[k];
            }
        }
        m
    }

    /// (row, col, value) triplets in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |j| {
            (self.col_ptr[j]..self.col_ptr[j + 1])
                .map(move |k| (self.rows[k] as usize, j, self.vals[k]))
        })
    }

    /// Entries of column j as (row, value) pairs.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |k| (self.rows[k] as usize, self.vals[k]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AssemblyKind {
    ExactAffine,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct UlamOperator {
    grid: Grid,
    matrix: SparseMatrix,
    weight: WeightKind,
    assembly: AssemblyKind,
    active: Vec<bool>,
    /// Max |column sum - 1| over fully covered columns (PF weight).
    pub column_defect: f64,
}

impl UlamOperator {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn assembly(&self) -> &AssemblyKind {
        &self.assembly
    }

    pub fn weight(&self) -> &WeightKind {
        &self.weight
    }

    pub fn is_active(&self, cell: usize) -> bool {
        self.active[cell]
    }

    pub fn active_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.grid.total_cells()).filter(|&c| self.active[c])
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    /// Density supported uniformly on the active cells, mass 1.
    pub fn uniform_density(&self) -> GridFunction {
        let n = self.grid.total_cells();
        let active = self.active_count();
        let v = 1.0 / (active as f64 * self.grid.cell_volume());
        let values = (0..n).map(|c| if self.active[c] { v } else { 0.0 }).collect();
        GridFunction { grid: self.grid.clone(), values }
    }
}

/// Assemble the Ulam matrix of `map` on `grid`.
pub fn assemble(map: &PiecewiseMap, grid: &Grid, kind: AssemblyKind) -> Result<UlamOperator> {
    map.require_accepted()?;
    if grid.dim() != map.dim() {
        return Err(Error::DimensionMismatch { left: grid.dim(), right: map.dim() });
    }
    match kind {
        AssemblyKind::ExactAffine => {
            if !map.is_affine() {
                return Err(Error::Invalid(
                    "exact_affine assembly needs an all-affine map; use monte_carlo".into(),
                ));
            }
            assemble_exact(map, grid)
        }
        AssemblyKind::MonteCarlo { samples, seed } => assemble_mc(map, grid, samples, seed),
    }
}

fn coverage_and_activity(map: &PiecewiseMap, grid: &Grid) -> Result<(Vec<f64>, Vec<bool>)> {
    let n = grid.total_cells();
    let cell_vol = grid.cell_volume();
    let domains: Vec<Polytope> = map.branches().iter().map(Branch::domain_polytope).collect();
    let mut coverage = vec![0.0; n];
    for dom in &domains {
        let bb = dom.bounding_box().ok_or(Error::Unbounded)?;
        for cell in cells_overlapping(grid, bb) {
            let cell_poly = Polytope::from_box(&grid.cell_bounds(cell));
            coverage[cell] += intersect(&cell_poly, dom)?.volume()? / cell_vol;
        }
    }
    let active = coverage.iter().map(|&c| c > 1e-9).collect();
    Ok((coverage, active))
}

fn cells_overlapping(grid: &Grid, bb: &[(f64, f64)]) -> Vec<usize> {
    let dim = grid.dim();
    let gb = grid.bounds();
    let n = grid.n_per_axis() as isize;
    let mut ranges = Vec::with_capacity(dim);
    for k in 0..dim {
        let w = grid.cell_width(k);
        let lo = (((bb[k].0 - gb[k].0) / w).floor() as isize).clamp(0, n - 1);
        let hi = (((bb[k].1 - gb[k].0) / w).ceil() as isize - 1).clamp(0, n - 1);
        if hi < lo {
            return Vec::new();
        }
        ranges.push((lo as usize, hi as usize));
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        out.push(grid.flat_index(&idx));
        let mut k = 0;
        loop {
            if k == dim {
                return out;
            }
            idx[k] += 1;
            if idx[k] <= ranges[k].1 {
                break;
            }
            idx[k] = ranges[k].0;
            k += 1;
        }
    }
}

fn assemble_exact(map: &PiecewiseMap, grid: &Grid) -> Result<UlamOperator> {
    let n = grid.total_cells();
    let cell_vol = grid.cell_volume();
    let (coverage, active) = coverage_and_activity(map, grid)?;
    let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];

    for (bi, branch) in map.branches().iter().enumerate() {
        let b = match branch {
            Branch::Affine(b) => b,
            Branch::Smooth1D(_) => unreachable!("checked all-affine"),
        };
        let det = b.map.det().abs();
        let dom_bb = b.domain.bounding_box().ok_or(Error::Unbounded)?;
        for i in cells_overlapping(grid, dom_bb) {
            let cell_poly = Polytope::from_box(&grid.cell_bounds(i));
            let piece = intersect(&cell_poly, &b.domain)?;
            if piece.is_empty() {
                continue;
            }
            let gval = match map.weight() {
                WeightKind::PerronFrobenius => 1.0 / det,
                WeightKind::Custom(_) => {
                    let (c, _) = piece.chebyshev_center().expect("nonempty piece");
                    map.branch_weight(bi, c)
                }
            };
            let image = affine_image(&piece, &b.map)?;
            let img_bb = image.bounding_box().ok_or(Error::Unbounded)?;
            for j in cells_overlapping(grid, img_bb) {
                let target = Polytope::from_box(&grid.cell_bounds(j));
                let vol = intersect(&image, &target)?.volume()?;
                if vol <= 0.0 {
                    continue;
                }
                // weight integral over the source piece mapping into cell j:
                // g |det DT| * (vol / |det|) , divided by the target volume
                let w = gval * vol / cell_vol;
                cols[i].push((j as u32, w));
            }
        }
    }

    finish_assembly(map, grid, cols, coverage, active, AssemblyKind::ExactAffine)
}

fn assemble_mc(map: &PiecewiseMap, grid: &Grid, samples: usize, seed: u64) -> Result<UlamOperator> {
    if samples == 0 {
        return Err(Error::Invalid("monte_carlo assembly needs samples >= 1".into()));
    }
    let n = grid.total_cells();
    let (coverage, active) = coverage_and_activity(map, grid)?;
    let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        if !active[i] {
            continue;
        }
        // per-cell generator keeps the assembly independent of cell order
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9));
        let bounds = grid.cell_bounds(i);
        let mut acc: std::collections::BTreeMap<u32, f64> = std::collections::BTreeMap::new();
        for _ in 0..samples {
            let x: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
            let bi = match map.branch_containing(&x, 0.0) {
                Some(b) => b,
                None => continue,
            };
            let y = map.branches()[bi].apply(&x);
            let j = match grid.cell_of(&y) {
                Some(j) => j,
                None => continue,
            };
            let w = match map.weight() {
                WeightKind::PerronFrobenius => 1.0,
                WeightKind::Custom(_) => {
                    map.branch_weight(bi, &x) * map.branches()[bi].det_at(&x).abs()
                }
            };
            *acc.entry(j as u32).or_insert(0.0) += w;
        }
        for (j, total) in acc {
            cols[i].push((j, total / samples as f64));
        }
    }
    finish_assembly(map, grid, cols, coverage, active, AssemblyKind::MonteCarlo { samples, seed })
}

fn finish_assembly(
    map: &PiecewiseMap,
    grid: &Grid,
    cols: Vec<Vec<(u32, f64)>>,
    coverage: Vec<f64>,
    active: Vec<bool>,
    assembly: AssemblyKind,
) -> Result<UlamOperator> {
    let n = grid.total_cells();
    let matrix = SparseMatrix::from_columns(n, cols);
    let mut column_defect = 0.0f64;
    if matches!(map.weight(), WeightKind::PerronFrobenius) {
        for j in 0..n {
            if coverage[j] >= 1.0 - 1e-9 {
                column_defect = column_defect.max((matrix.col_sum(j) - 1.0).abs());
            }
        }
    }
    Ok(UlamOperator {
        grid: grid.clone(),
        matrix,
        weight: map.weight().clone(),
        assembly,
        active,
        column_defect,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpectralMethod {
    Dense,
    Arnoldi { subspace: usize, residual: f64 },
}

#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// Top-k eigenvalues sorted by modulus (then by real/imag part) descending.
    pub eigenvalues: Vec<Complex64>,
    /// 1 - |second distinct modulus|.
    pub gap: f64,
    /// |lambda_max - 1|.
    pub leading_deviation: f64,
    /// Eigenvalues of modulus > 1 - 1e-6, clustered with multiplicities.
    pub peripheral: Vec<(Complex64, usize)>,
    /// Least N <= 64 with |gamma^N - 1| < 1e-6 for all peripheral gamma.
    pub root_of_unity_order: Option<usize>,
    /// (predicted essential bound, measured second modulus), set by callers
    /// that have complexity data at hand.
    pub essential_bound_comparison: Option<(f64, f64)>,
    pub method: SpectralMethod,
}

fn sort_eigs(eigs: &mut [Complex64]) {
    eigs.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal))
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

fn build_report(mut eigs: Vec<Complex64>, k: usize, method: SpectralMethod) -> SpectralReport {
    sort_eigs(&mut eigs);
    let peripheral_all: Vec<Complex64> = eigs
        .iter()
        .copied()
        .filter(|z| z.norm() > 1.0 - PERIPHERAL_TOL)
        .collect();
    // cluster peripheral eigenvalues within the tolerance
    let mut peripheral: Vec<(Complex64, usize)> = Vec::new();
    for z in peripheral_all {
        match peripheral
            .iter_mut()
            .find(|(w, _)| (z - *w).norm() < PERIPHERAL_TOL)
        {
            Some((_, count)) => *count += 1,
            None => peripheral.push((z, 1)),
        }
    }
    let root_of_unity_order = (1..=ROOT_ORDER_CAP).find(|&order| {
        !peripheral.is_empty()
            && peripheral
                .iter()
                .all(|(z, _)| (z.powu(order as u32) - Complex64::new(1.0, 0.0)).norm() < PERIPHERAL_TOL)
    });
    let m1 = eigs.first().map(|z| z.norm()).unwrap_or(0.0);
    let m2 = eigs
        .iter()
        .map(|z| z.norm())
        .find(|&m| m < m1 - 1e-9)
        .unwrap_or(0.0);
    let leading_deviation = eigs
        .first()
        .map(|z| (z - Complex64::new(1.0, 0.0)).norm())
        .unwrap_or(1.0);
    SpectralReport {
        eigenvalues: eigs.into_iter().take(k).collect(),
        gap: 1.0 - m2,
        leading_deviation,
        peripheral,
        root_of_unity_order,
        essential_bound_comparison: None,
        method,
    }
}

/// Top-k spectrum: dense Schur up to 2048 cells, Arnoldi above.
pub fn spectrum(op: &UlamOperator, k: usize) -> Result<SpectralReport> {
    if k < 2 {
        return Err(Error::Invalid("spectrum needs k >= 2".into()));
    }
    let n = op.matrix.size();
    if n <= DENSE_EIG_LIMIT {
        let eigs = op.matrix.to_dense().complex_eigenvalues();
        return Ok(build_report(eigs.iter().copied().collect(), k, SpectralMethod::Dense));
    }
    arnoldi_spectrum(&op.matrix, k)
}

fn arnoldi_spectrum(m: &SparseMatrix, k: usize) -> Result<SpectralReport> {
    let n = m.size();
    let mut subspace = (4 * k).max(40).min(n);
    let mut last_ritz: Option<Vec<Complex64>> = None;
    loop {
        let (ritz, breakdown) = arnoldi_ritz(m, subspace)?;
        if breakdown {
            return Ok(build_report(
                ritz,
                k,
                SpectralMethod::Arnoldi { subspace, residual: 0.0 },
            ));
        }
        if let Some(prev) = &last_ritz {
            let drift = ritz_drift(prev, &ritz, k);
            if drift < 1e-9 {
                return Ok(build_report(
                    ritz,
                    k,
                    SpectralMethod::Arnoldi { subspace, residual: drift },
                ));
            }
            if subspace >= n.min(400) {
                return Err(Error::NonConvergence { residual: drift });
            }
        }
        last_ritz = Some(ritz);
        subspace = (subspace * 2).min(n.min(400)).max(subspace + 10);
    }
}

/// One Arnoldi pass of given subspace size with a fixed seeded start
/// vector; returns Ritz values and whether the Krylov space closed early
/// (breakdown: the Ritz values are then exact eigenvalues).
fn arnoldi_ritz(m: &SparseMatrix, subspace: usize) -> Result<(Vec<Complex64>, bool)> {
    let n = m.size();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA4_0_1D1);
    let mut v0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = v0.iter().map(|x| x * x).sum::<f64>().sqrt();
    v0.iter_mut().for_each(|x| *x /= norm);

    let mut basis: Vec<Vec<f64>> = vec![v0];
    let mut h = DMatrix::<f64>::zeros(subspace + 1, subspace);
    let mut steps = subspace;
    let mut breakdown = false;
    for j in 0..subspace {
        let mut w = m.matvec(&basis[j]);
        // modified Gram-Schmidt with one reorthogonalization pass
        for _ in 0..2 {
            for (i, b) in basis.iter().enumerate() {
                let dot: f64 = w.iter().zip(b).map(|(a, c)| a * c).sum();
                h[(i, j)] += dot;
                w.iter_mut().zip(b).for_each(|(a, c)| *a -= dot * c);
            }
        }
        let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        h[(j + 1, j)] = wn;
        if wn < 1e-12 {
            steps = j + 1;
            breakdown = true;
            break;
        }
        w.iter_mut().for_each(|x| *x /= wn);
        basis.push(w);
    }
    let hm = h.view((0, 0), (steps, steps)).into_owned();
    let eigs = hm.complex_eigenvalues();
    Ok((eigs.iter().copied().collect(), breakdown))
}

fn ritz_drift(prev: &[Complex64], cur: &[Complex64], k: usize) -> f64 {
    let mut a = prev.to_vec();
    let mut b = cur.to_vec();
    sort_eigs(&mut a);
    sort_eigs(&mut b);
    a.iter()
        .zip(&b)
        .take(k)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Cesaro projector (1/n) sum_i gamma^{-i} M^i applied to complex values.
pub fn cesaro_project(
    op: &UlamOperator,
    values: &[Complex64],
    gamma: Complex64,
    n_terms: usize,
) -> Result<Vec<Complex64>> {
    if n_terms == 0 {
        return Err(Error::Invalid("cesaro needs n_terms >= 1".into()));
    }
    if (gamma.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::ParameterDomain(format!(
            "cesaro gamma must lie on the unit circle (|gamma| = {})",
            gamma.norm()
        )));
    }
    let ginv = Complex64::new(1.0, 0.0) / gamma;
    let mut acc = values.to_vec();
    let mut cur = values.to_vec();
    let mut phase = Complex64::new(1.0, 0.0);
    for _ in 1..n_terms {
        cur = op.matrix.matvec_complex(&cur);
        phase *= ginv;
        for (a, c) in acc.iter_mut().zip(&cur) {
            *a += phase * c;
        }
    }
    let scale = 1.0 / n_terms as f64;
    Ok(acc.into_iter().map(|z| z * scale).collect())
}

/// Real-input convenience wrapper; returns (real part, imaginary part).
pub fn cesaro_project_fn(
    op: &UlamOperator,
    u: &GridFunction,
    gamma: Complex64,
    n_terms: usize,
) -> Result<(GridFunction, GridFunction)> {
    let cv: Vec<Complex64> = u.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let out = cesaro_project(op, &cv, gamma, n_terms)?;
    Ok((
        GridFunction {
            grid: u.grid.clone(),
            values: out.iter().map(|z| z.re).collect(),
        },
        GridFunction {
            grid: u.grid.clone(),
            values: out.iter().map(|z| z.im).collect(),
        },
    ))
}

const INVARIANT_MAX_TERMS: usize = 1 << 20;
const INVARIANT_TOL: f64 = 1e-10;
const NEGATIVE_MASS_BUDGET: f64 = 1e-12;

/// Invariant probability density: the Cesaro average of the uniform active
/// density under M, with term-doubling until the L1 increment is below
/// 1e-10. A plain power-iterate fast path is taken when it stabilizes
/// first (both converge to the same fixed density when they converge).
pub fn invariant_density(op: &UlamOperator) -> Result<GridFunction> {
    if !matches!(op.weight, WeightKind::PerronFrobenius) {
        return Err(Error::Invalid(
            "invariant_density needs the perron_frobenius weight".into(),
        ));
    }
    let u0 = op.uniform_density();
    let vol = op.grid.cell_volume();
    let l1 = |v: &[f64]| -> f64 { v.iter().map(|x| x.abs()).sum::<f64>() * vol };

    let mut cur = u0.values.clone();
    let mut sum = u0.values.clone();
    let mut m = 1usize;
    let mut prev_cesaro: Option<Vec<f64>> = None;
    let mut checkpoint = 2usize;
    let mut result: Option<Vec<f64>> = None;
    let mut last_diff = f64::INFINITY;
    while m < INVARIANT_MAX_TERMS {
        let next = op.matrix.matvec(&cur);
        // power-iterate fast path
        let power_diff: f64 = next
            .iter()
            .zip(&cur)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * vol;
        for (s, x) in sum.iter_mut().zip(&next) {
            *s += x;
        }
        cur = next;
        m += 1;
        if power_diff < INVARIANT_TOL {
            result = Some(cur.clone());
            break;
        }
        if m == checkpoint {
            let cesaro: Vec<f64> = sum.iter().map(|s| s / m as f64).collect();
            if let Some(prev) = &prev_cesaro {
                let diff: Vec<f64> = cesaro.iter().zip(prev).map(|(a, b)| a - b).collect();
                last_diff = l1(&diff);
                if last_diff < INVARIANT_TOL {
                    result = Some(cesaro);
                    break;
                }
            }
            prev_cesaro = Some(cesaro);
            checkpoint *= 2;
        }
    }
    let values = result.ok_or(Error::NonConvergence { residual: last_diff })?;

    // clip rounding-level negativity; anything larger signals a bug
    let negative_mass: f64 = values.iter().filter(|v| **v < 0.0).map(|v| -v).sum::<f64>() * vol;
    if negative_mass > NEGATIVE_MASS_BUDGET {
        return Err(Error::NegativeDensity { mass: negative_mass });
    }
    let mut values: Vec<f64> = values.into_iter().map(|v| v.max(0.0)).collect();
    let mass: f64 = values.iter().sum::<f64>() * vol;
    if mass <= 0.0 {
        return Err(Error::NonConvergence { residual: f64::INFINITY });
    }
    values.iter_mut().for_each(|v| *v /= mass);
    Ok(GridFunction { grid: op.grid.clone(), values })
}

/// L1 fixed-point residual ||M u - u||_1 of a density.
pub fn fixed_point_residual(op: &UlamOperator, u: &GridFunction) -> f64 {
    let mu = op.matrix.matvec(&u.values);
    mu.iter()
        .zip(&u.values)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        * op.grid.cell_volume()
}
