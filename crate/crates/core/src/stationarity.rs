//! The B and A matrices of a (d+2)-point configuration, their rank-one
//! structure, and classification of stationary configurations into
//! two-simplex splits, pyramids and degenerate configurations.
//!
//! With r_ij = 1 - x_i . x_j and c = (N-1)/N:
//!
//! - b_ij = 1/r_ij off the diagonal, b_ii = N - 1 - sum_{j != i} b_ij
//! - a_ij = c - b_ij
//!
//! At a stationary spanning configuration with N = d + 2 the matrix A has
//! rank one, A = a a^T, and the factor a satisfies
//! Q_i = N, R_i = 0, S_i = 1 and T_i = N - 2.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{PartitionType, SphericalConfig};
use crate::linalg;
use crate::potentials::{log_force_report, SINGULAR_GAP};

/// |a_i| below this multiple of sqrt(c) marks an equidistant vertex.
pub const APEX_RTOL: f64 = 1e-6;
/// Tolerance for the Gram-block and two-valuedness checks in [`classify`].
pub const STRUCTURE_TOL: f64 = 1e-6;
/// Residual threshold used when callers have no better choice.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct AMatrixDiagnostics {
    pub c: f64,
    pub b: DMatrix<f64>,
    pub a_matrix: DMatrix<f64>,
    pub rank_a: usize,
    /// Rank-one factor with the first nonzero entry positive; empty unless `rank_a == 1`.
    pub a: Vec<f64>,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    /// min over i != j of c - a_i a_j - 1/2 (nonnegative iff every r_ij <= 2).
    pub min_slack: f64,
}

impl AMatrixDiagnostics {
    pub fn n(&self) -> usize {
        self.b.nrows()
    }

    /// Largest deviation |A_ij - a_i a_j|.
    pub fn factor_error(&self) -> f64 {
        if self.a.is_empty() {
            return f64::INFINITY;
        }
        let a = DVector::from_column_slice(&self.a);
        (&self.a_matrix - &a * a.transpose()).amax()
    }

    /// max_i || sum_j b_ij x_j ||, zero exactly when the force equations hold.
    pub fn bx_defect(&self, config: &SphericalConfig) -> f64 {
        let x = config.point_matrix();
        (&self.b * x).row_iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    /// Largest |sum_j A_ij| over rows.
    pub fn max_row_sum(&self) -> f64 {
        self.a_matrix.row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max)
    }
}

fn b_matrix(config: &SphericalConfig) -> Result<DMatrix<f64>> {
    let n = config.len();
    let pts = config.points();
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let r = 1.0 - pts[i].dot(&pts[j]);
            if r < SINGULAR_GAP {
                return Err(Error::SingularPair { i, j, gap: r });
            }
            b[(i, j)] = 1.0 / r;
            b[(j, i)] = 1.0 / r;
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| b[(i, j)]).sum();
        b[(i, i)] = n as f64 - 1.0 - off;
    }
    Ok(b)
}

fn a_from_b(b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = b.nrows();
    let c = (n as f64 - 1.0) / n as f64;
    b.map(|x| c - x)
}

/// Numerical rank of A for any N (bounded by N - d - 1 at stationary spanning configurations).
pub fn a_matrix_rank(config: &SphericalConfig) -> Result<usize> {
    Ok(linalg::numerical_rank(&a_from_b(&b_matrix(config)?)))
}

/// Builds B, A and the rank-one diagnostics; requires N = d + 2.
pub fn build_diagnostics(config: &SphericalConfig) -> Result<AMatrixDiagnostics> {
    let n = config.len();
    if n != config.dim() + 2 {
        return Err(Error::Unsupported(format!(
            "A-matrix diagnostics need N = d + 2 (got N = {n}, d = {})",
            config.dim()
        )));
    }
    let b = b_matrix(config)?;
    let a_matrix = a_from_b(&b);
    let c = (n as f64 - 1.0) / n as f64;
    let rank_a = linalg::numerical_rank(&a_matrix);

    let mut diag = AMatrixDiagnostics {
        c,
        b,
        a_matrix,
        rank_a,
        a: Vec::new(),
        q: Vec::new(),
        r: Vec::new(),
        s: Vec::new(),
        t: Vec::new(),
        min_slack: f64::NAN,
    };
    if rank_a != 1 {
        return Ok(diag);
    }

    let (values, vectors) = linalg::sorted_symmetric_eigen(&diag.a_matrix);
    let lambda = values[n - 1].max(0.0);
    let mut a: Vec<f64> = vectors.column(n - 1).iter().map(|v| v * lambda.sqrt()).collect();
    let zero = APEX_RTOL * c.sqrt();
    if let Some(first) = a.iter().find(|x| x.abs() >= zero) {
        if *first < 0.0 {
            a.iter_mut().for_each(|x| *x = -*x);
        }
    }

    let mut min_slack = f64::INFINITY;
    for i in 0..n {
        let (mut q, mut r, mut s, mut t) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..n {
            if j == i {
                continue;
            }
            let den = c - a[i] * a[j];
            q += 1.0 / den;
            r += a[j] / den;
            s += (a[j] * a[j] - a[j] * a[i]) / den;
            t += (c - a[j] * a[j]) / den;
            min_slack = min_slack.min(den - 0.5);
        }
        diag.q.push(q);
        diag.r.push(r);
        diag.s.push(s);
        diag.t.push(t);
    }
    diag.a = a;
    diag.min_slack = min_slack;
    Ok(diag)
}

/// Defects of the rank-one identities at a stationary configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityDefects {
    /// Q_i - N
    pub q: Vec<f64>,
    /// R_i
    pub r: Vec<f64>,
    /// S_i - 1
    pub s: Vec<f64>,
    /// T_i - (N - 2)
    pub t: Vec<f64>,
    pub min_slack: f64,
    /// max_i |a_i| - sqrt(c); negative when every |a_i| < sqrt(c).
    pub max_abs_a_minus_sqrt_c: f64,
}

impl IdentityDefects {
    /// Largest absolute defect over the four identity families.
    pub fn max_defect(&self) -> f64 {
        self.q.iter().chain(&self.r).chain(&self.s).chain(&self.t).map(|x| x.abs()).fold(0.0, f64::max)
    }
}

pub fn lemma_identities(diag: &AMatrixDiagnostics) -> Result<IdentityDefects> {
    if diag.rank_a != 1 || diag.a.is_empty() {
        return Err(Error::NotApplicable(format!("A has rank {}, identities need rank 1", diag.rank_a)));
    }
    let n = diag.n() as f64;
    let max_a = diag.a.iter().map(|x| x.abs()).fold(0.0, f64::max);
    Ok(IdentityDefects {
        q: diag.q.iter().map(|x| x - n).collect(),
        r: diag.r.clone(),
        s: diag.s.iter().map(|x| x - 1.0).collect(),
        t: diag.t.iter().map(|x| x - (n - 2.0)).collect(),
        min_slack: diag.min_slack,
        max_abs_a_minus_sqrt_c: max_a - diag.c.sqrt(),
    })
}

/// Samples of F(t) = sum_j (c - a_j^2)/(c - t a_j) and F''(t) on (-sqrt c, sqrt c),
/// plus F at each a_i (equal to N - 1 at stationary configurations).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexityScan {
    /// (t, F(t), F''(t))
    pub samples: Vec<(f64, f64, f64)>,
    pub f_at_a: Vec<f64>,
}

pub fn convexity_f(diag: &AMatrixDiagnostics, t: f64) -> (f64, f64) {
    let c = diag.c;
    diag.a.iter().fold((0.0, 0.0), |(f, f2), &aj| {
        let den = c - t * aj;
        (f + (c - aj * aj) / den, f2 + 2.0 * (c - aj * aj) * aj * aj / (den * den * den))
    })
}

pub fn convexity_scan(diag: &AMatrixDiagnostics, grid_size: usize) -> Result<ConvexityScan> {
    if diag.rank_a != 1 || diag.a.is_empty() {
        return Err(Error::NotApplicable(format!("A has rank {}, scan needs rank 1", diag.rank_a)));
    }
    let half = diag.c.sqrt();
    let step = 2.0 * half / (grid_size as f64 + 1.0);
    let samples = (1..=grid_size)
        .map(|k| {
            let t = -half + k as f64 * step;
            let (f, f2) = convexity_f(diag, t);
            (t, f, f2)
        })
        .collect();
    let f_at_a = diag.a.iter().map(|&ai| convexity_f(diag, ai).0).collect();
    Ok(ConvexityScan { samples, f_at_a })
}

/// Verdict of [`classify`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum StationaryClass {
    /// Two orthogonal regular simplexes of sizes m >= n >= 2.
    TwoSimplex { m: usize, n: usize },
    /// Apexes (blocks of size 1) over a two-simplex split.
    Pyramid(PartitionType),
    /// Spans only a `spanned_dim`-dimensional subspace.
    Degenerate { spanned_dim: usize },
    NonStationary { max_residual: f64 },
}

impl StationaryClass {
    pub fn two_simplex(a: usize, b: usize) -> Self {
        StationaryClass::TwoSimplex { m: a.max(b), n: a.min(b) }
    }

    pub fn is_stationary(&self) -> bool {
        !matches!(self, StationaryClass::NonStationary { .. })
    }

    /// Label without the residual value, for histograms.
    pub fn key(&self) -> String {
        match self {
            StationaryClass::NonStationary { .. } => "NonStationary".into(),
            other => other.to_string(),
        }
    }
}

impl fmt::Display for StationaryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StationaryClass::TwoSimplex { m, n } => write!(f, "TwoSimplex({m},{n})"),
            StationaryClass::Pyramid(p) => write!(f, "Pyramid({p})"),
            StationaryClass::Degenerate { spanned_dim } => write!(f, "Degenerate({spanned_dim})"),
            StationaryClass::NonStationary { max_residual } => write!(f, "NonStationary({max_residual:e})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub class: StationaryClass,
    /// Diagnostics of the top-level configuration, when they were computed.
    pub diagnostics: Option<AMatrixDiagnostics>,
}

/// Classifies a configuration.
///
/// 1. force residual above `tol`: `NonStationary`;
/// 2. span of lower dimension: `Degenerate`;
/// 3. an equidistant vertex (a_i = 0): peel it off by projecting the other
///    points to the hyperplane orthogonal to it and recurse: `Pyramid`;
/// 4. otherwise split by the sign of a_i and verify the Gram blocks
///    directly: `TwoSimplex`.
///
/// Spanning stationary inputs with N != d + 2 are `Unsupported`; structure
/// that does not verify is reported as `ClassificationFailed`.
pub fn classify(config: &SphericalConfig, tol: f64) -> Result<Classification> {
    let report = log_force_report(config)?;
    if report.max_residual > tol {
        return Ok(Classification {
            class: StationaryClass::NonStationary { max_residual: report.max_residual },
            diagnostics: None,
        });
    }
    let rank = config.span_rank();
    if rank < config.dim() {
        return Ok(Classification { class: StationaryClass::Degenerate { spanned_dim: rank }, diagnostics: None });
    }
    let diag = build_diagnostics(config)?;
    let class = classify_spanning(config, &diag, tol)?;
    Ok(Classification { class, diagnostics: Some(diag) })
}

fn classify_spanning(config: &SphericalConfig, diag: &AMatrixDiagnostics, tol: f64) -> Result<StationaryClass> {
    if diag.rank_a != 1 {
        return Err(Error::ClassificationFailed(format!(
            "stationary configuration with rank(A) = {} (expected 1)",
            diag.rank_a
        )));
    }
    if diag.factor_error() > STRUCTURE_TOL {
        return Err(Error::ClassificationFailed(format!(
            "A is not a rank-one product (error {:e})",
            diag.factor_error()
        )));
    }
    let zero = APEX_RTOL * diag.c.sqrt();
    if let Some(apex) = diag.a.iter().position(|x| x.abs() < zero) {
        let reduced = peel_apex(config, apex)?;
        let inner = classify(&reduced, tol)?;
        let mut blocks = vec![1];
        match inner.class {
            StationaryClass::TwoSimplex { m, n } => blocks.extend([m, n]),
            StationaryClass::Pyramid(p) => blocks.extend_from_slice(p.blocks()),
            other => {
                return Err(Error::ClassificationFailed(format!(
                    "apex reduction of a stationary configuration gave {other}"
                )))
            }
        }
        return Ok(StationaryClass::Pyramid(PartitionType::new(blocks)?.normalized()));
    }

    let pos: Vec<usize> = (0..diag.n()).filter(|&i| diag.a[i] > 0.0).collect();
    let neg: Vec<usize> = (0..diag.n()).filter(|&i| diag.a[i] < 0.0).collect();
    for group in [&pos, &neg] {
        if group.len() < 2 {
            return Err(Error::ClassificationFailed(format!(
                "sign split of a has a block of size {}",
                group.len()
            )));
        }
        let vals: Vec<f64> = group.iter().map(|&i| diag.a[i]).collect();
        let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if spread > STRUCTURE_TOL {
            return Err(Error::ClassificationFailed(format!("a is not two-valued (spread {spread:e})")));
        }
    }
    verify_blocks(config, &[pos.clone(), neg.clone()])?;
    Ok(StationaryClass::two_simplex(pos.len(), neg.len()))
}

/// Checks Gram entries: -1/(size-1) inside each block, 0 across blocks.
pub(crate) fn verify_blocks(config: &SphericalConfig, blocks: &[Vec<usize>]) -> Result<()> {
    let g = config.gram();
    for (bi, block) in blocks.iter().enumerate() {
        let within = -1.0 / (block.len() as f64 - 1.0);
        for (k, &i) in block.iter().enumerate() {
            for &j in &block[k + 1..] {
                if (g[(i, j)] - within).abs() > STRUCTURE_TOL {
                    return Err(Error::ClassificationFailed(format!(
                        "x_{i} . x_{j} = {} but block of size {} needs {within}",
                        g[(i, j)],
                        block.len()
                    )));
                }
            }
            for other in &blocks[bi + 1..] {
                for &j in other {
                    if g[(i, j)].abs() > STRUCTURE_TOL {
                        return Err(Error::ClassificationFailed(format!(
                            "x_{i} . x_{j} = {} across blocks",
                            g[(i, j)]
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Removes the equidistant vertex `apex` and maps the remaining points to
/// S^{d-2} via z_i = (N-1) y_i / sqrt(N(N-2)), y_i the component orthogonal to the apex.
pub fn peel_apex(config: &SphericalConfig, apex: usize) -> Result<SphericalConfig> {
    let n = config.len();
    let d = config.dim();
    if d < 2 || n < 3 {
        return Err(Error::ClassificationFailed("nothing left below the apex".into()));
    }
    let p = config.point(apex);
    let height = -1.0 / (n as f64 - 1.0);
    for (i, x) in config.points().iter().enumerate() {
        if i != apex && (x.dot(p) - height).abs() > STRUCTURE_TOL {
            return Err(Error::ClassificationFailed(format!(
                "x_{i} . apex = {} instead of {height}",
                x.dot(p)
            )));
        }
    }
    let basis = linalg::orthogonal_complement(std::slice::from_ref(p), d, 1e-12);
    let scale = (n as f64 - 1.0) / ((n * (n - 2)) as f64).sqrt();
    let pts = config
        .points()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != apex)
        .map(|(_, x)| {
            let y = x - p * x.dot(p);
            DVector::from_iterator(basis.len(), basis.iter().map(|b| scale * b.dot(&y)))
        })
        .collect();
    SphericalConfig::with_unit_tol(d - 1, pts, None, 1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        equatorial_polygon, from_spherical, orthogonal_simplexes, pyramid_config, random_config, square_pyramid_fp,
        Conf35Coords,
    };

    fn split(blocks: &[usize]) -> SphericalConfig {
        orthogonal_simplexes(&PartitionType::new(blocks.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn tbp_rank_one_factor() {
        let d = build_diagnostics(&split(&[3, 2])).unwrap();
        assert_eq!(d.rank_a, 1);
        for i in 0..3 {
            assert!((d.a[i] * d.a[i] - 2.0 / 15.0).abs() < 1e-12);
        }
        for i in 3..5 {
            assert!((d.a[i] * d.a[i] - 3.0 / 10.0).abs() < 1e-12);
            assert!((d.a[0] * d.a[i] + 0.2).abs() < 1e-12);
        }
        assert!(d.a[0] > 0.0);
        assert!(d.factor_error() < 1e-12);
        assert!(d.max_row_sum() < 1e-12);
    }

    #[test]
    fn pyramid_apex_row_vanishes() {
        let c = pyramid_config(&PartitionType::new(vec![1, 2, 2]).unwrap()).unwrap();
        let d = build_diagnostics(&c).unwrap();
        assert_eq!(d.rank_a, 1);
        assert!(d.a[0].abs() < 1e-9);
        assert!(d.a_matrix.row(0).amax() < 1e-12);
        let mut rest: Vec<f64> = d.a[1..].iter().map(|x| (x * 1e9).round() / 1e9).collect();
        rest.sort_by(f64::total_cmp);
        rest.dedup();
        assert_eq!(rest.len(), 2);
    }

    #[test]
    fn random_is_not_stationary() {
        let c = random_config(3, 5, 1).unwrap();
        let d = build_diagnostics(&c).unwrap();
        // row sums of B equal N - 1 by construction; BX = 0 is what fails
        assert!(d.b.row_iter().all(|r| (r.sum() - 4.0).abs() < 1e-12));
        assert!(d.bx_defect(&c) > 1e-3);
        assert!(matches!(
            classify(&c, DEFAULT_CLASSIFY_TOL).unwrap().class,
            StationaryClass::NonStationary { .. }
        ));
    }

    #[test]
    fn wrong_size_unsupported() {
        let c = random_config(3, 6, 1).unwrap();
        assert!(matches!(build_diagnostics(&c), Err(Error::Unsupported(_))));
        assert!(a_matrix_rank(&c).is_ok());
    }

    #[test]
    fn identities_hold_on_splits() {
        for blocks in [[4, 3], [2, 2], [5, 5], [6, 2]] {
            let d = build_diagnostics(&split(&blocks)).unwrap();
            let id = lemma_identities(&d).unwrap();
            assert!(id.max_defect() < 1e-10, "{blocks:?}: {}", id.max_defect());
            assert!(id.min_slack >= -1e-12);
            assert!(id.max_abs_a_minus_sqrt_c < 0.0);
        }
        let d = build_diagnostics(&split(&[2, 2])).unwrap();
        assert!(d.t.iter().all(|t| (t - 2.0).abs() < 1e-12));
    }

    #[test]
    fn identities_need_rank_one() {
        let d = build_diagnostics(&random_config(3, 5, 9).unwrap()).unwrap();
        if d.rank_a != 1 {
            assert!(matches!(lemma_identities(&d), Err(Error::NotApplicable(_))));
        }
    }

    #[test]
    fn perturbed_tbp_defects_track_noise() {
        let tbp = split(&[3, 2]);
        let noisy = random_config(3, 5, 17).unwrap();
        let pts: Vec<DVector<f64>> = tbp
            .points()
            .iter()
            .zip(noisy.points())
            .map(|(x, e)| {
                let y = x + e * 1e-3;
                y.normalize()
            })
            .collect();
        let c = SphericalConfig::new(3, pts, None).unwrap();
        let d = build_diagnostics(&c).unwrap();
        // A leaves rank one away from stationarity, so measure BX instead
        let worst = d.bx_defect(&c);
        assert!(worst < 1e-1 && worst > 1e-5, "{worst}");
        assert!(build_diagnostics(&tbp).unwrap().bx_defect(&tbp) < 1e-12);
    }

    #[test]
    fn convexity_on_tbp_and_symmetric_split() {
        let d = build_diagnostics(&split(&[3, 2])).unwrap();
        let scan = convexity_scan(&d, 1001).unwrap();
        assert!(scan.samples.iter().all(|s| s.2 > 0.0));
        assert!(scan.f_at_a.iter().all(|f| (f - 4.0).abs() < 1e-10));
        let d = build_diagnostics(&split(&[3, 3])).unwrap();
        for &t in &[0.1, 0.3, 0.7] {
            assert!((convexity_f(&d, t).0 - convexity_f(&d, -t).0).abs() < 1e-12);
        }
    }

    #[test]
    fn classify_named_configs() {
        let tbp = split(&[3, 2]);
        assert_eq!(classify(&tbp, 1e-10).unwrap().class, StationaryClass::two_simplex(3, 2));
        let fp = square_pyramid_fp(-0.25).unwrap();
        assert_eq!(
            classify(&fp, 1e-10).unwrap().class,
            StationaryClass::Pyramid(PartitionType::new(vec![1, 2, 2]).unwrap())
        );
        let pent = from_spherical(&Conf35Coords::c0()).unwrap();
        assert_eq!(classify(&pent, 1e-10).unwrap().class, StationaryClass::Degenerate { spanned_dim: 2 });
        let pent = equatorial_polygon(5, 3).unwrap();
        assert_eq!(classify(&pent, 1e-10).unwrap().class, StationaryClass::Degenerate { spanned_dim: 2 });
    }

    #[test]
    fn classify_double_apex() {
        let p = PartitionType::new(vec![1, 1, 3, 2]).unwrap();
        let c = pyramid_config(&p).unwrap();
        assert_eq!(classify(&c, 1e-10).unwrap().class, StationaryClass::Pyramid(p));
    }

    #[test]
    fn class_display() {
        assert_eq!(StationaryClass::two_simplex(2, 3).to_string(), "TwoSimplex(3,2)");
        let p = StationaryClass::Pyramid(PartitionType::new(vec![1, 2, 2]).unwrap());
        assert_eq!(p.to_string(), "Pyramid([1,2,2])");
        assert_eq!(StationaryClass::Degenerate { spanned_dim: 2 }.to_string(), "Degenerate(2)");
    }
}
