//! Pair potentials h(x_i . x_j), total energies over ordered pairs, their
//! gradients, and the force-equation residuals of the logarithmic energy.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SphericalConfig;

/// Pairs with 1 - t below this are treated as coincident.
pub const SINGULAR_GAP: f64 = 1e-15;

/// The pair potential h as a function of the inner product t = x . y.
///
/// Conventions (u = 2 - 2t = |x - y|^2):
/// - `Log`: h = -log|x - y| = -(1/2) log u
/// - `Riesz { s }`, s > 0: h = u^{-s/2}; s < 0: h = -u^{-s/2}
/// - `Gauss { alpha }`: h = exp(alpha t)
/// - `BiQuadratic { a, b, c }`: h = a t^2 + b t + c
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PotentialKind {
    Log,
    Riesz { s: f64 },
    Gauss { alpha: f64 },
    BiQuadratic { a: f64, b: f64, c: f64 },
}

impl PotentialKind {
    pub fn riesz(s: f64) -> Result<Self> {
        if s == 0.0 || !s.is_finite() {
            return Err(Error::InvalidArgument(format!("Riesz exponent must be nonzero, got {s}")));
        }
        Ok(PotentialKind::Riesz { s })
    }

    pub fn gauss(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("Gaussian alpha must be positive, got {alpha}")));
        }
        Ok(PotentialKind::Gauss { alpha })
    }

    pub fn biquadratic(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && b > 2.0 * a && c.is_finite() && b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bi-quadratic needs a > 0 and b > 2a, got a={a}, b={b}"
            )));
        }
        Ok(PotentialKind::BiQuadratic { a, b, c })
    }

    /// Whether h is strictly convex on [-1, 1).
    pub fn is_strictly_convex(&self) -> bool {
        match *self {
            PotentialKind::Log | PotentialKind::Gauss { .. } | PotentialKind::BiQuadratic { .. } => true,
            // -u^p is strictly convex in t only for 0 < p < 1
            PotentialKind::Riesz { s } => s > 0.0 || (s > -2.0 && s < 0.0),
        }
    }

    fn singular_at_one(&self, order: u8) -> bool {
        match *self {
            PotentialKind::Log => true,
            PotentialKind::Riesz { s } => s > 0.0 || (order as f64) > -s / 2.0,
            _ => false,
        }
    }

    /// h(t), h'(t) or h''(t) for `order` 0, 1, 2.
    pub fn eval(&self, t: f64, order: u8) -> Result<f64> {
        if order > 2 {
            return Err(Error::InvalidArgument(format!("derivative order {order} not supported")));
        }
        if self.singular_at_one(order) && 1.0 - t < SINGULAR_GAP {
            return Err(Error::SingularPair { i: 0, j: 0, gap: 1.0 - t });
        }
        Ok(self.eval_unchecked(t, order))
    }

    fn eval_unchecked(&self, t: f64, order: u8) -> f64 {
        match *self {
            PotentialKind::Log => {
                let w = 1.0 - t;
                match order {
                    0 => -0.5 * (2.0 * w).ln(),
                    1 => 0.5 / w,
                    _ => 0.5 / (w * w),
                }
            }
            PotentialKind::Riesz { s } => {
                let sign = s.signum();
                let q = -s / 2.0;
                let u = 2.0 - 2.0 * t;
                match order {
                    0 => sign * u.powf(q),
                    1 => -2.0 * sign * q * u.powf(q - 1.0),
                    _ => 4.0 * sign * q * (q - 1.0) * u.powf(q - 2.0),
                }
            }
            PotentialKind::Gauss { alpha } => alpha.powi(order as i32) * (alpha * t).exp(),
            PotentialKind::BiQuadratic { a, b, c } => match order {
                0 => (a * t + b) * t + c,
                1 => 2.0 * a * t + b,
                _ => 2.0 * a,
            },
        }
    }
}

impl fmt::Display for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialKind::Log => write!(f, "log"),
            PotentialKind::Riesz { s } => write!(f, "riesz:{s}"),
            PotentialKind::Gauss { alpha } => write!(f, "gauss:{alpha}"),
            PotentialKind::BiQuadratic { a, b, c } => write!(f, "biquad:{a},{b},{c}"),
        }
    }
}

impl FromStr for PotentialKind {
    type Err = Error;

    /// `log`, `riesz:S`, `gauss:A`, `biquad:A,B,C`
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (s.trim(), None),
        };
        let nums = |a: Option<&str>, want: usize| -> Result<Vec<f64>> {
            let a = a.ok_or_else(|| Error::Parse(format!("potential {name:?} needs {want} parameter(s)")))?;
            let v = a
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {x:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if v.len() != want {
                return Err(Error::Parse(format!("potential {name:?} needs {want} parameter(s)")));
            }
            Ok(v)
        };
        match name {
            "log" if args.is_none() => Ok(PotentialKind::Log),
            "riesz" => PotentialKind::riesz(nums(args, 1)?[0]),
            "gauss" => PotentialKind::gauss(nums(args, 1)?[0]),
            "biquad" => {
                let v = nums(args, 3)?;
                PotentialKind::biquadratic(v[0], v[1], v[2])
            }
            _ => Err(Error::Parse(format!("unknown potential {s:?}"))),
        }
    }
}

/// h(t) or one of its first two derivatives.
pub fn pair_potential(kind: PotentialKind, t: f64, order: u8) -> Result<f64> {
    kind.eval(t, order)
}

fn pair_eval(kind: PotentialKind, points: &[DVector<f64>], i: usize, j: usize, order: u8) -> Result<f64> {
    let t = points[i].dot(&points[j]);
    kind.eval(t, order).map_err(|e| match e {
        Error::SingularPair { gap, .. } => Error::SingularPair { i, j, gap },
        other => other,
    })
}

/// Energy over ordered pairs of arbitrary (not necessarily unit) vectors.
pub fn energy_of_points(points: &[DVector<f64>], kind: PotentialKind) -> Result<f64> {
    let mut sum = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            sum += pair_eval(kind, points, i, j, 0)?;
        }
    }
    Ok(2.0 * sum)
}

/// E_h(X) = sum over i != j of h(x_i . x_j).
pub fn energy(config: &SphericalConfig, kind: PotentialKind) -> Result<f64> {
    energy_of_points(config.points(), kind)
}

/// dE/dx_i = 2 sum_{j != i} h'(x_i . x_j) x_j, for arbitrary vectors.
pub fn gradient_of_points(points: &[DVector<f64>], kind: PotentialKind) -> Result<Vec<DVector<f64>>> {
    let n = points.len();
    let dim = points.first().map_or(0, |p| p.len());
    let mut g = vec![DVector::zeros(dim); n];
    for i in 0..n {
        for j in i + 1..n {
            let d = 2.0 * pair_eval(kind, points, i, j, 1)?;
            g[i].axpy(d, &points[j], 1.0);
            g[j].axpy(d, &points[i], 1.0);
        }
    }
    Ok(g)
}

pub fn euclidean_gradient(config: &SphericalConfig, kind: PotentialKind) -> Result<Vec<DVector<f64>>> {
    gradient_of_points(config.points(), kind)
}

/// Tangential parts (I - x_i x_i^T) dE/dx_i.
pub fn riemannian_gradient(config: &SphericalConfig, kind: PotentialKind) -> Result<Vec<DVector<f64>>> {
    let g = euclidean_gradient(config, kind)?;
    Ok(config
        .points()
        .iter()
        .zip(g)
        .map(|(x, gi)| {
            let r = x.dot(&gi);
            gi - x * r
        })
        .collect())
}

/// max_i of the tangential gradient norm.
pub fn riemannian_grad_norm(config: &SphericalConfig, kind: PotentialKind) -> Result<f64> {
    Ok(riemannian_gradient(config, kind)?.iter().map(|g| g.norm()).fold(0.0, f64::max))
}

/// Defects of the logarithmic force equations
/// sum_{j != i} (x_i - x_j)/r_ij = lambda_i x_i with r_ij = 1 - x_i . x_j.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationarityReport {
    /// || sum_{j != i} (x_i - x_j)/r_ij - (N-1) x_i ||
    pub per_point_residual: Vec<f64>,
    pub max_residual: f64,
    /// x_i . sum_{j != i} (x_i - x_j)/r_ij
    pub lambda_estimates: Vec<f64>,
    /// sum_j r_ij - N
    pub distance_sum_defect: Vec<f64>,
}

pub fn log_force_report(config: &SphericalConfig) -> Result<StationarityReport> {
    let pts = config.points();
    let n = pts.len();
    let mut per_point_residual = Vec::with_capacity(n);
    let mut lambda_estimates = Vec::with_capacity(n);
    let mut distance_sum_defect = Vec::with_capacity(n);
    for i in 0..n {
        let mut force = DVector::zeros(config.dim());
        let mut rsum = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let r = 1.0 - pts[i].dot(&pts[j]);
            if r < SINGULAR_GAP {
                return Err(Error::SingularPair { i: i.min(j), j: i.max(j), gap: r });
            }
            rsum += r;
            force += (&pts[i] - &pts[j]) / r;
        }
        lambda_estimates.push(pts[i].dot(&force));
        per_point_residual.push((force - &pts[i] * (n as f64 - 1.0)).norm());
        distance_sum_defect.push(rsum - n as f64);
    }
    let max_residual = per_point_residual.iter().cloned().fold(0.0, f64::max);
    Ok(StationarityReport { per_point_residual, max_residual, lambda_estimates, distance_sum_defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        cross_polytope, equatorial_polygon, orthogonal_simplexes, random_config, regular_simplex, PartitionType,
    };

    fn tbp() -> SphericalConfig {
        orthogonal_simplexes(&PartitionType::new(vec![3, 2]).unwrap()).unwrap()
    }

    #[test]
    fn pair_values() {
        assert!((pair_potential(PotentialKind::Log, -1.0, 0).unwrap() + 2f64.ln()).abs() < 1e-15);
        let r2 = PotentialKind::riesz(2.0).unwrap();
        assert!((pair_potential(r2, 0.0, 0).unwrap() - 0.5).abs() < 1e-15);
        let bq = PotentialKind::biquadratic(1.0, 3.0, 0.0).unwrap();
        assert!((pair_potential(bq, 0.5, 0).unwrap() - 1.75).abs() < 1e-15);
        assert!(matches!(pair_potential(PotentialKind::Log, 1.0, 0), Err(Error::SingularPair { .. })));
    }

    #[test]
    fn derivatives_match_differences() {
        let kinds = [
            PotentialKind::Log,
            PotentialKind::riesz(2.5).unwrap(),
            PotentialKind::riesz(-1.0).unwrap(),
            PotentialKind::gauss(1.3).unwrap(),
            PotentialKind::biquadratic(1.0, 3.0, -0.5).unwrap(),
        ];
        let h = 1e-5;
        for k in kinds {
            for t in [-0.9, -0.3, 0.2, 0.7] {
                for order in 0..2u8 {
                    let fd = (k.eval(t + h, order).unwrap() - k.eval(t - h, order).unwrap()) / (2.0 * h);
                    let an = k.eval(t, order + 1).unwrap();
                    assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "{k} t={t} order={order}");
                }
            }
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(PotentialKind::riesz(0.0).is_err());
        assert!(PotentialKind::gauss(-1.0).is_err());
        assert!(PotentialKind::biquadratic(1.0, 2.0, 0.0).is_err());
        assert!(PotentialKind::biquadratic(0.0, 3.0, 0.0).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for s in ["log", "riesz:2", "riesz:-1", "gauss:1.5", "biquad:1,3,0"] {
            let k: PotentialKind = s.parse().unwrap();
            assert_eq!(k.to_string().parse::<PotentialKind>().unwrap(), k);
        }
        assert!("riesz".parse::<PotentialKind>().is_err());
        assert!("biquad:1,2".parse::<PotentialKind>().is_err());
        assert!("coulomb".parse::<PotentialKind>().is_err());
    }

    #[test]
    fn square_log_energy() {
        let sq = orthogonal_simplexes(&PartitionType::new(vec![2, 2]).unwrap()).unwrap();
        let e = energy(&sq, PotentialKind::Log).unwrap();
        assert!((e + 8.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn tbp_log_energy_by_direct_sum() {
        // 1 antipodal pair (|x-y| = 2), 6 pole-triangle pairs (sqrt 2),
        // 3 triangle edges (sqrt 3); doubled for ordered pairs
        let want = -2.0 * (2f64.ln() + 6.0 * 2f64.sqrt().ln() + 3.0 * 3f64.sqrt().ln());
        assert!((energy(&tbp(), PotentialKind::Log).unwrap() - want).abs() < 1e-13);
    }

    #[test]
    fn simplex_log_energy_closed_form() {
        for d in 2..8 {
            let s = regular_simplex(d + 1).unwrap();
            // all (d+1)d/2 chords satisfy |x-y|^2 = 2 + 2/d
            let df = d as f64;
            let want = -((df + 1.0) * df / 2.0) * (2.0 * (df + 1.0) / df).ln();
            assert!((energy(&s, PotentialKind::Log).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_gradients_are_radial() {
        for kind in [PotentialKind::Log, PotentialKind::riesz(3.0).unwrap(), PotentialKind::gauss(1.0).unwrap()] {
            assert!(riemannian_grad_norm(&tbp(), kind).unwrap() < 1e-12);
        }
        let pair = regular_simplex(2).unwrap().padded(2).unwrap();
        assert!(riemannian_grad_norm(&pair, PotentialKind::Log).unwrap() < 1e-15);
        assert!(riemannian_grad_norm(&random_config(3, 5, 4).unwrap(), PotentialKind::Log).unwrap() > 1e-3);
        let pentagon = equatorial_polygon(5, 3).unwrap();
        assert!(riemannian_grad_norm(&pentagon, PotentialKind::Log).unwrap() < 1e-12);
    }

    #[test]
    fn force_report_cases() {
        let c = orthogonal_simplexes(&PartitionType::new(vec![4, 3]).unwrap()).unwrap();
        let r = log_force_report(&c).unwrap();
        assert!(r.max_residual < 1e-10);
        assert!(r.lambda_estimates.iter().all(|l| (l - 6.0).abs() < 1e-10));
        assert!(r.distance_sum_defect.iter().all(|d| d.abs() < 1e-10));
        assert!(log_force_report(&cross_polytope(3).unwrap()).unwrap().max_residual < 1e-10);
        assert!(log_force_report(&random_config(3, 5, 11).unwrap()).unwrap().max_residual > 1e-2);
    }

    #[test]
    fn ordered_pair_doubling() {
        let x = random_config(4, 6, 2).unwrap();
        let kind = PotentialKind::gauss(0.7).unwrap();
        let mut half = 0.0;
        for i in 0..6 {
            for j in i + 1..6 {
                half += kind.eval(x.point(i).dot(x.point(j)), 0).unwrap();
            }
        }
        assert_eq!(energy(&x, kind).unwrap(), 2.0 * half);
    }
}
