//! Riemannian gradient descent on (S^{d-1})^N and basin-of-attraction runs.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{random_config, SphericalConfig};
use crate::potentials::{energy_of_points, gradient_of_points, PotentialKind};
use crate::stationarity::{classify, StationaryClass, DEFAULT_CLASSIFY_TOL};

/// Smallest step tried before the line search gives up.
pub const MIN_STEP: f64 = 1e-16;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizeOptions {
    pub max_iters: usize,
    /// Stop once the largest tangential gradient norm falls below this.
    pub grad_tol: f64,
    /// Initial step; `None` means 0.1/(N-1).
    pub step0: Option<f64>,
    pub backtrack: f64,
    pub armijo: f64,
    pub seed: u64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions { max_iters: 100_000, grad_tol: 1e-11, step0: None, backtrack: 0.5, armijo: 1e-4, seed: 0 }
    }
}

impl OptimizeOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if self.grad_tol.is_nan() || self.grad_tol <= 0.0 {
            return bad("grad_tol must be positive");
        }
        if let Some(s) = self.step0 {
            if !(s > 0.0 && s.is_finite()) {
                return bad("step0 must be positive");
            }
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtracking factor must lie in (0,1)");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("armijo constant must lie in (0,1)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StopReason {
    Converged,
    MaxIters,
    /// The line search shrank the step below [`MIN_STEP`].
    StepUnderflow,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizeTrace {
    pub iterations: usize,
    /// Energy after each accepted step, starting with the initial energy.
    pub energies: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub final_grad_norm: f64,
    pub stop: StopReason,
    /// `None` when the classifier does not handle this N (N != d + 2).
    pub final_class: Option<StationaryClass>,
}

impl OptimizeTrace {
    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }

    pub fn final_energy(&self) -> f64 {
        *self.energies.last().expect("trace holds the initial energy")
    }

    /// CSV with header iter,energy,grad_norm.
    pub fn to_csv(&self, digits: usize) -> String {
        let mut s = String::from("iter,energy,grad_norm\n");
        for (i, (e, g)) in self.energies.iter().zip(&self.grad_norms).enumerate() {
            s.push_str(&format!("{i},{e:.digits$e},{g:.digits$e}\n"));
        }
        s
    }
}

fn tangent_gradient(points: &[DVector<f64>], kind: PotentialKind) -> Result<(Vec<DVector<f64>>, f64)> {
    let mut g = gradient_of_points(points, kind)?;
    let mut max = 0.0f64;
    for (gi, x) in g.iter_mut().zip(points) {
        let r = x.dot(gi);
        gi.axpy(-r, x, 1.0);
        max = max.max(gi.norm());
    }
    Ok((g, max))
}

fn retract(points: &[DVector<f64>], dir: &[DVector<f64>], alpha: f64) -> Vec<DVector<f64>> {
    points.iter().zip(dir).map(|(x, g)| (x - g * alpha).normalize()).collect()
}

/// Projected gradient descent with radial retraction and Armijo backtracking.
///
/// A decrease only counts when it clears the rounding level of the energy.
/// Once the predicted decrease falls below that level, a step is also
/// accepted when the energy stays within a few ulps and the gradient norm
/// goes down.
pub fn minimize(
    config0: &SphericalConfig,
    kind: PotentialKind,
    opts: &OptimizeOptions,
) -> Result<(SphericalConfig, OptimizeTrace)> {
    opts.validate()?;
    let n = config0.len();
    let mut x = config0.points().to_vec();
    let mut e = energy_of_points(&x, kind)?;
    let (mut g, mut gn) = tangent_gradient(&x, kind)?;
    let mut alpha = opts.step0.unwrap_or(0.1 / (n as f64 - 1.0));
    let mut energies = vec![e];
    let mut grad_norms = vec![gn];
    let mut iterations = 0;
    let stop = loop {
        if gn < opts.grad_tol {
            break StopReason::Converged;
        }
        if iterations >= opts.max_iters {
            break StopReason::MaxIters;
        }
        let g2: f64 = g.iter().map(|v| v.norm_squared()).sum();
        let slack = 16.0 * f64::EPSILON * e.abs().max(1.0);
        let mut trial = (alpha * 2.0).min(1e3);
        let accepted = loop {
            if trial < MIN_STEP {
                break None;
            }
            let y = retract(&x, &g, trial);
            // a pair collapsing mid-search just means the step was too long
            if let Ok(ey) = energy_of_points(&y, kind) {
                let predicted = opts.armijo * trial * g2;
                if ey <= e - predicted.max(slack) {
                    break Some((y, ey, None));
                }
                if predicted <= slack && ey <= e + slack {
                    if let Ok((gy, gny)) = tangent_gradient(&y, kind) {
                        // the total norm, unlike the per-point maximum, decreases along short steps
                        if gy.iter().map(|v| v.norm_squared()).sum::<f64>() < g2 {
                            break Some((y, ey, Some((gy, gny))));
                        }
                    }
                }
            }
            trial *= opts.backtrack;
        };
        let Some((y, ey, grad)) = accepted else {
            break StopReason::StepUnderflow;
        };
        alpha = trial;
        x = y;
        e = ey;
        (g, gn) = match grad {
            Some(pair) => pair,
            None => tangent_gradient(&x, kind)?,
        };
        iterations += 1;
        energies.push(e);
        grad_norms.push(gn);
    };
    let config = SphericalConfig::with_unit_tol(config0.dim(), x, config0.label().map(String::from), 1e-10)?;
    let final_class = match classify(&config, DEFAULT_CLASSIFY_TOL) {
        Ok(c) => Some(c.class),
        Err(Error::Unsupported(_)) => None,
        Err(err) => return Err(err),
    };
    Ok((config, OptimizeTrace { iterations, energies, grad_norms, final_grad_norm: gn, stop, final_class }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasinTrial {
    pub trial: usize,
    /// Seed passed to [`random_config`] for the start.
    pub start_seed: u64,
    pub class: String,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasinResult {
    pub dim: usize,
    pub trials: Vec<BasinTrial>,
    /// Class key to number of trials ending there.
    pub histogram: BTreeMap<String, usize>,
}

impl BasinResult {
    /// Class with the lowest final energy and that energy.
    pub fn best(&self) -> Option<(&str, f64)> {
        self.trials
            .iter()
            .min_by(|a, b| a.energy.total_cmp(&b.energy))
            .map(|t| (t.class.as_str(), t.energy))
    }

    /// Lowest energy reached per class.
    pub fn min_energy_by_class(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for t in &self.trials {
            let e = out.entry(t.class.clone()).or_insert(f64::INFINITY);
            *e = f64::min(*e, t.energy);
        }
        out
    }
}

/// Start seed of a trial: first word of the ChaCha stream `trial` under `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng.next_u64()
}

/// Minimizes from `trials` random starts of d + 2 points on S^{d-1}.
/// Trials run in parallel; results do not depend on scheduling.
pub fn basin_experiment(d: usize, trials: usize, kind: PotentialKind, opts: &OptimizeOptions) -> Result<BasinResult> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    opts.validate()?;
    let results: Vec<Result<BasinTrial>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let start_seed = trial_seed(opts.seed, trial);
            let start = random_config(d, d + 2, start_seed)?;
            let (_, tr) = minimize(&start, kind, opts)?;
            let class = tr.final_class.as_ref().map_or_else(|| "Unclassified".to_string(), |c| c.key());
            Ok(BasinTrial {
                trial,
                start_seed,
                class,
                energy: tr.final_energy(),
                grad_norm: tr.final_grad_norm,
                iterations: tr.iterations,
                converged: tr.converged(),
            })
        })
        .collect();
    let trials = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut histogram = BTreeMap::new();
    for t in &trials {
        *histogram.entry(t.class.clone()).or_insert(0) += 1;
    }
    Ok(BasinResult { dim: d, trials, histogram })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{equatorial_polygon, orthogonal_simplexes, pyramid_config, PartitionType};
    use crate::perturbation::PerturbationBundle;
    use crate::potentials::energy;

    fn tbp() -> SphericalConfig {
        orthogonal_simplexes(&PartitionType::new(vec![3, 2]).unwrap()).unwrap()
    }

    #[test]
    fn random_start_reaches_tbp() {
        let e_tbp = energy(&tbp(), PotentialKind::Log).unwrap();
        for seed in 0..5 {
            let x0 = random_config(3, 5, seed).unwrap();
            let (_, tr) = minimize(&x0, PotentialKind::Log, &OptimizeOptions::default()).unwrap();
            assert!(tr.final_grad_norm < 1e-10, "{:?}", tr.stop);
            assert_eq!(tr.final_class, Some(StationaryClass::two_simplex(3, 2)));
            assert!((tr.final_energy() - e_tbp).abs() < 1e-8);
            for w in tr.energies.windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
        }
    }

    #[test]
    fn saddles_escape() {
        let e_tbp = energy(&tbp(), PotentialKind::Log).unwrap();
        let fp = pyramid_config(&PartitionType::new(vec![1, 2, 2]).unwrap()).unwrap();
        let pent = equatorial_polygon(5, 3).unwrap();
        for (start, noise) in [(fp, 1e-4), (pent, 1e-6)] {
            let x0 = PerturbationBundle::random_tangent(&start, 11, noise).apply(&start).unwrap();
            let (_, tr) = minimize(&x0, PotentialKind::Log, &OptimizeOptions::default()).unwrap();
            assert_eq!(tr.final_class, Some(StationaryClass::two_simplex(3, 2)));
            assert!((tr.final_energy() - e_tbp).abs() < 1e-8);
        }
    }

    #[test]
    fn options_validated() {
        let x0 = random_config(3, 5, 0).unwrap();
        let opts = OptimizeOptions { backtrack: 1.0, ..Default::default() };
        assert!(minimize(&x0, PotentialKind::Log, &opts).is_err());
        let opts = OptimizeOptions { step0: Some(-1.0), ..Default::default() };
        assert!(minimize(&x0, PotentialKind::Log, &opts).is_err());
    }

    #[test]
    fn max_iters_respected() {
        let x0 = random_config(3, 5, 3).unwrap();
        let opts = OptimizeOptions { max_iters: 3, ..Default::default() };
        let (_, tr) = minimize(&x0, PotentialKind::Log, &opts).unwrap();
        assert_eq!(tr.iterations, 3);
        assert_eq!(tr.stop, StopReason::MaxIters);
        assert_eq!(tr.to_csv(6).lines().count(), 5);
    }

    #[test]
    fn other_n_is_unclassified() {
        let x0 = random_config(3, 6, 1).unwrap();
        let (_, tr) = minimize(&x0, PotentialKind::Log, &OptimizeOptions::default()).unwrap();
        assert!(tr.converged());
        assert_eq!(tr.final_class, None);
    }

    #[test]
    fn basin_is_deterministic() {
        let opts = OptimizeOptions { seed: 42, ..Default::default() };
        let a = basin_experiment(3, 8, PotentialKind::Log, &opts).unwrap();
        let b = basin_experiment(3, 8, PotentialKind::Log, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.histogram.get("TwoSimplex(3,2)"), Some(&8));
        assert!(basin_experiment(3, 0, PotentialKind::Log, &opts).is_err());
    }
}
