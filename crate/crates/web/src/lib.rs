//! Browser bindings: watch points on S^2 relax under gradient descent, trace
//! the energy along the pyramid path, and plot the Riesz gap between the
//! bi-pyramid and the best square pyramid.
//!
//! Curves are returned as flat `[x0, y0, x1, y1, ..]` arrays.

use wasm_bindgen::prelude::*;

use logsphere::geometry::{self, PartitionType, SphericalConfig};
use logsphere::optimize::{minimize, OptimizeOptions, StopReason};
use logsphere::perturbation::{self, PerturbationBundle};
use logsphere::potentials::{energy, riemannian_grad_norm, PotentialKind};
use logsphere::sweep;

/// Start configurations offered by the demo.
pub fn start_config(start: &str, n: usize, seed: u64) -> Result<SphericalConfig, String> {
    let c = match start {
        "random" => geometry::random_config(3, n, seed),
        "pyramid" => geometry::pyramid_config(&PartitionType::new(vec![1, 2, 2]).map_err(|e| e.to_string())?),
        "pentagon" => geometry::equatorial_polygon(5, 3),
        "bipyramid" => geometry::orthogonal_simplexes(&PartitionType::new(vec![3, 2]).map_err(|e| e.to_string())?),
        other => return Err(format!("unknown start {other:?}")),
    }
    .map_err(|e| e.to_string())?;
    if start == "random" {
        return Ok(c);
    }
    // saddles need a nudge to start moving
    PerturbationBundle::random_tangent(&c, seed, 1e-4).apply(&c).map_err(|e| e.to_string())
}

/// Gradient descent on S^2 that can be advanced a few iterations per animation frame.
#[wasm_bindgen]
pub struct Relaxation {
    config: SphericalConfig,
    kind: PotentialKind,
    iterations: usize,
    converged: bool,
    class: String,
}

impl Relaxation {
    pub fn try_new(start: &str, n: usize, seed: u64, potential: &str) -> Result<Relaxation, String> {
        let kind: PotentialKind = potential.parse().map_err(|e: logsphere::Error| e.to_string())?;
        let config = start_config(start, n, seed)?;
        Ok(Relaxation { config, kind, iterations: 0, converged: false, class: String::new() })
    }

    pub fn try_step(&mut self, iterations: usize) -> Result<bool, String> {
        if self.converged {
            return Ok(true);
        }
        let opts = OptimizeOptions { max_iters: iterations.max(1), ..Default::default() };
        let (next, trace) = minimize(&self.config, self.kind, &opts).map_err(|e| e.to_string())?;
        self.config = next;
        self.iterations += trace.iterations;
        self.converged = trace.stop != StopReason::MaxIters;
        self.class = trace.final_class.map(|c| c.to_string()).unwrap_or_default();
        Ok(self.converged)
    }
}

#[wasm_bindgen]
impl Relaxation {
    /// `start`: random | pyramid | pentagon | bipyramid; `potential`: log, riesz:S, gauss:A, biquad:A,B,C.
    #[wasm_bindgen(constructor)]
    pub fn new(start: &str, n: usize, seed: u64, potential: &str) -> Result<Relaxation, JsError> {
        Relaxation::try_new(start, n, seed, potential).map_err(|e| JsError::new(&e))
    }

    /// Runs up to `iterations` descent steps; true once converged.
    pub fn step(&mut self, iterations: usize) -> Result<bool, JsError> {
        self.try_step(iterations).map_err(|e| JsError::new(&e))
    }

    /// Current points as [x0, y0, z0, x1, ..].
    pub fn points(&self) -> Vec<f64> {
        self.config.points().iter().flat_map(|p| p.iter().cloned()).collect()
    }

    pub fn energy(&self) -> f64 {
        energy(&self.config, self.kind).unwrap_or(f64::NAN)
    }

    pub fn grad_norm(&self) -> f64 {
        riemannian_grad_norm(&self.config, self.kind).unwrap_or(f64::NAN)
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Stationary class once converged (empty before, or when N != 5).
    pub fn class_label(&self) -> String {
        self.class.clone()
    }
}

/// [t, E(t), ..] along the {1,k,m} pyramid path.
pub fn pyramid_curve_points(k: usize, m: usize, samples: usize) -> Result<Vec<f64>, String> {
    if samples < 2 {
        return Err("need at least 2 samples".into());
    }
    let (lo, hi) = perturbation::pyramid_bracket(k, m);
    let mut out = Vec::with_capacity(2 * samples);
    for i in 0..samples {
        let t = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        let p = perturbation::pyramid_energy(k, m, t).map_err(|e| e.to_string())?;
        out.extend([p.t, p.energy]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn pyramid_curve(k: usize, m: usize, samples: usize) -> Result<Vec<f64>, JsError> {
    pyramid_curve_points(k, m, samples).map_err(|e| JsError::new(&e))
}

/// [s, gap(s), ..] on an even grid.
pub fn riesz_gap_points(from: f64, to: f64, samples: usize) -> Result<Vec<f64>, String> {
    if samples < 2 || !(from > 0.0 && from < to) {
        return Err("need 0 < from < to and at least 2 samples".into());
    }
    let mut out = Vec::with_capacity(2 * samples);
    for i in 0..samples {
        let s = from + (to - from) * i as f64 / (samples - 1) as f64;
        out.extend([s, sweep::riesz_gap(s).map_err(|e| e.to_string())?]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn riesz_gap_curve(from: f64, to: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    riesz_gap_points(from, to, samples).map_err(|e| JsError::new(&e))
}

/// Root of the gap in [lo, hi], or NaN when the bracket has no sign change.
#[wasm_bindgen]
pub fn riesz_crossover(lo: f64, hi: f64) -> f64 {
    sweep::find_crossover(lo, hi).unwrap_or(f64::NAN)
}
