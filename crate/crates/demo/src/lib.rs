//! Browser demo: infection curves of the two dissemination processes, the
//! wash-out of initial conditions against the contraction bound, and the
//! per-step spectral norms of a random temporal graph.
//!
//! Every exported function returns a flat `Float64Array`; the layouts are
//! documented on the native counterparts.

use dyngesn::dissemination::{
    calibrate_switch_rate, random_temporal_graph, simulate_random_switch, simulate_si, SiConfig,
    SwitchConfig, TaskOptions,
};
use dyngesn::seeds::derive_seed;
use dyngesn::stability::contraction_coefficient;
use dyngesn::temporal_graph::{geometric_mean_of, snapshot_alphas};
use dyngesn::{Reservoir, ReservoirConfig, ReservoirState, Result};
use nalgebra::DMatrix;
use wasm_bindgen::prelude::*;

const RUNS: usize = 64;

/// Mean infected fraction over time, `2 (T + 1) + 1` values: the SI curve
/// for `t = 0..=T`, the calibrated random-switch curve, then the switch rate.
pub fn infection_curves(
    vertices: usize,
    horizon: usize,
    edge_prob: f64,
    p: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let g = random_temporal_graph(vertices, horizon, edge_prob, seed)?;
    let cal = calibrate_switch_rate(std::slice::from_ref(&g), p, &TaskOptions::new(seed))?;
    let mut si = vec![0.0; horizon + 1];
    let mut switch = vec![0.0; horizon + 1];
    for r in 0..RUNS {
        let run_seed = derive_seed(seed, &[r as u64]);
        let a = simulate_si(
            &g,
            &SiConfig {
                infection_probability: p,
                initial_infected: 1,
                seed: run_seed,
            },
        )?;
        let b = simulate_random_switch(
            &g,
            &SwitchConfig {
                rate: cal.rate,
                initial_infected: 1,
                seed: run_seed,
            },
        )?;
        for t in 0..=horizon {
            si[t] += a.active_fraction(t) / RUNS as f64;
            switch[t] += b.active_fraction(t) / RUNS as f64;
        }
    }
    si.extend(switch);
    si.push(cal.rate);
    Ok(si)
}

/// Distance between two trajectories started from the all-ones and all-minus-ones
/// states, relative to the initial distance, next to the running product of
/// `C_t`. Layout: `T + 1` ratios, then `T + 1` bounds.
pub fn washout_curve(
    vertices: usize,
    horizon: usize,
    edge_prob: f64,
    norm_mult: f64,
    leakage: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let topology = random_temporal_graph(vertices, horizon, edge_prob, seed)?;
    let labels = simulate_si(
        &topology,
        &SiConfig {
            infection_probability: 0.5,
            initial_infected: 1,
            seed,
        },
    )?;
    let g = topology.with_labels(labels)?;
    let alphas = snapshot_alphas(&g)?;
    let alpha = geometric_mean_of(&alphas);
    let target = norm_mult / if alpha > 0.0 { alpha } else { 1.0 };
    let cfg = ReservoirConfig::new(16, 1, 1, seed).with_leakage(leakage);
    let res = Reservoir::new(cfg, target)?;
    let norm = res.weights().layer(0).recurrent_norm();

    let mut x = ReservoirState::from_layers(vec![DMatrix::from_element(vertices, 16, 1.0)], 0);
    let mut y = ReservoirState::from_layers(vec![DMatrix::from_element(vertices, 16, -1.0)], 0);
    let d0 = x.distance(&y);
    let mut ratios = vec![1.0];
    let mut bounds = vec![1.0];
    for (adj, a) in g.snapshots().iter().zip(&alphas) {
        let u = g.labels().matrix_at(adj.time());
        x = res.step(&x, &u, adj)?;
        y = res.step(&y, &u, adj)?;
        ratios.push(x.distance(&y) / d0);
        bounds.push(bounds.last().unwrap() * contraction_coefficient(norm, leakage, *a));
    }
    ratios.extend(bounds);
    Ok(ratios)
}

/// `α*_t` for `t = 1..=T`, followed by their geometric mean.
pub fn alpha_profile(
    vertices: usize,
    horizon: usize,
    edge_prob: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let g = random_temporal_graph(vertices, horizon, edge_prob, seed)?;
    let mut alphas = snapshot_alphas(&g)?;
    alphas.push(geometric_mean_of(&alphas));
    Ok(alphas)
}

fn js(r: Result<Vec<f64>>) -> std::result::Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = infectionCurves)]
pub fn infection_curves_js(
    vertices: usize,
    horizon: usize,
    edge_prob: f64,
    p: f64,
    seed: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    js(infection_curves(
        vertices,
        horizon,
        edge_prob,
        p,
        seed.into(),
    ))
}

#[wasm_bindgen(js_name = washoutCurve)]
pub fn washout_curve_js(
    vertices: usize,
    horizon: usize,
    edge_prob: f64,
    norm_mult: f64,
    leakage: f64,
    seed: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    js(washout_curve(
        vertices,
        horizon,
        edge_prob,
        norm_mult,
        leakage,
        seed.into(),
    ))
}

#[wasm_bindgen(js_name = alphaProfile)]
pub fn alpha_profile_js(
    vertices: usize,
    horizon: usize,
    edge_prob: f64,
    seed: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    js(alpha_profile(vertices, horizon, edge_prob, seed.into()))
}

#[wasm_bindgen(js_name = buildId)]
pub fn build_id() -> String {
    dyngesn::BUILD_ID.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infection_curves_layout() {
        let v = infection_curves(20, 10, 0.1, 0.5, 1).unwrap();
        assert_eq!(v.len(), 2 * 11 + 1);
        assert!((v[0] - 0.05).abs() < 1e-12);
        assert!(v[..11].windows(2).all(|w| w[0] <= w[1]));
        assert!(v[11..22].windows(2).all(|w| w[0] <= w[1]));
        assert!((0.0..=1.0).contains(&v[22]));
    }

    #[test]
    fn washout_stays_under_bound() {
        let v = washout_curve(20, 50, 0.1, 0.9, 0.3, 2).unwrap();
        let (ratios, bounds) = v.split_at(51);
        for (r, b) in ratios.iter().zip(bounds) {
            assert!(*r <= b * (1.0 + 1e-9));
        }
        assert!(ratios[50] < ratios[1]);
    }

    #[test]
    fn alpha_profile_ends_with_geometric_mean() {
        let v = alpha_profile(15, 8, 0.2, 3).unwrap();
        assert_eq!(v.len(), 9);
        let g = geometric_mean_of(&v[..8]);
        assert_eq!(v[8], g);
    }

    #[test]
    fn errors_surface_as_results() {
        assert!(infection_curves(10, 5, 1.5, 0.5, 0).is_err());
        assert!(alpha_profile(10, 0, 0.1, 0).is_err());
    }
}
