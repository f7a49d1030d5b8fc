use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{phase_step, AuxChannelParams, PhaseModel};
use crate::error::Result;

/// Draws outputs of the auxiliary channel for inputs `x`.
pub fn simulate_aux<R: Rng + ?Sized>(x: &[Complex64], params: &AuxChannelParams, rng: &mut R) -> Result<Vec<Complex64>> {
    Ok(simulate_aux_trace(x, params, None, rng)?.0)
}

/// Like [`simulate_aux`] but also returns the phase trajectory. The initial
/// phase is uniform unless `theta0` pins it.
pub fn simulate_aux_trace<R: Rng + ?Sized>(
    x: &[Complex64],
    params: &AuxChannelParams,
    theta0: Option<f64>,
    rng: &mut R,
) -> Result<(Vec<Complex64>, Vec<f64>)> {
    params.validate_law()?;
    let model = params.phase_model;
    let mem = model.memory();
    let drawn = rng.random::<f64>() * 2.0 * PI;
    let start = match model {
        PhaseModel::Awgn => 0.0,
        _ => theta0.unwrap_or(drawn),
    };
    let mut history = vec![start; mem];
    let sigma_z = model.sigma_z();
    let noise_scale = params.sigma_n * FRAC_1_SQRT_2;
    let mut y = Vec::with_capacity(x.len());
    let mut phases = Vec::with_capacity(x.len());
    for (t, &xl) in x.iter().enumerate() {
        let slot = t % mem;
        let z: f64 = rng.sample(StandardNormal);
        let th = phase_step(&model, history[(t + mem - 1) % mem], history[slot], sigma_z * z);
        history[slot] = th;
        let nr: f64 = rng.sample(StandardNormal);
        let ni: f64 = rng.sample(StandardNormal);
        y.push(xl * Complex64::from_polar(params.h0, th) + Complex64::new(nr, ni) * noise_scale);
        phases.push(th);
    }
    Ok((y, phases))
}
