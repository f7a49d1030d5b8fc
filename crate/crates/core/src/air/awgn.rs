use num_complex::Complex64;

use super::{blockwise_bits, check_pairs, log_marginal, mean_power, AirResult, AuxChannelParams, PhaseModel};
use crate::error::{Error, Result};

/// AIR of the memoryless Gaussian auxiliary channel `y = h0 x + n`.
pub fn air_awgn(x: &[Complex64], y: &[Complex64], params: &AuxChannelParams) -> Result<AirResult> {
    params.validate()?;
    if params.phase_model != PhaseModel::Awgn {
        return Err(Error::InvalidParams("air_awgn needs the AWGN phase model".into()));
    }
    check_pairs(x, y, 2)?;
    let p = mean_power(x);
    let s2 = params.sigma_n * params.sigma_n;
    let norm = params.log_norm();
    let info: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(x, y)| norm - (y - x * params.h0).norm_sqr() / s2 - log_marginal(*y, params, p))
        .collect();
    let (air, std_error) = blockwise_bits(&info);
    Ok(AirResult {
        air,
        std_error,
        params: *params,
        n_train: 0,
        n_eval: x.len(),
        seed: 0,
        config_digest: String::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::transceiver::generate_gaussian_symbols;

    #[test]
    fn matched_awgn_reaches_capacity() {
        // SNR 10 dB: log2(1 + 10)
        let mut rng = stream(21);
        let n = 200_000;
        let x = generate_gaussian_symbols(n, 1.0, &mut rng);
        let w = generate_gaussian_symbols(n, 0.1, &mut rng);
        let y: Vec<_> = x.iter().zip(&w).map(|(a, b)| a + b).collect();
        let r = air_awgn(&x, &y, &AuxChannelParams::awgn(1.0, 0.1f64.sqrt())).unwrap();
        assert!((r.air - 11f64.log2()).abs() < 0.05, "{r:?}");
        assert!(r.std_error > 0.0 && r.std_error < 0.01);
    }

    #[test]
    fn mismatch_lowers_rate() {
        let mut rng = stream(22);
        let n = 50_000;
        let x = generate_gaussian_symbols(n, 1.0, &mut rng);
        let w = generate_gaussian_symbols(n, 0.1, &mut rng);
        let y: Vec<_> = x.iter().zip(&w).map(|(a, b)| a + b).collect();
        let good = air_awgn(&x, &y, &AuxChannelParams::awgn(1.0, 0.1f64.sqrt())).unwrap().air;
        let bad = air_awgn(&x, &y, &AuxChannelParams::awgn(0.7, 0.1f64.sqrt())).unwrap().air;
        assert!(bad < good - 0.1);
    }

    #[test]
    fn doubled_gain_is_worse() {
        let mut rng = stream(23);
        let x = generate_gaussian_symbols(20_000, 1.0, &mut rng);
        let w = generate_gaussian_symbols(20_000, 0.1, &mut rng);
        let y: Vec<_> = x.iter().zip(&w).map(|(a, b)| a + b).collect();
        let good = air_awgn(&x, &y, &AuxChannelParams::awgn(1.0, 0.1f64.sqrt())).unwrap().air;
        let bad = air_awgn(&x, &y, &AuxChannelParams::awgn(2.0, 0.1f64.sqrt())).unwrap().air;
        assert!(bad < good);
    }

    #[test]
    fn overwhelming_noise_gives_no_rate() {
        let mut rng = stream(24);
        let x = generate_gaussian_symbols(50_000, 1.0, &mut rng);
        let w = generate_gaussian_symbols(50_000, 1e6, &mut rng);
        let y: Vec<_> = x.iter().zip(&w).map(|(a, b)| a + b).collect();
        let r = air_awgn(&x, &y, &AuxChannelParams::awgn(1.0, 1e3)).unwrap();
        assert!(r.air.abs() < 2.0 * r.std_error + 1e-5, "{r:?}");
    }

    #[test]
    fn rejects_phase_model() {
        let x = vec![Complex64::new(1.0, 0.0); 10];
        let p = AuxChannelParams::awgn(1.0, 1.0).with_phase(PhaseModel::Ar1 { sigma_z: 0.1 });
        assert!(air_awgn(&x, &x, &p).is_err());
    }
}
