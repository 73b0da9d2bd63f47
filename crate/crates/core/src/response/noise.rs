//! Additive white Gaussian measurement noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::TransientResponse;

/// Mean-square value of a channel about its mean (the vibration power; the
/// static offset carries no information about the whirl).
pub fn channel_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / x.len() as f64
}

/// Adds independent white Gaussian noise to every displacement channel with
/// variance `power / 10^(snr_db/10)`, where the power of each channel is
/// measured over the recorded window. An infinite SNR leaves the response
/// unchanged. Each channel draws from its own stream of a ChaCha generator
/// seeded with `seed`, so results do not depend on evaluation order.
pub fn add_measurement_noise(
    response: &TransientResponse,
    snr_db: f64,
    seed: u64,
) -> TransientResponse {
    let mut out = response.clone();
    if snr_db == f64::INFINITY {
        return out;
    }
    let ratio = 10f64.powf(snr_db / 10.0);
    let channels = out.v.iter_mut().chain(out.w.iter_mut());
    for (stream, channel) in channels.enumerate() {
        let sigma = (channel_power(channel) / ratio).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        for x in channel.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x += sigma * z;
        }
    }
    out
}
