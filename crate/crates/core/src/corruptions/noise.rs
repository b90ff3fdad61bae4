//! Per-element noise on `[0, 1]` planes. Elements are visited in raster
//! order (row-major, R then G then B), which fixes the RNG draw order.

use crate::rng::Rng;

pub(crate) fn gaussian(plane: &mut [f64], sigma: f64, rng: &mut Rng) {
    for v in plane.iter_mut() {
        *v += sigma * rng.normal();
    }
}

/// Salt-and-pepper: each element is replaced by 0 or 1 with probability `amount`.
pub(crate) fn impulse(plane: &mut [f64], amount: f64, rng: &mut Rng) {
    for v in plane.iter_mut() {
        if rng.uniform() < amount {
            *v = if rng.uniform() < 0.5 { 0.0 } else { 1.0 };
        }
    }
}

/// Multiplicative noise `x + x * sigma * n`.
pub(crate) fn speckle(plane: &mut [f64], sigma: f64, rng: &mut Rng) {
    for v in plane.iter_mut() {
        *v += *v * sigma * rng.normal();
    }
}

/// Photon shot noise followed by Gaussian read noise:
/// `Poisson(x * photons) / photons + sigma * n`.
pub(crate) fn poisson_gaussian(plane: &mut [f64], sigma: f64, photons: f64, rng: &mut Rng) {
    for v in plane.iter_mut() {
        let shot = rng.poisson(v.max(0.0) * photons) as f64 / photons;
        *v = shot + sigma * rng.normal();
    }
}
