//! Seeded scenario generators shared by the integration suites.
#![allow(dead_code)]

use qslab::{BlochState, ChannelModel};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (r.gen_range(lo.ln()..hi.ln())).exp()
}

pub fn random_oun(r: &mut ChaCha8Rng) -> ChannelModel {
    let mu = log_uniform(r, 0.1, 3.0);
    ChannelModel::oun(mu, mu * log_uniform(r, 0.01, 10.0)).unwrap()
}

pub fn random_rtn(r: &mut ChaCha8Rng) -> ChannelModel {
    let mu = log_uniform(r, 0.1, 3.0);
    ChannelModel::rtn(mu * log_uniform(r, 0.05, 3.0), mu).unwrap()
}

pub fn random_nmad(r: &mut ChaCha8Rng) -> ChannelModel {
    let mu = log_uniform(r, 0.1, 3.0);
    ChannelModel::nmad(mu, mu * log_uniform(r, 0.02, 20.0)).unwrap()
}

pub fn random_dephasing(r: &mut ChaCha8Rng) -> ChannelModel {
    if r.gen_bool(0.5) {
        random_oun(r)
    } else {
        random_rtn(r)
    }
}

/// Bloch vector uniform in direction; a third of the draws are pure.
pub fn random_state(r: &mut ChaCha8Rng) -> BlochState {
    loop {
        let v: [f64; 3] = [
            r.gen_range(-1.0..1.0),
            r.gen_range(-1.0..1.0),
            r.gen_range(-1.0..1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(0.05..=1.0).contains(&n) {
            continue;
        }
        let len = if r.gen_bool(1.0 / 3.0) {
            1.0
        } else {
            r.gen_range(0.1..0.999)
        };
        let s = len / n;
        let st = BlochState::new(v[0] * s, v[1] * s, v[2] * s)
            .or_else(|_| {
                BlochState::new(
                    v[0] * s * (1.0 - 1e-15),
                    v[1] * s * (1.0 - 1e-15),
                    v[2] * s * (1.0 - 1e-15),
                )
            })
            .unwrap();
        return st;
    }
}

/// A driving time inside the regular window of `c` (before any zero of p).
pub fn random_tau(r: &mut ChaCha8Rng, c: &ChannelModel) -> f64 {
    let cap = (4.0 / c.mu()).min(c.first_zero().map_or(f64::INFINITY, |z| 0.9 * z));
    r.gen_range(0.05 * cap..cap)
}

/// Relative agreement; values both at rounding level count as equal.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    let scale = a.abs().max(b.abs());
    scale < 1e-14 || (a - b).abs() <= tol * scale
}
