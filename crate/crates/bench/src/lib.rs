//! Shared fixtures for the criterion benches.

use irsbf_core::model::{sample_channel, ChannelRealization, NetworkGeometry, UncertaintyModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn desk_geometry(m: usize, n: usize) -> NetworkGeometry {
    let mut geo = NetworkGeometry::desk_default();
    geo.m = m;
    geo.n = n;
    geo
}

pub fn fixture(m: usize, n: usize, seed: u64) -> (NetworkGeometry, ChannelRealization, UncertaintyModel) {
    let geo = desk_geometry(m, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ch = sample_channel(&geo, &mut rng);
    let unc = UncertaintyModel::exact(&ch);
    (geo, ch, unc)
}
