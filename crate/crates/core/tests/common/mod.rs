#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use stable_varma::codec::{self, CayleyCode, LdlCode, RealCodec};
use stable_varma::model::VarmaSpec;
use stable_varma::stable::{OrthoMatrix, PreParamBlock, SpdMatrix};

pub fn normals(rng: &mut ChaCha8Rng, sd: f64, len: usize) -> Vec<f64> {
    let dist = Normal::new(0.0, sd).unwrap();
    (0..len).map(|_| dist.sample(rng)).collect()
}

pub fn random_spd(rng: &mut ChaCha8Rng, m: usize, sd: f64) -> SpdMatrix {
    let code = LdlCode { l: normals(rng, sd, m * (m - 1) / 2), d: normals(rng, sd, m) };
    codec::ldl_decode(&code).unwrap()
}

pub fn random_ortho(rng: &mut ChaCha8Rng, m: usize, sd: f64) -> OrthoMatrix {
    let code = CayleyCode { s: normals(rng, sd, m * (m - 1) / 2), delta: rng.random_bool(0.5) };
    codec::cayley_decode(&code, m).unwrap()
}

pub fn random_preparams(rng: &mut ChaCha8Rng, m: usize, k: usize, sd: f64) -> PreParamBlock {
    let vs = (0..k).map(|_| random_spd(rng, m, sd)).collect();
    let qs = (0..k).map(|_| random_ortho(rng, m, sd)).collect();
    PreParamBlock::new(vs, qs, SpdMatrix::identity(m)).unwrap()
}

pub fn random_codec(rng: &mut ChaCha8Rng, m: usize, p: usize, q: usize, sd: f64) -> RealCodec {
    RealCodec {
        reals: normals(rng, sd, codec::real_count(m, p, q)),
        deltas: (0..p + q).map(|_| rng.random_bool(0.5)).collect(),
    }
}

pub fn random_spec(rng: &mut ChaCha8Rng, m: usize, p: usize, q: usize, sd: f64) -> VarmaSpec {
    VarmaSpec::from_codec(&random_codec(rng, m, p, q, sd), m, p, q).unwrap()
}
