#![allow(dead_code)]

use kplateau_core::energy::ElasticDensity;
use kplateau_core::math::{vec3, Vec3, TAU};
use kplateau_core::rod::{CrossSection, DensityField, Frame, LinkConfig, MassDensity, Placement, Rod};

pub fn frame(u: Vec3, w: Vec3) -> Frame {
    Frame::from_tangent(w, u).unwrap()
}

pub fn ring_rod(radius: f64, a: f64, n: usize, origin: Vec3, u: Vec3, w: Vec3) -> Rod {
    let df = DensityField::constant(TAU * radius, n, 1.0 / radius, 0.0, 0.0).unwrap();
    Rod::new(df, Placement::new(origin, frame(u, w)).unwrap(), CrossSection::disk(a, a).unwrap(), MassDensity::Uniform(1.0))
        .unwrap()
}

/// Unit circles r1 = (cos s, sin s, 0) and r2 = (1 - cos s, 0, sin s);
/// each passes through the centre of the other, midline distance 1.
pub fn hopf(a: f64, n: usize) -> LinkConfig {
    let r1 = ring_rod(1.0, a, n, vec3(1.0, 0.0, 0.0), vec3(-1.0, 0.0, 0.0), vec3(0.0, 1.0, 0.0));
    let r2 = ring_rod(1.0, a, n, vec3(0.0, 0.0, 0.0), vec3(1.0, 0.0, 0.0), vec3(0.0, 0.0, 1.0));
    LinkConfig::new(r1, Some(r2), Vec3::zeros()).unwrap()
}

pub fn single_ring(a: f64, n: usize) -> LinkConfig {
    let r1 = ring_rod(1.0, a, n, vec3(1.0, 0.0, 0.0), vec3(-1.0, 0.0, 0.0), vec3(0.0, 1.0, 0.0));
    LinkConfig::new(r1, None, Vec3::zeros()).unwrap()
}

pub fn isotropic(k: f64) -> ElasticDensity {
    ElasticDensity::new(k, k, k / 1.3, 0.0).unwrap()
}
