use alloc::vec::Vec;

use super::{DensityField, Frame, FramedCurve, Placement};
use crate::math::Vec3;
use crate::{Error, Result};

#[derive(Clone, Copy)]
struct State {
    r: Vec3,
    u: Vec3,
    v: Vec3,
    w: Vec3,
}

impl State {
    fn axpy(&self, k: &State, a: f64) -> State {
        State { r: self.r + k.r * a, u: self.u + k.u * a, v: self.v + k.v * a, w: self.w + k.w * a }
    }

    fn frame(&self) -> Frame {
        Frame { u: self.u, v: self.v, w: self.w }
    }
}

fn derivative(st: &State, d: [f64; 3]) -> State {
    let omega = st.v * d[0] - st.u * d[1] + st.w * d[2];
    State { r: st.w, u: omega.cross(&st.u), v: omega.cross(&st.v), w: omega.cross(&st.w) }
}

/// Classical RK4 step of length `dt`; `d0`, `dm`, `d1` are the densities at
/// the start, midpoint and end of the step. The frame is re-orthonormalized.
fn rk4_step(st: &State, dt: f64, d0: [f64; 3], dm: [f64; 3], d1: [f64; 3]) -> State {
    let k1 = derivative(st, d0);
    let k2 = derivative(&st.axpy(&k1, dt / 2.0), dm);
    let k3 = derivative(&st.axpy(&k2, dt / 2.0), dm);
    let k4 = derivative(&st.axpy(&k3, dt), d1);
    let mut next = *st;
    next.r += (k1.r + (k2.r + k3.r) * 2.0 + k4.r) * (dt / 6.0);
    next.u += (k1.u + (k2.u + k3.u) * 2.0 + k4.u) * (dt / 6.0);
    next.v += (k1.v + (k2.v + k3.v) * 2.0 + k4.v) * (dt / 6.0);
    next.w += (k1.w + (k2.w + k3.w) * 2.0 + k4.w) * (dt / 6.0);
    let f = next.frame().reorthonormalized();
    State { r: next.r, u: f.u, v: f.v, w: f.w }
}

fn lerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t]
}

/// Integrates the director-frame system from the placement at `s = 0`.
pub fn integrate_frame(df: &DensityField, pl: &Placement) -> Result<FramedCurve> {
    if pl.frame.defect() >= Frame::TOLERANCE {
        return Err(Error::InvalidInput("placement frame is not orthonormal"));
    }
    if !pl.origin.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidInput("placement origin must be finite"));
    }
    let n = df.len();
    let h = df.spacing();
    let mut st = State { r: pl.origin, u: pl.frame.u, v: pl.frame.v, w: pl.frame.w };
    let mut points = Vec::with_capacity(n);
    let mut frames = Vec::with_capacity(n);
    let mut dens = Vec::with_capacity(n);
    points.push(st.r);
    frames.push(st.frame());
    dens.push(df.node(0));
    for i in 0..n - 1 {
        let (d0, d1) = (df.node(i), df.node(i + 1));
        st = rk4_step(&st, h, d0, lerp(d0, d1, 0.5), d1);
        if !st.r.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("integration produced non-finite values"));
        }
        points.push(st.r);
        frames.push(st.frame());
        dens.push(d1);
    }
    Ok(FramedCurve::from_parts(points, frames, h, dens))
}

/// `(|r(L) - r(0)|, |w(L) - w(0)|)`.
pub fn closure_residual(fc: &FramedCurve) -> (f64, f64) {
    let n = fc.len();
    let p = (fc.points()[n - 1] - fc.points()[0]).norm();
    let t = (fc.frames()[n - 1].w - fc.frames()[0].w).norm();
    (p, t)
}

pub(super) fn state_at(fc: &FramedCurve, s: f64) -> (Vec3, Frame) {
    let n = fc.len();
    let h = fc.spacing();
    let x = (s / h).clamp(0.0, (n - 1) as f64);
    let i = (num_traits::Float::floor(x) as usize).min(n - 2);
    let dt = (x - i as f64) * h;
    let f = fc.frames()[i];
    if dt == 0.0 {
        return (fc.points()[i], f);
    }
    let (d0, d1) = (fc.densities()[i], fc.densities()[i + 1]);
    let at = |t: f64| lerp(d0, d1, t / h);
    let st = State { r: fc.points()[i], u: f.u, v: f.v, w: f.w };
    let next = rk4_step(&st, dt, d0, at(dt / 2.0), at(dt));
    (next.r, next.frame())
}
