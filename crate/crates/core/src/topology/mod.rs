//! Topological invariants of closed curves and spanning certificates.

mod hausdorff;
mod linking;
mod probes;

use alloc::vec::Vec;

use crate::math::Vec3;
use crate::{Error, Result};

pub use hausdorff::hausdorff_distance;
pub use linking::{
    crossing_linking_number, gauss_linking_number, rounded_linking_number, self_linking, twist, writhe,
};
pub use probes::{
    make_probe_family, spanning_certificate, CertificateReport, ProbeCounts, ProbeFamily, ProbeTag,
};

/// Closed polygon; the last point connects back to the first. The point
/// order is the orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedPolyline {
    pts: Vec<Vec3>,
}

impl ClosedPolyline {
    pub fn new(pts: Vec<Vec3>) -> Result<Self> {
        if pts.len() < 3 {
            return Err(Error::InvalidInput("closed polyline needs at least 3 points"));
        }
        if !pts.iter().all(|p| p.iter().all(|x| x.is_finite())) {
            return Err(Error::InvalidInput("non-finite polyline point"));
        }
        let n = pts.len();
        if (0..n).any(|i| pts[i] == pts[(i + 1) % n]) {
            return Err(Error::InvalidInput("consecutive polyline points coincide"));
        }
        Ok(Self { pts })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.pts
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    /// Segment `i` from point `i` to point `i + 1 (mod n)`.
    pub fn segment(&self, i: usize) -> (Vec3, Vec3) {
        (self.pts[i], self.pts[(i + 1) % self.pts.len()])
    }

    pub fn reversed(&self) -> Self {
        let mut pts = self.pts.clone();
        pts.reverse();
        Self { pts }
    }

    pub fn map(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self { pts: self.pts.iter().map(f).collect() }
    }

    /// Smallest distance between segments of `self` and `other`.
    pub fn min_distance(&self, other: &ClosedPolyline) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.len() {
            let (a0, a1) = self.segment(i);
            for j in 0..other.len() {
                let (b0, b1) = other.segment(j);
                best = best.min(crate::math::segment_segment(&a0, &a1, &b0, &b1).0);
            }
        }
        best
    }
}

/// Inter-rod linking number and self-linking of each rod.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InvariantRecord {
    pub lk12: i64,
    pub n1: i64,
    pub n2: i64,
}
