//! The deformation coordinate μ(x) = ∫ dz / U(z) and its inverse.

use super::MassProfile;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_from_neg_infinity, integrate_to_pos_infinity, QuadOptions};

/// Where μ vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchor {
    At(f64),
    /// μ → 0 as x → −∞ (needs a convergent left tail).
    NegInfinity,
    /// μ → 0 as x → +∞ (needs a convergent right tail).
    PosInfinity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuMapOptions {
    /// Absolute quadrature tolerance.
    pub tolerance: f64,
    /// Number of cached (x, μ) anchor pairs.
    pub anchors: usize,
    /// Half-width used to truncate unbounded domains when placing anchors.
    pub cutoff: f64,
}

impl Default for MuMapOptions {
    fn default() -> Self {
        Self { tolerance: 1e-12, anchors: 256, cutoff: 50.0 }
    }
}

#[derive(Debug, Clone)]
pub struct MuMap {
    profile: MassProfile,
    anchor: Anchor,
    opts: MuMapOptions,
    xs: Vec<f64>,
    mus: Vec<f64>,
    range: (f64, f64),
}

impl MuMap {
    /// Map anchored at the profile's natural reference point.
    pub fn new(profile: MassProfile) -> Result<Self> {
        let anchor = profile.natural_anchor();
        Self::with_anchor(profile, anchor, MuMapOptions::default())
    }

    pub fn with_anchor(profile: MassProfile, anchor: Anchor, opts: MuMapOptions) -> Result<Self> {
        if !(opts.tolerance > 0.0) || opts.anchors < 2 || !(opts.cutoff > 0.0) {
            return Err(Error::InvalidParam("μ-map needs tolerance > 0, anchors ≥ 2, cutoff > 0".into()));
        }
        let (lo, hi) = profile.domain();
        let center = match anchor {
            Anchor::At(x) => {
                if !x.is_finite() || !profile.contains(x) {
                    return Err(Error::OutsideDomain { x, lo, hi });
                }
                x
            }
            Anchor::NegInfinity if lo > f64::NEG_INFINITY => {
                return Err(Error::InvalidParam("−∞ anchor on a left-bounded domain".into()))
            }
            Anchor::PosInfinity if hi < f64::INFINITY => {
                return Err(Error::InvalidParam("+∞ anchor on a right-bounded domain".into()))
            }
            _ => 0.0f64.clamp(lo, hi),
        };
        let span_lo = lo.max(center - opts.cutoff);
        let span_hi = hi.min(center + opts.cutoff);
        let n = opts.anchors;
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                if i == n - 1 {
                    span_hi
                } else {
                    span_lo + (span_hi - span_lo) * (i as f64 / (n - 1) as f64)
                }
            })
            .collect();

        let mut map = Self { profile, anchor, opts, xs, mus: vec![0.0; n], range: (0.0, 0.0) };
        let inv_u = |z: f64| 1.0 / map.profile.u(z);
        let q = map.quad_opts();

        // Seed one anchor, then accumulate segment integrals outward from it.
        let seed = match anchor {
            Anchor::At(x) => {
                let j = nearest(&map.xs, x);
                map.mus[j] = integrate(inv_u, x, map.xs[j], &q)?.value;
                j
            }
            Anchor::NegInfinity => {
                map.mus[0] = integrate_from_neg_infinity(inv_u, map.xs[0], &q)?.value;
                0
            }
            Anchor::PosInfinity => {
                map.mus[n - 1] = -integrate_to_pos_infinity(inv_u, map.xs[n - 1], &q)?.value;
                n - 1
            }
        };
        for j in seed + 1..n {
            map.mus[j] = map.mus[j - 1] + integrate(inv_u, map.xs[j - 1], map.xs[j], &q)?.value;
        }
        for j in (0..seed).rev() {
            map.mus[j] = map.mus[j + 1] - integrate(inv_u, map.xs[j], map.xs[j + 1], &q)?.value;
        }

        // A tail that fails to converge is treated as divergent: μ is unbounded there.
        let range_lo = match anchor {
            Anchor::NegInfinity => 0.0,
            _ if map.xs[0] == lo => map.mus[0],
            _ => match integrate_from_neg_infinity(inv_u, map.xs[0], &q) {
                Ok(r) if lo == f64::NEG_INFINITY => map.mus[0] - r.value,
                Ok(_) => map.mus[0] - integrate(inv_u, lo, map.xs[0], &q)?.value,
                Err(_) if lo == f64::NEG_INFINITY => f64::NEG_INFINITY,
                Err(e) => return Err(e),
            },
        };
        let range_hi = match anchor {
            Anchor::PosInfinity => 0.0,
            _ if map.xs[n - 1] == hi => map.mus[n - 1],
            _ => match integrate_to_pos_infinity(inv_u, map.xs[n - 1], &q) {
                Ok(r) if hi == f64::INFINITY => map.mus[n - 1] + r.value,
                Ok(_) => map.mus[n - 1] + integrate(inv_u, map.xs[n - 1], hi, &q)?.value,
                Err(_) if hi == f64::INFINITY => f64::INFINITY,
                Err(e) => return Err(e),
            },
        };
        map.range = (range_lo, range_hi);
        if let Some(x_ref) = map.linear_reference() {
            let u = map.profile.u(x_ref);
            for (x, m) in map.xs.iter().zip(map.mus.iter_mut()) {
                *m = (x - x_ref) / u;
            }
        }
        Ok(map)
    }

    fn quad_opts(&self) -> QuadOptions {
        QuadOptions { abs_tol: self.opts.tolerance, rel_tol: 1e-13, max_intervals: 400 }
    }

    pub fn profile(&self) -> &MassProfile {
        &self.profile
    }

    pub fn anchor(&self) -> Anchor {
        self.anchor
    }

    pub fn options(&self) -> &MuMapOptions {
        &self.opts
    }

    /// Cached `(x, μ)` anchor pairs.
    pub fn anchors(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.mus.iter().copied())
    }

    /// Attainable μ values `(inf, sup)` over the domain; ends may be infinite.
    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    /// ∫_{x_ref}^{x} dz/U(z).
    pub fn mu(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.profile.domain();
        if !(x >= lo && x <= hi) {
            return Err(Error::OutsideDomain { x, lo, hi });
        }
        let j = self.xs.partition_point(|&a| a <= x).saturating_sub(1);
        let xa = self.xs[j];
        if x == xa {
            return Ok(self.mus[j]);
        }
        if let Some(x_ref) = self.linear_reference() {
            return Ok((x - x_ref) / self.profile.u(x));
        }
        let inv_u = |z: f64| 1.0 / self.profile.u(z);
        Ok(self.mus[j] + integrate(inv_u, xa, x, &self.quad_opts())?.value)
    }

    // Constant mass: μ is linear and evaluated exactly.
    fn linear_reference(&self) -> Option<f64> {
        match self.anchor {
            Anchor::At(x_ref) if self.profile.is_constant() => Some(x_ref),
            _ => None,
        }
    }

    /// x with μ(x) = `m`: bracket on the cache, then Newton steps with μ′ = 1/U,
    /// falling back to bisection whenever a step leaves the bracket.
    pub fn mu_inverse(&self, m: f64) -> Result<f64> {
        let (rlo, rhi) = self.range;
        let (lo, hi) = self.profile.domain();
        let inside_lo = if lo.is_finite() { m >= rlo } else { m > rlo };
        let inside_hi = if hi.is_finite() { m <= rhi } else { m < rhi };
        if !(m.is_finite() && inside_lo && inside_hi) {
            return Err(Error::MuOutOfRange { value: m, lo: rlo, hi: rhi });
        }
        if let Some(x_ref) = self.linear_reference() {
            return Ok(x_ref + m * self.profile.u(x_ref));
        }
        let n = self.xs.len();
        let j = self.mus.partition_point(|&v| v <= m);
        if j > 0 && self.mus[j - 1] == m {
            return Ok(self.xs[j - 1]);
        }
        let (mut a, mut b) = if j == 0 {
            (self.expand(m, -1)?, self.xs[0])
        } else if j == n {
            (self.xs[n - 1], self.expand(m, 1)?)
        } else {
            (self.xs[j - 1], self.xs[j])
        };
        let (mut fa, mut fb) = (self.mu(a)? - m, self.mu(b)? - m);
        if fa == 0.0 {
            return Ok(a);
        }
        if fb == 0.0 {
            return Ok(b);
        }
        let mut x = a - fa * (b - a) / (fb - fa);
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        for _ in 0..200 {
            let f = self.mu(x)? - m;
            if f == 0.0 {
                return Ok(x);
            }
            if f < 0.0 {
                a = x;
                fa = f;
            } else {
                b = x;
                fb = f;
            }
            let mut next = x - f * self.profile.u(x);
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) || b - a <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                return Ok(next);
            }
            x = next;
        }
        let _ = (fa, fb);
        Err(Error::InverseMu(m))
    }

    // Walk outward from the cache edge until μ crosses `m` (or the domain ends).
    fn expand(&self, m: f64, dir: i32) -> Result<f64> {
        let (lo, hi) = self.profile.domain();
        let n = self.xs.len();
        let edge = if dir < 0 { self.xs[0] } else { self.xs[n - 1] };
        let mut step = (self.xs[n - 1] - self.xs[0]).max(1.0);
        for _ in 0..64 {
            let x = if dir < 0 { (edge - step).max(lo) } else { (edge + step).min(hi) };
            let v = self.mu(x)?;
            if (dir < 0 && v <= m) || (dir > 0 && v >= m) {
                return Ok(x);
            }
            if x == lo || x == hi {
                break;
            }
            step *= 2.0;
        }
        Err(Error::InverseMu(m))
    }
}

fn nearest(xs: &[f64], x: f64) -> usize {
    let j = xs.partition_point(|&a| a <= x);
    if j == 0 {
        0
    } else if j == xs.len() {
        j - 1
    } else if x - xs[j - 1] <= xs[j] - x {
        j - 1
    } else {
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::massprofile::registry_get;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn map(name: &str, params: &[(&str, f64)]) -> MuMap {
        MuMap::new(registry_get(name, params).unwrap()).unwrap()
    }

    #[test]
    fn constant_profile_is_identity() {
        let m = map("constant", &[("m0", 0.5)]);
        assert_relative_eq!(m.mu(3.0).unwrap(), 3.0, epsilon = 1e-14);
        assert_relative_eq!(m.mu_inverse(2.5).unwrap(), 2.5, epsilon = 1e-14);
        assert_eq!(m.range(), (f64::NEG_INFINITY, f64::INFINITY));
    }

    #[test]
    fn asinh_values() {
        let m = map("asinh_mu", &[("m0", 0.5), ("alpha", 1.0)]);
        assert_relative_eq!(m.mu(1.0).unwrap(), 0.881_373_587_019_543, epsilon = 1e-12);
        assert_relative_eq!(m.mu(-2.0).unwrap(), (-2.0f64).asinh(), epsilon = 1e-12);
        assert!((m.mu_inverse(1f64.asinh()).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exp_mass_anchored_at_minus_infinity() {
        let m = map("exp_mass", &[("m0", 0.5), ("beta", 1.0)]);
        assert_eq!(m.anchor(), Anchor::NegInfinity);
        assert_relative_eq!(m.mu(0.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(m.mu(-3.0).unwrap(), (-3.0f64).exp(), epsilon = 1e-12);
        assert_eq!(m.range().0, 0.0);
        assert_eq!(m.range().1, f64::INFINITY);
        assert!(m.mu_inverse(-0.1).is_err());
        assert_relative_eq!(m.mu_inverse(2.0).unwrap(), 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn exp_mass_negative_beta_anchored_at_plus_infinity() {
        let m = map("exp_mass", &[("m0", 0.5), ("beta", -0.5)]);
        assert_eq!(m.anchor(), Anchor::PosInfinity);
        let p = m.profile().clone();
        for &x in &[-3.0, 0.0, 2.0] {
            assert_relative_eq!(m.mu(x).unwrap(), p.mu_closed(x).unwrap(), epsilon = 1e-11);
        }
    }

    #[test]
    fn arctan_range_is_bounded() {
        let m = map("arctan_mu", &[("m0", 0.5), ("alpha", 2.0)]);
        assert_relative_eq!(m.range().1, FRAC_PI_4, epsilon = 1e-10);
        assert_relative_eq!(m.range().0, -FRAC_PI_4, epsilon = 1e-10);
        let m1 = map("arctan_mu", &[("m0", 0.5), ("alpha", 1.0)]);
        assert!(matches!(m1.mu_inverse(FRAC_PI_2 + 0.1), Err(Error::MuOutOfRange { .. })));
        // far tail beyond the cached anchors
        let x = m1.mu_inverse(FRAC_PI_2 - 1e-3).unwrap();
        assert_relative_eq!(x, (FRAC_PI_2 - 1e-3).tan(), max_relative = 1e-8);
    }

    #[test]
    fn tabulated_map_on_half_line() {
        let samples: Vec<(f64, f64)> = (0..=100).map(|i| (1.0 + 0.05 * i as f64, 0.5)).collect();
        let p = MassProfile::tabulated(&samples).unwrap();
        let m = MuMap::new(p).unwrap();
        assert_eq!(m.anchor(), Anchor::At(1.0));
        assert_relative_eq!(m.mu(3.0).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(m.range().1, 5.0, epsilon = 1e-12);
        assert!(matches!(m.mu(0.5), Err(Error::OutsideDomain { .. })));
        assert_relative_eq!(m.mu_inverse(4.5).unwrap(), 5.5, epsilon = 1e-12);
    }

    #[test]
    fn bad_anchors_are_rejected() {
        let p = registry_get("constant", &[("m0", 0.5)]).unwrap();
        assert!(MuMap::with_anchor(p.clone(), Anchor::NegInfinity, MuMapOptions::default()).is_err());
        assert!(MuMap::with_anchor(p, Anchor::At(f64::NAN), MuMapOptions::default()).is_err());
    }

    #[test]
    fn closed_form_agreement_on_dense_sample() {
        let profiles = [
            registry_get("asinh_mu", &[("m0", 0.5), ("alpha", 1.0)]).unwrap(),
            registry_get("arctan_mu", &[("m0", 0.5), ("alpha", 2.0)]).unwrap(),
            registry_get("exp_mass", &[("m0", 0.5), ("beta", 1.0)]).unwrap(),
        ];
        for p in profiles {
            let m = MuMap::new(p.clone()).unwrap();
            for i in 0..1000 {
                let x = -8.0 + 12.0 * i as f64 / 999.0;
                let err = (m.mu(x).unwrap() - p.mu_closed(x).unwrap()).abs();
                assert!(err <= 1e-10, "{} at x={x}: {err:e}", p.name());
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn monotone_and_round_trips(x1 in -20.0f64..20.0, dx in 1e-6f64..5.0, alpha in 0.1f64..3.0) {
            let m = map("asinh_mu", &[("m0", 0.7), ("alpha", alpha)]);
            let (a, b) = (m.mu(x1).unwrap(), m.mu(x1 + dx).unwrap());
            prop_assert!(a < b);
            prop_assert!((m.mu_inverse(a).unwrap() - x1).abs() <= 10.0 * m.options().tolerance);
        }
    }
}
