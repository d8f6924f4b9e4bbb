//! Globally adaptive Gauss–Kronrod (G10/K21) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate meets `max(abs_tol, rel_tol * |I|)`. Semi-infinite integrals are
//! mapped onto `(0, 1]` with `z = x ∓ (1 - t) / t`; the Kronrod nodes never
//! touch `t = 0`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-13,
            max_intervals: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// One K21 panel on `[a, b]`: (integral, error estimate).
pub fn gauss_kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let raw = ((kronrod - gauss) * half).abs();
    // QUADPACK-style sharpening of the raw |K - G| estimate.
    let err = if raw > 0.0 {
        let scaled = (200.0 * raw / value.abs().max(f64::MIN_POSITIVE)).powf(1.5);
        raw.min(value.abs() * scaled).max(50.0 * f64::EPSILON * value.abs())
    } else {
        0.0
    };
    (value, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrate `f` over `[a, b]` (either orientation).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let (value, error) = gauss_kronrod21(&f, lo, hi);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a: lo, b: hi, value, error });
    let mut total = value;
    let mut total_err = error;

    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Quadrature { a, b, err: total_err });
        }
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= target {
            return Ok(QuadResult { value: sign * total, error: total_err, intervals: heap.len() });
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature { a, b, err: total_err });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            return Err(Error::Quadrature { a, b, err: total_err });
        }
        let (v1, e1) = gauss_kronrod21(&f, worst.a, mid);
        let (v2, e2) = gauss_kronrod21(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        // Re-sum occasionally so cancellation in the running totals cannot drift.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
}

/// ∫_{-∞}^{x} f(z) dz.
pub fn integrate_from_neg_infinity<F: Fn(f64) -> f64>(f: F, x: f64, opts: &QuadOptions) -> Result<QuadResult> {
    let g = |t: f64| {
        let s = (1.0 - t) / t;
        f(x - s) / (t * t)
    };
    integrate(g, 0.0, 1.0, opts)
}

/// ∫_{x}^{+∞} f(z) dz.
pub fn integrate_to_pos_infinity<F: Fn(f64) -> f64>(f: F, x: f64, opts: &QuadOptions) -> Result<QuadResult> {
    let g = |t: f64| {
        let s = (1.0 - t) / t;
        f(x + s) / (t * t)
    };
    integrate(g, 0.0, 1.0, opts)
}
