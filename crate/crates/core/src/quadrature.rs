//! Adaptive Gauss–Kronrod (10/21) quadrature on finite intervals.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Accuracy request for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Relative tolerance on the integral, in (0, 1e-3].
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-10,
            max_subdivisions: 1000,
        }
    }
}

impl QuadratureSpec {
    pub fn check(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-3) {
            return Err(Error::invalid("rel_tol", "must lie in (0, 1e-3]"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::invalid("max_subdivisions", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_err: f64,
    pub intervals: usize,
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_600_525_444,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];
// Weights of the embedded 10-point Gauss rule at XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

#[derive(Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = hw * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * hw;
    let resabs = resabs * hw.abs();
    let resasc = resasc * hw.abs();
    let mut err = ((resk - resg) * hw).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Piece { a, b, value, err }
}

/// Integrates `f` over `[a, b]`, bisecting the interval with the largest
/// error estimate until the total error is below `rel_tol·|integral|`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    spec.check()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("integration limits must be finite"));
    }
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            abs_err: 0.0,
            intervals: 0,
        });
    }
    let mut pieces: Vec<Piece> = Vec::with_capacity(64);
    pieces.push(kronrod(&mut f, a, b));
    loop {
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let err: f64 = pieces.iter().map(|p| p.err).sum();
        if !value.is_finite() || !err.is_finite() {
            return Err(Error::domain("integrand is not finite"));
        }
        if err <= spec.rel_tol * value.abs() || err == 0.0 {
            return Ok(Estimate {
                value,
                abs_err: err,
                intervals: pieces.len(),
            });
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, p)| if p.err > acc.1 { (i, p.err) } else { acc });
        let p = pieces[worst];
        let mid = 0.5 * (p.a + p.b);
        let too_narrow = (p.b - p.a).abs() <= 1e3 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE);
        if pieces.len() >= spec.max_subdivisions || too_narrow {
            return Err(Error::Quadrature {
                achieved: err / value.abs(),
                requested: spec.rel_tol,
            });
        }
        pieces[worst] = kronrod(&mut f, p.a, mid);
        pieces.push(kronrod(&mut f, mid, p.b));
    }
}

/// `∫_0^∞ f(y) dy` through the map `y = t/(1 − t)`.
pub fn integrate_half_line<F: FnMut(f64) -> f64>(mut f: F, spec: &QuadratureSpec) -> Result<Estimate> {
    integrate(
        |t: f64| {
            let one_minus = 1.0 - t;
            f(t / one_minus) / (one_minus * one_minus)
        },
        0.0,
        1.0,
        spec,
    )
}
