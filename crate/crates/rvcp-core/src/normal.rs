//! High-precision standard-normal CDF, density, and quantile.
//!
//! The CDF is evaluated through Cody's rational Chebyshev approximations for
//! erf/erfc (W. J. Cody, "Rational Chebyshev approximation for the error
//! function", Math. Comp. 23 (1969); SPECFUN coefficients), the quantile
//! through Wichura's algorithm AS 241 (routine PPND16, Appl. Statist. 37
//! (1988)). Both are accurate to well under 1e-12 absolute error over the
//! full double range, which the threshold-solver contracts require; the test
//! module pins them against a 50-digit reference table.

/// 1/sqrt(2*pi).
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_9;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Standard normal density.
#[inline]
#[must_use]
pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF Phi(x).
///
/// Absolute error <= 1e-15; relative error stays bounded into the far lower
/// tail because the erfc branch never cancels.
#[must_use]
pub fn norm_cdf(x: f64) -> f64 {
    let y = x * FRAC_1_SQRT_2;
    let a = y.abs();
    if a <= 0.46875 {
        // Phi(x) = 0.5 + 0.5*erf(y), |y| small: no cancellation.
        0.5 + 0.5 * erf_small(y)
    } else if x > 0.0 {
        1.0 - 0.5 * erfc_large(a)
    } else {
        0.5 * erfc_large(a)
    }
}

/// Upper tail 1 - Phi(x), computed without cancellation for x > 0.
#[must_use]
pub fn norm_sf(x: f64) -> f64 {
    norm_cdf(-x)
}

/// (Phi(x), phi(x)) in one call. The erfc branch and the density share the
/// factor exp(-x^2/2), so the pair costs barely more than the CDF alone;
/// root solvers that need value and derivative together live on this.
#[must_use]
pub fn norm_cdf_pdf(x: f64) -> (f64, f64) {
    let y = x * FRAC_1_SQRT_2;
    let a = y.abs();
    if a <= 0.46875 {
        let e = (-x * x * 0.5).exp();
        (0.5 + 0.5 * erf_small(y), FRAC_1_SQRT_2PI * e)
    } else {
        // exp_nsq(a) = exp(-a^2) = exp(-x^2/2) exactly the density factor.
        let e = exp_nsq(a);
        let erfc = e * erfc_rational(a);
        let pdf = FRAC_1_SQRT_2PI * e;
        if x > 0.0 {
            (1.0 - 0.5 * erfc, pdf)
        } else {
            (0.5 * erfc, pdf)
        }
    }
}

/// erf(y) for |y| <= 0.46875 (Cody region 1).
fn erf_small(y: f64) -> f64 {
    const A: [f64; 5] = [
        3.161_123_743_870_565_6e0,
        1.138_641_541_510_501_56e2,
        3.774_852_376_853_020_2e2,
        3.209_377_589_138_469_47e3,
        1.857_777_061_846_031_53e-1,
    ];
    const B: [f64; 4] = [
        2.360_129_095_234_412_09e1,
        2.440_246_379_344_441_73e2,
        1.282_616_526_077_372_28e3,
        2.844_236_833_439_170_62e3,
    ];
    let ysq = y * y;
    let mut num = A[4] * ysq;
    let mut den = ysq;
    for i in 0..3 {
        num = (num + A[i]) * ysq;
        den = (den + B[i]) * ysq;
    }
    y * (num + A[3]) / (den + B[3])
}

/// erfc(a) for a >= 0.46875 (Cody regions 2 and 3).
fn erfc_large(a: f64) -> f64 {
    exp_nsq(a) * erfc_rational(a)
}

/// The rational factor of erfc(a) = exp(-a^2) * erfc_rational(a), a >= 0.46875.
fn erfc_rational(a: f64) -> f64 {
    if a <= 4.0 {
        const C: [f64; 9] = [
            5.641_884_969_886_700_9e-1,
            8.883_149_794_388_375_9e0,
            6.611_919_063_714_163e1,
            2.986_351_381_974_001_3e2,
            8.819_522_212_417_691e2,
            1.712_047_612_634_070_6e3,
            2.051_078_377_826_071_5e3,
            1.230_339_354_797_997_2e3,
            2.153_115_354_744_038_46e-8,
        ];
        const D: [f64; 8] = [
            1.574_492_611_070_983_5e1,
            1.176_939_508_913_125e2,
            5.371_811_018_620_098_6e2,
            1.621_389_574_566_690_2e3,
            3.290_799_235_733_459_7e3,
            4.362_619_090_143_247e3,
            3.439_367_674_143_721_6e3,
            1.230_339_354_803_749_4e3,
        ];
        let mut num = C[8] * a;
        let mut den = a;
        for i in 0..7 {
            num = (num + C[i]) * a;
            den = (den + D[i]) * a;
        }
        (num + C[7]) / (den + D[7])
    } else {
        // erfc(a) = exp(-a^2)/a * [1/sqrt(pi) - P(1/a^2)/Q(1/a^2)/a^2 ... ],
        // asymptotic-region rational correction.
        const P: [f64; 6] = [
            3.053_266_349_612_323_44e-1,
            3.603_448_999_498_044_4e-1,
            1.257_817_261_112_292_46e-1,
            1.608_378_514_874_227_66e-2,
            6.587_491_615_298_378e-4,
            1.631_538_713_730_209_78e-2,
        ];
        const Q: [f64; 5] = [
            2.568_520_192_289_822_4e0,
            1.872_952_849_923_460_5e0,
            5.279_051_029_514_284e-1,
            6.051_834_131_244_131_9e-2,
            2.335_204_976_268_691_8e-3,
        ];
        const SQRPI: f64 = 5.641_895_835_477_562_87e-1;
        if a >= 26.7 {
            // erfc underflows past ~26.64 only in the last decades of the
            // subnormal range; the rational part is then indistinguishable
            // from the leading term.
            return SQRPI / a;
        }
        let ysq = 1.0 / (a * a);
        let mut num = P[5] * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + P[i]) * ysq;
            den = (den + Q[i]) * ysq;
        }
        let corr = ysq * (num + P[4]) / (den + Q[4]);
        (SQRPI - corr) / a
    }
}

/// exp(-a^2) with the argument split so the squared high part is exact,
/// following Cody: keeps the tail relative error near machine precision.
#[inline]
fn exp_nsq(a: f64) -> f64 {
    let hi = (a * 16.0).trunc() / 16.0;
    let del = (a - hi) * (a + hi);
    (-hi * hi).exp() * (-del).exp()
}

/// Standard normal quantile PhiInv(p) for p in (0, 1).
///
/// Wichura's PPND16: absolute error below 1e-15 on the quantile scale for p
/// down to ~1e-316. Callers must validate the domain; out-of-range input is
/// a programming error here.
#[must_use]
pub fn norm_ppf(p: f64) -> f64 {
    assert!(
        p > 0.0 && p < 1.0,
        "norm_ppf requires p in (0,1), got {p}"
    );
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        const A: [f64; 8] = [
            3.387_132_872_796_366_608e0,
            1.331_416_678_917_843_774_5e2,
            1.971_590_950_306_551_442_7e3,
            1.373_169_376_550_946_112_5e4,
            4.592_195_393_154_987_145_7e4,
            6.726_577_092_700_870_085_3e4,
            3.343_057_558_358_812_810_5e4,
            2.509_080_928_730_122_672_7e3,
        ];
        const B: [f64; 7] = [
            4.231_333_070_160_091_125_2e1,
            6.871_870_074_920_579_083e2,
            5.394_196_021_424_751_107_7e3,
            2.121_379_430_158_659_586_7e4,
            3.930_789_580_009_271_061e4,
            2.872_908_573_572_194_267_4e4,
            5.226_495_278_852_854_561e3,
        ];
        let r = 0.180625 - q * q;
        let mut num = A[7];
        let mut den = B[6];
        for i in (0..7).rev() {
            num = num * r + A[i];
        }
        for i in (0..6).rev() {
            den = den * r + B[i];
        }
        return q * num / (den * r + 1.0);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    // r in (0, 0.075]; both tails map through sqrt(-ln r).
    let mut s = (-r.ln()).sqrt();
    let v = if s <= 5.0 {
        const C: [f64; 8] = [
            1.423_437_110_749_683_577_34e0,
            4.630_337_846_156_545_295_9e0,
            5.769_497_221_460_691_405_5e0,
            3.647_848_324_763_204_542e0,
            1.270_458_252_452_368_382_58e0,
            2.417_807_251_774_506_117_7e-1,
            2.272_384_498_926_918_458_33e-2,
            7.745_450_142_783_414_076_4e-4,
        ];
        const D: [f64; 7] = [
            2.053_191_626_637_758_821_87e0,
            1.676_384_830_183_803_849_4e0,
            6.897_673_349_851_000_045_5e-1,
            1.481_039_764_274_800_745_9e-1,
            1.519_866_656_361_645_719_66e-2,
            5.475_938_084_995_344_946e-4,
            1.050_750_071_644_416_843_24e-9,
        ];
        s -= 1.6;
        let mut num = C[7];
        let mut den = D[6];
        for i in (0..7).rev() {
            num = num * s + C[i];
        }
        for i in (0..6).rev() {
            den = den * s + D[i];
        }
        num / (den * s + 1.0)
    } else {
        const E: [f64; 8] = [
            6.657_904_643_501_103_777_2e0,
            5.463_784_911_164_114_369_9e0,
            1.784_826_539_917_291_335_8e0,
            2.965_605_718_285_048_912_3e-1,
            2.653_218_952_657_612_309_3e-2,
            1.242_660_947_388_078_438_6e-3,
            2.711_555_568_743_487_578_15e-5,
            2.010_334_399_292_288_132_65e-7,
        ];
        const F: [f64; 7] = [
            5.998_322_065_558_879_376_9e-1,
            1.369_298_809_227_358_053_1e-1,
            1.487_536_129_085_061_485_25e-2,
            7.868_691_311_456_132_591e-4,
            1.846_318_317_510_054_681_8e-5,
            1.421_511_758_316_445_888_7e-7,
            2.044_263_103_389_939_785_64e-15,
        ];
        s -= 5.0;
        let mut num = E[7];
        let mut den = F[6];
        for i in (0..7).rev() {
            num = num * s + E[i];
        }
        for i in (0..6).rev() {
            den = den * s + F[i];
        }
        num / (den * s + 1.0)
    };
    if q < 0.0 {
        -v
    } else {
        v
    }
}
