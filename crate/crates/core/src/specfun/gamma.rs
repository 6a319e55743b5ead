use crate::error::{Error, Result};
use crate::scalar::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer<T: Real>(x: T) -> bool {
    x <= T::zero() && x == x.floor()
}

/// Lanczos partial sum for Γ(z + 1), z ≥ -0.5.
fn lanczos_sum<T: Real>(z: T) -> T {
    let mut acc = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += T::lit(c) / (z + T::from_usize_lossy(i));
    }
    acc
}

/// Γ(x). Poles at the non-positive integers.
pub fn gamma<T: Real>(x: T) -> Result<T> {
    if x.is_nan() {
        return Err(Error::domain("gamma of NaN"));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Pole {
            function: "gamma",
            at: x.to_f64_lossy(),
        });
    }
    let half = T::lit(0.5);
    if x < half {
        // reflection
        let pi = T::PI();
        let s = (pi * x).sin();
        return Ok(pi / (s * gamma(T::one() - x)?));
    }
    // small positive integers exactly
    if x == x.floor() && x <= T::lit(30.0) {
        let n = x.to_f64_lossy() as usize;
        let mut f = T::one();
        for k in 2..n {
            f *= T::from_usize_lossy(k);
        }
        return Ok(f);
    }
    let z = x - T::one();
    let t = z + T::lit(LANCZOS_G) + half;
    // t^(z + 1/2) split in two factors so large arguments do not overflow early
    let r = t.powf((z + half) * half);
    Ok(T::lit((2.0 * std::f64::consts::PI).sqrt()) * r * (r * (-t).exp()) * lanczos_sum(z))
}

/// ln|Γ(x)|.
pub fn ln_gamma<T: Real>(x: T) -> Result<T> {
    if x.is_nan() {
        return Err(Error::domain("ln_gamma of NaN"));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Pole {
            function: "ln_gamma",
            at: x.to_f64_lossy(),
        });
    }
    let half = T::lit(0.5);
    if x < half {
        let pi = T::PI();
        let s = (pi * x).sin().abs();
        return Ok(pi.ln() - s.ln() - ln_gamma(T::one() - x)?);
    }
    let z = x - T::one();
    let t = z + T::lit(LANCZOS_G) + half;
    Ok(T::lit(0.5 * (2.0 * std::f64::consts::PI).ln()) + (z + half) * t.ln() - t
        + lanczos_sum(z).ln())
}

/// ln(Γ(a) / Γ(b)) for positive arguments, exact for small integers.
pub fn ln_gamma_ratio<T: Real>(a: T, b: T) -> Result<T> {
    Ok(ln_gamma(a)? - ln_gamma(b)?)
}

/// Taylor coefficients of 1/Γ(1 + z) about z = 0.
const RGAMMA_TAYLOR: [f64; 29] = [
    1.0,
    0.577_215_664_901_532_860_61,
    -0.655_878_071_520_253_881_08,
    -0.042_002_635_034_095_235_529,
    0.166_538_611_382_291_489_5,
    -0.042_197_734_555_544_336_748,
    -0.009_621_971_527_876_973_562_1,
    0.007_218_943_246_663_099_542_4,
    -0.001_165_167_591_859_065_112_1,
    -0.000_215_241_674_114_950_972_82,
    0.000_128_050_282_388_116_186_15,
    -0.000_020_134_854_780_788_238_656,
    -0.000_001_250_493_482_142_670_657_3,
    0.000_001_133_027_231_981_695_882_4,
    -0.000_000_205_633_841_697_760_710_35,
    0.000_000_006_116_095_104_481_415_817_9,
    0.000_000_005_002_007_644_469_222_930_1,
    -0.000_000_001_181_274_570_487_020_144_6,
    0.000_000_000_104_342_671_169_110_051_05,
    0.000_000_000_007_782_263_439_905_071_254,
    -0.000_000_000_003_696_805_618_642_205_708_2,
    0.000_000_000_000_510_037_028_745_447_597_9,
    -0.000_000_000_000_020_583_260_535_665_067_832,
    -0.000_000_000_000_005_348_122_539_423_017_982_4,
    0.000_000_000_000_001_226_778_628_238_260_790_2,
    -0.000_000_000_000_000_118_125_930_169_745_876_95,
    0.000_000_000_000_000_001_186_692_254_751_600_332_6,
    0.000_000_000_000_000_001_412_380_655_318_031_781_6,
    -0.000_000_000_000_000_000_229_874_568_443_537_020_66,
];

/// Temme's auxiliary functions for |mu| <= 1/2:
/// gam1 = (1/Γ(1-mu) - 1/Γ(1+mu)) / (2 mu), gam2 = (1/Γ(1-mu) + 1/Γ(1+mu)) / 2,
/// together with 1/Γ(1+mu) and 1/Γ(1-mu).
pub(crate) fn temme_gammas<T: Real>(mu: T) -> (T, T, T, T) {
    // even part E = sum c_j mu^j (j even), odd part O = sum c_j mu^(j-1) (j odd)
    let mu2 = mu * mu;
    let mut even = T::zero();
    let mut odd = T::zero();
    let mut pw = T::one();
    for pair in RGAMMA_TAYLOR.chunks(2) {
        even += T::lit(pair[0]) * pw;
        if let Some(&c) = pair.get(1) {
            odd += T::lit(c) * pw;
        }
        pw *= mu2;
    }
    let gampl = even + mu * odd;
    let gammi = even - mu * odd;
    (-odd, even, gampl, gammi)
}
