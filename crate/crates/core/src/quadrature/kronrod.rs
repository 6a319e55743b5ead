use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{Estimate, QuadValue, Tolerance};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn eval<T: Real, V: QuadValue<T>>(f: &mut impl FnMut(T) -> V, x: T) -> Result<V> {
    let v = f(x);
    if v.is_finite_value() {
        Ok(v)
    } else {
        Err(Error::Evaluation { at: x.to_f64_lossy() })
    }
}

/// One 15-point Kronrod panel with its embedded 7-point Gauss estimate.
pub(crate) fn gk15<T: Real, V: QuadValue<T>>(
    f: &mut impl FnMut(T) -> V,
    a: T,
    b: T,
) -> Result<(V, T)> {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let hl = half * (b - a);
    let fc = eval(f, center)?;
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = hl * T::lit(XGK[j]);
        let f1 = eval(f, center - dx)?;
        let f2 = eval(f, center + dx)?;
        let s = f1 + f2;
        kron += s * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss += s * T::lit(WG[j / 2]);
        }
    }
    let kron = kron * hl;
    let gauss = gauss * hl;
    Ok((kron, (kron - gauss).magnitude()))
}

struct Panel<T, V> {
    a: T,
    b: T,
    value: V,
    error: T,
}

impl<T: Real, V> PartialEq for Panel<T, V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real, V> Eq for Panel<T, V> {}
impl<T: Real, V> PartialOrd for Panel<T, V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real, V> Ord for Panel<T, V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive Gauss-Kronrod on a finite interval.
pub fn adaptive_finite<T: Real, V: QuadValue<T>>(
    mut f: impl FnMut(T) -> V,
    a: T,
    b: T,
    tol: Tolerance<T>,
) -> Result<Estimate<T, V>> {
    if a == b {
        return Ok(Estimate::exact(V::zero()));
    }
    let (value, error) = gk15(&mut f, a, b)?;
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut subdivisions = 1;
    loop {
        let target = tol.abs.max(tol.rel * total.magnitude());
        if total_err <= target {
            return Ok(Estimate { value: total, error: total_err, evaluations, converged: true });
        }
        if subdivisions >= tol.max_subdiv {
            break;
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = T::lit(0.5) * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // panel at machine resolution
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid)?;
        let (v2, e2) = gk15(&mut f, mid, worst.b)?;
        evaluations += 30;
        subdivisions += 1;
        total = total - worst.value + v1 + v2;
        total_err = total_err - worst.error + e1 + e2;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        if subdivisions % 64 == 0 {
            // re-sum to shed accumulated cancellation in the running totals
            total = heap.iter().fold(V::zero(), |acc, p| acc + p.value);
            total_err = heap.iter().fold(T::zero(), |acc, p| acc + p.error);
        }
    }
    total = heap.iter().fold(V::zero(), |acc, p| acc + p.value);
    total_err = heap.iter().fold(T::zero(), |acc, p| acc + p.error);
    let target = tol.abs.max(tol.rel * total.magnitude());
    Ok(Estimate {
        value: total,
        error: total_err,
        evaluations,
        converged: total_err <= target,
    })
}

/// Adaptive integration on any interval; infinite ends are mapped by x = a + t/(1-t).
pub fn adaptive<T: Real, V: QuadValue<T>>(
    mut f: impl FnMut(T) -> V,
    lo: T,
    hi: T,
    tol: Tolerance<T>,
) -> Result<Estimate<T, V>> {
    if lo.is_nan() || hi.is_nan() {
        return Err(Error::domain("NaN integration limit"));
    }
    if hi < lo {
        let r = adaptive(f, hi, lo, tol)?;
        return Ok(Estimate { value: r.value * (-T::one()), ..r });
    }
    let one = T::one();
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => adaptive_finite(f, lo, hi, tol),
        (true, false) => adaptive_finite(
            |t: T| {
                let s = one - t;
                f(lo + t / s) * (one / (s * s))
            },
            T::zero(),
            one,
            tol,
        ),
        (false, true) => adaptive_finite(
            |t: T| {
                let s = one - t;
                f(hi - t / s) * (one / (s * s))
            },
            T::zero(),
            one,
            tol,
        ),
        (false, false) => adaptive_finite(
            // x = t / (1 - t^2) on (-1, 1)
            |t: T| {
                let s = one - t * t;
                f(t / s) * ((one + t * t) / (s * s))
            },
            -one,
            one,
            tol,
        ),
    }
}
