// Float intrinsics: std when available, libm otherwise.

macro_rules! unary {
    ($($name:ident => $libm:ident),* $(,)?) => {$(
        #[inline(always)]
        pub(crate) fn $name(x: f64) -> f64 {
            #[cfg(feature = "std")]
            { x.$name() }
            #[cfg(not(feature = "std"))]
            { libm::$libm(x) }
        }
    )*};
}

unary!(
    ln => log,
    exp => exp,
    ln_1p => log1p,
    exp_m1 => expm1,
    sqrt => sqrt,
    abs => fabs,
    floor => floor,
);

#[inline(always)]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.powf(y)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::pow(x, y)
    }
}

/// `exp(x) - 1 - x`, accurate for small `|x|`.
pub(crate) fn expm1_minus_id(x: f64) -> f64 {
    if abs(x) < 1e-3 {
        x * x * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0)))
    } else {
        exp_m1(x) - x
    }
}

/// `ln(-expm1(x))` for `x < 0`, i.e. `ln(1 - e^x)` without cancellation.
pub(crate) fn ln_1m_exp(x: f64) -> f64 {
    if x > -core::f64::consts::LN_2 {
        ln(-exp_m1(x))
    } else {
        ln_1p(-exp(x))
    }
}
