//! The iteration table printed while optimizing.

use krotov_core::IterationInfo;

/// C-style `%.2e`: two decimals, signed exponent with at least two digits.
pub fn format_e2(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.2e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn header() -> String {
    format!(
        "{:>5}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}  {:>10}",
        "iter.", "J_T", "∫gₐ(t)dt", "J", "ΔJ_T", "ΔJ", "secs(wall)"
    )
}

pub fn row(info: &IterationInfo) -> String {
    let opt = |v: Option<f64>| v.map(format_e2).unwrap_or_else(|| "n/a".into());
    format!(
        "{:>5}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}  {:>10.1}",
        info.iteration,
        format_e2(info.j_t),
        format_e2(info.ga_integral),
        format_e2(info.j_total),
        opt(info.delta_j_t),
        opt(info.delta_j),
        info.seconds
    )
}
