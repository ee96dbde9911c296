//! Plain-text number formatting shared by the dump and CSV writers.

/// Formats `value` in C-style scientific notation (`%.{digits-1}e`): a signed
/// mantissa with `significant` digits and an exponent of at least two digits.
pub fn sci(value: f64, significant: usize) -> String {
    let precision = significant.saturating_sub(1);
    if !value.is_finite() {
        return format!("{value}");
    }
    let rust = format!("{value:.precision$e}");
    let (mantissa, exponent) = rust.split_once('e').expect("exponent marker");
    let exp: i32 = exponent.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}
