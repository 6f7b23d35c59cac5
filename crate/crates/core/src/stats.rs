//! Small numeric helpers shared by every module: population statistics and
//! the decimal rounding policy used for reports.

/// Arithmetic mean. Returns `None` for an empty slice.
pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    // Constant input is returned exactly, so its deviation is exactly zero.
    if values.iter().all(|v| *v == values[0]) {
        return Some(values[0]);
    }
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

/// Population standard deviation (divides by N, not N - 1).
pub fn population_std(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    Some(var.sqrt())
}

/// Mean and population standard deviation in one call.
pub fn mean_and_std(values: &[f64]) -> Option<(f64, f64)> {
    Some((mean(values)?, population_std(values)?))
}

/// Rounds `x` to `places` decimal digits, ties away from zero.
///
/// The tie decision is made on the shortest decimal representation of `x`
/// (the digits `format!("{x}")` would print), so a value written as `38.55`
/// rounds to `38.6` even though its binary approximation sits just below.
pub fn round_half_away(x: f64, places: u32) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let sci = format!("{:e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("`{:e}` always has an exponent");
    let exp: i64 = exp.parse().expect("exponent is an integer");
    let digits: Vec<u8> = mantissa.bytes().filter(u8::is_ascii_digit).map(|b| b - b'0').collect();

    // Number of significant digits that survive rounding.
    let keep = exp + 1 + i64::from(places);
    if keep >= digits.len() as i64 {
        return x;
    }
    let round_up = if keep < 0 { false } else { digits[keep as usize] >= 5 };
    let mut kept: u128 = 0;
    for &d in digits.iter().take(keep.max(0) as usize) {
        kept = kept * 10 + u128::from(d);
    }
    if round_up {
        kept += 1;
    }
    if kept == 0 {
        return 0.0;
    }
    let magnitude: f64 = format!("{kept}e-{places}").parse().expect("well-formed float literal");
    if x.is_sign_negative() {
        -magnitude
    } else {
        magnitude
    }
}

/// Formats `x` with exactly `places` decimals after [`round_half_away`].
pub fn fmt_fixed(x: f64, places: u32) -> String {
    let r = round_half_away(x, places);
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{:.*}", places as usize, r)
}

/// Lossless formatting that pads to at least `min_places` decimals.
///
/// `8.8` with two places prints as `8.80`, while `25.333333333333332` keeps
/// every digit needed to round-trip.
pub fn fmt_min_decimals(x: f64, min_places: usize) -> String {
    let mut s = format!("{x}");
    let have = s.split_once('.').map_or(0, |(_, frac)| frac.len());
    if have < min_places {
        if have == 0 {
            s.push('.');
        }
        s.extend(std::iter::repeat_n('0', min_places - have));
    }
    s
}
