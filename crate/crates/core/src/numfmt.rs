//! Fixed-width float formatting shared by every CSV/JSON writer.

/// 17 significant digits in scientific notation; round-trips every `f64`.
pub fn sig17(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{:.16e}", if x == 0.0 { 0.0 } else { x })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.0, 1.0, -2.5e-300, std::f64::consts::PI, 1.0 / 3.0, f64::MAX] {
            let s = sig17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(sig17(1.0), "1.0000000000000000e0");
    }
}
