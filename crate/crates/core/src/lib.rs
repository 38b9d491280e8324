pub mod config;
pub mod energy_model;
pub mod error;
pub mod lp;
pub mod manifest;
pub mod mdp;
pub mod recipes;
pub mod simulator;
pub mod solver;
pub mod table;

/// `x` with six significant digits, trailing zeros trimmed.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::fmt_sig;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig(3.3), "3.3");
        assert_eq!(fmt_sig(-0.0), "0");
        assert_eq!(fmt_sig(2.123456789), "2.12346");
        assert_eq!(fmt_sig(921.3649), "921.365");
        assert_eq!(fmt_sig(1234567.0), "1234567");
        assert_eq!(fmt_sig(1.5e-7), "1.50000e-7");
    }
}
