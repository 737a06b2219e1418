//! CSV cells and the CSV header.

/// Decimal rendering with 9 significant digits (no exponent).
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.8e}");
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mant.chars().filter(char::is_ascii_digit).collect();
    let mut out = String::with_capacity(24);
    if x < 0.0 {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    } else if exp >= 8 {
        out.push_str(&digits);
        out.extend(std::iter::repeat_n('0', exp as usize - 8));
    } else {
        let k = exp as usize + 1;
        out.push_str(&digits[..k]);
        out.push('.');
        out.push_str(&digits[k..]);
    }
    out
}

pub fn opt_cell(x: Option<f64>) -> String {
    x.map(sig9).unwrap_or_default()
}

/// `ε` as it appears in column names: shortest round-trip form.
pub fn eps_label(e: f64) -> String {
    format!("{e}")
}

/// `n,delta,rhs_cg,rhs_thm3_eps…,rhs_thm4,rhs_cor,fitted_c,mass_defect,wall_ms`.
pub fn bounds_header(epsilons: &[f64]) -> String {
    let mut cols = vec!["n".to_string(), "delta".into(), "rhs_cg".into()];
    cols.extend(epsilons.iter().map(|&e| format!("rhs_thm3_eps{}", eps_label(e))));
    cols.extend(["rhs_thm4", "rhs_cor", "fitted_c", "mass_defect", "wall_ms"].map(String::from));
    cols.join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.0), "1.00000000");
        assert_eq!(sig9(0.30449), "0.304490000");
        assert_eq!(sig9(-1.5e-5), "-0.0000150000000");
        assert_eq!(sig9(123456789.4), "123456789");
        assert_eq!(sig9(1.2345678949e10), "12345678900");
        assert_eq!(sig9(9.9999999996), "10.0000000");
        assert_eq!(sig9(std::f64::consts::PI), "3.14159265");
    }

    #[test]
    fn header() {
        assert_eq!(bounds_header(&[0.1, 1.0]), "n,delta,rhs_cg,rhs_thm3_eps0.1,rhs_thm3_eps1,rhs_thm4,rhs_cor,fitted_c,mass_defect,wall_ms");
    }
}
