/// Formats `x` with 17 significant digits in the style of C's `%.17g`:
/// fixed notation for decimal exponents in `[-5, 17)`, scientific otherwise,
/// trailing zeros removed.
pub fn sig17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(sig17(0.984375), "0.984375");
        assert_eq!(sig17(1.0), "1");
        assert_eq!(sig17(-2.5), "-2.5");
        assert_eq!(sig17(0.1), "0.10000000000000001");
        assert_eq!(sig17(1e-7), "9.9999999999999995e-8");
        assert_eq!(sig17(1e300), "1.0000000000000001e300");
        assert_eq!(sig17(0.0), "0");
        assert_eq!(sig17(f64::INFINITY), "inf");
    }

    #[test]
    fn round_trips() {
        let mut x = 0.123_456_789_f64;
        for _ in 0..200 {
            x = (x * 7.77).fract() * 10f64.powi(((x * 1000.0) as i32 % 40) - 20);
            assert_eq!(sig17(x).parse::<f64>().unwrap(), x);
        }
        for v in [f64::MIN_POSITIVE, f64::MAX, 5e-324, 123456789012345680.0] {
            assert_eq!(sig17(v).parse::<f64>().unwrap(), v);
        }
    }
}
