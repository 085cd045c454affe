//! CSV rendering with fixed field order and float formatting.

use std::fmt::Write as _;

/// Nine significant digits, positional for moderate magnitudes, trailing
/// zeros dropped.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    let sign = if negative { "-" } else { "" };

    if !(-6..=14).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        return if tail.is_empty() { format!("{sign}{head}e{exp}") } else { format!("{sign}{head}.{tail}e{exp}") };
    }
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else {
        let int_len = exp as usize + 1;
        if digits.len() <= int_len {
            format!("{}{}", digits, "0".repeat(int_len - digits.len()))
        } else {
            format!("{}.{}", &digits[..int_len], &digits[int_len..])
        }
    };
    format!("{sign}{body}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// A CSV document built row by row. Fields are quoted only when needed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Csv {
    text: String,
}

fn field(out: &mut String, value: &str) {
    if value.contains([',', '"', '\n', '\r']) {
        out.push('"');
        out.push_str(&value.replace('"', "\"\""));
        out.push('"');
    } else {
        out.push_str(value);
    }
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut csv = Csv { text: String::new() };
        csv.row(header);
        csv
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            field(&mut self.text, f.as_ref());
        }
        self.text.push('\n');
    }

    /// Appends a row given as display-able values.
    pub fn values(&mut self, fields: &[&dyn std::fmt::Display]) {
        let mut s = String::new();
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let mut v = String::new();
            let _ = write!(v, "{f}");
            field(&mut s, &v);
        }
        s.push('\n');
        self.text.push_str(&s);
    }

    pub fn rows(&self) -> usize {
        self.text.lines().count().saturating_sub(1)
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn float_formatting() {
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(1.0), "1");
        assert_eq!(fmt_float(0.5), "0.5");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_float(2.0 / 3.0), "0.666666667");
        assert_eq!(fmt_float(-1234.5), "-1234.5");
        assert_eq!(fmt_float(12000.0), "12000");
        assert_eq!(fmt_float(0.00012345678912), "0.000123456789");
        assert_eq!(fmt_float(123456789012.0), "123456789000");
        assert_eq!(fmt_float(1.5e20), "1.5e20");
        assert_eq!(fmt_float(2.5e-9), "2.5e-9");
    }

    #[test]
    fn csv_quoting() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.row(&["x,y", "say \"hi\""]);
        csv.values(&[&1, &"z"]);
        assert_eq!(csv.as_str(), "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n1,z\n");
        assert_eq!(csv.rows(), 2);
    }

    proptest! {
        #[test]
        fn nine_significant_digits(x in -1e12f64..1e12) {
            prop_assume!(x != 0.0);
            let back: f64 = fmt_float(x).parse().unwrap();
            prop_assert!(((back - x) / x).abs() <= 5e-9);
        }
    }
}
