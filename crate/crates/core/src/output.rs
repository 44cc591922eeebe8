//! CSV helpers with round-trip numeric formatting.

use std::io::{self, Write};

/// Formats a real with 17 significant digits.
pub fn real(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Writes `header` followed by `rows`, each already formatted as fields.
pub fn write_csv<W: Write>(out: &mut W, header: &str, rows: &[Vec<String>]) -> io::Result<()> {
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(real(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(real(1.0), "1.0000000000000000e0");
    }
}
