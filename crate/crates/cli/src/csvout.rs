//! CSV emission: header first, LF line endings, reals with 17 significant
//! digits so they parse back to the same double.

use std::io::Write;

/// A real in scientific notation with 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `header` and `rows` as CSV. Every row must have as many fields as
/// the header.
pub fn emit_csv<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv_string(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut buf = Vec::new();
    emit_csv(&mut buf, header, rows).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("fields are UTF-8")
}

/// Writes to `path`, or returns the text when `path` is `None`.
pub fn emit_csv_to(
    path: Option<&std::path::Path>,
    header: &[&str],
    rows: &[Vec<String>],
) -> std::io::Result<Option<String>> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p)?;
            emit_csv(std::io::BufWriter::new(file), header, rows).map_err(std::io::Error::other)?;
            Ok(None)
        }
        None => Ok(Some(emit_csv_string(header, rows))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_only_and_one_row() {
        assert_eq!(emit_csv_string(&["a", "b"], &[]), "a,b\n");
        let one = emit_csv_string(&["a", "b"], &[vec!["1".into(), real(0.5)]]);
        assert_eq!(one, "a,b\n1,5.0000000000000000e-1\n");
        assert_eq!(one.lines().count(), 2);
        assert!(!one.contains('\r'));
    }

    #[test]
    fn quoting() {
        let s = emit_csv_string(&["x"], &[vec!["a,b".into()]]);
        assert_eq!(s, "x\n\"a,b\"\n");
    }

    #[test]
    fn file_output() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("o.csv");
        assert_eq!(
            emit_csv_to(Some(&p), &["a"], &[vec!["1".into()]]).unwrap(),
            None
        );
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "a\n1\n");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn reals_round_trip(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let text = emit_csv_string(&["x"], &[vec![real(x)]]);
            let field = text.lines().nth(1).unwrap();
            prop_assert_eq!(field.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
