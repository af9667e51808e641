//! Output helpers shared by the writers.

use std::fs;
use std::path::Path;

use crate::error::HarnessError;

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn create_dir(path: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(path).map_err(|e| HarnessError::io(format!("creating {}", path.display()), e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    fs::write(path, text).map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))
}

/// Writes a header and rows of floats.
pub fn write_float_csv<'a, I>(path: &Path, header: &[&str], rows: I) -> Result<(), HarnessError>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row.iter().map(|&x| fmt_f64(x)))?;
    }
    writer.flush().map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_in_shortest_form() {
        for x in [0.1, 1.0, 1e-20, 2.0f64.sqrt(), -3.25e17, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(1e-20), "1e-20");
    }
}
