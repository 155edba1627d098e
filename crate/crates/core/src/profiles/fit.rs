//! Least-squares calibration of copy startup time and per-byte rate from timed transfers.

use crate::error::ProfileError;

use super::Millis;

/// Result of an affine fit `time = tr_ini + rate * bytes`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferFit {
    pub tr_ini: Millis,
    /// Milliseconds per byte.
    pub rate: f64,
    /// Set when the raw fit produced a negative intercept or slope and it was clamped to 0.
    pub clamped: bool,
}

/// Fits startup time and per-byte rate to `(bytes, ms)` samples by ordinary least squares.
pub fn fit_transfer_params(samples: &[(f64, f64)]) -> Result<TransferFit, ProfileError> {
    for (i, &(bytes, ms)) in samples.iter().enumerate() {
        if !bytes.is_finite() || !ms.is_finite() {
            return Err(ProfileError::invalid(format!("samples[{i}]"), "must be finite"));
        }
        if bytes < 0.0 {
            return Err(ProfileError::invalid(format!("samples[{i}].bytes"), "must be >= 0"));
        }
    }
    if samples.len() < 2 {
        return Err(ProfileError::DegenerateFit(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }

    let n = samples.len() as f64;
    let mean_x = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let mean_y = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let (sxx, sxy) = samples.iter().fold((0.0, 0.0), |(sxx, sxy), &(x, y)| {
        let dx = x - mean_x;
        (sxx + dx * dx, sxy + dx * (y - mean_y))
    });
    if sxx == 0.0 {
        return Err(ProfileError::DegenerateFit("need at least 2 distinct sizes".into()));
    }

    let rate = sxy / sxx;
    let tr_ini = mean_y - rate * mean_x;
    let clamped = rate < 0.0 || tr_ini < 0.0;
    if clamped {
        log::warn!("negative fit clamped to 0 (tr_ini={tr_ini}, rate={rate})");
    }
    Ok(TransferFit { tr_ini: tr_ini.max(0.0), rate: rate.max(0.0), clamped })
}

/// Reads a two-column `bytes,ms` CSV with a header row.
pub fn load_samples_csv(text: &str) -> Result<Vec<(f64, f64)>, ProfileError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| ProfileError::Malformed(e.to_string()))?;
    if headers.len() != 2 || &headers[0] != "bytes" || &headers[1] != "ms" {
        return Err(ProfileError::Malformed(format!(
            "expected header `bytes,ms`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader
        .records()
        .enumerate()
        .map(|(i, record)| {
            let record = record.map_err(|e| ProfileError::Malformed(e.to_string()))?;
            let parse = |col: usize, name: &str| -> Result<f64, ProfileError> {
                record[col].parse::<f64>().map_err(|e| {
                    ProfileError::Malformed(format!("row {}: `{name}`: {e}", i + 1))
                })
            };
            Ok((parse(0, "bytes")?, parse(1, "ms")?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn noiseless_line_recovered() {
        let samples: Vec<_> =
            (0..20).map(|i| i as f64 * 5e6).map(|k| (k, 0.1 + 2e-8 * k)).collect();
        let fit = fit_transfer_params(&samples).unwrap();
        assert!(rel(fit.tr_ini, 0.1) < 1e-9, "{fit:?}");
        assert!(rel(fit.rate, 2e-8) < 1e-9, "{fit:?}");
        assert!(!fit.clamped);
    }

    #[test]
    fn two_points_exact() {
        let fit = fit_transfer_params(&[(0.0, 0.5), (1e6, 1.5)]).unwrap();
        assert!(rel(fit.tr_ini, 0.5) < 1e-12);
        assert!(rel(fit.rate, 1e-6) < 1e-12);
    }

    #[test]
    fn single_sample_is_degenerate() {
        assert!(matches!(fit_transfer_params(&[(1.0, 1.0)]), Err(ProfileError::DegenerateFit(_))));
    }

    #[test]
    fn repeated_size_is_degenerate() {
        let err = fit_transfer_params(&[(1e6, 1.0), (1e6, 1.1), (1e6, 0.9)]).unwrap_err();
        assert!(matches!(err, ProfileError::DegenerateFit(_)));
    }

    #[test]
    fn negative_intercept_clamped() {
        let fit = fit_transfer_params(&[(1e6, 0.5), (2e6, 1.5)]).unwrap();
        assert_eq!(fit.tr_ini, 0.0);
        assert!(fit.clamped);
        assert!(rel(fit.rate, 1e-6) < 1e-12);
    }

    #[test]
    fn csv_with_header() {
        let samples = load_samples_csv("bytes,ms\n0,0.5\n1000000, 1.5\n").unwrap();
        assert_eq!(samples, vec![(0.0, 0.5), (1e6, 1.5)]);
    }

    #[test]
    fn csv_wrong_header() {
        assert!(load_samples_csv("size,time\n0,1\n").unwrap_err().is_parse_error());
    }

    #[test]
    fn csv_bad_number() {
        assert!(load_samples_csv("bytes,ms\nabc,1\n").unwrap_err().is_parse_error());
    }
}
