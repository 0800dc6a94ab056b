use std::io::Write;

use serde::Serialize;

use super::correlation::{pearson, spearman};
use crate::error::{Error, Result};

/// How predictions are put on the scale of observations before comparing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Alignment {
    /// One positive factor fitted by least squares; predictions are
    /// proportional to time, not equal to it.
    #[default]
    FitScale,
    /// Predictions already share the observations' unit.
    Identity,
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub alignment: Alignment,
    /// Half-width of the accuracy band, as a fraction of the observation.
    pub band: f64,
    /// Row whose values normalize the slowdown columns.
    pub baseline: Option<String>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { alignment: Alignment::FitScale, band: 0.15, baseline: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub plan: String,
    pub predicted: f64,
    pub observed: f64,
    pub scaled_predicted: f64,
    /// `(scaled_predicted - observed) / observed`, in percent.
    pub error_pct: f64,
    pub band_flag: bool,
    pub predicted_slowdown: Option<f64>,
    pub observed_slowdown: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub rows: Vec<ReportRow>,
    pub scale: f64,
    /// `None` when a coefficient is undefined (zero variance).
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub band_fraction: f64,
}

impl AccuracyReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "plan",
            "predicted",
            "observed",
            "error_pct",
            "band_flag",
            "scaled_predicted",
            "predicted_slowdown",
            "observed_slowdown",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.plan.clone(),
                format!("{}", r.predicted),
                format!("{}", r.observed),
                format!("{:.3}", r.error_pct),
                (r.band_flag as u8).to_string(),
                format!("{}", r.scaled_predicted),
                opt(r.predicted_slowdown),
                opt(r.observed_slowdown),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let coef = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "undefined".into());
        format!(
            "r_p={} r_s={} band={:.3} ({} of {} within band) scale={:.6e}",
            coef(self.pearson),
            coef(self.spearman),
            self.band_fraction,
            self.rows.iter().filter(|r| r.band_flag).count(),
            self.rows.len(),
            self.scale
        )
    }
}

/// Per-plan errors, slowdowns, band membership and correlation metrics.
pub fn accuracy_report(
    predictions: &[f64],
    observations: &[f64],
    names: &[String],
    opts: &ReportOptions,
) -> Result<AccuracyReport> {
    if predictions.is_empty() {
        return Err(Error::invalid("nothing to report"));
    }
    if predictions.len() != observations.len() {
        return Err(Error::LengthMismatch { what: "observations", expected: predictions.len(), actual: observations.len() });
    }
    if names.len() != predictions.len() {
        return Err(Error::LengthMismatch { what: "plan names", expected: predictions.len(), actual: names.len() });
    }
    let scale = match opts.alignment {
        Alignment::Identity => 1.0,
        Alignment::FitScale => {
            let num: f64 = predictions.iter().zip(observations).map(|(p, o)| p * o).sum();
            let den: f64 = predictions.iter().map(|p| p * p).sum();
            if den > 0.0 && num > 0.0 {
                num / den
            } else {
                1.0
            }
        }
    };
    let base = match &opts.baseline {
        Some(name) => {
            let i = names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::invalid(format!("baseline {name:?} not among the plans")))?;
            Some((predictions[i], observations[i]))
        }
        None => None,
    };
    let rows: Vec<ReportRow> = names
        .iter()
        .zip(predictions.iter().zip(observations))
        .map(|(name, (&p, &o))| {
            let scaled = p * scale;
            let rel = (scaled - o) / o;
            ReportRow {
                plan: name.clone(),
                predicted: p,
                observed: o,
                scaled_predicted: scaled,
                error_pct: 100.0 * rel,
                band_flag: rel.abs() <= opts.band,
                predicted_slowdown: base.map(|(bp, _)| p / bp),
                observed_slowdown: base.map(|(_, bo)| o / bo),
            }
        })
        .collect();
    let band_fraction = rows.iter().filter(|r| r.band_flag).count() as f64 / rows.len() as f64;
    Ok(AccuracyReport {
        rows,
        scale,
        pearson: pearson(predictions, observations).ok(),
        spearman: spearman(predictions, observations).ok(),
        band_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i}")).collect()
    }

    #[test]
    fn identical_series() {
        let v = [3.0, 1.0, 4.0, 1.5, 9.0];
        let r = accuracy_report(&v, &v, &names(5), &ReportOptions::default()).unwrap();
        assert!(r.rows.iter().all(|row| row.error_pct.abs() < 1e-9 && row.band_flag));
        assert!((r.pearson.unwrap() - 1.0).abs() < 1e-12);
        assert!((r.spearman.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.band_fraction, 1.0);
    }

    #[test]
    fn build_table_write_error() {
        // Predicted vs observed total writes at load factor 1.0, millions.
        let opts = ReportOptions { alignment: Alignment::Identity, ..Default::default() };
        let r = accuracy_report(&[512.0, 1024.0], &[505.0, 1019.0], &names(2), &opts).unwrap();
        assert_eq!(format!("{:.1}", r.rows[0].error_pct), "1.4");
        assert_eq!(format!("{:.1}", r.rows[1].error_pct), "0.5");
    }

    #[test]
    fn slowdowns_against_baseline() {
        let opts = ReportOptions { baseline: Some("p0".into()), ..Default::default() };
        let r = accuracy_report(&[10.0, 20.0], &[1.0, 1.97], &names(2), &opts).unwrap();
        assert_eq!(r.rows[1].predicted_slowdown, Some(2.0));
        assert_eq!(r.rows[1].observed_slowdown, Some(1.97));
        let bad = ReportOptions { baseline: Some("nope".into()), ..Default::default() };
        assert!(accuracy_report(&[1.0, 2.0], &[1.0, 2.0], &names(2), &bad).is_err());
    }

    #[test]
    fn scale_fit_and_band() {
        // Proportional series off by a constant factor are fully in band.
        let pred = [100.0, 200.0, 400.0];
        let obs = [1.0, 2.0, 4.0];
        let r = accuracy_report(&pred, &obs, &names(3), &ReportOptions::default()).unwrap();
        assert!((r.scale - 0.01).abs() < 1e-15);
        assert_eq!(r.band_fraction, 1.0);
        // A 30% outlier falls out.
        let r = accuracy_report(&pred, &[1.0, 2.0, 6.0], &names(3), &ReportOptions::default()).unwrap();
        assert!(r.band_fraction < 1.0);
    }

    #[test]
    fn constant_predictions_leave_coefficients_undefined() {
        let r = accuracy_report(&[5.0; 3], &[1.0, 2.0, 3.0], &names(3), &ReportOptions::default()).unwrap();
        assert_eq!(r.pearson, None);
        assert_eq!(r.spearman, None);
        assert!(r.summary().contains("undefined"));
    }

    #[test]
    fn empty_and_misaligned() {
        assert!(accuracy_report(&[], &[], &[], &ReportOptions::default()).is_err());
        assert!(accuracy_report(&[1.0], &[1.0, 2.0], &names(1), &ReportOptions::default()).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let v = [1.0, 2.0];
        let r = accuracy_report(&v, &v, &names(2), &ReportOptions::default()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("plan,predicted,observed,error_pct,band_flag"));
        assert_eq!(text.lines().count(), 3);
    }
}
