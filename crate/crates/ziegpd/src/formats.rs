//! File formats: parameter and fit-result JSON, one-value-per-line samples,
//! and the numeric formatting used in CSV output.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use ziegpd_core::{
    CarrierFamily, FitResult, GpdParams, Method, Model, Param, Sample, ZiegpdParams,
};

use crate::error::{Error, Result};

/// Flat parameter document. Exactly the fields of the model must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    pub model: String,
    pub pi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub sigma: f64,
    pub xi: f64,
}

impl From<&ZiegpdParams> for ParamsDoc {
    fn from(theta: &ZiegpdParams) -> Self {
        Self {
            model: theta.model().to_string(),
            pi: theta.pi(),
            kappa: theta.get(Param::Kappa),
            delta: theta.get(Param::Delta),
            sigma: theta.gpd().sigma(),
            xi: theta.gpd().xi(),
        }
    }
}

impl TryFrom<&ParamsDoc> for ZiegpdParams {
    type Error = Error;

    fn try_from(doc: &ParamsDoc) -> Result<Self> {
        let model: Model = doc
            .model
            .parse()
            .map_err(|_| Error::Params(format!("unknown model {:?}", doc.model)))?;
        let carrier = match (model, doc.kappa, doc.delta) {
            (Model::M1, Some(kappa), None) => CarrierFamily::M1 { kappa },
            (Model::M2, None, Some(delta)) => CarrierFamily::M2 { delta },
            (Model::M3, Some(kappa), Some(delta)) => CarrierFamily::M3 { delta, kappa },
            _ => {
                let wanted = match model {
                    Model::M1 => "kappa only",
                    Model::M2 => "delta only",
                    Model::M3 => "both kappa and delta",
                };
                return Err(Error::Params(format!("model {model} takes {wanted}")));
            }
        };
        let gpd = GpdParams::new(doc.sigma, doc.xi)?;
        Ok(ZiegpdParams::new(doc.pi, carrier, gpd)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalDoc {
    pub param: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssDoc {
    pub param: String,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsDoc {
    pub converged: bool,
    pub iterations: usize,
    pub acceptance_rate: Option<f64>,
    pub ess: Option<Vec<EssDoc>>,
    pub bootstrap_replicates: Option<usize>,
    pub bootstrap_failures: Option<usize>,
}

/// Fit result as written by `ziegpd fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResultDoc {
    pub model: String,
    pub method: String,
    pub estimates: ParamsDoc,
    pub loglik: f64,
    pub alpha: f64,
    pub intervals: Vec<IntervalDoc>,
    pub diagnostics: DiagnosticsDoc,
    pub n: usize,
    pub zero_count: usize,
}

impl FitResultDoc {
    pub fn new(fit: &FitResult, data: &Sample) -> Self {
        let d = &fit.diagnostics;
        Self {
            model: fit.estimates.model().to_string(),
            method: fit.method.to_string(),
            estimates: ParamsDoc::from(&fit.estimates),
            loglik: fit.loglik,
            alpha: fit.alpha,
            intervals: fit
                .intervals
                .iter()
                .map(|i| IntervalDoc {
                    param: i.param.to_string(),
                    lower: i.lower,
                    upper: i.upper,
                })
                .collect(),
            diagnostics: DiagnosticsDoc {
                converged: d.converged,
                iterations: d.iterations,
                acceptance_rate: d.acceptance_rate,
                ess: d.ess.as_ref().map(|v| {
                    v.iter()
                        .map(|(p, e)| EssDoc {
                            param: p.to_string(),
                            ess: *e,
                        })
                        .collect()
                }),
                bootstrap_replicates: d.bootstrap_replicates,
                bootstrap_failures: d.bootstrap_failures,
            },
            n: data.len(),
            zero_count: data.zero_count(),
        }
    }

    pub fn method(&self) -> Result<Method> {
        Ok(self.method.parse()?)
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Parses parameters from either a flat parameter document or a fit-result
/// document (its `estimates` field).
pub fn parse_params(text: &str) -> Result<ZiegpdParams> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Params(e.to_string()))?;
    let inner = match value.get("estimates") {
        Some(est) => est.clone(),
        None => value,
    };
    let doc: ParamsDoc = serde_json::from_value(inner).map_err(|e| Error::Params(e.to_string()))?;
    ZiegpdParams::try_from(&doc)
}

pub fn read_params(path: &Path) -> Result<ZiegpdParams> {
    parse_params(&read_to_string(path)?).map_err(|e| match e {
        Error::Params(msg) => Error::Params(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn params_to_json(theta: &ZiegpdParams) -> String {
    let mut s = serde_json::to_string_pretty(&ParamsDoc::from(theta)).expect("plain struct");
    s.push('\n');
    s
}

pub fn fit_to_json(fit: &FitResult, data: &Sample) -> String {
    let mut s = serde_json::to_string_pretty(&FitResultDoc::new(fit, data)).expect("plain struct");
    s.push('\n');
    s
}

/// Sample file: one nonnegative value per line; blank lines and lines
/// starting with `#` are skipped.
pub fn parse_sample(text: &str, path: &Path) -> Result<Sample> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i as u64 + 1,
            msg,
        };
        let v: f64 = line
            .parse()
            .map_err(|_| parse_err(format!("not a number: {line:?}")))?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(parse_err(format!("value must be finite and >= 0, got {v}")));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::Empty {
            path: path.to_path_buf(),
        });
    }
    Ok(Sample::new(values)?)
}

pub fn read_sample(path: &Path) -> Result<Sample> {
    parse_sample(&read_to_string(path)?, path)
}

/// Writes values at full (round-trip) precision.
pub fn write_sample(path: &Path, values: &[f64]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for v in values {
        writeln!(out, "{v}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// `x` rounded to 6 significant digits, without exponent for everyday
/// magnitudes.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&mag) {
        return format!("{x:.5e}");
    }
    if mag > 5 {
        let unit = 10f64.powi(mag - 5);
        return format!("{}", (x / unit).round() * unit);
    }
    let decimals = (5 - mag) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new digit (9.999996 -> 10.00000)
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.');
        trimmed.to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_roundtrip() {
        for theta in [
            ZiegpdParams::m1(0.6, 0.4568, 4.9095, 0.3281).unwrap(),
            ZiegpdParams::m2(0.2, 5.0, 1.0, 0.2).unwrap(),
            ZiegpdParams::m3(0.3, 1.0, 5.0, 2.0, 0.1).unwrap(),
        ] {
            assert_eq!(parse_params(&params_to_json(&theta)).unwrap(), theta);
        }
    }

    #[test]
    fn field_presence_must_match_model() {
        let extra = r#"{"model":"m1","pi":0.5,"kappa":1,"delta":2,"sigma":1,"xi":0.1}"#;
        assert!(matches!(parse_params(extra), Err(Error::Params(_))));
        let missing = r#"{"model":"m3","pi":0.5,"kappa":1,"sigma":1,"xi":0.1}"#;
        assert!(matches!(parse_params(missing), Err(Error::Params(_))));
        let unknown = r#"{"model":"m2","pi":0.5,"delta":1,"sigma":1,"xi":0.1,"mu":0}"#;
        assert!(matches!(parse_params(unknown), Err(Error::Params(_))));
        let bad_model = r#"{"model":"m4","pi":0.5,"delta":1,"sigma":1,"xi":0.1}"#;
        assert!(matches!(parse_params(bad_model), Err(Error::Params(_))));
    }

    #[test]
    fn out_of_range_values_are_model_errors() {
        let neg = r#"{"model":"m1","pi":0.5,"kappa":-1,"sigma":1,"xi":0.1}"#;
        assert!(matches!(parse_params(neg), Err(Error::Model(_))));
    }

    #[test]
    fn sample_parsing() {
        let p = Path::new("x.txt");
        let s = parse_sample("# header\n0\n1.5\n\n2e-3\n", p).unwrap();
        assert_eq!(s.values(), &[0.0, 1.5, 0.002]);
        match parse_sample("0\nabc\n", p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_sample("-1\n", p), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_sample("\n# only\n", p), Err(Error::Empty { .. })));
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(4.243312345), "4.24331");
        assert_eq!(sig6(0.0131234567), "0.0131235");
        assert_eq!(sig6(1234567.0), "1234570");
        assert_eq!(sig6(2.0), "2");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.5e-9), "1.50000e-9");
    }
}
