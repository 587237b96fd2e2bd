//! Monte Carlo studies: parameter recovery under a ZIEGPD generator, tail
//! robustness under a ZIGEV generator, and bootstrap interval coverage.
//!
//! Replicate `r` of a study uses the seed `derive_seed(study seed, r)` for
//! its data, and seeds derived from that for the sampler and the bootstrap,
//! so results do not depend on the number of worker threads.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;
use ziegpd_core::inference::{bootstrap_replicate, summarize_bootstrap};
use ziegpd_core::rng::derive_seed;
use ziegpd_core::zigev::sample_zigev;
use ziegpd_core::{
    fit_bayes, fit_mle, stats, Error as ModelError, FitOptions, McmcOptions, Method, Model, Param,
    Sample, ZiegpdParams,
};

use crate::error::{Error, Result};
use crate::formats::{sig6, ParamsDoc};

/// Largest fraction of replicates allowed to fail per method.
pub const MAX_FAILURE_RATE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Ziegpd(ZiegpdParams),
    Zigev { pi: f64, mu: f64, sigma: f64, xi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub name: String,
    pub generator: Generator,
    pub fit_model: Model,
    pub n: usize,
    pub replications: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub mcmc: McmcOptions,
    /// When set, MLE fits also get percentile bootstrap intervals and the
    /// study reports their coverage.
    pub bootstrap: Option<BootstrapConfig>,
}

#[derive(Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
enum GeneratorDoc {
    Ziegpd {
        model: String,
        pi: f64,
        kappa: Option<f64>,
        delta: Option<f64>,
        sigma: f64,
        xi: f64,
    },
    Zigev {
        pi: f64,
        mu: f64,
        sigma: f64,
        xi: f64,
    },
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct McmcDoc {
    chains: Option<usize>,
    iterations: Option<usize>,
    burn_in: Option<usize>,
    thin: Option<usize>,
    target_accept: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BootstrapDoc {
    replicates: usize,
    #[serde(default = "default_alpha")]
    alpha: f64,
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StudyDoc {
    name: Option<String>,
    generator: GeneratorDoc,
    fit_model: String,
    n: usize,
    replications: usize,
    methods: Vec<String>,
    seed: u64,
    #[serde(default)]
    mcmc: McmcDoc,
    bootstrap: Option<BootstrapDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StudyListDoc {
    study: Vec<StudyDoc>,
}

impl StudyDoc {
    fn into_config(self, index: usize) -> Result<SimConfig> {
        let generator = match self.generator {
            GeneratorDoc::Ziegpd {
                model,
                pi,
                kappa,
                delta,
                sigma,
                xi,
            } => {
                let doc = ParamsDoc {
                    model,
                    pi,
                    kappa,
                    delta,
                    sigma,
                    xi,
                };
                let theta = ZiegpdParams::try_from(&doc).map_err(|e| Error::Config(e.to_string()))?;
                Generator::Ziegpd(theta)
            }
            GeneratorDoc::Zigev { pi, mu, sigma, xi } => Generator::Zigev { pi, mu, sigma, xi },
        };
        let fit_model = self
            .fit_model
            .parse()
            .map_err(|_| Error::Config(format!("unknown fit_model {:?}", self.fit_model)))?;
        let methods = self
            .methods
            .iter()
            .map(|m| m.parse().map_err(|_| Error::Config(format!("unknown method {m:?}"))))
            .collect::<Result<Vec<Method>>>()?;
        let d = McmcOptions::default();
        let mcmc = McmcOptions {
            chains: self.mcmc.chains.unwrap_or(d.chains),
            iterations: self.mcmc.iterations.unwrap_or(d.iterations),
            burn_in: self.mcmc.burn_in.unwrap_or(d.burn_in),
            thin: self.mcmc.thin.unwrap_or(d.thin),
            target_accept: self.mcmc.target_accept.unwrap_or(d.target_accept),
        };
        let cfg = SimConfig {
            name: self.name.unwrap_or_else(|| format!("study{}", index + 1)),
            generator,
            fit_model,
            n: self.n,
            replications: self.replications,
            methods,
            seed: self.seed,
            mcmc,
            bootstrap: self.bootstrap.map(|b| BootstrapConfig {
                replicates: b.replicates,
                alpha: b.alpha,
            }),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses a TOML study file: either a single study at the top level or a
/// list of `[[study]]` tables.
pub fn parse_config(text: &str) -> Result<Vec<SimConfig>> {
    let value: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let docs = if value.contains_key("study") {
        let list: StudyListDoc = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        list.study
    } else {
        let one: StudyDoc = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        vec![one]
    };
    if docs.is_empty() {
        return Err(Error::Config("no studies defined".into()));
    }
    docs.into_iter().enumerate().map(|(i, d)| d.into_config(i)).collect()
}

pub fn read_config(path: &Path) -> Result<Vec<SimConfig>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.n < 50 {
            return Err(Error::Config("n must be >= 50".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.methods.contains(&Method::Bayes) {
            self.mcmc.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Generator::Zigev { pi, sigma, .. } = self.generator {
            if self.fit_model == Model::M2 {
                return Err(Error::Config("ZIGEV studies fit M1 or M3 only".into()));
            }
            if !(0.0..=1.0).contains(&pi) || !(sigma > 0.0) {
                return Err(Error::Config("ZIGEV needs pi in [0, 1] and sigma > 0".into()));
            }
        }
        if let Some(b) = &self.bootstrap {
            if b.replicates < ziegpd_core::inference::MIN_BOOTSTRAP_REPLICATES {
                return Err(Error::Config(format!(
                    "bootstrap replicates must be >= {}",
                    ziegpd_core::inference::MIN_BOOTSTRAP_REPLICATES
                )));
            }
            if !(b.alpha > 0.0 && b.alpha < 1.0) {
                return Err(Error::Config("bootstrap alpha must lie in (0, 1)".into()));
            }
        }
        Ok(())
    }

    /// Parameters whose estimates are scored, with their true values.
    pub fn scored_params(&self) -> Vec<(Param, f64)> {
        match &self.generator {
            Generator::Ziegpd(theta) => Param::for_model(self.fit_model)
                .iter()
                .filter_map(|p| theta.get(*p).map(|v| (*p, v)))
                .collect(),
            Generator::Zigev { pi, xi, .. } => vec![(Param::Pi, *pi), (Param::Xi, *xi)],
        }
    }

    fn generate(&self, seed: u64) -> Result<(Sample, usize)> {
        match &self.generator {
            Generator::Ziegpd(theta) => Ok((theta.sample(self.n, seed)?, 0)),
            Generator::Zigev { pi, mu, sigma, xi } => {
                let z = sample_zigev(self.n, *pi, *mu, *sigma, *xi, seed)?;
                Ok((z.sample, z.replaced))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmseRow {
    pub study: String,
    pub method: Method,
    pub param: Param,
    pub true_value: f64,
    pub rmse: f64,
    pub mean_estimate: f64,
    pub replication_count: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RmseTable {
    pub rows: Vec<RmseRow>,
}

impl RmseTable {
    pub fn get(&self, study: &str, method: Method, param: Param) -> Option<&RmseRow> {
        self.rows
            .iter()
            .find(|r| r.study == study && r.method == method && r.param == param)
    }
}

/// One fitted parameter of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub study: String,
    pub replicate: usize,
    pub method: Method,
    pub param: Param,
    pub estimate: f64,
    pub true_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub study: String,
    pub param: Param,
    pub true_value: f64,
    pub covered: usize,
    pub datasets: usize,
}

impl CoverageRow {
    pub fn rate(&self) -> f64 {
        self.covered as f64 / self.datasets as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudyOutput {
    pub table: RmseTable,
    pub estimates: Vec<EstimateRow>,
    pub coverage: Vec<CoverageRow>,
    /// Failed fits per method.
    pub failures: Vec<(Method, usize)>,
    /// Negative ZIGEV draws replaced across all replicates.
    pub replaced_negatives: usize,
    /// Zero fraction of each generated replicate, in replicate order.
    pub zero_fractions: Vec<f64>,
}

struct ReplicateOutcome {
    fits: Vec<(Method, Option<ZiegpdParams>)>,
    covered: Option<Vec<bool>>,
    replaced: usize,
    zero_fraction: f64,
}

fn run_replicate(cfg: &SimConfig, r: usize, scored: &[(Param, f64)]) -> Result<ReplicateOutcome> {
    let seed = derive_seed(cfg.seed, r as u64);
    let (data, replaced) = cfg.generate(seed)?;
    let mut opts = FitOptions::mle(cfg.fit_model);
    opts.mcmc = cfg.mcmc;
    opts.seed = derive_seed(seed, 1);

    let mle = match fit_mle(&data, &opts) {
        Ok(f) => Ok(f),
        Err(ModelError::NotConverged { best, .. }) => Err(Some(best.estimates)),
        Err(_) => Err(None),
    };
    let mut fits = Vec::with_capacity(cfg.methods.len());
    for method in &cfg.methods {
        let est = match method {
            Method::Mle => mle.as_ref().ok().map(|f| f.estimates),
            Method::Bayes => {
                // the sampler starts from the MLE, converged or not
                let start = match &mle {
                    Ok(f) => Some(f.estimates),
                    Err(best) => *best,
                };
                start.and_then(|s| {
                    let o = FitOptions {
                        method: Method::Bayes,
                        init: Some(s),
                        ..opts
                    };
                    fit_bayes(&data, &o).ok().map(|f| f.estimates)
                })
            }
        };
        fits.push((*method, est));
    }

    let covered = match (&cfg.bootstrap, &mle) {
        (Some(b), Ok(point)) => {
            let boot_seed = derive_seed(seed, 2);
            let outcomes = (0..b.replicates as u64)
                .map(|i| bootstrap_replicate(&data, &opts, &point.estimates, boot_seed, i))
                .collect();
            summarize_bootstrap(point.clone(), outcomes, b.alpha).ok().map(|s| {
                scored
                    .iter()
                    .map(|(p, truth)| s.fit.interval(*p).is_some_and(|iv| iv.contains(*truth)))
                    .collect()
            })
        }
        _ => None,
    };

    Ok(ReplicateOutcome {
        fits,
        covered,
        replaced,
        zero_fraction: data.zero_fraction(),
    })
}

/// Runs any study; replicates execute in parallel and are reduced in
/// replicate order.
pub fn run_study(cfg: &SimConfig) -> Result<StudyOutput> {
    cfg.validate()?;
    let scored = cfg.scored_params();
    let outcomes: Vec<ReplicateOutcome> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replicate(cfg, r, &scored))
        .collect::<Result<_>>()?;

    let mut out = StudyOutput {
        replaced_negatives: outcomes.iter().map(|o| o.replaced).sum(),
        zero_fractions: outcomes.iter().map(|o| o.zero_fraction).collect(),
        ..Default::default()
    };
    for (k, method) in cfg.methods.iter().enumerate() {
        let ok: Vec<(usize, ZiegpdParams)> = outcomes
            .iter()
            .enumerate()
            .filter_map(|(r, o)| o.fits[k].1.map(|e| (r, e)))
            .collect();
        let failed = cfg.replications - ok.len();
        out.failures.push((*method, failed));
        if failed as f64 > MAX_FAILURE_RATE * cfg.replications as f64 {
            return Err(Error::StudyFailed {
                study: cfg.name.clone(),
                method: method.to_string(),
                failed,
                total: cfg.replications,
            });
        }
        for (param, truth) in &scored {
            let xs: Vec<f64> = ok.iter().filter_map(|(_, e)| e.get(*param)).collect();
            out.table.rows.push(RmseRow {
                study: cfg.name.clone(),
                method: *method,
                param: *param,
                true_value: *truth,
                rmse: stats::rmse(&xs, *truth),
                mean_estimate: stats::mean(&xs),
                replication_count: xs.len(),
            });
        }
        for (r, e) in &ok {
            for (param, truth) in &scored {
                if let Some(v) = e.get(*param) {
                    out.estimates.push(EstimateRow {
                        study: cfg.name.clone(),
                        replicate: *r,
                        method: *method,
                        param: *param,
                        estimate: v,
                        true_value: *truth,
                    });
                }
            }
        }
    }
    if cfg.bootstrap.is_some() {
        let with_ci: Vec<&Vec<bool>> = outcomes.iter().filter_map(|o| o.covered.as_ref()).collect();
        for (j, (param, truth)) in scored.iter().enumerate() {
            out.coverage.push(CoverageRow {
                study: cfg.name.clone(),
                param: *param,
                true_value: *truth,
                covered: with_ci.iter().filter(|c| c[j]).count(),
                datasets: with_ci.len(),
            });
        }
    }
    Ok(out)
}

/// Parameter recovery with the data drawn from a ZIEGPD.
pub fn run_model_based_study(cfg: &SimConfig) -> Result<StudyOutput> {
    if !matches!(cfg.generator, Generator::Ziegpd(_)) {
        return Err(Error::Config("model-based study needs a ZIEGPD generator".into()));
    }
    run_study(cfg)
}

/// Tail robustness with the data drawn from a zero-inflated GEV.
pub fn run_zigev_study(cfg: &SimConfig) -> Result<StudyOutput> {
    if !matches!(cfg.generator, Generator::Zigev { .. }) {
        return Err(Error::Config("ZIGEV study needs a ZIGEV generator".into()));
    }
    run_study(cfg)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Config(format!("{}: {e}", path.display()))
}

/// RMSE table at 6 significant digits.
pub fn write_rmse_csv(path: &Path, rows: &[RmseRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["study", "method", "parameter", "true_value", "rmse", "mean_estimate", "replication_count"])
        .map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.study.clone(),
            r.method.to_string(),
            r.param.to_string(),
            sig6(r.true_value),
            sig6(r.rmse),
            sig6(r.mean_estimate),
            r.replication_count.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Raw estimates at full precision, so the RMSE table can be recomputed
/// exactly.
pub fn write_estimates_csv(path: &Path, rows: &[EstimateRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["study", "replicate", "method", "parameter", "estimate", "true_value"])
        .map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.study.clone(),
            r.replicate.to_string(),
            r.method.to_string(),
            r.param.to_string(),
            r.estimate.to_string(),
            r.true_value.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_coverage_csv(path: &Path, rows: &[CoverageRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["study", "parameter", "true_value", "covered", "datasets", "coverage"])
        .map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.study.clone(),
            r.param.to_string(),
            sig6(r.true_value),
            r.covered.to_string(),
            r.datasets.to_string(),
            sig6(r.rate()),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Human-readable one-line summary per study.
pub fn write_summary(mut out: impl Write, cfg: &SimConfig, result: &StudyOutput) -> std::io::Result<()> {
    write!(out, "{}: {} replications, n = {}", cfg.name, cfg.replications, cfg.n)?;
    for (m, f) in &result.failures {
        write!(out, ", {m} failures {f}")?;
    }
    if matches!(cfg.generator, Generator::Zigev { .. }) {
        write!(out, ", negative draws replaced {}", result.replaced_negatives)?;
    }
    writeln!(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"
        name = "m1-a"
        fit_model = "m1"
        n = 200
        replications = 3
        methods = ["mle"]
        seed = 11

        [generator]
        family = "ziegpd"
        model = "m1"
        pi = 0.2
        kappa = 5.0
        sigma = 1.0
        xi = 0.2
    "#;

    #[test]
    fn parses_single_and_list() {
        let one = parse_config(ONE).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].name, "m1-a");
        let list = r#"
            [[study]]
            fit_model = "m1"
            n = 100
            replications = 2
            methods = ["mle", "bayes"]
            seed = 1
            generator = { family = "zigev", pi = 0.2, mu = 2.0, sigma = 1.0, xi = 0.2 }
            mcmc = { chains = 2, iterations = 2000, burn_in = 500 }

            [[study]]
            fit_model = "m2"
            n = 100
            replications = 2
            methods = ["mle"]
            seed = 2
            generator = { family = "ziegpd", model = "m2", pi = 0.2, delta = 5.0, sigma = 1.0, xi = 0.2 }
        "#;
        let cfgs = parse_config(list).unwrap();
        assert_eq!(cfgs.len(), 2);
        assert_eq!(cfgs[0].name, "study1");
        assert_eq!(cfgs[0].mcmc.chains, 2);
        assert_eq!(cfgs[0].mcmc.target_accept, 0.234);
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(parse_config(&ONE.replace("n = 200", "n = 20")).is_err());
        assert!(parse_config(&ONE.replace("replications = 3", "replications = 0")).is_err());
        assert!(parse_config(&ONE.replace("\"mle\"", "\"ml\"")).is_err());
        assert!(parse_config(&ONE.replace("kappa = 5.0", "delta = 5.0")).is_err());
        let zigev_m2 = r#"
            fit_model = "m2"
            n = 100
            replications = 2
            methods = ["mle"]
            seed = 1
            generator = { family = "zigev", pi = 0.2, mu = 2.0, sigma = 1.0, xi = 0.2 }
        "#;
        assert!(parse_config(zigev_m2).is_err());
    }

    #[test]
    fn single_replicate_rmse_is_abs_error() {
        let mut cfg = parse_config(ONE).unwrap().remove(0);
        cfg.replications = 1;
        let out = run_model_based_study(&cfg).unwrap();
        for row in &out.table.rows {
            assert_eq!(row.replication_count, 1);
            let est = out
                .estimates
                .iter()
                .find(|e| e.param == row.param)
                .unwrap()
                .estimate;
            assert_eq!(row.rmse, (est - row.true_value).abs());
        }
    }

    #[test]
    fn rmse_recomputes_from_estimates() {
        let cfg = parse_config(ONE).unwrap().remove(0);
        let out = run_study(&cfg).unwrap();
        for row in &out.table.rows {
            let xs: Vec<f64> = out
                .estimates
                .iter()
                .filter(|e| e.param == row.param && e.method == row.method)
                .map(|e| e.estimate)
                .collect();
            assert_eq!(stats::rmse(&xs, row.true_value), row.rmse);
        }
    }

    #[test]
    fn generator_kind_is_checked() {
        let cfg = parse_config(ONE).unwrap().remove(0);
        assert!(run_zigev_study(&cfg).is_err());
    }
}
