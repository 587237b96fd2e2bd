use std::fs;
use std::path::Path;
use std::process::Command;

use ziegpd::cli::main_with;
use ziegpd::formats::{self, FitResultDoc};

fn run(args: &[&str]) -> (u8, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["ziegpd"];
    full.extend_from_slice(args);
    let code = main_with(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_params(dir: &Path, json: &str) -> std::path::PathBuf {
    let path = dir.join("params.json");
    fs::write(&path, json).unwrap();
    path
}

const M1: &str = r#"{"model": "M1", "pi": 0.3, "kappa": 2.0, "sigma": 1.5, "xi": 0.2}"#;

#[test]
fn all_zero_sample_fails_with_data_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("zeros.txt");
    fs::write(&input, "0\n0\n0\n0\n").unwrap();
    let out = dir.path().join("fit.json");
    // through the real binary to see the process exit status
    let status = Command::new(env!("CARGO_BIN_EXE_ziegpd"))
        .args(["fit", "--input", p(&input), "--model", "m1", "--out", p(&out)])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    let stderr = String::from_utf8(status.stderr).unwrap();
    let v: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(v["error"], "data");
    assert!(v["message"].as_str().unwrap().contains("no positive observations"));
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_one() {
    let (code, _, err) = run(&["fit", "--model", "m1"]);
    assert_eq!(code, 1);
    assert!(err.contains("\"usage\""));
    let (code, _, _) = run(&["rlevel", "--params", "missing.json", "--out", "x.csv"]);
    assert_eq!(code, 1);
}

#[test]
fn sample_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), M1);
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for out in [&a, &b] {
        let (code, _, err) = run(&["sample", "--params", p(&params), "--n", "5", "--seed", "7", "--out", p(out)]);
        assert_eq!(code, 0, "{err}");
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 5);
    let c = dir.path().join("c.txt");
    run(&["sample", "--params", p(&params), "--n", "5", "--seed", "8", "--out", p(&c)]);
    assert_ne!(text, fs::read_to_string(&c).unwrap());
}

#[test]
fn rlevel_matches_published_station_levels() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(
        dir.path(),
        r#"{"model": "M1", "pi": 0.5999, "kappa": 0.4568, "sigma": 4.9095, "xi": 0.3281}"#,
    );
    let out = dir.path().join("rl.csv");
    let (code, _, err) = run(&["rlevel", "--params", p(&params), "--periods", "5,10,20", "--out", p(&out)]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("period,probability,return_level"));
    let expected = [(5.0, 0.8, 1.2664), (10.0, 0.9, 4.2433), (20.0, 0.95, 8.5123)];
    for (line, (t, prob, level)) in lines.zip(expected) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(f[0], t);
        assert_eq!(f[1], prob);
        assert!((f[2] - level).abs() < 0.02, "T={t}: {} vs {level}", f[2]);
    }
}

#[test]
fn fit_then_rlevel_inverts_the_fitted_cdf() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), M1);
    let sample = dir.path().join("s.txt");
    let fit = dir.path().join("fit.json");
    let rl = dir.path().join("rl.csv");
    assert_eq!(run(&["sample", "--params", p(&params), "--n", "800", "--seed", "3", "--out", p(&sample)]).0, 0);
    let (code, stdout, err) = run(&["fit", "--input", p(&sample), "--model", "m1", "--out", p(&fit)]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("loglik"));
    let (code, _, err) = run(&["rlevel", "--params", p(&fit), "--periods", "2,5,10,50", "--out", p(&rl)]);
    assert_eq!(code, 0, "{err}");

    let theta = formats::read_params(&fit).unwrap();
    let data = formats::read_sample(&sample).unwrap();
    assert_eq!(theta.pi(), data.zero_fraction());
    for line in fs::read_to_string(&rl).unwrap().lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        // the CSV rounds to 6 significant digits; recompute at full precision
        let level = theta.return_level(f[0]).unwrap();
        assert!((level - f[2]).abs() <= 1e-5 * level);
        assert!((theta.cdf(level).unwrap() - (1.0 - 1.0 / f[0])).abs() < 1e-6);
    }
}

#[test]
fn fit_document_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), M1);
    let sample = dir.path().join("s.txt");
    let fit = dir.path().join("fit.json");
    run(&["sample", "--params", p(&params), "--n", "500", "--seed", "4", "--out", p(&sample)]);
    let (code, _, err) = run(&[
        "fit", "--input", p(&sample), "--model", "m1", "--bootstrap", "100", "--seed", "5", "--out", p(&fit),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(&fit).unwrap();
    let doc: FitResultDoc = serde_json::from_str(&text).unwrap();
    assert_eq!(doc.method, "mle");
    assert_eq!(doc.n, 500);
    assert_eq!(doc.diagnostics.bootstrap_replicates, Some(100));
    let names: Vec<&str> = doc.intervals.iter().map(|i| i.param.as_str()).collect();
    assert_eq!(names, ["pi", "kappa", "sigma", "xi"]);
    for iv in &doc.intervals {
        assert!(iv.lower <= iv.upper);
    }
    let again = serde_json::to_string_pretty(&doc).unwrap() + "\n";
    assert_eq!(again, text);

    let theta = formats::parse_params(&text).unwrap();
    let json = formats::params_to_json(&theta);
    assert_eq!(formats::parse_params(&json).unwrap(), theta);
}

#[test]
fn bootstrap_rejects_bayes_and_small_b() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), M1);
    let sample = dir.path().join("s.txt");
    run(&["sample", "--params", p(&params), "--n", "200", "--seed", "4", "--out", p(&sample)]);
    let out = dir.path().join("fit.json");
    let (code, _, _) = run(&["fit", "--input", p(&sample), "--model", "m1", "--method", "bayes", "--bootstrap", "100", "--out", p(&out)]);
    assert_eq!(code, 1);
    let (code, _, _) = run(&["fit", "--input", p(&sample), "--model", "m1", "--bootstrap", "10", "--out", p(&out)]);
    assert_eq!(code, 1);
}

#[test]
fn bayes_fit_reports_sampler_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), M1);
    let sample = dir.path().join("s.txt");
    let fit = dir.path().join("fit.json");
    run(&["sample", "--params", p(&params), "--n", "400", "--seed", "6", "--out", p(&sample)]);
    let (code, _, err) = run(&[
        "fit", "--input", p(&sample), "--model", "m1", "--method", "bayes", "--chains", "2", "--iterations", "3000",
        "--burn-in", "1000", "--seed", "1", "--out", p(&fit),
    ]);
    assert_eq!(code, 0, "{err}");
    let doc: FitResultDoc = serde_json::from_str(&fs::read_to_string(&fit).unwrap()).unwrap();
    assert_eq!(doc.method, "bayes");
    let acc = doc.diagnostics.acceptance_rate.unwrap();
    assert!(acc > 0.05 && acc < 0.9);
    assert_eq!(doc.diagnostics.ess.unwrap().len(), 4);
}

#[test]
fn diagnose_writes_qq_and_cdf_tables() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path(), M1);
    let sample = dir.path().join("s.txt");
    run(&["sample", "--params", p(&params), "--n", "300", "--seed", "9", "--out", p(&sample)]);
    let out = dir.path().join("diag");
    let (code, stdout, err) = run(&[
        "diagnose", "--input", p(&sample), "--params", p(&params), "--grid", "50", "--out", p(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.starts_with("KS distance"));

    let data = formats::read_sample(&sample).unwrap();
    let qq = fs::read_to_string(out.join("qq.csv")).unwrap();
    assert_eq!(qq.lines().next(), Some("rank,plotting_position,empirical_quantile,model_quantile"));
    assert_eq!(qq.lines().count() - 1, data.positive_count());
    let mut last = f64::NEG_INFINITY;
    for line in qq.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[2] >= last);
        last = f[2];
    }

    let cdf = fs::read_to_string(out.join("cdf.csv")).unwrap();
    assert_eq!(cdf.lines().next(), Some("z,empirical_cdf,model_cdf"));
    assert_eq!(cdf.lines().count() - 1, 50);
    let first: Vec<f64> = cdf.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    // at z = 0 both curves sit on the atom
    assert!((first[1] - data.zero_fraction()).abs() < 1e-5);
    assert!((first[2] - 0.3).abs() < 1e-5);
}

#[test]
fn preprocess_thins_filters_and_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("station.csv");
    // 2020-10-01 .. 2021-03-31, precipitation = day index mod 5 tenths of a mm
    let mut csv = String::from("date,precip\n");
    let start = chrono::NaiveDate::from_ymd_opt(2020, 10, 1).unwrap();
    // thinning counts the records left after dropping missing days
    let mut expected = Vec::new();
    let mut kept = 0;
    for i in 0..182u32 {
        let date = start + chrono::Days::new(i as u64);
        let precip = if i == 40 { -999.0 } else { (i % 5) as f64 / 10.0 };
        csv.push_str(&format!("{date},{precip}\n"));
        if precip == -999.0 {
            continue;
        }
        use chrono::Datelike;
        if kept % 3 == 0 && matches!(date.month(), 11 | 12 | 1 | 2) {
            expected.push(if precip < 0.1 { 0.0 } else { precip });
        }
        kept += 1;
    }
    fs::write(&input, csv).unwrap();
    let out = dir.path().join("sample.txt");
    let (code, stdout, err) = run(&["preprocess", "--input", p(&input), "--out", p(&out)]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("182 rows, 1 missing dropped"), "{stdout}");
    let got: Vec<f64> = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn malformed_sample_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.txt");
    fs::write(&input, "0\n1.5\n# comment\nabc\n").unwrap();
    let out = dir.path().join("fit.json");
    let (code, _, err) = run(&["fit", "--input", p(&input), "--model", "m1", "--out", p(&out)]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"], "parse");
    assert!(v["message"].as_str().unwrap().contains('4'));
}
