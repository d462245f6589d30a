use knnfunc::harness::{
    aggregate, emit_results, fit_rate_exponent, parse_rows_csv, run_mse_sweep, ExperimentConfig, MseRow, OutputFormat,
    Report, SeedMode,
};
use knnfunc::{estimate_single, Density, Family, FunctionalSpec, Window};

fn small_config(spec: &str, family: Family, d: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(spec.parse::<FunctionalSpec>().unwrap(), vec![family], d, 3, None);
    c.sample_sizes = vec![100, 200, 400];
    c.runs = 6;
    c.seed = 17;
    c
}

#[test]
fn fixed_seed_has_zero_variance() {
    let mut c = small_config("entropy", Family::UniformBox { side: 1.0 }, 2);
    c.runs = 2;
    c.seed_mode = SeedMode::Fixed;
    let sweep = run_mse_sweep(&c).unwrap();
    for row in &sweep.rows {
        assert_eq!(row.var, 0.0);
        assert_eq!(row.stderr, 0.0);
        assert_eq!(row.mse, row.bias2);
    }
}

#[test]
fn zero_truth_mse_is_mean_square() {
    // Unit-box entropy is 0, so the MSE is the mean of the squared estimates.
    let c = small_config("entropy", Family::UniformBox { side: 1.0 }, 2);
    let sweep = run_mse_sweep(&c).unwrap();
    assert_eq!(sweep.truth.value, 0.0);
    let p = Density::new(Family::UniformBox { side: 1.0 }, 2).unwrap();
    let h: FunctionalSpec = "entropy".parse().unwrap();
    for row in &sweep.rows {
        let est: Vec<f64> = (0..c.runs)
            .map(|run| {
                let x = p.sample_stream(row.m, c.seed ^ run as u64, 0).unwrap();
                estimate_single(&x, &h, c.k, Window::UNBOUNDED).unwrap().value
            })
            .collect();
        let ms = est.iter().map(|e| e * e).sum::<f64>() / est.len() as f64;
        approx::assert_relative_eq!(row.mse, ms, max_relative = 1e-12);
    }
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let c = small_config("renyi-entropy:2", Family::TruncatedGaussian { radius: 3.0, scale: 1.0 }, 2);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| run_mse_sweep(&c).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
}

#[test]
fn seed_changes_values_not_shape() {
    let c = small_config("entropy", Family::TruncatedExponential { radius: 4.0 }, 2);
    let mut c2 = c.clone();
    c2.seed = 18;
    let (a, b) = (run_mse_sweep(&c).unwrap(), run_mse_sweep(&c2).unwrap());
    assert_eq!(a.truth, b.truth);
    assert_eq!(a.rows.len(), b.rows.len());
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        assert_eq!(ra.m, rb.m);
        assert_ne!(ra.mse, rb.mse);
    }
}

#[test]
fn csv_round_trip_is_exact() {
    let rows: Vec<MseRow> = (0..5)
        .map(|i| {
            let e: Vec<f64> = (0..9).map(|j| ((i * 9 + j) as f64).sin() / 3.0).collect();
            aggregate(100 * (i + 1), &e, 0.1)
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    emit_results(&Report::new(rows.clone()), OutputFormat::Csv, &path).unwrap();
    let back = parse_rows_csv(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!(a.m, b.m);
        for (x, y) in [(a.mse, b.mse), (a.bias2, b.bias2), (a.var, b.var), (a.stderr, b.stderr)] {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    let empty = dir.path().join("empty.csv");
    emit_results(&Report::new(Vec::new()), OutputFormat::Csv, &empty).unwrap();
    assert_eq!(std::fs::read_to_string(&empty).unwrap(), "m,mse,bias2,var,stderr\n");
}

#[test]
fn json_report_carries_version() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    emit_results(&Report::new(Vec::new()), OutputFormat::Json, &path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["rows"].as_array().unwrap().len(), 0);
}

fn row(m: usize, mse: f64) -> MseRow {
    MseRow {
        m,
        mse,
        bias2: 0.0,
        var: mse,
        stderr: 0.0,
    }
}

#[test]
fn exact_power_law_is_recovered() {
    let rows: Vec<MseRow> = [100usize, 200, 400, 800, 1600].iter().map(|&m| row(m, 3.0 * (m as f64).powf(-0.7))).collect();
    let fit = fit_rate_exponent(&rows).unwrap();
    assert!((fit.slope - 0.7).abs() < 1e-12);
    assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
    assert!((fit.r_squared - 1.0).abs() < 1e-12);
}

#[test]
fn noisy_power_law_slope() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<MseRow> = knnfunc::harness::DEFAULT_SAMPLE_SIZES
        .iter()
        .map(|&m| row(m, 4.0 * (m as f64).powf(-0.5) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0))))
        .collect();
    let fit = fit_rate_exponent(&rows).unwrap();
    assert!((fit.slope - 0.5).abs() < 0.05, "{fit:?}");
    assert!(fit.r_squared > 0.99);
}

#[test]
fn fit_rejects_degenerate_tables() {
    assert!(fit_rate_exponent(&[row(100, 1.0), row(200, 0.5)]).is_err());
    assert!(fit_rate_exponent(&[row(100, 1.0), row(200, 0.0), row(400, 0.2)]).is_err());
    assert!(fit_rate_exponent(&[row(100, 1.0), row(100, 0.5), row(100, 0.2)]).is_err());
}
