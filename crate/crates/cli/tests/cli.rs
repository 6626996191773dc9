//! End-to-end runs of the `gknn` binary.

mod common;

use common::{gknn, path_str, Workspace, TANK_TOML};
use gknn::upscaling::Schema;
use gknn_cli::formats::KeyValue;

#[test]
fn tank_sim_three_day_fixture() {
    let ws = Workspace::new();
    let climate = ws.write("climate.csv", b"date,rain_mm,temp_c\n2000-01-01,10,20\n2000-01-02,0,20\n2000-01-03,0,20\n");
    let config = ws.write(
        "tank.toml",
        b"capacity = 1000.0\nroof_area = 100.0\nrunoff_coeff = 0.9\nbase_demand = 150.0\n",
    );
    let out = ws.path("monthly.csv");
    let o = gknn(&["tank-sim", "--climate", path_str(&climate), "--config", path_str(&config), "--out", path_str(&out), "--schema", "knn"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        ws.text("monthly.csv.daily.csv"),
        "date,rain_mm,temp_c,inflow_l,demand_l,yield_l,storage_l,spill_l\n\
         2000-01-01,10,20,900,150,150,750,0\n\
         2000-01-02,0,20,0,150,150,600,0\n\
         2000-01-03,0,20,0,150,150,450,0\n"
    );
    assert_eq!(ws.text("monthly.csv"), "month_label,rain_depth_mm,yield_l\n1,10,450\n");
    let manifest = KeyValue::parse(&ws.text("monthly.csv.manifest")).unwrap();
    assert_eq!(manifest.get("command"), Some("tank-sim"));
    assert_eq!(manifest.get("param.schema"), Some("knn"));
    assert!(manifest.get("input.climate.sha256").unwrap().len() == 64);
}

#[test]
fn tank_sim_rejects_bad_input() {
    let ws = Workspace::new();
    let config = ws.write("tank.toml", TANK_TOML.as_bytes());
    let out = ws.path("m.csv");
    let empty = ws.write("empty.csv", b"date,rain_mm,temp_c\n");
    let o = gknn(&["tank-sim", "--climate", path_str(&empty), "--config", path_str(&config), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());

    let gap = ws.write("gap.csv", b"date,rain_mm,temp_c\n2000-01-01,1,20\n2000-01-03,0,20\n");
    let o = gknn(&["tank-sim", "--climate", path_str(&gap), "--config", path_str(&config), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("contiguous"));

    let bad = ws.write("bad.csv", b"date,rain_mm,temp_c\n2000-01-01,1,20\n2000-01-02,x,20\n");
    let o = gknn(&["tank-sim", "--climate", path_str(&bad), "--config", path_str(&config), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let o = gknn(&["tank-sim", "--climate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn upscale_nn_runs_are_identical() {
    let ws = Workspace::new();
    let (training, series, _) = ws.problem(Schema::Coombes, 3, 2);
    let out = ws.path("nn.csv");
    let o = gknn(&["upscale", "--method", "nn", "--training", path_str(&training), "--series", path_str(&series), "--runs", "2", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = ws.text("nn.csv");
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("run,t,month_label,yield_l"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 48);
    for (a, b) in rows[..24].iter().zip(&rows[24..]) {
        assert_eq!((a[0], b[0]), ("1", "2"));
        assert_eq!(a[1..], b[1..]);
    }
}

#[test]
fn upscale_knn_is_reproducible() {
    let ws = Workspace::new();
    let (training, series, _) = ws.problem(Schema::Knn, 3, 2);
    let run = |name: &str| {
        let out = ws.path(name);
        let o = gknn(&["upscale", "--method", "knn", "--k", "3", "--seed", "7", "--runs", "5", "--training", path_str(&training), "--series", path_str(&series), "--out", path_str(&out)]);
        assert!(o.status.success());
        ws.read(name)
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn bootstrap_methods_share_the_selection_set_at_fifty_records() {
    let ws = Workspace::new();
    let mut training = String::from("rain_depth_mm,yield_l\n");
    for i in 0..50 {
        training.push_str(&format!("{},{}\n", (i * 37) % 50, 1000 + i));
    }
    let training = ws.write("training.csv", training.as_bytes());
    let series = ws.write("series.csv", b"rain_depth_mm\n0\n25\n49\n100\n");
    let yields_of = |method: &str| {
        let out = ws.path(&format!("{method}.csv"));
        let o = gknn(&["upscale", "--method", method, "--seed", "3", "--runs", "400", "--training", path_str(&training), "--series", path_str(&series), "--out", path_str(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let mut ys: Vec<u32> = ws
            .text(&format!("{method}.csv"))
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        ys.sort_unstable();
        ys.dedup();
        ys
    };
    let all: Vec<u32> = (1000..1050).collect();
    assert_eq!(yields_of("bootstrap"), all);
    assert_eq!(yields_of("modified-bootstrap"), all);
}

#[test]
fn upscale_schema_mismatch() {
    let ws = Workspace::new();
    let (training, _, _) = ws.problem(Schema::Coombes, 3, 1);
    let series = ws.write("knn_series.csv", b"month_label,rain_depth_mm\n1,10\n");
    let out = ws.path("o.csv");
    let o = gknn(&["upscale", "--method", "nn", "--training", path_str(&training), "--series", path_str(&series), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema mismatch"));
}

#[test]
fn moments_summary_and_errors() {
    let ws = Workspace::new();
    let (training, series, actual) = ws.problem(Schema::Knn, 3, 2);
    let out = ws.path("moments.csv");
    let o = gknn(&["moments", "--training", path_str(&training), "--series", path_str(&series), "--dist", "harmonic:3", "--actual", path_str(&actual), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = KeyValue::parse(&ws.text("moments.csv.summary")).unwrap();
    assert_eq!(summary.get("years"), Some("2"));
    assert_eq!(summary.get("bound_ok"), Some("true"));
    let var: f64 = summary.get("var_annual_yield").unwrap().parse().unwrap();
    let total: f64 = summary.get("var_total_yield").unwrap().parse().unwrap();
    assert!((total - 4.0 * var).abs() <= 1e-9 * total);
    let table = ws.text("moments.csv");
    assert_eq!(table.lines().count(), 25);
    for line in table.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        // E_t = Var + bias^2 (to the 12 printed digits)
        assert!((f[4] - f[2] - f[3]).abs() <= 1e-10 * f[4].max(1.0));
    }

    // deterministic distribution: zero variances
    let o = gknn(&["moments", "--training", path_str(&training), "--series", path_str(&series), "--dist", "topk:1", "--out", path_str(&out)]);
    assert!(o.status.success());
    assert!(ws.text("moments.csv").lines().skip(1).all(|l| l.split(',').nth(2) == Some("0")));
    assert_eq!(KeyValue::parse(&ws.text("moments.csv.summary")).unwrap().get("var_annual_yield"), Some("0"));

    let short = ws.write("short.csv", b"yield_l\n1\n2\n");
    let o = gknn(&["moments", "--training", path_str(&training), "--series", path_str(&series), "--dist", "harmonic:3", "--actual", path_str(&short), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let o = gknn(&["moments", "--training", path_str(&training), "--series", path_str(&series), "--dist", "harmonic:x", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_exit_codes() {
    let ws = Workspace::new();
    let (training, series, actual) = ws.problem(Schema::Knn, 3, 1);
    let out = ws.path("verify.csv");
    let args = |threshold: &str| {
        gknn(&[
            "verify", "--training", path_str(&training), "--series", path_str(&series), "--dist", "harmonic:3",
            "--seed", "5", "--runs", "20000", "--actual", path_str(&actual), "--threshold", threshold, "--out", path_str(&out),
        ])
    };
    let o = args("4");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = ws.text("verify.csv");
    assert!(text.starts_with("quantity,t,analytic,empirical,se,z,flagged\n"));
    assert!(text.lines().skip(1).all(|l| l.ends_with("false")));
    assert!(text.contains("annual_variance,,"));
    assert!(text.contains("total_error,,"));
    let o = args("0");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn kernel_exp_table() {
    let ws = Workspace::new();
    let out = ws.path("kernel.csv");
    let o = gknn(&["kernel-exp", "--n-values", "100,400", "--seeds", "1,2,3", "--out", path_str(&out)]);
    assert!(o.status.success());
    let text = ws.text("kernel.csv");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,k_N,seed,sup_error,mean_error");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("100,10,1,"));
    assert!(lines[2].starts_with("400,20,1,"));
    let o = gknn(&["kernel-exp", "--n-values", "400,100", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn nu_classes_and_limits() {
    let ws = Workspace::new();
    let (training, series, _) = ws.problem(Schema::Knn, 3, 2);
    let out = ws.path("nu.csv");
    let o = gknn(&["nu", "--training", path_str(&training), "--series", path_str(&series), "--dist", "harmonic:3", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = ws.text("nu.csv");
    let mut total = 0.0;
    let mut count = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0].split(';').count(), 3);
        count += f[1].parse::<usize>().unwrap();
        total += f[2].parse::<f64>().unwrap();
    }
    assert_eq!(count, 24);
    assert!((total - 1.0).abs() < 1e-9);

    let moments = ws.path("m.csv");
    assert!(gknn(&["moments", "--training", path_str(&training), "--series", path_str(&series), "--dist", "harmonic:3", "--out", path_str(&moments)]).status.success());
    let nu = KeyValue::parse(&ws.text("nu.csv.summary")).unwrap();
    let m = KeyValue::parse(&ws.text("m.csv.summary")).unwrap();
    let limit: f64 = nu.get("limit_annual_yield").unwrap().parse().unwrap();
    let mean: f64 = m.get("expected_annual_yield").unwrap().parse().unwrap();
    assert!((limit - mean).abs() <= 1e-10 * mean);
}
