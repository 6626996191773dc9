#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::NaiveDate;
use gknn::tank::{aggregate_monthly, simulate_tank, synthetic_daily_climate, DailyClimateRecord, TankConfig};
use gknn::upscaling::{Schema, TrainingTable};
use gknn_cli::formats::{write_daily_climate, write_queries, write_training};

pub fn gknn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gknn")).args(args).output().expect("binary runs")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn tank_config() -> TankConfig {
    TankConfig {
        capacity: 5000.0,
        roof_area: 150.0,
        runoff_coeff: 0.85,
        base_demand: 250.0,
        demand_temp_coeff: 0.03,
        initial_storage: 1000.0,
    }
}

pub const TANK_TOML: &str = "capacity = 5000.0\nroof_area = 150.0\nrunoff_coeff = 0.85\nbase_demand = 250.0\ndemand_temp_coeff = 0.03\ninitial_storage = 1000.0\n";

pub fn days_between(start: NaiveDate, end: NaiveDate) -> usize {
    (end - start).num_days() as usize
}

/// Climate for whole calendar years starting on 1 January.
pub fn climate_years(first_year: i32, years: i32, seed: u64) -> Vec<DailyClimateRecord> {
    let start = NaiveDate::from_ymd_opt(first_year, 1, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(first_year + years, 1, 1).unwrap();
    synthetic_daily_climate(start, days_between(start, end), seed)
}

/// Monthly table from a tank run over `years` of synthetic climate.
pub fn monthly_table(first_year: i32, years: i32, seed: u64, schema: Schema) -> TrainingTable {
    let climate = climate_years(first_year, years, seed);
    let daily: Vec<f64> = simulate_tank(&climate, &tank_config()).unwrap().iter().map(|b| b.yield_value).collect();
    aggregate_monthly(&climate, &daily, schema).unwrap()
}

pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, bytes).unwrap();
        p
    }

    pub fn read(&self, name: &str) -> Vec<u8> {
        std::fs::read(self.path(name)).unwrap()
    }

    pub fn text(&self, name: &str) -> String {
        String::from_utf8(self.read(name)).unwrap()
    }

    /// Training and query files for a schema; queries come from a different
    /// climate seed and their actual monthly yields are written too.
    pub fn problem(&self, schema: Schema, train_years: i32, query_years: i32) -> (PathBuf, PathBuf, PathBuf) {
        let training = monthly_table(1950, train_years, 11, schema);
        let query_rows = monthly_table(2000, query_years, 12, schema);
        let mut actual = String::from("yield_l\n");
        for y in query_rows.yields() {
            actual.push_str(&gknn_cli::formats::fmt_float(y));
            actual.push('\n');
        }
        (
            self.write("training.csv", &write_training(&training)),
            self.write("series.csv", &write_queries(&query_rows.queries())),
            self.write("actual.csv", actual.as_bytes()),
        )
    }

    pub fn climate_file(&self, name: &str, records: &[DailyClimateRecord]) -> PathBuf {
        self.write(name, &write_daily_climate(records))
    }
}
